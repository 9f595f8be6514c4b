#pragma once

#include <Eigen/Dense>

#include "mixhp/dataset.hpp"

namespace mixhp {

// Tolerance for declaring the sum-to-zero constraint satisfied on output.
inline constexpr double kSumToZeroTol = 1e-8;

// Mixture regression in effects form: each predictor's scaled effect is a
// common term plus per-component deviations constrained to sum to zero
// across components. This is the canonical storage; the scaled and raw
// forms below are derived views.
struct EffectsModel {
  Eigen::VectorXd common_effects;   // length p
  Eigen::MatrixXd cluster_effects;  // m x p, row j = deviations of component j
  Eigen::VectorXd mixing_probs;     // length m, positive, sums to one
  Eigen::VectorXd inverse_scales;   // length m, positive

  Eigen::Index n_components() const { return mixing_probs.size(); }
  Eigen::Index n_predictors() const { return common_effects.size(); }

  void validate(double constraint_tol = kSumToZeroTol) const;
};

// Scaled form: column j holds the coefficients of component j divided by
// that component's standard deviation.
struct ScaledModel {
  Eigen::MatrixXd scaled_coefs;   // p x m
  Eigen::VectorXd mixing_probs;   // length m
  Eigen::VectorXd inverse_scales; // length m

  Eigen::Index n_components() const { return mixing_probs.size(); }
  Eigen::Index n_predictors() const { return scaled_coefs.rows(); }

  void validate() const;
};

// Raw form: per-component coefficients in response units and variances.
struct RawModel {
  Eigen::MatrixXd raw_coefs;    // p x m
  Eigen::VectorXd variances;    // length m, positive
  Eigen::VectorXd mixing_probs; // length m

  Eigen::Index n_components() const { return mixing_probs.size(); }
  Eigen::Index n_predictors() const { return raw_coefs.rows(); }

  void validate() const;
};

// The (m+1) x m map from a predictor's m scaled coefficients to its common
// effect (their mean) and m sum-to-zero deviations. Its largest singular
// value is exactly 1.
struct ConstraintMatrix {
  int m = 0;
  Eigen::MatrixXd entries;  // (m+1) x m
};

// Throws std::invalid_argument for m < 2.
ConstraintMatrix make_constraint_matrix(int m);

ScaledModel effects_to_scaled(const EffectsModel& model);

// Mean/deviation split per predictor; the result satisfies the sum-to-zero
// constraint by construction.
EffectsModel scaled_to_effects(const ScaledModel& model);

// Throws std::logic_error when any inverse scale is not positive.
RawModel to_raw(const EffectsModel& model);
RawModel to_raw(const ScaledModel& model);

// Per-observation, per-component log densities (n x m), including the
// mixing probabilities. Shared by the likelihood and the E-step.
Eigen::MatrixXd component_log_densities(const ScaledModel& model,
                                        const Dataset& data);

// Log-likelihood via row-wise log-sum-exp of the component log densities.
double log_likelihood(const EffectsModel& model, const Dataset& data);
double log_likelihood(const ScaledModel& model, const Dataset& data);

}  // namespace mixhp
