#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "mixhp/dataset.hpp"
#include "mixhp/model.hpp"
#include "mixhp/penalty.hpp"
#include "mixhp/rng.hpp"

namespace mixhp {

// Posterior component probabilities, one row per observation.
struct Responsibilities {
  Eigen::MatrixXd values;  // n x m, entries in [0,1], rows sum to one

  Eigen::VectorXd column_mass() const { return values.colwise().sum(); }
};

enum class CollapsePolicy { restart, abort };

struct FitConfig {
  int max_em_iter = 500;
  double em_rel_tol = 1e-6;    // relative l2 change of (B, pi, rho)
  double bcda_rel_tol = 1e-6;
  int bcda_max_iter = 1000;
  double mu = 1.0;             // constraint-violation weight of the inner solver
  bool equal_variance = false;
  int n_restarts = 10;
  std::uint64_t seed = 0;
  double min_component_mass = -1.0;  // < 0: defaults to 1e-3 * n
  CollapsePolicy collapse_policy = CollapsePolicy::restart;
  bool single_cycle_mstep = false;  // one coordinate cycle per M-step instead of a full solve
  bool warm_start_dual = false;     // experimental: carry the solver dual across iterations
  int screen_em_iter = 25;  // length of the short screening run each restart gets

  double resolved_mass(Eigen::Index n) const {
    return min_component_mass < 0.0 ? 1e-3 * static_cast<double>(n)
                                    : min_component_mass;
  }
};

// Which coefficients the l1 penalty addresses.
enum class PenaltyForm {
  effects,    // common effect + sum-to-zero deviations (heterogeneity pursuit)
  component,  // each component's scaled coefficients separately (baseline)
};

struct FitResult {
  EffectsModel model;
  Responsibilities responsibilities;
  std::vector<double> objective_trace;  // penalized log-likelihood per iteration
  bool converged = false;
  int n_iter = 0;
  double loglik = 0.0;  // unpenalized log-likelihood at the fitted parameters
  std::vector<int> selected_relevant;       // ascending predictor indices
  std::vector<int> selected_heterogeneous;  // subset of selected_relevant
  std::vector<int> hard_assignments;        // argmax responsibilities, ties to lowest
  bool full_mstep_solve = true;
  bool equal_variance = false;
  PenaltyForm form = PenaltyForm::effects;
  int nnz_coefs = 0;  // nonzero count in the penalized parameterization
  // Exact fitted scaled coefficients, kept only for component-form fits
  // (the effects conversion does not preserve their zero pattern).
  std::optional<ScaledModel> component_model;
};

// Posteriors computed in log space and normalized row-wise; never NaN even
// when every component underflows.
Responsibilities e_step(const EffectsModel& model, const Dataset& data);

// Column means of the responsibilities.
Eigen::VectorXd m_step_pi(const Responsibilities& resp);

// Closed-form inverse-scale update with the coefficient block held fixed.
// equal_variance pools all components into one shared value.
Eigen::VectorXd m_step_rho(const EffectsModel& model, const Responsibilities& resp,
                           const Dataset& data, bool equal_variance);

// Random hard component assignments followed by one M-step. With m = 1
// this is the null model plus a penalized least-squares warm start,
// independent of the generator.
EffectsModel initialize(const Dataset& data, int m, const PenaltySpec& spec,
                        const FitConfig& config, SplitMix64& rng);

std::vector<int> hard_assign(const Responsibilities& resp);

// Generalized EM: E-step, closed-form mixing/scale updates, coordinate
// descent on the coefficient block, monotone in the penalized objective.
// The component count is taken from the penalty dimensions. Without an
// initializer, config.n_restarts independent starts are run and the best
// final objective wins.
FitResult gem_fit(const Dataset& data, const PenaltySpec& spec,
                  const FitConfig& config,
                  const std::optional<EffectsModel>& init = std::nullopt);

// Baseline without heterogeneity pursuit: the same EM but with the penalty
// applied to each component's scaled coefficients separately. Selection
// calls a predictor heterogeneous unless its fitted coefficients are
// exactly equal across components.
struct ComponentPenalty {
  double lambda = 0.0;
  double gamma = 0.0;
  Eigen::MatrixXd weights;   // m x p
  BoolGrid excluded;         // m x p
  std::vector<bool> exempt;  // p

  static ComponentPenalty lasso(Eigen::Index m, Eigen::Index p, double lambda,
                                std::vector<bool> exempt = {});
  void validate(Eigen::Index m, Eigen::Index p) const;
};

double component_penalty_value(const ScaledModel& model, const ComponentPenalty& spec);
double component_penalized_objective(const ScaledModel& model, const Dataset& data,
                                     const ComponentPenalty& spec);

FitResult gem_fit_component(const Dataset& data, const ComponentPenalty& spec,
                            const FitConfig& config,
                            const std::optional<ScaledModel>& init = std::nullopt);

}  // namespace mixhp
