#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mixhp/dataset.hpp"
#include "mixhp/model.hpp"

namespace mixhp {

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Weighted l1 penalty on the effects coefficients. Row 0 of `weights`
// addresses the common effects, rows 1..m the cluster deviations.
// Coefficients whose initial estimate was exactly zero are represented as
// hard exclusions rather than infinite weights, so lambda * w * |beta|
// never produces NaN at beta = 0.
struct PenaltySpec {
  double lambda = 0.0;
  double gamma = 0.0;
  Eigen::MatrixXd weights;   // (m+1) x p, nonnegative, finite
  BoolGrid excluded;         // (m+1) x p, true = coefficient pinned at zero
  std::vector<bool> exempt;  // length p, true = column unpenalized

  // All-ones weights (plain lasso), exempt columns zeroed.
  static PenaltySpec lasso(Eigen::Index m, Eigen::Index p, double lambda,
                           std::vector<bool> exempt = {});

  void validate(Eigen::Index m, Eigen::Index p) const;
};

// Sum of w_jk |beta_jk| over non-exempt predictors. Throws std::logic_error
// if a hard-excluded coefficient is nonzero.
double penalty_value(const EffectsModel& model, const PenaltySpec& spec);

// log-likelihood - n * lambda * penalty (maximization orientation); the
// monotonicity monitor of the EM driver.
double penalized_objective(const EffectsModel& model, const Dataset& data,
                           const PenaltySpec& spec);

}  // namespace mixhp
