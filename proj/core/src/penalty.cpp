#include "mixhp/penalty.hpp"

#include <cmath>
#include <stdexcept>

namespace mixhp {

PenaltySpec PenaltySpec::lasso(Eigen::Index m, Eigen::Index p, double lambda,
                               std::vector<bool> exempt) {
  PenaltySpec spec;
  spec.lambda = lambda;
  spec.gamma = 0.0;
  spec.weights = Eigen::MatrixXd::Ones(m + 1, p);
  spec.excluded = BoolGrid::Constant(m + 1, p, false);
  if (exempt.empty()) exempt.assign(static_cast<std::size_t>(p), false);
  spec.exempt = std::move(exempt);
  for (Eigen::Index k = 0; k < p; ++k)
    if (spec.exempt[static_cast<std::size_t>(k)]) spec.weights.col(k).setZero();
  return spec;
}

void PenaltySpec::validate(Eigen::Index m, Eigen::Index p) const {
  if (lambda < 0.0 || gamma < 0.0)
    throw std::invalid_argument("penalty: lambda and gamma must be nonnegative");
  if (weights.rows() != m + 1 || weights.cols() != p ||
      excluded.rows() != m + 1 || excluded.cols() != p)
    throw std::invalid_argument("penalty: weight grid does not match (m+1) x p");
  if (exempt.size() != static_cast<std::size_t>(p))
    throw std::invalid_argument("penalty: exempt flags do not match p");
  if (!weights.allFinite() || (weights.array() < 0.0).any())
    throw std::invalid_argument("penalty: weights must be finite and nonnegative");
  for (Eigen::Index k = 0; k < p; ++k) {
    if (exempt[static_cast<std::size_t>(k)] &&
        (weights.col(k).array() != 0.0).any())
      throw std::invalid_argument("penalty: exempt predictor carries nonzero weight");
  }
}

double penalty_value(const EffectsModel& model, const PenaltySpec& spec) {
  const Eigen::Index m = model.n_components();
  const Eigen::Index p = model.n_predictors();
  spec.validate(m, p);
  double total = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (spec.exempt[static_cast<std::size_t>(k)]) continue;
    for (Eigen::Index j = 0; j <= m; ++j) {
      const double beta =
          j == 0 ? model.common_effects[k] : model.cluster_effects(j - 1, k);
      if (spec.excluded(j, k)) {
        if (beta != 0.0)
          throw std::logic_error("penalty: hard-excluded coefficient is nonzero");
        continue;
      }
      total += spec.weights(j, k) * std::abs(beta);
    }
  }
  return total;
}

double penalized_objective(const EffectsModel& model, const Dataset& data,
                           const PenaltySpec& spec) {
  const double n = static_cast<double>(data.n());
  return log_likelihood(model, data) - n * spec.lambda * penalty_value(model, spec);
}

}  // namespace mixhp
