#include "mixhp/model.hpp"

#include <cmath>
#include <stdexcept>

namespace mixhp {

namespace {

constexpr double kHalfLog2Pi = 0.918938533204672741780329736406;

void check_simplex(const Eigen::VectorXd& pi) {
  if ((pi.array() <= 0.0).any())
    throw std::invalid_argument("model: mixing probabilities must be positive");
  if (std::abs(pi.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("model: mixing probabilities must sum to one");
}

void check_scales(const Eigen::VectorXd& rho) {
  if ((rho.array() <= 0.0).any() || !rho.allFinite())
    throw std::invalid_argument("model: inverse scales must be positive and finite");
}

}  // namespace

void EffectsModel::validate(double constraint_tol) const {
  const Eigen::Index m = n_components();
  const Eigen::Index p = n_predictors();
  if (m < 1 || p < 1) throw std::invalid_argument("model: empty dimensions");
  if (cluster_effects.rows() != m || cluster_effects.cols() != p ||
      inverse_scales.size() != m)
    throw std::invalid_argument("model: inconsistent dimensions");
  if (!common_effects.allFinite() || !cluster_effects.allFinite())
    throw std::invalid_argument("model: non-finite coefficients");
  check_simplex(mixing_probs);
  check_scales(inverse_scales);
  const double worst = cluster_effects.colwise().sum().cwiseAbs().maxCoeff();
  if (worst > constraint_tol)
    throw std::invalid_argument("model: sum-to-zero constraint violated");
}

void ScaledModel::validate() const {
  const Eigen::Index m = n_components();
  if (m < 1 || scaled_coefs.rows() < 1)
    throw std::invalid_argument("model: empty dimensions");
  if (scaled_coefs.cols() != m || inverse_scales.size() != m)
    throw std::invalid_argument("model: inconsistent dimensions");
  if (!scaled_coefs.allFinite())
    throw std::invalid_argument("model: non-finite coefficients");
  check_simplex(mixing_probs);
  check_scales(inverse_scales);
}

void RawModel::validate() const {
  const Eigen::Index m = n_components();
  if (m < 1 || raw_coefs.rows() < 1)
    throw std::invalid_argument("model: empty dimensions");
  if (raw_coefs.cols() != m || variances.size() != m)
    throw std::invalid_argument("model: inconsistent dimensions");
  if ((variances.array() <= 0.0).any())
    throw std::invalid_argument("model: variances must be positive");
  check_simplex(mixing_probs);
}

ConstraintMatrix make_constraint_matrix(int m) {
  if (m < 2) throw std::invalid_argument("constraint matrix: need at least two components");
  ConstraintMatrix A;
  A.m = m;
  A.entries.resize(m + 1, m);
  const double inv_m = 1.0 / static_cast<double>(m);
  A.entries.row(0).setConstant(inv_m);
  A.entries.bottomRows(m) =
      Eigen::MatrixXd::Identity(m, m) - Eigen::MatrixXd::Constant(m, m, inv_m);
  return A;
}

ScaledModel effects_to_scaled(const EffectsModel& model) {
  ScaledModel out;
  out.scaled_coefs = model.cluster_effects.transpose();
  out.scaled_coefs.colwise() += model.common_effects;
  out.mixing_probs = model.mixing_probs;
  out.inverse_scales = model.inverse_scales;
  return out;
}

EffectsModel scaled_to_effects(const ScaledModel& model) {
  EffectsModel out;
  const Eigen::Index m = model.n_components();
  out.common_effects = model.scaled_coefs.rowwise().mean();
  out.cluster_effects = model.scaled_coefs.transpose();
  for (Eigen::Index j = 0; j < m; ++j)
    out.cluster_effects.row(j) -= out.common_effects.transpose();
  out.mixing_probs = model.mixing_probs;
  out.inverse_scales = model.inverse_scales;
  return out;
}

RawModel to_raw(const ScaledModel& model) {
  if ((model.inverse_scales.array() <= 0.0).any())
    throw std::logic_error("to_raw: nonpositive inverse scale");
  RawModel out;
  out.raw_coefs = model.scaled_coefs * model.inverse_scales.cwiseInverse().asDiagonal();
  out.variances = model.inverse_scales.array().square().inverse();
  out.mixing_probs = model.mixing_probs;
  return out;
}

RawModel to_raw(const EffectsModel& model) { return to_raw(effects_to_scaled(model)); }

Eigen::MatrixXd component_log_densities(const ScaledModel& model,
                                        const Dataset& data) {
  if (model.n_predictors() != data.p())
    throw std::invalid_argument("log density: predictor dimensions do not match");
  const Eigen::Index m = model.n_components();
  Eigen::MatrixXd resid = data.y * model.inverse_scales.transpose();  // n x m
  resid.noalias() -= data.X * model.scaled_coefs;
  Eigen::MatrixXd out = (-0.5) * resid.array().square().matrix();
  const Eigen::RowVectorXd offset =
      (model.mixing_probs.array().log() + model.inverse_scales.array().log())
          .matrix()
          .transpose()
          .array()
          .matrix() -
      Eigen::RowVectorXd::Constant(m, kHalfLog2Pi);
  out.rowwise() += offset;
  return out;
}

double log_likelihood(const ScaledModel& model, const Dataset& data) {
  const Eigen::MatrixXd logd = component_log_densities(model, data);
  // Row-wise log-sum-exp keeps far-off observations from underflowing.
  const Eigen::VectorXd rowmax = logd.rowwise().maxCoeff();
  const Eigen::ArrayXd sums =
      (logd.colwise() - rowmax).array().exp().rowwise().sum();
  return (rowmax.array() + sums.log()).sum();
}

double log_likelihood(const EffectsModel& model, const Dataset& data) {
  return log_likelihood(effects_to_scaled(model), data);
}

}  // namespace mixhp
