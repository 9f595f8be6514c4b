#include "mixhp/bcda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mixhp/errors.hpp"
#include "mixhp/model.hpp"

namespace mixhp {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

namespace {

// Root of nu -> sum_j T(c_j - nu, thr_j) / d_j, the multiplier of one
// column's sum-to-zero subproblem. The function is continuous,
// non-increasing and piecewise linear with breakpoints c_j -/+ thr_j.
// a = c - thr, b = c + thr per entry; invd = 1/d.
double column_dual_root(const std::vector<double>& a, const std::vector<double>& b,
                        const std::vector<double>& invd, std::vector<double>& bps) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < a.size(); ++j) {
    lo = std::max(lo, a[j]);
    hi = std::min(hi, b[j]);
  }
  if (lo <= hi) return lo;  // the all-zero face is feasible
  auto g = [&](double nu) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (nu < a[j])
        s += (a[j] - nu) * invd[j];
      else if (nu > b[j])
        s += (b[j] - nu) * invd[j];
    }
    return s;
  };
  bps.clear();
  bps.insert(bps.end(), a.begin(), a.end());
  bps.insert(bps.end(), b.begin(), b.end());
  std::sort(bps.begin(), bps.end());
  double prev = bps.front();
  double g_prev = g(prev);
  if (g_prev <= 0.0) return prev;
  for (std::size_t i = 1; i < bps.size(); ++i) {
    const double cur = bps[i];
    if (cur == prev) continue;
    const double g_cur = g(cur);
    if (g_cur <= 0.0) {
      if (g_cur == g_prev) return cur;
      return prev + (0.0 - g_prev) * (cur - prev) / (g_cur - g_prev);
    }
    prev = cur;
    g_prev = g_cur;
  }
  return bps.back();
}

// Incremental state for coordinate sweeps: residual matrix, its
// responsibility-weighted row sums, per-column quadratic terms and the
// cluster column sums, all updated in O(n) per coordinate.
class Workspace {
 public:
  Workspace(const BcdaProblem& prob, Eigen::MatrixXd coefs, Eigen::VectorXd dual)
      : prob_(prob),
        n_(prob.n()),
        p_(prob.p()),
        m_(prob.m()),
        B_(std::move(coefs)),
        u_(std::move(dual)) {
    const auto& pen = prob_.penalty;
    if (B_.rows() != m_ + 1 || B_.cols() != p_)
      throw std::invalid_argument("bcda: warm start does not match (m+1) x p");
    pen.validate(m_, p_);
    if (prob_.responsibilities.rows() != n_ || prob_.responsibilities.cols() != m_)
      throw std::invalid_argument("bcda: responsibilities do not match n x m");
    if (prob_.mu <= 0.0) throw std::invalid_argument("bcda: mu must be positive");
    if (u_.size() != p_) u_ = Eigen::VectorXd::Zero(p_);

    thresholds_ = static_cast<double>(n_) * pen.lambda * pen.weights;
    excluded_ = pen.excluded;
    if (m_ == 1) excluded_.row(1).setConstant(true);  // lone deviation row is structurally zero

    colsq_ = prob_.data.X.colwise().squaredNorm().transpose();
    frozen_ = std::vector<bool>(static_cast<std::size_t>(p_), false);
    for (Eigen::Index k = 0; k < p_; ++k) {
      if (colsq_[k] <= 0.0) frozen_[static_cast<std::size_t>(k)] = true;
    }
    for (Eigen::Index k = 0; k < p_; ++k)
      for (Eigen::Index j = 0; j <= m_; ++j)
        if (excluded_(j, k)) B_(j, k) = 0.0;
    for (Eigen::Index k = 0; k < p_; ++k)
      if (frozen_[static_cast<std::size_t>(k)]) B_(0, k) = 0.0;

    wX_.reserve(static_cast<std::size_t>(m_));
    wcolsq_.resize(p_, m_);
    for (Eigen::Index j = 0; j < m_; ++j) {
      wX_.push_back(prob_.responsibilities.col(j).asDiagonal() * prob_.data.X);
      for (Eigen::Index k = 0; k < p_; ++k)
        wcolsq_(k, j) = wX_.back().col(k).dot(prob_.data.X.col(k));
    }
    refresh_residuals();
  }

  void refresh_residuals() {
    const auto& X = prob_.data.X;
    R_ = prob_.data.y * prob_.inverse_scales.transpose();
    R_.colwise() -= (X * B_.row(0).transpose()).eval();
    R_.noalias() -= X * B_.bottomRows(m_).transpose();
    wres_ = (prob_.responsibilities.array() * R_.array()).rowwise().sum();
    csum_ = B_.bottomRows(m_).colwise().sum();
  }

  double update_common(Eigen::Index k) {
    if (excluded_(0, k) || frozen_[static_cast<std::size_t>(k)]) return B_(0, k);
    const auto xk = prob_.data.X.col(k);
    const double num = xk.dot(wres_) + B_(0, k) * colsq_[k];
    const double value = soft_threshold(num, thresholds_(0, k)) / colsq_[k];
    const double delta = value - B_(0, k);
    if (delta != 0.0) {
      B_(0, k) = value;
      R_.colwise() -= (delta * xk).eval();
      wres_ -= delta * xk;
    }
    return value;
  }

  double update_cluster(Eigen::Index j, Eigen::Index k) {
    if (excluded_(j + 1, k)) return B_(j + 1, k);
    const double old = B_(j + 1, k);
    const double num = wX_[static_cast<std::size_t>(j)].col(k).dot(R_.col(j)) +
                       old * wcolsq_(k, j) -
                       prob_.mu * (csum_[k] - old - u_[k]);
    const double value =
        soft_threshold(num, thresholds_(j + 1, k)) / (wcolsq_(k, j) + prob_.mu);
    const double delta = value - old;
    if (delta != 0.0) {
      B_(j + 1, k) = value;
      R_.col(j) -= delta * prob_.data.X.col(k);
      wres_ -= delta * wX_[static_cast<std::size_t>(j)].col(k);
      csum_[k] += delta;
    }
    return value;
  }

  void full_sweep() {
    for (Eigen::Index k = 0; k < p_; ++k) update_common(k);
    for (Eigen::Index j = 0; j < m_; ++j)
      for (Eigen::Index k = 0; k < p_; ++k) update_cluster(j, k);
  }

  // Sweep restricted to coordinates that are nonzero or unpenalized.
  void active_sweep() {
    for (Eigen::Index k = 0; k < p_; ++k)
      if (B_(0, k) != 0.0 || thresholds_(0, k) == 0.0) update_common(k);
    for (Eigen::Index j = 0; j < m_; ++j)
      for (Eigen::Index k = 0; k < p_; ++k)
        if (B_(j + 1, k) != 0.0 || thresholds_(j + 1, k) == 0.0)
          update_cluster(j, k);
  }

  void dual_update() { u_ -= csum_.transpose(); }

  double constraint_residual() const {
    return csum_.size() > 0 ? csum_.cwiseAbs().maxCoeff() : 0.0;
  }

  // Exact solve of column k's cluster coordinates under the sum-to-zero
  // constraint, everything else fixed. The data term is separable across
  // components, so with multiplier nu each coordinate is
  // T(c_j - nu, thr_j) / d_j; the root of their sum is found by a
  // breakpoint scan. The column is feasible and exactly sparse afterwards.
  void solve_column(Eigen::Index k) {
    scratch_j_.clear();
    scratch_a_.clear();
    scratch_b_.clear();
    scratch_invd_.clear();
    for (Eigen::Index j = 0; j < m_; ++j) {
      if (excluded_(j + 1, k)) continue;
      const double d = wcolsq_(k, j);
      if (d <= 0.0) continue;  // no information; coordinate stays put
      const double c = wX_[static_cast<std::size_t>(j)].col(k).dot(R_.col(j)) +
                       B_(j + 1, k) * d;
      const double t = thresholds_(j + 1, k);
      scratch_j_.push_back(j);
      scratch_a_.push_back(c - t);
      scratch_b_.push_back(c + t);
      scratch_invd_.push_back(1.0 / d);
    }
    if (scratch_j_.empty()) return;
    const double nu = column_dual_root(scratch_a_, scratch_b_, scratch_invd_, scratch_bps_);
    for (std::size_t idx = 0; idx < scratch_j_.size(); ++idx) {
      const Eigen::Index j = scratch_j_[idx];
      const double c_mid = 0.5 * (scratch_a_[idx] + scratch_b_[idx]);
      const double t = 0.5 * (scratch_b_[idx] - scratch_a_[idx]);
      const double value = soft_threshold(c_mid - nu, t) * scratch_invd_[idx];
      const double delta = value - B_(j + 1, k);
      if (delta != 0.0) {
        B_(j + 1, k) = value;
        R_.col(j) -= delta * prob_.data.X.col(k);
        wres_ -= delta * wX_[static_cast<std::size_t>(j)].col(k);
        csum_[k] += delta;
      }
    }
  }

  void full_block_sweep() {
    for (Eigen::Index k = 0; k < p_; ++k) update_common(k);
    for (Eigen::Index k = 0; k < p_; ++k) solve_column(k);
  }

  // Restricted to columns with any nonzero or unpenalized coordinate.
  void active_block_sweep() {
    for (Eigen::Index k = 0; k < p_; ++k)
      if (B_(0, k) != 0.0 || thresholds_(0, k) == 0.0) update_common(k);
    for (Eigen::Index k = 0; k < p_; ++k) {
      bool live = false;
      for (Eigen::Index j = 0; j < m_ && !live; ++j)
        live = !excluded_(j + 1, k) &&
               (B_(j + 1, k) != 0.0 || thresholds_(j + 1, k) == 0.0);
      if (live) solve_column(k);
    }
  }

  // Distribute each violating column's residual over its nonzero cluster
  // entries, which restores feasibility without disturbing exact zeros.
  void project_cluster_columns() {
    for (Eigen::Index k = 0; k < p_; ++k) {
      const double r = B_.bottomRows(m_).col(k).sum();
      if (std::abs(r) <= kSumToZeroTol) continue;
      Eigen::Index nnz = 0;
      for (Eigen::Index j = 1; j <= m_; ++j)
        if (B_(j, k) != 0.0) ++nnz;
      if (nnz == 0) continue;
      const double shift = r / static_cast<double>(nnz);
      for (Eigen::Index j = 1; j <= m_; ++j)
        if (B_(j, k) != 0.0) B_(j, k) -= shift;
    }
  }

  const Eigen::MatrixXd& coefs() const { return B_; }
  const Eigen::VectorXd& dual() const { return u_; }
  std::vector<int> frozen_indices() const {
    std::vector<int> out;
    for (std::size_t k = 0; k < frozen_.size(); ++k)
      if (frozen_[k]) out.push_back(static_cast<int>(k));
    return out;
  }

 private:
  const BcdaProblem& prob_;
  Eigen::Index n_, p_, m_;
  Eigen::MatrixXd B_;
  Eigen::VectorXd u_;
  Eigen::MatrixXd thresholds_;  // (m+1) x p
  BoolGrid excluded_;
  Eigen::VectorXd colsq_;
  std::vector<bool> frozen_;
  std::vector<Eigen::MatrixXd> wX_;  // per component: resp-weighted X
  Eigen::MatrixXd wcolsq_;           // p x m
  Eigen::MatrixXd R_;                // n x m residuals
  Eigen::VectorXd wres_;             // n, responsibility-weighted row sums of R
  Eigen::RowVectorXd csum_;          // p, cluster column sums
  std::vector<Eigen::Index> scratch_j_;
  std::vector<double> scratch_a_, scratch_b_, scratch_invd_, scratch_bps_;
};

}  // namespace

double update_common(Eigen::Index k, BcdaState& state, const BcdaProblem& problem) {
  Workspace ws(problem, state.coefs, state.dual);
  const double value = ws.update_common(k);
  state.coefs = ws.coefs();
  return value;
}

double update_cluster(Eigen::Index j, Eigen::Index k, BcdaState& state,
                      const BcdaProblem& problem) {
  Workspace ws(problem, state.coefs, state.dual);
  const double value = ws.update_cluster(j, k);
  state.coefs = ws.coefs();
  return value;
}

double bcda_objective(const BcdaProblem& problem, const Eigen::MatrixXd& coefs) {
  const Eigen::Index m = problem.m();
  const auto& X = problem.data.X;
  Eigen::MatrixXd R = problem.data.y * problem.inverse_scales.transpose();
  R.colwise() -= (X * coefs.row(0).transpose()).eval();
  R.noalias() -= X * coefs.bottomRows(m).transpose();
  const double loss =
      0.5 * (problem.responsibilities.array() * R.array().square()).sum();
  double pen = 0.0;
  const double nlambda = static_cast<double>(problem.n()) * problem.penalty.lambda;
  for (Eigen::Index k = 0; k < problem.p(); ++k) {
    if (problem.penalty.exempt[static_cast<std::size_t>(k)]) continue;
    for (Eigen::Index j = 0; j <= m; ++j) {
      if (problem.penalty.excluded(j, k)) continue;
      pen += problem.penalty.weights(j, k) * std::abs(coefs(j, k));
    }
  }
  return loss + nlambda * pen;
}

double bcda_augmented_objective(const BcdaProblem& problem,
                                const Eigen::MatrixXd& coefs,
                                const Eigen::VectorXd& dual) {
  const Eigen::Index m = problem.m();
  const Eigen::RowVectorXd csum = coefs.bottomRows(m).colwise().sum();
  const double violation = (csum.transpose() - dual).squaredNorm();
  return bcda_objective(problem, coefs) + 0.5 * problem.mu * violation;
}

BcdaResult bcda_solve(const BcdaProblem& problem, const Eigen::MatrixXd& warm_start,
                      const BcdaOptions& options, const Eigen::VectorXd* warm_dual) {
  Eigen::VectorXd u0 = options.warm_start_dual && warm_dual != nullptr
                           ? *warm_dual
                           : Eigen::VectorXd::Zero(problem.p());
  Workspace ws(problem, warm_start, std::move(u0));

  BcdaResult result;
  Eigen::MatrixXd prev = ws.coefs();
  int sweeps = 0;
  bool converged = false;
  const int max_sweeps = options.single_sweep ? 1 : options.max_sweeps;
  bool want_full = true;

  while (sweeps < max_sweeps) {
    const bool was_full = want_full || !options.active_set;
    if (was_full)
      ws.full_sweep();
    else
      ws.active_sweep();
    ws.dual_update();
    ++sweeps;

    const double change = (ws.coefs() - prev).norm();
    const double base = prev.norm();
    const double rel = base > 0.0 ? change / base : (change > 0.0 ? 1.0 : 0.0);
    prev = ws.coefs();
    const double residual = ws.constraint_residual();
    const bool stable = rel <= options.rel_tol && residual <= options.residual_tol;
    if (stable && was_full) {
      converged = true;
      break;
    }
    // a stable active sweep must be confirmed by a full one
    want_full = stable || (sweeps % 10 == 0);

    if (options.recompute_interval > 0 && sweeps % options.recompute_interval == 0)
      ws.refresh_residuals();
  }

  result.constraint_residual = ws.constraint_residual();
  ws.project_cluster_columns();
  result.coefs = ws.coefs();
  result.dual = ws.dual();
  result.converged = options.single_sweep ? true : converged;
  result.n_sweeps = sweeps;
  result.frozen_predictors = ws.frozen_indices();
  if (!result.coefs.allFinite())
    throw NumericalError("bcda: non-finite coefficients");
  return result;
}

BcdaResult constrained_cd_solve(const BcdaProblem& problem,
                                const Eigen::MatrixXd& warm_start,
                                const BcdaOptions& options) {
  Workspace ws(problem, warm_start, Eigen::VectorXd::Zero(problem.p()));

  BcdaResult result;
  Eigen::MatrixXd prev = ws.coefs();
  int sweeps = 0;
  bool converged = false;
  bool want_full = true;

  while (sweeps < options.max_sweeps) {
    const bool was_full = want_full || !options.active_set;
    if (was_full)
      ws.full_block_sweep();
    else
      ws.active_block_sweep();
    ++sweeps;

    const double change = (ws.coefs() - prev).norm();
    const double base = prev.norm();
    const double rel = base > 0.0 ? change / base : (change > 0.0 ? 1.0 : 0.0);
    prev = ws.coefs();
    const bool stable = rel <= options.rel_tol;
    if (stable && was_full) {
      converged = true;
      break;
    }
    want_full = stable || (sweeps % 10 == 0);

    if (options.recompute_interval > 0 && sweeps % options.recompute_interval == 0)
      ws.refresh_residuals();
  }

  result.constraint_residual = ws.constraint_residual();
  ws.project_cluster_columns();
  result.coefs = ws.coefs();
  result.dual = ws.dual();
  result.converged = converged;
  result.n_sweeps = sweeps;
  result.frozen_predictors = ws.frozen_indices();
  if (!result.coefs.allFinite())
    throw NumericalError("bcda: non-finite coefficients");
  return result;
}

}  // namespace mixhp
