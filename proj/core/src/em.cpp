#include "mixhp/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "mixhp/bcda.hpp"
#include "mixhp/errors.hpp"

namespace mixhp {

namespace {

constexpr double kHalfLog2Pi = 0.918938533204672741780329736406;

struct Posterior {
  Eigen::MatrixXd means;  // n x m fitted component means (of rho * y)
  Eigen::MatrixXd resp;   // n x m
  double loglik = 0.0;
  Eigen::VectorXd mass;   // column sums
};

// One density pass per model: fitted means, posteriors and log-likelihood.
Posterior posterior_from_means(Eigen::MatrixXd means, const Eigen::VectorXd& pi,
                               const Eigen::VectorXd& rho, const Eigen::VectorXd& y) {
  Posterior out;
  out.means = std::move(means);
  Eigen::MatrixXd logd = y * rho.transpose();
  logd -= out.means;
  logd = (-0.5) * logd.array().square();
  const Eigen::RowVectorXd offset =
      (pi.array().log() + rho.array().log() - kHalfLog2Pi).matrix().transpose();
  logd.rowwise() += offset;
  const Eigen::VectorXd rowmax = logd.rowwise().maxCoeff();
  Eigen::MatrixXd shifted = (logd.colwise() - rowmax).array().exp();
  const Eigen::VectorXd rowsum = shifted.rowwise().sum();
  out.resp = shifted.array().colwise() / rowsum.array();
  out.loglik = (rowmax.array() + rowsum.array().log()).sum();
  out.mass = out.resp.colwise().sum().transpose();
  return out;
}

Posterior posterior(const ScaledModel& model, const Dataset& data) {
  return posterior_from_means(data.X * model.scaled_coefs, model.mixing_probs,
                              model.inverse_scales, data.y);
}

// Positive root of the scale stationarity equation, given the fitted means
// of every component at the current coefficients.
Eigen::VectorXd rho_update(const Eigen::MatrixXd& means, const Eigen::MatrixXd& resp,
                           const Eigen::VectorXd& y, bool equal_variance) {
  const Eigen::Index m = resp.cols();
  const Eigen::VectorXd y2 = y.array().square();
  const Eigen::VectorXd mass = resp.colwise().sum().transpose();
  const Eigen::VectorXd s = (resp.array() * means.array()).matrix().transpose() * y;
  if (equal_variance) {
    const double q = y2.sum();
    if (q <= 0.0) throw DegenerateDataError("rho update: zero response norm");
    const double sv = s.sum();
    const double n = mass.sum();
    const double rho = (sv + std::sqrt(sv * sv + 4.0 * q * n)) / (2.0 * q);
    return Eigen::VectorXd::Constant(m, rho);
  }
  const Eigen::VectorXd q = resp.transpose() * y2;
  Eigen::VectorXd rho(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (q[j] <= 0.0)
      throw DegenerateDataError("rho update: component carries no response mass");
    rho[j] = (s[j] + std::sqrt(s[j] * s[j] + 4.0 * q[j] * mass[j])) / (2.0 * q[j]);
  }
  return rho;
}

Eigen::MatrixXd to_block(const EffectsModel& model) {
  Eigen::MatrixXd block(model.n_components() + 1, model.n_predictors());
  block.row(0) = model.common_effects.transpose();
  block.bottomRows(model.n_components()) = model.cluster_effects;
  return block;
}

EffectsModel from_block(const Eigen::MatrixXd& block, Eigen::VectorXd pi,
                        Eigen::VectorXd rho) {
  EffectsModel model;
  model.common_effects = block.row(0).transpose();
  model.cluster_effects = block.bottomRows(block.rows() - 1);
  model.mixing_probs = std::move(pi);
  model.inverse_scales = std::move(rho);
  return model;
}

Eigen::VectorXd pack_parameters(const Eigen::MatrixXd& coefs, const Eigen::VectorXd& pi,
                                const Eigen::VectorXd& rho) {
  Eigen::VectorXd out(coefs.size() + pi.size() + rho.size());
  out << Eigen::Map<const Eigen::VectorXd>(coefs.data(), coefs.size()), pi, rho;
  return out;
}

void extract_selection_effects(const EffectsModel& model, FitResult& res) {
  res.selected_relevant.clear();
  res.selected_heterogeneous.clear();
  int nnz = 0;
  for (Eigen::Index k = 0; k < model.n_predictors(); ++k) {
    bool relevant = false;
    bool heterogeneous = false;
    if (model.common_effects[k] != 0.0) {
      relevant = true;
      ++nnz;
    }
    for (Eigen::Index j = 0; j < model.n_components(); ++j) {
      if (model.cluster_effects(j, k) != 0.0) {
        relevant = true;
        heterogeneous = true;
        ++nnz;
      }
    }
    if (relevant) res.selected_relevant.push_back(static_cast<int>(k));
    if (heterogeneous) res.selected_heterogeneous.push_back(static_cast<int>(k));
  }
  res.nnz_coefs = nnz;
}

void extract_selection_component(const ScaledModel& model, FitResult& res) {
  res.selected_relevant.clear();
  res.selected_heterogeneous.clear();
  int nnz = 0;
  for (Eigen::Index k = 0; k < model.n_predictors(); ++k) {
    const auto row = model.scaled_coefs.row(k);
    bool relevant = false;
    for (Eigen::Index j = 0; j < model.n_components(); ++j)
      if (row[j] != 0.0) {
        relevant = true;
        ++nnz;
      }
    if (!relevant) continue;
    res.selected_relevant.push_back(static_cast<int>(k));
    if (model.n_components() > 1 && row.maxCoeff() != row.minCoeff())
      res.selected_heterogeneous.push_back(static_cast<int>(k));
  }
  res.nnz_coefs = nnz;
}

// Independent per-component coordinate descent for the baseline form.
Eigen::MatrixXd component_cd_solve(const Dataset& data, const Eigen::MatrixXd& resp,
                                   const Eigen::VectorXd& rho,
                                   const ComponentPenalty& pen, Eigen::MatrixXd phi,
                                   double rel_tol, int max_sweeps, bool single_sweep) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const Eigen::Index m = resp.cols();
  const Eigen::MatrixXd thresholds =
      static_cast<double>(n) * pen.lambda * pen.weights;  // m x p
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index k = 0; k < p; ++k)
      if (pen.excluded(j, k)) phi(k, j) = 0.0;

  std::vector<Eigen::MatrixXd> wX;
  Eigen::MatrixXd wcolsq(p, m);
  wX.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    wX.push_back(resp.col(j).asDiagonal() * data.X);
    for (Eigen::Index k = 0; k < p; ++k)
      wcolsq(k, j) = wX.back().col(k).dot(data.X.col(k));
  }
  Eigen::MatrixXd resid = data.y * rho.transpose();  // n x m
  resid.noalias() -= data.X * phi;

  auto update = [&](Eigen::Index j, Eigen::Index k) {
    if (pen.excluded(j, k)) return;
    const double denom = wcolsq(k, j);
    if (denom <= 0.0) return;  // no information for this coordinate
    const double old = phi(k, j);
    const double num = wX[static_cast<std::size_t>(j)].col(k).dot(resid.col(j)) +
                       old * denom;
    const double value = soft_threshold(num, thresholds(j, k)) / denom;
    const double delta = value - old;
    if (delta != 0.0) {
      phi(k, j) = value;
      resid.col(j) -= delta * data.X.col(k);
    }
  };

  Eigen::MatrixXd prev = phi;
  const int cap = single_sweep ? 1 : max_sweeps;
  bool want_full = true;
  for (int s = 0; s < cap; ++s) {
    const bool was_full = want_full;
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index k = 0; k < p; ++k)
        if (was_full || phi(k, j) != 0.0 || thresholds(j, k) == 0.0) update(j, k);
    const double change = (phi - prev).norm();
    const double base = prev.norm();
    const double rel = base > 0.0 ? change / base : (change > 0.0 ? 1.0 : 0.0);
    prev = phi;
    const bool stable = rel <= rel_tol;
    if (stable && was_full) break;
    want_full = stable || ((s + 1) % 10 == 0);
  }
  return phi;
}

// Exact minimization along the joint scale of (rho, coefficients), the
// slow mode of the rho-coefficient alternation when the signal dominates
// the noise. Scaling both by t leaves residual shape, constraint and zero
// pattern intact; the optimal t solves Q t^2 + P t - n = 0 with Q the
// weighted squared residuals and P the (n lambda scaled) penalty.
double joint_scale_step(const Eigen::MatrixXd& resp, const Eigen::MatrixXd& resid,
                        double n_total, double penalty_term) {
  const double q = (resp.array() * resid.array().square()).sum();
  if (!(q > 0.0)) return 1.0;
  const double t =
      (-penalty_term + std::sqrt(penalty_term * penalty_term + 4.0 * q * n_total)) /
      (2.0 * q);
  return std::isfinite(t) && t > 0.0 ? t : 1.0;
}

struct EmOutcome {
  FitResult result;
  bool collapsed = false;
};

EmOutcome fit_once_effects(const Dataset& data, const PenaltySpec& spec,
                           const FitConfig& cfg, EffectsModel model, int max_iter) {
  const double n = static_cast<double>(data.n());
  const double mass_min = cfg.resolved_mass(data.n());

  BcdaOptions opts;
  opts.rel_tol = cfg.bcda_rel_tol;
  opts.max_sweeps = cfg.bcda_max_iter;
  opts.single_sweep = cfg.single_cycle_mstep;
  opts.warm_start_dual = cfg.warm_start_dual;

  EmOutcome out;
  FitResult& res = out.result;
  res.form = PenaltyForm::effects;
  res.equal_variance = cfg.equal_variance;
  res.full_mstep_solve = !cfg.single_cycle_mstep;

  Posterior ev = posterior(effects_to_scaled(model), data);
  double obj = ev.loglik - n * spec.lambda * penalty_value(model, spec);
  if (!std::isfinite(obj)) throw NumericalError("em: non-finite initial objective");
  res.objective_trace.push_back(obj);
  Eigen::VectorXd theta_prev =
      pack_parameters(to_block(model), model.mixing_probs, model.inverse_scales);

  bool converged = false;
  int iters = 0;
  Eigen::VectorXd dual = Eigen::VectorXd::Zero(data.p());
  for (int t = 1; t <= max_iter; ++t) {
    iters = t;
    if ((ev.mass.array() < mass_min).any()) {
      out.collapsed = true;
      return out;
    }
    const Eigen::VectorXd pi = ev.mass / n;
    const Eigen::VectorXd rho = rho_update(ev.means, ev.resp, data.y, cfg.equal_variance);

    const BcdaProblem problem{data, ev.resp, rho, spec, cfg.mu};
    const BcdaResult bres =
        cfg.single_cycle_mstep ? bcda_solve(problem, to_block(model), opts, &dual)
                               : constrained_cd_solve(problem, to_block(model), opts);
    if (cfg.warm_start_dual) dual = bres.dual;
    EffectsModel cand = from_block(bres.coefs, pi, rho);

    Eigen::MatrixXd cand_means = data.X * effects_to_scaled(cand).scaled_coefs;
    double cand_pen = penalty_value(cand, spec);
    {
      Eigen::MatrixXd resid = data.y * cand.inverse_scales.transpose();
      resid -= cand_means;
      const double ts = joint_scale_step(ev.resp, resid, n, n * spec.lambda * cand_pen);
      if (ts != 1.0) {
        cand.inverse_scales *= ts;
        cand.common_effects *= ts;
        cand.cluster_effects *= ts;
        cand_means *= ts;
        cand_pen *= ts;
      }
    }
    Posterior cand_ev = posterior_from_means(std::move(cand_means), cand.mixing_probs,
                                             cand.inverse_scales, data.y);
    double cand_obj = cand_ev.loglik - n * spec.lambda * cand_pen;
    if (!std::isfinite(cand_obj)) throw NumericalError("em: non-finite objective");
    if (cand_obj < obj) {
      // The closed-form (pi, rho) update alone can never descend; prefer it
      // when the re-projected coefficient block loses at fp-noise level.
      Posterior fb_ev = posterior_from_means(ev.means, pi, rho, data.y);
      const double fb_obj =
          fb_ev.loglik - n * spec.lambda * penalty_value(model, spec);
      if (fb_obj > cand_obj) {
        model.mixing_probs = pi;
        model.inverse_scales = rho;
        obj = fb_obj;
        ev = std::move(fb_ev);
      } else {
        model = std::move(cand);
        obj = cand_obj;
        ev = std::move(cand_ev);
      }
    } else {
      model = std::move(cand);
      obj = cand_obj;
      ev = std::move(cand_ev);
    }
    res.objective_trace.push_back(obj);

    const Eigen::VectorXd theta =
        pack_parameters(to_block(model), model.mixing_probs, model.inverse_scales);
    const double rel =
        (theta - theta_prev).norm() / std::max(1.0, theta_prev.norm());
    theta_prev = theta;
    if (rel <= cfg.em_rel_tol) {
      converged = true;
      break;
    }
  }

  res.loglik = ev.loglik;
  res.responsibilities = Responsibilities{std::move(ev.resp)};
  res.hard_assignments = hard_assign(res.responsibilities);
  res.converged = converged;
  res.n_iter = iters;
  extract_selection_effects(model, res);
  res.model = std::move(model);
  return out;
}

EmOutcome fit_once_component(const Dataset& data, const ComponentPenalty& spec,
                             const FitConfig& cfg, ScaledModel model, int max_iter) {
  const double n = static_cast<double>(data.n());
  const double mass_min = cfg.resolved_mass(data.n());

  EmOutcome out;
  FitResult& res = out.result;
  res.form = PenaltyForm::component;
  res.equal_variance = cfg.equal_variance;
  res.full_mstep_solve = !cfg.single_cycle_mstep;

  Posterior ev = posterior(model, data);
  double obj = ev.loglik - n * spec.lambda * component_penalty_value(model, spec);
  if (!std::isfinite(obj)) throw NumericalError("em: non-finite initial objective");
  res.objective_trace.push_back(obj);
  Eigen::VectorXd theta_prev =
      pack_parameters(model.scaled_coefs, model.mixing_probs, model.inverse_scales);

  bool converged = false;
  int iters = 0;
  for (int t = 1; t <= max_iter; ++t) {
    iters = t;
    if ((ev.mass.array() < mass_min).any()) {
      out.collapsed = true;
      return out;
    }
    const Eigen::VectorXd pi = ev.mass / n;
    const Eigen::VectorXd rho = rho_update(ev.means, ev.resp, data.y, cfg.equal_variance);
    const Eigen::MatrixXd phi =
        component_cd_solve(data, ev.resp, rho, spec, model.scaled_coefs,
                           cfg.bcda_rel_tol, cfg.bcda_max_iter, cfg.single_cycle_mstep);

    ScaledModel cand{phi, pi, rho};
    Eigen::MatrixXd cand_means = data.X * cand.scaled_coefs;
    double cand_pen = component_penalty_value(cand, spec);
    {
      Eigen::MatrixXd resid = data.y * cand.inverse_scales.transpose();
      resid -= cand_means;
      const double ts = joint_scale_step(ev.resp, resid, n, n * spec.lambda * cand_pen);
      if (ts != 1.0) {
        cand.inverse_scales *= ts;
        cand.scaled_coefs *= ts;
        cand_means *= ts;
        cand_pen *= ts;
      }
    }
    Posterior cand_ev = posterior_from_means(std::move(cand_means), cand.mixing_probs,
                                             cand.inverse_scales, data.y);
    double cand_obj = cand_ev.loglik - n * spec.lambda * cand_pen;
    if (!std::isfinite(cand_obj)) throw NumericalError("em: non-finite objective");
    if (cand_obj < obj) {
      Posterior fb_ev = posterior_from_means(ev.means, pi, rho, data.y);
      const double fb_obj =
          fb_ev.loglik - n * spec.lambda * component_penalty_value(model, spec);
      if (fb_obj > cand_obj) {
        model.mixing_probs = pi;
        model.inverse_scales = rho;
        obj = fb_obj;
        ev = std::move(fb_ev);
      } else {
        model = std::move(cand);
        obj = cand_obj;
        ev = std::move(cand_ev);
      }
    } else {
      model = std::move(cand);
      obj = cand_obj;
      ev = std::move(cand_ev);
    }
    res.objective_trace.push_back(obj);

    const Eigen::VectorXd theta =
        pack_parameters(model.scaled_coefs, model.mixing_probs, model.inverse_scales);
    const double rel =
        (theta - theta_prev).norm() / std::max(1.0, theta_prev.norm());
    theta_prev = theta;
    if (rel <= cfg.em_rel_tol) {
      converged = true;
      break;
    }
  }

  const Posterior es = posterior(model, data);
  res.loglik = es.loglik;
  res.responsibilities = Responsibilities{es.resp};
  res.hard_assignments = hard_assign(res.responsibilities);
  res.converged = converged;
  res.n_iter = iters;
  extract_selection_component(model, res);
  res.model = scaled_to_effects(model);
  res.component_model = std::move(model);
  return out;
}

// Uniform random hard assignment, one observation per row. Soft
// Dirichlet-uniform rows average out to near-equal weights, so every
// restart's first M-step sees almost the same pooled data and the EM
// collapses into a variance-only split; hard labels hand each component a
// distinct random subsample and preserve restart diversity.
Eigen::MatrixXd random_assignment_rows(Eigen::Index n, Eigen::Index m,
                                       SplitMix64& rng) {
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto j = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(m));
    if (j >= m) j = m - 1;
    resp(i, j) = 1.0;
  }
  return resp;
}

// Shared restart scheduling for both penalty forms: every start gets a
// short screening run, the best screened objective gets the full run. A
// single full run per restart wastes most of its budget inside poor basins;
// screening finds the good basin far more reliably at the same cost.
// run_fn(stream, cap): fresh start from the given stream, or from the
// caller-provided initializer when the stream is absent.
// continue_fn(result, cap): resume a screened fit to convergence.
template <class RunFn, class ContinueFn>
FitResult restart_driver(int m, const FitConfig& cfg, bool has_init,
                         const RunFn& run_fn, const ContinueFn& continue_fn) {
  int extra_left = 3;
  int extras_used = 0;
  // n_restarts = 0 with an initializer means "refine only": no fresh starts
  const int fresh = m == 1 ? (has_init ? 0 : 1)
                           : (has_init ? std::max(0, cfg.n_restarts)
                                       : std::max(1, cfg.n_restarts));

  std::vector<std::optional<std::uint64_t>> starts;
  if (has_init) starts.push_back(std::nullopt);
  for (int r = 0; r < fresh; ++r)
    starts.push_back(static_cast<std::uint64_t>(r));

  auto run_checked = [&](std::optional<std::uint64_t> stream, int cap,
                         EmOutcome& out) {
    out = run_fn(stream, cap);
    if (out.collapsed && cfg.collapse_policy == CollapsePolicy::abort)
      throw ComponentCollapseError("em: component mass fell below threshold");
    return !out.collapsed;
  };

  if (starts.size() == 1) {
    EmOutcome out;
    bool ok = run_checked(starts.front(), cfg.max_em_iter, out);
    while (!ok && extra_left > 0) {
      --extra_left;
      ok = run_checked(0x100000ULL + static_cast<std::uint64_t>(extras_used++),
                       cfg.max_em_iter, out);
    }
    if (!ok) throw ComponentCollapseError("em: every initialization collapsed");
    return std::move(out.result);
  }

  const int screen_cap = std::min(std::max(1, cfg.screen_em_iter), cfg.max_em_iter);
  std::vector<EmOutcome> screened;
  for (const auto& start : starts) {
    EmOutcome out;
    bool ok = run_checked(start, screen_cap, out);
    while (!ok && extra_left > 0) {
      --extra_left;
      ok = run_checked(0x100000ULL + static_cast<std::uint64_t>(extras_used++),
                       screen_cap, out);
    }
    if (ok) screened.push_back(std::move(out));
  }
  if (screened.empty())
    throw ComponentCollapseError("em: every initialization collapsed");

  std::stable_sort(screened.begin(), screened.end(),
                   [](const EmOutcome& a, const EmOutcome& b) {
                     return a.result.objective_trace.back() >
                            b.result.objective_trace.back();
                   });
  for (EmOutcome& candidate : screened) {
    EmOutcome full = continue_fn(candidate.result, cfg.max_em_iter);
    if (full.collapsed) {
      if (cfg.collapse_policy == CollapsePolicy::abort)
        throw ComponentCollapseError("em: component mass fell below threshold");
      continue;  // fall through to the next screened candidate
    }
    return std::move(full.result);
  }
  throw ComponentCollapseError("em: every screened start collapsed");
}

}  // namespace

Responsibilities e_step(const EffectsModel& model, const Dataset& data) {
  model.validate();
  data.validate();
  return Responsibilities{posterior(effects_to_scaled(model), data).resp};
}

Eigen::VectorXd m_step_pi(const Responsibilities& resp) {
  const Eigen::Index n = resp.values.rows();
  if (n < 1) throw std::invalid_argument("m_step_pi: empty responsibilities");
  const Eigen::VectorXd mass = resp.column_mass();
  if ((mass.array() <= 0.0).any())
    throw ComponentCollapseError("m_step_pi: component with zero mass");
  return mass / static_cast<double>(n);
}

Eigen::VectorXd m_step_rho(const EffectsModel& model, const Responsibilities& resp,
                           const Dataset& data, bool equal_variance) {
  const ScaledModel scaled = effects_to_scaled(model);
  const Eigen::MatrixXd means = data.X * scaled.scaled_coefs;
  return rho_update(means, resp.values, data.y, equal_variance);
}

std::vector<int> hard_assign(const Responsibilities& resp) {
  std::vector<int> labels(static_cast<std::size_t>(resp.values.rows()));
  for (Eigen::Index i = 0; i < resp.values.rows(); ++i) {
    int arg = 0;
    double best = resp.values(i, 0);
    for (Eigen::Index j = 1; j < resp.values.cols(); ++j) {
      if (resp.values(i, j) > best) {
        best = resp.values(i, j);
        arg = static_cast<int>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
  }
  return labels;
}

EffectsModel initialize(const Dataset& data, int m, const PenaltySpec& spec,
                        const FitConfig& config, SplitMix64& rng) {
  if (m < 1) throw std::invalid_argument("initialize: need at least one component");
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  Eigen::MatrixXd resp = m == 1 ? Eigen::MatrixXd::Ones(n, 1).eval()
                                : random_assignment_rows(n, m, rng);
  const Eigen::VectorXd pi = resp.colwise().sum().transpose() / static_cast<double>(n);
  const Eigen::MatrixXd means = Eigen::MatrixXd::Zero(n, m);
  const Eigen::VectorXd rho = rho_update(means, resp, data.y, config.equal_variance);

  BcdaOptions opts;
  opts.rel_tol = config.bcda_rel_tol;
  opts.max_sweeps = config.bcda_max_iter;
  opts.single_sweep = config.single_cycle_mstep;
  const BcdaProblem problem{data, resp, rho, spec, config.mu};
  const BcdaResult bres =
      config.single_cycle_mstep
          ? bcda_solve(problem, Eigen::MatrixXd::Zero(m + 1, p), opts)
          : constrained_cd_solve(problem, Eigen::MatrixXd::Zero(m + 1, p), opts);
  return from_block(bres.coefs, pi, rho);
}

FitResult gem_fit(const Dataset& data, const PenaltySpec& spec,
                  const FitConfig& config,
                  const std::optional<EffectsModel>& init) {
  data.validate();
  const Eigen::Index p = data.p();
  const int m = static_cast<int>(spec.weights.rows()) - 1;
  if (m < 1) throw std::invalid_argument("gem_fit: penalty implies no components");
  spec.validate(m, p);
  if (init) {
    init->validate();
    if (init->n_components() != m || init->n_predictors() != p)
      throw std::invalid_argument("gem_fit: initializer does not match penalty dims");
  }

  auto run = [&](std::optional<std::uint64_t> stream, int cap) {
    EffectsModel start;
    if (!stream) {
      start = *init;
    } else {
      SplitMix64 rng(derive_stream(config.seed, *stream));
      start = initialize(data, m, spec, config, rng);
    }
    return fit_once_effects(data, spec, config, std::move(start), cap);
  };
  auto resume = [&](const FitResult& screened, int cap) {
    return fit_once_effects(data, spec, config, screened.model, cap);
  };
  return restart_driver(m, config, init.has_value(), run, resume);
}

ComponentPenalty ComponentPenalty::lasso(Eigen::Index m, Eigen::Index p, double lambda,
                                         std::vector<bool> exempt) {
  ComponentPenalty spec;
  spec.lambda = lambda;
  spec.weights = Eigen::MatrixXd::Ones(m, p);
  spec.excluded = BoolGrid::Constant(m, p, false);
  if (exempt.empty()) exempt.assign(static_cast<std::size_t>(p), false);
  spec.exempt = std::move(exempt);
  for (Eigen::Index k = 0; k < p; ++k)
    if (spec.exempt[static_cast<std::size_t>(k)]) spec.weights.col(k).setZero();
  return spec;
}

void ComponentPenalty::validate(Eigen::Index m, Eigen::Index p) const {
  if (lambda < 0.0 || gamma < 0.0)
    throw std::invalid_argument("penalty: lambda and gamma must be nonnegative");
  if (weights.rows() != m || weights.cols() != p || excluded.rows() != m ||
      excluded.cols() != p)
    throw std::invalid_argument("penalty: weight grid does not match m x p");
  if (exempt.size() != static_cast<std::size_t>(p))
    throw std::invalid_argument("penalty: exempt flags do not match p");
  if (!weights.allFinite() || (weights.array() < 0.0).any())
    throw std::invalid_argument("penalty: weights must be finite and nonnegative");
}

double component_penalty_value(const ScaledModel& model, const ComponentPenalty& spec) {
  const Eigen::Index m = model.n_components();
  const Eigen::Index p = model.n_predictors();
  spec.validate(m, p);
  double total = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (spec.exempt[static_cast<std::size_t>(k)]) continue;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double phi = model.scaled_coefs(k, j);
      if (spec.excluded(j, k)) {
        if (phi != 0.0)
          throw std::logic_error("penalty: hard-excluded coefficient is nonzero");
        continue;
      }
      total += spec.weights(j, k) * std::abs(phi);
    }
  }
  return total;
}

double component_penalized_objective(const ScaledModel& model, const Dataset& data,
                                     const ComponentPenalty& spec) {
  const double n = static_cast<double>(data.n());
  return log_likelihood(model, data) -
         n * spec.lambda * component_penalty_value(model, spec);
}

FitResult gem_fit_component(const Dataset& data, const ComponentPenalty& spec,
                            const FitConfig& config,
                            const std::optional<ScaledModel>& init) {
  data.validate();
  const Eigen::Index p = data.p();
  const int m = static_cast<int>(spec.weights.rows());
  if (m < 1) throw std::invalid_argument("gem_fit: penalty implies no components");
  spec.validate(m, p);
  if (init) init->validate();

  auto run = [&](std::optional<std::uint64_t> stream, int cap) {
    ScaledModel start;
    if (!stream) {
      start = *init;
    } else {
      SplitMix64 rng(derive_stream(config.seed, *stream));
      const Eigen::Index n = data.n();
      Eigen::MatrixXd resp = m == 1 ? Eigen::MatrixXd::Ones(n, 1).eval()
                                    : random_assignment_rows(n, m, rng);
      const Eigen::VectorXd pi =
          resp.colwise().sum().transpose() / static_cast<double>(n);
      const Eigen::VectorXd rho = rho_update(Eigen::MatrixXd::Zero(n, m), resp,
                                             data.y, config.equal_variance);
      const Eigen::MatrixXd phi =
          component_cd_solve(data, resp, rho, spec, Eigen::MatrixXd::Zero(p, m),
                             config.bcda_rel_tol, config.bcda_max_iter,
                             config.single_cycle_mstep);
      start = ScaledModel{phi, pi, rho};
    }
    return fit_once_component(data, spec, config, std::move(start), cap);
  };
  auto resume = [&](const FitResult& screened, int cap) {
    const ScaledModel& start = screened.component_model
                                   ? *screened.component_model
                                   : effects_to_scaled(screened.model);
    return fit_once_component(data, spec, config, start, cap);
  };
  return restart_driver(m, config, init.has_value(), run, resume);
}

}  // namespace mixhp
