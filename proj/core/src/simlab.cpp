#include "mixhp/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mixhp/errors.hpp"
#include "mixhp/parallel.hpp"
#include "mixhp/rng.hpp"

namespace mixhp {

namespace {

constexpr int kMainRelevant = 10;
constexpr int kMainHeterogeneous = 3;
constexpr int kAllHetRelevant = 5;

Eigen::Index min_p(SimPattern pattern) {
  return pattern == SimPattern::main ? kMainRelevant : kAllHetRelevant;
}

}  // namespace

void SimDesign::validate() const {
  if (n < 1) throw std::invalid_argument("design: need at least one observation");
  if (m != 3)
    throw std::invalid_argument("design: built-in patterns are three-component");
  if (p < min_p(pattern))
    throw std::invalid_argument("design: p smaller than the pattern support");
  if (!(delta > 0.0)) throw std::invalid_argument("design: delta must be positive");
  if (mixing.size() != 0) {
    if (mixing.size() != m || (mixing.array() <= 0.0).any() ||
        std::abs(mixing.sum() - 1.0) > 1e-12)
      throw std::invalid_argument("design: mixing must be a positive simplex point");
  }
}

Eigen::MatrixXd SimDesign::sigma_matrix() const {
  if (sigma == SigmaStructure::identity)
    return Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd out(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      out(i, j) = std::pow(0.5, std::abs(static_cast<double>(i - j)));
  return out;
}

Eigen::VectorXd SimDesign::mixing_or_uniform() const {
  if (mixing.size() != 0) return mixing;
  return Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
}

Eigen::VectorXd unequal_mixing() {
  Eigen::VectorXd pi(3);
  pi << 0.25, 0.25, 0.5;
  return pi;
}

EffectsModel design_truth_model(const SimDesign& design) {
  design.validate();
  const double s = 1.0 / std::sqrt(design.delta);
  Eigen::VectorXd variances(3);
  variances << 0.1, 0.1, 0.4;
  variances *= design.delta;

  EffectsModel model;
  model.mixing_probs = design.mixing_or_uniform();
  model.inverse_scales = variances.array().sqrt().inverse();
  model.common_effects = Eigen::VectorXd::Zero(design.p);
  model.cluster_effects = Eigen::MatrixXd::Zero(3, design.p);

  if (design.pattern == SimPattern::main) {
    model.common_effects.head(7).setConstant(s);
    model.cluster_effects(0, 8) = -3.0 * s;
    model.cluster_effects(0, 9) = 3.0 * s;
    model.cluster_effects(1, 7) = -3.0 * s;
    model.cluster_effects(1, 8) = 3.0 * s;
    model.cluster_effects(2, 7) = 3.0 * s;
    model.cluster_effects(2, 9) = -3.0 * s;
    return model;
  }

  // all-heterogeneous pattern: scaled coefficients given per component
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(design.p, 3);
  phi.block(0, 0, 5, 1) << 1, -1, 0, -3, 3;
  phi.block(0, 1, 5, 1) << -1, 2, -3, 3, 0;
  phi.block(0, 2, 5, 1) << 2, 1, 3, 0, -3;
  phi *= s;
  ScaledModel scaled{phi, model.mixing_probs, model.inverse_scales};
  return scaled_to_effects(scaled);
}

std::pair<Dataset, GroundTruth> generate(const SimDesign& design) {
  design.validate();
  GroundTruth truth;
  truth.model = design_truth_model(design);
  truth.snr = compute_snr(truth, design);
  if (design.pattern == SimPattern::main) {
    for (int k = 0; k < kMainRelevant; ++k) truth.s_relevant.push_back(k);
    for (int k = kMainRelevant - kMainHeterogeneous; k < kMainRelevant; ++k)
      truth.s_heterogeneous.push_back(k);
  } else {
    for (int k = 0; k < kAllHetRelevant; ++k) {
      truth.s_relevant.push_back(k);
      truth.s_heterogeneous.push_back(k);
    }
  }

  const Eigen::Index n = design.n;
  const Eigen::Index p = design.p;
  const RawModel raw = to_raw(truth.model);
  const Eigen::VectorXd pi = design.mixing_or_uniform();
  const Eigen::VectorXd sd = raw.variances.array().sqrt();

  SplitMix64 rng(derive_stream(design.seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);

  // draw order: the full Z block row-major, then per observation the
  // component label followed by its noise term
  Eigen::MatrixXd Z(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < p; ++k) Z(i, k) = normal(rng);
  Eigen::MatrixXd X;
  if (design.sigma == SigmaStructure::identity) {
    X = std::move(Z);
  } else {
    const Eigen::MatrixXd L = design.sigma_matrix().llt().matrixL();
    X = Z * L.transpose();
  }

  Eigen::VectorXd y(n);
  truth.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    int label = design.m - 1;
    double cum = 0.0;
    for (int j = 0; j < design.m; ++j) {
      cum += pi[j];
      if (u < cum) {
        label = j;
        break;
      }
    }
    truth.labels[static_cast<std::size_t>(i)] = label;
    y[i] = X.row(i).dot(raw.raw_coefs.col(label)) + sd[label] * normal(rng);
  }

  return {Dataset::make(std::move(y), std::move(X)), std::move(truth)};
}

double compute_snr(const GroundTruth& truth, const SimDesign& design) {
  const RawModel raw = to_raw(truth.model);
  const Eigen::MatrixXd sigma = design.sigma_matrix();
  const Eigen::VectorXd pi = truth.model.mixing_probs;
  double signal = 0.0;
  for (Eigen::Index j = 0; j < raw.n_components(); ++j)
    signal += pi[j] * raw.raw_coefs.col(j).dot(sigma * raw.raw_coefs.col(j));
  const double noise = pi.dot(raw.variances);
  return signal / noise;
}

double compute_snr(const SimDesign& design) {
  GroundTruth truth;
  truth.model = design_truth_model(design);
  return compute_snr(truth, design);
}

double delta_for_snr(const SimDesign& design, double target_snr) {
  if (!(target_snr > 0.0))
    throw std::invalid_argument("delta_for_snr: target must be positive");
  SimDesign unit = design;
  unit.delta = 1.0;
  return compute_snr(unit) / target_snr;
}

std::vector<int> align_components(const RawModel& estimate, const GroundTruth& truth) {
  const RawModel truth_raw = to_raw(truth.model);
  const Eigen::Index p = truth_raw.n_predictors();
  if (estimate.n_predictors() != p)
    throw std::invalid_argument("align: predictor dimensions differ");
  const int m_est = static_cast<int>(estimate.n_components());
  const int m_true = static_cast<int>(truth_raw.n_components());
  const int m = std::max(m_est, m_true);

  auto col = [&](const Eigen::MatrixXd& mat, int j) {
    return j < mat.cols() ? Eigen::VectorXd(mat.col(j))
                          : Eigen::VectorXd(Eigen::VectorXd::Zero(p));
  };
  Eigen::MatrixXd cost(m, m);
  for (int jt = 0; jt < m; ++jt)
    for (int je = 0; je < m; ++je)
      cost(jt, je) =
          (col(truth_raw.raw_coefs, jt) - col(estimate.raw_coefs, je)).squaredNorm();

  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int jt = 0; jt < m; ++jt) c += cost(jt, perm[static_cast<std::size_t>(jt)]);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

EvalReport evaluate(const FitResult& fit, const GroundTruth& truth) {
  const RawModel est = to_raw(fit.model);
  const RawModel tru = to_raw(truth.model);
  const Eigen::Index p = tru.n_predictors();
  const int m_est = static_cast<int>(est.n_components());
  const int m_true = static_cast<int>(tru.n_components());
  const int m = std::max(m_est, m_true);

  EvalReport report;
  report.selected_m = m_est;
  report.m_mismatch = m_est != m_true;
  report.permutation = align_components(est, truth);

  auto padded = [&](const Eigen::MatrixXd& mat, int j) {
    return j < mat.cols() ? Eigen::VectorXd(mat.col(j))
                          : Eigen::VectorXd(Eigen::VectorXd::Zero(p));
  };
  auto padded_scalar = [](const Eigen::VectorXd& v, int j) {
    return j < v.size() ? v[j] : 0.0;
  };

  double sse_b = 0.0, sse_s = 0.0, sse_pi = 0.0;
  for (int jt = 0; jt < m; ++jt) {
    const int je = report.permutation[static_cast<std::size_t>(jt)];
    sse_b += (padded(tru.raw_coefs, jt) - padded(est.raw_coefs, je)).squaredNorm();
    const double ds = padded_scalar(tru.variances, jt) - padded_scalar(est.variances, je);
    const double dp =
        padded_scalar(tru.mixing_probs, jt) - padded_scalar(est.mixing_probs, je);
    sse_s += ds * ds;
    sse_pi += dp * dp;
  }
  report.mse_b = 100.0 * sse_b / (static_cast<double>(m) * static_cast<double>(p));
  report.mse_sigma2 = 100.0 * sse_s / static_cast<double>(m);
  report.mse_pi = 100.0 * sse_pi / static_cast<double>(m);

  std::vector<bool> true_rel(static_cast<std::size_t>(p), false);
  std::vector<bool> true_het(static_cast<std::size_t>(p), false);
  for (int k : truth.s_relevant) true_rel[static_cast<std::size_t>(k)] = true;
  for (int k : truth.s_heterogeneous) true_het[static_cast<std::size_t>(k)] = true;
  std::vector<bool> got_rel(static_cast<std::size_t>(p), false);
  std::vector<bool> got_het(static_cast<std::size_t>(p), false);
  for (int k : fit.selected_relevant) got_rel[static_cast<std::size_t>(k)] = true;
  for (int k : fit.selected_heterogeneous) got_het[static_cast<std::size_t>(k)] = true;

  int fp = 0, tp = 0, fh = 0, n_common = 0;
  const int p0 = static_cast<int>(truth.s_relevant.size());
  for (Eigen::Index k = 0; k < p; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    if (true_rel[ks]) {
      if (got_rel[ks]) ++tp;
      if (!true_het[ks]) {
        ++n_common;
        if (got_het[ks]) ++fh;
      }
    } else if (got_rel[ks]) {
      ++fp;
    }
  }
  const int n_irrelevant = static_cast<int>(p) - p0;
  report.fpr = n_irrelevant > 0 ? 100.0 * fp / n_irrelevant : 0.0;
  report.tpr = p0 > 0 ? 100.0 * tp / p0 : 100.0;
  if (n_common > 0) report.fhr = 100.0 * fh / n_common;
  return report;
}

std::string method_name(const MethodSpec& method) {
  std::string base = method.form == PenaltyForm::effects ? "effects" : "component";
  return base + (method.adaptive ? "-adaptive" : "-lasso");
}

std::optional<MethodSpec> parse_method(const std::string& name) {
  for (PenaltyForm form : {PenaltyForm::effects, PenaltyForm::component})
    for (bool adaptive : {true, false}) {
      MethodSpec spec{form, adaptive};
      if (method_name(spec) == name) return spec;
    }
  return std::nullopt;
}

namespace {

Aggregate aggregate_of(const std::vector<double>& values) {
  Aggregate a;
  a.count = static_cast<int>(values.size());
  if (a.count == 0) return a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / a.count;
  if (a.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.se = std::sqrt(ss / (a.count - 1)) / std::sqrt(static_cast<double>(a.count));
  }
  return a;
}

}  // namespace

ExperimentResult run_experiment(const SimDesign& design, int reps,
                                const TuneGrid& grid, const FitConfig& config,
                                const std::vector<MethodSpec>& methods,
                                int n_workers) {
  design.validate();
  grid.validate();
  if (reps < 1) throw std::invalid_argument("experiment: need at least one replication");
  if (methods.empty()) throw std::invalid_argument("experiment: no methods requested");

  struct FormPlan {
    PenaltyForm form;
    bool want_adaptive = false;
    bool want_plain = false;
  };
  std::vector<FormPlan> plans;
  for (const MethodSpec& ms : methods) {
    auto it = std::find_if(plans.begin(), plans.end(),
                           [&](const FormPlan& fp) { return fp.form == ms.form; });
    if (it == plans.end()) {
      plans.push_back({ms.form, ms.adaptive, !ms.adaptive});
    } else {
      (ms.adaptive ? it->want_adaptive : it->want_plain) = true;
    }
  }

  // records[method index][rep]
  std::vector<std::vector<ReplicationRecord>> records(
      methods.size(), std::vector<ReplicationRecord>(static_cast<std::size_t>(reps)));

  auto run_rep = [&](int r) {
    SimDesign rep_design = design;
    rep_design.seed = derive_stream(design.seed, static_cast<std::uint64_t>(r));
    FitConfig cfg = config;
    cfg.seed = derive_stream(design.seed, 0x40000000ULL + static_cast<std::uint64_t>(r));

    Dataset data;
    GroundTruth truth;
    try {
      auto generated = generate(rep_design);
      data = std::move(generated.first);
      truth = std::move(generated.second);
    } catch (const std::exception& e) {
      for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        auto& rec = records[mi][static_cast<std::size_t>(r)];
        rec.rep = r;
        rec.error = e.what();
      }
      return;
    }

    for (const FormPlan& plan : plans) {
      std::optional<FitResult> fit_adaptive, fit_plain;
      std::string error;
      try {
        TuneGrid g = grid;
        if (!plan.want_adaptive) g.gamma = 0.0;
        TuneResult tuned = plan.form == PenaltyForm::effects
                               ? tune(data, g, cfg, 1)
                               : tune_component(data, g, cfg, 1);
        if (plan.want_adaptive) fit_adaptive = std::move(tuned.best);
        if (plan.want_plain) fit_plain = std::move(tuned.best_nonadaptive);
      } catch (const std::exception& e) {
        error = e.what();
      }
      for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        if (methods[mi].form != plan.form) continue;
        auto& rec = records[mi][static_cast<std::size_t>(r)];
        rec.rep = r;
        const auto& fit = methods[mi].adaptive ? fit_adaptive : fit_plain;
        if (!fit) {
          rec.error = error.empty() ? "fit unavailable" : error;
          continue;
        }
        rec.ok = true;
        rec.report = evaluate(*fit, truth);
        rec.bic = bic(*fit, data.n());
        rec.selected_m = static_cast<int>(fit->model.n_components());
      }
    }
  };
  parallel_for(reps, resolve_workers(n_workers), run_rep);

  ExperimentResult result;
  result.design = design;
  result.reps = reps;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodSummary summary;
    summary.method = methods[mi];
    summary.reps = std::move(records[mi]);
    std::vector<double> mse_b, mse_s, mse_pi, fpr, tpr, fhr;
    for (const ReplicationRecord& rec : summary.reps) {
      if (!rec.ok) {
        ++summary.n_failed;
        continue;
      }
      mse_b.push_back(rec.report.mse_b);
      mse_s.push_back(rec.report.mse_sigma2);
      mse_pi.push_back(rec.report.mse_pi);
      fpr.push_back(rec.report.fpr);
      tpr.push_back(rec.report.tpr);
      if (rec.report.fhr) fhr.push_back(*rec.report.fhr);
      ++summary.selected_m_counts[rec.selected_m];
    }
    summary.mse_b = aggregate_of(mse_b);
    summary.mse_sigma2 = aggregate_of(mse_s);
    summary.mse_pi = aggregate_of(mse_pi);
    summary.fpr = aggregate_of(fpr);
    summary.tpr = aggregate_of(tpr);
    summary.fhr = aggregate_of(fhr);
    result.methods.push_back(std::move(summary));
  }
  return result;
}

}  // namespace mixhp
