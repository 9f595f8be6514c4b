#include "mixhp/tuning.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "mixhp/errors.hpp"
#include "mixhp/parallel.hpp"
#include "mixhp/rng.hpp"

namespace mixhp {

namespace {

constexpr double kWeightCap = 1e8;

// Preference order for grid cells: successful before failed, converged
// before not, then smaller BIC, smaller m, larger lambda.
bool better_cell(const TuneCell& a, const TuneCell& b) {
  if (a.failed) return false;
  if (b.failed) return true;
  if (a.converged != b.converged) return a.converged;
  if (a.bic != b.bic) return a.bic < b.bic;
  if (a.m != b.m) return a.m < b.m;
  return a.lambda > b.lambda;
}

struct EffectsForm {
  using Pen = PenaltySpec;
  static Pen unit_penalty(int m, Eigen::Index p, const std::vector<bool>& exempt) {
    return PenaltySpec::lasso(m, p, 0.0, exempt);
  }
  static Pen adaptive_penalty(const FitResult& source, double gamma,
                              const std::vector<bool>& exempt) {
    return adaptive_spec(source.model, gamma, 0.0, exempt);
  }
  static FitResult fit(const Dataset& data, const Pen& pen, const FitConfig& cfg,
                       const FitResult* warm) {
    std::optional<EffectsModel> init;
    if (warm != nullptr) init = warm->model;
    return gem_fit(data, pen, cfg, init);
  }
  static void store_penalty(TuneResult& out, const Pen& pen) {
    out.best_penalty = pen;
  }
};

struct ComponentForm {
  using Pen = ComponentPenalty;
  static Pen unit_penalty(int m, Eigen::Index p, const std::vector<bool>& exempt) {
    return ComponentPenalty::lasso(m, p, 0.0, exempt);
  }
  static Pen adaptive_penalty(const FitResult& source, double gamma,
                              const std::vector<bool>& exempt) {
    const ScaledModel& scaled = source.component_model
                                    ? *source.component_model
                                    : effects_to_scaled(source.model);
    AdaptiveWeights aw = adaptive_weights_component(scaled, gamma);
    Pen pen;
    pen.gamma = gamma;
    pen.weights = std::move(aw.weights);
    pen.excluded = std::move(aw.excluded);
    pen.exempt = exempt;
    for (Eigen::Index k = 0; k < pen.weights.cols(); ++k) {
      if (exempt[static_cast<std::size_t>(k)]) {
        pen.weights.col(k).setZero();
        pen.excluded.col(k).setConstant(false);
      }
    }
    return pen;
  }
  static FitResult fit(const Dataset& data, const Pen& pen, const FitConfig& cfg,
                       const FitResult* warm) {
    std::optional<ScaledModel> init;
    if (warm != nullptr && warm->component_model) init = warm->component_model;
    return gem_fit_component(data, pen, cfg, init);
  }
  static void store_penalty(TuneResult&, const Pen&) {}
};

template <class Form>
TuneResult tune_impl(const Dataset& data, const TuneGrid& grid,
                     const FitConfig& config, int n_workers) {
  data.validate();
  grid.validate();
  const std::vector<double> lambdas = lambda_grid(data, grid);

  struct Row {
    int m;
    VarianceMode mode;
  };
  std::vector<Row> rows;
  for (int m : grid.component_range)
    for (VarianceMode mode : grid.variance_modes) rows.push_back({m, mode});

  struct RowOut {
    std::vector<TuneCell> cells;
    std::optional<FitResult> best1;
    TuneCell best1_cell;
    typename Form::Pen best1_pen;
    std::optional<FitResult> best2;
    TuneCell best2_cell;
    typename Form::Pen best2_pen;
  };
  std::vector<RowOut> outs(rows.size());

  // Fits saturated beyond this are meaningless and expensive; the path
  // stops early the way lasso path solvers cap the active set.
  const auto nnz_cap =
      static_cast<int>(0.75 * static_cast<double>(data.n()));

  auto sweep = [&](const Row& row, const FitConfig& cfg, typename Form::Pen pen,
                   int stage, const FitResult* path_start, RowOut& out) {
    std::optional<FitResult> prev;
    bool saturated = false;
    for (const double l : lambdas) {
      pen.lambda = l;
      TuneCell cell;
      cell.m = row.m;
      cell.mode = row.mode;
      cell.stage = stage;
      cell.lambda = l;
      if (saturated) {
        cell.failed = true;
        cell.error = "path saturated";
        out.cells.push_back(cell);
        continue;
      }
      try {
        const FitResult* warm = prev ? &*prev : path_start;
        // Stage 1 keeps a few fresh screening starts per warm cell so a
        // better basin discovered anywhere on the path can take over the
        // chain; stage 2 purely refines the stage-1 winner's basin.
        FitConfig cell_cfg = cfg;
        if (stage == 2)
          cell_cfg.n_restarts = 0;
        else if (warm != nullptr)
          cell_cfg.n_restarts = std::min(cfg.n_restarts, 4);
        FitResult fit = Form::fit(data, pen, cell_cfg, warm);
        cell.loglik = fit.loglik;
        cell.df = degrees_of_freedom(fit);
        cell.bic = bic(fit, data.n());
        cell.converged = fit.converged;
        auto& best = stage == 1 ? out.best1 : out.best2;
        auto& best_cell = stage == 1 ? out.best1_cell : out.best2_cell;
        if (!best || better_cell(cell, best_cell)) {
          best = fit;
          best_cell = cell;
          (stage == 1 ? out.best1_pen : out.best2_pen) = pen;
        }
        if (fit.nnz_coefs >= nnz_cap) saturated = true;
        prev = std::move(fit);
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
        // a failed cell breaks the warm chain; the next one starts cold
        prev.reset();
      }
      out.cells.push_back(cell);
    }
  };

  auto run_row = [&](int ri) {
    const Row row = rows[static_cast<std::size_t>(ri)];
    RowOut& out = outs[static_cast<std::size_t>(ri)];
    FitConfig cfg = config;
    cfg.equal_variance = row.mode == VarianceMode::equal;
    cfg.seed = derive_stream(config.seed, 0x7000u + static_cast<unsigned>(ri));

    sweep(row, cfg, Form::unit_penalty(row.m, data.p(), data.exempt), 1, nullptr, out);
    if (grid.gamma > 0.0 && out.best1) {
      sweep(row, cfg, Form::adaptive_penalty(*out.best1, grid.gamma, data.exempt), 2,
            &*out.best1, out);
    }
  };
  parallel_for(static_cast<int>(rows.size()), resolve_workers(n_workers), run_row);

  TuneResult result;
  const int winning_stage = grid.gamma > 0.0 ? 2 : 1;
  std::optional<TuneCell> best_cell, best1_cell;
  std::size_t best_row = 0, best1_row = 0;
  for (std::size_t ri = 0; ri < outs.size(); ++ri) {
    RowOut& out = outs[ri];
    result.table.insert(result.table.end(), out.cells.begin(), out.cells.end());
    if (out.best1 && (!best1_cell || better_cell(out.best1_cell, *best1_cell))) {
      best1_cell = out.best1_cell;
      best1_row = ri;
    }
    const auto& rb = winning_stage == 1 ? out.best1 : out.best2;
    const auto& rbc = winning_stage == 1 ? out.best1_cell : out.best2_cell;
    if (rb && (!best_cell || better_cell(rbc, *best_cell))) {
      best_cell = rbc;
      best_row = ri;
    }
  }
  if (!best_cell || !best1_cell)
    throw TuneFailure("tune: no grid cell produced a fit", result.table);

  result.best_cell = *best_cell;
  result.best = winning_stage == 1 ? *outs[best_row].best1 : *outs[best_row].best2;
  Form::store_penalty(result, winning_stage == 1 ? outs[best_row].best1_pen
                                                 : outs[best_row].best2_pen);
  result.best_nonadaptive = *outs[best1_row].best1;
  result.best_nonadaptive_cell = *best1_cell;
  return result;
}

}  // namespace

void TuneGrid::validate() const {
  if (component_range.empty())
    throw std::invalid_argument("tune grid: empty component range");
  for (int m : component_range)
    if (m < 1) throw std::invalid_argument("tune grid: component counts must be >= 1");
  if (lambda_count < 2)
    throw std::invalid_argument("tune grid: need at least two lambda values");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0))
    throw std::invalid_argument("tune grid: lambda_min_ratio must lie in (0,1)");
  if (variance_modes.empty())
    throw std::invalid_argument("tune grid: no variance modes");
  if (gamma < 0.0) throw std::invalid_argument("tune grid: gamma must be nonnegative");
}

double lambda_max(const Dataset& data) {
  data.validate();
  const double ynorm = data.y.norm();
  if (ynorm <= 0.0) throw DegenerateDataError("lambda_max: zero response norm");
  const double scale = std::sqrt(static_cast<double>(data.n())) * ynorm;
  double best = 0.0;
  for (Eigen::Index k = 0; k < data.p(); ++k) {
    if (data.exempt[static_cast<std::size_t>(k)]) continue;
    best = std::max(best, std::abs(data.y.dot(data.X.col(k))) / scale);
  }
  return best;
}

std::vector<double> lambda_grid(const Dataset& data, const TuneGrid& grid) {
  grid.validate();
  const double lmax = lambda_max(data);
  if (lmax <= 0.0)
    throw DegenerateDataError("lambda_grid: all penalized columns orthogonal to y");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(grid.lambda_count));
  const double span = std::log(grid.lambda_min_ratio);
  for (int i = 0; i < grid.lambda_count; ++i) {
    const double frac = static_cast<double>(i) / (grid.lambda_count - 1);
    out.push_back(lmax * std::exp(span * frac));
  }
  return out;
}

namespace {

AdaptiveWeights weights_from(const Eigen::MatrixXd& coefs, double gamma) {
  AdaptiveWeights out;
  out.weights = Eigen::MatrixXd::Ones(coefs.rows(), coefs.cols());
  out.excluded = BoolGrid::Constant(coefs.rows(), coefs.cols(), false);
  if (gamma == 0.0) return out;
  for (Eigen::Index r = 0; r < coefs.rows(); ++r) {
    for (Eigen::Index c = 0; c < coefs.cols(); ++c) {
      const double v = std::abs(coefs(r, c));
      if (v == 0.0) {
        out.weights(r, c) = 0.0;
        out.excluded(r, c) = true;
      } else {
        out.weights(r, c) = std::min(std::pow(v, -gamma), kWeightCap);
      }
    }
  }
  return out;
}

}  // namespace

AdaptiveWeights adaptive_weights(const EffectsModel& initial, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("adaptive weights: negative gamma");
  Eigen::MatrixXd block(initial.n_components() + 1, initial.n_predictors());
  block.row(0) = initial.common_effects.transpose();
  block.bottomRows(initial.n_components()) = initial.cluster_effects;
  return weights_from(block, gamma);
}

AdaptiveWeights adaptive_weights_component(const ScaledModel& initial, double gamma) {
  if (gamma < 0.0) throw std::invalid_argument("adaptive weights: negative gamma");
  return weights_from(initial.scaled_coefs.transpose(), gamma);
}

PenaltySpec adaptive_spec(const EffectsModel& initial, double gamma, double lambda,
                          const std::vector<bool>& exempt) {
  if (exempt.size() != static_cast<std::size_t>(initial.n_predictors()))
    throw std::invalid_argument("adaptive_spec: exempt flags do not match p");
  AdaptiveWeights aw = adaptive_weights(initial, gamma);
  PenaltySpec pen;
  pen.lambda = lambda;
  pen.gamma = gamma;
  pen.weights = std::move(aw.weights);
  pen.excluded = std::move(aw.excluded);
  pen.exempt = exempt;
  for (Eigen::Index k = 0; k < pen.weights.cols(); ++k) {
    if (exempt[static_cast<std::size_t>(k)]) {
      pen.weights.col(k).setZero();
      pen.excluded.col(k).setConstant(false);
    }
  }
  return pen;
}

double degrees_of_freedom(const FitResult& fit) {
  const auto m = static_cast<double>(fit.model.n_components());
  const double variance_df = fit.equal_variance ? 1.0 : m;
  double df = (m - 1.0) + variance_df + static_cast<double>(fit.nnz_coefs);
  if (fit.form == PenaltyForm::effects)
    df -= static_cast<double>(fit.selected_heterogeneous.size());
  return df;
}

double bic(const FitResult& fit, Eigen::Index n) {
  return -2.0 * fit.loglik +
         std::log(static_cast<double>(n)) * degrees_of_freedom(fit);
}

TuneResult tune(const Dataset& data, const TuneGrid& grid, const FitConfig& config,
                int n_workers) {
  return tune_impl<EffectsForm>(data, grid, config, n_workers);
}

TuneResult tune_component(const Dataset& data, const TuneGrid& grid,
                          const FitConfig& config, int n_workers) {
  return tune_impl<ComponentForm>(data, grid, config, n_workers);
}

}  // namespace mixhp
