#pragma once

#include <limits>
#include <string>
#include <vector>

#include "mixhp/dataset.hpp"
#include "mixhp/em.hpp"
#include "mixhp/penalty.hpp"

namespace mixhp {

enum class VarianceMode { unequal, equal };

struct TuneGrid {
  std::vector<int> component_range{1, 2, 3};
  int lambda_count = 50;
  double lambda_min_ratio = 1e-3;
  std::vector<VarianceMode> variance_modes{VarianceMode::unequal};
  double gamma = 1.0;  // adaptive weight exponent; 0 runs the unit-weight stage only

  void validate() const;
};

struct TuneCell {
  int m = 0;
  VarianceMode mode = VarianceMode::unequal;
  int stage = 1;  // 1 = unit weights, 2 = adaptive weights
  double lambda = 0.0;
  double bic = std::numeric_limits<double>::infinity();
  double df = 0.0;
  double loglik = 0.0;
  bool converged = false;
  bool failed = false;
  std::string error;
};

struct TuneResult {
  FitResult best;       // global BIC minimum (stage 2 when gamma > 0)
  TuneCell best_cell;
  PenaltySpec best_penalty;  // weights the winner was fitted with (effects form)
  FitResult best_nonadaptive;  // stage-1 winner; equals best when gamma == 0
  TuneCell best_nonadaptive_cell;
  std::vector<TuneCell> table;
};

// Thrown when no grid cell produced a usable fit; carries the per-cell
// diagnostics.
struct TuneFailure : std::runtime_error {
  explicit TuneFailure(std::string msg, std::vector<TuneCell> cells)
      : std::runtime_error(std::move(msg)), table(std::move(cells)) {}
  std::vector<TuneCell> table;
};

// Largest penalty of interest: max over penalized columns of
// |<y, X_k>| / (sqrt(n) ||y||).
double lambda_max(const Dataset& data);

// lambda_count values from lambda_max down to lambda_max * lambda_min_ratio,
// equally spaced on the log scale, descending (warm-start friendly).
std::vector<double> lambda_grid(const Dataset& data, const TuneGrid& grid);

struct AdaptiveWeights {
  Eigen::MatrixXd weights;
  BoolGrid excluded;
};

// w = |initial coefficient|^-gamma entrywise, capped at 1e8; coefficients
// that are exactly zero become hard exclusions. gamma = 0 gives unit
// weights and no exclusions.
AdaptiveWeights adaptive_weights(const EffectsModel& initial, double gamma);
AdaptiveWeights adaptive_weights_component(const ScaledModel& initial, double gamma);

// Full penalty built from adaptive weights; exempt columns stay unpenalized
// and are never hard-excluded.
PenaltySpec adaptive_spec(const EffectsModel& initial, double gamma, double lambda,
                          const std::vector<bool>& exempt);

// Mixture df plus the nonzero coefficient count, discounted by one per
// heterogeneous predictor in the effects form (the sum-to-zero constraint
// removes one free parameter from each such predictor).
double degrees_of_freedom(const FitResult& fit);

double bic(const FitResult& fit, Eigen::Index n);

// Two-stage grid search: unit-weight paths over (m, variance mode, lambda),
// then adaptive re-sweeps weighted by each row's BIC-best stage-1 fit.
// Winner is the global BIC minimum among converged fits; ties break toward
// smaller m, then larger lambda.
TuneResult tune(const Dataset& data, const TuneGrid& grid, const FitConfig& config,
                int n_workers = 0);

// Same search for the component-form baseline.
TuneResult tune_component(const Dataset& data, const TuneGrid& grid,
                          const FitConfig& config, int n_workers = 0);

}  // namespace mixhp
