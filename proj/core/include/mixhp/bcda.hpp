#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mixhp/dataset.hpp"
#include "mixhp/penalty.hpp"

namespace mixhp {

// One penalized weighted least-squares subproblem with sum-to-zero equality
// constraints on the cluster rows: the responsibilities and inverse scales
// are frozen at their current values while the coefficient block is solved.
struct BcdaProblem {
  const Dataset& data;
  const Eigen::MatrixXd& responsibilities;  // n x m
  Eigen::VectorXd inverse_scales;           // m
  const PenaltySpec& penalty;
  double mu = 1.0;  // quadratic constraint-violation weight

  Eigen::Index n() const { return data.n(); }
  Eigen::Index p() const { return data.p(); }
  Eigen::Index m() const { return inverse_scales.size(); }
};

// Iterate of the solver: coefficient block (row 0 = common effects, rows
// 1..m = cluster deviations), constraint discrepancy vector, sweep count.
struct BcdaState {
  Eigen::MatrixXd coefs;  // (m+1) x p
  Eigen::VectorXd dual;   // p
  int cycle = 0;
};

struct BcdaOptions {
  double rel_tol = 1e-6;       // stop on relative coefficient change
  double residual_tol = 1e-6;  // and on max constraint violation
  int max_sweeps = 1000;
  bool warm_start_dual = false;  // experimental; default resets dual to zero
  bool single_sweep = false;     // one cycle only (generalized M-step mode)
  int recompute_interval = 50;   // full residual refresh cadence
  bool active_set = true;        // refine over nonzero coordinates between full sweeps
};

struct BcdaResult {
  Eigen::MatrixXd coefs;  // feasible: cluster columns re-projected at exit
  Eigen::VectorXd dual;
  bool converged = false;
  int n_sweeps = 0;
  double constraint_residual = 0.0;       // max violation before re-projection
  std::vector<int> frozen_predictors;     // zero-norm columns pinned at zero
};

double soft_threshold(double x, double t);

// Single-coordinate reference updates. They rebuild the solver caches from
// the given state, so they are O(nmp) per call; bcda_solve maintains the
// caches incrementally instead.
double update_common(Eigen::Index k, BcdaState& state, const BcdaProblem& problem);
double update_cluster(Eigen::Index j, Eigen::Index k, BcdaState& state,
                      const BcdaProblem& problem);

// Smooth loss plus weighted l1 penalty at B (the quantity the constrained
// problem minimizes).
double bcda_objective(const BcdaProblem& problem, const Eigen::MatrixXd& coefs);

// Objective augmented with (mu/2) * || cluster column sums - dual ||^2.
double bcda_augmented_objective(const BcdaProblem& problem,
                                const Eigen::MatrixXd& coefs,
                                const Eigen::VectorXd& dual);

// Cyclic coordinate descent with a per-sweep discrepancy update driving the
// cluster rows onto the sum-to-zero constraint. Deterministic sweep order.
// The dual starts at zero unless options.warm_start_dual is set and a
// warm_dual vector is supplied.
BcdaResult bcda_solve(const BcdaProblem& problem, const Eigen::MatrixXd& warm_start,
                      const BcdaOptions& options = {},
                      const Eigen::VectorXd* warm_dual = nullptr);

// Same problem and fixed points, different route: scalar updates on the
// common row and an exact solve of each cluster column's sum-to-zero
// subproblem (its multiplier is the root of a piecewise-linear function).
// Iterates stay feasible throughout, descend the objective monotonically,
// and converge much faster than the discrepancy-driven sweeps; the EM
// driver uses this for its full M-step solves.
BcdaResult constrained_cd_solve(const BcdaProblem& problem,
                                const Eigen::MatrixXd& warm_start,
                                const BcdaOptions& options = {});

}  // namespace mixhp
