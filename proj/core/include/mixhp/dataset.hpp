#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mixhp {

inline constexpr const char* kInterceptName = "(intercept)";

// Regression data: response vector y and n x p predictor matrix X.
// Columns flagged exempt are excluded from penalization (intercept,
// adjustment controls).
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<std::string> predictor_names;  // size p
  std::vector<bool> exempt;                  // size p

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }

  // Fills default names (x1..xp) and all-false exempt flags.
  static Dataset make(Eigen::VectorXd y, Eigen::MatrixXd X,
                      std::vector<std::string> names = {},
                      std::vector<bool> exempt = {});

  // Throws std::invalid_argument on dimension mismatch, non-finite
  // entries, or a named intercept column that is not identically one.
  void validate() const;
};

// Prepends an all-ones column named "(intercept)", flagged exempt.
Dataset with_intercept(Dataset d);

}  // namespace mixhp
