#include "mixhp/dataset.hpp"

#include <stdexcept>

namespace mixhp {

Dataset Dataset::make(Eigen::VectorXd y, Eigen::MatrixXd X,
                      std::vector<std::string> names,
                      std::vector<bool> exempt) {
  Dataset d;
  d.y = std::move(y);
  d.X = std::move(X);
  const auto p = static_cast<std::size_t>(d.X.cols());
  if (names.empty()) {
    names.reserve(p);
    for (std::size_t k = 0; k < p; ++k) names.push_back("x" + std::to_string(k + 1));
  }
  if (exempt.empty()) exempt.assign(p, false);
  d.predictor_names = std::move(names);
  d.exempt = std::move(exempt);
  d.validate();
  return d;
}

void Dataset::validate() const {
  if (y.size() < 1) throw std::invalid_argument("dataset: empty response");
  if (X.rows() != y.size())
    throw std::invalid_argument("dataset: X rows do not match response length");
  if (X.cols() < 1) throw std::invalid_argument("dataset: no predictors");
  if (!y.allFinite() || !X.allFinite())
    throw std::invalid_argument("dataset: non-finite entries");
  const auto p = static_cast<std::size_t>(X.cols());
  if (predictor_names.size() != p || exempt.size() != p)
    throw std::invalid_argument("dataset: names/exempt flags do not match p");
  for (std::size_t k = 0; k < p; ++k) {
    if (predictor_names[k] == kInterceptName &&
        (X.col(static_cast<Eigen::Index>(k)).array() != 1.0).any())
      throw std::invalid_argument("dataset: intercept column is not identically one");
  }
}

Dataset with_intercept(Dataset d) {
  Dataset out;
  out.y = std::move(d.y);
  out.X.resize(d.X.rows(), d.X.cols() + 1);
  out.X.col(0).setOnes();
  out.X.rightCols(d.X.cols()) = d.X;
  out.predictor_names.reserve(d.predictor_names.size() + 1);
  out.predictor_names.push_back(kInterceptName);
  out.predictor_names.insert(out.predictor_names.end(), d.predictor_names.begin(),
                             d.predictor_names.end());
  out.exempt.reserve(d.exempt.size() + 1);
  out.exempt.push_back(true);
  out.exempt.insert(out.exempt.end(), d.exempt.begin(), d.exempt.end());
  out.validate();
  return out;
}

}  // namespace mixhp
