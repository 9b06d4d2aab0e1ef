#include "onebit/model.hpp"

#include <cmath>
#include <stdexcept>

namespace onebit {

std::optional<std::string> validate_prior(const SignalPriorParams& lambda) {
  if (!std::isfinite(lambda.kappa) || lambda.kappa < 0.0 || lambda.kappa > 1.0)
    return "kappa out of range";
  if (lambda.components.empty()) return "no mixture components";
  double wsum = 0.0;
  for (const auto& c : lambda.components) {
    if (!std::isfinite(c.weight) || c.weight < 0.0) return "negative component weight";
    if (!std::isfinite(c.mean)) return "non-finite component mean";
    if (!std::isfinite(c.variance) || c.variance <= 0.0) return "nonpositive component variance";
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-9) return "weights do not sum to 1";
  return std::nullopt;
}

void require_valid_prior(const SignalPriorParams& lambda) {
  if (auto err = validate_prior(lambda)) throw std::invalid_argument("invalid prior: " + *err);
}

Problem build_problem(Eigen::MatrixXd A, Eigen::VectorXd y) {
  if (A.rows() != y.size())
    throw std::invalid_argument("dimension mismatch: A has " + std::to_string(A.rows()) +
                                " rows but y has " + std::to_string(y.size()) + " entries");
  if (A.rows() == 0 || A.cols() == 0) throw std::invalid_argument("empty measurement matrix");
  if (!A.allFinite()) throw std::invalid_argument("non-finite entry in A");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 1.0 && y[i] != -1.0)
      throw std::invalid_argument("non-sign entry in y at index " + std::to_string(i));
  }
  Problem p;
  p.frob_sq = A.squaredNorm();
  p.A = std::move(A);
  p.y = std::move(y);
  return p;
}

}  // namespace onebit
