#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace lot {

// Absolute tolerance for geometric comparisons (endpoints, affinity residuals).
inline constexpr double kGeomTol = 1e-9;
// Absolute tolerance for probability weights (sum-to-one, marginal equality).
inline constexpr double kWeightTol = 1e-12;
// Strictness margin on the spatial Lipschitz constant of a time function.
inline constexpr double kLipschitzMargin = 1e-9;
// Edge points closer than this fraction of the edge length to an endpoint
// are identified with the vertex.
inline constexpr double kVertexSnap = 1e-12;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// Compensated summation.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

template <typename Range, typename Proj>
double kahan_sum(const Range& range, Proj proj) {
  KahanSum acc;
  for (const auto& item : range) acc.add(proj(item));
  return acc.value();
}

inline bool close(double a, double b, double tol = kGeomTol) {
  return std::abs(a - b) <= tol;
}

}  // namespace lot
