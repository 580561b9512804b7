#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace momentum {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of inputs do not line up (matrix sizes, vector lengths, width chains).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition on a scalar argument does not hold.
class DomainError : public Error {
 public:
  using Error::Error;
};

inline std::span<const double> view(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Runs body(i) for i in [0, n) on up to `workers` threads. Each index runs
// exactly once; callers write results into per-index slots.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

// Logical core count, at least 1.
std::size_t default_workers();

// Shortest decimal text that reads back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_double(double v);

}  // namespace momentum
