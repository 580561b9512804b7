#pragma once
// Benchmark objectives and test fixtures.
//
// Every problem takes a flat variable vector. Matrix problems document their
// block layout: blocks are stored one after another, each block column-major.
//
//   matrix_factorization, matrix_sensing:  x = [vec(X) ; vec(Y)],  X m-by-r, Y n-by-r
//   linear_network:                        x = [vec(W_1) ; ... ; vec(W_l)], W_j n_j-by-n_{j-1}
//
// Problems are immutable once built and may be evaluated from several threads.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "momentum/common.hpp"

namespace momentum {

// L bounds the gradient norm (a Lipschitz constant of f) and M the Lipschitz
// modulus of the gradient, both on the closed ball B(center, radius).
struct LipschitzBounds {
  double L = 0.0;
  double M = 0.0;
  double radius = 0.0;
};

class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;

  virtual bool has_hessian_vec() const { return false; }
  // Directional derivative of the gradient at x along v. Throws if unsupported.
  virtual Vector hessian_vec(const Vector& x, const Vector& v) const;

  // Radius of a ball around the origin on which sampling and Lipschitz
  // estimation are meaningful for this instance.
  virtual double suggested_box() const = 0;

  // Closed-form bounds on B(center, radius) when the problem has them.
  virtual std::optional<LipschitzBounds> analytic_lipschitz(const Vector& center,
                                                            double radius) const;

 protected:
  void check_dim(const Vector& x) const;
};

using ProblemPtr = std::shared_ptr<const Problem>;

// A problem shifted by a constant: same gradient, value + offset.
ProblemPtr shifted(ProblemPtr base, double offset);

// ||X Y^T - M||_F^2
ProblemPtr matrix_factorization(const Matrix& target, int rank);

// sum_i (<A_i, X Y^T>_F - b_i)^2
ProblemPtr matrix_sensing(std::vector<Matrix> sensing, const Vector& measurements, int rank);

// ||W_l ... W_1 Xbar - Ybar||_F^2 with widths = {n_0, ..., n_l}
ProblemPtr linear_network(const Matrix& inputs, const Matrix& targets, std::vector<int> widths);

enum class Fixture {
  quadratic,             // 1/2 ||x||^2
  indefinite_quadratic,  // 1/2 (x_1^2 - x_2^2), dim 2
  quartic,               // sum_i x_i^4
};

ProblemPtr synthetic(Fixture fixture, std::size_t dim = 0);
ProblemPtr synthetic(std::string_view name, std::size_t dim = 0);
Fixture parse_fixture(std::string_view name);
std::string_view fixture_name(Fixture fixture);

// Block packing helpers for the factorization-type problems.
Vector pack_factors(const Matrix& X, const Matrix& Y);
std::pair<Matrix, Matrix> unpack_factors(const Vector& x, int m, int n, int r);
Vector pack_layers(const std::vector<Matrix>& layers);
std::vector<Matrix> unpack_layers(const Vector& x, const std::vector<int>& widths);

enum class LipschitzMode { sampled, analytic };

struct LipschitzOptions {
  LipschitzMode mode = LipschitzMode::sampled;
  // max{|beta|, |gamma|}; the estimate covers B(center, (1 + 2 * spread) * radius).
  double spread = 0.0;
  std::uint64_t seed = 0;
  double safety = 2.0;
  int pairs_per_level = 16;
  int power_steps = 3;
};

// Estimates (L, M) around `center`. Sampled mode snaps the enlarged radius up
// to a fixed geometric grid and samples every grid shell below it, so the
// sample set only grows with the radius and the estimate is monotone in it.
LipschitzBounds estimate_lipschitz(const Problem& p, const Vector& center, double radius,
                                   const LipschitzOptions& options = {});

// Radius actually covered by sampled estimation for a requested enlarged radius.
double lipschitz_grid_radius(double radius);

}  // namespace momentum
