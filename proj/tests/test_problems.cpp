#include <doctest.h>

#include <cmath>

#include "momentum/problems.hpp"
#include "support/fd.hpp"
#include "support/gen.hpp"

using namespace momentum;

namespace {

double fd_gradient_error(const Problem& p, const Vector& x) {
  const Vector g = p.gradient(x);
  const Vector ref = fd::gradient([&](const Vector& y) { return p.value(y); }, x);
  return (g - ref).norm() / std::max(1e-8, std::max(g.norm(), ref.norm()));
}

ProblemPtr small_sensing(gen::Rng& rng, int m, int n, int count, int rank) {
  std::vector<Matrix> A;
  Vector b(count);
  const Matrix planted = rng.matrix(m, rank) * rng.matrix(n, rank).transpose();
  for (int i = 0; i < count; ++i) {
    A.push_back(rng.matrix(m, n));
    b[i] = (A.back().array() * planted.array()).sum();
  }
  return matrix_sensing(A, b, rank);
}

}  // namespace

TEST_CASE("fixture values") {
  const auto q = synthetic(Fixture::quadratic);
  CHECK(q->dim() == 2);
  CHECK(q->value(Vector::Constant(2, 2.0)) == 4.0);
  const auto iq = synthetic("indefinite_quadratic");
  CHECK(iq->value((Vector(2) << 3.0, 1.0).finished()) == 4.0);
  const auto qu = synthetic(Fixture::quartic, 3);
  CHECK(qu->value((Vector(3) << 1.0, -2.0, 0.5).finished()) == 1.0 + 16.0 + 0.0625);
  CHECK(qu->gradient((Vector(3) << 1.0, -2.0, 0.5).finished()).isApprox(
      (Vector(3) << 4.0, -32.0, 0.5).finished()));
  CHECK_THROWS_AS(synthetic("indefinite_quadratic", 3), DimensionError);
  CHECK_THROWS_AS(synthetic("cubic"), DomainError);
  CHECK(fixture_name(parse_fixture("quartic")) == "quartic");
}

TEST_CASE("matrix factorization value against a direct product") {
  gen::Rng rng(1);
  const Matrix M = rng.matrix(4, 3);
  const auto p = matrix_factorization(M, 2);
  CHECK(p->dim() == (4 + 3) * 2);
  const Matrix X = rng.matrix(4, 2), Y = rng.matrix(3, 2);
  const double expect = (X * Y.transpose() - M).squaredNorm();
  CHECK(p->value(pack_factors(X, Y)) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("linear network value against a direct product") {
  gen::Rng rng(2);
  const std::vector<int> widths{2, 3, 4, 2};
  const Matrix Xb = rng.matrix(2, 5), Yb = rng.matrix(2, 5);
  const auto p = linear_network(Xb, Yb, widths);
  std::vector<Matrix> W{rng.matrix(3, 2), rng.matrix(4, 3), rng.matrix(2, 4)};
  const double expect = (W[2] * W[1] * W[0] * Xb - Yb).squaredNorm();
  CHECK(p->value(pack_layers(W)) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("gradients match central differences") {
  gen::Rng rng(3);
  std::vector<ProblemPtr> problems{
      synthetic(Fixture::quadratic, 5),
      synthetic(Fixture::indefinite_quadratic),
      synthetic(Fixture::quartic, 4),
      matrix_factorization(rng.matrix(4, 3), 2),
      small_sensing(rng, 3, 3, 6, 1),
      linear_network(rng.matrix(2, 6), rng.matrix(3, 6), {2, 4, 3}),
      shifted(synthetic(Fixture::quadratic, 3), 7.0),
  };
  for (const auto& p : problems) {
    CAPTURE(p->name());
    for (int t = 0; t < 25; ++t) {
      const Vector x = rng.vector(static_cast<Eigen::Index>(p->dim()));
      CHECK(fd_gradient_error(*p, x) < 1e-6);
    }
  }
}

TEST_CASE("hessian-vector products match differences of the gradient") {
  gen::Rng rng(4);
  std::vector<ProblemPtr> problems{
      synthetic(Fixture::quadratic, 3),
      synthetic(Fixture::indefinite_quadratic),
      synthetic(Fixture::quartic, 3),
      matrix_factorization(rng.matrix(3, 3), 2),
      small_sensing(rng, 3, 2, 5, 1),
      linear_network(rng.matrix(2, 4), rng.matrix(2, 4), {2, 3, 2}),
  };
  for (const auto& p : problems) {
    CAPTURE(p->name());
    REQUIRE(p->has_hessian_vec());
    for (int t = 0; t < 10; ++t) {
      const Vector x = rng.vector(static_cast<Eigen::Index>(p->dim()));
      const Vector v = rng.vector(static_cast<Eigen::Index>(p->dim()));
      const Vector hv = p->hessian_vec(x, v);
      const Vector ref = fd::directional([&](const Vector& y) { return p->gradient(y); }, x, v);
      CHECK((hv - ref).norm() <= 1e-6 * std::max(1.0, ref.norm()));
    }
  }
}

TEST_CASE("shifted problems keep the gradient") {
  const auto base = synthetic(Fixture::quartic, 2);
  const auto s = shifted(base, -3.0);
  const Vector x = (Vector(2) << 0.3, -0.7).finished();
  CHECK(s->value(x) == base->value(x) - 3.0);
  CHECK(s->gradient(x) == base->gradient(x));
  CHECK(s->name() == "quartic+const");
}

TEST_CASE("packing round trips") {
  gen::Rng rng(5);
  const Matrix X = rng.matrix(4, 2), Y = rng.matrix(3, 2);
  const auto [X2, Y2] = unpack_factors(pack_factors(X, Y), 4, 3, 2);
  CHECK(X2 == X);
  CHECK(Y2 == Y);
  CHECK_THROWS_AS(unpack_factors(Vector::Zero(13), 4, 3, 2), DimensionError);

  std::vector<Matrix> W{rng.matrix(3, 2), rng.matrix(1, 3)};
  const auto W2 = unpack_layers(pack_layers(W), {2, 3, 1});
  CHECK(W2[0] == W[0]);
  CHECK(W2[1] == W[1]);
  CHECK_THROWS_AS(unpack_layers(Vector::Zero(10), {2, 3, 1}), DimensionError);
}

TEST_CASE("factories validate their inputs") {
  CHECK_THROWS_AS(matrix_factorization(Matrix::Identity(2, 2), 0), DomainError);
  CHECK_THROWS_AS(matrix_sensing({}, Vector(), 1), DimensionError);
  CHECK_THROWS_AS(matrix_sensing({Matrix::Identity(2, 2)}, Vector::Zero(2), 1), DimensionError);
  CHECK_THROWS_AS(linear_network(Matrix::Zero(2, 3), Matrix::Zero(2, 4), {2, 2}), DimensionError);
  CHECK_THROWS_AS(linear_network(Matrix::Zero(2, 3), Matrix::Zero(2, 3), {3, 2}), DimensionError);
  const auto q = synthetic(Fixture::quadratic, 2);
  CHECK_THROWS_AS(q->value(Vector::Zero(3)), DimensionError);
}

TEST_CASE("analytic bounds dominate the sampled quotients") {
  gen::Rng rng(6);
  std::vector<ProblemPtr> problems{synthetic(Fixture::quadratic, 3), synthetic(Fixture::quartic, 2),
                                   matrix_factorization(rng.matrix(3, 2), 1)};
  LipschitzOptions raw;
  raw.safety = 1.0;
  for (const auto& p : problems) {
    CAPTURE(p->name());
    for (int t = 0; t < 5; ++t) {
      const Vector c = rng.vector(static_cast<Eigen::Index>(p->dim()), 0.5);
      const double r = rng.uniform(0.1, 2.0);
      raw.seed = static_cast<std::uint64_t>(t);
      const auto sampled = estimate_lipschitz(*p, c, r, raw);
      const auto exact = p->analytic_lipschitz(c, sampled.radius);
      REQUIRE(exact.has_value());
      CHECK(sampled.M <= exact->M * (1.0 + 1e-9));
      CHECK(sampled.L <= exact->L * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("sampled estimate is monotone in the radius") {
  gen::Rng rng(7);
  const auto p = linear_network(rng.matrix(2, 4), rng.matrix(2, 4), {2, 3, 2});
  const Vector c = Vector::Zero(static_cast<Eigen::Index>(p->dim()));
  LipschitzOptions opt;
  opt.seed = 42;
  double prev_M = 0.0, prev_L = 0.0;
  for (double r : {0.01, 0.1, 0.5, 1.0, 3.0}) {
    const auto b = estimate_lipschitz(*p, c, r, opt);
    CHECK(b.radius >= r);
    CHECK(b.M >= prev_M);
    CHECK(b.L >= prev_L);
    prev_M = b.M;
    prev_L = b.L;
  }
  CHECK(lipschitz_grid_radius(1.0) == 1.0);
  CHECK(lipschitz_grid_radius(1.1) == doctest::Approx(std::pow(2.0, 0.25)));
}

TEST_CASE("quadratic sampled estimate is exact up to the safety factor") {
  const auto p = synthetic(Fixture::quadratic, 4);
  const auto b = estimate_lipschitz(*p, Vector::Zero(4), 1.0);
  CHECK(b.M == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(b.L <= 2.0 * (1.0 + 1e-12));
  CHECK(b.L > 1.0);
  LipschitzOptions analytic;
  analytic.mode = LipschitzMode::analytic;
  CHECK_THROWS(estimate_lipschitz(*linear_network(Matrix::Ones(1, 2), Matrix::Ones(1, 2), {1, 1}),
                                  Vector::Zero(1), 1.0, analytic));
}
