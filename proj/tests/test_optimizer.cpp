#include <doctest.h>

#include <cmath>
#include <sstream>

#include "momentum/optimizer.hpp"
#include "support/gen.hpp"

using namespace momentum;

namespace {
Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}
}  // namespace

TEST_CASE("single step on the quadratic by hand") {
  const auto q = synthetic(Fixture::quadratic, 1);
  const auto s = step(*q, vec({0.0}), vec({1.0}), MomentumParams::generic(0.1, 0.5, 0.25));
  CHECK(s.y_beta[0] == 1.5);
  CHECK(s.y_gamma[0] == 1.25);
  CHECK(s.grad_y_gamma[0] == 1.25);
  CHECK(s.x_next[0] == doctest::Approx(1.375).epsilon(1e-15));
  CHECK(s.finite);
}

TEST_CASE("safe step size closed form") {
  CHECK(safe_alpha(1.0, 0.5, 0.0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(safe_alpha(2.0, 0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(safe_alpha(4.0, 0.0, 0.0) == 0.25);
  CHECK(safe_alpha(1.0, 0.0, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(safe_alpha(0.0, 0.5, 0.5), DomainError);
  CHECK_THROWS_AS(safe_alpha(-1.0, 0.5, 0.5), DomainError);
}

TEST_CASE("safe step size never exceeds 1/M and shrinks with M") {
  gen::Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const double M = std::exp(rng.uniform(-5.0, 5.0));
    const double beta = rng.uniform(-0.99, 0.99), gamma = rng.uniform(-10.0, 10.0);
    const double a = safe_alpha(M, beta, gamma);
    CHECK(a > 0.0);
    CHECK(a <= 1.0 / M);
    CHECK(safe_alpha(2.0 * M, beta, gamma) == doctest::Approx(a / 2.0).epsilon(1e-14));
  }
}

TEST_CASE("parameter validation and presets") {
  CHECK_NOTHROW(MomentumParams::nesterov(0.1, 0.9).validate());
  CHECK(MomentumParams::nesterov(0.1, 0.9).gamma == 0.9);
  CHECK(MomentumParams::heavy_ball(0.1, 0.9).gamma == 0.0);
  CHECK_THROWS_AS(MomentumParams::generic(0.0, 0.5, 0.0).validate(), DomainError);
  CHECK_THROWS_AS(MomentumParams::generic(0.1, 1.0, 0.0).validate(), DomainError);
  CHECK_THROWS_AS(MomentumParams::generic(0.1, 0.5, 0.0, -1.0).validate(), DomainError);
  MomentumParams bad = MomentumParams::nesterov(0.1, 0.5);
  bad.gamma = 0.2;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK(parse_preset("heavy_ball") == Preset::heavy_ball);
  CHECK(preset_name(Preset::nesterov) == "nesterov");
  CHECK_THROWS(parse_preset("adam"));
}

TEST_CASE("zero momentum is gradient descent") {
  const auto q = synthetic(Fixture::quadratic, 2);
  const Vector x0 = vec({1.0, -2.0});
  StopRules stop;
  stop.max_iters = 30;
  stop.grad_tol = 0.0;
  const auto tr = run(*q, x0, x0, MomentumParams::generic(0.1, 0.0, 0.0), stop);
  REQUIRE(tr.last() == 30);
  for (long k = 0; k <= 30; ++k) {
    CHECK((tr.x(k) - std::pow(0.9, static_cast<double>(k)) * x0).norm() < 1e-14);
  }
}

TEST_CASE("trace bookkeeping is consistent") {
  gen::Rng rng(12);
  const auto p = matrix_factorization(rng.matrix(3, 3), 2);
  for (int t = 0; t < 10; ++t) {
    const Vector x0 = rng.vector(12, 0.5);
    const Vector xm1 = x0 + rng.vector(12, 1e-3);
    const auto params = MomentumParams::generic(0.01, rng.uniform(-0.5, 0.9), rng.uniform(-1, 1), 1.0);
    StopRules stop;
    stop.max_iters = 50;
    const auto tr = run(*p, xm1, x0, params, stop);
    REQUIRE(tr.f.size() == static_cast<std::size_t>(tr.last() + 1));
    REQUIRE(tr.step_norm.size() == static_cast<std::size_t>(tr.last()));
    CHECK(tr.x(-1) == xm1);
    for (long k = 0; k <= tr.last(); ++k) {
      const auto ku = static_cast<std::size_t>(k);
      CHECK(tr.f[ku] == p->value(tr.x(k)));
      CHECK(tr.grad_norm[ku] == doctest::Approx(p->gradient(tr.x(k)).norm()).epsilon(1e-14));
      if (k < tr.last()) {
        CHECK(tr.step_norm[ku] == doctest::Approx((tr.x(k + 1) - tr.x(k)).norm()).epsilon(1e-13));
      }
    }
    CHECK(replay_residual(*p, tr) <= 1e-15);
  }
}

TEST_CASE("stop rules") {
  const auto q = synthetic(Fixture::quadratic, 1);
  const Vector x0 = vec({1.0});

  StopRules none;
  none.max_iters = 0;
  auto tr = run(*q, x0, x0, MomentumParams::generic(0.5, 0.0, 0.0), none);
  CHECK(tr.last() == 0);
  CHECK(tr.stop == StopReason::max_iters);

  StopRules tol;
  tol.grad_tol = 1e-3;
  tr = run(*q, x0, x0, MomentumParams::generic(0.5, 0.0, 0.0), tol);
  CHECK(tr.stop == StopReason::grad_tol);
  CHECK(tr.last() == 10);  // 0.5^10 < 1e-3 < 0.5^9
  tol.grad_tol = 2.0;
  tr = run(*q, x0, x0, MomentumParams::generic(0.5, 0.0, 0.0), tol);
  CHECK(tr.last() == 0);
  CHECK(tr.stop == StopReason::grad_tol);

  StopRules box;
  box.box_radius = 5.0;
  tr = run(*q, x0, x0, MomentumParams::generic(2.5, 0.0, 0.0), box);
  CHECK(tr.stop == StopReason::left_box);
  CHECK((tr.x(tr.last()) - x0).norm() > 5.0);
  CHECK((tr.x(tr.last() - 1) - x0).norm() <= 5.0);

  const auto quartic = synthetic(Fixture::quartic, 1);
  tr = run(*quartic, vec({10.0}), vec({10.0}), MomentumParams::generic(1.0, 0.0, 0.0));
  CHECK(tr.stop == StopReason::diverged);
  for (double f : tr.f) CHECK(std::isfinite(f));
}

TEST_CASE("initial velocity bound is flagged") {
  const auto q = synthetic(Fixture::quadratic, 1);
  StopRules stop;
  stop.max_iters = 1;
  CHECK(run(*q, vec({0.0}), vec({1.0}), MomentumParams::generic(0.1, 0.5, 0.0, 5.0), stop)
            .delta_violation);
  CHECK_FALSE(run(*q, vec({0.5}), vec({1.0}), MomentumParams::generic(0.1, 0.5, 0.0, 5.0), stop)
                  .delta_violation);
}

TEST_CASE("trace csv and json") {
  const auto q = synthetic(Fixture::quadratic, 2);
  StopRules stop;
  stop.max_iters = 3;
  const auto tr = run(*q, vec({1.0, 1.0}), vec({1.0, 0.5}), MomentumParams::nesterov(0.2, 0.3, 1.0), stop);
  std::ostringstream os;
  write_trace_csv(os, tr);
  const std::string csv = os.str();
  CHECK(csv.rfind("k,f,grad_norm,step_norm\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.substr(csv.size() - 2) == ",\n");

  const nlohmann::json j = tr;
  const Trace back = j.get<Trace>();
  CHECK(back.last() == tr.last());
  CHECK(back.params.preset == Preset::nesterov);
  CHECK(back.stop == tr.stop);
  for (long k = -1; k <= tr.last(); ++k) CHECK(back.x(k) == tr.x(k));
  CHECK(back.f == tr.f);

  nlohmann::json broken = j;
  broken["f"].erase(0);
  CHECK_THROWS(broken.get<Trace>());
}
