#include <doctest.h>

#include <cmath>
#include <sstream>

#include "momentum/gradient_flow.hpp"
#include "support/gen.hpp"

using namespace momentum;

TEST_CASE("quadratic flow matches the exponential") {
  const auto q = synthetic(Fixture::quadratic, 2);
  const Vector x0 = (Vector(2) << 1.0, -2.0).finished();
  for (double beta : {0.0, 0.5, -0.3}) {
    FlowOptions opt;
    opt.horizon = 3.0;
    opt.output_times = {0.5, 1.0, 2.0};
    const auto flow = integrate_flow(*q, x0, beta, opt);
    CHECK(flow.terminated == FlowStop::horizon);
    CHECK(flow.end_time() == 3.0);
    const double rate = 1.0 / (1.0 - beta);
    for (double t : {0.0, 0.25, 0.5, 1.0, 1.7, 2.0, 3.0}) {
      CHECK((flow.at(t) - std::exp(-rate * t) * x0).norm() < 1e-8);
    }
    for (double t : opt.output_times) {
      CHECK(std::find(flow.times.begin(), flow.times.end(), t) != flow.times.end());
    }
    CHECK(flow.length() == doctest::Approx(x0.norm() * (1.0 - std::exp(-3.0 * rate))).epsilon(1e-7));
    CHECK(energy_defect(*q, flow) < 1e-8);
    CHECK_THROWS(flow.at(3.5));
  }
}

TEST_CASE("flow stops on the gradient tolerance") {
  const auto q = synthetic(Fixture::quartic, 2);
  FlowOptions opt;
  opt.grad_tol = 1e-3;
  const auto flow = integrate_flow(*q, Vector::Constant(2, 1.0), 0.0, opt);
  CHECK(flow.terminated == FlowStop::grad_tol);
  CHECK(flow.grad_norm(flow.times.size() - 1) < 1e-3);
  CHECK(energy_defect(*q, flow) < 1e-6);
  CHECK_THROWS(integrate_flow(*q, Vector::Constant(2, 1.0), 0.0, FlowOptions{}));
}

TEST_CASE("quartic flow energy identity along random starts") {
  gen::Rng rng(31);
  const auto q = synthetic(Fixture::quartic, 3);
  for (int t = 0; t < 5; ++t) {
    FlowOptions opt;
    opt.horizon = rng.uniform(0.5, 5.0);
    const auto flow = integrate_flow(*q, rng.vector(3), rng.uniform(-0.5, 0.9), opt);
    CHECK(energy_defect(*q, flow) < 1e-6);
    for (std::size_t i = 1; i < flow.f.size(); ++i) CHECK(flow.f[i] <= flow.f[i - 1] + 1e-15);
  }
}

TEST_CASE("trajectory length on the quadratic is the start norm") {
  const auto q = synthetic(Fixture::quadratic, 2);
  std::vector<Vector> starts{(Vector(2) << 1.0, 0.0).finished(), (Vector(2) << 3.0, 4.0).finished()};
  const auto est = trajectory_length(*q, starts, 0.0, 1e-9, 1e4, 2);
  CHECK(est.lengths[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(est.lengths[1] == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(est.sigma == est.lengths[1]);
  CHECK_FALSE(est.lower_bound_only);
  const auto short_run = trajectory_length(*q, starts, 0.0, 1e-9, 1.0);
  CHECK(short_run.lower_bound_only);
}

TEST_CASE("tracking error of plain gradient descent has a closed form") {
  const auto q = synthetic(Fixture::quadratic, 1);
  const Vector x0 = Vector::Constant(1, 1.0);
  for (double alpha : {0.1, 0.05, 0.025}) {
    const auto params = MomentumParams::generic(alpha, 0.0, 0.0);
    StopRules stop;
    stop.max_iters = static_cast<long>(std::floor(1.0 / alpha + 1e-9));
    stop.grad_tol = 0.0;
    const auto tr = run(*q, x0, x0, params, stop);
    const auto rep = tracking_error(*q, tr, 1.0);
    REQUIRE(rep.complete);
    REQUIRE(rep.errors.size() == static_cast<std::size_t>(stop.max_iters + 1));
    double expect = 0.0;
    for (long k = 0; k <= stop.max_iters; ++k) {
      const double e = std::abs(std::pow(1.0 - alpha, k) - std::exp(-alpha * k));
      CHECK(rep.errors[static_cast<std::size_t>(k)] == doctest::Approx(e).epsilon(1e-6).scale(1e-9));
      expect = std::max(expect, e);
    }
    CHECK(std::abs(rep.max_error - expect) < 1e-9);
  }
}

TEST_CASE("frozen tracking errors") {
  // |0.9^10 - e^{-1}|, and heavy-ball errors from an independent script.
  const auto q = synthetic(Fixture::quadratic, 1);
  const Vector x0 = Vector::Constant(1, 1.0);
  StopRules stop;
  stop.grad_tol = 0.0;
  stop.max_iters = 10;
  auto tr = run(*q, x0, x0, MomentumParams::generic(0.1, 0.0, 0.0), stop);
  CHECK(tracking_error(*q, tr, 1.0).max_error == doctest::Approx(0.019201001071442236).epsilon(1e-9));

  const double expected[] = {0.1248, 0.05969, 0.02874};
  const double alphas[] = {0.1, 0.05, 0.025};
  for (int i = 0; i < 3; ++i) {
    const auto params = MomentumParams::heavy_ball(alphas[i], 0.5);
    stop.max_iters = static_cast<long>(std::floor(1.0 / alphas[i] + 1e-9));
    tr = run(*q, flow_matched_start(*q, x0, params), x0, params, stop);
    CHECK(tracking_error(*q, tr, 1.0).max_error == doctest::Approx(expected[i]).epsilon(2e-3));
  }
}

TEST_CASE("flow-matched start") {
  const auto q = synthetic(Fixture::quadratic, 2);
  const Vector x0 = (Vector(2) << 1.0, 2.0).finished();
  const auto xm1 = flow_matched_start(*q, x0, MomentumParams::heavy_ball(0.1, 0.5));
  CHECK((xm1 - 1.2 * x0).norm() < 1e-15);
}

TEST_CASE("tracking constants") {
  const auto tc = tracking_constants(2.0, 3.0, MomentumParams::generic(0.1, 0.0, 0.5), 1.0, 1.0, 1.0);
  CHECK(tc.p3 == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
  CHECK(tc.p1 == doctest::Approx(1.0 / std::sqrt(1.0 + std::sqrt(0.5))).epsilon(1e-12));
  CHECK(tc.p2 == doctest::Approx(1.0 / std::sqrt(1.0 - std::sqrt(0.5))).epsilon(1e-12));
  CHECK(tc.c4 == doctest::Approx(6.0 * (0.5 + 0.5)).epsilon(1e-15));
  CHECK(tc.c5 == doctest::Approx(tc.p3 * 2.0 * std::sqrt(2.5)).epsilon(1e-15));
  const double r = tc.c4 / tc.c5;
  const double bracket = std::exp(tc.c5) * (6.0 + r) - r;
  CHECK(tc.alpha_bar == doctest::Approx(tc.p1 / tc.p2 / bracket).epsilon(1e-13));
  CHECK_THROWS(tracking_constants(2.0, 3.0, MomentumParams::generic(0.1, 0.0, 0.0), 1.0, 1.0, 2.5));
  CHECK_THROWS(tracking_constants(2.0, 3.0, MomentumParams::generic(0.1, 0.0, 0.0), 1.0, 1.0, 0.0));
}

TEST_CASE("flow csv layout") {
  const auto q = synthetic(Fixture::quadratic, 1);
  FlowOptions opt;
  opt.horizon = 0.1;
  const auto flow = integrate_flow(*q, Vector::Constant(1, 1.0), 0.0, opt);
  std::ostringstream os;
  write_flow_csv(os, flow);
  const std::string csv = os.str();
  CHECK(csv.rfind("t,f,grad_norm,arc_length\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) ==
        flow.times.size() + 1);
}
