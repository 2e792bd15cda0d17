#include <doctest.h>

#include <cmath>
#include <random>

#include "nfde/diagnostics.hpp"
#include "nfde/error.hpp"
#include "nfde/integrator.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace nfde;

namespace {

ErrorKind kind_of(const auto& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an nfde::Error");
  return ErrorKind::Precondition;
}

IntegratorOptions options(Scheme s, double T, double step = 0.0) {
  IntegratorOptions o;
  o.scheme = s;
  o.T = T;
  o.step = step;
  return o;
}

double decay_error(Scheme s, double h) {
  const CompartmentalModel m = fixtures::decay(h, 1.0);
  const Trajectory t = integrate(m, HistoryFn::constant(m.grid(), {1.0}), options(s, 1.0));
  return std::abs(t.z(0, t.size() - 1) - std::exp(-1.0));
}

}  // namespace

TEST_CASE("scheme names") {
  CHECK(parse_scheme("euler") == Scheme::Euler);
  CHECK(parse_scheme("heun") == Scheme::Heun);
  CHECK(parse_scheme("rk4") == Scheme::Rk4);
  CHECK(to_string(Scheme::Rk4) == "rk4");
  CHECK(kind_of([] { return parse_scheme("midpoint"); }) == ErrorKind::Parse);
}

TEST_CASE("no pipes and no inflow keep any constant state") {
  const CompartmentalModel m(Grid(0.1, 1.0), 3);
  for (Scheme s : {Scheme::Euler, Scheme::Heun, Scheme::Rk4}) {
    const Trajectory t = integrate(m, HistoryFn::constant(m.grid(), {1.0, -2.0, 0.5}), options(s, 5.0));
    CHECK(t.size() == 51);
    for (std::size_t n = 0; n < t.size(); ++n) {
      CHECK(t.z(0, n) == 1.0);
      CHECK(t.z(1, n) == -2.0);
      CHECK(t.z(2, n) == 0.5);
    }
  }
}

TEST_CASE("exponential decay against the exact solution") {
  SUBCASE("heun reproduces the scalar heun recursion") {
    const CompartmentalModel m = fixtures::decay(0.01, 1.0);
    const Trajectory t = integrate(m, HistoryFn::constant(m.grid(), {1.0}), options(Scheme::Heun, 1.0));
    CHECK(t.z(0, 100) == doctest::Approx(oracles::heun_decay(1.0, 0.01, 100)).epsilon(1e-14));
    CHECK(std::abs(t.z(0, 100) - std::exp(-1.0)) <= 0.01 * 0.01);
  }
  SUBCASE("observed orders") {
    const double e1 = decay_error(Scheme::Euler, 0.02) / decay_error(Scheme::Euler, 0.01);
    const double e2 = decay_error(Scheme::Heun, 0.02) / decay_error(Scheme::Heun, 0.01);
    const double e4 = decay_error(Scheme::Rk4, 0.1) / decay_error(Scheme::Rk4, 0.05);
    CHECK(e1 == doctest::Approx(2.0).epsilon(0.05));
    CHECK(e2 == doctest::Approx(4.0).epsilon(0.05));
    CHECK(e4 == doctest::Approx(16.0).epsilon(0.1));
  }
}

TEST_CASE("run step may subdivide the grid step") {
  const CompartmentalModel m = fixtures::closed_ring(0.02, 4.0);
  const HistoryFn x0 = HistoryFn::constant(m.grid(), {1.0, 0.0});
  const Trajectory coarse = integrate(m, x0, options(Scheme::Heun, 1.0));
  const Trajectory fine = integrate(m, x0, options(Scheme::Heun, 1.0, 0.01));
  CHECK(fine.size() == 2 * coarse.size() - 1);
  // Richardson self-consistency at t = 1 for a second-order method.
  const Trajectory finer = integrate(m, x0, options(Scheme::Heun, 1.0, 0.005));
  for (std::size_t i = 0; i < 2; ++i) {
    const double d1 = std::abs(coarse.z(i, coarse.size() - 1) - fine.z(i, fine.size() - 1));
    const double d2 = std::abs(fine.z(i, fine.size() - 1) - finer.z(i, finer.size() - 1));
    CHECK(d1 < 1e-4);
    CHECK(d2 < 0.35 * d1);
  }
  CHECK(kind_of([&] { return integrate(m, x0, options(Scheme::Heun, 1.0, 0.015)); }) == ErrorKind::GridMismatch);
}

TEST_CASE("neutral recovery keeps w = D z_t") {
  const CompartmentalModel m = fixtures::open_ring(0.02, 4.0);
  std::mt19937_64 rng(31);
  const HistoryFn x0 = fixtures::random_positive(m.op(), 2, rng, 0.5);
  for (Scheme s : {Scheme::Euler, Scheme::Heun, Scheme::Rk4}) {
    const Trajectory t = integrate(m, x0, options(s, 6.0));
    CHECK(t.max_residual <= 1e-12);
    for (std::size_t n = 0; n < t.size(); n += 37) {
      const std::vector<double> D = apply_D(m.op(), t.history_at(n));
      for (std::size_t i = 0; i < 2; ++i) CHECK(t.w(i, n) == doctest::Approx(D[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("integrate preconditions") {
  SUBCASE("hard validation failure") {
    const Grid g(0.1, 3.0);
    CompartmentalModel m(g, 1);
    m.set_production(fixtures::scalar_atom(g, 1.2, -1.0));
    const HistoryFn x0 = HistoryFn::constant(g, {1.0});
    CHECK(kind_of([&] { return integrate(m, x0, options(Scheme::Heun, 1.0)); }) == ErrorKind::ValidationFailure);
    IntegratorOptions o = options(Scheme::Heun, 20.0);
    o.enforce_validation = false;
    // z(t) = w + 1.2 z(t - 1) with w constant: deviations from the
    // equilibrium grow like 1.2^t.
    const HistoryFn bump = HistoryFn::from_function(g, 1, [](std::size_t, double s) { return 1.0 + std::sin(s); });
    const Trajectory t = integrate(m, bump, o);
    double late = 0.0;
    for (std::size_t n = t.size() - 10; n < t.size(); ++n) late = std::max(late, std::abs(t.z(0, n) - t.z(0, n - 10)));
    CHECK(late > 1.0);
  }
  SUBCASE("initial history shorter than the model horizon") {
    const CompartmentalModel m = fixtures::closed_ring(0.1, 4.0);
    CHECK(kind_of([&] {
            return integrate(m, HistoryFn::constant(Grid(0.1, 2.0), {1.0, 1.0}), options(Scheme::Heun, 1.0));
          }) == ErrorKind::HorizonExceeded);
  }
  SUBCASE("dimension mismatch") {
    const CompartmentalModel m = fixtures::closed_ring(0.1, 4.0);
    CHECK(kind_of([&] { return integrate(m, HistoryFn::constant(m.grid(), {1.0}), options(Scheme::Heun, 1.0)); }) ==
          ErrorKind::GridMismatch);
  }
}

TEST_CASE("transformed field") {
  SUBCASE("zero production: G equals F") {
    const CompartmentalModel m = fixtures::decay(0.1, 1.0);
    const FdeField G = transform_to_fde(m);
    const HistoryFn y = HistoryFn::constant(m.grid(), {2.0});
    CHECK(G(0.5, y)[0] == doctest::Approx(eval_F(m, 0.5, y)[0]));
  }
  SUBCASE("scalar production: G evaluates F at k / (1 - a)") {
    const Grid g(0.1, 3.0);
    CompartmentalModel m(g, 1);
    m.set_outflow(0, TransportFn::linear(TimeCoefficient(1.0)));
    m.set_production(fixtures::scalar_atom(g, 0.4, -1.0));
    const FdeField G = transform_to_fde(m);
    CHECK(G(0.0, HistoryFn::constant(g, {3.0}))[0] == doctest::Approx(-3.0 / 0.6).epsilon(1e-10));
  }
  SUBCASE("noncontractive production is rejected") {
    const Grid g(0.1, 3.0);
    CompartmentalModel m(g, 1);
    m.set_production(fixtures::scalar_atom(g, 1.0, -1.0));
    CHECK(kind_of([&] { return transform_to_fde(m); }) == ErrorKind::NotContractive);
  }
  SUBCASE("both routes agree on the ring over a short window") {
    const CompartmentalModel m = fixtures::closed_ring(0.05, 4.0);
    const HistoryFn x0 = HistoryFn::constant(m.grid(), {1.0, 0.5});
    const Trajectory direct = integrate(m, x0, options(Scheme::Heun, 2.0));
    const Trajectory dual = integrate_transformed(m, x0, options(Scheme::Heun, 2.0));
    REQUIRE(direct.size() == dual.size());
    for (std::size_t n = 0; n < direct.size(); ++n) {
      for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(direct.z(i, n) - dual.z(i, n)) <= 1e-9);
    }
    CHECK(kind_of([&] { return integrate_transformed(m, x0, options(Scheme::Rk4, 1.0)); }) ==
          ErrorKind::Precondition);
  }
}

TEST_CASE("order preservation, strict separation and positivity on sampled pairs") {
  const CompartmentalModel m = fixtures::closed_ring(0.05, 4.0);
  const DOperator& op = m.op();
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 8; ++trial) {
    const HistoryFn x0 = fixtures::random_positive(op, 2, rng, 0.5);
    const HistoryFn y0 = x0 + fixtures::random_positive(op, 2, rng, 0.25);
    const OrderVerdict initial = d_order_compare(op, x0, y0);
    REQUIRE((initial.relation == Relation::Le || initial.relation == Relation::Equal));
    const Trajectory tx = integrate(m, x0, options(Scheme::Heun, 20.0));
    const Trajectory ty = integrate(m, y0, options(Scheme::Heun, 20.0));
    const std::vector<double> Dx0 = apply_D(op, x0);
    const std::vector<double> Dy0 = apply_D(op, y0);
    for (std::size_t n = 0; n < tx.size(); ++n) {
      for (std::size_t i = 0; i < 2; ++i) {
        CHECK(tx.w(i, n) >= -1e-12);
        CHECK(tx.w(i, n) <= ty.w(i, n) + 1e-9);
        if (Dy0[i] > Dx0[i] + 1e-6) CHECK(tx.w(i, n) < ty.w(i, n));
      }
    }
  }
}
