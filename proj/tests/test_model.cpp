#include <doctest.h>

#include <cmath>
#include <random>

#include "nfde/diagnostics.hpp"
#include "nfde/error.hpp"
#include "nfde/model.hpp"
#include "fixtures.hpp"

using namespace nfde;

namespace {

// Closed ring whose production atoms sit on the transit atoms (lag 1), so
// that every eta is a nonnegative atom.
CompartmentalModel colocated_ring(double h = 0.05, double H = 3.0) {
  const Grid g(h, H);
  CompartmentalModel m(g, 2);
  m.add_pipe(0, 1, TransportFn::linear(fixtures::ring_coefficient()), ScalarMeasure::dirac(g, -1.0));
  m.add_pipe(1, 0, TransportFn::linear(fixtures::ring_coefficient()), ScalarMeasure::dirac(g, -1.0));
  Kernel nu(g, 2);
  nu.set(0, 1, ScalarMeasure::dirac(g, -1.0, 0.2));
  nu.set(1, 0, ScalarMeasure::dirac(g, -1.0, 0.2));
  m.set_production(nu);
  return m;
}

// y = D^-1 (D^ x + p) with p >= 0 vanishing at s = 0 in component j.
HistoryFn raise_except_now(const DOperator& op, const HistoryFn& x, std::size_t j, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double amp0 = u(rng), amp1 = u(rng), f = 0.5 + u(rng);
  const HistoryFn p = HistoryFn::from_function(op.grid(), x.dim(), [&](std::size_t c, double s) {
    const double bump = (c == 0 ? amp0 : amp1) * (1.0 + std::sin(f * s)) / 2.0;
    return c == j ? bump * std::min(1.0, -s) : bump;
  });
  return invert_Dhat(op, apply_Dhat(op, x) + p, 1e-13);
}

}  // namespace

TEST_CASE("time coefficients") {
  const TimeCoefficient a(1.0, {Harmonic{0.3, 1.0, 0.0}, Harmonic{0.2, 2.0, 0.5}});
  CHECK(a(0.0) == doctest::Approx(1.0 + 0.3 + 0.2 * std::cos(0.5)));
  CHECK(a.lower_bound() == doctest::Approx(0.5));
  CHECK(a.upper_bound() == doctest::Approx(1.5));
  CHECK(TimeCoefficient(0.0).is_zero());
  CHECK_FALSE(a.is_zero());
}

TEST_CASE("transport functions") {
  const TransportFn lin = TransportFn::linear(fixtures::ring_coefficient());
  const TransportFn sat = TransportFn::saturating(TimeCoefficient(2.0), 0.5);
  const TransportFn zero = TransportFn::zero();

  for (double t : {0.0, 0.7, 3.0}) {
    CHECK(lin(t, 0.0) == 0.0);
    CHECK(sat(t, 0.0) == 0.0);
    CHECK(zero(t, 5.0) == 0.0);
    for (double v : {0.1, 1.0, 7.0}) {
      CHECK(lin(t, -v) == doctest::Approx(-lin(t, v)));
      CHECK(sat(t, -v) == doctest::Approx(-sat(t, v)));
      CHECK(sat(t, v) < sat(t, v + 0.1));
      CHECK(lin(t, v) < lin(t, v + 0.1));
    }
  }
  CHECK(sat(1.0, 2.0) == doctest::Approx(2.0 * 2.0 / 2.0));
  CHECK(lin.slope_inf() == doctest::Approx(0.7));
  CHECK(lin.slope_sup() == doctest::Approx(1.3));
  CHECK(sat.slope_inf() == 0.0);
  CHECK(sat.slope_sup() == doctest::Approx(2.0));
  CHECK(zero.slope_sup() == 0.0);
  CHECK_FALSE(zero.carries_material());
  CHECK(sat.carries_material());

  CHECK_THROWS_AS(TransportFn::linear(TimeCoefficient(0.5, {Harmonic{0.6, 1.0, 0.0}})), Error);
  CHECK_THROWS_AS(TransportFn::saturating(TimeCoefficient(1.0), -1.0), Error);
}

TEST_CASE("model construction guards") {
  const Grid g(0.1, 2.0);
  CompartmentalModel m(g, 2);
  m.add_pipe(0, 1, TransportFn::linear(TimeCoefficient(1.0)), ScalarMeasure::dirac(g, -1.0));
  CHECK_THROWS_AS(m.add_pipe(0, 1, TransportFn::linear(TimeCoefficient(1.0)), ScalarMeasure::dirac(g, -1.0)), Error);
  CHECK_THROWS_AS(m.add_pipe(0, 5, TransportFn::linear(TimeCoefficient(1.0)), ScalarMeasure::dirac(g, -1.0)), Error);
  CHECK(m.find_pipe(0, 1).has_value());
  CHECK_FALSE(m.find_pipe(1, 0).has_value());
  Kernel bad(Grid(0.2, 2.0), 2);
  CHECK_THROWS_AS(m.set_production(bad), Error);

  m.set_inflow(1, TimeCoefficient(-0.5, {Harmonic{1.0, 1.0, 0.0}}));
  CHECK(m.inflow(1, M_PI) == 0.0);
  CHECK(m.inflow(1, 0.0) == doctest::Approx(0.5));
  CHECK(m.has_inflow());
  CHECK_FALSE(m.closed());
}

TEST_CASE("validate") {
  SUBCASE("no pipes, no production: everything passes") {
    const CompartmentalModel m(Grid(0.1, 1.0), 2);
    const ValidationReport r = validate(m);
    for (const char* name : {"C1", "C2", "C3", "C4", "C5", "C6", "C6*"}) CHECK(r.passes(name));
    CHECK_FALSE(r.hard_failure());
  }
  SUBCASE("outflow against unmatched production fails C5") {
    const Grid g(0.1, 2.0);
    CompartmentalModel m(g, 1);
    m.set_outflow(0, TransportFn::linear(TimeCoefficient(1.0)));
    m.set_production(fixtures::scalar_atom(g, 0.5, -1.0));
    const ValidationReport r = validate(m);
    CHECK(r.check("C5").status == CheckStatus::Fail);
    CHECK_FALSE(r.check("C5").hard);
    REQUIRE(r.eta.size() == 1);
    CHECK(r.eta[0].d_sum == doctest::Approx(1.0));
    CHECK(r.eta[0].worst == doctest::Approx(-0.5));
    CHECK(r.eta[0].worst_location == doctest::Approx(-1.0));
    CHECK_FALSE(r.hard_failure());
  }
  SUBCASE("ring with lag-2 production: eta has a negative atom at -2") {
    const ValidationReport r = validate(fixtures::closed_ring());
    for (const char* name : {"C1", "C2", "C3", "C4", "C6", "C6*"}) CHECK(r.passes(name));
    CHECK(r.check("C5").status == CheckStatus::Fail);
    REQUIRE(r.eta.size() == 2);
    for (const EtaCheck& e : r.eta) {
      CHECK(e.c == doctest::Approx(0.7));
      CHECK(e.d_sum == doctest::Approx(1.3));
      // 0.7 delta_{-1} - 1.3 * 0.2 delta_{-2}
      CHECK(e.eta.weight_at(100) == doctest::Approx(0.7));
      CHECK(e.eta.weight_at(200) == doctest::Approx(-0.26));
    }
  }
  SUBCASE("ring with production on the transit atoms passes everything") {
    const ValidationReport r = validate(colocated_ring());
    for (const char* name : {"C1", "C2", "C3", "C4", "C5", "C6", "C6*"}) CHECK(r.passes(name));
    for (const EtaCheck& e : r.eta) CHECK(e.eta.weight_at(20) == doctest::Approx(0.7 - 1.3 * 0.2));
  }
  SUBCASE("transit measures must be probability measures") {
    const Grid g(0.1, 2.0);
    CompartmentalModel m(g, 2);
    m.add_pipe(0, 1, TransportFn::linear(TimeCoefficient(1.0)), ScalarMeasure::dirac(g, -1.0, 0.9));
    const ValidationReport r = validate(m);
    CHECK(r.check("C3").status == CheckStatus::Fail);
    CHECK(r.hard_failure());
  }
  SUBCASE("exponential transit with its tail is a probability measure") {
    const Grid g(0.1, 2.0);
    CompartmentalModel m(g, 2);
    m.add_pipe(0, 1, TransportFn::linear(TimeCoefficient(1.0)), ScalarMeasure::exponential(g, 1.0));
    CHECK(validate(m).passes("C3"));
  }
  SUBCASE("production row mass 1.2 fails C4") {
    const Grid g(0.1, 3.0);
    CompartmentalModel m(g, 2);
    Kernel nu(g, 2);
    nu.set(1, 0, ScalarMeasure(g, {{-1.0, 0.7}, {-2.0, 0.5}}));
    m.set_production(nu);
    const ValidationReport r = validate(m);
    CHECK(r.check("C4").status == CheckStatus::Fail);
    CHECK(r.check("C4").witness.find("row 2") != std::string::npos);
    CHECK(r.hard_failure());
  }
  SUBCASE("negative production fails C4") {
    const Grid g(0.1, 3.0);
    CompartmentalModel m(g, 1);
    m.set_production(fixtures::scalar_atom(g, -0.2, -1.0));
    CHECK(validate(m).check("C4").status == CheckStatus::Fail);
  }
  SUBCASE("saturating pipes are increasing but have zero minimal slope") {
    const Grid g(0.1, 2.0);
    CompartmentalModel m(g, 2);
    m.add_pipe(0, 1, TransportFn::saturating(TimeCoefficient(1.0), 1.0), ScalarMeasure::dirac(g, -1.0));
    const ValidationReport r = validate(m);
    CHECK(r.passes("C6"));
    CHECK(r.passes("C6*"));
    REQUIRE(r.pipes.size() == 1);
    CHECK(r.pipes[0].strictly_increasing);
    CHECK(r.pipes[0].slope_inf == 0.0);
    CHECK_FALSE(r.warnings.empty());
  }
}

TEST_CASE("eval_F") {
  const Grid g(0.1, 2.0);
  SUBCASE("zero state, no inflow") {
    const CompartmentalModel m = fixtures::closed_ring(0.1, 4.0);
    const std::vector<double> F = eval_F(m, 0.3, HistoryFn::constant(m.grid(), {0.0, 0.0}));
    CHECK(F[0] == 0.0);
    CHECK(F[1] == 0.0);
  }
  SUBCASE("single compartment with outflow") {
    CompartmentalModel m(g, 1);
    m.set_outflow(0, TransportFn::linear(TimeCoefficient(1.0)));
    m.set_inflow(0, TimeCoefficient(0.5, {Harmonic{0.25, 1.0, 0.0}}));
    for (double t : {0.0, 1.0, 2.5}) {
      CHECK(eval_F(m, t, HistoryFn::constant(g, {3.0}))[0] == doctest::Approx(-3.0 + 0.5 + 0.25 * std::cos(t)));
    }
  }
  SUBCASE("one pipe 1 -> 2 with unit delay") {
    CompartmentalModel m(g, 2);
    m.add_pipe(0, 1, TransportFn::linear(TimeCoefficient(1.0)), ScalarMeasure::dirac(g, -1.0));
    const std::vector<double> F = eval_F(m, 0.0, HistoryFn::constant(g, {1.0, 0.0}));
    CHECK(F[0] == doctest::Approx(-1.0));
    CHECK(F[1] == doctest::Approx(1.0));
  }
  SUBCASE("arrivals read the coefficient at departure time") {
    CompartmentalModel m(g, 2);
    m.add_pipe(0, 1, TransportFn::linear(fixtures::ring_coefficient()), ScalarMeasure::dirac(g, -1.0));
    const HistoryFn x = HistoryFn::from_function(g, 2, [](std::size_t j, double s) { return j == 0 ? 2.0 + s : 0.0; });
    const double t = 0.8;
    const std::vector<double> F = eval_F(m, t, x);
    CHECK(F[0] == doctest::Approx(-(1.0 + 0.3 * std::cos(t)) * 2.0));
    CHECK(F[1] == doctest::Approx((1.0 + 0.3 * std::cos(t - 1.0)) * 1.0));
  }
}

TEST_CASE("mass functionals") {
  SUBCASE("zero state has zero mass") {
    const CompartmentalModel m = fixtures::closed_ring(0.1, 4.0);
    CHECK(total_mass(m, 0.0, HistoryFn::constant(m.grid(), {0.0, 0.0})) == 0.0);
  }
  SUBCASE("no pipes, no production: sum of contents") {
    const CompartmentalModel m(Grid(0.1, 1.0), 3);
    CHECK(total_mass(m, 0.0, HistoryFn::constant(m.grid(), {1.0, 2.0, 3.5})) == doctest::Approx(6.5));
  }
  SUBCASE("unit ring with constant state: contents plus one unit per pipe") {
    const Grid g(0.05, 4.0);
    CompartmentalModel m(g, 2);
    m.add_pipe(0, 1, TransportFn::linear(TimeCoefficient(1.0)), ScalarMeasure::dirac(g, -1.0));
    m.add_pipe(1, 0, TransportFn::linear(TimeCoefficient(1.0)), ScalarMeasure::dirac(g, -1.0));
    Kernel nu(g, 2);
    nu.set(0, 1, ScalarMeasure::dirac(g, -2.0, 0.2));
    nu.set(1, 0, ScalarMeasure::dirac(g, -2.0, 0.2));
    m.set_production(nu);
    const HistoryFn x = HistoryFn::constant(g, {1.0, 1.0});
    const std::vector<double> D = apply_D(m.op(), x);
    CHECK(total_mass(m, 0.0, x) == doctest::Approx(D[0] + D[1] + 2.0));
    CHECK(total_mass(m, 0.0, x) == doctest::Approx(3.6));
    CHECK(restricted_mass(m, {0}, 0.0, x) == doctest::Approx(D[0]));
    CHECK(restricted_mass(m, {}, 0.0, x) == 0.0);
    CHECK(restricted_mass(m, {0, 1}, 0.0, x) == doctest::Approx(total_mass(m, 0.0, x)));
  }
  SUBCASE("periodic coefficient: pipe content is a time integral of the coefficient") {
    const CompartmentalModel m = fixtures::closed_ring(0.01, 4.0);
    const HistoryFn x = HistoryFn::constant(m.grid(), {1.0, 1.0});
    const double t = 1.3;
    const double per_pipe = 1.0 + 0.3 * (std::sin(t) - std::sin(t - 1.0));
    CHECK(total_mass(m, t, x) == doctest::Approx(1.6 + 2.0 * per_pipe).epsilon(1e-5));
  }
  SUBCASE("mass_rate sums inflow minus outflow") {
    const CompartmentalModel m = fixtures::open_ring(0.1, 4.0);
    const HistoryFn x = HistoryFn::constant(m.grid(), {2.0, 1.0});
    const double t = 0.4;
    CHECK(mass_rate(m, t, x.view()) == doctest::Approx(0.2 * (1.0 + std::cos(t)) - 0.5 * 2.0));
  }
}

TEST_CASE("quasimonotone property and the lower estimate on ordered pairs") {
  std::mt19937_64 rng(21);
  for (const CompartmentalModel& m : {colocated_ring(), fixtures::closed_ring(0.05, 4.0)}) {
    const ValidationReport r = validate(m);
    const DOperator& op = m.op();
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t j = static_cast<std::size_t>(trial % 2);
      const HistoryFn x = fixtures::random_positive(op, 2, rng, 0.5);
      const HistoryFn y = raise_except_now(op, x, j, rng);
      REQUIRE(d_order_compare(op, x, y).relation != Relation::Ge);
      const double t = 0.37 * trial;
      const std::vector<double> Fx = eval_F(m, t, x);
      const std::vector<double> Fy = eval_F(m, t, y);
      const std::vector<double> Dx = apply_D(op, x);
      const std::vector<double> Dy = apply_D(op, y);
      const HistoryFn diff = y - x;
      for (const EtaCheck& e : r.eta) {
        double rhs = -e.d_sum * (Dy[e.i] - Dx[e.i]);
        rhs += integrate_against(e.eta, [&](double s) { return diff.value(e.j, s); });
        CHECK(Fy[e.i] - Fx[e.i] >= rhs - 1e-10);
      }
      // Mass grows along the D-order.
      CHECK(total_mass(m, t, y) >= total_mass(m, t, x) - 1e-12);
      if (r.passes("C5")) {
        CHECK(std::abs(Dy[j] - Dx[j]) <= 1e-10);
        CHECK(Fy[j] >= Fx[j] - 1e-10);
      }
    }
  }
}
