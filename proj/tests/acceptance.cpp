// Acceptance runner: one PASS/FAIL line per criterion, with the measured
// quantity, its bound and the wall time against the budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nfde/diagnostics.hpp"
#include "nfde/integrator.hpp"
#include "nfde/measures.hpp"
#include "nfde/structure.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace nfde;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

IntegratorOptions heun(double T, double step = 0.0) {
  IntegratorOptions o;
  o.scheme = Scheme::Heun;
  o.T = T;
  o.step = step;
  return o;
}

// Scalar history with D phi = 0 for nu = a delta_{-1}: a random smooth
// function corrected near 0 by a hat so that phi(0) = a phi(-1).
HistoryFn homogeneous_datum(const Grid& g, double a, std::mt19937_64& rng) {
  const HistoryFn f = fixtures::random_history(g, 1, rng);
  const double c = a * f.value(0, -1.0) - f.value(0, 0.0);
  return HistoryFn::from_function(g, 1, [&](std::size_t, double s) {
    return f.value(0, s) + c * std::max(0.0, 1.0 + 2.0 * s);
  });
}

Outcome round_trip() {
  const Grid g(0.05, 10.0);
  const DOperator op(fixtures::two_by_two_07(g));
  std::mt19937_64 rng(101);
  double worst_residual = 0.0, worst_excess = -1e300;
  for (int trial = 0; trial < 100; ++trial) {
    const HistoryFn h = fixtures::random_history(g, 2, rng);
    const HistoryFn x = invert_Dhat(op, h, 1e-12);
    worst_residual = std::max(worst_residual, sup_norm(apply_Dhat(op, x) - h));
    worst_excess = std::max(worst_excess, sup_norm(x) - sup_norm(h) / (1.0 - 0.7));
  }
  return {worst_residual <= 1e-8 && worst_excess <= 1e-8,
          fmt("max |D^(D^-1 h) - h| = %.3g (<= 1e-8), max |D^-1 h| - |h|/0.3 = %.3g (<= 1e-8)", worst_residual,
              worst_excess)};
}

Outcome neumann_residual() {
  const Grid g(1.0, 400.0);
  bool ok = true;
  std::string detail;
  for (double a : {0.3, 0.6, 0.9}) {
    const Kernel nu = fixtures::scalar_atom(g, a, -1.0);
    const NeumannInverse inv = neumann_inverse(nu, 1e-12);
    const KernelConvolution prod = convolve(Kernel::identity(g, 1) - nu, inv.inverse);
    const Kernel residual = prod.kernel - Kernel::identity(g, 1);
    const double tv = residual.at(0, 0).full_variation() + prod.tail_loss;
    const double bound = std::pow(a, static_cast<double>(inv.terms) + 1.0) / (1.0 - a) + 1e-12;
    ok = ok && tv <= bound;
    if (!detail.empty()) detail += "; ";
    detail += fmt("a=%.1f K=%.0f residual %.3g", a, static_cast<double>(inv.terms), tv) + fmt(" <= %.3g", bound);
  }
  return {ok, detail};
}

Outcome homogeneous_decay() {
  const Grid g(0.01, 2.0);
  const DOperator op(fixtures::scalar_atom(g, 0.5, -1.0));
  std::mt19937_64 rng(303);
  double worst = -1e300;
  for (int trial = 0; trial < 20; ++trial) {
    const HistoryFn phi = homogeneous_datum(g, 0.5, rng);
    const Trajectory t = solve_forward(op, phi, [](double) { return std::vector<double>{0.0}; }, 20.0);
    const double norm = sup_norm(phi);
    for (std::size_t n = 0; n < t.size(); ++n) {
      const double bound = std::pow(0.5, std::floor(t.time(n) + 1e-9)) * norm + 1e-9;
      worst = std::max(worst, std::abs(t.z(0, n)) - bound);
    }
  }
  return {worst <= 0.0, fmt("max |x(t)| - (0.5^floor(t) sup|phi| + 1e-9) = %.3g (<= 0)", worst)};
}

Outcome mass_conservation() {
  const CompartmentalModel coarse = fixtures::closed_ring(0.01, 4.0);
  const CompartmentalModel fine = fixtures::closed_ring(0.005, 4.0);
  const MassDrift dc = mass_drift(integrate(coarse, HistoryFn::constant(coarse.grid(), {1.0, 0.5}), heun(200.0)), coarse);
  const MassDrift df = mass_drift(integrate(fine, HistoryFn::constant(fine.grid(), {1.0, 0.5}), heun(200.0)), fine);
  const double ratio = df.max_abs / dc.max_abs;
  return {dc.relative <= 1e-4 && ratio <= 0.35,
          fmt("relative drift h=0.01: %.3g (<= 1e-4); h=0.005: %.3g; ratio %.3f (<= 0.35)", dc.relative, df.relative,
              ratio)};
}

Outcome mass_identity() {
  const CompartmentalModel m = fixtures::open_ring(0.01, 4.0);
  const MassDrift d = mass_drift(integrate(m, HistoryFn::constant(m.grid(), {1.0, 0.5}), heun(100.0)), m);
  return {!d.closed && d.max_abs <= 1e-3, fmt("max |M(t) - M(0) - int (I - g0)| = %.3g (<= 1e-3)", d.max_abs)};
}

Outcome monotone_pairs() {
  const CompartmentalModel m = fixtures::closed_ring(0.01, 4.0);
  std::mt19937_64 rng(606);
  std::size_t violations = 0, unordered = 0;
  double worst_lower = 0.0, worst_upper = -1e300;
  for (int trial = 0; trial < 50; ++trial) {
    const HistoryFn x0 = fixtures::random_positive(m.op(), 2, rng, 0.5);
    const HistoryFn y0 = x0 + fixtures::random_positive(m.op(), 2, rng, 0.25);
    const Relation rel = d_order_compare(m.op(), x0, y0).relation;
    if (rel != Relation::Le && rel != Relation::Equal) ++unordered;
    const MassGapReport r =
        ordered_mass_gap(integrate(m, x0, heun(100.0)), integrate(m, y0, heun(100.0)), 1e-6, false);
    violations += r.violations;
    worst_lower = std::min(worst_lower, r.min_lower);
    worst_upper = std::max(worst_upper, r.max_upper_excess);
  }
  return {violations == 0 && unordered == 0,
          fmt("violations %.0f over 50 pairs; min lower %.3g, max upper excess %.3g (tol 1e-6)",
              static_cast<double>(violations + unordered), worst_lower, worst_upper)};
}

Outcome emptying() {
  const CompartmentalModel m = fixtures::chain(0.01, 2.0);
  const Decomposition d = decompose(PipeGraph::from_model(m));
  const EmptyingReport r = emptying_check(integrate(m, HistoryFn::constant(m.grid(), {1, 1, 1}), heun(500.0)), m, d);
  double worst = 0.0;
  for (double v : r.terminal) worst = std::max(worst, v);
  return {r.verdict == Verdict::Pass && r.targets.size() == 3,
          fmt("final-window max |z_i| = %.3g (< 1e-3) on %.0f compartments", worst,
              static_cast<double>(r.targets.size()))};
}

Outcome merging() {
  const CompartmentalModel m = fixtures::chain(0.01, 2.0);
  const Decomposition d = decompose(PipeGraph::from_model(m));
  const ConvergenceReport r = merging_check(m, d, HistoryFn::constant(m.grid(), {1, 1, 1}),
                                            HistoryFn::constant(m.grid(), {0, 0.5, 2}), heun(500.0), 1e-3);
  return {r.verdict == Verdict::Pass, fmt("final-window difference %.3g (< 1e-3), decay rate %.3g", r.final_gap, r.rate)};
}

Outcome distinct_limits() {
  const CompartmentalModel m = fixtures::closed_ring(0.01, 4.0);
  const double T = 500.0;
  const Trajectory x = integrate(m, HistoryFn::constant(m.grid(), {1.0, 1.0}), heun(T));
  const Trajectory y = integrate(m, HistoryFn::constant(m.grid(), {1.5, 2.0}), heun(T));
  const ConvergenceReport gap = window_distance(x, y, {0, 1}, 1e-3);
  const OrderVerdict order = d_order_compare(m.op(), x, y, 0.9 * T);
  const double m0x = x.mass(0), m0y = y.mass(0);
  const double mTx = x.mass(x.size() - 1), mTy = y.mass(y.size() - 1);
  const bool ok = m0x < m0y && gap.final_gap > 1e-2 && order.relation == Relation::Le && mTx < mTy;
  return {ok, fmt("final-window gap %.3g (> 1e-2), terminal masses %.4f < %.4f", gap.final_gap, mTx, mTy) +
                  ", terminal order " + std::string(to_string(order.relation))};
}

Outcome irreducible_oracle() {
  std::mt19937_64 rng(1010);
  std::uniform_int_distribution<std::size_t> size(1, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = size(rng);
    const double density = 0.6 * u(rng);
    oracles::Edges edges;
    PipeGraph g(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (u(rng) < density) {
          edges.push_back({i, j});
          g.add_edge(i, j);
        }
      }
    }
    std::vector<NodeSet> got;
    for (const IrreducibleSet& s : decompose(g).irreducible) got.push_back(s.members);
    if (got != oracles::irreducible_sets(m, edges)) ++mismatches;
  }
  return {mismatches == 0, fmt("%.0f mismatches over 200 digraphs", mismatches)};
}

Outcome dual_route() {
  const CompartmentalModel m = fixtures::closed_ring(0.01, 4.0);
  const HistoryFn x0 = HistoryFn::constant(m.grid(), {1.0, 0.5});
  const Trajectory direct = integrate(m, x0, heun(10.0));
  const Trajectory dual = integrate_transformed(m, x0, heun(10.0));
  double worst = 0.0;
  for (std::size_t n = 0; n < direct.size(); ++n) {
    for (std::size_t i = 0; i < 2; ++i) worst = std::max(worst, std::abs(direct.z(i, n) - dual.z(i, n)));
  }
  return {direct.size() == dual.size() && worst <= 1e-6, fmt("max |z_direct - z_transformed| = %.3g (<= 1e-6)", worst)};
}

Outcome periodicity() {
  const CompartmentalModel m = fixtures::forced_single(0.01, 1.0);
  const Trajectory t = integrate(m, HistoryFn::constant(m.grid(), {0.0}), heun(240.0));
  const ConvergenceReport r = recurrence_check(t, 4.0, 1e-4, 50);
  return {r.verdict == Verdict::Pass, fmt("max successive Poincare gap after 50 periods %.3g (< 1e-4)", r.final_gap)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "operator round trip", 10.0, round_trip},
      {2, "Neumann inverse residual", 1.0, neumann_residual},
      {3, "homogeneous decay", 5.0, homogeneous_decay},
      {4, "mass conservation, closed ring", 60.0, mass_conservation},
      {5, "mass variation identity, open ring", 60.0, mass_identity},
      {6, "monotonicity and mass-gap band", 120.0, monotone_pairs},
      {7, "emptying, chain", 60.0, emptying},
      {8, "merging, chain", 120.0, merging},
      {9, "distinct limits, closed ring", 120.0, distinct_limits},
      {10, "irreducible sets vs oracle", 5.0, irreducible_oracle},
      {11, "dual-route integration", 30.0, dual_route},
      {12, "asymptotic periodicity", 30.0, periodicity},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.ok && in_time;
    if (!pass) ++failed;
    std::printf("%s  %2d  %-38s %s [%.2f s / %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.budget_seconds, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
