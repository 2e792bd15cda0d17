#pragma once

// Model builders shared by the unit tests and the acceptance runner.

#include <cmath>
#include <random>
#include <vector>

#include "nfde/d_operator.hpp"
#include "nfde/history.hpp"
#include "nfde/measures.hpp"
#include "nfde/model.hpp"

namespace fixtures {

using namespace nfde;

// a(t) = 1 + 0.3 cos t
inline TimeCoefficient ring_coefficient() { return TimeCoefficient(1.0, {Harmonic{0.3, 1.0, 0.0}}); }

/// Two compartments exchanging through unit-delay pipes with periodic
/// coefficients and production 0.2 delta_{-2} across the ring.
inline CompartmentalModel closed_ring(double h = 0.01, double H = 4.0) {
  const Grid g(h, H);
  CompartmentalModel m(g, 2);
  m.add_pipe(0, 1, TransportFn::linear(ring_coefficient()), ScalarMeasure::dirac(g, -1.0));
  m.add_pipe(1, 0, TransportFn::linear(ring_coefficient()), ScalarMeasure::dirac(g, -1.0));
  Kernel nu(g, 2);
  nu.set(0, 1, ScalarMeasure::dirac(g, -2.0, 0.2));
  nu.set(1, 0, ScalarMeasure::dirac(g, -2.0, 0.2));
  m.set_production(nu);
  return m;
}

/// Closed ring plus outflow 0.5 v from compartment 1 and inflow 0.2 (1 + cos t) into 2.
inline CompartmentalModel open_ring(double h = 0.01, double H = 4.0) {
  CompartmentalModel m = closed_ring(h, H);
  m.set_outflow(0, TransportFn::linear(TimeCoefficient(0.5)));
  m.set_inflow(1, TimeCoefficient(0.2, {Harmonic{0.2, 1.0, 0.0}}));
  return m;
}

/// Chain 1 -> 2 -> 3 with outflow from 3; unit linear pipes, unit delays,
/// production 0.2 delta_{-1} along the chain (co-located with the transit atoms).
inline CompartmentalModel chain(double h = 0.01, double H = 2.0) {
  const Grid g(h, H);
  CompartmentalModel m(g, 3);
  m.add_pipe(0, 1, TransportFn::linear(TimeCoefficient(1.0)), ScalarMeasure::dirac(g, -1.0));
  m.add_pipe(1, 2, TransportFn::linear(TimeCoefficient(1.0)), ScalarMeasure::dirac(g, -1.0));
  m.set_outflow(2, TransportFn::linear(TimeCoefficient(1.0)));
  Kernel nu(g, 3);
  nu.set(1, 0, ScalarMeasure::dirac(g, -1.0, 0.2));
  nu.set(2, 1, ScalarMeasure::dirac(g, -1.0, 0.2));
  m.set_production(nu);
  return m;
}

/// Single compartment with outflow v and inflow 1 + 0.5 cos(pi t / 2) (period 4).
inline CompartmentalModel forced_single(double h = 0.01, double H = 1.0) {
  const Grid g(h, H);
  CompartmentalModel m(g, 1);
  m.set_outflow(0, TransportFn::linear(TimeCoefficient(1.0)));
  m.set_inflow(0, TimeCoefficient(1.0, {Harmonic{0.5, M_PI / 2.0, 0.0}}));
  return m;
}

/// Single compartment, outflow v, nothing else: z(t) = z(0) e^{-t}.
inline CompartmentalModel decay(double h = 0.01, double H = 1.0) {
  const Grid g(h, H);
  CompartmentalModel m(g, 1);
  m.set_outflow(0, TransportFn::linear(TimeCoefficient(1.0)));
  return m;
}

inline Kernel scalar_atom(const Grid& g, double mass, double location) {
  Kernel k(g, 1);
  k.set(0, 0, ScalarMeasure::dirac(g, location, mass));
  return k;
}

/// 2x2 kernel with row mass 0.7 built from atoms at -1 and -2.
inline Kernel two_by_two_07(const Grid& g) {
  Kernel k(g, 2);
  k.set(0, 0, ScalarMeasure(g, {{-1.0, 0.3}}));
  k.set(0, 1, ScalarMeasure(g, {{-2.0, 0.4}}));
  k.set(1, 0, ScalarMeasure(g, {{-1.0, 0.5}, {-2.0, 0.2}}));
  return k;
}

/// Smooth random history in the closed unit ball: a few random cosines,
/// rescaled so that the sup norm is at most 1.
inline HistoryFn random_history(const Grid& g, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> f(0.1, 3.0);
  std::vector<double> a0(dim), a1(dim), f1(dim), a2(dim), f2(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    a0[j] = u(rng);
    a1[j] = u(rng);
    f1[j] = f(rng);
    a2[j] = u(rng);
    f2[j] = f(rng);
  }
  HistoryFn x = HistoryFn::from_function(g, dim, [&](std::size_t j, double s) {
    return a0[j] + a1[j] * std::cos(f1[j] * s) + a2[j] * std::sin(f2[j] * s);
  });
  const double n = sup_norm(x);
  return n > 1.0 ? x.scaled(1.0 / n) : x;
}

/// Random history with nonnegative D^ image: D^-1 of a random nonnegative history.
inline HistoryFn random_positive(const DOperator& op, std::size_t dim, std::mt19937_64& rng, double scale = 1.0) {
  HistoryFn p = random_history(op.grid(), dim, rng);
  std::vector<std::vector<double>> cols = p.columns();
  std::vector<double> before = p.before();
  for (auto& c : cols) {
    for (double& v : c) v = scale * (1.0 + v);
  }
  for (double& v : before) v = scale * (1.0 + v);
  return invert_Dhat(op, HistoryFn(op.grid(), std::move(cols), std::move(before)), 1e-13);
}

}  // namespace fixtures
