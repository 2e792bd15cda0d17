#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace nfde {

/// Uniform grid on [-horizon, 0] shared by every measure and history of a model.
struct Grid {
  double step = 0.0;
  double horizon = 0.0;

  Grid() = default;
  Grid(double step, double horizon);

  /// Number of grid intervals, horizon / step.
  std::size_t steps() const noexcept { return steps_; }

  /// Integer ratio step / fine_step; throws GridMismatch when it is not one.
  std::size_t refinement(double fine_step) const;

  friend bool operator==(const Grid& a, const Grid& b) noexcept;

 private:
  std::size_t steps_ = 0;
};

/// Converts a nonpositive location to a lag in units of `step`, rejecting
/// locations further than 1e-9 step from a grid point.
std::size_t snap_to_lag(double location, double step);

/// Point mass located at -lag * step.
struct Atom {
  std::size_t lag = 0;
  double mass = 0.0;
};

struct LocatedAtom {
  double location = 0.0;
  double mass = 0.0;
};

/// Signed Borel measure on (-inf, 0]: point masses on the grid, an absolutely
/// continuous part discretised onto grid weights, and the signed mass lying
/// beyond -horizon (the tail).
///
/// The density is stored as per-lag weights q_k, so integration against f is
/// sum_k q_k f(-k h). Sampled densities use trapezoid weights; catalogue
/// densities integrate the exact density over each grid cell so that the
/// discrete mass matches the analytic mass.
class ScalarMeasure {
 public:
  ScalarMeasure() = default;
  explicit ScalarMeasure(Grid grid);

  /// Atoms at arbitrary nonpositive locations (snapped to the grid) plus an
  /// optional density sampled at lags 0..N with trapezoid semantics.
  ScalarMeasure(Grid grid, const std::vector<LocatedAtom>& atoms,
                const std::vector<double>& density_samples = {}, double tail_mass = 0.0);

  static ScalarMeasure dirac(Grid grid, double location, double mass = 1.0);
  /// Density rate * exp(rate * s) on (-inf, 0]; tail exp(-rate * H).
  static ScalarMeasure exponential(Grid grid, double rate, double scale = 1.0);
  /// Uniform probability density on [a, b] with a < b <= 0.
  static ScalarMeasure uniform(Grid grid, double a, double b, double scale = 1.0);
  /// Builds directly from per-lag parts; atoms must be sorted, distinct and in range.
  static ScalarMeasure from_parts(Grid grid, std::vector<Atom> atoms, std::vector<double> density_weights,
                                  double tail_mass);

  const Grid& grid() const noexcept { return grid_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& density_weights() const noexcept { return density_; }
  bool has_density() const noexcept { return !density_.empty(); }
  double tail_mass() const noexcept { return tail_; }

  /// Density values recovered from the weights (inverse trapezoid rule).
  std::vector<double> density_samples() const;

  /// Atoms and density weights merged per lag, zero weights dropped, sorted by lag.
  const std::vector<Atom>& discrete() const noexcept { return discrete_; }

  bool is_zero() const noexcept { return discrete_.empty() && tail_ == 0.0; }
  double weight_at(std::size_t lag) const;
  double atom_at(std::size_t lag) const;
  double density_weight_at(std::size_t lag) const;
  double signed_mass() const noexcept;  // excluding tail
  double total_variation() const noexcept;  // excluding tail
  double full_variation() const noexcept { return total_variation() + (tail_ < 0 ? -tail_ : tail_); }
  std::size_t max_lag() const noexcept { return discrete_.empty() ? 0 : discrete_.back().lag; }
  bool is_nonnegative(double tol = 0.0) const noexcept;

  ScalarMeasure scaled(double factor) const;

  friend ScalarMeasure operator+(const ScalarMeasure& a, const ScalarMeasure& b);
  friend ScalarMeasure operator-(const ScalarMeasure& a, const ScalarMeasure& b);

 private:
  void finalize();

  Grid grid_;
  std::vector<Atom> atoms_;
  std::vector<double> density_;
  double tail_ = 0.0;
  std::vector<Atom> discrete_;
};

double total_variation(const ScalarMeasure& m) noexcept;

/// sum over atoms and density weights of mass * f(location), plus the tail
/// mass times f(-inf) (the caller's pre-horizon value).
template <class F>
double integrate_against(const ScalarMeasure& m, F&& f) {
  const double h = m.grid().step;
  double acc = 0.0;
  for (const Atom& a : m.discrete()) acc += a.mass * f(-static_cast<double>(a.lag) * h);
  if (m.tail_mass() != 0.0) acc += m.tail_mass() * f(-std::numeric_limits<double>::infinity());
  return acc;
}

struct Convolution {
  ScalarMeasure measure;
  /// Total variation of the mass pushed beyond -horizon by this product.
  double tail_loss = 0.0;
};

Convolution convolve(const ScalarMeasure& a, const ScalarMeasure& b);

/// m x m matrix of scalar measures on a shared grid.
class Kernel {
 public:
  Kernel() = default;
  Kernel(Grid grid, std::size_t dim);

  static Kernel identity(Grid grid, std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  const Grid& grid() const noexcept { return grid_; }
  const ScalarMeasure& at(std::size_t i, std::size_t j) const { return entries_.at(i * dim_ + j); }
  void set(std::size_t i, std::size_t j, ScalarMeasure m);

  double row_variation(std::size_t i) const;  // includes tails
  double contraction() const;                 // max_i row_variation(i)
  bool is_nonnegative() const;

  friend Kernel operator+(const Kernel& a, const Kernel& b);
  friend Kernel operator-(const Kernel& a, const Kernel& b);

 private:
  Grid grid_;
  std::size_t dim_ = 0;
  std::vector<ScalarMeasure> entries_;
};

struct KernelConvolution {
  Kernel kernel;
  double tail_loss = 0.0;
};

KernelConvolution convolve(const Kernel& a, const Kernel& b);

/// Truncated series for the convolution inverse of (delta I - nu).
struct NeumannInverse {
  Kernel inverse;
  std::size_t terms = 0;  // K: index of the last term kept, the first with c^(K+1)/(1-c) <= tol
  double contraction = 0.0;
  double residual_bound = 0.0;  // c^(K+1) / (1 - c)
  double tail_loss = 0.0;
};

NeumannInverse neumann_inverse(const Kernel& nu, double tol, std::size_t max_terms = 100000);

}  // namespace nfde
