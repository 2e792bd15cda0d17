#include "nfde/measures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "nfde/error.hpp"

namespace nfde {

namespace {

constexpr double kSnapTolerance = 1e-9;

double trapezoid_weight(std::size_t k, std::size_t n, double h) {
  return (k == 0 || k == n) ? 0.5 * h : h;
}

// Length of [lo, hi] intersected with [a, b].
double overlap(double lo, double hi, double a, double b) {
  return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) {
    std::ostringstream msg;
    msg << what << ": grids differ (step " << a.step << " vs " << b.step << ", horizon " << a.horizon << " vs "
        << b.horizon << ")";
    throw Error(ErrorKind::GridMismatch, msg.str());
  }
}

}  // namespace

Grid::Grid(double step_, double horizon_) : step(step_), horizon(horizon_) {
  if (!(step > 0.0) || !(horizon > 0.0) || !std::isfinite(step) || !std::isfinite(horizon)) {
    throw Error(ErrorKind::GridMismatch, "grid step and horizon must be positive and finite");
  }
  const double ratio = horizon / step;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > kSnapTolerance * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << "horizon " << horizon << " is not a multiple of step " << step;
    throw Error(ErrorKind::GridMismatch, msg.str());
  }
  steps_ = static_cast<std::size_t>(rounded);
}

std::size_t Grid::refinement(double fine_step) const {
  if (!(fine_step > 0.0)) throw Error(ErrorKind::GridMismatch, "step must be positive");
  const double ratio = step / fine_step;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > kSnapTolerance * ratio) {
    std::ostringstream msg;
    msg << "step " << fine_step << " does not divide grid step " << step;
    throw Error(ErrorKind::GridMismatch, msg.str());
  }
  return static_cast<std::size_t>(rounded);
}

bool operator==(const Grid& a, const Grid& b) noexcept {
  return a.steps_ == b.steps_ && std::abs(a.step - b.step) <= 1e-12 * std::max(a.step, b.step);
}

std::size_t snap_to_lag(double location, double step) {
  const double x = -location / step;
  const double k = std::round(x);
  if (k < 0.0 || std::abs(x - k) > kSnapTolerance) {
    std::ostringstream msg;
    msg << "location " << location << " is not a nonpositive multiple of step " << step;
    throw Error(ErrorKind::OffGridAtom, msg.str());
  }
  return static_cast<std::size_t>(k);
}

ScalarMeasure::ScalarMeasure(Grid grid) : grid_(grid) {}

ScalarMeasure::ScalarMeasure(Grid grid, const std::vector<LocatedAtom>& atoms,
                             const std::vector<double>& density_samples, double tail_mass)
    : grid_(grid), tail_(tail_mass) {
  const std::size_t n = grid_.steps();
  for (const LocatedAtom& a : atoms) {
    if (!std::isfinite(a.mass)) throw Error(ErrorKind::InvalidMeasure, "atom mass must be finite");
    const std::size_t lag = snap_to_lag(a.location, grid_.step);
    if (lag > n) {
      std::ostringstream msg;
      msg << "atom at " << a.location << " lies beyond the horizon " << grid_.horizon;
      throw Error(ErrorKind::InvalidMeasure, msg.str());
    }
    atoms_.push_back({lag, a.mass});
  }
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& x, const Atom& y) { return x.lag < y.lag; });
  for (std::size_t i = 1; i < atoms_.size(); ++i) {
    if (atoms_[i].lag == atoms_[i - 1].lag) {
      throw Error(ErrorKind::InvalidMeasure, "atom locations must be pairwise distinct");
    }
  }
  if (!density_samples.empty()) {
    if (density_samples.size() != n + 1) {
      throw Error(ErrorKind::InvalidMeasure, "density needs one sample per grid point (H/h + 1)");
    }
    density_.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      if (!std::isfinite(density_samples[k])) throw Error(ErrorKind::InvalidMeasure, "density must be finite");
      density_[k] = density_samples[k] * trapezoid_weight(k, n, grid_.step);
    }
  }
  if (!std::isfinite(tail_)) throw Error(ErrorKind::InvalidMeasure, "tail mass must be finite");
  finalize();
}

ScalarMeasure ScalarMeasure::dirac(Grid grid, double location, double mass) {
  return ScalarMeasure(grid, {{location, mass}});
}

ScalarMeasure ScalarMeasure::exponential(Grid grid, double rate, double scale) {
  if (!(rate > 0.0)) throw Error(ErrorKind::InvalidMeasure, "exponential density needs a positive rate");
  const std::size_t n = grid.steps();
  const double h = grid.step;
  std::vector<double> weights(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double centre = -static_cast<double>(k) * h;
    const double hi = std::min(0.0, centre + 0.5 * h);
    const double lo = std::max(-grid.horizon, centre - 0.5 * h);
    weights[k] = scale * (std::exp(rate * hi) - std::exp(rate * lo));
  }
  return from_parts(grid, {}, std::move(weights), scale * std::exp(-rate * grid.horizon));
}

ScalarMeasure ScalarMeasure::uniform(Grid grid, double a, double b, double scale) {
  if (!(a < b) || b > 0.0) throw Error(ErrorKind::InvalidMeasure, "uniform density needs a < b <= 0");
  const std::size_t n = grid.steps();
  const double h = grid.step;
  const double rho = scale / (b - a);
  std::vector<double> weights(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double centre = -static_cast<double>(k) * h;
    const double hi = std::min(0.0, centre + 0.5 * h);
    const double lo = std::max(-grid.horizon, centre - 0.5 * h);
    weights[k] = rho * overlap(lo, hi, a, b);
  }
  const double tail = rho * overlap(-std::numeric_limits<double>::infinity(), -grid.horizon, a, b);
  return from_parts(grid, {}, std::move(weights), tail);
}

ScalarMeasure ScalarMeasure::from_parts(Grid grid, std::vector<Atom> atoms, std::vector<double> density_weights,
                                        double tail_mass) {
  ScalarMeasure m(grid);
  const std::size_t n = grid.steps();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].lag > n) throw Error(ErrorKind::InvalidMeasure, "atom beyond horizon");
    if (i > 0 && atoms[i].lag <= atoms[i - 1].lag) {
      throw Error(ErrorKind::InvalidMeasure, "atoms must be sorted and distinct");
    }
  }
  if (!density_weights.empty() && density_weights.size() != n + 1) {
    throw Error(ErrorKind::InvalidMeasure, "density weights need H/h + 1 entries");
  }
  m.atoms_ = std::move(atoms);
  m.density_ = std::move(density_weights);
  m.tail_ = tail_mass;
  m.finalize();
  return m;
}

void ScalarMeasure::finalize() {
  if (!density_.empty() && std::all_of(density_.begin(), density_.end(), [](double q) { return q == 0.0; })) {
    density_.clear();
  }
  discrete_.clear();
  std::size_t ai = 0;
  const std::size_t n = density_.empty() ? 0 : density_.size();
  std::size_t k = 0;
  while (ai < atoms_.size() || k < n) {
    std::size_t lag;
    if (ai < atoms_.size() && (k >= n || atoms_[ai].lag <= k)) {
      lag = atoms_[ai].lag;
    } else {
      lag = k;
    }
    double w = 0.0;
    if (ai < atoms_.size() && atoms_[ai].lag == lag) w += atoms_[ai++].mass;
    if (k < n && k == lag) w += density_[k++];
    if (w != 0.0) discrete_.push_back({lag, w});
  }
}

std::vector<double> ScalarMeasure::density_samples() const {
  std::vector<double> out(density_.size());
  const std::size_t n = grid_.steps();
  for (std::size_t k = 0; k < density_.size(); ++k) out[k] = density_[k] / trapezoid_weight(k, n, grid_.step);
  return out;
}

double ScalarMeasure::atom_at(std::size_t lag) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), lag,
                             [](const Atom& a, std::size_t l) { return a.lag < l; });
  return (it != atoms_.end() && it->lag == lag) ? it->mass : 0.0;
}

double ScalarMeasure::density_weight_at(std::size_t lag) const {
  return lag < density_.size() ? density_[lag] : 0.0;
}

double ScalarMeasure::weight_at(std::size_t lag) const { return atom_at(lag) + density_weight_at(lag); }

double ScalarMeasure::signed_mass() const noexcept {
  double s = 0.0;
  for (const Atom& a : discrete_) s += a.mass;
  return s;
}

double ScalarMeasure::total_variation() const noexcept {
  // Atoms and density are mutually singular, so their variations add.
  double s = 0.0;
  for (const Atom& a : atoms_) s += std::abs(a.mass);
  for (double q : density_) s += std::abs(q);
  return s;
}

bool ScalarMeasure::is_nonnegative(double tol) const noexcept {
  for (const Atom& a : atoms_) {
    if (a.mass < -tol) return false;
  }
  for (double q : density_) {
    if (q < -tol) return false;
  }
  return tail_ >= -tol;
}

ScalarMeasure ScalarMeasure::scaled(double factor) const {
  ScalarMeasure out = *this;
  for (Atom& a : out.atoms_) a.mass *= factor;
  for (double& q : out.density_) q *= factor;
  out.tail_ *= factor;
  out.finalize();
  return out;
}

namespace {

ScalarMeasure combine(const ScalarMeasure& a, const ScalarMeasure& b, double sign) {
  require_same_grid(a.grid(), b.grid(), "measure sum");
  std::map<std::size_t, double> atoms;
  for (const Atom& x : a.atoms()) atoms[x.lag] += x.mass;
  for (const Atom& x : b.atoms()) atoms[x.lag] += sign * x.mass;
  std::vector<Atom> merged;
  merged.reserve(atoms.size());
  for (const auto& [lag, mass] : atoms) merged.push_back({lag, mass});
  std::vector<double> density;
  if (a.has_density() || b.has_density()) {
    density.assign(a.grid().steps() + 1, 0.0);
    for (std::size_t k = 0; k < a.density_weights().size(); ++k) density[k] += a.density_weights()[k];
    for (std::size_t k = 0; k < b.density_weights().size(); ++k) density[k] += sign * b.density_weights()[k];
  }
  return ScalarMeasure::from_parts(a.grid(), std::move(merged), std::move(density),
                                   a.tail_mass() + sign * b.tail_mass());
}

}  // namespace

ScalarMeasure operator+(const ScalarMeasure& a, const ScalarMeasure& b) { return combine(a, b, 1.0); }
ScalarMeasure operator-(const ScalarMeasure& a, const ScalarMeasure& b) { return combine(a, b, -1.0); }

double total_variation(const ScalarMeasure& m) noexcept { return m.total_variation(); }

Convolution convolve(const ScalarMeasure& a, const ScalarMeasure& b) {
  require_same_grid(a.grid(), b.grid(), "convolve");
  const std::size_t n = a.grid().steps();
  std::map<std::size_t, double> atoms;
  std::vector<double> density;
  double overflow_signed = 0.0;
  double overflow_tv = 0.0;

  auto spill = [&](double q) {
    overflow_signed += q;
    overflow_tv += std::abs(q);
  };

  for (const Atom& x : a.atoms()) {
    for (const Atom& y : b.atoms()) {
      const double q = x.mass * y.mass;
      const std::size_t lag = x.lag + y.lag;
      if (lag <= n) {
        atoms[lag] += q;
      } else {
        spill(q);
      }
    }
  }

  auto shift_density = [&](const std::vector<Atom>& shifts, const std::vector<double>& dens) {
    if (dens.empty() || shifts.empty()) return;
    if (density.empty()) density.assign(n + 1, 0.0);
    for (const Atom& s : shifts) {
      for (std::size_t k = 0; k < dens.size(); ++k) {
        const double q = s.mass * dens[k];
        const std::size_t lag = s.lag + k;
        if (lag <= n) {
          density[lag] += q;
        } else {
          spill(q);
        }
      }
    }
  };
  shift_density(a.atoms(), b.density_weights());
  shift_density(b.atoms(), a.density_weights());

  const auto& da = a.density_weights();
  const auto& db = b.density_weights();
  if (!da.empty() && !db.empty()) {
    if (density.empty()) density.assign(n + 1, 0.0);
    for (std::size_t l = 0; l < da.size(); ++l) {
      if (da[l] == 0.0) continue;
      for (std::size_t k = 0; k < db.size(); ++k) {
        const double q = da[l] * db[k];
        const std::size_t lag = l + k;
        if (lag <= n) {
          density[lag] += q;
        } else {
          spill(q);
        }
      }
    }
  }

  const double ta = a.tail_mass();
  const double tb = b.tail_mass();
  const double tail = ta * (b.signed_mass() + tb) + a.signed_mass() * tb + overflow_signed;
  const double loss = overflow_tv + std::abs(ta) * b.full_variation() + a.total_variation() * std::abs(tb);

  std::vector<Atom> merged;
  merged.reserve(atoms.size());
  for (const auto& [lag, mass] : atoms) merged.push_back({lag, mass});
  return {ScalarMeasure::from_parts(a.grid(), std::move(merged), std::move(density), tail), loss};
}

Kernel::Kernel(Grid grid, std::size_t dim) : grid_(grid), dim_(dim), entries_(dim * dim, ScalarMeasure(grid)) {}

Kernel Kernel::identity(Grid grid, std::size_t dim) {
  Kernel k(grid, dim);
  for (std::size_t i = 0; i < dim; ++i) k.set(i, i, ScalarMeasure::dirac(grid, 0.0));
  return k;
}

void Kernel::set(std::size_t i, std::size_t j, ScalarMeasure m) {
  if (i >= dim_ || j >= dim_) throw Error(ErrorKind::Precondition, "kernel index out of range");
  require_same_grid(grid_, m.grid(), "kernel entry");
  entries_[i * dim_ + j] = std::move(m);
}

double Kernel::row_variation(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) s += at(i, j).full_variation();
  return s;
}

double Kernel::contraction() const {
  double c = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) c = std::max(c, row_variation(i));
  return c;
}

bool Kernel::is_nonnegative() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const ScalarMeasure& m) { return m.is_nonnegative(); });
}

namespace {

Kernel combine(const Kernel& a, const Kernel& b, double sign) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::Precondition, "kernel dimensions differ");
  require_same_grid(a.grid(), b.grid(), "kernel sum");
  Kernel out(a.grid(), a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) {
    for (std::size_t j = 0; j < a.dim(); ++j) {
      out.set(i, j, sign > 0 ? a.at(i, j) + b.at(i, j) : a.at(i, j) - b.at(i, j));
    }
  }
  return out;
}

}  // namespace

Kernel operator+(const Kernel& a, const Kernel& b) { return combine(a, b, 1.0); }
Kernel operator-(const Kernel& a, const Kernel& b) { return combine(a, b, -1.0); }

KernelConvolution convolve(const Kernel& a, const Kernel& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::Precondition, "kernel dimensions differ");
  require_same_grid(a.grid(), b.grid(), "kernel convolve");
  const std::size_t m = a.dim();
  KernelConvolution out{Kernel(a.grid(), m), 0.0};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      ScalarMeasure acc(a.grid());
      for (std::size_t k = 0; k < m; ++k) {
        if (a.at(i, k).is_zero() || b.at(k, j).is_zero()) continue;
        Convolution c = convolve(a.at(i, k), b.at(k, j));
        out.tail_loss += c.tail_loss;
        acc = acc.is_zero() ? std::move(c.measure) : acc + c.measure;
      }
      out.kernel.set(i, j, std::move(acc));
    }
  }
  return out;
}

NeumannInverse neumann_inverse(const Kernel& nu, double tol, std::size_t max_terms) {
  if (!(tol > 0.0)) throw Error(ErrorKind::Precondition, "tolerance must be positive");
  const double c = nu.contraction();
  if (c >= 1.0) {
    std::size_t worst = 0;
    for (std::size_t i = 1; i < nu.dim(); ++i) {
      if (nu.row_variation(i) > nu.row_variation(worst)) worst = i;
    }
    std::ostringstream msg;
    msg << "row " << worst + 1 << " of nu has total variation " << nu.row_variation(worst) << " >= 1";
    throw Error(ErrorKind::NotContractive, msg.str());
  }
  NeumannInverse out;
  out.contraction = c;
  Kernel term = Kernel::identity(nu.grid(), nu.dim());
  Kernel sum = term;
  std::size_t k = 0;
  for (;;) {
    if (k >= max_terms) {
      throw Error(ErrorKind::NoConvergence, "Neumann series did not reach tolerance within max_terms");
    }
    KernelConvolution next = convolve(nu, term);
    out.tail_loss += next.tail_loss;
    term = std::move(next.kernel);
    sum = sum + term;
    ++k;
    if (term.contraction() == 0.0) break;  // nilpotent: the series is exact
    if (std::pow(c, static_cast<double>(k + 1)) / (1.0 - c) <= tol) break;
  }
  out.inverse = std::move(sum);
  out.terms = k;
  out.residual_bound = term.contraction() == 0.0 ? 0.0 : std::pow(c, static_cast<double>(k + 1)) / (1.0 - c);
  return out;
}

}  // namespace nfde
