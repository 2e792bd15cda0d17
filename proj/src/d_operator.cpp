#include "nfde/d_operator.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>

#include "nfde/error.hpp"

namespace nfde {

struct DOperator::Cache {
  std::once_flag once;
  std::optional<NeumannInverse> inverse;
};

DOperator::DOperator(Kernel nu) : nu_(std::move(nu)), cache_(std::make_shared<Cache>()) {
  for (std::size_t i = 0; i < nu_.dim(); ++i) {
    for (std::size_t j = 0; j < nu_.dim(); ++j) {
      const ScalarMeasure& m = nu_.at(i, j);
      if (m.weight_at(0) != 0.0 || m.atom_at(0) != 0.0) {
        std::ostringstream msg;
        msg << "nu(" << i + 1 << "," << j + 1 << ") has mass at s = 0";
        throw Error(ErrorKind::MassAtZero, msg.str());
      }
      if (m.tail_mass() != 0.0) {
        depth_ = std::max(depth_, nu_.grid().horizon);
      } else if (!m.discrete().empty()) {
        depth_ = std::max(depth_, static_cast<double>(m.max_lag()) * nu_.grid().step);
      }
    }
  }
  contraction_ = nu_.contraction();
}

const NeumannInverse& DOperator::inverse_measure(double tol) const {
  if (!contractive()) {
    std::ostringstream msg;
    msg << "contraction constant " << contraction_ << " >= 1";
    throw Error(ErrorKind::NotContractive, msg.str());
  }
  std::call_once(cache_->once, [&] { cache_->inverse = neumann_inverse(nu_, tol); });
  return *cache_->inverse;
}

namespace {

void require_compatible(const DOperator& op, const HistoryFn& x) {
  if (x.dim() != op.dim()) throw Error(ErrorKind::GridMismatch, "history dimension differs from operator");
  op.grid().refinement(x.grid().step);
}

// nu entries as (lag in history steps, weight) lists.
struct LagTable {
  std::size_t dim = 0;
  std::vector<std::vector<Atom>> lags;  // row-major i * dim + j
  std::vector<double> tails;
  std::vector<double> full_mass;  // signed mass including tail
};

LagTable lag_table(const DOperator& op, double step) {
  const std::size_t q = op.grid().refinement(step);
  LagTable t;
  t.dim = op.dim();
  t.lags.resize(t.dim * t.dim);
  t.tails.resize(t.dim * t.dim);
  t.full_mass.resize(t.dim * t.dim);
  for (std::size_t i = 0; i < t.dim; ++i) {
    for (std::size_t j = 0; j < t.dim; ++j) {
      const ScalarMeasure& m = op.nu().at(i, j);
      auto& row = t.lags[i * t.dim + j];
      for (const Atom& a : m.discrete()) row.push_back({a.lag * q, a.mass});
      t.tails[i * t.dim + j] = m.tail_mass();
      t.full_mass[i * t.dim + j] = m.signed_mass() + m.tail_mass();
    }
  }
  return t;
}

// out = base - sign * (nu * x) on the grid, pre-horizon constant included.
void convolve_history(const LagTable& t, const std::vector<std::vector<double>>& x, const std::vector<double>& xb,
                      const std::vector<std::vector<double>>& base, const std::vector<double>& bb, double sign,
                      std::vector<std::vector<double>>& out, std::vector<double>& ob) {
  const std::size_t m = t.dim;
  const std::size_t n = x.front().size();
  for (std::size_t i = 0; i < m; ++i) {
    auto& row = out[i];
    row = base[i];
    double before = bb[i];
    for (std::size_t j = 0; j < m; ++j) {
      const auto& lags = t.lags[i * m + j];
      const auto& col = x[j];
      const double tail = t.tails[i * m + j];
      before += sign * t.full_mass[i * m + j] * xb[j];
      if (lags.empty() && tail == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        double acc = tail * xb[j];
        for (const Atom& a : lags) acc += a.mass * (k >= a.lag ? col[k - a.lag] : xb[j]);
        row[k] += sign * acc;
      }
    }
    ob[i] = before;
  }
}

}  // namespace

std::vector<double> neutral_memory(const DOperator& op, const HistoryView& x) {
  const std::size_t m = op.dim();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const ScalarMeasure& nu = op.nu().at(i, j);
      if (nu.is_zero()) continue;
      out[i] += integrate_against(nu, [&](double s) { return x.at(j, s); });
    }
  }
  return out;
}

std::vector<double> apply_D(const DOperator& op, const HistoryView& x) {
  if (x.dim() != op.dim()) throw Error(ErrorKind::GridMismatch, "history dimension differs from operator");
  std::vector<double> out = neutral_memory(op, x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.now(i) - out[i];
  return out;
}

std::vector<double> apply_D(const DOperator& op, const HistoryFn& x) {
  require_compatible(op, x);
  return apply_D(op, x.view());
}

HistoryFn apply_Dhat(const DOperator& op, const HistoryFn& x) {
  require_compatible(op, x);
  const LagTable t = lag_table(op, x.grid().step);
  std::vector<std::vector<double>> out(x.dim());
  std::vector<double> ob(x.dim());
  convolve_history(t, x.columns(), x.before(), x.columns(), x.before(), -1.0, out, ob);
  return HistoryFn(x.grid(), std::move(out), std::move(ob));
}

Inversion invert_Dhat_detailed(const DOperator& op, const HistoryFn& h, double tol, std::size_t max_iterations) {
  require_compatible(op, h);
  if (!op.contractive()) {
    std::ostringstream msg;
    msg << "contraction constant " << op.contraction() << " >= 1";
    throw Error(ErrorKind::NotContractive, msg.str());
  }
  const double c = op.contraction();
  const LagTable t = lag_table(op, h.grid().step);
  std::vector<std::vector<double>> x = h.columns();
  std::vector<double> xb = h.before();
  std::vector<std::vector<double>> next(h.dim());
  std::vector<double> nb(h.dim());
  std::size_t it = 0;
  for (;;) {
    if (it >= max_iterations) {
      throw Error(ErrorKind::NoConvergence, "Picard iteration for D^-1 did not reach tolerance");
    }
    convolve_history(t, x, xb, h.columns(), h.before(), 1.0, next, nb);
    ++it;
    double diff = 0.0;
    for (std::size_t j = 0; j < h.dim(); ++j) {
      for (std::size_t k = 0; k < next[j].size(); ++k) diff = std::max(diff, std::abs(next[j][k] - x[j][k]));
      diff = std::max(diff, std::abs(nb[j] - xb[j]));
    }
    std::swap(x, next);
    std::swap(xb, nb);
    // D^ x - h = nu * (x_prev - x), bounded by c * diff.
    if (c * diff <= 0.5 * tol) break;
  }
  Inversion out{HistoryFn(h.grid(), std::move(x), std::move(xb)), it, 0.0};
  out.residual = sup_norm(apply_Dhat(op, out.x) - h);
  if (out.residual > tol) {
    std::ostringstream msg;
    msg << "D^-1 residual " << out.residual << " exceeds tolerance " << tol;
    throw Error(ErrorKind::NoConvergence, msg.str());
  }
  return out;
}

HistoryFn invert_Dhat(const DOperator& op, const HistoryFn& h, double tol) {
  return invert_Dhat_detailed(op, h, tol).x;
}

Trajectory solve_forward(const DOperator& op, const HistoryFn& phi, const Forcing& h, double T, double compat_tol) {
  require_compatible(op, phi);
  Trajectory traj(phi, phi.grid().step);
  traj.scheme = "explicit-recursion";
  const std::vector<double> h0 = h(0.0);
  const std::vector<double> d0 = apply_D(op, phi);
  for (std::size_t i = 0; i < op.dim(); ++i) {
    if (std::abs(d0[i] - h0[i]) > compat_tol) {
      std::ostringstream msg;
      msg << "D phi = " << d0[i] << " but h(0) = " << h0[i] << " in component " << i + 1;
      throw Error(ErrorKind::IncompatibleInitialData, msg.str());
    }
  }
  traj.push(phi.value_at_zero(), h0);
  const auto steps = static_cast<std::size_t>(std::llround(T / traj.step()));
  std::vector<double> z(op.dim());
  for (std::size_t n = 1; n <= steps; ++n) {
    const double t = traj.time(n);
    const std::vector<double> target = h(t);
    // nu has no mass in (-step, 0], so the memory term only reads stored samples.
    const std::vector<double> mem = neutral_memory(op, traj.view(n));
    for (std::size_t i = 0; i < op.dim(); ++i) z[i] = target[i] + mem[i];
    traj.push(z, target);
    const std::vector<double> check = apply_D(op, traj.view(n));
    for (std::size_t i = 0; i < op.dim(); ++i) {
      traj.max_residual = std::max(traj.max_residual, std::abs(check[i] - target[i]));
    }
  }
  return traj;
}

double StabilityEstimate::envelope(double t) const {
  if (times.empty()) return 0.0;
  if (t <= times.front()) return decay.front();
  if (t >= times.back()) return decay.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto idx = static_cast<std::size_t>(it - times.begin());
  // Piecewise constant from the left: the envelope is a step function.
  return decay[idx - 1];
}

StabilityEstimate estimate_stability(const DOperator& op, std::size_t runs, double T_max, std::uint64_t seed) {
  StabilityEstimate est;
  const Grid& g = op.grid();
  const auto steps = static_cast<std::size_t>(std::llround(T_max / g.step));
  est.times.reserve(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) est.times.push_back(static_cast<double>(n) * g.step);

  const double c = op.contraction();
  if (c < 1.0) {
    est.certified = true;
    est.k = 1.0 / (1.0 - c);
    est.d = est.k;
    est.k_T1 = est.k;
    est.k_T2 = std::max(1.0, c / (1.0 - c));
    est.decay.reserve(est.times.size());
    for (double t : est.times) {
      if (t == 0.0) {
        est.decay.push_back(1.0);
      } else if (op.depth() == 0.0) {
        est.decay.push_back(0.0);
      } else {
        est.decay.push_back(std::pow(c, std::floor(t / op.depth() + 1e-9)));
      }
    }
    est.note = "certified: contraction constant below one";
    return est;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::uniform_real_distribution<double> freq(0.1, 2.0);
  est.decay.assign(est.times.size(), 0.0);
  const std::size_t m = op.dim();
  for (std::size_t r = 0; r < runs; ++r) {
    std::vector<double> a0(m), a1(m), f1(m);
    for (std::size_t j = 0; j < m; ++j) {
      a0[j] = amp(rng);
      a1[j] = amp(rng);
      f1[j] = freq(rng);
    }
    HistoryFn psi = HistoryFn::from_function(g, m, [&](std::size_t j, double s) {
      return a0[j] + a1[j] * std::cos(f1[j] * s);
    });
    // Enforce D phi = 0 by adjusting the value at s = 0.
    const std::vector<double> mem = neutral_memory(op, psi.view());
    std::vector<std::vector<double>> cols = psi.columns();
    for (std::size_t j = 0; j < m; ++j) cols[j].back() = mem[j];
    const HistoryFn phi(g, std::move(cols), psi.before());
    const double norm = sup_norm(phi);
    if (norm == 0.0) continue;
    const Trajectory traj =
        solve_forward(op, phi, [m](double) { return std::vector<double>(m, 0.0); }, T_max, 1e-9);
    double running = 0.0;
    for (std::size_t n = traj.size(); n-- > 0;) {
      for (std::size_t i = 0; i < m; ++i) running = std::max(running, std::abs(traj.z(i, n)) / norm);
      est.decay[n] = std::max(est.decay[n], running);
    }
  }
  est.certified = false;
  est.k = std::numeric_limits<double>::infinity();
  est.d = est.k;
  est.k_T1 = est.k;
  est.k_T2 = est.decay.empty() ? 0.0 : *std::max_element(est.decay.begin(), est.decay.end());
  est.note = "uncertified: contraction constant >= 1, envelope estimated from sampled homogeneous solutions";
  return est;
}

std::vector<double> dstar_apply(const DOperator& op, const HistoryFn& x, double tol) {
  return invert_Dhat(op, x, tol).value_at_zero();
}

std::vector<double> dstar_apply_measure(const DOperator& op, const HistoryFn& x, double tol) {
  require_compatible(op, x);
  const NeumannInverse& inv = op.inverse_measure(tol);
  const HistoryView v = x.view();
  std::vector<double> out(op.dim(), 0.0);
  for (std::size_t i = 0; i < op.dim(); ++i) {
    for (std::size_t j = 0; j < op.dim(); ++j) {
      out[i] += integrate_against(inv.inverse.at(i, j), [&](double s) { return v.at(j, s); });
    }
  }
  return out;
}

}  // namespace nfde
