#include "nfde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nfde/error.hpp"

namespace nfde {

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::Equal: return "equal";
    case Relation::Le: return "le";
    case Relation::Ge: return "ge";
    case Relation::Incomparable: return "incomparable";
  }
  return "unknown";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Skip: return "skip";
  }
  return "unknown";
}

namespace {

// Running one-sided excesses of a - b and b - a.
struct OrderScan {
  double above = 0.0;  // max(a - b)
  double below = 0.0;  // max(b - a)
  double above_time = 0.0, below_time = 0.0;
  std::size_t above_comp = 0, below_comp = 0;

  void add(double a, double b, double t, std::size_t comp) {
    const double d = a - b;
    if (d > above) {
      above = d;
      above_time = t;
      above_comp = comp;
    }
    if (-d > below) {
      below = -d;
      below_time = t;
      below_comp = comp;
    }
  }

  OrderVerdict verdict(double tol) const {
    OrderVerdict v;
    const bool le = above <= tol;  // a <= b
    const bool ge = below <= tol;
    if (le && ge) {
      v.relation = Relation::Equal;
      v.max_violation = std::max(above, below);
    } else if (le) {
      v.relation = Relation::Le;
      v.max_violation = above;
      v.witness_time = below_time;
      v.witness_component = below_comp;
    } else if (ge) {
      v.relation = Relation::Ge;
      v.max_violation = below;
      v.witness_time = above_time;
      v.witness_component = above_comp;
    } else {
      v.relation = Relation::Incomparable;
      if (above < below) {
        v.max_violation = above;
        v.witness_time = above_time;
        v.witness_component = above_comp;
      } else {
        v.max_violation = below;
        v.witness_time = below_time;
        v.witness_component = below_comp;
      }
    }
    return v;
  }
};

void scan_histories(const HistoryFn& a, const HistoryFn& b, OrderScan& scan, double from_time) {
  for (std::size_t j = 0; j < a.dim(); ++j) {
    if (from_time == -std::numeric_limits<double>::infinity()) {
      scan.add(a.before(j), b.before(j), -std::numeric_limits<double>::infinity(), j);
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a.time_at(k) < from_time - 1e-12) continue;
      scan.add(a.sample(j, k), b.sample(j, k), a.time_at(k), j);
    }
  }
}

void require_matching(const Trajectory& x, const Trajectory& y) {
  if (x.dim() != y.dim() || x.size() != y.size() || std::abs(x.step() - y.step()) > 1e-15) {
    throw Error(ErrorKind::GridMismatch, "trajectories differ in dimension, length or step");
  }
}

// Least-squares slope of log(values) against times, zeros skipped.
double fitted_rate(const std::vector<double>& times, const std::vector<double>& values) {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0.0)) continue;
    const double y = std::log(values[k]);
    n += 1;
    sx += times[k];
    sy += y;
    sxx += times[k] * times[k];
    sxy += times[k] * y;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2 || den == 0.0) return 0.0;
  return -(n * sxy - sx * sy) / den;
}

std::vector<std::size_t> draining_targets(const Decomposition& d) {
  NodeSet t = d.j0;
  for (const IrreducibleSet& s : d.irreducible) {
    if (s.outflow) t.insert(s.members.begin(), s.members.end());
  }
  return {t.begin(), t.end()};
}

}  // namespace

OrderVerdict d_order_compare(const DOperator& op, const HistoryFn& x, const HistoryFn& y, double tol) {
  require_same_grid(x, y);
  OrderScan scan;
  scan_histories(apply_Dhat(op, x), apply_Dhat(op, y), scan, -std::numeric_limits<double>::infinity());
  return scan.verdict(tol);
}

OrderVerdict pointwise_compare(const HistoryFn& x, const HistoryFn& y, double tol) {
  require_same_grid(x, y);
  OrderScan scan;
  scan_histories(x, y, scan, -std::numeric_limits<double>::infinity());
  return scan.verdict(tol);
}

OrderVerdict d_order_compare(const DOperator& op, const Trajectory& x, const Trajectory& y, double t_from,
                             double tol) {
  require_matching(x, y);
  const double horizon = x.initial().grid().horizon;
  const double start = t_from - horizon;
  OrderScan scan;
  if (start < 0.0) {
    const HistoryFn dx = apply_Dhat(op, refine(x.initial(), x.step()));
    const HistoryFn dy = apply_Dhat(op, refine(y.initial(), y.step()));
    scan_histories(dx, dy, scan, start);
  }
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (x.time(n) < start - 1e-12) continue;
    for (std::size_t i = 0; i < x.dim(); ++i) scan.add(x.w(i, n), y.w(i, n), x.time(n), i);
  }
  return scan.verdict(tol);
}

HistoryFn positive_part(const DOperator& op, const HistoryFn& x, double tol) {
  const HistoryFn dx = apply_Dhat(op, x);
  std::vector<std::vector<double>> cols = dx.columns();
  std::vector<double> before = dx.before();
  for (auto& col : cols) {
    for (double& v : col) v = std::max(0.0, v);
  }
  for (double& v : before) v = std::max(0.0, v);
  return invert_Dhat(op, HistoryFn(dx.grid(), std::move(cols), std::move(before)), tol);
}

MassDrift mass_drift(const Trajectory& traj, const CompartmentalModel& model) {
  if (!traj.has_mass()) throw Error(ErrorKind::Precondition, "trajectory has no mass series");
  MassDrift out;
  out.closed = model.closed();
  const double m0 = traj.mass(0);
  double integral = 0.0;
  double prev_rate = 0.0;
  for (std::size_t n = 0; n < traj.size(); ++n) {
    const double t = traj.time(n);
    if (!out.closed) {
      double rate = 0.0;
      for (std::size_t i = 0; i < model.size(); ++i) rate += model.inflow(i, t) - model.outflow(i)(t, traj.z(i, n));
      if (n > 0) integral += 0.5 * traj.step() * (prev_rate + rate);
      prev_rate = rate;
    }
    const double dev = std::abs(traj.mass(n) - m0 - integral);
    if (dev > out.max_abs) {
      out.max_abs = dev;
      out.witness_time = t;
    }
  }
  out.relative = m0 != 0.0 ? out.max_abs / std::abs(m0) : out.max_abs;
  return out;
}

MassGapReport ordered_mass_gap(const Trajectory& x, const Trajectory& y, double tol, bool throw_on_violation) {
  require_matching(x, y);
  if (!x.has_mass() || !y.has_mass()) throw Error(ErrorKind::Precondition, "trajectories need mass series");
  MassGapReport r;
  r.mass_gap = y.mass(0) - x.mass(0);
  r.min_lower = std::numeric_limits<double>::infinity();
  r.max_upper_excess = -std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    for (std::size_t i = 0; i < x.dim(); ++i) {
      const double gap = y.w(i, n) - x.w(i, n);
      r.min_lower = std::min(r.min_lower, gap);
      r.max_upper_excess = std::max(r.max_upper_excess, gap - r.mass_gap);
      const double breach = std::max(-gap, gap - r.mass_gap);
      if (breach > tol) ++r.violations;
      if (breach > worst) {
        worst = breach;
        r.witness_time = x.time(n);
        r.witness_component = i;
      }
    }
  }
  if (r.violations > 0 && throw_on_violation) {
    std::ostringstream msg;
    msg << r.violations << " grid points break 0 <= D z_t(y) - D z_t(x) <= " << r.mass_gap << "; worst by " << worst
        << " at t = " << r.witness_time << ", component " << r.witness_component + 1;
    throw Error(ErrorKind::OrderViolation, msg.str());
  }
  return r;
}

StabilityModulus stability_modulus(const CompartmentalModel& model, const Trajectory& base,
                                   const std::vector<HistoryFn>& perturbations, const std::vector<double>& epsilons,
                                   const IntegratorOptions& opts, double slack) {
  StabilityModulus out;
  IntegratorOptions run = opts;
  run.T = base.end_time();
  run.step = base.step();
  const double c = model.op().contraction();
  for (const HistoryFn& p : perturbations) {
    const HistoryFn y0 = base.initial() + p;
    PerturbationRun r;
    r.size = sup_norm(p);
    const Trajectory traj = integrate(model, y0, run);
    for (std::size_t i = 0; i < traj.dim(); ++i) {
      const auto& a = traj.past()[i];
      const auto& b = base.past()[i];
      for (std::size_t k = 0; k < a.size(); ++k) r.gap = std::max(r.gap, std::abs(a[k] - b[k]));
      r.gap = std::max(r.gap, std::abs(y0.before(i) - base.initial().before(i)));
    }
    if (traj.has_mass() && base.has_mass()) r.mass_gap = traj.mass(0) - base.mass(0);
    const Relation rel = d_order_compare(model.op(), base.initial(), y0).relation;
    r.ordered = rel != Relation::Incomparable;
    if (r.ordered && c < 1.0) {
      r.chain_bound = std::max(std::abs(r.mass_gap), sup_norm(apply_Dhat(model.op(), p))) / (1.0 - c);
      r.chain_holds = r.gap <= r.chain_bound + slack;
    }
    out.runs.push_back(r);
  }
  std::vector<PerturbationRun> sorted = out.runs;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.size < b.size; });
  for (double eps : epsilons) {
    double delta = 0.0;
    for (const PerturbationRun& r : sorted) {
      if (!(r.gap <= eps)) break;
      delta = r.size;
    }
    if (delta > 0.0) {
      out.table.push_back({eps, delta});
    } else {
      out.unmet.push_back(eps);
    }
  }
  return out;
}

EmptyingReport emptying_check(const Trajectory& traj, const CompartmentalModel& model, const Decomposition& d,
                              double threshold, double window_fraction) {
  EmptyingReport r;
  r.threshold = threshold;
  if (model.has_inflow()) {
    r.reason = "model has inflow";
    return r;
  }
  r.targets = draining_targets(d);
  if (r.targets.empty()) {
    r.reason = "no compartment outside closed irreducible sets";
    return r;
  }
  const double from = (1.0 - window_fraction) * traj.end_time();
  r.terminal.assign(r.targets.size(), 0.0);
  for (std::size_t n = 0; n < traj.size(); ++n) {
    if (traj.time(n) < from - 1e-12) continue;
    for (std::size_t k = 0; k < r.targets.size(); ++k) {
      r.terminal[k] = std::max(r.terminal[k], std::abs(traj.z(r.targets[k], n)));
    }
  }
  const bool ok = std::all_of(r.terminal.begin(), r.terminal.end(), [&](double v) { return v < threshold; });
  r.verdict = ok ? Verdict::Pass : Verdict::Fail;
  return r;
}

ConvergenceReport window_distance(const Trajectory& x, const Trajectory& y, const std::vector<std::size_t>& targets,
                                  double threshold, std::size_t windows) {
  require_matching(x, y);
  if (windows == 0) throw Error(ErrorKind::Precondition, "need at least one window");
  ConvergenceReport r;
  r.targets = targets;
  r.threshold = threshold;
  r.window_sup.assign(windows, 0.0);
  r.component_sup.assign(targets.size(), std::vector<double>(windows, 0.0));
  const std::size_t last = x.size() - 1;
  std::vector<double> centers(windows);
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t lo = w * last / windows;
    const std::size_t hi = (w + 1) * last / windows;
    centers[w] = 0.5 * (x.time(lo) + x.time(hi));
    for (std::size_t n = lo; n <= hi; ++n) {
      for (std::size_t k = 0; k < targets.size(); ++k) {
        const double d = std::abs(x.z(targets[k], n) - y.z(targets[k], n));
        r.component_sup[k][w] = std::max(r.component_sup[k][w], d);
        r.window_sup[w] = std::max(r.window_sup[w], d);
      }
    }
  }
  r.rate = fitted_rate(centers, r.window_sup);
  r.final_gap = r.window_sup.back();
  r.verdict = r.final_gap < threshold ? Verdict::Pass : Verdict::Fail;
  return r;
}

ConvergenceReport merging_check(const CompartmentalModel& model, const Decomposition& d, const Trajectory& x,
                                const Trajectory& y, double threshold, std::size_t windows) {
  const ValidationReport report = validate(model);
  std::vector<std::size_t> targets = draining_targets(d);
  if (!report.passes("C6*")) {
    std::vector<std::size_t> all(model.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    ConvergenceReport r = window_distance(x, y, all, threshold, windows);
    r.verdict = Verdict::Skip;
    r.reason = "C6* does not hold";
    return r;
  }
  if (targets.empty()) {
    std::vector<std::size_t> all(model.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    ConvergenceReport r = window_distance(x, y, all, threshold, windows);
    r.verdict = Verdict::Skip;
    r.reason = "expected persistent gap: every compartment lies in a closed irreducible set";
    return r;
  }
  ConvergenceReport r = window_distance(x, y, targets, threshold, windows);
  r.reason = r.verdict == Verdict::Pass ? "final window below threshold" : "final window above threshold";
  return r;
}

ConvergenceReport merging_check(const CompartmentalModel& model, const Decomposition& d, const HistoryFn& x0,
                                const HistoryFn& y0, const IntegratorOptions& opts, double threshold) {
  const Trajectory x = integrate(model, x0, opts);
  const Trajectory y = integrate(model, y0, opts);
  return merging_check(model, d, x, y, threshold);
}

ConvergenceReport recurrence_check(const Trajectory& traj, double period, double threshold,
                                   std::size_t after_periods) {
  if (!(period > 0.0)) throw Error(ErrorKind::Precondition, "period must be positive");
  const double ratio = period / traj.step();
  const double stride_d = std::round(ratio);
  if (std::abs(ratio - stride_d) > 1e-9 * std::max(1.0, ratio) || stride_d < 1.0) {
    std::ostringstream msg;
    msg << "period " << period << " is not a multiple of the step " << traj.step();
    throw Error(ErrorKind::Precondition, msg.str());
  }
  const auto stride = static_cast<std::size_t>(stride_d);
  ConvergenceReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < traj.dim(); ++i) r.targets.push_back(i);
  r.component_sup.assign(traj.dim(), {});
  std::vector<double> times;
  for (std::size_t k = 1; k * stride < traj.size(); ++k) {
    double gap = 0.0;
    for (std::size_t i = 0; i < traj.dim(); ++i) {
      const double d = std::abs(traj.z(i, k * stride) - traj.z(i, (k - 1) * stride));
      r.component_sup[i].push_back(d);
      gap = std::max(gap, d);
    }
    r.window_sup.push_back(gap);
    times.push_back(traj.time(k * stride));
  }
  r.rate = fitted_rate(times, r.window_sup);
  if (r.window_sup.size() <= after_periods) {
    r.reason = "trajectory shorter than the requested number of periods";
    return r;
  }
  r.final_gap = *std::max_element(r.window_sup.begin() + static_cast<std::ptrdiff_t>(after_periods), r.window_sup.end());
  r.verdict = r.final_gap < threshold ? Verdict::Pass : Verdict::Fail;
  r.reason = r.verdict == Verdict::Pass ? "Poincare samples Cauchy below threshold" : "Poincare samples still moving";
  return r;
}

}  // namespace nfde
