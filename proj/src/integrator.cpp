#include "nfde/integrator.hpp"

#include <cmath>
#include <sstream>

#include "nfde/error.hpp"

namespace nfde {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Euler: return "euler";
    case Scheme::Heun: return "heun";
    case Scheme::Rk4: return "rk4";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "euler") return Scheme::Euler;
  if (name == "heun") return Scheme::Heun;
  if (name == "rk4") return Scheme::Rk4;
  throw Error(ErrorKind::Parse, "unknown scheme '" + std::string(name) + "' (expected euler, heun or rk4)");
}

namespace {

void check_inputs(const CompartmentalModel& model, const HistoryFn& initial, const IntegratorOptions& opts) {
  if (initial.dim() != model.size()) {
    std::ostringstream msg;
    msg << "initial history has " << initial.dim() << " components, model has " << model.size();
    throw Error(ErrorKind::GridMismatch, msg.str());
  }
  if (std::abs(initial.grid().step - model.grid().step) > 1e-12 * model.grid().step) {
    throw Error(ErrorKind::GridMismatch, "initial history step differs from the model grid step");
  }
  if (initial.grid().horizon < model.grid().horizon - 1e-9 * model.grid().step) {
    std::ostringstream msg;
    msg << "initial history covers [-" << initial.grid().horizon << ", 0] but the model reaches back to -"
        << model.grid().horizon;
    throw Error(ErrorKind::HorizonExceeded, msg.str());
  }
  if (!(opts.T >= 0.0) || !std::isfinite(opts.T)) throw Error(ErrorKind::Precondition, "T must be finite and >= 0");
  if (opts.step < 0.0) throw Error(ErrorKind::Precondition, "step must be positive");
  if (opts.enforce_validation) {
    const ValidationReport report = validate(model);
    for (const HypothesisCheck& c : report.checks) {
      if (c.hard && c.status == CheckStatus::Fail) {
        throw Error(ErrorKind::ValidationFailure, c.name + " fails: " + c.witness);
      }
    }
  }
}

double run_step(const CompartmentalModel& model, const IntegratorOptions& opts) {
  const double step = opts.step > 0.0 ? opts.step : model.grid().step;
  model.grid().refinement(step);
  return step;
}

double truncated_tail(const CompartmentalModel& model) {
  double tail = 0.0;
  const Kernel& nu = model.production();
  for (std::size_t i = 0; i < nu.dim(); ++i) {
    for (std::size_t j = 0; j < nu.dim(); ++j) tail += std::abs(nu.at(i, j).tail_mass());
  }
  for (const Pipe& p : model.pipes()) tail += std::abs(p.transit.tail_mass());
  return tail;
}

std::size_t step_count(double T, double step) { return static_cast<std::size_t>(std::llround(T / step)); }

void axpy(std::vector<double>& out, const std::vector<double>& base, double a, const std::vector<double>& x) {
  out.resize(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] + a * x[i];
}

}  // namespace

Trajectory integrate(const CompartmentalModel& model, const HistoryFn& initial, const IntegratorOptions& opts) {
  check_inputs(model, initial, opts);
  const double step = run_step(model, opts);
  const DOperator& op = model.op();
  const std::size_t m = model.size();

  Trajectory traj(initial, step);
  traj.scheme = std::string(to_string(opts.scheme));
  traj.tail_mass = truncated_tail(model);

  // State at t_n + fraction * step from its neutral coordinate.
  auto recover = [&](std::size_t n, double fraction, const std::vector<double>& w) {
    std::vector<double> z = neutral_memory(op, traj.view(n, fraction));
    for (std::size_t i = 0; i < m; ++i) z[i] += w[i];
    return z;
  };
  auto field = [&](std::size_t n, double fraction, const std::vector<double>* head) {
    const double t = traj.time(n) + fraction * step;
    if (head == nullptr) return eval_F(model, t, traj.view(n));
    return eval_F(model, t, traj.view(n, fraction, head->data()));
  };

  {
    const std::vector<double> w0 = apply_D(op, traj.view(0));
    const HistoryView v0 = traj.view(0);
    std::vector<double> z0(m);
    for (std::size_t i = 0; i < m; ++i) z0[i] = v0.now(i);
    traj.push(z0, w0);
    if (opts.record_mass) traj.push_mass(total_mass(model, 0.0, traj.view(0)));
  }

  const std::size_t steps = step_count(opts.T, step);
  std::vector<double> w = traj.neutral(0);
  std::vector<double> stage, next(m);
  for (std::size_t n = 0; n < steps; ++n) {
    const std::vector<double> k1 = field(n, 0.0, nullptr);
    switch (opts.scheme) {
      case Scheme::Euler:
        axpy(next, w, step, k1);
        break;
      case Scheme::Heun: {
        axpy(stage, w, step, k1);
        const std::vector<double> z2 = recover(n, 1.0, stage);
        const std::vector<double> k2 = field(n, 1.0, &z2);
        for (std::size_t i = 0; i < m; ++i) next[i] = w[i] + 0.5 * step * (k1[i] + k2[i]);
        break;
      }
      case Scheme::Rk4: {
        axpy(stage, w, 0.5 * step, k1);
        const std::vector<double> z2 = recover(n, 0.5, stage);
        const std::vector<double> k2 = field(n, 0.5, &z2);
        axpy(stage, w, 0.5 * step, k2);
        const std::vector<double> z3 = recover(n, 0.5, stage);
        const std::vector<double> k3 = field(n, 0.5, &z3);
        axpy(stage, w, step, k3);
        const std::vector<double> z4 = recover(n, 1.0, stage);
        const std::vector<double> k4 = field(n, 1.0, &z4);
        for (std::size_t i = 0; i < m; ++i) {
          next[i] = w[i] + step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        break;
      }
    }

    std::vector<double> z = recover(n, 1.0, next);
    traj.push(z, next);
    // The recovery is explicit; the loop only absorbs rounding.
    double scale = 1.0;
    for (double v : next) scale = std::max(scale, std::abs(v));
    const double limit = opts.recovery_tol * scale;
    std::size_t iterations = 0;
    for (;;) {
      const std::vector<double> d = apply_D(op, traj.view(n + 1));
      double residual = 0.0;
      for (std::size_t i = 0; i < m; ++i) residual = std::max(residual, std::abs(d[i] - next[i]));
      if (residual <= limit) {
        traj.max_residual = std::max(traj.max_residual, residual);
        break;
      }
      if (iterations >= opts.max_iterations) {
        std::ostringstream msg;
        msg << "state recovery residual " << residual << " at t = " << traj.time(n + 1);
        throw Error(ErrorKind::NoConvergence, msg.str());
      }
      for (std::size_t i = 0; i < m; ++i) z[i] += next[i] - d[i];
      traj.replace_last(z);
      ++iterations;
    }
    traj.recovery_iterations += iterations;
    w = next;
    if (opts.record_mass) traj.push_mass(total_mass(model, traj.time(n + 1), traj.view(n + 1)));
  }
  return traj;
}

FdeField transform_to_fde(const CompartmentalModel& model, double tol) {
  if (!model.op().contractive()) {
    std::ostringstream msg;
    msg << "contraction constant " << model.op().contraction() << " >= 1";
    throw Error(ErrorKind::NotContractive, msg.str());
  }
  return [model, tol](double t, const HistoryFn& y) {
    const HistoryFn z = invert_Dhat(model.op(), y, tol);
    return eval_F(model, t, z.view());
  };
}

Trajectory integrate_transformed(const CompartmentalModel& model, const HistoryFn& initial,
                                 const IntegratorOptions& opts) {
  check_inputs(model, initial, opts);
  if (opts.scheme == Scheme::Rk4) {
    throw Error(ErrorKind::Precondition, "the transformed route supports euler and heun only");
  }
  if (!model.op().contractive()) {
    std::ostringstream msg;
    msg << "contraction constant " << model.op().contraction() << " >= 1";
    throw Error(ErrorKind::NotContractive, msg.str());
  }
  const double step = run_step(model, opts);
  const std::size_t m = model.size();
  const HistoryFn fine = refine(initial, step);
  const HistoryFn y0 = apply_Dhat(model.op(), fine);
  std::vector<std::vector<double>> ycols = y0.columns();
  const std::vector<double> ybefore = y0.before();

  Trajectory traj(initial, step);
  traj.scheme = std::string(to_string(opts.scheme)) + "-transformed";
  traj.tail_mass = truncated_tail(model);

  // z-history on the whole stored y-past, optionally with a provisional head.
  auto invert = [&](const std::vector<double>* head) {
    std::vector<std::vector<double>> cols = ycols;
    if (head != nullptr) {
      for (std::size_t i = 0; i < m; ++i) cols[i].push_back((*head)[i]);
    }
    const std::size_t intervals = cols.front().size() - 1;
    const Grid g(step, static_cast<double>(intervals) * step);
    Inversion inv = invert_Dhat_detailed(model.op(), HistoryFn(g, std::move(cols), ybefore), opts.recovery_tol);
    traj.max_residual = std::max(traj.max_residual, inv.residual);
    traj.recovery_iterations += inv.iterations;
    return std::move(inv.x);
  };

  const std::size_t steps = step_count(opts.T, step);
  std::vector<double> stage(m), next(m);
  for (std::size_t n = 0;; ++n) {
    const HistoryFn z = invert(nullptr);
    std::vector<double> yn(m);
    for (std::size_t i = 0; i < m; ++i) yn[i] = ycols[i].back();
    traj.push(z.value_at_zero(), yn);
    if (opts.record_mass) traj.push_mass(total_mass(model, traj.time(n), z.view()));
    if (n == steps) break;

    const double t = traj.time(n);
    const std::vector<double> k1 = eval_F(model, t, z.view());
    if (opts.scheme == Scheme::Euler) {
      for (std::size_t i = 0; i < m; ++i) next[i] = yn[i] + step * k1[i];
    } else {
      for (std::size_t i = 0; i < m; ++i) stage[i] = yn[i] + step * k1[i];
      const HistoryFn z2 = invert(&stage);
      const std::vector<double> k2 = eval_F(model, t + step, z2.view());
      for (std::size_t i = 0; i < m; ++i) next[i] = yn[i] + 0.5 * step * (k1[i] + k2[i]);
    }
    for (std::size_t i = 0; i < m; ++i) ycols[i].push_back(next[i]);
  }
  return traj;
}

}  // namespace nfde
