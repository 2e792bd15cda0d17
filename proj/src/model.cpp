#include "nfde/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nfde/error.hpp"

namespace nfde {

TimeCoefficient::TimeCoefficient(double base, std::vector<Harmonic> harmonics)
    : base_(base), harmonics_(std::move(harmonics)) {
  if (!std::isfinite(base_)) throw Error(ErrorKind::InvalidModel, "coefficient base must be finite");
  for (const Harmonic& h : harmonics_) {
    if (!std::isfinite(h.amplitude) || !std::isfinite(h.frequency) || !std::isfinite(h.phase)) {
      throw Error(ErrorKind::InvalidModel, "coefficient harmonics must be finite");
    }
  }
}

double TimeCoefficient::operator()(double t) const {
  double v = base_;
  for (const Harmonic& h : harmonics_) v += h.amplitude * std::cos(h.frequency * t + h.phase);
  return v;
}

double TimeCoefficient::lower_bound() const noexcept {
  double v = base_;
  for (const Harmonic& h : harmonics_) v -= std::abs(h.amplitude);
  return v;
}

double TimeCoefficient::upper_bound() const noexcept {
  double v = base_;
  for (const Harmonic& h : harmonics_) v += std::abs(h.amplitude);
  return v;
}

bool TimeCoefficient::is_zero() const noexcept {
  if (base_ != 0.0) return false;
  return std::all_of(harmonics_.begin(), harmonics_.end(), [](const Harmonic& h) { return h.amplitude == 0.0; });
}

std::string_view to_string(TransportKind kind) {
  switch (kind) {
    case TransportKind::Zero: return "zero";
    case TransportKind::Linear: return "linear";
    case TransportKind::Saturating: return "saturating";
  }
  return "unknown";
}

TransportFn TransportFn::zero() { return TransportFn(); }

TransportFn TransportFn::linear(TimeCoefficient a) {
  if (!(a.lower_bound() > 0.0)) {
    std::ostringstream msg;
    msg << "linear transport needs inf a(t) > 0, got " << a.lower_bound();
    throw Error(ErrorKind::InvalidModel, msg.str());
  }
  TransportFn g;
  g.kind_ = TransportKind::Linear;
  g.a_ = std::move(a);
  return g;
}

TransportFn TransportFn::saturating(TimeCoefficient a, double b) {
  if (!(a.lower_bound() > 0.0)) {
    std::ostringstream msg;
    msg << "saturating transport needs inf a(t) > 0, got " << a.lower_bound();
    throw Error(ErrorKind::InvalidModel, msg.str());
  }
  if (!(b >= 0.0) || !std::isfinite(b)) throw Error(ErrorKind::InvalidModel, "saturation must be finite and >= 0");
  TransportFn g;
  g.kind_ = TransportKind::Saturating;
  g.a_ = std::move(a);
  g.b_ = b;
  return g;
}

double TransportFn::operator()(double t, double v) const {
  switch (kind_) {
    case TransportKind::Zero: return 0.0;
    case TransportKind::Linear: return a_(t) * v;
    case TransportKind::Saturating: return a_(t) * v / (1.0 + b_ * std::abs(v));
  }
  return 0.0;
}

double TransportFn::slope_inf() const noexcept {
  switch (kind_) {
    case TransportKind::Zero: return 0.0;
    case TransportKind::Linear: return a_.lower_bound();
    // a / (1 + b|v|)^2 tends to 0 as |v| grows.
    case TransportKind::Saturating: return b_ > 0.0 ? 0.0 : a_.lower_bound();
  }
  return 0.0;
}

double TransportFn::slope_sup() const noexcept {
  return kind_ == TransportKind::Zero ? 0.0 : a_.upper_bound();
}

CompartmentalModel::CompartmentalModel(Grid grid, std::size_t compartments)
    : grid_(grid), m_(compartments), outflows_(compartments), inflows_(compartments),
      op_(Kernel(grid, compartments)) {
  if (compartments == 0) throw Error(ErrorKind::InvalidModel, "model needs at least one compartment");
}

void CompartmentalModel::add_pipe(std::size_t from, std::size_t to, TransportFn g, ScalarMeasure transit) {
  if (from >= m_ || to >= m_) throw Error(ErrorKind::InvalidModel, "pipe endpoint out of range");
  if (find_pipe(from, to)) {
    std::ostringstream msg;
    msg << "duplicate pipe " << from + 1 << " -> " << to + 1;
    throw Error(ErrorKind::InvalidModel, msg.str());
  }
  if (!(transit.grid() == grid_)) throw Error(ErrorKind::GridMismatch, "transit measure on a different grid");
  pipes_.push_back(Pipe{from, to, std::move(g), std::move(transit)});
}

void CompartmentalModel::set_outflow(std::size_t i, TransportFn g) { outflows_.at(i) = std::move(g); }

void CompartmentalModel::set_inflow(std::size_t i, TimeCoefficient inflow) { inflows_.at(i) = std::move(inflow); }

void CompartmentalModel::set_production(Kernel nu) {
  if (nu.dim() != m_) throw Error(ErrorKind::InvalidModel, "production kernel dimension differs from model");
  if (!(nu.grid() == grid_)) throw Error(ErrorKind::GridMismatch, "production kernel on a different grid");
  op_ = DOperator(std::move(nu));
}

double CompartmentalModel::inflow(std::size_t i, double t) const { return std::max(0.0, inflows_.at(i)(t)); }

bool CompartmentalModel::has_inflow() const noexcept {
  return std::any_of(inflows_.begin(), inflows_.end(),
                     [](const TimeCoefficient& c) { return !c.is_zero() && c.upper_bound() > 0.0; });
}

bool CompartmentalModel::has_outflow() const noexcept {
  return std::any_of(outflows_.begin(), outflows_.end(), [](const TransportFn& g) { return g.carries_material(); });
}

std::optional<std::size_t> CompartmentalModel::find_pipe(std::size_t from, std::size_t to) const {
  for (std::size_t p = 0; p < pipes_.size(); ++p) {
    if (pipes_[p].from == from && pipes_[p].to == to) return p;
  }
  return std::nullopt;
}

std::string_view to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotCheckable: return "not-checkable";
  }
  return "unknown";
}

bool ValidationReport::hard_failure() const {
  return std::any_of(checks.begin(), checks.end(),
                     [](const HypothesisCheck& c) { return c.hard && c.status == CheckStatus::Fail; });
}

const HypothesisCheck& ValidationReport::check(std::string_view name) const {
  for (const HypothesisCheck& c : checks) {
    if (c.name == name) return c;
  }
  throw Error(ErrorKind::Precondition, "no such hypothesis check: " + std::string(name));
}

namespace {

constexpr double kSignTol = 1e-12;

// Most negative part of a weight list; location of the offender.
void scan_negative(const std::vector<Atom>& atoms, double step, EtaCheck& out) {
  for (const Atom& a : atoms) {
    if (a.mass < out.worst) {
      out.worst = a.mass;
      out.worst_location = -static_cast<double>(a.lag) * step;
    }
  }
}

EtaCheck eta_check(const CompartmentalModel& model, std::size_t i, std::size_t j, const std::vector<double>& d_sum) {
  EtaCheck e;
  e.i = i;
  e.j = j;
  e.d_sum = d_sum[i];
  ScalarMeasure mu(model.grid());
  if (auto p = model.find_pipe(j, i)) {
    e.c = model.pipes()[*p].g.slope_inf();
    mu = model.pipes()[*p].transit;
  }
  const ScalarMeasure& nu = model.production().at(i, j);
  e.eta = mu.scaled(e.c) - nu.scaled(e.d_sum);
  const double step = model.grid().step;
  // Atoms, density weights and tail are tested separately: an atom of nu is
  // only covered by an atom of mu at the same lag.
  scan_negative(e.eta.atoms(), step, e);
  const auto& dens = e.eta.density_weights();
  for (std::size_t k = 0; k < dens.size(); ++k) {
    if (dens[k] < e.worst) {
      e.worst = dens[k];
      e.worst_location = -static_cast<double>(k) * step;
    }
  }
  if (e.eta.tail_mass() < e.worst) {
    e.worst = e.eta.tail_mass();
    e.worst_location = -std::numeric_limits<double>::infinity();
  }
  e.nonnegative = e.worst >= -kSignTol;
  if (e.nonnegative) e.worst = 0.0;
  return e;
}

std::string fmt_double(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

ValidationReport validate(const CompartmentalModel& model) {
  ValidationReport r;
  const std::size_t m = model.size();

  for (const Pipe& p : model.pipes()) {
    r.pipes.push_back(PipeClass{p.from, p.to, false, p.g.kind(), p.g.carries_material(), p.g.carries_material(),
                                p.g.slope_inf(), p.g.slope_sup()});
  }
  for (std::size_t i = 0; i < m; ++i) {
    const TransportFn& g = model.outflow(i);
    if (!g.carries_material()) continue;
    r.pipes.push_back(
        PipeClass{i, 0, true, g.kind(), true, true, g.slope_inf(), g.slope_sup()});
  }

  r.checks.push_back({"C1", CheckStatus::Pass, false,
                      "catalogue transport functions vanish at v = 0, are odd and nondecreasing in v"});
  r.checks.push_back({"C2", CheckStatus::Pass, false, "quasi-periodic coefficients are recurrent"});

  {
    HypothesisCheck c3{"C3", CheckStatus::Pass, true, "every transit measure is a probability measure"};
    for (const Pipe& p : model.pipes()) {
      const double mass = p.transit.signed_mass() + p.transit.tail_mass();
      std::ostringstream w;
      if (!p.transit.is_nonnegative(kSignTol)) {
        w << "transit measure of pipe " << p.from + 1 << " -> " << p.to + 1 << " has negative weight";
      } else if (std::abs(mass - 1.0) > 1e-9) {
        w << "transit measure of pipe " << p.from + 1 << " -> " << p.to + 1 << " has mass " << mass;
      } else {
        continue;
      }
      c3.status = CheckStatus::Fail;
      c3.witness = w.str();
      break;
    }
    r.checks.push_back(c3);
  }

  {
    HypothesisCheck c4{"C4", CheckStatus::Pass, true, ""};
    const Kernel& nu = model.production();
    if (!nu.is_nonnegative()) {
      c4.status = CheckStatus::Fail;
      c4.witness = "production measures must be nonnegative";
    } else {
      std::size_t worst_row = 0;
      double worst = -1.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double row = nu.row_variation(i);
        if (row > worst) {
          worst = row;
          worst_row = i;
        }
      }
      std::ostringstream w;
      w << "max row mass " << worst << " in row " << worst_row + 1;
      c4.witness = w.str();
      if (worst >= 1.0) c4.status = CheckStatus::Fail;
    }
    r.checks.push_back(c4);
  }

  {
    std::vector<double> d_sum(m, 0.0);
    for (const Pipe& p : model.pipes()) d_sum[p.from] += p.g.slope_sup();
    for (std::size_t i = 0; i < m; ++i) d_sum[i] += model.outflow(i).slope_sup();

    HypothesisCheck c5{"C5", CheckStatus::Pass, false, "all eta measures are nonnegative"};
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const bool has_pipe = model.find_pipe(j, i).has_value();
        if (!has_pipe && model.production().at(i, j).is_zero()) continue;
        EtaCheck e = eta_check(model, i, j, d_sum);
        if (!e.nonnegative && c5.status == CheckStatus::Pass) {
          c5.status = CheckStatus::Fail;
          std::ostringstream w;
          w << "eta(" << i + 1 << "," << j + 1 << ") has weight " << e.worst << " at s = " << e.worst_location
            << " (c = " << e.c << ", sum of d = " << e.d_sum << ")";
          c5.witness = w.str();
        }
        r.eta.push_back(std::move(e));
      }
    }
    r.checks.push_back(c5);
  }

  r.checks.push_back({"C6", CheckStatus::Pass, false,
                      "each pipe is identically zero or positive for every v > 0"});
  {
    HypothesisCheck c6s{"C6*", CheckStatus::Pass, false,
                        "each carrying pipe has dg/dv >= inf a(t) / (1 + b v)^2 > 0 for every v >= 0"};
    for (const PipeClass& pc : r.pipes) {
      if (pc.carries_material && !pc.strictly_increasing) {
        c6s.status = CheckStatus::Fail;
        c6s.witness = "pipe without a positive slope";
      }
    }
    r.checks.push_back(c6s);
  }

  for (std::size_t i = 0; i < m; ++i) {
    const TimeCoefficient& in = model.inflow_coefficient(i);
    if (in.lower_bound() < 0.0) {
      r.warnings.push_back("inflow of compartment " + std::to_string(i + 1) + " has lower bound " +
                           fmt_double(in.lower_bound()) + " and is clamped at 0");
    }
  }
  for (const EtaCheck& e : r.eta) {
    if (e.c == 0.0 && model.find_pipe(e.j, e.i)) {
      r.warnings.push_back("pipe " + std::to_string(e.j + 1) + " -> " + std::to_string(e.i + 1) +
                           " has zero minimal slope; C5 relies on the production term alone");
    }
  }
  return r;
}

namespace {

// int g(t + s, x_from(s)) d mu(s); the tail sees the integrand frozen at -H.
double arrival(const CompartmentalModel& model, const Pipe& p, double t, const HistoryView& x) {
  const double step = model.grid().step;
  double acc = 0.0;
  for (const Atom& a : p.transit.discrete()) {
    const double s = -static_cast<double>(a.lag) * step;
    acc += a.mass * p.g(t + s, x.at(p.from, s));
  }
  if (p.transit.tail_mass() != 0.0) {
    acc += p.transit.tail_mass() * p.g(t - model.grid().horizon, x.before(p.from));
  }
  return acc;
}

// int (int_s^0 g(t + tau, x_from(tau)) dtau) d mu(s), inner integral by the
// trapezoid rule on the view's step.
double pipe_content(const CompartmentalModel& model, const Pipe& p, double t, const HistoryView& x) {
  if (!p.g.carries_material() || p.transit.is_zero()) return 0.0;
  const Grid& g = model.grid();
  const std::size_t q = g.refinement(x.step());
  const std::size_t depth = p.transit.tail_mass() != 0.0 ? g.steps() : p.transit.max_lag();
  const double delta = x.step();
  std::vector<double> cumulative(depth * q + 1, 0.0);
  double prev = p.g(t, x.at(p.from, 0.0));
  for (std::size_t k = 1; k < cumulative.size(); ++k) {
    const double tau = -static_cast<double>(k) * delta;
    const double cur = p.g(t + tau, x.at(p.from, tau));
    cumulative[k] = cumulative[k - 1] + 0.5 * delta * (prev + cur);
    prev = cur;
  }
  double acc = 0.0;
  for (const Atom& a : p.transit.discrete()) acc += a.mass * cumulative[a.lag * q];
  acc += p.transit.tail_mass() * cumulative.back();
  return acc;
}

void require_dim(const CompartmentalModel& model, std::size_t dim) {
  if (dim != model.size()) throw Error(ErrorKind::GridMismatch, "history dimension differs from model");
}

}  // namespace

std::vector<double> eval_F(const CompartmentalModel& model, double t, const HistoryView& x) {
  require_dim(model, x.dim());
  const std::size_t m = model.size();
  std::vector<double> f(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) f[i] = model.inflow(i, t) - model.outflow(i)(t, x.now(i));
  for (const Pipe& p : model.pipes()) {
    if (!p.g.carries_material()) continue;
    f[p.from] -= p.g(t, x.now(p.from));
    f[p.to] += arrival(model, p, t, x);
  }
  return f;
}

std::vector<double> eval_F(const CompartmentalModel& model, double t, const HistoryFn& x) {
  model.grid().refinement(x.grid().step);
  return eval_F(model, t, x.view());
}

double total_mass(const CompartmentalModel& model, double t, const HistoryView& x) {
  require_dim(model, x.dim());
  double mass = 0.0;
  for (double d : apply_D(model.op(), x)) mass += d;
  for (const Pipe& p : model.pipes()) mass += pipe_content(model, p, t, x);
  return mass;
}

double total_mass(const CompartmentalModel& model, double t, const HistoryFn& x) {
  model.grid().refinement(x.grid().step);
  return total_mass(model, t, x.view());
}

double restricted_mass(const CompartmentalModel& model, const std::set<std::size_t>& members, double t,
                       const HistoryView& x) {
  require_dim(model, x.dim());
  if (members.empty()) return 0.0;
  const std::vector<double> d = apply_D(model.op(), x);
  double mass = 0.0;
  for (std::size_t i : members) mass += d.at(i);
  for (const Pipe& p : model.pipes()) {
    if (members.count(p.from) && members.count(p.to)) mass += pipe_content(model, p, t, x);
  }
  return mass;
}

double restricted_mass(const CompartmentalModel& model, const std::set<std::size_t>& members, double t,
                       const HistoryFn& x) {
  model.grid().refinement(x.grid().step);
  return restricted_mass(model, members, t, x.view());
}

double mass_rate(const CompartmentalModel& model, double t, const HistoryView& x) {
  double r = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) r += model.inflow(i, t) - model.outflow(i)(t, x.now(i));
  return r;
}

}  // namespace nfde
