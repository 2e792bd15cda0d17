#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nfde/d_operator.hpp"
#include "nfde/history.hpp"
#include "nfde/measures.hpp"

namespace nfde {

struct Harmonic {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
};

/// a(t) = base + sum_k amplitude_k cos(frequency_k t + phase_k).
class TimeCoefficient {
 public:
  TimeCoefficient() = default;
  explicit TimeCoefficient(double base, std::vector<Harmonic> harmonics = {});

  double operator()(double t) const;
  double base() const noexcept { return base_; }
  const std::vector<Harmonic>& harmonics() const noexcept { return harmonics_; }
  /// Sharp bounds base -/+ sum |amplitude| (attained for commensurate phases,
  /// otherwise approached arbitrarily closely).
  double lower_bound() const noexcept;
  double upper_bound() const noexcept;
  bool is_zero() const noexcept;

 private:
  double base_ = 0.0;
  std::vector<Harmonic> harmonics_;
};

enum class TransportKind { Zero, Linear, Saturating };

std::string_view to_string(TransportKind kind);

/// Transport function g(t, v): zero, a(t) v, or a(t) v / (1 + b v) for v >= 0,
/// extended oddly to v < 0. Non-zero kinds need inf a(t) > 0.
class TransportFn {
 public:
  TransportFn() = default;

  static TransportFn zero();
  static TransportFn linear(TimeCoefficient a);
  static TransportFn saturating(TimeCoefficient a, double b);

  double operator()(double t, double v) const;
  TransportKind kind() const noexcept { return kind_; }
  const TimeCoefficient& coefficient() const noexcept { return a_; }
  double saturation() const noexcept { return b_; }

  /// inf and sup of dg/dv over all (t, v).
  double slope_inf() const noexcept;
  double slope_sup() const noexcept;
  bool carries_material() const noexcept { return kind_ != TransportKind::Zero; }

 private:
  TransportKind kind_ = TransportKind::Zero;
  TimeCoefficient a_;
  double b_ = 0.0;
};

/// Pipe carrying material from compartment `from` to `to` (0-based) with
/// transit-time distribution `transit`.
struct Pipe {
  std::size_t from = 0;
  std::size_t to = 0;
  TransportFn g;
  ScalarMeasure transit;
};

class CompartmentalModel {
 public:
  CompartmentalModel() = default;
  CompartmentalModel(Grid grid, std::size_t compartments);

  /// Rejects duplicate pipes, out-of-range indices and transit measures on
  /// another grid.
  void add_pipe(std::size_t from, std::size_t to, TransportFn g, ScalarMeasure transit);
  void set_outflow(std::size_t i, TransportFn g);
  /// Evaluated as max(0, I(t)).
  void set_inflow(std::size_t i, TimeCoefficient inflow);
  /// Throws MassAtZero when an entry has mass at s = 0.
  void set_production(Kernel nu);

  std::size_t size() const noexcept { return m_; }
  const Grid& grid() const noexcept { return grid_; }
  const std::vector<Pipe>& pipes() const noexcept { return pipes_; }
  const TransportFn& outflow(std::size_t i) const { return outflows_.at(i); }
  const TimeCoefficient& inflow_coefficient(std::size_t i) const { return inflows_.at(i); }
  double inflow(std::size_t i, double t) const;
  const DOperator& op() const noexcept { return op_; }
  const Kernel& production() const noexcept { return op_.nu(); }

  bool has_inflow() const noexcept;
  bool has_outflow() const noexcept;
  bool has_outflow(std::size_t i) const { return outflows_.at(i).carries_material(); }
  bool closed() const noexcept { return !has_inflow() && !has_outflow(); }
  /// Pipe index for from -> to, if present.
  std::optional<std::size_t> find_pipe(std::size_t from, std::size_t to) const;

 private:
  Grid grid_;
  std::size_t m_ = 0;
  std::vector<Pipe> pipes_;
  std::vector<TransportFn> outflows_;
  std::vector<TimeCoefficient> inflows_;
  DOperator op_;
};

enum class CheckStatus { Pass, Fail, NotCheckable };

std::string_view to_string(CheckStatus status);

struct HypothesisCheck {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  bool hard = false;  // failure blocks integration
  std::string witness;
};

/// Sign check of the signed measure c_ij mu_ij - (sum_k d_ki) nu_ij.
struct EtaCheck {
  std::size_t i = 0;  // receiving compartment
  std::size_t j = 0;  // source compartment
  double c = 0.0;
  double d_sum = 0.0;
  ScalarMeasure eta;
  bool nonnegative = true;
  double worst = 0.0;      // most negative weight found (0 when nonnegative)
  double worst_location = 0.0;
};

struct PipeClass {
  std::size_t from = 0;  // 0-based; outflows use `to_environment`
  std::size_t to = 0;
  bool to_environment = false;
  TransportKind kind = TransportKind::Zero;
  bool carries_material = false;
  bool strictly_increasing = false;
  double slope_inf = 0.0;
  double slope_sup = 0.0;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;  // C1, C2, C3, C4, C5, C6, C6*
  std::vector<EtaCheck> eta;
  std::vector<PipeClass> pipes;
  std::vector<std::string> warnings;

  bool hard_failure() const;
  const HypothesisCheck& check(std::string_view name) const;
  bool passes(std::string_view name) const { return check(name).status == CheckStatus::Pass; }
};

ValidationReport validate(const CompartmentalModel& model);

/// Right-hand side F(t, x) of d/dt D z_t = F(t, z_t).
std::vector<double> eval_F(const CompartmentalModel& model, double t, const HistoryView& x);
std::vector<double> eval_F(const CompartmentalModel& model, double t, const HistoryFn& x);

/// Compartment contents D_i x plus material in transit inside pipes. The view's
/// step must divide the model step; pipe contents use trapezoid quadrature on
/// the view's step.
double total_mass(const CompartmentalModel& model, double t, const HistoryView& x);
double total_mass(const CompartmentalModel& model, double t, const HistoryFn& x);

/// Same as total_mass with compartments and pipes restricted to `members`.
double restricted_mass(const CompartmentalModel& model, const std::set<std::size_t>& members, double t,
                       const HistoryView& x);
double restricted_mass(const CompartmentalModel& model, const std::set<std::size_t>& members, double t,
                       const HistoryFn& x);

/// sum_i (I_i(t) - g_0i(t, x_i(0))), the rate of change of the total mass.
double mass_rate(const CompartmentalModel& model, double t, const HistoryView& x);

}  // namespace nfde
