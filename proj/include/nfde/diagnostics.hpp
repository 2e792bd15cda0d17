#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nfde/d_operator.hpp"
#include "nfde/history.hpp"
#include "nfde/integrator.hpp"
#include "nfde/model.hpp"
#include "nfde/structure.hpp"
#include "nfde/trajectory.hpp"

namespace nfde {

enum class Relation { Equal, Le, Ge, Incomparable };
enum class Verdict { Pass, Fail, Skip };

std::string_view to_string(Relation r);
std::string_view to_string(Verdict v);

struct OrderVerdict {
  Relation relation = Relation::Equal;
  /// For incomparable pairs, the smaller of the two one-sided excesses.
  double max_violation = 0.0;
  double witness_time = 0.0;
  std::size_t witness_component = 0;
};

/// D-order: compares D^x and D^y at every grid point (pre-horizon constants
/// included).
OrderVerdict d_order_compare(const DOperator& op, const HistoryFn& x, const HistoryFn& y, double tol = 1e-9);
/// Plain pointwise order on samples.
OrderVerdict pointwise_compare(const HistoryFn& x, const HistoryFn& y, double tol = 1e-9);
/// D-order of z_t(x) against z_t(y) for every computed t >= t_from, read off
/// the stored neutral coordinates (and D^ of the initial data where the
/// window reaches before 0).
OrderVerdict d_order_compare(const DOperator& op, const Trajectory& x, const Trajectory& y, double t_from,
                             double tol = 1e-9);

/// x+ = D^-1 max(0, D^ x).
HistoryFn positive_part(const DOperator& op, const HistoryFn& x, double tol = 1e-12);

struct MassDrift {
  bool closed = true;
  /// Closed: max |M(t) - M(0)|. Open: max |M(t) - M(0) - int_0^t sum_i (I_i - g_0i) ds|.
  double max_abs = 0.0;
  double relative = 0.0;  // max_abs / |M(0)| (max_abs itself when M(0) = 0)
  double witness_time = 0.0;
};

/// Needs a trajectory with recorded mass. The open-system integral uses the
/// trapezoid rule on the trajectory's step.
MassDrift mass_drift(const Trajectory& traj, const CompartmentalModel& model);

struct MassGapReport {
  double mass_gap = 0.0;          // M(y0) - M(x0)
  double min_lower = 0.0;         // min over t, i of D_i z_t(y) - D_i z_t(x)
  double max_upper_excess = 0.0;  // max of (D_i z_t(y) - D_i z_t(x)) - mass_gap
  std::size_t violations = 0;     // grid points breaking either bound beyond tol
  double witness_time = 0.0;
  std::size_t witness_component = 0;
};

/// Checks 0 <= D_i z_t(y) - D_i z_t(x) <= M(y0) - M(x0) at every grid time.
/// Throws OrderViolation on a breach unless `throw_on_violation` is false.
MassGapReport ordered_mass_gap(const Trajectory& x, const Trajectory& y, double tol = 1e-6,
                               bool throw_on_violation = true);

struct PerturbationRun {
  double size = 0.0;  // sup norm of the perturbation
  double gap = 0.0;   // sup over the stored past of |z(perturbed) - z(base)|
  double mass_gap = 0.0;
  bool ordered = false;      // initial data D-ordered against the base
  double chain_bound = 0.0;  // max(|mass gap|, sup |D^ difference|) / (1 - c), ordered runs only
  bool chain_holds = true;
};

struct ModulusEntry {
  double epsilon = 0.0;
  double delta = 0.0;
};

struct StabilityModulus {
  std::vector<PerturbationRun> runs;
  std::vector<ModulusEntry> table;    // epsilons with a qualifying delta
  std::vector<double> unmet;          // epsilons without one
  bool flagged() const noexcept { return table.empty(); }
};

/// For each epsilon, the largest tested perturbation size delta such that
/// every run of size <= delta stays within epsilon of the base.
StabilityModulus stability_modulus(const CompartmentalModel& model, const Trajectory& base,
                                   const std::vector<HistoryFn>& perturbations, const std::vector<double>& epsilons,
                                   const IntegratorOptions& opts, double slack = 1e-6);

struct EmptyingReport {
  Verdict verdict = Verdict::Skip;
  std::string reason;
  std::vector<std::size_t> targets;
  std::vector<double> terminal;  // max |z_i| over the final window, per target
  double threshold = 0.0;
};

/// Targets j0 and irreducible sets with outflow; skipped when the model has
/// inflow or nothing qualifies.
EmptyingReport emptying_check(const Trajectory& traj, const CompartmentalModel& model, const Decomposition& d,
                              double threshold = 1e-3, double window_fraction = 0.1);

struct ConvergenceReport {
  Verdict verdict = Verdict::Skip;
  std::string reason;
  std::vector<std::size_t> targets;
  std::vector<double> window_sup;                     // over targets
  std::vector<std::vector<double>> component_sup;     // [target][window]
  double rate = 0.0;  // fitted exponential decay rate of window_sup (positive = decaying)
  double final_gap = 0.0;
  double threshold = 0.0;
};

/// Window suprema of |z_i(x) - z_i(y)| over `windows` equal slices of [0, T].
ConvergenceReport window_distance(const Trajectory& x, const Trajectory& y, const std::vector<std::size_t>& targets,
                                  double threshold, std::size_t windows = 10);

/// Merging on j0 and outflow irreducible sets. Skipped without C6* or when
/// no component qualifies (closed systems keep distinct limits); suprema over
/// all components are still reported then.
ConvergenceReport merging_check(const CompartmentalModel& model, const Decomposition& d, const Trajectory& x,
                                const Trajectory& y, double threshold = 1e-3, std::size_t windows = 10);
ConvergenceReport merging_check(const CompartmentalModel& model, const Decomposition& d, const HistoryFn& x0,
                                const HistoryFn& y0, const IntegratorOptions& opts, double threshold = 1e-3);

/// Poincare samples z(k P); successive gaps must fall below `threshold` for
/// every k > after_periods. P must be a multiple of the trajectory step.
ConvergenceReport recurrence_check(const Trajectory& traj, double period, double threshold = 1e-4,
                                   std::size_t after_periods = 50);

}  // namespace nfde
