#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nfde/diagnostics.hpp"
#include "nfde/integrator.hpp"
#include "nfde/model.hpp"
#include "nfde/structure.hpp"

namespace nfde {

using Json = nlohmann::ordered_json;

/// Run options and check thresholds carried by a scenario file.
struct RunSettings {
  IntegratorOptions integrator;
  double merge_threshold = 1e-3;
  double emptying_threshold = 1e-3;
  double recurrence_threshold = 1e-4;
  double period = 0.0;  // 0: no recurrence check
  std::size_t after_periods = 50;
  double mass_gap_tol = 1e-6;
  std::vector<double> epsilons{0.01, 0.05, 0.1};
  std::vector<double> perturbations{0.001, 0.005, 0.01, 0.05};
  bool strict_isolated = false;
};

struct Scenario {
  std::string name;
  CompartmentalModel model;
  std::vector<std::pair<std::string, HistoryFn>> initial;  // file order
  RunSettings run;
  std::vector<std::string> checks;

  /// Throws Parse when no initial history has this name.
  const HistoryFn& initial_named(const std::string& name) const;
};

/// Errors are Parse errors prefixed with `source`, carrying the line and
/// column for syntax errors and the field path (e.g. pipes[1].mu.atoms) for
/// semantic ones.
Scenario parse_scenario(const std::string& text, const std::string& source = "<input>");
Scenario load_scenario(const std::filesystem::path& path);

/// Literal parsers; `path` prefixes error messages.
TimeCoefficient parse_coefficient(const Json& j, const std::string& path);
TransportFn parse_transport(const Json& j, const std::string& path);
ScalarMeasure parse_measure(const Json& j, Grid grid, const std::string& path);
HistoryFn parse_history(const Json& j, Grid grid, std::size_t dim, const DOperator& op, const std::string& path);
/// Parses JSON text, reporting syntax errors with line and column.
Json parse_json_text(const std::string& text, const std::string& source);

// Output.

/// Shortest decimal form that round-trips.
std::string format_double(double v);

/// Columns t, z_1..z_m, w_1..w_m, mass (mass empty when not recorded).
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t stride = 1);
/// Columns s, x_1..x_m; the first row holds the pre-horizon values at s = -inf.
void write_history_csv(std::ostream& out, const HistoryFn& x);

Json to_json(const ScalarMeasure& m);
Json to_json(const Kernel& k);
Json to_json(const ValidationReport& r);
Json to_json(const Decomposition& d, const PipeGraph& g);
Json to_json(const OrderVerdict& v);
Json to_json(const ConvergenceReport& r, const std::string& check);
Json to_json(const EmptyingReport& r);
Json to_json(const MassDrift& r, double bound);
Json to_json(const MassGapReport& r, double tol);
Json to_json(const StabilityModulus& r);
Json trajectory_summary(const Trajectory& traj);

}  // namespace nfde
