#include "nfde/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include "nfde/diagnostics.hpp"
#include "nfde/error.hpp"
#include "nfde/scenario.hpp"
#include "nfde/structure.hpp"

namespace nfde::cli {

namespace {

namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 1;
  bool quiet = false;
  std::string out_dir;
};

struct SimulateArgs {
  std::string scenario;
  std::string initial;
  std::string scheme;
  std::optional<double> T;
  std::optional<double> step;
  std::string format = "json";
  std::size_t stride = 1;
  bool timing = false;
};

struct CompareArgs {
  std::string scenario;
  std::vector<std::string> initial;
  std::vector<std::string> checks;
  std::optional<double> T;
};

struct InvertArgs {
  std::string scenario;
  std::string measure;
  double h = 0.0;
  double H = 0.0;
  double tol = 1e-6;
  std::string input;
};

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Precondition, "cannot write " + path.string());
  f << contents;
}

fs::path output_dir(const Globals& g) {
  fs::path dir(g.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Precondition, "cannot create output directory " + dir.string());
  return dir;
}

void note(const Globals& g, std::ostream& err, const std::string& msg) {
  if (!g.quiet) err << msg << '\n';
}

bool any_failed(const Json& checks) {
  for (const auto& c : checks) {
    if (c.contains("verdict") && c["verdict"] == "fail") return true;
  }
  return false;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// validate

int cmd_validate(const std::string& path, const Globals& g, std::ostream& out, std::ostream& err) {
  const Scenario sc = load_scenario(path);
  const ValidationReport report = validate(sc.model);
  Json j{{"scenario", sc.name.empty() ? stem_of(path) : sc.name}, {"report", to_json(report)}};
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!g.out_dir.empty()) write_file(output_dir(g) / (stem_of(path) + ".validation.json"), text);
  for (const HypothesisCheck& c : report.checks) {
    if (c.status == CheckStatus::Fail) {
      note(g, err, std::string(c.hard ? "error: " : "warning: ") + c.name + " fails: " + c.witness);
    }
  }
  for (const std::string& w : report.warnings) note(g, err, "warning: " + w);
  return report.hard_failure() ? kCheckFailure : kPass;
}

// analyze

int cmd_analyze(const std::string& path, bool strict, const Globals& g, std::ostream& out) {
  const Scenario sc = load_scenario(path);
  const PipeGraph graph = PipeGraph::from_model(sc.model);
  const Decomposition d = decompose(graph, strict || sc.run.strict_isolated);
  const std::string dot = to_dot(graph, d);
  Json j = to_json(d, graph);
  j["dot"] = dot;
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!g.out_dir.empty()) {
    const fs::path dir = output_dir(g);
    write_file(dir / (stem_of(path) + ".structure.json"), text);
    write_file(dir / (stem_of(path) + ".dot"), dot);
  }
  return kPass;
}

// simulate

Json single_run_checks(const Scenario& sc, const Trajectory& traj) {
  Json checks = Json::array();
  const PipeGraph graph = PipeGraph::from_model(sc.model);
  const Decomposition d = decompose(graph, sc.run.strict_isolated);
  for (const std::string& c : sc.checks) {
    if (c == "mass_drift") {
      checks.push_back(to_json(mass_drift(traj, sc.model), 1e-4));
    } else if (c == "emptying") {
      checks.push_back(to_json(emptying_check(traj, sc.model, d, sc.run.emptying_threshold)));
    } else if (c == "recurrence" && sc.run.period > 0.0) {
      checks.push_back(
          to_json(recurrence_check(traj, sc.run.period, sc.run.recurrence_threshold, sc.run.after_periods), "recurrence"));
    }
  }
  return checks;
}

IntegratorOptions run_options(const Scenario& sc, const std::string& scheme, std::optional<double> T,
                              std::optional<double> step) {
  IntegratorOptions o = sc.run.integrator;
  if (!scheme.empty()) o.scheme = parse_scheme(scheme);
  if (T) o.T = *T;
  if (step) o.step = *step;
  return o;
}

int cmd_simulate(const SimulateArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const Scenario sc = load_scenario(a.scenario);
  if (sc.initial.empty()) throw Error(ErrorKind::Parse, a.scenario + ": scenario has no initial history");
  const std::string name = a.initial.empty() ? sc.initial.front().first : a.initial;
  const HistoryFn& x0 = sc.initial_named(name);
  const IntegratorOptions opts = run_options(sc, a.scheme, a.T, a.step);
  for (const std::string& w : validate(sc.model).warnings) note(g, err, "warning: " + w);

  const auto start = std::chrono::steady_clock::now();
  const Trajectory traj = integrate(sc.model, x0, opts);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Json summary{{"scenario", sc.name.empty() ? stem_of(a.scenario) : sc.name}, {"initial", name}};
  summary["run"] = trajectory_summary(traj);
  if (a.timing) summary["run"]["runtime_seconds"] = seconds;
  summary["checks"] = single_run_checks(sc, traj);
  const std::string summary_text = summary.dump(2) + "\n";

  std::ostringstream csv;
  write_trajectory_csv(csv, traj, a.stride);
  if (!g.out_dir.empty()) {
    const fs::path dir = output_dir(g);
    const std::string base = stem_of(a.scenario) + "_" + name;
    write_file(dir / (base + ".csv"), csv.str());
    write_file(dir / (base + ".summary.json"), summary_text);
  }
  if (a.format == "csv") {
    out << csv.str();
  } else {
    out << summary_text;
  }
  return any_failed(summary["checks"]) ? kCheckFailure : kPass;
}

// compare

HistoryFn seeded_perturbation(const DOperator& op, std::size_t dim, double size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> f(0.1, 2.0);
  std::vector<double> a0(dim), a1(dim), f1(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    a0[j] = u(rng);
    a1[j] = u(rng);
    f1[j] = f(rng);
  }
  // Nonnegative neutral image keeps the perturbed data D-above the base.
  HistoryFn p = HistoryFn::from_function(op.grid(), dim, [&](std::size_t j, double s) {
    return 0.5 * (a0[j] + a1[j] * (1.0 + std::cos(f1[j] * s)) / 2.0);
  });
  const double n = sup_norm(p);
  if (n > 0.0) p = p.scaled(size / n);
  return invert_Dhat(op, p, 1e-13);
}

int cmd_compare(const CompareArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const Scenario sc = load_scenario(a.scenario);
  if (a.initial.size() != 2) throw Error(ErrorKind::Parse, "compare needs exactly two --initial names");
  const HistoryFn& x0 = sc.initial_named(a.initial[0]);
  const HistoryFn& y0 = sc.initial_named(a.initial[1]);
  IntegratorOptions opts = sc.run.integrator;
  if (a.T) opts.T = *a.T;
  for (const std::string& w : validate(sc.model).warnings) note(g, err, "warning: " + w);

  const Trajectory tx = integrate(sc.model, x0, opts);
  const Trajectory ty = integrate(sc.model, y0, opts);
  const PipeGraph graph = PipeGraph::from_model(sc.model);
  const Decomposition d = decompose(graph, sc.run.strict_isolated);

  std::vector<std::string> checks = a.checks.empty() ? sc.checks : a.checks;
  if (checks.empty()) checks = {"merging", "ordered_mass_gap", "terminal_order"};

  const OrderVerdict initial_order = d_order_compare(sc.model.op(), x0, y0);
  Json results = Json::array();
  for (const std::string& c : checks) {
    if (c == "merging") {
      results.push_back(to_json(merging_check(sc.model, d, tx, ty, sc.run.merge_threshold), "merging"));
    } else if (c == "ordered_mass_gap") {
      if (initial_order.relation == Relation::Incomparable) {
        results.push_back({{"check", "ordered_mass_gap"},
                           {"verdict", "skip"},
                           {"max_violation", 0.0},
                           {"witness", {{"reason", "initial data are not D-ordered"}}}});
      } else {
        const bool swap = initial_order.relation == Relation::Ge;
        results.push_back(
            to_json(ordered_mass_gap(swap ? ty : tx, swap ? tx : ty, sc.run.mass_gap_tol, false), sc.run.mass_gap_tol));
      }
    } else if (c == "terminal_order") {
      const double from = 0.9 * tx.end_time();
      const OrderVerdict v = d_order_compare(sc.model.op(), tx, ty, from);
      const double mx = tx.mass(tx.size() - 1), my = ty.mass(ty.size() - 1);
      const double m0x = tx.mass(0), m0y = ty.mass(0);
      const bool ordered = v.relation != Relation::Incomparable;
      const bool mass_matches = (m0x < m0y) == (mx < my) && (m0x > m0y) == (mx > my);
      const bool order_matches = v.relation == Relation::Equal || (v.relation == Relation::Le) == (mx <= my);
      results.push_back({{"check", "terminal_order"},
                         {"verdict", ordered && mass_matches && order_matches ? "pass" : "fail"},
                         {"max_violation", v.max_violation},
                         {"witness",
                          {{"order", to_json(v)},
                           {"window_start", from},
                           {"mass_initial", {m0x, m0y}},
                           {"mass_final", {mx, my}}}}});
    } else if (c == "stability_modulus") {
      std::mt19937_64 rng(g.seed);
      std::vector<HistoryFn> perturbations;
      for (double s : sc.run.perturbations) perturbations.push_back(seeded_perturbation(sc.model.op(), sc.model.size(), s, rng));
      results.push_back(to_json(stability_modulus(sc.model, tx, perturbations, sc.run.epsilons, opts)));
    } else if (c == "mass_drift") {
      Json pair = to_json(mass_drift(tx, sc.model), 1e-4);
      const Json second = to_json(mass_drift(ty, sc.model), 1e-4);
      if (second["verdict"] == "fail") pair["verdict"] = "fail";
      pair["witness"]["second"] = second["witness"];
      results.push_back(std::move(pair));
    } else if (c == "emptying") {
      Json first = to_json(emptying_check(tx, sc.model, d, sc.run.emptying_threshold));
      const Json second = to_json(emptying_check(ty, sc.model, d, sc.run.emptying_threshold));
      if (second["verdict"] == "fail") first["verdict"] = "fail";
      first["witness"]["second"] = second["witness"];
      results.push_back(std::move(first));
    } else if (c == "recurrence") {
      if (sc.run.period > 0.0) {
        results.push_back(to_json(
            recurrence_check(tx, sc.run.period, sc.run.recurrence_threshold, sc.run.after_periods), "recurrence"));
      }
    }
  }

  Json j{{"scenario", sc.name.empty() ? stem_of(a.scenario) : sc.name},
         {"initial", a.initial},
         {"initial_order", to_json(initial_order)},
         {"runs", {trajectory_summary(tx), trajectory_summary(ty)}},
         {"checks", results}};
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!g.out_dir.empty()) write_file(output_dir(g) / (stem_of(a.scenario) + ".compare.json"), text);
  return any_failed(results) ? kCheckFailure : kPass;
}

// invert

int cmd_invert(const InvertArgs& a, const Globals& g, std::ostream& out) {
  DOperator op;
  if (!a.scenario.empty()) {
    const Scenario sc = load_scenario(a.scenario);
    op = sc.model.op();
  } else {
    if (a.measure.empty()) throw Error(ErrorKind::Parse, "invert needs a scenario or --measure");
    const Grid grid(a.h, a.H);
    const Json mj = parse_json_text(a.measure, "--measure");
    Kernel nu(grid, 1);
    nu.set(0, 0, parse_measure(mj, grid, "--measure"));
    op = DOperator(nu);
  }
  if (!a.input.empty()) {
    const Json hj = parse_json_text(a.input, "--input");
    const HistoryFn h = parse_history(hj, op.grid(), op.dim(), op, "--input");
    const HistoryFn x = invert_Dhat(op, h, std::min(a.tol, 1e-10));
    std::ostringstream csv;
    write_history_csv(csv, x);
    out << csv.str();
    if (!g.out_dir.empty()) write_file(output_dir(g) / "inverse_history.csv", csv.str());
    return kPass;
  }
  const NeumannInverse& inv = op.inverse_measure(a.tol);
  Json j{{"contraction", inv.contraction},
         {"terms", inv.terms},
         {"residual_bound", inv.residual_bound},
         {"tail_loss", inv.tail_loss},
         {"inverse", to_json(inv.inverse)}};
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!g.out_dir.empty()) write_file(output_dir(g) / "inverse_measure.json", text);
  return kPass;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neutral compartmental systems with infinite delay: validation, structure, simulation, checks"};
  app.name("nfde");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for sampled perturbations")->default_val(1);
  app.add_flag("--quiet", g.quiet, "Suppress warnings on stderr");
  app.add_option("--out-dir", g.out_dir, "Also write outputs into this directory");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check the model hypotheses of a scenario");
  validate_cmd->add_option("scenario", validate_path, "Scenario JSON file")->required();

  std::string analyze_path;
  bool strict = false;
  auto* analyze_cmd = app.add_subcommand("analyze", "Decompose the pipe graph into irreducible sets");
  analyze_cmd->add_option("scenario", analyze_path, "Scenario JSON file")->required();
  analyze_cmd->add_flag("--strict-isolated", strict, "Put compartments without any pipe into J0");

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Integrate a scenario from one named initial history");
  simulate_cmd->add_option("scenario", sim.scenario, "Scenario JSON file")->required();
  simulate_cmd->add_option("--initial", sim.initial, "Initial history name (default: first)");
  simulate_cmd->add_option("--scheme", sim.scheme, "euler, heun or rk4")->check(CLI::IsMember({"euler", "heun", "rk4"}));
  simulate_cmd->add_option("--T", sim.T, "Final time");
  simulate_cmd->add_option("--step", sim.step, "Run step (divides the grid step)");
  simulate_cmd->add_option("--out", sim.format, "stdout format: json summary or csv trajectory")
      ->check(CLI::IsMember({"json", "csv"}));
  simulate_cmd->add_option("--stride", sim.stride, "Write every n-th row of the trajectory");
  simulate_cmd->add_flag("--timing", sim.timing, "Include wall-clock runtime in the summary");

  CompareArgs cmp;
  auto* compare_cmd = app.add_subcommand("compare", "Run two initial histories and compare them");
  compare_cmd->add_option("scenario", cmp.scenario, "Scenario JSON file")->required();
  compare_cmd->add_option("--initial", cmp.initial, "Two initial history names")
      ->required()
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  compare_cmd->add_option("--check", cmp.checks, "Checks to run (default: the scenario's list)");
  compare_cmd->add_option("--T", cmp.T, "Final time");

  InvertArgs inv;
  auto* invert_cmd = app.add_subcommand("invert", "Truncated inverse measure or D^-1 applied to a history");
  invert_cmd->add_option("scenario", inv.scenario, "Scenario JSON file (its production kernel)");
  invert_cmd->add_option("--measure", inv.measure, "Scalar measure literal (JSON)");
  invert_cmd->add_option("--grid-step", inv.h, "Grid step for --measure");
  invert_cmd->add_option("--horizon", inv.H, "Grid horizon for --measure");
  invert_cmd->add_option("--tol", inv.tol, "Truncation tolerance")->default_val(1e-6);
  invert_cmd->add_option("--input", inv.input, "History literal (JSON); prints D^-1 of it as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kInputError;
  }

  try {
    if (*validate_cmd) return cmd_validate(validate_path, g, out, err);
    if (*analyze_cmd) return cmd_analyze(analyze_path, strict, g, out);
    if (*simulate_cmd) return cmd_simulate(sim, g, out, err);
    if (*compare_cmd) {
      if (cmp.initial.size() == 1) cmp.initial.push_back(cmp.initial.front());
      return cmd_compare(cmp, g, out, err);
    }
    if (*invert_cmd) return cmd_invert(inv, g, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace nfde::cli
