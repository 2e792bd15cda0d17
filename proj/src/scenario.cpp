#include "nfde/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "nfde/error.hpp"

namespace nfde {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Parse, path + ": " + what);
}

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t index) { return path + "[" + std::to_string(index) + "]"; }

void allow_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; });
    if (!known) fail(at(path, item.key()), "unknown field");
  }
}

const Json& require(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(at(path, key), "missing field");
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

double number_or(const Json& j, const char* key, double fallback, const std::string& path) {
  const auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, at(path, key));
}

std::size_t index_field(const Json& j, const char* key, const std::string& path, std::size_t lo, std::size_t hi) {
  const Json& v = require(j, key, path);
  if (!v.is_number_integer()) fail(at(path, key), "expected an integer");
  const auto i = v.get<long long>();
  if (i < static_cast<long long>(lo) || i > static_cast<long long>(hi)) {
    fail(at(path, key), "index " + std::to_string(i) + " outside " + std::to_string(lo) + ".." + std::to_string(hi));
  }
  return static_cast<std::size_t>(i);
}

std::vector<double> number_list(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], at(path, k)));
  return out;
}

std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

// Re-raises library errors with the field path in front.
template <class F>
auto guarded(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.detail());
  }
}

Json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

Json one_based(const std::vector<std::size_t>& v) {
  Json out = Json::array();
  for (std::size_t i : v) out.push_back(i + 1);
  return out;
}

Json one_based(const NodeSet& v) { return one_based(std::vector<std::size_t>(v.begin(), v.end())); }

}  // namespace

Json parse_json_text(const std::string& text_in, const std::string& source) {
  try {
    return Json::parse(text_in);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text_in.size());
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < byte; ++k) {
      if (text_in[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    const auto colon = what.find(": ");
    if (colon != std::string::npos) what = what.substr(colon + 2);
    std::ostringstream msg;
    msg << source << ":" << line << ":" << col << ": " << what;
    throw Error(ErrorKind::Parse, msg.str());
  }
}

TimeCoefficient parse_coefficient(const Json& j, const std::string& path) {
  if (j.is_number()) return TimeCoefficient(number(j, path));
  allow_keys(j, path, {"base", "harmonics"});
  const double base = number(require(j, "base", path), at(path, "base"));
  std::vector<Harmonic> harmonics;
  if (const auto it = j.find("harmonics"); it != j.end()) {
    const std::string hp = at(path, "harmonics");
    if (!it->is_array()) fail(hp, "expected an array");
    for (std::size_t k = 0; k < it->size(); ++k) {
      const Json& h = (*it)[k];
      const std::string p = at(hp, k);
      allow_keys(h, p, {"amplitude", "frequency", "phase"});
      harmonics.push_back(Harmonic{number(require(h, "amplitude", p), at(p, "amplitude")),
                                   number(require(h, "frequency", p), at(p, "frequency")),
                                   number_or(h, "phase", 0.0, p)});
    }
  }
  return guarded(path, [&] { return TimeCoefficient(base, std::move(harmonics)); });
}

TransportFn parse_transport(const Json& j, const std::string& path) {
  allow_keys(j, path, {"kind", "a", "b"});
  const std::string kind = text(require(j, "kind", path), at(path, "kind"));
  if (kind == "zero") return TransportFn::zero();
  const TimeCoefficient a = parse_coefficient(require(j, "a", path), at(path, "a"));
  if (kind == "linear") return guarded(path, [&] { return TransportFn::linear(a); });
  if (kind == "saturating") {
    const double b = number(require(j, "b", path), at(path, "b"));
    return guarded(path, [&] { return TransportFn::saturating(a, b); });
  }
  fail(at(path, "kind"), "unknown transport kind '" + kind + "' (expected zero, linear or saturating)");
}

ScalarMeasure parse_measure(const Json& j, Grid grid, const std::string& path) {
  allow_keys(j, path, {"atoms", "density", "horizon", "tail"});
  if (const auto it = j.find("horizon"); it != j.end()) {
    const double h = number(*it, at(path, "horizon"));
    if (std::abs(h - grid.horizon) > 1e-9 * std::max(1.0, grid.horizon)) {
      throw Error(ErrorKind::GridMismatch, at(path, "horizon") + ": measure horizon differs from the model grid");
    }
  }
  std::vector<LocatedAtom> atoms;
  if (const auto it = j.find("atoms"); it != j.end()) {
    const std::string ap = at(path, "atoms");
    if (!it->is_array()) fail(ap, "expected an array of [location, mass] pairs");
    for (std::size_t k = 0; k < it->size(); ++k) {
      const Json& a = (*it)[k];
      if (!a.is_array() || a.size() != 2) fail(at(ap, k), "expected [location, mass]");
      atoms.push_back({number(a[0], at(at(ap, k), 0)), number(a[1], at(at(ap, k), 1))});
    }
  }
  std::vector<double> samples;
  double tail = 0.0;
  ScalarMeasure catalogue(grid);
  if (const auto it = j.find("density"); it != j.end()) {
    const std::string dp = at(path, "density");
    const std::string kind = text(require(*it, "kind", dp), at(dp, "kind"));
    if (kind == "none") {
      allow_keys(*it, dp, {"kind"});
    } else if (kind == "exp") {
      allow_keys(*it, dp, {"kind", "rate", "scale"});
      const double rate = number(require(*it, "rate", dp), at(dp, "rate"));
      const double scale = number_or(*it, "scale", 1.0, dp);
      catalogue = guarded(dp, [&] { return ScalarMeasure::exponential(grid, rate, scale); });
    } else if (kind == "uniform") {
      allow_keys(*it, dp, {"kind", "a", "b", "scale"});
      const double a = number(require(*it, "a", dp), at(dp, "a"));
      const double b = number(require(*it, "b", dp), at(dp, "b"));
      const double scale = number_or(*it, "scale", 1.0, dp);
      catalogue = guarded(dp, [&] { return ScalarMeasure::uniform(grid, a, b, scale); });
    } else if (kind == "samples") {
      allow_keys(*it, dp, {"kind", "values"});
      samples = number_list(require(*it, "values", dp), at(dp, "values"));
    } else {
      fail(at(dp, "kind"), "unknown density kind '" + kind + "' (expected exp, uniform, samples or none)");
    }
  }
  if (const auto it = j.find("tail"); it != j.end()) {
    if (samples.empty()) fail(at(path, "tail"), "a tail is only declared alongside sampled densities");
    tail = number(*it, at(path, "tail"));
  }
  return guarded(path, [&] { return ScalarMeasure(grid, atoms, samples, tail) + catalogue; });
}

namespace {

HistoryFn piecewise_history(const Json& j, Grid grid, std::size_t dim, const std::string& path) {
  if (!j.is_array() || j.size() != dim) fail(path, "expected one knot list per component");
  std::vector<std::vector<std::pair<double, double>>> knots(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    const std::string cp = at(path, c);
    if (!j[c].is_array() || j[c].empty()) fail(cp, "expected a nonempty list of [s, value] knots");
    for (std::size_t k = 0; k < j[c].size(); ++k) {
      const Json& kn = j[c][k];
      if (!kn.is_array() || kn.size() != 2) fail(at(cp, k), "expected [s, value]");
      const double s = number(kn[0], at(at(cp, k), 0));
      if (s > 0.0) fail(at(cp, k), "knot times must be <= 0");
      if (!knots[c].empty() && s <= knots[c].back().first) fail(at(cp, k), "knot times must increase");
      knots[c].push_back({s, number(kn[1], at(at(cp, k), 1))});
    }
  }
  auto eval = [&](std::size_t c, double s) {
    const auto& kn = knots[c];
    if (s <= kn.front().first) return kn.front().second;
    if (s >= kn.back().first) return kn.back().second;
    const auto it = std::upper_bound(kn.begin(), kn.end(), s, [](double v, const auto& p) { return v < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    return lo.second + (s - lo.first) / (hi.first - lo.first) * (hi.second - lo.second);
  };
  std::vector<std::vector<double>> cols(dim, std::vector<double>(grid.steps() + 1));
  std::vector<double> before(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    for (std::size_t k = 0; k <= grid.steps(); ++k) cols[c][k] = eval(c, -grid.horizon + static_cast<double>(k) * grid.step);
    before[c] = knots[c].front().second;
  }
  return HistoryFn(grid, std::move(cols), std::move(before));
}

}  // namespace

HistoryFn parse_history(const Json& j, Grid grid, std::size_t dim, const DOperator& op, const std::string& path) {
  if (!j.is_object() || j.size() != 1) fail(path, "expected exactly one of const, grid, piecewise, neutral");
  const std::string kind = j.begin().key();
  const Json& body = j.begin().value();
  const std::string bp = at(path, kind);
  if (kind == "const") {
    const std::vector<double> v = number_list(body, bp);
    if (v.size() != dim) fail(bp, "expected " + std::to_string(dim) + " values");
    return HistoryFn::constant(grid, v);
  }
  if (kind == "grid") {
    allow_keys(body, bp, {"h", "H", "values", "before"});
    const double h = number_or(body, "h", grid.step, bp);
    const double H = number_or(body, "H", grid.horizon, bp);
    const Grid g = guarded(bp, [&] { return Grid(h, H); });
    const Json& values = require(body, "values", bp);
    if (!values.is_array() || values.size() != dim) fail(at(bp, "values"), "expected one sample list per component");
    std::vector<std::vector<double>> cols;
    for (std::size_t c = 0; c < dim; ++c) cols.push_back(number_list(values[c], at(at(bp, "values"), c)));
    std::vector<double> before;
    if (const auto it = body.find("before"); it != body.end()) before = number_list(*it, at(bp, "before"));
    return guarded(bp, [&] { return HistoryFn(g, std::move(cols), std::move(before)); });
  }
  if (kind == "piecewise") return piecewise_history(body, grid, dim, bp);
  if (kind == "neutral") {
    const HistoryFn target = parse_history(body, grid, dim, op, bp);
    return guarded(bp, [&] { return invert_Dhat(op, target, 1e-13); });
  }
  fail(path, "unknown history kind '" + kind + "' (expected const, grid, piecewise or neutral)");
}

const HistoryFn& Scenario::initial_named(const std::string& name_in) const {
  for (const auto& [n, h] : initial) {
    if (n == name_in) return h;
  }
  std::string known;
  for (const auto& entry : initial) known += (known.empty() ? "" : ", ") + entry.first;
  throw Error(ErrorKind::Parse, "no initial history named '" + name_in + "' (available: " + known + ")");
}

namespace {

const std::set<std::string> kKnownChecks{"mass_drift",        "ordered_mass_gap", "stability_modulus", "emptying",
                                         "merging",           "recurrence",       "terminal_order"};

void parse_run(const Json& j, RunSettings& run, const std::string& path) {
  allow_keys(j, path,
             {"scheme", "T", "step", "recovery_tol", "max_iterations", "enforce_validation", "thresholds", "period",
              "after_periods", "epsilons", "perturbations", "strict_isolated"});
  if (const auto it = j.find("scheme"); it != j.end()) {
    const std::string s = text(*it, at(path, "scheme"));
    run.integrator.scheme = guarded(at(path, "scheme"), [&] { return parse_scheme(s); });
  }
  run.integrator.T = number_or(j, "T", run.integrator.T, path);
  run.integrator.step = number_or(j, "step", run.integrator.step, path);
  run.integrator.recovery_tol = number_or(j, "recovery_tol", run.integrator.recovery_tol, path);
  if (const auto it = j.find("max_iterations"); it != j.end()) {
    if (!it->is_number_unsigned()) fail(at(path, "max_iterations"), "expected a nonnegative integer");
    run.integrator.max_iterations = it->get<std::size_t>();
  }
  if (const auto it = j.find("enforce_validation"); it != j.end()) {
    if (!it->is_boolean()) fail(at(path, "enforce_validation"), "expected a boolean");
    run.integrator.enforce_validation = it->get<bool>();
  }
  if (const auto it = j.find("strict_isolated"); it != j.end()) {
    if (!it->is_boolean()) fail(at(path, "strict_isolated"), "expected a boolean");
    run.strict_isolated = it->get<bool>();
  }
  if (const auto it = j.find("thresholds"); it != j.end()) {
    const std::string tp = at(path, "thresholds");
    allow_keys(*it, tp, {"merge", "emptying", "recurrence", "mass_gap"});
    run.merge_threshold = number_or(*it, "merge", run.merge_threshold, tp);
    run.emptying_threshold = number_or(*it, "emptying", run.emptying_threshold, tp);
    run.recurrence_threshold = number_or(*it, "recurrence", run.recurrence_threshold, tp);
    run.mass_gap_tol = number_or(*it, "mass_gap", run.mass_gap_tol, tp);
  }
  run.period = number_or(j, "period", run.period, path);
  if (const auto it = j.find("after_periods"); it != j.end()) {
    if (!it->is_number_unsigned()) fail(at(path, "after_periods"), "expected a nonnegative integer");
    run.after_periods = it->get<std::size_t>();
  }
  if (const auto it = j.find("epsilons"); it != j.end()) run.epsilons = number_list(*it, at(path, "epsilons"));
  if (const auto it = j.find("perturbations"); it != j.end()) {
    run.perturbations = number_list(*it, at(path, "perturbations"));
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text_in, const std::string& source) {
  const Json root = parse_json_text(text_in, source);
  try {
    allow_keys(root, "", {"name", "description", "m", "grid", "pipes", "outflows", "inflows", "nu", "initial", "run",
                          "checks"});
    Scenario sc;
    if (const auto it = root.find("name"); it != root.end()) sc.name = text(*it, "name");
    const Json& mj = require(root, "m", "");
    if (!mj.is_number_unsigned() || mj.get<std::size_t>() == 0) fail("m", "expected a positive integer");
    const auto m = mj.get<std::size_t>();
    const Json& gj = require(root, "grid", "");
    allow_keys(gj, "grid", {"h", "H"});
    const double h = number(require(gj, "h", "grid"), "grid.h");
    const double H = number(require(gj, "H", "grid"), "grid.H");
    const Grid grid = guarded("grid", [&] { return Grid(h, H); });
    sc.model = CompartmentalModel(grid, m);

    auto add_outflow = [&](const Json& p, const std::string& pp) {
      const std::size_t from = index_field(p, "from", pp, 1, m);
      if (sc.model.has_outflow(from - 1)) fail(pp, "duplicate outflow from compartment " + std::to_string(from));
      sc.model.set_outflow(from - 1, parse_transport(require(p, "g", pp), at(pp, "g")));
    };
    if (const auto it = root.find("pipes"); it != root.end()) {
      if (!it->is_array()) fail("pipes", "expected an array");
      for (std::size_t k = 0; k < it->size(); ++k) {
        const Json& p = (*it)[k];
        const std::string pp = at("pipes", k);
        allow_keys(p, pp, {"from", "to", "g", "mu"});
        const std::size_t to = index_field(p, "to", pp, 0, m);
        if (to == 0) {
          if (p.contains("mu")) fail(at(pp, "mu"), "outflow pipes carry no transit measure");
          add_outflow(p, pp);
          continue;
        }
        const std::size_t from = index_field(p, "from", pp, 1, m);
        TransportFn g = parse_transport(require(p, "g", pp), at(pp, "g"));
        ScalarMeasure mu = parse_measure(require(p, "mu", pp), grid, at(pp, "mu"));
        guarded(pp, [&] {
          sc.model.add_pipe(from - 1, to - 1, std::move(g), std::move(mu));
          return 0;
        });
      }
    }
    if (const auto it = root.find("outflows"); it != root.end()) {
      if (!it->is_array()) fail("outflows", "expected an array");
      for (std::size_t k = 0; k < it->size(); ++k) {
        const std::string pp = at("outflows", k);
        allow_keys((*it)[k], pp, {"from", "to", "g"});
        if ((*it)[k].contains("to") && index_field((*it)[k], "to", pp, 0, 0) != 0) fail(pp, "outflows go to 0");
        add_outflow((*it)[k], pp);
      }
    }
    if (const auto it = root.find("inflows"); it != root.end()) {
      if (!it->is_array()) fail("inflows", "expected an array");
      for (std::size_t k = 0; k < it->size(); ++k) {
        const Json& p = (*it)[k];
        const std::string pp = at("inflows", k);
        allow_keys(p, pp, {"to", "I"});
        const std::size_t to = index_field(p, "to", pp, 1, m);
        sc.model.set_inflow(to - 1, parse_coefficient(require(p, "I", pp), at(pp, "I")));
      }
    }
    Kernel nu(grid, m);
    if (const auto it = root.find("nu"); it != root.end()) {
      if (!it->is_array()) fail("nu", "expected an array");
      std::set<std::pair<std::size_t, std::size_t>> seen;
      for (std::size_t k = 0; k < it->size(); ++k) {
        const Json& e = (*it)[k];
        const std::string ep = at("nu", k);
        allow_keys(e, ep, {"i", "j", "measure"});
        const std::size_t i = index_field(e, "i", ep, 1, m);
        const std::size_t jj = index_field(e, "j", ep, 1, m);
        if (!seen.insert({i, jj}).second) fail(ep, "duplicate entry");
        nu.set(i - 1, jj - 1, parse_measure(require(e, "measure", ep), grid, at(ep, "measure")));
      }
    }
    guarded("nu", [&] {
      sc.model.set_production(std::move(nu));
      return 0;
    });

    if (const auto it = root.find("run"); it != root.end()) parse_run(*it, sc.run, "run");
    if (const auto it = root.find("initial"); it != root.end()) {
      if (!it->is_object()) fail("initial", "expected an object of named histories");
      for (const auto& item : it->items()) {
        sc.initial.emplace_back(item.key(),
                                parse_history(item.value(), grid, m, sc.model.op(), at("initial", item.key())));
      }
    }
    if (const auto it = root.find("checks"); it != root.end()) {
      if (!it->is_array()) fail("checks", "expected an array of check names");
      for (std::size_t k = 0; k < it->size(); ++k) {
        const std::string c = text((*it)[k], at("checks", k));
        if (!kKnownChecks.count(c)) fail(at("checks", k), "unknown check '" + c + "'");
        sc.checks.push_back(c);
      }
    }
    return sc;
  } catch (const Error& e) {
    throw Error(e.kind(), source + ": " + e.detail());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, std::size_t stride) {
  if (stride == 0) stride = 1;
  const std::size_t m = traj.dim();
  out << "t";
  for (std::size_t i = 1; i <= m; ++i) out << ",z_" << i;
  for (std::size_t i = 1; i <= m; ++i) out << ",w_" << i;
  out << ",mass\n";
  for (std::size_t n = 0; n < traj.size(); ++n) {
    if (n % stride != 0 && n + 1 != traj.size()) continue;
    out << format_double(traj.time(n));
    for (std::size_t i = 0; i < m; ++i) out << ',' << format_double(traj.z(i, n));
    for (std::size_t i = 0; i < m; ++i) out << ',' << format_double(traj.w(i, n));
    out << ',';
    if (traj.has_mass()) out << format_double(traj.mass(n));
    out << '\n';
  }
}

void write_history_csv(std::ostream& out, const HistoryFn& x) {
  out << "s";
  for (std::size_t i = 1; i <= x.dim(); ++i) out << ",x_" << i;
  out << "\n-inf";
  for (std::size_t i = 0; i < x.dim(); ++i) out << ',' << format_double(x.before(i));
  out << '\n';
  for (std::size_t k = 0; k < x.size(); ++k) {
    out << format_double(x.time_at(k));
    for (std::size_t i = 0; i < x.dim(); ++i) out << ',' << format_double(x.sample(i, k));
    out << '\n';
  }
}

Json to_json(const ScalarMeasure& m) {
  Json j;
  Json atoms = Json::array();
  for (const Atom& a : m.atoms()) atoms.push_back({num(0.0 - static_cast<double>(a.lag) * m.grid().step), num(a.mass)});
  j["atoms"] = std::move(atoms);
  if (m.has_density()) {
    Json values = Json::array();
    for (double v : m.density_samples()) values.push_back(num(v));
    j["density"] = {{"kind", "samples"}, {"values", std::move(values)}};
  } else {
    j["density"] = {{"kind", "none"}};
  }
  j["horizon"] = num(m.grid().horizon);
  if (m.tail_mass() != 0.0) j["tail"] = num(m.tail_mass());
  return j;
}

Json to_json(const Kernel& k) {
  Json entries = Json::array();
  for (std::size_t i = 0; i < k.dim(); ++i) {
    for (std::size_t j = 0; j < k.dim(); ++j) {
      if (k.at(i, j).is_zero()) continue;
      entries.push_back({{"i", i + 1}, {"j", j + 1}, {"measure", to_json(k.at(i, j))}});
    }
  }
  return Json{{"dim", k.dim()}, {"entries", std::move(entries)}};
}

Json to_json(const ValidationReport& r) {
  Json checks = Json::array();
  for (const HypothesisCheck& c : r.checks) {
    checks.push_back({{"name", c.name}, {"status", to_string(c.status)}, {"hard", c.hard}, {"witness", c.witness}});
  }
  Json eta = Json::array();
  for (const EtaCheck& e : r.eta) {
    eta.push_back({{"i", e.i + 1},
                   {"j", e.j + 1},
                   {"c", num(e.c)},
                   {"d_sum", num(e.d_sum)},
                   {"nonnegative", e.nonnegative},
                   {"worst", num(e.worst)},
                   {"worst_location", num(e.worst_location)}});
  }
  Json pipes = Json::array();
  for (const PipeClass& p : r.pipes) {
    pipes.push_back({{"from", p.from + 1},
                     {"to", p.to_environment ? 0 : p.to + 1},
                     {"kind", to_string(p.kind)},
                     {"carries_material", p.carries_material},
                     {"strictly_increasing", p.strictly_increasing},
                     {"slope_inf", num(p.slope_inf)},
                     {"slope_sup", num(p.slope_sup)}});
  }
  return Json{{"hard_failure", r.hard_failure()},
              {"checks", std::move(checks)},
              {"eta", std::move(eta)},
              {"pipes", std::move(pipes)},
              {"warnings", r.warnings}};
}

Json to_json(const Decomposition& d, const PipeGraph& g) {
  Json irr = Json::array();
  Json in_sets = Json::array(), out_sets = Json::array();
  for (const IrreducibleSet& s : d.irreducible) {
    irr.push_back(one_based(s.members));
    in_sets.push_back(s.inflow);
    out_sets.push_back(s.outflow);
  }
  std::vector<std::size_t> in_nodes, out_nodes;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.inflow(i)) in_nodes.push_back(i);
    if (g.outflow(i)) out_nodes.push_back(i);
  }
  return Json{{"irreducible", std::move(irr)},
              {"j0", one_based(d.j0)},
              {"inflow", {{"compartments", one_based(in_nodes)}, {"sets", std::move(in_sets)}, {"j0", d.j0_inflow}}},
              {"outflow", {{"compartments", one_based(out_nodes)}, {"sets", std::move(out_sets)}, {"j0", d.j0_outflow}}}};
}

Json to_json(const OrderVerdict& v) {
  return Json{{"relation", to_string(v.relation)},
              {"max_violation", num(v.max_violation)},
              {"witness_time", num(v.witness_time)},
              {"witness_component", v.witness_component + 1}};
}

Json to_json(const ConvergenceReport& r, const std::string& check) {
  Json windows = Json::array();
  for (double v : r.window_sup) windows.push_back(num(v));
  return Json{{"check", check},
              {"verdict", to_string(r.verdict)},
              {"max_violation", num(r.final_gap)},
              {"witness",
               {{"reason", r.reason},
                {"targets", one_based(r.targets)},
                {"window_sup", std::move(windows)},
                {"rate", num(r.rate)},
                {"threshold", num(r.threshold)}}}};
}

Json to_json(const EmptyingReport& r) {
  Json terminal = Json::array();
  for (double v : r.terminal) terminal.push_back(num(v));
  const double worst = r.terminal.empty() ? 0.0 : *std::max_element(r.terminal.begin(), r.terminal.end());
  return Json{{"check", "emptying"},
              {"verdict", to_string(r.verdict)},
              {"max_violation", num(worst)},
              {"witness",
               {{"reason", r.reason},
                {"targets", one_based(r.targets)},
                {"terminal", std::move(terminal)},
                {"threshold", num(r.threshold)}}}};
}

Json to_json(const MassDrift& r, double bound) {
  return Json{{"check", "mass_drift"},
              {"verdict", r.relative <= bound ? "pass" : "fail"},
              {"max_violation", num(r.max_abs)},
              {"witness",
               {{"closed", r.closed}, {"relative", num(r.relative)}, {"time", num(r.witness_time)}, {"bound", num(bound)}}}};
}

Json to_json(const MassGapReport& r, double tol) {
  const double worst = std::max({0.0, -r.min_lower, r.max_upper_excess});
  return Json{{"check", "ordered_mass_gap"},
              {"verdict", r.violations == 0 ? "pass" : "fail"},
              {"max_violation", num(worst)},
              {"witness",
               {{"mass_gap", num(r.mass_gap)},
                {"min_lower", num(r.min_lower)},
                {"max_upper_excess", num(r.max_upper_excess)},
                {"violations", r.violations},
                {"time", num(r.witness_time)},
                {"component", r.witness_component + 1},
                {"tolerance", num(tol)}}}};
}

Json to_json(const StabilityModulus& r) {
  Json runs = Json::array();
  bool chain = true;
  double worst_gap = 0.0;
  for (const PerturbationRun& p : r.runs) {
    chain = chain && p.chain_holds;
    worst_gap = std::max(worst_gap, p.gap);
    runs.push_back({{"size", num(p.size)},
                    {"gap", num(p.gap)},
                    {"mass_gap", num(p.mass_gap)},
                    {"ordered", p.ordered},
                    {"chain_bound", num(p.chain_bound)},
                    {"chain_holds", p.chain_holds}});
  }
  Json table = Json::array();
  for (const ModulusEntry& e : r.table) table.push_back({{"epsilon", num(e.epsilon)}, {"delta", num(e.delta)}});
  Json unmet = Json::array();
  for (double e : r.unmet) unmet.push_back(num(e));
  return Json{{"check", "stability_modulus"},
              {"verdict", !r.flagged() && chain ? "pass" : "fail"},
              {"max_violation", num(worst_gap)},
              {"witness",
               {{"flagged", r.flagged()}, {"table", std::move(table)}, {"unmet", std::move(unmet)}, {"runs", std::move(runs)}}}};
}

Json trajectory_summary(const Trajectory& traj) {
  Json j{{"scheme", traj.scheme},
         {"step", num(traj.step())},
         {"T", num(traj.end_time())},
         {"steps", traj.size() == 0 ? 0 : traj.size() - 1},
         {"max_residual", num(traj.max_residual)},
         {"recovery_iterations", traj.recovery_iterations},
         {"tail_mass", num(traj.tail_mass)}};
  if (traj.has_mass() && traj.size() > 0) {
    j["mass_initial"] = num(traj.mass(0));
    j["mass_final"] = num(traj.mass(traj.size() - 1));
  }
  return j;
}

}  // namespace nfde
