#include "nfde/structure.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

#include "nfde/error.hpp"

namespace nfde {

PipeGraph::PipeGraph(std::size_t nodes) : succ_(nodes), inflow_(nodes, false), outflow_(nodes, false) {}

PipeGraph PipeGraph::from_model(const CompartmentalModel& model) {
  PipeGraph g(model.size());
  for (const Pipe& p : model.pipes()) {
    if (p.g.carries_material()) g.add_edge(p.from, p.to);
  }
  for (std::size_t i = 0; i < model.size(); ++i) {
    const TimeCoefficient& in = model.inflow_coefficient(i);
    g.set_inflow(i, !in.is_zero() && in.upper_bound() > 0.0);
    g.set_outflow(i, model.has_outflow(i));
  }
  return g;
}

void PipeGraph::add_edge(std::size_t from, std::size_t to) {
  if (from >= size() || to >= size()) throw Error(ErrorKind::Precondition, "edge endpoint out of range");
  succ_[from].insert(to);
}

bool PipeGraph::isolated(std::size_t i) const {
  if (!succ_.at(i).empty()) return false;
  for (const NodeSet& s : succ_) {
    if (s.count(i)) return false;
  }
  return true;
}

NodeSet zeta(const PipeGraph& g, const NodeSet& members) {
  NodeSet out;
  for (std::size_t j : members) {
    const NodeSet& s = g.successors(j);
    out.insert(s.begin(), s.end());
  }
  return out;
}

int Decomposition::set_of(std::size_t i) const {
  for (std::size_t l = 0; l < irreducible.size(); ++l) {
    if (irreducible[l].members.count(i)) return static_cast<int>(l);
  }
  return -1;
}

namespace {

// Tarjan's algorithm; returns the component id of each node.
std::vector<std::size_t> strong_components(const PipeGraph& g, std::size_t& count) {
  const std::size_t n = g.size();
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, unset), low(n, 0), comp(n, unset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t next = 0;
  count = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = next++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w : g.successors(v)) {
      if (index[w] == unset) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = count;
      } while (w != v);
      ++count;
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (index[v] == unset) visit(v);
  }
  return comp;
}

}  // namespace

Decomposition decompose(const PipeGraph& g, bool strict_isolated) {
  std::size_t count = 0;
  const std::vector<std::size_t> comp = strong_components(g, count);
  std::vector<bool> sink(count, true);
  for (std::size_t v = 0; v < g.size(); ++v) {
    for (std::size_t w : g.successors(v)) {
      if (comp[w] != comp[v]) sink[comp[v]] = false;
    }
  }
  std::vector<NodeSet> members(count);
  for (std::size_t v = 0; v < g.size(); ++v) members[comp[v]].insert(v);

  Decomposition d;
  for (std::size_t c = 0; c < count; ++c) {
    const NodeSet& set = members[c];
    const bool keep = sink[c] && !(strict_isolated && set.size() == 1 && g.isolated(*set.begin()));
    if (!keep) {
      d.j0.insert(set.begin(), set.end());
      continue;
    }
    IrreducibleSet s;
    s.members = set;
    for (std::size_t i : set) {
      s.inflow = s.inflow || g.inflow(i);
      s.outflow = s.outflow || g.outflow(i);
    }
    d.irreducible.push_back(std::move(s));
  }
  std::sort(d.irreducible.begin(), d.irreducible.end(),
            [](const IrreducibleSet& a, const IrreducibleSet& b) { return *a.members.begin() < *b.members.begin(); });
  for (std::size_t i : d.j0) {
    d.j0_inflow = d.j0_inflow || g.inflow(i);
    d.j0_outflow = d.j0_outflow || g.outflow(i);
  }
  return d;
}

std::vector<std::size_t> path_witness(const PipeGraph& g, const NodeSet& members, std::size_t i, std::size_t j) {
  if (i == j) throw Error(ErrorKind::Precondition, "path endpoints must differ");
  if (!members.count(i) || !members.count(j)) {
    throw Error(ErrorKind::Precondition, "path endpoints must belong to the given set");
  }
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(g.size(), unset);
  std::deque<std::size_t> queue{i};
  parent[i] = i;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    if (v == j) break;
    for (std::size_t w : g.successors(v)) {
      if (!members.count(w) || parent[w] != unset) continue;
      parent[w] = v;
      queue.push_back(w);
    }
  }
  if (parent[j] == unset) {
    std::ostringstream msg;
    msg << "no path from " << i + 1 << " to " << j + 1 << " inside the set";
    throw Error(ErrorKind::NoPath, msg.str());
  }
  std::vector<std::size_t> path{j};
  while (path.back() != i) path.push_back(parent[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

std::string to_dot(const PipeGraph& g, const Decomposition& d) {
  std::ostringstream out;
  out << "digraph pipes {\n";
  out << "  rankdir=LR;\n";
  for (std::size_t l = 0; l < d.irreducible.size(); ++l) {
    out << "  subgraph cluster_" << l + 1 << " {\n";
    out << "    label=\"J" << l + 1 << "\";\n";
    for (std::size_t i : d.irreducible[l].members) out << "    " << i + 1 << ";\n";
    out << "  }\n";
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    out << "  " << i + 1 << " [label=\"" << i + 1 << "\"";
    if (d.j0.count(i)) out << ", style=dashed";
    out << "];\n";
  }
  bool env = false;
  for (std::size_t i = 0; i < g.size(); ++i) env = env || g.inflow(i) || g.outflow(i);
  if (env) out << "  env [label=\"environment\", shape=box];\n";
  for (std::size_t v = 0; v < g.size(); ++v) {
    for (std::size_t w : g.successors(v)) out << "  " << v + 1 << " -> " << w + 1 << ";\n";
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.inflow(i)) out << "  env -> " << i + 1 << " [style=dotted];\n";
    if (g.outflow(i)) out << "  " << i + 1 << " -> env [style=dotted];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace nfde
