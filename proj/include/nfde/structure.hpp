#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "nfde/model.hpp"

namespace nfde {

using NodeSet = std::set<std::size_t>;

/// Carrier relation between compartments (0-based): an edge from -> to for
/// every pipe that carries material, plus inflow/outflow flags.
class PipeGraph {
 public:
  PipeGraph() = default;
  explicit PipeGraph(std::size_t nodes);

  static PipeGraph from_model(const CompartmentalModel& model);

  void add_edge(std::size_t from, std::size_t to);
  void set_inflow(std::size_t i, bool on) { inflow_.at(i) = on; }
  void set_outflow(std::size_t i, bool on) { outflow_.at(i) = on; }

  std::size_t size() const noexcept { return succ_.size(); }
  const NodeSet& successors(std::size_t j) const { return succ_.at(j); }
  bool has_edge(std::size_t from, std::size_t to) const { return succ_.at(from).count(to) > 0; }
  bool inflow(std::size_t i) const { return inflow_.at(i); }
  bool outflow(std::size_t i) const { return outflow_.at(i); }
  /// No edge in or out, self-loops included.
  bool isolated(std::size_t i) const;

 private:
  std::vector<NodeSet> succ_;
  std::vector<bool> inflow_;
  std::vector<bool> outflow_;
};

/// Union of the successors of every node in `members`.
NodeSet zeta(const PipeGraph& g, const NodeSet& members);

struct IrreducibleSet {
  NodeSet members;
  bool inflow = false;   // some member receives inflow
  bool outflow = false;  // some member drains to the environment
};

struct Decomposition {
  std::vector<IrreducibleSet> irreducible;  // ordered by smallest member
  NodeSet j0;
  bool j0_inflow = false;
  bool j0_outflow = false;

  /// Index of the irreducible set containing i, or -1 when i is in j0.
  int set_of(std::size_t i) const;
};

/// Irreducible sets are the sink components of the strongly connected
/// component condensation. With `strict_isolated`, nodes without any edge go
/// to j0 instead of forming singleton sets.
Decomposition decompose(const PipeGraph& g, bool strict_isolated = false);

/// Shortest hop sequence i -> ... -> j staying inside `members`.
/// Throws Precondition for i == j or endpoints outside `members`, NoPath when
/// no such path exists.
std::vector<std::size_t> path_witness(const PipeGraph& g, const NodeSet& members, std::size_t i, std::size_t j);

/// Graphviz digraph with 1-based node names, irreducible sets as clusters.
std::string to_dot(const PipeGraph& g, const Decomposition& d);

}  // namespace nfde
