#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "feederopt/grid_model.hpp"

namespace feederopt::topology {

/// Breaker state vector over the reduced-graph edges; true = closed.
/// Orders lexicographically with bit 0 most significant, matching the
/// order of the "01" text form.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t size, bool value = false) : bits_(size, value) {}

  /// Parses a string of '0'/'1'; throws ParseError on other characters.
  static BitString parse(std::string_view text);
  std::string str() const;

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool value) { bits_[i] = value; }
  std::size_t count() const;

  auto operator<=>(const BitString&) const = default;
  bool operator==(const BitString&) const = default;

 private:
  std::vector<bool> bits_;
};

/// Number of differing positions. Throws LengthMismatchError on unequal sizes.
std::size_t hamming(const BitString& a, const BitString& b);

enum class NodeKind { HV, MV };

struct ReducedNode {
  std::string id;
  NodeKind kind = NodeKind::MV;
  std::vector<std::string> buses;  ///< member buses of the full graph
};

/// One virtual breaker.
struct ReducedEdge {
  std::string id;  ///< virtual breaker id
  std::size_t a = 0;
  std::size_t b = 0;
  std::array<std::string, 2> switches;
  std::string branch;  ///< physical branch carrying the pair
};

/// Coarse graph of HV nodes and merged MV groups. `fixed_links` are
/// breaker-less HV-to-group connections that are always closed.
struct ReducedGraph {
  std::vector<ReducedNode> nodes;
  std::vector<ReducedEdge> edges;
  std::vector<std::pair<std::size_t, std::size_t>> fixed_links;

  std::size_t hv_count() const;

  /// Builds a bare graph for analysis and tests: nodes 0..hv-1 are HV,
  /// the next `mv` are MV, and each pair becomes one switchable edge.
  static ReducedGraph make(std::size_t hv, std::size_t mv,
                           const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                           const std::vector<std::pair<std::size_t, std::size_t>>& fixed = {});
};

/// HV buses become HV nodes; MV buses joined by breaker-less branches merge
/// into one MV node; each virtual breaker becomes one edge.
ReducedGraph reduce_graph(const grid::NetworkModel& model);

/// True when the closed edges (plus fixed links) form a forest in which each
/// tree holds exactly one HV node. Isolated HV nodes are allowed.
bool is_radial(const ReducedGraph& g, const BitString& bits);

struct Configuration {
  int index = 0;  ///< 1-based N_conf
  BitString bits;

  bool operator==(const Configuration&) const = default;
};

enum class Ordering { Lexicographic, Hamming };

struct ConfigurationList {
  std::vector<Configuration> items;
  Ordering ordering = Ordering::Lexicographic;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  /// Configuration with N_conf == index (1-based).
  const Configuration& at(int index) const;
};

struct EnumerateOptions {
  /// Filter all 2^|E| bitstrings instead of growing forests.
  bool brute_force = false;
  /// Largest |E| accepted in brute-force mode.
  std::size_t brute_force_cap = 24;
};

/// Every admissible configuration, lexicographically ordered, indexed 1..n.
ConfigurationList enumerate_admissible(const ReducedGraph& g, const EnumerateOptions& options = {});

/// Greedy nearest-neighbour chain in Hamming distance starting from the
/// lexicographically smallest entry; ties go to the lexicographically
/// smaller candidate. Re-indexes 1..n.
ConfigurationList order_by_hamming(const ConfigurationList& list);

/// Physical switch id -> closed, for every switch of every virtual breaker.
std::map<std::string, bool> apply_configuration(const grid::NetworkModel& model, const ReducedGraph& g,
                                                const BitString& bits);

/// Per physical branch: in service when it has no breaker or its breaker's
/// switches are both closed.
std::vector<bool> branches_in_service(const grid::NetworkModel& model, const ReducedGraph& g,
                                      const BitString& bits);

nlohmann::json to_json(const ConfigurationList& list);
ConfigurationList configurations_from_json(const nlohmann::json& doc);

}  // namespace feederopt::topology
