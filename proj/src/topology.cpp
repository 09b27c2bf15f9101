#include "feederopt/topology.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "feederopt/errors.hpp"

namespace feederopt::topology {

BitString BitString::parse(std::string_view text) {
  BitString out(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '1') {
      out.bits_[i] = true;
    } else if (text[i] != '0') {
      throw ParseError("bit string may only contain '0' and '1': \"" + std::string(text) + "\"");
    }
  }
  return out;
}

std::string BitString::str() const {
  std::string s(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) s[i] = '1';
  }
  return s;
}

std::size_t BitString::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::size_t hamming(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) {
    throw LengthMismatchError("hamming: lengths " + std::to_string(a.size()) + " and " +
                              std::to_string(b.size()) + " differ");
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

std::size_t ReducedGraph::hv_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const ReducedNode& n) { return n.kind == NodeKind::HV; }));
}

ReducedGraph ReducedGraph::make(std::size_t hv, std::size_t mv,
                                const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                const std::vector<std::pair<std::size_t, std::size_t>>& fixed) {
  ReducedGraph g;
  for (std::size_t i = 0; i < hv; ++i) g.nodes.push_back({"H" + std::to_string(i), NodeKind::HV, {}});
  for (std::size_t i = 0; i < mv; ++i) g.nodes.push_back({"M" + std::to_string(i), NodeKind::MV, {}});
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [a, b] = edges[e];
    if (a >= g.nodes.size() || b >= g.nodes.size()) throw ValidationError("edge endpoint out of range");
    const std::string id = "E" + std::to_string(e);
    g.edges.push_back({id, a, b, {id + ".a", id + ".b"}, id});
  }
  for (const auto& [a, b] : fixed) {
    if (a >= g.nodes.size() || b >= g.nodes.size()) throw ValidationError("fixed link endpoint out of range");
  }
  g.fixed_links = fixed;
  return g;
}

ReducedGraph reduce_graph(const grid::NetworkModel& model) {
  const auto& buses = model.buses();
  std::vector<std::size_t> parent(buses.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  for (const grid::Branch& br : model.branches()) {
    if (br.breaker) continue;
    const std::size_t a = model.bus_index(br.from);
    const std::size_t b = model.bus_index(br.to);
    if (buses[a].kind == grid::BusKind::MV && buses[b].kind == grid::BusKind::MV) {
      const std::size_t ra = find(a), rb = find(b);
      // keep the earliest bus as representative so node order follows file order
      if (ra < rb) parent[rb] = ra; else parent[ra] = rb;
    }
  }

  ReducedGraph g;
  std::vector<std::size_t> node_of_bus(buses.size(), std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].kind != grid::BusKind::HV) continue;
    node_of_bus[i] = g.nodes.size();
    g.nodes.push_back({buses[i].id, NodeKind::HV, {buses[i].id}});
  }
  std::unordered_map<std::size_t, std::size_t> node_of_root;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    if (buses[i].kind != grid::BusKind::MV) continue;
    const std::size_t root = find(i);
    auto [it, fresh] = node_of_root.emplace(root, g.nodes.size());
    if (fresh) g.nodes.push_back({buses[i].id, NodeKind::MV, {}});
    g.nodes[it->second].buses.push_back(buses[i].id);
    node_of_bus[i] = it->second;
  }

  for (const grid::VirtualBreaker& vb : model.virtual_breakers()) {
    const auto& branches = model.branches();
    auto br = std::find_if(branches.begin(), branches.end(),
                           [&](const grid::Branch& b) { return b.breaker == vb.id; });
    // the model guarantees exactly one carrier per breaker
    g.edges.push_back({vb.id, node_of_bus[model.bus_index(br->from)], node_of_bus[model.bus_index(br->to)],
                       vb.switches, br->id});
  }
  for (const grid::Branch& br : model.branches()) {
    if (br.breaker) continue;
    const std::size_t a = model.bus_index(br.from);
    const std::size_t b = model.bus_index(br.to);
    if (buses[a].kind == grid::BusKind::HV || buses[b].kind == grid::BusKind::HV) {
      g.fixed_links.emplace_back(node_of_bus[a], node_of_bus[b]);
    }
  }
  return g;
}

bool is_radial(const ReducedGraph& g, const BitString& bits) {
  if (bits.size() != g.edges.size()) {
    throw LengthMismatchError("is_radial: " + std::to_string(bits.size()) + " bits for " +
                              std::to_string(g.edges.size()) + " edges");
  }
  const std::size_t n = g.nodes.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int> hv(n, 0);
  for (std::size_t i = 0; i < n; ++i) hv[i] = g.nodes[i].kind == NodeKind::HV ? 1 : 0;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto join = [&](std::size_t a, std::size_t b) {
    const std::size_t ra = find(a), rb = find(b);
    if (ra == rb) return false;  // cycle
    parent[ra] = rb;
    hv[rb] += hv[ra];
    return hv[rb] <= 1;  // two HV nodes on one tree
  };

  for (const auto& [a, b] : g.fixed_links) {
    if (!join(a, b)) return false;
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (bits[e] && !join(g.edges[e].a, g.edges[e].b)) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (find(i) == i && hv[i] != 1) return false;  // unfed MV component
  }
  return true;
}

const Configuration& ConfigurationList::at(int index) const {
  if (index < 1 || static_cast<std::size_t>(index) > items.size()) {
    throw ValidationError("configuration index " + std::to_string(index) + " outside 1.." +
                          std::to_string(items.size()));
  }
  const Configuration& c = items[static_cast<std::size_t>(index - 1)];
  if (c.index == index) return c;
  for (const Configuration& other : items) {
    if (other.index == index) return other;
  }
  throw ValidationError("configuration index " + std::to_string(index) + " not found");
}

ConfigurationList order_by_hamming(const ConfigurationList& list) {
  ConfigurationList out;
  out.ordering = Ordering::Hamming;
  if (list.empty()) return out;

  std::vector<BitString> pool;
  pool.reserve(list.size());
  for (const Configuration& c : list.items) pool.push_back(c.bits);
  std::sort(pool.begin(), pool.end());  // ties then resolve to the first minimum

  std::vector<bool> used(pool.size(), false);
  std::size_t current = 0;
  used[0] = true;
  out.items.push_back({1, pool[0]});
  for (std::size_t step = 1; step < pool.size(); ++step) {
    std::size_t best = pool.size();
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (used[j]) continue;
      const std::size_t d = hamming(pool[current], pool[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    used[best] = true;
    current = best;
    out.items.push_back({static_cast<int>(step + 1), pool[best]});
  }
  return out;
}

std::map<std::string, bool> apply_configuration(const grid::NetworkModel& model, const ReducedGraph& g,
                                                const BitString& bits) {
  if (bits.size() != g.edges.size()) {
    throw LengthMismatchError("apply_configuration: " + std::to_string(bits.size()) + " bits for " +
                              std::to_string(g.edges.size()) + " edges");
  }
  std::map<std::string, bool> state;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const grid::VirtualBreaker& vb = model.virtual_breakers()[model.breaker_index(g.edges[e].id)];
    for (const std::string& s : vb.switches) state[s] = bits[e];
  }
  return state;
}

std::vector<bool> branches_in_service(const grid::NetworkModel& model, const ReducedGraph& g,
                                      const BitString& bits) {
  if (bits.size() != g.edges.size()) {
    throw LengthMismatchError("branches_in_service: " + std::to_string(bits.size()) + " bits for " +
                              std::to_string(g.edges.size()) + " edges");
  }
  std::unordered_map<std::string, std::size_t> edge_of;
  for (std::size_t e = 0; e < g.edges.size(); ++e) edge_of.emplace(g.edges[e].id, e);

  const auto& branches = model.branches();
  std::vector<bool> live(branches.size(), true);
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (!branches[i].breaker) continue;
    auto it = edge_of.find(*branches[i].breaker);
    if (it == edge_of.end()) throw ValidationError("breaker \"" + *branches[i].breaker + "\" is not an edge of the reduced graph");
    live[i] = bits[it->second];
  }
  return live;
}

nlohmann::json to_json(const ConfigurationList& list) {
  nlohmann::json doc = nlohmann::json::array();
  for (const Configuration& c : list.items) doc.push_back({{"index", c.index}, {"bits", c.bits.str()}});
  return doc;
}

ConfigurationList configurations_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ParseError("configurations file must hold a JSON array");
  ConfigurationList list;
  list.ordering = Ordering::Hamming;
  try {
    for (const auto& row : doc) {
      list.items.push_back({row.at("index").get<int>(), BitString::parse(row.at("bits").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("configurations file: ") + e.what());
  }
  return list;
}

}  // namespace feederopt::topology
