// Admissible-configuration enumeration.
//
// The forest-growth search decides the edges in index order, "open" before
// "closed", so leaves come out in lexicographic order of their bit strings.
// A closed edge is rejected if it closes a cycle or joins two HV-rooted trees;
// an open decision is rejected when some HV-less component can no longer
// reach an HV node through the undecided edges.

#include <cstdint>
#include <numeric>

#include "feederopt/errors.hpp"
#include "feederopt/topology.hpp"

namespace feederopt::topology {

namespace {

/// Union-find with undo; union by size, no path compression.
class RollbackSets {
 public:
  explicit RollbackSets(const ReducedGraph& g) : parent_(g.nodes.size()), size_(g.nodes.size(), 1), hv_(g.nodes.size()) {
    std::iota(parent_.begin(), parent_.end(), 0);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) hv_[i] = g.nodes[i].kind == NodeKind::HV ? 1 : 0;
  }

  std::size_t find(std::size_t x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }

  /// Joins the trees of a and b when that keeps the forest radial.
  bool try_join(std::size_t a, std::size_t b) {
    std::size_t ra = find(a), rb = find(b);
    if (ra == rb || hv_[ra] + hv_[rb] > 1) return false;
    if (size_[ra] > size_[rb]) std::swap(ra, rb);
    parent_[ra] = rb;
    size_[rb] += size_[ra];
    hv_[rb] += hv_[ra];
    history_.push_back(ra);
    return true;
  }

  void undo() {
    const std::size_t ra = history_.back();
    history_.pop_back();
    const std::size_t rb = parent_[ra];
    size_[rb] -= size_[ra];
    hv_[rb] -= hv_[ra];
    parent_[ra] = ra;
  }

  int hv(std::size_t root) const { return hv_[root]; }
  std::size_t node_count() const { return parent_.size(); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::vector<int> hv_;
  std::vector<std::size_t> history_;
};

class ForestSearch {
 public:
  ForestSearch(const ReducedGraph& g, ConfigurationList& out)
      : g_(g), out_(out), sets_(g), bits_(g.edges.size()) {}

  void run() {
    for (const auto& [a, b] : g_.fixed_links) {
      if (!sets_.try_join(a, b)) return;  // permanent links already violate radiality
    }
    if (completable(0)) descend(0);
  }

 private:
  void descend(std::size_t e) {
    if (e == g_.edges.size()) {
      out_.items.push_back({static_cast<int>(out_.items.size() + 1), bits_});
      return;
    }
    bits_.set(e, false);
    if (completable(e + 1)) descend(e + 1);

    if (sets_.try_join(g_.edges[e].a, g_.edges[e].b)) {
      bits_.set(e, true);
      descend(e + 1);
      sets_.undo();
      bits_.set(e, false);
    }
  }

  // Every component without an HV node must still reach one through edges
  // from `next` onward. Checked on a scratch union of component roots.
  bool completable(std::size_t next) const {
    const std::size_t n = sets_.node_count();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<char> fed(n, 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = sets_.find(i);
      if (r != i) parent[i] = r;
      if (sets_.hv(r) > 0) fed[r] = 1;
    }
    for (std::size_t e = next; e < g_.edges.size(); ++e) {
      const std::size_t ra = find(g_.edges[e].a), rb = find(g_.edges[e].b);
      if (ra == rb) continue;
      parent[ra] = rb;
      fed[rb] = static_cast<char>(fed[rb] | fed[ra]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!fed[find(i)]) return false;
    }
    return true;
  }

  const ReducedGraph& g_;
  ConfigurationList& out_;
  RollbackSets sets_;
  BitString bits_;
};

ConfigurationList brute_force(const ReducedGraph& g, std::size_t cap) {
  const std::size_t m = g.edges.size();
  if (m > cap) {
    throw CapExceededError("brute-force enumeration over " + std::to_string(m) +
                           " edges exceeds the cap of " + std::to_string(cap) +
                           "; raise the cap or use forest-growth enumeration");
  }
  ConfigurationList out;
  BitString bits(m);
  const std::uint64_t total = std::uint64_t{1} << m;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    // bit 0 is the most significant so ascending masks are lexicographic
    for (std::size_t i = 0; i < m; ++i) bits.set(i, (mask >> (m - 1 - i)) & 1U);
    if (is_radial(g, bits)) out.items.push_back({static_cast<int>(out.items.size() + 1), bits});
  }
  return out;
}

}  // namespace

ConfigurationList enumerate_admissible(const ReducedGraph& g, const EnumerateOptions& options) {
  if (options.brute_force) return brute_force(g, options.brute_force_cap);
  ConfigurationList out;
  ForestSearch(g, out).run();
  return out;
}

}  // namespace feederopt::topology
