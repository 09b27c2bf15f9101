// Shared fixtures and independent oracles for the unit and acceptance tests.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "feederopt/candidate.hpp"
#include "feederopt/grid_model.hpp"
#include "feederopt/objective.hpp"
#include "feederopt/powerflow.hpp"
#include "feederopt/topology.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace feederopt;

inline fs::path data_path(const std::string& name) { return fs::path(FEEDEROPT_DATA_DIR) / name; }

inline constexpr const char* kHour = "2014-01-01T13:00";

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("feederopt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// ---------------------------------------------------------------------------
// Random radial networks

struct RadialFixture {
  grid::NetworkModel model;
  grid::ProfileSet profiles;
  topology::ReducedGraph g;
  topology::BitString bits;
  CandidateSolution candidate;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// One or two HV roots, a random tree of MV buses under them, random
/// breakers, an optional open tie between the two trees and an optional TVR.
inline RadialFixture random_radial_fixture(std::mt19937_64& rng) {
  const double kvs[] = {8.4, 15.0, 20.0};
  const double kv = kvs[uniform_int(rng, 0, 2)];
  const int hv = uniform_int(rng, 1, 2);
  const int mv = uniform_int(rng, hv, 14);

  std::vector<grid::Bus> buses;
  std::vector<int> root_of;
  for (int h = 0; h < hv; ++h) {
    buses.push_back({"H" + std::to_string(h), grid::BusKind::HV, kv, 0.9, 1.1});
    root_of.push_back(h);
  }
  std::vector<grid::Branch> branches;
  std::vector<grid::VirtualBreaker> breakers;
  auto add_branch = [&](const std::string& id, const std::string& a, const std::string& b, bool switched) {
    grid::Branch br{id, a, b, uniform(rng, 0.05, 1.0), uniform(rng, 0.0, 0.8), 400.0, std::nullopt};
    if (switched) {
      br.breaker = "vb_" + id;
      breakers.push_back({"vb_" + id, {"sw_" + id + "_a", "sw_" + id + "_b"}});
    }
    branches.push_back(br);
  };
  for (int i = 0; i < mv; ++i) {
    // every HV gets at least one child so both trees exist
    const int parent = i < hv ? i : uniform_int(rng, 0, hv + i - 1);
    const std::string id = "M" + std::to_string(i);
    buses.push_back({id, grid::BusKind::MV, kv, 0.9, 1.1});
    root_of.push_back(root_of[static_cast<std::size_t>(parent)]);
    add_branch("b" + std::to_string(i), buses[static_cast<std::size_t>(parent)].id, id, uniform(rng, 0, 1) < 0.5);
  }
  if (hv == 2 && mv >= 2) {
    std::vector<std::string> side[2];
    for (std::size_t b = 2; b < buses.size(); ++b) side[root_of[b]].push_back(buses[b].id);
    if (!side[0].empty() && !side[1].empty()) {
      add_branch("tie", side[0][static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(side[0].size()) - 1))],
                 side[1][static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(side[1].size()) - 1))], true);
    }
  }

  std::vector<grid::Load> loads;
  std::vector<grid::Generator> gens;
  grid::ProfileSet profiles;
  for (int i = 0; i < mv; ++i) {
    const std::string bus = "M" + std::to_string(i);
    if (uniform(rng, 0, 1) < 0.8) {
      loads.push_back({"ld" + std::to_string(i), bus});
      profiles["ld" + std::to_string(i)] = {uniform(rng, 0.0, 400.0), uniform(rng, 0.0, 200.0)};
    }
    if (uniform(rng, 0, 1) < 0.3) {
      grid::Generator g;
      g.id = "gen" + std::to_string(i);
      g.bus = bus;
      if (uniform(rng, 0, 1) < 0.6) {
        g.phase_controllable = true;
        g.phase_min_rad = -0.3;
        g.phase_max_rad = 0.5;
      } else {
        g.fixed_phase_rad = uniform(rng, -0.2, 0.3);
      }
      gens.push_back(g);
      profiles[g.id] = {uniform(rng, 0.0, 300.0), 0.0};
    }
  }

  std::optional<grid::Tvr> tvr;
  if (uniform(rng, 0, 1) < 0.5) {
    grid::Tvr t;
    t.branch = "b" + std::to_string(uniform_int(rng, 0, mv - 1));
    t.nominal_v_in_kv = kv;
    tvr = t;
  }

  RadialFixture f{grid::NetworkModel::build(buses, branches, gens, loads, tvr, breakers), profiles, {}, {}, {}};
  f.g = topology::reduce_graph(f.model);
  f.bits = topology::BitString(f.g.edges.size(), true);
  for (std::size_t e = 0; e < f.g.edges.size(); ++e) {
    if (f.g.edges[e].branch == "tie") f.bits.set(e, false);
  }
  for (std::size_t k : f.model.controllable_generators()) {
    const auto& gen = f.model.generators()[k];
    f.candidate.phases.push_back(uniform(rng, gen.phase_min_rad, gen.phase_max_rad));
  }
  const auto taps = f.model.tap_set();
  f.candidate.n_tap = taps[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(taps.size()) - 1))];
  return f;
}

// ---------------------------------------------------------------------------
// Oracles

/// Radiality by component census: every connected component of the closed
/// edges and fixed links must be a tree holding exactly one HV node.
inline bool radial_oracle(const topology::ReducedGraph& g, const topology::BitString& bits) {
  const std::size_t n = g.nodes.size();
  std::vector<std::vector<std::size_t>> adj(n);
  auto link = [&](std::size_t a, std::size_t b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  for (const auto& [a, b] : g.fixed_links) link(a, b);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (bits[e]) link(g.edges[e].a, g.edges[e].b);
  }
  std::vector<int> comp(n, -1);
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = static_cast<int>(s);
    std::size_t nodes = 0, degree_sum = 0, hv = 0;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      ++nodes;
      degree_sum += adj[u].size();
      if (g.nodes[u].kind == topology::NodeKind::HV) ++hv;
      for (std::size_t v : adj[u]) {
        if (comp[v] < 0) {
          comp[v] = static_cast<int>(s);
          stack.push_back(v);
        }
      }
    }
    if (hv != 1 || degree_sum / 2 != nodes - 1) return false;
  }
  return true;
}

struct KirchhoffResidual {
  double kcl = 0.0;  ///< max |sum of currents| at an MV bus, pu
  double kvl = 0.0;  ///< max |branch voltage equation| over live branches, pu
};

/// Recomputes bus balances from the solver's phasors. The regulator side of
/// the TVR branch is the endpoint nearer to an HV bus, found here by BFS.
inline KirchhoffResidual kirchhoff_residual(const grid::NetworkModel& model, const grid::ProfileSet& profiles,
                                            const CandidateSolution& cand, const powerflow::PowerFlowResult& res) {
  using C = std::complex<double>;
  const auto& buses = model.buses();
  const auto& branches = model.branches();
  const std::size_t n = buses.size();

  std::vector<C> demand(n, 0.0);
  for (const auto& l : model.loads()) {
    const auto& s = profiles.at(l.id);
    demand[model.bus_index(l.bus)] += C(s.p_kw, s.q_kvar) / 1000.0;
  }
  const auto& ctrl = model.controllable_generators();
  for (std::size_t i = 0; i < model.generators().size(); ++i) {
    const auto& gen = model.generators()[i];
    const auto it = std::find(ctrl.begin(), ctrl.end(), i);
    const double phi = it == ctrl.end() ? gen.fixed_phase_rad : cand.phases[static_cast<std::size_t>(it - ctrl.begin())];
    const double p = profiles.at(gen.id).p_kw;
    demand[model.bus_index(gen.bus)] -= C(p, p * std::tan(phi)) / 1000.0;
  }

  std::vector<std::size_t> depth(n, SIZE_MAX);
  std::vector<std::size_t> queue;
  for (std::size_t b = 0; b < n; ++b) {
    if (buses[b].kind == grid::BusKind::HV) {
      depth[b] = 0;
      queue.push_back(b);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t u = queue[head];
    for (std::size_t k = 0; k < branches.size(); ++k) {
      if (!res.in_service[k]) continue;
      const std::size_t a = model.bus_index(branches[k].from), b = model.bus_index(branches[k].to);
      const std::size_t v = a == u ? b : (b == u ? a : SIZE_MAX);
      if (v != SIZE_MAX && depth[v] == SIZE_MAX) {
        depth[v] = depth[u] + 1;
        queue.push_back(v);
      }
    }
  }

  KirchhoffResidual out;
  std::vector<C> leaving(n, 0.0);
  const auto tvr = model.tvr_branch();
  for (std::size_t k = 0; k < branches.size(); ++k) {
    if (!res.in_service[k]) continue;
    const std::size_t a = model.bus_index(branches[k].from), b = model.bus_index(branches[k].to);
    double sa = 1.0, sb = 1.0;
    if (tvr && *tvr == k) (depth[a] < depth[b] ? sa : sb) = res.tvr_ratio;
    const C i = res.i_phasor_pu[k];
    leaving[a] += sa * i;
    leaving[b] -= sb * i;
    const C z = C(branches[k].r_ohm, branches[k].x_ohm) / (buses[a].nominal_kv * buses[a].nominal_kv);
    out.kvl = std::max(out.kvl, std::abs(sa * res.v_phasor_pu[a] - sb * res.v_phasor_pu[b] - z * i));
  }
  for (std::size_t b = 0; b < n; ++b) {
    if (buses[b].kind == grid::BusKind::HV) continue;
    out.kcl = std::max(out.kcl, std::abs(leaving[b] + std::conj(demand[b] / res.v_phasor_pu[b])));
  }
  return out;
}

/// Evenly spaced levels per controllable generator (box ends included), grown
/// round-robin until levels x taps reaches `target` points.
inline std::vector<std::vector<double>> phase_grid(const grid::NetworkModel& model, std::size_t target) {
  const auto& ctrl = model.controllable_generators();
  std::vector<std::size_t> count(ctrl.size(), 2);
  const std::size_t taps = model.tap_set().size();
  auto total = [&] {
    std::size_t t = taps;
    for (std::size_t c : count) t *= c;
    return t;
  };
  for (std::size_t k = 0; !ctrl.empty() && total() < target; k = (k + 1) % ctrl.size()) ++count[k];
  std::vector<std::vector<double>> levels;
  for (std::size_t k = 0; k < ctrl.size(); ++k) {
    const auto& g = model.generators()[ctrl[k]];
    std::vector<double> l;
    for (std::size_t s = 0; s < count[k]; ++s) {
      l.push_back(g.phase_min_rad + (g.phase_max_rad - g.phase_min_rad) * static_cast<double>(s) /
                                        static_cast<double>(count[k] - 1));
    }
    levels.push_back(l);
  }
  return levels;
}

struct GridSearchOutcome {
  std::size_t points = 0;
  std::size_t feasible = 0;
  double min_gamma = INFINITY;
};

/// Exhaustive sweep of the phase grid times every tap for one configuration;
/// feasibility is judged by the constraint check, not by the penalty.
inline GridSearchOutcome grid_search(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                                     const topology::BitString& bits, const grid::ProfileSet& profiles,
                                     const std::vector<std::vector<double>>& levels,
                                     const objective::ObjectiveParams& params = {}) {
  GridSearchOutcome out;
  std::vector<std::size_t> idx(levels.size(), 0);
  CandidateSolution c;
  c.phases.resize(levels.size());
  for (;;) {
    for (std::size_t k = 0; k < levels.size(); ++k) c.phases[k] = levels[k][idx[k]];
    for (int tap : model.tap_set()) {
      c.n_tap = tap;
      const auto res = powerflow::solve(model, g, bits, c, profiles);
      ++out.points;
      if (!res.converged) continue;
      if (objective::satisfies_constraints(res, model)) ++out.feasible;
      out.min_gamma = std::min(out.min_gamma, objective::evaluate(res, model, params).gamma);
    }
    std::size_t k = 0;
    while (k < levels.size() && ++idx[k] == levels[k].size()) idx[k++] = 0;
    if (k == levels.size()) break;
  }
  return out;
}

/// Exhaustive minimum-sum-of-distances over the member set using integer
/// popcounts; ties resolve to the lexicographically smallest text.
inline std::string sod_oracle(const std::vector<std::string>& set) {
  auto to_int = [](const std::string& s) {
    std::uint64_t v = 0;
    for (char ch : s) v = (v << 1) | static_cast<std::uint64_t>(ch == '1');
    return v;
  };
  std::string best;
  std::uint64_t best_sod = UINT64_MAX;
  for (const auto& a : set) {
    std::uint64_t sod = 0;
    for (const auto& b : set) sod += static_cast<std::uint64_t>(__builtin_popcountll(to_int(a) ^ to_int(b)));
    if (sod < best_sod || (sod == best_sod && a < best)) {
      best_sod = sod;
      best = a;
    }
  }
  return best;
}

}  // namespace testsupport
