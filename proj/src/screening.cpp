#include "feederopt/screening.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <set>

#include "feederopt/csv_util.hpp"
#include "feederopt/errors.hpp"

namespace feederopt::screening {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::mt19937_64 stream_for(std::uint64_t seed, int n_conf) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n_conf)};
  return std::mt19937_64(seq);
}

}  // namespace

std::string class_name(ConfigClass c) {
  switch (c) {
    case ConfigClass::CCC: return "CCC";
    case ConfigClass::NCCC: return "NCCC";
    case ConfigClass::Ambiguous: return "AMBIGUOUS";
  }
  return "AMBIGUOUS";
}

ConfigClass parse_class(std::string_view text) {
  if (text == "CCC") return ConfigClass::CCC;
  if (text == "NCCC") return ConfigClass::NCCC;
  if (text == "AMBIGUOUS") return ConfigClass::Ambiguous;
  throw ParseError("unknown configuration class \"" + std::string(text) + "\"");
}

SamplingReport sample_configuration(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                                    const topology::ConfigurationList& list, int n_conf,
                                    const grid::ProfileSet& profiles, const objective::ObjectiveParams& params,
                                    std::size_t samples, std::uint64_t seed,
                                    const ClassifyOptions& classify_options) {
  if (samples < 1) throw ValidationError("at least one sample is required");
  params.validate();
  const topology::BitString& bits = list.at(n_conf).bits;

  SamplingReport rep;
  rep.n_conf = n_conf;
  rep.samples = samples;

  std::vector<std::pair<double, double>> ranges;
  for (std::size_t idx : model.controllable_generators()) {
    const grid::Generator& gen = model.generators()[idx];
    ranges.emplace_back(gen.phase_min_rad, gen.phase_max_rad);
  }
  const std::vector<int> taps = model.tap_set();

  auto rng = stream_for(seed, n_conf);
  std::uniform_int_distribution<std::size_t> tap_pick(0, taps.size() - 1);
  for (std::size_t s = 0; s < samples; ++s) {
    CandidateSolution c;
    c.n_conf = n_conf;
    for (const auto& [lo, hi] : ranges) {
      c.phases.push_back(hi > lo ? std::uniform_real_distribution<double>(lo, hi)(rng) : lo);
    }
    c.n_tap = taps[tap_pick(rng)];

    const powerflow::PowerFlowResult res = powerflow::solve(model, g, bits, c, profiles);
    rep.phases.push_back(c.phases);
    rep.taps.push_back(c.n_tap);
    rep.converged.push_back(res.converged);
    if (!res.converged) {
      rep.f_values.push_back(kNaN);
      rep.j_values.push_back(kNaN);
      rep.gamma_values.push_back(kNaN);
      rep.gamma_v_values.push_back(kNaN);
      rep.gamma_i_values.push_back(kNaN);
      continue;
    }
    const objective::ObjectiveBreakdown b = objective::evaluate(res, model, params);
    rep.f_values.push_back(b.f);
    rep.j_values.push_back(b.j);
    rep.gamma_values.push_back(b.gamma);
    rep.gamma_v_values.push_back(b.gamma_v);
    rep.gamma_i_values.push_back(b.gamma_i);
  }
  compute_statistics(rep, classify_options.gamma_tol);
  rep.cls = classify(rep, classify_options);
  return rep;
}

void compute_statistics(SamplingReport& rep, double gamma_tol) {
  rep.excluded = 0;
  // accumulate around the first valid value so identical samples give std 0 exactly
  double shift = 0.0;
  for (std::size_t s = 0; s < rep.f_values.size(); ++s) {
    if (rep.converged[s]) {
      shift = rep.f_values[s];
      break;
    }
  }
  double sum = 0.0;
  std::size_t n = 0, feasible = 0;
  rep.j_max = 0.0;
  rep.gamma_max = 0.0;
  for (std::size_t s = 0; s < rep.f_values.size(); ++s) {
    if (!rep.converged[s]) {
      ++rep.excluded;
      continue;
    }
    sum += rep.f_values[s] - shift;
    ++n;
    rep.j_max = std::max(rep.j_max, rep.j_values[s]);
    rep.gamma_max = std::max(rep.gamma_max, rep.gamma_values[s]);
    if (rep.gamma_values[s] <= gamma_tol) ++feasible;
  }
  rep.mean = n ? shift + sum / static_cast<double>(n) : 0.0;
  double sq = 0.0;
  for (std::size_t s = 0; s < rep.f_values.size(); ++s) {
    if (rep.converged[s]) sq += (rep.f_values[s] - rep.mean) * (rep.f_values[s] - rep.mean);
  }
  rep.std = n ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
  rep.eta = rep.mean > 0.0 ? rep.std / rep.mean : 0.0;
  rep.feasible_fraction = n ? static_cast<double>(feasible) / static_cast<double>(n) : 0.0;

  std::map<int, std::vector<double>> by_tap;
  for (std::size_t s = 0; s < rep.f_values.size(); ++s) {
    if (rep.converged[s]) by_tap[rep.taps[s]].push_back(rep.f_values[s]);
  }
  rep.per_tap.clear();
  for (const auto& [tap, values] : by_tap) {
    TapStats t{tap, values.size(), 0.0, 0.0};
    for (double v : values) t.mean_f += v - values.front();
    t.mean_f = values.front() + t.mean_f / static_cast<double>(values.size());
    for (double v : values) t.std_f += (v - t.mean_f) * (v - t.mean_f);
    t.std_f = std::sqrt(t.std_f / static_cast<double>(values.size()));
    rep.per_tap.push_back(t);
  }
}

ConfigClass classify(const SamplingReport& report, const ClassifyOptions& options) {
  std::size_t valid = 0, feasible = 0;
  for (std::size_t s = 0; s < report.gamma_values.size(); ++s) {
    if (!report.converged[s]) continue;
    ++valid;
    if (report.gamma_values[s] <= options.gamma_tol) ++feasible;
  }
  if (feasible == 0) return ConfigClass::NCCC;
  const double fraction = static_cast<double>(feasible) / static_cast<double>(valid);
  return fraction >= options.ccc_fraction ? ConfigClass::CCC : ConfigClass::Ambiguous;
}

ScreeningResult screen_all(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                           const topology::ConfigurationList& list, const grid::ProfileSet& profiles,
                           const objective::ObjectiveParams& params, std::size_t samples, std::uint64_t seed,
                           const ClassifyOptions& classify_options) {
  ScreeningResult out;
  out.reports.reserve(list.size());
  for (const topology::Configuration& c : list.items) {
    out.reports.push_back(sample_configuration(model, g, list, c.index, profiles, params, samples, seed, classify_options));
    switch (out.reports.back().cls) {
      case ConfigClass::CCC: out.partition.ccc.push_back(c.index); break;
      case ConfigClass::NCCC: out.partition.nccc.push_back(c.index); break;
      case ConfigClass::Ambiguous: out.partition.ambiguous.push_back(c.index); break;
    }
  }
  return out;
}

std::size_t sum_of_distances(const topology::BitString& candidate, std::span<const topology::BitString> configs) {
  std::size_t sod = 0;
  for (const topology::BitString& other : configs) sod += topology::hamming(candidate, other);
  return sod;
}

topology::BitString minsod(std::span<const topology::BitString> configs) {
  if (configs.empty()) throw ValidationError("minsod of an empty set");
  const topology::BitString* best = nullptr;
  std::size_t best_sod = std::numeric_limits<std::size_t>::max();
  for (const topology::BitString& candidate : configs) {
    const std::size_t sod = sum_of_distances(candidate, configs);
    if (sod < best_sod || (sod == best_sod && candidate < *best)) {
      best_sod = sod;
      best = &candidate;
    }
  }
  return *best;
}

FeederStats feeder_stats(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                         const topology::BitString& bits) {
  const std::size_t n = g.nodes.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : g.fixed_links) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (!bits[e]) continue;
    adj[g.edges[e].a].push_back(g.edges[e].b);
    adj[g.edges[e].b].push_back(g.edges[e].a);
  }

  std::map<std::string, std::size_t, std::less<>> node_of_bus;
  for (std::size_t i = 0; i < n; ++i) {
    for (const std::string& bus : g.nodes[i].buses) node_of_bus[bus] = i;
  }
  std::vector<std::size_t> loads_at(n, 0);
  for (const grid::Load& l : model.loads()) {
    auto it = node_of_bus.find(l.bus);
    if (it != node_of_bus.end()) ++loads_at[it->second];
  }

  FeederStats stats;
  std::vector<std::size_t> depth(n, std::numeric_limits<std::size_t>::max());
  for (std::size_t root = 0; root < n; ++root) {
    if (g.nodes[root].kind != topology::NodeKind::HV) continue;
    TreeStats tree{g.nodes[root].id, 0, 0, 0};
    std::queue<std::size_t> queue;
    depth[root] = 0;
    queue.push(root);
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop();
      ++tree.nodes;
      tree.depth = std::max(tree.depth, depth[u]);
      tree.loads += loads_at[u];
      for (std::size_t v : adj[u]) {
        if (depth[v] != std::numeric_limits<std::size_t>::max()) continue;
        depth[v] = depth[u] + 1;
        queue.push(v);
      }
    }
    if (tree.nodes > 1) {
      stats.max_depth = std::max(stats.max_depth, tree.depth);
      stats.per_tree.push_back(tree);
    }
  }
  stats.trees = stats.per_tree.size();
  return stats;
}

namespace {

std::optional<Prototype> prototype_of(ConfigClass cls, const std::vector<int>& members,
                                      const topology::ConfigurationList& list, const grid::NetworkModel& model,
                                      const topology::ReducedGraph& g) {
  if (members.empty()) return std::nullopt;
  std::vector<topology::BitString> set;
  set.reserve(members.size());
  for (int idx : members) set.push_back(list.at(idx).bits);
  Prototype p;
  p.cls = cls;
  p.bits = minsod(set);
  p.sod = sum_of_distances(p.bits, set);
  p.members = members.size();
  for (int idx : members) {
    if (list.at(idx).bits == p.bits) {
      p.n_conf = idx;
      break;
    }
  }
  p.stats = feeder_stats(model, g, p.bits);
  return p;
}

nlohmann::json prototype_json(const Prototype& p) {
  nlohmann::json trees = nlohmann::json::array();
  for (const TreeStats& t : p.stats.per_tree) {
    trees.push_back({{"root", t.root}, {"nodes", t.nodes}, {"depth", t.depth}, {"loads", t.loads}});
  }
  return {{"class", class_name(p.cls)},
          {"n_conf", p.n_conf},
          {"bits", p.bits.str()},
          {"sod", p.sod},
          {"members", p.members},
          {"feeder_stats", {{"trees", p.stats.trees}, {"max_depth", p.stats.max_depth}, {"per_tree", trees}}}};
}

}  // namespace

PrototypeReport prototype_report(const ClassPartition& partition, const topology::ConfigurationList& list,
                                 const grid::NetworkModel& model, const topology::ReducedGraph& g) {
  PrototypeReport report;
  report.ccc = prototype_of(ConfigClass::CCC, partition.ccc, list, model, g);
  report.nccc = prototype_of(ConfigClass::NCCC, partition.nccc, list, model, g);
  return report;
}

nlohmann::json to_json(const PrototypeReport& report) {
  nlohmann::json doc = nlohmann::json::array();
  if (report.ccc) doc.push_back(prototype_json(*report.ccc));
  if (report.nccc) doc.push_back(prototype_json(*report.nccc));
  return doc;
}

std::string screening_csv(const ScreeningResult& result) {
  using csv::format_double;
  std::string out = "n_conf,class,mean_f,std_f,eta,j_max,gamma_max,feasible_fraction,excluded\n";
  for (const SamplingReport& r : result.reports) {
    out += std::to_string(r.n_conf) + "," + class_name(r.cls) + "," + format_double(r.mean) + "," +
           format_double(r.std) + "," + format_double(r.eta) + "," + format_double(r.j_max) + "," +
           format_double(r.gamma_max) + "," + format_double(r.feasible_fraction) + "," + std::to_string(r.excluded) +
           "\n";
  }
  return out;
}

ClassPartition read_screening_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("screening file " + path.string() + " not found; run the screen command first");
  std::string line;
  std::getline(in, line);
  const auto header = csv::split(line);
  if (header.size() < 2 || header[0] != "n_conf" || header[1] != "class") {
    throw ParseError(path.string() + ": not a screening file");
  }
  ClassPartition part;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() < 2) throw ParseError(path.string() + ": short row");
    const int idx = static_cast<int>(csv::parse_double(fields[0], path.string()));
    switch (parse_class(fields[1])) {
      case ConfigClass::CCC: part.ccc.push_back(idx); break;
      case ConfigClass::NCCC: part.nccc.push_back(idx); break;
      case ConfigClass::Ambiguous: part.ambiguous.push_back(idx); break;
    }
  }
  return part;
}

std::string samples_csv(const SamplingReport& report) {
  using csv::format_double;
  const std::size_t n_phases = report.phases.empty() ? 0 : report.phases.front().size();
  std::string out = "sample,n_tap";
  for (std::size_t k = 0; k < n_phases; ++k) out += ",phi_" + std::to_string(k + 1);
  out += ",converged,f,j,gamma,gamma_v,gamma_i\n";
  for (std::size_t s = 0; s < report.f_values.size(); ++s) {
    out += std::to_string(s + 1) + "," + std::to_string(report.taps[s]);
    for (double phi : report.phases[s]) out += "," + format_double(phi);
    out += std::string(",") + (report.converged[s] ? "1" : "0") + "," + format_double(report.f_values[s]) + "," +
           format_double(report.j_values[s]) + "," + format_double(report.gamma_values[s]) + "," +
           format_double(report.gamma_v_values[s]) + "," + format_double(report.gamma_i_values[s]) + "\n";
  }
  return out;
}

std::string tap_stats_csv(const ScreeningResult& result) {
  std::string out = "n_conf,n_tap,count,mean_f,std_f\n";
  for (const SamplingReport& r : result.reports) {
    for (const TapStats& t : r.per_tap) {
      out += std::to_string(r.n_conf) + "," + std::to_string(t.n_tap) + "," + std::to_string(t.count) + "," +
             csv::format_double(t.mean_f) + "," + csv::format_double(t.std_f) + "\n";
    }
  }
  return out;
}

}  // namespace feederopt::screening
