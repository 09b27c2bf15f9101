#include "feederopt/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "feederopt/errors.hpp"

namespace feederopt::grid {

namespace {

using nlohmann::json;

std::string kind_name(BusKind kind) { return kind == BusKind::HV ? "HV" : "MV"; }

BusKind parse_kind(const std::string& text) {
  if (text == "HV") return BusKind::HV;
  if (text == "MV") return BusKind::MV;
  throw ParseError("bus kind must be \"HV\" or \"MV\", got \"" + text + "\"");
}

// Small union-find for the connectivity check.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

template <typename T>
T required(const json& obj, const char* key, const char* what) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(std::string(what) + " is missing field \"" + key + "\"");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + " field \"" + key + "\": " + e.what());
  }
}

template <typename T>
T optional_field(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field \"") + key + "\": " + e.what());
  }
}

const json& array_field(const json& doc, const char* key, bool mandatory) {
  static const json empty = json::array();
  if (!doc.contains(key)) {
    if (mandatory) throw ParseError(std::string("network file is missing \"") + key + "\"");
    return empty;
  }
  const json& value = doc.at(key);
  if (!value.is_array()) throw ParseError(std::string("\"") + key + "\" must be an array");
  return value;
}

}  // namespace

NetworkModel NetworkModel::build(std::vector<Bus> buses, std::vector<Branch> branches,
                                 std::vector<Generator> generators, std::vector<Load> loads,
                                 std::optional<Tvr> tvr,
                                 std::vector<VirtualBreaker> virtual_breakers) {
  NetworkModel model;
  model.buses_ = std::move(buses);
  model.branches_ = std::move(branches);
  model.generators_ = std::move(generators);
  model.loads_ = std::move(loads);
  model.tvr_ = std::move(tvr);
  model.virtual_breakers_ = std::move(virtual_breakers);
  model.index_and_validate();
  return model;
}

void NetworkModel::index_and_validate() {
  if (buses_.empty()) throw ValidationError("network has no buses");

  for (std::size_t i = 0; i < buses_.size(); ++i) {
    const Bus& bus = buses_[i];
    if (bus.id.empty()) throw ValidationError("bus with empty id");
    if (!bus_lookup_.emplace(bus.id, i).second) throw ValidationError("duplicate bus id \"" + bus.id + "\"");
    if (!(bus.nominal_kv > 0.0) || !std::isfinite(bus.nominal_kv)) {
      throw ValidationError("bus \"" + bus.id + "\": nominal_kv must be positive");
    }
    if (!(bus.vmin_frac > 0.0 && bus.vmin_frac < 1.0 && bus.vmax_frac > 1.0) ||
        !std::isfinite(bus.vmax_frac)) {
      throw ValidationError("bus \"" + bus.id + "\": need 0 < vmin_frac < 1 < vmax_frac");
    }
  }
  if (std::none_of(buses_.begin(), buses_.end(), [](const Bus& b) { return b.kind == BusKind::HV; })) {
    throw ValidationError("network needs at least one HV bus");
  }

  std::set<std::string> switch_ids;
  for (std::size_t i = 0; i < virtual_breakers_.size(); ++i) {
    const VirtualBreaker& vb = virtual_breakers_[i];
    if (vb.id.empty()) throw ValidationError("virtual breaker with empty id");
    if (!breaker_lookup_.emplace(vb.id, i).second) {
      throw ValidationError("duplicate virtual breaker id \"" + vb.id + "\"");
    }
    for (const std::string& s : vb.switches) {
      if (s.empty()) throw ValidationError("virtual breaker \"" + vb.id + "\" has an empty switch id");
      if (!switch_ids.insert(s).second) {
        throw ValidationError("switch \"" + s + "\" appears in more than one virtual breaker");
      }
    }
  }

  std::vector<int> breaker_uses(virtual_breakers_.size(), 0);
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const Branch& br = branches_[i];
    if (br.id.empty()) throw ValidationError("branch with empty id");
    if (!branch_lookup_.emplace(br.id, i).second) throw ValidationError("duplicate branch id \"" + br.id + "\"");
    auto from = bus_lookup_.find(br.from);
    auto to = bus_lookup_.find(br.to);
    if (from == bus_lookup_.end()) throw ValidationError("branch \"" + br.id + "\" references unknown bus \"" + br.from + "\"");
    if (to == bus_lookup_.end()) throw ValidationError("branch \"" + br.id + "\" references unknown bus \"" + br.to + "\"");
    if (br.from == br.to) throw ValidationError("branch \"" + br.id + "\" connects a bus to itself");
    if (!(br.r_ohm >= 0.0) || !std::isfinite(br.r_ohm) || !std::isfinite(br.x_ohm)) {
      throw ValidationError("branch \"" + br.id + "\": resistance must be finite and non-negative");
    }
    if (!(br.imax_a > 0.0) || !std::isfinite(br.imax_a)) {
      throw ValidationError("branch \"" + br.id + "\": imax_a must be positive");
    }
    const Bus& a = buses_[from->second];
    const Bus& b = buses_[to->second];
    if (a.nominal_kv != b.nominal_kv) {
      throw ValidationError("branch \"" + br.id + "\" joins buses of different nominal voltage");
    }
    if (br.breaker) {
      auto vb = breaker_lookup_.find(*br.breaker);
      if (vb == breaker_lookup_.end()) {
        throw ValidationError("branch \"" + br.id + "\" references unknown breaker \"" + *br.breaker + "\"");
      }
      ++breaker_uses[vb->second];
    } else if (a.kind == BusKind::HV && b.kind == BusKind::HV) {
      throw ValidationError("branch \"" + br.id + "\" permanently ties two HV buses");
    }
  }
  for (std::size_t i = 0; i < virtual_breakers_.size(); ++i) {
    if (breaker_uses[i] != 1) {
      throw ValidationError("virtual breaker \"" + virtual_breakers_[i].id +
                            "\" must be installed on exactly one branch");
    }
  }

  std::set<std::string> element_ids;
  for (std::size_t i = 0; i < generators_.size(); ++i) {
    const Generator& g = generators_[i];
    if (!element_ids.insert(g.id).second) throw ValidationError("duplicate element id \"" + g.id + "\"");
    auto bus = bus_lookup_.find(g.bus);
    if (bus == bus_lookup_.end()) throw ValidationError("generator \"" + g.id + "\" references unknown bus \"" + g.bus + "\"");
    if (buses_[bus->second].kind != BusKind::MV) throw ValidationError("generator \"" + g.id + "\" must sit on an MV bus");
    if (g.phase_controllable) {
      if (!(g.phase_min_rad <= g.phase_max_rad)) {
        throw ValidationError("generator \"" + g.id + "\": phase_min_rad exceeds phase_max_rad");
      }
      if (std::abs(g.phase_min_rad) >= M_PI / 2 || std::abs(g.phase_max_rad) >= M_PI / 2) {
        throw ValidationError("generator \"" + g.id + "\": phase range must lie inside (-pi/2, pi/2)");
      }
      controllable_.push_back(i);
    } else if (std::abs(g.fixed_phase_rad) >= M_PI / 2) {
      throw ValidationError("generator \"" + g.id + "\": fixed phase must lie inside (-pi/2, pi/2)");
    }
  }
  for (const Load& l : loads_) {
    if (!element_ids.insert(l.id).second) throw ValidationError("duplicate element id \"" + l.id + "\"");
    auto bus = bus_lookup_.find(l.bus);
    if (bus == bus_lookup_.end()) throw ValidationError("load \"" + l.id + "\" references unknown bus \"" + l.bus + "\"");
    if (buses_[bus->second].kind != BusKind::MV) throw ValidationError("load \"" + l.id + "\" must sit on an MV bus");
  }

  if (tvr_) {
    auto br = branch_lookup_.find(tvr_->branch);
    if (br == branch_lookup_.end()) throw ValidationError("TVR references unknown branch \"" + tvr_->branch + "\"");
    if (!(tvr_->delta_v_kv > 0.0)) throw ValidationError("TVR delta_v_kv must be positive");
    std::sort(tvr_->taps.begin(), tvr_->taps.end());
    if (std::adjacent_find(tvr_->taps.begin(), tvr_->taps.end()) != tvr_->taps.end()) {
      throw ValidationError("TVR tap set has duplicates");
    }
    if (!std::binary_search(tvr_->taps.begin(), tvr_->taps.end(), 0)) {
      throw ValidationError("TVR tap set must contain 0");
    }
    tvr_branch_ = br->second;
  }

  DisjointSets sets(buses_.size());
  for (const Branch& br : branches_) sets.unite(bus_lookup_.at(br.from), bus_lookup_.at(br.to));
  const std::size_t root = sets.find(0);
  for (std::size_t i = 1; i < buses_.size(); ++i) {
    if (sets.find(i) != root) {
      throw DisconnectedNetworkError("bus \"" + buses_[i].id +
                                     "\" is unreachable even with every breaker closed");
    }
  }
}

std::optional<std::size_t> NetworkModel::find_bus(std::string_view id) const {
  auto it = bus_lookup_.find(std::string(id));
  if (it == bus_lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t NetworkModel::bus_index(std::string_view id) const {
  auto it = bus_lookup_.find(std::string(id));
  if (it == bus_lookup_.end()) throw ValidationError("unknown bus \"" + std::string(id) + "\"");
  return it->second;
}

std::size_t NetworkModel::branch_index(std::string_view id) const {
  auto it = branch_lookup_.find(std::string(id));
  if (it == branch_lookup_.end()) throw ValidationError("unknown branch \"" + std::string(id) + "\"");
  return it->second;
}

std::size_t NetworkModel::breaker_index(std::string_view id) const {
  auto it = breaker_lookup_.find(std::string(id));
  if (it == breaker_lookup_.end()) throw ValidationError("unknown breaker \"" + std::string(id) + "\"");
  return it->second;
}

std::vector<int> NetworkModel::tap_set() const {
  if (!tvr_) return {0};
  return tvr_->taps;
}

bool NetworkModel::operator==(const NetworkModel& other) const {
  return buses_ == other.buses_ && branches_ == other.branches_ && generators_ == other.generators_ &&
         loads_ == other.loads_ && tvr_ == other.tvr_ && virtual_breakers_ == other.virtual_breakers_;
}

NetworkModel parse_network(const json& doc) {
  if (!doc.is_object()) throw ParseError("network file must hold a JSON object");

  std::vector<Bus> buses;
  for (const json& b : array_field(doc, "buses", true)) {
    Bus bus;
    bus.id = required<std::string>(b, "id", "bus");
    bus.kind = parse_kind(required<std::string>(b, "kind", "bus"));
    bus.nominal_kv = required<double>(b, "nominal_kv", "bus");
    bus.vmin_frac = optional_field<double>(b, "vmin_frac", 0.9);
    bus.vmax_frac = optional_field<double>(b, "vmax_frac", 1.1);
    buses.push_back(std::move(bus));
  }

  std::vector<Branch> branches;
  for (const json& b : array_field(doc, "branches", true)) {
    Branch br;
    br.id = required<std::string>(b, "id", "branch");
    br.from = required<std::string>(b, "from", "branch");
    br.to = required<std::string>(b, "to", "branch");
    br.r_ohm = required<double>(b, "r_ohm", "branch");
    br.x_ohm = optional_field<double>(b, "x_ohm", 0.0);
    br.imax_a = required<double>(b, "imax_a", "branch");
    if (b.contains("breaker") && !b.at("breaker").is_null()) br.breaker = required<std::string>(b, "breaker", "branch");
    branches.push_back(std::move(br));
  }

  std::vector<Generator> generators;
  for (const json& g : array_field(doc, "generators", false)) {
    Generator gen;
    gen.id = required<std::string>(g, "id", "generator");
    gen.bus = required<std::string>(g, "bus", "generator");
    gen.phase_controllable = optional_field<bool>(g, "phase_controllable", false);
    if (gen.phase_controllable) {
      gen.phase_min_rad = required<double>(g, "phase_min_rad", "generator");
      gen.phase_max_rad = required<double>(g, "phase_max_rad", "generator");
    }
    gen.fixed_phase_rad = optional_field<double>(g, "fixed_phase_rad", 0.0);
    generators.push_back(std::move(gen));
  }

  std::vector<Load> loads;
  for (const json& l : array_field(doc, "loads", false)) {
    loads.push_back(Load{required<std::string>(l, "id", "load"), required<std::string>(l, "bus", "load")});
  }

  std::optional<Tvr> tvr;
  if (doc.contains("tvr") && !doc.at("tvr").is_null()) {
    const json& t = doc.at("tvr");
    Tvr reg;
    reg.branch = required<std::string>(t, "branch", "tvr");
    reg.delta_v_kv = optional_field<double>(t, "delta_v_kv", 0.1);
    reg.taps = optional_field<std::vector<int>>(t, "taps", reg.taps);
    reg.nominal_v_in_kv = optional_field<double>(t, "nominal_v_in_kv", 8.4);
    tvr = std::move(reg);
  }

  std::vector<VirtualBreaker> breakers;
  for (const json& v : array_field(doc, "virtual_breakers", false)) {
    VirtualBreaker vb;
    vb.id = required<std::string>(v, "id", "virtual breaker");
    auto switches = required<std::vector<std::string>>(v, "switches", "virtual breaker");
    if (switches.size() != 2) throw ParseError("virtual breaker \"" + vb.id + "\" must list exactly two switches");
    vb.switches = {switches[0], switches[1]};
    breakers.push_back(std::move(vb));
  }

  return NetworkModel::build(std::move(buses), std::move(branches), std::move(generators),
                             std::move(loads), std::move(tvr), std::move(breakers));
}

NetworkModel load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_network(doc);
}

json to_json(const NetworkModel& model) {
  json doc;
  doc["buses"] = json::array();
  for (const Bus& b : model.buses()) {
    doc["buses"].push_back({{"id", b.id},
                            {"kind", kind_name(b.kind)},
                            {"nominal_kv", b.nominal_kv},
                            {"vmin_frac", b.vmin_frac},
                            {"vmax_frac", b.vmax_frac}});
  }
  doc["branches"] = json::array();
  for (const Branch& br : model.branches()) {
    json row = {{"id", br.id},         {"from", br.from},     {"to", br.to},
                {"r_ohm", br.r_ohm},   {"x_ohm", br.x_ohm},   {"imax_a", br.imax_a}};
    row["breaker"] = br.breaker ? json(*br.breaker) : json(nullptr);
    doc["branches"].push_back(std::move(row));
  }
  doc["generators"] = json::array();
  for (const Generator& g : model.generators()) {
    json row = {{"id", g.id}, {"bus", g.bus}, {"phase_controllable", g.phase_controllable}};
    if (g.phase_controllable) {
      row["phase_min_rad"] = g.phase_min_rad;
      row["phase_max_rad"] = g.phase_max_rad;
    }
    row["fixed_phase_rad"] = g.fixed_phase_rad;
    doc["generators"].push_back(std::move(row));
  }
  doc["loads"] = json::array();
  for (const Load& l : model.loads()) doc["loads"].push_back({{"id", l.id}, {"bus", l.bus}});
  if (const auto& t = model.tvr()) {
    doc["tvr"] = {{"branch", t->branch},
                  {"delta_v_kv", t->delta_v_kv},
                  {"taps", t->taps},
                  {"nominal_v_in_kv", t->nominal_v_in_kv}};
  } else {
    doc["tvr"] = nullptr;
  }
  doc["virtual_breakers"] = json::array();
  for (const VirtualBreaker& vb : model.virtual_breakers()) {
    doc["virtual_breakers"].push_back({{"id", vb.id}, {"switches", {vb.switches[0], vb.switches[1]}}});
  }
  return doc;
}

}  // namespace feederopt::grid
