#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace feederopt::grid {

enum class BusKind { HV, MV };

struct Bus {
  std::string id;
  BusKind kind = BusKind::MV;
  double nominal_kv = 0.0;
  double vmin_frac = 0.9;
  double vmax_frac = 1.1;

  bool operator==(const Bus&) const = default;
};

/// A line segment. `breaker` names the virtual breaker (series switch pair)
/// installed on it; a branch without one is permanently in service.
struct Branch {
  std::string id;
  std::string from;
  std::string to;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
  double imax_a = 0.0;
  std::optional<std::string> breaker;

  bool operator==(const Branch&) const = default;
};

/// Generator set or PV plant. Reactive output is Q = P * tan(phase).
struct Generator {
  std::string id;
  std::string bus;
  bool phase_controllable = false;
  double phase_min_rad = 0.0;
  double phase_max_rad = 0.0;
  double fixed_phase_rad = 0.0;

  bool operator==(const Generator&) const = default;
};

struct Load {
  std::string id;
  std::string bus;

  bool operator==(const Load&) const = default;
};

/// Thyristor voltage regulator: V_out = V_in + n_tap * delta_v.
struct Tvr {
  std::string branch;
  double delta_v_kv = 0.1;
  std::vector<int> taps{-3, -2, -1, 0, 1, 2, 3};
  double nominal_v_in_kv = 8.4;

  bool operator==(const Tvr&) const = default;
};

struct VirtualBreaker {
  std::string id;
  std::array<std::string, 2> switches;

  bool operator==(const VirtualBreaker&) const = default;
};

/// Validated, immutable electrical network. Construct through `build`.
class NetworkModel {
 public:
  static NetworkModel build(std::vector<Bus> buses, std::vector<Branch> branches,
                            std::vector<Generator> generators, std::vector<Load> loads,
                            std::optional<Tvr> tvr,
                            std::vector<VirtualBreaker> virtual_breakers);

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<Generator>& generators() const { return generators_; }
  const std::vector<Load>& loads() const { return loads_; }
  const std::optional<Tvr>& tvr() const { return tvr_; }
  const std::vector<VirtualBreaker>& virtual_breakers() const { return virtual_breakers_; }

  std::size_t bus_index(std::string_view id) const;
  std::size_t branch_index(std::string_view id) const;
  std::size_t breaker_index(std::string_view id) const;
  std::optional<std::size_t> find_bus(std::string_view id) const;

  /// Indices into generators() of the phase-controllable units, in file order.
  const std::vector<std::size_t>& controllable_generators() const { return controllable_; }
  /// Branch carrying the TVR, if any.
  std::optional<std::size_t> tvr_branch() const { return tvr_branch_; }
  /// Allowed taps; {0} when the network has no TVR.
  std::vector<int> tap_set() const;

  bool operator==(const NetworkModel& other) const;

 private:
  NetworkModel() = default;
  void index_and_validate();

  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::vector<Generator> generators_;
  std::vector<Load> loads_;
  std::optional<Tvr> tvr_;
  std::vector<VirtualBreaker> virtual_breakers_;

  std::unordered_map<std::string, std::size_t> bus_lookup_;
  std::unordered_map<std::string, std::size_t> branch_lookup_;
  std::unordered_map<std::string, std::size_t> breaker_lookup_;
  std::vector<std::size_t> controllable_;
  std::optional<std::size_t> tvr_branch_;
};

NetworkModel parse_network(const nlohmann::json& doc);
NetworkModel load_network(const std::filesystem::path& path);
nlohmann::json to_json(const NetworkModel& model);

// ---------------------------------------------------------------------------
// Hourly power profiles

struct PowerSample {
  double p_kw = 0.0;
  double q_kvar = 0.0;

  bool operator==(const PowerSample&) const = default;
};

/// Element id -> (P, Q) for one simulated hour.
using ProfileSet = std::map<std::string, PowerSample, std::less<>>;

/// Every element recorded at `hour`. Throws MissingHourError when the hour
/// does not appear in the file at all.
ProfileSet load_profiles(const std::filesystem::path& path, std::string_view hour);

/// As above, checked against the model: every load and generator must be
/// present, every row must name a known element, loads must have P >= 0.
ProfileSet load_profiles(const std::filesystem::path& path, std::string_view hour,
                         const NetworkModel& model);

/// Profile check without file I/O, used by load_profiles and by tests.
void check_profiles(const ProfileSet& profiles, const NetworkModel& model,
                    std::string_view hour);

/// Sum of load active power (P_load), kW.
double total_load(const NetworkModel& model, const ProfileSet& profiles);

}  // namespace feederopt::grid
