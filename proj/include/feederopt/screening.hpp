#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "feederopt/grid_model.hpp"
#include "feederopt/objective.hpp"
#include "feederopt/powerflow.hpp"
#include "feederopt/topology.hpp"

namespace feederopt::screening {

enum class ConfigClass { CCC, NCCC, Ambiguous };

std::string class_name(ConfigClass c);
ConfigClass parse_class(std::string_view text);

struct ClassifyOptions {
  double gamma_tol = 1e-9;
  double ccc_fraction = 0.05;
};

struct TapStats {
  int n_tap = 0;
  std::size_t count = 0;
  double mean_f = 0.0;
  double std_f = 0.0;
};

/// Monte-Carlo picture of one configuration. Per-sample vectors have one
/// entry per draw; draws whose power flow failed hold NaN and are excluded
/// from the statistics.
struct SamplingReport {
  int n_conf = 0;
  std::size_t samples = 0;
  std::vector<std::vector<double>> phases;
  std::vector<int> taps;
  std::vector<bool> converged;
  std::vector<double> f_values;
  std::vector<double> j_values;
  std::vector<double> gamma_values;
  std::vector<double> gamma_v_values;
  std::vector<double> gamma_i_values;

  std::size_t excluded = 0;
  double mean = 0.0;
  double std = 0.0;   ///< population standard deviation of F
  double eta = 0.0;   ///< std / mean
  double j_max = 0.0;
  double gamma_max = 0.0;
  double feasible_fraction = 0.0;
  std::vector<TapStats> per_tap;
  ConfigClass cls = ConfigClass::Ambiguous;
};

/// Holds n_conf fixed and draws phases uniformly in their box and the tap
/// uniformly from the tap set. The random stream is keyed by (seed, n_conf).
SamplingReport sample_configuration(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                                    const topology::ConfigurationList& list, int n_conf,
                                    const grid::ProfileSet& profiles, const objective::ObjectiveParams& params,
                                    std::size_t samples, std::uint64_t seed,
                                    const ClassifyOptions& classify_options = {});

/// Fills mean/std/eta/maxima/feasible_fraction/per_tap from the per-sample vectors.
void compute_statistics(SamplingReport& report, double gamma_tol = 1e-9);

/// CCC when at least `ccc_fraction` of the converged draws are feasible,
/// NCCC when none is, AMBIGUOUS otherwise.
ConfigClass classify(const SamplingReport& report, const ClassifyOptions& options = {});

struct ClassPartition {
  std::vector<int> ccc;
  std::vector<int> nccc;
  std::vector<int> ambiguous;
};

struct ScreeningResult {
  ClassPartition partition;
  std::vector<SamplingReport> reports;  ///< one per configuration, by index
};

ScreeningResult screen_all(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                           const topology::ConfigurationList& list, const grid::ProfileSet& profiles,
                           const objective::ObjectiveParams& params, std::size_t samples, std::uint64_t seed,
                           const ClassifyOptions& classify_options = {});

/// Member minimizing the summed Hamming distance to all members; ties go to
/// the lexicographically smaller string. Throws ValidationError on an empty set.
topology::BitString minsod(std::span<const topology::BitString> configs);

/// Sum of distances from `candidate` to every member.
std::size_t sum_of_distances(const topology::BitString& candidate, std::span<const topology::BitString> configs);

struct TreeStats {
  std::string root;       ///< HV node id
  std::size_t nodes = 0;  ///< reduced nodes including the root
  std::size_t depth = 0;  ///< longest root-to-node path in edges
  std::size_t loads = 0;
};

/// Shape of the HV-rooted feeders of one configuration. Only trees that feed
/// at least one MV node are listed.
struct FeederStats {
  std::size_t trees = 0;
  std::size_t max_depth = 0;
  std::vector<TreeStats> per_tree;
};

FeederStats feeder_stats(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                         const topology::BitString& bits);

struct Prototype {
  ConfigClass cls = ConfigClass::CCC;
  int n_conf = 0;
  topology::BitString bits;
  std::size_t sod = 0;
  std::size_t members = 0;
  FeederStats stats;
};

struct PrototypeReport {
  std::optional<Prototype> ccc;
  std::optional<Prototype> nccc;
};

/// MinSOD prototype and feeder statistics for each non-empty class.
PrototypeReport prototype_report(const ClassPartition& partition, const topology::ConfigurationList& list,
                                 const grid::NetworkModel& model, const topology::ReducedGraph& g);

std::string screening_csv(const ScreeningResult& result);
/// Per-class index sets read back from a screening CSV.
ClassPartition read_screening_csv(const std::filesystem::path& path);
std::string samples_csv(const SamplingReport& report);
std::string tap_stats_csv(const ScreeningResult& result);
nlohmann::json to_json(const PrototypeReport& report);

}  // namespace feederopt::screening
