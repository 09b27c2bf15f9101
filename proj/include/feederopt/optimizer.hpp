#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "feederopt/candidate.hpp"
#include "feederopt/grid_model.hpp"
#include "feederopt/objective.hpp"
#include "feederopt/powerflow.hpp"
#include "feederopt/topology.hpp"

namespace feederopt::optimizer {

using Population = std::vector<CandidateSolution>;
using Rng = std::mt19937_64;

/// Box for the real genes, the tap set, and the configuration count.
struct SearchDomain {
  std::vector<std::pair<double, double>> phase_ranges;
  std::vector<int> taps{0};  ///< sorted
  int n_configs = 1;

  static SearchDomain from_model(const grid::NetworkModel& model, std::size_t n_configs);
  bool contains(const CandidateSolution& c) const;
};

struct GaSettings {
  int population = 20;
  int elites = 2;
  double crossover_fraction = 0.8;
  double mutation_rate = 0.1;
  int max_generations = 100;
  int stall_generations = 50;
  double stall_tol = 1e-9;
  std::uint64_t seed = 0;
  /// Keep every evaluated genome in GaResult::evaluation_log.
  bool record_evaluations = false;

  void validate() const;
};

/// What the search needs back from one genome evaluation.
struct Evaluation {
  double f = 0.0;
  double j = 0.0;
  double gamma = 0.0;
  double p_loss_kw = 0.0;
  bool converged = true;
};

/// Must be a pure function of the candidate.
using FitnessFunction = std::function<Evaluation(const CandidateSolution&)>;

struct GenerationStats {
  int generation = 0;
  double best_f = 0.0;
  double mean_f = 0.0;
  double best_p_loss_w = 0.0;
};

struct GaResult {
  CandidateSolution best;
  Evaluation best_eval;
  double best_f = 0.0;
  int generations_run = 0;   ///< generation 1 is the initial population
  int best_generation = 1;   ///< first generation that held the final best
  std::vector<GenerationStats> history;
  double initial_best_f = 0.0;
  double initial_best_p_loss_w = 0.0;
  double delta_f_pct = 0.0;      ///< relative F reduction vs the best initial individual
  double delta_p_loss_w = 0.0;   ///< P_loss reduction vs the best initial individual
  Population initial_population;
  std::vector<CandidateSolution> evaluation_log;
};

/// Uniform sample of the domain with n_conf drawn from `restrict_to`.
/// With `paired_with`, copies that population and resamples every individual
/// whose n_conf is not allowed, forcing gene 7 into `restrict_to`.
Population build_initial_population(const GaSettings& settings, const SearchDomain& domain,
                                    std::span<const int> restrict_to, const Population* paired_with,
                                    Rng& rng);

struct PairedPopulations {
  Population all;       ///< Experiment 1: n_conf drawn from every configuration
  Population ccc_only;  ///< Experiment 2: the same individuals, non-CCC genes redrawn
};

/// Initial populations for the two experiments of one seed. Individuals whose
/// n_conf is a CCC are shared verbatim; the others are replaced by fresh draws
/// restricted to `ccc`.
PairedPopulations paired_populations(const GaSettings& settings, const SearchDomain& domain,
                                     std::span<const int> ccc);

/// Nearest allowed configuration index (ties to the lower index).
int project_to_allowed(int n_conf, std::span<const int> sorted_allowed);

/// Real-coded GA: elitism, size-2 tournaments, blend crossover on phases,
/// uniform crossover on the integer genes, Gaussian / unit-step mutation.
/// Without `initial`, the first population is sampled from the seed.
GaResult run_ga(const FitnessFunction& fitness, const SearchDomain& domain, std::span<const int> restrict_to,
                const GaSettings& settings, const Population* initial = nullptr);

/// Fitness = F of the power-flow solution for the candidate's configuration.
/// Non-converged solves get F = params.gamma_ceiling.
FitnessFunction make_fitness(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                             const topology::ConfigurationList& list, const grid::ProfileSet& profiles,
                             const objective::ObjectiveParams& params,
                             const powerflow::SolverOptions& solver = {});

GaResult run_ga(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                const topology::ConfigurationList& list, const grid::ProfileSet& profiles,
                const objective::ObjectiveParams& params, const GaSettings& settings,
                std::span<const int> restrict_to, const Population* initial = nullptr);

/// 1..n, the unrestricted index set.
std::vector<int> all_indices(std::size_t n);

}  // namespace feederopt::optimizer
