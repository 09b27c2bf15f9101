#include "feederopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "feederopt/errors.hpp"

namespace feederopt::optimizer {

namespace {

constexpr double kBlendAlpha = 0.5;
constexpr double kMutationSigmaFraction = 0.1;

std::vector<int> sorted_allowed(std::span<const int> restrict_to, const SearchDomain& domain) {
  std::vector<int> allowed(restrict_to.begin(), restrict_to.end());
  std::sort(allowed.begin(), allowed.end());
  allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());
  if (allowed.empty()) throw ValidationError("configuration restriction set is empty");
  if (allowed.front() < 1 || allowed.back() > domain.n_configs) {
    throw ValidationError("configuration restriction set holds indices outside 1.." + std::to_string(domain.n_configs));
  }
  return allowed;
}

double uniform(Rng& rng, double lo, double hi) {
  if (!(hi > lo)) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t pick(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

bool coin(Rng& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

CandidateSolution sample_individual(const SearchDomain& domain, const std::vector<int>& allowed, Rng& rng) {
  CandidateSolution c;
  c.phases.reserve(domain.phase_ranges.size());
  for (const auto& [lo, hi] : domain.phase_ranges) c.phases.push_back(uniform(rng, lo, hi));
  c.n_tap = domain.taps[pick(rng, domain.taps.size())];
  c.n_conf = allowed[pick(rng, allowed.size())];
  return c;
}

std::size_t position_of(const std::vector<int>& sorted, int value) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), value) - sorted.begin());
}

int step_within(const std::vector<int>& sorted, int value, Rng& rng) {
  std::size_t pos = position_of(sorted, value);
  if (pos >= sorted.size()) pos = sorted.size() - 1;
  if (sorted.size() == 1) return sorted[0];
  if (pos == 0) return sorted[1];
  if (pos + 1 == sorted.size()) return sorted[pos - 1];
  return coin(rng, 0.5) ? sorted[pos + 1] : sorted[pos - 1];
}

class GeneticSearch {
 public:
  GeneticSearch(const FitnessFunction& fitness, const SearchDomain& domain, std::vector<int> allowed,
                const GaSettings& settings)
      : fitness_(fitness), domain_(domain), allowed_(std::move(allowed)), settings_(settings), rng_(settings.seed) {}

  GaResult run(const Population* initial) {
    GaResult result;
    if (initial) {
      if (static_cast<int>(initial->size()) != settings_.population) {
        throw ValidationError("initial population size differs from GaSettings::population");
      }
      population_ = *initial;
      for (CandidateSolution& c : population_) repair(c);
    } else {
      population_ = build_initial_population(settings_, domain_, allowed_, nullptr, rng_);
    }
    result.initial_population = population_;
    evals_ = evaluate_all(population_, result);
    if (std::none_of(evals_.begin(), evals_.end(), [](const Evaluation& e) { return e.converged; })) {
      throw ConvergenceError("no individual of the initial population produced a converged power flow");
    }

    rank();
    result.initial_best_f = evals_[order_[0]].f;
    result.initial_best_p_loss_w = evals_[order_[0]].p_loss_kw * 1000.0;
    record(result, 1);

    int generation = 1;
    while (generation < settings_.max_generations) {
      ++generation;
      step(result);
      rank();
      record(result, generation);
      if (stalled(result)) break;
    }

    result.generations_run = generation;
    result.best = population_[order_[0]];
    result.best_eval = evals_[order_[0]];
    result.best_f = result.best_eval.f;
    result.delta_f_pct =
        result.initial_best_f > 0.0 ? 100.0 * (result.initial_best_f - result.best_f) / result.initial_best_f : 0.0;
    result.delta_p_loss_w = result.initial_best_p_loss_w - result.best_eval.p_loss_kw * 1000.0;
    return result;
  }

 private:
  std::vector<Evaluation> evaluate_all(const Population& pop, GaResult& result) {
    std::vector<Evaluation> out;
    out.reserve(pop.size());
    for (const CandidateSolution& c : pop) {
      if (settings_.record_evaluations) result.evaluation_log.push_back(c);
      out.push_back(fitness_(c));
    }
    return out;
  }

  void rank() {
    order_.resize(population_.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return evals_[a].f < evals_[b].f; });
    rank_of_.assign(order_.size(), 0);
    for (std::size_t r = 0; r < order_.size(); ++r) rank_of_[order_[r]] = r;
  }

  void record(GaResult& result, int generation) {
    const Evaluation& best = evals_[order_[0]];
    double mean = 0.0;
    for (const Evaluation& e : evals_) mean += e.f;
    mean /= static_cast<double>(evals_.size());
    if (!result.history.empty() && best.f < result.history.back().best_f) result.best_generation = generation;
    result.history.push_back({generation, best.f, mean, best.p_loss_kw * 1000.0});
  }

  bool stalled(const GaResult& result) const {
    const auto window = static_cast<std::size_t>(settings_.stall_generations);
    if (result.history.size() <= window) return false;
    const double before = result.history[result.history.size() - 1 - window].best_f;
    const double now = result.history.back().best_f;
    if (before == now) return true;
    return (before - now) / std::max(std::abs(before), std::numeric_limits<double>::min()) <= settings_.stall_tol;
  }

  std::size_t tournament() {
    const std::size_t a = pick(rng_, population_.size());
    const std::size_t b = pick(rng_, population_.size());
    return rank_of_[a] <= rank_of_[b] ? a : b;
  }

  void repair(CandidateSolution& c) const {
    for (std::size_t k = 0; k < c.phases.size() && k < domain_.phase_ranges.size(); ++k) {
      c.phases[k] = std::clamp(c.phases[k], domain_.phase_ranges[k].first, domain_.phase_ranges[k].second);
    }
    if (!std::binary_search(domain_.taps.begin(), domain_.taps.end(), c.n_tap)) {
      const std::size_t pos = std::min(position_of(domain_.taps, c.n_tap), domain_.taps.size() - 1);
      c.n_tap = domain_.taps[pos];
    }
    c.n_conf = project_to_allowed(c.n_conf, allowed_);
  }

  CandidateSolution crossover(const CandidateSolution& a, const CandidateSolution& b) {
    CandidateSolution child;
    child.phases.resize(a.phases.size());
    for (std::size_t k = 0; k < a.phases.size(); ++k) {
      const double lo = std::min(a.phases[k], b.phases[k]);
      const double hi = std::max(a.phases[k], b.phases[k]);
      const double spread = kBlendAlpha * (hi - lo);
      child.phases[k] = uniform(rng_, lo - spread, hi + spread);
    }
    child.n_tap = coin(rng_, 0.5) ? a.n_tap : b.n_tap;
    child.n_conf = coin(rng_, 0.5) ? a.n_conf : b.n_conf;
    repair(child);
    return child;
  }

  CandidateSolution mutate(const CandidateSolution& parent) {
    CandidateSolution child = parent;
    const std::size_t genes = child.phases.size() + 2;
    auto mutate_gene = [&](std::size_t k) {
      if (k < child.phases.size()) {
        const auto [lo, hi] = domain_.phase_ranges[k];
        const double sigma = kMutationSigmaFraction * (hi - lo);
        if (sigma > 0.0) child.phases[k] += std::normal_distribution<double>(0.0, sigma)(rng_);
      } else if (k == child.phases.size()) {
        child.n_tap = step_within(domain_.taps, child.n_tap, rng_);
      } else {
        child.n_conf = step_within(allowed_, child.n_conf, rng_);
      }
    };
    bool touched = false;
    for (std::size_t k = 0; k < genes; ++k) {
      if (coin(rng_, settings_.mutation_rate)) {
        mutate_gene(k);
        touched = true;
      }
    }
    if (!touched) mutate_gene(pick(rng_, genes));
    repair(child);
    return child;
  }

  void step(GaResult& result) {
    const auto size = static_cast<std::size_t>(settings_.population);
    const auto elites = static_cast<std::size_t>(settings_.elites);
    const std::size_t children = size - elites;
    const auto crossovers = static_cast<std::size_t>(std::lround(settings_.crossover_fraction * static_cast<double>(children)));

    Population next;
    std::vector<Evaluation> next_evals;
    next.reserve(size);
    for (std::size_t r = 0; r < elites; ++r) {
      next.push_back(population_[order_[r]]);
      next_evals.push_back(evals_[order_[r]]);
    }
    Population offspring;
    offspring.reserve(children);
    for (std::size_t i = 0; i < crossovers; ++i) {
      const std::size_t a = tournament();
      const std::size_t b = tournament();
      offspring.push_back(crossover(population_[a], population_[b]));
    }
    while (offspring.size() < children) offspring.push_back(mutate(population_[tournament()]));

    // all random draws for this generation are done before any evaluation
    std::vector<Evaluation> offspring_evals = evaluate_all(offspring, result);
    for (std::size_t i = 0; i < offspring.size(); ++i) {
      next.push_back(std::move(offspring[i]));
      next_evals.push_back(offspring_evals[i]);
    }
    population_ = std::move(next);
    evals_ = std::move(next_evals);
  }

  const FitnessFunction& fitness_;
  const SearchDomain& domain_;
  std::vector<int> allowed_;
  const GaSettings& settings_;
  Rng rng_;
  Population population_;
  std::vector<Evaluation> evals_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> rank_of_;
};

}  // namespace

SearchDomain SearchDomain::from_model(const grid::NetworkModel& model, std::size_t n_configs) {
  SearchDomain d;
  for (std::size_t idx : model.controllable_generators()) {
    const grid::Generator& g = model.generators()[idx];
    d.phase_ranges.emplace_back(g.phase_min_rad, g.phase_max_rad);
  }
  d.taps = model.tap_set();
  d.n_configs = static_cast<int>(n_configs);
  return d;
}

bool SearchDomain::contains(const CandidateSolution& c) const {
  if (c.phases.size() != phase_ranges.size()) return false;
  for (std::size_t k = 0; k < c.phases.size(); ++k) {
    if (!(c.phases[k] >= phase_ranges[k].first && c.phases[k] <= phase_ranges[k].second)) return false;
  }
  return std::binary_search(taps.begin(), taps.end(), c.n_tap) && c.n_conf >= 1 && c.n_conf <= n_configs;
}

void GaSettings::validate() const {
  if (population < 2) throw ValidationError("population must hold at least 2 individuals");
  if (elites < 0 || elites >= population) throw ValidationError("elites must satisfy 0 <= elites < population");
  if (!(crossover_fraction >= 0.0 && crossover_fraction <= 1.0)) throw ValidationError("crossover_fraction must lie in [0, 1]");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ValidationError("mutation_rate must lie in [0, 1]");
  if (max_generations < 1) throw ValidationError("max_generations must be at least 1");
  if (stall_generations < 1) throw ValidationError("stall_generations must be at least 1");
}

int project_to_allowed(int n_conf, std::span<const int> sorted_allowed) {
  auto it = std::lower_bound(sorted_allowed.begin(), sorted_allowed.end(), n_conf);
  if (it == sorted_allowed.end()) return sorted_allowed.back();
  if (*it == n_conf || it == sorted_allowed.begin()) return *it;
  const int above = *it;
  const int below = *(it - 1);
  return (n_conf - below) <= (above - n_conf) ? below : above;
}

Population build_initial_population(const GaSettings& settings, const SearchDomain& domain,
                                    std::span<const int> restrict_to, const Population* paired_with, Rng& rng) {
  const std::vector<int> allowed = sorted_allowed(restrict_to, domain);
  Population pop;
  if (paired_with) {
    if (static_cast<int>(paired_with->size()) != settings.population) {
      throw ValidationError("paired population size differs from GaSettings::population");
    }
    for (const CandidateSolution& c : *paired_with) {
      if (std::binary_search(allowed.begin(), allowed.end(), c.n_conf)) {
        pop.push_back(c);
      } else {
        pop.push_back(sample_individual(domain, allowed, rng));
      }
    }
    return pop;
  }
  pop.reserve(static_cast<std::size_t>(settings.population));
  for (int i = 0; i < settings.population; ++i) pop.push_back(sample_individual(domain, allowed, rng));
  return pop;
}

PairedPopulations paired_populations(const GaSettings& settings, const SearchDomain& domain,
                                     std::span<const int> ccc) {
  const auto lo = static_cast<std::uint32_t>(settings.seed);
  const auto hi = static_cast<std::uint32_t>(settings.seed >> 32);
  std::seed_seq first{lo, hi, 1u};
  std::seed_seq second{lo, hi, 2u};
  Rng draw(first);
  Rng redraw(second);
  PairedPopulations out;
  out.all = build_initial_population(settings, domain, all_indices(static_cast<std::size_t>(domain.n_configs)), nullptr,
                                     draw);
  out.ccc_only = build_initial_population(settings, domain, ccc, &out.all, redraw);
  return out;
}

GaResult run_ga(const FitnessFunction& fitness, const SearchDomain& domain, std::span<const int> restrict_to,
                const GaSettings& settings, const Population* initial) {
  settings.validate();
  GeneticSearch search(fitness, domain, sorted_allowed(restrict_to, domain), settings);
  return search.run(initial);
}

FitnessFunction make_fitness(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                             const topology::ConfigurationList& list, const grid::ProfileSet& profiles,
                             const objective::ObjectiveParams& params, const powerflow::SolverOptions& solver) {
  params.validate();
  struct Context {
    grid::NetworkModel model;
    topology::ReducedGraph graph;
    topology::ConfigurationList list;
    grid::ProfileSet profiles;
    objective::ObjectiveParams params;
    powerflow::SolverOptions solver;
  };
  auto ctx = std::make_shared<const Context>(Context{model, g, list, profiles, params, solver});
  return [ctx](const CandidateSolution& c) {
    const topology::BitString& bits = ctx->list.at(c.n_conf).bits;
    const powerflow::PowerFlowResult res = powerflow::solve(ctx->model, ctx->graph, bits, c, ctx->profiles, ctx->solver);
    if (!res.converged) return Evaluation{ctx->params.gamma_ceiling, 0.0, 0.0, 0.0, false};
    const objective::ObjectiveBreakdown b = objective::evaluate(res, ctx->model, ctx->params);
    return Evaluation{b.f, b.j, b.gamma, res.p_loss_kw, true};
  };
}

GaResult run_ga(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                const topology::ConfigurationList& list, const grid::ProfileSet& profiles,
                const objective::ObjectiveParams& params, const GaSettings& settings,
                std::span<const int> restrict_to, const Population* initial) {
  if (list.empty()) throw ValidationError("configuration list is empty");
  const SearchDomain domain = SearchDomain::from_model(model, list.size());
  return run_ga(make_fitness(model, g, list, profiles, params), domain, restrict_to, settings, initial);
}

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> out(n);
  std::iota(out.begin(), out.end(), 1);
  return out;
}

}  // namespace feederopt::optimizer
