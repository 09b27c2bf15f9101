#include "feederopt/cli.hpp"

#include <CLI11.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include "feederopt/csv_util.hpp"
#include "feederopt/errors.hpp"
#include "feederopt/grid_model.hpp"
#include "feederopt/objective.hpp"
#include "feederopt/optimizer.hpp"
#include "feederopt/powerflow.hpp"
#include "feederopt/screening.hpp"
#include "feederopt/topology.hpp"

namespace feederopt::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
  grid::NetworkModel model;
  topology::ReducedGraph g;
  topology::ConfigurationList list;
  grid::ProfileSet profiles;
};

Context load_topology(const RunManifest& m) {
  Context ctx{grid::load_network(m.network), {}, {}, {}};
  ctx.g = topology::reduce_graph(ctx.model);
  ctx.list = topology::order_by_hamming(topology::enumerate_admissible(ctx.g));
  if (ctx.list.empty()) throw ValidationError("network admits no radial configuration");
  return ctx;
}

Context load_all(const RunManifest& m) {
  Context ctx = load_topology(m);
  ctx.profiles = grid::load_profiles(m.profiles, m.hour, ctx.model);
  return ctx;
}

objective::ObjectiveParams params_of(const RunManifest& m) {
  objective::ObjectiveParams p;
  p.alpha = m.alpha;
  p.beta = m.beta;
  p.validate();
  return p;
}

void write_json(const fs::path& path, const nlohmann::json& doc) { csv::write_text(path, doc.dump(2) + "\n"); }

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json candidate_json(const CandidateSolution& c) {
  return {{"phases_rad", c.phases}, {"n_tap", c.n_tap}, {"n_conf", c.n_conf}};
}

std::vector<std::uint64_t> parse_seeds(const std::vector<std::string>& tokens) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& token : tokens) {
    const auto dash = token.find('-', 1);
    try {
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(token));
        continue;
      }
      const std::uint64_t lo = std::stoull(token.substr(0, dash));
      const std::uint64_t hi = std::stoull(token.substr(dash + 1));
      if (hi < lo) throw ValidationError("seed range " + token + " is empty");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } catch (const std::logic_error&) {
      throw ValidationError("cannot read seed \"" + token + "\"");
    }
  }
  return seeds;
}

fs::path experiment_dir(const RunManifest& m, int experiment) { return m.out / ("exp" + std::to_string(experiment)); }

nlohmann::json summary_row(const std::vector<double>& values) {
  const MeanStd ms = mean_std(values);
  return {{"mean", number(ms.mean)}, {"std", number(ms.std)}};
}

std::vector<double> column(const nlohmann::json& per_seed, const char* key) {
  std::vector<double> out;
  for (const auto& row : per_seed) out.push_back(row.at(key).get<double>());
  return out;
}

void write_comparison(const RunManifest& m) {
  const fs::path p1 = experiment_dir(m, 1) / "summary.json";
  const fs::path p2 = experiment_dir(m, 2) / "summary.json";
  if (!fs::exists(p1) || !fs::exists(p2)) return;
  nlohmann::json s1, s2;
  std::ifstream(p1) >> s1;
  std::ifstream(p2) >> s2;
  nlohmann::json doc;
  for (const char* key : {"delta_p_loss_w", "final_p_loss_w"}) {
    const auto a = column(s1.at("per_seed"), key);
    const auto b = column(s2.at("per_seed"), key);
    doc[key] = {{"exp1", summary_row(a)}, {"exp2", summary_row(b)}, {"welch_p", number(welch_p_value(a, b))}};
  }
  write_json(m.out / "comparison.json", doc);
}

}  // namespace

void RunManifest::validate() const {
  if (network.empty()) throw ValidationError("--network is required");
  if (!fs::exists(network)) throw ValidationError("network file " + network.string() + " does not exist");
  const bool needs_profiles = command != "enumerate";
  if (needs_profiles) {
    if (profiles.empty()) throw ValidationError("--profiles is required for " + command);
    if (!fs::exists(profiles)) throw ValidationError("profiles file " + profiles.string() + " does not exist");
    if (hour.empty()) throw ValidationError("--hour is required for " + command);
  }
  if (command == "optimize") {
    if (seeds.empty()) throw ValidationError("--seeds must name at least one seed");
    if (experiment != 1 && experiment != 2) throw ValidationError("--experiment must be 1 or 2");
  }
  if (samples < 1) throw ValidationError("--samples must be positive");
}

nlohmann::json to_json(const RunManifest& m) {
  return {{"command", m.command},       {"network", m.network.generic_string()},
          {"profiles", m.profiles.generic_string()}, {"hour", m.hour},
          {"out", m.out.generic_string()}, {"alpha", m.alpha},
          {"beta", m.beta},             {"samples", m.samples},
          {"seed", m.seed},             {"seeds", m.seeds},
          {"population", m.population}, {"max_generations", m.max_generations},
          {"experiment", m.experiment}, {"n_conf", m.n_conf}};
}

void cmd_enumerate(const RunManifest& m) {
  const Context ctx = load_topology(m);
  write_json(m.out / "configurations.json", topology::to_json(ctx.list));
  std::cout << ctx.list.size() << " admissible configurations over " << ctx.g.edges.size() << " switchable edges\n";
}

void cmd_screen(const RunManifest& m) {
  const Context ctx = load_all(m);
  const objective::ObjectiveParams params = params_of(m);
  const screening::ScreeningResult result =
      screening::screen_all(ctx.model, ctx.g, ctx.list, ctx.profiles, params, m.samples, m.seed);

  write_json(m.out / "configurations.json", topology::to_json(ctx.list));
  csv::write_text(m.out / "screening.csv", screening::screening_csv(result));
  csv::write_text(m.out / "tap_stats.csv", screening::tap_stats_csv(result));
  write_json(m.out / "prototypes.json",
             screening::to_json(screening::prototype_report(result.partition, ctx.list, ctx.model, ctx.g)));

  double j_max = 0.0, gamma_max = 0.0;
  for (const auto& r : result.reports) {
    j_max = std::max(j_max, r.j_max);
    gamma_max = std::max(gamma_max, r.gamma_max);
  }
  const double a_eq = (j_max > 0.0 && gamma_max > 0.0) ? objective::alpha_eq(params.alpha, j_max, gamma_max)
                                                       : std::numeric_limits<double>::quiet_NaN();
  write_json(m.out / "normalization.json",
             {{"samples", m.samples},
              {"seed", m.seed},
              {"alpha", params.alpha},
              {"j_max", j_max},
              {"gamma_max", gamma_max},
              {"alpha_eq", number(a_eq)}});

  std::cout << "CCC " << result.partition.ccc.size() << ", NCCC " << result.partition.nccc.size() << ", AMBIGUOUS "
            << result.partition.ambiguous.size() << " of " << ctx.list.size() << " configurations (" << m.samples
            << " samples each)\n";
}

void cmd_sample(const RunManifest& m) {
  const Context ctx = load_all(m);
  const screening::SamplingReport report = screening::sample_configuration(
      ctx.model, ctx.g, ctx.list, m.n_conf, ctx.profiles, params_of(m), m.samples, m.seed);
  csv::write_text(m.out / "samples.csv", screening::samples_csv(report));
  std::cout << "configuration " << m.n_conf << ": " << screening::class_name(report.cls) << ", mean F "
            << csv::format_double(report.mean) << ", eta " << csv::format_double(report.eta) << "\n";
}

void cmd_optimize(const RunManifest& m) {
  const Context ctx = load_all(m);
  const objective::ObjectiveParams params = params_of(m);
  const optimizer::SearchDomain domain = optimizer::SearchDomain::from_model(ctx.model, ctx.list.size());
  const std::vector<int> all = optimizer::all_indices(ctx.list.size());

  std::vector<int> allowed = all;
  if (m.experiment == 2) {
    allowed = screening::read_screening_csv(m.out / "screening.csv").ccc;
    if (allowed.empty()) throw ValidationError("screening found no CCC; experiment 2 has nothing to search");
    for (int idx : allowed) {
      if (idx < 1 || static_cast<std::size_t>(idx) > ctx.list.size()) {
        throw ValidationError("screening.csv does not match the network's configuration list; rerun screen");
      }
    }
  }

  const optimizer::FitnessFunction fitness = optimizer::make_fitness(ctx.model, ctx.g, ctx.list, ctx.profiles, params);
  const fs::path dir = experiment_dir(m, m.experiment);
  nlohmann::json per_seed = nlohmann::json::array();

  for (std::uint64_t seed : m.seeds) {
    optimizer::GaSettings settings;
    settings.population = m.population;
    settings.max_generations = m.max_generations;
    settings.seed = seed;
    settings.validate();

    const optimizer::PairedPopulations pops = optimizer::paired_populations(settings, domain, allowed);
    const optimizer::Population& initial = m.experiment == 1 ? pops.all : pops.ccc_only;
    const optimizer::GaResult res = optimizer::run_ga(fitness, domain, allowed, settings, &initial);

    const fs::path seed_dir = dir / ("seed_" + std::to_string(seed));
    const double final_p_loss_w = res.best_eval.p_loss_kw * 1000.0;

    nlohmann::json history = nlohmann::json::array();
    std::string history_csv = "generation,best_f,mean_f,best_ploss_w\n";
    for (const auto& h : res.history) {
      history.push_back({{"generation", h.generation}, {"best_f", h.best_f}, {"mean_f", h.mean_f},
                         {"best_ploss_w", h.best_p_loss_w}});
      history_csv += std::to_string(h.generation) + "," + csv::format_double(h.best_f) + "," +
                     csv::format_double(h.mean_f) + "," + csv::format_double(h.best_p_loss_w) + "\n";
    }
    nlohmann::json initial_json = nlohmann::json::array();
    for (const CandidateSolution& c : res.initial_population) initial_json.push_back(candidate_json(c));

    nlohmann::json best = candidate_json(res.best);
    best["bits"] = ctx.list.at(res.best.n_conf).bits.str();

    const nlohmann::json report = {
        {"experiment", m.experiment},
        {"seed", seed},
        {"settings",
         {{"population", settings.population},
          {"elites", settings.elites},
          {"crossover_fraction", settings.crossover_fraction},
          {"mutation_rate", settings.mutation_rate},
          {"max_generations", settings.max_generations},
          {"stall_generations", settings.stall_generations},
          {"stall_tol", settings.stall_tol},
          {"alpha", params.alpha},
          {"beta", params.beta},
          {"hour", m.hour},
          {"configurations_searched", allowed.size()}}},
        {"best", best},
        {"best_f", res.best_f},
        {"best_j", res.best_eval.j},
        {"best_gamma", res.best_eval.gamma},
        {"final_p_loss_w", final_p_loss_w},
        {"generations", res.generations_run},
        {"best_generation", res.best_generation},
        {"initial_best_f", res.initial_best_f},
        {"initial_best_p_loss_w", res.initial_best_p_loss_w},
        {"delta_f_pct", res.delta_f_pct},
        {"delta_p_loss_w", res.delta_p_loss_w},
        {"initial_population", initial_json},
        {"history", history}};
    write_json(seed_dir / "run_report.json", report);
    csv::write_text(seed_dir / "history.csv", history_csv);

    const powerflow::PowerFlowResult pf =
        powerflow::solve(ctx.model, ctx.g, ctx.list.at(res.best.n_conf).bits, res.best, ctx.profiles);
    powerflow::write_trace(seed_dir / "best", ctx.model, pf);

    per_seed.push_back({{"seed", seed},
                        {"generations", res.generations_run},
                        {"delta_f_pct", res.delta_f_pct},
                        {"delta_p_loss_w", res.delta_p_loss_w},
                        {"final_p_loss_w", final_p_loss_w}});
    std::cout << "experiment " << m.experiment << " seed " << seed << ": F " << csv::format_double(res.initial_best_f)
              << " -> " << csv::format_double(res.best_f) << ", P_loss " << csv::format_double(final_p_loss_w)
              << " W after " << res.generations_run << " generations\n";
  }

  nlohmann::json summary = {{"experiment", m.experiment}, {"seeds", m.seeds.size()}, {"per_seed", per_seed}};
  std::string table = "indicator,mean,std\n";
  for (const char* key : {"generations", "delta_f_pct", "delta_p_loss_w", "final_p_loss_w"}) {
    const auto values = column(per_seed, key);
    summary[key] = summary_row(values);
    const MeanStd ms = mean_std(values);
    table += std::string(key) + "," + csv::format_double(ms.mean) + "," + csv::format_double(ms.std) + "\n";
  }
  write_json(dir / "summary.json", summary);
  csv::write_text(dir / "summary.csv", table);
  write_json(dir / "manifest.json", to_json(m));
  write_comparison(m);
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return out;
  for (double v : values) out.std += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(out.std / static_cast<double>(values.size() - 1));
  return out;
}

double welch_p_value(const std::vector<double>& a, const std::vector<double>& b) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (a.size() < 2 || b.size() < 2) return nan;
  const MeanStd sa = mean_std(a), sb = mean_std(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sa.std * sa.std / na, vb = sb.std * sb.std / nb;
  if (va + vb <= 0.0) return nan;
  const double t = (sa.mean - sb.mean) / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 1;
  if (dynamic_cast<const ConvergenceError*>(&e)) return 2;
  if (dynamic_cast<const MissingArtifactError*>(&e)) return 3;
  return 1;
}

int run(int argc, char** argv) {
  CLI::App app{"Reconfiguration and DG phase-angle optimization for radial distribution feeders"};
  app.require_subcommand(1);
  RunManifest m;
  std::vector<std::string> seed_tokens;

  auto add_network = [&](CLI::App* sub) {
    sub->add_option("--network", m.network, "Network JSON file")->required();
    sub->add_option("--out", m.out, "Output directory")->capture_default_str();
  };
  auto add_load_flow = [&](CLI::App* sub) {
    add_network(sub);
    sub->add_option("--profiles", m.profiles, "Hourly profile CSV")->required();
    sub->add_option("--hour", m.hour, "Profile timestamp, e.g. 2014-01-01T13:00")->required();
    sub->add_option("--alpha", m.alpha, "Loss weight in F")->capture_default_str();
    sub->add_option("--beta", m.beta, "Voltage share of the penalty")->capture_default_str();
  };

  CLI::App* enumerate = app.add_subcommand("enumerate", "List admissible radial configurations");
  add_network(enumerate);

  CLI::App* screen = app.add_subcommand("screen", "Monte-Carlo screening of every configuration");
  add_load_flow(screen);
  screen->add_option("--samples", m.samples, "Draws per configuration")->capture_default_str();
  screen->add_option("--seed", m.seed, "Sampling seed")->capture_default_str();

  CLI::App* sample = app.add_subcommand("sample", "Per-draw F, J and Gamma for one configuration");
  add_load_flow(sample);
  sample->add_option("--n-conf", m.n_conf, "Configuration index (1-based)")->required();
  sample->add_option("--samples", m.samples, "Number of draws")->capture_default_str();
  sample->add_option("--seed", m.seed, "Sampling seed")->capture_default_str();

  CLI::App* optimize = app.add_subcommand("optimize", "Run the GA for a list of seeds");
  add_load_flow(optimize);
  optimize->add_option("--experiment", m.experiment, "1: all configurations, 2: CCC only")->capture_default_str();
  optimize->add_option("--seeds", seed_tokens, "Seeds, comma separated; a-b is a range")
      ->delimiter(',')
      ->required();
  optimize->add_option("--population", m.population, "Population size")->capture_default_str();
  optimize->add_option("--max-gen", m.max_generations, "Generation limit")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    m.command = app.get_subcommands().front()->get_name();
    m.seeds = parse_seeds(seed_tokens);
    m.validate();
    if (m.command == "enumerate") cmd_enumerate(m);
    else if (m.command == "screen") cmd_screen(m);
    else if (m.command == "sample") cmd_sample(m);
    else cmd_optimize(m);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace feederopt::cli
