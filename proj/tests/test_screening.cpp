#include <doctest.h>

#include <deque>
#include <set>

#include "feederopt/csv_util.hpp"
#include "feederopt/errors.hpp"
#include "feederopt/optimizer.hpp"
#include "feederopt/screening.hpp"
#include "support.hpp"

using namespace feederopt;
using namespace testsupport;
using screening::ConfigClass;
using topology::BitString;

namespace {

struct Setup {
  grid::NetworkModel model;
  topology::ReducedGraph g;
  topology::ConfigurationList list;
  grid::ProfileSet profiles;
};

Setup chain_setup(double hv2_limit_a = 300.0, bool zero_load = false) {
  auto doc = nlohmann::json::parse(read_file(data_path("chain.json")));
  doc["branches"][3]["imax_a"] = hv2_limit_a;
  Setup s{grid::parse_network(doc), {}, {}, {}};
  s.g = topology::reduce_graph(s.model);
  s.list = topology::enumerate_admissible(s.g);
  s.profiles = grid::load_profiles(data_path("chain_profiles.csv"), kHour, s.model);
  if (zero_load) {
    for (auto& [id, p] : s.profiles) p = {0.0, 0.0};
  }
  return s;
}

Setup feeder_setup() {
  Setup s{grid::load_network(data_path("feeder16.json")), {}, {}, {}};
  s.g = topology::reduce_graph(s.model);
  s.list = topology::order_by_hamming(topology::enumerate_admissible(s.g));
  s.profiles = grid::load_profiles(data_path("feeder16_profiles.csv"), kHour, s.model);
  return s;
}

screening::SamplingReport synthetic(const std::vector<double>& gammas) {
  screening::SamplingReport r;
  r.samples = gammas.size();
  for (double gm : gammas) {
    r.taps.push_back(0);
    r.converged.push_back(true);
    r.gamma_values.push_back(gm);
    r.j_values.push_back(0.01);
    r.gamma_v_values.push_back(0.0);
    r.gamma_i_values.push_back(gm);
    r.f_values.push_back(0.009 + 0.1 * gm);
  }
  return r;
}

// Feeder shape from the physical network: 0-1 BFS where breaker-less
// branches cost nothing, so depth counts switchable edges only.
screening::FeederStats physical_stats(const Setup& s, const BitString& bits) {
  const auto& m = s.model;
  const auto live = topology::branches_in_service(m, s.g, bits);
  const std::size_t n = m.buses().size();
  std::vector<std::size_t> dist(n, SIZE_MAX), tree(n, SIZE_MAX);
  screening::FeederStats out;
  for (std::size_t root = 0; root < n; ++root) {
    if (m.buses()[root].kind != grid::BusKind::HV) continue;
    std::deque<std::size_t> dq{root};
    dist[root] = 0;
    tree[root] = root;
    while (!dq.empty()) {
      const std::size_t u = dq.front();
      dq.pop_front();
      for (std::size_t k = 0; k < live.size(); ++k) {
        if (!live[k]) continue;
        const auto a = m.bus_index(m.branches()[k].from), b = m.bus_index(m.branches()[k].to);
        const std::size_t v = a == u ? b : (b == u ? a : SIZE_MAX);
        if (v == SIZE_MAX) continue;
        const std::size_t w = (m.branches()[k].breaker || m.buses()[v].kind == grid::BusKind::HV ||
                               m.buses()[u].kind == grid::BusKind::HV)
                                  ? 1
                                  : 0;
        if (dist[u] + w < dist[v]) {
          dist[v] = dist[u] + w;
          tree[v] = root;
          w == 0 ? dq.push_front(v) : dq.push_back(v);
        }
      }
    }
    screening::TreeStats t{m.buses()[root].id, 0, 0, 0};
    std::set<std::size_t> groups;
    for (std::size_t b = 0; b < n; ++b) {
      if (tree[b] != root) continue;
      groups.insert(b);
      t.depth = std::max(t.depth, dist[b]);
    }
    for (const auto& l : m.loads()) t.loads += tree[m.bus_index(l.bus)] == root;
    // reduced node count: distinct groups reached (buses of one group share a reduced node)
    std::set<std::string> reached;
    for (const auto& node : s.g.nodes) {
      for (const auto& bus : node.buses) {
        if (groups.count(m.bus_index(bus))) reached.insert(node.id);
      }
    }
    t.nodes = reached.size();
    if (t.nodes > 1) {
      out.per_tree.push_back(t);
      out.max_depth = std::max(out.max_depth, t.depth);
    }
  }
  out.trees = out.per_tree.size();
  return out;
}

}  // namespace

TEST_SUITE("screening") {
  TEST_CASE("classification rule") {
    CHECK(screening::classify(synthetic(std::vector<double>(50, 0.0))) == ConfigClass::CCC);
    CHECK(screening::classify(synthetic(std::vector<double>(50, 5.0))) == ConfigClass::NCCC);
    std::vector<double> one(2000, 5.0);
    one[17] = 0.0;
    CHECK(screening::classify(synthetic(one)) == ConfigClass::Ambiguous);
    std::vector<double> many(2000, 5.0);
    for (int i = 0; i < 100; ++i) many[static_cast<std::size_t>(i)] = 0.0;
    CHECK(screening::classify(synthetic(many)) == ConfigClass::CCC);
    CHECK(screening::class_name(ConfigClass::Ambiguous) == "AMBIGUOUS");
    CHECK(screening::parse_class("NCCC") == ConfigClass::NCCC);
    CHECK_THROWS_AS(screening::parse_class("maybe"), ParseError);
  }

  TEST_CASE("statistics") {
    auto r = synthetic({0.0, 1.0, 2.0, 0.0});
    screening::compute_statistics(r);
    CHECK(r.mean == doctest::Approx((0.009 * 4 + 0.3) / 4));
    CHECK(r.eta == doctest::Approx(r.std / r.mean));
    CHECK(r.j_max == 0.01);
    CHECK(r.gamma_max == 2.0);
    CHECK(r.feasible_fraction == 0.5);

    auto scaled = r;
    for (double& f : scaled.f_values) f *= 37.0;
    screening::compute_statistics(scaled);
    CHECK(scaled.eta == doctest::Approx(r.eta).epsilon(1e-12));

    auto constant = synthetic(std::vector<double>(30, 0.0));
    screening::compute_statistics(constant);
    CHECK(constant.std == 0.0);
    CHECK(constant.eta == 0.0);
  }

  TEST_CASE("lossless configuration is CCC with zero penalty everywhere") {
    const auto s = chain_setup(300.0, true);
    const auto r = screening::sample_configuration(s.model, s.g, s.list, 1, s.profiles, {}, 50, 1);
    for (double gm : r.gamma_values) CHECK(gm == 0.0);
    CHECK(r.cls == ConfigClass::CCC);
    CHECK(r.std == 0.0);
    CHECK(r.eta == 0.0);
  }

  TEST_CASE("chain with generous limits is all CCC") {
    const auto s = chain_setup();
    const auto res = screening::screen_all(s.model, s.g, s.list, s.profiles, {}, 40, 1);
    CHECK(res.partition.ccc.size() == 4);
  }

  TEST_CASE("strangled HV2 head makes the all-through-HV2 configuration NCCC") {
    const auto s = chain_setup(40.0);
    const auto res = screening::screen_all(s.model, s.g, s.list, s.profiles, {}, 40, 1);
    const auto levels = phase_grid(s.model, 10000);
    for (const auto& c : s.list.items) {
      const auto oracle = grid_search(s.model, s.g, c.bits, s.profiles, levels);
      const auto cls = res.reports[static_cast<std::size_t>(c.index - 1)].cls;
      if (!c.bits[0]) {
        CHECK(oracle.feasible == 0);
        CHECK(cls == ConfigClass::NCCC);
        for (double gm : res.reports[static_cast<std::size_t>(c.index - 1)].gamma_values) CHECK(gm > 0.0);
      }
      if (cls == ConfigClass::CCC) CHECK(oracle.feasible > 0);
    }
    CHECK_FALSE(res.partition.ccc.empty());
  }

  TEST_CASE("partition is disjoint and exhaustive") {
    const auto s = feeder_setup();
    const auto res = screening::screen_all(s.model, s.g, s.list, s.profiles, {}, 30, 9);
    std::vector<int> all;
    for (const auto* part : {&res.partition.ccc, &res.partition.nccc, &res.partition.ambiguous}) {
      all.insert(all.end(), part->begin(), part->end());
    }
    std::sort(all.begin(), all.end());
    CHECK(all == optimizer::all_indices(s.list.size()));
  }

  TEST_CASE("sampling is reproducible and honours the sample count") {
    const auto s = feeder_setup();
    const auto a = screening::sample_configuration(s.model, s.g, s.list, 7, s.profiles, {}, 25, 4);
    const auto b = screening::sample_configuration(s.model, s.g, s.list, 7, s.profiles, {}, 25, 4);
    const auto c = screening::sample_configuration(s.model, s.g, s.list, 8, s.profiles, {}, 25, 4);
    CHECK(a.f_values.size() == 25);
    CHECK(a.f_values == b.f_values);
    CHECK(a.phases != c.phases);
    const auto domain_ranges = std::vector<std::pair<double, double>>{{-0.2, 0.45}, {-0.2, 0.45}, {-0.2, 0.55}, {0.0, 0.64}, {-0.32, 0.45}};
    for (const auto& ph : a.phases) {
      for (std::size_t k = 0; k < ph.size(); ++k) {
        CHECK(ph[k] >= domain_ranges[k].first);
        CHECK(ph[k] <= domain_ranges[k].second);
      }
    }
    for (int t : a.taps) CHECK((t >= -3 && t <= 3));
    CHECK_THROWS_AS(screening::sample_configuration(s.model, s.g, s.list, 999, s.profiles, {}, 5, 1), ValidationError);
  }

  TEST_CASE("minsod") {
    const std::vector<BitString> set{BitString::parse("001"), BitString::parse("000"), BitString::parse("011")};
    CHECK(screening::minsod(set).str() == "001");
    CHECK(screening::sum_of_distances(BitString::parse("001"), set) == 2);
    const std::vector<BitString> one{BitString::parse("1010")};
    CHECK(screening::minsod(one).str() == "1010");
    CHECK_THROWS_AS(screening::minsod(std::vector<BitString>{}), ValidationError);
    // tie: both members have SOD 1; the smaller text wins
    const std::vector<BitString> tie{BitString::parse("11"), BitString::parse("01")};
    CHECK(screening::minsod(tie).str() == "01");

    std::mt19937_64 rng(5);
    for (int t = 0; t < 40; ++t) {
      const int len = uniform_int(rng, 1, 8);
      std::vector<std::string> texts;
      std::vector<BitString> bits;
      for (int i = uniform_int(rng, 1, 30); i > 0; --i) {
        std::string s;
        for (int k = 0; k < len; ++k) s += uniform_int(rng, 0, 1) ? '1' : '0';
        texts.push_back(s);
        bits.push_back(BitString::parse(s));
      }
      const auto got = screening::minsod(bits).str();
      CHECK(got == sod_oracle(texts));
      CHECK(std::count(texts.begin(), texts.end(), got) > 0);
    }
  }

  TEST_CASE("prototypes and feeder statistics") {
    const auto s = feeder_setup();
    const auto res = screening::screen_all(s.model, s.g, s.list, s.profiles, {}, 100, 1);
    const auto rep = screening::prototype_report(res.partition, s.list, s.model, s.g);
    REQUIRE(rep.ccc);
    REQUIRE(rep.nccc);
    CHECK(rep.nccc->stats.max_depth >= rep.ccc->stats.max_depth);
    CHECK(rep.ccc->members == res.partition.ccc.size());
    CHECK(s.list.at(rep.ccc->n_conf).bits == rep.ccc->bits);

    screening::ClassPartition single;
    single.ccc = {5};
    const auto lone = screening::prototype_report(single, s.list, s.model, s.g);
    REQUIRE(lone.ccc);
    CHECK_FALSE(lone.nccc);
    CHECK(lone.ccc->n_conf == 5);
    CHECK(lone.ccc->sod == 0);

    const auto json = screening::to_json(rep);
    CHECK(json.size() == 2);
    CHECK(json[0]["class"] == "CCC");

    for (const auto& c : s.list.items) {
      const auto a = screening::feeder_stats(s.model, s.g, c.bits);
      const auto b = physical_stats(s, c.bits);
      REQUIRE(a.trees == b.trees);
      CHECK(a.max_depth == b.max_depth);
      for (std::size_t t = 0; t < a.trees; ++t) {
        CHECK(a.per_tree[t].root == b.per_tree[t].root);
        CHECK(a.per_tree[t].nodes == b.per_tree[t].nodes);
        CHECK(a.per_tree[t].depth == b.per_tree[t].depth);
        CHECK(a.per_tree[t].loads == b.per_tree[t].loads);
      }
    }
  }

  TEST_CASE("screening CSV round trip") {
    TempDir dir;
    const auto s = chain_setup(40.0);
    const auto res = screening::screen_all(s.model, s.g, s.list, s.profiles, {}, 10, 1);
    const auto path = dir.path() / "screening.csv";
    csv::write_text(path, screening::screening_csv(res));
    const auto back = screening::read_screening_csv(path);
    CHECK(back.ccc == res.partition.ccc);
    CHECK(back.nccc == res.partition.nccc);
    CHECK(back.ambiguous == res.partition.ambiguous);
    CHECK_THROWS_AS(screening::read_screening_csv(dir.path() / "missing.csv"), MissingArtifactError);
  }
}
