#include "feederopt/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "feederopt/csv_util.hpp"
#include "feederopt/errors.hpp"

namespace feederopt::powerflow {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Tree {
  std::vector<std::size_t> order;          // BFS order, roots first
  std::vector<std::size_t> parent;         // kNone for roots
  std::vector<std::size_t> parent_branch;  // kNone for roots
  std::vector<std::vector<std::size_t>> children;
};

Tree build_tree(const grid::NetworkModel& model, const std::vector<bool>& live) {
  const auto& buses = model.buses();
  const auto& branches = model.branches();
  const std::size_t n = buses.size();

  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);  // (branch, neighbour)
  for (std::size_t k = 0; k < branches.size(); ++k) {
    if (!live[k]) continue;
    const std::size_t a = model.bus_index(branches[k].from);
    const std::size_t b = model.bus_index(branches[k].to);
    adj[a].emplace_back(k, b);
    adj[b].emplace_back(k, a);
  }

  Tree t;
  t.parent.assign(n, kNone);
  t.parent_branch.assign(n, kNone);
  t.children.assign(n, {});
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (buses[i].kind == grid::BusKind::HV) seen[i] = true;
  }
  for (std::size_t root = 0; root < n; ++root) {
    if (buses[root].kind != grid::BusKind::HV) continue;
    std::size_t head = t.order.size();
    t.order.push_back(root);
    while (head < t.order.size()) {
      const std::size_t u = t.order[head++];
      for (const auto& [k, v] : adj[u]) {
        if (k == t.parent_branch[u]) continue;
        if (seen[v]) {
          throw NonRadialError("closed branch \"" + branches[k].id + "\" forms a loop or ties two HV buses");
        }
        seen[v] = true;
        t.parent[v] = u;
        t.parent_branch[v] = k;
        t.children[u].push_back(v);
        t.order.push_back(v);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) throw NonRadialError("bus \"" + buses[i].id + "\" is not fed by any HV bus");
  }
  return t;
}

void check_candidate(const grid::NetworkModel& model, const CandidateSolution& solution) {
  const auto& ctrl = model.controllable_generators();
  if (solution.phases.size() != ctrl.size()) {
    throw ValidationError("candidate has " + std::to_string(solution.phases.size()) + " phases, network has " +
                          std::to_string(ctrl.size()) + " controllable generators");
  }
  for (std::size_t k = 0; k < ctrl.size(); ++k) {
    const grid::Generator& g = model.generators()[ctrl[k]];
    const double phi = solution.phases[k];
    if (!(phi >= g.phase_min_rad && phi <= g.phase_max_rad)) {
      throw ValidationError("phase of generator \"" + g.id + "\" outside its range");
    }
  }
  const auto taps = model.tap_set();
  if (!std::binary_search(taps.begin(), taps.end(), solution.n_tap)) {
    throw ValidationError("tap " + std::to_string(solution.n_tap) + " not in the TVR tap set");
  }
}

}  // namespace

double tvr_output_kv(double v_in_kv, int n_tap, double delta_v_kv) {
  return v_in_kv + n_tap * delta_v_kv;
}

PowerFlowResult solve(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                      const topology::BitString& conf, const CandidateSolution& solution,
                      const grid::ProfileSet& profiles, const SolverOptions& options) {
  check_candidate(model, solution);
  const auto& buses = model.buses();
  const auto& branches = model.branches();
  const std::size_t n = buses.size();

  PowerFlowResult res;
  res.in_service = topology::branches_in_service(model, g, conf);
  const Tree tree = build_tree(model, res.in_service);

  // Net demand per bus in per unit (loads minus generation).
  const double kw_to_pu = 1.0 / (1000.0 * options.s_base_mva);
  std::vector<Complex> demand(n, 0.0);
  for (const grid::Load& l : model.loads()) {
    const grid::PowerSample& s = profiles.at(l.id);
    demand[model.bus_index(l.bus)] += Complex(s.p_kw, s.q_kvar) * kw_to_pu;
  }
  double p_generators_kw = 0.0;
  {
    const auto& ctrl = model.controllable_generators();
    for (std::size_t i = 0; i < model.generators().size(); ++i) {
      const grid::Generator& gen = model.generators()[i];
      double phi = gen.fixed_phase_rad;
      auto it = std::find(ctrl.begin(), ctrl.end(), i);
      if (it != ctrl.end()) phi = solution.phases[static_cast<std::size_t>(it - ctrl.begin())];
      const double p = profiles.at(gen.id).p_kw;
      p_generators_kw += p;
      demand[model.bus_index(gen.bus)] -= Complex(p, p * std::tan(phi)) * kw_to_pu;
    }
  }

  std::vector<Complex> z_pu(branches.size());
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const double kv = buses[model.bus_index(branches[k].from)].nominal_kv;
    z_pu[k] = Complex(branches[k].r_ohm, branches[k].x_ohm) * (options.s_base_mva / (kv * kv));
  }

  const std::size_t tvr = model.tvr_branch().value_or(kNone);
  double tvr_step_pu = 0.0;
  if (tvr != kNone) tvr_step_pu = solution.n_tap * model.tvr()->delta_v_kv;  // divided by base below

  std::vector<Complex> v(n, Complex(1.0, 0.0));
  std::vector<Complex> j(n, 0.0);  // current into bus from its parent branch, impedance side
  double ratio = 1.0;              // TVR voltage ratio, |V_out| / |V_in|

  auto upstream_current = [&](std::size_t c) { return tree.parent_branch[c] == tvr ? ratio * j[c] : j[c]; };
  auto backward = [&] {
    for (auto it = tree.order.rbegin(); it != tree.order.rend(); ++it) {
      const std::size_t b = *it;
      if (tree.parent[b] == kNone) continue;
      Complex sum = std::conj(demand[b] / v[b]);
      for (std::size_t c : tree.children[b]) sum += upstream_current(c);
      j[b] = sum;
    }
  };

  std::vector<Complex> v_next(n);
  for (res.iterations = 1; res.iterations <= options.max_iter; ++res.iterations) {
    backward();
    v_next = v;
    for (std::size_t b : tree.order) {
      const std::size_t p = tree.parent[b];
      if (p == kNone) continue;
      const std::size_t k = tree.parent_branch[b];
      Complex v_reg = v_next[p];
      if (k == tvr) {
        const double mag = std::abs(v_next[p]);
        ratio = (mag + tvr_step_pu / buses[p].nominal_kv) / mag;
        v_reg *= ratio;
      }
      v_next[b] = v_reg - z_pu[k] * j[b];
    }
    double change = 0.0;
    bool finite = true;
    for (std::size_t b = 0; b < n; ++b) {
      const double d = std::abs(v_next[b] - v[b]);
      if (!std::isfinite(d)) finite = false;
      change = std::max(change, d);
    }
    v.swap(v_next);
    res.last_change_pu = change;
    if (!finite) {
      res.diagnostics = "sweep diverged (non-finite voltage) at iteration " + std::to_string(res.iterations);
      break;
    }
    if (change < options.tol_pu) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged && res.diagnostics.empty()) {
    std::ostringstream msg;
    msg << "no convergence in " << options.max_iter << " iterations, last change " << res.last_change_pu << " pu";
    res.diagnostics = msg.str();
  }
  res.iterations = std::min(res.iterations, options.max_iter);
  backward();  // currents consistent with the final voltages
  res.tvr_ratio = ratio;

  res.v_phasor_pu = v;
  res.v_pu.resize(n);
  res.v_kv.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    res.v_pu[b] = std::abs(v[b]);
    res.v_kv[b] = res.v_pu[b] * buses[b].nominal_kv;
  }

  res.i_phasor_pu.assign(branches.size(), 0.0);
  res.i_a.assign(branches.size(), 0.0);
  res.branch_loss_kw.assign(branches.size(), 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t k = tree.parent_branch[b];
    if (k == kNone) continue;
    const bool along = model.bus_index(branches[k].from) == tree.parent[b];
    res.i_phasor_pu[k] = along ? j[b] : -j[b];
    const double kv = buses[b].nominal_kv;
    const double i_base_a = 1000.0 * options.s_base_mva / (std::sqrt(3.0) * kv);
    res.i_a[k] = std::abs(j[b]) * i_base_a;
    res.branch_loss_kw[k] = std::norm(j[b]) * z_pu[k].real() * options.s_base_mva * 1000.0;
  }

  double slack_kw = 0.0;
  for (std::size_t b : tree.order) {
    if (tree.parent[b] != kNone) continue;
    Complex out = 0.0;
    for (std::size_t c : tree.children[b]) out += upstream_current(c);
    slack_kw += (v[b] * std::conj(out)).real() * options.s_base_mva * 1000.0;
  }
  res.p_gen_kw = slack_kw + p_generators_kw;
  res.p_load_kw = grid::total_load(model, profiles);
  res.p_loss_kw = res.p_gen_kw - res.p_load_kw;
  return res;
}

double losses_identity_check(const PowerFlowResult& result) {
  double sum = 0.0;
  for (double w : result.branch_loss_kw) sum += w;
  return std::abs(result.p_loss_kw - sum);
}

void write_trace(const std::filesystem::path& stem, const grid::NetworkModel& model,
                 const PowerFlowResult& result) {
  std::string buses = "bus_id,v_pu\n";
  for (std::size_t b = 0; b < model.buses().size(); ++b) {
    buses += model.buses()[b].id + "," + csv::format_double(result.v_pu[b]) + "\n";
  }
  std::string branches = "branch_id,i_a\n";
  for (std::size_t k = 0; k < model.branches().size(); ++k) {
    branches += model.branches()[k].id + "," + csv::format_double(result.i_a[k]) + "\n";
  }
  csv::write_text(stem.string() + "_buses.csv", buses);
  csv::write_text(stem.string() + "_branches.csv", branches);
}

}  // namespace feederopt::powerflow
