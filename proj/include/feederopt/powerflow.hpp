#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "feederopt/candidate.hpp"
#include "feederopt/grid_model.hpp"
#include "feederopt/topology.hpp"

namespace feederopt::powerflow {

using Complex = std::complex<double>;

struct SolverOptions {
  double tol_pu = 1e-8;  ///< max per-bus voltage change that ends the sweep
  int max_iter = 100;
  double s_base_mva = 1.0;
};

/// Steady-state solution. Per-bus vectors follow model.buses(), per-branch
/// vectors follow model.branches(). Branch phasors are oriented from -> to
/// and measured on the impedance side of a TVR.
struct PowerFlowResult {
  std::vector<double> v_pu;
  std::vector<double> v_kv;
  std::vector<Complex> v_phasor_pu;
  std::vector<double> i_a;
  std::vector<Complex> i_phasor_pu;
  std::vector<double> branch_loss_kw;  ///< I^2 R per branch
  std::vector<bool> in_service;

  double p_gen_kw = 0.0;   ///< slack injections plus generator output
  double p_load_kw = 0.0;
  double p_loss_kw = 0.0;  ///< p_gen_kw - p_load_kw
  double tvr_ratio = 1.0;  ///< voltage ratio applied by the regulator

  bool converged = false;
  int iterations = 0;
  double last_change_pu = 0.0;
  std::string diagnostics;
};

/// Downstream voltage of the regulator before any line drop, kV.
double tvr_output_kv(double v_in_kv, int n_tap, double delta_v_kv);

/// Backward/forward sweep over each HV-rooted tree of the configuration.
/// HV buses are slacks at nominal voltage. Throws NonRadialError if the
/// closed branches do not form HV-rooted trees covering every MV bus, and
/// ValidationError for a candidate outside the model's phase/tap sets.
PowerFlowResult solve(const grid::NetworkModel& model, const topology::ReducedGraph& g,
                      const topology::BitString& conf, const CandidateSolution& solution,
                      const grid::ProfileSet& profiles, const SolverOptions& options = {});

/// |p_loss - sum of branch I^2 R|, kW.
double losses_identity_check(const PowerFlowResult& result);

/// Writes <stem>_buses.csv (bus_id,v_pu) and <stem>_branches.csv (branch_id,i_a).
void write_trace(const std::filesystem::path& stem, const grid::NetworkModel& model,
                 const PowerFlowResult& result);

}  // namespace feederopt::powerflow
