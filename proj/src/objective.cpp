#include "feederopt/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "feederopt/errors.hpp"

namespace feederopt::objective {

void ObjectiveParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("beta must lie in [0, 1]");
  if (!(kappa_v > 0.0) || !(kappa_i > 0.0)) throw DomainError("penalty steepness must be positive");
  if (!(gamma_ceiling > 0.0)) throw DomainError("gamma_ceiling must be positive");
}

double penalty_v(double ratio, double kappa_v, double lo, double hi) {
  if (ratio < lo) return kappa_v * (lo - ratio) * (lo - ratio);
  if (ratio > hi) return kappa_v * (ratio - hi) * (ratio - hi);
  return 0.0;
}

double penalty_i(double ratio, double kappa_i) {
  if (ratio > 1.0) return kappa_i * (ratio - 1.0) * (ratio - 1.0);
  return 0.0;
}

GammaTerms gamma_terms(const powerflow::PowerFlowResult& result, const grid::NetworkModel& model,
                       const ObjectiveParams& params) {
  GammaTerms t;
  const auto& buses = model.buses();
  for (std::size_t b = 0; b < buses.size(); ++b) {
    t.gamma_v = std::max(t.gamma_v, penalty_v(result.v_pu[b], params.kappa_v, buses[b].vmin_frac, buses[b].vmax_frac));
  }
  const auto& branches = model.branches();
  for (std::size_t k = 0; k < branches.size(); ++k) {
    // excess taken as a difference first: i_a just above imax must not round to ratio 1
    const double excess = (result.i_a[k] - branches[k].imax_a) / branches[k].imax_a;
    if (excess > 0.0) t.gamma_i = std::max(t.gamma_i, params.kappa_i * excess * excess);
  }
  return t;
}

ObjectiveBreakdown combine(double j, const GammaTerms& terms, const ObjectiveParams& params) {
  ObjectiveBreakdown out;
  out.j = j;
  out.gamma_v = terms.gamma_v;
  out.gamma_i = terms.gamma_i;
  out.gamma = (1.0 - params.beta) * terms.gamma_i + params.beta * terms.gamma_v;
  out.f = params.alpha * j + (1.0 - params.alpha) * out.gamma;
  out.feasible = out.gamma == 0.0;
  return out;
}

ObjectiveBreakdown evaluate(const powerflow::PowerFlowResult& result, const grid::NetworkModel& model,
                            const ObjectiveParams& params) {
  if (!result.converged) throw ConvergenceError("cannot evaluate a non-converged power flow: " + result.diagnostics);
  // p_gen is zero only for a network with no load and no generation
  const double j = result.p_gen_kw > 0.0 ? std::max(0.0, result.p_loss_kw) / result.p_gen_kw : 0.0;
  return combine(j, gamma_terms(result, model, params), params);
}

bool satisfies_constraints(const powerflow::PowerFlowResult& result, const grid::NetworkModel& model) {
  const auto& buses = model.buses();
  for (std::size_t b = 0; b < buses.size(); ++b) {
    if (result.v_pu[b] < buses[b].vmin_frac || result.v_pu[b] > buses[b].vmax_frac) return false;
  }
  const auto& branches = model.branches();
  for (std::size_t k = 0; k < branches.size(); ++k) {
    if (result.i_a[k] > branches[k].imax_a) return false;
  }
  return true;
}

double alpha_eq(double alpha, double j_max, double gamma_max) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha_eq: alpha must lie in [0, 1]");
  if (!(j_max > 0.0) || !(gamma_max > 0.0)) throw DomainError("alpha_eq: maxima must be positive");
  const double weighted_j = alpha * j_max;
  return weighted_j / (weighted_j + (1.0 - alpha) * gamma_max);
}

NormalizationDiagnostics normalization_diagnostics(std::span<const ObjectiveBreakdown> samples, double alpha) {
  NormalizationDiagnostics d;
  for (const ObjectiveBreakdown& s : samples) {
    d.j_max = std::max(d.j_max, s.j);
    d.gamma_max = std::max(d.gamma_max, s.gamma);
  }
  d.alpha_eq = (d.j_max > 0.0 && d.gamma_max > 0.0) ? alpha_eq(alpha, d.j_max, d.gamma_max)
                                                    : std::numeric_limits<double>::quiet_NaN();
  return d;
}

}  // namespace feederopt::objective
