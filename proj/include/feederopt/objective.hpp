#pragma once

#include <span>

#include "feederopt/grid_model.hpp"
#include "feederopt/powerflow.hpp"

namespace feederopt::objective {

struct ObjectiveParams {
  double alpha = 0.9;   ///< weight of the loss term
  double beta = 0.2;    ///< weight of voltage violation inside the penalty
  double kappa_v = 100.0;
  double kappa_i = 100.0;
  /// Fitness given to a candidate whose power flow does not converge.
  double gamma_ceiling = 1e6;

  /// Throws DomainError when a field is out of range.
  void validate() const;
};

struct ObjectiveBreakdown {
  double j = 0.0;        ///< P_loss / P_gen
  double gamma_v = 0.0;
  double gamma_i = 0.0;
  double gamma = 0.0;    ///< (1 - beta) gamma_i + beta gamma_v
  double f = 0.0;        ///< alpha j + (1 - alpha) gamma
  bool feasible = false; ///< gamma == 0
};

/// Zero on [lo, hi], quadratic outside.
double penalty_v(double ratio, double kappa_v = 100.0, double lo = 0.9, double hi = 1.1);

/// Zero up to 1, quadratic beyond.
double penalty_i(double ratio, double kappa_i = 100.0);

struct GammaTerms {
  double gamma_v = 0.0;
  double gamma_i = 0.0;
};

/// Max-aggregated voltage and current penalties over buses and branches.
/// Each bus uses its own vmin_frac/vmax_frac band.
GammaTerms gamma_terms(const powerflow::PowerFlowResult& result, const grid::NetworkModel& model,
                       const ObjectiveParams& params = {});

/// Builds J, Gamma and F from a converged solution. Throws ConvergenceError
/// for a non-converged result.
ObjectiveBreakdown evaluate(const powerflow::PowerFlowResult& result, const grid::NetworkModel& model,
                            const ObjectiveParams& params = {});

/// The arithmetic part of evaluate, from already computed terms.
ObjectiveBreakdown combine(double j, const GammaTerms& terms, const ObjectiveParams& params);

/// True when every bus voltage lies in its band and every branch current is
/// within its limit.
bool satisfies_constraints(const powerflow::PowerFlowResult& result, const grid::NetworkModel& model);

/// Weight that alpha becomes once J and Gamma are rescaled by their maxima.
double alpha_eq(double alpha, double j_max, double gamma_max);

struct NormalizationDiagnostics {
  double j_max = 0.0;
  double gamma_max = 0.0;
  double alpha_eq = 0.0;  ///< NaN when either maximum is zero
};

NormalizationDiagnostics normalization_diagnostics(std::span<const ObjectiveBreakdown> samples, double alpha);

}  // namespace feederopt::objective
