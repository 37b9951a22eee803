#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vfpid/ar.hpp"
#include "vfpid/vfp.hpp"

namespace vfpid {

struct GateOptions {
  double whiteness_pass_fraction = 0.8;  // minimum fraction of states passing
  double whiteness_ci = 0.95;
  int whiteness_max_lag = 0;  // 0: min(50, rows_per_state / 10)
  FitMethod scan_method = FitMethod::ols;
};

struct SelectionTrial {
  int order = 0;
  int p = 0;
  double bic = 0.0;
  double rss_sss = 0.0;
  bool converged = true;
  double whiteness_pass_fraction = 0.0;
  bool passed_gates = false;
};

struct SelectionReport {
  std::vector<SelectionTrial> trials;
  std::optional<std::pair<int, int>> chosen;  // (n*, p*)
  std::string diagnostic;                     // set when nothing passes the gates
};

/// Pooled Gaussian BIC over the per-state residual variances:
/// sum_k n_eff ln sigma2(k) + d ln(M n_eff).
double pooled_bic(const Eigen::VectorXd& sigma2_by_state, std::size_t n_eff,
                  std::size_t n_params);

/// Scans complete bases p = 1..p_max at fixed AR order; chosen p* minimizes
/// the pooled BIC among trials passing the validation gates, ties toward
/// smaller p.
SelectionReport select_basis_dim(const SignalPool& pool, int order, int p_max,
                                 const GateOptions& gates = {});

/// Scans AR orders over n_grid at a fixed basis. All orders are conditioned
/// on the same sample range (max of the grid) so the trials are nested.
SelectionReport select_order_global(const SignalPool& pool, const BasisSpec& basis,
                                    const std::vector<int>& n_grid,
                                    const GateOptions& gates = {});

struct NormalityScreen {
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  bool within_bounds = false;  // |skew| and |ex.kurt| <= 0.5 (advisory)
};

struct ValidationReport {
  std::vector<FlightState> states;
  std::vector<WhitenessReport> whiteness;
  std::vector<NormalityScreen> normality;
  std::vector<bool> excluded;  // states whose residuals could not be tested
  std::vector<std::string> warnings;
  double pass_fraction = 0.0;  // fraction of testable states that pass
};

/// Residual whiteness per training state plus an advisory normality screen.
ValidationReport validate(const VfpArModel& model, const SignalPool& pool,
                          double ci_level = 0.95, int max_lag = 0);

}  // namespace vfpid
