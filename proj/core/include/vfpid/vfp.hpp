#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vfpid/ar.hpp"
#include "vfpid/basis.hpp"
#include "vfpid/types.hpp"

namespace vfpid {

/// Cross-sectionally pooled regression y = Phi theta + e. Rows are grouped
/// by state (training order), time-major within each state; row r maps to
/// (state r / rows_per_state, t = first_t + r % rows_per_state). Each row of
/// Phi is the Kronecker product of the lag vector [-y[t-1] ... -y[t-n]] with
/// the state's basis vector g(k).
struct PooledRegression {
  Eigen::VectorXd y;
  Eigen::MatrixXd phi;
  int order = 0;
  int first_t = 0;  // 1-based time index of the first row in each state block
  BasisSpec basis;
  std::vector<FlightState> states;
  std::size_t rows_per_state = 0;

  std::size_t rows() const { return states.size() * rows_per_state; }
  std::size_t cols() const { return static_cast<std::size_t>(order) * basis.dimension(); }

  struct RowRef {
    std::size_t state_index;
    int t;  // 1-based sample index the row predicts
  };
  RowRef row_index(std::size_t row) const {
    return {row / rows_per_state, first_t + static_cast<int>(row % rows_per_state)};
  }
};

/// Row/column arithmetic without materializing any data.
struct RegressionLayout {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rows_per_state = 0;
};
RegressionLayout pooled_layout(std::size_t n_states, std::size_t n_samples, int order,
                               std::size_t basis_dim);

/// Builds the pooled regression. first_t defaults to order+1 (condition on
/// the first `order` samples); scans pass a larger first_t so different
/// orders share the same sample range.
PooledRegression assemble(const SignalPool& pool, int order, const BasisSpec& basis,
                          int first_t = 0);

/// OLS projection-coefficient estimate via column-pivoted QR. Throws
/// numeric_error on rank deficiency, naming the dependent (lag, basis)
/// columns.
Eigen::VectorXd estimate_ols(const PooledRegression& reg);

struct ResidualCovariance {
  Eigen::VectorXd sigma2;  // per state, training order
  Eigen::MatrixXd gamma;   // M x M cross covariance; diagonal == sigma2
};

/// Per-state residual variances and the across-state residual covariance at
/// common t, both normalized by the per-state row count.
ResidualCovariance estimate_residual_covariance(const PooledRegression& reg,
                                                const Eigen::VectorXd& theta);

struct WlsDiagnostics {
  bool ridge_applied = false;
  bool diagonal_fallback = false;
  bool eigenvalue_floored = false;
};

/// WLS estimate with Gamma = gamma_e (x) I implemented by whitening each
/// time slice with the Cholesky factor of the conditioned gamma_e; the full
/// (N-n)M-square covariance is never formed.
Eigen::VectorXd estimate_wls(const PooledRegression& reg, const Eigen::MatrixXd& gamma_e,
                             WlsDiagnostics* diag = nullptr);

enum class CovarianceForm { wls, ols_sandwich };

/// Parameter covariance: (Phi' G^-1 Phi)^-1 for WLS, or the sandwich
/// (Phi'Phi)^-1 Phi' G Phi (Phi'Phi)^-1 for OLS.
Eigen::MatrixXd parameter_covariance(const PooledRegression& reg,
                                     const Eigen::MatrixXd& gamma_e, CovarianceForm form);

enum class FitMethod { ols, wls1, wls_iterated };

enum class SolverKind {
  automatic,  // QR when the design matrix is small enough, else streamed
  qr,
  normal_equations  // streamed accumulation, LDLT solve
};

struct VfpFitOptions {
  FitMethod method = FitMethod::wls1;
  int max_wls_iters = 20;
  double wls_tol = 1e-8;  // relative theta change for wls_iterated
  double ci_level = 0.99;
  SolverKind solver = SolverKind::automatic;
  bool compute_p_theta = true;
  /// 0: condition on the first `order` samples (rows t = order+1..N). Scans
  /// pass max(order grid)+1 so trials of different order stay nested.
  int first_t = 0;
};

/// The identified global model.
struct VfpArModel {
  int order = 0;
  double fs = 0.0;
  BasisSpec basis;
  Eigen::MatrixXd theta;  // order x p, row i = projection of a_i
  std::vector<FlightState> training_states;
  Eigen::VectorXd sigma2_by_state;  // aligned with training_states
  Eigen::MatrixXd gamma_e;          // M x M
  Eigen::MatrixXd p_theta;          // (n p) x (n p); empty when not computed
  FitMethod method = FitMethod::wls1;
  bool converged = true;
  int wls_iterations = 0;
  std::vector<std::string> warnings;

  std::size_t n_params() const {
    return static_cast<std::size_t>(order) * basis.dimension();
  }
};

/// Full estimation pipeline: OLS pass, residual covariance, then WLS
/// refinement(s) per `options.method`, with the final residual statistics
/// and parameter covariance stored on the model.
VfpArModel fit_vfp(const SignalPool& pool, int order, const BasisSpec& basis,
                   const VfpFitOptions& options = {});

/// Streamed normal-equation accumulation for instances whose design matrix
/// would not fit in memory: per-state blocks are built, accumulated into the
/// (np x np) Gram matrix, and discarded.
struct NormalEquations {
  Eigen::MatrixXd gram;  // Phi' W Phi
  Eigen::VectorXd rhs;   // Phi' W y
  std::size_t rows = 0;
};
NormalEquations accumulate_normal_equations(const SignalPool& pool, int order,
                                            const BasisSpec& basis,
                                            const Eigen::MatrixXd* gamma_e = nullptr,
                                            int first_t = 0);
Eigen::VectorXd solve_normal_equations(const NormalEquations& eqs);

struct ConfidenceBand {
  double estimate = 0.0;
  double half_width = 0.0;
  double level = 0.0;
};

/// AR model frozen at one flight state, with per-coefficient confidence
/// bands from the projection of p_theta through the basis vector.
struct FrozenModel {
  ArModel model;
  std::vector<ConfidenceBand> bands;  // one per AR coefficient
  bool stable = true;                 // all roots strictly inside unit circle
  bool sigma2_interpolated = false;   // k was not a training state
  bool extrapolated = false;          // k outside the basis ranges
};

/// Freeze at an in-range state: a_i(k) = theta row i . g(k). sigma2 comes
/// from the training state when k matches one, otherwise bilinear
/// interpolation on a complete rectangular training grid (nearest state when
/// the grid is incomplete), flagged as interpolated.
FrozenModel freeze(const VfpArModel& model, const FlightState& k, double ci_level = 0.99);

/// As freeze, but k may lie outside the declared ranges; the Chebyshev
/// polynomials are evaluated beyond [-1,1] and the result is flagged.
FrozenModel freeze_extrapolate(const VfpArModel& model, const FlightState& k,
                               double ci_level = 0.99);

struct Prediction {
  std::vector<double> predictions;  // t = order+1..N
  std::vector<double> residuals;
  double rss_sss = 0.0;
};

/// One-step-ahead predictions of `signal` with the model frozen at k.
Prediction predict(const VfpArModel& model, const FlightState& k,
                   std::span<const double> signal);

/// Pooled residual quality: sum of residual squares over all states divided
/// by the sum of signal squares, both over t = order+1..N.
double global_rss_sss(const VfpArModel& model, const SignalPool& pool);

/// Residual variance at k: exact at training states; bilinear on a complete
/// rectangular training grid inside its hull; nearest state otherwise.
/// *interpolated reports whether anything other than an exact lookup ran.
double sigma2_at(const VfpArModel& model, const FlightState& k,
                 bool* interpolated = nullptr);

}  // namespace vfpid
