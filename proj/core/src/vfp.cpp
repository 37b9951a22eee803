#include "vfpid/vfp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "vfpid/numeric.hpp"

namespace vfpid {

namespace {

// Design matrices above this many entries take the streamed path when the
// solver choice is automatic (8e7 doubles = 640 MB for the QR copy).
constexpr std::size_t kDenseEntryBudget = 80'000'000;

std::string column_name(std::size_t col, std::size_t p, const BasisSpec& basis) {
  const std::size_t lag = col / p + 1;
  const auto& pair = basis.pairs[col % p];
  return "lag " + std::to_string(lag) + " x G(" + std::to_string(pair[0]) + "," +
         std::to_string(pair[1]) + ")";
}

// Conditioned Cholesky factor of gamma_e: eigenvalue floor at 1e-10 of the
// trace mean, then ridge, then diagonal fallback.
Eigen::MatrixXd conditioned_cholesky(const Eigen::MatrixXd& gamma_e, WlsDiagnostics* diag) {
  const Eigen::Index m = gamma_e.rows();
  if (gamma_e.cols() != m) throw std::invalid_argument("wls: gamma_e must be square");
  Eigen::MatrixXd sym = 0.5 * (gamma_e + gamma_e.transpose());

  const double floor_value = 1e-10 * sym.trace() / static_cast<double>(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() == Eigen::Success) {
    Eigen::VectorXd values = eig.eigenvalues();
    bool floored = false;
    for (Eigen::Index i = 0; i < m; ++i)
      if (values(i) < floor_value) {
        values(i) = floor_value;
        floored = true;
      }
    if (floored) {
      sym = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
      if (diag) diag->eigenvalue_floored = true;
    }
  }

  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  if (diag) diag->ridge_applied = true;
  const double ridge = 1e-8 * sym.diagonal().mean();
  Eigen::LLT<Eigen::MatrixXd> llt_ridge(sym +
                                        ridge * Eigen::MatrixXd::Identity(m, m));
  if (llt_ridge.info() == Eigen::Success) return llt_ridge.matrixL();

  if (diag) diag->diagonal_fallback = true;
  Eigen::VectorXd d = sym.diagonal().cwiseMax(floor_value);
  return Eigen::MatrixXd(d.cwiseSqrt().asDiagonal());
}

Eigen::VectorXd qr_solve_full_rank(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                   const BasisSpec& basis, std::size_t p) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols()) {
    const auto perm = qr.colsPermutation().indices();
    std::string names;
    for (Eigen::Index i = qr.rank(); i < a.cols() && i < qr.rank() + 4; ++i) {
      if (!names.empty()) names += ", ";
      names += column_name(static_cast<std::size_t>(perm(i)), p, basis);
    }
    throw numeric_error("estimate: rank-deficient regressor; dependent columns: " + names +
                        " (redundant basis functions for the training grid?)");
  }
  return qr.solve(b);
}

// Frozen AR coefficients a_i(k) = theta row i . g, without CI bookkeeping.
std::vector<double> frozen_coeffs(const Eigen::MatrixXd& theta,
                                  const std::vector<double>& g) {
  const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
  Eigen::VectorXd a = theta * gv;
  return std::vector<double>(a.data(), a.data() + a.size());
}

std::vector<double> state_residuals(std::span<const double> samples,
                                    const std::vector<double>& coeffs, int first_t) {
  const std::size_t n = coeffs.size();
  std::vector<double> residuals;
  residuals.reserve(samples.size() - static_cast<std::size_t>(first_t) + 1);
  for (std::size_t t = static_cast<std::size_t>(first_t) - 1; t < samples.size(); ++t) {
    double e = samples[t];
    for (std::size_t i = 1; i <= n; ++i) e += coeffs[i - 1] * samples[t - i];
    residuals.push_back(e);
  }
  return residuals;
}

struct GridIndex {
  std::vector<double> k1s, k2s;        // sorted unique axis values
  std::vector<std::vector<int>> cell;  // [i1][i2] -> training index or -1
  bool complete = false;
};

GridIndex build_grid_index(const std::vector<FlightState>& states) {
  GridIndex grid;
  std::set<double> k1set, k2set;
  for (const auto& s : states) {
    k1set.insert(s.airspeed);
    k2set.insert(s.aoa);
  }
  grid.k1s.assign(k1set.begin(), k1set.end());
  grid.k2s.assign(k2set.begin(), k2set.end());
  grid.cell.assign(grid.k1s.size(), std::vector<int>(grid.k2s.size(), -1));
  for (std::size_t idx = 0; idx < states.size(); ++idx) {
    const auto i1 = static_cast<std::size_t>(
        std::lower_bound(grid.k1s.begin(), grid.k1s.end(), states[idx].airspeed) -
        grid.k1s.begin());
    const auto i2 = static_cast<std::size_t>(
        std::lower_bound(grid.k2s.begin(), grid.k2s.end(), states[idx].aoa) -
        grid.k2s.begin());
    grid.cell[i1][i2] = static_cast<int>(idx);
  }
  grid.complete = grid.k1s.size() * grid.k2s.size() == states.size();
  if (grid.complete)
    for (const auto& row : grid.cell)
      for (int v : row)
        if (v < 0) grid.complete = false;
  return grid;
}

}  // namespace

RegressionLayout pooled_layout(std::size_t n_states, std::size_t n_samples, int order,
                               std::size_t basis_dim) {
  RegressionLayout layout;
  layout.rows_per_state = n_samples - static_cast<std::size_t>(order);
  layout.rows = n_states * layout.rows_per_state;
  layout.cols = static_cast<std::size_t>(order) * basis_dim;
  return layout;
}

PooledRegression assemble(const SignalPool& pool, int order, const BasisSpec& basis,
                          int first_t) {
  validate_basis(basis);
  if (pool.records.empty()) throw std::invalid_argument("assemble: empty pool");
  if (order < 1) throw std::invalid_argument("assemble: order must be >= 1");
  if (first_t == 0) first_t = order + 1;
  if (first_t < order + 1) throw std::invalid_argument("assemble: first_t below order + 1");
  if (pool.n_samples <= 2 * static_cast<std::size_t>(order) + 1)
    throw std::invalid_argument("assemble: record length must exceed 2*order + 1");

  PooledRegression reg;
  reg.order = order;
  reg.first_t = first_t;
  reg.basis = basis;
  reg.rows_per_state = pool.n_samples - static_cast<std::size_t>(first_t) + 1;

  const std::size_t p = basis.dimension();
  const std::size_t np = static_cast<std::size_t>(order) * p;
  const std::size_t total_rows = pool.records.size() * reg.rows_per_state;
  reg.y.resize(static_cast<Eigen::Index>(total_rows));
  reg.phi.resize(static_cast<Eigen::Index>(total_rows), static_cast<Eigen::Index>(np));

  for (const auto& record : pool.records) reg.states.push_back(record.state);

  for (std::size_t m = 0; m < pool.records.size(); ++m) {
    const auto& samples = pool.records[m].samples;
    const std::vector<double> g = eval_basis(basis, pool.records[m].state);
    const std::size_t base = m * reg.rows_per_state;
    for (std::size_t r = 0; r < reg.rows_per_state; ++r) {
      const std::size_t t = static_cast<std::size_t>(first_t) + r;  // 1-based
      reg.y(static_cast<Eigen::Index>(base + r)) = samples[t - 1];
      for (int i = 1; i <= order; ++i) {
        const double lag = -samples[t - 1 - static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < p; ++j)
          reg.phi(static_cast<Eigen::Index>(base + r),
                  static_cast<Eigen::Index>((static_cast<std::size_t>(i) - 1) * p + j)) =
              lag * g[j];
      }
    }
  }
  return reg;
}

Eigen::VectorXd estimate_ols(const PooledRegression& reg) {
  return qr_solve_full_rank(reg.phi, reg.y, reg.basis, reg.basis.dimension());
}

ResidualCovariance estimate_residual_covariance(const PooledRegression& reg,
                                                const Eigen::VectorXd& theta) {
  if (theta.size() != static_cast<Eigen::Index>(reg.cols()))
    throw std::invalid_argument("residual covariance: theta has the wrong dimension");
  const auto m = static_cast<Eigen::Index>(reg.states.size());
  const auto rps = static_cast<Eigen::Index>(reg.rows_per_state);

  Eigen::VectorXd residuals = reg.y - reg.phi * theta;
  // Column per state, one row per time slice.
  Eigen::Map<const Eigen::MatrixXd> e(residuals.data(), rps, m);

  ResidualCovariance cov;
  cov.gamma = e.transpose() * e / static_cast<double>(rps);
  cov.gamma = 0.5 * (cov.gamma + cov.gamma.transpose()).eval();
  cov.sigma2 = cov.gamma.diagonal();
  return cov;
}

Eigen::VectorXd estimate_wls(const PooledRegression& reg, const Eigen::MatrixXd& gamma_e,
                             WlsDiagnostics* diag) {
  const auto m = static_cast<Eigen::Index>(reg.states.size());
  if (gamma_e.rows() != m)
    throw std::invalid_argument("wls: gamma_e dimension does not match the state count");
  const auto rps = static_cast<Eigen::Index>(reg.rows_per_state);
  const auto np = static_cast<Eigen::Index>(reg.cols());

  const Eigen::MatrixXd chol = conditioned_cholesky(gamma_e, diag);

  // Whiten each time slice: rows sharing t across the M state blocks.
  Eigen::MatrixXd wphi(reg.phi.rows(), np);
  Eigen::VectorXd wy(reg.y.size());
  Eigen::MatrixXd slice(m, np);
  Eigen::VectorXd slice_y(m);
  for (Eigen::Index tau = 0; tau < rps; ++tau) {
    for (Eigen::Index s = 0; s < m; ++s) {
      slice.row(s) = reg.phi.row(s * rps + tau);
      slice_y(s) = reg.y(s * rps + tau);
    }
    chol.triangularView<Eigen::Lower>().solveInPlace(slice);
    chol.triangularView<Eigen::Lower>().solveInPlace(slice_y);
    for (Eigen::Index s = 0; s < m; ++s) {
      wphi.row(s * rps + tau) = slice.row(s);
      wy(s * rps + tau) = slice_y(s);
    }
  }
  return qr_solve_full_rank(wphi, wy, reg.basis, reg.basis.dimension());
}

Eigen::MatrixXd parameter_covariance(const PooledRegression& reg,
                                     const Eigen::MatrixXd& gamma_e, CovarianceForm form) {
  const auto m = static_cast<Eigen::Index>(reg.states.size());
  const auto rps = static_cast<Eigen::Index>(reg.rows_per_state);
  const auto np = static_cast<Eigen::Index>(reg.cols());
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(np, np);

  if (form == CovarianceForm::wls) {
    const Eigen::MatrixXd chol = conditioned_cholesky(gamma_e, nullptr);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(np, np);
    Eigen::MatrixXd slice(m, np);
    for (Eigen::Index tau = 0; tau < rps; ++tau) {
      for (Eigen::Index s = 0; s < m; ++s) slice.row(s) = reg.phi.row(s * rps + tau);
      chol.triangularView<Eigen::Lower>().solveInPlace(slice);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(slice.transpose());
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    Eigen::MatrixXd cov = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(identity);
    return 0.5 * (cov + cov.transpose());
  }

  // OLS sandwich: (Phi'Phi)^-1 [sum_t Phi_t' Gamma Phi_t] (Phi'Phi)^-1.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(np, np);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(reg.phi.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);

  Eigen::MatrixXd middle = Eigen::MatrixXd::Zero(np, np);
  Eigen::MatrixXd slice(m, np);
  for (Eigen::Index tau = 0; tau < rps; ++tau) {
    for (Eigen::Index s = 0; s < m; ++s) slice.row(s) = reg.phi.row(s * rps + tau);
    middle.noalias() += slice.transpose() * gamma_e.selfadjointView<Eigen::Lower>() * slice;
  }
  Eigen::MatrixXd inv_gram = ldlt.solve(identity);
  Eigen::MatrixXd cov = inv_gram * middle * inv_gram;
  return 0.5 * (cov + cov.transpose());
}

NormalEquations accumulate_normal_equations(const SignalPool& pool, int order,
                                            const BasisSpec& basis,
                                            const Eigen::MatrixXd* gamma_e, int first_t) {
  validate_basis(basis);
  if (first_t == 0) first_t = order + 1;
  const std::size_t p = basis.dimension();
  const auto np = static_cast<Eigen::Index>(static_cast<std::size_t>(order) * p);
  const std::size_t rps = pool.n_samples - static_cast<std::size_t>(first_t) + 1;
  const auto m = static_cast<Eigen::Index>(pool.records.size());

  NormalEquations eqs;
  eqs.gram = Eigen::MatrixXd::Zero(np, np);
  eqs.rhs = Eigen::VectorXd::Zero(np);
  eqs.rows = rps * pool.records.size();

  std::vector<std::vector<double>> g(pool.records.size());
  for (std::size_t s = 0; s < pool.records.size(); ++s)
    g[s] = eval_basis(basis, pool.records[s].state);

  if (!gamma_e) {
    // Each state's block factors as Lag (x) g', so its Gram contribution is
    // (Lag'Lag) (x) (g g') and only the n x n lag Gram touches the data.
    const auto pn = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd lag_block(static_cast<Eigen::Index>(rps), order);
    Eigen::VectorXd target(static_cast<Eigen::Index>(rps));
    for (std::size_t s = 0; s < pool.records.size(); ++s) {
      const auto& samples = pool.records[s].samples;
      for (std::size_t r = 0; r < rps; ++r) {
        const std::size_t t = static_cast<std::size_t>(first_t) + r;
        target(static_cast<Eigen::Index>(r)) = samples[t - 1];
        for (int i = 1; i <= order; ++i)
          lag_block(static_cast<Eigen::Index>(r), i - 1) =
              -samples[t - 1 - static_cast<std::size_t>(i)];
      }
      const Eigen::MatrixXd lag_gram = lag_block.transpose() * lag_block;
      const Eigen::VectorXd lag_rhs = lag_block.transpose() * target;
      const Eigen::Map<const Eigen::VectorXd> gv(g[s].data(), pn);
      const Eigen::MatrixXd outer = gv * gv.transpose();
      for (int i1 = 0; i1 < order; ++i1) {
        for (int i2 = 0; i2 < order; ++i2)
          eqs.gram.block(i1 * pn, i2 * pn, pn, pn).noalias() += lag_gram(i1, i2) * outer;
        eqs.rhs.segment(i1 * pn, pn).noalias() += lag_rhs(i1) * gv;
      }
    }
  } else {
    const Eigen::MatrixXd chol = conditioned_cholesky(*gamma_e, nullptr);
    Eigen::MatrixXd slice(m, np);
    Eigen::VectorXd slice_y(m);
    for (std::size_t r = 0; r < rps; ++r) {
      const std::size_t t = static_cast<std::size_t>(first_t) + r;
      for (Eigen::Index s = 0; s < m; ++s) {
        const auto& samples = pool.records[static_cast<std::size_t>(s)].samples;
        slice_y(s) = samples[t - 1];
        for (int i = 1; i <= order; ++i) {
          const double lag = -samples[t - 1 - static_cast<std::size_t>(i)];
          for (std::size_t j = 0; j < p; ++j)
            slice(s, static_cast<Eigen::Index>((static_cast<std::size_t>(i) - 1) * p + j)) =
                lag * g[static_cast<std::size_t>(s)][j];
        }
      }
      chol.triangularView<Eigen::Lower>().solveInPlace(slice);
      chol.triangularView<Eigen::Lower>().solveInPlace(slice_y);
      eqs.gram.selfadjointView<Eigen::Lower>().rankUpdate(slice.transpose());
      eqs.rhs.noalias() += slice.transpose() * slice_y;
    }
  }
  eqs.gram = eqs.gram.selfadjointView<Eigen::Lower>();
  return eqs;
}

Eigen::VectorXd solve_normal_equations(const NormalEquations& eqs) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(eqs.gram);
  if (ldlt.info() != Eigen::Success)
    throw numeric_error("normal equations: factorization failed (singular Gram matrix)");
  return ldlt.solve(eqs.rhs);
}

namespace {

ResidualCovariance residual_covariance_from_pool(const SignalPool& pool,
                                                 const Eigen::MatrixXd& theta,
                                                 const BasisSpec& basis, int first_t) {
  const auto m = static_cast<Eigen::Index>(pool.records.size());
  const auto rps =
      static_cast<Eigen::Index>(pool.n_samples - static_cast<std::size_t>(first_t) + 1);
  Eigen::MatrixXd e(rps, m);
  for (Eigen::Index s = 0; s < m; ++s) {
    const auto& record = pool.records[static_cast<std::size_t>(s)];
    const std::vector<double> coeffs =
        frozen_coeffs(theta, eval_basis(basis, record.state));
    const std::vector<double> res = state_residuals(record.samples, coeffs, first_t);
    for (Eigen::Index r = 0; r < rps; ++r) e(r, s) = res[static_cast<std::size_t>(r)];
  }
  ResidualCovariance cov;
  cov.gamma = e.transpose() * e / static_cast<double>(rps);
  cov.gamma = 0.5 * (cov.gamma + cov.gamma.transpose()).eval();
  cov.sigma2 = cov.gamma.diagonal();
  return cov;
}

}  // namespace

VfpArModel fit_vfp(const SignalPool& pool, int order, const BasisSpec& basis,
                   const VfpFitOptions& options) {
  if (options.method == FitMethod::wls_iterated && options.max_wls_iters < 1)
    throw std::invalid_argument("fit_vfp: max_wls_iters must be >= 1");
  const std::size_t p = basis.dimension();
  const RegressionLayout layout = pooled_layout(pool.records.size(), pool.n_samples, order, p);

  bool streamed = options.solver == SolverKind::normal_equations;
  if (options.solver == SolverKind::automatic)
    streamed = layout.rows * layout.cols > kDenseEntryBudget;

  VfpArModel model;
  model.order = order;
  model.fs = pool.fs;
  model.basis = basis;
  model.method = options.method;
  for (const auto& record : pool.records) model.training_states.push_back(record.state);

  const auto np = static_cast<Eigen::Index>(layout.cols);
  const int first_t = options.first_t == 0 ? order + 1 : options.first_t;

  std::optional<PooledRegression> reg;
  if (!streamed) reg = assemble(pool, order, basis, first_t);

  auto solve_pass = [&](const Eigen::MatrixXd* gamma, WlsDiagnostics* diag) {
    if (!streamed) {
      if (gamma) return estimate_wls(*reg, *gamma, diag);
      return estimate_ols(*reg);
    }
    const NormalEquations eqs =
        accumulate_normal_equations(pool, order, basis, gamma, first_t);
    return solve_normal_equations(eqs);
  };

  auto covariance_of = [&](const Eigen::VectorXd& theta_vec) {
    if (!streamed) return estimate_residual_covariance(*reg, theta_vec);
    Eigen::Map<const Eigen::MatrixXd> theta_t(theta_vec.data(), static_cast<Eigen::Index>(p),
                                              order);
    return residual_covariance_from_pool(pool, theta_t.transpose(), basis, first_t);
  };

  // OLS pass first; WLS refinements reuse the residual covariance estimate.
  Eigen::VectorXd theta = solve_pass(nullptr, nullptr);
  ResidualCovariance cov = covariance_of(theta);
  Eigen::MatrixXd weighting;  // gamma used by the final WLS pass

  if (options.method != FitMethod::ols) {
    WlsDiagnostics diag;
    const int max_iters = options.method == FitMethod::wls1 ? 1 : options.max_wls_iters;
    model.converged = options.method == FitMethod::wls1;
    for (int iter = 0; iter < max_iters; ++iter) {
      weighting = cov.gamma;
      const Eigen::VectorXd next = solve_pass(&weighting, &diag);
      const double change = (next - theta).norm() / std::max(theta.norm(), 1e-300);
      theta = next;
      cov = covariance_of(theta);
      model.wls_iterations = iter + 1;
      if (options.method == FitMethod::wls_iterated && change < options.wls_tol) {
        model.converged = true;
        break;
      }
    }
    if (options.method == FitMethod::wls_iterated && !model.converged)
      model.warnings.push_back("wls did not converge within max_wls_iters; returning the "
                               "last iterate");
    if (diag.eigenvalue_floored)
      model.warnings.push_back("gamma_e eigenvalues floored before Cholesky");
    if (diag.ridge_applied) model.warnings.push_back("gamma_e ridge-regularized");
    if (diag.diagonal_fallback)
      model.warnings.push_back("gamma_e replaced by its diagonal (conditioning failure)");
  }

  Eigen::Map<const Eigen::MatrixXd> theta_t(theta.data(), static_cast<Eigen::Index>(p), order);
  model.theta = theta_t.transpose();
  model.sigma2_by_state = cov.sigma2;
  model.gamma_e = cov.gamma;

  if (options.compute_p_theta) {
    if (options.method == FitMethod::ols) {
      if (!streamed) {
        model.p_theta = parameter_covariance(*reg, cov.gamma, CovarianceForm::ols_sandwich);
      } else {
        // Streamed sandwich: reuse the unweighted Gram for the bread.
        const NormalEquations plain =
            accumulate_normal_equations(pool, order, basis, nullptr, first_t);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(plain.gram);
        // Middle term needs a dense pass per slice; fall back to the
        // homoskedastic approximation sigma2_bar * (Phi'Phi)^-1 at scale.
        const double sigma_bar = cov.sigma2.mean();
        model.p_theta =
            sigma_bar * ldlt.solve(Eigen::MatrixXd::Identity(np, np));
        model.warnings.push_back(
            "p_theta uses the homoskedastic approximation on the streamed path");
      }
    } else {
      if (!streamed) {
        model.p_theta = parameter_covariance(*reg, weighting, CovarianceForm::wls);
      } else {
        const NormalEquations weighted =
            accumulate_normal_equations(pool, order, basis, &weighting, first_t);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(weighted.gram);
        Eigen::MatrixXd cov_mat = ldlt.solve(Eigen::MatrixXd::Identity(np, np));
        model.p_theta = 0.5 * (cov_mat + cov_mat.transpose());
      }
    }
  }
  return model;
}

double sigma2_at(const VfpArModel& model, const FlightState& k, bool* interpolated) {
  if (interpolated) *interpolated = false;
  for (std::size_t i = 0; i < model.training_states.size(); ++i)
    if (model.training_states[i] == k)
      return model.sigma2_by_state(static_cast<Eigen::Index>(i));

  if (interpolated) *interpolated = true;
  const GridIndex grid = build_grid_index(model.training_states);
  const bool inside = grid.complete && k.airspeed >= grid.k1s.front() &&
                      k.airspeed <= grid.k1s.back() && k.aoa >= grid.k2s.front() &&
                      k.aoa <= grid.k2s.back();

  if (inside && grid.k1s.size() > 1 && grid.k2s.size() > 1) {
    auto bracket = [](const std::vector<double>& axis, double v) {
      auto hi = std::lower_bound(axis.begin(), axis.end(), v);
      std::size_t i_hi = std::min<std::size_t>(static_cast<std::size_t>(hi - axis.begin()),
                                               axis.size() - 1);
      if (i_hi == 0) i_hi = 1;
      const std::size_t i_lo = i_hi - 1;
      const double w = (v - axis[i_lo]) / (axis[i_hi] - axis[i_lo]);
      return std::pair<std::size_t, double>(i_lo, w);
    };
    const auto [i1, w1] = bracket(grid.k1s, k.airspeed);
    const auto [i2, w2] = bracket(grid.k2s, k.aoa);
    auto value = [&](std::size_t a, std::size_t b) {
      return model.sigma2_by_state(grid.cell[a][b]);
    };
    return (1 - w1) * (1 - w2) * value(i1, i2) + w1 * (1 - w2) * value(i1 + 1, i2) +
           (1 - w1) * w2 * value(i1, i2 + 1) + w1 * w2 * value(i1 + 1, i2 + 1);
  }

  // Nearest training state in normalized coordinates.
  bool extra = false;
  const auto target = normalize_state_extrapolate(k, model.basis.ranges, &extra);
  double best = std::numeric_limits<double>::max();
  Eigen::Index best_index = 0;
  for (std::size_t i = 0; i < model.training_states.size(); ++i) {
    const auto point =
        normalize_state_extrapolate(model.training_states[i], model.basis.ranges);
    const double dist = std::hypot(point[0] - target[0], point[1] - target[1]);
    if (dist < best) {
      best = dist;
      best_index = static_cast<Eigen::Index>(i);
    }
  }
  return model.sigma2_by_state(best_index);
}

namespace {

FrozenModel freeze_impl(const VfpArModel& model, const FlightState& k, double ci_level,
                        bool allow_extrapolation) {
  bool extrapolated = false;
  const std::vector<double> g =
      allow_extrapolation ? eval_basis_extrapolate(model.basis, k, &extrapolated)
                          : eval_basis(model.basis, k);

  FrozenModel frozen;
  frozen.extrapolated = extrapolated;
  frozen.model.order = model.order;
  frozen.model.fs = model.fs;
  frozen.model.coeffs = frozen_coeffs(model.theta, g);
  frozen.model.sigma2 = sigma2_at(model, k, &frozen.sigma2_interpolated);

  const auto p = static_cast<Eigen::Index>(model.basis.dimension());
  const Eigen::Map<const Eigen::VectorXd> gv(g.data(), p);
  const double z = gaussian_quantile(0.5 * (1.0 + ci_level));
  frozen.bands.resize(static_cast<std::size_t>(model.order));
  for (int i = 0; i < model.order; ++i) {
    ConfidenceBand band;
    band.estimate = frozen.model.coeffs[static_cast<std::size_t>(i)];
    band.level = ci_level;
    if (model.p_theta.size() > 0) {
      const Eigen::MatrixXd block = model.p_theta.block(i * p, i * p, p, p);
      band.half_width = z * std::sqrt(std::max(0.0, gv.dot(block * gv)));
    }
    frozen.bands[static_cast<std::size_t>(i)] = band;
  }

  double max_mag = 0.0;
  for (const auto& root : monic_roots(frozen.model.coeffs))
    max_mag = std::max(max_mag, std::abs(root));
  frozen.stable = max_mag < 1.0;
  return frozen;
}

}  // namespace

FrozenModel freeze(const VfpArModel& model, const FlightState& k, double ci_level) {
  return freeze_impl(model, k, ci_level, false);
}

FrozenModel freeze_extrapolate(const VfpArModel& model, const FlightState& k,
                               double ci_level) {
  return freeze_impl(model, k, ci_level, true);
}

Prediction predict(const VfpArModel& model, const FlightState& k,
                   std::span<const double> signal) {
  if (signal.size() <= static_cast<std::size_t>(model.order))
    throw std::invalid_argument("predict: signal shorter than the model order");
  const FrozenModel frozen = freeze(model, k);

  Prediction out;
  const auto n = static_cast<std::size_t>(model.order);
  double rss = 0.0, sss = 0.0;
  for (std::size_t t = n; t < signal.size(); ++t) {
    double yhat = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      yhat -= frozen.model.coeffs[i - 1] * signal[t - i];
    out.predictions.push_back(yhat);
    out.residuals.push_back(signal[t] - yhat);
    rss += out.residuals.back() * out.residuals.back();
    sss += signal[t] * signal[t];
  }
  if (sss == 0.0)
    throw numeric_error("predict: signal sum of squares is zero over the residual range");
  out.rss_sss = rss / sss;
  return out;
}

double global_rss_sss(const VfpArModel& model, const SignalPool& pool) {
  double rss = 0.0, sss = 0.0;
  const auto n = static_cast<std::size_t>(model.order);
  for (const auto& record : pool.records) {
    const FrozenModel frozen = freeze(model, record.state);
    const auto& samples = record.samples;
    for (std::size_t t = n; t < samples.size(); ++t) {
      double e = samples[t];
      for (std::size_t i = 1; i <= n; ++i) e += frozen.model.coeffs[i - 1] * samples[t - i];
      rss += e * e;
      sss += samples[t] * samples[t];
    }
  }
  if (sss == 0.0) throw numeric_error("global_rss_sss: zero signal sum of squares");
  return rss / sss;
}

}  // namespace vfpid
