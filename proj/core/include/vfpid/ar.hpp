#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vfpid/types.hpp"

namespace vfpid {

/// Scalar AR(n) model: y[t] + a1 y[t-1] + ... + an y[t-n] = e[t],
/// e ~ iid N(0, sigma2).
struct ArModel {
  int order = 0;
  std::vector<double> coeffs;  // a1..an
  double sigma2 = 0.0;         // innovation variance
  double fs = 0.0;             // Hz
};

/// Least-squares AR fit conditioned on the first `order` samples: rows
/// t = order+1..N, solved by column-pivoted QR. Throws numeric_error for
/// degenerate input (zero signal, rank-deficient regressor).
ArModel fit_ar(std::span<const double> signal, int order, double fs);

/// One-step-ahead residuals e[t] = y[t] + sum_i a_i y[t-i], t = order+1..N.
std::vector<double> ar_residuals(const ArModel& model, std::span<const double> signal);

/// Residual sum of squares over t = order+1..N divided by the signal sum of
/// squares over the same range.
double rss_sss(const ArModel& model, std::span<const double> signal);

/// BIC in the Gaussian concentrated-likelihood form:
/// n_eff * ln(sigma2) + n_params * ln(n_eff). Returns -inf when sigma2 == 0
/// (degenerate, perfectly predicted signal).
double bic_value(std::size_t n_eff, double sigma2, std::size_t n_params);

/// bic_value applied to the model's residuals on `signal`
/// (n_eff = N - order, sigma2 = RSS/n_eff, n_params = order).
double bic(const ArModel& model, std::span<const double> signal);

struct OrderScanEntry {
  int order = 0;
  double bic = 0.0;
  double rss_sss = 0.0;
};

/// Fits AR(n) for n = n_min, n_min+step, ..., <= n_max. All orders share the
/// common sample range t = n_max+1..N so the model classes are exactly
/// nested and RSS/SSS is non-increasing in n.
std::vector<OrderScanEntry> order_scan(std::span<const double> signal, double fs,
                                       int n_min, int n_max, int step = 1);

/// One vibration mode: damped natural frequency (Hz) and damping ratio.
/// Real positive poles are reported with f = 0, zeta = 1 (overdamped).
struct Mode {
  double frequency_hz = 0.0;
  double damping_ratio = 0.0;
};

struct ModalSet {
  std::vector<Mode> modes;
  int skipped_roots = 0;  // roots at (numerically) the origin
};

/// Poles of the AR polynomial z^n + a1 z^{n-1} + ... + an mapped to the
/// s-plane via s = fs ln(lambda); conjugate pairs reported once.
ModalSet modal(const ArModel& model);

struct StabilizationOptions {
  double freq_tol = 0.01;   // relative frequency change vs previous order
  double damp_tol = 0.10;   // relative damping change vs previous order
};

struct StabilizationEntry {
  int order = 0;
  std::vector<Mode> modes;
  std::vector<bool> stable;  // one flag per mode; all false at the first order
};

/// Modal sets for n = n_min..n_max with per-mode stability flags relative to
/// the nearest mode of the previous order.
std::vector<StabilizationEntry> stabilization_diagram(std::span<const double> signal,
                                                      double fs, int n_min, int n_max,
                                                      const StabilizationOptions& opts = {});

struct WhitenessReport {
  std::vector<double> acf;  // lags 0..max_lag, acf[0] == 1
  double bound = 0.0;       // CI band half-width
  bool pass = false;
  double exceed_fraction = 0.0;  // lags 1..max_lag outside the band
};

/// Normalized sample ACF of the residuals with Gaussian confidence band
/// z_{(1+ci)/2}/sqrt(N); passes when the exceed fraction is at most
/// (1 - ci_level) + 0.02.
WhitenessReport whiteness(std::span<const double> residuals, int max_lag,
                          double ci_level);

}  // namespace vfpid
