#include "vfpid/ar.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vfpid/numeric.hpp"

namespace vfpid {

namespace {

// LS fit on rows t = first_t..N (1-based), conditioning on earlier samples.
ArModel fit_ar_range(std::span<const double> signal, int order, double fs, int first_t) {
  const auto n = static_cast<std::size_t>(order);
  const std::size_t total = signal.size();
  if (order < 1) throw std::invalid_argument("fit_ar: order must be >= 1");
  if (total <= 2 * n + 1)
    throw std::invalid_argument("fit_ar: signal length must exceed 2*order + 1");
  if (first_t < order + 1) throw std::invalid_argument("fit_ar: first_t below order + 1");

  bool all_zero = true;
  for (double v : signal)
    if (v != 0.0) {
      all_zero = false;
      break;
    }
  if (all_zero) throw numeric_error("fit_ar: degenerate input (identically zero signal)");

  const std::size_t rows = total - static_cast<std::size_t>(first_t) + 1;
  if (rows < n) throw std::invalid_argument("fit_ar: not enough rows for the requested order");
  Eigen::MatrixXd phi(rows, order);
  Eigen::VectorXd y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = static_cast<std::size_t>(first_t) + r;  // 1-based
    y(static_cast<Eigen::Index>(r)) = signal[t - 1];
    for (std::size_t i = 1; i <= n; ++i)
      phi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i - 1)) =
          -signal[t - 1 - i];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(phi);
  if (qr.rank() < order)
    throw numeric_error("fit_ar: degenerate input (rank-deficient regressor, rank " +
                        std::to_string(qr.rank()) + " of " + std::to_string(order) + ")");
  Eigen::VectorXd coeffs = qr.solve(y);

  ArModel model;
  model.order = order;
  model.fs = fs;
  model.coeffs.assign(coeffs.data(), coeffs.data() + order);
  const double rss = (y - phi * coeffs).squaredNorm();
  model.sigma2 = rss / static_cast<double>(rows);
  return model;
}

}  // namespace

ArModel fit_ar(std::span<const double> signal, int order, double fs) {
  return fit_ar_range(signal, order, fs, order + 1);
}

std::vector<double> ar_residuals(const ArModel& model, std::span<const double> signal) {
  const auto n = static_cast<std::size_t>(model.order);
  if (signal.size() <= n)
    throw std::invalid_argument("ar_residuals: signal shorter than the model order");
  std::vector<double> residuals;
  residuals.reserve(signal.size() - n);
  for (std::size_t t = n; t < signal.size(); ++t) {
    double e = signal[t];
    for (std::size_t i = 1; i <= n; ++i) e += model.coeffs[i - 1] * signal[t - i];
    residuals.push_back(e);
  }
  return residuals;
}

double rss_sss(const ArModel& model, std::span<const double> signal) {
  const auto n = static_cast<std::size_t>(model.order);
  const std::vector<double> residuals = ar_residuals(model, signal);
  double rss = 0.0, sss = 0.0;
  for (double e : residuals) rss += e * e;
  for (std::size_t t = n; t < signal.size(); ++t) sss += signal[t] * signal[t];
  if (sss == 0.0)
    throw numeric_error("rss_sss: signal sum of squares is zero over the residual range");
  return rss / sss;
}

double bic_value(std::size_t n_eff, double sigma2, std::size_t n_params) {
  if (n_eff == 0) throw std::invalid_argument("bic_value: empty effective sample");
  if (sigma2 < 0.0) throw std::invalid_argument("bic_value: negative variance");
  if (sigma2 == 0.0) return -std::numeric_limits<double>::infinity();  // degenerate fit
  const double n = static_cast<double>(n_eff);
  return n * std::log(sigma2) + static_cast<double>(n_params) * std::log(n);
}

double bic(const ArModel& model, std::span<const double> signal) {
  const std::vector<double> residuals = ar_residuals(model, signal);
  double rss = 0.0;
  for (double e : residuals) rss += e * e;
  const std::size_t n_eff = residuals.size();
  return bic_value(n_eff, rss / static_cast<double>(n_eff),
                   static_cast<std::size_t>(model.order));
}

std::vector<OrderScanEntry> order_scan(std::span<const double> signal, double fs, int n_min,
                                       int n_max, int step) {
  if (n_min < 1 || n_max < n_min || step < 1)
    throw std::invalid_argument("order_scan: invalid order grid");
  if (static_cast<std::size_t>(n_max) >= signal.size() / 2)
    throw std::invalid_argument("order_scan: n_max must stay below half the signal length");

  // All orders share the sample range t = n_max+1..N so the model classes are
  // nested and RSS/SSS cannot increase with the order.
  const int first_t = n_max + 1;
  const std::size_t rows = signal.size() - static_cast<std::size_t>(n_max);
  double sss = 0.0;
  for (std::size_t t = static_cast<std::size_t>(n_max); t < signal.size(); ++t)
    sss += signal[t] * signal[t];

  std::vector<OrderScanEntry> entries;
  for (int n = n_min; n <= n_max; n += step) {
    const ArModel model = fit_ar_range(signal, n, fs, first_t);
    double rss = 0.0;
    for (std::size_t t = static_cast<std::size_t>(n_max); t < signal.size(); ++t) {
      double e = signal[t];
      for (int i = 1; i <= n; ++i) e += model.coeffs[static_cast<std::size_t>(i - 1)] *
                                        signal[t - static_cast<std::size_t>(i)];
      rss += e * e;
    }
    OrderScanEntry entry;
    entry.order = n;
    entry.rss_sss = rss / sss;
    entry.bic = bic_value(rows, rss / static_cast<double>(rows), static_cast<std::size_t>(n));
    entries.push_back(entry);
  }
  return entries;
}

ModalSet modal(const ArModel& model) {
  for (double c : model.coeffs)
    if (!std::isfinite(c)) throw std::invalid_argument("modal: non-finite coefficient");

  int origin = 0;
  const std::vector<std::complex<double>> roots = monic_roots(model.coeffs, &origin);

  ModalSet set;
  set.skipped_roots = origin;
  for (const auto& lambda : roots) {
    const double mag = std::abs(lambda);
    if (mag < 1e-12) {  // numerically at the origin
      ++set.skipped_roots;
      continue;
    }
    const double im = lambda.imag();
    if (im < -1e-12 * std::max(1.0, mag)) continue;  // conjugate partner reported once
    Mode mode;
    if (std::abs(im) <= 1e-12 * std::max(1.0, mag) && lambda.real() > 0.0) {
      // Real positive pole: overdamped convention.
      mode.frequency_hz = 0.0;
      mode.damping_ratio = 1.0;
    } else {
      const double re_s = model.fs * std::log(mag);
      const double im_s = model.fs * std::abs(std::arg(lambda));
      mode.frequency_hz = im_s / (2.0 * std::numbers::pi);
      mode.damping_ratio = -re_s / std::hypot(re_s, im_s);
    }
    set.modes.push_back(mode);
  }
  std::sort(set.modes.begin(), set.modes.end(),
            [](const Mode& a, const Mode& b) { return a.frequency_hz < b.frequency_hz; });
  return set;
}

std::vector<StabilizationEntry> stabilization_diagram(std::span<const double> signal,
                                                      double fs, int n_min, int n_max,
                                                      const StabilizationOptions& opts) {
  if (n_min < 1 || n_max < n_min)
    throw std::invalid_argument("stabilization_diagram: invalid order range");
  std::vector<StabilizationEntry> diagram;
  const ModalSet* previous = nullptr;
  std::vector<ModalSet> kept;
  kept.reserve(static_cast<std::size_t>(n_max - n_min + 1));
  for (int n = n_min; n <= n_max; ++n) {
    const ArModel model = fit_ar(signal, n, fs);
    kept.push_back(modal(model));
    const ModalSet& current = kept.back();
    StabilizationEntry entry;
    entry.order = n;
    entry.modes = current.modes;
    entry.stable.assign(current.modes.size(), false);
    if (previous) {
      const double nyquist = 0.5 * fs;
      for (std::size_t m = 0; m < current.modes.size(); ++m) {
        const Mode& mode = current.modes[m];
        // Only oscillatory modes can stabilize: overdamped (f = 0) and
        // Nyquist real poles sit at fixed frequencies by convention, which
        // would make the variation criteria vacuous.
        if (mode.frequency_hz <= 0.0 || mode.frequency_hz >= nyquist * (1.0 - 1e-12))
          continue;
        for (const Mode& prev : previous->modes) {
          const double f_scale = std::max(prev.frequency_hz, 1e-12);
          const double d_scale = std::max(std::abs(prev.damping_ratio), 1e-12);
          if (std::abs(mode.frequency_hz - prev.frequency_hz) < opts.freq_tol * f_scale &&
              std::abs(mode.damping_ratio - prev.damping_ratio) < opts.damp_tol * d_scale) {
            entry.stable[m] = true;
            break;
          }
        }
      }
    }
    diagram.push_back(std::move(entry));
    previous = &kept.back();
  }
  return diagram;
}

WhitenessReport whiteness(std::span<const double> residuals, int max_lag, double ci_level) {
  if (max_lag < 1) throw std::invalid_argument("whiteness: max_lag must be >= 1");
  if (residuals.size() < static_cast<std::size_t>(10 * max_lag))
    throw std::invalid_argument("whiteness: need at least 10*max_lag residuals");
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw std::invalid_argument("whiteness: ci_level must be in (0,1)");

  const std::size_t n = residuals.size();
  double mean = 0.0;
  for (double e : residuals) mean += e;
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (double e : residuals) denom += (e - mean) * (e - mean);
  if (denom == 0.0) throw numeric_error("whiteness: zero-variance residuals");

  WhitenessReport report;
  report.acf.resize(static_cast<std::size_t>(max_lag) + 1);
  report.acf[0] = 1.0;
  for (int lag = 1; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t t = static_cast<std::size_t>(lag); t < n; ++t)
      s += (residuals[t] - mean) * (residuals[t - static_cast<std::size_t>(lag)] - mean);
    report.acf[static_cast<std::size_t>(lag)] = s / denom;
  }
  report.bound = gaussian_quantile(0.5 * (1.0 + ci_level)) / std::sqrt(static_cast<double>(n));
  int exceed = 0;
  for (int lag = 1; lag <= max_lag; ++lag)
    if (std::abs(report.acf[static_cast<std::size_t>(lag)]) > report.bound) ++exceed;
  report.exceed_fraction = static_cast<double>(exceed) / static_cast<double>(max_lag);
  report.pass = report.exceed_fraction <= (1.0 - ci_level) + 0.02;
  return report;
}

}  // namespace vfpid
