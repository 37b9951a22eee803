#include "vfpid/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vfpid/numeric.hpp"

namespace vfpid {

namespace {

int default_max_lag(std::size_t residual_len) {
  return std::max(1, static_cast<int>(std::min<std::size_t>(50, residual_len / 10)));
}

struct TrialQuality {
  double rss_sss = 0.0;
  double whiteness_pass_fraction = 0.0;
};

// Residual quality and per-state whiteness for one fitted trial, evaluated on
// the trial's own conditioning range.
TrialQuality trial_quality(const VfpArModel& model, const SignalPool& pool, int first_t,
                           const GateOptions& gates) {
  TrialQuality quality;
  double rss = 0.0, sss = 0.0;
  std::size_t tested = 0, passed = 0;
  for (const auto& record : pool.records) {
    const FrozenModel frozen = freeze(model, record.state);
    const auto& samples = record.samples;
    std::vector<double> residuals;
    residuals.reserve(samples.size() - static_cast<std::size_t>(first_t) + 1);
    for (std::size_t t = static_cast<std::size_t>(first_t) - 1; t < samples.size(); ++t) {
      double e = samples[t];
      for (std::size_t i = 1; i <= static_cast<std::size_t>(model.order); ++i)
        e += frozen.model.coeffs[i - 1] * samples[t - i];
      residuals.push_back(e);
      rss += e * e;
      sss += samples[t] * samples[t];
    }
    const int max_lag = gates.whiteness_max_lag > 0 ? gates.whiteness_max_lag
                                                    : default_max_lag(residuals.size());
    try {
      const WhitenessReport report = whiteness(residuals, max_lag, gates.whiteness_ci);
      ++tested;
      if (report.pass) ++passed;
    } catch (const numeric_error&) {
      // Zero-variance residuals: state excluded from the whiteness tally.
    }
  }
  quality.rss_sss = sss > 0.0 ? rss / sss : 0.0;
  quality.whiteness_pass_fraction =
      tested > 0 ? static_cast<double>(passed) / static_cast<double>(tested) : 0.0;
  return quality;
}

SelectionReport finish_report(std::vector<SelectionTrial> trials) {
  SelectionReport report;
  report.trials = std::move(trials);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& trial : report.trials) {
    if (!trial.passed_gates) continue;
    if (trial.bic < best) {  // strict: ties keep the earlier (smaller) trial
      best = trial.bic;
      report.chosen = {trial.order, trial.p};
    }
  }
  if (!report.chosen)
    report.diagnostic =
        "no trial passed the validation gates; inspect whiteness fractions and consider "
        "--no-gate or a wider structure grid";
  return report;
}

}  // namespace

double pooled_bic(const Eigen::VectorXd& sigma2_by_state, std::size_t n_eff,
                  std::size_t n_params) {
  const double n = static_cast<double>(n_eff);
  double value = 0.0;
  for (Eigen::Index i = 0; i < sigma2_by_state.size(); ++i) {
    const double s2 = sigma2_by_state(i);
    if (s2 <= 0.0) return -std::numeric_limits<double>::infinity();
    value += n * std::log(s2);
  }
  value += static_cast<double>(n_params) *
           std::log(static_cast<double>(sigma2_by_state.size()) * n);
  return value;
}

SelectionReport select_basis_dim(const SignalPool& pool, int order, int p_max,
                                 const GateOptions& gates) {
  if (p_max < 1) throw std::invalid_argument("select_basis_dim: p_max must be >= 1");
  const int first_t = order + 1;
  const std::size_t n_eff = pool.n_samples - static_cast<std::size_t>(order);

  std::vector<SelectionTrial> trials;
  for (int p = 1; p <= p_max; ++p) {
    const BasisSpec basis = complete_basis(p, infer_ranges(pool));
    VfpFitOptions options;
    options.method = gates.scan_method;
    options.compute_p_theta = false;
    const VfpArModel model = fit_vfp(pool, order, basis, options);
    const TrialQuality quality = trial_quality(model, pool, first_t, gates);

    SelectionTrial trial;
    trial.order = order;
    trial.p = p;
    trial.bic = pooled_bic(model.sigma2_by_state, n_eff, model.n_params());
    trial.rss_sss = quality.rss_sss;
    trial.converged = model.converged;
    trial.whiteness_pass_fraction = quality.whiteness_pass_fraction;
    trial.passed_gates = trial.converged &&
                         quality.whiteness_pass_fraction >= gates.whiteness_pass_fraction;
    trials.push_back(trial);
  }
  return finish_report(std::move(trials));
}

SelectionReport select_order_global(const SignalPool& pool, const BasisSpec& basis,
                                    const std::vector<int>& n_grid,
                                    const GateOptions& gates) {
  if (n_grid.empty()) throw std::invalid_argument("select_order_global: empty order grid");
  const int n_max = *std::max_element(n_grid.begin(), n_grid.end());
  if (static_cast<std::size_t>(n_max) >= pool.n_samples / 2)
    throw std::invalid_argument(
        "select_order_global: max order must stay below half the record length");
  // Common conditioning range keeps the trials nested across orders.
  const int first_t = n_max + 1;
  const std::size_t n_eff = pool.n_samples - static_cast<std::size_t>(n_max);

  std::vector<SelectionTrial> trials;
  for (int order : n_grid) {
    VfpFitOptions options;
    options.method = gates.scan_method;
    options.compute_p_theta = false;
    options.first_t = first_t;
    const VfpArModel model = fit_vfp(pool, order, basis, options);
    const TrialQuality quality = trial_quality(model, pool, first_t, gates);

    SelectionTrial trial;
    trial.order = order;
    trial.p = static_cast<int>(basis.dimension());
    trial.bic = pooled_bic(model.sigma2_by_state, n_eff, model.n_params());
    trial.rss_sss = quality.rss_sss;
    trial.converged = model.converged;
    trial.whiteness_pass_fraction = quality.whiteness_pass_fraction;
    trial.passed_gates = trial.converged &&
                         quality.whiteness_pass_fraction >= gates.whiteness_pass_fraction;
    trials.push_back(trial);
  }
  return finish_report(std::move(trials));
}

ValidationReport validate(const VfpArModel& model, const SignalPool& pool, double ci_level,
                          int max_lag) {
  ValidationReport report;
  std::size_t tested = 0, passed = 0;
  for (const auto& record : pool.records) {
    const Prediction prediction = predict(model, record.state, record.samples);
    report.states.push_back(record.state);

    const int lag = max_lag > 0 ? max_lag : default_max_lag(prediction.residuals.size());
    bool excluded = false;
    WhitenessReport white;
    try {
      white = whiteness(prediction.residuals, lag, ci_level);
      ++tested;
      if (white.pass) ++passed;
    } catch (const numeric_error& err) {
      excluded = true;
      report.warnings.push_back("state " + to_string(record.state) +
                                " excluded from whiteness: " + err.what());
    }
    report.whiteness.push_back(std::move(white));
    report.excluded.push_back(excluded);

    NormalityScreen screen;
    if (prediction.residuals.size() >= 4) {
      const MomentScreen moments = sample_moments(prediction.residuals);
      screen.skewness = moments.skewness;
      screen.excess_kurtosis = moments.excess_kurtosis;
      screen.within_bounds =
          std::abs(screen.skewness) <= 0.5 && std::abs(screen.excess_kurtosis) <= 0.5;
    }
    report.normality.push_back(screen);
  }
  report.pass_fraction =
      tested > 0 ? static_cast<double>(passed) / static_cast<double>(tested) : 0.0;
  return report;
}

}  // namespace vfpid
