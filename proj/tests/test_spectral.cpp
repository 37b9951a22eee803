#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "vfpid/spectral.hpp"

using namespace vfpid;
using test_helpers::ar2_from_pole;
using test_helpers::simulate_ar;

namespace {

SignalRecord noise_record(double sigma, std::size_t n, double fs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  SignalRecord record{{10.0, 0.0}, std::vector<double>(n), fs};
  for (double& v : record.samples) v = dist(rng);
  return record;
}

// Analytic peak frequency of an AR(2) spectrum with conjugate poles
// r e^{+-j theta}: cos w = -a1 (1 + a2) / (4 a2).
double ar2_peak_hz(double radius, double freq_hz, double fs) {
  const std::vector<double> c = ar2_from_pole(radius, freq_hz, fs);
  const double cos_w = -c[0] * (1.0 + c[1]) / (4.0 * c[1]);
  return std::acos(std::clamp(cos_w, -1.0, 1.0)) * fs / (2.0 * std::numbers::pi);
}

}  // namespace

TEST_SUITE_BEGIN("spectral");

TEST_CASE("welch psd level and variance recovery for white noise") {
  const SignalRecord record = noise_record(1.0, 120000, 200.0, 9001);
  const PsdEstimate psd = welch_psd(record, 1024, 0.5);
  // One-sided density of unit-variance white noise over 100 Hz: 0.01 V^2/Hz.
  double level = 0.0;
  for (std::size_t k = 1; k + 1 < psd.values.size(); ++k) level += psd.values[k];
  level /= static_cast<double>(psd.values.size() - 2);
  CHECK(level == doctest::Approx(0.01).epsilon(0.10));

  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < psd.values.size(); ++k)
    integral += 0.5 * (psd.values[k] + psd.values[k + 1]) * psd.resolution;
  double variance = 0.0;
  for (double v : record.samples) variance += v * v;
  variance /= static_cast<double>(record.samples.size());
  CHECK(integral == doctest::Approx(variance).epsilon(0.05));
}

TEST_CASE("welch psd peaks at a sinusoid's frequency") {
  SignalRecord record{{10.0, 0.0}, std::vector<double>(20000), 200.0};
  for (std::size_t t = 0; t < record.samples.size(); ++t)
    record.samples[t] =
        std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(t) / 200.0);
  const PsdEstimate psd = welch_psd(record, 2000, 0.5);
  const auto peak =
      std::max_element(psd.values.begin(), psd.values.end()) - psd.values.begin();
  CHECK(psd.freqs[static_cast<std::size_t>(peak)] == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(psd.resolution == 200.0 / 2000.0);
}

TEST_CASE("welch reports resolution fs/window_len") {
  const SignalRecord record = noise_record(1.0, 20000, 1000.0, 77);
  const PsdEstimate psd = welch_psd(record, 5096, 0.9);
  // fs/window_len, not the paper's 0.24 Hz figure (documented mismatch).
  CHECK(psd.resolution == doctest::Approx(1000.0 / 5096.0).epsilon(1e-12));
}

TEST_CASE("welch psd scales quadratically") {
  const SignalRecord record = noise_record(1.0, 30000, 200.0, 31);
  SignalRecord scaled = record;
  for (double& v : scaled.samples) v *= 3.0;
  const PsdEstimate base = welch_psd(record, 512, 0.5);
  const PsdEstimate big = welch_psd(scaled, 512, 0.5);
  for (std::size_t k = 0; k < base.values.size(); ++k)
    CHECK(big.values[k] == doctest::Approx(9.0 * base.values[k]).epsilon(1e-12));
}

TEST_CASE("welch equals the segment-periodogram average in any order") {
  const SignalRecord record = noise_record(1.0, 4096, 100.0, 55);
  const std::size_t window_len = 512;
  const PsdEstimate psd = welch_psd(record, window_len, 0.5);

  // Oracle: per-segment periodograms averaged in reverse order.
  std::vector<double> window(window_len);
  double window_power = 0.0;
  for (std::size_t i = 0; i < window_len; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                       static_cast<double>(window_len - 1));
    window_power += window[i] * window[i];
  }
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + window_len <= record.samples.size(); s += window_len / 2)
    starts.push_back(s);
  std::reverse(starts.begin(), starts.end());
  std::vector<double> acc(window_len / 2 + 1, 0.0);
  for (std::size_t start : starts) {
    for (std::size_t k = 0; k < acc.size(); ++k) {
      std::complex<double> x(0.0, 0.0);
      for (std::size_t i = 0; i < window_len; ++i)
        x += record.samples[start + i] * window[i] *
             std::exp(std::complex<double>(0.0, -2.0 * std::numbers::pi *
                                                    static_cast<double>(k * i) /
                                                    static_cast<double>(window_len)));
      acc[k] += std::norm(x);
    }
  }
  const double scale =
      1.0 / (record.fs * window_power * static_cast<double>(starts.size()));
  for (std::size_t k = 0; k < acc.size(); ++k) {
    double expected = acc[k] * scale;
    if (k != 0 && k != acc.size() - 1) expected *= 2.0;
    CHECK(psd.values[k] == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("welch input validation") {
  const SignalRecord record = noise_record(1.0, 1000, 100.0, 3);
  CHECK_THROWS_AS(welch_psd(record, 2000, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(welch_psd(record, 512, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(welch_psd(record, 900, 0.0), std::invalid_argument);  // one segment
}

TEST_CASE("frf magnitude peak matches the analytic AR(2) peak") {
  ArModel model;
  model.order = 2;
  model.fs = 200.0;
  model.sigma2 = 1.0;
  model.coeffs = ar2_from_pole(0.95, 8.5, 200.0);
  const std::vector<double> freqs = inclusive_grid(0.1, 40.0, 0.01);
  const std::vector<double> mags = frf_magnitude(model, freqs);
  const auto peak = std::max_element(mags.begin(), mags.end()) - mags.begin();
  const double peak_hz = freqs[static_cast<std::size_t>(peak)];
  CHECK(peak_hz == doctest::Approx(ar2_peak_hz(0.95, 8.5, 200.0)).epsilon(0.002));
  // At a lower rate the resonance is sharp relative to its frequency and the
  // peak sits within 0.1 Hz of the pole frequency.
  ArModel slow;
  slow.order = 2;
  slow.fs = 100.0;
  slow.sigma2 = 1.0;
  slow.coeffs = ar2_from_pole(0.95, 8.5, 100.0);
  const std::vector<double> mags_slow = frf_magnitude(slow, freqs);
  const auto peak_slow =
      std::max_element(mags_slow.begin(), mags_slow.end()) - mags_slow.begin();
  CHECK(std::abs(freqs[static_cast<std::size_t>(peak_slow)] - 8.5) <= 0.1);
}

TEST_CASE("frf of the zero model is flat unity") {
  ArModel model;
  model.order = 2;
  model.fs = 200.0;
  model.sigma2 = 1.0;
  model.coeffs = {0.0, 0.0};
  for (double mag : frf_magnitude(model, std::vector<double>{0.0, 5.0, 42.0, 99.9}))
    CHECK(mag == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("frf magnitude is continuous in the flight state") {
  const SimSpec spec = test_helpers::linear_truth_spec(1, 100);
  const VfpArModel& model = spec.model;
  const std::vector<double> freqs = inclusive_grid(0.5, 50.0, 0.5);
  const std::vector<double> base = frf_magnitude(model, {1.0, 1.0}, freqs);
  const std::vector<double> perturbed = frf_magnitude(model, {1.0 + 2e-6, 1.0}, freqs);
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK(std::abs(perturbed[i] - base[i]) / base[i] < 1e-3);
}

TEST_CASE("parametric psd agrees with welch at mode peaks") {
  const double fs = 200.0;
  const std::vector<double> coeffs = ar2_from_pole(0.9, 8.0, fs);
  const auto samples = simulate_ar(coeffs, 1.0, 50000, 606);
  ArModel model;
  model.order = 2;
  model.fs = fs;
  model.sigma2 = 1.0;
  model.coeffs = coeffs;

  const SignalRecord record{{10.0, 0.0}, samples, fs};
  const PsdEstimate welch = welch_psd(record, 2048, 0.9);
  const std::vector<double> parametric = parametric_psd(model, welch.freqs);

  const auto peak =
      std::max_element(welch.values.begin(), welch.values.end()) - welch.values.begin();
  const double welch_db = 10.0 * std::log10(welch.values[static_cast<std::size_t>(peak)]);
  const auto ppeak =
      std::max_element(parametric.begin(), parametric.end()) - parametric.begin();
  const double param_db = 10.0 * std::log10(parametric[static_cast<std::size_t>(ppeak)]);
  CHECK(std::abs(welch_db - param_db) < 1.0);
}

TEST_CASE("frf surface grids, single-point sweeps, and constant ridges") {
  CHECK(inclusive_grid(0.1, 80.0, 0.01).size() == 7991);
  CHECK(inclusive_grid(9.0, 17.0, 0.1).size() == 81);

  // k-independent mode: constant-frequency ridge across the sweep.
  VfpArModel model;
  model.order = 2;
  model.fs = 200.0;
  model.basis = complete_basis(1, Ranges{{9.0, 17.0}, {0.0, 15.0}});
  model.theta = Eigen::MatrixXd(2, 1);
  const std::vector<double> coeffs = ar2_from_pole(0.9, 12.0, 200.0);
  model.theta << coeffs[0], coeffs[1];
  model.training_states = {{9.0, 0.0}, {17.0, 0.0}};
  model.sigma2_by_state = Eigen::VectorXd::Constant(2, 1.0);
  model.gamma_e = model.sigma2_by_state.asDiagonal();

  SweepSpec sweep;
  sweep.variable = SweepVariable::airspeed;
  sweep.from = 9.0;
  sweep.to = 17.0;
  sweep.step = 0.5;
  sweep.fixed_value = 0.0;
  const FreqGrid freq{1.0, 40.0, 0.05};
  const FrfSurface surface = frf_surface(model, sweep, freq);
  REQUIRE(surface.state_axis.size() == 17);
  REQUIRE(surface.freq_axis.size() == 781);

  double first_peak = 0.0;
  for (Eigen::Index r = 0; r < surface.magnitudes_db.rows(); ++r) {
    Eigen::Index peak = 0;
    surface.magnitudes_db.row(r).maxCoeff(&peak);
    const double peak_hz = surface.freq_axis[static_cast<std::size_t>(peak)];
    if (r == 0)
      first_peak = peak_hz;
    else
      CHECK(std::abs(peak_hz - first_peak) <= freq.step + 1e-12);
  }

  SweepSpec point = sweep;
  point.to = 9.0;
  const FrfSurface single = frf_surface(model, point, freq);
  REQUIRE(single.state_axis.size() == 1);
  const std::vector<double> direct =
      frf_magnitude(model, {9.0, 0.0}, single.freq_axis);
  for (std::size_t c = 0; c < single.freq_axis.size(); ++c)
    CHECK(single.magnitudes_db(0, static_cast<Eigen::Index>(c)) ==
          doctest::Approx(20.0 * std::log10(direct[c])).epsilon(1e-12));
}

TEST_CASE("frf at a training state equals the independently frozen model") {
  const SimSpec spec = test_helpers::linear_truth_spec(2, 100);
  const std::vector<double> freqs = inclusive_grid(0.5, 60.0, 0.25);
  const std::vector<double> via_model = frf_magnitude(spec.model, {1.0, 1.0}, freqs);
  const FrozenModel frozen = freeze(spec.model, {1.0, 1.0});
  const std::vector<double> via_frozen = frf_magnitude(frozen.model, freqs);
  for (std::size_t i = 0; i < freqs.size(); ++i) CHECK(via_model[i] == via_frozen[i]);
}

TEST_SUITE_END();
