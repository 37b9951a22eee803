#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "vfpid/numeric.hpp"
#include "vfpid/signal.hpp"

using namespace vfpid;
using test_helpers::rel_diff;

namespace {

SignalRecord record_of(std::vector<double> samples, double fs = 1000.0) {
  return SignalRecord{{10.0, 0.0}, std::move(samples), fs};
}

double magnitude_db(const FilterCoeffs& filter, double freq) {
  return 20.0 * std::log10(std::abs(sos_response(filter, freq)));
}

}  // namespace

TEST_SUITE_BEGIN("signal");

TEST_CASE("mean_correct analytic cases") {
  const auto constant = mean_correct(record_of({3.5, 3.5, 3.5, 3.5}));
  for (double v : constant.samples) CHECK(v == 0.0);

  const auto zero_mean = mean_correct(record_of({1.0, -1.0, 2.0, -2.0}));
  CHECK(zero_mean.samples == std::vector<double>{1.0, -1.0, 2.0, -2.0});

  const auto ramp = mean_correct(record_of({1.0, 2.0, 3.0}));
  CHECK(ramp.samples == std::vector<double>{-1.0, 0.0, 1.0});
}

TEST_CASE("mean_correct is idempotent and leaves a tiny mean") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(5.0, 2.0);
  std::vector<double> samples(4096);
  for (double& v : samples) v = noise(rng);
  const auto once = mean_correct(record_of(samples));
  const auto twice = mean_correct(once);
  double scale = 0.0, mean = 0.0;
  for (double v : once.samples) scale = std::max(scale, std::abs(v));
  for (double v : once.samples) mean += v;
  mean /= static_cast<double>(once.samples.size());
  CHECK(std::abs(mean) <= 1e-12 * scale);
  for (std::size_t i = 0; i < samples.size(); ++i)
    CHECK(std::abs(twice.samples[i] - once.samples[i]) <= 1e-15 * scale);
}

TEST_CASE("cheby2 design meets stopband and DC specs") {
  const FilterCoeffs filter = design_cheby2_lowpass(12, 80.0, 50.0, 1000.0);
  CHECK(magnitude_db(filter, 0.0) == doctest::Approx(0.0).epsilon(0.1));
  for (double f = 120.0; f <= 500.0; f += 1.0) CHECK(magnitude_db(filter, f) <= -50.0 + 1e-6);

  const FilterCoeffs gentle = design_cheby2_lowpass(2, 250.0, 40.0, 1000.0);
  CHECK(std::abs(magnitude_db(gentle, 0.0)) <= 0.1);  // |H(0)| = 1 within 0.1 dB
}

TEST_CASE("cheby2 design rejects invalid arguments") {
  CHECK_THROWS_AS(design_cheby2_lowpass(12, 600.0, 50.0, 1000.0), std::invalid_argument);
  CHECK_THROWS_AS(design_cheby2_lowpass(12, 500.0, 50.0, 1000.0), std::invalid_argument);
  CHECK_THROWS_AS(design_cheby2_lowpass(7, 80.0, 50.0, 1000.0), std::invalid_argument);
  CHECK_THROWS_AS(design_cheby2_lowpass(12, 80.0, -3.0, 1000.0), std::invalid_argument);
}

TEST_CASE("all designed sections are strictly stable") {
  for (int order : {2, 4, 8, 12}) {
    for (double cutoff_frac : {0.05, 0.1, 0.2, 0.4}) {
      for (double atten : {30.0, 50.0, 80.0}) {
        const FilterCoeffs filter =
            design_cheby2_lowpass(order, cutoff_frac * 1000.0, atten, 1000.0);
        CHECK(max_pole_magnitude(filter) < 1.0);
      }
    }
  }
}

TEST_CASE("decimate rate, identity, and amplitude preservation") {
  const FilterCoeffs filter = design_cheby2_lowpass(12, 80.0, 50.0, 1000.0);

  std::vector<double> sine(20000);
  for (std::size_t t = 0; t < sine.size(); ++t)
    sine[t] = std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(t) / 1000.0);
  const SignalRecord decimated = decimate(record_of(sine), filter, 5);
  CHECK(decimated.fs == 200.0);
  CHECK(decimated.samples.size() == sine.size() / 5);

  // Amplitude via RMS over the tail (skips the causal transient); the
  // analytically resampled sinusoid has unit amplitude.
  double ms = 0.0;
  const std::size_t tail_start = decimated.samples.size() / 2;
  for (std::size_t t = tail_start; t < decimated.samples.size(); ++t)
    ms += decimated.samples[t] * decimated.samples[t];
  ms /= static_cast<double>(decimated.samples.size() - tail_start);
  const double amplitude = std::sqrt(2.0 * ms);
  CHECK(amplitude == doctest::Approx(1.0).epsilon(0.02));

  const SignalRecord same = decimate(record_of({1.0, 2.0, 3.0, 4.0}),
                                     FilterCoeffs::unit(1000.0), 1);
  CHECK(same.samples == std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(same.fs == 1000.0);

  CHECK_THROWS_AS(decimate(record_of({1.0, 2.0}), filter, 0), std::invalid_argument);
  // Cutoff 80 Hz against a decimated Nyquist of 50 Hz.
  CHECK_THROWS_AS(decimate(record_of(sine), filter, 10), std::invalid_argument);
}

TEST_CASE("decimate preserves band-limited energy within 2 percent") {
  std::vector<double> banded(40000);
  for (std::size_t t = 0; t < banded.size(); ++t) {
    const double time = static_cast<double>(t) / 1000.0;
    banded[t] = std::sin(2.0 * std::numbers::pi * 7.0 * time) +
                0.5 * std::sin(2.0 * std::numbers::pi * 23.0 * time + 0.4) +
                0.25 * std::sin(2.0 * std::numbers::pi * 61.0 * time + 1.1);
  }
  const FilterCoeffs filter = design_cheby2_lowpass(12, 80.0, 50.0, 1000.0);
  const SignalRecord decimated = decimate(record_of(banded), filter, 5);

  auto tail_mean_square = [](const std::vector<double>& x) {
    double ms = 0.0;
    for (std::size_t t = x.size() / 2; t < x.size(); ++t) ms += x[t] * x[t];
    return ms / static_cast<double>(x.size() - x.size() / 2);
  };
  // Per-second energy = mean square; duration is unchanged by decimation.
  CHECK(rel_diff(tail_mean_square(banded), tail_mean_square(decimated.samples)) < 0.02);
}

TEST_CASE("energy_stats closed forms") {
  // Unit sinusoid, 0.5 s windows = 5 full periods at 10 Hz: energy = T/2.
  std::vector<double> sine(4000);
  for (std::size_t t = 0; t < sine.size(); ++t)
    sine[t] = std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(t) / 1000.0);
  const EnergyStats stats = energy_stats(record_of(sine), 0.5, 0.99);
  CHECK(stats.window_len == 500);
  CHECK(stats.means.size() == 8);
  for (double energy : stats.means) CHECK(energy == doctest::Approx(0.25).epsilon(0.01));

  const EnergyStats zeros = energy_stats(record_of(std::vector<double>(1000, 0.0)), 0.1, 0.99);
  for (double v : zeros.means) CHECK(v == 0.0);
  for (double v : zeros.std_devs) CHECK(v == 0.0);
}

TEST_CASE("energy_stats white-noise mean matches sigma^2 * window") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 2.0);  // sigma^2 = 4
  std::vector<double> samples(200000);
  for (double& v : samples) v = noise(rng);
  const EnergyStats stats = energy_stats(record_of(samples), 0.5, 0.99);
  const EnergySummary summary = summarize(stats);
  CHECK(summary.mean == doctest::Approx(4.0 * 0.5).epsilon(0.05));
}

TEST_CASE("energy means are invariant to window start phase for white noise") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> samples(100000);
  for (double& v : samples) v = noise(rng);
  const EnergyStats a = energy_stats(record_of(samples), 0.5, 0.99);
  std::vector<double> shifted(samples.begin() + 137, samples.end());
  const EnergyStats b = energy_stats(record_of(shifted), 0.5, 0.99);
  const EnergySummary sa = summarize(a), sb = summarize(b);
  CHECK(std::abs(sa.mean - sb.mean) <= 3.0 * std::max(sa.ci_half_width, sb.ci_half_width));
}

TEST_CASE("energy_stats rejects too-short configurations") {
  CHECK_THROWS_AS(energy_stats(record_of({1.0, 2.0, 3.0}, 10.0), 0.1, 0.99),
                  std::invalid_argument);  // single window
  CHECK_THROWS_AS(energy_stats(record_of({1.0, 2.0, 3.0, 4.0}, 10.0), 0.05, 0.99),
                  std::invalid_argument);  // window shorter than 2 samples
}

TEST_CASE("filtfilt has zero phase at passband frequencies") {
  const FilterCoeffs filter = design_cheby2_lowpass(8, 100.0, 50.0, 1000.0);
  std::vector<double> sine(8000);
  for (std::size_t t = 0; t < sine.size(); ++t)
    sine[t] = std::sin(2.0 * std::numbers::pi * 5.0 * static_cast<double>(t) / 1000.0);
  const std::vector<double> filtered = sos_filtfilt(filter, sine);
  // Compare against the input in the interior (edges carry transients).
  double err = 0.0;
  for (std::size_t t = 2000; t < 6000; ++t) err = std::max(err, std::abs(filtered[t] - sine[t]));
  CHECK(err < 0.01);
}

TEST_SUITE_END();
