#include "vfpid/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace vfpid {

namespace {

std::mutex fftw_planner_mutex;  // FFTW planning is not thread-safe

struct RealFft {
  std::size_t n;
  double* in;
  fftw_complex* out;
  fftw_plan plan;

  explicit RealFft(std::size_t length) : n(length) {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex);
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex);
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  void execute() { fftw_execute(plan); }
};

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
  return w;
}

}  // namespace

PsdEstimate welch_psd(const SignalRecord& record, std::size_t window_len, double overlap) {
  validate_record(record);
  if (window_len < 2) throw std::invalid_argument("welch_psd: window shorter than 2 samples");
  if (window_len > record.samples.size())
    throw std::invalid_argument("welch_psd: window longer than the record");
  if (!(overlap >= 0.0 && overlap < 1.0))
    throw std::invalid_argument("welch_psd: overlap must lie in [0,1)");

  const std::size_t hop = std::max<std::size_t>(
      1, window_len - static_cast<std::size_t>(std::floor(overlap * window_len)));
  std::size_t n_segments = 0;
  for (std::size_t start = 0; start + window_len <= record.samples.size(); start += hop)
    ++n_segments;
  if (n_segments < 2) throw std::invalid_argument("welch_psd: fewer than 2 segments");

  const std::vector<double> window = hamming(window_len);
  double window_power = 0.0;
  for (double w : window) window_power += w * w;

  const std::size_t n_freqs = window_len / 2 + 1;
  std::vector<double> acc(n_freqs, 0.0);
  RealFft fft(window_len);
  for (std::size_t start = 0; start + window_len <= record.samples.size(); start += hop) {
    for (std::size_t i = 0; i < window_len; ++i)
      fft.in[i] = record.samples[start + i] * window[i];
    fft.execute();
    for (std::size_t k = 0; k < n_freqs; ++k)
      acc[k] += fft.out[k][0] * fft.out[k][0] + fft.out[k][1] * fft.out[k][1];
  }

  // One-sided density: integrating over [0, fs/2] recovers the variance.
  const double scale = 1.0 / (record.fs * window_power * static_cast<double>(n_segments));
  PsdEstimate psd;
  psd.freqs.resize(n_freqs);
  psd.values.resize(n_freqs);
  const bool even = window_len % 2 == 0;
  for (std::size_t k = 0; k < n_freqs; ++k) {
    psd.freqs[k] = static_cast<double>(k) * record.fs / static_cast<double>(window_len);
    double v = acc[k] * scale;
    if (k != 0 && !(even && k == n_freqs - 1)) v *= 2.0;
    psd.values[k] = v;
  }
  psd.resolution = record.fs / static_cast<double>(window_len);
  psd.overlap = overlap;
  return psd;
}

std::vector<double> frf_magnitude(const ArModel& model, std::span<const double> freqs_hz) {
  std::vector<double> magnitudes(freqs_hz.size());
  for (std::size_t f = 0; f < freqs_hz.size(); ++f) {
    const double omega = 2.0 * std::numbers::pi * freqs_hz[f] / model.fs;
    std::complex<double> a(1.0, 0.0);
    for (int i = 1; i <= model.order; ++i)
      a += model.coeffs[static_cast<std::size_t>(i - 1)] *
           std::exp(std::complex<double>(0.0, -omega * i));
    magnitudes[f] = 1.0 / std::max(std::abs(a), 1e-300);
  }
  return magnitudes;
}

std::vector<double> frf_magnitude(const VfpArModel& model, const FlightState& k,
                                  std::span<const double> freqs_hz, bool extrapolate) {
  const FrozenModel frozen = extrapolate ? freeze_extrapolate(model, k) : freeze(model, k);
  return frf_magnitude(frozen.model, freqs_hz);
}

std::vector<double> parametric_psd(const ArModel& model, std::span<const double> freqs_hz) {
  std::vector<double> psd = frf_magnitude(model, freqs_hz);
  const double scale = 2.0 * model.sigma2 / model.fs;
  for (double& v : psd) v = scale * v * v;
  return psd;
}

std::vector<double> inclusive_grid(double from, double to, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid: step must be positive");
  if (to < from) throw std::invalid_argument("grid: to must be >= from");
  const double q = (to - from) / step;
  const auto count = static_cast<std::size_t>(std::floor(q * (1.0 + 1e-12) + 1e-9)) + 1;
  std::vector<double> axis(count);
  for (std::size_t i = 0; i < count; ++i) axis[i] = from + static_cast<double>(i) * step;
  return axis;
}

FrfSurface frf_surface(const VfpArModel& model, const SweepSpec& sweep, const FreqGrid& freq) {
  FrfSurface surface;
  surface.variable = sweep.variable;
  surface.fixed_value = sweep.fixed_value;
  surface.freq_axis = inclusive_grid(freq.from, freq.to, freq.step);
  surface.state_axis = inclusive_grid(sweep.from, sweep.to, sweep.step);

  const auto rows = static_cast<Eigen::Index>(surface.state_axis.size());
  const auto cols = static_cast<Eigen::Index>(surface.freq_axis.size());
  surface.magnitudes_db.resize(rows, cols);
  surface.extrapolated.assign(surface.state_axis.size(), false);

  for (Eigen::Index r = 0; r < rows; ++r) {
    FlightState k;
    if (sweep.variable == SweepVariable::airspeed) {
      k.airspeed = surface.state_axis[static_cast<std::size_t>(r)];
      k.aoa = sweep.fixed_value;
    } else {
      k.aoa = surface.state_axis[static_cast<std::size_t>(r)];
      k.airspeed = sweep.fixed_value;
    }
    const FrozenModel frozen = sweep.allow_extrapolation ? freeze_extrapolate(model, k)
                                                         : freeze(model, k);
    surface.extrapolated[static_cast<std::size_t>(r)] = frozen.extrapolated;
    const std::vector<double> mags = frf_magnitude(frozen.model, surface.freq_axis);
    for (Eigen::Index c = 0; c < cols; ++c)
      surface.magnitudes_db(r, c) =
          20.0 * std::log10(std::max(mags[static_cast<std::size_t>(c)], 1e-300));
  }
  return surface;
}

}  // namespace vfpid
