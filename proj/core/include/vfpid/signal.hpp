#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "vfpid/types.hpp"

namespace vfpid {

/// One second-order section, normalized so a0 = 1:
///   y[t] = b0 x[t] + b1 x[t-1] + b2 x[t-2] - a1 y[t-1] - a2 y[t-2]
struct Sos {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Digital IIR low-pass as a cascade of second-order sections, with the
/// design metadata needed by downstream checks.
struct FilterCoeffs {
  std::vector<Sos> sections;
  double fs = 0.0;         // rate the filter was designed for (Hz)
  double cutoff_hz = 0.0;  // stopband-edge frequency (Hz)

  /// Identity (all-pass, unit gain) filter for the given rate.
  static FilterCoeffs unit(double fs);
};

/// Chebyshev Type II low-pass: analog prototype (stopband edge normalized,
/// equiripple attenuation stop_atten_db past cutoff_hz) mapped by the
/// bilinear transform with frequency prewarping. DC gain is exactly one.
/// order must be even and >= 2; cutoff must sit below Nyquist.
FilterCoeffs design_cheby2_lowpass(int order, double cutoff_hz, double stop_atten_db,
                                   double fs);

/// Causal (forward-only) cascade filtering with zero initial state.
std::vector<double> sos_filter(const FilterCoeffs& filter, std::span<const double> x);

/// Zero-phase filtering: forward pass, then reverse pass. Magnitude response
/// is squared; intended for offline use.
std::vector<double> sos_filtfilt(const FilterCoeffs& filter, std::span<const double> x);

/// Frequency response H(e^{j 2 pi f / fs}) of the cascade.
std::complex<double> sos_response(const FilterCoeffs& filter, double freq_hz);

/// Largest pole magnitude over all sections (stability: < 1).
double max_pole_magnitude(const FilterCoeffs& filter);

/// Subtracts the sample mean; length and rate unchanged.
SignalRecord mean_correct(SignalRecord record);

/// Low-pass filter then keep every factor-th sample. Output rate fs/factor,
/// output length floor(N/factor). factor == 1 keeps the filtered signal.
SignalRecord decimate(const SignalRecord& record, const FilterCoeffs& filter, int factor,
                      bool zero_phase = false);

/// Windowed signal-energy statistics. Each full window of length
/// round(window_s * fs) yields one energy value (sum of squares / fs, V^2 s);
/// the std/CI columns describe the uncertainty of that window's energy from
/// the within-window scatter of per-sample contributions. Trailing partial
/// windows are discarded.
struct EnergyStats {
  std::size_t window_len = 0;  // samples per window
  double window_s = 0.0;
  double fs = 0.0;
  double ci_level = 0.0;
  std::vector<double> means;           // V^2 s, one per window
  std::vector<double> std_devs;        // V^2 s
  std::vector<double> ci_half_widths;  // V^2 s
};

EnergyStats energy_stats(const SignalRecord& record, double window_s, double ci_level);

/// Pooled summary across windows: mean of the window energies with a
/// Gaussian CI for that mean (used for energy-vs-state trend plots).
struct EnergySummary {
  double mean = 0.0;
  double std_dev = 0.0;        // std of window energies
  double ci_half_width = 0.0;  // for the mean
};

EnergySummary summarize(const EnergyStats& stats);

}  // namespace vfpid
