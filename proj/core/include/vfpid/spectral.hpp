#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vfpid/ar.hpp"
#include "vfpid/types.hpp"
#include "vfpid/vfp.hpp"

namespace vfpid {

/// One-sided Welch PSD (V^2/Hz). The reported resolution is fs/window_len.
struct PsdEstimate {
  std::vector<double> freqs;   // Hz, 0..fs/2
  std::vector<double> values;  // V^2/Hz
  double resolution = 0.0;     // Hz
  std::string window = "hamming";
  double overlap = 0.0;
};

/// Averaged modified periodograms with a symmetric Hamming window,
/// window-power normalized so the PSD integrates to the signal variance.
PsdEstimate welch_psd(const SignalRecord& record, std::size_t window_len, double overlap);

/// |H(f)| = 1/|A(e^{-j 2 pi f / fs})| of a scalar AR model, per frequency.
std::vector<double> frf_magnitude(const ArModel& model, std::span<const double> freqs_hz);

/// FRF magnitude of the global model frozen at k.
std::vector<double> frf_magnitude(const VfpArModel& model, const FlightState& k,
                                  std::span<const double> freqs_hz,
                                  bool extrapolate = false);

/// Parametric one-sided PSD: sigma2 |H|^2 (2/fs).
std::vector<double> parametric_psd(const ArModel& model, std::span<const double> freqs_hz);

enum class SweepVariable { airspeed, aoa };

struct SweepSpec {
  SweepVariable variable = SweepVariable::airspeed;
  double from = 0.0;
  double to = 0.0;
  double step = 1.0;
  double fixed_value = 0.0;  // value of the held variable
  bool allow_extrapolation = false;
};

struct FreqGrid {
  double from = 0.0;
  double to = 0.0;
  double step = 1.0;
};

/// FRF magnitude surface: one row per swept state, one column per frequency.
struct FrfSurface {
  SweepVariable variable = SweepVariable::airspeed;
  double fixed_value = 0.0;
  std::vector<double> freq_axis;   // Hz
  std::vector<double> state_axis;  // swept variable values
  Eigen::MatrixXd magnitudes_db;   // state_axis.size() x freq_axis.size()
  std::vector<bool> extrapolated;  // per row
};

/// Grid evaluation of frf_magnitude in dB. Inclusive axes:
/// count = floor((to - from)/step) + 1.
FrfSurface frf_surface(const VfpArModel& model, const SweepSpec& sweep,
                       const FreqGrid& freq);

/// Inclusive axis helper shared by the sweep and frequency grids.
std::vector<double> inclusive_grid(double from, double to, double step);

}  // namespace vfpid
