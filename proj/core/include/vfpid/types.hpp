#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vfpid {

/// Operating point of the vehicle: airspeed (m/s) and angle of attack (deg).
/// Every pooled record and every frozen model is keyed by one of these.
struct FlightState {
  double airspeed = 0.0;  // k1, m/s
  double aoa = 0.0;       // k2, degrees

  friend bool operator==(const FlightState& a, const FlightState& b) {
    return a.airspeed == b.airspeed && a.aoa == b.aoa;
  }
  friend bool operator<(const FlightState& a, const FlightState& b) {
    if (a.airspeed != b.airspeed) return a.airspeed < b.airspeed;
    return a.aoa < b.aoa;
  }
};

std::string to_string(const FlightState& k);

/// One response record (volts) sampled at a constant rate under a constant
/// flight state.
struct SignalRecord {
  FlightState state;
  std::vector<double> samples;
  double fs = 0.0;  // Hz
};

/// Aligned set of records, one per flight state: identical length and rate.
struct SignalPool {
  std::vector<SignalRecord> records;
  std::size_t n_samples = 0;
  double fs = 0.0;
};

/// Validates record invariants (length >= 2, fs > 0, finite samples).
void validate_record(const SignalRecord& record);

/// Builds a pool from records, enforcing the pool invariants: common length,
/// common fs, distinct states, at least one record.
SignalPool make_pool(std::vector<SignalRecord> records);

/// Errors that indicate unusable input data or malformed files.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Errors raised when a numerical procedure cannot proceed (rank deficiency,
/// instability, non-convergence that cannot be recovered).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vfpid
