#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "vfpid/types.hpp"
#include "vfpid/vfp.hpp"

namespace vfpid {

/// Ground-truth generator specification: a VFP-AR model to draw from, the
/// state grid, record length, burn-in, and seed.
struct SimSpec {
  VfpArModel model;
  std::vector<FlightState> states;
  std::size_t n_samples = 0;
  std::size_t burn_in = 0;  // 0: defaults to 100 * order
  std::uint64_t seed = 0;
  /// Optional innovation cross covariance over `states` (diag = variances).
  /// Empty: independent innovations with sigma2_at(model, k) per state.
  Eigen::MatrixXd innovation_gamma;
};

/// Draws one record per state from the frozen AR recursions, discarding the
/// burn-in. Deterministic for a fixed seed (per-state substreams). Throws
/// numeric_error naming the state when a frozen polynomial is unstable.
SignalPool simulate_pool(const SimSpec& spec);

struct StabilityEntry {
  FlightState state;
  double max_root_magnitude = 0.0;  // 0 when the polynomial has no roots
  bool flagged = false;             // magnitude >= 1 - 1e-6
};

/// Largest frozen-pole magnitude per grid state.
std::vector<StabilityEntry> check_stability(const VfpArModel& model,
                                            std::span<const FlightState> states);

/// Bundled wing-like demo: AR(4) with one mode whose frequency rises with
/// airspeed toward a fixed second mode (coalescence surrogate) and an
/// innovation variance that climbs sharply above 13 degrees AoA (stall
/// surrogate). Grid: airspeed 9..17 m/s x AoA 0..15 deg.
SimSpec demo_wing_spec();

/// Rectangular grid helper: all (k1, k2) combinations, k2-major in k1 blocks.
std::vector<FlightState> state_grid(std::span<const double> airspeeds,
                                    std::span<const double> aoas);

}  // namespace vfpid
