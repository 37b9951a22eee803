#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "vfpid/basis.hpp"
#include "vfpid/simulate.hpp"
#include "vfpid/types.hpp"
#include "vfpid/vfp.hpp"

namespace test_helpers {

/// Scalar AR simulation oracle, independent of vfpid::simulate_pool.
inline std::vector<double> simulate_ar(const std::vector<double>& coeffs, double sigma2,
                                       std::size_t n, std::uint64_t seed,
                                       std::size_t burn_in = 500) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
  std::vector<double> x(burn_in + n, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    double v = noise(rng);
    for (std::size_t i = 1; i <= coeffs.size() && i <= t; ++i)
      v -= coeffs[i - 1] * x[t - i];
    x[t] = v;
  }
  return {x.begin() + static_cast<std::ptrdiff_t>(burn_in), x.end()};
}

/// AR(2) coefficients for a conjugate pole pair r e^{+-j 2 pi f / fs}.
inline std::vector<double> ar2_from_pole(double radius, double freq_hz, double fs) {
  const double omega = 2.0 * std::numbers::pi * freq_hz / fs;
  return {-2.0 * radius * std::cos(omega), radius * radius};
}

/// Hand-built VFP-AR(2) truth with a linear (p = 3) coefficient surface over
/// ranges k1, k2 in [0, 2]: stable across the whole unit square.
inline vfpid::VfpArModel linear_truth_model(double fs = 200.0) {
  vfpid::VfpArModel model;
  model.order = 2;
  model.fs = fs;
  model.basis = vfpid::complete_basis(3, vfpid::Ranges{{0.0, 2.0}, {0.0, 2.0}});
  model.theta.resize(2, 3);
  // a1 = -0.9 + 0.1 k1' + 0.05 k2', a2 = 0.2 + 0.05 k1' (U1 = 2x).
  model.theta << -0.9, 0.05, 0.025, 0.2, 0.025, 0.0;
  model.method = vfpid::FitMethod::ols;
  return model;
}

/// 3 x 3 training grid for the linear truth model.
inline std::vector<vfpid::FlightState> grid3x3() {
  const double axis[3] = {0.0, 1.0, 2.0};
  return vfpid::state_grid(axis, axis);
}

inline vfpid::SimSpec linear_truth_spec(std::uint64_t seed, std::size_t n_samples,
                                        double sigma2 = 1.0) {
  vfpid::SimSpec spec;
  spec.model = linear_truth_model();
  spec.model.training_states = grid3x3();
  spec.model.sigma2_by_state =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(9), sigma2);
  spec.model.gamma_e = spec.model.sigma2_by_state.asDiagonal();
  spec.states = spec.model.training_states;
  spec.n_samples = n_samples;
  spec.seed = seed;
  return spec;
}

/// Unique scratch directory under the system temp root.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("vfpid_test_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace test_helpers
