#include "vfpid/simulate.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <random>

#include "vfpid/basis.hpp"
#include "vfpid/numeric.hpp"

namespace vfpid {

namespace {

// Deterministic standard-normal stream: mt19937_64 substream + Box-Muller,
// independent of the standard library's normal_distribution implementation.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    rng_.seed(seq);
  }

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0,1]: avoids log(0).
    const double u1 =
        (static_cast<double>(rng_()) + 1.0) / (static_cast<double>(rng_.max()) + 2.0);
    const double u2 = static_cast<double>(rng_()) / (static_cast<double>(rng_.max()) + 1.0);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

std::vector<double> frozen_ar_coeffs(const VfpArModel& model, const FlightState& k) {
  const std::vector<double> g = eval_basis(model.basis, k);
  const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
  const Eigen::VectorXd a = model.theta * gv;
  return std::vector<double>(a.data(), a.data() + a.size());
}

double max_root_magnitude(const std::vector<double>& coeffs) {
  double mag = 0.0;
  for (const auto& root : monic_roots(coeffs)) mag = std::max(mag, std::abs(root));
  return mag;
}

}  // namespace

std::vector<FlightState> state_grid(std::span<const double> airspeeds,
                                    std::span<const double> aoas) {
  std::vector<FlightState> states;
  states.reserve(airspeeds.size() * aoas.size());
  for (double k1 : airspeeds)
    for (double k2 : aoas) states.push_back(FlightState{k1, k2});
  return states;
}

std::vector<StabilityEntry> check_stability(const VfpArModel& model,
                                            std::span<const FlightState> states) {
  std::vector<StabilityEntry> entries;
  entries.reserve(states.size());
  for (const auto& state : states) {
    StabilityEntry entry;
    entry.state = state;
    entry.max_root_magnitude = max_root_magnitude(frozen_ar_coeffs(model, state));
    entry.flagged = entry.max_root_magnitude >= 1.0 - 1e-6;
    entries.push_back(entry);
  }
  return entries;
}

SignalPool simulate_pool(const SimSpec& spec) {
  if (spec.states.empty()) throw std::invalid_argument("simulate: no states");
  if (spec.n_samples < 2) throw std::invalid_argument("simulate: need at least 2 samples");
  const auto order = static_cast<std::size_t>(spec.model.order);
  std::size_t burn_in = spec.burn_in == 0 ? 100 * order : spec.burn_in;
  if (burn_in < 10 * order)
    throw std::invalid_argument("simulate: burn_in must be at least 10 * order");

  const std::size_t m = spec.states.size();
  std::vector<std::vector<double>> coeffs(m);
  for (std::size_t s = 0; s < m; ++s) {
    coeffs[s] = frozen_ar_coeffs(spec.model, spec.states[s]);
    const double mag = max_root_magnitude(coeffs[s]);
    if (mag >= 1.0 - 1e-6)
      throw numeric_error("simulate: unstable frozen polynomial at state " +
                          to_string(spec.states[s]) + " (max root magnitude " +
                          std::to_string(mag) + ")");
  }

  const bool correlated = spec.innovation_gamma.size() > 0;
  Eigen::MatrixXd chol;
  if (correlated) {
    if (spec.innovation_gamma.rows() != static_cast<Eigen::Index>(m) ||
        spec.innovation_gamma.cols() != static_cast<Eigen::Index>(m))
      throw std::invalid_argument("simulate: innovation_gamma must be M x M");
    Eigen::LLT<Eigen::MatrixXd> llt(spec.innovation_gamma);
    if (llt.info() != Eigen::Success)
      throw numeric_error("simulate: innovation_gamma is not positive definite");
    chol = llt.matrixL();
  }

  const std::size_t total = burn_in + spec.n_samples;
  std::vector<SignalRecord> records(m);
  for (std::size_t s = 0; s < m; ++s) {
    records[s].state = spec.states[s];
    records[s].fs = spec.model.fs;
  }

  if (!correlated) {
    // Independent per-state substreams.
    for (std::size_t s = 0; s < m; ++s) {
      GaussianStream noise(spec.seed, s);
      const double sigma = std::sqrt(sigma2_at(spec.model, spec.states[s]));
      std::vector<double> x(total, 0.0);
      for (std::size_t t = 0; t < total; ++t) {
        double value = sigma * noise.next();
        for (std::size_t i = 1; i <= order && i <= t; ++i)
          value -= coeffs[s][i - 1] * x[t - i];
        x[t] = value;
      }
      records[s].samples.assign(x.begin() + static_cast<std::ptrdiff_t>(burn_in), x.end());
    }
  } else {
    // Correlated innovations per time slice: all states advance in lockstep.
    GaussianStream noise(spec.seed, 0);
    std::vector<std::vector<double>> x(m, std::vector<double>(total, 0.0));
    Eigen::VectorXd z(static_cast<Eigen::Index>(m));
    for (std::size_t t = 0; t < total; ++t) {
      for (std::size_t s = 0; s < m; ++s) z(static_cast<Eigen::Index>(s)) = noise.next();
      const Eigen::VectorXd e = chol * z;
      for (std::size_t s = 0; s < m; ++s) {
        double value = e(static_cast<Eigen::Index>(s));
        for (std::size_t i = 1; i <= order && i <= t; ++i)
          value -= coeffs[s][i - 1] * x[s][t - i];
        x[s][t] = value;
      }
    }
    for (std::size_t s = 0; s < m; ++s)
      records[s].samples.assign(x[s].begin() + static_cast<std::ptrdiff_t>(burn_in),
                                x[s].end());
  }
  return make_pool(std::move(records));
}

SimSpec demo_wing_spec() {
  SimSpec spec;
  VfpArModel& model = spec.model;
  model.order = 4;
  model.fs = 200.0;
  model.method = FitMethod::ols;

  // Airspeed-only basis: pairs (d,0), d = 0..10.
  model.basis.family = BasisFamily::chebyshev2;
  model.basis.ranges.k1 = {9.0, 17.0};
  model.basis.ranges.k2 = {0.0, 15.0};
  for (int d = 0; d <= 10; ++d) model.basis.pairs.push_back({d, 0});
  const auto p = static_cast<Eigen::Index>(model.basis.dimension());

  // Mode A migrates from 4.5 Hz toward the fixed 8.5 Hz mode B as airspeed
  // grows (flutter-coalescence surrogate).
  const double radius_a = 0.96, radius_b = 0.95, freq_b = 8.5;
  auto freq_a = [](double k1) { return 8.5 - 4.0 * std::exp(-(k1 - 9.0) / 3.0); };
  auto coeffs_at = [&](double k1) {
    const double wa = 2.0 * std::numbers::pi * freq_a(k1) / 200.0;
    const double wb = 2.0 * std::numbers::pi * freq_b / 200.0;
    const double qa1 = -2.0 * radius_a * std::cos(wa), qa2 = radius_a * radius_a;
    const double qb1 = -2.0 * radius_b * std::cos(wb), qb2 = radius_b * radius_b;
    // Product of the two quadratics (1 + qa1 z^-1 + qa2 z^-2)(1 + qb1 ...).
    return std::array<double, 4>{qa1 + qb1, qa2 + qb2 + qa1 * qb1, qa1 * qb2 + qa2 * qb1,
                                 qa2 * qb2};
  };

  // Project the coefficient curves onto the basis by least squares on a
  // dense airspeed grid.
  const int grid_n = 161;
  Eigen::MatrixXd design(grid_n, p);
  Eigen::MatrixXd targets(grid_n, 4);
  for (int g = 0; g < grid_n; ++g) {
    const double k1 = 9.0 + 8.0 * static_cast<double>(g) / (grid_n - 1);
    const std::vector<double> basis_values =
        eval_basis(model.basis, FlightState{k1, 0.0});
    for (Eigen::Index j = 0; j < p; ++j)
      design(g, j) = basis_values[static_cast<std::size_t>(j)];
    const auto a = coeffs_at(k1);
    for (int i = 0; i < 4; ++i) targets(g, i) = a[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd projection = design.colPivHouseholderQr().solve(targets);
  model.theta = projection.transpose();  // 4 x p

  // Training grid: 9 airspeeds x 16 AoA, matching the demo flight envelope.
  std::vector<double> airspeeds, aoas;
  for (int i = 0; i <= 8; ++i) airspeeds.push_back(9.0 + i);
  for (int j = 0; j <= 15; ++j) aoas.push_back(j);
  model.training_states = state_grid(airspeeds, aoas);

  // Innovation variance climbs sharply above 13 deg AoA (stall surrogate).
  const auto m = static_cast<Eigen::Index>(model.training_states.size());
  model.sigma2_by_state.resize(m);
  for (Eigen::Index s = 0; s < m; ++s) {
    const double aoa = model.training_states[static_cast<std::size_t>(s)].aoa;
    const double logistic = 1.0 / (1.0 + std::exp(-(aoa - 13.0) / 0.35));
    model.sigma2_by_state(s) = 1e-4 * (1.0 + 9.0 * logistic);
  }
  model.gamma_e = model.sigma2_by_state.asDiagonal();
  model.p_theta = Eigen::MatrixXd::Zero(4 * p, 4 * p);

  spec.states = model.training_states;
  spec.n_samples = 4000;
  spec.burn_in = 400;
  spec.seed = 20260810;
  return spec;
}

}  // namespace vfpid
