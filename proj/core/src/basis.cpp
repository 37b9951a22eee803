#include "vfpid/basis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace vfpid {

namespace {

constexpr double kEdgeTol = 1e-9;  // normalized units

double normalize_one(double value, double lo, double hi) {
  return (2.0 * value - hi - lo) / (hi - lo);
}

}  // namespace

void validate_basis(const BasisSpec& spec) {
  if (spec.pairs.empty()) throw std::invalid_argument("basis: no index pairs");
  std::set<std::array<int, 2>> seen;
  for (const auto& pair : spec.pairs) {
    if (pair[0] < 0 || pair[1] < 0)
      throw std::invalid_argument("basis: negative degree in index pair");
    if (!seen.insert(pair).second)
      throw std::invalid_argument("basis: duplicate index pair (" +
                                  std::to_string(pair[0]) + "," + std::to_string(pair[1]) +
                                  ")");
  }
  if (!(spec.ranges.k1[0] < spec.ranges.k1[1]) || !(spec.ranges.k2[0] < spec.ranges.k2[1]))
    throw std::invalid_argument("basis: normalization range must have min < max");
}

std::array<double, 2> normalize_state(const FlightState& k, const Ranges& ranges) {
  std::array<double, 2> out{normalize_one(k.airspeed, ranges.k1[0], ranges.k1[1]),
                            normalize_one(k.aoa, ranges.k2[0], ranges.k2[1])};
  const char* names[2] = {"k1 (airspeed)", "k2 (AoA)"};
  const double raw[2] = {k.airspeed, k.aoa};
  for (int i = 0; i < 2; ++i) {
    if (std::abs(out[i]) > 1.0 + kEdgeTol)
      throw std::domain_error(std::string("normalize_state: ") + names[i] + " = " +
                              std::to_string(raw[i]) +
                              " outside the declared range (use the extrapolation "
                              "entry points to evaluate out of range)");
    out[i] = std::clamp(out[i], -1.0, 1.0);
  }
  return out;
}

std::array<double, 2> normalize_state_extrapolate(const FlightState& k, const Ranges& ranges,
                                                  bool* extrapolated) {
  std::array<double, 2> out{normalize_one(k.airspeed, ranges.k1[0], ranges.k1[1]),
                            normalize_one(k.aoa, ranges.k2[0], ranges.k2[1])};
  bool outside = std::abs(out[0]) > 1.0 + kEdgeTol || std::abs(out[1]) > 1.0 + kEdgeTol;
  if (extrapolated) *extrapolated = outside;
  if (!outside) {
    out[0] = std::clamp(out[0], -1.0, 1.0);
    out[1] = std::clamp(out[1], -1.0, 1.0);
  }
  return out;
}

double chebyshev_u_unchecked(int degree, double x) {
  if (degree < 0) throw std::invalid_argument("chebyshev_u: negative degree");
  if (degree == 0) return 1.0;
  double prev = 1.0;
  double cur = 2.0 * x;
  for (int d = 1; d < degree; ++d) {
    double next = 2.0 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double chebyshev_u(int degree, double x) {
  if (std::abs(x) > 1.0)
    throw std::domain_error("chebyshev_u: |x| > 1 (argument " + std::to_string(x) + ")");
  return chebyshev_u_unchecked(degree, x);
}

namespace {

std::vector<double> eval_at(const BasisSpec& spec, const std::array<double, 2>& point) {
  std::vector<double> values(spec.pairs.size());
  // Univariate values are shared across pairs; evaluate each needed degree once.
  int max1 = 0, max2 = 0;
  for (const auto& pair : spec.pairs) {
    max1 = std::max(max1, pair[0]);
    max2 = std::max(max2, pair[1]);
  }
  std::vector<double> u1(static_cast<std::size_t>(max1) + 1), u2(static_cast<std::size_t>(max2) + 1);
  for (int d = 0; d <= max1; ++d) u1[static_cast<std::size_t>(d)] = chebyshev_u_unchecked(d, point[0]);
  for (int d = 0; d <= max2; ++d) u2[static_cast<std::size_t>(d)] = chebyshev_u_unchecked(d, point[1]);
  for (std::size_t j = 0; j < spec.pairs.size(); ++j)
    values[j] = u1[static_cast<std::size_t>(spec.pairs[j][0])] *
                u2[static_cast<std::size_t>(spec.pairs[j][1])];
  return values;
}

}  // namespace

std::vector<double> eval_basis(const BasisSpec& spec, const FlightState& k) {
  return eval_at(spec, normalize_state(k, spec.ranges));
}

std::vector<double> eval_basis_extrapolate(const BasisSpec& spec, const FlightState& k,
                                           bool* extrapolated) {
  return eval_at(spec, normalize_state_extrapolate(k, spec.ranges, extrapolated));
}

BasisSpec complete_basis(int max_p, const Ranges& ranges) {
  if (max_p < 1) throw std::invalid_argument("complete_basis: max_p must be >= 1");
  BasisSpec spec;
  spec.ranges = ranges;
  spec.pairs.reserve(static_cast<std::size_t>(max_p));
  // Graded order by total degree; within a grade d1 descends from g to 0.
  for (int grade = 0; static_cast<int>(spec.pairs.size()) < max_p; ++grade)
    for (int d1 = grade; d1 >= 0 && static_cast<int>(spec.pairs.size()) < max_p; --d1)
      spec.pairs.push_back({d1, grade - d1});
  return spec;
}

Ranges infer_ranges(const SignalPool& pool) {
  if (pool.records.empty()) throw std::invalid_argument("infer_ranges: empty pool");
  Ranges ranges;
  ranges.k1 = {pool.records.front().state.airspeed, pool.records.front().state.airspeed};
  ranges.k2 = {pool.records.front().state.aoa, pool.records.front().state.aoa};
  for (const auto& record : pool.records) {
    ranges.k1[0] = std::min(ranges.k1[0], record.state.airspeed);
    ranges.k1[1] = std::max(ranges.k1[1], record.state.airspeed);
    ranges.k2[0] = std::min(ranges.k2[0], record.state.aoa);
    ranges.k2[1] = std::max(ranges.k2[1], record.state.aoa);
  }
  for (auto* axis : {&ranges.k1, &ranges.k2})
    if ((*axis)[0] == (*axis)[1]) {
      (*axis)[0] -= 1.0;
      (*axis)[1] += 1.0;
    }
  return ranges;
}

}  // namespace vfpid
