#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "vfpid/types.hpp"

namespace vfpid {

enum class BasisFamily { chebyshev2 };

/// Normalization intervals mapping raw scheduling variables onto [-1, 1].
struct Ranges {
  std::array<double, 2> k1{-1.0, 1.0};  // airspeed [min, max]
  std::array<double, 2> k2{-1.0, 1.0};  // AoA [min, max]
};

/// A bivariate functional subspace: tensor products of univariate Chebyshev
/// polynomials of the second kind, one (d1, d2) degree pair per function.
struct BasisSpec {
  BasisFamily family = BasisFamily::chebyshev2;
  std::vector<std::array<int, 2>> pairs;
  Ranges ranges;

  std::size_t dimension() const { return pairs.size(); }
};

/// Throws if pairs are empty, duplicated, or ranges are degenerate.
void validate_basis(const BasisSpec& spec);

/// Affine map of k onto [-1,1]^2: min -> -1, max -> +1. Values within 1e-9
/// (normalized units) of an edge are clamped; anything further out throws,
/// naming the offending variable.
std::array<double, 2> normalize_state(const FlightState& k, const Ranges& ranges);

/// As normalize_state but never throws; out-of-range points map outside
/// [-1,1] and *extrapolated is set when that happens.
std::array<double, 2> normalize_state_extrapolate(const FlightState& k,
                                                  const Ranges& ranges,
                                                  bool* extrapolated = nullptr);

/// Chebyshev polynomial of the second kind, U_d(x), via the recurrence
/// U_0 = 1, U_1 = 2x, U_{d+1} = 2x U_d - U_{d-1}. Requires |x| <= 1.
double chebyshev_u(int degree, double x);

/// Recurrence evaluation without the domain check; grows monotonically in
/// magnitude for |x| > 1 (used by explicit extrapolation paths).
double chebyshev_u_unchecked(int degree, double x);

/// Evaluates the basis at k: values[j] = U_{d1j}(k1') * U_{d2j}(k2').
std::vector<double> eval_basis(const BasisSpec& spec, const FlightState& k);

/// Evaluation with extrapolation permitted outside the declared ranges.
std::vector<double> eval_basis_extrapolate(const BasisSpec& spec, const FlightState& k,
                                           bool* extrapolated = nullptr);

/// First max_p tensor degree pairs in graded-lexicographic order:
/// (0,0),(1,0),(0,1),(2,0),(1,1),(0,2),(3,0),...
BasisSpec complete_basis(int max_p, const Ranges& ranges);

/// Default normalization ranges: the pool's observed min/max per variable.
/// A degenerate axis (single value v) widens to [v-1, v+1] so the variable
/// normalizes to 0.
Ranges infer_ranges(const SignalPool& pool);

}  // namespace vfpid
