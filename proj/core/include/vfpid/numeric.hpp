#pragma once

#include <complex>
#include <span>
#include <vector>

namespace vfpid {

/// Standard normal quantile, Phi^-1(p) for p in (0,1).
double gaussian_quantile(double p);

/// Roots of z^n + c[0] z^{n-1} + ... + c[n-1] via the companion matrix.
/// Trailing zero coefficients (roots at the origin) are deflated first and
/// reported through *origin_roots.
std::vector<std::complex<double>> monic_roots(std::span<const double> coeffs,
                                              int* origin_roots = nullptr);

/// Monic polynomial z^n + c1 z^{n-1} + ... + cn with the given roots;
/// returns [c1..cn]. Imaginary residue of conjugate-paired inputs is
/// discarded.
std::vector<double> polynomial_from_roots(std::span<const std::complex<double>> roots);

struct MomentScreen {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

MomentScreen sample_moments(std::span<const double> x);

}  // namespace vfpid
