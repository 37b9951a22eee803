#include "vfpid/numeric.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <stdexcept>

namespace vfpid {

double gaussian_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("gaussian_quantile: p must be in (0,1)");
  static const boost::math::normal_distribution<double> standard_normal;
  return boost::math::quantile(standard_normal, p);
}

std::vector<std::complex<double>> monic_roots(std::span<const double> coeffs,
                                              int* origin_roots) {
  // z^n + c0 z^{n-1} + ... + c_{n-1}; strip trailing zeros (roots at 0).
  std::size_t n = coeffs.size();
  int at_origin = 0;
  while (n > 0 && coeffs[n - 1] == 0.0) {
    --n;
    ++at_origin;
  }
  if (origin_roots) *origin_roots = at_origin;
  std::vector<std::complex<double>> roots;
  if (n == 0) return roots;

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                    static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) companion(0, static_cast<Eigen::Index>(i)) = -coeffs[i];
  for (std::size_t i = 1; i < n; ++i)
    companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("monic_roots: eigenvalue iteration failed");
  roots.reserve(n);
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
    roots.push_back(solver.eigenvalues()[i]);
  return roots;
}

std::vector<double> polynomial_from_roots(std::span<const std::complex<double>> roots) {
  std::vector<std::complex<double>> poly{1.0};
  for (const auto& root : roots) {
    poly.push_back(0.0);
    for (std::size_t i = poly.size() - 1; i > 0; --i) poly[i] -= root * poly[i - 1];
  }
  std::vector<double> out(poly.size() - 1);
  for (std::size_t i = 1; i < poly.size(); ++i) out[i - 1] = poly[i].real();
  return out;
}

MomentScreen sample_moments(std::span<const double> x) {
  MomentScreen m;
  const double n = static_cast<double>(x.size());
  if (x.size() < 4) throw std::invalid_argument("sample_moments: need at least 4 samples");
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.variance = m2 * n / (n - 1.0);
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

}  // namespace vfpid
