#include "vfpid/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "vfpid/numeric.hpp"

namespace vfpid {

namespace {

using cd = std::complex<double>;

struct ZpkPairs {
  std::vector<cd> zeros;  // one representative per conjugate pair, Im > 0
  std::vector<cd> poles;
  double gain = 1.0;
};

// Analog Chebyshev Type II low-pass prototype with the stopband edge at
// 1 rad/s and equiripple attenuation atten_db beyond it. Even order only,
// so zeros and poles both come in full conjugate pairs.
ZpkPairs cheb2_prototype(int order, double atten_db) {
  const double de = 1.0 / std::sqrt(std::pow(10.0, 0.1 * atten_db) - 1.0);
  const double mu = std::asinh(1.0 / de) / order;
  std::vector<cd> zeros, poles;
  for (int m = -order + 1; m < order; m += 2) {
    const double theta = m * std::numbers::pi / (2.0 * order);
    zeros.emplace_back(0.0, 1.0 / std::sin(theta));
    const cd q = -std::exp(cd(0.0, theta));
    const cd ellipse(std::sinh(mu) * q.real(), std::cosh(mu) * q.imag());
    poles.push_back(1.0 / ellipse);
  }
  cd num = 1.0, den = 1.0;
  for (const cd& p : poles) num *= -p;
  for (const cd& z : zeros) den *= -z;
  ZpkPairs proto;
  proto.gain = (num / den).real();
  for (const cd& z : zeros)
    if (z.imag() > 0.0) proto.zeros.push_back(z);
  for (const cd& p : poles)
    if (p.imag() > 0.0) proto.poles.push_back(p);
  return proto;
}

}  // namespace

FilterCoeffs FilterCoeffs::unit(double fs) {
  FilterCoeffs f;
  f.sections.push_back(Sos{});
  f.fs = fs;
  f.cutoff_hz = 0.0;  // unconstrained
  return f;
}

FilterCoeffs design_cheby2_lowpass(int order, double cutoff_hz, double stop_atten_db,
                                   double fs) {
  if (order < 2 || order % 2 != 0)
    throw std::invalid_argument("design_cheby2_lowpass: order must be even and >= 2");
  if (!(fs > 0.0)) throw std::invalid_argument("design_cheby2_lowpass: fs must be positive");
  if (!(cutoff_hz > 0.0) || cutoff_hz >= 0.5 * fs)
    throw std::invalid_argument(
        "design_cheby2_lowpass: cutoff must lie strictly between 0 and the Nyquist rate");
  if (!(stop_atten_db > 0.0))
    throw std::invalid_argument("design_cheby2_lowpass: attenuation must be positive");

  ZpkPairs proto = cheb2_prototype(order, stop_atten_db);

  // Prewarped low-pass scaling, then the bilinear transform of each pair.
  const double warped = 2.0 * fs * std::tan(std::numbers::pi * cutoff_hz / fs);
  const double fs2 = 2.0 * fs;
  std::vector<cd> dz, dp;
  double gain = proto.gain;
  for (cd z : proto.zeros) {
    z *= warped;
    dz.push_back((fs2 + z) / (fs2 - z));
    gain *= std::norm(fs2 - z) / (fs2 * fs2);  // |fs2 - z|^2 covers the conjugate too
  }
  for (cd p : proto.poles) {
    p *= warped;
    dp.push_back((fs2 + p) / (fs2 - p));
    gain /= std::norm(fs2 - p) / (fs2 * fs2);
  }
  // Each pair contributes (fs2 - z)(fs2 - conj z) = |fs2 - z|^2 to the bilinear
  // gain; the fs2^2 factors cancel between numerator and denominator but are
  // normalized out anyway for conditioning.

  // Pair pole pairs (sorted: closest to the unit circle first) with the
  // remaining zero pair nearest in angle.
  std::vector<std::size_t> pole_order(dp.size());
  std::iota(pole_order.begin(), pole_order.end(), 0u);
  std::sort(pole_order.begin(), pole_order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(dp[a]) > std::abs(dp[b]); });
  std::vector<bool> zero_used(dz.size(), false);

  FilterCoeffs filter;
  filter.fs = fs;
  filter.cutoff_hz = cutoff_hz;
  for (std::size_t pi : pole_order) {
    std::size_t best = dz.size();
    double best_dist = 0.0;
    for (std::size_t zi = 0; zi < dz.size(); ++zi) {
      if (zero_used[zi]) continue;
      const double dist = std::abs(std::arg(dz[zi]) - std::arg(dp[pi]));
      if (best == dz.size() || dist < best_dist) {
        best = zi;
        best_dist = dist;
      }
    }
    zero_used[best] = true;
    Sos section;
    section.b0 = 1.0;
    section.b1 = -2.0 * dz[best].real();
    section.b2 = std::norm(dz[best]);
    section.a1 = -2.0 * dp[pi].real();
    section.a2 = std::norm(dp[pi]);
    filter.sections.push_back(section);
  }
  for (auto& s : filter.sections) {
    // Spread the overall gain evenly across sections for dynamic range.
    const double g = std::pow(gain, 1.0 / static_cast<double>(filter.sections.size()));
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
  }
  return filter;
}

std::vector<double> sos_filter(const FilterCoeffs& filter, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const Sos& s : filter.sections) {
    double s1 = 0.0, s2 = 0.0;  // direct form II transposed state
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * out + s2;
      s2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::vector<double> sos_filtfilt(const FilterCoeffs& filter, std::span<const double> x) {
  std::vector<double> y = sos_filter(filter, x);
  std::reverse(y.begin(), y.end());
  y = sos_filter(filter, y);
  std::reverse(y.begin(), y.end());
  return y;
}

std::complex<double> sos_response(const FilterCoeffs& filter, double freq_hz) {
  const cd w = std::exp(cd(0.0, -2.0 * std::numbers::pi * freq_hz / filter.fs));
  cd h = 1.0;
  for (const Sos& s : filter.sections)
    h *= (s.b0 + s.b1 * w + s.b2 * w * w) / (1.0 + s.a1 * w + s.a2 * w * w);
  return h;
}

double max_pole_magnitude(const FilterCoeffs& filter) {
  double worst = 0.0;
  for (const Sos& s : filter.sections) {
    const double coeffs[2] = {s.a1, s.a2};
    for (const cd& root : monic_roots(coeffs)) worst = std::max(worst, std::abs(root));
  }
  return worst;
}

SignalRecord mean_correct(SignalRecord record) {
  validate_record(record);
  const double n = static_cast<double>(record.samples.size());
  double mean = 0.0;
  for (double v : record.samples) mean += v;
  mean /= n;
  for (double& v : record.samples) v -= mean;
  // One refinement pass removes the rounding residue of the first subtraction,
  // making repeated application a fixed point at double precision.
  double residue = 0.0;
  for (double v : record.samples) residue += v;
  residue /= n;
  if (residue != 0.0)
    for (double& v : record.samples) v -= residue;
  return record;
}

SignalRecord decimate(const SignalRecord& record, const FilterCoeffs& filter, int factor,
                      bool zero_phase) {
  validate_record(record);
  if (factor < 1) throw std::invalid_argument("decimate: factor must be >= 1");
  const double new_nyquist = 0.5 * record.fs / factor;
  if (filter.cutoff_hz > new_nyquist + 1e-12)
    throw std::invalid_argument("decimate: filter cutoff exceeds the decimated Nyquist rate");
  std::vector<double> filtered =
      zero_phase ? sos_filtfilt(filter, record.samples) : sos_filter(filter, record.samples);
  SignalRecord out;
  out.state = record.state;
  out.fs = record.fs / factor;
  const std::size_t n_out = record.samples.size() / static_cast<std::size_t>(factor);
  out.samples.reserve(n_out);
  for (std::size_t i = 0; i < n_out; ++i)
    out.samples.push_back(filtered[i * static_cast<std::size_t>(factor)]);
  return out;
}

EnergyStats energy_stats(const SignalRecord& record, double window_s, double ci_level) {
  validate_record(record);
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw std::invalid_argument("energy_stats: ci_level must be in (0,1)");
  const auto window_len = static_cast<std::size_t>(std::lround(window_s * record.fs));
  if (window_len < 2) throw std::invalid_argument("energy_stats: window shorter than 2 samples");
  const std::size_t n_windows = record.samples.size() / window_len;
  if (n_windows < 2) throw std::invalid_argument("energy_stats: fewer than 2 full windows");

  EnergyStats stats;
  stats.window_len = window_len;
  stats.window_s = static_cast<double>(window_len) / record.fs;
  stats.fs = record.fs;
  stats.ci_level = ci_level;
  const double z = gaussian_quantile(0.5 * (1.0 + ci_level));
  const double len = static_cast<double>(window_len);
  for (std::size_t w = 0; w < n_windows; ++w) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < window_len; ++i) {
      const double c = record.samples[w * window_len + i];
      const double contribution = c * c / record.fs;  // V^2 s per sample
      sum += contribution;
      sum_sq += contribution * contribution;
    }
    const double mean_contribution = sum / len;
    const double var_contribution =
        std::max(0.0, (sum_sq - len * mean_contribution * mean_contribution) / (len - 1.0));
    const double energy_std = std::sqrt(len * var_contribution);
    stats.means.push_back(sum);
    stats.std_devs.push_back(energy_std);
    stats.ci_half_widths.push_back(z * energy_std);
  }
  return stats;
}

EnergySummary summarize(const EnergyStats& stats) {
  EnergySummary summary;
  const double n = static_cast<double>(stats.means.size());
  for (double e : stats.means) summary.mean += e;
  summary.mean /= n;
  double ss = 0.0;
  for (double e : stats.means) ss += (e - summary.mean) * (e - summary.mean);
  summary.std_dev = std::sqrt(ss / (n - 1.0));
  summary.ci_half_width =
      gaussian_quantile(0.5 * (1.0 + stats.ci_level)) * summary.std_dev / std::sqrt(n);
  return summary;
}

}  // namespace vfpid
