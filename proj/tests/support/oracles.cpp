// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double friis_gain_db(double distance_m, double freq_hz) {
  const double lambda = kC / freq_hz;
  const double ratio = lambda / (4.0 * 3.14159265358979323846 * distance_m);
  return 10.0 * std::log10(ratio * ratio);
}

double two_ray_subband_dbm(double d, double ht, double hr, double carrier_hz,
                           const std::vector<double> &offsets_hz, double tx_dbm,
                           std::complex<double> gamma) {
  const double d1 = std::hypot(d, ht - hr);
  const double d2 = std::hypot(d, ht + hr);
  const double lambda = kC / carrier_hz;
  std::complex<double> acc = 0.0;
  for (double f : offsets_hz) {
    // Carrier phase uses absolute lengths; baseband phase uses the excess length of the ground ray.
    const std::complex<double> direct = std::polar(lambda / (4 * 3.14159265358979323846 * d1),
                                                   -kTwoPi * carrier_hz * d1 / kC);
    const std::complex<double> ground =
        gamma * std::polar(lambda / (4 * 3.14159265358979323846 * d2),
                           -kTwoPi * carrier_hz * d2 / kC - kTwoPi * f * (d2 - d1) / kC);
    acc += direct + ground;
  }
  acc /= static_cast<double>(offsets_hz.size());
  return tx_dbm + 10.0 * std::log10(std::norm(acc));
}

double two_ray_power_dbm(double d, double ht, double hr, double freq_hz, double tx_dbm,
                         std::complex<double> gamma) {
  return two_ray_subband_dbm(d, ht, hr, freq_hz, {0.0}, tx_dbm, gamma);
}

double gaussian_interval_simpson(double a, double b, double mu, double sigma, int intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  auto pdf = [&](double x) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(kTwoPi));
  };
  double acc = pdf(a) + pdf(b);
  for (int i = 1; i < intervals; ++i) acc += (i % 2 ? 4.0 : 2.0) * pdf(a + i * h);
  return acc * h / 3.0;
}

double brute_force_entry_log_prob(double measured, double mean, double sigma, double delta) {
  return std::log(gaussian_interval_simpson(measured - delta, measured + delta, mean, sigma));
}

int brute_force_argmax(const std::vector<std::vector<double>> &fingerprints,
                       const std::vector<Entry> &entries, double sigma, double delta) {
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < fingerprints.size(); ++p) {
    double score = 0.0;
    for (const auto &e : entries) {
      score += brute_force_entry_log_prob(e.value, fingerprints[p][static_cast<std::size_t>(e.row)], sigma, delta);
    }
    if (best < 0 || score > best_score) {
      best = static_cast<int>(p);
      best_score = score;
    }
  }
  return best;
}

double nearest_rank(const std::vector<double> &values, double q) {
  const auto n = values.size();
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * static_cast<double>(n) - 1e-9)));
  // The rank-th smallest value: the smallest v with at least `rank` values <= v.
  double answer = std::numeric_limits<double>::infinity();
  for (double v : values) {
    const auto le = static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [&](double x) { return x <= v; }));
    if (le >= rank) answer = std::min(answer, v);
  }
  return answer;
}

} // namespace oracle
