// SPDX-License-Identifier: Apache-2.0
#include "dtloc/channel.hpp"

#include "dtloc/error.hpp"

#include <cmath>

namespace dtloc {

std::string to_string(Aggregation a) { return a == Aggregation::Coherent ? "coherent" : "power"; }

Aggregation aggregation_from_string(const std::string &s) {
  if (s == "coherent") return Aggregation::Coherent;
  if (s == "power") return Aggregation::Power;
  throw ValidationError("aggregation", "expected 'coherent' or 'power', got '" + s + "'");
}

double Codebook::spatial_frequency(int k) const {
  const int n = n_beams();
  return static_cast<double>(k - n / 2) / static_cast<double>(n);
}

Codebook dft_codebook(int n_antennas, int oversampling) {
  if (n_antennas < 1) throw ValidationError("n_antennas", "must be >= 1");
  if (oversampling < 1) throw ValidationError("oversampling", "must be >= 1");
  Codebook cb;
  cb.n_antennas = n_antennas;
  cb.oversampling = oversampling;
  cb.entry_magnitude = 1.0 / std::sqrt(static_cast<double>(n_antennas));
  const int n_beams = n_antennas * oversampling;
  cb.beams.resize(n_antennas, n_beams);
  for (int k = 0; k < n_beams; ++k) {
    const double q = static_cast<double>(k - n_beams / 2) / static_cast<double>(n_beams);
    cb.beams.col(k) = phase_ramp<double>(n_antennas, q) * cb.entry_magnitude;
  }
  return cb;
}

SubcarrierLayout subcarrier_layout(const Scene &scene) {
  SubcarrierLayout layout;
  layout.n_subbands = scene.n_subbands();
  const auto count =
      static_cast<std::size_t>(std::floor(scene.bandwidth_hz / scene.subcarrier_hz + 1e-9));
  layout.offsets_hz.reserve(count);
  layout.subband.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const double from_edge = (static_cast<double>(n) + 0.5) * scene.subcarrier_hz;
    layout.offsets_hz.push_back(from_edge - 0.5 * scene.bandwidth_hz);
    const int b = static_cast<int>(std::floor(from_edge / scene.subband_hz));
    layout.subband.push_back(std::min(b, layout.n_subbands - 1));
  }
  return layout;
}

Complex path_amplitude(const Scene &scene, const Path &path) {
  const double magnitude = std::pow(10.0, (path.gain_db + scene.bs.tx_power_dbm) / 20.0);
  return std::polar(magnitude, path.phase_rad);
}

CVector subcarrier_response(const Scene &scene, const PathSet &paths, double offset_hz) {
  CVector h = CVector::Zero(scene.bs.array.n_antennas);
  for (const auto &p : paths.paths) {
    const Complex c = path_amplitude(scene, p) * std::polar(1.0, -2.0 * kPi * offset_hz * p.delay_s);
    h += c * array_response<double>(scene.bs.array, p.aod_az_deg, p.aod_el_deg);
  }
  return h;
}

namespace {

// Per path, the complex mean of exp(-j 2 pi f tau) over each subband's subcarriers.
// Result is n_paths x n_subbands.
CMatrix subband_phase_means(const PathSet &paths, const SubcarrierLayout &layout,
                            double subcarrier_hz) {
  const auto n_paths = static_cast<Eigen::Index>(paths.paths.size());
  CMatrix means = CMatrix::Zero(n_paths, layout.n_subbands);
  std::vector<int> counts(static_cast<std::size_t>(layout.n_subbands), 0);
  for (int s : layout.subband) ++counts[static_cast<std::size_t>(s)];
  // Baseband delays are taken relative to the first arrival (receiver timing synchronization).
  double tau0 = paths.paths.front().delay_s;
  for (const auto &p : paths.paths) tau0 = std::min(tau0, p.delay_s);
  for (Eigen::Index l = 0; l < n_paths; ++l) {
    const double tau = paths.paths[static_cast<std::size_t>(l)].delay_s - tau0;
    const Complex step = std::polar(1.0, -2.0 * kPi * subcarrier_hz * tau);
    Complex z{};
    int current = -1;
    for (std::size_t n = 0; n < layout.offsets_hz.size(); ++n) {
      const int b = layout.subband[n];
      // Restart the phasor recurrence exactly at each subband boundary.
      z = (b != current) ? std::polar(1.0, -2.0 * kPi * layout.offsets_hz[n] * tau) : z * step;
      current = b;
      means(l, b) += z;
    }
  }
  for (int b = 0; b < layout.n_subbands; ++b) {
    if (counts[static_cast<std::size_t>(b)] > 0) means.col(b) /= counts[static_cast<std::size_t>(b)];
  }
  return means;
}

// Columns are the path steering vectors scaled by the complex path amplitudes.
CMatrix weighted_steering(const Scene &scene, const PathSet &paths) {
  CMatrix a(scene.bs.array.n_antennas, static_cast<Eigen::Index>(paths.paths.size()));
  for (std::size_t l = 0; l < paths.paths.size(); ++l) {
    const auto &p = paths.paths[l];
    a.col(static_cast<Eigen::Index>(l)) =
        path_amplitude(scene, p) * array_response<double>(scene.bs.array, p.aod_az_deg, p.aod_el_deg);
  }
  return a;
}

} // namespace

SubbandChannel subband_channels(const Scene &scene, const PathSet &paths, int position_index) {
  const SubcarrierLayout layout = subcarrier_layout(scene);
  SubbandChannel ch;
  ch.position_index = position_index;
  if (paths.paths.empty()) {
    ch.coefficients = CMatrix::Zero(layout.n_subbands, scene.bs.array.n_antennas);
    return ch;
  }
  const CMatrix means = subband_phase_means(paths, layout, scene.subcarrier_hz);
  // (subbands x paths) * (paths x antennas)
  ch.coefficients = means.transpose() * weighted_steering(scene, paths).transpose();
  return ch;
}

double power_to_dbm(double power_mw, double floor_dbm) {
  if (!(power_mw > 0.0)) return floor_dbm;
  return std::max(10.0 * std::log10(power_mw), floor_dbm);
}

double rss(const SubbandChannel &channel, const Codebook &codebook, int beam, int subband,
           double floor_dbm) {
  if (beam < 0 || beam >= codebook.n_beams()) throw ValidationError("beam", "out of range");
  if (subband < 0 || subband >= channel.n_subbands()) {
    throw ValidationError("subband", "out of range");
  }
  // Eigen's dot conjugates its left operand: y = h_b^H f_k.
  const Complex y = channel.coefficients.row(subband).transpose().dot(codebook.beams.col(beam));
  return power_to_dbm(std::norm(y), floor_dbm);
}

Eigen::MatrixXd beam_rss(const Scene &scene, const PathSet &paths, const Codebook &codebook,
                         const ChannelConfig &config) {
  const int n_sub = scene.n_subbands();
  Eigen::MatrixXd out(codebook.n_beams(), n_sub);
  if (paths.paths.empty()) {
    out.setConstant(config.floor_dbm);
    return out;
  }
  Eigen::MatrixXd power;
  if (config.aggregation == Aggregation::Coherent) {
    const SubbandChannel ch = subband_channels(scene, paths);
    // y(b, k) = h_b^H f_k
    const CMatrix y = ch.coefficients.conjugate() * codebook.beams;
    power = y.cwiseAbs2().transpose();
  } else {
    const SubcarrierLayout layout = subcarrier_layout(scene);
    const CMatrix gains = weighted_steering(scene, paths).adjoint() * codebook.beams;
    power = Eigen::MatrixXd::Zero(codebook.n_beams(), n_sub);
    std::vector<int> counts(static_cast<std::size_t>(n_sub), 0);
    Eigen::RowVectorXcd phases(static_cast<Eigen::Index>(paths.paths.size()));
    for (std::size_t n = 0; n < layout.offsets_hz.size(); ++n) {
      for (std::size_t l = 0; l < paths.paths.size(); ++l) {
        phases(static_cast<Eigen::Index>(l)) =
            std::polar(1.0, 2.0 * kPi * layout.offsets_hz[n] * paths.paths[l].delay_s);
      }
      const int b = layout.subband[n];
      power.col(b) += (phases * gains).cwiseAbs2().transpose();
      ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < n_sub; ++b) {
      if (counts[static_cast<std::size_t>(b)] > 0) power.col(b) /= counts[static_cast<std::size_t>(b)];
    }
  }
  for (Eigen::Index k = 0; k < out.rows(); ++k) {
    for (Eigen::Index b = 0; b < out.cols(); ++b) out(k, b) = power_to_dbm(power(k, b), config.floor_dbm);
  }
  return out;
}

} // namespace dtloc
