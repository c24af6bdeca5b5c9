// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dtloc/raytrace.hpp"
#include "dtloc/scene.hpp"
#include "dtloc/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

namespace dtloc {

inline constexpr double kDefaultFloorDbm = -174.0;

/// How subcarrier responses are combined into one subband value.
enum class Aggregation {
  Coherent, ///< complex mean of subcarrier coefficients, then power
  Power,    ///< mean of per-subcarrier beamformed powers
};

std::string to_string(Aggregation a);
Aggregation aggregation_from_string(const std::string &s);

struct ChannelConfig {
  Aggregation aggregation = Aggregation::Coherent;
  double floor_dbm = kDefaultFloorDbm;
  int oversampling = 1;

  bool operator==(const ChannelConfig &) const = default;
};

/// Unit-phase progression exp(j*2*pi*m*step) for m = 0..n-1.
template <typename Scalar>
Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> phase_ramp(int n, Scalar step) {
  Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> v(n);
  const Scalar two_pi = Scalar(2) * Scalar(kPi);
  for (int m = 0; m < n; ++m) v(m) = std::polar(Scalar(1), two_pi * step * Scalar(m));
  return v;
}

/// Direction cosine along the array axis; zero at boresight, one at endfire.
template <typename Scalar>
Scalar array_axis_cosine(const UlaSpec &array, Scalar az_deg, Scalar el_deg) {
  const Scalar az = az_deg * Scalar(kPi) / Scalar(180);
  const Scalar el = el_deg * Scalar(kPi) / Scalar(180);
  const Scalar boresight = Scalar(array.boresight_az_deg) * Scalar(kPi) / Scalar(180);
  return std::cos(el) * std::sin(az - boresight);
}

/// ULA response toward (az, el): unit-magnitude entries, all ones at boresight.
template <typename Scalar = double>
Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> array_response(const UlaSpec &array,
                                                                      Scalar az_deg,
                                                                      Scalar el_deg) {
  const Scalar u = array_axis_cosine<Scalar>(array, az_deg, el_deg);
  return phase_ramp<Scalar>(array.n_antennas, Scalar(array.spacing_wavelengths) * u);
}

/// Grid of beams; column k is the weight vector f_k.
struct Codebook {
  CMatrix beams;
  int n_antennas = 1;
  int oversampling = 1;
  /// Every entry has exactly this magnitude (1/sqrt(n_antennas)).
  double entry_magnitude = 1.0;

  int n_beams() const { return static_cast<int>(beams.cols()); }
  /// Spatial frequency (phase step per element, in cycles) of beam k.
  double spatial_frequency(int k) const;
};

/// DFT grid of beams: n_t * oversampling unit-norm beams with spatial frequencies
/// (k - floor(N/2)) / N, N = n_t * oversampling; beam floor(N/2) points at boresight.
Codebook dft_codebook(int n_antennas, int oversampling = 1);

/// Frequency-domain channel per subband: row b holds the length-n_t response.
struct SubbandChannel {
  int position_index = -1;
  CMatrix coefficients;

  int n_subbands() const { return static_cast<int>(coefficients.rows()); }
};

/// Baseband subcarrier offsets (Hz, relative to the carrier) and their subband indices.
struct SubcarrierLayout {
  std::vector<double> offsets_hz;
  std::vector<int> subband;
  int n_subbands = 0;
};
SubcarrierLayout subcarrier_layout(const Scene &scene);

/// Complex amplitude of a path in sqrt(mW), including transmit power and carrier phase.
Complex path_amplitude(const Scene &scene, const Path &path);

/// Channel vector at one subcarrier offset (Hz from the carrier).
CVector subcarrier_response(const Scene &scene, const PathSet &paths, double offset_hz);

/// Coherent subband aggregation of the subcarrier responses, with the baseband delay of every
/// path taken relative to the earliest arrival.
SubbandChannel subband_channels(const Scene &scene, const PathSet &paths, int position_index = -1);

/// |h_b^H f_k|^2 in dBm, clamped below at floor_dbm.
double rss(const SubbandChannel &channel, const Codebook &codebook, int beam, int subband,
           double floor_dbm = kDefaultFloorDbm);

/// Linear power (mW) to dBm with a floor for zero or negligible power.
double power_to_dbm(double power_mw, double floor_dbm = kDefaultFloorDbm);

/// Fingerprint of one position: n_beams x n_subbands matrix of dBm values.
Eigen::MatrixXd beam_rss(const Scene &scene, const PathSet &paths, const Codebook &codebook,
                         const ChannelConfig &config);

} // namespace dtloc
