#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "sdprecode/linalg.hpp"

namespace sdp {

/// Uniform linear array. Only the ratio d/lambda enters the array response.
class ArrayGeometry {
 public:
  ArrayGeometry(int n_antennas, double spacing_over_wavelength);

  int n_antennas() const { return n_antennas_; }
  double spacing() const { return spacing_; }

  friend bool operator==(const ArrayGeometry&, const ArrayGeometry&) = default;

 private:
  int n_antennas_;
  double spacing_;
};

struct PathComponent {
  cplx gain;
  double angle;  // radians, [-pi/2, pi/2]
};

struct SinglePath {
  cplx gain;
  double angle;
};

struct MultiPath {
  std::vector<PathComponent> paths;
};

struct Arbitrary {
  CVec coefficients;
};

using Channel = std::variant<SinglePath, MultiPath, Arbitrary>;

/// Throws std::invalid_argument on angles outside [-pi/2, pi/2] or an empty path list.
void validate_channel(const Channel& channel);

/// Element n (0-based) is exp(-j n 2 pi (d/lambda) sin(angle)).
CVec array_response(const ArrayGeometry& geometry, double angle);

/// Per-element phase progression 2 pi (d/lambda) sin(angle).
double steering_phase(const ArrayGeometry& geometry, double angle);

CVec realize_channel(const Channel& channel, const ArrayGeometry& geometry);

/// Channel coefficients reordered by nondecreasing magnitude, with the permutation
/// needed to map modulator outputs back to physical antenna order.
class CanonicalChannel {
 public:
  /// Throws std::invalid_argument if any coefficient is zero.
  static CanonicalChannel from_physical(const CVec& h);

  const CVec& coefficients() const { return coefficients_; }
  /// permutation()[k] is the physical antenna index of canonical position k.
  const std::vector<std::size_t>& permutation() const { return permutation_; }
  Eigen::Index size() const { return coefficients_.size(); }

  CVec to_physical(const CVec& canonical) const;
  CVec to_canonical(const CVec& physical) const;

 private:
  CVec coefficients_;
  std::vector<std::size_t> permutation_;
};

enum class ConstellationKind { psk, qam };

/// M-PSK or square M-QAM normalized to unit peak amplitude, with Gray bit labels.
class Constellation {
 public:
  static Constellation psk(int order);
  static Constellation qam(int order);
  static Constellation make(ConstellationKind kind, int order);

  ConstellationKind kind() const { return kind_; }
  int order() const { return order_; }
  int bits_per_symbol() const { return bits_; }
  const std::vector<cplx>& points() const { return points_; }
  cplx point(std::size_t i) const { return points_[i]; }
  std::uint32_t label(std::size_t i) const { return labels_[i]; }

  /// Index of the point nearest to y / scale. PSK decisions use the phase only.
  std::size_t decide(cplx y, double scale = 1.0) const;

  /// Hamming distance between the Gray labels of two points.
  int bit_errors(std::size_t sent, std::size_t decided) const;

 private:
  Constellation(ConstellationKind kind, int order);

  ConstellationKind kind_;
  int order_;
  int bits_ = 0;
  int side_ = 0;  // QAM levels per axis
  std::vector<cplx> points_;
  std::vector<std::uint32_t> labels_;
};

std::size_t decide(cplx y, const Constellation& constellation, double scale);

/// Downlink scene: K users served by one array with total power P and noise variance sigma_v^2.
struct MultiUserScene {
  ArrayGeometry geometry;
  std::vector<Channel> channels;
  double total_power = 1.0;
  double noise_variance = 0.0;

  int n_users() const { return static_cast<int>(channels.size()); }

  /// Throws std::invalid_argument unless 1 <= K <= N, P > 0, sigma_v^2 >= 0 and all channels are valid.
  void validate() const;

  /// K x N matrix whose i-th row is h_i^T.
  CMat channel_matrix() const;
};

}  // namespace sdp
