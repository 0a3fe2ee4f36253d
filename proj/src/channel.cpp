#include "sdprecode/channel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sdp {

namespace {

constexpr double kAngleSlack = 1e-12;

void check_angle(double angle) {
  if (!std::isfinite(angle) || std::abs(angle) > kPi / 2 + kAngleSlack) {
    throw std::invalid_argument("angle outside [-pi/2, pi/2]: " + std::to_string(angle));
  }
}

std::uint32_t gray(std::uint32_t k) { return k ^ (k >> 1); }

}  // namespace

ArrayGeometry::ArrayGeometry(int n_antennas, double spacing_over_wavelength)
    : n_antennas_(n_antennas), spacing_(spacing_over_wavelength) {
  if (n_antennas < 1) {
    throw std::invalid_argument("ArrayGeometry: n_antennas must be >= 1");
  }
  if (!(spacing_over_wavelength > 0.0) || spacing_over_wavelength > 0.5) {
    throw std::invalid_argument("ArrayGeometry: spacing_over_wavelength must lie in (0, 0.5]");
  }
}

void validate_channel(const Channel& channel) {
  std::visit(
      [](const auto& ch) {
        using T = std::decay_t<decltype(ch)>;
        if constexpr (std::is_same_v<T, SinglePath>) {
          check_angle(ch.angle);
        } else if constexpr (std::is_same_v<T, MultiPath>) {
          if (ch.paths.empty()) {
            throw std::invalid_argument("MultiPath channel needs at least one path");
          }
          for (const auto& p : ch.paths) check_angle(p.angle);
        } else {
          if (ch.coefficients.size() == 0) {
            throw std::invalid_argument("Arbitrary channel is empty");
          }
        }
      },
      channel);
}

double steering_phase(const ArrayGeometry& geometry, double angle) {
  return 2.0 * kPi * geometry.spacing() * std::sin(angle);
}

CVec array_response(const ArrayGeometry& geometry, double angle) {
  check_angle(angle);
  const double step = steering_phase(geometry, angle);
  CVec a(geometry.n_antennas());
  for (int n = 0; n < geometry.n_antennas(); ++n) {
    // std::polar keeps element 0 exactly 1.
    a[n] = std::polar(1.0, -step * n);
  }
  return a;
}

CVec realize_channel(const Channel& channel, const ArrayGeometry& geometry) {
  validate_channel(channel);
  const int n = geometry.n_antennas();
  return std::visit(
      [&](const auto& ch) -> CVec {
        using T = std::decay_t<decltype(ch)>;
        if constexpr (std::is_same_v<T, SinglePath>) {
          return ch.gain * array_response(geometry, ch.angle);
        } else if constexpr (std::is_same_v<T, MultiPath>) {
          CVec h = CVec::Zero(n);
          for (const auto& p : ch.paths) h += p.gain * array_response(geometry, p.angle);
          return h;
        } else {
          if (ch.coefficients.size() != n) {
            throw std::invalid_argument("Arbitrary channel length " +
                                        std::to_string(ch.coefficients.size()) +
                                        " does not match N = " + std::to_string(n));
          }
          return ch.coefficients;
        }
      },
      channel);
}

CanonicalChannel CanonicalChannel::from_physical(const CVec& h) {
  for (Eigen::Index n = 0; n < h.size(); ++n) {
    if (h[n] == cplx(0.0, 0.0)) {
      throw std::invalid_argument("channel coefficient " + std::to_string(n) + " is zero");
    }
  }
  CanonicalChannel c;
  c.permutation_.resize(static_cast<std::size_t>(h.size()));
  std::iota(c.permutation_.begin(), c.permutation_.end(), std::size_t{0});
  std::stable_sort(c.permutation_.begin(), c.permutation_.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(h[a]) < std::abs(h[b]); });
  c.coefficients_.resize(h.size());
  for (std::size_t k = 0; k < c.permutation_.size(); ++k) {
    c.coefficients_[static_cast<Eigen::Index>(k)] = h[static_cast<Eigen::Index>(c.permutation_[k])];
  }
  return c;
}

CVec CanonicalChannel::to_physical(const CVec& canonical) const {
  if (canonical.size() != coefficients_.size()) {
    throw std::invalid_argument("to_physical: length mismatch");
  }
  CVec out(canonical.size());
  for (std::size_t k = 0; k < permutation_.size(); ++k) {
    out[static_cast<Eigen::Index>(permutation_[k])] = canonical[static_cast<Eigen::Index>(k)];
  }
  return out;
}

CVec CanonicalChannel::to_canonical(const CVec& physical) const {
  if (physical.size() != coefficients_.size()) {
    throw std::invalid_argument("to_canonical: length mismatch");
  }
  CVec out(physical.size());
  for (std::size_t k = 0; k < permutation_.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = physical[static_cast<Eigen::Index>(permutation_[k])];
  }
  return out;
}

Constellation::Constellation(ConstellationKind kind, int order) : kind_(kind), order_(order) {}

Constellation Constellation::psk(int order) {
  if (order < 2) throw std::invalid_argument("PSK order must be >= 2");
  Constellation c(ConstellationKind::psk, order);
  c.bits_ = std::bit_width(static_cast<unsigned>(order - 1));
  c.points_.reserve(static_cast<std::size_t>(order));
  c.labels_.reserve(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    c.points_.push_back(std::polar(1.0, 2.0 * kPi * k / order));
    c.labels_.push_back(gray(static_cast<std::uint32_t>(k)));
  }
  return c;
}

Constellation Constellation::qam(int order) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
  if (order < 4 || side * side != order || !std::has_single_bit(static_cast<unsigned>(order)) ||
      std::countr_zero(static_cast<unsigned>(order)) % 2 != 0) {
    throw std::invalid_argument("QAM order must be a power of 4, got " + std::to_string(order));
  }
  Constellation c(ConstellationKind::qam, order);
  c.side_ = side;
  c.bits_ = std::countr_zero(static_cast<unsigned>(order));
  const int axis_bits = c.bits_ / 2;
  const double norm = 1.0 / (std::sqrt(2.0) * (side - 1));
  for (int li = 0; li < side; ++li) {
    for (int lq = 0; lq < side; ++lq) {
      c.points_.emplace_back((2 * li - (side - 1)) * norm, (2 * lq - (side - 1)) * norm);
      c.labels_.push_back((gray(static_cast<std::uint32_t>(li)) << axis_bits) |
                          gray(static_cast<std::uint32_t>(lq)));
    }
  }
  return c;
}

Constellation Constellation::make(ConstellationKind kind, int order) {
  return kind == ConstellationKind::psk ? psk(order) : qam(order);
}

std::size_t Constellation::decide(cplx y, double scale) const {
  if (kind_ == ConstellationKind::psk) {
    const double sector = 2.0 * kPi / order_;
    long k = std::lround(std::arg(y) / sector);
    k %= order_;
    if (k < 0) k += order_;
    return static_cast<std::size_t>(k);
  }
  if (!(scale > 0.0)) throw std::invalid_argument("decide: scale must be positive");
  const double grid = std::sqrt(2.0) * (side_ - 1) / scale;
  auto level = [&](double v) {
    const long l = std::lround((v * grid + (side_ - 1)) / 2.0);
    return static_cast<int>(std::clamp<long>(l, 0, side_ - 1));
  };
  return static_cast<std::size_t>(level(y.real()) * side_ + level(y.imag()));
}

int Constellation::bit_errors(std::size_t sent, std::size_t decided) const {
  return std::popcount(labels_[sent] ^ labels_[decided]);
}

std::size_t decide(cplx y, const Constellation& constellation, double scale) {
  return constellation.decide(y, scale);
}

void MultiUserScene::validate() const {
  const int k = n_users();
  if (k < 1) throw std::invalid_argument("scene needs at least one user");
  if (k > geometry.n_antennas()) {
    throw std::invalid_argument("scene has more users (" + std::to_string(k) + ") than antennas (" +
                                std::to_string(geometry.n_antennas()) + ")");
  }
  if (!(total_power > 0.0)) throw std::invalid_argument("total_power must be positive");
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("noise_variance must be >= 0");
  for (const auto& ch : channels) validate_channel(ch);
}

CMat MultiUserScene::channel_matrix() const {
  CMat H(n_users(), geometry.n_antennas());
  for (int i = 0; i < n_users(); ++i) {
    H.row(i) = realize_channel(channels[static_cast<std::size_t>(i)], geometry).transpose();
  }
  return H;
}

}  // namespace sdp
