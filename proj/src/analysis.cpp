#include "sdprecode/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sdprecode/random.hpp"

namespace sdp {

namespace {

double sin_sq(double v) {
  const double s = std::sin(v);
  return s * s;
}

double noise_std_ratio(cplx gain, double variance) {
  return std::sqrt(variance) / std::abs(gain);
}

}  // namespace

double noise_variance_single(cplx gain, double angle, double total_power, double noise_variance,
                             double spacing) {
  return 4.0 * std::norm(gain) * total_power / 3.0 * sin_sq(kPi * spacing * std::sin(angle)) +
         noise_variance;
}

double noise_variance_single_exact(cplx gain, double angle, double total_power, double noise_variance,
                                   double spacing, int n_antennas) {
  // |1 - z^{-1}|^2 = 4 sin^2(psi / 2) with psi = 2 pi (d/lambda) sin(theta).
  const double shaping = 4.0 * sin_sq(kPi * spacing * std::sin(angle));
  return std::norm(gain) * total_power / (3.0 * n_antennas) * (shaping * (n_antennas - 1) + 1.0) +
         noise_variance;
}

double noise_variance_steered(cplx gain, double angle, double phi, double total_power,
                              double noise_variance, double spacing) {
  const double mismatch = phi - 2.0 * kPi * spacing * std::sin(angle);
  return 4.0 * std::norm(gain) * total_power / 3.0 * sin_sq(0.5 * mismatch) + noise_variance;
}

double noise_variance_multipath(const std::vector<PathComponent>& paths, double total_power,
                                double noise_variance, double spacing, int n_antennas) {
  if (paths.empty()) throw std::invalid_argument("noise_variance_multipath: no paths");
  double acc = 0.0;
  for (int n = 0; n < n_antennas; ++n) {
    cplx term(0.0, 0.0);
    for (const auto& p : paths) {
      const double psi = 2.0 * kPi * spacing * std::sin(p.angle);
      term += p.gain * (std::polar(1.0, -psi * n) - std::polar(1.0, -psi * (n + 1)));
    }
    acc += std::norm(term);
  }
  return total_power / (3.0 * n_antennas) * acc + noise_variance;
}

double noise_variance_multipath_bound(const std::vector<PathComponent>& paths, double total_power,
                                      double noise_variance, double spacing) {
  double acc = 0.0;
  for (const auto& p : paths) acc += std::norm(p.gain) * sin_sq(kPi * spacing * std::sin(p.angle));
  return 4.0 * total_power * static_cast<double>(paths.size()) / 3.0 * acc + noise_variance;
}

std::vector<double> user_noise_variances(const MultiUserScene& scene) {
  std::vector<double> out;
  out.reserve(scene.channels.size());
  const double p = scene.total_power;
  const double sv2 = scene.noise_variance;
  const double d = scene.geometry.spacing();
  for (const auto& ch : scene.channels) {
    if (const auto* sp = std::get_if<SinglePath>(&ch)) {
      out.push_back(noise_variance_single(sp->gain, sp->angle, p, sv2, d));
    } else if (const auto* mp = std::get_if<MultiPath>(&ch)) {
      out.push_back(noise_variance_multipath(mp->paths, p, sv2, d, scene.geometry.n_antennas()));
    } else {
      out.push_back(sv2);
    }
  }
  return out;
}

double effective_snr_mrt(cplx gain, double angle, double total_power, double noise_variance,
                         double spacing, int n_antennas) {
  const double g2 = std::norm(gain);
  const double denom =
      8.0 * g2 * total_power / 3.0 * sin_sq(kPi * spacing * std::sin(angle)) + 2.0 * noise_variance;
  if (denom <= 0.0) throw std::domain_error("effective_snr_mrt: zero noise (broadside with sigma_v = 0)");
  return g2 * total_power * n_antennas / denom;
}

double mrt_snr_saturation(double angle, double spacing, int n_antennas) {
  const double s2 = sin_sq(kPi * spacing * std::sin(angle));
  if (s2 == 0.0) throw std::domain_error("mrt_snr_saturation: unbounded at broadside");
  return 3.0 * n_antennas / (8.0 * s2);
}

double effective_snr_steered(double amplitude, cplx gain, double total_power, double noise_variance,
                             int n_antennas) {
  if (!(noise_variance > 0.0)) throw std::domain_error("effective_snr_steered: sigma_v^2 must be positive");
  return amplitude * amplitude * std::norm(gain) * total_power * n_antennas / (2.0 * noise_variance);
}

double effective_snr_zf(double gamma, double total_power, int n_antennas) {
  return total_power / (2.0 * n_antennas) * gamma * gamma;
}

SepBoundParams sep_bound_params(const Constellation& c) {
  if (c.kind() == ConstellationKind::psk) {
    return {2.0, std::sqrt(2.0) * std::sin(kPi / c.order())};
  }
  return {4.0, 1.0 / (std::sqrt(static_cast<double>(c.order())) - 1.0)};
}

double q_function(double t) { return 0.5 * std::erfc(t / std::sqrt(2.0)); }

double sep_bound(double snr_eff, const Constellation& constellation) {
  if (!(snr_eff >= 0.0)) throw std::invalid_argument("sep_bound: snr must be >= 0");
  const auto [beta, chi] = sep_bound_params(constellation);
  return std::min(1.0, beta * q_function(chi * std::sqrt(snr_eff)));
}

double lemma_psk_margin(cplx z, cplx s, int order) {
  if (order < 2) throw std::invalid_argument("lemma_psk_margin: order must be >= 2");
  const cplx u = z * std::conj(s);
  // cot(pi/2) is zero; compute it as cos/sin so BPSK gets exactly that.
  const double cot = std::cos(kPi / order) / std::sin(kPi / order);
  return u.real() - std::abs(u.imag()) * (order == 2 ? 0.0 : cot);
}

double digital_sinc(int n, double phi) {
  if (n < 1) throw std::invalid_argument("digital_sinc: N must be >= 1");
  // phi = k pi + delta: sin(N phi) / (N sin phi) = (-1)^{(N-1)k} sin(N delta) / (N sin delta).
  const double k = std::nearbyint(phi / kPi);
  const double delta = phi - k * kPi;
  const long long parity = (static_cast<long long>(n - 1) * static_cast<long long>(k)) % 2;
  const double sign = parity == 0 ? 1.0 : -1.0;
  if (delta == 0.0) return sign;
  return sign * std::sin(n * delta) / (n * std::sin(delta));
}

ZfSnrBound zf_snr_lower_bound(const MultiUserScene& scene) {
  scene.validate();
  const int k_users = scene.n_users();
  const int n = scene.geometry.n_antennas();
  const double d = scene.geometry.spacing();
  std::vector<SinglePath> users;
  for (const auto& ch : scene.channels) {
    const auto* sp = std::get_if<SinglePath>(&ch);
    if (!sp) throw std::invalid_argument("zf_snr_lower_bound: requires single-path users");
    users.push_back(*sp);
  }

  CMat A(k_users, n);
  for (int i = 0; i < k_users; ++i) A.row(i) = array_response(scene.geometry, users[static_cast<std::size_t>(i)].angle).transpose();
  const CMat R = A * A.adjoint() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<CMat> eig(R, Eigen::EigenvaluesOnly);
  const double lambda_min = eig.eigenvalues().minCoeff();

  double rho = 0.0;
  for (int i = 0; i < k_users; ++i) {
    for (int j = 0; j < k_users; ++j) {
      if (i == j) continue;
      const double arg = kPi * d * (std::sin(users[static_cast<std::size_t>(i)].angle) - std::sin(users[static_cast<std::size_t>(j)].angle));
      rho = std::max(rho, std::abs(digital_sinc(n, arg)));
    }
  }

  const auto sw2 = user_noise_variances(scene);
  int worst = 0;
  double worst_ratio = -1.0;
  for (int i = 0; i < k_users; ++i) {
    const double r = noise_std_ratio(users[static_cast<std::size_t>(i)].gain, sw2[static_cast<std::size_t>(i)]);
    if (r > worst_ratio) {
      worst_ratio = r;
      worst = i;
    }
  }

  constexpr double kSlack = 1e-10;
  if (lambda_min > 1.0 + kSlack || lambda_min < 1.0 - (k_users - 1) * rho - kSlack) {
    throw std::logic_error("eigenvalue sandwich violated: lambda_min = " + std::to_string(lambda_min) +
                           ", rho = " + std::to_string(rho));
  }

  const double p = scene.total_power;
  const double ak2 = std::norm(users[static_cast<std::size_t>(worst)].gain);
  const double swk2 = sw2[static_cast<std::size_t>(worst)];
  const double kd = static_cast<double>(k_users);
  ZfSnrBound out;
  out.lambda_min = lambda_min;
  out.rho = rho;
  out.worst_user = worst;
  out.bound = p * n * ak2 * lambda_min * lambda_min / (2.0 * kd * kd * kd * swk2);
  out.orthogonal_bound = p * n * ak2 / (2.0 * kd * swk2);
  return out;
}

AngularSpectrum angular_spectrum(const SignalSource& source, const ArrayGeometry& geometry,
                                 const std::vector<double>& grid, int n_trials, std::uint64_t seed) {
  if (n_trials < 1) throw std::invalid_argument("angular_spectrum: n_trials must be >= 1");
  const int n = geometry.n_antennas();
  CMat steer(static_cast<Eigen::Index>(grid.size()), n);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    steer.row(static_cast<Eigen::Index>(g)) = array_response(geometry, grid[g]).transpose();
  }
  RVec acc = RVec::Zero(steer.rows());
  for (int t = 0; t < n_trials; ++t) {
    std::mt19937_64 rng(substream_seed(seed, 0, static_cast<std::uint64_t>(t)));
    const CVec x = source(rng);
    if (x.size() != n) throw std::invalid_argument("angular_spectrum: source produced wrong length");
    acc += (steer * x).cwiseAbs2();
  }
  AngularSpectrum out;
  out.angles = grid;
  const double ref = static_cast<double>(n) * n;
  for (Eigen::Index g = 0; g < acc.size(); ++g) {
    const double p = acc[g] / n_trials;
    out.power.push_back(p);
    out.power_db.push_back(10.0 * std::log10(std::max(p, 1e-300) / ref));
  }
  return out;
}

}  // namespace sdp
