#pragma once

#include <functional>
#include <random>
#include <vector>

#include "sdprecode/channel.hpp"
#include "sdprecode/linalg.hpp"

namespace sdp {

/// E|q_n|^2 for q uniform on the unit IQ box.
inline constexpr double kQuantNoisePower = 2.0 / 3.0;

/// Receive-noise variance for a single-path user under basic spatial sigma-delta,
/// large-N form: (4|alpha|^2 P / 3) sin^2(pi (d/lambda) sin(theta)) + sigma_v^2.
double noise_variance_single(cplx gain, double angle, double total_power, double noise_variance,
                             double spacing);

/// Pre-approximation form: (|alpha|^2 P / 3N)(|1 - z^{-1}|^2 (N - 1) + 1) + sigma_v^2.
double noise_variance_single_exact(cplx gain, double angle, double total_power, double noise_variance,
                                   double spacing, int n_antennas);

/// Angle-steered modulator with feedback phase phi:
/// (4|alpha|^2 P / 3) sin^2((phi - 2 pi (d/lambda) sin(theta)) / 2) + sigma_v^2.
double noise_variance_steered(cplx gain, double angle, double phi, double total_power,
                              double noise_variance, double spacing);

/// Multi-path channel: (P / 3N) sum_{n=0}^{N-1} |sum_l alpha_l (z_l^{-n} - z_l^{-n-1})|^2 + sigma_v^2.
double noise_variance_multipath(const std::vector<PathComponent>& paths, double total_power,
                                double noise_variance, double spacing, int n_antennas);

/// N-independent bound (4 P L / 3) sum_l |alpha_l|^2 sin^2(pi (d/lambda) sin(theta_l)) + sigma_v^2.
double noise_variance_multipath_bound(const std::vector<PathComponent>& paths, double total_power,
                                      double noise_variance, double spacing);

/// sigma_{w,i}^2 for every user of a scene: single-path and multi-path users use the
/// large-N closed forms, arbitrary channels use sigma_v^2.
std::vector<double> user_noise_variances(const MultiUserScene& scene);

/// Effective SNR of basic sigma-delta MRT:
/// |alpha|^2 P N / ((8 |alpha|^2 P / 3) sin^2(pi (d/lambda) sin(theta)) + 2 sigma_v^2).
/// Throws std::domain_error when the denominator vanishes.
double effective_snr_mrt(cplx gain, double angle, double total_power, double noise_variance,
                         double spacing, int n_antennas);

/// lim_{P -> inf} of effective_snr_mrt: 3N / (8 sin^2(pi (d/lambda) sin(theta))).
double mrt_snr_saturation(double angle, double spacing, int n_antennas);

/// A^2 |alpha|^2 P N / (2 sigma_v^2).
double effective_snr_steered(double amplitude, cplx gain, double total_power, double noise_variance,
                             int n_antennas);

/// (P / 2N) gamma^2, shared by every ZF user.
double effective_snr_zf(double gamma, double total_power, int n_antennas);

struct SepBoundParams {
  double beta;
  double chi;
};

SepBoundParams sep_bound_params(const Constellation& constellation);

/// Gaussian tail probability.
double q_function(double t);

/// min(1, beta Q(chi sqrt(snr))).
double sep_bound(double snr_eff, const Constellation& constellation);

/// Re(z s*) - |Im(z s*)| cot(pi / M): distance-like margin of z from the PSK decision
/// boundaries around s.
double lemma_psk_margin(cplx z, cplx s, int order);

/// sin(N phi) / (N sin phi), extended continuously through phi = k pi.
double digital_sinc(int n, double phi);

struct ZfSnrBound {
  double bound;       // lower bound on every user's effective SNR
  double lambda_min;  // smallest eigenvalue of R = A A^H / N
  double rho;         // max_{i != j} |D_N(pi (d/lambda)(sin theta_i - sin theta_j))|
  double orthogonal_bound;  // the K-fold single-user bound for orthogonal steering vectors
  int worst_user;     // argmax_i sigma_{w,i} / |alpha_i|
};

/// Lower bound PN |alpha_k|^2 lambda_min^2(R) / (2 K^3 sigma_{w,k}^2) on ZF effective SNRs.
/// Requires single-path users. Throws std::logic_error if 1 >= lambda_min >= 1 - (K-1) rho fails.
ZfSnrBound zf_snr_lower_bound(const MultiUserScene& scene);

/// Produces one transmit vector per trial from the trial's generator.
using SignalSource = std::function<CVec(std::mt19937_64&)>;

struct AngularSpectrum {
  std::vector<double> angles;  // radians
  std::vector<double> power;   // E|a(angle)^T x|^2
  std::vector<double> power_db;  // 10 log10(power / N^2)
};

/// Monte Carlo estimate of E|a(angle)^T x|^2 over the grid. Trial t draws from a
/// generator seeded by (seed, t) so results do not depend on evaluation order.
AngularSpectrum angular_spectrum(const SignalSource& source, const ArrayGeometry& geometry,
                                 const std::vector<double>& grid, int n_trials, std::uint64_t seed);

}  // namespace sdp
