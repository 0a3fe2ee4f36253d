#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "sdprecode/analysis.hpp"
#include "sdprecode/modulator.hpp"
#include "sdprecode/precoder.hpp"

using namespace sdp;

namespace {

double deg(double d) { return d * kPi / 180.0; }

double db(double x) { return 10 * std::log10(x); }

}  // namespace

TEST_CASE("single-path noise variance") {
  CHECK(noise_variance_single(1.0, 0.0, 5.0, 0.3, 0.125) == doctest::Approx(0.3));
  CHECK(noise_variance_single(1.0, kPi / 2, 3.0, 1.0, 0.5) == doctest::Approx(5.0));
  CHECK(noise_variance_single(cplx(0, 2), kPi / 2, 3.0, 1.0, 0.5) == doctest::Approx(17.0));

  for (double th : {30.0, 60.0, 90.0}) {
    const double big = noise_variance_single(1.0, deg(th), 1.0, 0.0, 0.5);
    const double exact = noise_variance_single_exact(1.0, deg(th), 1.0, 0.0, 0.5, 512);
    CHECK(std::abs(exact - big) / big < 0.01);
  }

  double prev = -1;
  for (int i = 0; i <= 90; ++i) {
    const double v = noise_variance_single(0.7, deg(i), 2.0, 0.1, 0.125);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("steered noise variance") {
  const ArrayGeometry g(64, 0.125);
  const double th = deg(40);
  const double phi = steering_phase(g, th);
  CHECK(noise_variance_steered(1.0, th, phi, 2.0, 0.4, 0.125) == doctest::Approx(0.4));
  CHECK(noise_variance_steered(1.0, th, 0.0, 2.0, 0.4, 0.125) ==
        doctest::Approx(noise_variance_single(1.0, th, 2.0, 0.4, 0.125)));
  CHECK(noise_variance_steered(1.5, th, phi + kPi, 2.0, 0.4, 0.125) ==
        doctest::Approx(4 * 2.25 * 2.0 / 3 + 0.4));
}

TEST_CASE("multi-path noise variance") {
  CHECK(noise_variance_multipath({{1.0, 0.0}}, 3.0, 0.2, 0.125, 128) == doctest::Approx(0.2));

  // One path differs from the exact single-path form only in the last-antenna term.
  for (int N : {64, 256, 1024}) {
    for (double d : {0.125, 0.5}) {
      const double th = deg(35);
      const cplx alpha = std::polar(1.3, 0.4);
      const double mp = noise_variance_multipath({{alpha, th}}, 1.0, 0.0, d, N);
      const double ex = noise_variance_single_exact(alpha, th, 1.0, 0.0, d, N);
      const double e2 = std::norm(1.0 - std::polar(1.0, 2 * kPi * d * std::sin(th)));
      CHECK(mp - ex == doctest::Approx(std::norm(alpha) / (3.0 * N) * (e2 - 1.0)));
      if (e2 >= 0.5) CHECK(std::abs(mp - ex) / ex < 1.0 / N);
    }
  }

  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> ang(-kPi / 2, kPi / 2), ph(-kPi, kPi), mag(0.1, 2.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<PathComponent> paths;
    for (int l = 0; l < 3; ++l) paths.push_back({std::polar(mag(rng), ph(rng)), ang(rng)});
    const double v = noise_variance_multipath(paths, 1.5, 0.1, 0.125, 128);
    CHECK(v <= noise_variance_multipath_bound(paths, 1.5, 0.1, 0.125) + 1e-12);
    CHECK(v >= 0.1);
  }
}

TEST_CASE("effective SNR closed forms") {
  CHECK(effective_snr_mrt(1.0, 0.0, 2.0, 0.5, 0.125, 64) == doctest::Approx(2.0 * 64 / (2 * 0.5)));
  CHECK_THROWS_AS(effective_snr_mrt(1.0, 0.0, 2.0, 0.0, 0.125, 64), std::domain_error);

  const double th = deg(50);
  const double sat = mrt_snr_saturation(th, 0.125, 256);
  const double s = std::sin(kPi * 0.125 * std::sin(th));
  CHECK(sat == doctest::Approx(3 * 256 / (8 * s * s)));
  CHECK(effective_snr_mrt(1.0, th, 1e9, 1.0, 0.125, 256) == doctest::Approx(sat).epsilon(1e-6));
  CHECK(effective_snr_mrt(1.0, th, 10.0, 1.0, 0.125, 256) < sat);

  const double A = no_overload_amplitude(kPi / 4);
  const double loss = db(effective_snr_steered(A, 1.0, 1.0, 1.0, 64) / effective_snr_steered(1.0, 1.0, 1.0, 1.0, 64));
  CHECK(loss == doctest::Approx(-4.64).epsilon(2e-3));
  CHECK(effective_snr_zf(3.0, 2.0, 16) == doctest::Approx(2.0 / 32 * 9));
}

TEST_CASE("SEP bound") {
  const auto p8 = Constellation::psk(8);
  const auto q16 = Constellation::qam(16);
  CHECK(sep_bound(0.0, p8) == 1.0);
  CHECK(sep_bound_params(p8).beta == 2.0);
  CHECK(sep_bound_params(p8).chi == doctest::Approx(std::sqrt(2.0) * std::sin(kPi / 8)));
  CHECK(sep_bound_params(q16).beta == 4.0);
  CHECK(sep_bound_params(q16).chi == doctest::Approx(1.0 / 3.0));

  for (double t : {0.0, 0.5, 1.0, 3.0, 6.0}) CHECK(q_function(t) == doctest::Approx(0.5 * std::erfc(t / std::sqrt(2.0))));
  CHECK(q_function(0.0) == 0.5);

  double prev = 2;
  for (int i = 0; i <= 60; ++i) {
    const double v = sep_bound(std::pow(10.0, i / 20.0), p8);
    CHECK(v <= prev);
    prev = v;
  }
  CHECK(sep_bound(100.0, p8) == doctest::Approx(2 * q_function(std::sqrt(2.0) * std::sin(kPi / 8) * 10)));
}

TEST_CASE("PSK margin") {
  const auto p8 = Constellation::psk(8);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(lemma_psk_margin(2.5 * p8.point(k), p8.point(k), 8) == doctest::Approx(2.5));
    // On a decision boundary the margin is zero.
    const cplx edge = std::polar(1.7, 2 * kPi * k / 8 + kPi / 8);
    CHECK(std::abs(lemma_psk_margin(edge, p8.point(k), 8)) < 1e-12);
  }
  CHECK(lemma_psk_margin(std::polar(1.0, 0.5), 1.0, 8) < 0.0);
}

TEST_CASE("digital sinc") {
  CHECK(digital_sinc(7, 0.0) == 1.0);
  CHECK(std::abs(digital_sinc(4, kPi / 4)) < 1e-15);
  for (int N : {3, 4, 16}) {
    for (int i = -3000; i <= 3000; ++i) {
      const double phi = i * kPi / 1000.0;
      CHECK(std::abs(digital_sinc(N, phi)) <= 1.0 + 1e-12);
    }
    for (int k = -2; k <= 2; ++k) {
      const double lim = digital_sinc(N, k * kPi);
      CHECK(lim == doctest::Approx(digital_sinc(N, k * kPi + 1e-7)).epsilon(1e-5));
      CHECK(std::abs(lim) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("ZF SNR lower bound") {
  const int N = 64;
  const ArrayGeometry g(N, 0.5);
  {
    MultiUserScene one{g, {SinglePath{0.8, deg(20)}}, 2.0, 0.1};
    const auto b = zf_snr_lower_bound(one);
    CHECK(b.lambda_min == doctest::Approx(1.0));
    const double sw2 = user_noise_variances(one)[0];
    CHECK(b.bound == doctest::Approx(2.0 * N * 0.64 / (2 * sw2)));
  }
  {
    // sin(theta_i) = 2 i / N puts the steering vectors on distinct DFT bins.
    std::vector<Channel> ch;
    for (int i = 0; i < 4; ++i) ch.push_back(SinglePath{1.0, std::asin(2.0 * i / N)});
    MultiUserScene orth{g, ch, 1.0, 0.1};
    const auto b = zf_snr_lower_bound(orth);
    CHECK(b.lambda_min == doctest::Approx(1.0));
    CHECK(b.rho < 1e-12);
  }

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ang(-kPi / 6, kPi / 6), ph(-kPi, kPi), r(20.0, 100.0);
  const auto p8 = Constellation::psk(8);
  std::uniform_int_distribution<int> sym(0, 7);
  for (int t = 0; t < 1000; ++t) {
    std::vector<Channel> ch;
    for (int i = 0; i < 8; ++i) ch.push_back(SinglePath{std::polar(30.0 / r(rng), ph(rng)), ang(rng)});
    MultiUserScene scene{ArrayGeometry(128, 0.125), ch, 1.0, 0.05};
    ZfSnrBound b;
    try {
      b = zf_snr_lower_bound(scene);
    } catch (const std::logic_error&) {
      FAIL("eigenvalue sandwich violated");
    }
    CHECK(b.lambda_min <= 1.0 + 1e-12);
    CHECK(b.lambda_min >= 1.0 - 7 * b.rho - 1e-12);
    CVec s(8);
    for (int i = 0; i < 8; ++i) s(i) = p8.point(sym(rng));
    PrecodeOutput zf;
    try {
      zf = zf_precode(scene, s);
    } catch (const std::invalid_argument&) {
      continue;  // nearly coincident angles
    }
    const double gamma = zf.gains(0) / std::sqrt(user_noise_variances(scene)[0]);
    CHECK(effective_snr_zf(gamma, 1.0, 128) >= b.bound * (1 - 1e-9));
  }
}

TEST_CASE("angular spectrum") {
  const ArrayGeometry g(32, 0.5);
  const double th = deg(25);
  const SinglePath ch{1.0, th};
  const SignalSource mrt = [&](std::mt19937_64&) { return mrt_single(ch, g, 1.0).xbar; };
  const auto s = angular_spectrum(mrt, g, {th, 0.0}, 1, 1);
  CHECK(s.power[0] == doctest::Approx(32.0 * 32.0));
  CHECK(std::abs(s.power_db[0]) < 1e-9);

  const SignalSource iid = [](std::mt19937_64& rng) {
    std::bernoulli_distribution b;
    CVec x(32);
    for (int n = 0; n < 32; ++n) x(n) = cplx(b(rng) ? 1 : -1, b(rng) ? 1 : -1);
    return x;
  };
  std::vector<double> grid;
  for (int i = -8; i <= 8; ++i) grid.push_back(deg(10.0 * i));
  const auto flat = angular_spectrum(iid, g, grid, 4000, 3);
  for (double p : flat.power) CHECK(p == doctest::Approx(64.0).epsilon(0.05));

  const auto again = angular_spectrum(iid, g, grid, 4000, 3);
  CHECK(again.power == flat.power);
}

TEST_CASE("sigma-delta noise variance matches the i.i.d. model on box inputs") {
  const int N = 128;
  const ArrayGeometry g(N, 0.125);
  const double P = 1.0;
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double th : {0.0, 45.0}) {
    const CVec h = array_response(g, deg(th));
    double acc = 0;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
      CVec x(N);
      for (int n = 0; n < N; ++n) x(n) = cplx(u(rng), u(rng));
      const auto r = sd_basic(x);
      const cplx e = std::sqrt(P / (2 * N)) * cplx(h.transpose() * (r.output - x));
      acc += std::norm(e);
    }
    const double model = noise_variance_single_exact(1.0, deg(th), P, 0.0, 0.125, N);
    CHECK(acc / trials == doctest::Approx(model).epsilon(0.05));
  }
}
