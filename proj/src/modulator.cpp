#include "sdprecode/modulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace sdp {

namespace {

// Integrator magnitudes within this slack of 2 count as the no-overload boundary.
constexpr double kOverloadSlack = 1e-9;

double rail_sign(double v) { return v >= 0.0 ? 1.0 : -1.0; }

ModulationResult allocate(Eigen::Index n) {
  ModulationResult r;
  r.output.resize(n);
  r.quant_error.resize(n);
  r.integrator.resize(n);
  return r;
}

void finish(ModulationResult& r) {
  r.max_integrator = iq_inf_norm(r.integrator);
  r.overloaded = r.max_integrator > 2.0 + kOverloadSlack;
}

// b_n = g_n b_{n-1} + (xbar_n - g_n x_{n-1}), with the quantizer seeing b_n + u_n.
template <class Feedback, class Dither>
ModulationResult run(const CVec& xbar, Feedback&& feedback, Dither&& dither) {
  auto r = allocate(xbar.size());
  cplx b_prev(0.0, 0.0);
  cplx x_prev(0.0, 0.0);
  for (Eigen::Index n = 0; n < xbar.size(); ++n) {
    const cplx g = feedback(n);
    const cplx b = g * b_prev + (xbar[n] - g * x_prev);
    const cplx x = one_bit(b + dither());
    r.integrator[n] = b;
    r.output[n] = x;
    r.quant_error[n] = x - b;
    b_prev = b;
    x_prev = x;
  }
  finish(r);
  return r;
}

cplx no_dither() { return {0.0, 0.0}; }

}  // namespace

cplx one_bit(cplx b) { return {rail_sign(b.real()), rail_sign(b.imag())}; }

ModulationResult sd_basic(const CVec& xbar) {
  auto r = allocate(xbar.size());
  cplx b_prev(0.0, 0.0);
  cplx x_prev(0.0, 0.0);
  for (Eigen::Index n = 0; n < xbar.size(); ++n) {
    const cplx b = b_prev + (xbar[n] - x_prev);
    const cplx x = one_bit(b);
    r.integrator[n] = b;
    r.output[n] = x;
    r.quant_error[n] = x - b;
    b_prev = b;
    x_prev = x;
  }
  finish(r);
  return r;
}

ModulationResult sd_dithered(const CVec& xbar, const DitherSpec& dither) {
  if (!(dither.level >= 0.0)) throw std::invalid_argument("dither level must be >= 0");
  if (dither.level == 0.0) return sd_basic(xbar);
  std::mt19937_64 rng(dither.seed);
  const double level = dither.level;
  auto draw = [&] { return level * (2.0 * std::generate_canonical<double, 53>(rng) - 1.0); };
  return run(
      xbar, [](Eigen::Index) { return cplx(1.0, 0.0); },
      [&] {
        const double re = draw();
        const double im = draw();
        return cplx(re, im);
      });
}

ModulationResult sd_angle_steered(const CVec& xbar, double phi) {
  if (!std::isfinite(phi)) throw std::invalid_argument("steering phase must be finite");
  const cplx rot = std::polar(1.0, phi);
  return run(xbar, [rot](Eigen::Index) { return rot; }, no_dither);
}

ModulationResult sd_generalized(const CVec& xbar, const CanonicalChannel& h) {
  const CVec& c = h.coefficients();
  if (c.size() != xbar.size()) {
    throw std::invalid_argument("sd_generalized: channel and input lengths differ");
  }
  return run(
      xbar, [&c](Eigen::Index n) { return n == 0 ? cplx(0.0, 0.0) : c[n - 1] / c[n]; },
      no_dither);
}

double no_overload_amplitude(double phi) {
  return 2.0 - std::abs(std::cos(phi)) - std::abs(std::sin(phi));
}

RVec no_overload_amplitudes_generalized(const CanonicalChannel& h) {
  const CVec& c = h.coefficients();
  RVec a(c.size());
  for (Eigen::Index n = 0; n < c.size(); ++n) {
    if (n == 0) {
      a[n] = 2.0;
      continue;
    }
    // |h_{n-1}/h_n| (|cos phi_n| + |sin phi_n|) is the L1 norm of the ratio's rails.
    const cplx g = c[n - 1] / c[n];
    a[n] = 2.0 - (std::abs(g.real()) + std::abs(g.imag()));
  }
  return a;
}

}  // namespace sdp
