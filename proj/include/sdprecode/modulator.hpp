#pragma once

#include <cstdint>

#include "sdprecode/channel.hpp"
#include "sdprecode/linalg.hpp"

namespace sdp {

/// Output of a spatial sigma-delta pass over one transmit vector.
///
/// All traces use the recursion's own antenna order. `quant_error` is q_n = x_n - b_n
/// and `integrator` is the quantizer input b_n (before any dither is added).
struct ModulationResult {
  CVec output;
  CVec quant_error;
  CVec integrator;
  bool overloaded = false;
  /// max_n max(|Re b_n|, |Im b_n|)
  double max_integrator = 0.0;
};

struct DitherSpec {
  double level = 0.0;
  std::uint64_t seed = 0;
};

/// Rail-wise one-bit quantizer with sgn(0) = +1.
cplx one_bit(cplx b);

/// First-order modulator run independently on the I and Q rails:
///   b_n = b_{n-1} + (xbar_n - x_{n-1}),  x_n = sgn(b_n),  b_0 = x_0 = 0.
ModulationResult sd_basic(const CVec& xbar);

/// sd_basic with the quantizer fed b_n + u_n, u_n uniform on [-level, level] per rail.
/// One generator is consumed in (Re, Im) order per antenna.
ModulationResult sd_dithered(const CVec& xbar, const DitherSpec& dither);

/// Feedback rotated by e^{j phi}:  b_n = e^{j phi} (b_{n-1} - x_{n-1}) + xbar_n.
ModulationResult sd_angle_steered(const CVec& xbar, double phi);

/// Feedback weighted by h_{n-1}/h_n (h_0 = 0) so that h^T x = h^T xbar + h_N q_N.
/// Both vectors are in canonical order.
ModulationResult sd_generalized(const CVec& xbar, const CanonicalChannel& h);

/// Largest per-rail input amplitude that keeps the angle-steered modulator out of overload:
/// A = 2 - |cos(phi)| - |sin(phi)|.
double no_overload_amplitude(double phi);

/// Per-antenna amplitude limits A_n for the generalized modulator, A_1 = 2.
RVec no_overload_amplitudes_generalized(const CanonicalChannel& h);

}  // namespace sdp
