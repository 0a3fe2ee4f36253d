#pragma once

#include <string>
#include <vector>

#include "sdprecode/channel.hpp"
#include "sdprecode/linalg.hpp"
#include "sdprecode/optim.hpp"

namespace sdp {

struct SolverDiagnostics {
  int iterations = 0;
  int restarts = 0;
  double objective = 0.0;       // solver-specific: minimax value or IQ-inf norm
  double dual_objective = 0.0;  // dual SLP only
  bool converged = true;
};

/// A transmit vector before one-bit modulation.
///
/// `gains[i]` is the noiseless receive amplitude h_i^T xbar / s_i, without the
/// sqrt(P / 2N) power scaling applied on the air. `bound` is the IQ-inf limit the
/// modulator was promised (per element for the generalized scheme, max over elements here).
struct PrecodeOutput {
  CVec xbar;
  RVec gains;
  double bound = 1.0;
  std::string scheme;
  SolverDiagnostics diagnostics;
  double box_violation = 0.0;  // max excess of |Re|, |Im| over the per-element bound
  int clamped = 0;             // elements rescaled to restore the bound
};

/// xbar = (conj(alpha) s / |alpha|) conj(a(theta)).
PrecodeOutput mrt_single(const SinglePath& channel, const ArrayGeometry& geometry, cplx s);

struct SteeredMrt {
  PrecodeOutput output;
  double phi;  // feedback phase for sd_angle_steered
};

/// mrt_single scaled by the no-overload amplitude A(phi) with phi = 2 pi (d/lambda) sin(theta).
SteeredMrt mrt_angle_steered(const SinglePath& channel, const ArrayGeometry& geometry, cplx s);

struct GeneralizedOptions {
  bool unit_amplitude = false;  // A_n = 1 for all n: the peak-limited MRT benchmark or the overloaded heuristic
  bool clamp = false;           // rescale elements that leave their IQ box by 1 / (1 + min/max)
};

/// xbar_n = A_n conj(h_n) s / max(|Re h_n|, |Im h_n|) in canonical order, A_n from
/// no_overload_amplitudes_generalized unless unit amplitudes are requested. The output
/// stays in canonical order.
PrecodeOutput mrt_generalized(const CanonicalChannel& h, cplx s, const GeneralizedOptions& options = {});

/// sigma_{w,i} for every user of the scene (square roots of user_noise_variances).
RVec user_noise_std(const MultiUserScene& scene);

/// Zero-forcing map s -> H^dagger diag(sigma_w) s, with H^dagger = H^H R^{-1} / N and
/// R = H H^H / N factored once by Cholesky.
class ZfOperator {
 public:
  /// Throws std::invalid_argument when H is numerically rank deficient.
  explicit ZfOperator(const MultiUserScene& scene);

  CVec apply(const CVec& symbols) const;
  /// Component of v orthogonal to the row space of H, i.e. its projection onto null(H).
  CVec project_null(const CVec& v) const;

  const CMat& channel() const { return H_; }
  const RVec& noise_std() const { return sigma_w_; }
  int n_users() const { return static_cast<int>(H_.rows()); }
  int n_antennas() const { return static_cast<int>(H_.cols()); }

 private:
  CVec solve_r(const CVec& rhs) const;

  CMat H_;
  RVec sigma_w_;
  Eigen::LLT<CMat> chol_;
};

/// gamma A^dagger D s with gamma = 1 / ||A^dagger D s||_{IQ-inf}; gains gamma sigma_{w,i}.
PrecodeOutput zf_precode(const MultiUserScene& scene, const CVec& symbols);
PrecodeOutput zf_precode(const ZfOperator& op, const CVec& symbols);

/// Block ZF with a single gamma shared across the T columns of `symbols` (K x T).
std::vector<PrecodeOutput> zf_precode_qam_block(const MultiUserScene& scene, const CMat& symbols);
std::vector<PrecodeOutput> zf_precode_qam_block(const ZfOperator& op, const CMat& symbols);

/// N x (N - K) orthonormal basis of null(H), from a full QR factorization of H^H.
CMat nullspace_basis(const CMat& H);

enum class NullspaceMethod { projector, basis };

struct NullspaceOptions {
  ApgParams params{0.01, 0.005, 1e-5, 500, true, 0, 10.0};
  NullspaceMethod method = NullspaceMethod::projector;
};

/// Block ZF where each column's ZF vector r_t gets the nullspace correction minimizing
/// ||r_t + eta_t||_{IQ-inf} before the shared normalization.
std::vector<PrecodeOutput> nullspace_zf(const MultiUserScene& scene, const CMat& symbols,
                                        const NullspaceOptions& options = {});
std::vector<PrecodeOutput> nullspace_zf(const ZfOperator& op, const CMat& symbols,
                                        const NullspaceOptions& options = {});

/// Columns -b_i - r_i and -b_i + r_i per user, so that f(x) = max_j c_j^T x is the
/// negated worst normalized PSK margin over the stacked transmit vector x.
MinimaxProblem build_slp_problem(const CMat& H, const RVec& noise_std, const CVec& symbols, int order);

enum class SlpSolver { primal, dual };

/// Primal: mu = 0.05, tol 1e-5, 2000 iterations per stage, two continuation stages.
/// Dual: tau = 0.005, tol 1e-7, 3000 iterations.
ApgParams default_slp_params(SlpSolver solver);

struct SlpOptions {
  SlpSolver solver = SlpSolver::primal;
  ApgParams params = default_slp_params(SlpSolver::primal);
  // The primal solver sees C * primal_scale / ||C||_2 so that mu and the step tolerance do
  // not depend on channel gains and noise levels. 0 hands it the raw C.
  double primal_scale = 20.0;
};

/// Symbol-level precoding for M-PSK. gains[i] = Re(conj(s_i) h_i^T xbar) / |s_i|^2.
PrecodeOutput slp_psk(const MultiUserScene& scene, const CVec& symbols, int order,
                      const SlpOptions& options = {});
PrecodeOutput slp_psk(const CMat& H, const RVec& noise_std, const CVec& symbols, int order,
                      const SlpOptions& options = {});

}  // namespace sdp
