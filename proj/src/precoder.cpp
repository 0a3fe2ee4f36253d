#include "sdprecode/precoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdprecode/analysis.hpp"
#include "sdprecode/modulator.hpp"

namespace sdp {

namespace {

constexpr double kSymbolSlack = 1e-12;

void require_unit_symbol(cplx s, const char* who) {
  if (std::abs(s) > 1.0 + kSymbolSlack) throw std::invalid_argument(std::string(who) + ": |s| must be <= 1");
}

double rail_max(cplx v) { return std::max(std::abs(v.real()), std::abs(v.imag())); }

PrecodeOutput conjugate_beam(const SinglePath& channel, const ArrayGeometry& geometry, cplx s,
                             double amplitude, const char* who) {
  require_unit_symbol(s, who);
  const double mag = std::abs(channel.gain);
  if (mag == 0.0) throw std::invalid_argument(std::string(who) + ": zero channel gain");
  PrecodeOutput out;
  const cplx w = amplitude * std::conj(channel.gain) * s / mag;
  out.xbar = w * array_response(geometry, channel.angle).conjugate();
  out.gains = RVec::Constant(1, amplitude * geometry.n_antennas() * mag);
  out.bound = amplitude;
  return out;
}

double normalize_gamma(double norm) {
  if (!(norm > 0.0)) throw std::invalid_argument("zero-forcing: all-zero symbol vector, gamma undefined");
  return 1.0 / norm;
}

}  // namespace

PrecodeOutput mrt_single(const SinglePath& channel, const ArrayGeometry& geometry, cplx s) {
  auto out = conjugate_beam(channel, geometry, s, 1.0, "mrt_single");
  out.scheme = "mrt";
  return out;
}

SteeredMrt mrt_angle_steered(const SinglePath& channel, const ArrayGeometry& geometry, cplx s) {
  const double phi = steering_phase(geometry, channel.angle);
  auto out = conjugate_beam(channel, geometry, s, no_overload_amplitude(phi), "mrt_angle_steered");
  out.scheme = "mrt-steered";
  return {std::move(out), phi};
}

PrecodeOutput mrt_generalized(const CanonicalChannel& h, cplx s, const GeneralizedOptions& options) {
  require_unit_symbol(s, "mrt_generalized");
  const CVec& c = h.coefficients();
  const RVec amp = options.unit_amplitude ? RVec::Ones(c.size()) : no_overload_amplitudes_generalized(h);
  PrecodeOutput out;
  out.scheme = "mrt-generalized";
  out.xbar.resize(c.size());
  cplx gain(0.0, 0.0);
  for (Eigen::Index n = 0; n < c.size(); ++n) {
    const double big = rail_max(c[n]);
    if (big == 0.0) throw std::invalid_argument("mrt_generalized: zero channel coefficient");
    cplx r = amp[n] * std::conj(c[n]) / big;
    const double excess = rail_max(r * s) - amp[n];
    if (excess > 0.0 && options.clamp) {
      const double small = std::min(std::abs(c[n].real()), std::abs(c[n].imag()));
      r /= 1.0 + small / big;
      ++out.clamped;
    }
    out.xbar[n] = r * s;
    out.box_violation = std::max(out.box_violation, rail_max(out.xbar[n]) - amp[n]);
    gain += c[n] * r;
  }
  out.box_violation = std::max(out.box_violation, 0.0);
  out.gains = RVec::Constant(1, gain.real());
  out.bound = amp.maxCoeff();
  return out;
}

RVec user_noise_std(const MultiUserScene& scene) {
  const auto v = user_noise_variances(scene);
  RVec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = std::sqrt(v[i]);
  return out;
}

ZfOperator::ZfOperator(const MultiUserScene& scene) : H_(scene.channel_matrix()), sigma_w_(user_noise_std(scene)) {
  if (!(sigma_w_.array() > 0.0).all()) {
    throw std::invalid_argument("zero-forcing: every user needs sigma_w > 0");
  }
  const double n = static_cast<double>(H_.cols());
  chol_.compute(H_ * H_.adjoint() / n);
  const RVec diag = chol_.matrixL().toDenseMatrix().diagonal().real();
  if (chol_.info() != Eigen::Success || diag.minCoeff() <= 1e-7 * diag.maxCoeff()) {
    throw std::invalid_argument("zero-forcing: channel matrix is rank deficient");
  }
}

CVec ZfOperator::solve_r(const CVec& rhs) const { return chol_.solve(rhs); }

CVec ZfOperator::apply(const CVec& symbols) const {
  if (symbols.size() != H_.rows()) throw std::invalid_argument("zero-forcing: symbol count must equal K");
  const CVec ds = sigma_w_.cast<cplx>().cwiseProduct(symbols);
  return H_.adjoint() * solve_r(ds) / static_cast<double>(H_.cols());
}

CVec ZfOperator::project_null(const CVec& v) const {
  return v - H_.adjoint() * solve_r(H_ * v) / static_cast<double>(H_.cols());
}

PrecodeOutput zf_precode(const ZfOperator& op, const CVec& symbols) {
  const CVec raw = op.apply(symbols);
  const double gamma = normalize_gamma(iq_inf_norm(raw));
  PrecodeOutput out;
  out.scheme = "zf";
  out.xbar = gamma * raw;
  out.gains = gamma * op.noise_std();
  out.diagnostics.objective = 1.0 / gamma;
  return out;
}

PrecodeOutput zf_precode(const MultiUserScene& scene, const CVec& symbols) {
  return zf_precode(ZfOperator(scene), symbols);
}

namespace {

std::vector<PrecodeOutput> normalize_block(const ZfOperator& op, std::vector<CVec> raw, const char* scheme) {
  double worst = 0.0;
  for (const auto& r : raw) worst = std::max(worst, iq_inf_norm(r));
  const double gamma = normalize_gamma(worst);
  std::vector<PrecodeOutput> out(raw.size());
  for (std::size_t t = 0; t < raw.size(); ++t) {
    out[t].scheme = scheme;
    out[t].xbar = gamma * raw[t];
    out[t].gains = gamma * op.noise_std();
    out[t].diagnostics.objective = iq_inf_norm(raw[t]);
  }
  return out;
}

}  // namespace

std::vector<PrecodeOutput> zf_precode_qam_block(const ZfOperator& op, const CMat& symbols) {
  if (symbols.cols() < 1) throw std::invalid_argument("zf_precode_qam_block: block length must be >= 1");
  std::vector<CVec> raw;
  raw.reserve(static_cast<std::size_t>(symbols.cols()));
  for (Eigen::Index t = 0; t < symbols.cols(); ++t) raw.push_back(op.apply(symbols.col(t)));
  return normalize_block(op, std::move(raw), "zf-block");
}

std::vector<PrecodeOutput> zf_precode_qam_block(const MultiUserScene& scene, const CMat& symbols) {
  return zf_precode_qam_block(ZfOperator(scene), symbols);
}

CMat nullspace_basis(const CMat& H) {
  const Eigen::Index n = H.cols();
  const Eigen::Index k = H.rows();
  if (k > n) throw std::invalid_argument("nullspace_basis: more rows than columns");
  Eigen::HouseholderQR<CMat> qr(H.adjoint());
  const CMat Q = qr.householderQ() * CMat::Identity(n, n);
  return Q.rightCols(n - k);
}

std::vector<PrecodeOutput> nullspace_zf(const ZfOperator& op, const CMat& symbols, const NullspaceOptions& options) {
  if (symbols.cols() < 1) throw std::invalid_argument("nullspace_zf: block length must be >= 1");
  const bool use_basis = options.method == NullspaceMethod::basis;
  const CMat B = use_basis ? nullspace_basis(op.channel()) : CMat();
  const SubspaceProjector project = [&op](const CVec& v) { return op.project_null(v); };

  std::vector<CVec> corrected;
  std::vector<IqNormResult> solves;
  for (Eigen::Index t = 0; t < symbols.cols(); ++t) {
    const CVec r = op.apply(symbols.col(t));
    IqNormResult res;
    if (op.n_users() == op.n_antennas()) {
      res.eta = CVec::Zero(r.size());
      res.objective = iq_inf_norm(r);
    } else if (use_basis) {
      res = min_iq_inf_norm(r, B, options.params);
    } else {
      res = min_iq_inf_norm_projected(r, project, options.params);
    }
    // The solver may only ever improve on eta = 0, which is always feasible.
    if (res.objective > iq_inf_norm(r)) {
      res.eta.setZero();
      res.objective = iq_inf_norm(r);
    }
    corrected.push_back(r + res.eta);
    solves.push_back(std::move(res));
  }
  auto out = normalize_block(op, std::move(corrected), "nullspace-zf");
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t].diagnostics.iterations = solves[t].iterations;
    out[t].diagnostics.restarts = solves[t].restarts;
    out[t].diagnostics.converged = solves[t].converged;
  }
  return out;
}

std::vector<PrecodeOutput> nullspace_zf(const MultiUserScene& scene, const CMat& symbols,
                                        const NullspaceOptions& options) {
  return nullspace_zf(ZfOperator(scene), symbols, options);
}

MinimaxProblem build_slp_problem(const CMat& H, const RVec& noise_std, const CVec& symbols, int order) {
  const Eigen::Index k = H.rows();
  const Eigen::Index n = H.cols();
  if (order < 2) throw std::invalid_argument("build_slp_problem: PSK order must be >= 2");
  if (symbols.size() != k || noise_std.size() != k) {
    throw std::invalid_argument("build_slp_problem: symbols and noise_std must have K entries");
  }
  if (!(noise_std.array() > 0.0).all()) throw std::invalid_argument("build_slp_problem: sigma_w must be positive");
  const double cot = order == 2 ? 0.0 : std::cos(kPi / order) / std::sin(kPi / order);

  MinimaxProblem p;
  p.C.resize(2 * n, 2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const CVec u = (std::conj(symbols[i]) * H.row(i)).transpose();
    RVec b(2 * n);
    RVec r(2 * n);
    b << u.real(), -u.imag();
    r << u.imag(), u.real();
    b /= noise_std[i];
    r *= cot / noise_std[i];
    p.C.col(2 * i) = -b - r;
    p.C.col(2 * i + 1) = -b + r;
  }
  return p;
}

ApgParams default_slp_params(SlpSolver solver) {
  ApgParams p;
  if (solver == SlpSolver::dual) {
    p.tolerance = 1e-7;
    p.max_iters = 3000;
  } else {
    p.continuation_stages = 2;
  }
  return p;
}

PrecodeOutput slp_psk(const CMat& H, const RVec& noise_std, const CVec& symbols, int order,
                      const SlpOptions& options) {
  const MinimaxProblem problem = build_slp_problem(H, noise_std, symbols, order);
  if (options.primal_scale < 0.0) throw std::invalid_argument("slp_psk: primal_scale must be >= 0");
  ApgResult res;
  if (options.solver == SlpSolver::primal) {
    MinimaxProblem scaled = problem;
    double scale = 1.0;
    if (options.primal_scale > 0.0) {
      const double norm = std::sqrt(spectral_norm_sq(problem.C));
      if (norm > 0.0) scale = options.primal_scale / norm;
      scaled.C *= scale;
    }
    res = primal_apg(scaled, options.params);
    res.objective /= scale;
  } else {
    res = dual_apg(problem, options.params);
  }
  PrecodeOutput out;
  out.scheme = options.solver == SlpSolver::primal ? "slp-primal" : "slp-dual";
  out.xbar = unstack_iq(res.x);
  const CVec rx = H * out.xbar;
  out.gains.resize(symbols.size());
  for (Eigen::Index i = 0; i < symbols.size(); ++i) {
    out.gains[i] = (std::conj(symbols[i]) * rx[i]).real() / std::norm(symbols[i]);
  }
  out.diagnostics.iterations = res.iterations;
  out.diagnostics.restarts = res.restarts;
  out.diagnostics.objective = res.objective;
  out.diagnostics.dual_objective = res.dual_objective;
  out.diagnostics.converged = res.converged;
  return out;
}

PrecodeOutput slp_psk(const MultiUserScene& scene, const CVec& symbols, int order, const SlpOptions& options) {
  scene.validate();
  return slp_psk(scene.channel_matrix(), user_noise_std(scene), symbols, order, options);
}

}  // namespace sdp
