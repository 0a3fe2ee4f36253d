#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "lp_oracle.hpp"
#include "sdprecode/analysis.hpp"
#include "sdprecode/modulator.hpp"
#include "sdprecode/precoder.hpp"

using namespace sdp;

namespace {

double deg(double d) { return d * kPi / 180.0; }

MultiUserScene random_scene(std::mt19937_64& rng, int N, int K, double spacing = 0.125, double sigma_v2 = 0.1) {
  std::uniform_real_distribution<double> ang(-kPi / 6, kPi / 6), ph(-kPi, kPi), r(20.0, 100.0);
  std::vector<double> angles;
  while (static_cast<int>(angles.size()) < K) {
    const double a = ang(rng);
    bool ok = true;
    for (double b : angles) ok = ok && std::abs(a - b) > deg(2);
    if (ok) angles.push_back(a);
  }
  std::vector<Channel> ch;
  for (double a : angles) ch.push_back(SinglePath{std::polar(30.0 / r(rng), ph(rng)), a});
  return MultiUserScene{ArrayGeometry(N, spacing), ch, 1.0, sigma_v2};
}

CMat random_symbols(std::mt19937_64& rng, const Constellation& c, int K, int T) {
  std::uniform_int_distribution<int> pick(0, c.order() - 1);
  CMat s(K, T);
  for (int i = 0; i < K; ++i)
    for (int t = 0; t < T; ++t) s(i, t) = c.point(pick(rng));
  return s;
}

// Moore-Penrose pseudo-inverse through the SVD.
CMat svd_pinv(const CMat& A) {
  Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  RVec inv = svd.singularValues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = inv(i) > 1e-12 ? 1.0 / inv(i) : 0.0;
  return svd.matrixV() * inv.cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
}

double slp_f(const MultiUserScene& scene, const CVec& s, int M, const CVec& xbar) {
  const auto p = build_slp_problem(scene.channel_matrix(), user_noise_std(scene), s, M);
  return minimax_objective(p, stack_iq(xbar));
}

SlpOptions tight_primal() {
  SlpOptions o;
  o.solver = SlpSolver::primal;
  o.params.smoothing = 1e-5;
  o.params.tolerance = 0.0;
  o.params.max_iters = 20000;
  o.params.continuation_stages = 4;
  return o;
}

SlpOptions tight_dual() {
  SlpOptions o;
  o.solver = SlpSolver::dual;
  o.params.regularization = 5e-4;
  o.params.tolerance = 0.0;
  o.params.max_iters = 100000;
  return o;
}

}  // namespace

TEST_CASE("MRT") {
  const ArrayGeometry g(16, 0.125);
  const auto one = mrt_single(SinglePath{1.0, 0.0}, g, 1.0);
  CHECK((one.xbar - CVec::Ones(16)).norm() < 1e-14);

  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> ang(-kPi / 2, kPi / 2), ph(-kPi, kPi), mag(0.1, 3.0), rad(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const SinglePath ch{std::polar(mag(rng), ph(rng)), ang(rng)};
    const cplx s = std::polar(rad(rng), ph(rng));
    const auto out = mrt_single(ch, g, s);
    const CVec h = realize_channel(ch, g);
    CHECK(std::abs(cplx(h.transpose() * out.xbar) - 16.0 * std::abs(ch.gain) * s) < 1e-12);
    CHECK(iq_inf_norm(out.xbar) <= 1.0 + 1e-12);
    CHECK(out.gains(0) == doctest::Approx(16.0 * std::abs(ch.gain)));
  }

  const ArrayGeometry g8(8, 0.125);
  const SinglePath ch{std::polar(1.0, kPi / 3), deg(30)};
  const cplx s = std::polar(1.0, kPi / 4);
  const auto out = mrt_single(ch, g8, s);
  CHECK(std::abs(cplx(realize_channel(ch, g8).transpose() * out.xbar) - 8.0 * s) < 1e-12);

  CHECK_THROWS_AS(mrt_single(SinglePath{0.0, 0.1}, g, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(mrt_single(SinglePath{1.0, 0.1}, g, 1.5), std::invalid_argument);
}

TEST_CASE("angle-steered MRT") {
  const ArrayGeometry g(32, 0.125);
  const auto z = mrt_angle_steered(SinglePath{1.0, 0.0}, g, cplx(0, 1));
  CHECK(z.phi == 0.0);
  CHECK(z.output.bound == 1.0);
  CHECK((z.output.xbar - mrt_single(SinglePath{1.0, 0.0}, g, cplx(0, 1)).xbar).norm() < 1e-14);

  const auto e = mrt_angle_steered(SinglePath{1.0, kPi / 2}, ArrayGeometry(8, 0.5), 1.0);
  CHECK(e.phi == doctest::Approx(kPi));
  CHECK(e.output.bound == doctest::Approx(1.0));

  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> ang(-kPi / 2, kPi / 2), ph(-kPi, kPi);
  for (int t = 0; t < 100; ++t) {
    const SinglePath ch{std::polar(0.7, ph(rng)), ang(rng)};
    const cplx s = std::polar(1.0, ph(rng));
    const auto out = mrt_angle_steered(ch, g, s);
    const double A = no_overload_amplitude(out.phi);
    CHECK(iq_inf_norm(out.output.xbar) <= A + 1e-12);
    // After modulation only the last antenna's quantization error reaches the user.
    const auto mod = sd_angle_steered(out.output.xbar, out.phi);
    CHECK_FALSE(mod.overloaded);
    const CVec h = realize_channel(ch, g);
    const cplx y = h.transpose() * mod.output;
    const cplx tail = ch.gain * std::polar(1.0, -31 * out.phi) * mod.quant_error(31);
    CHECK(std::abs(y - out.output.gains(0) * s - tail) < 1e-10);
  }
}

TEST_CASE("generalized MRT") {
  const auto ones = CanonicalChannel::from_physical(CVec::Ones(6));
  const auto o = mrt_generalized(ones, 1.0);
  CHECK(o.xbar(0) == cplx(2.0, 0.0));
  for (int n = 1; n < 6; ++n) CHECK(std::abs(o.xbar(n) - 1.0) < 1e-15);

  CVec pos(5);
  pos << 0.5, 1.0, 1.5, 2.0, 4.0;
  const auto hp = CanonicalChannel::from_physical(pos);
  const RVec A = no_overload_amplitudes_generalized(hp);
  const cplx s = std::polar(0.9, 0.4);
  const auto op = mrt_generalized(hp, s);
  for (int n = 0; n < 5; ++n) CHECK(std::abs(op.xbar(n) - A(n) * s) < 1e-14);

  std::mt19937_64 rng(53);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ph(-kPi, kPi);
  int violations = 0;
  for (int t = 0; t < 500; ++t) {
    CVec h(24);
    for (int n = 0; n < 24; ++n) h(n) = cplx(nd(rng), nd(rng));
    const auto c = CanonicalChannel::from_physical(h);
    const RVec An = no_overload_amplitudes_generalized(c);
    const cplx sym = std::polar(1.0, ph(rng));
    const auto raw = mrt_generalized(c, sym);
    if (raw.box_violation > 0) ++violations;
    const auto safe = mrt_generalized(c, sym, {false, true});
    for (int n = 0; n < 24; ++n) {
      CHECK(std::max(std::abs(safe.xbar(n).real()), std::abs(safe.xbar(n).imag())) <= An(n) + 1e-12);
    }
    CHECK(safe.box_violation <= 1e-12);
    // The generalized modulator then keeps the error inside the unit box.
    const auto mod = sd_generalized(safe.xbar, c);
    CHECK(iq_inf_norm(mod.quant_error) <= 1.0 + 1e-12);
    CHECK_FALSE(mod.overloaded);
    const cplx y = c.coefficients().transpose() * mod.output;
    CHECK(std::abs(y - safe.gains(0) * sym - c.coefficients()(23) * mod.quant_error(23)) < 1e-9);
  }
  CHECK(violations > 0);  // the unclamped rule does leave the box for complex symbols

  const auto unit = mrt_generalized(ones, 1.0, {true, false});
  CHECK(unit.xbar(0) == cplx(1.0, 0.0));
}

TEST_CASE("zero forcing") {
  std::mt19937_64 rng(54);
  const auto p8 = Constellation::psk(8);
  {
    const auto scene = random_scene(rng, 32, 1);
    const CVec s = random_symbols(rng, p8, 1, 1);
    const auto out = zf_precode(scene, s);
    const CVec a = realize_channel(scene.channels[0], scene.geometry);
    const CVec dir = a.conjugate();
    // K = 1 is the conjugate beam up to a complex scale.
    const cplx ratio = out.xbar(0) / dir(0);
    CHECK((out.xbar - ratio * dir).norm() < 1e-10);
  }
  for (int t = 0; t < 20; ++t) {
    const auto scene = random_scene(rng, 128, 8);
    const CVec s = random_symbols(rng, p8, 8, 1);
    const auto out = zf_precode(scene, s);
    CHECK(iq_inf_norm(out.xbar) == doctest::Approx(1.0).epsilon(1e-12));
    const CMat H = scene.channel_matrix();
    const RVec sw = user_noise_std(scene);
    const CVec y = H * out.xbar;
    const double gamma = out.gains(0) / sw(0);
    for (int i = 0; i < 8; ++i) {
      CHECK(std::abs(y(i) - gamma * sw(i) * s(i)) < 1e-9);
      CHECK(out.gains(i) / sw(i) == doctest::Approx(gamma).epsilon(1e-12));
    }
    // Against the SVD pseudo-inverse.
    const ZfOperator op(scene);
    const CVec ref = svd_pinv(H) * sw.cast<cplx>().cwiseProduct(s);
    CHECK((op.apply(s) - ref).norm() <= 1e-8 * ref.norm());
    // Projection onto null(H).
    CVec v = CVec::Random(128);
    const CVec pn = op.project_null(v);
    CHECK((H * pn).norm() < 1e-9 * v.norm() * H.norm());
    CHECK((op.project_null(pn) - pn).norm() < 1e-10 * v.norm());
  }

  const ArrayGeometry g(16, 0.125);
  MultiUserScene same{g, {SinglePath{1.0, 0.2}, SinglePath{2.0, 0.2}}, 1.0, 0.1};
  CHECK_THROWS_AS(ZfOperator{same}, std::invalid_argument);
  MultiUserScene ok{g, {SinglePath{1.0, 0.2}, SinglePath{2.0, -0.4}}, 1.0, 0.1};
  CHECK_THROWS_AS(zf_precode(ok, CVec::Zero(2)), std::invalid_argument);
}

TEST_CASE("block zero forcing") {
  std::mt19937_64 rng(55);
  const auto q16 = Constellation::qam(16);
  const auto scene = random_scene(rng, 64, 6);
  const CMat S1 = random_symbols(rng, q16, 6, 1);
  const auto b1 = zf_precode_qam_block(scene, S1);
  const auto z1 = zf_precode(scene, S1.col(0));
  CHECK((b1[0].xbar - z1.xbar).norm() < 1e-12);

  CMat same(6, 5);
  for (int t = 0; t < 5; ++t) same.col(t) = S1.col(0);
  for (const auto& o : zf_precode_qam_block(scene, same)) CHECK(iq_inf_norm(o.xbar) == doctest::Approx(1.0));

  const CMat S = random_symbols(rng, q16, 6, 40);
  const auto blk = zf_precode_qam_block(scene, S);
  double worst = 0;
  for (std::size_t t = 0; t < blk.size(); ++t) {
    worst = std::max(worst, iq_inf_norm(blk[t].xbar));
    CHECK(iq_inf_norm(blk[t].xbar) <= 1.0 + 1e-12);
    CHECK((blk[t].gains - blk[0].gains).norm() == 0.0);
    const CVec y = scene.channel_matrix() * blk[t].xbar;
    for (int i = 0; i < 6; ++i) CHECK(std::abs(y(i) - blk[t].gains(i) * S(i, t)) < 1e-9);
  }
  CHECK(worst == doctest::Approx(1.0));
}

TEST_CASE("nullspace-assisted zero forcing") {
  std::mt19937_64 rng(56);
  const auto q16 = Constellation::qam(16);

  // Square system: nothing to optimize.
  const auto sq = random_scene(rng, 6, 6, 0.5);
  const CMat Ssq = random_symbols(rng, q16, 6, 4);
  const auto a = nullspace_zf(sq, Ssq);
  const auto b = zf_precode_qam_block(sq, Ssq);
  for (int t = 0; t < 4; ++t) CHECK((a[t].xbar - b[t].xbar).norm() < 1e-12);

  for (auto method : {NullspaceMethod::projector, NullspaceMethod::basis}) {
    const auto scene = random_scene(rng, 64, 8);
    const CMat S = random_symbols(rng, q16, 8, 10);
    NullspaceOptions opt;
    opt.method = method;
    const auto ns = nullspace_zf(scene, S, opt);
    const auto zf = zf_precode_qam_block(scene, S);
    const ZfOperator op(scene);
    CHECK(ns[0].gains(0) >= zf[0].gains(0) * (1 - 1e-9));
    for (int t = 0; t < 10; ++t) {
      CHECK(iq_inf_norm(ns[t].xbar) <= 1.0 + 1e-12);
      const CVec y = scene.channel_matrix() * ns[t].xbar;
      for (int i = 0; i < 8; ++i) CHECK(std::abs(y(i) - ns[t].gains(i) * S(i, t)) < 1e-9);
      CHECK(ns[t].diagnostics.objective <= iq_inf_norm(op.apply(S.col(t))) + 1e-12);
    }
  }
}

TEST_CASE("nullspace correction matches an LP on N = 64, K = 8") {
  std::mt19937_64 rng(57);
  const auto q16 = Constellation::qam(16);
  const auto scene = random_scene(rng, 64, 8);
  const CMat S = random_symbols(rng, q16, 8, 2);
  const ZfOperator op(scene);
  const CMat B = nullspace_basis(scene.channel_matrix());
  CHECK((scene.channel_matrix() * B).norm() < 1e-10);
  CHECK((B.adjoint() * B - CMat::Identity(56, 56)).norm() < 1e-10);

  NullspaceOptions opt;
  opt.params.smoothing = 1e-5;
  opt.params.tolerance = 0.0;
  opt.params.max_iters = 20000;
  opt.params.continuation_stages = 3;
  const auto ns = nullspace_zf(op, S, opt);
  for (int t = 0; t < 2; ++t) {
    const CVec r = op.apply(S.col(t));
    const RMat Bs = realify(B);
    RMat C(Bs.cols(), 2 * Bs.rows());
    C << Bs.transpose(), -Bs.transpose();
    RVec d(2 * Bs.rows());
    d << stack_iq(r), -stack_iq(r);
    const double opt_lp = lp::minimax_lp(C, d, false);
    CHECK(std::abs(ns[t].diagnostics.objective - opt_lp) <= 1e-4 * opt_lp);
  }
}

TEST_CASE("SLP problem and solvers") {
  std::mt19937_64 rng(58);

  // Single user at broadside with s = 1: every in-phase rail goes to +1.
  {
    const MultiUserScene scene{ArrayGeometry(8, 0.125), {SinglePath{1.0, 0.0}}, 1.0, 0.1};
    CVec s(1);
    s << 1.0;
    for (auto o : {tight_primal(), tight_dual()}) {
      const auto out = slp_psk(scene, s, 4, o);
      CHECK(out.xbar.real().minCoeff() > 1.0 - 1e-3);
      CHECK(std::abs(out.xbar.imag().sum()) < 1e-2);
    }
  }

  const auto p8 = Constellation::psk(8);
  for (int t = 0; t < 5; ++t) {
    const auto scene = random_scene(rng, 8, 2, 0.5);
    const CVec s = random_symbols(rng, p8, 2, 1);
    const auto prob = build_slp_problem(scene.channel_matrix(), user_noise_std(scene), s, 8);
    CHECK(prob.C.rows() == 16);
    CHECK(prob.C.cols() == 4);
    const double opt = lp::minimax_lp(prob.C, RVec(), true);

    // The stacked objective is the negated worst normalized PSK margin.
    CVec x = CVec::Random(8);
    const CVec y = scene.channel_matrix() * x;
    double worst = 1e300;
    const RVec sw = user_noise_std(scene);
    for (int i = 0; i < 2; ++i) worst = std::min(worst, lemma_psk_margin(y(i), s(i), 8) / sw(i));
    CHECK(minimax_objective(prob, stack_iq(x)) == doctest::Approx(-worst).epsilon(1e-10));

    const auto pr = slp_psk(scene, s, 8, tight_primal());
    const auto du = slp_psk(scene, s, 8, tight_dual());
    CHECK(std::abs(pr.diagnostics.objective - opt) <= 1e-3 * (1 + std::abs(opt)));
    CHECK(std::abs(du.diagnostics.objective - opt) <= 1e-3 * (1 + std::abs(opt)));
    CHECK(iq_inf_norm(pr.xbar) <= 1.0 + 1e-12);
    CHECK(iq_inf_norm(du.xbar) <= 1.0 + 1e-12);
    CHECK(pr.scheme == "slp-primal");
    CHECK(du.scheme == "slp-dual");
    const CVec yp = scene.channel_matrix() * pr.xbar;
    for (int i = 0; i < 2; ++i) CHECK(pr.gains(i) == doctest::Approx((std::conj(s(i)) * yp(i)).real()));
  }

  // Default settings still beat the ZF point.
  for (int t = 0; t < 5; ++t) {
    const auto scene = random_scene(rng, 64, 6);
    const CVec s = random_symbols(rng, p8, 6, 1);
    const double fzf = slp_f(scene, s, 8, zf_precode(scene, s).xbar);
    for (auto solver : {SlpSolver::primal, SlpSolver::dual}) {
      SlpOptions o;
      o.solver = solver;
      o.params = default_slp_params(solver);
      const auto out = slp_psk(scene, s, 8, o);
      CHECK(slp_f(scene, s, 8, out.xbar) <= fzf + 1e-9);
      CHECK(out.diagnostics.objective == doctest::Approx(slp_f(scene, s, 8, out.xbar)));
    }
  }
}

TEST_CASE("primal and dual SLP agree under tight settings") {
  std::mt19937_64 rng(59);
  const auto p8 = Constellation::psk(8);
  for (int t = 0; t < 2; ++t) {
    const auto scene = random_scene(rng, 32, 4);
    const CVec s = random_symbols(rng, p8, 4, 1);
    const double fp = slp_psk(scene, s, 8, tight_primal()).diagnostics.objective;
    const double fd = slp_psk(scene, s, 8, tight_dual()).diagnostics.objective;
    CHECK(std::abs(fp - fd) <= 1e-3 * (1 + std::abs(fp)));
  }
  SlpOptions bad;
  bad.primal_scale = -1;
  const auto scene = random_scene(rng, 16, 2);
  CHECK_THROWS_AS(slp_psk(scene, CVec::Ones(2), 8, bad), std::invalid_argument);
  CHECK_THROWS_AS(build_slp_problem(scene.channel_matrix(), RVec::Zero(2), CVec::Ones(2), 8), std::invalid_argument);
}
