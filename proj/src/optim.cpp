#include "sdprecode/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace sdp {

namespace {

// Inflation applied to the power-iteration estimate of ||C||_2^2 before it sets a step size.
constexpr double kLipschitzInflation = 1.02;

struct LogSumExp {
  double value;
  RVec weights;  // softmax, sums to 1
};

LogSumExp log_sum_exp(const RVec& y, double mu) {
  const double ymax = y.maxCoeff();
  RVec w = ((y.array() - ymax) / mu).exp().matrix();
  const double s = w.sum();
  return {ymax + mu * std::log(s), w / s};
}

double lse_value(const RVec& y, double mu) {
  const double ymax = y.maxCoeff();
  return ymax + mu * std::log(((y.array() - ymax) / mu).exp().sum());
}

RVec term_values(const MinimaxProblem& p, const RVec& x) {
  RVec y = p.C.transpose() * x;
  if (p.offsets.size() != 0) y += p.offsets;
  return y;
}

void clip_in_place(RVec& x, double lo, double hi) { x = x.cwiseMax(lo).cwiseMin(hi); }

double next_momentum(double xi_prev) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * xi_prev * xi_prev)); }

std::vector<double> smoothing_schedule(double target, const ApgParams& params) {
  std::vector<double> mus;
  for (int s = params.continuation_stages; s >= 0; --s) {
    mus.push_back(target * std::pow(params.continuation_factor, s));
  }
  return mus;
}

}  // namespace

void MinimaxProblem::validate() const {
  if (C.cols() == 0 || C.rows() == 0) throw std::invalid_argument("MinimaxProblem: empty C");
  if (offsets.size() != 0 && offsets.size() != C.cols()) {
    throw std::invalid_argument("MinimaxProblem: offsets length must match the column count");
  }
  if (!C.allFinite() || (offsets.size() != 0 && !offsets.allFinite())) {
    throw std::invalid_argument("MinimaxProblem: non-finite entries");
  }
  if (bounded && !(lower < upper)) throw std::invalid_argument("MinimaxProblem: empty box");
}

void ApgParams::validate() const {
  if (!(smoothing > 0.0)) throw std::invalid_argument("ApgParams: smoothing must be positive");
  if (!(regularization > 0.0)) throw std::invalid_argument("ApgParams: regularization must be positive");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("ApgParams: tolerance must be >= 0");
  if (max_iters < 1) throw std::invalid_argument("ApgParams: max_iters must be >= 1");
  if (continuation_stages < 0) throw std::invalid_argument("ApgParams: continuation_stages must be >= 0");
  if (!(continuation_factor > 1.0)) throw std::invalid_argument("ApgParams: continuation_factor must exceed 1");
}

double minimax_objective(const MinimaxProblem& problem, const RVec& x) {
  return term_values(problem, x).maxCoeff();
}

SmoothedValue smoothed_objective(const MinimaxProblem& problem, const RVec& x, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("smoothed_objective: mu must be positive");
  auto lse = log_sum_exp(term_values(problem, x), mu);
  return {lse.value, problem.C * lse.weights};
}

double spectral_norm_sq(const RMat& C) {
  if (C.size() == 0) return 0.0;
  const RMat G = C.cols() <= C.rows() ? RMat(C.transpose() * C) : RMat(C * C.transpose());
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> normal;
  RVec v(G.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < 1000; ++it) {
    RVec w = G * v;
    const double rayleigh = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (std::abs(rayleigh - estimate) <= 1e-13 * std::abs(rayleigh)) {
      estimate = rayleigh;
      break;
    }
    estimate = rayleigh;
  }
  return estimate;
}

ApgResult primal_apg(const MinimaxProblem& problem, const ApgParams& params, const RVec* x0) {
  problem.validate();
  params.validate();
  const Eigen::Index n = problem.dimension();

  ApgResult res;
  res.x = x0 ? *x0 : RVec::Zero(n);
  if (res.x.size() != n) throw std::invalid_argument("primal_apg: x0 has the wrong length");
  if (problem.bounded) clip_in_place(res.x, problem.lower, problem.upper);

  const double norm_sq = kLipschitzInflation * spectral_norm_sq(problem.C);
  if (norm_sq == 0.0) {
    res.objective = minimax_objective(problem, res.x);
    res.smoothed_objective = res.objective;
    res.converged = true;
    return res;
  }

  for (double mu : smoothing_schedule(params.smoothing, params)) {
    const double step = mu / norm_sq;
    RVec x = res.x;
    RVec x_prev = x;
    RVec y = term_values(problem, x);  // C^T x + d, carried linearly through extrapolation
    RVec y_prev = y;
    double f_cur = lse_value(y, mu);
    double xi_prev = 0.0;
    res.converged = false;

    for (int k = 0; k < params.max_iters; ++k) {
      ++res.iterations;
      const double xi = next_momentum(xi_prev);
      const double gamma = (xi_prev - 1.0) / xi;
      const RVec x_ex = x + gamma * (x - x_prev);
      const RVec y_ex = y + gamma * (y - y_prev);

      const auto lse = log_sum_exp(y_ex, mu);
      RVec x_new = x_ex - step * (problem.C * lse.weights);
      if (problem.bounded) clip_in_place(x_new, problem.lower, problem.upper);
      RVec y_new = term_values(problem, x_new);
      const double f_new = lse_value(y_new, mu);

      if (params.adaptive_restart && gamma > 0.0 && f_new > f_cur) {
        // Momentum overshot: drop it and take a plain gradient step from x next.
        x_prev = x;
        y_prev = y;
        xi_prev = 0.0;
        ++res.restarts;
        continue;
      }
      res.step_norm = (x_new - x).norm();
      x_prev = std::move(x);
      y_prev = std::move(y);
      x = std::move(x_new);
      y = std::move(y_new);
      f_cur = f_new;
      xi_prev = xi;
      if (res.step_norm <= params.tolerance) {
        res.converged = true;
        break;
      }
    }
    res.x = std::move(x);
    res.smoothed_objective = f_cur;
  }
  res.objective = minimax_objective(problem, res.x);
  return res;
}

double huber(double y, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("huber: tau must be positive");
  const double a = std::abs(y);
  return a <= tau ? y * y / (2.0 * tau) : a - 0.5 * tau;
}

double huber_derivative(double y, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("huber_derivative: tau must be positive");
  return std::clamp(y / tau, -1.0, 1.0);
}

RVec project_simplex(const RVec& v) {
  const Eigen::Index m = v.size();
  if (m == 0) throw std::invalid_argument("project_simplex: empty vector");
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

namespace {

void require_unit_box(const MinimaxProblem& p) {
  if (!p.bounded || p.lower != -1.0 || p.upper != 1.0) {
    throw std::invalid_argument("dual solver requires the box [-1, 1]^n");
  }
}

double dual_value_from(const MinimaxProblem& p, const RVec& lambda, const RVec& z, double tau) {
  double g = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) g -= huber(z[j], tau);
  if (p.offsets.size() != 0) g += lambda.dot(p.offsets);
  return g;
}

RVec recover_from(const RVec& z, double tau) { return (-z / tau).cwiseMax(-1.0).cwiseMin(1.0); }

}  // namespace

double dual_objective(const MinimaxProblem& problem, const RVec& lambda, double tau) {
  return dual_value_from(problem, lambda, problem.C * lambda, tau);
}

RVec dual_recover(const MinimaxProblem& problem, const RVec& lambda, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("dual_recover: tau must be positive");
  return recover_from(problem.C * lambda, tau);
}

RVec dual_gradient(const MinimaxProblem& problem, const RVec& lambda, double tau) {
  RVec g = problem.C.transpose() * dual_recover(problem, lambda, tau);
  if (problem.offsets.size() != 0) g += problem.offsets;
  return g;
}

ApgResult dual_apg(const MinimaxProblem& problem, const ApgParams& params) {
  problem.validate();
  params.validate();
  require_unit_box(problem);
  const double tau = params.regularization;
  const Eigen::Index m = problem.n_terms();

  ApgResult res;
  RVec lambda = RVec::Constant(m, 1.0 / static_cast<double>(m));
  RVec z = problem.C * lambda;  // carried linearly through extrapolation
  const double norm_sq = kLipschitzInflation * spectral_norm_sq(problem.C);

  if (norm_sq > 0.0 && m > 1) {
    const double step = tau / norm_sq;
    RVec lambda_prev = lambda;
    RVec z_prev = z;
    double g_cur = dual_value_from(problem, lambda, z, tau);
    double xi_prev = 0.0;

    for (int k = 0; k < params.max_iters; ++k) {
      ++res.iterations;
      const double xi = next_momentum(xi_prev);
      const double gamma = (xi_prev - 1.0) / xi;
      const RVec lam_ex = lambda + gamma * (lambda - lambda_prev);
      const RVec z_ex = z + gamma * (z - z_prev);

      RVec grad = problem.C.transpose() * recover_from(z_ex, tau);
      if (problem.offsets.size() != 0) grad += problem.offsets;
      RVec lam_new = project_simplex(lam_ex + step * grad);
      RVec z_new = problem.C * lam_new;
      const double g_new = dual_value_from(problem, lam_new, z_new, tau);

      if (params.adaptive_restart && gamma > 0.0 && g_new < g_cur) {
        lambda_prev = lambda;
        z_prev = z;
        xi_prev = 0.0;
        ++res.restarts;
        continue;
      }
      res.step_norm = (lam_new - lambda).norm();
      lambda_prev = std::move(lambda);
      z_prev = std::move(z);
      lambda = std::move(lam_new);
      z = std::move(z_new);
      g_cur = g_new;
      xi_prev = xi;
      if (res.step_norm <= params.tolerance) {
        res.converged = true;
        break;
      }
    }
  } else {
    res.converged = true;
  }

  res.lambda = lambda;
  res.x = recover_from(z, tau);
  res.dual_objective = dual_value_from(problem, lambda, z, tau);
  res.objective = minimax_objective(problem, res.x);
  res.smoothed_objective = res.objective + 0.5 * tau * res.x.squaredNorm();
  return res;
}

IqNormResult min_iq_inf_norm(const CVec& r, const CMat& B, const ApgParams& params) {
  params.validate();
  if (B.rows() != r.size()) throw std::invalid_argument("min_iq_inf_norm: basis row count must match r");
  IqNormResult out;
  const double scale = iq_inf_norm(r);
  out.xi = CVec::Zero(B.cols());
  out.eta = CVec::Zero(r.size());
  out.objective = scale;
  out.converged = true;
  if (B.cols() == 0 || scale == 0.0) return out;

  const RMat Bt = realify(B);
  const RVec rt = stack_iq(r) / scale;
  MinimaxProblem p;
  p.bounded = false;
  p.C.resize(Bt.cols(), 2 * Bt.rows());
  p.C << Bt.transpose(), -Bt.transpose();
  p.offsets.resize(2 * rt.size());
  p.offsets << rt, -rt;

  const auto res = primal_apg(p, params);
  out.xi = unstack_iq(res.x) * scale;
  out.eta = B * out.xi;
  out.objective = iq_inf_norm(r + out.eta);
  out.iterations = res.iterations;
  out.restarts = res.restarts;
  out.converged = res.converged;
  return out;
}

namespace {

// Smoothed max_j |u_j| = mu log sum_j (e^{u_j/mu} + e^{-u_j/mu}).
double smoothed_abs_max(const RVec& u, double mu, RVec* grad) {
  const double umax = u.cwiseAbs().maxCoeff();
  const Eigen::ArrayXd ep = ((u.array() - umax) / mu).exp();
  const Eigen::ArrayXd em = ((-u.array() - umax) / mu).exp();
  const double s = ep.sum() + em.sum();
  if (grad) *grad = ((ep - em) / s).matrix();
  return umax + mu * std::log(s);
}

}  // namespace

IqNormResult min_iq_inf_norm_projected(const CVec& r, const SubspaceProjector& project,
                                       const ApgParams& params) {
  params.validate();
  IqNormResult out;
  const double scale = iq_inf_norm(r);
  out.eta = CVec::Zero(r.size());
  out.objective = scale;
  out.converged = true;
  if (scale == 0.0) return out;

  const RVec rt = stack_iq(r) / scale;
  RVec eta = RVec::Zero(rt.size());
  RVec grad;
  for (double mu : smoothing_schedule(params.smoothing, params)) {
    // Lipschitz constant of the gradient is ||[I, -I]||_2^2 / mu = 2 / mu.
    const double step = 0.5 * mu;
    RVec eta_prev = eta;
    double f_cur = smoothed_abs_max(rt + eta, mu, nullptr);
    double xi_prev = 0.0;
    out.converged = false;
    for (int k = 0; k < params.max_iters; ++k) {
      ++out.iterations;
      const double xi = next_momentum(xi_prev);
      const double gamma = (xi_prev - 1.0) / xi;
      const RVec ex = eta + gamma * (eta - eta_prev);
      smoothed_abs_max(rt + ex, mu, &grad);
      RVec eta_new = ex - step * stack_iq(project(unstack_iq(grad)));
      const double f_new = smoothed_abs_max(rt + eta_new, mu, nullptr);
      if (params.adaptive_restart && gamma > 0.0 && f_new > f_cur) {
        eta_prev = eta;
        xi_prev = 0.0;
        ++out.restarts;
        continue;
      }
      const double step_norm = (eta_new - eta).norm();
      eta_prev = std::move(eta);
      eta = std::move(eta_new);
      f_cur = f_new;
      xi_prev = xi;
      if (step_norm <= params.tolerance) {
        out.converged = true;
        break;
      }
    }
  }
  out.eta = unstack_iq(eta) * scale;
  out.objective = iq_inf_norm(r + out.eta);
  return out;
}

}  // namespace sdp
