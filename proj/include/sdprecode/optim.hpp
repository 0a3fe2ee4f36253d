#pragma once

#include <functional>

#include "sdprecode/linalg.hpp"

namespace sdp {

/// min_x f(x) = max_i (c_i^T x + d_i), optionally over the box [lower, upper]^n.
///
/// `C` is n x m with the c_i as columns; `offsets` is either empty (all d_i = 0) or length m.
struct MinimaxProblem {
  RMat C;
  RVec offsets;
  bool bounded = true;
  double lower = -1.0;
  double upper = 1.0;

  Eigen::Index dimension() const { return C.rows(); }
  Eigen::Index n_terms() const { return C.cols(); }
  void validate() const;
};

struct ApgParams {
  double smoothing = 0.05;        // mu, primal log-sum-exp smoothing
  double regularization = 0.005;  // tau, dual Huber regularization
  double tolerance = 1e-5;        // on the iterate step norm
  int max_iters = 2000;           // per continuation stage
  bool adaptive_restart = true;
  // Solve first with smoothing * factor^stages and shrink to `smoothing`, warm starting each stage.
  int continuation_stages = 0;
  double continuation_factor = 10.0;

  void validate() const;
};

struct ApgResult {
  RVec x;
  RVec lambda;                  // dual solver only
  double objective = 0.0;       // exact f(x)
  double smoothed_objective = 0.0;
  double dual_objective = 0.0;  // dual solver only: g(lambda)
  int iterations = 0;
  int restarts = 0;
  double step_norm = 0.0;
  bool converged = false;
};

struct SmoothedValue {
  double value;
  RVec gradient;
};

double minimax_objective(const MinimaxProblem& problem, const RVec& x);

/// mu log sum_i exp((c_i^T x + d_i) / mu) and its gradient C softmax(.).
SmoothedValue smoothed_objective(const MinimaxProblem& problem, const RVec& x, double mu);

/// Largest squared singular value of C by power iteration on the smaller Gram matrix.
double spectral_norm_sq(const RMat& C);

/// Accelerated projected gradient on the smoothed objective; projection is box clipping
/// (or none for unbounded problems). Starts from x0 when given, else from 0.
ApgResult primal_apg(const MinimaxProblem& problem, const ApgParams& params, const RVec* x0 = nullptr);

/// y^2 / (2 tau) for |y| <= tau, |y| - tau/2 otherwise.
double huber(double y, double tau);
double huber_derivative(double y, double tau);

/// Euclidean projection onto {lambda >= 0, sum lambda = 1}.
RVec project_simplex(const RVec& v);

/// Dual of min_{x in [-1,1]^n} f(x) + tau/2 ||x||^2:
///   g(lambda) = lambda^T d - sum_j huber((C lambda)_j, tau).
double dual_objective(const MinimaxProblem& problem, const RVec& lambda, double tau);
RVec dual_gradient(const MinimaxProblem& problem, const RVec& lambda, double tau);

/// Primal point attached to a dual iterate: clip(-C lambda / tau).
RVec dual_recover(const MinimaxProblem& problem, const RVec& lambda, double tau);

/// Accelerated projected gradient ascent on g over the unit simplex. Requires the unit box.
ApgResult dual_apg(const MinimaxProblem& problem, const ApgParams& params);

struct IqNormResult {
  CVec xi;   // coefficients in the supplied basis (explicit-basis solver)
  CVec eta;  // the correction B xi added to r
  double objective = 0.0;  // ||r + eta||_{IQ-inf}
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
};

/// min_xi ||r + B xi||_{IQ-inf} for B with orthonormal columns, through the stacked
/// real minimax form over +-rows with no box. The smoothing parameter is relative to
/// ||r||_{IQ-inf} since the problem is positively homogeneous in r.
IqNormResult min_iq_inf_norm(const CVec& r, const CMat& B, const ApgParams& params);

/// Same problem with the subspace given by an orthogonal projector instead of a basis;
/// the iterates are eta = B xi directly. The projector must be linear and idempotent.
using SubspaceProjector = std::function<CVec(const CVec&)>;
IqNormResult min_iq_inf_norm_projected(const CVec& r, const SubspaceProjector& project,
                                       const ApgParams& params);

}  // namespace sdp
