#pragma once

#include <complex>

#include <Eigen/Dense>

namespace sdp {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

/// max_n max(|Re v_n|, |Im v_n|); zero for an empty vector.
double iq_inf_norm(const CVec& v);

/// Complex length-N vector to the real stacking [Re(v); Im(v)] of length 2N.
RVec stack_iq(const CVec& v);

/// Inverse of stack_iq. The input length must be even.
CVec unstack_iq(const RVec& v);

/// Real 2N x 2M representation of a complex N x M matrix acting on stacked vectors,
/// so that stack_iq(B * xi) == realify(B) * stack_iq(xi).
RMat realify(const CMat& B);

}  // namespace sdp
