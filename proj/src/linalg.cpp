#include "sdprecode/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdp {

double iq_inf_norm(const CVec& v) {
  double m = 0.0;
  for (Eigen::Index n = 0; n < v.size(); ++n) {
    m = std::max({m, std::abs(v[n].real()), std::abs(v[n].imag())});
  }
  return m;
}

RVec stack_iq(const CVec& v) {
  const Eigen::Index n = v.size();
  RVec out(2 * n);
  out.head(n) = v.real();
  out.tail(n) = v.imag();
  return out;
}

CVec unstack_iq(const RVec& v) {
  if (v.size() % 2 != 0) {
    throw std::invalid_argument("unstack_iq: length must be even");
  }
  const Eigen::Index n = v.size() / 2;
  CVec out(n);
  out.real() = v.head(n);
  out.imag() = v.tail(n);
  return out;
}

RMat realify(const CMat& B) {
  const Eigen::Index r = B.rows();
  const Eigen::Index c = B.cols();
  RMat out(2 * r, 2 * c);
  out.topLeftCorner(r, c) = B.real();
  out.topRightCorner(r, c) = -B.imag();
  out.bottomLeftCorner(r, c) = B.imag();
  out.bottomRightCorner(r, c) = B.real();
  return out;
}

}  // namespace sdp
