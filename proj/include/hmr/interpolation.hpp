// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_INTERPOLATION_HPP
#define HMR_INTERPOLATION_HPP

#include "hmr/mesh.hpp"

namespace hmr {

// Family of candidate functionals on omega. POINT_EVAL uses the host dofs
// ("magic points"); LOCAL_AVERAGE uses L2-normalized characteristic
// functions of the dyadic subintervals of omega down to `depth`.
struct Dictionary {
  enum class Kind { PointEval, LocalAverage };
  Kind kind = Kind::PointEval;
  int depth = 6;
  double omega_lo = 0.0;
  double omega_hi = 1.0;

  static Dictionary point_eval() { return Dictionary{Kind::PointEval, 0, 0, 1}; }
  static Dictionary local_average(double lo, double hi, int depth = 6) {
    return Dictionary{Kind::LocalAverage, depth, lo, hi};
  }
};

struct FunctionalDesc {
  Dictionary::Kind kind = Dictionary::Kind::PointEval;
  int dof = -1;          // PointEval: host dof index
  double j_lo = 0.0;     // LocalAverage: dyadic interval
  double j_hi = 0.0;
};

// Greedy interpolation system on the interval [a,b] (Algorithm: residual
// sup-maximization over the dictionary). B is lower triangular with unit
// diagonal; theta are the cardinal functions with sigma_i(theta_j) = d_ij.
struct InterpSystem {
  double a = 0.0;
  double b = 0.0;
  std::vector<FunctionalDesc> descs;
  Mat weights; // host dim x k; sigma_i(v) = weights.col(i) . v
  Mat Q;       // host dim x k
  Mat B;       // k x k
  Mat Theta;   // host dim x k

  int k() const { return static_cast<int>(B.rows()); }
  Vec observations(const Vec &v) const { return weights.transpose() * v; }
};

// One functional per input function; K must be linearly independent in
// L2([a,b]). Throws if the dictionary is not unisolvent on span(K).
InterpSystem select_interpolants(const Mat &K, const HostSpace &host,
                                 const Dictionary &dict, double a, double b);

// Solve the triangular system B alpha = observations.
Vec interpolate(const InterpSystem &sys, const Vec &observations);

enum class LebesgueMode { Geometric, Svd };

// Geometric: 2^{k-1} max_i ||q_i||_{L2(I)}. Svd: computed discrete L2(I)
// operator norm of the interpolation operator (reciprocal inf-sup).
double lebesgue_bound(const InterpSystem &sys, const HostSpace &host,
                      LebesgueMode mode);

// Discrete L-infinity operator norm of the local interpolant (max abs row
// sum of the cardinal value table); used by the discrete-setting bound.
double linf_lebesgue(const InterpSystem &sys, const HostSpace &host);

} // namespace hmr

#endif // HMR_INTERPOLATION_HPP
