// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_ERROR_ESTIMATION_HPP
#define HMR_ERROR_ESTIMATION_HPP

#include "hmr/reduced.hpp"
#include "hmr/reference.hpp"

namespace hmr {

// <P_k^L[F(u)], v> for every Q1 basis function v of the reference space
// (f-term included). The reference context supplies the mesh and <f, v>.
Vec epm_rhs_functional(const OnlineOperator &op, const ReferenceContext &ref,
                       const Vec &u);

// (||e_mod||_{H^-1}, ||e_EPM||_{H^-1}): Riesz dual norms of P_k^L[F] and of
// P_{k'}^{L'}[F] - P_k^L[F]. op_kp must share Y with op_k and carry the
// richer residual units.
std::pair<double, double> dual_norms(const OnlineOperator &op_k,
                                     const OnlineOperator &op_kp,
                                     const ReferenceContext &ref,
                                     const Vec &u);

// 2D Galerkin matrix of the EPM-approximated Frechet derivative, built from
// the derivative collateral units of `op` at the iterate u.
SpMat epm_jacobian_2d(const OnlineOperator &op, const ReferenceContext &ref,
                      const Vec &u);

// Plain smallest singular value of a sparse matrix via Lanczos on the
// inverse normal operator (two triangular solves per step).
double smallest_singular_value(const SpMat &J, double tol = 1e-12,
                               int max_iter = 400);

// beta_app: smallest singular value of the EPM-approximated Jacobian.
double approx_infsup(const OnlineOperator &op_kp, const ReferenceContext &ref,
                     const Vec &u);

// Exact counterpart: smallest singular value of F'(p) assembled without the
// EPM at the reconstructed 2D field.
double exact_infsup(const ReferenceContext &ref, const Vec &field2d);

struct ConstantEstimates {
  double c2 = 0.0;      // max |d'| over the solution range
  double c3 = 0.0;      // max |d''|
  double lipschitz = 0; // L_{2,p} with unit auxiliary constants
  double c_h = 1.0;
  double gamma = 0.0;   // continuity estimate (diagnostic only)
};

ConstantEstimates estimate_constants(const OnlineOperator &op,
                                     const ReferenceContext &ref,
                                     const Vec &u, double p_exponent = 4.0);

struct BrrReport {
  double beta_app = 0.0;
  double gamma_est = 0.0;
  double lipschitz_est = 0.0;
  double c_h = 1.0;
  double dual_norm_residual = 0.0; // ||P_k^L[F]||
  double dual_norm_epm = 0.0;      // ||P_k' - P_k [F]||
  double tau = 0.0;
  double delta = std::numeric_limits<double>::quiet_NaN(); // only if tau < 1
  double c_err = 0.0;
  bool brr_satisfied = false;     // tau < 1
  bool effectivity_ok = false;    // tau <= C_err / 2
};

BrrReport brr_assemble(double dual_mod, double dual_epm, double beta_app,
                       double lipschitz, double c_h, double gamma_est);

} // namespace hmr

#endif // HMR_ERROR_ESTIMATION_HPP
