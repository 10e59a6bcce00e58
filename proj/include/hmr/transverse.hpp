// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_TRANSVERSE_HPP
#define HMR_TRANSVERSE_HPP

#include "hmr/mesh.hpp"
#include "hmr/model_problem.hpp"

namespace hmr {

// Parameter vector mu = (x_l, U(x_l), dU(x_l))_{l=1..Q}, x strictly
// increasing inside Omega_1D.
struct ParameterPoint {
  std::vector<double> x;
  std::vector<double> U;
  std::vector<double> Up;

  int Q() const { return static_cast<int>(x.size()); }
  void sort_by_x();
  bool admissible(double delta_u = 1e-8) const;
};

// Midpoint-style weights: positive, sum = x1 - x0.
Vec quadrature_weights(const std::vector<double> &points, double x0,
                       double x1);

// Shared context for the parametrized 1D transverse problems.
struct TransverseContext {
  const TestCase *tc = nullptr;
  FESpace1D space_y0; // zero-trace P1 on omega
  std::shared_ptr<RieszSolver> dual; // H1-gram factorization (stiffness)
  double x0 = 0.0, x1 = 2.0;

  int n_nodes() const { return space_y0.mesh.n_elem + 1; }
};

TransverseContext make_transverse_context(const TestCase &tc, int n_h);

// Integrals int f(x,.) v_j dy for all zero-trace hats; box sources are
// clipped exactly, smooth sources use composite 3-point Gauss.
Vec source_y_profile(const TestCase &tc, double x, const FESpace1D &space_y0);

struct TransverseSolveResult {
  bool converged = false;
  Vec coeffs; // space_y0 dofs
  std::vector<double> residual_history;
};

TransverseSolveResult solve_transverse(const ParameterPoint &mu,
                                       const TransverseContext &ctx,
                                       double tol = 1e-10, int max_iter = 25);

// Residual of the discrete 1D problem at iterate P (used by tests).
Vec transverse_residual(const ParameterPoint &mu, const TransverseContext &ctx,
                        const Vec &P);
SpMat transverse_jacobian(const ParameterPoint &mu,
                          const TransverseContext &ctx, const Vec &P);

// The five operator components; y-derivative parts are projected onto
// piecewise constants, the others are nodal in the free P1 space.
struct OperatorSnapshot {
  Vec x_flux;    // d(p) dx p      (free P1 nodal)
  Vec y_flux;    // d(p) dy p      (pwconst)
  Vec d_val;     // d(p)           (free P1 nodal)
  Vec dp_x_flux; // d'(p) dx p     (free P1 nodal)
  Vec dp_y_flux; // d'(p) dy p     (pwconst)

  const Vec &component(int i) const {
    switch (i) {
    case 0:
      return x_flux;
    case 1:
      return y_flux;
    case 2:
      return d_val;
    case 3:
      return dp_x_flux;
    default:
      return dp_y_flux;
    }
  }
};

constexpr int kNumComponents = 5;
inline bool component_is_pwconst(int i) { return i == 1 || i == 4; }

OperatorSnapshot operator_snapshot(const ParameterPoint &mu, const Vec &P,
                                   const TransverseContext &ctx);

} // namespace hmr

#endif // HMR_TRANSVERSE_HPP
