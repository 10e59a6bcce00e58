// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_REDUCED_HPP
#define HMR_REDUCED_HPP

#include "hmr/epm.hpp"
#include "hmr/model_problem.hpp"
#include "hmr/transverse.hpp"

namespace hmr {

// Operator component indices (see OperatorSnapshot).
enum CompIndex : int {
  kCompXFlux = 0,
  kCompYFlux = 1,
  kCompDVal = 2,
  kCompDpXFlux = 3,
  kCompDpYFlux = 4
};

// One collateral basis with its empirical projector, tied to the operator
// component it approximates.
struct CollateralUnit {
  int comp = kCompXFlux;
  std::shared_ptr<const HostSpace> host;
  EpmProjector proj;
};

// Truncate a single-interval (N_max = 0) projector to its first k modes;
// the greedy selection is nested, so the prefix system is exact.
EpmProjector truncate_projector(const EpmProjector &proj,
                                const HostSpace &host, int k_new);

// Precomputed transverse tensors and magic-evaluation tables for one
// collateral unit.
struct UnitTensors {
  int comp = kCompXFlux;
  bool pwc = false;
  std::shared_ptr<const HostSpace> host;
  Mat kappa; // host dim x k
  Mat P;     // L x k projection integrals
  Mat C;     // k x m residual pairing (x/y flux units only)
  // functional evaluation data
  struct FuncW {
    std::vector<std::pair<int, double>> terms; // (site position, weight)
  };
  std::vector<FuncW> funcs; // L
  std::vector<int> sites;   // host dofs used by the functionals
  Mat phi;                  // nsites x m (P1 host: phi at the node)
  Mat phi_g[3];             // pwc host: phi at the element Gauss points
  Mat dphi;                 // pwc host: phi' on the element
  Mat E;                    // m x nsites: C' P' W' (residual units only)

  // Magic evaluations of the component at one x-location.
  void eval_theta(const DiffusionLaw &law, const Vec &pbar, const Vec &pxbar,
                  Vec &theta) const;
};

// The assembled online operator for the discrete reduced problem.
struct OnlineOperator {
  int m = 0;
  FESpace1D space_x;
  FESpace1D space_y0;
  Mat Y; // n_y0 x m
  std::shared_ptr<const DiffusionLaw> law;
  UnitTensors xflux, yflux, dval, dpx, dpy;
  Mat Frhs; // m x (n_xelem * 3): int f(x_gauss,.) phi_t dy
  SpMat Gred;
  std::shared_ptr<RieszSolver> dual;

  int n_unknowns() const { return m * space_x.dim; }
};

OnlineOperator precompute_tensors(const Mat &Y, const FESpace1D &space_y0,
                                  const FESpace1D &space_x, const TestCase &tc,
                                  const CollateralUnit &xflux,
                                  const CollateralUnit &yflux,
                                  const CollateralUnit &dval,
                                  const CollateralUnit &dpx,
                                  const CollateralUnit &dpy);

// Residual of the reduced problem at flattened coefficients u[t*NH + i].
Vec reduced_residual(const OnlineOperator &op, const Vec &u);

// EPM approximation of the Frechet derivative (not the exact derivative of
// the EPM residual; symmetry is not expected).
SpMat reduced_jacobian(const OnlineOperator &op, const Vec &u);

struct NewtonOptions {
  double tol = 1e-9;
  int max_iter = 30;
  int direct_limit = 20000; // unknown count above which Krylov is used
  bool force_direct = false;
  bool force_krylov = false;
};

struct ReducedSolution {
  Mat coeffs; // m x NH
  bool converged = false;
  std::vector<double> residual_history;

  Vec flattened() const {
    Vec u(coeffs.size());
    for (int t = 0; t < coeffs.rows(); ++t)
      u.segment(t * coeffs.cols(), coeffs.cols()) = coeffs.row(t);
    return u;
  }
};

ReducedSolution newton_solve(const OnlineOperator &op, const Vec &init,
                             const NewtonOptions &opt = {});

// Nodal 2D field p(x,y) = sum_s pbar_s(x) phi_s(y) on the zero-trace Q1
// space (x-fastest dofs).
Vec reconstruct(const Mat &coeffs, const Mat &Y, const FESpace2D &space2d);

// Coefficients c_n(x_gauss) of the unit's empirical projection along the
// solution u: k x (n_xelem*3). Used by the error estimator and studies.
Mat unit_coefficients(const OnlineOperator &op, const UnitTensors &ut,
                      const Vec &u);

// L2(Omega_1D) norms of the coefficient functions pbar_s: returns the
// vector of ||pbar_s||^2.
Vec coefficient_norms_sq(const OnlineOperator &op, const ReducedSolution &sol);

} // namespace hmr

#endif // HMR_REDUCED_HPP
