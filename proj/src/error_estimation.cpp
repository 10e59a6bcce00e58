// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/error_estimation.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace hmr {

namespace {

// x-dof pairings of the coefficient functions: fx1[n][i] = int c_n xi_i' dx,
// fx2[n][i] = int c_n xi_i dx (3-point Gauss, consistent with the reduced
// assembly).
void x_pairings(const FESpace1D &sx, const Mat &C, Mat &fx_deriv,
                Mat &fx_value) {
  const int k = static_cast<int>(C.rows());
  fx_deriv = Mat::Zero(k, sx.dim);
  fx_value = Mat::Zero(k, sx.dim);
  const auto &g = gauss3();
  for (int e = 0; e < sx.mesh.n_elem; ++e) {
    const double h = sx.mesh.h(e);
    for (int q = 0; q < g.n; ++q) {
      const double w = g.wts[q] * h;
      const double shape[2] = {1 - g.pts[q], g.pts[q]};
      const double dshape[2] = {-1 / h, 1 / h};
      const int dofs[2] = {sx.dof_of_node(e), sx.dof_of_node(e + 1)};
      for (int a = 0; a < 2; ++a) {
        if (dofs[a] < 0)
          continue;
        for (int n = 0; n < k; ++n) {
          fx_deriv(n, dofs[a]) += w * C(n, e * 3 + q) * dshape[a];
          fx_value(n, dofs[a]) += w * C(n, e * 3 + q) * shape[a];
        }
      }
    }
  }
}

// y-dof pairings of the collateral bases against zero-trace hats.
Mat y_pairing_value(const UnitTensors &ut, const FESpace1D &sy0) {
  // gy[n][j] = int kappa_n upsilon_j dy
  const Mat full = Mat(ut.host->mass) * ut.kappa; // node-indexed weights
  Mat gy(ut.kappa.cols(), sy0.dim);
  for (int j = 0; j < sy0.dim; ++j)
    gy.col(j) = full.row(sy0.node_of_dof(j)).transpose();
  return gy;
}

Mat y_pairing_deriv(const UnitTensors &ut, const FESpace1D &sy0) {
  // gy[n][j] = int kappa_n upsilon_j' dy = kappa[left elem] - kappa[right]
  Mat gy(ut.kappa.cols(), sy0.dim);
  for (int j = 0; j < sy0.dim; ++j) {
    const int node = sy0.node_of_dof(j);
    gy.col(j) = (ut.kappa.row(node - 1) - ut.kappa.row(node)).transpose();
  }
  return gy;
}

Vec epm_operator_functional(const OnlineOperator &op,
                            const ReferenceContext &ref, const Vec &u) {
  const FESpace2D &s2 = ref.space;
  HMR_REQUIRE(s2.nx == op.space_x.dim && s2.ny == op.space_y0.dim,
              "epm functional: reference space mismatch");
  const Mat C1 = unit_coefficients(op, op.xflux, u);
  const Mat C2 = unit_coefficients(op, op.yflux, u);
  Mat fx1d, fx1v, fx2d, fx2v;
  x_pairings(op.space_x, C1, fx1d, fx1v);
  x_pairings(op.space_x, C2, fx2d, fx2v);
  const Mat gy1 = y_pairing_value(op.xflux, op.space_y0);
  const Mat gy2 = y_pairing_deriv(op.yflux, op.space_y0);

  Vec rhs = Vec::Zero(s2.dim);
  for (int n = 0; n < gy1.rows(); ++n)
    for (int iy = 0; iy < s2.ny; ++iy) {
      const double gv = gy1(n, iy);
      if (gv == 0.0)
        continue;
      for (int ix = 0; ix < s2.nx; ++ix)
        rhs[s2.dof(ix, iy)] += fx1d(n, ix) * gv;
    }
  for (int n = 0; n < gy2.rows(); ++n)
    for (int iy = 0; iy < s2.ny; ++iy) {
      const double gv = gy2(n, iy);
      if (gv == 0.0)
        continue;
      for (int ix = 0; ix < s2.nx; ++ix)
        rhs[s2.dof(ix, iy)] += fx2v(n, ix) * gv;
    }
  return rhs;
}

} // namespace

Vec epm_rhs_functional(const OnlineOperator &op, const ReferenceContext &ref,
                       const Vec &u) {
  return epm_operator_functional(op, ref, u) - ref.fvec;
}

std::pair<double, double> dual_norms(const OnlineOperator &op_k,
                                     const OnlineOperator &op_kp,
                                     const ReferenceContext &ref,
                                     const Vec &u) {
  const Vec rk = epm_rhs_functional(op_k, ref, u);
  const Vec opk = epm_operator_functional(op_k, ref, u);
  const Vec opkp = epm_operator_functional(op_kp, ref, u);
  const double e_mod = ref.dual->dual_norm(rk);
  const double e_epm = ref.dual->dual_norm(opkp - opk);
  return {e_mod, e_epm};
}

SpMat epm_jacobian_2d(const OnlineOperator &op, const ReferenceContext &ref,
                      const Vec &u) {
  const FESpace2D &s2 = ref.space;
  HMR_REQUIRE(s2.nx == op.space_x.dim && s2.ny == op.space_y0.dim,
              "epm_jacobian_2d: reference space mismatch");
  const Mesh1D &mx = s2.mesh.mesh_x;
  const Mesh1D &my = s2.mesh.mesh_y;
  const auto &g = gauss3();

  // Coefficient functions of the derivative units at the x-Gauss points.
  const Mat C3 = unit_coefficients(op, op.dval, u);
  const Mat C4 = unit_coefficients(op, op.dpx, u);
  const Mat C5 = unit_coefficients(op, op.dpy, u);
  const Mat &k3 = op.dval.kappa;
  const Mat &k4 = op.dpx.kappa;
  const Mat &k5 = op.dpy.kappa;

  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(s2.dim) * 16);
  auto dof_of = [&](int nx_node, int ny_node) {
    if (nx_node < 1 || nx_node > s2.nx || ny_node < 1 || ny_node > s2.ny)
      return -1;
    return s2.dof(nx_node - 1, ny_node - 1);
  };

  for (int ey = 0; ey < my.n_elem; ++ey) {
    const double hy = my.h(ey);
    // kappa values at the y-Gauss points of this row.
    Mat k3g(3, k3.cols()), k4g(3, k4.cols());
    for (int qy = 0; qy < 3; ++qy) {
      const double t = g.pts[qy];
      k3g.row(qy) = k3.row(ey) * (1 - t) + k3.row(ey + 1) * t;
      k4g.row(qy) = k4.row(ey) * (1 - t) + k4.row(ey + 1) * t;
    }
    for (int ex = 0; ex < mx.n_elem; ++ex) {
      const double hx = mx.h(ex);
      int dofs[4];
      for (int a = 0; a < 4; ++a)
        dofs[a] = dof_of(ex + (a % 2), ey + (a / 2));
      double je[4][4] = {};

      for (int qx = 0; qx < 3; ++qx) {
        const int gx = ex * 3 + qx;
        for (int qy = 0; qy < 3; ++qy) {
          const double tx = g.pts[qx], ty = g.pts[qy];
          const double w = g.wts[qx] * g.wts[qy] * hx * hy;
          // separated coefficients g3 = d-part, g4 = d' dx p, g5 = d' dy p
          double g3 = 0, g4 = 0, g5 = 0;
          for (int n = 0; n < C3.rows(); ++n)
            g3 += C3(n, gx) * k3g(qy, n);
          for (int n = 0; n < C4.rows(); ++n)
            g4 += C4(n, gx) * k4g(qy, n);
          for (int n = 0; n < C5.rows(); ++n)
            g5 += C5(n, gx) * k5(ey, n);

          const double sx[2] = {1 - tx, tx}, sy[2] = {1 - ty, ty};
          const double dsx[2] = {-1 / hx, 1 / hx}, dsy[2] = {-1 / hy, 1 / hy};
          double N[4], Nx[4], Ny[4];
          for (int a = 0; a < 4; ++a) {
            const int ax = a % 2, ay = a / 2;
            N[a] = sx[ax] * sy[ay];
            Nx[a] = dsx[ax] * sy[ay];
            Ny[a] = sx[ax] * dsy[ay];
          }
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
              je[a][b] += w * (g3 * (Nx[b] * Nx[a] + Ny[b] * Ny[a]) +
                               g4 * N[b] * Nx[a] + g5 * N[b] * Ny[a]);
        }
      }
      for (int a = 0; a < 4; ++a) {
        if (dofs[a] < 0)
          continue;
        for (int b = 0; b < 4; ++b)
          if (dofs[b] >= 0)
            trip.emplace_back(dofs[a], dofs[b], je[a][b]);
      }
    }
  }
  SpMat J(s2.dim, s2.dim);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

double smallest_singular_value(const SpMat &J, double tol, int max_iter) {
  Eigen::SparseLU<SpMat> lu(J);
  HMR_REQUIRE(lu.info() == Eigen::Success,
              "smallest_singular_value: factorization failed");
  const int n = static_cast<int>(J.rows());
  auto apply = [&](const Vec &v) {
    // (J' J)^{-1} v = J^{-1} J^{-T} v
    const Vec z = lu.transpose().solve(v);
    return Vec(lu.solve(z));
  };

  // Symmetric Lanczos with full reorthogonalization.
  std::vector<Vec> V;
  std::vector<double> alpha, beta;
  CounterRng rng(1234);
  Vec v(n);
  for (int i = 0; i < n; ++i)
    v[i] = rng.uniform(-1, 1);
  v /= v.norm();
  V.push_back(v);
  double theta_prev = 0.0;

  for (int it = 0; it < max_iter; ++it) {
    Vec w = apply(V.back());
    const double a = V.back().dot(w);
    alpha.push_back(a);
    w -= a * V.back();
    if (V.size() > 1)
      w -= beta.back() * V[V.size() - 2];
    for (const Vec &q : V) // full reorthogonalization
      w -= q.dot(w) * q;
    const double b = w.norm();

    // largest Ritz value of the tridiagonal
    const int m = static_cast<int>(alpha.size());
    Mat T = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) {
        T(i, i + 1) = beta[i];
        T(i + 1, i) = beta[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(T);
    const double theta = eig.eigenvalues().maxCoeff();
    if (it > 2 && std::abs(theta - theta_prev) <= tol * theta)
      return 1.0 / std::sqrt(theta);
    theta_prev = theta;

    if (b < 1e-14) // invariant subspace found
      return 1.0 / std::sqrt(theta);
    beta.push_back(b);
    V.push_back(w / b);
  }
  return 1.0 / std::sqrt(theta_prev);
}

double approx_infsup(const OnlineOperator &op_kp, const ReferenceContext &ref,
                     const Vec &u) {
  return smallest_singular_value(epm_jacobian_2d(op_kp, ref, u));
}

double exact_infsup(const ReferenceContext &ref, const Vec &field2d) {
  return smallest_singular_value(reference_jacobian(ref, field2d));
}

ConstantEstimates estimate_constants(const OnlineOperator &op,
                                     const ReferenceContext &ref,
                                     const Vec &u, double p_exponent) {
  ConstantEstimates est;
  // Range of the reduced solution = its nodal values.
  Mat coeffs(op.m, op.space_x.dim);
  for (int t = 0; t < op.m; ++t)
    coeffs.row(t) = u.segment(t * op.space_x.dim, op.space_x.dim);
  const Vec field = reconstruct(coeffs, op.Y, ref.space);
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  for (int i = 0; i < field.size(); ++i) {
    double d, d1, d2;
    op.law->eval(field[i], d, d1, d2);
    c1 = std::max(c1, std::abs(d));
    c2 = std::max(c2, std::abs(d1));
    c3 = std::max(c3, std::abs(d2));
  }
  if (field.size() == 0) {
    double d, d1, d2;
    op.law->eval(0.0, d, d1, d2);
    c1 = std::abs(d);
    c2 = std::abs(d1);
    c3 = std::abs(d2);
  }
  // Boundary value zero is always in the range.
  {
    double d, d1, d2;
    op.law->eval(0.0, d, d1, d2);
    c1 = std::max(c1, std::abs(d));
    c2 = std::max(c2, std::abs(d1));
    c3 = std::max(c3, std::abs(d2));
  }
  est.c2 = c2;
  est.c3 = c3;
  const double H = ref.space.mesh.mesh_x.h(0);
  const double h = ref.space.mesh.mesh_y.h(0);
  est.c_h = std::pow(H * H + h * h, (2.0 - p_exponent) / (2.0 * p_exponent));
  const double h1 = std::sqrt(field.dot(ref.space.h1_semi_gram * field));
  est.lipschitz = 2.0 * c2 + c3 * est.c_h * h1;
  est.gamma = c1 + c2 * est.c_h * h1;
  return est;
}

BrrReport brr_assemble(double dual_mod, double dual_epm, double beta_app,
                       double lipschitz, double c_h, double gamma_est) {
  HMR_REQUIRE(std::isfinite(dual_mod) && std::isfinite(dual_epm) &&
                  std::isfinite(beta_app) && std::isfinite(lipschitz),
              "brr_assemble: non-finite inputs");
  BrrReport r;
  r.beta_app = beta_app;
  r.gamma_est = gamma_est;
  r.lipschitz_est = lipschitz;
  r.c_h = c_h;
  r.dual_norm_residual = dual_mod;
  r.dual_norm_epm = dual_epm;
  const double Lch = lipschitz * c_h;
  r.tau = (beta_app > 0 && Lch > 0)
              ? 2.0 * Lch / (beta_app * beta_app) * (dual_epm + dual_mod)
              : 0.0;
  r.brr_satisfied = r.tau < 1.0;
  if (r.brr_satisfied && Lch > 0)
    r.delta = beta_app / Lch * (1.0 - std::sqrt(1.0 - r.tau));
  r.c_err = dual_mod > 0 ? dual_epm / dual_mod
            : (dual_epm > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  if (r.c_err < 1.0) {
    const double C_err = (1.0 - r.c_err) / (1.0 + r.c_err);
    r.effectivity_ok = r.tau <= 0.5 * C_err;
  }
  return r;
}

} // namespace hmr
