// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/transverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hmr {

void ParameterPoint::sort_by_x() {
  const int q = Q();
  std::vector<int> idx(q);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return x[a] < x[b]; });
  ParameterPoint tmp = *this;
  for (int i = 0; i < q; ++i) {
    x[i] = tmp.x[idx[i]];
    U[i] = tmp.U[idx[i]];
    Up[i] = tmp.Up[idx[i]];
  }
}

bool ParameterPoint::admissible(double delta_u) const {
  double umax = 0.0;
  for (double u : U)
    umax = std::max(umax, std::abs(u));
  for (int l = 1; l < Q(); ++l)
    if (!(x[l] > x[l - 1]))
      return false;
  return umax >= delta_u;
}

Vec quadrature_weights(const std::vector<double> &points, double x0,
                       double x1) {
  const int Q = static_cast<int>(points.size());
  HMR_REQUIRE(Q >= 1, "quadrature_weights: no points");
  for (int l = 1; l < Q; ++l)
    HMR_REQUIRE(points[l] > points[l - 1],
                "quadrature_weights: points must be strictly increasing");
  Vec alpha(Q);
  if (Q == 1) {
    alpha[0] = x1 - x0;
    return alpha;
  }
  alpha[0] = 0.5 * (points[0] + points[1]) - x0;
  for (int l = 1; l < Q - 1; ++l)
    alpha[l] = 0.5 * (points[l + 1] - points[l - 1]);
  alpha[Q - 1] = x1 - 0.5 * (points[Q - 2] + points[Q - 1]);
  return alpha;
}

TransverseContext make_transverse_context(const TestCase &tc, int n_h) {
  TransverseContext ctx;
  ctx.tc = &tc;
  Mesh1D mesh_y = build_interval_mesh(tc.domain.y0, tc.domain.y1, n_h);
  ctx.space_y0 = make_fe_space_1d(mesh_y, Boundary::ZeroTrace);
  ctx.dual = std::make_shared<RieszSolver>(ctx.space_y0.stiffness);
  ctx.x0 = tc.domain.x0;
  ctx.x1 = tc.domain.x1;
  return ctx;
}

Vec source_y_profile(const TestCase &tc, double x, const FESpace1D &space_y0) {
  const Mesh1D &mesh = space_y0.mesh;
  Vec full = Vec::Zero(mesh.n_elem + 1);
  if (tc.source_is_box_indicator()) {
    struct Box {
      double x0, x1, y0, y1;
    };
    static const Box boxes[3] = {{0.4, 0.6, 0.2, 0.36},
                                 {0.4, 0.6, 0.64, 0.8},
                                 {1.4, 1.6, 0.4, 0.6}};
    for (const auto &bx : boxes)
      if (x >= bx.x0 && x <= bx.x1)
        full += p1_window_integrals(mesh, bx.y0, bx.y1);
  } else {
    const auto &g = gauss3();
    for (int e = 0; e < mesh.n_elem; ++e) {
      const double yl = mesh.nodes[e], h = mesh.h(e);
      for (int q = 0; q < g.n; ++q) {
        const double y = yl + h * g.pts[q];
        const double t = g.pts[q];
        const double w = g.wts[q] * h * tc.source(x, y);
        full[e] += w * (1.0 - t);
        full[e + 1] += w * t;
      }
    }
  }
  Vec out(space_y0.dim);
  for (int i = 0; i < space_y0.dim; ++i)
    out[i] = full[space_y0.node_of_dof(i)];
  return out;
}

namespace {

struct AssembledSystem {
  Vec residual;
  SpMat jacobian;
};

// Weak form at iterate P:
//   sum_l alpha_l ( d(U_l P)[(U_l')^2 P v + U_l^2 P' v'] - U_l f(x_l) v ).
AssembledSystem assemble_transverse(const ParameterPoint &mu,
                                    const TransverseContext &ctx, const Vec &P,
                                    bool with_jacobian) {
  const FESpace1D &sp = ctx.space_y0;
  const Mesh1D &mesh = sp.mesh;
  const DiffusionLaw &law = *ctx.tc->law;
  const auto &g = gauss3();
  const int Q = mu.Q();
  const Vec alpha = quadrature_weights(mu.x, ctx.x0, ctx.x1);

  AssembledSystem out;
  out.residual = Vec::Zero(sp.dim);
  std::vector<Triplet> trip;
  if (with_jacobian)
    trip.reserve(4 * mesh.n_elem);

  const Vec Pn = sp.nodal_values(P);

  for (int e = 0; e < mesh.n_elem; ++e) {
    const double h = mesh.h(e);
    const double pl = Pn[e], pr = Pn[e + 1];
    const double dP = (pr - pl) / h;
    const int dofs[2] = {sp.dof_of_node(e), sp.dof_of_node(e + 1)};
    double re[2] = {0.0, 0.0};
    double je[2][2] = {{0.0, 0.0}, {0.0, 0.0}};

    for (int q = 0; q < g.n; ++q) {
      const double t = g.pts[q];
      const double w = g.wts[q] * h;
      const double pv = pl * (1.0 - t) + pr * t;
      const double shape[2] = {1.0 - t, t};
      const double dshape[2] = {-1.0 / h, 1.0 / h};

      for (int l = 0; l < Q; ++l) {
        double d, d1, d2;
        law.eval(mu.U[l] * pv, d, d1, d2);
        const double u2 = mu.U[l] * mu.U[l];
        const double up2 = mu.Up[l] * mu.Up[l];
        const double wl = alpha[l] * w;
        for (int a = 0; a < 2; ++a) {
          re[a] += wl * d * (up2 * pv * shape[a] + u2 * dP * dshape[a]);
          if (with_jacobian)
            for (int b = 0; b < 2; ++b) {
              const double dd = d1 * mu.U[l] * shape[b];
              je[a][b] += wl * (dd * (up2 * pv * shape[a] + u2 * dP * dshape[a]) +
                                d * (up2 * shape[b] * shape[a] +
                                     u2 * dshape[b] * dshape[a]));
            }
        }
      }
    }
    for (int a = 0; a < 2; ++a) {
      if (dofs[a] < 0)
        continue;
      out.residual[dofs[a]] += re[a];
      if (with_jacobian)
        for (int b = 0; b < 2; ++b)
          if (dofs[b] >= 0)
            trip.emplace_back(dofs[a], dofs[b], je[a][b]);
    }
  }

  for (int l = 0; l < Q; ++l) {
    const Vec f = source_y_profile(*ctx.tc, mu.x[l], sp);
    out.residual -= alpha[l] * mu.U[l] * f;
  }

  if (with_jacobian) {
    out.jacobian.resize(sp.dim, sp.dim);
    out.jacobian.setFromTriplets(trip.begin(), trip.end());
  }
  return out;
}

} // namespace

Vec transverse_residual(const ParameterPoint &mu, const TransverseContext &ctx,
                        const Vec &P) {
  return assemble_transverse(mu, ctx, P, false).residual;
}

SpMat transverse_jacobian(const ParameterPoint &mu,
                          const TransverseContext &ctx, const Vec &P) {
  return assemble_transverse(mu, ctx, P, true).jacobian;
}

TransverseSolveResult solve_transverse(const ParameterPoint &mu,
                                       const TransverseContext &ctx,
                                       double tol, int max_iter) {
  HMR_REQUIRE(mu.admissible(), "solve_transverse: inadmissible parameter");
  TransverseSolveResult res;
  res.coeffs = Vec::Zero(ctx.space_y0.dim);

  try {
    for (int iter = 0; iter <= max_iter; ++iter) {
      AssembledSystem sys = assemble_transverse(mu, ctx, res.coeffs, true);
      const double rnorm = ctx.dual->dual_norm(sys.residual);
      res.residual_history.push_back(rnorm);
      if (!std::isfinite(rnorm))
        return res;
      if (rnorm < tol) {
        res.converged = true;
        return res;
      }
      if (iter == max_iter)
        break;

      Eigen::SparseLU<SpMat> lu(sys.jacobian);
      if (lu.info() != Eigen::Success)
        return res;
      const Vec delta = lu.solve(-sys.residual);

      double step = 1.0;
      for (int halving = 0; halving < 8; ++halving) {
        const Vec cand = res.coeffs + step * delta;
        double cnorm = std::numeric_limits<double>::quiet_NaN();
        try {
          cnorm = ctx.dual->dual_norm(transverse_residual(mu, ctx, cand));
        } catch (const HmrError &) {
          // iterate crossed the diffusion-law pole; damp further
        }
        if (std::isfinite(cnorm) && cnorm < rnorm)
          break;
        step *= 0.5;
      }
      res.coeffs += step * delta;
    }
  } catch (const HmrError &) {
    // domain error at an iterate: sample rejected, caller logs it
    res.converged = false;
  }
  return res;
}

OperatorSnapshot operator_snapshot(const ParameterPoint &mu, const Vec &P,
                                   const TransverseContext &ctx) {
  const FESpace1D &sp = ctx.space_y0;
  const Mesh1D &mesh = sp.mesh;
  const DiffusionLaw &law = *ctx.tc->law;
  const int nn = mesh.n_elem + 1;
  const int ne = mesh.n_elem;
  const int Q = mu.Q();
  const Vec alpha = quadrature_weights(mu.x, ctx.x0, ctx.x1);
  const double len = ctx.x1 - ctx.x0;
  const Vec Pn = sp.nodal_values(P);
  const auto &g = gauss3();

  OperatorSnapshot s;
  s.x_flux = Vec::Zero(nn);
  s.d_val = Vec::Zero(nn);
  s.dp_x_flux = Vec::Zero(nn);
  s.y_flux = Vec::Zero(ne);
  s.dp_y_flux = Vec::Zero(ne);

  for (int l = 0; l < Q; ++l) {
    const double wl = alpha[l] / len;
    const double U = mu.U[l], Up = mu.Up[l];
    for (int i = 0; i < nn; ++i) {
      double d, d1, d2;
      law.eval(U * Pn[i], d, d1, d2);
      s.x_flux[i] += wl * d * Up * Pn[i];
      s.d_val[i] += wl * d;
      s.dp_x_flux[i] += wl * d1 * Up * Pn[i];
    }
    for (int e = 0; e < ne; ++e) {
      const double dP = (Pn[e + 1] - Pn[e]) / mesh.h(e);
      double dbar = 0.0, d1bar = 0.0;
      for (int q = 0; q < g.n; ++q) {
        const double pv = Pn[e] * (1.0 - g.pts[q]) + Pn[e + 1] * g.pts[q];
        double d, d1, d2;
        law.eval(U * pv, d, d1, d2);
        dbar += g.wts[q] * d;
        d1bar += g.wts[q] * d1;
      }
      s.y_flux[e] += wl * dbar * U * dP;
      s.dp_y_flux[e] += wl * d1bar * U * dP;
    }
  }
  return s;
}

} // namespace hmr
