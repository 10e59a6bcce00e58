// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/reference.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>

namespace hmr {

ReferenceContext make_reference_context(const TestCase &tc, int NH, int nh) {
  ReferenceContext ctx;
  ctx.tc = &tc;
  TensorMesh2D mesh{build_interval_mesh(tc.domain.x0, tc.domain.x1, NH),
                    build_interval_mesh(tc.domain.y0, tc.domain.y1, nh)};
  ctx.space = make_fe_space_2d(mesh);
  ctx.dual = std::make_shared<RieszSolver>(ctx.space.h1_semi_gram);

  // RHS by x-Gauss quadrature of the transverse source profiles (the
  // profiles clip box sources exactly in y).
  FESpace1D sy0 = make_fe_space_1d(mesh.mesh_y, Boundary::ZeroTrace);
  ctx.fvec = Vec::Zero(ctx.space.dim);
  const auto &g = gauss3();
  const Mesh1D &mx = mesh.mesh_x;
  for (int e = 0; e < mx.n_elem; ++e) {
    const double h = mx.h(e);
    for (int q = 0; q < g.n; ++q) {
      const double x = mx.nodes[e] + h * g.pts[q];
      const Vec prof = source_y_profile(tc, x, sy0);
      const double sh[2] = {1.0 - g.pts[q], g.pts[q]};
      for (int a = 0; a < 2; ++a) {
        const int ix = e + a - 1; // interior x index
        if (ix < 0 || ix >= ctx.space.nx)
          continue;
        for (int iy = 0; iy < ctx.space.ny; ++iy)
          ctx.fvec[ctx.space.dof(ix, iy)] += g.wts[q] * h * sh[a] * prof[iy];
      }
    }
  }
  return ctx;
}

namespace {

struct Sys {
  Vec residual;
  SpMat jacobian;
};

Sys assemble_reference(const ReferenceContext &ctx, const Vec &p,
                       bool with_jacobian) {
  const FESpace2D &sp = ctx.space;
  const Mesh1D &mx = sp.mesh.mesh_x;
  const Mesh1D &my = sp.mesh.mesh_y;
  const DiffusionLaw &law = *ctx.tc->law;
  const auto &g = gauss3();

  Sys out;
  out.residual = Vec::Zero(sp.dim);
  std::vector<Triplet> trip;
  if (with_jacobian)
    trip.reserve(static_cast<size_t>(sp.dim) * 16);

  auto dof_of = [&](int nx_node, int ny_node) {
    if (nx_node < 1 || nx_node > sp.nx || ny_node < 1 || ny_node > sp.ny)
      return -1;
    return sp.dof(nx_node - 1, ny_node - 1);
  };

  for (int ey = 0; ey < my.n_elem; ++ey) {
    const double hy = my.h(ey);
    for (int ex = 0; ex < mx.n_elem; ++ex) {
      const double hx = mx.h(ex);
      int dofs[4];
      double pv[4];
      for (int a = 0; a < 4; ++a) {
        const int nxn = ex + (a % 2), nyn = ey + (a / 2);
        dofs[a] = dof_of(nxn, nyn);
        pv[a] = dofs[a] >= 0 ? p[dofs[a]] : 0.0;
      }
      double re[4] = {0, 0, 0, 0};
      double je[4][4] = {};

      for (int qx = 0; qx < g.n; ++qx)
        for (int qy = 0; qy < g.n; ++qy) {
          const double tx = g.pts[qx], ty = g.pts[qy];
          const double w = g.wts[qx] * g.wts[qy] * hx * hy;
          const double sx[2] = {1 - tx, tx}, sy[2] = {1 - ty, ty};
          const double dsx[2] = {-1 / hx, 1 / hx}, dsy[2] = {-1 / hy, 1 / hy};
          double N[4], Nx[4], Ny[4];
          for (int a = 0; a < 4; ++a) {
            const int ax = a % 2, ay = a / 2;
            N[a] = sx[ax] * sy[ay];
            Nx[a] = dsx[ax] * sy[ay];
            Ny[a] = sx[ax] * dsy[ay];
          }
          double pval = 0, px = 0, py = 0;
          for (int a = 0; a < 4; ++a) {
            pval += pv[a] * N[a];
            px += pv[a] * Nx[a];
            py += pv[a] * Ny[a];
          }
          double d, d1, d2;
          law.eval(pval, d, d1, d2);
          for (int a = 0; a < 4; ++a) {
            re[a] += w * d * (px * Nx[a] + py * Ny[a]);
            if (with_jacobian)
              for (int b = 0; b < 4; ++b)
                je[a][b] += w * (d * (Nx[b] * Nx[a] + Ny[b] * Ny[a]) +
                                 d1 * N[b] * (px * Nx[a] + py * Ny[a]));
          }
        }

      for (int a = 0; a < 4; ++a) {
        if (dofs[a] < 0)
          continue;
        out.residual[dofs[a]] += re[a];
        if (with_jacobian)
          for (int b = 0; b < 4; ++b)
            if (dofs[b] >= 0)
              trip.emplace_back(dofs[a], dofs[b], je[a][b]);
      }
    }
  }
  out.residual -= ctx.fvec;
  if (with_jacobian) {
    out.jacobian.resize(sp.dim, sp.dim);
    out.jacobian.setFromTriplets(trip.begin(), trip.end());
  }
  return out;
}

} // namespace

Vec reference_residual(const ReferenceContext &ctx, const Vec &p) {
  return assemble_reference(ctx, p, false).residual;
}

SpMat reference_jacobian(const ReferenceContext &ctx, const Vec &p) {
  return assemble_reference(ctx, p, true).jacobian;
}

ReferenceSolution solve_reference(const ReferenceContext &ctx,
                                  const NewtonOptions &opt) {
  ReferenceSolution sol;
  Vec p = Vec::Zero(ctx.space.dim);

  try {
    for (int iter = 0; iter <= opt.max_iter; ++iter) {
      Sys sys = assemble_reference(ctx, p, true);
      const double rnorm = ctx.dual->dual_norm(sys.residual);
      sol.residual_history.push_back(rnorm);
      if (!std::isfinite(rnorm))
        break;
      if (rnorm < opt.tol) {
        sol.converged = true;
        break;
      }
      if (iter == opt.max_iter)
        break;

      const bool direct =
          opt.force_direct ||
          (!opt.force_krylov && sys.jacobian.rows() <= opt.direct_limit);
      Vec delta;
      if (direct) {
        Eigen::SparseLU<SpMat> lu(sys.jacobian);
        if (lu.info() != Eigen::Success)
          break;
        delta = lu.solve(-sys.residual);
      } else {
        Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> kry;
        kry.setTolerance(1e-12);
        kry.compute(sys.jacobian);
        delta = kry.solve(-sys.residual);
        if (!(kry.info() == Eigen::Success || kry.error() < 1e-8))
          break;
      }

      double step = 1.0;
      for (int halving = 0; halving < 8; ++halving) {
        double cnorm = std::numeric_limits<double>::quiet_NaN();
        try {
          cnorm = ctx.dual->dual_norm(reference_residual(ctx, p + step * delta));
        } catch (const HmrError &) {
          // iterate crossed the diffusion-law pole; damp further
        }
        if (std::isfinite(cnorm) && cnorm < rnorm)
          break;
        step *= 0.5;
      }
      p += step * delta;
    }
  } catch (const HmrError &) {
    sol.converged = false;
  }
  sol.values = p;
  return sol;
}

std::pair<double, double> error_norms(const Vec &ref, const Vec &other,
                                      const FESpace2D &space) {
  const Vec diff = ref - other;
  const double h1_ref = std::sqrt(ref.dot(space.h1_semi_gram * ref));
  const double l2_ref = std::sqrt(ref.dot(space.mass_gram * ref));
  HMR_REQUIRE(h1_ref > 0 && l2_ref > 0, "error_norms: zero reference norm");
  return {std::sqrt(diff.dot(space.h1_semi_gram * diff)) / h1_ref,
          std::sqrt(diff.dot(space.mass_gram * diff)) / l2_ref};
}

ExactField tc1_exact_field() {
  ExactField f;
  f.value = [](double x, double y) { return tc1_exact(x, y); };
  f.grad = [](double x, double y, double &gx, double &gy) {
    double p, pxx, pyy;
    tc1_exact_derivs(x, y, p, gx, gy, pxx, pyy);
  };
  return f;
}

std::pair<double, double> error_vs_exact(const FESpace2D &space,
                                         const Vec &field,
                                         const ExactField &exact) {
  const Mesh1D &mx = space.mesh.mesh_x;
  const Mesh1D &my = space.mesh.mesh_y;
  const auto &g = gauss3();
  double h1_err = 0, h1_nrm = 0, l2_err = 0, l2_nrm = 0;

  auto nodal = [&](int nx_node, int ny_node) {
    if (nx_node < 1 || nx_node > space.nx || ny_node < 1 || ny_node > space.ny)
      return 0.0;
    return field[space.dof(nx_node - 1, ny_node - 1)];
  };

  for (int ey = 0; ey < my.n_elem; ++ey)
    for (int ex = 0; ex < mx.n_elem; ++ex) {
      const double hx = mx.h(ex), hy = my.h(ey);
      double pv[4];
      for (int a = 0; a < 4; ++a)
        pv[a] = nodal(ex + (a % 2), ey + (a / 2));
      for (int qx = 0; qx < g.n; ++qx)
        for (int qy = 0; qy < g.n; ++qy) {
          const double tx = g.pts[qx], ty = g.pts[qy];
          const double x = mx.nodes[ex] + hx * tx;
          const double y = my.nodes[ey] + hy * ty;
          const double w = g.wts[qx] * g.wts[qy] * hx * hy;
          const double sx[2] = {1 - tx, tx}, sy[2] = {1 - ty, ty};
          const double dsx[2] = {-1 / hx, 1 / hx}, dsy[2] = {-1 / hy, 1 / hy};
          double fv = 0, fx = 0, fy = 0;
          for (int a = 0; a < 4; ++a) {
            const int ax = a % 2, ay = a / 2;
            fv += pv[a] * sx[ax] * sy[ay];
            fx += pv[a] * dsx[ax] * sy[ay];
            fy += pv[a] * sx[ax] * dsy[ay];
          }
          const double ev = exact.value(x, y);
          double gx, gy;
          exact.grad(x, y, gx, gy);
          h1_err += w * ((fx - gx) * (fx - gx) + (fy - gy) * (fy - gy));
          h1_nrm += w * (gx * gx + gy * gy);
          l2_err += w * (fv - ev) * (fv - ev);
          l2_nrm += w * ev * ev;
        }
    }
  HMR_REQUIRE(h1_nrm > 0 && l2_nrm > 0, "error_vs_exact: zero exact norm");
  return {std::sqrt(h1_err / h1_nrm), std::sqrt(l2_err / l2_nrm)};
}

double eval_field(const FESpace2D &space, const Vec &field, double x,
                  double y) {
  const Mesh1D &mx = space.mesh.mesh_x;
  const Mesh1D &my = space.mesh.mesh_y;
  const int ex = mx.locate(x), ey = my.locate(y);
  const double tx = (x - mx.nodes[ex]) / mx.h(ex);
  const double ty = (y - my.nodes[ey]) / my.h(ey);
  auto nodal = [&](int nx_node, int ny_node) {
    if (nx_node < 1 || nx_node > space.nx || ny_node < 1 || ny_node > space.ny)
      return 0.0;
    return field[space.dof(nx_node - 1, ny_node - 1)];
  };
  return nodal(ex, ey) * (1 - tx) * (1 - ty) + nodal(ex + 1, ey) * tx * (1 - ty) +
         nodal(ex, ey + 1) * (1 - tx) * ty + nodal(ex + 1, ey + 1) * tx * ty;
}

std::vector<Peak> find_peak_clusters(const FESpace2D &space, const Vec &field,
                                     double rel_threshold, int merge_radius) {
  const double vmax = field.maxCoeff();
  std::vector<Peak> maxima;
  auto at = [&](int ix, int iy) {
    if (ix < 0 || ix >= space.nx || iy < 0 || iy >= space.ny)
      return 0.0;
    return field[space.dof(ix, iy)];
  };
  for (int iy = 0; iy < space.ny; ++iy)
    for (int ix = 0; ix < space.nx; ++ix) {
      const double v = at(ix, iy);
      if (v < rel_threshold * vmax)
        continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0)
            continue;
          if (at(ix + dx, iy + dy) > v) {
            is_max = false;
            break;
          }
        }
      if (is_max)
        maxima.push_back({ix, iy, v});
    }

  // Merge maxima within the Chebyshev radius, keeping the strongest.
  std::vector<Peak> clusters;
  std::sort(maxima.begin(), maxima.end(),
            [](const Peak &a, const Peak &b) { return a.value > b.value; });
  for (const Peak &p : maxima) {
    bool merged = false;
    for (const Peak &c : clusters)
      if (std::abs(c.ix - p.ix) <= merge_radius &&
          std::abs(c.iy - p.iy) <= merge_radius) {
        merged = true;
        break;
      }
    if (!merged)
      clusters.push_back(p);
  }
  return clusters;
}

} // namespace hmr
