// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/reduced.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>

namespace hmr {

EpmProjector truncate_projector(const EpmProjector &proj,
                                const HostSpace &host, int k_new) {
  HMR_REQUIRE(k_new >= 1 && k_new <= proj.k(),
              "truncate_projector: invalid target size");
  HMR_REQUIRE(proj.partition.intervals.size() == 1 &&
                  proj.partition.intervals[0].sys.k() == proj.k(),
              "truncate_projector: only single-interval projectors are "
              "prefix-truncatable");
  if (k_new == proj.k())
    return proj;

  const InterpSystem &full = proj.partition.intervals[0].sys;
  EpmProjector out;
  out.kappa = proj.kappa.leftCols(k_new);
  out.pod_eigenvalues = proj.pod_eigenvalues;
  out.n_train = proj.n_train;
  out.e_int = proj.e_int; // integration error of the full system; callers
                          // needing the truncated value re-run the EPM
  out.e_int_history = proj.e_int_history;

  EpmInterval iv;
  iv.a = full.a;
  iv.b = full.b;
  iv.sys.a = full.a;
  iv.sys.b = full.b;
  iv.sys.descs.assign(full.descs.begin(), full.descs.begin() + k_new);
  iv.sys.weights = full.weights.leftCols(k_new);
  iv.sys.Q = full.Q.leftCols(k_new);
  iv.sys.B = full.B.topLeftCorner(k_new, k_new);
  Mat Binv = Mat::Identity(k_new, k_new);
  iv.sys.B.triangularView<Eigen::Lower>().solveInPlace(Binv);
  iv.sys.Theta = iv.sys.Q * Binv;

  const SpMat MI = host.windowed_mass(iv.a, iv.b);
  out.proj_integrals = iv.sys.Theta.transpose() * (MI * out.kappa);
  for (int j = 0; j < k_new; ++j)
    out.functional_index.emplace_back(0, j);
  out.partition.intervals.push_back(std::move(iv));
  return out;
}

namespace {

// Nodal embedding of zero-trace modes: (n_nodes) x m.
Mat embed_nodal(const FESpace1D &sy0, const Mat &Y) {
  const int nn = sy0.mesh.n_elem + 1;
  Mat full = Mat::Zero(nn, Y.cols());
  for (int i = 0; i < sy0.dim; ++i)
    full.row(sy0.node_of_dof(i)) = Y.row(i);
  return full;
}

UnitTensors build_unit(const CollateralUnit &cu, const Mat &Yfull,
                       const Mesh1D &mesh_y, int m) {
  UnitTensors ut;
  ut.comp = cu.comp;
  ut.host = cu.host;
  ut.pwc = cu.host->kind == HostKind::PiecewiseConst;
  ut.kappa = cu.proj.kappa;
  ut.P = cu.proj.proj_integrals;
  const int ne = mesh_y.n_elem;
  const auto &g = gauss3();

  if (cu.comp == kCompXFlux) {
    // C[n,t] = int kappa_n phi_t dy (kappa in free P1)
    ut.C = ut.kappa.transpose() * (cu.host->mass * Yfull);
  } else if (cu.comp == kCompYFlux) {
    // C[n,t] = sum_e kappa_n[e] (phi_t[e+1]-phi_t[e])
    Mat D(ne, m);
    for (int e = 0; e < ne; ++e)
      D.row(e) = Yfull.row(e + 1) - Yfull.row(e);
    ut.C = ut.kappa.transpose() * D;
  }
  // Derivative units (DVal, DpXFlux, DpYFlux) carry no precontracted
  // pairings: the Newton matrix is the exact linearization of the EPM
  // residual, and the 2D estimator Jacobian contracts their coefficient
  // functions against the Q1 space directly.

  // Functional evaluation tables.
  std::vector<int> site_of_dof(cu.host->dim, -1);
  for (const auto &iv : cu.proj.partition.intervals) {
    for (int j = 0; j < iv.sys.k(); ++j) {
      UnitTensors::FuncW fw;
      for (int d = 0; d < cu.host->dim; ++d) {
        const double w = iv.sys.weights(d, j);
        if (w != 0.0) {
          if (site_of_dof[d] < 0) {
            site_of_dof[d] = static_cast<int>(ut.sites.size());
            ut.sites.push_back(d);
          }
          fw.terms.emplace_back(site_of_dof[d], w);
        }
      }
      ut.funcs.push_back(std::move(fw));
    }
  }
  const int ns = static_cast<int>(ut.sites.size());
  if (ut.pwc) {
    for (int q = 0; q < 3; ++q)
      ut.phi_g[q].resize(ns, m);
    ut.dphi.resize(ns, m);
    for (int s = 0; s < ns; ++s) {
      const int e = ut.sites[s];
      const double h = mesh_y.h(e);
      for (int q = 0; q < g.n; ++q) {
        const double t = g.pts[q];
        ut.phi_g[q].row(s) = Yfull.row(e) * (1 - t) + Yfull.row(e + 1) * t;
      }
      ut.dphi.row(s) = (Yfull.row(e + 1) - Yfull.row(e)) / h;
    }
  } else {
    ut.phi.resize(ns, m);
    for (int s = 0; s < ns; ++s)
      ut.phi.row(s) = Yfull.row(ut.sites[s]);
  }

  // E = C' P' W': maps site values directly to the m flux components.
  if (cu.comp == kCompXFlux || cu.comp == kCompYFlux) {
    Mat W = Mat::Zero(ns, static_cast<int>(ut.funcs.size()));
    for (size_t l = 0; l < ut.funcs.size(); ++l)
      for (const auto &[pos, w] : ut.funcs[l].terms)
        W(pos, static_cast<int>(l)) = w;
    ut.E = ut.C.transpose() * ut.P.transpose() * W.transpose();
  }
  return ut;
}

} // namespace

void UnitTensors::eval_theta(const DiffusionLaw &law, const Vec &pbar,
                             const Vec &pxbar, Vec &theta) const {
  const int ns = static_cast<int>(sites.size());
  Vec vals(ns);
  const auto &g = gauss3();
  if (!pwc) {
    for (int s = 0; s < ns; ++s) {
      const double pv = phi.row(s).dot(pbar);
      double d, d1, d2;
      law.eval(pv, d, d1, d2);
      switch (comp) {
      case kCompXFlux:
        vals[s] = d * phi.row(s).dot(pxbar);
        break;
      case kCompDVal:
        vals[s] = d;
        break;
      default: // kCompDpXFlux
        vals[s] = d1 * phi.row(s).dot(pxbar);
        break;
      }
    }
  } else {
    for (int s = 0; s < ns; ++s) {
      const double pyv = dphi.row(s).dot(pbar);
      double acc = 0.0;
      for (int q = 0; q < 3; ++q) {
        const double pv = phi_g[q].row(s).dot(pbar);
        double d, d1, d2;
        law.eval(pv, d, d1, d2);
        acc += g.wts[q] * (comp == kCompYFlux ? d : d1);
      }
      vals[s] = acc * pyv;
    }
  }
  theta.resize(static_cast<int>(funcs.size()));
  for (size_t l = 0; l < funcs.size(); ++l) {
    double acc = 0.0;
    for (const auto &[pos, w] : funcs[l].terms)
      acc += w * vals[pos];
    theta[static_cast<int>(l)] = acc;
  }
}

OnlineOperator precompute_tensors(const Mat &Y, const FESpace1D &space_y0,
                                  const FESpace1D &space_x, const TestCase &tc,
                                  const CollateralUnit &xflux,
                                  const CollateralUnit &yflux,
                                  const CollateralUnit &dval,
                                  const CollateralUnit &dpx,
                                  const CollateralUnit &dpy) {
  HMR_REQUIRE(xflux.comp == kCompXFlux && yflux.comp == kCompYFlux &&
                  dval.comp == kCompDVal && dpx.comp == kCompDpXFlux &&
                  dpy.comp == kCompDpYFlux,
              "precompute_tensors: units passed in wrong order");
  OnlineOperator op;
  op.m = static_cast<int>(Y.cols());
  op.space_x = space_x;
  op.space_y0 = space_y0;
  op.Y = Y;
  op.law = tc.law;

  const Mat Yfull = embed_nodal(space_y0, Y);
  const Mesh1D &mesh_y = space_y0.mesh;
  op.xflux = build_unit(xflux, Yfull, mesh_y, op.m);
  op.yflux = build_unit(yflux, Yfull, mesh_y, op.m);
  op.dval = build_unit(dval, Yfull, mesh_y, op.m);
  op.dpx = build_unit(dpx, Yfull, mesh_y, op.m);
  op.dpy = build_unit(dpy, Yfull, mesh_y, op.m);

  // RHS tables: F(t, e*3+q) = int f(x_eq, y) phi_t dy.
  const int ne = space_x.mesh.n_elem;
  const auto &g = gauss3();
  op.Frhs.resize(op.m, ne * 3);
  for (int e = 0; e < ne; ++e) {
    const double xl = space_x.mesh.nodes[e], h = space_x.mesh.h(e);
    for (int q = 0; q < 3; ++q) {
      const double x = xl + h * g.pts[q];
      const Vec prof = source_y_profile(tc, x, space_y0);
      op.Frhs.col(e * 3 + q) = Y.transpose() * prof;
    }
  }

  // Dual-norm gram: kron(I, Ax) + kron(Y' Ay Y, Mx), mode-major layout.
  const int NH = space_x.dim;
  const Mat Aphi = Y.transpose() * (space_y0.stiffness * Y);
  std::vector<Triplet> trip;
  auto add_block = [&](int t, int s, const SpMat &blk, double scale) {
    for (int kcol = 0; kcol < blk.outerSize(); ++kcol)
      for (SpMat::InnerIterator it(blk, kcol); it; ++it)
        trip.emplace_back(t * NH + static_cast<int>(it.row()),
                          s * NH + static_cast<int>(it.col()),
                          scale * it.value());
  };
  for (int t = 0; t < op.m; ++t) {
    add_block(t, t, space_x.stiffness, 1.0);
    for (int s = 0; s < op.m; ++s)
      add_block(t, s, space_x.mass, Aphi(t, s));
  }
  op.Gred.resize(op.m * NH, op.m * NH);
  op.Gred.setFromTriplets(trip.begin(), trip.end());
  op.dual = std::make_shared<RieszSolver>(op.Gred);
  return op;
}

namespace {

struct XPoint {
  int e;
  double w;
  double shape[2];
  double dshape[2];
  int dofs[2];
};

template <typename F>
void for_x_gauss(const FESpace1D &sx, F &&f) {
  const auto &g = gauss3();
  for (int e = 0; e < sx.mesh.n_elem; ++e) {
    const double h = sx.mesh.h(e);
    for (int q = 0; q < g.n; ++q) {
      XPoint xp;
      xp.e = e;
      xp.w = g.wts[q] * h;
      xp.shape[0] = 1.0 - g.pts[q];
      xp.shape[1] = g.pts[q];
      xp.dshape[0] = -1.0 / h;
      xp.dshape[1] = 1.0 / h;
      xp.dofs[0] = sx.dof_of_node(e);
      xp.dofs[1] = sx.dof_of_node(e + 1);
      f(e * 3 + q, xp);
    }
  }
}

void gather_mode_values(const OnlineOperator &op, const Vec &u,
                        const XPoint &xp, Vec &pbar, Vec &pxbar) {
  const int NH = op.space_x.dim;
  pbar.resize(op.m);
  pxbar.resize(op.m);
  for (int t = 0; t < op.m; ++t) {
    double v = 0.0, dv = 0.0;
    for (int a = 0; a < 2; ++a)
      if (xp.dofs[a] >= 0) {
        const double c = u[t * NH + xp.dofs[a]];
        v += c * xp.shape[a];
        dv += c * xp.dshape[a];
      }
    pbar[t] = v;
    pxbar[t] = dv;
  }
}

} // namespace

Vec reduced_residual(const OnlineOperator &op, const Vec &u) {
  const int NH = op.space_x.dim;
  HMR_REQUIRE(u.size() == op.m * NH, "reduced_residual: size mismatch");
  Vec R = Vec::Zero(op.m * NH);
  Vec pbar, pxbar, th1, th2;
  for_x_gauss(op.space_x, [&](int gidx, const XPoint &xp) {
    gather_mode_values(op, u, xp, pbar, pxbar);
    op.xflux.eval_theta(*op.law, pbar, pxbar, th1);
    op.yflux.eval_theta(*op.law, pbar, pxbar, th2);
    const Vec c1 = op.xflux.P.transpose() * th1;
    const Vec c2 = op.yflux.P.transpose() * th2;
    const Vec flux1 = op.xflux.C.transpose() * c1; // m
    const Vec flux2 = op.yflux.C.transpose() * c2; // m
    for (int t = 0; t < op.m; ++t) {
      const double fv = op.Frhs(t, gidx);
      for (int a = 0; a < 2; ++a)
        if (xp.dofs[a] >= 0)
          R[t * NH + xp.dofs[a]] +=
              xp.w * (xp.dshape[a] * flux1[t] + xp.shape[a] * flux2[t] -
                      xp.shape[a] * fv);
    }
  });
  return R;
}

SpMat reduced_jacobian(const OnlineOperator &op, const Vec &u) {
  // Exact linearization of the EPM residual: the derivative flows through
  // the residual units' interpolation and projection tensors. Not
  // symmetric (the EPM breaks symmetry).
  const int NH = op.space_x.dim;
  HMR_REQUIRE(u.size() == op.m * NH, "reduced_jacobian: size mismatch");
  const DiffusionLaw &law = *op.law;
  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(op.m) * op.m * NH * 12);
  Vec pbar, pxbar;
  const int ns1 = static_cast<int>(op.xflux.sites.size());
  const int ns2 = static_cast<int>(op.yflux.sites.size());
  Mat D1(ns1, op.m), D2(ns1, op.m), D3(ns2, op.m);
  Mat A1(op.m, op.m), A2(op.m, op.m), A3(op.m, op.m);
  const auto &g = gauss3();

  for_x_gauss(op.space_x, [&](int gidx, const XPoint &xp) {
    (void)gidx;
    gather_mode_values(op, u, xp, pbar, pxbar);

    // x-flux sites (P1 host): val = d(pv) pxv.
    for (int i = 0; i < ns1; ++i) {
      const double pv = op.xflux.phi.row(i).dot(pbar);
      const double pxv = op.xflux.phi.row(i).dot(pxbar);
      double d, d1, d2;
      law.eval(pv, d, d1, d2);
      for (int s = 0; s < op.m; ++s) {
        D1(i, s) = d1 * op.xflux.phi(i, s) * pxv; // coefficient of shape_b
        D2(i, s) = d * op.xflux.phi(i, s);        // coefficient of dshape_b
      }
    }
    // y-flux sites (pwc host): val = avg_q d(pv_q) * pyv.
    for (int i = 0; i < ns2; ++i) {
      const double pyv = op.yflux.dphi.row(i).dot(pbar);
      double dbar = 0.0;
      Vec d1phi = Vec::Zero(op.m);
      for (int q = 0; q < 3; ++q) {
        const double pv = op.yflux.phi_g[q].row(i).dot(pbar);
        double d, d1, d2;
        law.eval(pv, d, d1, d2);
        dbar += g.wts[q] * d;
        d1phi += (g.wts[q] * d1) * op.yflux.phi_g[q].row(i).transpose();
      }
      for (int s = 0; s < op.m; ++s)
        D3(i, s) = d1phi[s] * pyv + dbar * op.yflux.dphi(i, s);
    }

    A1.noalias() = op.xflux.E * D1;
    A2.noalias() = op.xflux.E * D2;
    A3.noalias() = op.yflux.E * D3;

    for (int t = 0; t < op.m; ++t)
      for (int s = 0; s < op.m; ++s) {
        const double a1 = A1(t, s), a2 = A2(t, s), a3 = A3(t, s);
        for (int a = 0; a < 2; ++a) {
          if (xp.dofs[a] < 0)
            continue;
          for (int b = 0; b < 2; ++b) {
            if (xp.dofs[b] < 0)
              continue;
            const double v =
                xp.w * (xp.dshape[a] * (a1 * xp.shape[b] + a2 * xp.dshape[b]) +
                        xp.shape[a] * a3 * xp.shape[b]);
            trip.emplace_back(t * NH + xp.dofs[a], s * NH + xp.dofs[b], v);
          }
        }
      }
  });
  SpMat J(op.m * NH, op.m * NH);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

namespace {

Vec linear_solve(const SpMat &A, const Vec &b, const NewtonOptions &opt,
                 bool &ok) {
  const bool direct =
      opt.force_direct ||
      (!opt.force_krylov && A.rows() <= opt.direct_limit);
  if (direct) {
    Eigen::SparseLU<SpMat> lu(A);
    ok = lu.info() == Eigen::Success;
    return ok ? Vec(lu.solve(b)) : Vec(Vec::Zero(b.size()));
  }
  Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> krylov;
  krylov.setTolerance(1e-12);
  krylov.compute(A);
  Vec x = krylov.solve(b);
  ok = krylov.info() == Eigen::Success ||
       krylov.error() < 1e-8; // accept mild stagnation
  return x;
}

} // namespace

ReducedSolution newton_solve(const OnlineOperator &op, const Vec &init,
                             const NewtonOptions &opt) {
  const int NH = op.space_x.dim;
  ReducedSolution sol;
  Vec u = init.size() == op.m * NH ? init : Vec(Vec::Zero(op.m * NH));

  auto pack = [&](const Vec &v) {
    Mat c(op.m, NH);
    for (int t = 0; t < op.m; ++t)
      c.row(t) = v.segment(t * NH, NH);
    return c;
  };

  try {
    for (int iter = 0; iter <= opt.max_iter; ++iter) {
      const Vec R = reduced_residual(op, u);
      const double rnorm = op.dual->dual_norm(R);
      sol.residual_history.push_back(rnorm);
      if (!std::isfinite(rnorm))
        break;
      if (rnorm < opt.tol) {
        sol.converged = true;
        break;
      }
      if (iter == opt.max_iter)
        break;

      const SpMat J = reduced_jacobian(op, u);
      bool ok = false;
      const Vec delta = linear_solve(J, Vec(-R), opt, ok);
      if (!ok)
        break;

      double step = 1.0;
      for (int halving = 0; halving < 8; ++halving) {
        double cnorm = std::numeric_limits<double>::quiet_NaN();
        try {
          cnorm = op.dual->dual_norm(reduced_residual(op, u + step * delta));
        } catch (const HmrError &) {
          // iterate crossed the diffusion-law pole; damp further
        }
        if (std::isfinite(cnorm) && cnorm < rnorm)
          break;
        step *= 0.5;
      }
      u += step * delta;
    }
  } catch (const HmrError &) {
    sol.converged = false; // divergence with history preserved
  }
  sol.coeffs = pack(u);
  return sol;
}

Vec reconstruct(const Mat &coeffs, const Mat &Y, const FESpace2D &space2d) {
  const int m = static_cast<int>(coeffs.rows());
  const int NH = static_cast<int>(coeffs.cols());
  HMR_REQUIRE(Y.cols() == m, "reconstruct: basis/coefficient mismatch");
  HMR_REQUIRE(space2d.nx == NH && space2d.ny == Y.rows(),
              "reconstruct: space mismatch");
  Vec field = Vec::Zero(space2d.dim);
  for (int iy = 0; iy < space2d.ny; ++iy)
    for (int ix = 0; ix < space2d.nx; ++ix) {
      double v = 0.0;
      for (int t = 0; t < m; ++t)
        v += coeffs(t, ix) * Y(iy, t);
      field[space2d.dof(ix, iy)] = v;
    }
  return field;
}

Mat unit_coefficients(const OnlineOperator &op, const UnitTensors &ut,
                      const Vec &u) {
  Mat C(ut.P.cols(), op.space_x.mesh.n_elem * 3);
  Vec pbar, pxbar, theta;
  for_x_gauss(op.space_x, [&](int gidx, const XPoint &xp) {
    gather_mode_values(op, u, xp, pbar, pxbar);
    ut.eval_theta(*op.law, pbar, pxbar, theta);
    C.col(gidx) = ut.P.transpose() * theta;
  });
  return C;
}

Vec coefficient_norms_sq(const OnlineOperator &op, const ReducedSolution &sol) {
  Vec out(op.m);
  const Mat Mx = Mat(op.space_x.mass);
  for (int t = 0; t < op.m; ++t) {
    const Vec row = sol.coeffs.row(t);
    out[t] = row.dot(Mx * row);
  }
  return out;
}

} // namespace hmr
