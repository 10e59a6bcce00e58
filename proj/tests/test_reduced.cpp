// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "test_helpers.hpp"

#include <doctest.h>

using namespace hmr;
using hmr::testing::make_mini_setup;
using hmr::testing::MiniSetup;

namespace {

// Slow residual oracle: reconstructs the projected operator components as
// transverse FE functions at every x-Gauss point and integrates the weak
// form with per-element quadrature in y.
Vec residual_oracle(const MiniSetup &s, const Vec &u) {
  const OnlineOperator &op = s.op;
  const int NH = op.space_x.dim;
  const int m = op.m;
  Vec R = Vec::Zero(m * NH);
  const auto &g = gauss3();
  const Mesh1D &my = s.ctx.space_y0.mesh;
  const Mesh1D &mx = op.space_x.mesh;

  // nodal embedding of the reduction basis
  Mat Yfull = Mat::Zero(my.n_elem + 1, m);
  for (int i = 0; i < s.ctx.space_y0.dim; ++i)
    Yfull.row(s.ctx.space_y0.node_of_dof(i)) = op.Y.row(i);

  for (int e = 0; e < mx.n_elem; ++e) {
    const double hx = mx.h(e);
    for (int q = 0; q < g.n; ++q) {
      const double x = mx.nodes[e] + hx * g.pts[q];
      const double wx = g.wts[q] * hx;
      const double shape[2] = {1 - g.pts[q], g.pts[q]};
      const double dshape[2] = {-1 / hx, 1 / hx};
      const int dofs[2] = {op.space_x.dof_of_node(e),
                           op.space_x.dof_of_node(e + 1)};
      Vec pbar = Vec::Zero(m), pxbar = Vec::Zero(m);
      for (int t = 0; t < m; ++t)
        for (int a = 0; a < 2; ++a)
          if (dofs[a] >= 0) {
            pbar[t] += u[t * NH + dofs[a]] * shape[a];
            pxbar[t] += u[t * NH + dofs[a]] * dshape[a];
          }

      // Full component snapshots at this x (all host dofs), observations,
      // per-interval interpolation, projection coefficients.
      auto project = [&](const UnitTensors &ut) {
        const HostSpace &host = *ut.host;
        Vec comp(host.dim);
        if (!ut.pwc) {
          for (int i = 0; i < host.dim; ++i) {
            const double pv = Yfull.row(i).dot(pbar);
            const double pxv = Yfull.row(i).dot(pxbar);
            double d, d1, d2;
            s.tc.law->eval(pv, d, d1, d2);
            comp[i] = ut.comp == kCompXFlux ? d * pxv
                      : ut.comp == kCompDVal ? d
                                             : d1 * pxv;
          }
        } else {
          for (int el = 0; el < host.dim; ++el) {
            const double pyv =
                (Yfull.row(el + 1) - Yfull.row(el)).dot(pbar) / my.h(el);
            double acc = 0.0;
            for (int qq = 0; qq < 3; ++qq) {
              const double t = g.pts[qq];
              const double pv =
                  (Yfull.row(el) * (1 - t) + Yfull.row(el + 1) * t).dot(pbar);
              double d, d1, d2;
              s.tc.law->eval(pv, d, d1, d2);
              acc += g.wts[qq] * (ut.comp == kCompYFlux ? d : d1);
            }
            comp[el] = acc * pyv;
          }
        }
        // observations through the stored functionals of the projector
        const CollateralUnit &cu = s.units[ut.comp];
        Mat obs = epm_observations(cu.proj, comp);
        return Vec(empirical_project(cu.proj, obs).col(0));
      };

      const Vec c1 = project(op.xflux);
      const Vec c2 = project(op.yflux);

      // y-quadrature of  sum_n c1_n kappa_n phi_t  and  c2_n kappa_n phi_t'
      for (int t = 0; t < m; ++t) {
        double f1 = 0.0, f2 = 0.0;
        for (int el = 0; el < my.n_elem; ++el) {
          const double hy = my.h(el);
          for (int qq = 0; qq < 3; ++qq) {
            const double ty = g.pts[qq];
            const double wy = g.wts[qq] * hy;
            double kap1 = 0.0;
            for (int n = 0; n < c1.size(); ++n)
              kap1 += c1[n] * (op.xflux.kappa(el, n) * (1 - ty) +
                               op.xflux.kappa(el + 1, n) * ty);
            double kap2 = 0.0;
            for (int n = 0; n < c2.size(); ++n)
              kap2 += c2[n] * op.yflux.kappa(el, n);
            const double phit = Yfull(el, t) * (1 - ty) + Yfull(el + 1, t) * ty;
            const double dphit = (Yfull(el + 1, t) - Yfull(el, t)) / hy;
            f1 += wy * kap1 * phit;
            f2 += wy * kap2 * dphit;
          }
        }
        // subtract the source term
        Vec prof = source_y_profile(s.tc, x, s.ctx.space_y0);
        const double fv = op.Y.col(t).dot(prof);
        for (int a = 0; a < 2; ++a)
          if (dofs[a] >= 0)
            R[t * NH + dofs[a]] +=
                wx * (dshape[a] * f1 + shape[a] * f2 - shape[a] * fv);
      }
    }
  }
  return R;
}

} // namespace

TEST_CASE("reduced residual: zero data gives zero residual") {
  MiniSetup s = make_mini_setup(TestCaseTag::TC1, 16, 16, 12, 2, 1e-8, 21);
  // zero out the source: replace the test case by one with zero forcing
  TestCase tc0 = s.tc;
  tc0.source = [](double, double) { return 0.0; };
  OnlineOperator op0 =
      precompute_tensors(s.podY.basis, s.ctx.space_y0, s.space_x, tc0,
                         s.units[0], s.units[1], s.units[2], s.units[3],
                         s.units[4]);
  Vec u = Vec::Zero(op0.n_unknowns());
  CHECK(reduced_residual(op0, u).norm() == 0.0);

  // Newton from zero converges immediately
  ReducedSolution sol = newton_solve(op0, Vec());
  CHECK(sol.converged);
  CHECK(sol.residual_history.size() <= 2);
  CHECK(sol.coeffs.norm() == 0.0);
}

TEST_CASE("reduced residual matches the slow full-quadrature oracle") {
  MiniSetup s = make_mini_setup(TestCaseTag::TC1, 12, 14, 14, 3, 1e-9, 33);
  CounterRng rng(77);
  Vec u(s.op.n_unknowns());
  for (int i = 0; i < u.size(); ++i)
    u[i] = rng.uniform(-0.05, 0.05);
  const Vec R = reduced_residual(s.op, u);
  const Vec Ro = residual_oracle(s, u);
  const double scale = Ro.cwiseAbs().maxCoeff();
  CHECK((R - Ro).cwiseAbs().maxCoeff() < 1e-9 * std::max(scale, 1e-3));
}

TEST_CASE("reduced jacobian matches finite differences of the residual") {
  MiniSetup s = make_mini_setup(TestCaseTag::TC1, 14, 12, 14, 3, 1e-9, 55);
  CounterRng rng(12);
  for (int trial = 0; trial < 3; ++trial) {
    Vec u(s.op.n_unknowns()), v(s.op.n_unknowns());
    for (int i = 0; i < u.size(); ++i) {
      u[i] = rng.uniform(-0.05, 0.05);
      v[i] = rng.uniform(-1, 1);
    }
    const SpMat J = reduced_jacobian(s.op, u);
    const double eps = 1e-6;
    const Vec fd =
        (reduced_residual(s.op, u + eps * v) - reduced_residual(s.op, Vec(u - eps * v))) /
        (2 * eps);
    const Vec Jv = J * v;
    CHECK((Jv - fd).norm() < 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("m=1 with a constant diffusion law gives the weighted 1D system") {
  // linear limit: d == gamma, d' == 0
  class ConstLaw final : public DiffusionLaw {
  public:
    void eval(double, double &d, double &dp, double &dpp) const override {
      d = 0.7;
      dp = 0.0;
      dpp = 0.0;
    }
  };
  TestCase tc = make_test_case(TestCaseTag::TC1);
  tc.law = std::make_shared<ConstLaw>();
  TransverseContext ctx = make_transverse_context(tc, 20);
  FESpace1D sx = make_fe_space_1d(build_interval_mesh(0, 2, 12),
                                  Boundary::ZeroTrace);
  auto host_p1 = std::make_shared<HostSpace>(make_host_p1_free(ctx.space_y0.mesh));
  auto host_pwc = std::make_shared<HostSpace>(make_host_pwconst(ctx.space_y0.mesh));

  // single transverse mode
  Mat sols(ctx.space_y0.dim, 3);
  CounterRng rng(8);
  for (int j = 0; j < 3; ++j) {
    ParameterPoint mu;
    mu.x = {rng.uniform(0.1, 1.9)};
    mu.U = {rng.uniform(0.2, 0.5)};
    mu.Up = {rng.uniform(-1, 1)};
    auto sol = solve_transverse(mu, ctx);
    REQUIRE(sol.converged);
    // constant law makes the solve linear; perturb to get variety
    sols.col(j) = sol.coeffs + 0.01 * j * Vec::Ones(ctx.space_y0.dim);
  }
  PodResult podY = compute_pod(sols, ctx.space_y0.mass, PodTruncation::by_count(1));

  std::vector<CollateralUnit> units;
  for (int c = 0; c < kNumComponents; ++c) {
    auto host = component_is_pwconst(c) ? host_pwc : host_p1;
    Mat comps(host->dim, 3);
    for (int j = 0; j < 3; ++j) {
      ParameterPoint mu;
      mu.x = {0.3 + 0.5 * j};
      mu.U = {0.4};
      mu.Up = {0.2};
      OperatorSnapshot snap = operator_snapshot(mu, sols.col(j), ctx);
      comps.col(j) = snap.component(c);
    }
    // full rank so the collateral spaces contain the mode exactly
    PodResult pod = compute_pod(comps, host->mass, PodTruncation::all());
    if (pod.basis.cols() == 0) {
      // components vanish identically (e.g. d' parts): use a constant basis
      Mat ones = Mat::Ones(host->dim, 1);
      const double nrm = std::sqrt(ones.col(0).dot(host->mass * ones.col(0)));
      pod.basis = ones / nrm;
      pod.eigenvalues = Vec::Ones(1);
      pod.total_count = 1;
    }
    CollateralUnit cu;
    cu.comp = c;
    cu.host = host;
    cu.proj = run_adaptive_epm(pod.basis, Dictionary::point_eval(), pod.basis,
                               1e-14, 0, *host, pod.eigenvalues);
    units.push_back(std::move(cu));
  }

  OnlineOperator op = precompute_tensors(podY.basis, ctx.space_y0, sx, tc,
                                         units[0], units[1], units[2],
                                         units[3], units[4]);
  Vec u = Vec::Zero(op.n_unknowns());
  const Mat J = Mat(reduced_jacobian(op, u));

  // expected: gamma * (Ax + |phi'|^2 Mx)
  const double gamma = 0.7;
  const double phip2 =
      podY.basis.col(0).dot(ctx.space_y0.stiffness * podY.basis.col(0));
  const Mat expected = gamma * (Mat(sx.stiffness) + phip2 * Mat(sx.mass));
  CHECK((J - expected).cwiseAbs().maxCoeff() <
        1e-10 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("reconstruct: zero, single-mode and Parseval") {
  MiniSetup s = make_mini_setup(TestCaseTag::TC1, 10, 12, 10, 2, 1e-8, 3);
  FESpace2D s2 = make_fe_space_2d(
      TensorMesh2D{s.space_x.mesh, s.ctx.space_y0.mesh});

  Mat zero = Mat::Zero(2, s.space_x.dim);
  CHECK(reconstruct(zero, s.podY.basis, s2).norm() == 0.0);

  // m=1, pbar = 1 on interior: field equals phi_1(y) at interior nodes
  Mat one = Mat::Ones(1, s.space_x.dim);
  Vec f = reconstruct(one, s.podY.basis.leftCols(1), s2);
  for (int iy = 0; iy < s2.ny; ++iy)
    for (int ix = 0; ix < s2.nx; ++ix)
      CHECK(f[s2.dof(ix, iy)] == doctest::Approx(s.podY.basis(iy, 0)));

  // Parseval: ||reconstruct||_{L2}^2 = sum_s ||pbar_s||_{L2}^2
  CounterRng rng(31);
  Mat coeffs(2, s.space_x.dim);
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < s.space_x.dim; ++i)
      coeffs(t, i) = rng.uniform(-1, 1);
  Vec field = reconstruct(coeffs, s.podY.basis, s2);
  const double lhs = field.dot(s2.mass_gram * field);
  double rhs = 0.0;
  for (int t = 0; t < 2; ++t)
    rhs += coeffs.row(t) * Mat(s.space_x.mass) * coeffs.row(t).transpose();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("newton solve on TC1 mini setup converges quadratically") {
  MiniSetup s = make_mini_setup(TestCaseTag::TC1, 24, 24, 25, 4, 1e-10, 17);
  ReducedSolution sol = newton_solve(s.op, Vec());
  REQUIRE(sol.converged);
  const auto &h = sol.residual_history;
  REQUIRE(h.size() >= 3);
  CHECK(h[h.size() - 1] / h[h.size() - 2] < 0.1);

  // truncation of the projector: prefix system solves too
  const CollateralUnit &full = s.units[0];
  if (full.proj.k() > 2) {
    EpmProjector pre = truncate_projector(full.proj, *full.host, 2);
    CHECK(pre.k() == 2);
    CHECK(pre.L() == 2);
    // prefix B is the leading block
    CHECK((pre.partition.intervals[0].sys.B -
           full.proj.partition.intervals[0].sys.B.topLeftCorner(2, 2))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}
