// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace hmr {

int Mesh1D::locate(double x) const {
  if (x <= nodes.front())
    return 0;
  if (x >= nodes.back())
    return n_elem - 1;
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  int e = static_cast<int>(it - nodes.begin()) - 1;
  return std::min(std::max(e, 0), n_elem - 1);
}

Mesh1D build_interval_mesh(double a, double b, int n) {
  HMR_REQUIRE(a < b, "build_interval_mesh: requires a < b");
  HMR_REQUIRE(n >= 1, "build_interval_mesh: requires n >= 1");
  Mesh1D m;
  m.a = a;
  m.b = b;
  m.n_elem = n;
  m.nodes.resize(n + 1);
  for (int i = 0; i <= n; ++i)
    m.nodes[i] = a + (b - a) * static_cast<double>(i) / n;
  m.nodes[0] = a;
  m.nodes[n] = b;
  return m;
}

namespace {

// Assemble full (all-node) P1 mass/stiffness, then eliminate boundary rows
// if requested.
void p1_gram_full(const Mesh1D &mesh, SpMat &mass, SpMat &stiff) {
  const int nn = mesh.n_elem + 1;
  std::vector<Triplet> tm, ts;
  tm.reserve(4 * mesh.n_elem);
  ts.reserve(4 * mesh.n_elem);
  for (int e = 0; e < mesh.n_elem; ++e) {
    const double h = mesh.h(e);
    const double m00 = h / 3.0, m01 = h / 6.0;
    const double s00 = 1.0 / h;
    tm.emplace_back(e, e, m00);
    tm.emplace_back(e, e + 1, m01);
    tm.emplace_back(e + 1, e, m01);
    tm.emplace_back(e + 1, e + 1, m00);
    ts.emplace_back(e, e, s00);
    ts.emplace_back(e, e + 1, -s00);
    ts.emplace_back(e + 1, e, -s00);
    ts.emplace_back(e + 1, e + 1, s00);
  }
  mass.resize(nn, nn);
  stiff.resize(nn, nn);
  mass.setFromTriplets(tm.begin(), tm.end());
  stiff.setFromTriplets(ts.begin(), ts.end());
}

SpMat restrict_interior(const SpMat &full, int nn) {
  SpMat out(nn - 2, nn - 2);
  std::vector<Triplet> t;
  for (int k = 0; k < full.outerSize(); ++k)
    for (SpMat::InnerIterator it(full, k); it; ++it) {
      const int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
      if (i >= 1 && i <= nn - 2 && j >= 1 && j <= nn - 2)
        t.emplace_back(i - 1, j - 1, it.value());
    }
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

} // namespace

FESpace1D make_fe_space_1d(const Mesh1D &mesh, Boundary boundary) {
  FESpace1D s;
  s.mesh = mesh;
  s.boundary = boundary;
  const int nn = mesh.n_elem + 1;
  s.dim = boundary == Boundary::ZeroTrace ? nn - 2 : nn;
  HMR_REQUIRE(s.dim >= 1, "make_fe_space_1d: empty space");
  auto [m, k] = assemble_p1_gram(s);
  s.mass = std::move(m);
  s.stiffness = std::move(k);
  return s;
}

std::pair<SpMat, SpMat> assemble_p1_gram(const FESpace1D &space) {
  SpMat mass, stiff;
  p1_gram_full(space.mesh, mass, stiff);
  if (space.boundary == Boundary::ZeroTrace) {
    const int nn = space.mesh.n_elem + 1;
    return {restrict_interior(mass, nn), restrict_interior(stiff, nn)};
  }
  return {mass, stiff};
}

double FESpace1D::eval(const Vec &c, double y) const {
  const int e = mesh.locate(y);
  const double yl = mesh.nodes[e], h = mesh.h(e);
  const double t = (y - yl) / h;
  const int dl = dof_of_node(e), dr = dof_of_node(e + 1);
  const double vl = dl >= 0 ? c[dl] : 0.0;
  const double vr = dr >= 0 ? c[dr] : 0.0;
  return vl * (1.0 - t) + vr * t;
}

double FESpace1D::eval_deriv(const Vec &c, double y) const {
  const int e = mesh.locate(y);
  const double h = mesh.h(e);
  const int dl = dof_of_node(e), dr = dof_of_node(e + 1);
  const double vl = dl >= 0 ? c[dl] : 0.0;
  const double vr = dr >= 0 ? c[dr] : 0.0;
  return (vr - vl) / h;
}

Vec FESpace1D::nodal_values(const Vec &c) const {
  const int nn = mesh.n_elem + 1;
  Vec v = Vec::Zero(nn);
  for (int n = 0; n < nn; ++n) {
    const int d = dof_of_node(n);
    if (d >= 0)
      v[n] = c[d];
  }
  return v;
}

PwConstSpace make_pwconst_space(const Mesh1D &mesh) {
  PwConstSpace s;
  s.mesh = mesh;
  s.dim = mesh.n_elem;
  std::vector<Triplet> t;
  t.reserve(mesh.n_elem);
  for (int e = 0; e < mesh.n_elem; ++e)
    t.emplace_back(e, e, mesh.h(e));
  s.mass.resize(s.dim, s.dim);
  s.mass.setFromTriplets(t.begin(), t.end());
  return s;
}

FESpace2D make_fe_space_2d(const TensorMesh2D &mesh) {
  FESpace2D s;
  s.mesh = mesh;
  s.nx = mesh.mesh_x.n_elem - 1;
  s.ny = mesh.mesh_y.n_elem - 1;
  HMR_REQUIRE(s.nx >= 1 && s.ny >= 1, "make_fe_space_2d: empty space");
  s.dim = s.nx * s.ny;

  // Tensor (Kronecker) assembly: S2 = My (x) Ax + Ay (x) Mx on interior
  // nodes, x-fastest ordering. Exact on tensor grids.
  FESpace1D sx = make_fe_space_1d(mesh.mesh_x, Boundary::ZeroTrace);
  FESpace1D sy = make_fe_space_1d(mesh.mesh_y, Boundary::ZeroTrace);

  auto kron = [&](const SpMat &A, const SpMat &B) {
    // A acts on y-index, B on x-index; dof = iy*nx + ix.
    std::vector<Triplet> t;
    t.reserve(static_cast<size_t>(A.nonZeros()) * B.nonZeros());
    for (int ka = 0; ka < A.outerSize(); ++ka)
      for (SpMat::InnerIterator ia(A, ka); ia; ++ia)
        for (int kb = 0; kb < B.outerSize(); ++kb)
          for (SpMat::InnerIterator ib(B, kb); ib; ++ib)
            t.emplace_back(static_cast<int>(ia.row()) * s.nx +
                               static_cast<int>(ib.row()),
                           static_cast<int>(ia.col()) * s.nx +
                               static_cast<int>(ib.col()),
                           ia.value() * ib.value());
    SpMat out(s.dim, s.dim);
    out.setFromTriplets(t.begin(), t.end());
    return out;
  };

  s.h1_semi_gram = kron(sy.mass, sx.stiffness) + kron(sy.stiffness, sx.mass);
  s.mass_gram = kron(sy.mass, sx.mass);
  return s;
}

RieszResult riesz_represent(const Vec &functional, const Mat &gram) {
  HMR_REQUIRE(gram.rows() == gram.cols() && gram.rows() == functional.size(),
              "riesz_represent: dimension mismatch");
  Eigen::LDLT<Mat> ldlt(gram);
  HMR_REQUIRE(ldlt.info() == Eigen::Success && ldlt.isPositive(),
              "riesz_represent: gram matrix is not SPD");
  const double dmin = ldlt.vectorD().minCoeff();
  const double dmax = ldlt.vectorD().maxCoeff();
  HMR_REQUIRE(dmin > 1e-14 * std::max(dmax, 1.0),
              "riesz_represent: gram matrix is numerically singular");
  RieszResult r;
  r.representer = ldlt.solve(functional);
  r.norm = std::sqrt(std::max(0.0, r.representer.dot(functional)));
  return r;
}

RieszSolver::RieszSolver(const SpMat &gram) {
  ldlt_.compute(gram);
  HMR_REQUIRE(ldlt_.info() == Eigen::Success,
              "RieszSolver: factorization failed (gram not SPD?)");
}

RieszResult RieszSolver::represent(const Vec &functional) const {
  RieszResult r;
  r.representer = ldlt_.solve(functional);
  r.norm = std::sqrt(std::max(0.0, r.representer.dot(functional)));
  return r;
}

double RieszSolver::dual_norm(const Vec &functional) const {
  return represent(functional).norm;
}

Vec RieszSolver::solve(const Vec &rhs) const { return ldlt_.solve(rhs); }

double transverse_quadrature(const Vec &values_on_ynodes,
                             const Vec &weight_fn_coeffs, const SpMat &mass) {
  HMR_REQUIRE(values_on_ynodes.size() == mass.rows() &&
                  weight_fn_coeffs.size() == mass.cols(),
              "transverse_quadrature: dimension mismatch");
  return values_on_ynodes.dot(mass * weight_fn_coeffs);
}

namespace {

template <typename F>
void for_window(const Mesh1D &mesh, double lo, double hi, F &&f) {
  if (hi <= lo)
    return;
  for (int e = 0; e < mesh.n_elem; ++e) {
    const double l = std::max(lo, mesh.nodes[e]);
    const double r = std::min(hi, mesh.nodes[e + 1]);
    if (r - l > 1e-15 * mesh.length())
      f(e, l, r);
  }
}

} // namespace

SpMat windowed_p1_mass(const Mesh1D &mesh, double lo, double hi) {
  const int nn = mesh.n_elem + 1;
  std::vector<Triplet> t;
  const auto &g = gauss3();
  for_window(mesh, lo, hi, [&](int e, double l, double r) {
    const double yl = mesh.nodes[e], h = mesh.h(e), len = r - l;
    double m[2][2] = {{0, 0}, {0, 0}};
    for (int q = 0; q < g.n; ++q) {
      const double y = l + len * g.pts[q];
      const double tloc = (y - yl) / h;
      const double n0 = 1.0 - tloc, n1 = tloc;
      const double w = g.wts[q] * len;
      m[0][0] += w * n0 * n0;
      m[0][1] += w * n0 * n1;
      m[1][0] += w * n1 * n0;
      m[1][1] += w * n1 * n1;
    }
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        t.emplace_back(e + a, e + b, m[a][b]);
  });
  SpMat out(nn, nn);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SpMat windowed_pwconst_mass(const Mesh1D &mesh, double lo, double hi) {
  std::vector<Triplet> t;
  for_window(mesh, lo, hi,
             [&](int e, double l, double r) { t.emplace_back(e, e, r - l); });
  SpMat out(mesh.n_elem, mesh.n_elem);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

Vec p1_window_integrals(const Mesh1D &mesh, double lo, double hi) {
  Vec v = Vec::Zero(mesh.n_elem + 1);
  for_window(mesh, lo, hi, [&](int e, double l, double r) {
    const double yl = mesh.nodes[e], h = mesh.h(e);
    const double tl = (l - yl) / h, tr = (r - yl) / h;
    // int of (1-t) and t over [tl,tr], scaled by h.
    v[e] += h * ((tr - tl) - 0.5 * (tr * tr - tl * tl));
    v[e + 1] += h * 0.5 * (tr * tr - tl * tl);
  });
  return v;
}

Vec pwconst_window_integrals(const Mesh1D &mesh, double lo, double hi) {
  Vec v = Vec::Zero(mesh.n_elem);
  for_window(mesh, lo, hi,
             [&](int e, double l, double r) { v[e] += r - l; });
  return v;
}

HostSpace make_host_p1_free(const Mesh1D &mesh) {
  HostSpace h;
  h.kind = HostKind::NodalP1Free;
  h.mesh = mesh;
  FESpace1D s = make_fe_space_1d(mesh, Boundary::Free);
  h.dim = s.dim;
  h.mass = s.mass;
  return h;
}

HostSpace make_host_pwconst(const Mesh1D &mesh) {
  HostSpace h;
  h.kind = HostKind::PiecewiseConst;
  h.mesh = mesh;
  PwConstSpace s = make_pwconst_space(mesh);
  h.dim = s.dim;
  h.mass = s.mass;
  return h;
}

} // namespace hmr
