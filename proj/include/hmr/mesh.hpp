// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_MESH_HPP
#define HMR_MESH_HPP

#include "hmr/common.hpp"

namespace hmr {

// 1D interval mesh with strictly increasing nodes.
struct Mesh1D {
  double a = 0.0;
  double b = 1.0;
  int n_elem = 0;
  std::vector<double> nodes;

  double h(int e) const { return nodes[e + 1] - nodes[e]; }
  double length() const { return b - a; }
  double midpoint(int e) const { return 0.5 * (nodes[e] + nodes[e + 1]); }
  // Element containing x (clamped to the valid range).
  int locate(double x) const;
};

Mesh1D build_interval_mesh(double a, double b, int n);

struct TensorMesh2D {
  Mesh1D mesh_x; // dominant direction
  Mesh1D mesh_y; // transverse direction
  int n_cells() const { return mesh_x.n_elem * mesh_y.n_elem; }
};

enum class Boundary { ZeroTrace, Free };

// P1 space on a 1D mesh with exact mass / H1-semi stiffness Gram matrices.
// With zero trace the dofs are the interior nodes, otherwise all nodes.
struct FESpace1D {
  Mesh1D mesh;
  Boundary boundary = Boundary::ZeroTrace;
  int dim = 0;
  SpMat mass;
  SpMat stiffness;

  int node_of_dof(int i) const {
    return boundary == Boundary::ZeroTrace ? i + 1 : i;
  }
  int dof_of_node(int n) const {
    if (boundary == Boundary::Free)
      return n;
    return (n >= 1 && n <= mesh.n_elem - 1) ? n - 1 : -1;
  }
  // Value of the FE function with coefficients c at y.
  double eval(const Vec &c, double y) const;
  double eval_deriv(const Vec &c, double y) const;
  // Nodal values (length = node count) of the FE function.
  Vec nodal_values(const Vec &c) const;
};

FESpace1D make_fe_space_1d(const Mesh1D &mesh, Boundary boundary);

// Piecewise constants on a 1D mesh; the mass matrix is diag(h_e).
struct PwConstSpace {
  Mesh1D mesh;
  int dim = 0;
  SpMat mass;
};

PwConstSpace make_pwconst_space(const Mesh1D &mesh);

// Zero-trace Q1 space on a tensor mesh. Dof ordering is x-fastest:
// dof = iy*nx + ix, with ix,iy indexing interior nodes.
struct FESpace2D {
  TensorMesh2D mesh;
  int nx = 0; // interior x-nodes
  int ny = 0; // interior y-nodes
  int dim = 0;
  SpMat h1_semi_gram;
  SpMat mass_gram;

  int dof(int ix, int iy) const { return iy * nx + ix; }
};

FESpace2D make_fe_space_2d(const TensorMesh2D &mesh);

// Exact assembly of (mass, stiffness) for P1 hats on the mesh of `space`.
// Returned matrices act on the space's dofs (boundary rows eliminated).
std::pair<SpMat, SpMat> assemble_p1_gram(const FESpace1D &space);

// Riesz representation of `functional` w.r.t. the SPD `gram`:
// gram * representer = functional, norm = sqrt(repr' * gram * repr).
struct RieszResult {
  Vec representer;
  double norm = 0.0;
};

RieszResult riesz_represent(const Vec &functional, const Mat &gram);

// Cached sparse SPD factorization for repeated Riesz solves.
class RieszSolver {
public:
  explicit RieszSolver(const SpMat &gram);
  RieszResult represent(const Vec &functional) const;
  double dual_norm(const Vec &functional) const;
  Vec solve(const Vec &rhs) const;

private:
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

// values' * mass * coeffs; exact for P1xP1 integrands.
double transverse_quadrature(const Vec &values_on_ynodes,
                             const Vec &weight_fn_coeffs, const SpMat &mass);

// Mass matrix of P1 hats restricted to the window [lo,hi] (all nodes,
// no boundary elimination). Used by the localized interpolation systems.
SpMat windowed_p1_mass(const Mesh1D &mesh, double lo, double hi);

// diag of element-overlap lengths with [lo,hi].
SpMat windowed_pwconst_mass(const Mesh1D &mesh, double lo, double hi);

// Integrals of all P1 hats over [lo,hi] (length = node count).
Vec p1_window_integrals(const Mesh1D &mesh, double lo, double hi);

// Integrals of element indicator functions over [lo,hi].
Vec pwconst_window_integrals(const Mesh1D &mesh, double lo, double hi);

// Discrete host space for transverse functions: free-boundary P1 on the
// nodes, or piecewise constants on the elements. Operator snapshots and
// collateral bases live here.
enum class HostKind { NodalP1Free, PiecewiseConst };

struct HostSpace {
  HostKind kind = HostKind::NodalP1Free;
  Mesh1D mesh;
  int dim = 0;
  SpMat mass;

  // Evaluation site of dof i: node coordinate / element midpoint.
  double site(int i) const {
    return kind == HostKind::NodalP1Free ? mesh.nodes[i] : mesh.midpoint(i);
  }
  SpMat windowed_mass(double lo, double hi) const {
    return kind == HostKind::NodalP1Free ? windowed_p1_mass(mesh, lo, hi)
                                         : windowed_pwconst_mass(mesh, lo, hi);
  }
  Vec window_integrals(double lo, double hi) const {
    return kind == HostKind::NodalP1Free
               ? p1_window_integrals(mesh, lo, hi)
               : pwconst_window_integrals(mesh, lo, hi);
  }
};

HostSpace make_host_p1_free(const Mesh1D &mesh);
HostSpace make_host_pwconst(const Mesh1D &mesh);

} // namespace hmr

#endif // HMR_MESH_HPP
