// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_REFERENCE_HPP
#define HMR_REFERENCE_HPP

#include "hmr/model_problem.hpp"
#include "hmr/reduced.hpp"

namespace hmr {

struct ReferenceContext {
  const TestCase *tc = nullptr;
  FESpace2D space;
  Vec fvec;
  std::shared_ptr<RieszSolver> dual; // H1-semi gram factorization
};

ReferenceContext make_reference_context(const TestCase &tc, int NH, int nh);

struct ReferenceSolution {
  Vec values; // 2D dofs, zero trace
  bool converged = false;
  std::vector<double> residual_history;
};

Vec reference_residual(const ReferenceContext &ctx, const Vec &p);
SpMat reference_jacobian(const ReferenceContext &ctx, const Vec &p);

ReferenceSolution solve_reference(const ReferenceContext &ctx,
                                  const NewtonOptions &opt = {});

// (relative H1-semi, relative L2) of (ref - other) against ref.
std::pair<double, double> error_norms(const Vec &ref, const Vec &other,
                                      const FESpace2D &space);

// Errors against a closed-form solution by element quadrature.
struct ExactField {
  std::function<double(double, double)> value;
  std::function<void(double, double, double &, double &)> grad;
};

ExactField tc1_exact_field();

std::pair<double, double> error_vs_exact(const FESpace2D &space,
                                         const Vec &field,
                                         const ExactField &exact);

// Bilinear evaluation of a zero-trace Q1 field.
double eval_field(const FESpace2D &space, const Vec &field, double x,
                  double y);

// Interior local-maximum clusters (8-neighbor maxima above
// rel_threshold * max, merged within a Chebyshev cell radius).
struct Peak {
  int ix = 0; // interior x-node index
  int iy = 0;
  double value = 0.0;
};

std::vector<Peak> find_peak_clusters(const FESpace2D &space, const Vec &field,
                                     double rel_threshold = 0.3,
                                     int merge_radius = 3);

} // namespace hmr

#endif // HMR_REFERENCE_HPP
