// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_POD_HPP
#define HMR_POD_HPP

#include "hmr/common.hpp"

namespace hmr {

// Truncation rule: by mode count, by tail tolerance
// ((sum_{l>m} lambda_l)^{1/2} <= tol), or keep everything.
struct PodTruncation {
  int count = -1;
  double tol = -1.0;
  static PodTruncation by_count(int m) { return {m, -1.0}; }
  static PodTruncation by_tol(double eps) { return {-1, eps}; }
  static PodTruncation all() { return {-1, -1.0}; }
};

struct PodResult {
  Mat basis;       // gram-orthonormal modes, one per column
  Vec eigenvalues; // all lambda_1 >= ... >= lambda_{d(n)} ( > floor )
  int total_count = 0; // d(n)

  // (sum_{l>m} lambda_l); m past the spectrum gives 0.
  double tail(int m) const {
    double s = 0.0;
    for (int l = m; l < eigenvalues.size(); ++l)
      s += eigenvalues[l];
    return s;
  }
  // Smallest m with tail(m)^{1/2} <= eps (clamped to d(n)).
  int count_for_tol(double eps) const;
};

// Method of snapshots in the inner product induced by `gram`:
// eigendecompose (1/n) S' G S. Eigenvalues carry the 1/n factor.
PodResult compute_pod(const Mat &snapshots, const SpMat &gram,
                      PodTruncation trunc);

} // namespace hmr

#endif // HMR_POD_HPP
