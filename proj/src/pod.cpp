// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/pod.hpp"

#include <cmath>

namespace hmr {

int PodResult::count_for_tol(double eps) const {
  for (int m = 0; m <= total_count; ++m)
    if (std::sqrt(tail(m)) <= eps)
      return m;
  return total_count;
}

PodResult compute_pod(const Mat &snapshots, const SpMat &gram,
                      PodTruncation trunc) {
  const int n = static_cast<int>(snapshots.cols());
  HMR_REQUIRE(n >= 1, "compute_pod: empty snapshot set");
  HMR_REQUIRE(snapshots.rows() == gram.rows(),
              "compute_pod: snapshot/gram dimension mismatch");

  const Mat GS = gram * snapshots;
  Mat C = (snapshots.transpose() * GS) / static_cast<double>(n);
  C = 0.5 * (C + C.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> eig(C);
  HMR_REQUIRE(eig.info() == Eigen::Success, "compute_pod: eigensolver failed");

  // Descending order; drop eigenvalues below the relative floor.
  const Vec lam_asc = eig.eigenvalues();
  const Mat vec_asc = eig.eigenvectors();
  const double lam_max = std::max(lam_asc.maxCoeff(), 0.0);
  const double floor = 1e-14 * lam_max;

  std::vector<int> keep;
  for (int i = n - 1; i >= 0; --i)
    if (lam_asc[i] > floor && lam_asc[i] > 0.0)
      keep.push_back(i);

  PodResult out;
  out.total_count = static_cast<int>(keep.size());
  out.eigenvalues.resize(out.total_count);
  for (int j = 0; j < out.total_count; ++j)
    out.eigenvalues[j] = lam_asc[keep[j]];

  int m = out.total_count;
  if (trunc.count >= 0)
    m = std::min(m, trunc.count);
  else if (trunc.tol >= 0.0)
    m = out.count_for_tol(trunc.tol);

  out.basis.resize(snapshots.rows(), m);
  for (int j = 0; j < m; ++j) {
    const double lam = out.eigenvalues[j];
    out.basis.col(j) =
        snapshots * vec_asc.col(keep[j]) / std::sqrt(n * lam);
  }

  // Re-orthonormalize in the gram inner product; eigenvector roundoff is
  // amplified by lambda_1/lambda_m for deep spectra.
  for (int j = 0; j < m; ++j) {
    Vec v = out.basis.col(j);
    for (int i = 0; i < j; ++i) {
      const double proj = out.basis.col(i).dot(gram * v);
      v -= proj * out.basis.col(i);
    }
    const double nrm = std::sqrt(v.dot(gram * v));
    HMR_REQUIRE(nrm > 0.0, "compute_pod: degenerate mode after truncation");
    out.basis.col(j) = v / nrm;
  }

  // Sign convention: first coefficient of nonnegligible magnitude positive.
  for (int j = 0; j < m; ++j) {
    const double scale = out.basis.col(j).cwiseAbs().maxCoeff();
    for (int i = 0; i < out.basis.rows(); ++i) {
      if (std::abs(out.basis(i, j)) > 1e-12 * scale) {
        if (out.basis(i, j) < 0.0)
          out.basis.col(j) = -out.basis.col(j);
        break;
      }
    }
  }
  return out;
}

} // namespace hmr
