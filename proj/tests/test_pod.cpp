// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/mesh.hpp"
#include "hmr/pod.hpp"

#include <doctest.h>

using namespace hmr;

namespace {

SpMat identity_gram(int n) {
  SpMat g(n, n);
  g.setIdentity();
  return g;
}

Mat random_snapshots(int dim, int n, std::uint64_t seed) {
  CounterRng rng(seed);
  Mat S(dim, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < dim; ++i)
      S(i, j) = rng.uniform(-1, 1);
  return S;
}

} // namespace

TEST_CASE("pod: rank one") {
  Vec u(3);
  u << 3, 0, 4;
  Mat S(3, 1);
  S.col(0) = u;
  PodResult r = compute_pod(S, identity_gram(3), PodTruncation::all());
  REQUIRE(r.total_count == 1);
  CHECK(r.eigenvalues[0] == doctest::Approx(25.0));
  CHECK((r.basis.col(0) - u / 5.0).norm() < 1e-12);
}

TEST_CASE("pod: two orthogonal snapshots with norms 2 and 1") {
  Mat S = Mat::Zero(4, 2);
  S(0, 0) = 2.0;
  S(1, 1) = 1.0;
  PodResult r = compute_pod(S, identity_gram(4), PodTruncation::all());
  REQUIRE(r.total_count == 2);
  CHECK(r.eigenvalues[0] == doctest::Approx(2.0));
  CHECK(r.eigenvalues[1] == doctest::Approx(0.5));
}

TEST_CASE("pod: optimality vs dense SVD oracle and tail identity") {
  FESpace1D sp =
      make_fe_space_1d(build_interval_mesh(0, 1, 40), Boundary::Free);
  const int n = 10, m = 3;
  Mat S = random_snapshots(sp.dim, n, 99);

  PodResult r = compute_pod(S, sp.mass, PodTruncation::by_count(m));

  // orthonormality in the gram inner product
  Mat G = r.basis.transpose() * Mat(sp.mass) * r.basis;
  CHECK((G - Mat::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-10);

  // mean squared projection error equals the eigenvalue tail
  double err = 0.0;
  for (int j = 0; j < n; ++j) {
    Vec c = r.basis.transpose() * (sp.mass * S.col(j));
    Vec res = S.col(j) - r.basis * c;
    err += res.dot(Mat(sp.mass) * res);
  }
  err /= n;
  CHECK(err == doctest::Approx(r.tail(m)).epsilon(1e-10));

  // dense SVD oracle: best rank-m error of M^{1/2} S / sqrt(n)
  Eigen::SelfAdjointEigenSolver<Mat> me(Mat(sp.mass));
  Mat Mhalf = me.operatorSqrt();
  Eigen::JacobiSVD<Mat> svd(Mhalf * S / std::sqrt(double(n)));
  double oracle = 0.0;
  for (int i = m; i < svd.singularValues().size(); ++i)
    oracle += svd.singularValues()[i] * svd.singularValues()[i];
  CHECK(err == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("pod: already orthonormal set reproduces its span") {
  FESpace1D sp =
      make_fe_space_1d(build_interval_mesh(0, 1, 30), Boundary::Free);
  Mat S = random_snapshots(sp.dim, 4, 5);
  PodResult base = compute_pod(S, sp.mass, PodTruncation::all());
  const Mat O = base.basis; // orthonormal set
  PodResult again = compute_pod(O, sp.mass, PodTruncation::all());
  REQUIRE(again.basis.cols() == O.cols());
  // projector equality
  Mat P1 = O * O.transpose() * Mat(sp.mass);
  Mat P2 = again.basis * again.basis.transpose() * Mat(sp.mass);
  CHECK((P1 - P2).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("pod: eigenvalues invariant under snapshot reordering") {
  FESpace1D sp =
      make_fe_space_1d(build_interval_mesh(0, 1, 25), Boundary::Free);
  Mat S = random_snapshots(sp.dim, 6, 42);
  Mat S2 = S;
  S2.col(0).swap(S2.col(5));
  S2.col(1).swap(S2.col(3));
  PodResult a = compute_pod(S, sp.mass, PodTruncation::all());
  PodResult b = compute_pod(S2, sp.mass, PodTruncation::all());
  REQUIRE(a.total_count == b.total_count);
  for (int i = 0; i < a.total_count; ++i)
    CHECK(a.eigenvalues[i] == doctest::Approx(b.eigenvalues[i]).epsilon(1e-12));
}

TEST_CASE("pod: tolerance truncation obeys the tail rule") {
  FESpace1D sp =
      make_fe_space_1d(build_interval_mesh(0, 1, 30), Boundary::Free);
  Mat S = random_snapshots(sp.dim, 8, 1);
  PodResult all = compute_pod(S, sp.mass, PodTruncation::all());
  const double eps = std::sqrt(all.tail(3)) * 1.000001;
  PodResult r = compute_pod(S, sp.mass, PodTruncation::by_tol(eps));
  CHECK(r.basis.cols() <= 3);
  CHECK(std::sqrt(r.tail(static_cast<int>(r.basis.cols()))) <= eps);
  CHECK_THROWS(compute_pod(Mat(5, 0), identity_gram(5), PodTruncation::all()));
}
