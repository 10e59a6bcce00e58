// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/interpolation.hpp"
#include "hmr/pod.hpp"

#include <doctest.h>

using namespace hmr;

namespace {

// Smooth synthetic manifold on [0,1]: u(mu,y) = exp(-mu y) sin(pi y (1+mu)).
Mat smooth_manifold(const HostSpace &host, int n) {
  Mat S(host.dim, n);
  for (int j = 0; j < n; ++j) {
    const double mu = double(j) / std::max(1, n - 1);
    for (int i = 0; i < host.dim; ++i) {
      const double y = host.site(i);
      S(i, j) = std::exp(-mu * y) * std::sin(M_PI * y * (1.0 + mu));
    }
  }
  return S;
}

} // namespace

TEST_CASE("single hat function: point at its peak node, B = [1]") {
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 10));
  Mat K = Mat::Zero(host.dim, 1);
  K(4, 0) = 1.0;
  InterpSystem sys =
      select_interpolants(K, host, Dictionary::point_eval(), 0.0, 1.0);
  REQUIRE(sys.k() == 1);
  CHECK(sys.descs[0].dof == 4);
  CHECK(sys.B(0, 0) == 1.0);
}

TEST_CASE("Lemma-type properties for POD modes of a smooth manifold") {
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 60));
  Mat S = smooth_manifold(host, 25);
  PodResult pod = compute_pod(S, host.mass, PodTruncation::by_count(3));

  for (auto dict : {Dictionary::point_eval(),
                    Dictionary::local_average(0.0, 1.0, 6)}) {
    InterpSystem sys = select_interpolants(pod.basis, host, dict, 0.0, 1.0);
    REQUIRE(sys.k() == 3);
    // lower triangular, unit diagonal, |B_ij| <= 1
    for (int i = 0; i < 3; ++i) {
      CHECK(sys.B(i, i) == 1.0);
      for (int j = i + 1; j < 3; ++j)
        CHECK(sys.B(i, j) == 0.0);
      for (int j = 0; j < i; ++j)
        CHECK(std::abs(sys.B(i, j)) <= 1.0 + 1e-10);
    }
    // cardinal property
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double sij = sys.weights.col(i).dot(sys.Theta.col(j));
        CHECK(sij == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
      }
    // exactness on span(K)
    CounterRng rng(17);
    const SpMat MI = host.windowed_mass(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
      Vec coeff(3);
      for (int c = 0; c < 3; ++c)
        coeff[c] = rng.uniform(-2, 2);
      Vec w = pod.basis * coeff;
      Vec alpha = interpolate(sys, sys.observations(w));
      Vec recon = sys.Q * alpha;
      Vec diff = recon - w;
      CHECK(std::sqrt(std::max(0.0, diff.dot(MI * diff))) < 1e-10);
    }
    // selected functionals are distinct
    for (size_t a = 0; a < sys.descs.size(); ++a)
      for (size_t b = a + 1; b < sys.descs.size(); ++b) {
        const bool same =
            sys.descs[a].dof == sys.descs[b].dof &&
            sys.descs[a].j_lo == sys.descs[b].j_lo &&
            sys.descs[a].j_hi == sys.descs[b].j_hi;
        CHECK(!same);
      }
  }
}

TEST_CASE("interpolate: cardinal pattern and zeros") {
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 40));
  Mat S = smooth_manifold(host, 12);
  PodResult pod = compute_pod(S, host.mass, PodTruncation::by_count(4));
  InterpSystem sys =
      select_interpolants(pod.basis, host, Dictionary::point_eval(), 0.0, 1.0);

  // observations of q_1 give alpha = e1
  Vec obs = sys.observations(sys.Q.col(0));
  Vec alpha = interpolate(sys, obs);
  CHECK(alpha[0] == doctest::Approx(1.0));
  for (int i = 1; i < 4; ++i)
    CHECK(std::abs(alpha[i]) < 1e-12);

  CHECK(interpolate(sys, Vec::Zero(4)).norm() == 0.0);
}

TEST_CASE("unisolvence failure reported") {
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 10));
  // two identical functions are not linearly independent
  Mat K(host.dim, 2);
  for (int i = 0; i < host.dim; ++i)
    K(i, 0) = K(i, 1) = std::sin(M_PI * host.site(i));
  CHECK_THROWS(
      select_interpolants(K, host, Dictionary::point_eval(), 0.0, 1.0));
}

TEST_CASE("lebesgue bounds") {
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 50));
  Mat S = smooth_manifold(host, 20);

  // k = 1: geometric bound is ||q_1||
  PodResult pod1 = compute_pod(S, host.mass, PodTruncation::by_count(1));
  InterpSystem sys1 = select_interpolants(
      pod1.basis, host, Dictionary::local_average(0, 1, 5), 0.0, 1.0);
  const SpMat MI = host.windowed_mass(0, 1);
  const double q1n =
      std::sqrt(sys1.Q.col(0).dot(MI * sys1.Q.col(0)));
  CHECK(lebesgue_bound(sys1, host, LebesgueMode::Geometric) ==
        doctest::Approx(q1n));

  // SVD mode <= geometric mode on random-ish systems
  for (int k = 2; k <= 5; ++k) {
    PodResult pod = compute_pod(S, host.mass, PodTruncation::by_count(k));
    InterpSystem sys = select_interpolants(
        pod.basis, host, Dictionary::local_average(0, 1, 5), 0.0, 1.0);
    const double svd = lebesgue_bound(sys, host, LebesgueMode::Svd);
    const double geo = lebesgue_bound(sys, host, LebesgueMode::Geometric);
    CHECK(svd <= geo * (1.0 + 1e-9));
    CHECK(svd >= 1.0 - 1e-9); // projection norm is at least one
  }

  // orthonormal q with biorthogonal functionals: SVD mode = 1
  // (orthogonal projection). Build it directly: hat-orthonormalized modes
  // with functionals = their own L2 pairings.
  PodResult pod = compute_pod(S, host.mass, PodTruncation::by_count(3));
  InterpSystem sys;
  sys.a = 0.0;
  sys.b = 1.0;
  sys.Q = pod.basis;
  sys.weights = Mat(host.mass) * pod.basis; // sigma_i(v) = (v, q_i)_{L2}
  sys.B = Mat::Identity(3, 3);
  sys.Theta = pod.basis;
  for (int i = 0; i < 3; ++i)
    sys.descs.push_back(FunctionalDesc{});
  CHECK(lebesgue_bound(sys, host, LebesgueMode::Svd) ==
        doctest::Approx(1.0).epsilon(1e-9));
}
