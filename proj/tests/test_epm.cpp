// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/epm.hpp"

#include <doctest.h>

using namespace hmr;

namespace {

// Step-function manifold: u(mu,y) = 1 for y > mu, else 0 (nodal values).
Mat step_manifold(const HostSpace &host, int n, std::uint64_t seed) {
  CounterRng rng(seed);
  Mat S(host.dim, n);
  for (int j = 0; j < n; ++j) {
    const double mu = rng.uniform(0.15, 0.85);
    for (int i = 0; i < host.dim; ++i)
      S(i, j) = host.site(i) > mu ? 1.0 : 0.0;
  }
  return S;
}

Mat smooth_manifold(const HostSpace &host, int n) {
  Mat S(host.dim, n);
  for (int j = 0; j < n; ++j) {
    const double mu = double(j) / std::max(1, n - 1);
    for (int i = 0; i < host.dim; ++i) {
      const double y = host.site(i);
      S(i, j) = std::cos(mu * y) + mu * y * y;
    }
  }
  return S;
}

} // namespace

TEST_CASE("manifold inside span(K): no refinement, e_int ~ 0") {
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 50));
  Mat S = smooth_manifold(host, 15);
  PodResult pod = compute_pod(S, host.mass, PodTruncation::by_count(4));
  // synthetic manifold drawn from span(K)
  CounterRng rng(3);
  Mat M(host.dim, 20);
  for (int j = 0; j < 20; ++j) {
    Vec c(4);
    for (int i = 0; i < 4; ++i)
      c[i] = rng.uniform(-1, 1);
    M.col(j) = pod.basis * c;
  }
  EpmProjector proj = run_adaptive_epm(pod.basis, Dictionary::point_eval(), M,
                                       1e-12, 5, host, pod.eigenvalues);
  CHECK(proj.partition.intervals.size() == 1);
  CHECK(proj.e_int <= 1e-12);
}

TEST_CASE("N_max = 0 gives plain EIM with L = k") {
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 60));
  Mat S = step_manifold(host, 30, 7);
  PodResult pod = compute_pod(S, host.mass, PodTruncation::by_count(3));
  EpmProjector proj = run_adaptive_epm(pod.basis, Dictionary::point_eval(), S,
                                       1e-10, 0, host, pod.eigenvalues);
  CHECK(proj.partition.intervals.size() == 1);
  CHECK(proj.L() == 3);
}

TEST_CASE("step manifold: e_int decreases across refinement sweeps") {
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 128));
  Mat S = step_manifold(host, 50, 11);
  PodResult pod = compute_pod(S, host.mass, PodTruncation::by_count(3));
  EpmProjector proj = run_adaptive_epm(pod.basis, Dictionary::point_eval(), S,
                                       1e-14, 4, host, pod.eigenvalues);
  REQUIRE(proj.e_int_history.size() >= 3);
  for (size_t i = 1; i < proj.e_int_history.size(); ++i)
    CHECK(proj.e_int_history[i] < proj.e_int_history[i - 1]);

  // e_int equals the sum of independently recomputed interval errors via
  // dense mass quadrature.
  double check = 0.0;
  {
    // recompute c_l(mu) directly: int (u - I_L u) kappa_l over omega
    const int n = static_cast<int>(S.cols());
    Mat IL = Mat::Zero(host.dim, n);
    for (const auto &iv : proj.partition.intervals) {
      if (iv.sys.k() == 0)
        continue;
      // local interpolant, extended by zero: values only matter inside I,
      // use window masses to integrate.
      Mat alpha = iv.sys.B.triangularView<Eigen::Lower>().solve(
          iv.sys.weights.transpose() * S);
      Mat local = iv.sys.Q * alpha; // host coefficients
      const SpMat MI = host.windowed_mass(iv.a, iv.b);
      // contribution of int_I (I^I u) kappa_l handled below via MI
      for (int j = 0; j < n; ++j)
        IL.col(j) += MI * local.col(j) - MI * S.col(j); // -(u - I u) weighted
    }
    // c_l = -kappa' * IL (since IL accumulated M_I (Iu - u))
    Mat C2 = -proj.kappa.transpose() * IL;
    for (const auto &iv : proj.partition.intervals) {
      const SpMat MI = host.windowed_mass(iv.a, iv.b);
      Mat GI = proj.kappa.transpose() * (MI * proj.kappa);
      double e = 0.0;
      for (int j = 0; j < n; ++j)
        e += C2.col(j).dot(GI * C2.col(j));
      check += e / n;
    }
  }
  CHECK(proj.e_int == doctest::Approx(check).epsilon(1e-10));
}

TEST_CASE("empirical projection: exactness and idempotence") {
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 80));
  Mat S = smooth_manifold(host, 20);
  PodResult pod = compute_pod(S, host.mass, PodTruncation::by_count(5));
  const int k = static_cast<int>(pod.basis.cols());
  REQUIRE(k >= 3);
  EpmProjector proj = run_adaptive_epm(pod.basis, Dictionary::point_eval(), S,
                                       1e-12, 2, host, pod.eigenvalues);

  // u = kappa_1 -> coefficients e_1
  Mat u = pod.basis.col(0);
  Mat c = empirical_project(proj, epm_observations(proj, u));
  CHECK(c(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
  for (int i = 1; i < k; ++i)
    CHECK(std::abs(c(i, 0)) < 1e-10);

  // u = 0 -> 0
  Mat z = Mat::Zero(host.dim, 1);
  CHECK(empirical_project(proj, epm_observations(proj, z)).norm() == 0.0);

  // random u in span(K): P_k^L u = P_k u = u
  CounterRng rng(23);
  Vec coeff(k);
  for (int i = 0; i < k; ++i)
    coeff[i] = rng.uniform(-1, 1);
  Mat v = pod.basis * coeff;
  Mat cv = empirical_project(proj, epm_observations(proj, v));
  CHECK((cv.col(0) - coeff).cwiseAbs().maxCoeff() < 1e-10);

  // idempotence: projecting the projection reproduces the coefficients
  Mat pv = pod.basis * cv;
  Mat cpv = empirical_project(proj, epm_observations(proj, pv));
  CHECK((cpv - cv).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("a priori bound values and oracle domination") {
  CHECK(apriori_bound(0.0, 0.0) == 0.0);
  CHECK(apriori_bound(1e-8, 0.0) == doctest::Approx(1e-4));

  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 100));
  Mat S = step_manifold(host, 40, 5);
  PodResult pod = compute_pod(S, host.mass, PodTruncation::by_count(4));
  EpmProjector proj = run_adaptive_epm(pod.basis, Dictionary::point_eval(), S,
                                       1e-13, 3, host, pod.eigenvalues);
  const double truth = discrete_projection_error(proj, host, S);
  const double bound = apriori_bound(proj.eigen_tail(4), proj.e_int);
  CHECK(bound >= truth * (1.0 - 1e-9));
}

TEST_CASE("a posteriori bound: monotone delta and domination") {
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 100));
  Mat S = step_manifold(host, 40, 31);
  PodResult podk = compute_pod(S, host.mass, PodTruncation::by_count(2));
  PodResult podkp = compute_pod(S, host.mass, PodTruncation::by_count(5));

  EpmProjector pk = run_adaptive_epm(podk.basis, Dictionary::point_eval(), S,
                                     1e-13, 2, host, podk.eigenvalues);
  EpmProjector pkp = run_adaptive_epm(podkp.basis, Dictionary::point_eval(), S,
                                      1e-13, 3, host, podkp.eigenvalues);
  REQUIRE(pkp.L() > pk.L());

  auto ap = aposteriori_bound(pk, pkp, host, S);
  const double truth = discrete_projection_error(pk, host, S);
  CHECK(ap.eps_tol_used + ap.delta_epm + std::sqrt(pk.e_int) >=
        truth * (1.0 - 1e-9));

  // extending the basis by modes the manifold does not excite: delta ~ 0
  Mat Mspan(host.dim, 10);
  CounterRng rng(2);
  for (int j = 0; j < 10; ++j) {
    Vec c(2);
    c << rng.uniform(-1, 1), rng.uniform(-1, 1);
    Mspan.col(j) = podk.basis * c;
  }
  EpmProjector qk = run_adaptive_epm(podk.basis, Dictionary::point_eval(),
                                     Mspan, 1e-16, 1, host, podk.eigenvalues);
  EpmProjector qkp = run_adaptive_epm(podkp.basis, Dictionary::point_eval(),
                                      Mspan, 1e-16, 2, host, podkp.eigenvalues);
  if (qkp.L() > qk.L()) {
    auto ap2 = aposteriori_bound(qk, qkp, host, Mspan);
    CHECK(ap2.delta_epm < 1e-9);
  }

  // monotonicity of delta as k grows toward k'
  double prev = ap.delta_epm;
  for (int k = 3; k < 5; ++k) {
    PodResult pm = compute_pod(S, host.mass, PodTruncation::by_count(k));
    EpmProjector pmid = run_adaptive_epm(pm.basis, Dictionary::point_eval(), S,
                                         1e-13, 2, host, pm.eigenvalues);
    if (pkp.L() <= pmid.L())
      continue;
    auto apm = aposteriori_bound(pmid, pkp, host, S);
    CHECK(apm.delta_epm <= prev * (1.0 + 0.15));
    prev = apm.delta_epm;
  }

  CHECK_THROWS(aposteriori_bound(pkp, pk, host, S)); // k' <= k
}

TEST_CASE("convergence bounds: GEIM (L2) and EIM (discrete) forms") {
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, 64));
  Mat S = step_manifold(host, 40, 19);

  // GEIM mode: e_int^{1/2} <= sqrt(k) (1 + (sum Lambda^2)^{1/2}) tail^{1/2}
  {
    const int k = 3;
    PodResult pod = compute_pod(S, host.mass, PodTruncation::by_count(k));
    Dictionary dict = Dictionary::local_average(0, 1, 6);
    EpmProjector proj =
        run_adaptive_epm(pod.basis, dict, S, 1e-13, 3, host, pod.eigenvalues);
    double lam2 = 0.0;
    for (const auto &iv : proj.partition.intervals) {
      if (iv.sys.k() == 0)
        continue;
      const double L = lebesgue_bound(iv.sys, host, LebesgueMode::Svd);
      lam2 += L * L;
    }
    const double bound = std::sqrt(double(k)) * (1.0 + std::sqrt(lam2)) *
                         std::sqrt(proj.eigen_tail(k));
    CHECK(std::sqrt(proj.e_int) <= bound * (1 + 1e-9));
  }

  // EIM mode: discrete bound with the h^{-1/2} factor
  {
    const int k = 4;
    PodResult pod = compute_pod(S, host.mass, PodTruncation::by_count(k));
    EpmProjector proj = run_adaptive_epm(pod.basis, Dictionary::point_eval(),
                                         S, 1e-13, 3, host, pod.eigenvalues);
    const double h = host.mesh.h(0);
    double lam2 = 0.0;
    for (const auto &iv : proj.partition.intervals) {
      if (iv.sys.k() == 0)
        continue;
      const double L = linf_lebesgue(iv.sys, host);
      lam2 += (iv.b - iv.a) * L * L;
    }
    const double bound = std::sqrt(double(k)) *
                         (1.0 + std::sqrt(lam2 / h)) *
                         std::sqrt(proj.eigen_tail(k));
    CHECK(std::sqrt(proj.e_int) <= bound * (1 + 1e-9));
  }
}

TEST_CASE("required sample size") {
  CHECK(required_sample_size(0.0, 0.0, 0.1, 0.9) == 0);
  // C slightly below erf(1/sqrt(2)) = 0.6826894..., so s(C) just below 1
  // and n = ceil(eps^-2 * 4 * s) lands at 400.
  CHECK(required_sample_size(2.0, 1.0, 0.1, 0.6826) == 400);
  CHECK_THROWS(required_sample_size(1.0, 1.0, 0.1, 1.5));
}
