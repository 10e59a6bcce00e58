// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/epm.hpp"

#include <cmath>

namespace hmr {

namespace {

// Local POD of the restrictions kappa|_I; rank cut at relative eigenvalue
// 1e-12. Returns an empty matrix when the restrictions vanish.
Mat local_basis(const Mat &K, const HostSpace &host, double a, double b) {
  const SpMat MI = host.windowed_mass(a, b);
  const int k = static_cast<int>(K.cols());
  Mat G = K.transpose() * (MI * K);
  G = 0.5 * (G + G.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(G);
  const Vec lam = eig.eigenvalues();
  const double lmax = std::max(lam.maxCoeff(), 0.0);
  if (lmax <= 0.0)
    return Mat(K.rows(), 0);
  std::vector<int> keep;
  for (int i = k - 1; i >= 0; --i)
    if (lam[i] > 1e-12 * lmax)
      keep.push_back(i);
  Mat out(K.rows(), static_cast<int>(keep.size()));
  for (int j = 0; j < out.cols(); ++j)
    out.col(j) = K * eig.eigenvectors().col(keep[j]) / std::sqrt(lam[keep[j]]);
  return out;
}

void build_system(EpmInterval &iv, const Mat &K, const HostSpace &host,
                  const Dictionary &dict, bool is_root) {
  Mat KI = is_root ? K : local_basis(K, host, iv.a, iv.b);
  // On small intervals the dictionary may not resolve the full local rank
  // (fewer candidate points than functions); shed the weakest modes until
  // the selection succeeds. The interval keeps a larger e^I and stays
  // eligible for further bisection.
  while (KI.cols() > 0) {
    try {
      iv.sys = select_interpolants(KI, host, dict, iv.a, iv.b);
      return;
    } catch (const HmrError &) {
      if (is_root)
        throw; // the global basis must be resolvable
      KI = KI.leftCols(KI.cols() - 1).eval();
    }
  }
  iv.sys = InterpSystem{};
  iv.sys.a = iv.a;
  iv.sys.b = iv.b;
  iv.sys.B = Mat(0, 0);
  iv.sys.Q = Mat(host.dim, 0);
  iv.sys.weights = Mat(host.dim, 0);
  iv.sys.Theta = Mat(host.dim, 0);
}

// Coefficients c_l(mu) = int_omega (u - I_L[u]) kappa_l dz for all samples.
Mat residual_coefficients(const Partition &part, const Mat &kappa,
                          const HostSpace &host, const Mat &samples) {
  Mat C = kappa.transpose() * (host.mass * samples); // k x n
  for (const auto &iv : part.intervals) {
    if (iv.sys.k() == 0)
      continue;
    const SpMat MI = host.windowed_mass(iv.a, iv.b);
    const Mat obs = iv.sys.weights.transpose() * samples; // k_I x n
    const Mat alpha =
        iv.sys.B.triangularView<Eigen::Lower>().solve(obs); // k_I x n
    const Mat PIq = kappa.transpose() * (MI * iv.sys.Q);    // k x k_I
    C -= PIq * alpha;
  }
  return C;
}

std::vector<double> interval_errors(const Partition &part, const Mat &kappa,
                                    const HostSpace &host, const Mat &C) {
  const int n = static_cast<int>(C.cols());
  std::vector<double> e;
  e.reserve(part.intervals.size());
  for (const auto &iv : part.intervals) {
    const SpMat MI = host.windowed_mass(iv.a, iv.b);
    const Mat GI = kappa.transpose() * (MI * kappa); // k x k
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      s += C.col(j).dot(GI * C.col(j));
    e.push_back(s / n);
  }
  return e;
}

} // namespace

EpmProjector run_adaptive_epm(const Mat &K, const Dictionary &dict,
                              const Mat &manifold_samples, double eps_int,
                              int n_max, const HostSpace &host,
                              const Vec &pod_eigenvalues) {
  HMR_REQUIRE(K.cols() >= 1, "run_adaptive_epm: empty collateral basis");
  HMR_REQUIRE(manifold_samples.cols() >= 1,
              "run_adaptive_epm: empty manifold sample set");

  EpmProjector proj;
  proj.kappa = K;
  proj.pod_eigenvalues = pod_eigenvalues;
  proj.n_train = static_cast<int>(manifold_samples.cols());

  const double y0 = host.mesh.a, y1 = host.mesh.b;
  EpmInterval root;
  root.a = y0;
  root.b = y1;
  build_system(root, K, host, dict, /*is_root=*/true);
  proj.partition.intervals.push_back(std::move(root));

  const double omega_len = y1 - y0;
  for (int sweep = 0; sweep < n_max; ++sweep) {
    const Mat C =
        residual_coefficients(proj.partition, K, host, manifold_samples);
    const auto errs = interval_errors(proj.partition, K, host, C);
    double e_int = 0.0;
    for (double e : errs)
      e_int += e;
    proj.e_int_history.push_back(e_int);
    if (e_int <= eps_int)
      break;

    std::vector<EpmInterval> next;
    bool refined = false;
    for (size_t i = 0; i < proj.partition.intervals.size(); ++i) {
      EpmInterval &iv = proj.partition.intervals[i];
      const double share = (iv.b - iv.a) / omega_len * eps_int;
      if (errs[i] > share) {
        const double mid = 0.5 * (iv.a + iv.b);
        EpmInterval left, right;
        left.a = iv.a;
        left.b = mid;
        right.a = mid;
        right.b = iv.b;
        build_system(left, K, host, dict, false);
        build_system(right, K, host, dict, false);
        next.push_back(std::move(left));
        next.push_back(std::move(right));
        refined = true;
      } else {
        next.push_back(std::move(iv));
      }
    }
    proj.partition.intervals = std::move(next);
    if (!refined)
      break;
  }

  // Final integration error and projection integrals.
  const Mat C =
      residual_coefficients(proj.partition, K, host, manifold_samples);
  const auto errs = interval_errors(proj.partition, K, host, C);
  proj.e_int = 0.0;
  for (double e : errs)
    proj.e_int += e;
  if (proj.e_int_history.empty() ||
      proj.e_int_history.back() != proj.e_int)
    proj.e_int_history.push_back(proj.e_int);

  const int L = proj.partition.L();
  proj.proj_integrals.resize(L, proj.k());
  proj.functional_index.clear();
  int row = 0;
  for (int i = 0; i < static_cast<int>(proj.partition.intervals.size()); ++i) {
    const auto &iv = proj.partition.intervals[i];
    if (iv.sys.k() == 0)
      continue;
    const SpMat MI = host.windowed_mass(iv.a, iv.b);
    const Mat P = iv.sys.Theta.transpose() * (MI * K); // k_I x k
    for (int j = 0; j < iv.sys.k(); ++j) {
      proj.proj_integrals.row(row) = P.row(j);
      proj.functional_index.emplace_back(i, j);
      ++row;
    }
  }
  return proj;
}

Mat epm_observations(const EpmProjector &proj, const Mat &samples) {
  Mat obs(proj.L(), samples.cols());
  int row = 0;
  for (const auto &iv : proj.partition.intervals) {
    if (iv.sys.k() == 0)
      continue;
    obs.middleRows(row, iv.sys.k()) = iv.sys.weights.transpose() * samples;
    row += iv.sys.k();
  }
  return obs;
}

Mat empirical_project(const EpmProjector &proj, const Mat &observations) {
  HMR_REQUIRE(observations.rows() == proj.L(),
              "empirical_project: observation count mismatch");
  // Interpolation coefficients alpha solve per-interval triangular systems;
  // the projection integrals are taken against theta, so coefficients are
  // direct sums sigma_j(u) * int theta_j kappa_n.
  return proj.proj_integrals.transpose() * observations;
}

Mat exact_project(const EpmProjector &proj, const HostSpace &host,
                  const Mat &samples) {
  return proj.kappa.transpose() * (host.mass * samples);
}

double apriori_bound(double eigen_tail, double e_int) {
  HMR_REQUIRE(eigen_tail >= -1e-15 && e_int >= -1e-15,
              "apriori_bound: negative inputs");
  return std::sqrt(std::max(0.0, eigen_tail)) +
         std::sqrt(std::max(0.0, e_int));
}

AposterioriResult aposteriori_bound(const EpmProjector &proj_k,
                                    const EpmProjector &proj_kp,
                                    const HostSpace &host,
                                    const Mat &samples) {
  (void)host; // projections are compared in the shared coefficient frame
  const int k = proj_k.k(), kp = proj_kp.k();
  HMR_REQUIRE(kp > k, "aposteriori_bound: requires k' > k");
  HMR_REQUIRE(proj_kp.L() > proj_k.L(),
              "aposteriori_bound: requires L' > L");
  HMR_REQUIRE((proj_kp.kappa.leftCols(k) - proj_k.kappa).cwiseAbs().maxCoeff() <
                  1e-10,
              "aposteriori_bound: bases do not share a prefix");

  const Mat Ck = empirical_project(proj_k, epm_observations(proj_k, samples));
  const Mat Ckp =
      empirical_project(proj_kp, epm_observations(proj_kp, samples));
  const int n = static_cast<int>(samples.cols());
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    s += (Ckp.col(j).head(k) - Ck.col(j)).squaredNorm();
    s += Ckp.col(j).tail(kp - k).squaredNorm();
  }
  AposterioriResult out;
  out.delta_epm = std::sqrt(s / n);
  // Tail from the first index beyond k (1-based k'), per the k' rule.
  out.eps_tol_used = std::sqrt(std::max(0.0, proj_kp.eigen_tail(kp - 1)));
  return out;
}

std::pair<double, double> empirical_variances(const EpmProjector &proj,
                                              const HostSpace &host,
                                              const Mat &samples) {
  const int n = static_cast<int>(samples.cols());
  const Mat PC = exact_project(proj, host, samples);
  const Mat C = empirical_project(proj, epm_observations(proj, samples));
  Vec a1(n), a2(n);
  for (int j = 0; j < n; ++j) {
    const double unorm2 = samples.col(j).dot(host.mass * samples.col(j));
    a1[j] = std::max(0.0, unorm2 - PC.col(j).squaredNorm());
    a2[j] = (PC.col(j) - C.col(j)).squaredNorm();
  }
  auto pop_std = [n](const Vec &v) {
    const double mean = v.mean();
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      s += (v[j] - mean) * (v[j] - mean);
    return std::sqrt(s / n);
  };
  return {pop_std(a1), pop_std(a2)};
}

long required_sample_size(double sigma1, double sigma2, double eps_mc,
                          double confidence) {
  HMR_REQUIRE(confidence > 0.0 && confidence < 1.0,
              "required_sample_size: confidence must be in (0,1)");
  HMR_REQUIRE(eps_mc > 0.0, "required_sample_size: eps_mc must be positive");
  // s(C) with C = erf(s/sqrt(2)), by bisection.
  double lo = 0.0, hi = 9.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::erf(mid / std::sqrt(2.0)) < confidence)
      lo = mid;
    else
      hi = mid;
  }
  const double s = 0.5 * (lo + hi);
  const double n1 = sigma1 * sigma1 * s / (eps_mc * eps_mc);
  const double n2 = sigma2 * sigma2 * s / (eps_mc * eps_mc);
  return static_cast<long>(std::ceil(std::max(n1, n2) - 1e-12));
}

double discrete_projection_error(const EpmProjector &proj,
                                 const HostSpace &host, const Mat &samples) {
  const Mat C = empirical_project(proj, epm_observations(proj, samples));
  const int n = static_cast<int>(samples.cols());
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    const Vec r = samples.col(j) - proj.kappa * C.col(j);
    s += std::max(0.0, r.dot(host.mass * r));
  }
  return std::sqrt(s / n);
}

} // namespace hmr
