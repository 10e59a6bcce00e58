// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_EPM_HPP
#define HMR_EPM_HPP

#include "hmr/interpolation.hpp"
#include "hmr/pod.hpp"

namespace hmr {

struct EpmInterval {
  double a = 0.0;
  double b = 0.0;
  InterpSystem sys; // k_I may be zero on degenerate intervals
};

struct Partition {
  std::vector<EpmInterval> intervals;
  int L() const {
    int s = 0;
    for (const auto &iv : intervals)
      s += iv.sys.k();
    return s;
  }
};

// Empirical projection P_k^L onto span{kappa_1..kappa_k} with projection
// integrals evaluated through the partitioned interpolant.
struct EpmProjector {
  Mat kappa;           // host dim x k, gram-orthonormal
  Vec pod_eigenvalues; // spectrum behind kappa (may be longer than k)
  Partition partition;
  Mat proj_integrals;  // L x k: int_I theta_j^I kappa_n
  std::vector<std::pair<int, int>> functional_index; // flat l -> (interval,j)
  double e_int = 0.0;
  std::vector<double> e_int_history; // per sweep
  int n_train = 0;

  int k() const { return static_cast<int>(kappa.cols()); }
  int L() const { return static_cast<int>(proj_integrals.rows()); }
  double eigen_tail(int m) const {
    double s = 0.0;
    for (int l = m; l < pod_eigenvalues.size(); ++l)
      s += pod_eigenvalues[l];
    return s;
  }
};

// Adaptive bisection of omega driven by the local integration errors e^I.
// With n_max = 0 this is plain (G)EIM on omega applied to K.
EpmProjector run_adaptive_epm(const Mat &K, const Dictionary &dict,
                              const Mat &manifold_samples, double eps_int,
                              int n_max, const HostSpace &host,
                              const Vec &pod_eigenvalues = Vec());

// Observations sigma_j^I(u_mu) for all selected functionals: L x n.
Mat epm_observations(const EpmProjector &proj, const Mat &samples);

// Coefficients of P_k^L[u] in the kappa basis: k x n.
Mat empirical_project(const EpmProjector &proj, const Mat &observations);

// Discrete-projection coefficients of the exact P_k (no interpolation).
Mat exact_project(const EpmProjector &proj, const HostSpace &host,
                  const Mat &samples);

// (sum_{l>k} lambda)^{1/2} + e_int^{1/2}; the Monte-Carlo term is reported
// separately by required_sample_size.
double apriori_bound(double eigen_tail, double e_int);

struct AposterioriResult {
  double delta_epm = 0.0;
  double eps_tol_used = 0.0;
};

// ||P_{k'}^{L'}[u] - P_k^L[u]|| in the discrete L2(D x omega) norm over the
// training samples. Requires k' > k, L' > L and a shared basis prefix.
AposterioriResult aposteriori_bound(const EpmProjector &proj_k,
                                    const EpmProjector &proj_kp,
                                    const HostSpace &host,
                                    const Mat &samples);

// Empirical variances (Monte-Carlo assessment): of ||u - P_k u||^2 and
// ||P_k u - P_k^L u||^2 over the samples.
std::pair<double, double> empirical_variances(const EpmProjector &proj,
                                              const HostSpace &host,
                                              const Mat &samples);

// Smallest n with n >= eps_mc^{-2} sigma_i^2 s(C), C = erf(s/sqrt(2)).
long required_sample_size(double sigma1, double sigma2, double eps_mc,
                          double confidence);

// True discrete EPM error ((1/n) sum_mu ||u - P_k^L u||^2_{L2})^{1/2}.
double discrete_projection_error(const EpmProjector &proj,
                                 const HostSpace &host, const Mat &samples);

} // namespace hmr

#endif // HMR_EPM_HPP
