// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/interpolation.hpp"

#include <cmath>

namespace hmr {

namespace {

struct Candidate {
  FunctionalDesc desc;
  Vec weight; // sigma(v) = weight . v
};

std::vector<Candidate> build_candidates(const HostSpace &host,
                                        const Dictionary &dict, double a,
                                        double b) {
  std::vector<Candidate> out;
  const double tol = 1e-12 * host.mesh.length();
  if (dict.kind == Dictionary::Kind::PointEval) {
    for (int i = 0; i < host.dim; ++i) {
      const double s = host.site(i);
      if (s >= a - tol && s <= b + tol) {
        Candidate c;
        c.desc = FunctionalDesc{dict.kind, i, 0.0, 0.0};
        c.weight = Vec::Zero(host.dim);
        c.weight[i] = 1.0;
        out.push_back(std::move(c));
      }
    }
  } else {
    const double lo = dict.omega_lo, len = dict.omega_hi - dict.omega_lo;
    for (int d = 0; d <= dict.depth; ++d) {
      const int parts = 1 << d;
      const double w = len / parts;
      for (int j = 0; j < parts; ++j) {
        const double jl = lo + j * w, jh = jl + w;
        const double il = std::max(jl, a), ih = std::min(jh, b);
        if (ih - il <= tol)
          continue;
        Candidate c;
        c.desc = FunctionalDesc{dict.kind, -1, jl, jh};
        c.weight = host.window_integrals(il, ih) / std::sqrt(w);
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

} // namespace

InterpSystem select_interpolants(const Mat &K, const HostSpace &host,
                                 const Dictionary &dict, double a, double b) {
  const int kI = static_cast<int>(K.cols());
  HMR_REQUIRE(kI >= 1, "select_interpolants: empty function set");
  HMR_REQUIRE(K.rows() == host.dim, "select_interpolants: dimension mismatch");

  const auto candidates = build_candidates(host, dict, a, b);
  HMR_REQUIRE(!candidates.empty(),
              "select_interpolants: dictionary empty on the interval");

  const SpMat MI = host.windowed_mass(a, b);

  InterpSystem sys;
  sys.a = a;
  sys.b = b;
  sys.weights.resize(host.dim, kI);
  sys.Q.resize(host.dim, kI);
  sys.B = Mat::Zero(kI, kI);

  for (int m = 0; m < kI; ++m) {
    Vec r = K.col(m);
    if (m > 0) {
      const Vec obs = sys.weights.leftCols(m).transpose() * K.col(m);
      const Vec alpha = sys.B.topLeftCorner(m, m)
                            .triangularView<Eigen::Lower>()
                            .solve(obs);
      r -= sys.Q.leftCols(m) * alpha;
    }
    const double rnorm = std::sqrt(std::max(0.0, r.dot(MI * r)));
    HMR_REQUIRE(rnorm > 1e-14 * std::sqrt(std::max(
                             1e-300, K.col(m).dot(MI * K.col(m)))) &&
                    rnorm > 0.0,
                "select_interpolants: functions not linearly independent on "
                "the interval");

    int best = -1;
    double best_val = -1.0;
    for (int c = 0; c < static_cast<int>(candidates.size()); ++c) {
      const double v = std::abs(candidates[c].weight.dot(r));
      if (v > best_val) {
        best_val = v;
        best = c;
      }
    }
    HMR_REQUIRE(best_val >= 1e-12 * rnorm,
                "select_interpolants: dictionary not unisolvent on span");

    const Candidate &cand = candidates[best];
    const double sr = cand.weight.dot(r);
    sys.descs.push_back(cand.desc);
    sys.weights.col(m) = cand.weight;
    sys.Q.col(m) = r / sr;
    for (int i = 0; i <= m; ++i)
      sys.B(m, i) = cand.weight.dot(sys.Q.col(i));
    for (int i = 0; i < m; ++i)
      sys.B(i, m) = 0.0; // exact by construction
    sys.B(m, m) = 1.0;
  }

  for (int i = 0; i < kI; ++i)
    for (int j = 0; j < i; ++j)
      HMR_REQUIRE(std::abs(sys.B(i, j)) <= 1.0 + 1e-10,
                  "select_interpolants: |B_ij| <= 1 violated");

  // Theta = Q B^{-1}; column j is the cardinal function for functional j.
  Mat Binv = Mat::Identity(kI, kI);
  sys.B.triangularView<Eigen::Lower>().solveInPlace(Binv);
  sys.Theta = sys.Q * Binv;
  return sys;
}

Vec interpolate(const InterpSystem &sys, const Vec &observations) {
  HMR_REQUIRE(observations.size() == sys.k(),
              "interpolate: observation count mismatch");
  return sys.B.triangularView<Eigen::Lower>().solve(observations);
}

double lebesgue_bound(const InterpSystem &sys, const HostSpace &host,
                      LebesgueMode mode) {
  const SpMat MI = host.windowed_mass(sys.a, sys.b);
  const int k = sys.k();
  if (mode == LebesgueMode::Geometric) {
    double qmax = 0.0;
    for (int j = 0; j < k; ++j) {
      const Vec q = sys.Q.col(j);
      qmax = std::max(qmax, std::sqrt(std::max(0.0, q.dot(MI * q))));
    }
    return std::ldexp(qmax, k - 1); // 2^{k-1} * max ||q||
  }

  // Discrete L2(I) operator norm of v -> Theta B^{-1}... the operator is
  // v -> sum_j alpha_j q_j with B alpha = sigma(v), i.e. T = Q B^{-1} W'.
  // Restrict to dofs carrying L2(I) mass.
  const Mat MId = Mat(MI);
  std::vector<int> active;
  const double dmax = MId.diagonal().maxCoeff();
  for (int i = 0; i < host.dim; ++i)
    if (MId(i, i) > 1e-12 * dmax)
      active.push_back(i);
  const int na = static_cast<int>(active.size());
  Mat M(na, na);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < na; ++j)
      M(i, j) = MId(active[i], active[j]);

  Mat Binv = Mat::Identity(k, k);
  sys.B.triangularView<Eigen::Lower>().solveInPlace(Binv);
  Mat T(na, na);
  {
    Mat QB(na, k), W(na, k);
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < k; ++j) {
        QB(i, j) = sys.Q(active[i], j);
        W(i, j) = sys.weights(active[i], j);
      }
    T = QB * Binv * W.transpose();
  }

  Eigen::LLT<Mat> llt(M);
  HMR_REQUIRE(llt.info() == Eigen::Success,
              "lebesgue_bound: interval mass not SPD on active dofs");
  const Mat Lm = llt.matrixL();
  // norm_M(T) = sigma_max(L' T L^{-T})
  Mat G = Lm.transpose() * T;
  G = Lm.triangularView<Eigen::Lower>()
          .solve(G.transpose())
          .transpose(); // G L^{-T}
  Eigen::JacobiSVD<Mat> svd(G);
  return svd.singularValues()[0];
}

double linf_lebesgue(const InterpSystem &sys, const HostSpace &host) {
  (void)host;
  return sys.Theta.cwiseAbs().rowwise().sum().maxCoeff();
}

} // namespace hmr
