// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_COMMON_HPP
#define HMR_COMMON_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

class HmrError : public std::runtime_error {
public:
  explicit HmrError(const std::string &msg) : std::runtime_error(msg) {}
};

#define HMR_REQUIRE(cond, msg)                                                 \
  do {                                                                         \
    if (!(cond))                                                               \
      throw ::hmr::HmrError(std::string(msg));                                 \
  } while (0)

// 3-point Gauss-Legendre rule on [0,1]; integrates polynomials up to degree 5
// exactly, which covers every P1/Q1 product appearing in the assembly.
struct GaussRule {
  static constexpr int n = 3;
  double pts[3];
  double wts[3];
  GaussRule() {
    const double s = 0.5 * std::sqrt(3.0 / 5.0);
    pts[0] = 0.5 - s;
    pts[1] = 0.5;
    pts[2] = 0.5 + s;
    wts[0] = 5.0 / 18.0;
    wts[1] = 8.0 / 18.0;
    wts[2] = 5.0 / 18.0;
  }
};

inline const GaussRule &gauss3() {
  static const GaussRule rule;
  return rule;
}

// Counter-based RNG (splitmix64 core). Streams are keyed, so samples drawn
// for one cell/index never depend on evaluation order elsewhere.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1))), counter_(0) {}

  std::uint64_t next_u64() {
    std::uint64_t z = key_ + 0x9e3779b97f4a7c15ULL * (++counter_);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

} // namespace hmr

#endif // HMR_COMMON_HPP
