// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_TRAINING_HPP
#define HMR_TRAINING_HPP

#include "hmr/error_estimation.hpp"
#include "hmr/reduced.hpp"

namespace hmr {

struct TrainingHyperparams {
  int m_max = 2;
  int i_max = 2;
  int n_xi = 10; // per-cell training-set size
  int n_c = 50;  // total coarse bootstrap sample count
  double theta = 0.05;
  double sigma_thres = -1.0; // < 0: per-initial-cell formula
  bool sigma_formula_uses_imax = false; // thres = (i_max-1[+1])*ceil(diam)+1
  int NHprime = 10;
  double tol_hmr = 1e-5;
  double tol_epm = 1e-7;
  double tol_err = 1e-9;
  double tol_c = 0.1;
  double tol_kprime = 1e-2;
  double eps_int = 0.0;
  int n_max_int = 0;
  Dictionary::Kind dict_kind = Dictionary::Kind::PointEval;
  int dict_depth = 6;
  int Q0 = 1;
  int Qmax = 2;
  double p_exponent = 4.0; // exponent in the inverse-estimate constant c_h
  std::uint64_t seed = 0;
  int threads = 1;
};

TrainingHyperparams default_hyperparams(const TestCase &tc, int Q);

// Hyper-rectangular possibly non-conforming parameter grid.
struct GridCell {
  Vec lo, hi;
  int rho = 0;
  double sigma_thres = 0.0;
  std::vector<int> sample_ids;

  double diam() const { return (hi - lo).norm(); }
  double sigma() const { return diam() * rho; }
  double volume() const { return (hi - lo).prod(); }
};

struct ParameterGrid {
  std::vector<GridCell> cells;
  int dim() const { return cells.empty() ? 0 : int(cells[0].lo.size()); }
};

// Bisect a cell in every direction: 2^P children tiling the parent.
std::vector<GridCell> bisect_cell(const GridCell &cell);

// theta-fraction smallest-eta cells plus all sigma-exceeding cells.
std::vector<int> mark_cells(const std::vector<double> &eta,
                            const std::vector<double> &sigma,
                            const std::vector<double> &sigma_thres,
                            double theta);

// Raise Q when the coefficient decay lags the eigenvalue decay by >= 50%
// on some window of 5 consecutive indices.
int qp_indicator(const Vec &pod_eigenvalues, const Vec &coeff_norms_sq, int Q,
                 int Qmax, std::string *note = nullptr);

struct TrainingOutput {
  Mat solution_manifold; // n_y0 x n
  std::array<Mat, kNumComponents> operator_manifold;
  std::vector<ParameterPoint> xi;
  int Q = 1;
  int n_train = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> log;
};

TrainingOutput adaptive_train_extension(const TestCase &tc,
                                        const TransverseContext &ctx,
                                        const TrainingHyperparams &hp);

// Algorithm-5 output: the reduction space and, per component, collateral
// units at the production tolerance and at the enriched (estimator) one.
struct OfflineSpaces {
  PodResult podY;
  std::array<CollateralUnit, kNumComponents> units;    // eps_epm
  std::array<CollateralUnit, kNumComponents> units_kp; // tol_kprime*eps_epm
  std::vector<std::string> log;
};

OfflineSpaces build_spaces(const TrainingOutput &out,
                           const TransverseContext &ctx,
                           const TrainingHyperparams &hp);

} // namespace hmr

#endif // HMR_TRAINING_HPP
