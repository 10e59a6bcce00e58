// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_STUDIES_HPP
#define HMR_STUDIES_HPP

#include "hmr/offline.hpp"
#include "hmr/persistence.hpp"

namespace hmr {

struct ConvergenceRow {
  int m = 0;
  int k = 0;
  double rel_h1_model = 1.0;
  double rel_l2_model = 1.0;
  double rel_h1_total = 1.0;
  double pod_tail = 0.0;
  double coeff_tail = 0.0;
  double tau = 0.0;
  double delta = std::numeric_limits<double>::quiet_NaN();
  double c_err = 0.0;
  double beta = 0.0;
  double rel_h1_ref = 0.0; // |p^{HxH}|_{H1} (denominator of tau_rel)
  bool solved = false;
};

// m-sweep at the production collateral size; tau/delta/c_err via the BRR
// machinery with the enriched units.
std::vector<ConvergenceRow> convergence_study(const OfflineModel &M,
                                              int m_hi,
                                              const NewtonOptions &opt = {},
                                              bool with_estimator = true,
                                              double p_exponent = 4.0);

struct LandscapeCell {
  int m = 0;
  int k = 0;
  double rel_h1_model = 0.0;
  bool solved = false;
};

std::vector<LandscapeCell> landscape_study(const OfflineModel &M,
                                           const std::vector<int> &ms,
                                           const std::vector<int> &ks,
                                           const NewtonOptions &opt = {});

struct InfsupRow {
  int m = 0;
  double eps_epm = 0.0;
  double beta_app = 0.0;
  double beta_exact = 0.0; // NaN when skipped
  double rel_gap = 0.0;
};

// Reuses one training run; per eps_epm the spaces are re-truncated.
std::vector<InfsupRow> infsup_study(const TrainingOutput &training,
                                    const TestCase &tc, int NH, int nh,
                                    const TrainingHyperparams &hp_base,
                                    const std::vector<double> &eps_list,
                                    const std::vector<int> &ms,
                                    bool with_exact, int exact_dim_limit);

struct RuntimeRow {
  int NH = 0;
  int nh = 0;
  double t_fem = 0.0;      // seconds, median over repetitions
  double t_rbhmr = 0.0;    // offline + online, median
  double t_offline = 0.0;
  double t_online = 0.0;
};

std::vector<RuntimeRow> runtime_study(const Config &cfg,
                                      const std::vector<int> &NH_list,
                                      int repetitions);

// Least-squares slope of log(t) vs log(NH).
double loglog_slope(const std::vector<double> &x,
                    const std::vector<double> &y);

struct EpmBoundsRow {
  int k = 0;
  double pod_tail = 0.0;        // (sum_{l>k} lambda)^{1/2}
  double coeff_tail = 0.0;      // discrete coefficient tail
  double true_proj_error = 0.0; // oracle
  double apriori = 0.0;
  double aposteriori = 0.0;
  double e_int = 0.0;
};

std::vector<EpmBoundsRow> epm_bounds_study(const Mat &manifold,
                                           const HostSpace &host,
                                           const Dictionary &dict,
                                           const std::vector<int> &ks,
                                           double eps_int, int n_max_int);

// CLI-facing wrappers: run the study and write manifest/CSV/SVG artifacts.
void run_convergence(const Config &cfg, const std::string &out_dir);
void run_landscape(const Config &cfg, const std::string &out_dir);
void run_infsup(const Config &cfg, const std::string &out_dir);
void run_runtime(const Config &cfg, const std::string &out_dir);
void run_epm_bounds(const Config &cfg, const std::string &out_dir);

void write_manifest(const Config &cfg, const std::string &out_dir,
                    const std::string &study);

} // namespace hmr

#endif // HMR_STUDIES_HPP
