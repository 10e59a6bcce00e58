// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_OFFLINE_HPP
#define HMR_OFFLINE_HPP

#include "hmr/config.hpp"
#include "hmr/training.hpp"

namespace hmr {

// Everything the online phase needs: spaces, bases, collateral units.
struct OfflineModel {
  TestCase tc;
  int NH = 0;
  int nh = 0;
  TransverseContext ctx;
  FESpace1D space_x;
  TrainingHyperparams hp;
  int Q = 1;
  int n_train = 0;
  std::uint64_t seed = 0;
  OfflineSpaces spaces;
  std::vector<std::string> log;

  int m_max_available() const {
    return static_cast<int>(spaces.podY.basis.cols());
  }
};

TrainingHyperparams hyperparams_from_config(const Config &cfg,
                                            const TestCase &tc, int Q);

TestCase test_case_from_config(const Config &cfg);

// Full offline pipeline: training (Algorithm 4) + space construction
// (Algorithm 5).
OfflineModel build_offline(const Config &cfg);

// As build_offline but from precomputed parts (after an archive load).
OfflineModel offline_from_parts(const TestCase &tc, int NH, int nh,
                                const TrainingHyperparams &hp, int Q,
                                int n_train, OfflineSpaces spaces);

// Online operator with Y truncated to m and residual units truncated to k
// (k <= 0 keeps the production size). enriched = use the k' units.
OnlineOperator make_online(const OfflineModel &M, int m, int k = -1,
                           bool enriched = false);

NewtonOptions newton_options_from_config(const Config &cfg);

} // namespace hmr

#endif // HMR_OFFLINE_HPP
