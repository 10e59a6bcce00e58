// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/offline.hpp"

namespace hmr {

TestCase test_case_from_config(const Config &cfg) {
  const std::string tag = cfg.get_str("testcase", "tc1");
  HMR_REQUIRE(tag == "tc1" || tag == "tc2",
              "config: testcase must be tc1 or tc2");
  const int Q = cfg.get_int("transverse.Q0", 1);
  std::optional<double> c0, c4;
  if (cfg.has("c0"))
    c0 = cfg.get_double("c0", 0.0);
  if (cfg.has("c4"))
    c4 = cfg.get_double("c4", 0.0);
  TestCase tc = make_test_case(tag == "tc1" ? TestCaseTag::TC1
                                            : TestCaseTag::TC2,
                               c0, c4, Q);
  if (auto p = cfg.get_pair("I0"))
    tc.box_I0 = {p->first, p->second};
  if (auto p = cfg.get_pair("I1"))
    tc.box_I1 = {p->first, p->second};
  return tc;
}

TrainingHyperparams hyperparams_from_config(const Config &cfg,
                                            const TestCase &tc, int Q) {
  TrainingHyperparams hp = default_hyperparams(tc, Q);
  hp.m_max = cfg.get_int("train.m_max", hp.m_max);
  hp.i_max = cfg.get_int("train.i_max", hp.i_max);
  hp.n_xi = cfg.get_int("train.n_xi", hp.n_xi);
  hp.n_c = cfg.get_int("train.n_c", hp.n_c);
  hp.theta = cfg.get_double("train.theta", hp.theta);
  hp.sigma_thres = cfg.get_double("train.sigma_thres", hp.sigma_thres);
  hp.NHprime = cfg.get_int("train.NHprime", hp.NHprime);
  hp.tol_hmr = cfg.get_double("tol.hmr", hp.tol_hmr);
  hp.tol_epm = cfg.get_double("tol.epm", hp.tol_epm);
  hp.tol_err = cfg.get_double("tol.err", hp.tol_err);
  hp.tol_c = cfg.get_double("tol.c", hp.tol_c);
  hp.tol_kprime = cfg.get_double("tol.kprime", hp.tol_kprime);
  hp.eps_int = cfg.get_double("epm.eps_int", hp.eps_int);
  hp.n_max_int = cfg.get_int("epm.n_max_int", hp.n_max_int);
  const std::string mode = cfg.get_str("epm.mode", "eim");
  HMR_REQUIRE(mode == "eim" || mode == "geim",
              "config: epm.mode must be eim or geim");
  hp.dict_kind = mode == "eim" ? Dictionary::Kind::PointEval
                               : Dictionary::Kind::LocalAverage;
  hp.dict_depth = cfg.get_int("epm.dict_depth", hp.dict_depth);
  hp.Q0 = Q;
  hp.Qmax = cfg.get_int("transverse.Qmax", hp.Qmax);
  hp.p_exponent = cfg.get_double("brr.p_exponent", hp.p_exponent);
  hp.seed = cfg.get_u64("seed", hp.seed);
  hp.threads = cfg.get_int("threads", hp.threads);
  return hp;
}

NewtonOptions newton_options_from_config(const Config &cfg) {
  NewtonOptions opt;
  opt.tol = cfg.get_double("solver.tol_newton", opt.tol);
  opt.max_iter = cfg.get_int("solver.max_iter", opt.max_iter);
  const std::string lin = cfg.get_str("solver.linear", "auto");
  if (lin == "direct")
    opt.force_direct = true;
  else if (lin == "krylov")
    opt.force_krylov = true;
  else
    HMR_REQUIRE(lin == "auto", "config: solver.linear must be "
                               "direct|krylov|auto");
  return opt;
}

OfflineModel build_offline(const Config &cfg) {
  OfflineModel M;
  M.tc = test_case_from_config(cfg);
  M.NH = cfg.get_int("mesh.NH", 100);
  M.nh = cfg.get_int("mesh.nh", 50);
  M.ctx = make_transverse_context(M.tc, M.nh);
  M.space_x = make_fe_space_1d(
      build_interval_mesh(M.tc.domain.x0, M.tc.domain.x1, M.NH),
      Boundary::ZeroTrace);
  const int Q0 = cfg.get_int("transverse.Q0", 1);
  M.hp = hyperparams_from_config(cfg, M.tc, Q0);
  M.seed = M.hp.seed;

  TrainingOutput out = adaptive_train_extension(M.tc, M.ctx, M.hp);
  M.Q = out.Q;
  M.n_train = out.n_train;
  M.spaces = build_spaces(out, M.ctx, M.hp);
  M.log = out.log;
  for (const auto &line : M.spaces.log)
    M.log.push_back(line);
  return M;
}

OfflineModel offline_from_parts(const TestCase &tc, int NH, int nh,
                                const TrainingHyperparams &hp, int Q,
                                int n_train, OfflineSpaces spaces) {
  OfflineModel M;
  M.tc = tc;
  M.NH = NH;
  M.nh = nh;
  M.ctx = make_transverse_context(M.tc, nh);
  M.space_x = make_fe_space_1d(
      build_interval_mesh(tc.domain.x0, tc.domain.x1, NH),
      Boundary::ZeroTrace);
  M.hp = hp;
  M.Q = Q;
  M.n_train = n_train;
  M.seed = hp.seed;
  M.spaces = std::move(spaces);
  return M;
}

OnlineOperator make_online(const OfflineModel &M, int m, int k,
                           bool enriched) {
  HMR_REQUIRE(m >= 1 && m <= M.m_max_available(),
              "make_online: m out of range");
  const Mat Y = M.spaces.podY.basis.leftCols(m);
  const auto &units = enriched ? M.spaces.units_kp : M.spaces.units;
  std::array<CollateralUnit, kNumComponents> local;
  for (int c = 0; c < kNumComponents; ++c) {
    local[c] = units[c];
    if (k > 0 && (c == kCompXFlux || c == kCompYFlux) &&
        k < local[c].proj.k())
      local[c].proj = truncate_projector(local[c].proj, *local[c].host, k);
  }
  return precompute_tensors(Y, M.ctx.space_y0, M.space_x, M.tc, local[0],
                            local[1], local[2], local[3], local[4]);
}

} // namespace hmr
