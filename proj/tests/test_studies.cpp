// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/studies.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace hmr;

namespace {

Config small_tc1_config() {
  return Config::from_string(R"(
testcase = tc1
mesh.NH = 24
mesh.nh = 20
train.m_max = 1
train.i_max = 1
train.n_xi = 4
train.n_c = 10
train.NHprime = 6
tol.hmr = 1e-5
tol.epm = 1e-7
seed = 9
)");
}

} // namespace

TEST_CASE("convergence study: m=0 row and monotone start") {
  OfflineModel M = build_offline(small_tc1_config());
  auto rows = convergence_study(M, 4);
  REQUIRE(rows.size() >= 2);
  CHECK(rows[0].m == 0);
  CHECK(rows[0].rel_h1_model == 1.0);
  CHECK(rows[0].rel_l2_model == 1.0);
  REQUIRE(rows[1].solved);
  CHECK(rows[1].rel_h1_model < 1.0);
  // tau reported, delta withheld when tau >= 1
  if (rows[1].tau >= 1.0)
    CHECK(std::isnan(rows[1].delta));
}

TEST_CASE("landscape study: smallest cell finite") {
  OfflineModel M = build_offline(small_tc1_config());
  auto cells = landscape_study(M, {1}, {1});
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].m == 1);
  CHECK(cells[0].k == 1);
  if (cells[0].solved)
    CHECK(std::isfinite(cells[0].rel_h1_model));
}

TEST_CASE("epm bounds study on a synthetic rank-r manifold") {
  const int nh = 64;
  HostSpace host = make_host_p1_free(build_interval_mesh(0, 1, nh));
  // rank-3 manifold
  Mat modes(host.dim, 3);
  for (int i = 0; i < host.dim; ++i) {
    const double y = host.site(i);
    modes(i, 0) = std::sin(M_PI * y);
    modes(i, 1) = std::sin(2 * M_PI * y);
    modes(i, 2) = y * (1 - y) * (0.5 - y);
  }
  CounterRng rng(3);
  Mat manifold(host.dim, 30);
  for (int j = 0; j < 30; ++j) {
    Vec c(3);
    for (int i = 0; i < 3; ++i)
      c[i] = rng.uniform(-1, 1);
    manifold.col(j) = modes * c;
  }
  auto rows = epm_bounds_study(manifold, host, Dictionary::point_eval(),
                               {1, 2, 3}, 1e-14, 2);
  REQUIRE(rows.size() == 3);
  // at k = rank: error and bounds vanish (up to roundoff)
  CHECK(rows[2].true_proj_error < 1e-10);
  CHECK(rows[2].apriori < 1e-6);
  // bounds dominate the truth above the roundoff floor
  for (const auto &r : rows) {
    if (r.true_proj_error < 1e-12)
      continue;
    CHECK(r.apriori >= r.true_proj_error * (1 - 1e-9));
    if (!std::isnan(r.aposteriori))
      CHECK(r.aposteriori >= r.true_proj_error * (1 - 1e-9));
  }
}

TEST_CASE("loglog slope") {
  std::vector<double> x = {50, 100, 200, 400};
  std::vector<double> y;
  for (double v : x)
    y.push_back(3.0 * v * v);
  CHECK(loglog_slope(x, y) == doctest::Approx(2.0));
}

TEST_CASE("study drivers write schema-versioned artifacts") {
  const std::string dir = "/tmp/hmr_study_test";
  std::filesystem::remove_all(dir);
  Config cfg = small_tc1_config();
  cfg.set("study.m_hi", "2");
  run_convergence(cfg, dir);
  CHECK(std::filesystem::exists(dir + "/manifest.txt"));
  CHECK(std::filesystem::exists(dir + "/convergence.csv"));
  CHECK(std::filesystem::exists(dir + "/convergence.svg"));
  CHECK(std::filesystem::exists(dir + "/offline.hmr"));
  std::ifstream csv(dir + "/convergence.csv");
  std::string first;
  std::getline(csv, first);
  CHECK(first == "# schema: convergence v1");
  std::string head;
  std::getline(csv, head);
  // 11 columns
  CHECK(std::count(head.begin(), head.end(), ',') == 10);
  std::filesystem::remove_all(dir);
}
