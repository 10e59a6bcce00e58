// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/studies.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitValidation = 4;

hmr::Config load_config(const std::string &path,
                        const std::vector<std::string> &overrides,
                        std::uint64_t seed, bool seed_set, int threads,
                        bool threads_set) {
  hmr::Config cfg = path.empty() ? hmr::Config::from_string("")
                                 : hmr::Config::from_file(path);
  for (const auto &kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw hmr::HmrError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed_set)
    cfg.set("seed", std::to_string(seed));
  if (threads_set)
    cfg.set("threads", std::to_string(threads));
  return cfg;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"hmr: hierarchical model reduction for nonlinear elliptic "
               "PDEs on tensor-product domains"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", archive_path, study_kind;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int threads = 1;
  int m_solve = -1, k_solve = -1;
  std::string testcase_flag;
  int NH_flag = -1, nh_flag = -1;

  auto add_common = [&](CLI::App *cmd) {
    cmd->add_option("--config", config_path, "configuration file");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "RNG seed override");
    cmd->add_option("--threads", threads, "worker thread cap");
    cmd->add_option("--set", overrides, "config override key=value");
  };

  CLI::App *offline = app.add_subcommand("offline",
                                         "train and build the reduced bases");
  add_common(offline);

  CLI::App *solve = app.add_subcommand("solve",
                                       "solve the reduced problem");
  add_common(solve);
  solve->add_option("--archive", archive_path, "offline archive (.hmr)");
  solve->add_option("--m", m_solve, "model order (default: all modes)");
  solve->add_option("--k", k_solve, "collateral size (default: production)");

  CLI::App *reference = app.add_subcommand("reference",
                                           "full 2D FEM reference solve");
  add_common(reference);
  reference->add_option("--testcase", testcase_flag, "tc1|tc2");
  reference->add_option("--NH", NH_flag, "elements in x");
  reference->add_option("--nh", nh_flag, "elements in y");

  CLI::App *study = app.add_subcommand("study", "paper studies");
  add_common(study);
  study->add_option("kind", study_kind,
                    "convergence|landscape|infsup|runtime|epm-bounds")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    hmr::Config cfg =
        load_config(config_path, overrides, seed, offline->count("--seed") ||
                                                      solve->count("--seed") ||
                                                      reference->count("--seed") ||
                                                      study->count("--seed"),
                    threads, offline->count("--threads") ||
                                 solve->count("--threads") ||
                                 reference->count("--threads") ||
                                 study->count("--threads"));
    if (!testcase_flag.empty())
      cfg.set("testcase", testcase_flag);
    if (NH_flag > 0)
      cfg.set("mesh.NH", std::to_string(NH_flag));
    if (nh_flag > 0)
      cfg.set("mesh.nh", std::to_string(nh_flag));

    std::filesystem::create_directories(out_dir);

    if (*offline) {
      hmr::write_manifest(cfg, out_dir, "offline");
      hmr::OfflineModel M = hmr::build_offline(cfg);
      hmr::save_archive(out_dir + "/offline.hmr", M);
      std::ofstream log(out_dir + "/offline.log");
      for (const auto &line : M.log)
        log << line << "\n";
      std::cout << "offline: m=" << M.m_max_available()
                << " n_train=" << M.n_train << " Q=" << M.Q << " -> "
                << out_dir << "/offline.hmr\n";
    } else if (*solve) {
      hmr::write_manifest(cfg, out_dir, "solve");
      hmr::OfflineModel M = archive_path.empty()
                                ? hmr::build_offline(cfg)
                                : hmr::load_archive(archive_path);
      const int m = m_solve > 0 ? m_solve : M.m_max_available();
      hmr::OnlineOperator op = hmr::make_online(M, m, k_solve);
      hmr::ReducedSolution sol =
          hmr::newton_solve(op, hmr::Vec(),
                            hmr::newton_options_from_config(cfg));
      if (!sol.converged) {
        std::cerr << "solve: Newton did not converge; residual history:";
        for (double r : sol.residual_history)
          std::cerr << " " << r;
        std::cerr << "\n";
        return kExitSolver;
      }
      std::ofstream out(out_dir + "/solution.txt");
      out.precision(17);
      out << "# reduced solution coefficients, m x NH\n";
      out << sol.coeffs << "\n";
      std::cout << "solve: m=" << m << " converged in "
                << sol.residual_history.size() - 1 << " iterations\n";
    } else if (*reference) {
      hmr::write_manifest(cfg, out_dir, "reference");
      const hmr::TestCase tc = hmr::test_case_from_config(cfg);
      const int NH = cfg.get_int("mesh.NH", 100);
      const int nh = cfg.get_int("mesh.nh", 50);
      hmr::ReferenceContext ctx = hmr::make_reference_context(tc, NH, nh);
      hmr::NewtonOptions opt = hmr::newton_options_from_config(cfg);
      opt.max_iter = std::max(opt.max_iter, 50);
      hmr::ReferenceSolution sol = hmr::solve_reference(ctx, opt);
      if (!sol.converged)
        return kExitSolver;
      std::ofstream out(out_dir + "/reference.txt");
      out.precision(17);
      out << "# reference nodal values, interior nodes, x-fastest\n";
      out << sol.values << "\n";
      std::cout << "reference: " << ctx.space.dim << " unknowns, "
                << sol.residual_history.size() - 1 << " Newton iterations\n";
    } else if (*study) {
      if (study_kind == "convergence")
        hmr::run_convergence(cfg, out_dir);
      else if (study_kind == "landscape")
        hmr::run_landscape(cfg, out_dir);
      else if (study_kind == "infsup")
        hmr::run_infsup(cfg, out_dir);
      else if (study_kind == "runtime")
        hmr::run_runtime(cfg, out_dir);
      else if (study_kind == "epm-bounds")
        hmr::run_epm_bounds(cfg, out_dir);
      else {
        std::cerr << "unknown study kind '" << study_kind << "'\n";
        return kExitConfig;
      }
      std::cout << "study " << study_kind << ": results in " << out_dir
                << "\n";
    }
  } catch (const hmr::HmrError &e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    if (what.find("config") != std::string::npos)
      return kExitConfig;
    if (what.find("archive") != std::string::npos)
      return kExitValidation;
    return kExitSolver;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
