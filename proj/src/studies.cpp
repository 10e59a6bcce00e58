// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/studies.hpp"
#include "hmr/svg.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace hmr {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Vec zero_pad(const ReducedSolution &prev, int m, int NH) {
  Vec u = Vec::Zero(m * NH);
  if (prev.coeffs.size() > 0)
    for (int t = 0; t < std::min<int>(m, prev.coeffs.rows()); ++t)
      u.segment(t * NH, NH) = prev.coeffs.row(t);
  return u;
}

// Oracle for the relative H1-semi total error: the exact solution (TC1) or
// a nested twice-refined FE solution (TC2), built lazily once per study.
struct TotalErrorOracle {
  const OfflineModel *M = nullptr;
  std::unique_ptr<ReferenceContext> fine;
  Vec fine_values;

  double eval(const ReferenceContext &ref, const Mat &coeffs, const Mat &Y) {
    const Vec field = reconstruct(coeffs, Y, ref.space);
    if (M->tc.exact.has_value())
      return error_vs_exact(ref.space, field, tc1_exact_field()).first;
    if (!fine) {
      fine = std::make_unique<ReferenceContext>(
          make_reference_context(M->tc, 2 * M->NH, 2 * M->nh));
      NewtonOptions opt;
      opt.max_iter = 50;
      ReferenceSolution sol = solve_reference(*fine, opt);
      HMR_REQUIRE(sol.converged, "total_error: fine reference diverged");
      fine_values = sol.values;
    }
    Vec lifted = Vec::Zero(fine->space.dim);
    for (int iy = 0; iy < fine->space.ny; ++iy)
      for (int ix = 0; ix < fine->space.nx; ++ix) {
        const double x = fine->space.mesh.mesh_x.nodes[ix + 1];
        const double y = fine->space.mesh.mesh_y.nodes[iy + 1];
        lifted[fine->space.dof(ix, iy)] = eval_field(ref.space, field, x, y);
      }
    return error_norms(fine_values, lifted, fine->space).first;
  }
};

} // namespace

std::vector<ConvergenceRow> convergence_study(const OfflineModel &M,
                                              int m_hi,
                                              const NewtonOptions &opt,
                                              bool with_estimator,
                                              double p_exponent) {
  const int m_max = std::min(m_hi, M.m_max_available());
  ReferenceContext ref = make_reference_context(M.tc, M.NH, M.nh);
  NewtonOptions ref_opt = opt;
  ref_opt.max_iter = std::max(opt.max_iter, 50);
  ReferenceSolution truth = solve_reference(ref, ref_opt);
  HMR_REQUIRE(truth.converged, "convergence_study: reference diverged");

  TotalErrorOracle total;
  total.M = &M;

  std::vector<ConvergenceRow> rows;
  {
    ConvergenceRow r0;
    r0.m = 0;
    r0.k = 0;
    r0.pod_tail = std::sqrt(M.spaces.podY.tail(0));
    r0.solved = true;
    rows.push_back(r0);
  }

  ReducedSolution prev;
  std::vector<ReducedSolution> sols(m_max + 1);
  for (int m = 1; m <= m_max; ++m) {
    ConvergenceRow row;
    row.m = m;
    OnlineOperator op = make_online(M, m);
    row.k = op.xflux.P.cols();
    ReducedSolution sol =
        newton_solve(op, zero_pad(prev, m, M.space_x.dim), opt);
    row.solved = sol.converged;
    row.rel_h1_ref =
        std::sqrt(truth.values.dot(ref.space.h1_semi_gram * truth.values));
    if (sol.converged) {
      prev = sol;
      sols[m] = sol;
      const Vec field = reconstruct(sol.coeffs, op.Y, ref.space);
      auto [h1, l2] = error_norms(truth.values, field, ref.space);
      row.rel_h1_model = h1;
      row.rel_l2_model = l2;
      row.rel_h1_total = total.eval(ref, sol.coeffs, op.Y);
      row.pod_tail = std::sqrt(M.spaces.podY.tail(m));
      if (with_estimator) {
        const Vec u = sol.flattened();
        OnlineOperator opp = make_online(M, m, -1, true);
        auto [emod, eepm] = dual_norms(op, opp, ref, u);
        ConstantEstimates est = estimate_constants(op, ref, u, p_exponent);
        const double beta = approx_infsup(opp, ref, u);
        BrrReport rep = brr_assemble(emod, eepm, beta, est.lipschitz,
                                     est.c_h, est.gamma);
        row.tau = rep.tau;
        row.delta = rep.delta;
        row.c_err = rep.c_err;
        row.beta = beta;
      }
    }
    rows.push_back(row);
  }

  // coefficient tails from the largest solved m
  for (int m = m_max; m >= 1; --m) {
    if (!sols[m].converged)
      continue;
    const Mat &C = sols[m].coeffs;
    const Mat Mx = Mat(M.space_x.mass);
    Vec norms(m);
    for (int t = 0; t < m; ++t)
      norms[t] = C.row(t) * Mx * C.row(t).transpose();
    for (auto &row : rows) {
      if (row.m >= m)
        continue;
      double tail = 0.0;
      for (int t = row.m; t < m; ++t)
        tail += norms[t];
      row.coeff_tail = std::sqrt(tail);
    }
    break;
  }
  return rows;
}

std::vector<LandscapeCell> landscape_study(const OfflineModel &M,
                                           const std::vector<int> &ms,
                                           const std::vector<int> &ks,
                                           const NewtonOptions &opt) {
  ReferenceContext ref = make_reference_context(M.tc, M.NH, M.nh);
  NewtonOptions ref_opt = opt;
  ref_opt.max_iter = std::max(opt.max_iter, 50);
  ReferenceSolution truth = solve_reference(ref, ref_opt);
  HMR_REQUIRE(truth.converged, "landscape_study: reference diverged");

  std::vector<LandscapeCell> cells;
  for (int k : ks) {
    ReducedSolution prev;
    for (int m : ms) {
      LandscapeCell cell;
      cell.m = std::min(m, M.m_max_available());
      cell.k = k;
      try {
        OnlineOperator op = make_online(M, cell.m, k);
        ReducedSolution sol =
            newton_solve(op, zero_pad(prev, cell.m, M.space_x.dim), opt);
        cell.solved = sol.converged;
        if (sol.converged) {
          prev = sol;
          const Vec field = reconstruct(sol.coeffs, op.Y, ref.space);
          cell.rel_h1_model = error_norms(truth.values, field, ref.space).first;
        }
      } catch (const std::exception &) {
        cell.solved = false; // unstable cell flagged, not fatal
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::vector<InfsupRow> infsup_study(const TrainingOutput &training,
                                    const TestCase &tc, int NH, int nh,
                                    const TrainingHyperparams &hp_base,
                                    const std::vector<double> &eps_list,
                                    const std::vector<int> &ms,
                                    bool with_exact, int exact_dim_limit) {
  TransverseContext ctx = make_transverse_context(tc, nh);
  std::vector<InfsupRow> rows;
  for (double eps : eps_list) {
    TrainingHyperparams hp = hp_base;
    hp.tol_epm = eps;
    OfflineSpaces spaces = build_spaces(training, ctx, hp);
    OfflineModel M = offline_from_parts(tc, NH, nh, hp, training.Q,
                                        training.n_train, std::move(spaces));
    ReferenceContext ref = make_reference_context(tc, NH, nh);
    ReducedSolution prev;
    for (int m : ms) {
      if (m > M.m_max_available())
        continue;
      InfsupRow row;
      row.m = m;
      row.eps_epm = eps;
      OnlineOperator op = make_online(M, m);
      ReducedSolution sol =
          newton_solve(op, zero_pad(prev, m, M.space_x.dim));
      if (!sol.converged)
        continue;
      prev = sol;
      const Vec u = sol.flattened();
      OnlineOperator opp = make_online(M, m, -1, true);
      row.beta_app = approx_infsup(opp, ref, u);
      if (with_exact && ref.space.dim <= exact_dim_limit) {
        const Vec field = reconstruct(sol.coeffs, op.Y, ref.space);
        row.beta_exact = exact_infsup(ref, field);
        row.rel_gap = std::abs(row.beta_app - row.beta_exact) /
                      std::abs(row.beta_exact);
      } else {
        row.beta_exact = std::numeric_limits<double>::quiet_NaN();
        row.rel_gap = std::numeric_limits<double>::quiet_NaN();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

double loglog_slope(const std::vector<double> &x,
                    const std::vector<double> &y) {
  HMR_REQUIRE(x.size() == y.size() && x.size() >= 2,
              "loglog_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<RuntimeRow> runtime_study(const Config &cfg,
                                      const std::vector<int> &NH_list,
                                      int repetitions) {
  std::vector<RuntimeRow> rows;
  for (int NH : NH_list) {
    RuntimeRow row;
    row.NH = NH;
    row.nh = NH / 2;
    std::vector<double> t_fem, t_rb, t_off, t_on;
    for (int rep = 0; rep < repetitions; ++rep) {
      Config c = cfg;
      c.set("mesh.NH", std::to_string(NH));
      c.set("mesh.nh", std::to_string(row.nh));
      c.set("seed", std::to_string(cfg.get_u64("seed", 0) + rep));

      // full 2D FEM solve
      {
        const TestCase tc = test_case_from_config(c);
        const double t0 = now_seconds();
        ReferenceContext ref = make_reference_context(tc, NH, row.nh);
        NewtonOptions opt = newton_options_from_config(c);
        opt.max_iter = std::max(opt.max_iter, 50);
        ReferenceSolution sol = solve_reference(ref, opt);
        HMR_REQUIRE(sol.converged, "runtime_study: FEM diverged");
        t_fem.push_back(now_seconds() - t0);
      }
      // complete RB-HMR: offline construction plus the online solve
      {
        const double t0 = now_seconds();
        OfflineModel M = build_offline(c);
        const double t1 = now_seconds();
        const int m = M.m_max_available();
        OnlineOperator op = make_online(M, m);
        ReducedSolution sol =
            newton_solve(op, Vec(), newton_options_from_config(c));
        HMR_REQUIRE(sol.converged, "runtime_study: RB-HMR diverged");
        const double t2 = now_seconds();
        t_off.push_back(t1 - t0);
        t_on.push_back(t2 - t1);
        t_rb.push_back(t2 - t0);
      }
    }
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      return v[v.size() / 2];
    };
    row.t_fem = median(t_fem);
    row.t_rbhmr = median(t_rb);
    row.t_offline = median(t_off);
    row.t_online = median(t_on);
    rows.push_back(row);
  }
  return rows;
}

std::vector<EpmBoundsRow> epm_bounds_study(const Mat &manifold,
                                           const HostSpace &host,
                                           const Dictionary &dict,
                                           const std::vector<int> &ks,
                                           double eps_int, int n_max_int) {
  PodResult pod = compute_pod(manifold, host.mass, PodTruncation::all());
  const int d = static_cast<int>(pod.basis.cols());
  const int n = static_cast<int>(manifold.cols());

  std::vector<EpmBoundsRow> rows;
  for (int k : ks) {
    if (k > d)
      break;
    EpmBoundsRow row;
    row.k = k;
    EpmProjector pk = run_adaptive_epm(pod.basis.leftCols(k), dict, manifold,
                                       eps_int, n_max_int, host,
                                       pod.eigenvalues);
    row.e_int = pk.e_int;
    row.pod_tail = std::sqrt(pod.tail(k));
    row.true_proj_error = discrete_projection_error(pk, host, manifold);
    row.apriori = apriori_bound(pod.tail(k), pk.e_int);

    // coefficient tail from the full-rank projector
    EpmProjector pfull = run_adaptive_epm(pod.basis, dict, manifold, eps_int,
                                          n_max_int, host, pod.eigenvalues);
    const Mat C = empirical_project(pfull, epm_observations(pfull, manifold));
    double tail = 0.0;
    for (int j = k; j < d; ++j)
      tail += C.row(j).squaredNorm() / n;
    row.coeff_tail = std::sqrt(tail);

    if (k < d) {
      int kp = std::min(d, k + 5);
      EpmProjector pkp =
          run_adaptive_epm(pod.basis.leftCols(kp), dict, manifold, eps_int,
                           n_max_int, host, pod.eigenvalues);
      int extra = n_max_int;
      while (pkp.L() <= pk.L() && extra < n_max_int + 6) {
        ++extra;
        pkp = run_adaptive_epm(pod.basis.leftCols(kp), dict, manifold,
                               eps_int * 0.5, extra, host, pod.eigenvalues);
      }
      if (pkp.L() > pk.L()) {
        auto ap = aposteriori_bound(pk, pkp, host, manifold);
        row.aposteriori =
            ap.eps_tol_used + ap.delta_epm + std::sqrt(pk.e_int);
      } else {
        row.aposteriori = std::numeric_limits<double>::quiet_NaN();
      }
    } else {
      row.aposteriori = row.apriori;
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CLI wrappers

namespace {

std::ofstream open_out(const std::string &out_dir, const std::string &name) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir + "/" + name);
  HMR_REQUIRE(out.good(), "study: cannot write " + out_dir + "/" + name);
  return out;
}

} // namespace

void write_manifest(const Config &cfg, const std::string &out_dir,
                    const std::string &study) {
  auto out = open_out(out_dir, "manifest.txt");
  out << "# hmr manifest\n";
  out << "study = " << study << "\n";
  out << cfg.dump();
}

void run_convergence(const Config &cfg, const std::string &out_dir) {
  write_manifest(cfg, out_dir, "convergence");
  OfflineModel M = build_offline(cfg);
  save_archive(out_dir + "/offline.hmr", M);
  const int m_hi = cfg.get_int("study.m_hi", 12);
  auto rows = convergence_study(M, m_hi, newton_options_from_config(cfg),
                                true, cfg.get_double("brr.p_exponent", 4.0));

  auto csv = open_out(out_dir, "convergence.csv");
  csv << "# schema: convergence v1\n";
  csv << "m,k,rel_h1_model,rel_l2_model,rel_h1_total,pod_tail,coeff_tail,"
         "tau,delta,c_err,solved\n";
  SvgSeries em{"rel H1 model error", {}}, tot{"rel H1 total error", {}},
      tail{"POD tail", {}};
  for (const auto &r : rows) {
    csv << r.m << "," << r.k << "," << r.rel_h1_model << "," << r.rel_l2_model
        << "," << r.rel_h1_total << "," << r.pod_tail << "," << r.coeff_tail
        << "," << r.tau << "," << r.delta << "," << r.c_err << ","
        << (r.solved ? 1 : 0) << "\n";
    if (r.m >= 1 && r.solved) {
      em.points.push_back({double(r.m), r.rel_h1_model});
      tot.points.push_back({double(r.m), r.rel_h1_total});
      tail.points.push_back({double(r.m), r.pod_tail});
    }
  }
  write_svg_plot(out_dir + "/convergence.svg", "model error convergence",
                 "m", "relative error", {em, tot, tail}, false, true);
}

void run_landscape(const Config &cfg, const std::string &out_dir) {
  write_manifest(cfg, out_dir, "landscape");
  OfflineModel M = build_offline(cfg);
  const int m_hi = std::min(cfg.get_int("study.m_hi", 10),
                            M.m_max_available());
  const int k_hi = cfg.get_int("study.k_hi", 25);
  std::vector<int> ms, ks;
  for (int m = 1; m <= m_hi; ++m)
    ms.push_back(m);
  const int k_full = M.spaces.units[kCompXFlux].proj.k();
  for (int k = 1; k <= std::min(k_hi, k_full); k += 2)
    ks.push_back(k);
  auto cells = landscape_study(M, ms, ks, newton_options_from_config(cfg));

  auto csv = open_out(out_dir, "landscape.csv");
  csv << "# schema: landscape v1\n";
  csv << "m,k,rel_h1_model,solved\n";
  for (const auto &c : cells)
    csv << c.m << "," << c.k << "," << c.rel_h1_model << ","
        << (c.solved ? 1 : 0) << "\n";
}

void run_infsup(const Config &cfg, const std::string &out_dir) {
  write_manifest(cfg, out_dir, "infsup");
  TestCase tc = test_case_from_config(cfg);
  const int NH = cfg.get_int("mesh.NH", 100);
  const int nh = cfg.get_int("mesh.nh", 50);
  TransverseContext ctx = make_transverse_context(tc, nh);
  TrainingHyperparams hp =
      hyperparams_from_config(cfg, tc, cfg.get_int("transverse.Q0", 1));
  TrainingOutput training = adaptive_train_extension(tc, ctx, hp);

  std::vector<double> eps_list = {1e-5, 1e-7};
  if (cfg.has("study.eps_epm"))
    eps_list = {cfg.get_double("study.eps_epm", 1e-5)};
  std::vector<int> ms = {1, 2, 3, 10};
  const bool with_exact = cfg.get_bool("brr.exact_infsup", true);
  const int limit = cfg.get_int("study.exact_dim_limit", 25000);
  auto rows = infsup_study(training, tc, NH, nh, hp, eps_list, ms, with_exact,
                           limit);

  auto csv = open_out(out_dir, "infsup.csv");
  csv << "# schema: infsup v1\n";
  csv << "m,eps_epm,beta_app,beta_exact,rel_gap\n";
  for (const auto &r : rows)
    csv << r.m << "," << r.eps_epm << "," << r.beta_app << "," << r.beta_exact
        << "," << r.rel_gap << "\n";
}

void run_runtime(const Config &cfg, const std::string &out_dir) {
  write_manifest(cfg, out_dir, "runtime");
  std::vector<int> NH_list = {50, 100, 200, 400};
  if (cfg.has("study.NH_list")) {
    NH_list.clear();
    std::istringstream in(cfg.get_str("study.NH_list", ""));
    int v;
    while (in >> v)
      NH_list.push_back(v);
  }
  const int reps = cfg.get_int("study.repetitions", 3);
  auto rows = runtime_study(cfg, NH_list, reps);

  auto csv = open_out(out_dir, "runtime.csv");
  csv << "# schema: runtime v1\n";
  csv << "NH,nh,t_fem,t_rbhmr,t_offline,t_online\n";
  SvgSeries fem{"2D FEM", {}}, rb{"RB-HMR total", {}};
  std::vector<double> xs, yf, yr;
  for (const auto &r : rows) {
    csv << r.NH << "," << r.nh << "," << r.t_fem << "," << r.t_rbhmr << ","
        << r.t_offline << "," << r.t_online << "\n";
    fem.points.push_back({double(r.NH), r.t_fem});
    rb.points.push_back({double(r.NH), r.t_rbhmr});
    xs.push_back(r.NH);
    yf.push_back(r.t_fem);
    yr.push_back(r.t_rbhmr);
  }
  if (rows.size() >= 2) {
    auto slopes = open_out(out_dir, "runtime_slopes.txt");
    slopes << "fem_slope = " << loglog_slope(xs, yf) << "\n";
    slopes << "rbhmr_slope = " << loglog_slope(xs, yr) << "\n";
  }
  write_svg_plot(out_dir + "/runtime.svg", "run-time scaling", "N_H",
                 "seconds", {fem, rb}, true, true);
}

void run_epm_bounds(const Config &cfg, const std::string &out_dir) {
  write_manifest(cfg, out_dir, "epm-bounds");
  const std::string kind = cfg.get_str("study.manifold", "step");
  const int nh = cfg.get_int("mesh.nh", 128);
  const int n = cfg.get_int("study.n_samples", 50);
  Mesh1D mesh = build_interval_mesh(0.0, 1.0, nh);
  HostSpace host = make_host_p1_free(mesh);

  Mat manifold(host.dim, n);
  CounterRng rng(cfg.get_u64("seed", 0));
  for (int j = 0; j < n; ++j) {
    if (kind == "step") {
      const double mu = rng.uniform(0.15, 0.85);
      for (int i = 0; i < host.dim; ++i)
        manifold(i, j) = host.site(i) > mu ? 1.0 : 0.0;
    } else {
      const double mu = rng.uniform(0.0, 1.0);
      for (int i = 0; i < host.dim; ++i) {
        const double y = host.site(i);
        manifold(i, j) = std::exp(-3.0 * mu * y) * std::sin(M_PI * y * (1 + mu));
      }
    }
  }
  std::vector<int> ks;
  for (int k = 1; k <= cfg.get_int("study.k_hi", 12); ++k)
    ks.push_back(k);
  auto rows = epm_bounds_study(manifold, host, Dictionary::point_eval(), ks,
                               cfg.get_double("epm.eps_int", 1e-12),
                               cfg.get_int("epm.n_max_int", 4));

  auto csv = open_out(out_dir, "epm_bounds.csv");
  csv << "# schema: epm-bounds v1\n";
  csv << "k,pod_tail,coeff_tail,true_proj_error,apriori,aposteriori,e_int\n";
  for (const auto &r : rows)
    csv << r.k << "," << r.pod_tail << "," << r.coeff_tail << ","
        << r.true_proj_error << "," << r.apriori << "," << r.aposteriori
        << "," << r.e_int << "\n";
}

} // namespace hmr
