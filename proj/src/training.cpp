// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/training.hpp"
#include "hmr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hmr {

TrainingHyperparams default_hyperparams(const TestCase &tc, int Q) {
  TrainingHyperparams hp;
  hp.Q0 = Q;
  if (tc.tag == TestCaseTag::TC1) {
    hp.tol_hmr = 1e-5;
    hp.tol_epm = 1e-7;
    hp.tol_err = 1e-9;
  } else if (Q <= 1) {
    hp.tol_hmr = 1e-3;
    hp.tol_epm = 1e-7;
    hp.tol_err = 1e-9;
  } else {
    hp.tol_hmr = 1e-3;
    hp.tol_epm = 1e-8;
    hp.tol_err = 1e-10;
    hp.i_max = 1;
    hp.n_xi = 4;
    hp.theta = 0.01;
    hp.sigma_formula_uses_imax = true;
  }
  return hp;
}

std::vector<GridCell> bisect_cell(const GridCell &cell) {
  const int P = static_cast<int>(cell.lo.size());
  std::vector<GridCell> children;
  children.reserve(1 << P);
  for (int child = 0; child < (1 << P); ++child) {
    GridCell cc;
    cc.lo = cell.lo;
    cc.hi = cell.hi;
    for (int d = 0; d < P; ++d) {
      const double mid = 0.5 * (cell.lo[d] + cell.hi[d]);
      if (child & (1 << d))
        cc.lo[d] = mid;
      else
        cc.hi[d] = mid;
    }
    cc.rho = 0;
    cc.sigma_thres = cell.sigma_thres;
    children.push_back(std::move(cc));
  }
  return children;
}

std::vector<int> mark_cells(const std::vector<double> &eta,
                            const std::vector<double> &sigma,
                            const std::vector<double> &sigma_thres,
                            double theta) {
  HMR_REQUIRE(theta > 0.0 && theta <= 1.0, "mark_cells: invalid theta");
  const int n = static_cast<int>(eta.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return eta[a] < eta[b]; });
  const int n_eta = std::min(n, static_cast<int>(std::ceil(theta * n)));
  std::vector<bool> marked(n, false);
  for (int i = 0; i < n_eta; ++i)
    marked[order[i]] = true;
  for (int i = 0; i < n; ++i)
    if (sigma[i] > sigma_thres[i])
      marked[i] = true;
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (marked[i])
      out.push_back(i);
  return out;
}

int qp_indicator(const Vec &pod_eigenvalues, const Vec &coeff_norms_sq, int Q,
                 int Qmax, std::string *note) {
  auto set_note = [&](const std::string &s) {
    if (note)
      *note = s;
  };
  if (Q >= Qmax) {
    set_note("Q at cap");
    return Q;
  }
  const double lam_floor =
      pod_eigenvalues.size() ? 1e-14 * pod_eigenvalues[0] : 0.0;
  std::vector<double> le, lc;
  const int L = static_cast<int>(
      std::min<Eigen::Index>(10, std::min(pod_eigenvalues.size(),
                                          coeff_norms_sq.size())));
  for (int l = 0; l < L; ++l) {
    if (pod_eigenvalues[l] <= lam_floor || coeff_norms_sq[l] <= 1e-300)
      break;
    le.push_back(std::log(pod_eigenvalues[l]));
    lc.push_back(std::log(coeff_norms_sq[l]));
  }
  if (le.size() < 6) {
    set_note("qp indicator: fewer than 6 usable values, Q unchanged");
    return Q;
  }
  auto slope = [](const std::vector<double> &v, int i0) {
    // least squares over 5 points
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < 5; ++i) {
      const double x = i0 + i, y = v[i0 + i];
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    return (5 * sxy - sx * sy) / (5 * sxx - sx * sx);
  };
  for (int i0 = 0; i0 + 5 <= static_cast<int>(le.size()); ++i0) {
    const double se = slope(le, i0);
    const double sc = slope(lc, i0);
    if (se < 0.0 && sc > 0.5 * se) {
      std::ostringstream os;
      os << "qp indicator: window " << i0 + 1 << ": eig slope " << se
         << ", coeff slope " << sc << " -> raise Q";
      set_note(os.str());
      return Q + 1;
    }
  }
  set_note("qp indicator: rates coincide, Q unchanged");
  return Q;
}

namespace {

struct SampleRecord {
  ParameterPoint mu;
  Vec solution;
  std::array<Vec, kNumComponents> comps;
  bool ok = false;
};

// Gram-Schmidt append of one column in a (sparse) mass inner product.
Mat orthonormal_append(const Mat &base, const Vec &snap, const SpMat &mass) {
  Vec v = snap;
  for (int i = 0; i < base.cols(); ++i)
    v -= base.col(i).dot(mass * v) * base.col(i);
  const double nrm = std::sqrt(std::max(0.0, v.dot(mass * v)));
  const double snap_nrm = std::sqrt(std::max(0.0, snap.dot(mass * snap)));
  if (nrm <= 1e-10 * std::max(snap_nrm, 1e-30))
    return base; // nothing new
  Mat out(base.rows(), base.cols() + 1);
  if (base.cols() > 0)
    out.leftCols(base.cols()) = base;
  out.col(base.cols()) = v / nrm;
  return out;
}

class Trainer {
public:
  Trainer(const TestCase &tc, const TransverseContext &ctx,
          const TrainingHyperparams &hp)
      : tc_(tc), ctx_(ctx), hp_(hp), rng_(hp.seed),
        space_xc_(make_fe_space_1d(
            build_interval_mesh(tc.domain.x0, tc.domain.x1, hp.NHprime),
            Boundary::ZeroTrace)),
        refc_(make_reference_context(tc, hp.NHprime, ctx.space_y0.mesh.n_elem)),
        host_p1_(std::make_shared<HostSpace>(
            make_host_p1_free(ctx.space_y0.mesh))),
        host_pwc_(std::make_shared<HostSpace>(
            make_host_pwconst(ctx.space_y0.mesh))) {}

  TrainingOutput run();

private:
  Dictionary dict() const {
    return hp_.dict_kind == Dictionary::Kind::PointEval
               ? Dictionary::point_eval()
               : Dictionary::local_average(ctx_.space_y0.mesh.a,
                                           ctx_.space_y0.mesh.b,
                                           hp_.dict_depth);
  }
  std::shared_ptr<const HostSpace> host_of(int c) const {
    return component_is_pwconst(c)
               ? std::static_pointer_cast<const HostSpace>(host_pwc_)
               : std::static_pointer_cast<const HostSpace>(host_p1_);
  }

  void log(const std::string &s) { log_.push_back(s); }

  ParameterGrid initial_grid(int Q) const;
  ParameterPoint draw_sample(const GridCell &cell);
  int new_sample(const GridCell &cell); // id, or -1 on failure
  void compute_pending();

  // manifolds over a sample-id list
  Mat solution_matrix(const std::vector<int> &ids) const;
  Mat component_matrix(int c, const std::vector<int> &ids) const;
  std::vector<int> active_ids() const;

  struct RichUnits {
    std::array<CollateralUnit, kNumComponents> units;
    Mat phiP; // POD modes of the solution manifold (up to m_max)
    Vec lambdaP;
  };
  RichUnits epm_indicator(const std::vector<int> &ids);

  int qp_check(const RichUnits &rich, int Q, std::string *note);

  double estimate_sample(const SampleRecord &rec, const Mat &phi_small,
                         const std::array<Mat, kNumComponents> &kappa_small,
                         const RichUnits &rich, double &beta_cache);

  OnlineOperator make_candidate_op(const Mat &Y,
                                   const std::array<Mat, kNumComponents> &bases,
                                   int n_max_int);
  OnlineOperator make_rich_op(const Mat &Y, const RichUnits &rich);

  const TestCase &tc_;
  const TransverseContext &ctx_;
  TrainingHyperparams hp_;
  CounterRng rng_;
  FESpace1D space_xc_;
  ReferenceContext refc_;
  std::shared_ptr<HostSpace> host_p1_, host_pwc_;
  std::vector<SampleRecord> samples_;
  std::vector<int> pending_;
  ParameterGrid grid_;
  std::vector<std::string> log_;
};

ParameterGrid Trainer::initial_grid(int Q) const {
  // product of per-quadrature-point (x-break x I0 x I1) cells
  const auto &xb = tc_.grid_x_breaks;
  const int nxc = static_cast<int>(xb.size()) - 1;
  int total = 1;
  for (int l = 0; l < Q; ++l)
    total *= nxc;
  ParameterGrid g;
  for (int idx = 0; idx < total; ++idx) {
    GridCell cell;
    cell.lo.resize(3 * Q);
    cell.hi.resize(3 * Q);
    int rest = idx;
    for (int l = 0; l < Q; ++l) {
      const int xc = rest % nxc;
      rest /= nxc;
      cell.lo[3 * l + 0] = xb[xc];
      cell.hi[3 * l + 0] = xb[xc + 1];
      cell.lo[3 * l + 1] = tc_.box_I0[0];
      cell.hi[3 * l + 1] = tc_.box_I0[1];
      cell.lo[3 * l + 2] = tc_.box_I1[0];
      cell.hi[3 * l + 2] = tc_.box_I1[1];
    }
    const double shift = hp_.sigma_formula_uses_imax ? 1.0 : 0.0;
    cell.sigma_thres =
        hp_.sigma_thres >= 0.0
            ? hp_.sigma_thres
            : (hp_.i_max - 1 + shift) * std::ceil(cell.diam()) + 1.0;
    g.cells.push_back(std::move(cell));
  }
  return g;
}

ParameterPoint Trainer::draw_sample(const GridCell &cell) {
  const int Q = static_cast<int>(cell.lo.size()) / 3;
  for (int attempt = 0; attempt < 64; ++attempt) {
    ParameterPoint mu;
    mu.x.resize(Q);
    mu.U.resize(Q);
    mu.Up.resize(Q);
    for (int l = 0; l < Q; ++l) {
      mu.x[l] = rng_.uniform(cell.lo[3 * l], cell.hi[3 * l]);
      mu.U[l] = rng_.uniform(cell.lo[3 * l + 1], cell.hi[3 * l + 1]);
      mu.Up[l] = rng_.uniform(cell.lo[3 * l + 2], cell.hi[3 * l + 2]);
    }
    mu.sort_by_x();
    if (mu.admissible())
      return mu;
  }
  throw HmrError("training: cell yields no admissible sample");
}

int Trainer::new_sample(const GridCell &cell) {
  SampleRecord rec;
  rec.mu = draw_sample(cell);
  samples_.push_back(std::move(rec));
  const int id = static_cast<int>(samples_.size()) - 1;
  pending_.push_back(id);
  return id;
}

void Trainer::compute_pending() {
  std::vector<int> todo;
  todo.swap(pending_);
  parallel_for(static_cast<int>(todo.size()), hp_.threads, [&](int i) {
    SampleRecord &rec = samples_[todo[i]];
    auto sol = solve_transverse(rec.mu, ctx_);
    if (!sol.converged)
      return; // stays !ok
    rec.solution = sol.coeffs;
    OperatorSnapshot snap = operator_snapshot(rec.mu, sol.coeffs, ctx_);
    for (int c = 0; c < kNumComponents; ++c)
      rec.comps[c] = snap.component(c);
    rec.ok = true;
  });
  int failures = 0;
  for (int id : todo)
    if (!samples_[id].ok)
      ++failures;
  if (failures > 0) {
    std::ostringstream os;
    os << failures << " transverse solves rejected (Newton divergence)";
    log(os.str());
  }
}

std::vector<int> Trainer::active_ids() const {
  std::vector<int> ids;
  for (const auto &cell : grid_.cells)
    for (int id : cell.sample_ids)
      if (samples_[id].ok)
        ids.push_back(id);
  return ids;
}

Mat Trainer::solution_matrix(const std::vector<int> &ids) const {
  Mat S(ctx_.space_y0.dim, ids.size());
  for (size_t j = 0; j < ids.size(); ++j)
    S.col(j) = samples_[ids[j]].solution;
  return S;
}

Mat Trainer::component_matrix(int c, const std::vector<int> &ids) const {
  Mat S(samples_[ids[0]].comps[c].size(), ids.size());
  for (size_t j = 0; j < ids.size(); ++j)
    S.col(j) = samples_[ids[j]].comps[c];
  return S;
}

Trainer::RichUnits Trainer::epm_indicator(const std::vector<int> &ids) {
  RichUnits rich;
  PodResult podP =
      compute_pod(solution_matrix(ids), ctx_.space_y0.mass,
                  PodTruncation::by_count(std::max(hp_.m_max, 10)));
  rich.phiP = podP.basis;
  rich.lambdaP = podP.eigenvalues;

  for (int c = 0; c < kNumComponents; ++c) {
    auto host = host_of(c);
    const Mat A = component_matrix(c, ids);
    PodResult pod = compute_pod(A, host->mass, PodTruncation::by_tol(hp_.tol_err));
    if (pod.basis.cols() == 0)
      pod = compute_pod(A, host->mass, PodTruncation::by_count(1));
    // k' from the a posteriori rule: minimal index with tail <= tol_k' eps_c
    const double eps = hp_.tol_kprime * hp_.tol_c;
    int kp = pod.count_for_tol(eps);
    if (kp >= pod.total_count)
      log("epm indicator: k' clamped to the available spectrum");
    kp = std::max(1, std::min(kp, static_cast<int>(pod.basis.cols())));
    CollateralUnit cu;
    cu.comp = c;
    cu.host = host;
    cu.proj = run_adaptive_epm(pod.basis.leftCols(kp), dict(), A, hp_.eps_int,
                               hp_.n_max_int, *host,
                               pod.eigenvalues);
    rich.units[c] = std::move(cu);
  }
  return rich;
}

OnlineOperator Trainer::make_rich_op(const Mat &Y, const RichUnits &rich) {
  return precompute_tensors(Y, ctx_.space_y0, space_xc_, tc_, rich.units[0],
                            rich.units[1], rich.units[2], rich.units[3],
                            rich.units[4]);
}

OnlineOperator
Trainer::make_candidate_op(const Mat &Y,
                           const std::array<Mat, kNumComponents> &bases,
                           int n_max_int) {
  std::array<CollateralUnit, kNumComponents> units;
  for (int c = 0; c < kNumComponents; ++c) {
    auto host = host_of(c);
    Mat basis = bases[c];
    if (basis.cols() == 0) {
      basis = Mat::Ones(host->dim, 1);
      const double nrm =
          std::sqrt(basis.col(0).dot(host->mass * basis.col(0)));
      basis /= nrm;
    }
    units[c].comp = c;
    units[c].host = host;
    units[c].proj = run_adaptive_epm(basis, dict(), basis, hp_.eps_int,
                                     n_max_int, *host, Vec());
  }
  return precompute_tensors(Y, ctx_.space_y0, space_xc_, tc_, units[0],
                            units[1], units[2], units[3], units[4]);
}

int Trainer::qp_check(const RichUnits &rich, int Q, std::string *note) {
  const int m10 = std::min<int>(10, static_cast<int>(rich.phiP.cols()));
  if (m10 < 1)
    return Q;
  OnlineOperator op = make_rich_op(rich.phiP.leftCols(m10), rich);
  ReducedSolution sol = newton_solve(op, Vec());
  if (!sol.converged) {
    if (note)
      *note = "qp indicator: coarse reduced solve diverged, Q unchanged";
    return Q;
  }
  const Vec coeff = coefficient_norms_sq(op, sol);
  return qp_indicator(rich.lambdaP, coeff, Q, hp_.Qmax, note);
}

double
Trainer::estimate_sample(const SampleRecord &rec, const Mat &phi_small,
                         const std::array<Mat, kNumComponents> &kappa_small,
                         const RichUnits &rich, double &beta_cache) {
  try {
    const Mat Y =
        orthonormal_append(phi_small, rec.solution, ctx_.space_y0.mass);
    if (Y.cols() == 0)
      return std::numeric_limits<double>::infinity();

    std::array<Mat, kNumComponents> bases;
    for (int c = 0; c < kNumComponents; ++c)
      bases[c] =
          orthonormal_append(kappa_small[c], rec.comps[c], host_of(c)->mass);

    OnlineOperator opk = make_candidate_op(Y, bases, hp_.n_max_int);
    NewtonOptions nopt;
    ReducedSolution sol = newton_solve(opk, Vec(), nopt);
    if (!sol.converged)
      return std::numeric_limits<double>::infinity();
    const Vec u = sol.flattened();

    OnlineOperator opkp = make_rich_op(Y, rich);
    auto [emod, eepm] = dual_norms(opk, opkp, refc_, u);
    ConstantEstimates est = estimate_constants(opk, refc_, u, hp_.p_exponent);
    if (beta_cache < 0.0)
      beta_cache = approx_infsup(opkp, refc_, u);
    BrrReport rep = brr_assemble(emod, eepm, beta_cache, est.lipschitz,
                                 est.c_h, est.gamma);
    return rep.brr_satisfied ? rep.delta : rep.tau;
  } catch (const std::exception &) {
    return std::numeric_limits<double>::infinity();
  }
}

TrainingOutput Trainer::run() {
  TrainingOutput out;
  out.seed = hp_.seed;
  int Q = hp_.Q0;

  auto bootstrap = [&]() {
    grid_ = initial_grid(Q);
    samples_.clear();
    pending_.clear();
    for (auto &cell : grid_.cells)
      for (int s = 0; s < hp_.n_xi; ++s)
        cell.sample_ids.push_back(new_sample(cell));
    // coarse bootstrap set
    std::vector<int> coarse;
    const int n_cells = static_cast<int>(grid_.cells.size());
    for (int s = 0; s < hp_.n_c; ++s)
      coarse.push_back(new_sample(grid_.cells[s % n_cells]));
    compute_pending();
    std::vector<int> ok;
    for (int id : coarse)
      if (samples_[id].ok)
        ok.push_back(id);
    return ok;
  };

  std::vector<int> coarse_ids = bootstrap();
  HMR_REQUIRE(!coarse_ids.empty(), "training: bootstrap produced no samples");
  RichUnits rich = epm_indicator(coarse_ids);
  {
    std::string note;
    const int Qnew = qp_check(rich, Q, &note);
    log(note);
    if (Qnew != Q) {
      std::ostringstream os;
      os << "qp indicator raised Q from " << Q << " to " << Qnew
         << "; resetting the parameter grid";
      log(os.str());
      Q = Qnew;
      coarse_ids = bootstrap();
      rich = epm_indicator(coarse_ids);
    }
  }

  Mat phi_small(ctx_.space_y0.dim, 0);
  std::array<Mat, kNumComponents> kappa_small;
  for (int c = 0; c < kNumComponents; ++c)
    kappa_small[c].resize(host_of(c)->dim, 0);

  for (int m = 1; m <= hp_.m_max; ++m) {
    // indicators for the full grid
    std::vector<double> eta(grid_.cells.size());
    double beta_cache = -1.0;
    auto compute_eta = [&](const std::vector<int> &cell_indices) {
      // warm the beta cache serially on the first available sample
      for (int ci : cell_indices) {
        for (int id : grid_.cells[ci].sample_ids)
          if (samples_[id].ok && beta_cache < 0.0)
            estimate_sample(samples_[id], phi_small, kappa_small, rich,
                            beta_cache);
        if (beta_cache >= 0.0)
          break;
      }
      parallel_for(
          static_cast<int>(cell_indices.size()), hp_.threads, [&](int i) {
            const GridCell &cell = grid_.cells[cell_indices[i]];
            double best = std::numeric_limits<double>::infinity();
            double bc = beta_cache;
            for (int id : cell.sample_ids) {
              if (!samples_[id].ok)
                continue;
              best = std::min(best, estimate_sample(samples_[id], phi_small,
                                                    kappa_small, rich, bc));
            }
            eta[cell_indices[i]] = best;
          });
    };
    {
      std::vector<int> all(grid_.cells.size());
      std::iota(all.begin(), all.end(), 0);
      compute_eta(all);
    }

    for (int i = 0; i < hp_.i_max; ++i) {
      std::vector<double> sigma, thres;
      for (const auto &cell : grid_.cells) {
        sigma.push_back(cell.sigma());
        thres.push_back(cell.sigma_thres);
      }
      const std::vector<int> marked = mark_cells(eta, sigma, thres, hp_.theta);
      std::vector<bool> is_marked(grid_.cells.size(), false);
      for (int idx : marked)
        is_marked[idx] = true;

      ParameterGrid next;
      std::vector<double> next_eta;
      std::vector<int> fresh_cells;
      for (size_t ci = 0; ci < grid_.cells.size(); ++ci) {
        GridCell &cell = grid_.cells[ci];
        if (!is_marked[ci]) {
          cell.rho += 1;
          next.cells.push_back(std::move(cell));
          next_eta.push_back(eta[ci]);
          continue;
        }
        for (GridCell &cc : bisect_cell(cell)) {
          next.cells.push_back(std::move(cc));
          next_eta.push_back(std::numeric_limits<double>::infinity());
          fresh_cells.push_back(static_cast<int>(next.cells.size()) - 1);
        }
      }
      grid_ = std::move(next);
      eta = std::move(next_eta);
      for (int ci : fresh_cells)
        for (int s = 0; s < hp_.n_xi; ++s)
          grid_.cells[ci].sample_ids.push_back(new_sample(grid_.cells[ci]));
      compute_pending();
      compute_eta(fresh_cells);
      {
        std::ostringstream os;
        os << "m=" << m << " sweep " << i + 1 << ": " << marked.size()
           << " cells refined, grid size " << grid_.cells.size()
           << ", training size " << active_ids().size();
        log(os.str());
      }
    }

    const std::vector<int> ids = active_ids();
    HMR_REQUIRE(!ids.empty(), "training: empty training set");
    phi_small = compute_pod(solution_matrix(ids), ctx_.space_y0.mass,
                            PodTruncation::by_count(m))
                    .basis;
    for (int c = 0; c < kNumComponents; ++c) {
      PodResult pod = compute_pod(component_matrix(c, ids), host_of(c)->mass,
                                  PodTruncation::by_tol(hp_.tol_c));
      kappa_small[c] = pod.basis.cols() > 0
                           ? pod.basis
                           : compute_pod(component_matrix(c, ids),
                                         host_of(c)->mass,
                                         PodTruncation::by_count(1))
                                 .basis;
    }
    rich = epm_indicator(ids);
    {
      std::string note;
      const int Qnew = qp_check(rich, Q, &note);
      log(note);
      if (Qnew != Q) {
        std::ostringstream os;
        os << "qp indicator raised Q from " << Q << " to " << Qnew
           << " after m=" << m << "; resetting the parameter grid";
        log(os.str());
        Q = Qnew;
        coarse_ids = bootstrap();
        rich = epm_indicator(coarse_ids);
        phi_small.resize(ctx_.space_y0.dim, 0);
        for (int c = 0; c < kNumComponents; ++c)
          kappa_small[c].resize(host_of(c)->dim, 0);
      }
    }
  }

  const std::vector<int> ids = active_ids();
  out.solution_manifold = solution_matrix(ids);
  for (int c = 0; c < kNumComponents; ++c)
    out.operator_manifold[c] = component_matrix(c, ids);
  for (int id : ids)
    out.xi.push_back(samples_[id].mu);
  out.Q = Q;
  out.n_train = static_cast<int>(ids.size());
  out.log = log_;
  {
    std::ostringstream os;
    os << "final training size " << out.n_train << ", Q=" << Q;
    out.log.push_back(os.str());
  }
  return out;
}

} // namespace

TrainingOutput adaptive_train_extension(const TestCase &tc,
                                        const TransverseContext &ctx,
                                        const TrainingHyperparams &hp) {
  Trainer trainer(tc, ctx, hp);
  return trainer.run();
}

OfflineSpaces build_spaces(const TrainingOutput &out,
                           const TransverseContext &ctx,
                           const TrainingHyperparams &hp) {
  OfflineSpaces sp;
  HMR_REQUIRE(out.n_train >= 1, "build_spaces: empty manifolds");
  sp.podY = compute_pod(out.solution_manifold, ctx.space_y0.mass,
                        PodTruncation::by_tol(hp.tol_hmr));
  if (sp.podY.basis.cols() == 0)
    sp.podY = compute_pod(out.solution_manifold, ctx.space_y0.mass,
                          PodTruncation::by_count(1));
  if (std::sqrt(sp.podY.tail(static_cast<int>(sp.podY.basis.cols()))) >
      hp.tol_hmr)
    sp.log.push_back("build_spaces: tol.hmr unreachable at full rank");

  auto host_p1 = std::make_shared<HostSpace>(make_host_p1_free(ctx.space_y0.mesh));
  auto host_pwc = std::make_shared<HostSpace>(make_host_pwconst(ctx.space_y0.mesh));
  const Dictionary dict =
      hp.dict_kind == Dictionary::Kind::PointEval
          ? Dictionary::point_eval()
          : Dictionary::local_average(ctx.space_y0.mesh.a,
                                      ctx.space_y0.mesh.b, hp.dict_depth);

  for (int c = 0; c < kNumComponents; ++c) {
    auto host = component_is_pwconst(c)
                    ? std::static_pointer_cast<const HostSpace>(host_pwc)
                    : std::static_pointer_cast<const HostSpace>(host_p1);
    const Mat &A = out.operator_manifold[c];
    PodResult pod = compute_pod(A, host->mass, PodTruncation::all());
    int k = pod.count_for_tol(hp.tol_epm);
    if (k >= pod.total_count)
      sp.log.push_back("build_spaces: tol.epm unreachable at full rank for "
                       "component " +
                       std::to_string(c));
    k = std::max(1, std::min(k, static_cast<int>(pod.basis.cols())));
    int kp = pod.count_for_tol(hp.tol_kprime * hp.tol_epm);
    kp = std::max(kp, k + 1);
    kp = std::min(kp, static_cast<int>(pod.basis.cols()));

    CollateralUnit cu;
    cu.comp = c;
    cu.host = host;
    cu.proj = run_adaptive_epm(pod.basis.leftCols(k), dict, A, hp.eps_int,
                               hp.n_max_int, *host, pod.eigenvalues);
    sp.units[c] = cu;

    CollateralUnit cup;
    cup.comp = c;
    cup.host = host;
    if (kp > k) {
      cup.proj = run_adaptive_epm(pod.basis.leftCols(kp), dict, A, hp.eps_int,
                                  hp.n_max_int, *host, pod.eigenvalues);
    } else {
      sp.log.push_back("build_spaces: no enrichment margin for component " +
                       std::to_string(c));
      cup.proj = cu.proj;
    }
    sp.units_kp[c] = std::move(cup);
  }
  return sp;
}

} // namespace hmr
