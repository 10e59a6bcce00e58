// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/persistence.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hmr {

namespace {

constexpr const char *kMagic = "# hmr archive v1";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix(std::ostream &out, const std::string &name, const Mat &M) {
  out << "section " << name << " " << M.rows() << " " << M.cols() << "\n";
  for (int i = 0; i < M.rows(); ++i) {
    for (int j = 0; j < M.cols(); ++j)
      out << (j ? " " : "") << num(M(i, j));
    out << "\n";
  }
}

void write_vector(std::ostream &out, const std::string &name, const Vec &v) {
  Mat M(1, v.size());
  M.row(0) = v;
  write_matrix(out, name, M);
}

class Reader {
public:
  explicit Reader(const std::string &path) : path_(path), in_(path) {
    HMR_REQUIRE(in_.good(), "archive: cannot open '" + path + "'");
  }

  std::string next_line() {
    std::string line;
    HMR_REQUIRE(static_cast<bool>(std::getline(in_, line)),
                "archive: unexpected end of file in '" + path_ + "'");
    return line;
  }

  // header `# key: value` lines until the first non-comment
  std::map<std::string, std::string> header() {
    std::map<std::string, std::string> h;
    while (in_.peek() == '#') {
      std::string line = next_line();
      const auto colon = line.find(':');
      if (colon == std::string::npos)
        continue;
      std::string key = line.substr(2, colon - 2);
      std::string val = line.substr(colon + 1);
      const auto b = val.find_first_not_of(' ');
      h[key] = b == std::string::npos ? "" : val.substr(b);
    }
    return h;
  }

  Mat matrix(const std::string &expected_name) {
    std::string line = next_line();
    std::istringstream hdr(line);
    std::string tag, name;
    long rows = -1, cols = -1;
    hdr >> tag >> name >> rows >> cols;
    HMR_REQUIRE(tag == "section",
                "archive: expected a section, got '" + line + "' (wanted " +
                    expected_name + ")");
    HMR_REQUIRE(name == expected_name, "archive: expected section '" +
                                           expected_name + "', found '" +
                                           name + "'");
    HMR_REQUIRE(rows >= 0 && cols >= 0,
                "archive: bad dimensions in section " + name);
    Mat M(rows, cols);
    for (long i = 0; i < rows; ++i) {
      std::string row = next_line();
      std::istringstream rs(row);
      for (long j = 0; j < cols; ++j)
        HMR_REQUIRE(static_cast<bool>(rs >> M(i, j)),
                    "archive: truncated row in section " + name);
    }
    return M;
  }

private:
  std::string path_;
  std::ifstream in_;
};

std::string unit_prefix(int comp, bool enriched) {
  return "unit." + std::to_string(comp) + (enriched ? ".kp" : ".k");
}

void write_unit(std::ostream &out, const CollateralUnit &cu, int comp,
                bool enriched) {
  const std::string pre = unit_prefix(comp, enriched);
  const EpmProjector &p = cu.proj;
  write_vector(out, pre + ".eigenvalues", p.pod_eigenvalues);
  write_matrix(out, pre + ".kappa", p.kappa);
  Vec meta(2);
  meta << p.e_int, static_cast<double>(p.n_train);
  write_vector(out, pre + ".meta", meta);
  Mat iv(p.partition.intervals.size(), 2);
  for (size_t i = 0; i < p.partition.intervals.size(); ++i) {
    iv(i, 0) = p.partition.intervals[i].a;
    iv(i, 1) = p.partition.intervals[i].b;
  }
  write_matrix(out, pre + ".intervals", iv);
  for (size_t i = 0; i < p.partition.intervals.size(); ++i) {
    const InterpSystem &sys = p.partition.intervals[i].sys;
    const std::string ipre = pre + "." + std::to_string(i);
    Mat descs(sys.k(), 4);
    for (int j = 0; j < sys.k(); ++j) {
      descs(j, 0) = sys.descs[j].kind == Dictionary::Kind::PointEval ? 0 : 1;
      descs(j, 1) = sys.descs[j].dof;
      descs(j, 2) = sys.descs[j].j_lo;
      descs(j, 3) = sys.descs[j].j_hi;
    }
    write_matrix(out, ipre + ".descs", descs);
    write_matrix(out, ipre + ".Q", sys.Q);
    write_matrix(out, ipre + ".B", sys.B);
  }
}

CollateralUnit read_unit(Reader &r, int comp,
                         const std::shared_ptr<const HostSpace> &host,
                         bool enriched) {
  const std::string pre = unit_prefix(comp, enriched);
  CollateralUnit cu;
  cu.comp = comp;
  cu.host = host;
  EpmProjector &p = cu.proj;
  p.pod_eigenvalues = r.matrix(pre + ".eigenvalues").row(0);
  p.kappa = r.matrix(pre + ".kappa");
  HMR_REQUIRE(p.kappa.rows() == host->dim,
              "archive: kappa dimension mismatch in " + pre);
  const Vec meta = r.matrix(pre + ".meta").row(0);
  p.e_int = meta[0];
  p.n_train = static_cast<int>(meta[1]);
  const Mat iv = r.matrix(pre + ".intervals");
  int row = 0;
  for (int i = 0; i < iv.rows(); ++i) {
    EpmInterval interval;
    interval.a = iv(i, 0);
    interval.b = iv(i, 1);
    const std::string ipre = pre + "." + std::to_string(i);
    const Mat descs = r.matrix(ipre + ".descs");
    InterpSystem &sys = interval.sys;
    sys.a = interval.a;
    sys.b = interval.b;
    sys.Q = r.matrix(ipre + ".Q");
    sys.B = r.matrix(ipre + ".B");
    const int kI = static_cast<int>(descs.rows());
    HMR_REQUIRE(sys.B.rows() == kI && sys.B.cols() == kI &&
                    sys.Q.cols() == kI && sys.Q.rows() == host->dim,
                "archive: inconsistent system dimensions in " + ipre);
    sys.weights.resize(host->dim, kI);
    for (int j = 0; j < kI; ++j) {
      FunctionalDesc d;
      d.kind = descs(j, 0) == 0.0 ? Dictionary::Kind::PointEval
                                  : Dictionary::Kind::LocalAverage;
      d.dof = static_cast<int>(descs(j, 1));
      d.j_lo = descs(j, 2);
      d.j_hi = descs(j, 3);
      sys.descs.push_back(d);
      if (d.kind == Dictionary::Kind::PointEval) {
        HMR_REQUIRE(d.dof >= 0 && d.dof < host->dim,
                    "archive: functional dof out of range in " + ipre);
        sys.weights.col(j).setZero();
        sys.weights(d.dof, j) = 1.0;
      } else {
        const double il = std::max(d.j_lo, interval.a);
        const double ih = std::min(d.j_hi, interval.b);
        HMR_REQUIRE(ih > il, "archive: empty functional window in " + ipre);
        sys.weights.col(j) = host->window_integrals(il, ih) /
                             std::sqrt(d.j_hi - d.j_lo);
      }
    }
    // validation: triangular structure and entry bounds
    for (int a = 0; a < kI; ++a) {
      HMR_REQUIRE(sys.B(a, a) == 1.0,
                  "archive: B diagonal not unity in " + ipre);
      for (int b = a + 1; b < kI; ++b)
        HMR_REQUIRE(sys.B(a, b) == 0.0,
                    "archive: B not lower triangular in " + ipre);
      for (int b = 0; b < a; ++b)
        HMR_REQUIRE(std::abs(sys.B(a, b)) <= 1.0 + 1e-10,
                    "archive: |B_ij| <= 1 violated in " + ipre);
    }
    if (kI > 0) {
      Mat Binv = Mat::Identity(kI, kI);
      sys.B.triangularView<Eigen::Lower>().solveInPlace(Binv);
      sys.Theta = sys.Q * Binv;
      // cardinal property
      const Mat card = sys.weights.transpose() * sys.Theta;
      HMR_REQUIRE((card - Mat::Identity(kI, kI)).cwiseAbs().maxCoeff() < 1e-8,
                  "archive: cardinal property violated in " + ipre);
    } else {
      sys.Theta = Mat(host->dim, 0);
      sys.weights = Mat(host->dim, 0);
    }
    p.partition.intervals.push_back(std::move(interval));
    row += kI;
  }
  // recompute projection integrals
  p.proj_integrals.resize(row, p.kappa.cols());
  int l = 0;
  for (int i = 0; i < static_cast<int>(p.partition.intervals.size()); ++i) {
    const auto &interval = p.partition.intervals[i];
    if (interval.sys.k() == 0)
      continue;
    const SpMat MI = host->windowed_mass(interval.a, interval.b);
    const Mat P = interval.sys.Theta.transpose() * (MI * p.kappa);
    for (int j = 0; j < interval.sys.k(); ++j) {
      p.proj_integrals.row(l) = P.row(j);
      p.functional_index.emplace_back(i, j);
      ++l;
    }
  }
  // orthonormality of the collateral basis
  const Mat G = p.kappa.transpose() * (host->mass * p.kappa);
  HMR_REQUIRE(
      (G - Mat::Identity(p.k(), p.k())).cwiseAbs().maxCoeff() < 1e-8,
      "archive: collateral basis not orthonormal in " + pre);
  return cu;
}

} // namespace

void save_archive(const std::string &path, const OfflineModel &M) {
  std::ofstream out(path);
  HMR_REQUIRE(out.good(), "archive: cannot write '" + path + "'");
  out << kMagic << "\n";
  out << "# testcase: " << (M.tc.tag == TestCaseTag::TC1 ? "tc1" : "tc2")
      << "\n";
  out << "# c0: " << num(M.tc.params.c0) << "\n";
  out << "# c4: " << num(M.tc.params.c4) << "\n";
  out << "# NH: " << M.NH << "\n";
  out << "# nh: " << M.nh << "\n";
  out << "# Q: " << M.Q << "\n";
  out << "# seed: " << M.seed << "\n";
  out << "# n_train: " << M.n_train << "\n";
  out << "# tol.hmr: " << num(M.hp.tol_hmr) << "\n";
  out << "# tol.epm: " << num(M.hp.tol_epm) << "\n";
  out << "# tol.err: " << num(M.hp.tol_err) << "\n";
  out << "# tol.c: " << num(M.hp.tol_c) << "\n";
  out << "# tol.kprime: " << num(M.hp.tol_kprime) << "\n";
  out << "# epm.eps_int: " << num(M.hp.eps_int) << "\n";
  out << "# epm.n_max_int: " << M.hp.n_max_int << "\n";
  out << "# epm.mode: "
      << (M.hp.dict_kind == Dictionary::Kind::PointEval ? "eim" : "geim")
      << "\n";
  out << "# epm.dict_depth: " << M.hp.dict_depth << "\n";
  out << "# I0: " << num(M.tc.box_I0[0]) << " " << num(M.tc.box_I0[1]) << "\n";
  out << "# I1: " << num(M.tc.box_I1[0]) << " " << num(M.tc.box_I1[1]) << "\n";

  write_vector(out, "Y.eigenvalues", M.spaces.podY.eigenvalues);
  write_matrix(out, "Y.basis", M.spaces.podY.basis);
  for (int c = 0; c < kNumComponents; ++c) {
    write_unit(out, M.spaces.units[c], c, false);
    write_unit(out, M.spaces.units_kp[c], c, true);
  }
  out << "end\n";
  HMR_REQUIRE(out.good(), "archive: write failure on '" + path + "'");
}

OfflineModel load_archive(const std::string &path) {
  Reader r(path);
  const std::string magic = r.next_line();
  HMR_REQUIRE(magic == kMagic,
              "archive: unsupported version or not an hmr archive: '" + path +
                  "'");
  auto h = r.header();
  auto need = [&](const std::string &k) {
    HMR_REQUIRE(h.count(k), "archive: missing header key '" + k + "'");
    return h[k];
  };

  const std::string tag = need("testcase");
  const int NH = std::stoi(need("NH"));
  const int nh = std::stoi(need("nh"));
  const int Q = std::stoi(need("Q"));
  TestCase tc = make_test_case(tag == "tc1" ? TestCaseTag::TC1
                                            : TestCaseTag::TC2,
                               std::stod(need("c0")), std::stod(need("c4")),
                               Q);
  {
    std::istringstream i0(need("I0")), i1(need("I1"));
    i0 >> tc.box_I0[0] >> tc.box_I0[1];
    i1 >> tc.box_I1[0] >> tc.box_I1[1];
  }

  TrainingHyperparams hp = default_hyperparams(tc, Q);
  hp.tol_hmr = std::stod(need("tol.hmr"));
  hp.tol_epm = std::stod(need("tol.epm"));
  hp.tol_err = std::stod(need("tol.err"));
  hp.tol_c = std::stod(need("tol.c"));
  hp.tol_kprime = std::stod(need("tol.kprime"));
  hp.eps_int = std::stod(need("epm.eps_int"));
  hp.n_max_int = std::stoi(need("epm.n_max_int"));
  hp.dict_kind = need("epm.mode") == "eim" ? Dictionary::Kind::PointEval
                                           : Dictionary::Kind::LocalAverage;
  hp.dict_depth = std::stoi(need("epm.dict_depth"));
  hp.seed = std::stoull(need("seed"));

  Mesh1D mesh_y = build_interval_mesh(tc.domain.y0, tc.domain.y1, nh);
  FESpace1D sy0 = make_fe_space_1d(mesh_y, Boundary::ZeroTrace);
  auto host_p1 = std::make_shared<HostSpace>(make_host_p1_free(mesh_y));
  auto host_pwc = std::make_shared<HostSpace>(make_host_pwconst(mesh_y));

  OfflineSpaces spaces;
  spaces.podY.eigenvalues = r.matrix("Y.eigenvalues").row(0);
  spaces.podY.basis = r.matrix("Y.basis");
  spaces.podY.total_count = static_cast<int>(spaces.podY.eigenvalues.size());
  HMR_REQUIRE(spaces.podY.basis.rows() == sy0.dim,
              "archive: Y basis dimension mismatch");
  {
    const Mat G = spaces.podY.basis.transpose() *
                  (sy0.mass * spaces.podY.basis);
    HMR_REQUIRE((G - Mat::Identity(G.rows(), G.cols()))
                        .cwiseAbs()
                        .maxCoeff() < 1e-8,
                "archive: reduction basis not orthonormal");
  }
  for (int c = 0; c < kNumComponents; ++c) {
    auto host = component_is_pwconst(c)
                    ? std::static_pointer_cast<const HostSpace>(host_pwc)
                    : std::static_pointer_cast<const HostSpace>(host_p1);
    spaces.units[c] = read_unit(r, c, host, false);
    spaces.units_kp[c] = read_unit(r, c, host, true);
  }

  return offline_from_parts(tc, NH, nh, hp, Q, std::stoi(need("n_train")),
                            std::move(spaces));
}

} // namespace hmr
