// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "hmr/model_problem.hpp"

#include <cmath>

namespace hmr {

NonlinearDiffusion::NonlinearDiffusion(DiffusionParams params)
    : params_(params) {
  HMR_REQUIRE(params_.c0 > 0.0 && params_.c4 > 0.0,
              "NonlinearDiffusion: requires c0 > 0 and c4 > 0");
}

void NonlinearDiffusion::eval(double p, double &d, double &dp,
                              double &dpp) const {
  const double c4 = params_.c4;
  const double q = 1.0 - p;
  const double N = p * p * q * q;
  const double Np = 2.0 * (p - p * p) * (1.0 - 2.0 * p);
  const double Npp = 2.0 * (1.0 - 2.0 * p) * (1.0 - 2.0 * p) -
                     4.0 * (p - p * p);
  const double c = 12.0 / c4;
  const double D = p * p * p + c * q * q * q;
  HMR_REQUIRE(std::abs(D) >= 1e-14,
              "diffusion: denominator p^3 + (12/c4)(1-p)^3 vanishes");
  const double Dp = 3.0 * p * p - 3.0 * c * q * q;
  const double Dpp = 6.0 * p + 6.0 * c * q;
  const double D2 = D * D;
  const double r = N / D2;
  const double rp = (Np * D - 2.0 * N * Dp) / (D2 * D);
  const double rpp = (Npp * D2 - 4.0 * Np * Dp * D - 2.0 * N * D * Dpp +
                      6.0 * N * Dp * Dp) /
                     (D2 * D2);
  const double scale = 36.0 / c4;
  d = scale * r + params_.c0;
  dp = scale * rp;
  dpp = scale * rpp;
}

DiffusionEval diffusion(double p, const DiffusionParams &params) {
  NonlinearDiffusion law(params);
  DiffusionEval out;
  law.eval(p, out.d, out.d1, out.d2);
  return out;
}

namespace {

// p(x,y) = Y(y) * X(x), X = x(2-x) exp(sin(2 pi x)),
// Y = y^2 (1-y)^2 (0.75-y).
void x_factor(double x, double &X, double &Xp, double &Xpp) {
  const double u = x * (2.0 - x);
  const double up = 2.0 - 2.0 * x;
  const double upp = -2.0;
  const double g = std::sin(2.0 * M_PI * x);
  const double gp = 2.0 * M_PI * std::cos(2.0 * M_PI * x);
  const double gpp = -4.0 * M_PI * M_PI * std::sin(2.0 * M_PI * x);
  const double eg = std::exp(g);
  X = u * eg;
  Xp = (up + u * gp) * eg;
  Xpp = (upp + 2.0 * up * gp + u * gp * gp + u * gpp) * eg;
}

void y_factor(double y, double &Y, double &Yp, double &Ypp) {
  // Expanded: 0.75 y^2 - 2.5 y^3 + 2.75 y^4 - y^5.
  Y = ((((-y + 2.75) * y - 2.5) * y + 0.75) * y) * y;
  Yp = (((-5.0 * y + 11.0) * y - 7.5) * y + 1.5) * y;
  Ypp = ((-20.0 * y + 33.0) * y - 15.0) * y + 1.5;
}

} // namespace

double tc1_exact(double x, double y) {
  double X, Xp, Xpp, Y, Yp, Ypp;
  x_factor(x, X, Xp, Xpp);
  y_factor(y, Y, Yp, Ypp);
  return X * Y;
}

void tc1_exact_derivs(double x, double y, double &p, double &px, double &py,
                      double &pxx, double &pyy) {
  double X, Xp, Xpp, Y, Yp, Ypp;
  x_factor(x, X, Xp, Xpp);
  y_factor(y, Y, Yp, Ypp);
  p = X * Y;
  px = Xp * Y;
  py = X * Yp;
  pxx = Xpp * Y;
  pyy = X * Ypp;
}

double tc1_source(double x, double y, const DiffusionParams &params) {
  double p, px, py, pxx, pyy;
  tc1_exact_derivs(x, y, p, px, py, pxx, pyy);
  const DiffusionEval de = diffusion(p, params);
  // s = -d'(p) |grad p|^2 - d(p) (pxx + pyy).
  return -de.d1 * (px * px + py * py) - de.d * (pxx + pyy);
}

double tc2_source(double x, double y) {
  const bool d1 = (x >= 0.4 && x <= 0.6 && y >= 0.2 && y <= 0.36);
  const bool d2 = (x >= 0.4 && x <= 0.6 && y >= 0.64 && y <= 0.8);
  const bool d3 = (x >= 1.4 && x <= 1.6 && y >= 0.4 && y <= 0.6);
  return (d1 || d2 || d3) ? 1.0 : 0.0;
}

TestCase make_test_case(TestCaseTag tag, std::optional<double> c0,
                        std::optional<double> c4, int Q) {
  TestCase tc;
  tc.tag = tag;
  tc.domain = Rect{0.0, 2.0, 0.0, 1.0};
  if (tag == TestCaseTag::TC1) {
    tc.params = DiffusionParams{c0.value_or(0.1), c4.value_or(36.0)};
    const DiffusionParams params = tc.params;
    tc.source = [params](double x, double y) {
      return tc1_source(x, y, params);
    };
    tc.exact = [](double x, double y) { return tc1_exact(x, y); };
    tc.grid_x_breaks = {0.0, 0.5, 1.0, 1.5, 2.0};
    tc.box_I0 = {-0.5, 0.5};
    tc.box_I1 = {-1.0, 1.0};
  } else {
    tc.params = DiffusionParams{c0.value_or(0.075), c4.value_or(12.0)};
    tc.source = [](double x, double y) { return tc2_source(x, y); };
    tc.grid_x_breaks = {0.0, 0.4, 0.8, 1.2, 1.6, 2.0};
    if (Q >= 2) {
      tc.box_I0 = {0.0, 2.0};
      tc.box_I1 = {-0.5, 0.5};
    } else {
      tc.box_I0 = {0.0, 1.0};
      tc.box_I1 = {-1.0, 1.0};
    }
  }
  tc.law = std::make_shared<NonlinearDiffusion>(tc.params);
  return tc;
}

} // namespace hmr
