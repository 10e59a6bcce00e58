// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_MODEL_PROBLEM_HPP
#define HMR_MODEL_PROBLEM_HPP

#include "hmr/common.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>

namespace hmr {

struct DiffusionParams {
  double c0 = 0.1; // ellipticity floor
  double c4 = 36.0;
};

// Diffusion coefficient law d(p) with first and second derivatives.
// Kept virtual so tests can substitute linear laws.
class DiffusionLaw {
public:
  virtual ~DiffusionLaw() = default;
  virtual void eval(double p, double &d, double &dp, double &dpp) const = 0;
  double value(double p) const {
    double d, d1, d2;
    eval(p, d, d1, d2);
    return d;
  }
};

// d(p) = (36/c4) p^2 (1-p)^2 / (p^3 + (12/c4)(1-p)^3)^2 + c0.
class NonlinearDiffusion final : public DiffusionLaw {
public:
  explicit NonlinearDiffusion(DiffusionParams params);
  void eval(double p, double &d, double &dp, double &dpp) const override;
  const DiffusionParams &params() const { return params_; }

private:
  DiffusionParams params_;
};

// Pointwise evaluation bundle of d and its first two derivatives.
struct DiffusionEval {
  double d = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};
DiffusionEval diffusion(double p, const DiffusionParams &params);

// Test case 1 manufactured solution and its analytic derivatives.
double tc1_exact(double x, double y);
void tc1_exact_derivs(double x, double y, double &p, double &px, double &py,
                      double &pxx, double &pyy);
// Forcing so that tc1_exact solves -div(d(p) grad p) = s.
double tc1_source(double x, double y, const DiffusionParams &params);

// Test case 2 indicator source (closed boxes).
double tc2_source(double x, double y);

enum class TestCaseTag { TC1, TC2 };

struct Rect {
  double x0, x1, y0, y1;
};

// Bundles the domain, diffusion law, source and (for TC1) the exact
// solution; also carries the parameter-box defaults of the experiments.
struct TestCase {
  TestCaseTag tag = TestCaseTag::TC1;
  Rect domain{0.0, 2.0, 0.0, 1.0};
  DiffusionParams params;
  std::shared_ptr<const DiffusionLaw> law;
  std::function<double(double, double)> source;
  std::optional<std::function<double(double, double)>> exact;

  // Initial parameter-grid breaks in the x-factor and the U / U' boxes.
  std::vector<double> grid_x_breaks;
  std::array<double, 2> box_I0{-0.5, 0.5};
  std::array<double, 2> box_I1{-1.0, 1.0};

  bool source_is_box_indicator() const { return tag == TestCaseTag::TC2; }
};

TestCase make_test_case(TestCaseTag tag, std::optional<double> c0 = {},
                        std::optional<double> c4 = {}, int Q = 1);

} // namespace hmr

#endif // HMR_MODEL_PROBLEM_HPP
