#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "triphase/fit.hpp"

using namespace triphase;

namespace {

SourceParams low_order_source(double alpha_sq, double s) {
  SourceParams src;
  src.alpha_mag = std::sqrt(alpha_sq);
  src.squeeze = s;
  return src;
}

FringeScan model_scan(const FitModelParams& p, FitForm form, int n) {
  FringeScan scan;
  scan.phases = uniform_phase_grid(n);
  for (double phi : scan.phases) scan.values.push_back(fit_model_eval(p, phi, form));
  return scan;
}

}  // namespace

TEST(FitModel, VerbatimCollapsesToSingleHarmonicAtYThree) {
  FitModelParams p;
  p.scale = 0.01;
  p.offset = 900.0;
  p.y = 3.0;
  p.phi1 = 0.4;
  for (double phi : uniform_phase_grid(16)) {
    const double expected = p.scale * (p.offset - 864.0 * std::cos(phi - p.phi1));
    EXPECT_NEAR(fit_model_eval(p, phi, FitForm::verbatim), expected, 1e-12);
  }
}

TEST(FitModel, CorrectedBalancedRatioIsPureThreefold) {
  FitModelParams p;
  p.scale = 2.0;
  p.offset = 20.0;
  p.y = 1.0;
  p.phi1 = -0.3;
  for (double phi : uniform_phase_grid(16)) {
    const double expected = p.scale * (p.offset - 16.0 * std::cos(3 * (phi - p.phi1)));
    EXPECT_NEAR(fit_model_eval(p, phi, FitForm::corrected), expected, 1e-12);
  }
}

TEST(FitModel, ZeroVisibilityIsFlat) {
  FitModelParams p;
  p.scale = 3.0;
  p.offset = 7.0;
  p.y = 2.0;
  p.vis = 0.0;
  for (double phi : uniform_phase_grid(12))
    EXPECT_DOUBLE_EQ(fit_model_eval(p, phi, FitForm::corrected), 21.0);
}

TEST(FitInitialize, BalancedPatternSeedsYNearOne) {
  FitModelParams truth;
  truth.scale = 5.0;
  truth.offset = 40.0;
  truth.y = 1.0;
  truth.phi1 = 0.25;
  const FitModelParams init =
      fit_initialize(model_scan(truth, FitForm::corrected, 48), FitForm::corrected);
  EXPECT_GE(init.y, 0.9);
  EXPECT_LE(init.y, 1.1);
  // At y = 1 the fringe is pure cos(3 phi), so phi1 is only defined modulo
  // 2 pi / 3; check agreement up to that symmetry.
  const double d3 = std::remainder(init.phi1 - truth.phi1, 2 * pi / 3);
  EXPECT_NEAR(d3, 0.0, 0.05);
  EXPECT_NEAR(init.scale * init.offset, truth.scale * truth.offset, 1e-6 * 200.0);
}

TEST(FitInitialize, SingleHarmonicPatternSeedsLargeY) {
  FringeScan scan;
  scan.phases = uniform_phase_grid(48);
  for (double phi : scan.phases) scan.values.push_back(10.0 + 3.0 * std::cos(phi));
  const FitModelParams init = fit_initialize(scan, FitForm::corrected);
  EXPECT_GE(init.y, 100.0);
}

TEST(FitInitialize, ConstantScanThrows) {
  FringeScan scan;
  scan.phases = uniform_phase_grid(24);
  scan.values.assign(24, 5.0);
  EXPECT_THROW(fit_initialize(scan, FitForm::corrected), std::invalid_argument);
}

TEST(FitFringe, RecoversCorrectedParametersExactly) {
  FitModelParams truth;
  truth.scale = 7.3;
  truth.offset = 52.1;
  truth.y = 1.03;
  truth.phi1 = 0.2;
  const FitResult res = fit_fringe(model_scan(truth, FitForm::corrected, 72), FitForm::corrected);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.form, FitForm::corrected);
  EXPECT_NEAR(res.params.scale, truth.scale, 1e-6 * truth.scale);
  EXPECT_NEAR(res.params.offset, truth.offset, 1e-6 * truth.offset);
  EXPECT_NEAR(res.params.y, truth.y, 1e-6 * truth.y);
  EXPECT_NEAR(res.params.phi1, truth.phi1, 1e-6);
  EXPECT_DOUBLE_EQ(res.params.vis, 1.0);
  EXPECT_LE(res.residual_rms, 1e-8 * truth.scale * truth.offset);
  EXPECT_TRUE(std::isnan(res.std_errors.vis));
}

TEST(FitFringe, RecoversVerbatimParametersExactly) {
  FitModelParams truth;
  truth.scale = 0.02;
  truth.offset = 400.0;
  truth.y = 2.2;
  truth.phi1 = -0.4;
  const FitResult res = fit_fringe(model_scan(truth, FitForm::verbatim, 72), FitForm::verbatim);
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.params.scale, truth.scale, 1e-6 * truth.scale);
  EXPECT_NEAR(res.params.offset, truth.offset, 1e-6 * truth.offset);
  EXPECT_NEAR(res.params.y, truth.y, 1e-6 * truth.y);
  EXPECT_NEAR(res.params.phi1, truth.phi1, 1e-6);
}

TEST(FitFringe, FloatVisRecoversVisibilityWithFrozenOffset) {
  FitModelParams truth;
  truth.scale = 2.0;
  truth.offset = 30.0;
  truth.y = 1.03;
  truth.phi1 = -0.7;
  truth.vis = 0.48;
  FitModelParams init;
  init.scale = 1.8;
  init.offset = 30.0;  // frozen at the true value
  init.y = 1.0;
  init.phi1 = -0.5;
  init.vis = 1.0;
  FitOptions opts;
  opts.float_vis = true;
  const FitResult res =
      fit_fringe(model_scan(truth, FitForm::corrected, 72), FitForm::corrected, init, opts);
  EXPECT_TRUE(res.converged);
  EXPECT_DOUBLE_EQ(res.params.offset, 30.0);
  EXPECT_NEAR(res.params.vis, truth.vis, 1e-6);
  EXPECT_NEAR(res.params.scale, truth.scale, 1e-6 * truth.scale);
  EXPECT_NEAR(res.params.y, truth.y, 1e-6 * truth.y);
  EXPECT_TRUE(std::isnan(res.std_errors.offset));
  EXPECT_FALSE(std::isnan(res.std_errors.vis));
}

TEST(FitFringe, PoissonCountsRecoverRatioAndPhase) {
  const MZISettings base = calibrated_settings();
  int ok = 0;
  for (double ratio : {0.53, 1.03}) {
    const SourceParams src = low_order_source(ratio * 0.06, 0.06);
    double peak = 0.0;
    for (double v : oracle_scan(src, base, 72).values) peak = std::max(peak, v);
    const double exposure = 1.1e4 / peak;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const FringeScan counts = synthetic_scan(src, base, 72, exposure, seed, 0.2);
      const FitResult res = fit_fringe(counts, FitForm::corrected);
      const bool good = res.converged && std::abs(res.params.y - ratio) <= 0.05 * ratio &&
                        std::abs(res.params.phi1 - 0.2) <= 0.05;
      ok += good ? 1 : 0;
    }
  }
  EXPECT_GE(ok, 18);
}

TEST(FitFringe, ObjectiveTraceIsNonIncreasing) {
  const SourceParams src = low_order_source(0.0618, 0.06);
  const FringeScan counts = synthetic_scan(src, calibrated_settings(), 72, 5e8, 7, 0.1);
  std::vector<double> trace;
  FitOptions opts;
  opts.objective_trace = &trace;
  const FitResult res = fit_fringe(counts, FitForm::corrected, std::nullopt, opts);
  EXPECT_TRUE(res.converged);
  ASSERT_GE(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12);
}

TEST(FitFringe, StandardErrorsShrinkWithExposure) {
  const SourceParams src = low_order_source(0.0618, 0.06);
  const MZISettings base = calibrated_settings();
  double prev = std::numeric_limits<double>::infinity();
  for (double exposure : {3e8, 3e9, 3e10}) {
    const FringeScan counts = synthetic_scan(src, base, 72, exposure, 11, 0.0);
    const FitResult res = fit_fringe(counts, FitForm::corrected);
    ASSERT_TRUE(res.converged);
    ASSERT_FALSE(std::isnan(res.std_errors.y));
    EXPECT_LT(res.std_errors.y, prev);
    prev = res.std_errors.y;
  }
}

TEST(FitFringe, PhaseOffsetReportedInPrincipalRange) {
  FitModelParams truth;
  truth.scale = 4.0;
  truth.offset = 45.0;
  truth.y = 1.03;
  truth.phi1 = -3.3;  // aliases to 2 pi - 3.3
  const FitResult res = fit_fringe(model_scan(truth, FitForm::corrected, 72), FitForm::corrected);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(std::abs(res.params.phi1), pi + 1e-12);
  EXPECT_NEAR(res.params.phi1, 2 * pi - 3.3, 1e-6);
}

TEST(FitFringe, Errors) {
  FringeScan small;
  small.phases = {0.0, 1.0, 2.0};
  small.values = {1.0, 2.0, 3.0};
  EXPECT_THROW(fit_fringe(small, FitForm::corrected), std::invalid_argument);

  FringeScan zeros;
  zeros.phases = uniform_phase_grid(24);
  zeros.values.assign(24, 0.0);
  zeros.kind = ScanKind::counts;
  EXPECT_THROW(fit_fringe(zeros, FitForm::corrected), std::invalid_argument);
}

TEST(SyntheticScan, ZeroExposureAndZeroSourceGiveZeroCounts) {
  const MZISettings base = calibrated_settings();
  const FringeScan off =
      synthetic_scan(low_order_source(0.06, 0.06), base, 24, 0.0, 3);
  for (double v : off.values) EXPECT_EQ(v, 0.0);
  const FringeScan dark = synthetic_scan(low_order_source(0.0, 0.1), base, 24, 1e9, 3);
  for (double v : dark.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(off.kind, ScanKind::counts);
}

TEST(SyntheticScan, SameSeedReproducesExactly) {
  const SourceParams src = low_order_source(0.0618, 0.06);
  const MZISettings base = calibrated_settings();
  const FringeScan a = synthetic_scan(src, base, 48, 1e8, 42, 0.3);
  const FringeScan b = synthetic_scan(src, base, 48, 1e8, 42, 0.3);
  const FringeScan c = synthetic_scan(src, base, 48, 1e8, 43, 0.3);
  ASSERT_EQ(a.values.size(), b.values.size());
  for (std::size_t j = 0; j < a.values.size(); ++j) EXPECT_EQ(a.values[j], b.values[j]);
  bool any_diff = false;
  for (std::size_t j = 0; j < a.values.size(); ++j) any_diff |= (a.values[j] != c.values[j]);
  EXPECT_TRUE(any_diff);
}

TEST(SyntheticScan, CountsAreIntegersWithPoissonMean) {
  const SourceParams src = low_order_source(0.0618, 0.06);
  const MZISettings base = calibrated_settings();
  MZISettings at_peak = base;
  at_peak.phase = pi / 3;  // bright fringe for this ratio
  const double mean_rate = three_photon_rate_oracle(product_input(src), at_peak);
  const double exposure = 400.0 / mean_rate;

  double total = 0.0;
  const int n_rep = 400;
  for (int rep = 0; rep < n_rep; ++rep) {
    const FringeScan scan =
        synthetic_scan(src, base, 24, exposure, 1000 + static_cast<std::uint64_t>(rep));
    for (double v : scan.values) EXPECT_EQ(v, std::floor(v));
    // phase grid point 16 sits at phi = pi / 3, a bright fringe.
    total += scan.values[16];
  }
  const double expected = exposure * mean_rate;  // = 400 by construction
  const double sample_mean = total / n_rep;
  const double se = std::sqrt(expected / n_rep);
  EXPECT_NEAR(sample_mean, expected, 4.0 * se);
}

TEST(SyntheticScan, PhaseOffsetShiftsFringe) {
  const SourceParams src = low_order_source(0.0618, 0.06);
  const MZISettings base = calibrated_settings();
  // Huge exposure makes relative Poisson noise negligible; the shifted scan's
  // value at phi + d matches the unshifted scan's value at phi to ~0.1%.
  const FringeScan ref = synthetic_scan(src, base, 24, 1e12, 5, 0.0);
  const double d = 2 * pi * 3 / 24;  // three grid steps
  const FringeScan moved = synthetic_scan(src, base, 24, 1e12, 5, d);
  for (std::size_t j = 3; j < moved.values.size(); ++j) {
    EXPECT_NEAR(moved.values[j], ref.values[j - 3], 4e-3 * (ref.values[j - 3] + 1e5));
  }
}
