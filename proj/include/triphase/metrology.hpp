#pragma once

// Fringe quantification: harmonic content, visibility, error-propagation
// phase sensitivity, quantum-limit reference values, and the ratio sweep.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "triphase/mzi.hpp"

namespace triphase {

struct FourierComponents {
  double c0 = 0.0;       // mean level, (1/2pi) integral of R
  cplx c1{0.0, 0.0};     // harmonic projections (1/pi) integral of R e^{-ik phi}
  cplx c2{0.0, 0.0};
  cplx c3{0.0, 0.0};
};

namespace detail {

// Returns the number of usable points of a uniform full-period grid (drops a
// duplicated closing endpoint), or throws.
inline std::size_t periodic_points(const FringeScan& scan) {
  validate_scan(scan);
  const std::size_t n = scan.phases.size();
  if (n < 2) throw std::invalid_argument("periodic grid: need at least two points");
  const double h = scan.phases[1] - scan.phases[0];
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(scan.phases[i] - scan.phases[i - 1] - h) > 1e-9)
      throw std::invalid_argument("periodic grid: non-uniform spacing");
  const double span = scan.phases.back() - scan.phases.front();
  if (std::abs(span + h - 2 * pi) <= 1e-9) return n;       // open grid
  if (std::abs(span - 2 * pi) <= 1e-9) return n - 1;       // closed grid, drop duplicate
  throw std::invalid_argument("periodic grid: scan must span one full period");
}

}  // namespace detail

// Discrete harmonic projections on a uniform full-period grid; exact for
// trigonometric polynomials of degree <= 3 on 8 or more points.
inline FourierComponents fourier_components(const FringeScan& scan) {
  const std::size_t n = detail::periodic_points(scan);
  if (n < 16) throw std::invalid_argument("fourier_components: need at least 16 points");
  FourierComponents fc;
  cplx acc[3] = {};
  for (std::size_t j = 0; j < n; ++j) {
    const double r = scan.values[j];
    const double phi = scan.phases[j];
    fc.c0 += r;
    for (int k = 1; k <= 3; ++k) acc[k - 1] += r * std::exp(cplx{0.0, -k * phi});
  }
  fc.c0 /= static_cast<double>(n);
  fc.c1 = 2.0 * acc[0] / static_cast<double>(n);
  fc.c2 = 2.0 * acc[1] / static_cast<double>(n);
  fc.c3 = 2.0 * acc[2] / static_cast<double>(n);
  return fc;
}

inline double visibility(const FringeScan& scan) {
  validate_scan(scan);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double v : scan.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= 0.0) throw std::invalid_argument("visibility: all-zero scan");
  return (hi - lo) / (hi + lo);
}

// Error-propagation sensitivity sqrt(R)/|dR/dphi| with a central finite
// difference (step 1e-5 rad). Points whose slope is below eps_slope are
// excluded (nullopt) rather than reported as spurious super-sensitivity.
// When eps_slope is not positive, the default 1e-9 * max R is estimated from
// a 720-point scan of the callable.
inline std::optional<double> phase_sensitivity(const std::function<double(double)>& rate,
                                               double phi, double eps_slope = -1.0) {
  if (!(eps_slope > 0.0)) {
    double peak = 0.0;
    for (double p : uniform_phase_grid(720)) peak = std::max(peak, rate(p));
    eps_slope = 1e-9 * peak;
  }
  const double h = 1e-5;
  const double slope = (rate(phi + h) - rate(phi - h)) / (2 * h);
  if (std::abs(slope) < eps_slope) return std::nullopt;
  const double r = std::max(rate(phi), 0.0);
  return std::sqrt(r) / std::abs(slope);
}

struct SensitivityCurve {
  std::vector<double> phases;
  std::vector<double> delta_phi;  // NaN marks excluded (flat-slope) points
  double min_value = 0.0;
  double min_phase = 0.0;
};

// Minimum error-propagation sensitivity of the corrected-model fringe for
// the given source. The fringe is first scaled to unit peak, which makes the
// figure a per-detected-event sensitivity comparable across sources: for the
// pure threefold fringe (1 - cos 3phi)/2 the curve is 1/(3|cos(3phi/2)|),
// whose minimum is exactly the three-photon Heisenberg value 1/3.
inline SensitivityCurve min_sensitivity(const SourceParams& src, int grid) {
  if (grid < 64) throw std::invalid_argument("min_sensitivity: grid must be at least 64");
  const AnalyticCoefficients coeffs = analytic_coefficients(src, true);

  double peak = 0.0;
  const std::vector<double> phis = uniform_phase_grid(grid);
  for (double p : phis) peak = std::max(peak, three_photon_rate_analytic(coeffs, p));
  if (peak <= 0.0) throw std::invalid_argument("min_sensitivity: zero fringe");
  const auto unit_rate = [&](double p) {
    return std::max(0.0, three_photon_rate_analytic(coeffs, p)) / peak;
  };

  SensitivityCurve curve;
  curve.phases = phis;
  curve.delta_phi.resize(phis.size(), std::numeric_limits<double>::quiet_NaN());
  curve.min_value = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < phis.size(); ++j) {
    const auto dp = phase_sensitivity(unit_rate, phis[j], 1e-9);
    if (!dp) continue;
    curve.delta_phi[j] = *dp;
    any = true;
    if (*dp < curve.min_value) {
      curve.min_value = *dp;
      curve.min_phase = phis[j];
    }
  }
  if (!any) throw std::runtime_error("min_sensitivity: every grid point excluded");
  return curve;
}

inline double sql_limit(double n) {
  if (!(n > 0.0)) throw std::invalid_argument("sql_limit: photon number must be positive");
  return 1.0 / std::sqrt(n);
}

inline double hl_limit(double n) {
  if (!(n > 0.0)) throw std::invalid_argument("hl_limit: photon number must be positive");
  return 1.0 / n;
}

struct RatioSweepRow {
  double ratio = 0.0;
  FourierComponents fourier;   // of the normalized fringe
  int dominant_harmonic = 0;   // k in 1..3 maximizing |c_k|
  double visibility = 0.0;
  double min_delta_phi = 0.0;
};

// One row per ratio alpha^2/s: harmonic content and visibility of the
// normalized corrected fringe plus the minimum sensitivity.
inline std::vector<RatioSweepRow> ratio_sweep(double s, const std::vector<double>& ratios,
                                              int grid) {
  if (!(s > 0.0)) throw std::invalid_argument("ratio_sweep: squeeze parameter must be positive");
  std::vector<RatioSweepRow> rows;
  rows.reserve(ratios.size());
  for (double ratio : ratios) {
    if (!(ratio > 0.0)) throw std::invalid_argument("ratio_sweep: ratios must be positive");
    SourceParams src;
    src.squeeze = s;
    src.alpha_mag = std::sqrt(ratio * s);
    const FringeScan fringe =
        normalize_fringe(analytic_scan(analytic_coefficients(src, true), grid));
    RatioSweepRow row;
    row.ratio = ratio;
    row.fourier = fourier_components(fringe);
    const double m1 = std::abs(row.fourier.c1), m2 = std::abs(row.fourier.c2),
                 m3 = std::abs(row.fourier.c3);
    row.dominant_harmonic = (m1 >= m2 && m1 >= m3) ? 1 : (m2 >= m3 ? 2 : 3);
    row.visibility = visibility(fringe);
    row.min_delta_phi = min_sensitivity(src, grid).min_value;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace triphase
