#pragma once

// Fringe-scan fitting against the closed-form model (verbatim transcription
// or oracle-corrected coefficient functions) plus a seeded Poisson synthetic
// scan generator for end-to-end validation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "triphase/metrology.hpp"
#include "triphase/mzi.hpp"

namespace triphase {

enum class FitForm { verbatim, corrected };

struct FitModelParams {
  double scale = 1.0;   // overall positive factor
  double offset = 0.0;  // DC term, in units of scale
  double y = 1.0;       // ratio parameter (scaled alpha^2/s), positive
  double phi1 = 0.0;    // apparatus phase offset, radians
  double vis = 1.0;     // visibility multiplier on the oscillatory part, in [0,1]
};

struct FitStdErrors {
  double scale = std::numeric_limits<double>::quiet_NaN();
  double offset = std::numeric_limits<double>::quiet_NaN();
  double y = std::numeric_limits<double>::quiet_NaN();
  double phi1 = std::numeric_limits<double>::quiet_NaN();
  double vis = std::numeric_limits<double>::quiet_NaN();
};

struct FitResult {
  FitModelParams params;
  FitStdErrors std_errors;  // NaN for frozen parameters
  double residual_rms = 0.0;
  int n_iter = 0;
  bool converged = false;
  FitForm form = FitForm::corrected;
};

struct FitOptions {
  // The joint scale of {scale, vis, offset} is not identifiable, so exactly
  // one of vis/offset floats: by default offset floats with vis frozen at 1;
  // with float_vis the visibility floats and offset is frozen at its initial
  // value.
  bool float_vis = false;
  int max_iter = 500;
  std::vector<double>* objective_trace = nullptr;  // accepted-step objectives
};

namespace detail {

// Oscillatory coefficient functions of y for the two model forms.
inline std::array<double, 3> fit_harmonics(double y, FitForm form) {
  if (form == FitForm::verbatim)
    return {-6 * y * (y + 1) * (5 * y - 3),  // cos(phi - phi1)
            12 * (y - 3) * (y + 1),          // cos 2(phi - phi1)
            -(y - 3) * (y - 3)};             // cos 3(phi - phi1)
  const CoefficientPolys p = corrected_coefficient_polys(y);
  return {p.c1, p.c2, p.c3};
}

}  // namespace detail

inline double fit_model_eval(const FitModelParams& p, double phi, FitForm form) {
  const std::array<double, 3> h = detail::fit_harmonics(p.y, form);
  const double u = phi - p.phi1;
  return p.scale *
         (p.offset + p.vis * (h[0] * std::cos(u) + h[1] * std::cos(2 * u) + h[2] * std::cos(3 * u)));
}

namespace detail {

// Candidate initializations from the harmonic content of the scan: the
// magnitude pattern of (c1, c2, c3) selects y on a log grid, the dominant
// harmonic's phase seeds phi1 up to a k-fold branch ambiguity. Near y = 1 the
// model is almost invariant under phi1 -> phi1 + 2 pi / 3, so all branches
// are returned, ordered by ascending sum of squared residuals.
inline std::vector<FitModelParams> fit_init_branches(const FringeScan& scan, FitForm form) {
  const std::size_t n = detail::periodic_points(scan);
  if (n < 8) throw std::invalid_argument("fit_initialize: need at least 8 points");

  double c0 = 0.0, lo = scan.values[0], hi = scan.values[0];
  cplx ck[3] = {};
  for (std::size_t j = 0; j < n; ++j) {
    const double r = scan.values[j];
    c0 += r / static_cast<double>(n);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    for (int k = 1; k <= 3; ++k)
      ck[k - 1] += 2.0 * r * std::exp(cplx{0.0, -k * scan.phases[j]}) / static_cast<double>(n);
  }
  if (!(hi > lo)) throw std::invalid_argument("fit_initialize: constant scan");

  const std::array<double, 3> mag{std::abs(ck[0]), std::abs(ck[1]), std::abs(ck[2])};
  const double mag_norm = std::sqrt(mag[0] * mag[0] + mag[1] * mag[1] + mag[2] * mag[2]);
  if (!(mag_norm > 0.0)) throw std::invalid_argument("fit_initialize: no harmonic content");

  // Branch scan for y over 1e-2..1e3, eight points per decade.
  double best_y = 1.0, best_dist = std::numeric_limits<double>::infinity();
  for (int i = -16; i <= 24; ++i) {
    const double y = std::pow(10.0, i / 8.0);
    const std::array<double, 3> h = detail::fit_harmonics(y, form);
    const double hn = std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
    double dist = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double d = mag[k] / mag_norm - std::abs(h[k]) / hn;
      dist += d * d;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best_y = y;
    }
  }

  FitModelParams init;
  init.y = best_y;
  init.vis = 1.0;
  const std::array<double, 3> h = detail::fit_harmonics(best_y, form);
  const double hn = std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
  init.scale = mag_norm / hn;
  init.offset = c0 / init.scale;

  // phi1 from the dominant harmonic: model projection is h_k e^{-ik phi1},
  // so phi1 = -(arg c_k - arg h_k)/k up to the k-fold branch; pick the branch
  // with the smallest sum of squared residuals.
  int kd = 0;
  for (int k = 1; k < 3; ++k)
    if (mag[k] > mag[kd]) kd = k;
  const double arg_h = h[kd] >= 0.0 ? 0.0 : pi;
  const double base = -(std::arg(ck[kd]) - arg_h) / (kd + 1);
  std::vector<std::pair<double, FitModelParams>> ranked;
  for (int m = 0; m <= kd; ++m) {
    FitModelParams trial = init;
    trial.phi1 = base + 2.0 * pi * m / (kd + 1);
    trial.phi1 -= 2.0 * pi * std::round(trial.phi1 / (2.0 * pi));
    double sse = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = fit_model_eval(trial, scan.phases[j], form) - scan.values[j];
      sse += d * d;
    }
    ranked.emplace_back(sse, trial);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<FitModelParams> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(r.second);
  return out;
}

}  // namespace detail

// Seed parameters from the harmonic content of the scan; among the phi1
// branch candidates the smallest-residual one wins.
inline FitModelParams fit_initialize(const FringeScan& scan, FitForm form = FitForm::corrected) {
  return detail::fit_init_branches(scan, form).front();
}

namespace detail {

// Solve the symmetric positive system via Gauss-Jordan with partial pivoting;
// returns false if singular.
inline bool solve_dense(std::vector<double> a, std::vector<double> b, int n,
                        std::vector<double>& x) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int row = col + 1; row < n; ++row)
      if (std::abs(a[row * n + col]) > std::abs(a[piv * n + col])) piv = row;
    if (std::abs(a[piv * n + col]) < 1e-300) return false;
    if (piv != col) {
      for (int k = 0; k < n; ++k) std::swap(a[col * n + k], a[piv * n + k]);
      std::swap(b[col], b[piv]);
    }
    const double d = a[col * n + col];
    for (int k = 0; k < n; ++k) a[col * n + k] /= d;
    b[col] /= d;
    for (int row = 0; row < n; ++row) {
      if (row == col) continue;
      const double f = a[row * n + col];
      if (f == 0.0) continue;
      for (int k = 0; k < n; ++k) a[row * n + k] -= f * a[col * n + k];
      b[row] -= f * b[col];
    }
  }
  x = b;
  return true;
}

inline bool invert_dense(std::vector<double> a, int n, std::vector<double>& inv) {
  inv.assign(n * n, 0.0);
  for (int i = 0; i < n; ++i) inv[i * n + i] = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int row = col + 1; row < n; ++row)
      if (std::abs(a[row * n + col]) > std::abs(a[piv * n + col])) piv = row;
    if (std::abs(a[piv * n + col]) < 1e-300) return false;
    if (piv != col)
      for (int k = 0; k < n; ++k) {
        std::swap(a[col * n + k], a[piv * n + k]);
        std::swap(inv[col * n + k], inv[piv * n + k]);
      }
    const double d = a[col * n + col];
    for (int k = 0; k < n; ++k) {
      a[col * n + k] /= d;
      inv[col * n + k] /= d;
    }
    for (int row = 0; row < n; ++row) {
      if (row == col) continue;
      const double f = a[row * n + col];
      if (f == 0.0) continue;
      for (int k = 0; k < n; ++k) {
        a[row * n + k] -= f * a[col * n + k];
        inv[row * n + k] -= f * inv[col * n + k];
      }
    }
  }
  return true;
}

// Internal optimizer coordinates: scale and y move on a log axis so
// positivity is structural; vis, when floating, is clamped to [0,1]. The
// active set is {log scale, offset, log y, phi1} by default and
// {log scale, log y, phi1, vis} when vis floats (offset frozen).
enum InternalCoord { kLogScale = 0, kOffset = 1, kLogY = 2, kPhi1 = 3, kVis = 4 };

struct FitParameterization {
  bool float_vis = false;

  std::vector<int> active() const {
    if (float_vis) return {kLogScale, kLogY, kPhi1, kVis};
    return {kLogScale, kOffset, kLogY, kPhi1};
  }
  int dim() const { return 4; }

  std::vector<double> pack(const FitModelParams& p) const {
    std::vector<double> t(dim());
    const std::vector<int> idx = active();
    for (int i = 0; i < dim(); ++i) {
      switch (idx[i]) {
        case kLogScale: t[i] = std::log(p.scale); break;
        case kOffset: t[i] = p.offset; break;
        case kLogY: t[i] = std::log(p.y); break;
        case kPhi1: t[i] = p.phi1; break;
        case kVis: t[i] = p.vis; break;
      }
    }
    return t;
  }

  FitModelParams unpack(const std::vector<double>& t, const FitModelParams& frozen) const {
    FitModelParams p = frozen;
    const std::vector<int> idx = active();
    for (int i = 0; i < dim(); ++i) {
      switch (idx[i]) {
        case kLogScale: p.scale = std::exp(t[i]); break;
        case kOffset: p.offset = t[i]; break;
        case kLogY: p.y = std::exp(t[i]); break;
        case kPhi1: p.phi1 = t[i]; break;
        case kVis: p.vis = std::min(1.0, std::max(0.0, t[i])); break;
      }
    }
    return p;
  }
};

}  // namespace detail

namespace detail {

// One damped Gauss-Newton (Levenberg-Marquardt) run from a concrete start,
// with a central-difference Jacobian. f_final receives the final weighted
// objective so callers can rank restarts.
inline FitResult fit_lm(const FringeScan& scan, FitForm form, FitModelParams start,
                        const FitOptions& opts, const std::vector<double>& weight,
                        std::vector<double>* trace, double& f_final) {
  const std::size_t n = scan.phases.size();
  if (!(start.scale > 0.0) || !(start.y > 0.0))
    throw std::invalid_argument("fit_fringe: initialization needs positive scale and y");
  start.vis = std::min(1.0, std::max(0.0, start.vis));

  detail::FitParameterization par;
  par.float_vis = opts.float_vis;
  const int dim = par.dim();
  std::vector<double> t = par.pack(start);

  const auto objective = [&](const std::vector<double>& tv) {
    const FitModelParams p = par.unpack(tv, start);
    double f = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = fit_model_eval(p, scan.phases[j], form) - scan.values[j];
      f += weight[j] * d * d;
    }
    return f;
  };

  double f_cur = objective(t);
  const double f0 = f_cur;
  const double gtol = 1e-8 * std::max(1.0, f0);
  if (trace) trace->push_back(f_cur);

  double lambda = 1e-3;
  int n_iter = 0;
  int streak = 0;
  bool converged = false;
  double last_rel_decrease = std::numeric_limits<double>::infinity();

  std::vector<double> jac(n * dim), grad(dim), hess(dim * dim), step, t_trial(dim);
  const int max_iter = std::max(1, opts.max_iter);

  while (n_iter < max_iter) {
    ++n_iter;

    // Central-difference Jacobian of the weighted residuals at t.
    for (int i = 0; i < dim; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(t[i]));
      std::vector<double> tp = t, tm = t;
      tp[i] += h;
      tm[i] -= h;
      const FitModelParams pp = par.unpack(tp, start);
      const FitModelParams pm = par.unpack(tm, start);
      for (std::size_t j = 0; j < n; ++j) {
        const double rp = fit_model_eval(pp, scan.phases[j], form) - scan.values[j];
        const double rm = fit_model_eval(pm, scan.phases[j], form) - scan.values[j];
        jac[j * dim + i] = std::sqrt(weight[j]) * (rp - rm) / (2 * h);
      }
    }
    const FitModelParams p_cur = par.unpack(t, start);
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double r = std::sqrt(weight[j]) *
                       (fit_model_eval(p_cur, scan.phases[j], form) - scan.values[j]);
      for (int i = 0; i < dim; ++i) {
        grad[i] += jac[j * dim + i] * r;
        for (int k = i; k < dim; ++k) hess[i * dim + k] += jac[j * dim + i] * jac[j * dim + k];
      }
    }
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < i; ++k) hess[i * dim + k] = hess[k * dim + i];

    double grad_inf = 0.0;
    for (double g : grad) grad_inf = std::max(grad_inf, std::abs(g));

    // Predicted decrease of the local quadratic model for a full Newton step.
    // This is the scale-free stall test: for counting data the gradient floor
    // set by finite-difference noise can sit above any fixed gtol even at the
    // minimum, while the achievable decrease still collapses to nothing.
    double predicted_rel = std::numeric_limits<double>::infinity();
    {
      std::vector<double> a = hess;
      for (int i = 0; i < dim; ++i) a[i * dim + i] += 1e-12 * std::max(hess[i * dim + i], 1e-300);
      std::vector<double> rhs(dim);
      for (int i = 0; i < dim; ++i) rhs[i] = -grad[i];
      std::vector<double> newton;
      if (detail::solve_dense(a, rhs, dim, newton)) {
        double q = 0.0;
        for (int i = 0; i < dim; ++i) q -= 0.5 * grad[i] * newton[i];
        predicted_rel = std::abs(q) / std::max(f_cur, 1e-300);
      }
    }

    if (last_rel_decrease < 1e-10 && (grad_inf < gtol || predicted_rel < 1e-10)) {
      if (++streak >= 2) {
        converged = true;
        break;
      }
    } else {
      streak = 0;
    }

    // Damped step search; on total stall record zero progress and continue so
    // the convergence streak can still build at a flat optimum.
    bool accepted = false;
    while (lambda <= 1e12) {
      std::vector<double> a = hess;
      for (int i = 0; i < dim; ++i) a[i * dim + i] += lambda * std::max(hess[i * dim + i], 1e-300);
      std::vector<double> rhs(dim);
      for (int i = 0; i < dim; ++i) rhs[i] = -grad[i];
      if (!detail::solve_dense(a, rhs, dim, step)) {
        lambda *= 2.0;
        continue;
      }
      for (int i = 0; i < dim; ++i) t_trial[i] = t[i] + step[i];
      if (par.float_vis) t_trial[3] = std::min(1.0, std::max(0.0, t_trial[3]));
      const double f_trial = objective(t_trial);
      if (std::isfinite(f_trial) && f_trial < f_cur) {
        last_rel_decrease = (f_cur - f_trial) / std::max(f_cur, 1e-300);
        t = t_trial;
        f_cur = f_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (trace) trace->push_back(f_cur);
        break;
      }
      lambda *= 2.0;
    }
    if (!accepted) {
      last_rel_decrease = 0.0;
      lambda = 1e-3;
    }
  }

  FitResult result;
  result.form = form;
  result.converged = converged;
  result.n_iter = n_iter;
  result.params = par.unpack(t, start);
  result.params.phi1 -= 2.0 * pi * std::round(result.params.phi1 / (2.0 * pi));
  if (result.params.phi1 <= -pi) result.params.phi1 += 2.0 * pi;

  double sse = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = fit_model_eval(result.params, scan.phases[j], form) - scan.values[j];
    sse += d * d;
  }
  result.residual_rms = std::sqrt(sse / n);

  // Standard errors from the quadratic model at the optimum: the covariance
  // of the internal coordinates is s^2 (J^T W J)^{-1}, mapped to external
  // units through the log axes. Recompute the Jacobian at the final point so
  // non-converged exits also report a consistent quadratic model.
  if (static_cast<int>(n) > dim) {
    const FitModelParams p_fin = result.params;
    for (int i = 0; i < dim; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(t[i]));
      std::vector<double> tp = t, tm = t;
      tp[i] += h;
      tm[i] -= h;
      const FitModelParams pp = par.unpack(tp, start);
      const FitModelParams pm = par.unpack(tm, start);
      for (std::size_t j = 0; j < n; ++j) {
        const double rp = fit_model_eval(pp, scan.phases[j], form) - scan.values[j];
        const double rm = fit_model_eval(pm, scan.phases[j], form) - scan.values[j];
        jac[j * dim + i] = std::sqrt(weight[j]) * (rp - rm) / (2 * h);
      }
    }
    std::fill(hess.begin(), hess.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      for (int i = 0; i < dim; ++i)
        for (int k = i; k < dim; ++k) hess[i * dim + k] += jac[j * dim + i] * jac[j * dim + k];
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < i; ++k) hess[i * dim + k] = hess[k * dim + i];

    std::vector<double> cov;
    if (detail::invert_dense(hess, dim, cov)) {
      const double s2 = f_cur / (static_cast<double>(n) - dim);
      const std::vector<int> idx = par.active();
      for (int i = 0; i < dim; ++i) {
        const double se = std::sqrt(std::max(cov[i * dim + i] * s2, 0.0));
        switch (idx[i]) {
          case detail::kLogScale: result.std_errors.scale = se * p_fin.scale; break;
          case detail::kOffset: result.std_errors.offset = se; break;
          case detail::kLogY: result.std_errors.y = se * p_fin.y; break;
          case detail::kPhi1: result.std_errors.phi1 = se; break;
          case detail::kVis: result.std_errors.vis = se; break;
        }
      }
    }
  }
  f_final = f_cur;
  return result;
}

}  // namespace detail

// Weighted least squares against the fringe model. Counts scans carry Poisson
// weights 1/max(value, 1); model-rate scans are unweighted. Without an
// explicit initialization the optimizer restarts from every phi1 branch
// candidate and keeps the lowest-objective result, which resolves the
// threefold phase ambiguity of nearly pure cos(3 phi) fringes. Deterministic
// given identical inputs.
inline FitResult fit_fringe(const FringeScan& scan, FitForm form,
                            std::optional<FitModelParams> init = std::nullopt,
                            const FitOptions& opts = FitOptions{}) {
  validate_scan(scan);
  const std::size_t n = scan.phases.size();
  if (n < 8) throw std::invalid_argument("fit_fringe: need at least 8 points");
  {
    double lo = scan.values[0], hi = scan.values[0];
    for (double v : scan.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw std::invalid_argument("fit_fringe: degenerate (constant) scan");
  }

  std::vector<double> weight(n, 1.0);
  if (scan.kind == ScanKind::counts)
    for (std::size_t j = 0; j < n; ++j) weight[j] = 1.0 / std::max(scan.values[j], 1.0);

  std::vector<FitModelParams> starts;
  if (init)
    starts.push_back(*init);
  else
    starts = detail::fit_init_branches(scan, form);

  FitResult best;
  double best_f = std::numeric_limits<double>::infinity();
  std::vector<double> best_trace;
  for (const FitModelParams& start : starts) {
    std::vector<double> trace;
    double f_final = std::numeric_limits<double>::infinity();
    FitResult res = detail::fit_lm(scan, form, start, opts, weight,
                                   opts.objective_trace ? &trace : nullptr, f_final);
    if (f_final < best_f) {
      best_f = f_final;
      best = res;
      best_trace = std::move(trace);
    }
  }
  if (opts.objective_trace)
    opts.objective_trace->insert(opts.objective_trace->end(), best_trace.begin(),
                                 best_trace.end());
  return best;
}

// Seeded Poisson counting scan of the oracle fringe on the open uniform grid.
// phase_offset shifts the fringe the way an apparatus phase drift would, so
// fits should recover it as phi1. Identical seeds give identical scans.
inline FringeScan synthetic_scan(const SourceParams& src, const MZISettings& base, int n_points,
                                 double exposure_scale, std::uint64_t seed,
                                 double phase_offset = 0.0) {
  if (!(exposure_scale >= 0.0)) throw std::invalid_argument("exposure_scale must be non-negative");
  FringeScan scan;
  scan.phases = uniform_phase_grid(n_points);
  scan.values.resize(scan.phases.size());
  scan.kind = ScanKind::counts;
  const TwoModeState input = product_input(src);
  std::mt19937_64 rng(seed);
  MZISettings settings = base;
  for (std::size_t j = 0; j < scan.phases.size(); ++j) {
    settings.phase = scan.phases[j] - phase_offset;
    const double mean = exposure_scale * three_photon_rate_oracle(input, settings);
    if (mean > 0.0) {
      std::poisson_distribution<long long> draw(mean);
      scan.values[j] = static_cast<double>(draw(rng));
    } else {
      scan.values[j] = 0.0;
    }
  }
  return scan;
}

}  // namespace triphase
