#pragma once

// Input states for the interferometer: a weak coherent state and a squeezed
// vacuum, in truncated Fock form. Two expansion modes are offered:
//  - low_order: the leading-terms expansion, kept unnormalized so that
//    closed-form coefficient comparisons are exact;
//  - exact: fully normalized amplitudes on the truncated grid.

#include <cmath>
#include <string>
#include <vector>

#include "triphase/fock.hpp"

namespace triphase {

enum class Expansion { low_order, exact };

struct SourceParams {
  double alpha_mag = 0.0;     // |alpha| of the coherent input
  double alpha_phase = 0.0;   // theta, alpha = |alpha| e^{i theta}; calibrated default 0
  double squeeze = 0.0;       // s in low_order mode, r in exact mode
  double squeeze_phase = 0.0; // phase of the squeezed quadrature; calibrated default 0
  Expansion expansion = Expansion::low_order;
  int n_max = 6;
};

// Coherent-state amplitudes on 0..n_max. low_order emits exactly the
// unnormalized four-term expansion 1, alpha, alpha^2/sqrt2, alpha^3/sqrt6;
// exact emits e^{-|alpha|^2/2} alpha^n / sqrt(n!).
inline std::vector<cplx> coherent_truncated(cplx alpha, int n_max, Expansion expansion) {
  if (n_max < 0) throw std::invalid_argument("n_max must be non-negative");
  std::vector<cplx> amps(n_max + 1, cplx{0.0, 0.0});
  if (expansion == Expansion::low_order) {
    if (n_max < 3) throw std::invalid_argument("low_order coherent expansion needs n_max >= 3");
    amps[0] = 1.0;
    amps[1] = alpha;
    amps[2] = alpha * alpha / std::sqrt(2.0);
    amps[3] = alpha * alpha * alpha / std::sqrt(6.0);
    return amps;
  }
  const double envelope = std::exp(-0.5 * std::norm(alpha));
  cplx term{envelope, 0.0};
  amps[0] = term;
  for (int n = 1; n <= n_max; ++n) {
    term *= alpha / std::sqrt(static_cast<double>(n));
    amps[n] = term;
  }
  return amps;
}

// Squeezed-vacuum amplitudes on 0..n_max (even photon numbers only).
// low_order emits 1 at n=0 and -(s/sqrt2) e^{i xi} at n=2; exact emits the
// standard expansion (-e^{i xi} tanh r)^m sqrt((2m)!) / (2^m m!) / sqrt(cosh r)
// at n=2m, which agrees with low_order to first order in the parameter.
inline std::vector<cplx> squeezed_vacuum_truncated(double s, double squeeze_phase, int n_max,
                                                   Expansion expansion) {
  if (n_max < 0) throw std::invalid_argument("n_max must be non-negative");
  if (s < 0.0) throw std::invalid_argument("squeeze parameter must be non-negative");
  std::vector<cplx> amps(n_max + 1, cplx{0.0, 0.0});
  const cplx xi_factor = std::exp(cplx{0.0, squeeze_phase});
  if (expansion == Expansion::low_order) {
    amps[0] = 1.0;
    if (n_max >= 2) amps[2] = -(s / std::sqrt(2.0)) * xi_factor;
    return amps;
  }
  const cplx step = -xi_factor * std::tanh(s);
  cplx term = cplx{1.0 / std::sqrt(std::cosh(s)), 0.0};
  amps[0] = term;
  for (int m = 1; 2 * m <= n_max; ++m) {
    // ratio of successive even amplitudes: step * sqrt((2m)(2m-1)) / (2m)
    term *= step * std::sqrt(static_cast<double>(2 * m) * (2 * m - 1)) / (2.0 * m);
    amps[2 * m] = term;
  }
  return amps;
}

// Tensor product: amps(n_a, n_b) = coh(n_a) * sq(n_b).
inline TwoModeState product_input(const std::vector<cplx>& coherent_amps,
                                  const std::vector<cplx>& squeezed_amps, int n_max = 6) {
  if (static_cast<int>(coherent_amps.size()) > n_max + 1 ||
      static_cast<int>(squeezed_amps.size()) > n_max + 1)
    throw std::out_of_range("product_input: amplitude list exceeds truncation");
  TwoModeState st = zero_state(n_max);
  for (int n_a = 0; n_a < static_cast<int>(coherent_amps.size()); ++n_a)
    for (int n_b = 0; n_b < static_cast<int>(squeezed_amps.size()); ++n_b)
      st.at(n_a, n_b) = coherent_amps[n_a] * squeezed_amps[n_b];
  return st;
}

inline TwoModeState product_input(const SourceParams& src) {
  const cplx alpha = src.alpha_mag * std::exp(cplx{0.0, src.alpha_phase});
  return product_input(coherent_truncated(alpha, src.n_max, src.expansion),
                       squeezed_vacuum_truncated(src.squeeze, src.squeeze_phase, src.n_max,
                                                 src.expansion),
                       src.n_max);
}

inline double mean_photon_number(const TwoModeState& st) {
  const double nsq = norm_sq(st);
  if (nsq <= 0.0) throw std::invalid_argument("mean_photon_number: zero-norm state");
  double acc = 0.0;
  for (int n_a = 0; n_a <= st.n_max; ++n_a)
    for (int n_b = 0; n_b <= st.n_max; ++n_b)
      acc += (n_a + n_b) * std::norm(st.at(n_a, n_b));
  return acc / nsq;
}

struct SqueezeEstimate {
  double r;            // from the maximum amplification
  double r_prime;      // from the minimum de-amplification
  double consistency;  // |r - r_prime|
};

// r = ln(g_max)/2 and r' = -ln(g_min)/2; the gap between the two is the
// consistency metric of the gain pair.
inline SqueezeEstimate squeezing_from_gain(double g_min, double g_max) {
  if (!(g_min > 0.0) || g_min > 1.0 || g_max < 1.0 || !std::isfinite(g_max))
    throw std::invalid_argument("squeezing_from_gain requires 0 < g_min <= 1 <= g_max");
  SqueezeEstimate est;
  est.r = 0.5 * std::log(g_max);
  est.r_prime = -0.5 * std::log(g_min);
  est.consistency = std::abs(est.r - est.r_prime);
  return est;
}

// Advisory checks for parameter ranges the low-order expansion cannot
// represent faithfully; callers decide how to surface them.
inline std::vector<std::string> source_warnings(const SourceParams& src) {
  std::vector<std::string> warnings;
  if (src.expansion == Expansion::low_order && src.squeeze > 0.3)
    warnings.push_back("squeeze parameter " + std::to_string(src.squeeze) +
                       " exceeds 0.3; the low-order expansion assumes a weakly squeezed input");
  if (src.expansion == Expansion::low_order && src.alpha_mag * src.alpha_mag > 0.5)
    warnings.push_back("coherent intensity " + std::to_string(src.alpha_mag * src.alpha_mag) +
                       " exceeds 0.5; four-term coherent expansion degrades");
  return warnings;
}

}  // namespace triphase
