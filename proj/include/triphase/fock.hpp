#pragma once

// Exact linear-optical evolution of two-mode photon-number states on a
// truncated basis. All operations are pure functions on immutable values.

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace triphase {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

enum class BsConvention { symmetric_phase, real_asymmetric };
enum class Arm { first, second };

struct BeamSplitterSpec {
  double transmissivity = 0.5;
  BsConvention convention = BsConvention::symmetric_phase;
};

// Complex amplitude tensor over photon-number pairs (n_a, n_b), each in
// 0..n_max. Amplitudes beyond n_max do not exist; number-conserving maps
// drop any component that would leave the grid (exact within sectors of
// total photon number <= n_max). Low-order source expansions are
// intentionally unnormalized, so the type does not cap the norm itself;
// unitarity is a property of the operations.
struct TwoModeState {
  int n_max = 6;
  std::vector<cplx> amps;  // row-major, index n_a * (n_max + 1) + n_b

  const cplx& at(int n_a, int n_b) const { return amps[idx(n_a, n_b)]; }
  cplx& at(int n_a, int n_b) { return amps[idx(n_a, n_b)]; }

 private:
  std::size_t idx(int n_a, int n_b) const {
    return static_cast<std::size_t>(n_a) * (n_max + 1) + n_b;
  }
};

inline TwoModeState zero_state(int n_max) {
  if (n_max < 0) throw std::invalid_argument("n_max must be non-negative");
  TwoModeState st;
  st.n_max = n_max;
  st.amps.assign(static_cast<std::size_t>(n_max + 1) * (n_max + 1), cplx{0.0, 0.0});
  return st;
}

using StateEntry = std::pair<std::pair<int, int>, cplx>;

inline TwoModeState make_state(const std::vector<StateEntry>& entries, int n_max = 6) {
  TwoModeState st = zero_state(n_max);
  std::vector<bool> seen(st.amps.size(), false);
  for (const auto& [nn, amp] : entries) {
    const auto [n_a, n_b] = nn;
    if (n_a < 0 || n_b < 0 || n_a > n_max || n_b > n_max)
      throw std::out_of_range("make_state: index (" + std::to_string(n_a) + "," +
                              std::to_string(n_b) + ") outside truncation n_max=" +
                              std::to_string(n_max));
    const std::size_t flat = static_cast<std::size_t>(n_a) * (n_max + 1) + n_b;
    if (seen[flat])
      throw std::invalid_argument("make_state: duplicate index (" + std::to_string(n_a) +
                                  "," + std::to_string(n_b) + ")");
    seen[flat] = true;
    st.at(n_a, n_b) = amp;
  }
  return st;
}

inline double norm_sq(const TwoModeState& st) {
  double acc = 0.0;
  for (const cplx& a : st.amps) acc += std::norm(a);
  return acc;
}

namespace detail {

// Exact in double up to 18! (< 2^53); larger values round but stay finite
// for any truncation this library accepts.
inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

inline double binomial(int n, int k) {
  double b = 1.0;
  for (int j = 1; j <= k; ++j) b = b * (n - k + j) / j;
  return b;
}

}  // namespace detail

// Image of the state under the mode map a+ -> u c+ + v d+, b+ -> w c+ + x d+.
// Photon number per basis ket is conserved, so the map is exactly unitary on
// sectors with total <= n_max whenever the 2x2 matrix is unitary; components
// that would exceed the truncation are dropped.
inline TwoModeState apply_mode_transform(const TwoModeState& st, cplx u, cplx v, cplx w, cplx x) {
  const int n_max = st.n_max;
  TwoModeState out = zero_state(n_max);
  std::vector<double> fact(2 * n_max + 2);
  for (int n = 0; n < static_cast<int>(fact.size()); ++n) fact[n] = detail::factorial(n);

  std::vector<cplx> upow(n_max + 1), vpow(n_max + 1), wpow(n_max + 1), xpow(n_max + 1);
  upow[0] = vpow[0] = wpow[0] = xpow[0] = cplx{1.0, 0.0};
  for (int n = 1; n <= n_max; ++n) {
    upow[n] = upow[n - 1] * u;
    vpow[n] = vpow[n - 1] * v;
    wpow[n] = wpow[n - 1] * w;
    xpow[n] = xpow[n - 1] * x;
  }

  for (int m = 0; m <= n_max; ++m) {
    for (int n = 0; n <= n_max; ++n) {
      const cplx a = st.at(m, n);
      if (a == cplx{0.0, 0.0}) continue;
      const double inv_src = 1.0 / std::sqrt(fact[m] * fact[n]);
      for (int j = 0; j <= m; ++j) {
        for (int k = 0; k <= n; ++k) {
          const int p = j + k;
          const int q = m + n - j - k;
          if (p > n_max || q > n_max) continue;
          const double coeff = detail::binomial(m, j) * detail::binomial(n, k) *
                               std::sqrt(fact[p] * fact[q]) * inv_src;
          out.at(p, q) += a * coeff * upow[j] * vpow[m - j] * wpow[k] * xpow[n - k];
        }
      }
    }
  }
  return out;
}

inline TwoModeState apply_beam_splitter(const TwoModeState& st, const BeamSplitterSpec& spec) {
  const double T = spec.transmissivity;
  if (T < 0.0 || T > 1.0) throw std::invalid_argument("transmissivity must lie in [0,1]");
  const double t = std::sqrt(T);
  const double r = std::sqrt(1.0 - T);
  if (spec.convention == BsConvention::symmetric_phase)
    return apply_mode_transform(st, {t, 0.0}, {0.0, r}, {0.0, r}, {t, 0.0});
  return apply_mode_transform(st, {t, 0.0}, {r, 0.0}, {r, 0.0}, {-t, 0.0});
}

inline TwoModeState apply_phase(const TwoModeState& st, double phi, Arm arm) {
  TwoModeState out = st;
  for (int n_a = 0; n_a <= st.n_max; ++n_a) {
    for (int n_b = 0; n_b <= st.n_max; ++n_b) {
      const int n = (arm == Arm::first) ? n_a : n_b;
      out.at(n_a, n_b) *= std::exp(cplx{0.0, n * phi});
    }
  }
  return out;
}

inline double project_photon_numbers(const TwoModeState& st, int n_f, int n_g) {
  if (n_f < 0 || n_g < 0 || n_f > st.n_max || n_g > st.n_max)
    throw std::out_of_range("project_photon_numbers: index outside truncation");
  return std::norm(st.at(n_f, n_g));
}

}  // namespace triphase
