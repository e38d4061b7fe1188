#pragma once

// Full interferometer composition (splitter -> differential phase -> splitter),
// the exact three-photon rate oracle, the closed-form fringe model in both a
// verbatim transcription and an oracle-corrected variant, and the convention
// calibration that reconciles the two.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "triphase/fock.hpp"
#include "triphase/source.hpp"

namespace triphase {

enum class Port { f, g };

struct MZISettings {
  double phase = 0.0;  // differential phase between the arms
  BeamSplitterSpec bs1{0.5, BsConvention::symmetric_phase};
  BeamSplitterSpec bs2{0.5, BsConvention::symmetric_phase};
  Arm phase_arm = Arm::first;
  Port detect_port = Port::f;
};

enum class ScanKind { model_rate, counts };

struct FringeScan {
  std::vector<double> phases;  // strictly increasing, radians
  std::vector<double> values;  // non-negative rates or counts
  ScanKind kind = ScanKind::model_rate;
};

inline void validate_scan(const FringeScan& scan) {
  if (scan.phases.size() != scan.values.size())
    throw std::invalid_argument("scan: phases and values differ in length");
  if (scan.phases.empty()) throw std::invalid_argument("scan: empty");
  for (std::size_t i = 1; i < scan.phases.size(); ++i)
    if (!(scan.phases[i] > scan.phases[i - 1]))
      throw std::invalid_argument("scan: phases must be strictly increasing");
  for (double v : scan.values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("scan: values must be finite and non-negative");
}

// Open uniform grid phi_j = -pi + j * 2pi/n, j = 0..n-1 (one full period,
// endpoint excluded so discrete Fourier projections are exact).
inline std::vector<double> uniform_phase_grid(int n) {
  if (n < 1) throw std::invalid_argument("phase grid needs at least one point");
  std::vector<double> phis(n);
  for (int j = 0; j < n; ++j) phis[j] = -pi + 2.0 * pi * j / n;
  return phis;
}

inline TwoModeState propagate_mzi(const TwoModeState& input, const MZISettings& settings) {
  TwoModeState st = apply_beam_splitter(input, settings.bs1);
  st = apply_phase(st, settings.phase, settings.phase_arm);
  return apply_beam_splitter(st, settings.bs2);
}

inline double three_photon_rate_oracle(const TwoModeState& input, const MZISettings& settings) {
  const TwoModeState out = propagate_mzi(input, settings);
  return settings.detect_port == Port::f ? project_photon_numbers(out, 3, 0)
                                         : project_photon_numbers(out, 0, 3);
}

inline double three_photon_rate_oracle(const SourceParams& src, const MZISettings& settings) {
  if (src.n_max < 3) throw std::invalid_argument("three-photon rate needs n_max >= 3");
  return three_photon_rate_oracle(product_input(src), settings);
}

// ---------------------------------------------------------------------------
// Closed-form fringe coefficients.
//
// The verbatim transcription of the published three-photon rate at the first
// output port, R = A + B cos3p + C cos2p + D cosp with x = |alpha|^2:
//   A = x (x-3s)^2 + 9 x (x+s)^2
//   B = x (x-3s)^2
//   C = 6 x (x-3s) (x+s)
//   D = 3 x (x+s) (5x-3s)
// This form does not match the oracle as printed; calibration finds that it
// does match, exactly and with a single proportionality constant, after
// flipping the sign of s and shifting the phase by pi (see
// calibrate_convention). The corrected mode folds that sign/offset into the
// stored coefficients so the rate can be evaluated with no residual offset.
// ---------------------------------------------------------------------------

struct SignCal {
  double delta = 0.0;  // phase offset applied when evaluating the cosines
  Port port = Port::f;
  BsConvention convention = BsConvention::symmetric_phase;
  int squeeze_sign = 1;  // sign applied to s relative to the verbatim formula
};

struct AnalyticCoefficients {
  double A = 0.0;  // constant term
  double B = 0.0;  // cos 3(phi - delta)
  double C = 0.0;  // cos 2(phi - delta)
  double D = 0.0;  // cos (phi - delta)
  SignCal sign_cal;
};

inline AnalyticCoefficients verbatim_coefficients(double x, double s) {
  AnalyticCoefficients c;
  c.A = x * (x - 3 * s) * (x - 3 * s) + 9 * x * (x + s) * (x + s);
  c.B = x * (x - 3 * s) * (x - 3 * s);
  c.C = 6 * x * (x - 3 * s) * (x + s);
  c.D = 3 * x * (x + s) * (5 * x - 3 * s);
  c.sign_cal = SignCal{};  // delta = 0: evaluate exactly as printed
  return c;
}

inline double three_photon_rate_analytic(const AnalyticCoefficients& c, double phi) {
  const double p = phi - c.sign_cal.delta;
  return c.A + c.B * std::cos(3 * p) + c.C * std::cos(2 * p) + c.D * std::cos(p);
}

// Dimensionless coefficient polynomials of the ratio y = alpha^2/s for the
// corrected (oracle-consistent) fringe: the raw rate equals
//   alpha^2 s^2 / 192 * (c0 + c1 cos phi + c2 cos 2phi + c3 cos 3phi).
// At y = 1 the c1 and c2 terms vanish (pure threefold fringe); as y -> inf
// the ratios approach the single-source limit 10 : -15 : 6 : -1.
struct CoefficientPolys {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
};

inline CoefficientPolys corrected_coefficient_polys(double y) {
  CoefficientPolys p;
  p.c0 = (y + 3) * (y + 3) + 9 * (y - 1) * (y - 1);
  p.c1 = -3 * (y - 1) * (5 * y + 3);
  p.c2 = 6 * (y + 3) * (y - 1);
  p.c3 = -(y + 3) * (y + 3);
  return p;
}

// ---------------------------------------------------------------------------
// Convention calibration.
// ---------------------------------------------------------------------------

struct CalibrationRecord {
  BsConvention convention = BsConvention::symmetric_phase;
  Port port = Port::f;
  double delta = 0.0;       // phase offset of the verbatim form vs. the oracle
  int squeeze_sign = 1;     // sign of s in the verbatim form vs. the oracle
  double scale = 0.0;       // proportionality constant oracle / verbatim
  double max_rate_residual = 0.0;       // worst relative rate deviation
  double max_amplitude_residual = 0.0;  // worst relative output-amplitude deviation
};

namespace detail {

inline MZISettings settings_for(BsConvention conv, Port port, double phi) {
  MZISettings st;
  st.phase = phi;
  st.bs1.convention = conv;
  st.bs2.convention = conv;
  st.detect_port = port;
  return st;
}

// Transcribed closed-form amplitude of the three-photon ket at the first
// output port (the verbatim model's |3,0> coefficient).
inline cplx verbatim_amp_30(cplx alpha, double s, double phi) {
  const cplx a2 = alpha * alpha;
  const cplx e1 = std::exp(cplx{0.0, phi});
  const cplx e2 = std::exp(cplx{0.0, 2 * phi});
  const cplx e3 = std::exp(cplx{0.0, 3 * phi});
  return (1.0 / (4.0 * std::sqrt(3.0))) *
         ((a2 - 3.0 * s) * alpha * (1.0 + e3) + 3.0 * (a2 + s) * alpha * (e2 + e1));
}

inline CalibrationRecord run_calibration() {
  const std::array<double, 3> x_grid{0.01, 0.05, 0.2};   // alpha^2
  const std::array<double, 3> s_grid{0.02, 0.06, 0.1};
  const int n_phi = 48;
  const std::vector<double> phis = uniform_phase_grid(n_phi);

  std::vector<CalibrationRecord> survivors;
  for (BsConvention conv : {BsConvention::symmetric_phase, BsConvention::real_asymmetric}) {
    for (Port port : {Port::f, Port::g}) {
      // Oracle fringes for this convention/port over the parameter grid.
      std::vector<std::vector<double>> oracle(x_grid.size() * s_grid.size());
      std::size_t cell = 0;
      for (double x : x_grid) {
        for (double s : s_grid) {
          SourceParams src;
          src.alpha_mag = std::sqrt(x);
          src.squeeze = s;
          const TwoModeState input = product_input(src);
          auto& fr = oracle[cell++];
          fr.resize(n_phi);
          for (int j = 0; j < n_phi; ++j)
            fr[j] = three_photon_rate_oracle(input, settings_for(conv, port, phis[j]));
        }
      }

      for (double delta : {0.0, pi}) {
        for (int sigma : {-1, 1}) {
          // Stage 1: the verbatim rate, shifted by delta and evaluated at
          // sigma*s, must match every oracle fringe up to one constant scale.
          double worst = 0.0;
          double scale_sum = 0.0;
          cell = 0;
          for (double x : x_grid) {
            for (double s : s_grid) {
              const auto& fr = oracle[cell++];
              const AnalyticCoefficients vc = verbatim_coefficients(x, sigma * s);
              double vmean = 0.0, omean = 0.0, opeak = 0.0;
              std::vector<double> vr(n_phi);
              for (int j = 0; j < n_phi; ++j) {
                vr[j] = three_photon_rate_analytic(vc, phis[j] - delta);
                vmean += vr[j];
                omean += fr[j];
                opeak = std::max(opeak, fr[j]);
              }
              const double k = omean / vmean;
              scale_sum += k;
              for (int j = 0; j < n_phi; ++j)
                worst = std::max(worst, std::abs(fr[j] - k * vr[j]) / opeak);
            }
          }
          if (worst > 1e-10) continue;

          // Stage 2: with the squeezed input off, the dark fringe must sit at
          // zero phase (rate vanishes to machine precision there).
          SourceParams dark;
          dark.alpha_mag = std::sqrt(0.2);
          const TwoModeState dark_in = product_input(dark);
          const double r0 = three_photon_rate_oracle(dark_in, settings_for(conv, port, 0.0));
          double rpeak = 0.0;
          for (int j = 0; j < n_phi; ++j)
            rpeak = std::max(rpeak,
                             three_photon_rate_oracle(dark_in, settings_for(conv, port, phis[j])));
          if (r0 > 1e-14 * rpeak) continue;

          // Stage 3: at alpha^2 = s the fringe must be purely threefold
          // (first and second harmonics below 1e-10 of the mean).
          SourceParams noon;
          noon.alpha_mag = std::sqrt(0.06);
          noon.squeeze = 0.06;
          const TwoModeState noon_in = product_input(noon);
          double c0 = 0.0;
          cplx c1{0.0, 0.0}, c2{0.0, 0.0};
          for (int j = 0; j < n_phi; ++j) {
            const double r = three_photon_rate_oracle(noon_in, settings_for(conv, port, phis[j]));
            c0 += r / n_phi;
            c1 += 2.0 * r * std::exp(cplx{0.0, -phis[j]}) / static_cast<double>(n_phi);
            c2 += 2.0 * r * std::exp(cplx{0.0, -2 * phis[j]}) / static_cast<double>(n_phi);
          }
          if (std::abs(c1) > 1e-10 * c0 || std::abs(c2) > 1e-10 * c0) continue;

          CalibrationRecord rec;
          rec.convention = conv;
          rec.port = port;
          rec.delta = delta;
          rec.squeeze_sign = sigma;
          rec.scale = scale_sum / (x_grid.size() * s_grid.size());
          rec.max_rate_residual = worst;
          survivors.push_back(rec);
        }
      }
    }
  }

  if (survivors.size() != 1)
    throw std::runtime_error("calibration failed: expected a unique convention, found " +
                             std::to_string(survivors.size()));
  CalibrationRecord rec = survivors.front();

  // Confirm the transcribed output-amplitude structure under the selected
  // convention: the oracle's three-photon amplitude equals the transcribed
  // coefficient (at sigma*s, shifted by delta) times one global complex scale.
  {
    const double alpha = 0.1, s = 0.06;
    SourceParams src;
    src.alpha_mag = alpha;
    src.squeeze = s;
    const TwoModeState input = product_input(src);
    std::vector<cplx> amp(n_phi), ref(n_phi);
    double apeak = 0.0, rpeak = 0.0;
    int j0 = 0;
    for (int j = 0; j < n_phi; ++j) {
      const TwoModeState out =
          propagate_mzi(input, settings_for(rec.convention, rec.port, phis[j]));
      amp[j] = rec.port == Port::f ? out.at(3, 0) : out.at(0, 3);
      ref[j] = verbatim_amp_30(alpha, rec.squeeze_sign * s, phis[j] - rec.delta);
      apeak = std::max(apeak, std::abs(amp[j]));
      if (std::abs(ref[j]) > rpeak) {
        rpeak = std::abs(ref[j]);
        j0 = j;
      }
    }
    const cplx gscale = amp[j0] / ref[j0];
    double worst = 0.0;
    for (int j = 0; j < n_phi; ++j)
      worst = std::max(worst, std::abs(amp[j] - gscale * ref[j]) / apeak);
    rec.max_amplitude_residual = worst;
    if (worst > 1e-10)
      throw std::runtime_error("calibration failed: output-amplitude structure mismatch");
  }
  return rec;
}

}  // namespace detail

// Deterministic exhaustive search; computed once and cached for the process.
inline const CalibrationRecord& calibrate_convention() {
  static const CalibrationRecord rec = detail::run_calibration();
  return rec;
}

// Corrected coefficients: signed projections of the oracle fringe onto
// {1, cos, cos2, cos3}, taken at the calibrated port and convention. The
// projection grid (16 points) is exact for a trigonometric polynomial of
// degree 3. Requires the calibrated source phases (theta = xi = 0), where the
// fringe is even in phi; a sine/imaginary residual signals a convention
// violation and is rejected.
inline AnalyticCoefficients analytic_coefficients(const SourceParams& src, bool corrected) {
  if (!corrected)
    return verbatim_coefficients(src.alpha_mag * src.alpha_mag, src.squeeze);
  if (src.alpha_phase != 0.0 || src.squeeze_phase != 0.0)
    throw std::invalid_argument(
        "corrected coefficients are defined at the calibrated source phases (both zero)");
  const CalibrationRecord& cal = calibrate_convention();
  const int n = 16;
  const std::vector<double> phis = uniform_phase_grid(n);
  const TwoModeState input = product_input(src);
  MZISettings st = detail::settings_for(cal.convention, cal.port, 0.0);

  double c0 = 0.0;
  std::array<cplx, 3> ck{};
  double peak = 0.0;
  for (int j = 0; j < n; ++j) {
    st.phase = phis[j];
    const double r = three_photon_rate_oracle(input, st);
    peak = std::max(peak, r);
    c0 += r / n;
    for (int k = 1; k <= 3; ++k)
      ck[k - 1] += 2.0 * r * std::exp(cplx{0.0, -k * phis[j]}) / static_cast<double>(n);
  }
  for (int k = 1; k <= 3; ++k)
    if (std::abs(ck[k - 1].imag()) > 1e-12 * std::max(peak, 1e-300))
      throw std::runtime_error("corrected coefficients: fringe is not even in phase");

  AnalyticCoefficients c;
  c.A = c0;
  c.D = ck[0].real();
  c.C = ck[1].real();
  c.B = ck[2].real();
  c.sign_cal.delta = 0.0;  // signs already folded into the projections
  c.sign_cal.port = cal.port;
  c.sign_cal.convention = cal.convention;
  c.sign_cal.squeeze_sign = cal.squeeze_sign;
  return c;
}

// Scale a full-period scan so its trapezoid integral over [-pi, pi] is 1.
// Accepts either an open uniform periodic grid (endpoint omitted) or a closed
// grid (both endpoints present); for the open grid the periodic trapezoid
// rule h * sum(values) is used, which is the same quadrature.
inline FringeScan normalize_fringe(const FringeScan& scan) {
  validate_scan(scan);
  const std::size_t n = scan.phases.size();
  if (n < 2) throw std::invalid_argument("normalize_fringe: need at least two points");
  const double span = scan.phases.back() - scan.phases.front();
  const double h = scan.phases[1] - scan.phases[0];
  double integral = 0.0;
  if (std::abs(span - 2 * pi) <= 1e-9) {
    for (std::size_t i = 1; i < n; ++i)
      integral += 0.5 * (scan.values[i] + scan.values[i - 1]) * (scan.phases[i] - scan.phases[i - 1]);
  } else if (std::abs(span + h - 2 * pi) <= 1e-9) {
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(scan.phases[i] - scan.phases[i - 1] - h) > 1e-9)
        throw std::invalid_argument("normalize_fringe: open periodic grid must be uniform");
    for (double v : scan.values) integral += v * h;
  } else {
    throw std::invalid_argument("normalize_fringe: scan must span one full period");
  }
  if (integral <= 0.0) throw std::invalid_argument("normalize_fringe: zero integral");
  FringeScan out = scan;
  for (double& v : out.values) v /= integral;
  return out;
}

// Convenience builders for sampled fringes on the open uniform grid.
inline FringeScan oracle_scan(const SourceParams& src, MZISettings settings, int n_points) {
  const std::vector<double> phis = uniform_phase_grid(n_points);
  FringeScan scan;
  scan.phases = phis;
  scan.values.resize(phis.size());
  scan.kind = ScanKind::model_rate;
  const TwoModeState input = product_input(src);
  for (std::size_t j = 0; j < phis.size(); ++j) {
    settings.phase = phis[j];
    scan.values[j] = three_photon_rate_oracle(input, settings);
  }
  return scan;
}

inline FringeScan analytic_scan(const AnalyticCoefficients& coeffs, int n_points) {
  const std::vector<double> phis = uniform_phase_grid(n_points);
  FringeScan scan;
  scan.phases = phis;
  scan.values.resize(phis.size());
  scan.kind = ScanKind::model_rate;
  for (std::size_t j = 0; j < phis.size(); ++j)
    scan.values[j] = std::max(0.0, three_photon_rate_analytic(coeffs, phis[j]));
  return scan;
}

// Calibrated default interferometer: 50:50 splitters in the calibrated
// convention, detection at the calibrated port.
inline MZISettings calibrated_settings(double phi = 0.0) {
  const CalibrationRecord& cal = calibrate_convention();
  return detail::settings_for(cal.convention, cal.port, phi);
}

}  // namespace triphase
