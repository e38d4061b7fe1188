// Command-line front end: simulate fringes, sweep ratios, fit scans, tabulate
// sensitivities, and validate the closed forms against the Fock simulator.
// Exit codes: 0 success, 2 config error, 3 data error, 4 non-convergence,
// 5 validation failure.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "triphase/fit.hpp"
#include "triphase/metrology.hpp"
#include "triphase/mzi.hpp"
#include "triphase/scan_io.hpp"

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace triphase;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNoConverge = 4;
constexpr int kExitValidation = 5;

int config_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kExitConfig;
}

int data_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kExitData;
}

// Relative output paths may be redirected with TRIPHASE_OUT_DIR, the only
// environment variable the tool reads.
std::string resolve_out(const std::string& out) {
  const char* dir = std::getenv("TRIPHASE_OUT_DIR");
  if (dir != nullptr && *dir != '\0' && fs::path(out).is_relative())
    return (fs::path(dir) / out).string();
  return out;
}

// Config files are flat JSON objects whose keys are the long option names
// without the leading dashes. Unknown keys are rejected; values given on the
// command line win over config values.
struct ConfigBinding {
  CLI::Option* opt = nullptr;
  std::function<bool(const json&)> apply;
};
using ConfigMap = std::map<std::string, ConfigBinding>;

void bind_double(ConfigMap& m, CLI::Option* opt, const std::string& key, double& ref) {
  m[key] = {opt, [&ref](const json& v) {
              if (!v.is_number()) return false;
              ref = v.get<double>();
              return true;
            }};
}

void bind_int(ConfigMap& m, CLI::Option* opt, const std::string& key, int& ref) {
  m[key] = {opt, [&ref](const json& v) {
              if (!v.is_number_integer()) return false;
              ref = v.get<int>();
              return true;
            }};
}

void bind_seed(ConfigMap& m, CLI::Option* opt, const std::string& key, std::uint64_t& ref) {
  m[key] = {opt, [&ref](const json& v) {
              if (!v.is_number_integer() || v.get<long long>() < 0) return false;
              ref = v.get<std::uint64_t>();
              return true;
            }};
}

void bind_string(ConfigMap& m, CLI::Option* opt, const std::string& key, std::string& ref) {
  m[key] = {opt, [&ref](const json& v) {
              if (!v.is_string()) return false;
              ref = v.get<std::string>();
              return true;
            }};
}

void bind_bool(ConfigMap& m, CLI::Option* opt, const std::string& key, bool& ref) {
  m[key] = {opt, [&ref](const json& v) {
              if (!v.is_boolean()) return false;
              ref = v.get<bool>();
              return true;
            }};
}

// Returns 0 or kExitConfig (message already printed).
int apply_config_file(const std::string& path, const ConfigMap& keys) {
  std::ifstream in(path);
  if (!in) return config_error("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    return config_error("config file " + path + ": " + e.what());
  }
  if (!doc.is_object()) return config_error("config file must be a flat JSON object");
  for (const auto& item : doc.items()) {
    const auto found = keys.find(item.key());
    if (found == keys.end())
      return config_error("unknown config key '" + item.key() + "' in " + path);
    if (found->second.opt->count() > 0) continue;  // command line wins
    if (item.value().is_object() || item.value().is_array())
      return config_error("config key '" + item.key() + "' must be a scalar");
    if (!found->second.apply(item.value()))
      return config_error("config key '" + item.key() + "' has the wrong type");
  }
  return kExitOk;
}

const double kUnset = std::numeric_limits<double>::quiet_NaN();

bool given(double v) { return !std::isnan(v); }

// Shared source-parameter resolution. Returns nullopt after printing a
// config error.
std::optional<SourceParams> resolve_source(double squeeze, double alpha_sq, double ratio,
                                           const std::string& expansion, int nmax,
                                           double default_alpha_sq) {
  if (!(squeeze >= 0.0)) {
    config_error("--squeeze must be non-negative");
    return std::nullopt;
  }
  if (given(alpha_sq) && given(ratio)) {
    config_error("give either --alpha-sq or --ratio, not both");
    return std::nullopt;
  }
  double a2 = default_alpha_sq;
  if (given(alpha_sq)) {
    if (!(alpha_sq >= 0.0)) {
      config_error("--alpha-sq must be non-negative");
      return std::nullopt;
    }
    a2 = alpha_sq;
  } else if (given(ratio)) {
    if (!(ratio > 0.0)) {
      config_error("--ratio must be positive");
      return std::nullopt;
    }
    a2 = ratio * squeeze;
  }
  SourceParams src;
  src.alpha_mag = std::sqrt(a2);
  src.squeeze = squeeze;
  if (expansion == "low-order") {
    src.expansion = Expansion::low_order;
  } else if (expansion == "exact") {
    src.expansion = Expansion::exact;
  } else {
    config_error("--expansion must be 'low-order' or 'exact'");
    return std::nullopt;
  }
  if (nmax < 3 || nmax > 20) {
    config_error("--nmax must be in [3, 20]");
    return std::nullopt;
  }
  src.n_max = nmax;
  return src;
}

void print_warnings(const SourceParams& src) {
  for (const std::string& w : source_warnings(src)) std::cerr << "warning: " << w << "\n";
}

std::vector<double> log_spaced(double lo, double hi, int steps) {
  std::vector<double> out;
  if (steps == 1) {
    out.push_back(lo);
    return out;
  }
  const double l0 = std::log(lo), l1 = std::log(hi);
  for (int i = 0; i < steps; ++i)
    out.push_back(std::exp(l0 + (l1 - l0) * i / (steps - 1)));
  return out;
}

struct SimulateArgs {
  double squeeze = 0.06;
  double alpha_sq = kUnset;
  double ratio = kUnset;
  double theta = 0.0;
  double exposure = 0.0;
  int points = 360;
  std::uint64_t seed = 1;
  std::string form = "oracle";
  std::string expansion = "low-order";
  int nmax = 6;
  std::string detect_port = "f";
  std::string out = "fringe.csv";
  std::string config;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto src = resolve_source(a.squeeze, a.alpha_sq, a.ratio, a.expansion, a.nmax, 0.0618);
  if (!src) return kExitConfig;
  if (a.points < 8) return config_error("--points must be at least 8");
  if (!(a.exposure >= 0.0)) return config_error("--exposure must be non-negative");
  if (a.form != "oracle" && a.form != "verbatim" && a.form != "corrected")
    return config_error("--form must be 'oracle', 'verbatim', or 'corrected'");
  if (a.detect_port != "f" && a.detect_port != "g")
    return config_error("--detect-port must be 'f' or 'g'");
  if (a.detect_port == "g" && a.form != "oracle")
    return config_error("closed-form coefficients are calibrated for port f; use --form oracle");
  if (a.exposure > 0.0 && a.form != "oracle")
    return config_error("--exposure (counting mode) draws from the oracle; use --form oracle");
  print_warnings(*src);

  MZISettings settings = calibrated_settings();
  settings.detect_port = a.detect_port == "f" ? Port::f : Port::g;

  FringeScan scan;
  if (a.form == "oracle") {
    if (a.exposure > 0.0) {
      scan = synthetic_scan(*src, settings, a.points, a.exposure, a.seed, a.theta);
    } else {
      scan.phases = uniform_phase_grid(a.points);
      scan.kind = ScanKind::model_rate;
      const TwoModeState input = product_input(*src);
      for (double phi : scan.phases) {
        settings.phase = phi - a.theta;
        scan.values.push_back(three_photon_rate_oracle(input, settings));
      }
    }
  } else {
    const AnalyticCoefficients coeffs = analytic_coefficients(*src, a.form == "corrected");
    scan.phases = uniform_phase_grid(a.points);
    scan.kind = ScanKind::model_rate;
    for (double phi : scan.phases)
      scan.values.push_back(std::max(0.0, three_photon_rate_analytic(coeffs, phi - a.theta)));
  }

  const std::string out = resolve_out(a.out);
  try {
    write_scan_csv(out, scan);
  } catch (const std::exception& e) {
    return data_error(e.what());
  }
  std::cout << "wrote " << out << " (" << scan.phases.size() << " rows)\n";
  return kExitOk;
}

struct SweepArgs {
  double squeeze = 0.1;
  double ratio_min = 0.01;
  double ratio_max = 100.0;
  int ratio_steps = 33;
  int points = 72;
  int grid = 720;
  std::string out = "sweep.csv";
  std::string summary = "sweep_summary.csv";
  std::string config;
};

int check_ratio_range(double lo, double hi, int steps) {
  if (!(lo > 0.0)) return config_error("--ratio-min must be positive");
  if (!(hi >= lo)) return config_error("--ratio-max must be at least --ratio-min");
  if (steps < 1) return config_error("--ratio-steps must be at least 1");
  if (steps == 1 && hi != lo)
    return config_error("--ratio-steps 1 requires --ratio-min == --ratio-max");
  return kExitOk;
}

int cmd_sweep(const SweepArgs& a) {
  if (!(a.squeeze > 0.0)) return config_error("--squeeze must be positive");
  if (const int rc = check_ratio_range(a.ratio_min, a.ratio_max, a.ratio_steps); rc != kExitOk)
    return rc;
  if (a.points < 16) return config_error("--points must be at least 16");
  if (a.grid < 64) return config_error("--grid must be at least 64");

  const std::vector<double> ratios = log_spaced(a.ratio_min, a.ratio_max, a.ratio_steps);
  const std::vector<RatioSweepRow> rows = ratio_sweep(a.squeeze, ratios, a.grid);

  std::string matrix = "ratio,phase_rad,prob_normalized\n";
  for (double ratio : ratios) {
    SourceParams src;
    src.squeeze = a.squeeze;
    src.alpha_mag = std::sqrt(ratio * a.squeeze);
    const FringeScan fringe =
        normalize_fringe(analytic_scan(analytic_coefficients(src, true), a.points));
    for (std::size_t j = 0; j < fringe.phases.size(); ++j) {
      matrix += format_sig12(ratio);
      matrix += ',';
      matrix += format_sig12(fringe.phases[j]);
      matrix += ',';
      matrix += format_sig12(fringe.values[j]);
      matrix += '\n';
    }
  }

  std::string summary = "ratio,c0,c1,c2,c3,dominant_harmonic,visibility,min_delta_phi\n";
  for (const RatioSweepRow& row : rows) {
    summary += format_sig12(row.ratio);
    summary += ',';
    summary += format_sig12(row.fourier.c0);
    summary += ',';
    summary += format_sig12(row.fourier.c1.real());
    summary += ',';
    summary += format_sig12(row.fourier.c2.real());
    summary += ',';
    summary += format_sig12(row.fourier.c3.real());
    summary += ',';
    summary += std::to_string(row.dominant_harmonic);
    summary += ',';
    summary += format_sig12(row.visibility);
    summary += ',';
    summary += format_sig12(row.min_delta_phi);
    summary += '\n';
  }

  const std::string out = resolve_out(a.out);
  const std::string summary_out = resolve_out(a.summary);
  try {
    write_text_atomic(out, matrix);
    write_text_atomic(summary_out, summary);
  } catch (const std::exception& e) {
    return data_error(e.what());
  }
  std::cout << "wrote " << out << " (" << ratios.size() * a.points << " rows) and "
            << summary_out << " (" << rows.size() << " rows)\n";
  return kExitOk;
}

struct SensitivityArgs {
  double squeeze = 0.06;
  double ratio_min = 0.1;
  double ratio_max = 10.0;
  int ratio_steps = 17;
  int grid = 720;
  std::string out = "sensitivity.csv";
  std::string config;
};

int cmd_sensitivity(const SensitivityArgs& a) {
  if (!(a.squeeze > 0.0)) return config_error("--squeeze must be positive");
  if (const int rc = check_ratio_range(a.ratio_min, a.ratio_max, a.ratio_steps); rc != kExitOk)
    return rc;
  if (a.grid < 64) return config_error("--grid must be at least 64");

  const std::vector<double> ratios = log_spaced(a.ratio_min, a.ratio_max, a.ratio_steps);
  std::string table = "ratio,min_delta_phi,sql_3,hl_3\n";
  const std::string sql3 = format_sig12(sql_limit(3));
  const std::string hl3 = format_sig12(hl_limit(3));
  for (double ratio : ratios) {
    SourceParams src;
    src.squeeze = a.squeeze;
    src.alpha_mag = std::sqrt(ratio * a.squeeze);
    const SensitivityCurve curve = min_sensitivity(src, a.grid);
    table += format_sig12(ratio);
    table += ',';
    table += format_sig12(curve.min_value);
    table += ',';
    table += sql3;
    table += ',';
    table += hl3;
    table += '\n';
  }

  const std::string out = resolve_out(a.out);
  try {
    write_text_atomic(out, table);
  } catch (const std::exception& e) {
    return data_error(e.what());
  }
  std::cout << "wrote " << out << " (" << ratios.size() << " rows)\n";
  return kExitOk;
}

struct FitArgs {
  std::string in;
  std::string form = "corrected";
  std::string kind = "counts";
  bool float_vis = false;
  int max_iter = 500;
  std::string out = "fit.json";
  std::string config;
};

// Doubles become JSON numbers; NaN (frozen-parameter errors) becomes null.
json num_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

int cmd_fit(const FitArgs& a) {
  if (a.in.empty()) return config_error("--in is required");
  if (a.form != "verbatim" && a.form != "corrected")
    return config_error("--form must be 'verbatim' or 'corrected'");
  if (a.kind != "counts" && a.kind != "rate")
    return config_error("--kind must be 'counts' or 'rate'");
  if (a.max_iter < 1) return config_error("--max-iter must be at least 1");

  FringeScan scan;
  try {
    scan = read_scan_csv(a.in, a.kind == "counts" ? ScanKind::counts : ScanKind::model_rate);
  } catch (const ParseError& e) {
    return data_error(a.in + ": " + e.what());
  } catch (const std::exception& e) {
    return data_error(e.what());
  }

  const FitForm form = a.form == "corrected" ? FitForm::corrected : FitForm::verbatim;
  FitOptions opts;
  opts.float_vis = a.float_vis;
  opts.max_iter = a.max_iter;
  FitResult res;
  try {
    res = fit_fringe(scan, form, std::nullopt, opts);
  } catch (const std::exception& e) {
    return data_error(a.in + ": " + e.what());
  }

  ordered_json report;
  report["form"] = a.form;
  report["kind"] = a.kind;
  report["n_points"] = scan.phases.size();
  report["converged"] = res.converged;
  report["n_iter"] = res.n_iter;
  report["params"] = ordered_json{{"scale", res.params.scale},
                                  {"offset", res.params.offset},
                                  {"y", res.params.y},
                                  {"phi1", res.params.phi1},
                                  {"vis", res.params.vis}};
  report["std_errors"] = ordered_json{{"scale", num_or_null(res.std_errors.scale)},
                                      {"offset", num_or_null(res.std_errors.offset)},
                                      {"y", num_or_null(res.std_errors.y)},
                                      {"phi1", num_or_null(res.std_errors.phi1)},
                                      {"vis", num_or_null(res.std_errors.vis)}};
  report["residual_rms"] = res.residual_rms;

  const std::string out = resolve_out(a.out);
  try {
    write_text_atomic(out, report.dump(2) + "\n");
  } catch (const std::exception& e) {
    return data_error(e.what());
  }
  std::cout << "wrote " << out << " (converged=" << (res.converged ? "true" : "false") << ")\n";
  return res.converged ? kExitOk : kExitNoConverge;
}

struct ValidateArgs {
  std::string out;
};

int cmd_validate(const ValidateArgs& a) {
  std::string report;
  bool pass = true;

  const CalibrationRecord* cal = nullptr;
  try {
    cal = &calibrate_convention();
  } catch (const std::exception& e) {
    report += "calibration: FAILED (";
    report += e.what();
    report += ")\n";
    pass = false;
  }

  if (cal != nullptr) {
    report += "calibration:\n";
    report += "  beam-splitter convention: ";
    report += cal->convention == BsConvention::symmetric_phase ? "symmetric_phase"
                                                               : "real_asymmetric";
    report += "\n  detection port: ";
    report += cal->port == Port::f ? "f" : "g";
    report += "\n  closed-form phase offset delta: " + format_sig12(cal->delta);
    report += "\n  squeeze sign: " + std::to_string(cal->squeeze_sign);
    report += "\n  rate proportionality scale: " + format_sig12(cal->scale) + " (1/192)";
    report += "\n  max rate residual: " + format_sig12(cal->max_rate_residual);
    report += "\n  max amplitude residual: " + format_sig12(cal->max_amplitude_residual);
    report += "\n";
    if (!(cal->max_rate_residual <= 1e-10) || !(cal->max_amplitude_residual <= 1e-10))
      pass = false;
  }

  // Pointwise corrected-model equivalence against the simulator.
  double max_rel = 0.0;
  if (cal != nullptr) {
    for (double x : {0.01, 0.0618, 0.2, 0.35}) {
      for (double s : {0.02, 0.06, 0.1}) {
        SourceParams src;
        src.alpha_mag = std::sqrt(x);
        src.squeeze = s;
        const AnalyticCoefficients coeffs = analytic_coefficients(src, true);
        const TwoModeState input = product_input(src);
        MZISettings settings = calibrated_settings();
        double peak = 0.0;
        std::vector<double> oracle;
        const std::vector<double> phases = uniform_phase_grid(144);
        for (double phi : phases) {
          settings.phase = phi;
          oracle.push_back(three_photon_rate_oracle(input, settings));
          peak = std::max(peak, oracle.back());
        }
        for (std::size_t j = 0; j < phases.size(); ++j) {
          const double dev =
              std::abs(three_photon_rate_analytic(coeffs, phases[j]) - oracle[j]) / peak;
          max_rel = std::max(max_rel, dev);
        }
      }
    }
    report += "oracle equivalence:\n";
    report += "  grid: alpha^2 in {0.01, 0.0618, 0.2, 0.35} x s in {0.02, 0.06, 0.1}";
    report += " x 144 phases\n";
    report += "  max relative deviation: " + format_sig12(max_rel) + "\n";
    report += "  tolerance: 1e-10\n";
    report += std::string("  status: ") + (max_rel <= 1e-10 ? "PASS" : "FAIL") + "\n";
    if (!(max_rel <= 1e-10)) pass = false;
  }

  report +=
      "discrepancies (printed closed forms vs oracle-corrected):\n"
      "  - the printed coefficient sheet matches the simulator only after a half-period\n"
      "    phase offset (delta = pi) and a squeeze-parameter sign flip; the corrected\n"
      "    coefficients fold both in, so the cos(phi) and cos(3 phi) terms change sign\n"
      "    and each coefficient is scaled by 1/192.\n"
      "  - fit-model cos(phi) term: printed -6y(y+1)(5y-3) vs corrected -3(y-1)(5y+3);\n"
      "    an extra factor 2y at large y and swapped binomial roles.\n"
      "  - fit-model cos(2 phi) term: printed 12(y-3)(y+1) vs corrected 6(y+3)(y-1);\n"
      "    an extra factor 2 and sign-swapped binomials.\n"
      "  - fit-model cos(3 phi) term: printed -(y-3)^2 vs corrected -(y+3)^2.\n";
  report += std::string("overall: ") + (pass ? "PASS" : "FAIL") + "\n";

  std::cout << report;
  if (!a.out.empty()) {
    try {
      write_text_atomic(resolve_out(a.out), report);
    } catch (const std::exception& e) {
      return data_error(e.what());
    }
  }
  return pass ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-photon interferometer simulator and analysis toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  ConfigMap sim_keys;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "write a fringe scan CSV over one period");
  bind_double(sim_keys, sim_cmd->add_option("--squeeze", sim.squeeze, "squeeze parameter s"),
              "squeeze", sim.squeeze);
  bind_double(sim_keys,
              sim_cmd->add_option("--alpha-sq", sim.alpha_sq, "coherent intensity alpha^2"),
              "alpha-sq", sim.alpha_sq);
  bind_double(sim_keys,
              sim_cmd->add_option("--ratio", sim.ratio, "alpha^2 / s (alternative to --alpha-sq)"),
              "ratio", sim.ratio);
  bind_double(sim_keys, sim_cmd->add_option("--theta", sim.theta, "apparatus phase offset (rad)"),
              "theta", sim.theta);
  bind_double(sim_keys,
              sim_cmd->add_option("--exposure", sim.exposure,
                                  "exposure scale; > 0 draws Poisson counts from the oracle"),
              "exposure", sim.exposure);
  bind_int(sim_keys, sim_cmd->add_option("--points", sim.points, "phase grid points"), "points",
           sim.points);
  bind_seed(sim_keys, sim_cmd->add_option("--seed", sim.seed, "RNG seed for counting mode"),
            "seed", sim.seed);
  bind_string(sim_keys,
              sim_cmd->add_option("--form", sim.form, "oracle | verbatim | corrected"), "form",
              sim.form);
  bind_string(sim_keys,
              sim_cmd->add_option("--expansion", sim.expansion, "low-order | exact"), "expansion",
              sim.expansion);
  bind_int(sim_keys, sim_cmd->add_option("--nmax", sim.nmax, "Fock truncation per mode"), "nmax",
           sim.nmax);
  bind_string(sim_keys, sim_cmd->add_option("--detect-port", sim.detect_port, "f | g"),
              "detect-port", sim.detect_port);
  bind_string(sim_keys, sim_cmd->add_option("--out", sim.out, "output CSV path"), "out", sim.out);
  sim_cmd->add_option("--config", sim.config, "flat JSON config file");

  SweepArgs swp;
  ConfigMap swp_keys;
  CLI::App* swp_cmd =
      app.add_subcommand("sweep", "write the ratio-phase probability matrix and summary");
  bind_double(swp_keys, swp_cmd->add_option("--squeeze", swp.squeeze, "squeeze parameter s"),
              "squeeze", swp.squeeze);
  bind_double(swp_keys, swp_cmd->add_option("--ratio-min", swp.ratio_min, "smallest ratio"),
              "ratio-min", swp.ratio_min);
  bind_double(swp_keys, swp_cmd->add_option("--ratio-max", swp.ratio_max, "largest ratio"),
              "ratio-max", swp.ratio_max);
  bind_int(swp_keys,
           swp_cmd->add_option("--ratio-steps", swp.ratio_steps, "log-spaced ratio count"),
           "ratio-steps", swp.ratio_steps);
  bind_int(swp_keys, swp_cmd->add_option("--points", swp.points, "phase points per fringe row"),
           "points", swp.points);
  bind_int(swp_keys,
           swp_cmd->add_option("--grid", swp.grid, "phase grid for summary statistics"), "grid",
           swp.grid);
  bind_string(swp_keys, swp_cmd->add_option("--out", swp.out, "matrix CSV path"), "out", swp.out);
  bind_string(swp_keys, swp_cmd->add_option("--summary", swp.summary, "summary CSV path"),
              "summary", swp.summary);
  swp_cmd->add_option("--config", swp.config, "flat JSON config file");

  SensitivityArgs sen;
  ConfigMap sen_keys;
  CLI::App* sen_cmd =
      app.add_subcommand("sensitivity", "write per-ratio minimum phase sensitivity");
  bind_double(sen_keys, sen_cmd->add_option("--squeeze", sen.squeeze, "squeeze parameter s"),
              "squeeze", sen.squeeze);
  bind_double(sen_keys, sen_cmd->add_option("--ratio-min", sen.ratio_min, "smallest ratio"),
              "ratio-min", sen.ratio_min);
  bind_double(sen_keys, sen_cmd->add_option("--ratio-max", sen.ratio_max, "largest ratio"),
              "ratio-max", sen.ratio_max);
  bind_int(sen_keys,
           sen_cmd->add_option("--ratio-steps", sen.ratio_steps, "log-spaced ratio count"),
           "ratio-steps", sen.ratio_steps);
  bind_int(sen_keys, sen_cmd->add_option("--grid", sen.grid, "phase grid for the minimization"),
           "grid", sen.grid);
  bind_string(sen_keys, sen_cmd->add_option("--out", sen.out, "output CSV path"), "out", sen.out);
  sen_cmd->add_option("--config", sen.config, "flat JSON config file");

  FitArgs fit;
  ConfigMap fit_keys;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a fringe scan and write a JSON report");
  bind_string(fit_keys, fit_cmd->add_option("--in", fit.in, "input scan CSV"), "in", fit.in);
  bind_string(fit_keys, fit_cmd->add_option("--form", fit.form, "verbatim | corrected"), "form",
              fit.form);
  bind_string(fit_keys, fit_cmd->add_option("--kind", fit.kind, "counts | rate"), "kind",
              fit.kind);
  bind_bool(fit_keys,
            fit_cmd->add_flag("--float-vis", fit.float_vis,
                              "float the visibility and freeze the offset"),
            "float-vis", fit.float_vis);
  bind_int(fit_keys, fit_cmd->add_option("--max-iter", fit.max_iter, "iteration cap"), "max-iter",
           fit.max_iter);
  bind_string(fit_keys, fit_cmd->add_option("--out", fit.out, "report path"), "out", fit.out);
  fit_cmd->add_option("--config", fit.config, "flat JSON config file");

  ValidateArgs val;
  CLI::App* val_cmd =
      app.add_subcommand("validate", "check closed forms against the simulator");
  val_cmd->add_option("--out", val.out, "also write the report to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (sim_cmd->parsed()) {
      if (!sim.config.empty())
        if (const int rc = apply_config_file(sim.config, sim_keys); rc != kExitOk) return rc;
      return cmd_simulate(sim);
    }
    if (swp_cmd->parsed()) {
      if (!swp.config.empty())
        if (const int rc = apply_config_file(swp.config, swp_keys); rc != kExitOk) return rc;
      return cmd_sweep(swp);
    }
    if (sen_cmd->parsed()) {
      if (!sen.config.empty())
        if (const int rc = apply_config_file(sen.config, sen_keys); rc != kExitOk) return rc;
      return cmd_sensitivity(sen);
    }
    if (fit_cmd->parsed()) {
      if (!fit.config.empty())
        if (const int rc = apply_config_file(fit.config, fit_keys); rc != kExitOk) return rc;
      return cmd_fit(fit);
    }
    if (val_cmd->parsed()) return cmd_validate(val);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}
