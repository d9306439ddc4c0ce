// Command-line front end: angular scans, figure presets, oracle cross-checks
// and occupation-statistics tables, emitted as CSV or JSON.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lattlight/scan.hpp"

namespace {

using namespace lattlight;

constexpr double kPi = std::numbers::pi;

// Every tunable shared by the subcommands, in CLI-flag form.  Subcommand
// presets, the optional JSON config file and explicit flags are layered in
// that order (flags win).
struct CliValues {
  std::string state = "sf";
  double N = 30.0;  // total atoms (mean for coherent)
  int M = 30;
  int K = 30;
  int j0 = 1;
  double d = 1.0;
  double lambda0 = 2.0;
  double lambda1 = 2.0;
  double theta0 = 0.0;
  std::string probe = "traveling";
  std::string detect = "traveling";
  double theta1_start = -kPi;
  double theta1_stop = kPi;
  int points = 361;
  std::string normalize = "raw";
  std::string observables;  // comma-separated column subset
  double quad_phase = 0.0;
  std::string out;
  std::string format = "csv";
  std::uint64_t mc = 0;
  std::uint64_t seed = 1;
  std::uint64_t cap = kDefaultConfigCap;
  int workers = 0;
  std::string config_path;
};

void add_common_options(CLI::App* cmd, CliValues& v) {
  cmd->add_option("--state", v.state, "atomic state: mi | sf | coherent")
      ->check(CLI::IsMember({"mi", "sf", "coherent"}));
  cmd->add_option("--N", v.N, "total atom number (mean for coherent)");
  cmd->add_option("--M", v.M, "lattice site count");
  cmd->add_option("--K", v.K, "illuminated site count");
  cmd->add_option("--j0", v.j0, "first illuminated site (1-based)");
  cmd->add_option("--d", v.d, "lattice period");
  cmd->add_option("--lambda0", v.lambda0, "probe wavelength");
  cmd->add_option("--lambda1", v.lambda1, "detection wavelength");
  cmd->add_option("--theta0", v.theta0, "probe angle (radians)");
  cmd->add_option("--probe", v.probe, "probe mode kind: traveling | standing")
      ->check(CLI::IsMember({"traveling", "standing"}));
  cmd->add_option("--detect", v.detect, "detection mode kind: traveling | standing")
      ->check(CLI::IsMember({"traveling", "standing"}));
  cmd->add_option("--theta1-start", v.theta1_start, "grid start (radians)");
  cmd->add_option("--theta1-stop", v.theta1_stop, "grid stop (radians)");
  cmd->add_option("--points", v.points, "grid point count");
  cmd->add_option("--normalize", v.normalize, "raw | per-nk (divide R, DstarD by N_K)")
      ->check(CLI::IsMember({"raw", "per-nk"}));
  cmd->add_option("--observables", v.observables,
                  "comma-separated column subset (default: all)");
  cmd->add_option("--quad-phase", v.quad_phase, "quadrature phase phi (radians)");
  cmd->add_option("--out", v.out, "output path (default: stdout)");
  cmd->add_option("--format", v.format, "output format: csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--mc", v.mc, "oracle Monte Carlo sample count (0 = exact)");
  cmd->add_option("--seed", v.seed, "Monte Carlo seed");
  cmd->add_option("--cap", v.cap, "exact-enumeration configuration cap");
  cmd->add_option("--workers", v.workers, "worker threads (0 = hardware)");
  cmd->add_option("--config", v.config_path,
                  "JSON config file; explicit flags override its values");
}

// Overlay config-file values onto v, skipping any key whose flag was set on
// the command line.
void apply_config_file(const CLI::App* cmd, CliValues& v) {
  if (v.config_path.empty()) {
    return;
  }
  std::ifstream in(v.config_path);
  if (!in) {
    throw std::runtime_error("cannot read config file: " + v.config_path);
  }
  nlohmann::json file;
  try {
    in >> file;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError({"config: " + std::string(e.what())});
  }
  if (!file.is_object()) {
    throw ValidationError({"config: top level must be a JSON object"});
  }

  const auto overlay = [&](const char* key, const char* flag, auto& field) {
    if (!file.contains(key) || cmd->count(flag) > 0) {
      return;
    }
    try {
      file.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      throw ValidationError({std::string("config: bad value for '") + key + "'"});
    }
  };

  overlay("state", "--state", v.state);
  overlay("N", "--N", v.N);
  overlay("M", "--M", v.M);
  overlay("K", "--K", v.K);
  overlay("j0", "--j0", v.j0);
  overlay("d", "--d", v.d);
  overlay("lambda0", "--lambda0", v.lambda0);
  overlay("lambda1", "--lambda1", v.lambda1);
  overlay("theta0", "--theta0", v.theta0);
  overlay("probe", "--probe", v.probe);
  overlay("detect", "--detect", v.detect);
  overlay("theta1_start", "--theta1-start", v.theta1_start);
  overlay("theta1_stop", "--theta1-stop", v.theta1_stop);
  overlay("points", "--points", v.points);
  overlay("normalize", "--normalize", v.normalize);
  overlay("observables", "--observables", v.observables);
  overlay("quad_phase", "--quad-phase", v.quad_phase);
  overlay("out", "--out", v.out);
  overlay("format", "--format", v.format);
  overlay("mc", "--mc", v.mc);
  overlay("seed", "--seed", v.seed);
  overlay("cap", "--cap", v.cap);
  overlay("workers", "--workers", v.workers);

  for (const auto& item : file.items()) {
    static const std::vector<std::string> known = {
        "state", "N", "M", "K", "j0", "d", "lambda0", "lambda1", "theta0",
        "probe", "detect", "theta1_start", "theta1_stop", "points",
        "normalize", "observables", "quad_phase", "out", "format", "mc",
        "seed", "cap", "workers"};
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ValidationError({"config: unknown key '" + item.key() + "'"});
    }
  }
}

AtomicStateSpec make_state(const CliValues& v) {
  std::vector<std::string> issues;
  if (v.state == "mi") {
    const double filling = v.N / static_cast<double>(v.M);
    if (v.M < 1) {
      issues.push_back("M: must be >= 1");
    } else if (v.N != std::floor(v.N) ||
               std::floor(filling) != filling) {
      issues.push_back("N: Mott-insulator atom number must be an integer "
                       "multiple of M (fixed integer filling)");
    }
    if (!issues.empty()) {
      throw ValidationError(std::move(issues));
    }
    return MottInsulator{static_cast<int>(filling)};
  }
  if (v.state == "sf") {
    if (v.N != std::floor(v.N) || v.N < 0) {
      throw ValidationError({"N: superfluid atom number must be a nonnegative integer"});
    }
    return Superfluid{static_cast<int>(v.N), v.M};
  }
  return CoherentAtoms{v.N, v.M};
}

ScanConfig make_scan_config(const CliValues& v, bool per_window_columns) {
  ScanConfig cfg;
  cfg.state = make_state(v);
  cfg.geometry.sites = v.M;
  cfg.geometry.period = v.d;
  cfg.geometry.illuminated = v.K;
  cfg.geometry.first_site = v.j0;
  cfg.probe.kind = v.probe == "standing" ? ModeKind::standing : ModeKind::traveling;
  cfg.probe.wavelength = v.lambda0;
  cfg.probe.theta = v.theta0;
  cfg.detect.kind = v.detect == "standing" ? ModeKind::standing : ModeKind::traveling;
  cfg.detect.wavelength = v.lambda1;
  cfg.grid.start = v.theta1_start;
  cfg.grid.stop = v.theta1_stop;
  cfg.grid.points = v.points;
  cfg.quad_phase = v.quad_phase;
  cfg.normalization = v.normalize == "per-nk" ? Normalization::per_window_atoms
                                              : Normalization::raw;
  cfg.per_window_columns = per_window_columns;
  cfg.workers = v.workers;
  if (!v.observables.empty()) {
    std::stringstream ss(v.observables);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (!token.empty()) {
        cfg.observables.push_back(token);
      }
    }
  }
  return cfg;
}

// Output location: --out relative paths land in $LATTLIGHT_OUT_DIR when set.
std::optional<std::filesystem::path> resolve_out(const std::string& out) {
  if (out.empty()) {
    return std::nullopt;
  }
  std::filesystem::path path(out);
  if (path.is_relative()) {
    if (const char* dir = std::getenv("LATTLIGHT_OUT_DIR")) {
      path = std::filesystem::path(dir) / path;
    }
  }
  return path;
}

// Returns the exit code so I/O failures can map to their own status.
int write_output(const std::string& text, const std::string& out) {
  const auto path = resolve_out(out);
  if (!path) {
    std::cout << text;
    return 0;
  }
  std::ofstream file(*path, std::ios::binary);
  if (!file) {
    std::cerr << "error: cannot open output file: " << path->string() << "\n";
    return 3;
  }
  file << text;
  file.flush();
  if (!file) {
    std::cerr << "error: failed writing output file: " << path->string() << "\n";
    return 3;
  }
  return 0;
}

int run_scan_command(const CliValues& v, bool per_window_columns) {
  const ScanConfig cfg = make_scan_config(v, per_window_columns);
  const std::vector<OutputRow> rows = run_scan(cfg);
  const OutputFormat format =
      v.format == "json" ? OutputFormat::json : OutputFormat::csv;
  return write_output(emit_string(rows, scan_columns(cfg), format), v.out);
}

int run_check_command(const CliValues& v) {
  ScanConfig cfg = make_scan_config(v, false);
  CheckOptions options;
  options.cap = v.cap;
  options.mc_samples = v.mc;
  options.seed = v.seed;
  options.workers = v.workers;

  const OracleCheckReport report = run_oracle_check(cfg, options);

  std::cout << "oracle check (" << (report.monte_carlo ? "monte-carlo" : "exact")
            << ", " << report.count
            << (report.monte_carlo ? " samples" : " configurations")
            << " per grid point, " << cfg.grid.points << " points)\n";
  std::cout << "observable    max_abs_dev      "
            << (report.monte_carlo ? "max_sigma_dev" : "max_rel_dev") << "\n";
  char line[128];
  for (const auto& dev : report.deviations) {
    std::snprintf(line, sizeof(line), "%-12s  %-15.6e  %-15.6e\n",
                  dev.name.c_str(), dev.max_abs,
                  report.monte_carlo ? dev.max_sigma : dev.max_rel);
    std::cout << line;
  }
  std::cout << "threshold: "
            << (report.monte_carlo ? "4 standard errors"
                                   : "1e-08 relative deviation")
            << "\n";
  std::cout << "result: " << (report.passed ? "PASS" : "FAIL") << "\n";

  if (!v.out.empty()) {
    std::vector<std::string> columns = default_columns();
    columns.push_back("closed_absD4");
    columns.push_back("oracle_DstarD");
    columns.push_back("oracle_R");
    columns.push_back("oracle_absD4");
    const OutputFormat format =
        v.format == "json" ? OutputFormat::json : OutputFormat::csv;
    const int io = write_output(emit_string(report.rows, columns, format), v.out);
    if (io != 0) {
      return io;
    }
  }
  return report.passed ? 0 : 2;
}

int run_table_command(const CliValues& v) {
  const AtomicStateSpec state = make_state(v);
  if (state_sites(state) > 0 && v.K > state_sites(state)) {
    throw ValidationError({"K: window exceeds the lattice site count"});
  }
  const OccupationStats stats = occupation_stats(state, v.K);

  const std::vector<std::string> columns = {"state", "N",      "M",    "K",
                                            "mean_filling", "n2", "var_n",
                                            "NK2",   "var_NK", "nanb", "cov"};
  const double values[] = {v.N,
                           static_cast<double>(v.M),
                           static_cast<double>(v.K),
                           mean_filling(state),
                           stats.n2,
                           stats.var_n,
                           stats.NK2,
                           stats.var_NK,
                           stats.nanb,
                           stats.cov};

  std::ostringstream os;
  char buf[64];
  const auto fmt = [&](double value) {
    std::snprintf(buf, sizeof(buf), "%.15g", value);
    return std::string(buf);
  };
  if (v.format == "json") {
    nlohmann::ordered_json obj;
    obj["state"] = v.state;
    for (size_t i = 1; i < columns.size(); ++i) {
      obj[columns[i]] = values[i - 1];
    }
    os << obj.dump(2) << '\n';
  } else {
    for (size_t i = 0; i < columns.size(); ++i) {
      os << (i == 0 ? "" : ",") << columns[i];
    }
    os << '\n' << v.state;
    for (double value : values) {
      os << ',' << fmt(value);
    }
    os << '\n';
  }
  return write_output(os.str(), v.out);
}

// Preset parameter sets (see README): full-window and half-window
// traveling-wave scans, and the standing-wave scan at theta0 = 0.1*pi.
// Presets only fill flags the user left unset, so explicit flags (and config
// file values, applied afterwards with the same rule) keep their precedence.
template <typename T>
void preset(const CLI::App* cmd, const char* flag, T& field, T value) {
  if (cmd->count(flag) == 0) {
    field = std::move(value);
  }
}

void apply_fig2(const CLI::App* cmd, CliValues& v) {
  preset(cmd, "--state", v.state, std::string("sf"));
  preset(cmd, "--N", v.N, 30.0);
  preset(cmd, "--M", v.M, 30);
  preset(cmd, "--K", v.K, 30);
  preset(cmd, "--d", v.d, 1.0);
  preset(cmd, "--lambda0", v.lambda0, 2.0);
  preset(cmd, "--lambda1", v.lambda1, 2.0);
  preset(cmd, "--theta0", v.theta0, 0.0);
  preset(cmd, "--probe", v.probe, std::string("traveling"));
  preset(cmd, "--detect", v.detect, std::string("traveling"));
  preset(cmd, "--points", v.points, 361);
}

void apply_fig2c(const CLI::App* cmd, CliValues& v) {
  apply_fig2(cmd, v);
  preset(cmd, "--K", v.K, 15);
}

void apply_fig3(const CLI::App* cmd, CliValues& v) {
  apply_fig2(cmd, v);
  preset(cmd, "--theta0", v.theta0, 0.1 * kPi);
  preset(cmd, "--probe", v.probe, std::string("standing"));
  preset(cmd, "--detect", v.detect, std::string("standing"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cavity light scattering from lattice atoms: scans, presets, "
               "oracle checks"};
  app.require_subcommand(1);

  CliValues v;
  CLI::App* scan_cmd = app.add_subcommand("scan", "angular scan of all observables");
  CLI::App* check_cmd =
      app.add_subcommand("check", "compare closed forms against the oracle");
  CLI::App* fig2_cmd = app.add_subcommand(
      "fig2", "preset: traveling waves, full window (N=M=K=30, theta0=0)");
  CLI::App* fig2c_cmd = app.add_subcommand(
      "fig2c", "preset: traveling waves, half window (K=15)");
  CLI::App* fig3_cmd = app.add_subcommand(
      "fig3", "preset: standing waves at theta0=0.1*pi (N=M=K=30)");
  CLI::App* table_cmd = app.add_subcommand(
      "table1", "occupation statistics of the selected state");
  for (CLI::App* cmd :
       {scan_cmd, check_cmd, fig2_cmd, fig2c_cmd, fig3_cmd, table_cmd}) {
    add_common_options(cmd, v);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // flag errors are validation errors
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    if (cmd == fig2_cmd) {
      apply_fig2(cmd, v);
    } else if (cmd == fig2c_cmd) {
      apply_fig2c(cmd, v);
    } else if (cmd == fig3_cmd) {
      apply_fig3(cmd, v);
    }
    // Preset values act as defaults: config file, then explicit flags, win.
    apply_config_file(cmd, v);

    if (cmd == check_cmd) {
      return run_check_command(v);
    }
    if (cmd == table_cmd) {
      return run_table_command(v);
    }
    const bool preset = cmd == fig2_cmd || cmd == fig2c_cmd || cmd == fig3_cmd;
    return run_scan_command(v, preset);
  } catch (const CapExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
