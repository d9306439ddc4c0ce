#include "lattlight/scan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>
#include <utility>

#include <json.hpp>

namespace lattlight {

namespace {

constexpr double kPi = std::numbers::pi;

double window_atoms(const ScanConfig& cfg) {
  return mean_filling(cfg.state) * static_cast<double>(cfg.geometry.illuminated);
}

// Relative deviation with an absolute floor of 1: honest for near-zero values.
double relative_deviation(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Evaluates fn(0..count-1) across workers; every index writes only its own
// slot, so the assembled result does not depend on the worker count.
void parallel_for_index(int count, int workers, const std::function<void(int)>& fn) {
  int resolved = workers > 0
                     ? workers
                     : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  resolved = std::min(resolved, count);
  if (resolved <= 1) {
    for (int i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(resolved));
  for (int w = 0; w < resolved; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < count; i += resolved) {
        fn(i);
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
}

double grid_theta(const ThetaGrid& grid, int j) {
  return grid.start + static_cast<double>(j) * (grid.stop - grid.start) /
                          static_cast<double>(grid.points - 1);
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

}  // namespace

// ----------------------------------------------------------------------------
// Configuration validation
// ----------------------------------------------------------------------------

ValidationError::ValidationError(std::vector<std::string> field_issues)
    : std::invalid_argument([&] {
        std::string msg = "invalid configuration:";
        for (const auto& issue : field_issues) {
          msg += "\n  - " + issue;
        }
        return msg;
      }()),
      issues(std::move(field_issues)) {}

void ScanConfig::validate() const {
  std::vector<std::string> issues;
  const auto collect = [&](const char* field, const auto& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      issues.push_back(std::string(field) + ": " + e.what());
    }
  };

  collect("state", [&] { lattlight::validate(state); });
  collect("geometry", [&] { geometry.validate(); });
  collect("probe", [&] { probe.validate(); });
  collect("detect", [&] {
    ModeSpec d = detect;
    d.theta = 0.0;  // theta comes from the grid; validate the rest
    d.validate();
  });
  collect("cavity", [&] { cavity.validate(); });

  const int m = state_sites(state);
  if (m > 0 && m != geometry.sites) {
    issues.push_back("state: site count " + std::to_string(m) +
                     " does not match the geometry's " +
                     std::to_string(geometry.sites) + " sites");
  }

  if (grid.points < 2) {
    issues.push_back("points: grid needs at least 2 points");
  }
  if (!(grid.start < grid.stop)) {
    issues.push_back("theta1_start: grid start must lie below its stop");
  }
  if (grid.start < -kPi - 1e-12 || grid.stop > kPi + 1e-12) {
    issues.push_back("theta1_start: grid must stay within [-pi, pi]");
  }
  if (!std::isfinite(quad_phase)) {
    issues.push_back("quad_phase: must be finite");
  }

  if (normalization == Normalization::per_window_atoms || per_window_columns) {
    bool ok = true;
    try {
      ok = window_atoms(*this) > 0.0;
    } catch (const std::exception&) {
      ok = false;  // state issue already recorded
    }
    if (!ok) {
      issues.push_back("normalize: per-N_K normalization needs N_K > 0");
    }
  }

  const auto known = default_columns();
  for (const auto& name : observables) {
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      issues.push_back("observables: unknown column '" + name + "'");
    }
  }

  if (!issues.empty()) {
    throw ValidationError(std::move(issues));
  }
}

// ----------------------------------------------------------------------------
// Columns
// ----------------------------------------------------------------------------

std::vector<std::string> default_columns() {
  return {"theta1", "classical_intensity", "DstarD",       "R",
          "photon_number", "photon_variance",     "quad_variance"};
}

std::vector<std::string> scan_columns(const ScanConfig& cfg) {
  std::vector<std::string> columns;
  for (const auto& name : default_columns()) {
    const bool selected =
        cfg.observables.empty() || name == "theta1" ||
        std::find(cfg.observables.begin(), cfg.observables.end(), name) !=
            cfg.observables.end();
    if (selected) {
      columns.push_back(name);
    }
  }
  if (cfg.per_window_columns) {
    columns.push_back("DstarD_per_nk");
    columns.push_back("R_per_nk");
  }
  return columns;
}

double column_value(const OutputRow& row, const std::string& column) {
  if (column == "theta1") return row.theta1;
  if (column == "classical_intensity") return row.classical_intensity;
  if (column == "DstarD") return row.DstarD;
  if (column == "R") return row.R;
  if (column == "photon_number") return row.photon_number;
  if (column == "photon_variance") return row.photon_variance;
  if (column == "quad_variance") return row.quad_variance;
  if (column == "DstarD_per_nk") return row.DstarD_per_nk;
  if (column == "R_per_nk") return row.R_per_nk;
  if (column == "oracle_DstarD") return row.oracle_DstarD;
  if (column == "oracle_R") return row.oracle_R;
  if (column == "oracle_absD4") return row.oracle_absD4;
  if (column == "closed_absD4") return row.closed_absD4;
  throw std::invalid_argument("unknown output column '" + column + "'");
}

// ----------------------------------------------------------------------------
// Scans
// ----------------------------------------------------------------------------

std::vector<OutputRow> run_scan(const ScanConfig& cfg) {
  cfg.validate();

  const double nk = mean_filling(cfg.state) * cfg.geometry.illuminated;
  std::vector<OutputRow> rows(static_cast<size_t>(cfg.grid.points));

  parallel_for_index(cfg.grid.points, cfg.workers, [&](int j) {
    const double theta1 = grid_theta(cfg.grid, j);
    ModeSpec detect = cfg.detect;
    detect.theta = theta1;
    const CouplingSet c = couplings(cfg.geometry, cfg.probe, detect);
    const ObservablesReport report = evaluate(c, cfg.state, cfg.cavity, cfg.quad_phase);

    OutputRow row;
    row.theta1 = theta1;
    row.classical_intensity = report.classical_intensity;
    row.DstarD = report.DstarD;
    row.R = report.R;
    row.photon_number = report.photon_number;
    row.photon_variance = report.photon_variance;
    row.quad_variance = report.quad_variance;
    if (nk > 0.0) {
      row.DstarD_per_nk = report.DstarD / nk;
      row.R_per_nk = report.R / nk;
    }
    if (cfg.normalization == Normalization::per_window_atoms) {
      row.DstarD /= nk;
      row.R /= nk;
    }
    rows[static_cast<size_t>(j)] = row;
  });

  return rows;
}

OracleCheckReport run_oracle_check(const ScanConfig& cfg, const CheckOptions& options) {
  cfg.validate();

  OracleCheckReport report;
  report.monte_carlo = options.mc_samples > 0;
  report.deviations = {DeviationSummary{"E_D"},      DeviationSummary{"E_DstarD"},
                       DeviationSummary{"E_absD4"},  DeviationSummary{"E_D2"},
                       DeviationSummary{"R"}};
  report.rows.resize(static_cast<size_t>(cfg.grid.points));
  report.passed = true;

  for (int j = 0; j < cfg.grid.points; ++j) {
    const double theta1 = grid_theta(cfg.grid, j);
    ModeSpec detect = cfg.detect;
    detect.theta = theta1;
    const CouplingSet c = couplings(cfg.geometry, cfg.probe, detect);

    // Closed-form side (raw, normalization never applies to checks).
    const Complex closed_D = expected_D(c, cfg.state);
    const double closed_DstarD = expected_DstarD(c, cfg.state);
    const double closed_absD4 = fourth_moment_absD4(c, cfg.state);
    const Complex closed_D2 = expected_D2(c, cfg.state);
    const double closed_R = noise_R(c, cfg.state);

    // Oracle side.
    const OracleReport oracle =
        options.mc_samples > 0
            ? mc_expectations(cfg.state, c, options.mc_samples, options.seed,
                              cfg.geometry.first_site, options.workers)
            : exact_expectations(cfg.state, c, cfg.geometry.first_site,
                                 options.cap);
    report.count = std::max(report.count, oracle.count);

    struct Entry {
      double abs_dev;
      double scale_a, scale_b;
      double sigma;
    };
    // R's standard error follows from the two moments it is derived from.
    const double r_stderr =
        oracle.stderr_E_DstarD + 2.0 * std::abs(oracle.E_D) * oracle.stderr_E_D;
    const Entry entries[5] = {
        {std::abs(closed_D - oracle.E_D), std::abs(closed_D), std::abs(oracle.E_D),
         oracle.stderr_E_D},
        {std::abs(closed_DstarD - oracle.E_DstarD), std::abs(closed_DstarD),
         std::abs(oracle.E_DstarD), oracle.stderr_E_DstarD},
        {std::abs(closed_absD4 - oracle.E_absD4), std::abs(closed_absD4),
         std::abs(oracle.E_absD4), oracle.stderr_E_absD4},
        {std::abs(closed_D2 - oracle.E_D2), std::abs(closed_D2), std::abs(oracle.E_D2),
         oracle.stderr_E_D2},
        {std::abs(closed_R - oracle.noise()), std::abs(closed_R),
         std::abs(oracle.noise()), r_stderr},
    };

    for (int e = 0; e < 5; ++e) {
      auto& dev = report.deviations[static_cast<size_t>(e)];
      const double scale = std::max({1.0, entries[e].scale_a, entries[e].scale_b});
      const double rel = entries[e].abs_dev / scale;
      dev.max_abs = std::max(dev.max_abs, entries[e].abs_dev);
      dev.max_rel = std::max(dev.max_rel, rel);
      if (report.monte_carlo) {
        // Statistical agreement: within 4 standard errors, with a tiny floor
        // for exactly-reproduced (zero-variance) quantities.
        const double floor = 1e-12 * scale;
        const double sigma =
            entries[e].abs_dev / std::max(entries[e].sigma, floor);
        dev.max_sigma = std::max(dev.max_sigma, sigma);
        if (sigma > kOracleCheckSigmaBound) {
          report.passed = false;
        }
      } else if (rel > kOracleCheckRelTolerance) {
        report.passed = false;
      }
    }

    OutputRow row;
    row.theta1 = theta1;
    row.classical_intensity = std::norm(closed_D);
    row.DstarD = closed_DstarD;
    row.R = closed_R;
    const double c2 = std::norm(cfg.cavity.field_prefactor());
    row.photon_number = c2 * closed_DstarD;
    row.photon_variance =
        c2 * c2 * (closed_absD4 - closed_DstarD * closed_DstarD) + c2 * closed_DstarD;
    row.quad_variance = quadrature_variance(c, cfg.state, cfg.cavity, cfg.quad_phase);
    row.closed_absD4 = closed_absD4;
    row.oracle_DstarD = oracle.E_DstarD;
    row.oracle_R = oracle.noise();
    row.oracle_absD4 = oracle.E_absD4;
    report.rows[static_cast<size_t>(j)] = row;
  }

  return report;
}

// ----------------------------------------------------------------------------
// Emission
// ----------------------------------------------------------------------------

void emit(const std::vector<OutputRow>& rows,
          const std::vector<std::string>& columns, OutputFormat format,
          std::ostream& os) {
  if (format == OutputFormat::csv) {
    for (size_t i = 0; i < columns.size(); ++i) {
      os << (i == 0 ? "" : ",") << columns[i];
    }
    os << '\n';
    for (const auto& row : rows) {
      for (size_t i = 0; i < columns.size(); ++i) {
        os << (i == 0 ? "" : ",") << format_value(column_value(row, columns[i]));
      }
      os << '\n';
    }
    return;
  }

  nlohmann::ordered_json array = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json obj;
    for (const auto& column : columns) {
      obj[column] = column_value(row, column);
    }
    array.push_back(std::move(obj));
  }
  os << array.dump(2) << '\n';
}

std::string emit_string(const std::vector<OutputRow>& rows,
                        const std::vector<std::string>& columns,
                        OutputFormat format) {
  std::ostringstream os;
  emit(rows, columns, format, os);
  return os.str();
}

}  // namespace lattlight
