#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "lattlight/geometry.hpp"
#include "lattlight/observables.hpp"
#include "lattlight/oracle.hpp"
#include "lattlight/states.hpp"

namespace lattlight {

// ----------------------------------------------------------------------------
// Scan configuration
// ----------------------------------------------------------------------------

enum class OutputFormat { csv, json };
enum class Normalization { raw, per_window_atoms };  // per-N_K

// Detection-angle grid theta1_j = start + j * (stop - start) / (points - 1).
struct ThetaGrid {
  double start = -3.14159265358979323846;
  double stop = 3.14159265358979323846;
  int points = 361;
};

struct ScanConfig {
  AtomicStateSpec state = Superfluid{30, 30};
  LatticeGeometry geometry;  // M = 30, d = 1, K = 30, j0 = 1
  ModeSpec probe;            // traveling, lambda = 2, theta0 = 0
  ModeSpec detect;           // kind and wavelength only; theta comes from the grid
  ThetaGrid grid;
  CavityParams cavity;
  double quad_phase = 0.0;
  Normalization normalization = Normalization::raw;

  // Figure presets emit the per-N_K normalized noise and intensity as extra
  // columns alongside the raw values.
  bool per_window_columns = false;

  // Column selection for emit(); empty means every default column.
  std::vector<std::string> observables;

  int workers = 0;  // 0 = hardware concurrency

  // Collects every field-level problem and throws ValidationError.
  void validate() const;
};

// Validation failure carrying one message per offending field.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> field_issues);
  std::vector<std::string> issues;
};

// ----------------------------------------------------------------------------
// Output rows
// ----------------------------------------------------------------------------

// One grid point.  The oracle_* members are populated by run_oracle_check
// only, the *_per_nk members when per-window columns are requested; emit()
// writes whichever columns the caller selects.
struct OutputRow {
  double theta1 = 0.0;
  double classical_intensity = 0.0;
  double DstarD = 0.0;
  double R = 0.0;
  double photon_number = 0.0;
  double photon_variance = 0.0;
  double quad_variance = 0.0;
  double DstarD_per_nk = 0.0;
  double R_per_nk = 0.0;
  double oracle_DstarD = 0.0;
  double oracle_R = 0.0;
  double oracle_absD4 = 0.0;
  double closed_absD4 = 0.0;
};

// The seven standard columns, in declared order.
std::vector<std::string> default_columns();

// Column list for a config: default columns, filtered by cfg.observables if
// nonempty (theta1 always stays), plus the per-N_K extras when enabled.
std::vector<std::string> scan_columns(const ScanConfig& cfg);

// ----------------------------------------------------------------------------
// Operations
// ----------------------------------------------------------------------------

// Closed-form observables over the theta1 grid.  Grid points are evaluated
// concurrently but assembled in grid order, so the result is deterministic.
std::vector<OutputRow> run_scan(const ScanConfig& cfg);

// Closed-form vs oracle comparison over the grid.
struct CheckOptions {
  std::uint64_t cap = kDefaultConfigCap;
  std::uint64_t mc_samples = 0;  // 0 = exact enumeration
  std::uint64_t seed = 1;
  int workers = 0;
};

struct DeviationSummary {
  std::string name;       // E_D, E_DstarD, E_absD4, E_D2, R
  double max_abs = 0.0;
  double max_rel = 0.0;   // |a-b| / max(1, |a|, |b|), exact path
  double max_sigma = 0.0; // |a-b| / stderr, Monte Carlo path
};

struct OracleCheckReport {
  bool monte_carlo = false;
  bool passed = false;
  std::vector<DeviationSummary> deviations;
  std::vector<OutputRow> rows;  // with oracle_* columns populated
  std::uint64_t count = 0;      // configurations / samples per grid point
};

// Exact path passes when every relative deviation stays below 1e-8; the Monte
// Carlo path when every closed-form value lies within 4 standard errors of
// its estimate.  CapExceeded propagates from the oracle.
OracleCheckReport run_oracle_check(const ScanConfig& cfg, const CheckOptions& options);

inline constexpr double kOracleCheckRelTolerance = 1e-8;
inline constexpr double kOracleCheckSigmaBound = 4.0;

// ----------------------------------------------------------------------------
// Emission
// ----------------------------------------------------------------------------

// Value of a named column in a row; throws std::invalid_argument for unknown
// names.
double column_value(const OutputRow& row, const std::string& column);

// CSV: header + one line per row, comma separated, >= 12 significant digits,
// LF endings.  JSON: array of objects whose keys are exactly the column
// names.  Rows are written in order; an empty row list yields a header-only
// CSV / empty JSON array.
void emit(const std::vector<OutputRow>& rows,
          const std::vector<std::string>& columns, OutputFormat format,
          std::ostream& os);

std::string emit_string(const std::vector<OutputRow>& rows,
                        const std::vector<std::string>& columns,
                        OutputFormat format);

}  // namespace lattlight
