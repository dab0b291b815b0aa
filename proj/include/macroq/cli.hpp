#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "macroq/fock.hpp"
#include "macroq/spin.hpp"

// Batch front-end: manifests name states and measures, run() evaluates the
// cross product (optionally sweeping one state parameter) and returns rows
// ready for CSV/JSON serialization.  Everything here is deterministic given
// the manifest seed; stochastic measures derive a per-row seed from it.

namespace macroq::cli {

// One state entry: a factory kind plus its numeric parameters.  Kinds and
// their parameters are listed in the README; unknown kinds or parameters
// are manifest errors.
struct StateSpec {
  std::string id;
  std::string kind;
  std::map<std::string, double> params;
};

struct MeasureSpec {
  std::string tag;
  std::map<std::string, double> params;
};

// Re-evaluates state `state` with `param` set to each value in turn.
struct SweepSpec {
  std::string state;
  std::string param;
  std::vector<double> values;
};

struct OutputSpec {
  std::string format = "csv";  // csv | json
  std::string path;            // empty = stdout
};

struct RunManifest {
  unsigned seed = 1234;
  OutputSpec output;
  std::vector<StateSpec> states;
  std::vector<MeasureSpec> measures;
  std::optional<SweepSpec> sweep;
};

// One row per (state, sweep point, measure).  param_name is empty and
// param_value 0 for states outside the sweep.  Failed evaluations keep the
// row with value = NaN and method = "error: ...".
struct ReportRow {
  std::string state_id;
  std::string param_name;
  double param_value = 0.0;
  std::string measure;
  double value = 0.0;
  double error_estimate = 0.0;
  std::string method;
  double seconds = 0.0;
};

// Parse a JSON manifest.  Syntax errors carry line/column; semantic errors
// (unknown kind, unknown measure tag, bad sweep reference) name the culprit.
RunManifest parse_manifest(const std::string& text);
RunManifest load_manifest(const std::string& path);

// Evaluate the manifest with up to `jobs` worker threads.  Rows come back
// sorted by (state, param, value, measure) regardless of completion order,
// and a given manifest + seed reproduces every value exactly.
std::vector<ReportRow> run(const RunManifest& m, int jobs = 1);

bool has_error_rows(const std::vector<ReportRow>& rows);

// Canned tables reproducing the survey comparisons; seed 0 keeps each
// preset's built-in default.
std::vector<ReportRow> preset_table(const std::string& tag, int jobs = 1,
                                    unsigned seed = 0);
std::vector<std::string> preset_names();

std::string to_csv(const std::vector<ReportRow>& rows);
std::string to_json(const std::vector<ReportRow>& rows);
std::vector<ReportRow> rows_from_csv(const std::string& text);
std::vector<ReportRow> rows_from_json(const std::string& text);

// Inline state spec "kind:key=val,key=val" -> summary facts.  Field states
// only; multi-mode states report the mode-0 Wigner extrema after reducing.
struct InspectReport {
  std::string kind;
  int modes = 0;
  std::vector<int> dims;
  double mean_photon = 0.0;
  double purity = 1.0;
  double wigner_min = 0.0;
  double wigner_max = 0.0;
};
InspectReport inspect_state(const std::string& spec);

// Wigner / marginal CSV exports (x, y, value) for the same inline spec.
std::string wigner_csv(const std::string& spec, double extent = 0.0,
                       int n = 201);
std::string marginal_csv(const std::string& spec, double angle);

}  // namespace macroq::cli
