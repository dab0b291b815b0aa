// Command-line front end: run manifests, print preset tables, inspect
// single states.  Exit codes: 0 clean, 1 bad input, 2 rows with failures.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "macroq/cli.hpp"

namespace {

void write_payload(const std::string& payload, const std::string& path) {
  if (path.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write to '" + path + "'");
  out << payload;
}

int emit(const std::vector<macroq::cli::ReportRow>& rows,
         const std::string& format, const std::string& path) {
  const std::string payload = format == "json" ? macroq::cli::to_json(rows)
                                               : macroq::cli::to_csv(rows);
  write_payload(payload, path);
  return macroq::cli::has_error_rows(rows) ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum-state measure tables"};
  app.require_subcommand(1);

  int jobs = 1;
  unsigned seed = 0;
  bool seed_given = false;
  std::string out_path;
  std::string format;

  auto add_common = [&](CLI::App* sub, bool with_format) {
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 64));
    sub->add_option("--seed", seed, "override the run seed")
        ->each([&](const std::string&) { seed_given = true; });
    sub->add_option("--out", out_path, "write the table here (default stdout)");
    if (with_format)
      sub->add_option("--format", format, "csv or json")
          ->check(CLI::IsMember({"csv", "json"}));
  };

  std::string manifest_path;
  CLI::App* run_cmd = app.add_subcommand("run", "evaluate a JSON manifest");
  run_cmd->add_option("manifest", manifest_path, "manifest file")->required();
  add_common(run_cmd, true);

  std::string preset_tag;
  CLI::App* preset_cmd = app.add_subcommand("preset", "built-in survey table");
  preset_cmd->add_option("tag", preset_tag, "preset name")->required();
  add_common(preset_cmd, true);

  std::string state_spec;
  std::string wigner_path, marginal_path;
  double marginal_angle = 0.0;
  CLI::App* state_cmd = app.add_subcommand("state", "single-state utilities");
  CLI::App* inspect_cmd =
      state_cmd->add_subcommand("inspect", "summarize one state");
  inspect_cmd
      ->add_option("spec", state_spec, "kind:key=value,... e.g. coherent:alpha=2")
      ->required();
  inspect_cmd->add_option("--wigner", wigner_path, "dump the Wigner grid CSV");
  inspect_cmd->add_option("--marginal", marginal_path,
                          "dump a quadrature marginal CSV");
  inspect_cmd->add_option("--angle", marginal_angle,
                          "marginal angle in radians");
  state_cmd->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      macroq::cli::RunManifest m = macroq::cli::load_manifest(manifest_path);
      if (seed_given) m.seed = seed;
      if (!format.empty()) m.output.format = format;
      if (!out_path.empty()) m.output.path = out_path;
      auto rows = macroq::cli::run(m, jobs);
      return emit(rows, m.output.format, m.output.path);
    }
    if (preset_cmd->parsed()) {
      auto rows =
          macroq::cli::preset_table(preset_tag, jobs, seed_given ? seed : 0);
      return emit(rows, format.empty() ? "csv" : format, out_path);
    }
    // state inspect
    macroq::cli::InspectReport rep = macroq::cli::inspect_state(state_spec);
    std::printf("kind: %s\n", rep.kind.c_str());
    std::printf("modes: %d\n", rep.modes);
    std::printf("mean photon number: %.9g\n", rep.mean_photon);
    std::printf("purity: %.9g\n", rep.purity);
    std::printf("wigner min: %.9g\n", rep.wigner_min);
    std::printf("wigner max: %.9g\n", rep.wigner_max);
    if (!wigner_path.empty())
      write_payload(macroq::cli::wigner_csv(state_spec), wigner_path);
    if (!marginal_path.empty())
      write_payload(macroq::cli::marginal_csv(state_spec, marginal_angle),
                    marginal_path);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
