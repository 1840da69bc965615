// qrps: batch runner for collider-bias games.
//
//   qrps run --config cfg.json [--set key=value]... [--seed N]
//            [--out report.json] [--format json|csv] [--emit-raw]
//   qrps compare a.json b.json [--tolerance T] [--out diff.json]
//
// Exit codes: 0 ok, 1 compare beyond tolerance, 2 config error,
// 3 runtime error, 4 compare alphabet mismatch.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qrps/config.hpp"
#include "qrps/report.hpp"
#include "qrps/run.hpp"
#include "qrps/version.hpp"

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qrps::ConfigError("cannot open file '" + path + "'");
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded())
    throw qrps::ConfigError("file '" + path + "' is not valid JSON");
  return j;
}

int do_run(const std::string& config_path, const std::vector<std::string>& sets,
           const CLI::Option* seed_opt, std::uint64_t seed, const std::string& out_path,
           const std::string& format, bool emit_raw) {
  json raw = config_path.empty() ? json::object() : qrps::load_config_json(config_path);
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw qrps::ConfigError("--set expects key=value, got '" + kv + "'");
    qrps::set_by_path(raw, kv.substr(0, eq), qrps::parse_override_value(kv.substr(eq + 1)));
  }
  if (seed_opt->count() > 0) raw["seed"] = seed;
  if (!out_path.empty()) raw["output_path"] = out_path;
  if (!format.empty()) raw["output_format"] = format;
  if (emit_raw) raw["emit_raw"] = true;

  const qrps::RunConfig cfg = qrps::parse_config(raw);
  const qrps::RunArtifacts art = qrps::run(cfg);
  const std::string text = qrps::write_artifacts(cfg, art);
  if (cfg.output_path.empty()) std::cout << text;
  return 0;
}

int do_compare(const std::string& path_a, const std::string& path_b, double tolerance,
               const std::string& out_path) {
  const json a = load_json_file(path_a);
  const json b = load_json_file(path_b);
  if (!a.contains("counts") || !b.contains("counts"))
    throw qrps::ConfigError("compare expects report files with a 'counts' key");
  const qrps::CompareSummary sum = qrps::compare_reports(a, b);
  const std::string text = qrps::compare_to_json(sum, tolerance).dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw qrps::ConfigError("cannot write output file '" + out_path + "'");
    out << text;
  }
  if (!sum.alphabets_match) {
    std::cerr << "compare: reports have different alphabets\n";
    return 4;
  }
  return sum.within(tolerance) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"collider-bias games: post-selection and constrained-collider simulators"};
  app.set_version_flag("--version", std::string(qrps::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string format;
  bool emit_raw = false;

  CLI::App* run_cmd = app.add_subcommand("run", "execute one scenario and emit a report");
  run_cmd->add_option("--config", config_path, "JSON config (a report file also works)");
  run_cmd->add_option("--set", sets, "override a config key by dotted path (key=value)");
  CLI::Option* seed_opt = run_cmd->add_option("--seed", seed, "random seed");
  run_cmd->add_option("--out", out_path, "report output path (default: stdout)");
  run_cmd->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"csv", "json"}));
  run_cmd->add_flag("--emit-raw", emit_raw, "also write the per-trial CSV");

  std::string cmp_a, cmp_b, cmp_out;
  double tolerance = 0.01;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "diff two report files");
  cmp_cmd->add_option("report_a", cmp_a, "first report")->required();
  cmp_cmd->add_option("report_b", cmp_b, "second report")->required();
  cmp_cmd->add_option("--tolerance", tolerance, "max allowed TV / E-value delta");
  cmp_cmd->add_option("--out", cmp_out, "diff output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed())
      return do_run(config_path, sets, seed_opt, seed, out_path, format, emit_raw);
    return do_compare(cmp_a, cmp_b, tolerance, cmp_out);
  } catch (const qrps::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const qrps::Error& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
