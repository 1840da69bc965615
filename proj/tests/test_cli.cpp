#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "qrps_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult cli(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const fs::path err = work_dir() / "stderr.txt";
  const std::string cmd = std::string(QRPS_CLI_PATH) + " " + args + " >" +
                          out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult res;
  if (WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

fs::path write_config(const std::string& name, const json& j) {
  const fs::path p = work_dir() / name;
  std::ofstream out(p);
  out << j.dump(2);
  return p;
}

}  // namespace

TEST_CASE("cli run emits a deterministic vee report") {
  const fs::path cfg = write_config(
      "vee.json", json{{"scenario", "vee_qrps"}, {"seed", 42}, {"n_rounds", 20000}});
  const CliResult first = cli("run --config " + cfg.string());
  REQUIRE(first.exit_code == 0);
  const CliResult second = cli("run --config " + cfg.string());
  CHECK(first.out == second.out);

  const json rep = json::parse(first.out);
  CHECK(rep.at("keep_rate").get<double>() == 1.0);
  CHECK(rep.at("extras").at("equal_settings").at("anticorrelation_rate").get<double>() ==
        1.0);
  CHECK(rep.at("manifest").at("config").at("scenario") == "vee_qrps");
  CHECK(rep.at("manifest").at("timestamp") == "");
}

TEST_CASE("cli reports are thread-count invariant") {
  const fs::path cfg = write_config(
      "vee_threads.json",
      json{{"scenario", "vee_qrps"}, {"seed", 7}, {"n_rounds", 50000}});
  const CliResult serial = cli("run --config " + cfg.string() + " --set threads=1");
  const CliResult wide = cli("run --config " + cfg.string() + " --set threads=4");
  REQUIRE(serial.exit_code == 0);
  REQUIRE(wide.exit_code == 0);
  CHECK(serial.out == wide.out);
}

TEST_CASE("cli --seed overrides the config seed") {
  const fs::path cfg = write_config(
      "vee_seed.json", json{{"scenario", "vee_qrps"}, {"seed", 1}, {"n_rounds", 5000}});
  const CliResult a = cli("run --config " + cfg.string());
  const CliResult b = cli("run --config " + cfg.string() + " --seed 2");
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(a.out != b.out);
  CHECK(json::parse(b.out).at("manifest").at("config").at("seed").get<int>() == 2);
}

TEST_CASE("cli wedge run writes the raw trial log") {
  const fs::path raw = work_dir() / "wedge.raw.csv";
  const fs::path cfg = write_config(
      "wedge.json", json{{"scenario", "wedge_qrps"},
                         {"seed", 3},
                         {"n_kept", 5000},
                         {"raw_path", raw.string()}});
  const CliResult res = cli("run --config " + cfg.string() + " --emit-raw");
  REQUIRE(res.exit_code == 0);
  const json rep = json::parse(res.out);
  const auto trials = rep.at("extras").at("n_trials").get<std::uint64_t>();
  CHECK(trials > 5000);

  REQUIRE(fs::exists(raw));
  std::ifstream in(raw);
  std::string header;
  std::getline(in, header);
  CHECK(header == "round,setting_a,setting_b,outcome_a,outcome_b,kept");
  std::uint64_t rows = 0, kept = 0, discarded = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++rows;
    if (line.ends_with(",1"))
      ++kept;
    else if (line.ends_with(",0"))
      ++discarded;
  }
  CHECK(rows == trials);
  CHECK(kept == 5000);
  CHECK(discarded == trials - 5000);
}

TEST_CASE("cli validates configs and names the offending key") {
  const CliResult unknown = cli("run --set scenario=nonsense --set n_rounds=10");
  CHECK(unknown.exit_code == 2);
  CHECK(unknown.err.find("scenario") != std::string::npos);

  const CliResult wrong_count =
      cli("run --set scenario=rps_filter --set n_rounds=10");
  CHECK(wrong_count.exit_code == 2);
  CHECK(wrong_count.err.find("n_kept") != std::string::npos);

  const CliResult bad_prob =
      cli("run --set scenario=ward_c --set n_rounds=10 --set params.p_a=1.5");
  CHECK(bad_prob.exit_code == 2);
  CHECK(bad_prob.err.find("p_a") != std::string::npos);

  const CliResult typo =
      cli("run --set scenario=ward_c --set n_rounds=10 --set params.pa=0.5");
  CHECK(typo.exit_code == 2);
  CHECK(typo.err.find("params.pa") != std::string::npos);

  const fs::path cfg = write_config(
      "zero_row.json",
      json{{"scenario", "wedge_qrps"},
           {"n_kept", 10},
           {"params",
            {{"alice_angles_deg", {0.0}},
             {"bob_angles_deg", {0.0}},
             {"target_table", {{{0.0, 0.0, 0.0, 0.0}}}}}}});
  const CliResult zero_row = cli("run --config " + cfg.string());
  CHECK(zero_row.exit_code == 2);
  CHECK(zero_row.err.find("invalid target distribution") != std::string::npos);
}

TEST_CASE("cli surfaces runtime errors as exit 3") {
  const CliResult res =
      cli("run --set scenario=rps_filter --set n_kept=10 --set budget=5000"
          " --set params.keep_bob_win=0 --set params.keep_other=0");
  CHECK(res.exit_code == 3);
  CHECK(res.err.find("BudgetExceededError") != std::string::npos);
}

TEST_CASE("cli compare: identical, divergent, and mismatched reports") {
  const fs::path singlet = work_dir() / "singlet.json";
  const fs::path product = work_dir() / "product.json";
  const fs::path mermin = work_dir() / "mermin.json";

  const fs::path cfg_singlet = write_config(
      "cmp_singlet.json", json{{"scenario", "vee_qrps"},
                               {"seed", 11},
                               {"n_rounds", 20000},
                               {"params",
                                {{"alice_angles_deg", {0.0, 90.0}},
                                 {"bob_angles_deg", {45.0, 135.0}}}}});
  const fs::path cfg_product = write_config(
      "cmp_product.json", json{{"scenario", "vee_qrps"},
                               {"seed", 13},
                               {"n_rounds", 20000},
                               {"params",
                                {{"alice_angles_deg", {0.0, 90.0}},
                                 {"bob_angles_deg", {45.0, 135.0}},
                                 {"target", "product"}}}});
  const fs::path cfg_mermin = write_config(
      "cmp_mermin.json",
      json{{"scenario", "vee_qrps"}, {"seed", 17}, {"n_rounds", 20000}});

  REQUIRE(cli("run --config " + cfg_singlet.string() + " --out " + singlet.string())
              .exit_code == 0);
  REQUIRE(cli("run --config " + cfg_product.string() + " --out " + product.string())
              .exit_code == 0);
  REQUIRE(cli("run --config " + cfg_mermin.string() + " --out " + mermin.string())
              .exit_code == 0);

  const CliResult self = cli("compare " + singlet.string() + " " + singlet.string());
  CHECK(self.exit_code == 0);
  const json self_diff = json::parse(self.out);
  CHECK(self_diff.at("max_tv").get<double>() == 0.0);
  CHECK(self_diff.at("max_e_delta").get<double>() == 0.0);

  const CliResult apart = cli("compare " + singlet.string() + " " + product.string() +
                              " --tolerance 0.01");
  CHECK(apart.exit_code == 1);
  const json apart_diff = json::parse(apart.out);
  CHECK(apart_diff.at("chsh_delta").get<double>() > 2.0);

  const CliResult shapes = cli("compare " + singlet.string() + " " + mermin.string());
  CHECK(shapes.exit_code == 4);
}

TEST_CASE("cli reruns a report's manifest byte-for-byte") {
  const fs::path rep = work_dir() / "manifest_rt.json";
  const fs::path cfg = write_config(
      "manifest_rt_cfg.json",
      json{{"scenario", "black_box"}, {"seed", 19}, {"n_rounds", 10000}});
  REQUIRE(cli("run --config " + cfg.string() + " --out " + rep.string()).exit_code == 0);
  const std::string first = slurp(rep);

  const fs::path rep2 = work_dir() / "manifest_rt2.json";
  REQUIRE(cli("run --config " + rep.string() + " --out " + rep2.string()).exit_code == 0);
  CHECK(slurp(rep2) == first);
}

TEST_CASE("cli csv report format") {
  const CliResult res = cli(
      "run --set scenario=sunday_rps --set n_rounds=1000 --set seed=23 --format csv");
  REQUIRE(res.exit_code == 0);
  CHECK(res.out.rfind("key,value\n", 0) == 0);
  CHECK(res.out.find("scenario,sunday_rps") != std::string::npos);
  CHECK(res.out.find("keep_rate,1") != std::string::npos);
  CHECK(res.out.find("count,") != std::string::npos);
}

TEST_CASE("cli ward_c report carries the berkson numbers") {
  const CliResult res =
      cli("run --set scenario=ward_c --set n_rounds=200000 --set seed=29");
  REQUIRE(res.exit_code == 0);
  const json rep = json::parse(res.out);
  const json& exact = rep.at("extras").at("exact");
  CHECK(exact.at("p_b1_given_a0_admitted").get<double>() == 1.0);
  CHECK(exact.at("p_b1_given_a0").get<double>() == Catch::Approx(0.01).margin(1e-12));
  CHECK(exact.at("keep_rate").get<double>() == Catch::Approx(0.0199).margin(1e-12));
  CHECK(exact.at("phi").get<double>() == Catch::Approx(-0.99).margin(1e-6));
  CHECK(rep.at("extras").at("empirical").at("p_b1_given_a0_admitted").get<double>() ==
        Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("cli black box exposes only the knob to charlie") {
  const CliResult res =
      cli("run --set scenario=black_box --set n_rounds=2000 --set seed=31"
          " --set params.knob=1");
  REQUIRE(res.exit_code == 0);
  const json rep = json::parse(res.out);
  const json& visible = rep.at("extras").at("charlie_visible");
  CHECK(visible.at("knob").get<int>() == 1);
  CHECK(visible.at("knob_name") == "product");
  CHECK(visible.size() == 2);
}
