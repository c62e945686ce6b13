// End-to-end checks of the command-line tool: exit codes, output files,
// and byte-level reproducibility across reruns and thread counts.
#define DOCTEST_CONFIG_IMPLEMENT
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mimic/errors.hpp"
#include "mimic/io.hpp"

namespace fs = std::filesystem;

static std::string g_binary;
static fs::path g_work;

namespace {

int run(const std::string& args) {
    std::string cmd = g_binary + " " + args + " > " + (g_work / "stdout.txt").string() + " 2> " +
                      (g_work / "stderr.txt").string();
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

const char* kMixedConfig = R"({
  "scenario": {"name": "mixed_poisson", "p": 0.5, "lambda1": 1.0, "lambda2": 4.0},
  "sim": {"n_particles": 1500, "dt": 0.015625, "horizon": 1.0, "seed": 42},
  "projection": {"stride": 4, "n_bins": 10, "min_bin_count": 30},
  "validation": {"times": [0.5, 1.0], "ks_tolerance": 0.08, "tv_tolerance": 0.08}
})";

const char* kNullConfig = R"({
  "scenario": {"name": "constant", "b": [0.0], "c": [0.0]},
  "sim": {"n_particles": 10, "dt": 0.25, "horizon": 1.0, "seed": 7},
  "projection": {"stride": 1, "n_bins": 4, "min_bin_count": 1}
})";

const char* kConstantDriftConfig = R"({
  "scenario": {"name": "constant", "b": [2.0], "c": [1.0]},
  "sim": {"n_particles": 400, "dt": 0.0625, "horizon": 1.0, "seed": 11},
  "projection": {"stride": 2, "n_bins": 6, "min_bin_count": 5}
})";

}  // namespace

TEST_CASE("simulate: outputs, manifest and determinism across threads") {
    write_file(g_work / "mixed.json", kMixedConfig);
    fs::remove_all(g_work / "s1");
    fs::remove_all(g_work / "s2");
    CHECK(run("simulate --config " + (g_work / "mixed.json").string() + " --out " +
              (g_work / "s1").string() + " --threads 1") == 0);
    CHECK(run("simulate --config " + (g_work / "mixed.json").string() + " --out " +
              (g_work / "s2").string() + " --threads 2") == 0);
    for (const char* f : {"ensemble.csv", "kernels.csv", "jumps.csv", "manifest.json"}) {
        CHECK(fs::exists(g_work / "s1" / f));
        CHECK(slurp(g_work / "s1" / f) == slurp(g_work / "s2" / f));
    }
    std::string manifest = slurp(g_work / "s1" / "manifest.json");
    CHECK(manifest.find("\"seed\": 42") != std::string::npos);
    CHECK(manifest.find("\"n_particles\": 1500") != std::string::npos);
    CHECK(manifest.find("\"dt\": 0.015625") != std::string::npos);

    // header + one row per particle per grid time
    std::string csv = slurp(g_work / "s1" / "ensemble.csv");
    std::size_t rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(rows == 1 + 1500 * 65);
}

TEST_CASE("null-characteristics ensemble is constant") {
    write_file(g_work / "null.json", kNullConfig);
    fs::remove_all(g_work / "null_out");
    CHECK(run("simulate --config " + (g_work / "null.json").string() + " --out " +
              (g_work / "null_out").string()) == 0);
    std::ifstream in(g_work / "null_out" / "ensemble.csv");
    std::string line;
    std::getline(in, line);  // header
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        // z0 and y0 columns stay zero
        std::size_t c1 = line.find(',');
        std::size_t c2 = line.find(',', c1 + 1);
        std::size_t c3 = line.find(',', c2 + 1);
        std::string z = line.substr(c2 + 1, c3 - c2 - 1);
        CHECK(z == "0");
    }
    CHECK(rows == 10 * 5);
}

TEST_CASE("project: constant drift gives constant b_hat") {
    write_file(g_work / "cdrift.json", kConstantDriftConfig);
    fs::remove_all(g_work / "cd_src");
    fs::remove_all(g_work / "cd_proj");
    REQUIRE(run("simulate --config " + (g_work / "cdrift.json").string() + " --out " +
                (g_work / "cd_src").string()) == 0);
    CHECK(run("project --config " + (g_work / "cdrift.json").string() + " --ensemble " +
              (g_work / "cd_src").string() + " --out " + (g_work / "cd_proj").string()) == 0);
    std::ifstream in(g_work / "cd_proj" / "projection.csv");
    std::string header, line;
    std::getline(in, header);
    // locate the b_hat0 column
    std::size_t col = 0;
    {
        std::stringstream hs(header);
        std::string name;
        std::size_t i = 0;
        while (std::getline(hs, name, ',')) {
            if (name == "b_hat0") col = i;
            ++i;
        }
    }
    REQUIRE(col > 0);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::string field;
        for (std::size_t i = 0; i <= col; ++i) std::getline(ls, field, ',');
        CHECK(field == "2");
        ++rows;
    }
    CHECK(rows > 0);
}

TEST_CASE("full pipeline: oracle and estimated modes, reproducible bytes") {
    write_file(g_work / "mixed.json", kMixedConfig);
    fs::remove_all(g_work / "p1");
    fs::remove_all(g_work / "p2");
    CHECK(run("pipeline --config " + (g_work / "mixed.json").string() + " --out " +
              (g_work / "p1").string() + " --oracle --threads 2") == 0);
    CHECK(run("pipeline --config " + (g_work / "mixed.json").string() + " --out " +
              (g_work / "p2").string() + " --oracle --threads 1") == 0);
    for (const char* f :
         {"source/ensemble.csv", "source/kernels.csv", "mimic/ensemble.csv",
          "mimic/kernels.csv", "marginal_report.csv", "martingale_report.csv", "summary.txt"}) {
        CHECK(fs::exists(g_work / "p1" / f));
        CHECK(slurp(g_work / "p1" / f) == slurp(g_work / "p2" / f));
    }
    std::string summary = slurp(g_work / "p1" / "summary.txt");
    CHECK(summary.find("PASS overall") != std::string::npos);

    fs::remove_all(g_work / "p3");
    CHECK(run("pipeline --config " + (g_work / "mixed.json").string() + " --out " +
              (g_work / "p3").string()) == 0);
    CHECK(fs::exists(g_work / "p3" / "projection/projection.csv"));
    CHECK(fs::exists(g_work / "p3" / "projection/mixture.csv"));
    std::string mimic_csv = slurp(g_work / "p3" / "mimic/ensemble.csv");
    CHECK(mimic_csv.find("estimated") != std::string::npos);
}

TEST_CASE("staged mimic from projection files and validate") {
    write_file(g_work / "mixed.json", kMixedConfig);
    fs::remove_all(g_work / "st_src");
    fs::remove_all(g_work / "st_proj");
    fs::remove_all(g_work / "st_mimic");
    fs::remove_all(g_work / "st_val");
    std::string cfg = " --config " + (g_work / "mixed.json").string();
    REQUIRE(run("simulate" + cfg + " --out " + (g_work / "st_src").string()) == 0);
    REQUIRE(run("project" + cfg + " --ensemble " + (g_work / "st_src").string() + " --out " +
                (g_work / "st_proj").string()) == 0);
    REQUIRE(run("mimic" + cfg + " --projection " + (g_work / "st_proj").string() + " --out " +
                (g_work / "st_mimic").string()) == 0);
    int code = run("validate" + cfg + " --a " + (g_work / "st_src").string() + " --b " +
                   (g_work / "st_mimic").string() + " --out " + (g_work / "st_val").string());
    CHECK(code == 0);
    CHECK(fs::exists(g_work / "st_val" / "marginal_report.csv"));
    CHECK(fs::exists(g_work / "st_val" / "summary.txt"));
}

TEST_CASE("validate: self comparison passes, different laws fail") {
    write_file(g_work / "mixed.json", kMixedConfig);
    fs::remove_all(g_work / "v_self");
    std::string cfg = " --config " + (g_work / "mixed.json").string();
    int self_code = run("validate" + cfg + " --a " + (g_work / "s1").string() + " --b " +
                        (g_work / "s1").string() + " --out " + (g_work / "v_self").string());
    CHECK(self_code == 0);

    // Brownian source vs mixed-Poisson source: different laws
    write_file(g_work / "brown.json", R"({
      "scenario": {"name": "constant", "b": [0.0], "c": [1.0]},
      "sim": {"n_particles": 1500, "dt": 0.015625, "horizon": 1.0, "seed": 5}
    })");
    fs::remove_all(g_work / "v_brown");
    fs::remove_all(g_work / "brown_src");
    REQUIRE(run("simulate --config " + (g_work / "brown.json").string() + " --out " +
                (g_work / "brown_src").string()) == 0);
    int fail_code = run("validate" + cfg + " --a " + (g_work / "brown_src").string() + " --b " +
                        (g_work / "s1").string() + " --out " + (g_work / "v_brown").string());
    CHECK(fail_code == 1);
}

TEST_CASE("usage and configuration errors exit with code 2") {
    write_file(g_work / "bad.json", "{ not json");
    CHECK(run("simulate --config " + (g_work / "bad.json").string() + " --out " +
              (g_work / "bad_out").string()) == 2);

    write_file(g_work / "unknown.json", R"({"scenario": {"name": "no_such_process"}})");
    CHECK(run("simulate --config " + (g_work / "unknown.json").string() + " --out " +
              (g_work / "bad_out").string()) == 2);

    write_file(g_work / "mixed.json", kMixedConfig);
    CHECK(run("project --config " + (g_work / "mixed.json").string() + " --ensemble " +
              (g_work / "missing_dir").string() + " --out " + (g_work / "bad_out").string()) == 2);
    CHECK(run("mimic --config " + (g_work / "mixed.json").string() + " --out " +
              (g_work / "bad_out").string()) == 2);  // neither --projection nor --oracle
    CHECK(run("bogus_command") == 2);
}

TEST_CASE("kernel atoms parse from the config schema") {
    // atoms as a list of {"xi": [floats], "rate": float}
    auto k = mimic::kernel_from_json_text(
        R"({"atoms": [{"xi": [1.0], "rate": 2.0}, {"xi": [-0.5], "rate": 0.25}]})");
    CHECK(k.total_rate() == doctest::Approx(2.25).epsilon(1e-15));
    CHECK(k.atoms().size() == 2);

    // a constant scenario configured with a jump kernel simulates
    write_file(g_work / "jumps.json", R"({
      "scenario": {"name": "constant", "b": [0.0], "c": [0.0],
                   "kernel": {"atoms": [{"xi": [1.0], "rate": 2.0}]},
                   "truncation": {"mode": "hard", "r": 2.0}},
      "sim": {"n_particles": 200, "dt": 0.015625, "horizon": 1.0, "seed": 3}
    })");
    fs::remove_all(g_work / "jump_out");
    CHECK(run("simulate --config " + (g_work / "jumps.json").string() + " --out " +
              (g_work / "jump_out").string()) == 0);
    std::string kernels = slurp(g_work / "jump_out" / "kernels.csv");
    CHECK(kernels.find("0,1,2") != std::string::npos);  // atom row: id 0, xi 1, rate 2
    std::string jumps = slurp(g_work / "jump_out" / "jumps.csv");
    CHECK(std::count(jumps.begin(), jumps.end(), '\n') > 100);  // ~2 jumps per path expected
}

TEST_CASE("config validation rejects malformed values") {
    using mimic::parse_config;
    using mimic::scenario_from_config;
    CHECK_THROWS_AS(
        scenario_from_config(parse_config(R"({"scenario": {"name": "mixed_poisson", "p": 2.0}})")),
        mimic::ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"scenario": {"name": "x"}, "sim": {"dt": -1.0, "horizon": 1.0}})"),
        mimic::ConfigError);
    CHECK_THROWS_AS(
        parse_config(
            R"({"scenario": {"name": "x"}, "sim": {"dt": 0.3, "horizon": 1.0}})"),
        mimic::ConfigError);  // horizon not a whole number of steps
    CHECK_THROWS_AS(
        parse_config(
            R"({"scenario": {"name": "mixed_poisson"}, "validation": {"times": [-1.0]}})"),
        mimic::ConfigError);
    auto ok = parse_config(R"({"scenario": {"name": "mixed_poisson"}})");
    CHECK(ok.sim.grid.n_steps() == 256);
    CHECK(ok.config_hash != 0);
}

TEST_CASE("scenario runtime failures exit with code 3") {
    // jump intensity far above the thinning limit for the step size
    write_file(g_work / "hot.json", R"({
      "scenario": {"name": "constant", "b": [0.0], "c": [0.0],
                   "kernel": {"atoms": [{"xi": [1.0], "rate": 300.0}]},
                   "truncation": {"mode": "hard", "r": 2.0}},
      "sim": {"n_particles": 8, "dt": 0.00390625, "horizon": 1.0, "seed": 3}
    })");
    CHECK(run("simulate --config " + (g_work / "hot.json").string() + " --out " +
              (g_work / "hot_out").string()) == 3);
}

TEST_CASE("constant scenario accepts an updating function by name") {
    write_file(g_work / "sup.json", R"({
      "scenario": {"name": "constant", "b": [0.0], "c": [1.0], "phi": "supremum_to_date"},
      "sim": {"n_particles": 50, "dt": 0.0625, "horizon": 1.0, "seed": 5}
    })");
    fs::remove_all(g_work / "sup_out");
    CHECK(run("simulate --config " + (g_work / "sup.json").string() + " --out " +
              (g_work / "sup_out").string()) == 0);
    std::string header = slurp(g_work / "sup_out" / "ensemble.csv");
    CHECK(header.find("z0,z1,y0") != std::string::npos);  // 2-d state (X, M)

    write_file(g_work / "badphi.json", R"({
      "scenario": {"name": "constant", "b": [0.0], "c": [1.0], "phi": "no_such_map"},
      "sim": {"n_particles": 5, "dt": 0.25, "horizon": 1.0, "seed": 5}
    })");
    CHECK(run("simulate --config " + (g_work / "badphi.json").string() + " --out " +
              (g_work / "sup_out").string()) == 2);

    write_file(g_work / "phimix.json", R"({
      "scenario": {"name": "mixed_poisson", "phi": "supremum_to_date"}
    })");
    CHECK(run("simulate --config " + (g_work / "phimix.json").string() + " --out " +
              (g_work / "sup_out").string()) == 2);
}

TEST_CASE("seed override changes the output") {
    write_file(g_work / "mixed.json", kMixedConfig);
    fs::remove_all(g_work / "seed_a");
    fs::remove_all(g_work / "seed_b");
    std::string cfg = " --config " + (g_work / "mixed.json").string();
    REQUIRE(run("simulate" + cfg + " --out " + (g_work / "seed_a").string()) == 0);
    REQUIRE(run("simulate" + cfg + " --seed 777 --out " + (g_work / "seed_b").string()) == 0);
    CHECK(slurp(g_work / "seed_a" / "ensemble.csv") != slurp(g_work / "seed_b" / "ensemble.csv"));
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-mimic-binary>\n");
        return 1;
    }
    g_binary = argv[argc - 1];
    g_work = fs::temp_directory_path() / "mimic_cli_tests";
    fs::create_directories(g_work);
    doctest::Context ctx;
    ctx.applyCommandLine(argc - 1, argv);
    return ctx.run();
}
