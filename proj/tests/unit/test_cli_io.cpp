#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "heis/cli_io.hpp"

using namespace heis;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "n": 1, "p": 2.0,
  "inner": {"kind": "gauge_ball", "R": 0.4},
  "outer": {"kind": "gauge_ball", "R": 1.0},
  "grid": {"resolution": 17},
  "oracle": {"resolutions": [17, 33]},
  "verify": {"m": 1, "levels": [0.2, 0.5], "lambdas": [0.1]},
  "record_timing": false
})";

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("heis_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(HEIS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("config round trip is canonical") {
    const RunConfig c = config_from_json_text(kSmall);
    CHECK(c.resolution == std::array<int, 3>{17, 17, 17});
    CHECK(c.solver.tolerance == 1e-8);
    const std::string a = config_to_json_text(c);
    const RunConfig d = config_from_json_text(a);
    CHECK(config_to_json_text(d) == a);
    CHECK(a.find("\"domain_check\"") < a.find("\"grid\""));
    CHECK(config_hash(c) == config_hash(d));
    CHECK(config_hash(c).size() == 16);

    RunConfig e = c;
    e.output_dir = "elsewhere";
    e.solver.threads = 4;
    CHECK(config_hash(e) == config_hash(c));
    CHECK(field_hash(e) == field_hash(c));
    e.verify.levels = {0.3};
    CHECK(config_hash(e) != config_hash(c));
    CHECK(field_hash(e) == field_hash(c));
    e.p = 3.0;
    CHECK(field_hash(e) != field_hash(c));

    for (const auto& file : {"model_p2.json", "model_p4.json", "anisotropic_a4.json", "sweep.json"})
        CHECK_NOTHROW(load_config(std::string(HEIS_CONFIG_DIR) + "/" + file));
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(config_from_json_text("{ \"p\": 2, "), ConfigError);
    CHECK_THROWS_AS(config_from_json_text(R"({"p": 2, "inner": {"kind": "torus", "R": 0.4}, "outer": {"R": 1}})"),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json_text(R"({"p": 2, "color": 1, "inner": {"R": 0.4}, "outer": {"R": 1}})"),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json_text(R"({"p": 1.0, "inner": {"R": 0.4}, "outer": {"R": 1}})"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text(R"({"p": 2, "inner": {"R": 0.4}, "outer": {"R": 1}, "grid": {"resolution": 8}})"),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json_text(R"({"p": 2, "inner": {"R": 0.4}})"), ConfigError);
    CHECK_THROWS_AS(config_from_json_text(R"({"p": 2, "inner": {"R": 0.4}, "outer": {"R": 1}, "solver": {"method": "sor"}})"),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json_text(R"({"p": 2, "inner": {"R": 0.4, "center": [0, 0]}, "outer": {"R": 1}})"),
                    ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("mask run-length encoding") {
    RegionMask m;
    m.labels = {Region::Outer, Region::Outer, Region::Free, Region::Inner, Region::Inner, Region::Inner, Region::Free};
    const std::string rle = mask_rle(m);
    CHECK(rle == "O2F1I3F1");
    CHECK(mask_from_rle(rle, m.labels.size()) == m);
    CHECK_THROWS_AS(mask_from_rle(rle, 6), ConfigError);
    CHECK_THROWS_AS(mask_from_rle("X3", 3), ConfigError);
    CHECK_THROWS_AS(mask_from_rle("O", 3), ConfigError);
}

TEST_CASE("solve, checkpoint and verify") {
    RunConfig c = config_from_json_text(kSmall);
    const fs::path dir = scratch("solve");
    c.output_dir = dir.string();
    std::ostringstream log;
    REQUIRE(cmd_solve(c, log) == kExitOk);
    CHECK(fs::exists(dir / "field.bin"));
    CHECK(fs::file_size(dir / "field.bin") == 8u * 17 * 17 * 17);
    CHECK(fs::exists(dir / "solve_report.json"));

    const Checkpoint ck = read_checkpoint((dir / "field.json").string());
    CHECK(ck.field_hash == field_hash(c));
    CHECK(ck.config_hash == config_hash(c));
    const AnnulusProblem pr = make_problem(c);
    const SolveResult s = solve(pr, build_grid(pr, c.resolution), c.solver);
    CHECK(ck.field.values == s.field.values);
    CHECK(ck.field.mask == s.field.mask);
    CHECK(ck.field.grid == s.field.grid);
    CHECK(read_checkpoint((dir / "field.bin").string()).field.values == s.field.values);

    // byte layout: little-endian float64, x fastest
    const std::string raw = slurp(dir / "field.bin");
    const std::size_t idx = s.field.grid.index(5, 6, 7);
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[8 * idx + b])) << (8 * b);
    double v;
    std::memcpy(&v, &bits, 8);
    CHECK(v == s.field.values[idx]);

    // identical config gives identical artifacts
    RunConfig c2 = c;
    c2.output_dir = scratch("solve2").string();
    REQUIRE(cmd_solve(c2, log) == kExitOk);
    CHECK(slurp(dir / "field.bin") == slurp(fs::path(c2.output_dir) / "field.bin"));
    CHECK(slurp(dir / "field.json") == slurp(fs::path(c2.output_dir) / "field.json"));
    CHECK(slurp(dir / "solve_report.json") == slurp(fs::path(c2.output_dir) / "solve_report.json"));

    CHECK(cmd_verify(c, (dir / "field.json").string(), log) == kExitOk);
    CHECK(fs::exists(dir / "verify_report.json"));
    CHECK(fs::exists(dir / "level_0.2.ply"));
    CHECK(fs::exists(dir / "level_0.5.ply"));

    // reversed data fails the certificates but still writes reports
    {
        std::string bytes = raw;
        for (std::size_t i = 0; i < s.field.values.size(); ++i) {
            const double w = 1.0 - s.field.values[i];
            std::uint64_t u;
            std::memcpy(&u, &w, 8);
            for (int b = 0; b < 8; ++b) bytes[8 * i + b] = static_cast<char>(u >> (8 * b));
        }
        std::ofstream(dir / "field.bin", std::ios::binary) << bytes;
        fs::remove(dir / "verify_report.json");
        CHECK(cmd_verify(c, (dir / "field.json").string(), log) == kExitCertificate);
        CHECK(fs::exists(dir / "verify_report.json"));
    }

    RunConfig other = c;
    other.p = 3.0;
    CHECK_THROWS_AS(cmd_verify(other, (dir / "field.json").string(), log), ConfigError);
    CHECK_THROWS_AS(read_checkpoint((dir / "missing.json").string()), ConfigError);
    fs::remove_all(dir);
    fs::remove_all(c2.output_dir);
}

TEST_CASE("forced non-convergence") {
    RunConfig c = config_from_json_text(kSmall);
    c.p = 3.0;
    c.solver.max_iterations = 1;
    c.output_dir = scratch("noconv").string();
    std::ostringstream log;
    CHECK(cmd_solve(c, log) == kExitNoConvergence);
    CHECK(fs::exists(fs::path(c.output_dir) / "solve_report.json"));
    fs::remove_all(c.output_dir);
}

TEST_CASE("oracle table") {
    RunConfig c = config_from_json_text(kSmall);
    c.output_dir = scratch("oracle").string();
    std::ostringstream log;
    REQUIRE(cmd_oracle(c, log) == kExitOk);
    std::ifstream is(fs::path(c.output_dir) / "oracle.csv");
    std::string header, r1, r2, extra;
    std::getline(is, header);
    std::getline(is, r1);
    std::getline(is, r2);
    CHECK(header == "resolution,h,sup_error,l2_error,empirical_M,runtime_s");
    CHECK_FALSE(static_cast<bool>(std::getline(is, extra)));
    auto field = [](const std::string& row, int k) {
        std::stringstream ss(row);
        std::string cell;
        for (int i = 0; i <= k; ++i) std::getline(ss, cell, ',');
        return std::stod(cell);
    };
    CHECK(field(r1, 0) == 17);
    CHECK(field(r2, 0) == 33);
    CHECK(field(r2, 2) < field(r1, 2));
    CHECK(field(r1, 5) == 0.0);

    RunConfig q = c;
    q.p = 4.0;
    const auto rows = oracle_table(q, 4.0, log);
    CHECK(rows.back().sup_error < 0.1);

    RunConfig a = c;
    a.outer.kind = "anisotropic_gauge";
    a.outer.a = 4.0;
    CHECK_THROWS_AS(cmd_oracle(a, log), ConfigError);
    fs::remove_all(c.output_dir);
}

TEST_CASE("domain checks") {
    RunConfig c = config_from_json_text(kSmall);
    c.domain_check.samples = 64;
    c.domain_check.probe_radii = {0.1};
    c.output_dir = scratch("domains").string();
    std::ostringstream log;
    CHECK(cmd_check_domain(c, log) == kExitOk);
    CHECK(fs::exists(fs::path(c.output_dir) / "domain_check.json"));
    RunConfig a = c;
    a.outer.kind = "anisotropic_gauge";
    a.outer.a = 4.0;
    CHECK(cmd_check_domain(a, log) == kExitOk);
    RunConfig t = c;
    t.inner.center = {0.8, 0.0, 0.0};
    t.inner.R = 0.1;
    CHECK_THROWS_AS(cmd_check_domain(t, log), ConfigError);
    fs::remove_all(c.output_dir);
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{ not json";
    std::ofstream(dir / "small.json") << kSmall;
    std::ofstream(dir / "aniso.json") << R"({"p": 2, "inner": {"R": 0.4}, "outer": {"kind": "anisotropic_gauge", "a": 4, "R": 1}})";
    const std::string out = " --out " + (dir / "out").string();
    CHECK(run_cli("solve --config " + (dir / "bad.json").string() + out) == kExitInput);
    CHECK(run_cli("frobnicate") == kExitInput);
    CHECK(run_cli("solve") == kExitInput);
    CHECK(run_cli("solve --config " + (dir / "small.json").string() + out + " --threads 2") == kExitOk);
    CHECK(run_cli("verify --config " + (dir / "small.json").string() + out) == kExitOk);
    CHECK(run_cli("oracle --config " + (dir / "aniso.json").string() + out) == kExitInput);
    CHECK(run_cli("check-domain --config " + (dir / "small.json").string() + out + " --seed 3") == kExitOk);
    fs::remove_all(dir);
}
