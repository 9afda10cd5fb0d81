#pragma once

// Run configuration, checkpoints and the subcommands of the command-line driver.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "heis/domains.hpp"
#include "heis/geometry.hpp"
#include "heis/solver.hpp"

namespace heis {

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitNoConvergence = 2, kExitCertificate = 3 };

struct ConfigError : Error {
    using Error::Error;
};

struct DomainSpec {
    std::string kind = "gauge_ball";  // gauge_ball | anisotropic_gauge | euclidean_ball
    std::vector<double> center;       // gauge_ball, euclidean_ball; empty means origin
    double R = 1.0;
    double a = 1.0;         // anisotropic_gauge
    double dilation = 0.0;  // domain is delta_dilation of the above
};

ImplicitDomain make_domain(const DomainSpec& spec, int n);

struct VerifyOptions {
    int m = 2;
    std::vector<double> levels{0.2, 0.5, 0.8};
    std::vector<double> lambdas{0.1, 0.05, 0.025};
};

struct DomainCheckOptions {
    int samples = 256;
    std::vector<double> probe_radii{0.1};
};

struct RunConfig {
    int n = 1;
    double p = 2.0;
    DomainSpec inner;
    DomainSpec outer;
    std::array<int, 3> resolution{65, 65, 65};
    std::vector<int> oracle_resolutions{33, 65};
    std::vector<double> sweep_p{1.5, 2.0, 3.0, 4.0};
    SolveOptions solver;
    VerifyOptions verify;
    DomainCheckOptions domain_check;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    bool record_timing = true;  // false writes zero runtimes so artifacts are byte-reproducible
};

/// Parses and validates; unknown keys and unknown domain kinds are errors.
RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical serialization: sorted keys, every field present.
std::string config_to_json_text(const RunConfig& c);

/// FNV-1a over the canonical config without output_dir and threads.
std::string config_hash(const RunConfig& c);
/// FNV-1a over the parts that determine the solved field: problem, grid, solver.
std::string field_hash(const RunConfig& c);

AnnulusProblem make_problem(const RunConfig& c);
AnnulusProblem make_problem(const RunConfig& c, double p);

struct Checkpoint {
    ScalarField field;
    std::string field_hash;
    std::string config_hash;
};

/// Writes <stem>.bin (float64, little endian, x fastest) and <stem>.json.
void write_checkpoint(const std::string& stem, const ScalarField& field, const RunConfig& c,
                      const SolveReport& report);
/// Accepts either file of the pair.
Checkpoint read_checkpoint(const std::string& path);

std::string mask_rle(const RegionMask& mask);
RegionMask mask_from_rle(const std::string& rle, std::size_t count);

struct OracleRow {
    int resolution = 0;
    double h = 0.0;
    double sup_error = 0.0;
    double l2_error = 0.0;
    double empirical_M = 0.0;
    double runtime_s = 0.0;
    bool converged = false;
};

/// Errors against the closed-form potential; requires concentric gauge balls at the origin.
std::vector<OracleRow> oracle_table(const RunConfig& c, double p, std::ostream& log);
void write_oracle_csv(const std::string& path, const std::vector<OracleRow>& rows);

int cmd_solve(const RunConfig& c, std::ostream& log);
int cmd_verify(const RunConfig& c, const std::string& checkpoint, std::ostream& log);
int cmd_oracle(const RunConfig& c, std::ostream& log);
int cmd_check_domain(const RunConfig& c, std::ostream& log);
int cmd_sweep_p(const RunConfig& c, std::ostream& log);

}  // namespace heis
