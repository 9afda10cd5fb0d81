// Command-line driver: solve, verify, oracle, check-domain, sweep-p.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "heis/cli_io.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string checkpoint;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "run configuration (JSON)")->required();
    cmd->add_option("--out", o.out, "output directory (overrides output_dir)");
    cmd->add_option("--threads", o.threads, "worker threads (overrides solver.threads)")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "sampling seed (overrides seed)");
}

heis::RunConfig load(const Overrides& o) {
    heis::RunConfig c = heis::load_config(o.config);
    if (o.out) c.output_dir = *o.out;
    if (o.threads) c.solver.threads = *o.threads;
    if (o.seed) c.seed = *o.seed;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Horizontal p-capacitary potentials on Heisenberg annuli and starshapedness certificates"};
    app.require_subcommand(1);
    Overrides o;
    auto* solve = app.add_subcommand("solve", "solve the Dirichlet problem and write a field checkpoint");
    auto* verify = app.add_subcommand("verify", "certify a checkpoint: sign certificate, level sets, dilations");
    auto* oracle = app.add_subcommand("oracle", "error table against the closed-form potential");
    auto* check = app.add_subcommand("check-domain", "starshapedness and gauge-ball probes of both domains");
    auto* sweep = app.add_subcommand("sweep-p", "oracle and verify over a list of exponents");
    for (auto* cmd : {solve, verify, oracle, check, sweep}) add_common(cmd, o);
    verify->add_option("--checkpoint", o.checkpoint, "field checkpoint (.json sidecar or .bin)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? heis::kExitOk : heis::kExitInput;
    }

    try {
        const heis::RunConfig c = load(o);
        if (*solve) return heis::cmd_solve(c, std::cout);
        if (*verify) {
            const std::string ck = o.checkpoint.empty() ? c.output_dir + "/field.json" : o.checkpoint;
            return heis::cmd_verify(c, ck, std::cout);
        }
        if (*oracle) return heis::cmd_oracle(c, std::cout);
        if (*check) return heis::cmd_check_domain(c, std::cout);
        if (*sweep) return heis::cmd_sweep_p(c, std::cout);
    } catch (const heis::ConfigError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return heis::kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return heis::kExitInput;
    }
    return heis::kExitInput;
}
