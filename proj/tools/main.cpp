#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "plap/experiments.hpp"

namespace {

struct GlobalArgs {
    std::string config;
    std::string out;
    long long seed = -1;
    int threads = 0;
};

int dispatch(const std::string& command, const GlobalArgs& args) {
    plap::RunConfig cfg;
    if (!args.config.empty()) {
        cfg = plap::parse_config_file(args.config, command);
    } else {
        cfg.command = command;
    }
    if (!args.out.empty()) cfg.out_dir = args.out;
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (args.threads > 0) cfg.threads = args.threads;
    return plap::run_config(cfg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"p-Laplace workbench: solver, fractional seminorms, dual norms, "
                 "K-functional profiles and verification sweeps"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config, "key = value config file with a block per command");
    app.add_option("--out", args.out, "output directory (overrides the config)");
    app.add_option("--seed", args.seed, "random seed (overrides the config)");
    app.add_option("--threads", args.threads, "worker threads (overrides the config)");

    const char* commands[] = {"solve",         "seminorm",       "dualnorm",
                              "kfunc",         "verify-energy",  "verify-sobolev",
                              "sweep-sharpness", "check-scaling"};
    const char* descriptions[] = {
        "solve the regularized Dirichlet problem on a ball",
        "evaluate a Nikolskii / Besov / Slobodeckii seminorm",
        "dual (negative) norm of a functional by constrained ascent",
        "K-functional profile of a field for a chosen couple",
        "solve and verify the uniform energy estimate",
        "verify the Sobolev estimate for given (u, f)",
        "radial-power sharpness sweep around the critical exponent",
        "scaling invariance of the Sobolev estimate"};
    for (int i = 0; i < 8; ++i) app.add_subcommand(commands[i], descriptions[i]);

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return dispatch(command, args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
