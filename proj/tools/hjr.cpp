// Command-line driver over the C interface.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "hjr/hjr.h"

int main(int argc, char **argv)
{
    CLI::App app{"Symmetry reduction and reconstruction of Hamilton-Jacobi problems"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", hjr_version());

    std::string scenario;
    double tol = 1e-8;
    long grid = 0;
    long long seed = -1;
    std::string out = ".";
    double dt = 0.0;
    double t_end = 0.0;
    bool quiet = false;

    const char *names[][2] = {
        {"reduce", "Reduce by the symmetry and print the reduced Hamiltonian"},
        {"solve-hj", "Solve the (reduced) Hamilton-Jacobi equation by quadrature"},
        {"reconstruct", "Lift the reduced solution and reconstruct a trajectory"},
        {"simulate", "Integrate Hamilton's equations with RK4"},
        {"verify", "Run the verification suites"},
        {"integrate", "Run the generating-function scheme"},
        {"equilibrium", "Transform a trajectory to equilibrium with a complete solution"},
    };
    for (const auto &[name, help] : names) {
        auto *sub = app.add_subcommand(name, help);
        sub->add_option("scenario", scenario, "Scenario JSON file")->required();
        sub->add_option("--tol", tol, "Residual tolerance")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--grid", grid, "Grid points per axis")->check(CLI::Range(2L, 100000L));
        sub->add_option("--seed", seed, "Seed for sampled checks")->check(CLI::NonNegativeNumber);
        sub->add_option("--out", out, "Output directory")->capture_default_str();
        sub->add_option("--dt", dt, "Time step")->check(CLI::PositiveNumber);
        sub->add_option("--t-end", t_end, "Final time")->check(CLI::PositiveNumber);
        sub->add_flag("-q,--quiet", quiet, "Do not print the report");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    hjr_run_options opts;
    hjr_run_options_init(&opts);
    opts.tol = tol;
    opts.grid = grid;
    opts.seed = seed;
    opts.out_dir = out.c_str();
    opts.dt = dt;
    opts.t_end = t_end;

    const std::string command = app.get_subcommands().front()->get_name();
    int exit_code = 0;
    char *report = nullptr;
    const hjr_status st = hjr_run(command.c_str(), scenario.c_str(), &opts, &exit_code, &report);
    if (st != HJR_OK) {
        std::fprintf(stderr, "hjr: %s: %s\n", hjr_status_name(st), hjr_last_error());
        return 3;
    }
    if (!quiet) std::fputs(report, stdout);
    hjr_string_free(report);
    if (exit_code != 0) std::fprintf(stderr, "hjr %s: %s\n", command.c_str(), hjr_last_error());
    return exit_code;
}
