// gnlab command-line front end. Argument parsing only; all work happens
// behind the C API of the shared library.

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <string>

#include "gnlab.h"

namespace {

int exit_code_for(gnlab_status status) {
    switch (status) {
        case GNLAB_OK: return 0;
        case GNLAB_ERROR_CONFIG: return 2;
        case GNLAB_ERROR_NUMERIC: return 3;
        case GNLAB_ERROR_CALIBRATION: return 4;
        default: return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(gnlab_version()) +
                 " - stochastic explanation enhancement for dense networks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_set = false;
    size_t samples = 0;
    bool samples_set = false;
    size_t threads = 0;
    bool threads_set = false;

    app.add_option("--config", config_path, "experiment config file (INI-style)");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "override the run seed")
        ->each([&](const std::string&) { seed_set = true; });
    app.add_option("--samples", samples, "override the per-command sample count")
        ->each([&](const std::string&) { samples_set = true; });
    app.add_option("--threads", threads, "worker threads (default 1)")
        ->each([&](const std::string&) { threads_set = true; });

    const char* const commands[] = {"train",  "explain", "calibrate",
                                    "compare", "sweep",  "toy",
                                    "heuristic-curve", "sanity", "am"};
    const char* const descriptions[] = {
        "train a model and save the checkpoint",
        "compute enhanced attributions for test samples",
        "calibrate noise levels to the target accuracy drop",
        "attribution-quality table across baseline/sg/ng/fg",
        "(sigma_ng, sigma_sg) grid of ranking AUC and dAUC",
        "planar toy figures: explanation arrows and gradient fields",
        "AUC against accuracy drop across noise levels",
        "model parameter randomization check",
        "ensemble-averaged activation maximization"};
    for (size_t i = 0; i < std::size(commands); ++i) {
        // Global flags may follow the subcommand.
        app.add_subcommand(commands[i], descriptions[i])->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    gnlab_run_opts opts;
    gnlab_run_opts_init(&opts);
    if (!config_path.empty()) {
        opts.config_path = config_path.c_str();
    }
    opts.has_seed = seed_set ? 1 : 0;
    opts.seed = seed;
    opts.has_samples = samples_set ? 1 : 0;
    opts.samples = samples;
    opts.has_threads = threads_set ? 1 : 0;
    opts.threads = threads;

    const std::string command = app.get_subcommands().front()->get_name();
    const gnlab_status status = gnlab_run(command.c_str(), out_dir.c_str(), &opts);
    if (status != GNLAB_OK) {
        std::fprintf(stderr, "gnlab %s failed: %s\n", command.c_str(),
                     gnlab_last_error());
    }
    return exit_code_for(status);
}
