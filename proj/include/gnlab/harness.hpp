#pragma once

#include <optional>
#include <string>

#include "gnlab/config.hpp"

namespace gnlab {

struct RunOverrides {
    std::optional<uint64_t> seed;
    std::optional<size_t> samples;
    std::optional<size_t> threads;
};

// Executes one experiment command against a config, emitting every artifact
// (CSV tables, SVG figures, checkpoints, attribution archives, manifest)
// into out_dir. Commands: train, explain, calibrate, compare, sweep, toy,
// heuristic-curve, sanity, am. Identical config + seed produce byte-identical
// CSV output at any thread count.
void run_command(const std::string& command, const ConfigFile& config,
                 const std::string& out_dir, const RunOverrides& overrides = {});

}  // namespace gnlab
