#pragma once

#include <string>
#include <vector>

#include "gnlab/calibration.hpp"
#include "gnlab/config.hpp"
#include "gnlab/dataset.hpp"
#include "gnlab/enhancers.hpp"
#include "gnlab/model.hpp"

namespace gnlab::harness {

struct RunContext {
    ConfigFile config;
    std::string out_dir;
    uint64_t seed = 0;
    std::vector<std::string> files;  // manifest entries, relative names

    std::string path(const std::string& name);  // registers the file
    void finish();                               // snapshot + manifest
};

struct DataBundle {
    Dataset train;
    Dataset test;
};

DataBundle build_dataset(const RunContext& ctx);

// Loads the configured checkpoint or trains a model from the config;
// freshly trained models are saved as model.mlp.
MlpModel resolve_model(RunContext& ctx, const DataBundle& data,
                       TrainReport* report_out = nullptr);

struct NoiseLevels {
    double sigma_sg = 0.0;
    double sigma_ng = 0.0;
    double fg_sigma_sg = 0.0;
    double fg_sigma_ng = 0.0;
};

// Heuristic noise: sigma_sg from the value-range rule, sigma_ng from the
// target accuracy drop, FusionGrad per the configured mode. Explicit config
// values short-circuit the calibration.
NoiseLevels resolve_noise(const RunContext& ctx, const MlpModel& model,
                          const Dataset& calib_data);

ExplainerSpec explainer_from_config(const ConfigFile& config, const DataBundle& data);

EnhancerConfig enhancer_base_config(const ConfigFile& config);

// Commands.
void cmd_train(RunContext& ctx);
void cmd_explain(RunContext& ctx);
void cmd_calibrate(RunContext& ctx);
void cmd_compare(RunContext& ctx);
void cmd_sweep(RunContext& ctx);
void cmd_toy(RunContext& ctx);
void cmd_heuristic_curve(RunContext& ctx);
void cmd_sanity(RunContext& ctx);
void cmd_am(RunContext& ctx);

}  // namespace gnlab::harness
