#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gnlab/model.hpp"
#include "gnlab/tensor.hpp"

namespace gnlab {

// Target unit for activation maximization: the post-activation of `unit` in
// `layer`. A class logit is the unit in the final (identity) layer.
struct AmTarget {
    size_t layer = 0;
    size_t unit = 0;
};

struct AmConfig {
    AmTarget target;
    size_t steps = 512;
    double step_size = 0.05;
    double box_lo = 0.0;
    double box_hi = 1.0;
    double l2_penalty = 1e-3;
    double jitter_std = 0.01;
    size_t m_models = 1;
    double sigma_ng = 0.0;
    uint64_t seed = 0;
    bool resample_models_each_step = false;  // experimentation only
    Tensor x0;                               // empty -> box midpoint
};

struct AmResult {
    Tensor x_star;
    std::vector<double> objective_trace;  // J(x) after each step
};

// Projected gradient ascent on J(x) = mean_i g(x, W_i) - l2_penalty*|x|^2
// over the box, with the W_i drawn once by weight-noise perturbation and
// frozen (unless resampling is requested). Optional Gaussian jitter is added
// to the iterate after each gradient step, before clamping.
AmResult activation_maximize(const MlpModel& model, const AmConfig& cfg);

// Mean target activation over the ensemble at a fixed input, minus the L2
// penalty: the objective the ascent climbs.
double am_objective(const std::vector<MlpModel>& models, const AmTarget& target,
                    const Tensor& x, double l2_penalty);

// Grayscale render of an optimized input: min/max normalized to [0,1],
// written as an ASCII portable graymap plus an SVG wrapper.
void am_render(const Tensor& x_star, const std::vector<size_t>& shape,
               const std::string& pgm_path, const std::string& svg_path);

// Reads back a P2 graymap as values in [0,1] (quantized to 1/255).
Tensor read_pgm(const std::string& path, std::vector<size_t>* shape_out = nullptr);

}  // namespace gnlab
