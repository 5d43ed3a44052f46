#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "gnlab/dataset.hpp"
#include "gnlab/model.hpp"

namespace gnlab {

// Input-noise rule of thumb: sigma_sg = alpha * (max - min) of the signal.
double sigma_sg_rule(const Tensor& x_reference, double alpha_sg);
double sigma_sg_rule(const Dataset& data, double alpha_sg);

// Mean accuracy of `repeats` weight-perturbed models, optionally with input
// noise sigma_sg added per sample (the joint measurement used by the
// FusionGrad heuristic). Deterministic given seed.
double noisy_accuracy(const MlpModel& model, const Dataset& data, double sigma_sg,
                      double sigma_ng, size_t repeats, uint64_t seed);

// Relative accuracy drop AD(sigma) = 1 - (ACC(sigma) - ACC(inf)) /
// (ACC(0) - ACC(inf)), with the chance level ACC(inf) fixed analytically at
// 1/k. Clamped below at 0: tiny noise can measure above the clean accuracy.
double accuracy_drop(const MlpModel& model, const Dataset& data, double sigma_ng,
                     size_t repeats, uint64_t seed);

struct CalibrationResult {
    double sigma = 0.0;
    double achieved_drop = 0.0;
    double acc_at_sigma = 0.0;
    double acc_clean = 0.0;
    double chance_level = 0.0;
    std::vector<std::pair<double, double>> trace;  // (sigma, drop) per evaluation
    size_t evaluations = 0;
};

struct CalibrationParams {
    double target_drop = 0.05;
    double tolerance = 0.01;
    size_t max_evaluations = 25;
    double sigma_min = 1e-3;
    double sigma_max = 2.0;
    size_t grid_points = 8;
    size_t repeats = 10;
};

// Search core, injectable drop function: coarse log-spaced grid to bracket
// the target, then bisection treating the drop as noisy-monotone. Accepts
// the first evaluation within tolerance.
CalibrationResult calibrate_drop_function(
    const std::function<double(double)>& drop_fn, const CalibrationParams& params);

// Noise level for the weight-noise ensemble: sigma_ng with AD(sigma_ng)
// within tolerance of the target drop.
CalibrationResult calibrate_ng(const MlpModel& model, const Dataset& data,
                               double target_drop, double tolerance, uint64_t seed);

enum class FgCalibrationMode {
    joint_drop,  // fix sigma_sg at alpha 0.1, tune sigma_ng on the joint drop
    halve_solo,  // halve each method's solo heuristic value
};

struct FgCalibration {
    double sigma_sg = 0.0;
    double sigma_ng = 0.0;
    CalibrationResult search;  // the sigma_ng search trace (joint or solo)
};

// Halving arithmetic of the solo heuristics, exposed for the halve_solo mode.
std::pair<double, double> fg_halve(double solo_sigma_sg, double solo_sigma_ng);

FgCalibration calibrate_fg(const MlpModel& model, const Dataset& data,
                           FgCalibrationMode mode, double target_drop,
                           double tolerance, uint64_t seed,
                           double force_sigma_sg = -1.0);

}  // namespace gnlab
