#include "gnlab/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gnlab/errors.hpp"
#include "gnlab/rng.hpp"

namespace gnlab {

double sigma_sg_rule(const Tensor& x_reference, double alpha_sg) {
    require(alpha_sg >= 0.0, ErrorKind::invalid_argument,
            "sigma_sg_rule: alpha must be non-negative");
    require(!x_reference.empty(), ErrorKind::invalid_argument,
            "sigma_sg_rule: empty input");
    return alpha_sg * (x_reference.max_value() - x_reference.min_value());
}

double sigma_sg_rule(const Dataset& data, double alpha_sg) {
    require(alpha_sg >= 0.0, ErrorKind::invalid_argument,
            "sigma_sg_rule: alpha must be non-negative");
    require(data.size() > 0, ErrorKind::invalid_argument, "sigma_sg_rule: empty dataset");
    // Range over the whole dataset.
    double lo = data.inputs.front().min_value();
    double hi = data.inputs.front().max_value();
    for (const Tensor& x : data.inputs) {
        lo = std::min(lo, x.min_value());
        hi = std::max(hi, x.max_value());
    }
    return alpha_sg * (hi - lo);
}

double noisy_accuracy(const MlpModel& model, const Dataset& data, double sigma_sg,
                      double sigma_ng, size_t repeats, uint64_t seed) {
    require(repeats >= 1, ErrorKind::invalid_argument,
            "noisy_accuracy: repeats must be >= 1");
    require(data.size() > 0, ErrorKind::invalid_argument, "noisy_accuracy: empty dataset");
    double acc_sum = 0.0;
    for (size_t r = 0; r < repeats; ++r) {
        const uint64_t repeat_seed = derive_seed(seed, stream::calibration, r);
        const MlpModel perturbed = perturb_weights(model, sigma_ng, repeat_seed);
        if (sigma_sg == 0.0) {
            acc_sum += accuracy(perturbed, data);
            continue;
        }
        size_t correct = 0;
        Tensor noisy;
        for (size_t i = 0; i < data.size(); ++i) {
            Rng rng = Rng::child(repeat_seed, stream::input_noise, i);
            noisy = data.inputs[i];
            for (double& v : noisy.data) {
                v += rng.normal(0.0, sigma_sg);
            }
            if (predict_class(perturbed, noisy) ==
                static_cast<size_t>(data.labels[i])) {
                ++correct;
            }
        }
        acc_sum += static_cast<double>(correct) / static_cast<double>(data.size());
    }
    return acc_sum / static_cast<double>(repeats);
}

namespace {

double drop_from_accuracy(double acc_sigma, double acc_clean, double chance) {
    require(acc_clean > chance, ErrorKind::degenerate,
            "accuracy_drop: clean accuracy equals the chance level");
    const double drop = 1.0 - (acc_sigma - chance) / (acc_clean - chance);
    return std::max(0.0, drop);
}

}  // namespace

double accuracy_drop(const MlpModel& model, const Dataset& data, double sigma_ng,
                     size_t repeats, uint64_t seed) {
    const double chance = 1.0 / static_cast<double>(model.output_dim());
    const double acc_clean = accuracy(model, data);
    const double acc_sigma = noisy_accuracy(model, data, 0.0, sigma_ng, repeats, seed);
    return drop_from_accuracy(acc_sigma, acc_clean, chance);
}

CalibrationResult calibrate_drop_function(
    const std::function<double(double)>& drop_fn, const CalibrationParams& params) {
    require(params.target_drop >= 0.0 && params.target_drop < 1.0,
            ErrorKind::invalid_argument, "calibrate: target drop must be in [0, 1)");
    require(params.tolerance > 0.0, ErrorKind::invalid_argument,
            "calibrate: tolerance must be positive");
    require(params.grid_points >= 2, ErrorKind::invalid_argument,
            "calibrate: need at least two grid points");

    CalibrationResult result;
    double best_sigma = 0.0;
    double best_gap = 1e300;
    auto evaluate = [&](double sigma) {
        const double drop = drop_fn(sigma);
        result.trace.emplace_back(sigma, drop);
        result.evaluations += 1;
        const double gap = std::fabs(drop - params.target_drop);
        if (gap < best_gap) {
            best_gap = gap;
            best_sigma = sigma;
            result.sigma = sigma;
            result.achieved_drop = drop;
        }
        return drop;
    };
    auto within_tol = [&] { return best_gap <= params.tolerance; };
    auto budget_left = [&] { return result.evaluations < params.max_evaluations; };

    // Coarse log-spaced grid, ascending, until the target is bracketed.
    const double log_lo = std::log(params.sigma_min);
    const double log_hi = std::log(params.sigma_max);
    double bracket_lo = 0.0;   // AD(0) = 0 by definition
    double bracket_hi = -1.0;  // unset
    for (size_t g = 0; g < params.grid_points && budget_left(); ++g) {
        const double t = static_cast<double>(g) / static_cast<double>(params.grid_points - 1);
        const double sigma = std::exp(log_lo + t * (log_hi - log_lo));
        const double drop = evaluate(sigma);
        if (within_tol()) {
            return result;
        }
        if (drop >= params.target_drop) {
            bracket_hi = sigma;
            break;
        }
        bracket_lo = sigma;
    }
    if (bracket_hi < 0.0) {
        std::ostringstream message;
        message << "calibrate: target drop " << params.target_drop
                << " not reached on the sigma grid; trace:";
        for (const auto& [sigma, drop] : result.trace) {
            message << " (" << sigma << ", " << drop << ")";
        }
        raise(ErrorKind::calibration, message.str());
    }

    // Bisection on the bracket, treating the drop as noisy-monotone.
    while (budget_left() && !within_tol()) {
        const double mid = 0.5 * (bracket_lo + bracket_hi);
        const double drop = evaluate(mid);
        if (drop < params.target_drop) {
            bracket_lo = mid;
        } else {
            bracket_hi = mid;
        }
    }
    result.sigma = best_sigma;
    return result;
}

CalibrationResult calibrate_ng(const MlpModel& model, const Dataset& data,
                               double target_drop, double tolerance, uint64_t seed) {
    CalibrationParams params;
    params.target_drop = target_drop;
    params.tolerance = tolerance;
    CalibrationResult result = calibrate_drop_function(
        [&](double sigma) {
            return accuracy_drop(model, data, sigma, params.repeats, seed);
        },
        params);
    result.acc_clean = accuracy(model, data);
    result.chance_level = 1.0 / static_cast<double>(model.output_dim());
    result.acc_at_sigma =
        noisy_accuracy(model, data, 0.0, result.sigma, params.repeats, seed);
    return result;
}

std::pair<double, double> fg_halve(double solo_sigma_sg, double solo_sigma_ng) {
    return {solo_sigma_sg / 2.0, solo_sigma_ng / 2.0};
}

FgCalibration calibrate_fg(const MlpModel& model, const Dataset& data,
                           FgCalibrationMode mode, double target_drop,
                           double tolerance, uint64_t seed, double force_sigma_sg) {
    FgCalibration fg;
    if (mode == FgCalibrationMode::halve_solo) {
        // Solo heuristics: alpha 0.2 for the input noise, target drop for
        // the weight noise; both halved.
        const double solo_sg = force_sigma_sg >= 0.0 ? force_sigma_sg
                                                     : sigma_sg_rule(data, 0.2);
        fg.search = calibrate_ng(model, data, target_drop, tolerance, seed);
        std::tie(fg.sigma_sg, fg.sigma_ng) = fg_halve(solo_sg, fg.search.sigma);
        return fg;
    }
    // joint_drop: fix the input noise at the low end of the recommended
    // interval and tune the weight noise on the joint accuracy drop.
    fg.sigma_sg = force_sigma_sg >= 0.0 ? force_sigma_sg : sigma_sg_rule(data, 0.1);
    const double chance = 1.0 / static_cast<double>(model.output_dim());
    const double acc_clean =
        fg.sigma_sg == 0.0 ? accuracy(model, data)
                           : noisy_accuracy(model, data, fg.sigma_sg, 0.0,
                                            /*repeats=*/10, seed);
    CalibrationParams params;
    params.target_drop = target_drop;
    params.tolerance = tolerance;
    fg.search = calibrate_drop_function(
        [&](double sigma_ng) {
            const double acc = noisy_accuracy(model, data, fg.sigma_sg, sigma_ng,
                                              params.repeats, seed);
            require(acc_clean > chance, ErrorKind::degenerate,
                    "calibrate_fg: joint clean accuracy equals the chance level");
            return std::max(0.0, 1.0 - (acc - chance) / (acc_clean - chance));
        },
        params);
    fg.sigma_ng = fg.search.sigma;
    fg.search.acc_clean = acc_clean;
    fg.search.chance_level = chance;
    fg.search.acc_at_sigma =
        noisy_accuracy(model, data, fg.sigma_sg, fg.sigma_ng, params.repeats, seed);
    return fg;
}

}  // namespace gnlab
