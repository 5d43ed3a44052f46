#include "gnlab/global_am.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gnlab/errors.hpp"
#include "gnlab/rng.hpp"

namespace gnlab {

namespace {

void check_config(const MlpModel& model, const AmConfig& cfg) {
    require(cfg.steps >= 1, ErrorKind::invalid_argument, "am: steps must be >= 1");
    require(cfg.box_lo < cfg.box_hi, ErrorKind::invalid_argument,
            "am: box_lo must be below box_hi");
    require(cfg.m_models >= 1, ErrorKind::invalid_argument, "am: m_models must be >= 1");
    require(cfg.sigma_ng >= 0.0, ErrorKind::invalid_argument,
            "am: sigma_ng must be non-negative");
    require(cfg.l2_penalty >= 0.0, ErrorKind::invalid_argument,
            "am: l2_penalty must be non-negative");
    require(cfg.target.layer < model.num_layers(), ErrorKind::invalid_argument,
            "am: target layer out of range");
    require(cfg.target.unit < model.layers()[cfg.target.layer].out_dim(),
            ErrorKind::invalid_argument, "am: target unit out of range");
}

std::vector<MlpModel> draw_ensemble(const MlpModel& model, const AmConfig& cfg,
                                    uint64_t round) {
    std::vector<MlpModel> models;
    models.reserve(cfg.m_models);
    for (size_t i = 0; i < cfg.m_models; ++i) {
        models.push_back(perturb_weights(
            model, cfg.sigma_ng,
            derive_seed(cfg.seed, stream::weight_noise, round * cfg.m_models + i)));
    }
    return models;
}

double target_activation(const MlpModel& model, const AmTarget& target, const Tensor& x) {
    const GradTape tape = forward_tape(model, x);
    return tape.activations[target.layer + 1][target.unit];
}

}  // namespace

double am_objective(const std::vector<MlpModel>& models, const AmTarget& target,
                    const Tensor& x, double l2_penalty) {
    double sum = 0.0;
    for (const MlpModel& m : models) {
        sum += target_activation(m, target, x);
    }
    double sq = 0.0;
    for (double v : x.data) {
        sq += v * v;
    }
    return sum / static_cast<double>(models.size()) - l2_penalty * sq;
}

AmResult activation_maximize(const MlpModel& model, const AmConfig& cfg) {
    check_config(model, cfg);
    Tensor x = cfg.x0;
    if (x.empty()) {
        x = Tensor::full({model.input_dim()}, 0.5 * (cfg.box_lo + cfg.box_hi));
    }
    require(x.size() == model.input_dim(), ErrorKind::invalid_argument,
            "am: x0 dim mismatch");
    for (double& v : x.data) {
        v = std::clamp(v, cfg.box_lo, cfg.box_hi);
    }

    std::vector<MlpModel> models = draw_ensemble(model, cfg, 0);
    Rng jitter_rng = Rng::child(cfg.seed, stream::am, 0);

    AmResult result;
    Tensor grad_sum = Tensor::zeros(x.shape);
    for (size_t step = 0; step < cfg.steps; ++step) {
        if (cfg.resample_models_each_step && step > 0) {
            models = draw_ensemble(model, cfg, step);
        }
        std::fill(grad_sum.data.begin(), grad_sum.data.end(), 0.0);
        for (const MlpModel& m : models) {
            const Tensor g = grad_unit(m, x, cfg.target.layer, cfg.target.unit);
            for (size_t i = 0; i < grad_sum.size(); ++i) {
                grad_sum[i] += g[i];
            }
        }
        for (size_t i = 0; i < x.size(); ++i) {
            double ascent = grad_sum[i] / static_cast<double>(models.size()) -
                            2.0 * cfg.l2_penalty * x[i];
            double v = x[i] + cfg.step_size * ascent;
            if (cfg.jitter_std > 0.0) {
                v += jitter_rng.normal(0.0, cfg.jitter_std);
            }
            x[i] = std::clamp(v, cfg.box_lo, cfg.box_hi);
        }
        const double objective = am_objective(models, cfg.target, x, cfg.l2_penalty);
        if (!std::isfinite(objective)) {
            raise(ErrorKind::numeric,
                  "am: non-finite objective at step " + std::to_string(step));
        }
        result.objective_trace.push_back(objective);
    }
    result.x_star = std::move(x);
    return result;
}

void am_render(const Tensor& x_star, const std::vector<size_t>& shape,
               const std::string& pgm_path, const std::string& svg_path) {
    require(shape.size() == 2, ErrorKind::invalid_argument,
            "am_render: need a 2d shape");
    require(shape_product(shape) == x_star.size(), ErrorKind::invalid_argument,
            "am_render: shape does not match the input length");
    const size_t rows = shape[0];
    const size_t cols = shape[1];
    const double lo = x_star.min_value();
    const double hi = x_star.max_value();
    const double range = hi > lo ? hi - lo : 1.0;

    std::vector<int> gray(x_star.size());
    for (size_t i = 0; i < x_star.size(); ++i) {
        const double norm = (x_star[i] - lo) / range;
        gray[i] = static_cast<int>(std::lround(norm * 255.0));
    }

    {
        std::ofstream out(pgm_path);
        require(out.good(), ErrorKind::io, "am_render: cannot open " + pgm_path);
        out << "P2\n" << cols << " " << rows << "\n255\n";
        for (size_t r = 0; r < rows; ++r) {
            for (size_t c = 0; c < cols; ++c) {
                out << gray[r * cols + c] << (c + 1 == cols ? "\n" : " ");
            }
        }
        require(out.good(), ErrorKind::io, "am_render: write failed for " + pgm_path);
    }
    {
        const int cell = 16;
        std::ofstream out(svg_path);
        require(out.good(), ErrorKind::io, "am_render: cannot open " + svg_path);
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * cell
            << "\" height=\"" << rows * cell << "\">\n";
        for (size_t r = 0; r < rows; ++r) {
            for (size_t c = 0; c < cols; ++c) {
                const int g = gray[r * cols + c];
                out << "<rect x=\"" << c * cell << "\" y=\"" << r * cell
                    << "\" width=\"" << cell << "\" height=\"" << cell
                    << "\" fill=\"rgb(" << g << "," << g << "," << g << ")\"/>\n";
            }
        }
        out << "</svg>\n";
        require(out.good(), ErrorKind::io, "am_render: write failed for " + svg_path);
    }
}

Tensor read_pgm(const std::string& path, std::vector<size_t>* shape_out) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "read_pgm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P2") {
        raise(ErrorKind::format, path + ": expected a P2 graymap");
    }
    size_t cols = 0, rows = 0;
    int maxval = 0;
    in >> cols >> rows >> maxval;
    if (!in.good() || cols == 0 || rows == 0 || maxval <= 0) {
        raise(ErrorKind::format, path + ": bad graymap header");
    }
    Tensor values = Tensor::zeros({rows, cols});
    for (size_t i = 0; i < values.size(); ++i) {
        int g = 0;
        if (!(in >> g)) {
            raise(ErrorKind::format, path + ": truncated graymap payload");
        }
        values[i] = static_cast<double>(g) / static_cast<double>(maxval);
    }
    if (shape_out != nullptr) {
        *shape_out = {rows, cols};
    }
    return values;
}

}  // namespace gnlab
