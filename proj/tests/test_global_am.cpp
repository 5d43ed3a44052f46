#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "gnlab/errors.hpp"
#include "gnlab/global_am.hpp"
#include "gnlab/model.hpp"
#include "gnlab/rng.hpp"

using namespace gnlab;

namespace {

MlpModel linear_model(const Tensor& weight) {
    Layer layer;
    layer.weight = weight;
    layer.bias = Tensor::zeros({weight.rows()});
    layer.activation = Activation::identity;
    return MlpModel({layer});
}

}  // namespace

TEST_CASE("am: M=1 sigma=0 is bitwise identical to a plain ascent loop") {
    MlpModel model = MlpModel::random({6, 10, 3}, 140);
    AmConfig cfg;
    cfg.target = {model.num_layers() - 1, 1};
    cfg.steps = 50;
    cfg.step_size = 0.05;
    cfg.box_lo = -1.0;
    cfg.box_hi = 1.0;
    cfg.l2_penalty = 1e-3;
    cfg.jitter_std = 0.01;
    cfg.m_models = 1;
    cfg.sigma_ng = 0.0;
    cfg.seed = 99;

    const AmResult got = activation_maximize(model, cfg);

    // Plain AM oracle with the same seed and schedule.
    Tensor x = Tensor::full({6}, 0.0);
    Rng jitter = Rng::child(cfg.seed, stream::am, 0);
    std::vector<double> trace;
    for (size_t step = 0; step < cfg.steps; ++step) {
        const Tensor g = grad_unit(model, x, cfg.target.layer, cfg.target.unit);
        for (size_t i = 0; i < x.size(); ++i) {
            double v = x[i] + cfg.step_size * (g[i] - 2.0 * cfg.l2_penalty * x[i]);
            v += jitter.normal(0.0, cfg.jitter_std);
            x[i] = std::clamp(v, cfg.box_lo, cfg.box_hi);
        }
        double sq = 0.0;
        for (double v : x.data) {
            sq += v * v;
        }
        trace.push_back(forward(model, x)[1] - cfg.l2_penalty * sq);
    }
    CHECK(bitwise_equal(got.x_star, x));
    REQUIRE(got.objective_trace.size() == trace.size());
    for (size_t i = 0; i < trace.size(); ++i) {
        CHECK(got.objective_trace[i] == trace[i]);
    }
}

TEST_CASE("am: linear objective converges to the box corner sign(w)") {
    MlpModel model = linear_model(Tensor({2, 4}, {0.5, -1.0, 2.0, -0.25,
                                                  0, 0, 0, 0}));
    AmConfig cfg;
    cfg.target = {0, 0};
    cfg.steps = 300;
    cfg.step_size = 0.05;
    cfg.box_lo = -1.0;
    cfg.box_hi = 1.0;
    cfg.l2_penalty = 0.0;
    cfg.jitter_std = 0.0;
    cfg.seed = 3;
    const AmResult result = activation_maximize(model, cfg);
    CHECK(result.x_star[0] == 1.0);
    CHECK(result.x_star[1] == -1.0);
    CHECK(result.x_star[2] == 1.0);
    CHECK(result.x_star[3] == -1.0);
}

TEST_CASE("am: flat-top objective reaches an interior stationary point") {
    // logit(x) = -relu(x - 0.6) - relu(0.2 - x): flat maximum on [0.2, 0.6].
    Layer hidden{Tensor({2, 1}, {1.0, -1.0}), Tensor({2}, {-0.6, 0.2}),
                 Activation::relu};
    Layer out{Tensor({1, 2}, {-1.0, -1.0}), Tensor::zeros({1}), Activation::identity};
    MlpModel model({hidden, out});

    AmConfig cfg;
    cfg.target = {1, 0};
    cfg.steps = 100;
    cfg.step_size = 0.05;
    cfg.box_lo = -2.0;
    cfg.box_hi = 2.0;
    cfg.l2_penalty = 0.0;
    cfg.jitter_std = 0.0;
    cfg.x0 = Tensor::vector({1.7});
    const AmResult result = activation_maximize(model, cfg);
    CHECK(result.x_star[0] >= 0.2);
    CHECK(result.x_star[0] <= 0.6);
    const Tensor g = grad_unit(model, result.x_star, 1, 0);
    double norm = 0.0;
    for (double v : g.data) {
        norm += v * v;
    }
    CHECK(std::sqrt(norm) < cfg.step_size * 10.0);
    CHECK(result.objective_trace.back() == doctest::Approx(0.0));
}

TEST_CASE("am: ensemble objective equals the mean of per-model objectives") {
    MlpModel model = MlpModel::random({5, 8, 2}, 150);
    AmConfig cfg;
    cfg.m_models = 6;
    cfg.sigma_ng = 0.3;
    cfg.seed = 7;
    std::vector<MlpModel> models;
    for (size_t i = 0; i < cfg.m_models; ++i) {
        models.push_back(perturb_weights(model, cfg.sigma_ng,
                                         derive_seed(cfg.seed, stream::weight_noise, i)));
    }
    const Tensor x = Tensor::full({5}, 0.3);
    const AmTarget target{model.num_layers() - 1, 0};
    double mean = 0.0;
    for (const MlpModel& m : models) {
        mean += forward(m, x)[0];
    }
    mean /= static_cast<double>(models.size());
    double sq = 0.0;
    for (double v : x.data) {
        sq += v * v;
    }
    CHECK(am_objective(models, target, x, 1e-3) ==
          doctest::Approx(mean - 1e-3 * sq).epsilon(1e-12));
}

TEST_CASE("am: non-finite objective raises a numeric error naming the step") {
    const double huge = 1e308;
    Layer hidden{Tensor({1, 1}, {huge}), Tensor::zeros({1}), Activation::relu};
    Layer out{Tensor({1, 1}, {huge}), Tensor::zeros({1}), Activation::identity};
    MlpModel model({hidden, out});
    AmConfig cfg;
    cfg.target = {1, 0};
    cfg.steps = 5;
    cfg.step_size = 1.0;
    cfg.box_lo = 0.0;
    cfg.box_hi = 1.0;
    cfg.jitter_std = 0.0;
    cfg.l2_penalty = 0.0;
    cfg.x0 = Tensor::vector({1.0});
    try {
        activation_maximize(model, cfg);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::numeric);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("am_render: constant input renders a uniform image and round-trips") {
    const std::string pgm =
        (std::filesystem::temp_directory_path() / "gnlab_am.pgm").string();
    const std::string svg =
        (std::filesystem::temp_directory_path() / "gnlab_am.svg").string();

    am_render(Tensor::full({9}, 0.4), {3, 3}, pgm, svg);
    Tensor flat = read_pgm(pgm);
    for (double v : flat.data) {
        CHECK(v == flat[0]);
    }

    // Values already spanning [0,1]: normalization is idempotent and the
    // round-trip matches to quantization (1/255).
    Tensor ramp = Tensor::vector({0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0});
    am_render(ramp, {3, 3}, pgm, svg);
    std::vector<size_t> shape;
    Tensor back = read_pgm(pgm, &shape);
    CHECK(shape == std::vector<size_t>{3, 3});
    for (size_t i = 0; i < ramp.size(); ++i) {
        CHECK(std::fabs(back[i] - ramp[i]) <= 0.5 / 255.0 + 1e-12);
    }
    std::filesystem::remove(pgm);
    std::filesystem::remove(svg);
}
