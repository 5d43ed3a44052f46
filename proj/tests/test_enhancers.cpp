#include <doctest.h>

#include <cmath>
#include <vector>

#include "gnlab/enhancers.hpp"
#include "gnlab/errors.hpp"
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

Tensor random_input(size_t dim, uint64_t seed) {
    Rng rng(seed);
    Tensor x = Tensor::zeros({dim});
    for (double& v : x.data) {
        v = rng.normal(0.0, 1.0);
    }
    return x;
}

// Least-squares slope of log(var) against log(count).
double loglog_slope(const std::vector<double>& counts, const std::vector<double>& vars) {
    const size_t n = counts.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double lx = std::log(counts[i]);
        const double ly = std::log(vars[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("smoothgrad: sigma 0 equals the base explainer bitwise") {
    MlpModel model = MlpModel::random({5, 10, 3}, 70);
    const Tensor x = random_input(5, 71);
    ExplainerSpec spec;
    EnhancerConfig cfg;
    cfg.sigma_sg = 0.0;
    cfg.n_inputs = 16;
    cfg.base_seed = 404;
    const Attribution sg = smoothgrad(model, x, 1, spec, cfg);
    const Attribution base = explain(model, x, 1, spec, enhancer_member_seed(cfg, 0));
    CHECK(bitwise_equal(sg.values, base.values));
    CHECK(sg.enhancer == EnhancerKind::sg);
}

TEST_CASE("smoothgrad: linear saliency is noise-invariant") {
    MlpModel model = linear_model(Tensor({2, 3}, {1, -2, 3, 4, 5, -6}));
    const Tensor x = Tensor::vector({0.3, -0.7, 1.1});
    ExplainerSpec spec;
    EnhancerConfig cfg;
    cfg.sigma_sg = 0.5;
    cfg.n_inputs = 32;
    cfg.base_seed = 8;
    const Attribution sg = smoothgrad(model, x, 0, spec, cfg);
    CHECK(sg.values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sg.values[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sg.values[2] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("smoothgrad: output variance scales as 1/N") {
    MlpModel model = MlpModel::random({6, 12, 3}, 80);
    const Tensor x = random_input(6, 81);
    ExplainerSpec spec;
    const std::vector<size_t> ns{4, 16, 64};
    const size_t runs = 50;
    std::vector<double> counts, vars;
    for (size_t n : ns) {
        std::vector<std::vector<double>> outputs;
        for (size_t r = 0; r < runs; ++r) {
            EnhancerConfig cfg;
            cfg.sigma_sg = 0.3;
            cfg.n_inputs = n;
            cfg.base_seed = 9000 + r;
            outputs.push_back(smoothgrad(model, x, 0, spec, cfg).values.data);
        }
        double var_sum = 0.0;
        for (size_t i = 0; i < outputs[0].size(); ++i) {
            double mean = 0.0;
            for (const auto& o : outputs) mean += o[i];
            mean /= runs;
            double var = 0.0;
            for (const auto& o : outputs) var += (o[i] - mean) * (o[i] - mean);
            var_sum += var / (runs - 1);
        }
        counts.push_back(static_cast<double>(n));
        vars.push_back(var_sum / outputs[0].size());
    }
    const double slope = loglog_slope(counts, vars);
    CHECK(slope > -1.25);
    CHECK(slope < -0.75);
}

TEST_CASE("noisegrad: sigma 0 equals the base explainer bitwise") {
    MlpModel model = MlpModel::random({5, 10, 3}, 90);
    const Tensor x = random_input(5, 91);
    ExplainerSpec spec;
    EnhancerConfig cfg;
    cfg.sigma_ng = 0.0;
    cfg.m_models = 8;
    cfg.base_seed = 505;
    const Attribution ng = noisegrad(model, x, 2, spec, cfg);
    const Attribution base = explain(model, x, 2, spec, enhancer_member_seed(cfg, 0));
    CHECK(bitwise_equal(ng.values, base.values));
}

TEST_CASE("noisegrad: M 1 equals the explainer on the child-0 perturbed model") {
    MlpModel model = MlpModel::random({5, 10, 3}, 92);
    const Tensor x = random_input(5, 93);
    ExplainerSpec spec;
    EnhancerConfig cfg;
    cfg.sigma_ng = 0.25;
    cfg.m_models = 1;
    cfg.base_seed = 606;
    const Attribution ng = noisegrad(model, x, 0, spec, cfg);
    const MlpModel perturbed = perturb_weights(
        model, 0.25, derive_seed(cfg.base_seed, stream::weight_noise, 0));
    const Attribution direct =
        explain(perturbed, x, 0, spec, enhancer_member_seed(cfg, 0));
    CHECK(bitwise_equal(ng.values, direct.values));
}

TEST_CASE("noisegrad: perturbed gradients average back to the clean weights") {
    // Pre-abs saliency of a one-logit linear model is w .* eta, so the
    // ensemble mean over M = 10^4 models approaches w coordinate-wise.
    MlpModel model = linear_model(Tensor({1, 3}, {0.8, 1.3, 2.0}));
    const Tensor x = Tensor::vector({1, 1, 1});
    ExplainerSpec spec;
    EnhancerConfig cfg;
    cfg.sigma_ng = 0.2;
    cfg.m_models = 10000;
    cfg.base_seed = 1234;
    cfg.average_pre_abs = true;
    const Attribution ng = noisegrad(model, x, 0, spec, cfg);
    const std::vector<double> w{0.8, 1.3, 2.0};
    for (size_t i = 0; i < 3; ++i) {
        const double se = 0.2 * w[i] / std::sqrt(10000.0);
        CHECK(std::fabs(ng.values[i] - w[i]) < 3.0 * se);
    }
}

TEST_CASE("noisegrad: output variance scales as 1/M") {
    MlpModel model = MlpModel::random({6, 12, 3}, 100);
    const Tensor x = random_input(6, 101);
    ExplainerSpec spec;
    const std::vector<size_t> ms{4, 16, 64, 256};
    const size_t runs = 50;
    std::vector<double> counts, vars;
    for (size_t m : ms) {
        std::vector<std::vector<double>> outputs;
        for (size_t r = 0; r < runs; ++r) {
            EnhancerConfig cfg;
            cfg.sigma_ng = 0.2;
            cfg.m_models = m;
            cfg.base_seed = 40000 + r;
            outputs.push_back(noisegrad(model, x, 0, spec, cfg).values.data);
        }
        double var_sum = 0.0;
        for (size_t i = 0; i < outputs[0].size(); ++i) {
            double mean = 0.0;
            for (const auto& o : outputs) mean += o[i];
            mean /= runs;
            double var = 0.0;
            for (const auto& o : outputs) var += (o[i] - mean) * (o[i] - mean);
            var_sum += var / (runs - 1);
        }
        counts.push_back(static_cast<double>(m));
        vars.push_back(var_sum / outputs[0].size());
    }
    const double slope = loglog_slope(counts, vars);
    CHECK(slope > -1.25);
    CHECK(slope < -0.75);
}

TEST_CASE("fusiongrad: reductions to smoothgrad and noisegrad are bitwise") {
    MlpModel model = MlpModel::random({5, 8, 3}, 110);
    const Tensor x = random_input(5, 111);
    ExplainerSpec spec;

    EnhancerConfig cfg;
    cfg.sigma_sg = 0.3;
    cfg.sigma_ng = 0.0;
    cfg.n_inputs = 6;
    cfg.m_models = 4;
    cfg.base_seed = 321;
    CHECK(bitwise_equal(fusiongrad(model, x, 0, spec, cfg).values,
                        smoothgrad(model, x, 0, spec, cfg).values));

    cfg.sigma_sg = 0.0;
    cfg.sigma_ng = 0.25;
    CHECK(bitwise_equal(fusiongrad(model, x, 0, spec, cfg).values,
                        noisegrad(model, x, 0, spec, cfg).values));

    cfg.sigma_ng = 0.0;
    const Attribution both_zero = fusiongrad(model, x, 0, spec, cfg);
    const Attribution base = explain(model, x, 0, spec, enhancer_member_seed(cfg, 0));
    CHECK(bitwise_equal(both_zero.values, base.values));
}

TEST_CASE("fusiongrad matches an independent double-loop oracle bitwise") {
    MlpModel model = MlpModel::random({4, 8, 3}, 120);
    const Tensor x = random_input(4, 121);
    ExplainerSpec spec;
    EnhancerConfig cfg;
    cfg.sigma_sg = 0.2;
    cfg.sigma_ng = 0.3;
    cfg.n_inputs = 3;
    cfg.m_models = 2;
    cfg.base_seed = 2718;

    // Shared input draws, models outer, inputs inner, member index i*N+j.
    std::vector<Tensor> noisy;
    for (size_t j = 0; j < cfg.n_inputs; ++j) {
        Tensor xi = x;
        Rng rng = Rng::child(cfg.base_seed, stream::input_noise, j);
        for (double& v : xi.data) {
            v += rng.normal(0.0, cfg.sigma_sg);
        }
        noisy.push_back(std::move(xi));
    }
    Tensor sum = Tensor::zeros(x.shape);
    for (size_t i = 0; i < cfg.m_models; ++i) {
        const MlpModel perturbed = perturb_weights(
            model, cfg.sigma_ng, derive_seed(cfg.base_seed, stream::weight_noise, i));
        for (size_t j = 0; j < cfg.n_inputs; ++j) {
            const size_t member = i * cfg.n_inputs + j;
            Tensor values = explain_signed(perturbed, noisy[j], 1, spec,
                                           derive_seed(cfg.base_seed,
                                                       stream::explainer, member));
            for (size_t k = 0; k < sum.size(); ++k) {
                sum[k] += std::fabs(values[k]);
            }
        }
    }
    for (double& v : sum.data) {
        v /= static_cast<double>(cfg.n_inputs * cfg.m_models);
    }

    const Attribution fg = fusiongrad(model, x, 1, spec, cfg);
    CHECK(bitwise_equal(fg.values, sum));
}

TEST_CASE("ensemble stream equals direct perturb calls") {
    MlpModel model = MlpModel::random({4, 6, 2}, 130);
    EnhancerConfig cfg;
    cfg.sigma_ng = 0.4;
    cfg.m_models = 3;
    cfg.base_seed = 55;
    EnsembleStream ensemble(model, cfg);
    REQUIRE(ensemble.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        const MlpModel direct = perturb_weights(
            model, 0.4, derive_seed(cfg.base_seed, stream::weight_noise, i));
        CHECK(bitwise_equal(ensemble.at(i), direct));
    }
    const auto materialized = ensemble.materialize();
    for (size_t i = 0; i < 3; ++i) {
        CHECK(bitwise_equal(materialized[i], ensemble.at(i)));
    }
}

TEST_CASE("ensemble stream with sigma 0 yields copies of the base model") {
    MlpModel model = MlpModel::random({4, 6, 2}, 131);
    EnhancerConfig cfg;
    cfg.sigma_ng = 0.0;
    cfg.m_models = 4;
    EnsembleStream ensemble(model, cfg);
    for (size_t i = 0; i < 4; ++i) {
        CHECK(bitwise_equal(ensemble.at(i), model));
    }
}

TEST_CASE("enhancer rejects invalid configs") {
    MlpModel model = MlpModel::random({3, 2}, 1);
    const Tensor x = random_input(3, 2);
    ExplainerSpec spec;
    EnhancerConfig cfg;
    cfg.n_inputs = 0;
    CHECK_THROWS_AS(smoothgrad(model, x, 0, spec, cfg), Error);
    cfg.n_inputs = 1;
    cfg.sigma_ng = -0.1;
    CHECK_THROWS_AS(noisegrad(model, x, 0, spec, cfg), Error);
}

TEST_CASE("enhancer defaults and the quality preset") {
    EnhancerConfig defaults;
    CHECK(defaults.n_inputs == 10);
    CHECK(defaults.m_models == 10);
    const EnhancerConfig quality = EnhancerConfig::ng_quality_preset();
    CHECK(quality.m_models >= 25);
    CHECK(quality.m_models <= 50);
}
