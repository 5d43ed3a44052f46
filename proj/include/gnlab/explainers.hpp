#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gnlab/model.hpp"
#include "gnlab/tensor.hpp"

namespace gnlab {

enum class ExplainMethod {
    saliency,
    intgrad,
    gradshap,
    occlusion,
    lrp_gamma,
};

enum class EnhancerKind {
    none,
    sg,
    ng,
    fg,
};

std::string method_name(ExplainMethod method);
std::string enhancer_name(EnhancerKind kind);
ExplainMethod method_from_name(const std::string& name);
EnhancerKind enhancer_from_name(const std::string& name);

// All stochasticity knobs of the input-noise / weight-noise ensembles.
// Defaults: 10 samples on each axis, which is enough for both ensembles.
struct EnhancerConfig {
    double sigma_sg = 0.0;   // input-noise std, absolute units
    double sigma_ng = 0.0;   // multiplicative weight-noise std
    size_t n_inputs = 10;    // N
    size_t m_models = 10;    // M
    uint64_t base_seed = 0;
    bool share_xi = true;          // reuse the N input draws across all M models
    bool average_pre_abs = false;  // ablation: average signed maps, abs at the end
    bool perturb_bias = true;

    // Larger weight-noise ensemble (M in the 25..50 band) for standalone
    // noise-ensemble runs where quality matters more than speed.
    static EnhancerConfig ng_quality_preset() {
        EnhancerConfig cfg;
        cfg.m_models = 32;
        return cfg;
    }
};

struct ExplainerSpec {
    ExplainMethod method = ExplainMethod::saliency;

    // intgrad
    size_t ig_steps = 128;
    Tensor ig_baseline;  // empty -> zeros

    // gradshap
    size_t shap_samples = 8;
    std::vector<Tensor> shap_baseline_pool;
    double shap_sigma = -1.0;  // negative -> 0.1 * (max(x) - min(x))

    // occlusion
    size_t occlusion_patch = 1;
    double occlusion_fill = 0.0;

    // lrp
    double gamma = 0.25;
};

struct Attribution {
    Tensor values;  // input shape, non-negative after the final abs
    ExplainMethod method = ExplainMethod::saliency;
    EnhancerKind enhancer = EnhancerKind::none;
    std::optional<EnhancerConfig> config;
    uint64_t seed_used = 0;
};

// Signed (pre-abs) attribution values; the public explainers below take the
// elementwise absolute value of this as the last step.
Tensor explain_signed(const MlpModel& model, const Tensor& x, size_t class_index,
                      const ExplainerSpec& spec, uint64_t seed);

Attribution explain(const MlpModel& model, const Tensor& x, size_t class_index,
                    const ExplainerSpec& spec, uint64_t seed);

Attribution saliency(const MlpModel& model, const Tensor& x, size_t class_index);

Attribution intgrad(const MlpModel& model, const Tensor& x, size_t class_index,
                    const ExplainerSpec& spec);

Attribution gradshap(const MlpModel& model, const Tensor& x, size_t class_index,
                     const ExplainerSpec& spec, uint64_t seed);

Attribution occlusion(const MlpModel& model, const Tensor& x, size_t class_index,
                      const ExplainerSpec& spec);

Attribution lrp_gamma(const MlpModel& model, const Tensor& x, size_t class_index,
                      double gamma);

// Relevance at every layer of the gamma-rule backward pass (index 0 = input
// features), pre-abs. Layer sums stay equal to the seeded logit on bias-free
// nets.
std::vector<Tensor> lrp_gamma_layers(const MlpModel& model, const Tensor& x,
                                     size_t class_index, double gamma);

}  // namespace gnlab
