#include "gnlab/enhancers.hpp"

#include <cmath>

#include "gnlab/errors.hpp"
#include "gnlab/rng.hpp"

namespace gnlab {

namespace {

void check_config(const EnhancerConfig& cfg) {
    require(cfg.sigma_sg >= 0.0 && cfg.sigma_ng >= 0.0, ErrorKind::invalid_argument,
            "enhancer: sigmas must be non-negative");
    require(cfg.n_inputs >= 1 && cfg.m_models >= 1, ErrorKind::invalid_argument,
            "enhancer: ensemble counts must be >= 1");
}

Tensor noisy_input(const Tensor& x, double sigma, uint64_t base_seed, size_t index) {
    Tensor noisy = x;
    Rng rng = Rng::child(base_seed, stream::input_noise, index);
    for (double& v : noisy.data) {
        v += rng.normal(0.0, sigma);
    }
    return noisy;
}

Tensor member_values(const MlpModel& model, const Tensor& x, size_t class_index,
                     const ExplainerSpec& spec, const EnhancerConfig& cfg,
                     size_t member_index) {
    const uint64_t seed = enhancer_member_seed(cfg, member_index);
    Tensor values = explain_signed(model, x, class_index, spec, seed);
    if (!cfg.average_pre_abs) {
        for (double& v : values.data) {
            v = std::fabs(v);
        }
    }
    return values;
}

Attribution finalize(Tensor sum, size_t count, ExplainMethod method,
                     EnhancerKind kind, const EnhancerConfig& cfg) {
    for (double& v : sum.data) {
        v /= static_cast<double>(count);
        if (cfg.average_pre_abs) {
            v = std::fabs(v);
        }
    }
    Attribution attr;
    attr.values = std::move(sum);
    attr.method = method;
    attr.enhancer = kind;
    attr.config = cfg;
    attr.seed_used = cfg.base_seed;
    require(attr.values.all_finite(), ErrorKind::numeric,
            "enhancer: non-finite attribution values");
    return attr;
}

Attribution base_reduction(const MlpModel& model, const Tensor& x, size_t class_index,
                           const ExplainerSpec& spec, EnhancerKind kind,
                           const EnhancerConfig& cfg) {
    Attribution attr = explain(model, x, class_index, spec,
                               enhancer_member_seed(cfg, 0));
    attr.enhancer = kind;
    attr.config = cfg;
    attr.seed_used = cfg.base_seed;
    return attr;
}

}  // namespace

uint64_t enhancer_member_seed(const EnhancerConfig& cfg, size_t index) {
    return derive_seed(cfg.base_seed, stream::explainer, index);
}

EnsembleStream::EnsembleStream(const MlpModel& base, const EnhancerConfig& cfg)
    : base_(base),
      sigma_(cfg.sigma_ng),
      count_(cfg.m_models),
      base_seed_(cfg.base_seed),
      perturb_bias_(cfg.perturb_bias) {
    check_config(cfg);
}

MlpModel EnsembleStream::at(size_t i) const {
    require(i < count_, ErrorKind::invalid_argument, "EnsembleStream: index out of range");
    return perturb_weights(base_, sigma_,
                           derive_seed(base_seed_, stream::weight_noise, i),
                           perturb_bias_);
}

std::vector<MlpModel> EnsembleStream::materialize() const {
    std::vector<MlpModel> models;
    models.reserve(count_);
    for (size_t i = 0; i < count_; ++i) {
        models.push_back(at(i));
    }
    return models;
}

Attribution smoothgrad(const MlpModel& model, const Tensor& x, size_t class_index,
                       const ExplainerSpec& spec, const EnhancerConfig& cfg) {
    check_config(cfg);
    if (cfg.sigma_sg == 0.0) {
        return base_reduction(model, x, class_index, spec, EnhancerKind::sg, cfg);
    }
    Tensor sum = Tensor::zeros(x.shape);
    for (size_t i = 0; i < cfg.n_inputs; ++i) {
        const Tensor noisy = noisy_input(x, cfg.sigma_sg, cfg.base_seed, i);
        const Tensor values = member_values(model, noisy, class_index, spec, cfg, i);
        for (size_t j = 0; j < sum.size(); ++j) {
            sum[j] += values[j];
        }
    }
    return finalize(std::move(sum), cfg.n_inputs, spec.method, EnhancerKind::sg, cfg);
}

Attribution noisegrad(const MlpModel& model, const Tensor& x, size_t class_index,
                      const ExplainerSpec& spec, const EnhancerConfig& cfg) {
    check_config(cfg);
    if (cfg.sigma_ng == 0.0) {
        return base_reduction(model, x, class_index, spec, EnhancerKind::ng, cfg);
    }
    EnsembleStream ensemble(model, cfg);
    Tensor sum = Tensor::zeros(x.shape);
    for (size_t i = 0; i < cfg.m_models; ++i) {
        const MlpModel perturbed = ensemble.at(i);
        const Tensor values = member_values(perturbed, x, class_index, spec, cfg, i);
        for (size_t j = 0; j < sum.size(); ++j) {
            sum[j] += values[j];
        }
    }
    return finalize(std::move(sum), cfg.m_models, spec.method, EnhancerKind::ng, cfg);
}

Attribution fusiongrad(const MlpModel& model, const Tensor& x, size_t class_index,
                       const ExplainerSpec& spec, const EnhancerConfig& cfg) {
    check_config(cfg);
    if (cfg.sigma_ng == 0.0 && cfg.sigma_sg == 0.0) {
        return base_reduction(model, x, class_index, spec, EnhancerKind::fg, cfg);
    }
    if (cfg.sigma_ng == 0.0) {
        Attribution attr = smoothgrad(model, x, class_index, spec, cfg);
        attr.enhancer = EnhancerKind::fg;
        return attr;
    }
    if (cfg.sigma_sg == 0.0) {
        Attribution attr = noisegrad(model, x, class_index, spec, cfg);
        attr.enhancer = EnhancerKind::fg;
        return attr;
    }

    // Models in the outer loop, inputs in the inner loop. With share_xi the
    // same N input draws are reused for every model; otherwise each (i, j)
    // member gets its own draw, indexed by the member's linear index.
    std::vector<Tensor> shared_inputs;
    if (cfg.share_xi) {
        shared_inputs.reserve(cfg.n_inputs);
        for (size_t j = 0; j < cfg.n_inputs; ++j) {
            shared_inputs.push_back(noisy_input(x, cfg.sigma_sg, cfg.base_seed, j));
        }
    }
    EnsembleStream ensemble(model, cfg);
    Tensor sum = Tensor::zeros(x.shape);
    for (size_t i = 0; i < cfg.m_models; ++i) {
        const MlpModel perturbed = ensemble.at(i);
        for (size_t j = 0; j < cfg.n_inputs; ++j) {
            const size_t member = i * cfg.n_inputs + j;
            const Tensor noisy =
                cfg.share_xi ? shared_inputs[j]
                             : noisy_input(x, cfg.sigma_sg, cfg.base_seed, member);
            const Tensor values =
                member_values(perturbed, noisy, class_index, spec, cfg, member);
            for (size_t k = 0; k < sum.size(); ++k) {
                sum[k] += values[k];
            }
        }
    }
    return finalize(std::move(sum), cfg.m_models * cfg.n_inputs, spec.method,
                    EnhancerKind::fg, cfg);
}

Attribution enhance(const MlpModel& model, const Tensor& x, size_t class_index,
                    const ExplainerSpec& spec, EnhancerKind kind,
                    const EnhancerConfig& cfg) {
    switch (kind) {
        case EnhancerKind::none: {
            Attribution attr = explain(model, x, class_index, spec,
                                       enhancer_member_seed(cfg, 0));
            attr.config = cfg;
            attr.seed_used = cfg.base_seed;
            return attr;
        }
        case EnhancerKind::sg:
            return smoothgrad(model, x, class_index, spec, cfg);
        case EnhancerKind::ng:
            return noisegrad(model, x, class_index, spec, cfg);
        case EnhancerKind::fg:
            return fusiongrad(model, x, class_index, spec, cfg);
    }
    raise(ErrorKind::invalid_argument, "enhance: unknown enhancer kind");
}

}  // namespace gnlab
