#include "gnlab/explainers.hpp"

#include <algorithm>
#include <cmath>

#include "gnlab/errors.hpp"
#include "gnlab/rng.hpp"

namespace gnlab {

std::string method_name(ExplainMethod method) {
    switch (method) {
        case ExplainMethod::saliency: return "saliency";
        case ExplainMethod::intgrad: return "intgrad";
        case ExplainMethod::gradshap: return "gradshap";
        case ExplainMethod::occlusion: return "occlusion";
        case ExplainMethod::lrp_gamma: return "lrp_gamma";
    }
    return "saliency";
}

std::string enhancer_name(EnhancerKind kind) {
    switch (kind) {
        case EnhancerKind::none: return "baseline";
        case EnhancerKind::sg: return "sg";
        case EnhancerKind::ng: return "ng";
        case EnhancerKind::fg: return "fg";
    }
    return "baseline";
}

ExplainMethod method_from_name(const std::string& name) {
    if (name == "saliency") return ExplainMethod::saliency;
    if (name == "intgrad") return ExplainMethod::intgrad;
    if (name == "gradshap") return ExplainMethod::gradshap;
    if (name == "occlusion") return ExplainMethod::occlusion;
    if (name == "lrp_gamma") return ExplainMethod::lrp_gamma;
    raise(ErrorKind::config, "unknown explainer method '" + name + "'");
}

EnhancerKind enhancer_from_name(const std::string& name) {
    if (name == "baseline" || name == "none") return EnhancerKind::none;
    if (name == "sg") return EnhancerKind::sg;
    if (name == "ng") return EnhancerKind::ng;
    if (name == "fg") return EnhancerKind::fg;
    raise(ErrorKind::config, "unknown enhancer '" + name + "'");
}

namespace {

Tensor abs_values(Tensor values) {
    for (double& v : values.data) {
        v = std::fabs(v);
    }
    return values;
}

Tensor signed_saliency(const MlpModel& model, const Tensor& x, size_t class_index) {
    Tensor grad = grad_input(model, x, class_index);
    grad.shape = x.shape;  // attribution carries the input's shape
    return grad;
}

Tensor resolve_ig_baseline(const ExplainerSpec& spec, const Tensor& x) {
    if (spec.ig_baseline.empty()) {
        return Tensor::zeros(x.shape);
    }
    require(spec.ig_baseline.shape == x.shape, ErrorKind::invalid_argument,
            "intgrad: baseline shape mismatch");
    return spec.ig_baseline;
}

// Midpoint Riemann approximation of the path integral of gradients.
Tensor signed_intgrad(const MlpModel& model, const Tensor& x, size_t class_index,
                      const ExplainerSpec& spec) {
    require(spec.ig_steps >= 1, ErrorKind::invalid_argument,
            "intgrad: steps must be >= 1");
    const Tensor baseline = resolve_ig_baseline(spec, x);
    const size_t d = x.size();
    Tensor grad_sum = Tensor::zeros(x.shape);
    Tensor point = Tensor::zeros(x.shape);
    for (size_t t = 1; t <= spec.ig_steps; ++t) {
        const double alpha = (static_cast<double>(t) - 0.5) /
                             static_cast<double>(spec.ig_steps);
        for (size_t i = 0; i < d; ++i) {
            point[i] = baseline[i] + alpha * (x[i] - baseline[i]);
        }
        const Tensor grad = grad_input(model, point, class_index);
        for (size_t i = 0; i < d; ++i) {
            grad_sum[i] += grad[i];
        }
    }
    Tensor values = Tensor::zeros(x.shape);
    const double inv_steps = 1.0 / static_cast<double>(spec.ig_steps);
    for (size_t i = 0; i < d; ++i) {
        values[i] = (x[i] - baseline[i]) * grad_sum[i] * inv_steps;
    }
    return values;
}

// Expected (x - baseline) .* gradient at jittered points interpolated toward
// random pool baselines. Draw order per sample: pool index, u, then the
// noise vector.
Tensor signed_gradshap(const MlpModel& model, const Tensor& x, size_t class_index,
                       const ExplainerSpec& spec, uint64_t seed) {
    require(!spec.shap_baseline_pool.empty(), ErrorKind::invalid_argument,
            "gradshap: baseline pool is empty");
    require(spec.shap_samples >= 1, ErrorKind::invalid_argument,
            "gradshap: need at least one sample");
    for (const Tensor& baseline : spec.shap_baseline_pool) {
        require(baseline.shape == x.shape, ErrorKind::invalid_argument,
                "gradshap: baseline shape mismatch");
    }
    const double sigma = spec.shap_sigma >= 0.0
                             ? spec.shap_sigma
                             : 0.1 * (x.max_value() - x.min_value());
    const size_t d = x.size();
    Tensor sum = Tensor::zeros(x.shape);
    Tensor point = Tensor::zeros(x.shape);
    for (size_t s = 0; s < spec.shap_samples; ++s) {
        Rng rng = Rng::child(seed, stream::gradshap, s);
        const Tensor& baseline =
            spec.shap_baseline_pool[rng.uniform_index(spec.shap_baseline_pool.size())];
        const double u = rng.uniform01();
        for (size_t i = 0; i < d; ++i) {
            point[i] = baseline[i] + u * (x[i] - baseline[i]) + rng.normal(0.0, sigma);
        }
        const Tensor grad = grad_input(model, point, class_index);
        for (size_t i = 0; i < d; ++i) {
            sum[i] += (x[i] - baseline[i]) * grad[i];
        }
    }
    for (double& v : sum.data) {
        v /= static_cast<double>(spec.shap_samples);
    }
    return sum;
}

// Score drop per occluded patch; patches tile the flat feature vector, the
// last patch may be ragged.
Tensor signed_occlusion(const MlpModel& model, const Tensor& x, size_t class_index,
                        const ExplainerSpec& spec) {
    require(spec.occlusion_patch >= 1, ErrorKind::invalid_argument,
            "occlusion: patch size must be >= 1");
    const size_t d = x.size();
    const double score = forward(model, x)[class_index];
    Tensor values = Tensor::zeros(x.shape);
    Tensor occluded = x;
    for (size_t start = 0; start < d; start += spec.occlusion_patch) {
        const size_t stop = std::min(d, start + spec.occlusion_patch);
        for (size_t i = start; i < stop; ++i) {
            occluded[i] = spec.occlusion_fill;
        }
        const double drop = score - forward(model, occluded)[class_index];
        for (size_t i = start; i < stop; ++i) {
            values[i] = drop;
            occluded[i] = x[i];
        }
    }
    return values;
}

double positive_part(double w) {
    return w > 0.0 ? w : 0.0;
}

double stabilize(double denom) {
    // epsilon * sign(denom), with sign(0) := +1.
    const double eps = 1e-9;
    return denom + (denom >= 0.0 ? eps : -eps);
}

}  // namespace

std::vector<Tensor> lrp_gamma_layers(const MlpModel& model, const Tensor& x,
                                     size_t class_index, double gamma) {
    require(class_index < model.output_dim(), ErrorKind::invalid_argument,
            "lrp_gamma: class_index out of range");
    require(gamma >= 0.0, ErrorKind::invalid_argument, "lrp_gamma: gamma must be >= 0");
    const GradTape tape = forward_tape(model, x);
    const size_t n_layers = model.num_layers();

    // relevances[l] lives on the activations entering layer l; the seed sits
    // on the output logits.
    std::vector<Tensor> relevances(n_layers + 1);
    relevances[n_layers] = Tensor::zeros({model.output_dim()});
    relevances[n_layers][class_index] = tape.activations.back()[class_index];

    for (size_t l = n_layers; l-- > 0;) {
        const Layer& layer = model.layers()[l];
        const size_t out = layer.out_dim();
        const size_t in = layer.in_dim();
        const Tensor& a = tape.activations[l];
        const Tensor& r_upper = relevances[l + 1];
        Tensor r_lower = Tensor::zeros(a.shape);
        for (size_t k = 0; k < out; ++k) {
            const double rk = r_upper[k];
            if (rk == 0.0) {
                continue;
            }
            // Denominator includes the bias contribution, which absorbs its
            // share of relevance instead of redistributing it.
            double denom = layer.bias[k] + gamma * positive_part(layer.bias[k]);
            for (size_t j = 0; j < in; ++j) {
                denom += a[j] * (layer.weight.at(k, j) +
                                 gamma * positive_part(layer.weight.at(k, j)));
            }
            const double scale = rk / stabilize(denom);
            for (size_t j = 0; j < in; ++j) {
                r_lower[j] += a[j] *
                              (layer.weight.at(k, j) +
                               gamma * positive_part(layer.weight.at(k, j))) *
                              scale;
            }
        }
        relevances[l] = std::move(r_lower);
    }
    return relevances;
}

Tensor explain_signed(const MlpModel& model, const Tensor& x, size_t class_index,
                      const ExplainerSpec& spec, uint64_t seed) {
    require(class_index < model.output_dim(), ErrorKind::invalid_argument,
            "explain: class_index out of range");
    switch (spec.method) {
        case ExplainMethod::saliency:
            return signed_saliency(model, x, class_index);
        case ExplainMethod::intgrad:
            return signed_intgrad(model, x, class_index, spec);
        case ExplainMethod::gradshap:
            return signed_gradshap(model, x, class_index, spec, seed);
        case ExplainMethod::occlusion:
            return signed_occlusion(model, x, class_index, spec);
        case ExplainMethod::lrp_gamma:
            return lrp_gamma_layers(model, x, class_index, spec.gamma).front();
    }
    raise(ErrorKind::invalid_argument, "explain: unknown method");
}

Attribution explain(const MlpModel& model, const Tensor& x, size_t class_index,
                    const ExplainerSpec& spec, uint64_t seed) {
    Attribution attr;
    attr.values = abs_values(explain_signed(model, x, class_index, spec, seed));
    attr.method = spec.method;
    attr.enhancer = EnhancerKind::none;
    attr.seed_used = seed;
    require(attr.values.all_finite(), ErrorKind::numeric,
            "explain: non-finite attribution values");
    return attr;
}

Attribution saliency(const MlpModel& model, const Tensor& x, size_t class_index) {
    ExplainerSpec spec;
    spec.method = ExplainMethod::saliency;
    return explain(model, x, class_index, spec, 0);
}

Attribution intgrad(const MlpModel& model, const Tensor& x, size_t class_index,
                    const ExplainerSpec& spec) {
    ExplainerSpec s = spec;
    s.method = ExplainMethod::intgrad;
    return explain(model, x, class_index, s, 0);
}

Attribution gradshap(const MlpModel& model, const Tensor& x, size_t class_index,
                     const ExplainerSpec& spec, uint64_t seed) {
    ExplainerSpec s = spec;
    s.method = ExplainMethod::gradshap;
    return explain(model, x, class_index, s, seed);
}

Attribution occlusion(const MlpModel& model, const Tensor& x, size_t class_index,
                      const ExplainerSpec& spec) {
    ExplainerSpec s = spec;
    s.method = ExplainMethod::occlusion;
    return explain(model, x, class_index, s, 0);
}

Attribution lrp_gamma(const MlpModel& model, const Tensor& x, size_t class_index,
                      double gamma) {
    ExplainerSpec spec;
    spec.method = ExplainMethod::lrp_gamma;
    spec.gamma = gamma;
    Attribution attr = explain(model, x, class_index, spec, 0);
    return attr;
}

}  // namespace gnlab
