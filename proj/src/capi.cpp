#include "gnlab.h"

#include <cstring>
#include <new>
#include <string>

#include "gnlab/calibration.hpp"
#include "gnlab/dataset.hpp"
#include "gnlab/enhancers.hpp"
#include "gnlab/errors.hpp"
#include "gnlab/explainers.hpp"
#include "gnlab/global_am.hpp"
#include "gnlab/harness.hpp"
#include "gnlab/metrics.hpp"
#include "gnlab/model.hpp"

using namespace gnlab;

struct gnlab_model {
    MlpModel impl;
};

struct gnlab_dataset {
    Dataset impl;
};

namespace {

thread_local std::string t_last_error;

gnlab_status status_from(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::config: return GNLAB_ERROR_CONFIG;
        case ErrorKind::numeric: return GNLAB_ERROR_NUMERIC;
        case ErrorKind::calibration: return GNLAB_ERROR_CALIBRATION;
        case ErrorKind::invalid_argument: return GNLAB_ERROR_INVALID;
        case ErrorKind::format: return GNLAB_ERROR_FORMAT;
        case ErrorKind::io: return GNLAB_ERROR_IO;
        case ErrorKind::degenerate: return GNLAB_ERROR_DEGENERATE;
    }
    return GNLAB_ERROR;
}

template <typename Fn>
gnlab_status guarded(Fn&& fn) {
    try {
        fn();
        t_last_error.clear();
        return GNLAB_OK;
    } catch (const Error& e) {
        t_last_error = e.what();
        return status_from(e);
    } catch (const std::bad_alloc&) {
        t_last_error = "out of memory";
        return GNLAB_ERROR;
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return GNLAB_ERROR;
    } catch (...) {
        t_last_error = "unknown failure";
        return GNLAB_ERROR;
    }
}

void check_pointer(const void* p, const char* what) {
    require(p != nullptr, ErrorKind::invalid_argument,
            std::string(what) + " must not be null");
}

Tensor tensor_from(const double* x, size_t dim) {
    return Tensor::vector(std::vector<double>(x, x + dim));
}

ExplainerSpec spec_from(const gnlab_explain_opts& opts) {
    ExplainerSpec spec;
    require(opts.method >= 0 && opts.method <= 4, ErrorKind::invalid_argument,
            "explain: bad method id");
    spec.method = static_cast<ExplainMethod>(opts.method);
    spec.ig_steps = opts.ig_steps;
    spec.shap_samples = opts.shap_samples;
    spec.shap_sigma = opts.shap_sigma;
    spec.occlusion_patch = opts.occlusion_patch;
    spec.occlusion_fill = opts.occlusion_fill;
    spec.gamma = opts.gamma;
    if (spec.method == ExplainMethod::gradshap) {
        check_pointer(opts.shap_pool, "explain: shap_pool");
        const size_t count =
            std::min(opts.shap_pool_count, opts.shap_pool->impl.size());
        require(count > 0, ErrorKind::invalid_argument,
                "explain: shap_pool has no samples");
        for (size_t i = 0; i < count; ++i) {
            spec.shap_baseline_pool.push_back(opts.shap_pool->impl.inputs[i]);
        }
    }
    return spec;
}

EnhancerConfig enhancer_from(const gnlab_explain_opts& opts) {
    EnhancerConfig cfg;
    cfg.sigma_sg = opts.sigma_sg;
    cfg.sigma_ng = opts.sigma_ng;
    cfg.n_inputs = opts.n_inputs;
    cfg.m_models = opts.m_models;
    cfg.base_seed = opts.base_seed;
    cfg.share_xi = opts.share_xi != 0;
    cfg.average_pre_abs = opts.average_pre_abs != 0;
    cfg.perturb_bias = opts.perturb_bias != 0;
    return cfg;
}

EnhancerKind kind_from(int enhancer) {
    require(enhancer >= 0 && enhancer <= 3, ErrorKind::invalid_argument,
            "explain: bad enhancer id");
    return static_cast<EnhancerKind>(enhancer);
}

}  // namespace

extern "C" {

const char* gnlab_last_error(void) {
    return t_last_error.c_str();
}

const char* gnlab_version(void) {
    return "gnlab 1.0.0";
}

gnlab_status gnlab_model_create(const size_t* dims, size_t n_dims, uint64_t seed,
                                gnlab_model** out) {
    return guarded([&] {
        check_pointer(dims, "dims");
        check_pointer(out, "out");
        *out = new gnlab_model{
            MlpModel::random(std::vector<size_t>(dims, dims + n_dims), seed)};
    });
}

gnlab_status gnlab_model_load(const char* path, gnlab_model** out) {
    return guarded([&] {
        check_pointer(path, "path");
        check_pointer(out, "out");
        *out = new gnlab_model{load_model(path)};
    });
}

gnlab_status gnlab_model_save(const gnlab_model* model, const char* path) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(path, "path");
        save_model(model->impl, path);
    });
}

void gnlab_model_free(gnlab_model* model) {
    delete model;
}

size_t gnlab_model_input_dim(const gnlab_model* model) {
    return model == nullptr ? 0 : model->impl.input_dim();
}

size_t gnlab_model_output_dim(const gnlab_model* model) {
    return model == nullptr ? 0 : model->impl.output_dim();
}

gnlab_status gnlab_model_forward(const gnlab_model* model, const double* x,
                                 size_t dim, double* logits_out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(x, "x");
        check_pointer(logits_out, "logits_out");
        const Tensor logits = forward(model->impl, tensor_from(x, dim));
        std::memcpy(logits_out, logits.data.data(), logits.size() * sizeof(double));
    });
}

gnlab_status gnlab_model_grad_input(const gnlab_model* model, const double* x,
                                    size_t dim, size_t class_index,
                                    double* grad_out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(x, "x");
        check_pointer(grad_out, "grad_out");
        const Tensor grad = grad_input(model->impl, tensor_from(x, dim), class_index);
        std::memcpy(grad_out, grad.data.data(), grad.size() * sizeof(double));
    });
}

gnlab_status gnlab_model_perturb(const gnlab_model* model, double sigma_ng,
                                 uint64_t seed, int include_bias,
                                 gnlab_model** out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(out, "out");
        *out = new gnlab_model{
            perturb_weights(model->impl, sigma_ng, seed, include_bias != 0)};
    });
}

gnlab_status gnlab_model_accuracy(const gnlab_model* model, const gnlab_dataset* data,
                                  double* out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(data, "data");
        check_pointer(out, "out");
        *out = accuracy(model->impl, data->impl);
    });
}

void gnlab_train_opts_init(gnlab_train_opts* opts) {
    if (opts == nullptr) {
        return;
    }
    opts->epochs = 30;
    opts->learning_rate = 0.1;
    opts->momentum = 0.9;
    opts->batch_size = 32;
    opts->seed = 0;
}

gnlab_status gnlab_model_train(gnlab_model* model, const gnlab_dataset* train_data,
                               const gnlab_dataset* test_data,
                               const gnlab_train_opts* opts,
                               double* final_test_accuracy) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(train_data, "train_data");
        check_pointer(opts, "opts");
        TrainConfig config;
        config.epochs = opts->epochs;
        config.learning_rate = opts->learning_rate;
        config.momentum = opts->momentum;
        config.batch_size = opts->batch_size;
        config.seed = opts->seed;
        const TrainReport report =
            train(model->impl, train_data->impl,
                  test_data == nullptr ? nullptr : &test_data->impl, config);
        if (final_test_accuracy != nullptr) {
            *final_test_accuracy = report.test_accuracy.empty()
                                       ? -1.0
                                       : report.test_accuracy.back();
        }
    });
}

gnlab_status gnlab_dataset_toy_gauss(size_t n_points, double variance,
                                     size_t test_size, uint64_t seed,
                                     gnlab_dataset** train_out,
                                     gnlab_dataset** test_out) {
    return guarded([&] {
        check_pointer(train_out, "train_out");
        check_pointer(test_out, "test_out");
        ToyGaussSpec spec;
        spec.n_points = n_points;
        spec.variance = variance;
        spec.test_size = test_size;
        auto [train_set, test_set] = make_toy_gauss(spec, seed);
        *train_out = new gnlab_dataset{std::move(train_set)};
        *test_out = new gnlab_dataset{std::move(test_set)};
    });
}

gnlab_status gnlab_dataset_glyphs(size_t n, size_t side, size_t classes,
                                  double noise_std, uint64_t seed, int exact_mask,
                                  gnlab_dataset** out) {
    return guarded([&] {
        check_pointer(out, "out");
        *out = new gnlab_dataset{make_masked_glyph(
            n, side, classes, noise_std, seed,
            exact_mask != 0 ? MaskKind::exact : MaskKind::bounding_box)};
    });
}

gnlab_status gnlab_dataset_load(const char* path, gnlab_dataset** out) {
    return guarded([&] {
        check_pointer(path, "path");
        check_pointer(out, "out");
        *out = new gnlab_dataset{load_dataset(path)};
    });
}

gnlab_status gnlab_dataset_save(const gnlab_dataset* data, const char* path) {
    return guarded([&] {
        check_pointer(data, "data");
        check_pointer(path, "path");
        save_dataset(data->impl, path);
    });
}

void gnlab_dataset_free(gnlab_dataset* data) {
    delete data;
}

size_t gnlab_dataset_size(const gnlab_dataset* data) {
    return data == nullptr ? 0 : data->impl.size();
}

size_t gnlab_dataset_input_dim(const gnlab_dataset* data) {
    return data == nullptr ? 0 : data->impl.input_dim();
}

int gnlab_dataset_has_masks(const gnlab_dataset* data) {
    return data != nullptr && data->impl.has_masks() ? 1 : 0;
}

gnlab_status gnlab_dataset_label(const gnlab_dataset* data, size_t index, int* out) {
    return guarded([&] {
        check_pointer(data, "data");
        check_pointer(out, "out");
        require(index < data->impl.size(), ErrorKind::invalid_argument,
                "dataset index out of range");
        *out = data->impl.labels[index];
    });
}

gnlab_status gnlab_dataset_input(const gnlab_dataset* data, size_t index,
                                 double* out) {
    return guarded([&] {
        check_pointer(data, "data");
        check_pointer(out, "out");
        require(index < data->impl.size(), ErrorKind::invalid_argument,
                "dataset index out of range");
        const Tensor& x = data->impl.inputs[index];
        std::memcpy(out, x.data.data(), x.size() * sizeof(double));
    });
}

gnlab_status gnlab_dataset_mask(const gnlab_dataset* data, size_t index, double* out) {
    return guarded([&] {
        check_pointer(data, "data");
        check_pointer(out, "out");
        require(data->impl.has_masks(), ErrorKind::invalid_argument,
                "dataset carries no masks");
        require(index < data->impl.size(), ErrorKind::invalid_argument,
                "dataset index out of range");
        const Tensor& mask = data->impl.masks[index];
        std::memcpy(out, mask.data.data(), mask.size() * sizeof(double));
    });
}

void gnlab_explain_opts_init(gnlab_explain_opts* opts) {
    if (opts == nullptr) {
        return;
    }
    opts->method = GNLAB_METHOD_SALIENCY;
    opts->enhancer = GNLAB_ENHANCER_NONE;
    opts->sigma_sg = 0.0;
    opts->sigma_ng = 0.0;
    opts->n_inputs = 10;
    opts->m_models = 10;
    opts->base_seed = 0;
    opts->share_xi = 1;
    opts->average_pre_abs = 0;
    opts->perturb_bias = 1;
    opts->ig_steps = 128;
    opts->shap_samples = 8;
    opts->shap_sigma = -1.0;
    opts->occlusion_patch = 1;
    opts->occlusion_fill = 0.0;
    opts->gamma = 0.25;
    opts->shap_pool = nullptr;
    opts->shap_pool_count = 0;
}

gnlab_status gnlab_explain(const gnlab_model* model, const double* x, size_t dim,
                           size_t class_index, const gnlab_explain_opts* opts,
                           double* attribution_out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(x, "x");
        check_pointer(opts, "opts");
        check_pointer(attribution_out, "attribution_out");
        const Attribution attr =
            enhance(model->impl, tensor_from(x, dim), class_index, spec_from(*opts),
                    kind_from(opts->enhancer), enhancer_from(*opts));
        std::memcpy(attribution_out, attr.values.data.data(),
                    attr.values.size() * sizeof(double));
    });
}

gnlab_status gnlab_metric_rank_accuracy(const double* attribution,
                                        const double* mask, size_t dim,
                                        double* out) {
    return guarded([&] {
        check_pointer(attribution, "attribution");
        check_pointer(mask, "mask");
        check_pointer(out, "out");
        *out = relevance_rank_accuracy(tensor_from(attribution, dim),
                                       tensor_from(mask, dim));
    });
}

gnlab_status gnlab_metric_ranking_auc(const double* attribution, const double* mask,
                                      size_t dim, double* out) {
    return guarded([&] {
        check_pointer(attribution, "attribution");
        check_pointer(mask, "mask");
        check_pointer(out, "out");
        *out = ranking_auc(tensor_from(attribution, dim), tensor_from(mask, dim));
    });
}

gnlab_status gnlab_metric_gini(const double* attribution, size_t dim, double* out) {
    return guarded([&] {
        check_pointer(attribution, "attribution");
        check_pointer(out, "out");
        *out = gini_index(tensor_from(attribution, dim));
    });
}

gnlab_status gnlab_metric_faithfulness(const gnlab_model* model, const double* x,
                                       size_t dim, size_t class_index,
                                       const double* attribution,
                                       size_t subset_size, size_t iterations,
                                       double baseline_value, uint64_t seed,
                                       double* out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(x, "x");
        check_pointer(attribution, "attribution");
        check_pointer(out, "out");
        FaithfulnessConfig cfg;
        cfg.subset_size = subset_size;
        cfg.iterations = iterations;
        cfg.baseline_value = baseline_value;
        *out = faithfulness_corr(model->impl, tensor_from(x, dim), class_index,
                                 tensor_from(attribution, dim), cfg, seed);
    });
}

gnlab_status gnlab_metric_max_sensitivity(const gnlab_model* model, const double* x,
                                          size_t dim, size_t class_index,
                                          const gnlab_explain_opts* opts,
                                          double radius, size_t n, uint64_t seed,
                                          double* out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(x, "x");
        check_pointer(opts, "opts");
        check_pointer(out, "out");
        const ExplainerSpec spec = spec_from(*opts);
        const EnhancerConfig cfg = enhancer_from(*opts);
        const EnhancerKind kind = kind_from(opts->enhancer);
        const ExplainFn fn = [&spec, &cfg, kind](const MlpModel& m, const Tensor& xx,
                                                 size_t cc) {
            return enhance(m, xx, cc, spec, kind, cfg).values;
        };
        *out = max_sensitivity(fn, model->impl, tensor_from(x, dim), class_index,
                               radius, n, seed);
    });
}

gnlab_status gnlab_wilcoxon(const double* a, const double* b, size_t n,
                            double* statistic_out, double* p_two_sided_out) {
    return guarded([&] {
        check_pointer(a, "a");
        check_pointer(b, "b");
        const WilcoxonResult result = wilcoxon_signed_rank(
            std::vector<double>(a, a + n), std::vector<double>(b, b + n));
        if (statistic_out != nullptr) {
            *statistic_out = result.statistic;
        }
        if (p_two_sided_out != nullptr) {
            *p_two_sided_out = result.p_two_sided;
        }
    });
}

gnlab_status gnlab_sigma_sg_rule(const gnlab_dataset* data, double alpha,
                                 double* out) {
    return guarded([&] {
        check_pointer(data, "data");
        check_pointer(out, "out");
        *out = sigma_sg_rule(data->impl, alpha);
    });
}

gnlab_status gnlab_accuracy_drop(const gnlab_model* model, const gnlab_dataset* data,
                                 double sigma_ng, size_t repeats, uint64_t seed,
                                 double* out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(data, "data");
        check_pointer(out, "out");
        *out = accuracy_drop(model->impl, data->impl, sigma_ng, repeats, seed);
    });
}

gnlab_status gnlab_calibrate_ng(const gnlab_model* model, const gnlab_dataset* data,
                                double target_drop, double tolerance, uint64_t seed,
                                double* sigma_out, double* achieved_drop_out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(data, "data");
        check_pointer(sigma_out, "sigma_out");
        const CalibrationResult result =
            calibrate_ng(model->impl, data->impl, target_drop, tolerance, seed);
        *sigma_out = result.sigma;
        if (achieved_drop_out != nullptr) {
            *achieved_drop_out = result.achieved_drop;
        }
    });
}

gnlab_status gnlab_calibrate_fg(const gnlab_model* model, const gnlab_dataset* data,
                                int halve_mode, double target_drop, double tolerance,
                                uint64_t seed, double* sigma_sg_out,
                                double* sigma_ng_out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(data, "data");
        check_pointer(sigma_sg_out, "sigma_sg_out");
        check_pointer(sigma_ng_out, "sigma_ng_out");
        const FgCalibration result = calibrate_fg(
            model->impl, data->impl,
            halve_mode != 0 ? FgCalibrationMode::halve_solo
                            : FgCalibrationMode::joint_drop,
            target_drop, tolerance, seed);
        *sigma_sg_out = result.sigma_sg;
        *sigma_ng_out = result.sigma_ng;
    });
}

void gnlab_am_opts_init(gnlab_am_opts* opts) {
    if (opts == nullptr) {
        return;
    }
    opts->target_layer = 0;
    opts->target_unit = 0;
    opts->steps = 512;
    opts->step_size = 0.05;
    opts->box_lo = 0.0;
    opts->box_hi = 1.0;
    opts->l2_penalty = 1e-3;
    opts->jitter_std = 0.01;
    opts->m_models = 1;
    opts->sigma_ng = 0.0;
    opts->seed = 0;
}

gnlab_status gnlab_activation_maximize(const gnlab_model* model,
                                       const gnlab_am_opts* opts, double* x_out,
                                       double* trace_out) {
    return guarded([&] {
        check_pointer(model, "model");
        check_pointer(opts, "opts");
        check_pointer(x_out, "x_out");
        AmConfig cfg;
        cfg.target = {opts->target_layer, opts->target_unit};
        cfg.steps = opts->steps;
        cfg.step_size = opts->step_size;
        cfg.box_lo = opts->box_lo;
        cfg.box_hi = opts->box_hi;
        cfg.l2_penalty = opts->l2_penalty;
        cfg.jitter_std = opts->jitter_std;
        cfg.m_models = opts->m_models;
        cfg.sigma_ng = opts->sigma_ng;
        cfg.seed = opts->seed;
        const AmResult result = activation_maximize(model->impl, cfg);
        std::memcpy(x_out, result.x_star.data.data(),
                    result.x_star.size() * sizeof(double));
        if (trace_out != nullptr) {
            std::memcpy(trace_out, result.objective_trace.data(),
                        result.objective_trace.size() * sizeof(double));
        }
    });
}

void gnlab_run_opts_init(gnlab_run_opts* opts) {
    if (opts == nullptr) {
        return;
    }
    opts->config_path = nullptr;
    opts->config_text = nullptr;
    opts->has_seed = 0;
    opts->seed = 0;
    opts->has_samples = 0;
    opts->samples = 0;
    opts->has_threads = 0;
    opts->threads = 0;
}

gnlab_status gnlab_run(const char* command, const char* out_dir,
                       const gnlab_run_opts* opts) {
    return guarded([&] {
        check_pointer(command, "command");
        check_pointer(out_dir, "out_dir");
        ConfigFile config;
        if (opts != nullptr && opts->config_path != nullptr) {
            config = ConfigFile::parse_file(opts->config_path);
        } else if (opts != nullptr && opts->config_text != nullptr) {
            config = ConfigFile::parse_text(opts->config_text, "<inline>");
        } else {
            config = ConfigFile::parse_text("", "<defaults>");
        }
        RunOverrides overrides;
        if (opts != nullptr && opts->has_seed != 0) {
            overrides.seed = opts->seed;
        }
        if (opts != nullptr && opts->has_samples != 0) {
            overrides.samples = opts->samples;
        }
        if (opts != nullptr && opts->has_threads != 0) {
            overrides.threads = opts->threads;
        }
        run_command(command, config, out_dir, overrides);
    });
}

} /* extern "C" */
