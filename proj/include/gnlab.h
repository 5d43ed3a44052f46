/* gnlab — stochastic explanation enhancement for dense networks.
 *
 * C interface to the gnlab core: opaque handles, status codes, caller-owned
 * buffers. Every function returns GNLAB_OK on success; on failure the
 * thread-local message from gnlab_last_error() describes what went wrong.
 */
#ifndef GNLAB_H
#define GNLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gnlab_status {
    GNLAB_OK = 0,
    GNLAB_ERROR = 1,             /* unexpected internal failure */
    GNLAB_ERROR_CONFIG = 2,      /* experiment config problems */
    GNLAB_ERROR_NUMERIC = 3,     /* divergence, non-finite values */
    GNLAB_ERROR_CALIBRATION = 4, /* target accuracy drop unreachable */
    GNLAB_ERROR_INVALID = 5,     /* bad arguments, shapes, indices */
    GNLAB_ERROR_FORMAT = 6,      /* corrupt or truncated files */
    GNLAB_ERROR_IO = 7,
    GNLAB_ERROR_DEGENERATE = 8   /* undefined statistic */
} gnlab_status;

const char* gnlab_last_error(void);
const char* gnlab_version(void);

typedef struct gnlab_model gnlab_model;
typedef struct gnlab_dataset gnlab_dataset;

/* ---- models ---------------------------------------------------------- */

/* dims = [input, hidden..., output]; hidden layers ReLU, final identity. */
gnlab_status gnlab_model_create(const size_t* dims, size_t n_dims, uint64_t seed,
                                gnlab_model** out);
gnlab_status gnlab_model_load(const char* path, gnlab_model** out);
gnlab_status gnlab_model_save(const gnlab_model* model, const char* path);
void gnlab_model_free(gnlab_model* model);

size_t gnlab_model_input_dim(const gnlab_model* model);
size_t gnlab_model_output_dim(const gnlab_model* model);

gnlab_status gnlab_model_forward(const gnlab_model* model, const double* x,
                                 size_t dim, double* logits_out);
gnlab_status gnlab_model_grad_input(const gnlab_model* model, const double* x,
                                    size_t dim, size_t class_index,
                                    double* grad_out);
/* Fresh model with multiplicative N(1, sigma^2) weight noise. */
gnlab_status gnlab_model_perturb(const gnlab_model* model, double sigma_ng,
                                 uint64_t seed, int include_bias,
                                 gnlab_model** out);
gnlab_status gnlab_model_accuracy(const gnlab_model* model,
                                  const gnlab_dataset* data, double* out);

typedef struct gnlab_train_opts {
    size_t epochs;
    double learning_rate;
    double momentum;
    size_t batch_size;
    uint64_t seed;
} gnlab_train_opts;

void gnlab_train_opts_init(gnlab_train_opts* opts);
gnlab_status gnlab_model_train(gnlab_model* model, const gnlab_dataset* train_data,
                               const gnlab_dataset* test_data /* nullable */,
                               const gnlab_train_opts* opts,
                               double* final_test_accuracy /* nullable */);

/* ---- datasets -------------------------------------------------------- */

gnlab_status gnlab_dataset_toy_gauss(size_t n_points, double variance,
                                     size_t test_size, uint64_t seed,
                                     gnlab_dataset** train_out,
                                     gnlab_dataset** test_out);
/* exact_mask = 0: tight bounding box; 1: the stamped glyph pixels. */
gnlab_status gnlab_dataset_glyphs(size_t n, size_t side, size_t classes,
                                  double noise_std, uint64_t seed, int exact_mask,
                                  gnlab_dataset** out);
gnlab_status gnlab_dataset_load(const char* path, gnlab_dataset** out);
gnlab_status gnlab_dataset_save(const gnlab_dataset* data, const char* path);
void gnlab_dataset_free(gnlab_dataset* data);

size_t gnlab_dataset_size(const gnlab_dataset* data);
size_t gnlab_dataset_input_dim(const gnlab_dataset* data);
int gnlab_dataset_has_masks(const gnlab_dataset* data);
gnlab_status gnlab_dataset_label(const gnlab_dataset* data, size_t index, int* out);
gnlab_status gnlab_dataset_input(const gnlab_dataset* data, size_t index,
                                 double* out);
gnlab_status gnlab_dataset_mask(const gnlab_dataset* data, size_t index, double* out);

/* ---- explanations ---------------------------------------------------- */

typedef enum gnlab_method {
    GNLAB_METHOD_SALIENCY = 0,
    GNLAB_METHOD_INTGRAD = 1,
    GNLAB_METHOD_GRADSHAP = 2,
    GNLAB_METHOD_OCCLUSION = 3,
    GNLAB_METHOD_LRP_GAMMA = 4
} gnlab_method;

typedef enum gnlab_enhancer {
    GNLAB_ENHANCER_NONE = 0,
    GNLAB_ENHANCER_SG = 1,
    GNLAB_ENHANCER_NG = 2,
    GNLAB_ENHANCER_FG = 3
} gnlab_enhancer;

typedef struct gnlab_explain_opts {
    int method;   /* gnlab_method */
    int enhancer; /* gnlab_enhancer */
    double sigma_sg;
    double sigma_ng;
    size_t n_inputs;
    size_t m_models;
    uint64_t base_seed;
    int share_xi;
    int average_pre_abs;
    int perturb_bias;
    size_t ig_steps;
    size_t shap_samples;
    double shap_sigma; /* negative: 0.1 * (max - min) of x */
    size_t occlusion_patch;
    double occlusion_fill;
    double gamma;
    /* GradientSHAP baselines: the first shap_pool_count inputs of the
     * dataset (required for GNLAB_METHOD_GRADSHAP). */
    const gnlab_dataset* shap_pool;
    size_t shap_pool_count;
} gnlab_explain_opts;

void gnlab_explain_opts_init(gnlab_explain_opts* opts);
gnlab_status gnlab_explain(const gnlab_model* model, const double* x, size_t dim,
                           size_t class_index, const gnlab_explain_opts* opts,
                           double* attribution_out);

/* ---- attribution-quality metrics ------------------------------------- */

gnlab_status gnlab_metric_rank_accuracy(const double* attribution,
                                        const double* mask, size_t dim,
                                        double* out);
gnlab_status gnlab_metric_ranking_auc(const double* attribution, const double* mask,
                                      size_t dim, double* out);
gnlab_status gnlab_metric_gini(const double* attribution, size_t dim, double* out);
gnlab_status gnlab_metric_faithfulness(const gnlab_model* model, const double* x,
                                       size_t dim, size_t class_index,
                                       const double* attribution,
                                       size_t subset_size, size_t iterations,
                                       double baseline_value, uint64_t seed,
                                       double* out);
/* Explanations re-computed with `opts` at perturbed inputs. */
gnlab_status gnlab_metric_max_sensitivity(const gnlab_model* model, const double* x,
                                          size_t dim, size_t class_index,
                                          const gnlab_explain_opts* opts,
                                          double radius, size_t n, uint64_t seed,
                                          double* out);
gnlab_status gnlab_wilcoxon(const double* a, const double* b, size_t n,
                            double* statistic_out, double* p_two_sided_out);

/* ---- noise calibration ------------------------------------------------ */

gnlab_status gnlab_sigma_sg_rule(const gnlab_dataset* data, double alpha,
                                 double* out);
gnlab_status gnlab_accuracy_drop(const gnlab_model* model, const gnlab_dataset* data,
                                 double sigma_ng, size_t repeats, uint64_t seed,
                                 double* out);
gnlab_status gnlab_calibrate_ng(const gnlab_model* model, const gnlab_dataset* data,
                                double target_drop, double tolerance, uint64_t seed,
                                double* sigma_out, double* achieved_drop_out);
/* halve_mode = 0: fix sigma_sg at alpha 0.1 and tune sigma_ng on the joint
 * drop; 1: halve both solo heuristics. */
gnlab_status gnlab_calibrate_fg(const gnlab_model* model, const gnlab_dataset* data,
                                int halve_mode, double target_drop, double tolerance,
                                uint64_t seed, double* sigma_sg_out,
                                double* sigma_ng_out);

/* ---- activation maximization ------------------------------------------ */

typedef struct gnlab_am_opts {
    size_t target_layer; /* class logit: the final layer */
    size_t target_unit;
    size_t steps;
    double step_size;
    double box_lo;
    double box_hi;
    double l2_penalty;
    double jitter_std;
    size_t m_models;
    double sigma_ng;
    uint64_t seed;
} gnlab_am_opts;

void gnlab_am_opts_init(gnlab_am_opts* opts);
/* x_out: input_dim doubles; trace_out (nullable): steps doubles. */
gnlab_status gnlab_activation_maximize(const gnlab_model* model,
                                       const gnlab_am_opts* opts, double* x_out,
                                       double* trace_out);

/* ---- experiment harness ------------------------------------------------ */

typedef struct gnlab_run_opts {
    const char* config_path; /* nullable */
    const char* config_text; /* nullable; used when config_path is null */
    int has_seed;
    uint64_t seed;
    int has_samples;
    size_t samples;
    int has_threads;
    size_t threads;
} gnlab_run_opts;

void gnlab_run_opts_init(gnlab_run_opts* opts);
/* command: train | explain | calibrate | compare | sweep | toy |
 * heuristic-curve | sanity | am. Artifacts land in out_dir. */
gnlab_status gnlab_run(const char* command, const char* out_dir,
                       const gnlab_run_opts* opts);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GNLAB_H */
