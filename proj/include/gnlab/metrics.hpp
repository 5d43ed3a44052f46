#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gnlab/dataset.hpp"
#include "gnlab/explainers.hpp"
#include "gnlab/model.hpp"
#include "gnlab/tensor.hpp"

namespace gnlab {

struct MetricReport {
    std::string metric;
    std::vector<double> scores;  // per sample
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation

    static MetricReport from_scores(std::string metric, std::vector<double> scores);
};

// Localization: fraction of the top-K attributed features (K = mask size)
// lying inside the ground-truth mask. Ties at the K-th value break toward
// the lowest flat index.
double relevance_rank_accuracy(const Tensor& attribution, const Tensor& mask);

struct FaithfulnessConfig {
    size_t subset_size = 32;
    size_t iterations = 100;
    double baseline_value = 0.0;  // "black": the dataset minimum
};

// Pearson correlation between subset attribution sums and the prediction
// drop when those features are replaced by the baseline value. Subsets are
// drawn uniformly without replacement, fresh per iteration.
double faithfulness_corr(const MlpModel& model, const Tensor& x, size_t class_index,
                         const Tensor& attribution, const FaithfulnessConfig& cfg,
                         uint64_t seed);

using ExplainFn = std::function<Tensor(const MlpModel&, const Tensor&, size_t)>;

// Robustness: max Frobenius distance between the explanation of x and of n
// perturbations drawn uniformly from the L-inf ball of the given radius.
double max_sensitivity(const ExplainFn& explain_fn, const MlpModel& model,
                       const Tensor& x, size_t class_index, double radius, size_t n,
                       uint64_t seed);

// Sparseness: Gini index of the (sorted ascending) non-negative attribution
// vector. 0 = uniform, (n-1)/n = one-hot.
double gini_index(const Tensor& attribution);

// ROC AUC of attribution values against the binary mask, midrank tie
// handling. Mask membership is the positive class.
double ranking_auc(const Tensor& attribution, const Tensor& mask);

// Relative AUC improvement over a baseline AUC.
double d_auc(double auc, double auc_baseline);

struct WilcoxonResult {
    double statistic;    // W+: rank sum of positive differences a_i - b_i
    double p_two_sided;  // normal approximation with continuity correction
    size_t n_effective;  // pairs remaining after dropping zero differences
};

// Wilcoxon signed-rank test for paired scores, midranks for ties, zero
// differences dropped. Requires n >= 20 (normal-approximation regime).
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b);

// Spearman rank correlation (midranks); throws ErrorKind::degenerate when
// either vector has zero rank variance.
double spearman(const Tensor& a, const Tensor& b);

struct SanityResult {
    double mean_correlation = 0.0;
    std::vector<double> per_sample;  // included samples only
    size_t excluded = 0;             // constant-attribution samples
};

// Model parameter randomization check: explanations of the trained model vs
// a fully re-initialized one (weights and biases ~ N(0, 0.05^2)), mean
// Spearman correlation over the subset. Explanations target each sample's
// label.
SanityResult sanity_randomization(const MlpModel& model, const ExplainFn& explain_fn,
                                  const Dataset& data_subset, uint64_t seed);

}  // namespace gnlab
