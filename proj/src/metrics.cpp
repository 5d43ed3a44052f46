#include "gnlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gnlab/errors.hpp"
#include "gnlab/rng.hpp"

namespace gnlab {

namespace {

std::vector<size_t> mask_indices(const Tensor& mask) {
    std::vector<size_t> indices;
    for (size_t i = 0; i < mask.size(); ++i) {
        require(mask[i] == 0.0 || mask[i] == 1.0, ErrorKind::invalid_argument,
                "mask values must be 0 or 1");
        if (mask[i] == 1.0) {
            indices.push_back(i);
        }
    }
    return indices;
}

// Midranks (1-based, ties averaged) of the given values.
std::vector<double> midranks(const std::vector<double>& values) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys,
               const char* what) {
    const size_t n = xs.size();
    require(n >= 2, ErrorKind::degenerate,
            std::string(what) + ": need at least two observations");
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    require(sxx > 0.0 && syy > 0.0, ErrorKind::degenerate,
            std::string(what) + ": zero variance, correlation undefined");
    return sxy / std::sqrt(sxx * syy);
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

}  // namespace

MetricReport MetricReport::from_scores(std::string metric, std::vector<double> scores) {
    MetricReport report;
    report.metric = std::move(metric);
    report.scores = std::move(scores);
    require(!report.scores.empty(), ErrorKind::invalid_argument,
            "MetricReport: no scores");
    double sum = 0.0;
    for (double s : report.scores) {
        require(std::isfinite(s), ErrorKind::numeric, "MetricReport: non-finite score");
        sum += s;
    }
    report.mean = sum / static_cast<double>(report.scores.size());
    if (report.scores.size() > 1) {
        double ss = 0.0;
        for (double s : report.scores) {
            ss += (s - report.mean) * (s - report.mean);
        }
        report.stddev = std::sqrt(ss / static_cast<double>(report.scores.size() - 1));
    }
    return report;
}

double relevance_rank_accuracy(const Tensor& attribution, const Tensor& mask) {
    require(attribution.shape == mask.shape, ErrorKind::invalid_argument,
            "relevance_rank_accuracy: shape mismatch");
    const std::vector<size_t> gt = mask_indices(mask);
    require(!gt.empty(), ErrorKind::invalid_argument,
            "relevance_rank_accuracy: empty mask");
    const size_t k = gt.size();

    std::vector<size_t> order(attribution.size());
    std::iota(order.begin(), order.end(), 0);
    // Descending by value, ascending by flat index on ties.
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return attribution[a] > attribution[b];
    });

    std::vector<char> in_mask(attribution.size(), 0);
    for (size_t i : gt) {
        in_mask[i] = 1;
    }
    size_t hits = 0;
    for (size_t r = 0; r < k; ++r) {
        hits += in_mask[order[r]];
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

double faithfulness_corr(const MlpModel& model, const Tensor& x, size_t class_index,
                         const Tensor& attribution, const FaithfulnessConfig& cfg,
                         uint64_t seed) {
    require(attribution.shape == x.shape, ErrorKind::invalid_argument,
            "faithfulness_corr: attribution shape mismatch");
    const size_t d = x.size();
    require(cfg.subset_size >= 1 && cfg.subset_size <= d, ErrorKind::invalid_argument,
            "faithfulness_corr: subset size out of range");
    require(cfg.iterations >= 2, ErrorKind::invalid_argument,
            "faithfulness_corr: need at least two iterations");

    const double base_score = forward(model, x)[class_index];
    std::vector<double> attr_sums, score_drops;
    std::vector<size_t> indices(d);
    Tensor modified = x;
    for (size_t iter = 0; iter < cfg.iterations; ++iter) {
        Rng rng = Rng::child(seed, stream::faithfulness, iter);
        std::iota(indices.begin(), indices.end(), 0);
        // Partial Fisher-Yates: the first subset_size entries form S.
        for (size_t i = 0; i < cfg.subset_size; ++i) {
            const size_t j = i + static_cast<size_t>(rng.uniform_index(d - i));
            std::swap(indices[i], indices[j]);
        }
        double attr_sum = 0.0;
        for (size_t i = 0; i < cfg.subset_size; ++i) {
            attr_sum += attribution[indices[i]];
            modified[indices[i]] = cfg.baseline_value;
        }
        attr_sums.push_back(attr_sum);
        score_drops.push_back(base_score - forward(model, modified)[class_index]);
        for (size_t i = 0; i < cfg.subset_size; ++i) {
            modified[indices[i]] = x[indices[i]];
        }
    }
    return pearson(attr_sums, score_drops, "faithfulness_corr");
}

double max_sensitivity(const ExplainFn& explain_fn, const MlpModel& model,
                       const Tensor& x, size_t class_index, double radius, size_t n,
                       uint64_t seed) {
    require(radius > 0.0, ErrorKind::invalid_argument,
            "max_sensitivity: radius must be positive");
    require(n >= 1, ErrorKind::invalid_argument,
            "max_sensitivity: need at least one perturbation");
    const Tensor reference = explain_fn(model, x, class_index);
    double worst = 0.0;
    Tensor probe = x;
    for (size_t j = 0; j < n; ++j) {
        Rng rng = Rng::child(seed, stream::sensitivity, j);
        for (size_t i = 0; i < x.size(); ++i) {
            probe[i] = x[i] + rng.uniform(-radius, radius);
        }
        const Tensor perturbed = explain_fn(model, probe, class_index);
        double dist = 0.0;
        for (size_t i = 0; i < reference.size(); ++i) {
            const double diff = perturbed[i] - reference[i];
            dist += diff * diff;
        }
        worst = std::max(worst, std::sqrt(dist));
    }
    return worst;
}

double gini_index(const Tensor& attribution) {
    const size_t n = attribution.size();
    require(n >= 1, ErrorKind::invalid_argument, "gini_index: empty attribution");
    std::vector<double> sorted = attribution.data;
    double total = 0.0;
    for (double v : sorted) {
        require(v >= 0.0, ErrorKind::invalid_argument,
                "gini_index: attribution must be non-negative");
        total += v;
    }
    require(total > 0.0, ErrorKind::degenerate,
            "gini_index: all-zero attribution, sparseness undefined");
    std::sort(sorted.begin(), sorted.end());
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        // 1-based index in the sorted order.
        acc += (2.0 * static_cast<double>(i + 1) - static_cast<double>(n) - 1.0) *
               sorted[i];
    }
    return acc / (static_cast<double>(n) * total);
}

double ranking_auc(const Tensor& attribution, const Tensor& mask) {
    require(attribution.shape == mask.shape, ErrorKind::invalid_argument,
            "ranking_auc: shape mismatch");
    const std::vector<size_t> positives = mask_indices(mask);
    const size_t p = positives.size();
    const size_t n_neg = mask.size() - p;
    require(p > 0 && n_neg > 0, ErrorKind::invalid_argument,
            "ranking_auc: mask needs a positive and a negative entry");
    const std::vector<double> ranks = midranks(attribution.data);
    double rank_sum = 0.0;
    for (size_t i : positives) {
        rank_sum += ranks[i];
    }
    const double u = rank_sum - 0.5 * static_cast<double>(p) * (static_cast<double>(p) + 1.0);
    return u / (static_cast<double>(p) * static_cast<double>(n_neg));
}

double d_auc(double auc, double auc_baseline) {
    require(auc_baseline > 0.0, ErrorKind::invalid_argument,
            "d_auc: baseline AUC must be positive");
    return auc / auc_baseline - 1.0;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b) {
    require(a.size() == b.size(), ErrorKind::invalid_argument,
            "wilcoxon: unpaired inputs");
    require(a.size() >= 20, ErrorKind::invalid_argument,
            "wilcoxon: need n >= 20 for the normal approximation");
    std::vector<double> diffs;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) {
            diffs.push_back(d);
        }
    }
    require(!diffs.empty(), ErrorKind::degenerate,
            "wilcoxon: all differences are zero");
    const size_t n = diffs.size();
    std::vector<double> abs_diffs(n);
    for (size_t i = 0; i < n; ++i) {
        abs_diffs[i] = std::fabs(diffs[i]);
    }
    const std::vector<double> ranks = midranks(abs_diffs);
    double w_plus = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0.0) {
            w_plus += ranks[i];
        }
    }
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    // Tie correction: subtract (t^3 - t)/48 per tie group.
    {
        std::vector<double> sorted = abs_diffs;
        std::sort(sorted.begin(), sorted.end());
        size_t i = 0;
        while (i < n) {
            size_t j = i;
            while (j + 1 < n && sorted[j + 1] == sorted[i]) {
                ++j;
            }
            const double t = static_cast<double>(j - i + 1);
            variance -= (t * t * t - t) / 48.0;
            i = j + 1;
        }
    }
    WilcoxonResult result;
    result.statistic = w_plus;
    result.n_effective = n;
    if (variance <= 0.0) {
        raise(ErrorKind::degenerate, "wilcoxon: zero variance");
    }
    const double centered = w_plus - mean;
    double z = 0.0;
    if (centered > 0.5) {
        z = (centered - 0.5) / std::sqrt(variance);
    } else if (centered < -0.5) {
        z = (centered + 0.5) / std::sqrt(variance);
    }
    result.p_two_sided = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::fabs(z))));
    return result;
}

double spearman(const Tensor& a, const Tensor& b) {
    require(a.size() == b.size() && a.size() >= 2, ErrorKind::invalid_argument,
            "spearman: need two equally sized vectors");
    const std::vector<double> ra = midranks(a.data);
    const std::vector<double> rb = midranks(b.data);
    return pearson(ra, rb, "spearman");
}

SanityResult sanity_randomization(const MlpModel& model, const ExplainFn& explain_fn,
                                  const Dataset& data_subset, uint64_t seed) {
    require(data_subset.size() > 0, ErrorKind::invalid_argument,
            "sanity_randomization: empty subset");
    // Full randomization: every weight and bias redrawn from N(0, 0.05^2),
    // layer by layer, weights before biases.
    MlpModel randomized = model;
    Rng rng = Rng::child(seed, stream::sanity, 0);
    for (Layer& layer : randomized.layers_mut()) {
        for (double& w : layer.weight.data) {
            w = rng.normal(0.0, 0.05);
        }
        for (double& bias : layer.bias.data) {
            bias = rng.normal(0.0, 0.05);
        }
    }

    SanityResult result;
    double sum = 0.0;
    for (size_t i = 0; i < data_subset.size(); ++i) {
        const size_t cls = static_cast<size_t>(data_subset.labels[i]);
        const Tensor trained_attr = explain_fn(model, data_subset.inputs[i], cls);
        const Tensor random_attr = explain_fn(randomized, data_subset.inputs[i], cls);
        double corr = 0.0;
        try {
            corr = spearman(trained_attr, random_attr);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::degenerate) {
                result.excluded += 1;  // constant attribution, rank variance zero
                continue;
            }
            throw;
        }
        result.per_sample.push_back(corr);
        sum += corr;
    }
    require(!result.per_sample.empty(), ErrorKind::degenerate,
            "sanity_randomization: every sample had constant attributions");
    result.mean_correlation = sum / static_cast<double>(result.per_sample.size());
    return result;
}

}  // namespace gnlab
