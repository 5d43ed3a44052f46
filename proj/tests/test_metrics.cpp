#include <doctest.h>

#include <cmath>
#include <vector>

#include "gnlab/errors.hpp"
#include "gnlab/metrics.hpp"
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

Tensor random_nonneg(size_t dim, uint64_t seed) {
    Rng rng(seed);
    Tensor x = Tensor::zeros({dim});
    for (double& v : x.data) {
        v = rng.uniform01() + 0.01;
    }
    return x;
}

}  // namespace

TEST_CASE("rank accuracy: exact hit, total miss, half hit") {
    Tensor mask = Tensor::vector({1, 1, 0, 0, 1, 1, 0, 0});

    Tensor perfect = Tensor::vector({9, 8, 1, 1, 7, 6, 1, 1});
    CHECK(relevance_rank_accuracy(perfect, mask) == 1.0);

    Tensor miss = Tensor::vector({1, 1, 9, 8, 1, 1, 7, 6});
    CHECK(relevance_rank_accuracy(miss, mask) == 0.0);

    Tensor half = Tensor::vector({9, 8, 7, 6, 1, 1, 0, 0});
    CHECK(relevance_rank_accuracy(half, mask) == 0.5);
}

TEST_CASE("rank accuracy: K-th value ties break toward the lowest flat index") {
    // Mask {0,1}; attribution has a three-way tie at the top. The top-2 set
    // under lowest-index tie-breaking is {0, 1}, so one of two hits.
    Tensor mask = Tensor::vector({0, 1, 0, 1});
    Tensor attr = Tensor::vector({5, 5, 5, 0});
    CHECK(relevance_rank_accuracy(attr, mask) == 0.5);
}

TEST_CASE("rank accuracy is invariant under strictly monotone transforms") {
    Rng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor attr = Tensor::zeros({16});
        Tensor mask = Tensor::zeros({16});
        for (double& v : attr.data) {
            v = rng.uniform01();
        }
        size_t positives = 0;
        for (double& v : mask.data) {
            v = rng.uniform01() < 0.4 ? 1.0 : 0.0;
            positives += v == 1.0;
        }
        if (positives == 0 || positives == 16) {
            continue;
        }
        Tensor transformed = attr;
        for (double& v : transformed.data) {
            v = std::exp(3.0 * v + 1.0);
        }
        CHECK(relevance_rank_accuracy(attr, mask) ==
              relevance_rank_accuracy(transformed, mask));
        CHECK(ranking_auc(attr, mask) == ranking_auc(transformed, mask));
    }
}

TEST_CASE("rank accuracy rejects an empty mask") {
    CHECK_THROWS_AS(
        relevance_rank_accuracy(Tensor::vector({1, 2}), Tensor::vector({0, 0})), Error);
}

TEST_CASE("faithfulness: linear model with its own contributions correlates at 1") {
    MlpModel model = linear_model(Tensor({2, 6}, {0.5, -1.0, 2.0, 1.5, -0.5, 1.0,
                                                  0, 0, 0, 0, 0, 0}));
    Rng rng(7);
    Tensor x = Tensor::zeros({6});
    for (double& v : x.data) {
        v = rng.uniform(0.5, 2.0);
    }
    // Pre-abs contributions w_ci * x_i; with a zero baseline the score drop
    // for a subset equals the subset sum exactly.
    Tensor attr = Tensor::zeros({6});
    for (size_t i = 0; i < 6; ++i) {
        attr[i] = model.layers()[0].weight.at(0, i) * x[i];
    }
    FaithfulnessConfig cfg;
    cfg.subset_size = 2;
    cfg.iterations = 40;
    cfg.baseline_value = 0.0;
    CHECK(faithfulness_corr(model, x, 0, attr, cfg, 99) ==
          doctest::Approx(1.0).epsilon(1e-12));

    Tensor negated = attr;
    for (double& v : negated.data) {
        v = -v;
    }
    CHECK(faithfulness_corr(model, x, 0, negated, cfg, 99) ==
          doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("faithfulness: random attributions hover around zero correlation") {
    MlpModel model = MlpModel::random({8, 12, 2}, 21);
    Rng rng(22);
    Tensor x = Tensor::zeros({8});
    for (double& v : x.data) {
        v = rng.uniform01();
    }
    FaithfulnessConfig cfg;
    cfg.subset_size = 3;
    cfg.iterations = 50;
    double total = 0.0;
    const int repeats = 100;
    for (int r = 0; r < repeats; ++r) {
        Tensor attr = Tensor::zeros({8});
        for (double& v : attr.data) {
            v = rng.normal(0.0, 1.0);
        }
        total += faithfulness_corr(model, x, 0, attr, cfg, 1000 + r);
    }
    CHECK(std::fabs(total / repeats) < 0.1);
}

TEST_CASE("faithfulness: zero-variance series is reported, not silently zero") {
    // A constant model gives identical drops for every subset.
    MlpModel model = linear_model(Tensor::zeros({2, 4}));
    Tensor x = Tensor::vector({1, 2, 3, 4});
    Tensor attr = Tensor::vector({1, 2, 3, 4});
    FaithfulnessConfig cfg;
    cfg.subset_size = 2;
    cfg.iterations = 10;
    try {
        faithfulness_corr(model, x, 0, attr, cfg, 5);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate);
    }
}

TEST_CASE("max sensitivity: constant explanation function scores 0") {
    MlpModel model = MlpModel::random({4, 2}, 31);
    const ExplainFn constant_fn = [](const MlpModel&, const Tensor&, size_t) {
        return Tensor::vector({1, 2, 3, 4});
    };
    CHECK(max_sensitivity(constant_fn, model, Tensor::vector({0, 0, 0, 0}), 0, 0.2,
                          10, 3) == 0.0);
}

TEST_CASE("max sensitivity: identity explanation is bounded by r*sqrt(d)") {
    MlpModel model = MlpModel::random({5, 2}, 32);
    const ExplainFn identity_fn = [](const MlpModel&, const Tensor& x, size_t) {
        return x;
    };
    const Tensor x = Tensor::vector({0.1, 0.2, 0.3, 0.4, 0.5});
    const double r = 0.2;
    const double value = max_sensitivity(identity_fn, model, x, 0, r, 10, 8);
    CHECK(value > 0.0);
    CHECK(value <= r * std::sqrt(5.0) + 1e-12);
}

TEST_CASE("max sensitivity matches an independent loop oracle bitwise") {
    MlpModel model = MlpModel::random({4, 6, 3}, 33);
    const Tensor x = random_nonneg(4, 34);
    const ExplainFn fn = [](const MlpModel& m, const Tensor& input, size_t cls) {
        return grad_input(m, input, cls);
    };
    const double r = 0.2;
    const size_t n = 10;
    const uint64_t seed = 777;

    const Tensor reference = fn(model, x, 1);
    double worst = 0.0;
    for (size_t j = 0; j < n; ++j) {
        Rng rng = Rng::child(seed, stream::sensitivity, j);
        Tensor probe = x;
        for (size_t i = 0; i < x.size(); ++i) {
            probe[i] = x[i] + rng.uniform(-r, r);
        }
        const Tensor perturbed = fn(model, probe, 1);
        double dist = 0.0;
        for (size_t i = 0; i < reference.size(); ++i) {
            dist += (perturbed[i] - reference[i]) * (perturbed[i] - reference[i]);
        }
        worst = std::max(worst, std::sqrt(dist));
    }
    CHECK(max_sensitivity(fn, model, x, 1, r, n, seed) == worst);
}

TEST_CASE("gini: uniform vectors score 0, one-hot scores (n-1)/n") {
    CHECK(gini_index(Tensor::vector({2, 2, 2, 2, 2})) == doctest::Approx(0.0));
    CHECK(gini_index(Tensor::vector({0, 0, 0, 1})) == doctest::Approx(0.75));
    CHECK(gini_index(Tensor::vector({0, 1})) == doctest::Approx(0.5));
}

TEST_CASE("gini matches the mean-absolute-difference oracle to 1e-12") {
    Rng rng(55);
    for (int trial = 0; trial < 30; ++trial) {
        const size_t n = 5 + rng.uniform_index(40);
        Tensor attr = random_nonneg(n, 5600 + trial);
        // Oracle: G = sum_ij |x_i - x_j| / (2 n^2 mean).
        double mad = 0.0, mean = 0.0;
        for (size_t i = 0; i < n; ++i) {
            mean += attr[i];
            for (size_t j = 0; j < n; ++j) {
                mad += std::fabs(attr[i] - attr[j]);
            }
        }
        mean /= static_cast<double>(n);
        const double oracle = mad / (2.0 * static_cast<double>(n) *
                                     static_cast<double>(n) * mean);
        CHECK(gini_index(attr) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("gini is scale invariant") {
    Tensor attr = random_nonneg(24, 61);
    Tensor scaled = attr;
    for (double& v : scaled.data) {
        v *= 37.5;
    }
    CHECK(gini_index(attr) == doctest::Approx(gini_index(scaled)).epsilon(1e-12));
}

TEST_CASE("gini rejects all-zero and negative attributions") {
    CHECK_THROWS_AS(gini_index(Tensor::vector({0, 0, 0})), Error);
    CHECK_THROWS_AS(gini_index(Tensor::vector({1, -1, 2})), Error);
}

TEST_CASE("ranking AUC: separable, inverted and constant attributions") {
    Tensor mask = Tensor::vector({1, 1, 0, 0});
    CHECK(ranking_auc(Tensor::vector({5, 4, 3, 2}), mask) == 1.0);
    CHECK(ranking_auc(Tensor::vector({1, 2, 3, 4}), mask) == 0.0);
    CHECK(ranking_auc(Tensor::vector({7, 7, 7, 7}), mask) == 0.5);
}

TEST_CASE("ranking AUC rejects single-class masks") {
    CHECK_THROWS_AS(ranking_auc(Tensor::vector({1, 2}), Tensor::vector({1, 1})), Error);
    CHECK_THROWS_AS(ranking_auc(Tensor::vector({1, 2}), Tensor::vector({0, 0})), Error);
}

TEST_CASE("d_auc arithmetic") {
    CHECK(d_auc(0.9, 0.9) == doctest::Approx(0.0));
    CHECK(d_auc(0.99, 0.9) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(d_auc(0.5, 0.0), Error);
}

TEST_CASE("wilcoxon: a constant shift is maximal evidence") {
    std::vector<double> a(30), b(30);
    Rng rng(71);
    for (size_t i = 0; i < 30; ++i) {
        a[i] = rng.normal(0.0, 1.0);
        b[i] = a[i] + 0.5;
    }
    const WilcoxonResult result = wilcoxon_signed_rank(a, b);
    CHECK(result.p_two_sided < 0.001);
    CHECK(result.statistic == 0.0);  // every difference a-b is negative
}

TEST_CASE("wilcoxon: symmetric noise averages to p about one half") {
    Rng rng(72);
    double p_sum = 0.0;
    const int repeats = 200;
    for (int r = 0; r < repeats; ++r) {
        std::vector<double> a(25), b(25);
        for (size_t i = 0; i < 25; ++i) {
            a[i] = rng.normal(0.0, 1.0);
            b[i] = a[i] + rng.normal(0.0, 0.3);
        }
        p_sum += wilcoxon_signed_rank(a, b).p_two_sided;
    }
    CHECK(std::fabs(p_sum / repeats - 0.5) < 0.15);
}

TEST_CASE("wilcoxon matches exact enumeration at n = 20 within 0.02") {
    // Fixed 20-pair example with a moderate effect.
    const std::vector<double> diffs{1.5,  -0.5, 2.0, 1.0,  -1.0, 0.5, 2.5,
                                    1.5,  -0.5, 3.0, 1.0,  0.5,  -1.5, 2.0,
                                    1.0,  0.5,  -0.5, 1.5, 2.5,  1.0};
    std::vector<double> a(20), b(20);
    for (size_t i = 0; i < 20; ++i) {
        a[i] = 10.0 + diffs[i];
        b[i] = 10.0;
    }
    const WilcoxonResult result = wilcoxon_signed_rank(a, b);

    // Exact null distribution by enumerating all 2^20 sign assignments of
    // the midranked absolute differences.
    std::vector<double> abs_diffs(20);
    for (size_t i = 0; i < 20; ++i) {
        abs_diffs[i] = std::fabs(diffs[i]);
    }
    // Midranks, 1-based.
    std::vector<double> ranks(20);
    for (size_t i = 0; i < 20; ++i) {
        double below = 0.0, equal = 0.0;
        for (size_t j = 0; j < 20; ++j) {
            below += abs_diffs[j] < abs_diffs[i];
            equal += abs_diffs[j] == abs_diffs[i];
        }
        ranks[i] = below + 0.5 * (equal - 1.0) + 1.0;
    }
    size_t count_le = 0, count_ge = 0;
    const size_t total = 1u << 20;
    for (size_t mask = 0; mask < total; ++mask) {
        double w = 0.0;
        for (size_t i = 0; i < 20; ++i) {
            if (mask & (1u << i)) {
                w += ranks[i];
            }
        }
        count_le += w <= result.statistic + 1e-9;
        count_ge += w >= result.statistic - 1e-9;
    }
    const double p_exact = std::min(
        1.0, 2.0 * std::min(static_cast<double>(count_le) / total,
                            static_cast<double>(count_ge) / total));
    CHECK(std::fabs(result.p_two_sided - p_exact) <= 0.02);
}

TEST_CASE("wilcoxon degenerate and small-sample errors") {
    std::vector<double> same(25, 1.0);
    CHECK_THROWS_AS(wilcoxon_signed_rank(same, same), Error);
    std::vector<double> a(10, 1.0), b(10, 2.0);
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, b), Error);
}

TEST_CASE("spearman: identical ranks 1, reversed ranks -1") {
    Tensor a = Tensor::vector({0.1, 0.5, 0.9, 1.5, 2.0});
    CHECK(spearman(a, a) == doctest::Approx(1.0));
    Tensor reversed = Tensor::vector({2.0, 1.5, 0.9, 0.5, 0.1});
    CHECK(spearman(a, reversed) == doctest::Approx(-1.0));
}

TEST_CASE("sanity check: explanation that ignores the model correlates at 1") {
    MlpModel model = MlpModel::random({6, 8, 3}, 91);
    Dataset subset;
    Rng rng(92);
    for (int i = 0; i < 8; ++i) {
        Tensor x = Tensor::zeros({6});
        for (double& v : x.data) {
            v = rng.uniform01();
        }
        subset.inputs.push_back(std::move(x));
        subset.labels.push_back(static_cast<int>(rng.uniform_index(3)));
    }
    const ExplainFn model_blind = [](const MlpModel&, const Tensor& x, size_t) {
        return x;
    };
    const SanityResult result = sanity_randomization(model, model_blind, subset, 7);
    CHECK(result.mean_correlation == doctest::Approx(1.0));
    CHECK(result.excluded == 0);
}

TEST_CASE("metric report: mean and std are consistent with the scores") {
    const MetricReport report =
        MetricReport::from_scores("demo", {1.0, 2.0, 3.0, 4.0});
    CHECK(report.mean == doctest::Approx(2.5));
    CHECK(report.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
}

TEST_CASE("faithfulness is invariant under positive affine attribution maps") {
    MlpModel model = MlpModel::random({6, 10, 2}, 141);
    Rng rng(142);
    Tensor x = Tensor::zeros({6});
    Tensor attr = Tensor::zeros({6});
    for (size_t i = 0; i < 6; ++i) {
        x[i] = rng.uniform01();
        attr[i] = rng.uniform01();
    }
    Tensor mapped = attr;
    for (double& v : mapped.data) {
        v = 3.5 * v + 0.7;
    }
    FaithfulnessConfig cfg;
    cfg.subset_size = 2;
    cfg.iterations = 30;
    const double a = faithfulness_corr(model, x, 0, attr, cfg, 9);
    const double b = faithfulness_corr(model, x, 0, mapped, cfg, 9);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}
