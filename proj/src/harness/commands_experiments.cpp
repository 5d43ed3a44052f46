#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>

#include "context.hpp"
#include "emit.hpp"
#include "gnlab/errors.hpp"
#include "gnlab/metrics.hpp"
#include "gnlab/parallel.hpp"
#include "gnlab/rng.hpp"

namespace gnlab::harness {

namespace {

struct MethodSetup {
    EnhancerKind kind;
    double sigma_sg;
    double sigma_ng;
};

std::vector<MethodSetup> method_lineup(const NoiseLevels& noise) {
    return {{EnhancerKind::none, 0.0, 0.0},
            {EnhancerKind::sg, noise.sigma_sg, 0.0},
            {EnhancerKind::ng, 0.0, noise.sigma_ng},
            {EnhancerKind::fg, noise.fg_sigma_sg, noise.fg_sigma_ng}};
}

EnhancerConfig sample_config(const RunContext& ctx, const MethodSetup& setup,
                             size_t sample_index) {
    EnhancerConfig cfg = enhancer_base_config(ctx.config);
    cfg.sigma_sg = setup.sigma_sg;
    cfg.sigma_ng = setup.sigma_ng;
    cfg.base_seed = derive_seed(ctx.seed, stream::sample, sample_index);
    return cfg;
}

// Wilcoxon against the best method; infeasible tests (tiny n, identical
// scores) cannot flag a method as outperformed.
struct SignificanceCell {
    std::string p_text;
    bool not_outperformed;
};

SignificanceCell significance(const std::vector<double>& scores,
                              const std::vector<double>& best_scores, bool is_best) {
    if (is_best) {
        return {"", true};
    }
    try {
        const WilcoxonResult w = wilcoxon_signed_rank(scores, best_scores);
        return {fmt_full(w.p_two_sided), w.p_two_sided >= 0.05};
    } catch (const Error&) {
        return {"", true};
    }
}

double dataset_minimum(const Dataset& data) {
    double lo = data.inputs.front().min_value();
    for (const Tensor& x : data.inputs) {
        lo = std::min(lo, x.min_value());
    }
    return lo;
}

}  // namespace

void cmd_compare(RunContext& ctx) {
    DataBundle data = build_dataset(ctx);
    require(data.test.has_masks(), ErrorKind::config,
            "compare: localization needs a dataset with ground-truth masks");
    MlpModel model = resolve_model(ctx, data);
    const ExplainerSpec spec = explainer_from_config(ctx.config, data);
    const NoiseLevels noise = resolve_noise(ctx, model, data.test);
    const size_t n = std::min(ctx.config.get_size("compare", "samples", 128),
                              data.test.size());
    require(n >= 1, ErrorKind::config, "compare: no samples available");

    FaithfulnessConfig fcfg;
    fcfg.subset_size = std::min(ctx.config.get_size("metrics", "faithfulness_subset", 32),
                                data.test.input_dim());
    fcfg.iterations = ctx.config.get_size("metrics", "faithfulness_iterations", 100);
    fcfg.baseline_value = dataset_minimum(data.test);
    const double sens_radius =
        ctx.config.get_double("metrics", "sensitivity_radius", 0.2);
    const size_t sens_n = ctx.config.get_size("metrics", "sensitivity_n", 10);

    const std::vector<MethodSetup> methods = method_lineup(noise);
    const std::array<std::string, 4> metric_names{"localization", "faithfulness",
                                                  "robustness", "sparseness"};
    const std::array<bool, 4> higher_better{true, true, false, true};

    // scores[method][metric][sample]
    std::vector<std::array<std::vector<double>, 4>> scores(methods.size());
    std::vector<std::vector<AttributionRecord>> archives(methods.size());
    for (size_t m = 0; m < methods.size(); ++m) {
        for (auto& s : scores[m]) {
            s.assign(n, 0.0);
        }
        archives[m].resize(n);
    }

    for (size_t m = 0; m < methods.size(); ++m) {
        const MethodSetup& setup = methods[m];
        parallel_for(n, [&](size_t i) {
            const Tensor& x = data.test.inputs[i];
            const size_t cls = static_cast<size_t>(data.test.labels[i]);
            const EnhancerConfig cfg = sample_config(ctx, setup, i);
            const uint64_t sample_seed = cfg.base_seed;

            const Attribution attr = enhance(model, x, cls, spec, setup.kind, cfg);
            archives[m][i] = {attr, i, cls, x.shape};

            scores[m][0][i] = relevance_rank_accuracy(attr.values, data.test.masks[i]);
            scores[m][1][i] =
                faithfulness_corr(model, x, cls, attr.values, fcfg, sample_seed);
            const ExplainFn fn = [&spec, &setup, &cfg](const MlpModel& mm,
                                                       const Tensor& xx, size_t cc) {
                return enhance(mm, xx, cc, spec, setup.kind, cfg).values;
            };
            scores[m][2][i] =
                max_sensitivity(fn, model, x, cls, sens_radius, sens_n, sample_seed);
            scores[m][3][i] = gini_index(attr.values);
        });
    }

    CsvFile per_sample(ctx.path("per_sample_scores.csv"),
                       {"sample_id", "method", "enhancer", "metric", "score"});
    for (size_t m = 0; m < methods.size(); ++m) {
        for (size_t metric = 0; metric < 4; ++metric) {
            for (size_t i = 0; i < n; ++i) {
                per_sample.row({std::to_string(i), method_name(spec.method),
                                enhancer_name(methods[m].kind),
                                metric_names[metric],
                                fmt_full(scores[m][metric][i])});
            }
        }
    }
    per_sample.close();

    CsvFile summary(ctx.path("summary.csv"),
                    {"metric", "direction", "method", "enhancer", "mean", "std",
                     "p_vs_best", "not_outperformed"});
    for (size_t metric = 0; metric < 4; ++metric) {
        std::vector<MetricReport> reports;
        reports.reserve(methods.size());
        for (size_t m = 0; m < methods.size(); ++m) {
            reports.push_back(
                MetricReport::from_scores(metric_names[metric], scores[m][metric]));
        }
        size_t best = 0;
        for (size_t m = 1; m < methods.size(); ++m) {
            const bool beats = higher_better[metric]
                                   ? reports[m].mean > reports[best].mean
                                   : reports[m].mean < reports[best].mean;
            if (beats) {
                best = m;
            }
        }
        for (size_t m = 0; m < methods.size(); ++m) {
            const SignificanceCell cell =
                significance(scores[m][metric], scores[best][metric], m == best);
            summary.row({metric_names[metric], higher_better[metric] ? "up" : "down",
                         method_name(spec.method), enhancer_name(methods[m].kind),
                         fmt_fixed(reports[m].mean, 6), fmt_fixed(reports[m].stddev, 6),
                         cell.p_text, cell.not_outperformed ? "1" : "0"});
        }
    }
    summary.close();

    CsvFile noise_csv(ctx.path("noise.csv"), {"method", "sigma_sg", "sigma_ng"});
    for (const MethodSetup& setup : methods) {
        noise_csv.row({enhancer_name(setup.kind), fmt_full(setup.sigma_sg),
                       fmt_full(setup.sigma_ng)});
    }
    noise_csv.close();

    for (size_t m = 0; m < methods.size(); ++m) {
        std::ofstream archive(
            ctx.path("attributions_" + enhancer_name(methods[m].kind) + ".ngar"),
            std::ios::binary);
        require(archive.good(), ErrorKind::io, "cannot write attribution archive");
        for (const AttributionRecord& record : archives[m]) {
            append_attribution(archive, record);
        }
        require(archive.good(), ErrorKind::io, "attribution archive write failed");
    }
}

void cmd_sweep(RunContext& ctx) {
    DataBundle data = build_dataset(ctx);
    require(data.test.has_masks(), ErrorKind::config,
            "sweep: ranking AUC needs ground-truth masks");
    MlpModel model = resolve_model(ctx, data);
    const ExplainerSpec spec = explainer_from_config(ctx.config, data);
    const size_t n = std::min(ctx.config.get_size("sweep", "samples", 64),
                              data.test.size());
    require(n >= 1, ErrorKind::config, "sweep: no samples available");

    const std::vector<double> ng_grid =
        ctx.config.get_doubles("sweep", "sigma_ng_grid", {0.0, 0.05, 0.1, 0.2, 0.4});
    const std::vector<double> sg_grid =
        ctx.config.get_doubles("sweep", "sigma_sg_grid", {0.0, 0.05, 0.1, 0.2});

    auto mean_auc_at = [&](double sigma_ng, double sigma_sg) {
        std::vector<double> aucs(n, 0.0);
        parallel_for(n, [&](size_t i) {
            MethodSetup setup{EnhancerKind::fg, sigma_sg, sigma_ng};
            const EnhancerConfig cfg = sample_config(ctx, setup, i);
            const size_t cls = static_cast<size_t>(data.test.labels[i]);
            const Attribution attr =
                enhance(model, data.test.inputs[i], cls, spec, EnhancerKind::fg, cfg);
            aucs[i] = ranking_auc(attr.values, data.test.masks[i]);
        });
        double sum = 0.0;
        for (double a : aucs) {
            sum += a;
        }
        return sum / static_cast<double>(n);
    };

    // The (0,0) reference shares the evaluation path, so a grid cell at
    // (0,0) reproduces it bitwise and its dAUC is exactly zero.
    const double auc_baseline = mean_auc_at(0.0, 0.0);

    CsvFile csv(ctx.path("sweep.csv"), {"sigma_ng", "sigma_sg", "mean_auc", "d_auc"});
    std::vector<std::vector<double>> dauc(ng_grid.size(),
                                          std::vector<double>(sg_grid.size(), 0.0));
    for (size_t i = 0; i < ng_grid.size(); ++i) {
        for (size_t j = 0; j < sg_grid.size(); ++j) {
            const double auc = mean_auc_at(ng_grid[i], sg_grid[j]);
            dauc[i][j] = d_auc(auc, auc_baseline);
            csv.row({fmt_full(ng_grid[i]), fmt_full(sg_grid[j]), fmt_full(auc),
                     fmt_full(dauc[i][j])});
        }
    }
    csv.close();

    // Heatmap: blue negative, white zero, red positive.
    double peak = 1e-12;
    for (const auto& row : dauc) {
        for (double v : row) {
            peak = std::max(peak, std::fabs(v));
        }
    }
    const double cell = 48.0, margin = 60.0;
    SvgCanvas svg(margin + sg_grid.size() * cell + 20,
                  margin + ng_grid.size() * cell + 20);
    for (size_t i = 0; i < ng_grid.size(); ++i) {
        for (size_t j = 0; j < sg_grid.size(); ++j) {
            const double t = dauc[i][j] / peak;  // [-1, 1]
            const int other = static_cast<int>(std::lround(255.0 * (1.0 - std::fabs(t))));
            const std::string fill =
                t >= 0 ? "rgb(255," + std::to_string(other) + "," +
                             std::to_string(other) + ")"
                       : "rgb(" + std::to_string(other) + "," + std::to_string(other) +
                             ",255)";
            svg.rect(margin + j * cell, margin + i * cell, cell - 2, cell - 2, fill);
        }
        svg.text(6, margin + i * cell + cell / 2, "ng=" + fmt_fixed(ng_grid[i], 2), 10);
    }
    for (size_t j = 0; j < sg_grid.size(); ++j) {
        svg.text(margin + j * cell, margin - 8, "sg=" + fmt_fixed(sg_grid[j], 2), 10);
    }
    svg.text(6, 16, "relative AUC improvement vs (0,0)", 12);
    svg.write(ctx.path("sweep.svg"));
}

void cmd_heuristic_curve(RunContext& ctx) {
    DataBundle data = build_dataset(ctx);
    require(data.test.has_masks(), ErrorKind::config,
            "heuristic-curve: ranking AUC needs ground-truth masks");
    MlpModel model = resolve_model(ctx, data);
    const ExplainerSpec spec = explainer_from_config(ctx.config, data);
    const size_t n = std::min(ctx.config.get_size("heuristic", "samples", 64),
                              data.test.size());
    const double max_drop = ctx.config.get_double("heuristic", "max_drop", 0.5);
    require(n >= 1, ErrorKind::config, "heuristic-curve: no samples available");

    auto mean_auc_at = [&](double sigma_ng) {
        std::vector<double> aucs(n, 0.0);
        parallel_for(n, [&](size_t i) {
            MethodSetup setup{EnhancerKind::ng, 0.0, sigma_ng};
            const EnhancerConfig cfg = sample_config(ctx, setup, i);
            const size_t cls = static_cast<size_t>(data.test.labels[i]);
            const Attribution attr =
                enhance(model, data.test.inputs[i], cls, spec, EnhancerKind::ng, cfg);
            aucs[i] = ranking_auc(attr.values, data.test.masks[i]);
        });
        double sum = 0.0;
        for (double a : aucs) {
            sum += a;
        }
        return sum / static_cast<double>(n);
    };

    // Log-spaced sigmas, extended upward until the drop covers max_drop.
    std::vector<double> sigmas;
    sigmas.push_back(0.0);
    for (int g = 0; g < 10; ++g) {
        sigmas.push_back(1e-3 * std::pow(2.0 / 1e-3, g / 9.0));
    }
    struct Row {
        double sigma, acc, drop, auc;
    };
    std::vector<Row> rows;
    const double acc_clean = accuracy(model, data.test);
    const double chance = 1.0 / static_cast<double>(model.output_dim());
    auto evaluate = [&](double sigma) {
        const double acc = noisy_accuracy(model, data.test, 0.0, sigma, 10, ctx.seed);
        const double drop =
            sigma == 0.0 ? 0.0
                         : std::max(0.0, 1.0 - (acc - chance) / (acc_clean - chance));
        rows.push_back({sigma, acc, drop, mean_auc_at(sigma)});
        return drop;
    };
    double reached = 0.0;
    for (double sigma : sigmas) {
        reached = std::max(reached, evaluate(sigma));
    }
    double sigma = 2.0;
    while (reached < max_drop && sigma < 64.0) {
        sigma *= 2.0;
        reached = std::max(reached, evaluate(sigma));
    }

    size_t pick = 0;
    for (size_t i = 1; i < rows.size(); ++i) {
        if (std::fabs(rows[i].drop - 0.05) < std::fabs(rows[pick].drop - 0.05)) {
            pick = i;
        }
    }
    CsvFile csv(ctx.path("heuristic_curve.csv"),
                {"sigma_ng", "acc", "drop", "mean_auc", "heuristic_pick"});
    for (size_t i = 0; i < rows.size(); ++i) {
        csv.row({fmt_full(rows[i].sigma), fmt_full(rows[i].acc), fmt_full(rows[i].drop),
                 fmt_full(rows[i].auc), i == pick ? "1" : "0"});
    }
    csv.close();

    // AUC against drop, with the 5% heuristic line.
    const double w = 480, h = 320, ml = 50, mb = 40;
    double auc_lo = rows[0].auc, auc_hi = rows[0].auc;
    for (const Row& r : rows) {
        auc_lo = std::min(auc_lo, r.auc);
        auc_hi = std::max(auc_hi, r.auc);
    }
    const double pad = std::max(1e-6, 0.1 * (auc_hi - auc_lo));
    auc_lo -= pad;
    auc_hi += pad;
    auto sx = [&](double drop) { return ml + drop / 1.0 * (w - ml - 10); };
    auto sy = [&](double auc) {
        return (h - mb) - (auc - auc_lo) / (auc_hi - auc_lo) * (h - mb - 10);
    };
    SvgCanvas svg(w, h);
    svg.line(ml, h - mb, w - 10, h - mb, "black");
    svg.line(ml, h - mb, ml, 10, "black");
    svg.line(sx(0.05), h - mb, sx(0.05), 10, "gray");
    svg.text(sx(0.05) + 4, 20, "5% drop", 10);
    std::vector<Row> ordered = rows;
    std::sort(ordered.begin(), ordered.end(),
              [](const Row& a, const Row& b) { return a.drop < b.drop; });
    for (size_t i = 1; i < ordered.size(); ++i) {
        svg.line(sx(ordered[i - 1].drop), sy(ordered[i - 1].auc), sx(ordered[i].drop),
                 sy(ordered[i].auc), "steelblue", 1.5);
    }
    for (const Row& r : ordered) {
        svg.circle(sx(r.drop), sy(r.auc), 3, "steelblue");
    }
    svg.text(w / 2 - 40, h - 8, "accuracy drop", 11);
    svg.text(6, 10, "mean ranking AUC", 11);
    svg.write(ctx.path("heuristic_curve.svg"));
}

namespace {

// Signed gradient of the decision function logit_1 - logit_0; the toy
// figures visualize how noise moves it.
Tensor decision_gradient(const MlpModel& model, const Tensor& x) {
    Tensor g1 = grad_input(model, x, 1);
    const Tensor g0 = grad_input(model, x, 0);
    for (size_t i = 0; i < g1.size(); ++i) {
        g1[i] -= g0[i];
    }
    return g1;
}

struct Panel {
    double x0, y0, size;          // canvas placement
    double lo_x, lo_y, hi_x, hi_y;  // data window
    double px(double x) const { return x0 + (x - lo_x) / (hi_x - lo_x) * size; }
    double py(double y) const { return y0 + size - (y - lo_y) / (hi_y - lo_y) * size; }
};

void draw_points(SvgCanvas& svg, const Panel& panel, const Dataset& data) {
    for (size_t i = 0; i < data.size(); ++i) {
        svg.circle(panel.px(data.inputs[i][0]), panel.py(data.inputs[i][1]), 1.5,
                   data.labels[i] == 0 ? "orange" : "steelblue");
    }
}

}  // namespace

void cmd_toy(RunContext& ctx) {
    // The toy figures are specific to planar data.
    if (ctx.config.get_string("dataset", "kind", "toy_gauss") != "toy_gauss") {
        raise(ErrorKind::config, "toy: dataset.kind must be toy_gauss");
    }
    ctx.config.override_value("dataset", "kind", "toy_gauss");
    DataBundle data = build_dataset(ctx);
    MlpModel model = resolve_model(ctx, data);
    require(model.input_dim() == 2, ErrorKind::config, "toy: needs 2d inputs");

    const double sigma_sg =
        ctx.config.get_auto_double("enhancer", "sigma_sg")
            .value_or(sigma_sg_rule(data.test, ctx.config.get_double("enhancer",
                                                                     "alpha_sg", 0.2)));
    const double sigma_ng =
        ctx.config.get_auto_double("enhancer", "sigma_ng")
            .value_or(calibrate_ng(model, data.test,
                                   ctx.config.get_double("enhancer", "target_drop", 0.05),
                                   ctx.config.get_double("enhancer", "drop_tol", 0.01),
                                   ctx.seed)
                          .sigma);
    const EnhancerConfig base_cfg = enhancer_base_config(ctx.config);
    const size_t n_inputs = base_cfg.n_inputs;
    const size_t m_models = base_cfg.m_models;

    // Fixed test point: the test sample closest to the decision boundary
    // (smallest logit margin), unless pinned in the config.
    size_t point_index = 0;
    if (ctx.config.get_string("toy", "point", "auto") == "auto") {
        double best_margin = 1e300;
        for (size_t i = 0; i < data.test.size(); ++i) {
            const Tensor logits = forward(model, data.test.inputs[i]);
            const double margin = std::fabs(logits[1] - logits[0]);
            if (margin < best_margin) {
                best_margin = margin;
                point_index = i;
            }
        }
    } else {
        point_index = ctx.config.get_size("toy", "point", 0);
        require(point_index < data.test.size(), ErrorKind::config,
                "toy: point index out of range");
    }
    const Tensor& point = data.test.inputs[point_index];
    const size_t point_class = static_cast<size_t>(data.test.labels[point_index]);
    const uint64_t point_seed = derive_seed(ctx.seed, stream::sample, point_index);

    // (a) per-member explanation arrows at the fixed test point.
    struct Arrow {
        std::string method;
        std::string member;
        double dx, dy;
    };
    std::vector<Arrow> arrows;
    auto add_mean = [&](const std::string& method, size_t first) {
        double mx = 0.0, my = 0.0;
        size_t count = 0;
        for (size_t i = first; i < arrows.size(); ++i) {
            mx += arrows[i].dx;
            my += arrows[i].dy;
            ++count;
        }
        arrows.push_back({method, "mean", mx / static_cast<double>(count),
                          my / static_cast<double>(count)});
    };
    {
        const Tensor g = grad_input(model, point, point_class);
        arrows.push_back({"baseline", "0", g[0], g[1]});
        add_mean("baseline", arrows.size() - 1);
    }
    {
        const size_t first = arrows.size();
        for (size_t i = 0; i < n_inputs; ++i) {
            Tensor noisy = point;
            Rng rng = Rng::child(point_seed, stream::input_noise, i);
            for (double& v : noisy.data) {
                v += rng.normal(0.0, sigma_sg);
            }
            const Tensor g = grad_input(model, noisy, point_class);
            arrows.push_back({"sg", std::to_string(i), g[0], g[1]});
        }
        add_mean("sg", first);
    }
    {
        const size_t first = arrows.size();
        for (size_t i = 0; i < m_models; ++i) {
            const MlpModel perturbed = perturb_weights(
                model, sigma_ng, derive_seed(point_seed, stream::weight_noise, i));
            const Tensor g = grad_input(perturbed, point, point_class);
            arrows.push_back({"ng", std::to_string(i), g[0], g[1]});
        }
        add_mean("ng", first);
    }
    {
        const size_t first = arrows.size();
        for (size_t i = 0; i < m_models; ++i) {
            const MlpModel perturbed = perturb_weights(
                model, sigma_ng / 2.0,
                derive_seed(point_seed, stream::weight_noise, i));
            for (size_t j = 0; j < n_inputs; ++j) {
                Tensor noisy = point;
                Rng rng = Rng::child(point_seed, stream::input_noise, j);
                for (double& v : noisy.data) {
                    v += rng.normal(0.0, sigma_sg / 2.0);
                }
                const Tensor g = grad_input(perturbed, noisy, point_class);
                arrows.push_back({"fg", std::to_string(i * n_inputs + j), g[0], g[1]});
            }
        }
        add_mean("fg", first);
    }
    CsvFile arrows_csv(ctx.path("toy_arrows.csv"),
                       {"method", "member", "origin_x", "origin_y", "dx", "dy"});
    for (const Arrow& a : arrows) {
        arrows_csv.row({a.method, a.member, fmt_full(point[0]), fmt_full(point[1]),
                        fmt_full(a.dx), fmt_full(a.dy)});
    }
    arrows_csv.close();

    // (b)+(c) gradient fields over a grid: baseline, SG-averaged and
    // NG-averaged decision gradients.
    const size_t grid = ctx.config.get_size("toy", "grid", 12);
    double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
    for (const Tensor& x : data.train.inputs) {
        lo_x = std::min(lo_x, x[0]);
        hi_x = std::max(hi_x, x[0]);
        lo_y = std::min(lo_y, x[1]);
        hi_y = std::max(hi_y, x[1]);
    }
    const double pad_x = 0.05 * (hi_x - lo_x), pad_y = 0.05 * (hi_y - lo_y);
    lo_x -= pad_x;
    hi_x += pad_x;
    lo_y -= pad_y;
    hi_y += pad_y;

    std::vector<MlpModel> field_models;
    for (size_t i = 0; i < m_models; ++i) {
        field_models.push_back(perturb_weights(
            model, sigma_ng, derive_seed(ctx.seed, stream::weight_noise, i)));
    }

    struct FieldRow {
        double x, y;
        double base_dx, base_dy, sg_dx, sg_dy, ng_dx, ng_dy;
    };
    std::vector<FieldRow> field(grid * grid);
    parallel_for(grid * grid, [&](size_t cell) {
        const size_t gi = cell / grid, gj = cell % grid;
        const double fx = lo_x + (hi_x - lo_x) * (static_cast<double>(gj) + 0.5) /
                                     static_cast<double>(grid);
        const double fy = lo_y + (hi_y - lo_y) * (static_cast<double>(gi) + 0.5) /
                                     static_cast<double>(grid);
        const Tensor x = Tensor::vector({fx, fy});
        FieldRow row{};
        row.x = fx;
        row.y = fy;
        {
            const Tensor g = decision_gradient(model, x);
            row.base_dx = g[0];
            row.base_dy = g[1];
        }
        {
            double sx = 0.0, sy = 0.0;
            const uint64_t cell_seed = derive_seed(ctx.seed, stream::sample, cell);
            for (size_t i = 0; i < n_inputs; ++i) {
                Tensor noisy = x;
                Rng rng = Rng::child(cell_seed, stream::input_noise, i);
                for (double& v : noisy.data) {
                    v += rng.normal(0.0, sigma_sg);
                }
                const Tensor g = decision_gradient(model, noisy);
                sx += g[0];
                sy += g[1];
            }
            row.sg_dx = sx / static_cast<double>(n_inputs);
            row.sg_dy = sy / static_cast<double>(n_inputs);
        }
        {
            double sx = 0.0, sy = 0.0;
            for (const MlpModel& pm : field_models) {
                const Tensor g = decision_gradient(pm, x);
                sx += g[0];
                sy += g[1];
            }
            row.ng_dx = sx / static_cast<double>(field_models.size());
            row.ng_dy = sy / static_cast<double>(field_models.size());
        }
        field[cell] = row;
    });
    CsvFile field_csv(ctx.path("toy_field.csv"),
                      {"x", "y", "base_dx", "base_dy", "sg_dx", "sg_dy", "ng_dx",
                       "ng_dy"});
    for (const FieldRow& r : field) {
        field_csv.row({fmt_full(r.x), fmt_full(r.y), fmt_full(r.base_dx),
                       fmt_full(r.base_dy), fmt_full(r.sg_dx), fmt_full(r.sg_dy),
                       fmt_full(r.ng_dx), fmt_full(r.ng_dy)});
    }
    field_csv.close();

    // Boundary-crossing check: how many of the perturbed models classify the
    // fixed test point differently from the clean model.
    size_t crossings = 0;
    const size_t clean_prediction = predict_class(model, point);
    for (const MlpModel& pm : field_models) {
        if (predict_class(pm, point) != clean_prediction) {
            ++crossings;
        }
    }
    CsvFile summary(ctx.path("toy_summary.csv"),
                    {"point_index", "point_x", "point_y", "label", "sigma_sg",
                     "sigma_ng", "m_models", "boundary_crossings"});
    summary.row({std::to_string(point_index), fmt_full(point[0]), fmt_full(point[1]),
                 std::to_string(point_class), fmt_full(sigma_sg), fmt_full(sigma_ng),
                 std::to_string(m_models), std::to_string(crossings)});
    summary.close();

    // Figures. Arrow lengths are normalized per panel.
    {
        const double size = 220, gap = 30;
        SvgCanvas svg(4 * size + 5 * gap, size + 2 * gap + 20);
        const std::array<std::string, 4> order{"baseline", "sg", "ng", "fg"};
        for (size_t p = 0; p < order.size(); ++p) {
            Panel panel{gap + p * (size + gap), gap, size, lo_x, lo_y, hi_x, hi_y};
            draw_points(svg, panel, data.train);
            double longest = 1e-12;
            for (const Arrow& a : arrows) {
                if (a.method == order[p]) {
                    longest = std::max(longest, std::hypot(a.dx, a.dy));
                }
            }
            const double scale = 0.22 * size / longest;
            for (const Arrow& a : arrows) {
                if (a.method != order[p]) {
                    continue;
                }
                const bool mean = a.member == "mean";
                svg.arrow(panel.px(point[0]), panel.py(point[1]),
                          panel.px(point[0]) + a.dx * scale,
                          panel.py(point[1]) - a.dy * scale, mean ? "black" : "gray",
                          mean ? 2.5 : 1.0);
            }
            svg.circle(panel.px(point[0]), panel.py(point[1]), 4, "red");
            svg.text(panel.x0, gap - 8, order[p], 12);
        }
        svg.write(ctx.path("toy_arrows.svg"));
    }
    {
        const double size = 260, gap = 34;
        SvgCanvas svg(3 * size + 4 * gap, size + 2 * gap + 20);
        const std::array<std::string, 3> titles{"baseline gradient", "smoothgrad",
                                                "noisegrad"};
        double longest = 1e-12;
        for (const FieldRow& r : field) {
            longest = std::max({longest, std::hypot(r.base_dx, r.base_dy),
                                std::hypot(r.sg_dx, r.sg_dy),
                                std::hypot(r.ng_dx, r.ng_dy)});
        }
        for (size_t p = 0; p < 3; ++p) {
            Panel panel{gap + p * (size + gap), gap, size, lo_x, lo_y, hi_x, hi_y};
            draw_points(svg, panel, data.train);
            const double scale = (size / static_cast<double>(grid)) * 0.8 / longest;
            for (const FieldRow& r : field) {
                const double dx = p == 0 ? r.base_dx : (p == 1 ? r.sg_dx : r.ng_dx);
                const double dy = p == 0 ? r.base_dy : (p == 1 ? r.sg_dy : r.ng_dy);
                svg.arrow(panel.px(r.x), panel.py(r.y), panel.px(r.x) + dx * scale,
                          panel.py(r.y) - dy * scale, "black", 0.8);
            }
            svg.text(panel.x0, gap - 8, titles[p], 12);
        }
        svg.write(ctx.path("toy_field.svg"));
    }
}

}  // namespace gnlab::harness
