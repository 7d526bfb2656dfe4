#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "exad/dataset.hpp"
#include "exad/explain.hpp"
#include "exad/forest.hpp"
#include "exad/metrics.hpp"
#include "exad/parallel.hpp"

namespace exad {

// ---------------------------------------------------------------------------
// Feature-selection proxy: how fast does detection quality decay when
// features are removed in ranking order?

struct FeatureSelectionCurves {
    std::vector<std::size_t> ranking;      // input ranking, most important first
    std::vector<std::size_t> random_order; // seeded drop order of the random baseline
    // p entries each: average precision *before* the i-th drop, so entry 0 is
    // the full feature set and the last entry a single surviving feature.
    std::vector<double> direct;  // drops the most important feature first
    std::vector<double> inverse; // drops the least important feature first
    std::vector<double> random;  // drops in random_order
};

namespace detail {

inline void check_ranking(const std::vector<std::size_t>& ranking, std::size_t p) {
    if (ranking.size() != p)
        throw std::invalid_argument("feature ranking must name every feature exactly once");
    std::vector<bool> seen(p, false);
    for (std::size_t f : ranking) {
        if (f >= p || seen[f])
            throw std::invalid_argument("feature ranking is not a permutation");
        seen[f] = true;
    }
}

} // namespace detail

inline constexpr std::uint64_t kRandomCurveStream = 0x52414e44; // salt for the baseline order

/// Evaluates the three drop curves. At step i the features dropped so far are
/// removed, a fresh evaluator forest is fitted on the scenario split of the
/// reduced data, and average precision is measured on the full reduced
/// dataset. The per-step fit/split seeds depend on (seed, step) only — not on
/// which curve is being evaluated — so reversing the ranking swaps the direct
/// and inverse curves exactly.
inline FeatureSelectionCurves feature_selection_curves(
    const Dataset& ds, const std::vector<std::size_t>& ranking, const ForestConfig& evaluator,
    Scenario scenario = Scenario::inliers_only, double level = 0.0, std::uint64_t seed = 0,
    std::size_t threads = 1) {
    if (!ds.labeled())
        throw std::invalid_argument("feature_selection_curves: dataset must be labeled");
    const std::size_t p = ds.p();
    detail::check_ranking(ranking, p);

    FeatureSelectionCurves out;
    out.ranking = ranking;
    out.random_order.resize(p);
    std::iota(out.random_order.begin(), out.random_order.end(), std::size_t{0});
    {
        Rng rng(derive_seed(seed, kRandomCurveStream));
        for (std::size_t i = p; i > 1; --i)
            std::swap(out.random_order[i - 1], out.random_order[rng.uniform_index(i)]);
    }

    std::vector<std::size_t> inverse_order(ranking.rbegin(), ranking.rend());
    const std::vector<const std::vector<std::size_t>*> orders = {&ranking, &inverse_order,
                                                                 &out.random_order};
    out.direct.assign(p, 0.0);
    out.inverse.assign(p, 0.0);
    out.random.assign(p, 0.0);
    std::vector<std::vector<double>*> curves = {&out.direct, &out.inverse, &out.random};

    parallel_for(3 * p, threads, [&](std::size_t cell) {
        const std::size_t which = cell / p;
        const std::size_t step = cell % p;
        const auto& drop_order = *orders[which];

        std::vector<bool> dropped(p, false);
        for (std::size_t k = 0; k < step; ++k) dropped[drop_order[k]] = true;
        std::vector<std::size_t> surviving;
        for (std::size_t j = 0; j < p; ++j)
            if (!dropped[j]) surviving.push_back(j);

        const Dataset reduced = ds.select_features(surviving);
        const std::uint64_t step_seed = derive_seed(seed, step);
        const auto split = split_scenario(reduced, scenario, level, derive_seed(step_seed, 0));
        ForestConfig cfg = evaluator;
        cfg.seed = derive_seed(step_seed, 1);
        const Forest forest = fit(split.train, cfg, 1);
        (*curves[which])[step] = average_precision(anomaly_scores(forest, reduced, 1), ds.labels);
    });
    return out;
}

/// Area between the curves (trapezoid over unit steps): positive when
/// dropping the allegedly unimportant features first preserves precision
/// better than dropping the important ones, i.e. when the ranking is
/// informative. Bounded by ±(p-1) for precision in [0, 1].
inline double auc_fs(const std::vector<double>& direct, const std::vector<double>& inverse) {
    if (direct.size() != inverse.size())
        throw std::invalid_argument("auc_fs: curves must have equal length");
    if (direct.empty()) throw std::invalid_argument("auc_fs: empty curves");
    return trapezoid(inverse) - trapezoid(direct);
}

inline double auc_fs(const FeatureSelectionCurves& curves) {
    return auc_fs(curves.direct, curves.inverse);
}

// ---------------------------------------------------------------------------
// Faithfulness of local importances

/// Pearson correlation between the per-point sum of local importances and
/// the anomaly score — a faithful explainer assigns more total importance to
/// points the model finds more anomalous.
inline double lfi_score_correlation(const Forest& forest, const Dataset& ds,
                                    VMode vmode = VMode::absolute, std::size_t threads = 1) {
    const Matrix lfi = exiffi_lfi(forest, ds, vmode, threads);
    std::vector<double> totals(ds.n(), 0.0);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const auto row = lfi.row(i);
        for (double v : row) totals[i] += v;
    }
    return pearson_correlation(totals, anomaly_scores(forest, ds, threads));
}

// ---------------------------------------------------------------------------
// Contamination sweep

struct SweepCell {
    std::string dataset;
    std::string model;
    double level = 0.0;
    std::vector<double> ap_per_seed;
    double ap_mean = 0.0;
    double ap_std = 0.0; // population std over seeds
};

/// For every (model config, contamination level, seed): rebuild the training
/// set with that much contamination, fit, and measure average precision on
/// the full dataset. Seeds are derived per cell from each config's own seed.
inline std::vector<SweepCell> contamination_sweep(const Dataset& ds,
                                                  const std::vector<ForestConfig>& configs,
                                                  const std::vector<double>& levels,
                                                  std::size_t n_seeds, std::size_t threads = 1) {
    if (!ds.labeled()) throw std::invalid_argument("contamination_sweep: dataset must be labeled");
    if (configs.empty() || levels.empty() || n_seeds == 0)
        throw std::invalid_argument("contamination_sweep: nothing to evaluate");

    const std::size_t cells = configs.size() * levels.size();
    std::vector<SweepCell> table(cells);
    std::vector<double> ap(cells * n_seeds, 0.0);

    parallel_for(cells * n_seeds, threads, [&](std::size_t flat) {
        const std::size_t cell = flat / n_seeds;
        const std::size_t k = flat % n_seeds;
        const auto& config = configs[cell / levels.size()];
        const double level = levels[cell % levels.size()];

        const auto split = split_scenario(ds, Scenario::contaminated, level,
                                          derive_seed(config.seed, 2 * k));
        ForestConfig cfg = config;
        cfg.seed = derive_seed(config.seed, 2 * k + 1);
        const Forest forest = fit(split.train, cfg, 1);
        ap[flat] = average_precision(anomaly_scores(forest, ds, 1), ds.labels);
    });

    for (std::size_t cell = 0; cell < cells; ++cell) {
        auto& row = table[cell];
        row.dataset = ds.name;
        row.model = to_string(configs[cell / levels.size()].model);
        row.level = levels[cell % levels.size()];
        row.ap_per_seed.assign(ap.begin() + static_cast<std::ptrdiff_t>(cell * n_seeds),
                               ap.begin() + static_cast<std::ptrdiff_t>((cell + 1) * n_seeds));
        for (double v : row.ap_per_seed) row.ap_mean += v;
        row.ap_mean /= static_cast<double>(n_seeds);
        for (double v : row.ap_per_seed) row.ap_std += (v - row.ap_mean) * (v - row.ap_mean);
        row.ap_std = std::sqrt(row.ap_std / static_cast<double>(n_seeds));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Wall-time scaling

struct TimingCell {
    std::size_t n = 0, p = 0;
    double fit_seconds = 0.0;
    double score_seconds = 0.0;
    double importance_seconds = 0.0; // batch local importance over the dataset
};

/// Median-of-3 wall times on standard-normal data of the requested shapes.
inline std::vector<TimingCell> timing_benchmark(const std::vector<std::pair<std::size_t, std::size_t>>& shapes,
                                                const ForestConfig& config,
                                                std::size_t threads = 1) {
    auto median3 = [](std::array<double, 3> v) {
        std::sort(v.begin(), v.end());
        return v[1];
    };
    std::vector<TimingCell> out;
    for (std::size_t c = 0; c < shapes.size(); ++c) {
        const auto [n, p] = shapes[c];
        if (n < 2 || p < 1) throw std::invalid_argument("timing_benchmark: shape too small");
        Dataset ds;
        ds.name = "gaussian";
        ds.X = Matrix(n, p);
        Rng rng(derive_seed(config.seed, c));
        for (double& v : ds.X.data) v = rng.normal();
        for (std::size_t j = 0; j < p; ++j)
            ds.feature_names.push_back("feature_" + std::to_string(j));

        TimingCell cell;
        cell.n = n;
        cell.p = p;
        std::array<double, 3> fit_t{}, score_t{}, imp_t{};
        for (int rep = 0; rep < 3; ++rep) {
            using clock = std::chrono::steady_clock;
            auto t0 = clock::now();
            const Forest forest = fit(ds, config, threads);
            auto t1 = clock::now();
            volatile double sink = 0.0;
            const auto scores = anomaly_scores(forest, ds, threads);
            sink = sink + scores[0];
            auto t2 = clock::now();
            const Matrix lfi = exiffi_lfi(forest, ds, VMode::absolute, threads);
            sink = sink + lfi(0, 0);
            auto t3 = clock::now();
            (void)sink;
            fit_t[rep] = std::chrono::duration<double>(t1 - t0).count();
            score_t[rep] = std::chrono::duration<double>(t2 - t1).count();
            imp_t[rep] = std::chrono::duration<double>(t3 - t2).count();
        }
        cell.fit_seconds = median3(fit_t);
        cell.score_seconds = median3(score_t);
        cell.importance_seconds = median3(imp_t);
        out.push_back(cell);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-model detection metrics

struct ModelMetrics {
    double average_precision = 0.0;
    double precision = 0.0;
    double roc_auc = 0.0;
    double fit_seconds = 0.0;
    double score_seconds = 0.0;
};

struct EvaluationReport {
    std::string dataset;
    std::string scenario;
    std::vector<std::pair<std::string, ModelMetrics>> per_model;
};

/// AP / precision-at-contamination / ROC-AUC of precomputed scores.
inline ModelMetrics evaluate_scores(const std::vector<double>& scores,
                                    const std::vector<int>& labels, double contamination) {
    ModelMetrics m;
    m.average_precision = average_precision(scores, labels);
    m.precision = precision_at_contamination(scores, labels, contamination);
    m.roc_auc = roc_auc(scores, labels);
    return m;
}

} // namespace exad
