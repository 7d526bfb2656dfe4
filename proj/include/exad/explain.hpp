#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "exad/forest.hpp"

namespace exad {

/// How the normalization accumulator V treats the split normal: magnitudes
/// (the default) or raw signed components (kept for comparison studies; can
/// cancel to zero, in which case the affected ratio is defined as 0).
enum class VMode { absolute, signed_sum };

/// Per-feature importance a single internal node contributes to a point that
/// falls on the side holding `side_count` of the node's `size` training
/// points: (size / side_count) * |v| componentwise. Small side => rare,
/// isolating move => large weight. An empty side counts as 1.
inline std::vector<double> node_lambda(const SplitPlane& plane, std::size_t size,
                                       std::size_t side_count) {
    const double ratio =
        static_cast<double>(size) / static_cast<double>(std::max<std::size_t>(side_count, 1));
    std::vector<double> lambda(plane.normal.size());
    for (std::size_t j = 0; j < lambda.size(); ++j) lambda[j] = ratio * std::abs(plane.normal[j]);
    return lambda;
}

/// Convenience overload addressing a node inside a tree; `x_left` is the side
/// the explained point takes.
inline std::vector<double> node_lambda(const IsolationTree& tree, std::size_t node, bool x_left) {
    const auto& n = tree.nodes[node];
    if (n.is_leaf()) throw std::invalid_argument("node_lambda: leaf nodes have no split");
    return node_lambda(n.plane, n.size, x_left ? tree.left_size(node) : tree.right_size(node));
}

struct PointImportance {
    std::vector<double> importance;   // I(x): summed node contributions
    std::vector<double> normalizer;   // V(x): summed normal components
};

/// Walks x through every tree, accumulating I(x) (node_lambda at each split
/// taken) and V(x) (the |v| — or signed v — of those splits).
inline PointImportance exiffi_point(const Forest& forest, std::span<const double> x,
                                    VMode vmode = VMode::absolute) {
    if (x.size() != forest.p)
        throw std::invalid_argument("exiffi_point: point dimension differs from the model's");
    PointImportance out;
    out.importance.assign(forest.p, 0.0);
    out.normalizer.assign(forest.p, 0.0);
    for (const auto& tree : forest.trees) {
        std::size_t node = 0;
        while (!tree.nodes[node].is_leaf()) {
            const auto& n = tree.nodes[node];
            const bool x_left = n.plane.goes_left(x);
            const std::size_t side = x_left ? tree.left_size(node) : tree.right_size(node);
            const double ratio = static_cast<double>(n.size) /
                                 static_cast<double>(std::max<std::size_t>(side, 1));
            for (std::size_t j = 0; j < forest.p; ++j) {
                const double v = n.plane.normal[j];
                out.importance[j] += ratio * std::abs(v);
                out.normalizer[j] += vmode == VMode::absolute ? std::abs(v) : v;
            }
            node = static_cast<std::size_t>(x_left ? n.left : n.right);
        }
    }
    return out;
}

namespace detail {
/// Componentwise a/b with 0 wherever the denominator is 0.
inline std::vector<double> safe_ratio(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size(), 0.0);
    for (std::size_t j = 0; j < a.size(); ++j)
        if (b[j] != 0.0) out[j] = a[j] / b[j];
    return out;
}
} // namespace detail

/// Local feature importance per row: LFI = I(x) / V(x) componentwise.
inline Matrix exiffi_lfi(const Forest& forest, const Dataset& ds, VMode vmode = VMode::absolute,
                         std::size_t threads = 1) {
    Matrix lfi(ds.n(), forest.p);
    parallel_for(ds.n(), threads, [&](std::size_t i) {
        const auto pt = exiffi_point(forest, ds.X.row(i), vmode);
        const auto row = detail::safe_ratio(pt.importance, pt.normalizer);
        std::copy(row.begin(), row.end(), lfi.row(i).data());
    });
    return lfi;
}

/// Global feature importance: the forest's own predictions split the data
/// into outliers O (top round(contamination * n) scores) and inliers I, and
/// GFI = (sum_O I / sum_O V) / (sum_I I / sum_I V) componentwise.
inline std::vector<double> exiffi_gfi(const Forest& forest, const Dataset& ds,
                                      double contamination, VMode vmode = VMode::absolute,
                                      std::size_t threads = 1) {
    const auto labels = predict_labels(forest, ds, contamination, threads);
    const std::size_t n_out = static_cast<std::size_t>(
        std::count(labels.begin(), labels.end(), 1));
    if (n_out == 0 || n_out == ds.n())
        throw std::invalid_argument(
            "exiffi_gfi: contamination " + format_double(contamination) +
            " predicts an empty outlier or inlier class");

    Matrix imp(ds.n(), forest.p), norm(ds.n(), forest.p);
    parallel_for(ds.n(), threads, [&](std::size_t i) {
        const auto pt = exiffi_point(forest, ds.X.row(i), vmode);
        std::copy(pt.importance.begin(), pt.importance.end(), imp.row(i).data());
        std::copy(pt.normalizer.begin(), pt.normalizer.end(), norm.row(i).data());
    });

    std::vector<double> i_out(forest.p, 0.0), v_out(forest.p, 0.0);
    std::vector<double> i_in(forest.p, 0.0), v_in(forest.p, 0.0);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        auto& isum = labels[i] == 1 ? i_out : i_in;
        auto& vsum = labels[i] == 1 ? v_out : v_in;
        for (std::size_t j = 0; j < forest.p; ++j) {
            isum[j] += imp(i, j);
            vsum[j] += norm(i, j);
        }
    }
    return detail::safe_ratio(detail::safe_ratio(i_out, v_out), detail::safe_ratio(i_in, v_in));
}

// ---------------------------------------------------------------------------
// Axis-aligned (depth-weighted imbalance) explainer

/// Imbalance credit of an axis-aligned split with child counts n_left /
/// n_right: 0 when a side is empty, otherwise max/n mapped affinely from
/// [ceil(n/2)/n, (n-1)/n] onto [0.5, 1]. The degenerate n = 2, 3 cases
/// (range collapses to a point) score 0.5.
inline double diffi_node_lambda(std::size_t n_left, std::size_t n_right) {
    if (n_left == 0 || n_right == 0) return 0.0;
    const double n = static_cast<double>(n_left + n_right);
    const double a = static_cast<double>(std::max(n_left, n_right)) / n;
    const double lo = std::ceil(n / 2.0) / n;
    const double hi = (n - 1.0) / n;
    if (hi == lo) return 0.5;
    return (a - lo) / (2.0 * (hi - lo)) + 0.5;
}

/// Global feature importance for axis-aligned forests: every split on a
/// point's path credits its feature with imbalance / path length, and the
/// outlier class total is divided by the inlier class total per feature.
inline std::vector<double> diffi_gfi(const Forest& forest, const Dataset& ds, double contamination,
                                     std::size_t threads = 1) {
    if (forest.config.model != ModelKind::iforest)
        throw std::invalid_argument("diffi_gfi: requires an axis-aligned (if) model");
    const auto labels = predict_labels(forest, ds, contamination, threads);
    const std::size_t n_out = static_cast<std::size_t>(
        std::count(labels.begin(), labels.end(), 1));
    if (n_out == 0 || n_out == ds.n())
        throw std::invalid_argument(
            "diffi_gfi: contamination " + format_double(contamination) +
            " predicts an empty outlier or inlier class");

    Matrix imp(ds.n(), forest.p), cnt(ds.n(), forest.p);
    parallel_for(ds.n(), threads, [&](std::size_t i) {
        const auto x = ds.X.row(i);
        auto irow = imp.row(i);
        auto crow = cnt.row(i);
        for (const auto& tree : forest.trees) {
            const double h = std::max(depth_h(tree, x), 1.0);
            std::size_t node = 0;
            while (!tree.nodes[node].is_leaf()) {
                const auto& nd = tree.nodes[node];
                const auto axis = nd.plane.one_hot_axis();
                if (!axis)
                    throw std::invalid_argument("diffi_gfi: tree contains an oblique split");
                irow[*axis] += diffi_node_lambda(tree.left_size(node), tree.right_size(node)) / h;
                crow[*axis] += 1.0;
                node = static_cast<std::size_t>(nd.plane.goes_left(x) ? nd.left : nd.right);
            }
        }
    });

    std::vector<double> i_out(forest.p, 0.0), c_out(forest.p, 0.0);
    std::vector<double> i_in(forest.p, 0.0), c_in(forest.p, 0.0);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        auto& isum = labels[i] == 1 ? i_out : i_in;
        auto& csum = labels[i] == 1 ? c_out : c_in;
        for (std::size_t j = 0; j < forest.p; ++j) {
            isum[j] += imp(i, j);
            csum[j] += cnt(i, j);
        }
    }
    return detail::safe_ratio(detail::safe_ratio(i_out, c_out), detail::safe_ratio(i_in, c_in));
}

// ---------------------------------------------------------------------------
// Aggregation over refits

enum class ExplainerKind { exiffi, diffi };

inline std::string to_string(ExplainerKind e) {
    return e == ExplainerKind::exiffi ? "exiffi" : "diffi";
}

inline ExplainerKind parse_explainer(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (text == "exiffi") return ExplainerKind::exiffi;
    if (text == "diffi") return ExplainerKind::diffi;
    throw std::invalid_argument("unknown explainer '" + text + "' (expected exiffi or diffi)");
}

struct GfiReport {
    std::string explainer;
    std::vector<std::string> feature_names;
    std::size_t n_runs = 0;
    Matrix per_run;                         // n_runs x p raw importances
    std::vector<double> mean;               // per feature
    std::vector<double> stdev;              // population std over runs
    std::vector<std::vector<std::size_t>> rank_histogram; // [feature][rank] counts
    std::vector<std::size_t> ranking;       // features by mean desc, ties by index
};

/// Refits the forest n_runs times (run k gets seed derive_seed(config.seed,
/// k)), computes a global importance per run, and aggregates mean, spread
/// and where each feature lands in the per-run rankings. Each histogram row
/// sums to n_runs.
inline GfiReport gfi_over_runs(const Dataset& ds, const ForestConfig& config,
                               ExplainerKind explainer, std::size_t n_runs, double contamination,
                               VMode vmode = VMode::absolute, std::size_t threads = 1) {
    if (n_runs == 0) throw std::invalid_argument("gfi_over_runs: n_runs must be >= 1");
    if (explainer == ExplainerKind::diffi && config.model != ModelKind::iforest)
        throw std::invalid_argument("gfi_over_runs: diffi requires an axis-aligned (if) model");

    GfiReport report;
    report.explainer = to_string(explainer);
    report.feature_names = ds.feature_names;
    report.n_runs = n_runs;
    report.per_run = Matrix(n_runs, ds.p());

    parallel_for(n_runs, threads, [&](std::size_t k) {
        ForestConfig run_config = config;
        run_config.seed = derive_seed(config.seed, k);
        const Forest forest = fit(ds, run_config, 1);
        const auto gfi = explainer == ExplainerKind::exiffi
                             ? exiffi_gfi(forest, ds, contamination, vmode, 1)
                             : diffi_gfi(forest, ds, contamination, 1);
        std::copy(gfi.begin(), gfi.end(), report.per_run.row(k).data());
    });

    const std::size_t p = ds.p();
    report.mean.assign(p, 0.0);
    report.stdev.assign(p, 0.0);
    report.rank_histogram.assign(p, std::vector<std::size_t>(p, 0));
    for (std::size_t k = 0; k < n_runs; ++k) {
        const auto run = report.per_run.row(k);
        for (std::size_t j = 0; j < p; ++j) report.mean[j] += run[j];
        const auto order = ranked_indices(std::vector<double>(run.begin(), run.end()));
        for (std::size_t r = 0; r < p; ++r) report.rank_histogram[order[r]][r] += 1;
    }
    for (std::size_t j = 0; j < p; ++j) report.mean[j] /= static_cast<double>(n_runs);
    for (std::size_t k = 0; k < n_runs; ++k)
        for (std::size_t j = 0; j < p; ++j) {
            const double d = report.per_run(k, j) - report.mean[j];
            report.stdev[j] += d * d;
        }
    for (std::size_t j = 0; j < p; ++j)
        report.stdev[j] = std::sqrt(report.stdev[j] / static_cast<double>(n_runs));
    report.ranking = ranked_indices(report.mean);
    return report;
}

// ---------------------------------------------------------------------------
// Local importance maps

struct ScoremapGrid {
    std::size_t feat_i = 0, feat_j = 0, resolution = 0;
    std::vector<double> xs, ys;   // grid coordinates along feat_i / feat_j
    // Row-major over (y, x): index yi * resolution + xi.
    std::vector<int> winner;      // feat_i or feat_j, whichever LFI is larger
    std::vector<double> magnitude; // the winning LFI value
    std::vector<double> score;    // anomaly score at the grid point
};

/// Evaluates local importance on a 2-D slice: all other features pinned at
/// the dataset mean, feat_i / feat_j swept over their padded ranges. padding
/// is a fraction of each feature's range.
inline ScoremapGrid scoremap_grid(const Forest& forest, const Dataset& ds, std::size_t feat_i,
                                  std::size_t feat_j, std::size_t resolution, double padding = 0.1,
                                  VMode vmode = VMode::absolute, std::size_t threads = 1) {
    if (feat_i >= ds.p() || feat_j >= ds.p() || feat_i == feat_j)
        throw std::invalid_argument("scoremap_grid: need two distinct valid feature indices");
    if (resolution < 2) throw std::invalid_argument("scoremap_grid: resolution must be >= 2");
    if (padding < 0.0) throw std::invalid_argument("scoremap_grid: padding must be >= 0");
    if (ds.p() != forest.p)
        throw std::invalid_argument("scoremap_grid: dataset dimension differs from the model's");

    std::vector<double> base(ds.p(), 0.0);
    for (std::size_t i = 0; i < ds.n(); ++i)
        for (std::size_t j = 0; j < ds.p(); ++j) base[j] += ds.X(i, j);
    for (double& v : base) v /= static_cast<double>(ds.n());

    auto axis = [&](std::size_t feat) {
        double lo = ds.X(0, feat), hi = lo;
        for (std::size_t i = 1; i < ds.n(); ++i) {
            lo = std::min(lo, ds.X(i, feat));
            hi = std::max(hi, ds.X(i, feat));
        }
        const double pad = padding * (hi - lo);
        std::vector<double> ticks(resolution);
        const double start = lo - pad, span = (hi + pad) - start;
        for (std::size_t k = 0; k < resolution; ++k)
            ticks[k] = start + span * static_cast<double>(k) / static_cast<double>(resolution - 1);
        return ticks;
    };

    ScoremapGrid grid;
    grid.feat_i = feat_i;
    grid.feat_j = feat_j;
    grid.resolution = resolution;
    grid.xs = axis(feat_i);
    grid.ys = axis(feat_j);
    grid.winner.assign(resolution * resolution, 0);
    grid.magnitude.assign(resolution * resolution, 0.0);
    grid.score.assign(resolution * resolution, 0.0);

    parallel_for(resolution * resolution, threads, [&](std::size_t cell) {
        const std::size_t yi = cell / resolution, xi = cell % resolution;
        std::vector<double> x = base;
        x[feat_i] = grid.xs[xi];
        x[feat_j] = grid.ys[yi];
        const auto pt = exiffi_point(forest, x, vmode);
        const auto lfi = detail::safe_ratio(pt.importance, pt.normalizer);
        const bool i_wins = lfi[feat_i] >= lfi[feat_j];
        grid.winner[cell] = static_cast<int>(i_wins ? feat_i : feat_j);
        grid.magnitude[cell] = i_wins ? lfi[feat_i] : lfi[feat_j];
        grid.score[cell] = anomaly_score(forest, x);
    });
    return grid;
}

struct DepthProfile {
    std::vector<double> mean_l1;        // mean ||node_lambda||_1 per node depth
    std::vector<std::uint64_t> samples; // (point, tree, node) triples per depth
};

/// Average importance mass dispensed at each tree depth across all dataset
/// points: at every split a point passes, ||lambda||_1 = ratio * ||v||_1 is
/// credited to that split's depth.
inline DepthProfile depth_profile(const Forest& forest, const Dataset& ds,
                                  std::size_t threads = 1) {
    if (ds.p() != forest.p)
        throw std::invalid_argument("depth_profile: dataset dimension differs from the model's");
    const std::size_t depths = std::max<std::size_t>(forest.max_depth, 1);
    Matrix sums(ds.n(), depths);
    std::vector<std::vector<std::uint64_t>> counts(ds.n(),
                                                   std::vector<std::uint64_t>(depths, 0));

    parallel_for(ds.n(), threads, [&](std::size_t i) {
        const auto x = ds.X.row(i);
        for (const auto& tree : forest.trees) {
            std::size_t node = 0;
            while (!tree.nodes[node].is_leaf()) {
                const auto& nd = tree.nodes[node];
                const bool x_left = nd.plane.goes_left(x);
                const std::size_t side = x_left ? tree.left_size(node) : tree.right_size(node);
                const double ratio = static_cast<double>(nd.size) /
                                     static_cast<double>(std::max<std::size_t>(side, 1));
                double l1 = 0.0;
                for (double v : nd.plane.normal) l1 += std::abs(v);
                sums(i, nd.depth) += ratio * l1;
                counts[i][nd.depth] += 1;
                node = static_cast<std::size_t>(x_left ? nd.left : nd.right);
            }
        }
    });

    DepthProfile profile;
    profile.mean_l1.assign(depths, 0.0);
    profile.samples.assign(depths, 0);
    for (std::size_t i = 0; i < ds.n(); ++i)
        for (std::size_t d = 0; d < depths; ++d) {
            profile.mean_l1[d] += sums(i, d);
            profile.samples[d] += counts[i][d];
        }
    for (std::size_t d = 0; d < depths; ++d)
        if (profile.samples[d] > 0) profile.mean_l1[d] /= static_cast<double>(profile.samples[d]);
    // Trim trailing depths never reached (depth cap minus early stops).
    while (!profile.samples.empty() && profile.samples.back() == 0) {
        profile.samples.pop_back();
        profile.mean_l1.pop_back();
    }
    return profile;
}

} // namespace exad
