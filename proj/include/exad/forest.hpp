#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "exad/dataset.hpp"
#include "exad/metrics.hpp"
#include "exad/parallel.hpp"
#include "exad/rng.hpp"

namespace exad {

/// The three isolation models. They share one tree/plane representation and
/// differ only in how split planes are drawn:
///   iforest  - axis-aligned: one-hot normal, uniform threshold in the node's
///              range of that feature
///   eif      - oblique: Gaussian direction, uniform intercept over the
///              node's projections
///   eif_plus - oblique: Gaussian direction, Gaussian intercept centered on
///              the projection mean with spread eta * stddev (may cut outside
///              the node's hull, so empty branches are legal)
enum class ModelKind { iforest, eif, eif_plus };

inline std::string to_string(ModelKind m) {
    switch (m) {
        case ModelKind::iforest: return "if";
        case ModelKind::eif: return "eif";
        case ModelKind::eif_plus: return "eif+";
    }
    return "?";
}

inline ModelKind parse_model(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (text == "if" || text == "iforest") return ModelKind::iforest;
    if (text == "eif") return ModelKind::eif;
    if (text == "eif+" || text == "eifplus" || text == "eif_plus") return ModelKind::eif_plus;
    throw std::invalid_argument("unknown model '" + text + "' (expected if, eif or eif+)");
}

struct ForestConfig {
    ModelKind model = ModelKind::eif_plus;
    std::size_t n_trees = 100;
    std::size_t subsample = 256;            // psi; capped at n when fitting
    std::optional<std::size_t> max_depth;   // default: ceil(log2(effective psi))
    double eta = 1.5;                       // eif+ intercept spread factor
    std::size_t dof = 0;                    // nonzero normal components; 0 = all
    std::uint64_t seed = 42;

    void validate() const {
        if (n_trees == 0) throw std::invalid_argument("config: n_trees must be >= 1");
        if (subsample == 0) throw std::invalid_argument("config: subsample must be >= 1");
        if (!(eta > 0.0)) throw std::invalid_argument("config: eta must be > 0");
    }
};

/// Hyperplane v.x = intercept. Points with v.x > intercept go left; ties go
/// right. Leaves carry an empty normal.
struct SplitPlane {
    std::vector<double> normal;
    double intercept = 0.0;

    double project(std::span<const double> x) const {
        double dot = 0.0;
        for (std::size_t j = 0; j < normal.size(); ++j) dot += normal[j] * x[j];
        return dot;
    }

    bool goes_left(std::span<const double> x) const { return project(x) > intercept; }

    /// Index of the only nonzero component, if the normal is one-hot.
    std::optional<std::size_t> one_hot_axis() const {
        std::optional<std::size_t> axis;
        for (std::size_t j = 0; j < normal.size(); ++j) {
            if (normal[j] == 0.0) continue;
            if (axis) return std::nullopt;
            axis = j;
        }
        return axis;
    }
};

struct TreeNode {
    SplitPlane plane;        // empty normal for leaves
    std::uint32_t size = 0;  // training points that reached this node
    std::uint32_t depth = 0; // root is 0
    std::int32_t left = -1;  // child slots in IsolationTree::nodes, -1 = leaf
    std::int32_t right = -1;

    bool is_leaf() const { return left < 0; }
};

struct IsolationTree {
    // Pre-order: root at 0, each left subtree stored before its right sibling.
    std::vector<TreeNode> nodes;
    // Training rows (ascending) behind this tree; kept for diagnostics and
    // the partition replay checks, deliberately not serialized.
    std::vector<std::size_t> sample_rows;

    std::size_t left_size(std::size_t node) const {
        return nodes[static_cast<std::size_t>(nodes[node].left)].size;
    }
    std::size_t right_size(std::size_t node) const {
        return nodes[static_cast<std::size_t>(nodes[node].right)].size;
    }
};

struct Forest {
    ForestConfig config;
    std::size_t p = 0;
    std::size_t psi = 0;               // effective subsample size, min(subsample, n)
    std::size_t max_depth = 0;         // effective depth cap used at fit time
    std::uint64_t data_fingerprint = 0;
    std::string fitted_on;
    std::vector<IsolationTree> trees;
};

/// Expected unsuccessful-search path length in a binary search tree over n
/// points; the normalizer in the anomaly score and the depth credit granted
/// for unresolved leaves. 0 for n <= 1.
inline double c_factor(std::size_t n) {
    if (n <= 1) return 0.0;
    constexpr double euler_gamma = 0.5772156649;
    const double m = static_cast<double>(n);
    return 2.0 * (std::log(m - 1.0) + euler_gamma) - 2.0 * (m - 1.0) / m;
}

/// Unit-norm split direction. dof == 0 (or >= p) draws every component from
/// a standard normal; otherwise exactly dof components (chosen uniformly
/// without replacement, filled in ascending index order) are nonzero.
template <RandomSource R>
std::vector<double> sample_normal_vector(std::size_t p, std::size_t dof, R& rng) {
    if (p == 0) throw std::invalid_argument("sample_normal_vector: p must be >= 1");
    if (dof == 0 || dof > p) dof = p;
    std::vector<double> v(p, 0.0);
    double norm2 = 0.0;
    while (norm2 == 0.0) { // an all-zero draw has ~0 probability, but retry anyway
        if (dof == p) {
            for (std::size_t j = 0; j < p; ++j) v[j] = rng.normal();
        } else {
            std::fill(v.begin(), v.end(), 0.0);
            auto active = sample_without_replacement(p, dof, rng);
            std::sort(active.begin(), active.end());
            for (std::size_t j : active) v[j] = rng.normal();
        }
        norm2 = 0.0;
        for (double x : v) norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    for (double& x : v) x /= norm;
    return v;
}

/// Split intercept over a node's projections: uniform across [min, max] for
/// iforest/eif; for eif+ a Gaussian at the mean with population-stddev * eta
/// spread (one normal draw).
template <RandomSource R>
double sample_intercept(std::span<const double> projections, ModelKind model, double eta, R& rng) {
    if (projections.empty()) throw std::invalid_argument("sample_intercept: no projections");
    if (model == ModelKind::eif_plus) {
        double mean = 0.0;
        for (double v : projections) mean += v;
        mean /= static_cast<double>(projections.size());
        double var = 0.0;
        for (double v : projections) var += (v - mean) * (v - mean);
        var /= static_cast<double>(projections.size());
        return mean + eta * std::sqrt(var) * rng.normal();
    }
    const auto [lo, hi] = std::minmax_element(projections.begin(), projections.end());
    return rng.uniform(*lo, *hi);
}

/// FNV-1a over shape, raw feature bits and labels; stamped into models so a
/// forest can be traced back to the exact bytes it was fitted on.
inline std::uint64_t fingerprint_dataset(const Dataset& ds) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    mix(ds.n());
    mix(ds.p());
    for (double v : ds.X.data) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        std::memcpy(&bits, &v, sizeof bits);
        mix(bits);
    }
    for (int l : ds.labels) mix(static_cast<std::uint64_t>(l));
    return h;
}

namespace detail {

inline bool rows_all_identical(const Matrix& X, const std::vector<std::size_t>& rows) {
    const auto first = X.row(rows.front());
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto r = X.row(rows[k]);
        for (std::size_t j = 0; j < X.cols; ++j)
            if (r[j] != first[j]) return false;
    }
    return true;
}

/// Recursive construction of one tree. Per node the RNG is consumed in a
/// fixed order (iforest: feature index, then threshold; eif/eif+: normal
/// components in ascending index order, then intercept), which pins the
/// whole forest to the per-tree seed.
struct TreeBuilder {
    const Matrix& X;
    ModelKind model;
    std::size_t max_depth;
    double eta;
    std::size_t dof;
    Rng& rng;
    std::vector<TreeNode>& nodes;

    std::int32_t build(std::vector<std::size_t>& rows, std::uint32_t depth) {
        const auto idx = static_cast<std::int32_t>(nodes.size());
        nodes.push_back(TreeNode{});
        nodes[idx].size = static_cast<std::uint32_t>(rows.size());
        nodes[idx].depth = depth;

        if (depth >= max_depth || rows.size() <= 1 || rows_all_identical(X, rows))
            return idx;

        SplitPlane plane;
        std::vector<double> projections(rows.size());
        if (model == ModelKind::iforest) {
            const std::size_t q = rng.uniform_index(X.cols);
            plane.normal.assign(X.cols, 0.0);
            plane.normal[q] = 1.0;
            for (std::size_t k = 0; k < rows.size(); ++k) projections[k] = X(rows[k], q);
        } else {
            plane.normal = sample_normal_vector(X.cols, dof, rng);
            for (std::size_t k = 0; k < rows.size(); ++k)
                projections[k] = plane.project(X.row(rows[k]));
        }
        plane.intercept = sample_intercept(projections, model, eta, rng);

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t k = 0; k < rows.size(); ++k)
            (projections[k] > plane.intercept ? left_rows : right_rows).push_back(rows[k]);

        rows.clear();
        rows.shrink_to_fit();
        nodes[idx].plane = std::move(plane);
        const std::int32_t left = build(left_rows, depth + 1);
        const std::int32_t right = build(right_rows, depth + 1);
        nodes[idx].left = left;
        nodes[idx].right = right;
        return idx;
    }
};

} // namespace detail

/// Fits one tree on its own derived RNG stream; exposed separately so trees
/// can be built in any order (or in parallel) with identical results.
inline IsolationTree fit_tree(const Dataset& ds, const ForestConfig& config, std::size_t psi,
                              std::size_t max_depth, std::uint64_t tree_seed) {
    Rng rng(tree_seed);
    IsolationTree tree;
    tree.sample_rows = sample_without_replacement(ds.n(), psi, rng);
    std::sort(tree.sample_rows.begin(), tree.sample_rows.end());

    const std::size_t dof = config.model == ModelKind::iforest ? 1 : config.dof;
    detail::TreeBuilder builder{ds.X, config.model, max_depth, config.eta, dof, rng, tree.nodes};
    std::vector<std::size_t> rows = tree.sample_rows;
    builder.build(rows, 0);
    return tree;
}

/// Fits a forest: each tree gets an independent subsample (without
/// replacement, size min(subsample, n)) and its own seed derived from
/// config.seed and the tree index. Thread count never changes the result.
inline Forest fit(const Dataset& ds, const ForestConfig& config, std::size_t threads = 1) {
    config.validate();
    ds.validate();
    if (config.model != ModelKind::iforest && config.dof != 0 && config.dof > ds.p())
        throw std::invalid_argument("config: dof exceeds the number of features");

    Forest forest;
    forest.config = config;
    forest.p = ds.p();
    forest.psi = std::min(config.subsample, ds.n());
    if (forest.psi < 2)
        throw std::invalid_argument("fit: needs at least two training rows");
    forest.max_depth = config.max_depth.value_or(static_cast<std::size_t>(
        std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(forest.psi, 2))))));
    forest.data_fingerprint = fingerprint_dataset(ds);
    forest.fitted_on = ds.name;
    forest.trees.resize(config.n_trees);

    parallel_for(config.n_trees, threads, [&](std::size_t t) {
        forest.trees[t] = fit_tree(ds, config, forest.psi, forest.max_depth,
                                   derive_seed(config.seed, t));
    });
    return forest;
}

/// Leaf-adjusted path length of x in one tree: internal nodes traversed plus
/// c_factor(size of the reached leaf).
inline double depth_h(const IsolationTree& tree, std::span<const double> x) {
    std::size_t node = 0;
    double edges = 0.0;
    while (!tree.nodes[node].is_leaf()) {
        const auto& n = tree.nodes[node];
        node = static_cast<std::size_t>(n.plane.goes_left(x) ? n.left : n.right);
        edges += 1.0;
    }
    return edges + c_factor(tree.nodes[node].size);
}

/// Isolation score 2^(-E[h(x)] / c(psi)), higher = more anomalous.
inline double anomaly_score(const Forest& forest, std::span<const double> x) {
    if (forest.trees.empty()) throw std::invalid_argument("anomaly_score: forest has no trees");
    if (forest.psi < 2)
        throw std::invalid_argument("anomaly_score: needs subsample size >= 2");
    double sum = 0.0;
    for (const auto& tree : forest.trees) sum += depth_h(tree, x);
    const double mean_depth = sum / static_cast<double>(forest.trees.size());
    return std::exp2(-mean_depth / c_factor(forest.psi));
}

inline std::vector<double> anomaly_scores(const Forest& forest, const Dataset& ds,
                                          std::size_t threads = 1) {
    if (ds.p() != forest.p)
        throw std::invalid_argument("anomaly_scores: dataset dimension differs from the model's");
    std::vector<double> scores(ds.n());
    parallel_for(ds.n(), threads, [&](std::size_t i) {
        scores[i] = anomaly_score(forest, ds.X.row(i));
    });
    return scores;
}

/// 0/1 labels for the top round(contamination * n) scores; score ties are
/// resolved toward the lower row index.
inline std::vector<int> labels_from_scores(const std::vector<double>& scores,
                                           double contamination) {
    const std::size_t k = contamination_count(contamination, scores.size());
    std::vector<int> labels(scores.size(), 0);
    const auto order = ranked_indices(scores);
    for (std::size_t r = 0; r < k && r < order.size(); ++r) labels[order[r]] = 1;
    return labels;
}

inline std::vector<int> predict_labels(const Forest& forest, const Dataset& ds,
                                       double contamination, std::size_t threads = 1) {
    return labels_from_scores(anomaly_scores(forest, ds, threads), contamination);
}

} // namespace exad
