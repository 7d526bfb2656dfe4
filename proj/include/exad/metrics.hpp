#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace exad {

/// Row indices ordered by score descending; equal scores keep ascending row
/// order. Every ranking-based routine here shares this tie rule.
inline std::vector<std::size_t> ranked_indices(const std::vector<double>& scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

/// How many points a contamination rate selects: round(c * n), halves away
/// from zero.
inline std::size_t contamination_count(double contamination, std::size_t n) {
    if (contamination < 0.0 || contamination > 1.0)
        throw std::invalid_argument("contamination must be in [0, 1]");
    return static_cast<std::size_t>(std::llround(contamination * static_cast<double>(n)));
}

namespace detail {
inline void check_scored_labels(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("scores and labels must have equal length");
    if (scores.empty()) throw std::invalid_argument("empty score vector");
    for (int l : labels)
        if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0 or 1");
}
} // namespace detail

/// Average precision: mean of precision-at-rank over the ranks where the
/// positives sit, scores descending.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    detail::check_scored_labels(scores, labels);
    const auto order = ranked_indices(scores);
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t rank = 1; rank <= order.size(); ++rank) {
        if (labels[order[rank - 1]] == 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank);
        }
    }
    if (hits == 0) throw std::invalid_argument("average_precision: no positive labels");
    return sum / static_cast<double>(hits);
}

/// ROC-AUC as the tie-aware rank statistic: the probability that a random
/// positive outscores a random negative, ties counting half.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    detail::check_scored_labels(scores, labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks across tie groups, then the Mann-Whitney U statistic.
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t k = 0; k < n; ++k)
        if (labels[k] == 1) {
            pos_rank_sum += rank[k];
            ++n_pos;
        }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc_auc: needs at least one positive and one negative");
    const double u = pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// Fraction of true outliers among the top round(c*n) scored points.
inline double precision_at_contamination(const std::vector<double>& scores,
                                         const std::vector<int>& labels, double contamination) {
    detail::check_scored_labels(scores, labels);
    const std::size_t k = contamination_count(contamination, scores.size());
    if (k == 0) throw std::invalid_argument("precision_at_contamination: top set is empty");
    const auto order = ranked_indices(scores);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < k; ++r) hits += static_cast<std::size_t>(labels[order[r]] == 1);
    return static_cast<double>(hits) / static_cast<double>(k);
}

/// NDCG of a predicted feature ranking against ground-truth relevance.
/// `ranking` is a permutation of 0..p-1, most important first; the gain at
/// position i (1-based) is relevance[ranking[i-1]] discounted by log2(i+1).
inline double ndcg(const std::vector<std::size_t>& ranking, const std::vector<double>& relevance) {
    const std::size_t p = relevance.size();
    if (ranking.size() != p) throw std::invalid_argument("ndcg: ranking/relevance size mismatch");
    std::vector<bool> seen(p, false);
    for (std::size_t f : ranking) {
        if (f >= p || seen[f]) throw std::invalid_argument("ndcg: ranking is not a permutation");
        seen[f] = true;
    }
    for (double r : relevance)
        if (r < 0.0) throw std::invalid_argument("ndcg: relevance must be non-negative");

    double dcg = 0.0;
    for (std::size_t i = 1; i <= p; ++i)
        dcg += relevance[ranking[i - 1]] / std::log2(static_cast<double>(i) + 1.0);

    std::vector<double> ideal = relevance;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 1; i <= p; ++i)
        idcg += ideal[i - 1] / std::log2(static_cast<double>(i) + 1.0);
    if (idcg == 0.0) throw std::invalid_argument("ndcg: relevance is all zeros");
    return dcg / idcg;
}

/// Pearson correlation; throws when either series has zero variance.
inline double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("pearson: need at least two points");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("pearson: a series has zero variance");
    return sxy / std::sqrt(sxx * syy);
}

/// Trapezoid area under y sampled at unit steps (0 for fewer than 2 points).
inline double trapezoid(const std::vector<double>& ys) {
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < ys.size(); ++i) area += 0.5 * (ys[i] + ys[i + 1]);
    return area;
}

} // namespace exad
