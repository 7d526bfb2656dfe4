// Ranking metrics: frozen worked examples plus the invariances the library
// guarantees (rank-only dependence, tie handling, antisymmetry of the
// feature-selection area difference).
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "exad/eval.hpp"
#include "exad/metrics.hpp"

using namespace exad;

TEST_CASE("ranked_indices sorts descending with index-ascending ties") {
    CHECK(ranked_indices({0.5, 0.9, 0.5, 0.1}) == std::vector<std::size_t>{1, 0, 2, 3});
    CHECK(ranked_indices({1.0, 1.0, 1.0}) == std::vector<std::size_t>{0, 1, 2});
    CHECK(ranked_indices({}) == std::vector<std::size_t>{});
    CHECK(ranked_indices({3.0}) == std::vector<std::size_t>{0});
}

TEST_CASE("contamination_count rounds half away from zero") {
    CHECK(contamination_count(0.05, 10) == 1);  // llround(0.5) = 1
    CHECK(contamination_count(0.25, 10) == 3);  // llround(2.5) = 3
    CHECK(contamination_count(0.1, 10) == 1);
    CHECK(contamination_count(0.0, 10) == 0);
    CHECK(contamination_count(1.0, 5) == 5);
    CHECK_THROWS_AS(contamination_count(-0.01, 10), std::invalid_argument);
    CHECK_THROWS_AS(contamination_count(1.01, 10), std::invalid_argument);
}

TEST_CASE("average_precision on frozen examples") {
    CHECK(average_precision({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == 1.0);
    // Positives land at ranks 1 and 3: (1/1 + 2/3) / 2 = 5/6.
    CHECK_THAT(average_precision({0.9, 0.8, 0.1}, {1, 0, 1}),
               Catch::Matchers::WithinAbs(5.0 / 6.0, 1e-15));
    // All-equal scores fall back to input order: positive first -> 1.0,
    // positive second -> 1/2.
    CHECK(average_precision({0.5, 0.5}, {1, 0}) == 1.0);
    CHECK(average_precision({0.5, 0.5}, {0, 1}) == 0.5);
    CHECK(average_precision({0.1, 0.2, 0.3}, {1, 1, 1}) == 1.0);
}

TEST_CASE("average_precision input validation") {
    CHECK_THROWS_AS(average_precision({0.1, 0.2}, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(average_precision({0.1, 0.2}, {0}), std::invalid_argument);
    CHECK_THROWS_AS(average_precision({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(average_precision({0.1, 0.2}, {0, 2}), std::invalid_argument);
}

TEST_CASE("roc_auc on frozen examples") {
    CHECK(roc_auc({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == 1.0);
    CHECK(roc_auc({0.1, 0.2, 0.9, 0.8}, {1, 1, 0, 0}) == 0.0);
    // One positive above the negative, one below: U = 1 of 2 pairs.
    CHECK(roc_auc({0.9, 0.8, 0.1}, {1, 0, 1}) == 0.5);
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == 0.5);
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {0, 0}), std::invalid_argument);
}

TEST_CASE("roc_auc matches exhaustive pair counting with ties") {
    std::mt19937_64 eng(123);
    std::uniform_int_distribution<int> score_draw(0, 9);  // coarse -> many ties
    std::bernoulli_distribution label_draw(0.3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> scores(50);
        std::vector<int> labels(50);
        std::size_t pos = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            scores[i] = score_draw(eng) / 10.0;
            labels[i] = label_draw(eng) ? 1 : 0;
            pos += static_cast<std::size_t>(labels[i]);
        }
        if (pos == 0 || pos == scores.size()) continue;
        double wins = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (labels[i] != 1) continue;
            for (std::size_t j = 0; j < scores.size(); ++j) {
                if (labels[j] != 0) continue;
                ++pairs;
                if (scores[i] > scores[j]) wins += 1.0;
                else if (scores[i] == scores[j]) wins += 0.5;
            }
        }
        CHECK_THAT(roc_auc(scores, labels),
                   Catch::Matchers::WithinAbs(wins / static_cast<double>(pairs), 1e-12));
    }
}

TEST_CASE("precision_at_contamination on frozen examples") {
    // Ten rows, the single positive (score 0.9) ranked second behind 0.95.
    std::vector<double> scores{0.9, 0.95, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    std::vector<int> labels{1, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    CHECK(precision_at_contamination(scores, labels, 0.1) == 0.0);
    CHECK(precision_at_contamination(scores, labels, 0.2) == 0.5);

    CHECK(precision_at_contamination({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}, 0.5) == 1.0);
    CHECK_THROWS_AS(precision_at_contamination({0.9, 0.1}, {1, 0}, 0.0), std::invalid_argument);
}

TEST_CASE("rank metrics are invariant under monotone score transforms") {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> draw(0.0, 1.0);
    std::vector<double> scores(40);
    std::vector<int> labels(40);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = draw(eng);
        labels[i] = i % 5 == 0 ? 1 : 0;
    }
    std::vector<double> warped(scores.size());
    std::transform(scores.begin(), scores.end(), warped.begin(),
                   [](double s) { return std::exp(3.0 * s) - 0.5; });
    CHECK(average_precision(scores, labels) == average_precision(warped, labels));
    CHECK(roc_auc(scores, labels) == roc_auc(warped, labels));
    CHECK(precision_at_contamination(scores, labels, 0.2) ==
          precision_at_contamination(warped, labels, 0.2));
}

TEST_CASE("ndcg on frozen examples") {
    // Single relevant feature ranked first -> 1, ranked last of six -> 1/log2(7).
    CHECK(ndcg({0, 1, 2, 3, 4, 5}, {1, 0, 0, 0, 0, 0}) == 1.0);
    const double last = ndcg({1, 2, 3, 4, 5, 0}, {1, 0, 0, 0, 0, 0});
    CHECK_THAT(last, Catch::Matchers::WithinAbs(0.3562, 5e-4));
    CHECK_THAT(last, Catch::Matchers::WithinAbs(1.0 / std::log2(7.0), 1e-15));
    // Graded relevance listed in its own order is ideal.
    CHECK(ndcg({0, 1, 2, 3, 4, 5}, {4, 3, 2, 0, 0, 0}) == 1.0);
}

TEST_CASE("ndcg validates its inputs") {
    CHECK_THROWS_AS(ndcg({0, 1}, {0.0, 0.0}), std::invalid_argument);      // all-zero relevance
    CHECK_THROWS_AS(ndcg({0, 0}, {1.0, 0.0}), std::invalid_argument);      // not a permutation
    CHECK_THROWS_AS(ndcg({0, 2}, {1.0, 0.0}), std::invalid_argument);      // out of range
    CHECK_THROWS_AS(ndcg({0, 1}, {1.0, -0.5}), std::invalid_argument);     // negative relevance
    CHECK_THROWS_AS(ndcg({0, 1}, {1.0, 0.0, 0.0}), std::invalid_argument); // length mismatch
    CHECK_THROWS_AS(ndcg({}, {}), std::invalid_argument);
}

TEST_CASE("ndcg ignores order among zero-relevance features and stays in [0,1]") {
    const std::vector<double> relevance{3, 2, 0, 0, 0};
    CHECK(ndcg({0, 1, 2, 3, 4}, relevance) == ndcg({0, 1, 4, 3, 2}, relevance));
    CHECK(ndcg({1, 3, 0, 2, 4}, relevance) == ndcg({1, 4, 0, 3, 2}, relevance));

    std::vector<std::size_t> ranking(5);
    std::iota(ranking.begin(), ranking.end(), std::size_t{0});
    std::mt19937_64 eng(99);
    for (int trial = 0; trial < 30; ++trial) {
        std::shuffle(ranking.begin(), ranking.end(), eng);
        const double v = ndcg(ranking, relevance);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("pearson_correlation on frozen examples") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    CHECK_THAT(pearson_correlation(x, {2.0, 4.0, 6.0, 8.0}),
               Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK_THAT(pearson_correlation(x, {-2.0, -4.0, -6.0, -8.0}),
               Catch::Matchers::WithinAbs(-1.0, 1e-15));
    // Affine shifts leave the correlation unchanged.
    CHECK_THAT(pearson_correlation(x, {12.0, 14.0, 16.0, 18.0}),
               Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK_THROWS_AS(pearson_correlation(x, {5.0, 5.0, 5.0, 5.0}), std::invalid_argument);
    CHECK_THROWS_AS(pearson_correlation({1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(pearson_correlation({1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("trapezoid on frozen examples") {
    CHECK(trapezoid({}) == 0.0);
    CHECK(trapezoid({7.0}) == 0.0);
    CHECK(trapezoid({1.0, 3.0}) == 2.0);
    CHECK(trapezoid({0.0, 1.0, 2.0}) == 2.0);
}

TEST_CASE("auc_fs frozen examples and antisymmetry") {
    const std::vector<double> flat{0.4, 0.4, 0.4, 0.4};
    CHECK(auc_fs(flat, flat) == 0.0);

    // Six steps: inverse pinned at 1, direct pinned at 0 -> area gap 5.
    const std::vector<double> ones(6, 1.0);
    const std::vector<double> zeros(6, 0.0);
    CHECK(auc_fs(zeros, ones) == 5.0);
    CHECK(auc_fs(ones, zeros) == -5.0);

    const std::vector<double> a{0.2, 0.5, 0.9, 0.4};
    const std::vector<double> b{0.8, 0.1, 0.3, 0.6};
    CHECK(auc_fs(a, b) == -auc_fs(b, a));

    CHECK_THROWS_AS(auc_fs({0.1, 0.2}, {0.1}), std::invalid_argument);
    CHECK_THROWS_AS(auc_fs({}, {}), std::invalid_argument);
}
