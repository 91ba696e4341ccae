#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "remind/metrics.hpp"
#include "remind/rng.hpp"

using namespace remind;

namespace {

ScoredSet toy_set() {
    ScoredSet s;
    s.add(0.9, true);
    s.add(0.4, true);
    s.add(0.6, false);
    s.add(0.1, false);
    return s;
}

// Random instance on an integer score grid so ties occur regularly.
ScoredSet random_instance(uint64_t seed, size_t n) {
    CounterRng rng = CounterRng::keyed(seed, 0xa0c);
    ScoredSet s;
    s.add(static_cast<double>(rng.next_range(0, 9)), true);
    s.add(static_cast<double>(rng.next_range(0, 9)), false);
    for (size_t i = 2; i < n; ++i)
        s.add(static_cast<double>(rng.next_range(0, 9)), rng.next_bernoulli(0.5));
    return s;
}

}  // namespace

TEST_CASE("roc_auc on hand-checked sets") {
    CHECK(roc_auc(toy_set()) == Catch::Approx(0.75).margin(1e-15));

    ScoredSet perfect;
    for (int i = 0; i < 5; ++i) perfect.add(10.0 + i, true);
    for (int i = 0; i < 7; ++i) perfect.add(-1.0 - i, false);
    CHECK(roc_auc(perfect) == 1.0);

    ScoredSet reversed;
    for (int i = 0; i < 5; ++i) reversed.add(-10.0 - i, true);
    for (int i = 0; i < 7; ++i) reversed.add(1.0 + i, false);
    CHECK(roc_auc(reversed) == 0.0);

    ScoredSet tied;
    for (int i = 0; i < 4; ++i) tied.add(3.0, i % 2 == 0);
    CHECK(roc_auc(tied) == 0.5);
}

TEST_CASE("roc_auc matches the pairwise reference on random instances") {
    double max_err = 0;
    for (uint64_t t = 0; t < 1000; ++t) {
        const size_t n = 2 + static_cast<size_t>(CounterRng::keyed(t, 1).next_range(0, 198));
        const auto s = random_instance(t, n);
        const double fast = roc_auc(s);
        const double brute = brute_force_auc(s);
        max_err = std::max(max_err, std::abs(fast - brute));
    }
    CHECK(max_err <= 1e-12);
}

TEST_CASE("roc_auc is invariant under monotone transforms and flips on negation") {
    const auto s = random_instance(7, 150);
    const double base = roc_auc(s);

    ScoredSet scaled, exped, negated;
    for (size_t i = 0; i < s.size(); ++i) {
        scaled.add(2.0 * s.scores[i] + 1.0, s.positive[i]);
        exped.add(std::exp(s.scores[i] * 0.1), s.positive[i]);
        negated.add(-s.scores[i], s.positive[i]);
    }
    CHECK(roc_auc(scaled) == base);
    CHECK(roc_auc(exped) == base);
    CHECK(roc_auc(negated) == Catch::Approx(1.0 - base).margin(1e-12));
}

TEST_CASE("auc input validation") {
    ScoredSet s;
    CHECK_THROWS_AS(roc_auc(s), Error);
    s.add(1.0, true);
    CHECK_THROWS_AS(roc_auc(s), Error);  // one class only
    CHECK_THROWS_AS(s.add(std::numeric_limits<double>::quiet_NaN(), false), Error);

    ScoredSet big;
    for (int i = 0; i < 2001; ++i) big.add(i, i % 2 == 0);
    CHECK_THROWS_AS(brute_force_auc(big), Error);
    CHECK_NOTHROW(roc_auc(big));
}

TEST_CASE("tpr at a low fpr cap depends on the negative count") {
    // One negative outscores everything. With 50 negatives the first ROC
    // vertex (fpr 0.02) is past the cap, so interpolation stays at 0.
    ScoredSet coarse;
    coarse.add(100.0, false);
    for (int i = 0; i < 10; ++i) coarse.add(50.0, true);
    for (int i = 0; i < 49; ++i) coarse.add(0.0, false);
    CHECK(tpr_at_fpr(coarse, 0.01) == 0.0);

    // With 200 negatives the same shape puts fpr 0.005 inside the cap and
    // every positive is recovered there.
    ScoredSet fine;
    fine.add(100.0, false);
    for (int i = 0; i < 10; ++i) fine.add(50.0, true);
    for (int i = 0; i < 199; ++i) fine.add(0.0, false);
    CHECK(tpr_at_fpr(fine, 0.01) == 1.0);

    ScoredSet perfect;
    for (int i = 0; i < 10; ++i) perfect.add(1.0, true);
    for (int i = 0; i < 10; ++i) perfect.add(0.0, false);
    CHECK(tpr_at_fpr(perfect, 0.01) == 1.0);
    CHECK(tpr_at_fpr(perfect, 0.0) == 1.0);

    CHECK_THROWS_AS(tpr_at_fpr(perfect, -0.1), Error);
    CHECK_THROWS_AS(tpr_at_fpr(perfect, 1.1), Error);
}

TEST_CASE("tpr at the cap sits near the cap for uninformative scores") {
    ScoredSet s;
    CounterRng rng = CounterRng::keyed(2024, 0xcafe);
    for (int i = 0; i < 2000; ++i) s.add(rng.next_unit(), true);
    for (int i = 0; i < 2000; ++i) s.add(rng.next_unit(), false);
    CHECK(std::abs(tpr_at_fpr(s, 0.01) - 0.01) <= 0.01);
}

TEST_CASE("standardized partial auc") {
    ScoredSet perfect;
    for (int i = 0; i < 10; ++i) perfect.add(1.0, true);
    for (int i = 0; i < 10; ++i) perfect.add(0.0, false);
    CHECK(standardized_partial_auc(perfect, 0.01) == Catch::Approx(1.0).margin(1e-12));

    ScoredSet tied;
    for (int i = 0; i < 8; ++i) tied.add(5.0, i % 2 == 0);
    CHECK(standardized_partial_auc(tied, 0.01) == 0.5);
    CHECK(standardized_partial_auc(tied, 1.0) == 0.5);

    // Single reversed pair: zero area below the cap.
    ScoredSet reversed;
    reversed.add(0.5, true);
    reversed.add(0.9, false);
    CHECK(standardized_partial_auc(reversed, 0.5) == Catch::Approx(1.0 / 3.0).margin(1e-12));

    CHECK_THROWS_AS(standardized_partial_auc(perfect, 0.0), Error);
    CHECK_THROWS_AS(standardized_partial_auc(perfect, 1.0001), Error);
}

TEST_CASE("full-range standardized partial auc equals roc_auc") {
    for (uint64_t t = 0; t < 50; ++t) {
        const auto s = random_instance(t + 5000, 60);
        CHECK(standardized_partial_auc(s, 1.0) ==
              Catch::Approx(roc_auc(s)).margin(1e-12));
    }
}

TEST_CASE("macro one-vs-rest auc") {
    const std::vector<int> labels = {0, 0, 1, 1};
    const std::vector<std::vector<double>> probs = {
        {0.9, 0.1, 0.0}, {0.4, 0.6, 0.0}, {0.6, 0.4, 0.0}, {0.1, 0.9, 0.0}};
    std::vector<std::string> warnings;
    // Both present classes score 0.75 one-vs-rest; class 2 is skipped.
    CHECK(multiclass_auc(labels, probs, 3, &warnings) == Catch::Approx(0.75).margin(1e-12));
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("class 2 absent") != std::string::npos);

    const std::vector<int> perfect_labels = {0, 1, 2};
    const std::vector<std::vector<double>> one_hot = {
        {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
    CHECK(multiclass_auc(perfect_labels, one_hot, 3) == 1.0);

    CHECK_THROWS_AS(multiclass_auc({0, 0}, one_hot, 3), Error);          // size mismatch
    CHECK_THROWS_AS(multiclass_auc({}, {}, 3), Error);                   // empty
    CHECK_THROWS_AS(multiclass_auc({0, 0, 0}, one_hot, 3), Error);       // one class
}

TEST_CASE("accuracy and macro f1") {
    const std::vector<int> labels = {0, 0, 1, 1, 2, 2};
    const auto constant = accuracy_and_macro_f1(labels, {0, 0, 0, 0, 0, 0}, 3);
    CHECK(constant.accuracy == Catch::Approx(1.0 / 3.0).margin(1e-12));
    // Class 0: precision 1/3, recall 1 -> F1 0.5. Others 0. Macro 1/6.
    CHECK(constant.macro_f1 == Catch::Approx(1.0 / 6.0).margin(1e-12));

    const auto perfect = accuracy_and_macro_f1(labels, labels, 3);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.macro_f1 == 1.0);

    CHECK_THROWS_AS(accuracy_and_macro_f1(labels, {0, 0, 0}, 3), Error);
    CHECK_THROWS_AS(accuracy_and_macro_f1({0, 3}, {0, 0}, 3), Error);
    CHECK_THROWS_AS(accuracy_and_macro_f1({0, -1}, {0, 0}, 3), Error);
    CHECK_THROWS_AS(accuracy_and_macro_f1({}, {}, 3), Error);
}
