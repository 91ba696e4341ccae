#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "remind/classifiers.hpp"
#include "remind/metrics.hpp"

using namespace remind;

namespace {

IllFeatureVector vec(double fill) {
    IllFeatureVector f;
    f.values.fill(fill);
    return f;
}

// Three well-separated clusters (center 10*class, noise +-0.5).
FeatureDataset separable_dataset(int per_class, uint64_t seed) {
    FeatureDataset data;
    CounterRng rng = CounterRng::keyed(seed, 0x5e9);
    for (int c = 0; c < kClassCount; ++c)
        for (int i = 0; i < per_class; ++i) {
            IllFeatureVector f;
            for (size_t d = 0; d < kFeatureCount; ++d)
                f[d] = 10.0 * c + 0.5 * rng.next_signed_unit();
            data.add(f, static_cast<MembershipLabel>(c),
                     "c" + std::to_string(c) + "-" + std::to_string(i));
        }
    return data;
}

// Informative features whose labels are then permuted across rows: the
// chance-level control. Class sizes stay balanced.
FeatureDataset permuted_label_dataset(int per_class, uint64_t seed) {
    FeatureDataset data = separable_dataset(per_class, seed);
    CounterRng rng = CounterRng::keyed(seed, 0xbad);
    for (size_t i = data.size() - 1; i > 0; --i) {
        const size_t j = static_cast<size_t>(rng.next_range(0, i));
        std::swap(data.rows[i].label, data.rows[j].label);
    }
    return data;
}

double heldout_accuracy(const Classifier& model, const FeatureDataset& test) {
    size_t correct = 0;
    for (const auto& row : test.rows)
        if (model.predict(row.features) == static_cast<int>(row.label)) ++correct;
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

double heldout_multiclass_auc(const Classifier& model, const FeatureDataset& test) {
    std::vector<std::vector<double>> probs;
    for (const auto& row : test.rows) {
        const auto p = model.predict_proba(row.features);
        probs.emplace_back(p.begin(), p.end());
    }
    return multiclass_auc(test.labels(), probs, kClassCount);
}

}  // namespace

TEST_CASE("membership label names round-trip") {
    for (int c = 0; c < kClassCount; ++c) {
        const auto l = static_cast<MembershipLabel>(c);
        CHECK(label_from_name(label_name(l)) == l);
    }
    CHECK_THROWS_AS(label_from_name("unknown"), Error);
}

TEST_CASE("logistic regression separates well-separated clusters") {
    const auto data = separable_dataset(50, 101);
    const auto split = stratified_split(data, 0.2, 7);
    const auto model = train_logistic_regression(split.train, {}, 3);
    CHECK(heldout_accuracy(model, split.test) >= 0.99);
    CHECK(heldout_multiclass_auc(model, split.test) >= 0.99);
}

TEST_CASE("random forest separates well-separated clusters") {
    const auto data = separable_dataset(50, 102);
    const auto split = stratified_split(data, 0.2, 8);
    RandomForestParams params;
    params.trees = 50;
    const auto model = train_random_forest(split.train, params, 4);
    CHECK(heldout_accuracy(model, split.test) >= 0.99);
}

TEST_CASE("random forest memorizes repeated prototypes") {
    FeatureDataset data;
    for (int c = 0; c < kClassCount; ++c)
        for (int i = 0; i < 8; ++i)
            data.add(vec(static_cast<double>(c)), static_cast<MembershipLabel>(c),
                     "p" + std::to_string(c) + "-" + std::to_string(i));
    RandomForestParams params;
    params.trees = 30;
    params.min_leaf = 1;
    const auto model = train_random_forest(data, params, 9);
    for (int c = 0; c < kClassCount; ++c)
        CHECK(model.predict(vec(static_cast<double>(c))) == c);
}

TEST_CASE("constant features drive logistic regression to the class priors") {
    FeatureDataset data;
    int counter = 0;
    auto add_n = [&](int n, MembershipLabel l) {
        for (int i = 0; i < n; ++i) data.add(vec(1.0), l, "r" + std::to_string(counter++));
    };
    add_n(30, MembershipLabel::Retained);
    add_n(20, MembershipLabel::Forgotten);
    add_n(10, MembershipLabel::Holdout);

    const auto model = train_logistic_regression(data, {}, 5);
    const auto p = model.predict_proba(vec(1.0));
    CHECK(p[0] == Catch::Approx(0.5).margin(0.01));
    CHECK(p[1] == Catch::Approx(1.0 / 3.0).margin(0.01));
    CHECK(p[2] == Catch::Approx(1.0 / 6.0).margin(0.01));

    // The forest finds no valid split and votes the bootstrap majority.
    const auto forest = train_random_forest(data, {}, 5);
    CHECK(forest.predict(vec(1.0)) == 0);
    CHECK(forest.predict_proba(vec(1.0))[0] > 0.9);
}

TEST_CASE("an untrained zero-weight model is exactly uniform") {
    LogisticRegressionModel model;
    model.standardization.std.fill(1.0);
    const auto p = model.predict_proba(vec(3.7));
    CHECK(p[0] == 1.0 / 3.0);
    CHECK(p[1] == 1.0 / 3.0);
    CHECK(p[2] == 1.0 / 3.0);
}

TEST_CASE("predicted probabilities form a distribution") {
    const auto data = separable_dataset(20, 103);
    const auto lr = train_logistic_regression(data, {}, 11);
    RandomForestParams params;
    params.trees = 20;
    const auto rf = train_random_forest(data, params, 11);

    CounterRng rng = CounterRng::keyed(77, 0xd15);
    for (int trial = 0; trial < 50; ++trial) {
        IllFeatureVector x;
        for (size_t d = 0; d < kFeatureCount; ++d) x[d] = 30.0 * rng.next_signed_unit();
        for (const Classifier* model : {static_cast<const Classifier*>(&lr),
                                        static_cast<const Classifier*>(&rf)}) {
            const auto p = model->predict_proba(x);
            double sum = 0;
            for (double v : p) {
                CHECK(v >= 0.0);
                sum += v;
            }
            CHECK(sum == Catch::Approx(1.0).margin(1e-9));
        }
    }

    IllFeatureVector bad;
    bad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(lr.predict_proba(bad), Error);
    CHECK_THROWS_AS(rf.predict_proba(bad), Error);
}

TEST_CASE("training loss is non-increasing") {
    const auto data = separable_dataset(15, 104);
    const auto model = train_logistic_regression(data, {}, 13);
    REQUIRE(model.training_loss.size() >= 2);
    for (size_t i = 1; i < model.training_loss.size(); ++i) {
        CAPTURE(i);
        CHECK(model.training_loss[i] <= model.training_loss[i - 1] + 1e-12);
    }
}

TEST_CASE("permuted labels yield chance-level discrimination") {
    const auto data = permuted_label_dataset(200, 2026);
    const auto split = stratified_split(data, 0.5, 15);
    const auto model = train_logistic_regression(split.train, {}, 15);
    const double auc = heldout_multiclass_auc(model, split.test);
    CHECK(std::abs(auc - 0.5) <= 0.1);
}

TEST_CASE("training data validation") {
    FeatureDataset tiny;
    for (int i = 0; i < 9; ++i)
        tiny.add(vec(i), static_cast<MembershipLabel>(i % 2), "t" + std::to_string(i));
    CHECK_THROWS_AS(train_logistic_regression(tiny, {}, 1), Error);

    FeatureDataset dup;
    for (int i = 0; i < 10; ++i) dup.add(vec(i), static_cast<MembershipLabel>(i % 2), "same-id");
    CHECK_THROWS_AS(train_logistic_regression(dup, {}, 1), Error);

    FeatureDataset one_class;
    for (int i = 0; i < 12; ++i)
        one_class.add(vec(i), MembershipLabel::Retained, "o" + std::to_string(i));
    CHECK_THROWS_AS(train_logistic_regression(one_class, {}, 1), Error);
    CHECK_THROWS_AS(train_random_forest(one_class, {}, 1), Error);

    FeatureDataset nan_row;
    for (int i = 0; i < 10; ++i)
        nan_row.add(vec(i), static_cast<MembershipLabel>(i % 2), "n" + std::to_string(i));
    nan_row.rows[3].features[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train_logistic_regression(nan_row, {}, 1), Error);
}

TEST_CASE("split quotas follow rounding with largest remainder") {
    // 34/33/33 at test_size 0.2: quota 20, floors 6/6/6, remainders
    // 0.8/0.6/0.6, the two extra seats go to class 0 then class 1.
    FeatureDataset data;
    auto add_class = [&](int n, MembershipLabel l, const char* prefix) {
        for (int i = 0; i < n; ++i)
            data.add(vec(i), l, std::string(prefix) + std::to_string(i));
    };
    add_class(34, MembershipLabel::Retained, "r");
    add_class(33, MembershipLabel::Forgotten, "f");
    add_class(33, MembershipLabel::Holdout, "h");

    const auto split = stratified_split(data, 0.2, 3);
    CHECK(split.test.size() == 20);
    CHECK(split.train.size() == 80);
    std::array<int, 3> per_class{};
    for (const auto& row : split.test.rows) per_class[static_cast<int>(row.label)] += 1;
    CHECK(per_class[0] == 7);
    CHECK(per_class[1] == 7);
    CHECK(per_class[2] == 6);

    data = FeatureDataset{};
    add_class(4, MembershipLabel::Retained, "er");
    add_class(4, MembershipLabel::Forgotten, "ef");
    add_class(4, MembershipLabel::Holdout, "eh");
    const auto half = stratified_split(data, 0.5, 3);
    CHECK(half.test.size() == 6);
    per_class = {};
    for (const auto& row : half.test.rows) per_class[static_cast<int>(row.label)] += 1;
    CHECK(per_class[0] == 2);
    CHECK(per_class[1] == 2);
    CHECK(per_class[2] == 2);
}

TEST_CASE("split selection depends on ids, not presentation order") {
    const auto data = separable_dataset(20, 105);
    FeatureDataset reversed;
    for (auto it = data.rows.rbegin(); it != data.rows.rend(); ++it)
        reversed.rows.push_back(*it);

    auto test_ids = [](const SplitResult& s) {
        std::set<std::string> ids;
        for (const auto& row : s.test.rows) ids.insert(row.sample_id);
        return ids;
    };
    const auto a = stratified_split(data, 0.25, 42);
    const auto b = stratified_split(reversed, 0.25, 42);
    CHECK(test_ids(a) == test_ids(b));
    CHECK(test_ids(a) != test_ids(stratified_split(data, 0.25, 43)));

    // Train and test partition the input: nothing lost, nothing duplicated.
    std::set<std::string> all;
    for (const auto& row : a.train.rows) all.insert(row.sample_id);
    for (const auto& row : a.test.rows) all.insert(row.sample_id);
    CHECK(all.size() == data.size());
    CHECK(a.train.size() + a.test.size() == data.size());
}

TEST_CASE("split validation") {
    const auto data = separable_dataset(10, 106);
    CHECK_THROWS_AS(stratified_split(data, 0.0, 1), Error);
    CHECK_THROWS_AS(stratified_split(data, 1.0, 1), Error);

    FeatureDataset lone;
    for (int i = 0; i < 8; ++i)
        lone.add(vec(i), MembershipLabel::Retained, "a" + std::to_string(i));
    lone.add(vec(99), MembershipLabel::Holdout, "only-one");
    CHECK_THROWS_AS(stratified_split(lone, 0.5, 1), Error);

    // Two-class data splits fine; the absent class simply has no quota.
    FeatureDataset two;
    for (int i = 0; i < 6; ++i) two.add(vec(i), MembershipLabel::Retained, "r" + std::to_string(i));
    for (int i = 0; i < 6; ++i) two.add(vec(i), MembershipLabel::Forgotten, "f" + std::to_string(i));
    const auto split = stratified_split(two, 0.5, 1);
    CHECK(split.test.size() == 6);
}

TEST_CASE("models round-trip through json bit for bit") {
    const auto data = separable_dataset(15, 107);
    const auto lr = train_logistic_regression(data, {}, 21);
    RandomForestParams params;
    params.trees = 25;
    const auto rf = train_random_forest(data, params, 21);

    const auto lr2 = LogisticRegressionModel::from_json(lr.to_json());
    const auto rf2 = RandomForestModel::from_json(rf.to_json());
    const auto lr3 = classifier_from_json(lr.to_json());
    const auto rf3 = classifier_from_json(rf.to_json());
    CHECK(lr3->kind() == "logistic-regression");
    CHECK(rf3->kind() == "random-forest");

    CounterRng rng = CounterRng::keyed(31, 0xf00d);
    for (int trial = 0; trial < 20; ++trial) {
        IllFeatureVector x;
        for (size_t d = 0; d < kFeatureCount; ++d) x[d] = 30.0 * rng.next_signed_unit();
        const auto p_lr = lr.predict_proba(x);
        const auto p_rf = rf.predict_proba(x);
        for (int c = 0; c < kClassCount; ++c) {
            CHECK(lr2.predict_proba(x)[c] == p_lr[c]);
            CHECK(lr3->predict_proba(x)[c] == p_lr[c]);
            CHECK(rf2.predict_proba(x)[c] == p_rf[c]);
            CHECK(rf3->predict_proba(x)[c] == p_rf[c]);
        }
    }

    // Retraining with the same seed reproduces the model exactly.
    CHECK(train_random_forest(data, params, 21).to_json() == rf.to_json());
    CHECK(train_random_forest(data, params, 22).to_json() != rf.to_json());

    nlohmann::json bad = lr.to_json();
    bad["format"] = "something else";
    CHECK_THROWS_AS(classifier_from_json(bad), Error);
    nlohmann::json unknown = lr.to_json();
    unknown["kind"] = "gradient-boosting";
    CHECK_THROWS_AS(classifier_from_json(unknown), Error);

    CHECK_THROWS_AS(train_logistic_regression(data, {-1.0, 1e-7, 100}, 1), Error);
    CHECK_THROWS_AS(train_random_forest(data, {0, 12, 2, 0}, 1), Error);
}
