#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace itimap;
using namespace itimap::test;

namespace {

LabeledBurst row(std::array<double, 8> f, Technology label) {
    LabeledBurst r;
    r.features.duration_us = f[0];
    r.features.mean_power_dbm = f[1];
    r.features.peak_power_dbm = f[2];
    r.features.power_std_db = f[3];
    r.features.crest_db = f[4];
    r.features.sf_ratio3_db = f[5];
    r.features.sf_ratio8_db = f[6];
    r.features.sf_bw_count = f[7];
    r.label = label;
    return r;
}

// Loosely separable 6-class dataset: class-dependent duration / power /
// bandwidth-count clusters with overlap, as the pipeline would produce.
Dataset synthetic_dataset(size_t n, uint64_t seed) {
    Dataset d;
    Rng rng(seed);
    for (size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(rng.uniform_int(6));
        double dur = 0.0, bw = 0.0, r3 = 0.0, r8 = 0.0;
        switch (c) {
            case 0: dur = rng.log_uniform(1000, 5000); bw = 9; r3 = 0; r8 = 1; break;
            case 1: dur = rng.log_uniform(300, 3000); bw = 9; r3 = 1; r8 = 0; break;
            case 2: dur = rng.log_uniform(200, 800); bw = 9; r3 = 0; r8 = 1; break;
            case 3: dur = rng.uniform(350, 400); bw = 1; r3 = 40; r8 = 40; break;
            case 4: dur = rng.uniform(400, 1200); bw = 2; r3 = 27; r8 = 38; break;
            case 5: dur = rng.uniform(500, 4256); bw = 2; r3 = 26; r8 = 39; break;
        }
        const double mean = rng.uniform(-80.0, -45.0);
        const double crest = rng.uniform(0.0, 3.0);
        d.rows.push_back(row({dur, mean, mean + crest, rng.uniform(0.0, 2.0), crest,
                              r3 + rng.uniform(-1.0, 1.0), r8 + rng.uniform(-1.0, 1.0), bw},
                             static_cast<Technology>(c)));
    }
    return d;
}

int correct_count(const ClassificationTree& tree, const Dataset& data) {
    int n = 0;
    for (const auto& r : data.rows) {
        if (classify(tree, r.features).tech == r.label) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("single-class dataset trains to a pure zero-split leaf") {
    Dataset d;
    for (int i = 0; i < 50; ++i) {
        d.rows.push_back(row({100.0 + i, -60, -58, 1, 2, 0, 0, 9}, Technology::Wlan11b));
    }
    const auto tree = train_tree(d, 20, 1);
    CHECK(tree.split_count == 0);
    const auto pred = classify(tree, d.rows[0].features);
    CHECK(pred.tech == Technology::Wlan11b);
    CHECK(pred.confidence == 1.0);
}

TEST_CASE("one split separates two classes split by duration") {
    Dataset d;
    Rng rng(3);
    for (int i = 0; i < 40; ++i) {
        d.rows.push_back(row({rng.uniform(400, 900), -60, -58, 1, 2, 0, 0, 9},
                             Technology::Wlan11n));
        d.rows.push_back(row({rng.uniform(1100, 4000), -60, -58, 1, 2, 0, 0, 9},
                             Technology::Wlan11b));
    }
    const auto tree = train_tree(d, 20, 1);
    CHECK(tree.split_count == 1);
    CHECK(tree.nodes[0].feature == 0);
    CHECK(tree.nodes[0].threshold > 900.0);
    CHECK(tree.nodes[0].threshold < 1100.0);
    CHECK(correct_count(tree, d) == static_cast<int>(d.rows.size()));
}

TEST_CASE("training accuracy matches the independent CART oracle exactly") {
    const Dataset d = synthetic_dataset(1500, 99);
    std::vector<std::array<double, 8>> x;
    std::vector<int> y;
    for (const auto& r : d.rows) {
        x.push_back(r.features.as_array());
        y.push_back(static_cast<int>(r.label));
    }
    for (int max_splits : {0, 1, 5, 20, 60}) {
        const auto tree = train_tree(d, max_splits, 42);
        const auto oracle = oracle_cart(x, y, max_splits, 5);
        int oracle_correct = 0;
        for (size_t i = 0; i < x.size(); ++i) {
            if (oracle.predict(x[i]) == y[i]) ++oracle_correct;
        }
        CAPTURE(max_splits);
        CHECK(correct_count(tree, d) == oracle_correct);
        CHECK(tree.split_count <= max_splits);
    }
}

TEST_CASE("every accepted split strictly reduces weighted Gini impurity") {
    const Dataset d = synthetic_dataset(800, 5);
    const auto tree = train_tree(d, 40, 1);
    REQUIRE(tree.split_count > 0);

    // replay the partition and recompute impurities per internal node
    struct Item {
        int node;
        std::vector<size_t> rows;
    };
    std::vector<Item> stack;
    std::vector<size_t> all(d.rows.size());
    std::iota(all.begin(), all.end(), 0);
    stack.push_back({0, std::move(all)});
    auto gini = [&](const std::vector<size_t>& rows) {
        std::array<double, 6> counts{};
        for (size_t r : rows) counts[static_cast<size_t>(d.rows[r].label)] += 1.0;
        double sq = 0.0;
        for (double c : counts) sq += c * c;
        return static_cast<double>(rows.size()) - sq / static_cast<double>(rows.size());
    };
    while (!stack.empty()) {
        auto [node, rows] = std::move(stack.back());
        stack.pop_back();
        const auto& tn = tree.nodes[static_cast<size_t>(node)];
        if (tn.feature < 0) continue;
        std::vector<size_t> l, r;
        for (size_t ri : rows) {
            (d.rows[ri].features.as_array()[tn.feature] <= tn.threshold ? l : r).push_back(ri);
        }
        CHECK(l.size() >= 5);
        CHECK(r.size() >= 5);
        CHECK(gini(l) + gini(r) < gini(rows));
        stack.push_back({tn.left, std::move(l)});
        stack.push_back({tn.right, std::move(r)});
    }
}

TEST_CASE("training accuracy is non-decreasing in the split cap") {
    const Dataset d = synthetic_dataset(1200, 17);
    int prev = -1;
    for (int s : {0, 2, 5, 10, 20, 50, 100}) {
        const int acc = correct_count(train_tree(d, s, 1), d);
        CHECK(acc >= prev);
        prev = acc;
    }
}

TEST_CASE("uniform calibration shift leaves predictions unchanged") {
    Dataset base = synthetic_dataset(1000, 23);
    Dataset shifted = base;
    for (auto& r : shifted.rows) {
        r.features.mean_power_dbm += 6.0;
        r.features.peak_power_dbm += 6.0;
    }
    const auto tree_base = train_tree(base, 30, 1);
    const auto tree_shift = train_tree(shifted, 30, 1);
    for (size_t i = 0; i < base.rows.size(); ++i) {
        CHECK(classify(tree_base, base.rows[i].features).tech ==
              classify(tree_shift, shifted.rows[i].features).tech);
    }
}

TEST_CASE("forest behaviour") {
    const Dataset d = synthetic_dataset(1200, 31);

    SUBCASE("degenerate single-tree forest equals the plain tree") {
        ForestConfig cfg;
        cfg.n_trees = 1;
        cfg.bootstrap = false;
        cfg.tree.max_splits = 30;
        const auto forest = train_forest(d, cfg, 7);
        const auto tree = train_tree(d, cfg.tree, 7);
        for (const auto& r : d.rows) {
            CHECK(classify(forest, r.features).tech == classify(tree, r.features).tech);
        }
    }

    SUBCASE("forest prediction is the exact mean of member distributions") {
        const auto forest = train_forest(d, 10, 40, 3);
        const auto f = d.rows[17].features.as_array();
        auto mean = forest.predict_dist(f);
        std::array<double, 6> manual{};
        for (const auto& t : forest.trees) {
            const auto dist = t.predict_dist(f);
            for (int c = 0; c < 6; ++c) manual[c] += dist[c];
        }
        for (int c = 0; c < 6; ++c) CHECK(mean[c] == manual[c] / 10.0);
    }

    SUBCASE("held-out accuracy at least matches a depth-capped tree") {
        auto [train, test] = split_stratified(synthetic_dataset(3000, 77), 0.7, 5);
        const double forest_acc = evaluate(train_forest(train, 30, 100, 5), test, 1).accuracy;
        const double tree_acc = evaluate(train_tree(train, 20, 5), test, 1).accuracy;
        CHECK(forest_acc >= tree_acc - 1e-9);
    }

    SUBCASE("empty dataset and bad sizes are rejected") {
        CHECK_THROWS_AS(train_forest(Dataset{}, 10, 20, 1), ConfigError);
        CHECK_THROWS_AS(train_forest(d, 0, 20, 1), ConfigError);
        CHECK_THROWS_AS(train_tree(Dataset{}, 20, 1), ConfigError);
    }

    SUBCASE("training is deterministic") {
        const auto f1 = train_forest(d, 5, 30, 11);
        const auto f2 = train_forest(d, 5, 30, 11);
        REQUIRE(f1.trees.size() == f2.trees.size());
        for (size_t t = 0; t < f1.trees.size(); ++t) {
            REQUIRE(f1.trees[t].nodes.size() == f2.trees[t].nodes.size());
            for (size_t i = 0; i < f1.trees[t].nodes.size(); ++i) {
                CHECK(f1.trees[t].nodes[i].feature == f2.trees[t].nodes[i].feature);
                CHECK(f1.trees[t].nodes[i].threshold == f2.trees[t].nodes[i].threshold);
            }
        }
    }
}

TEST_CASE("classification rules") {
    SUBCASE("argmax with confidence") {
        ClassificationTree tree;
        TreeNode leaf;
        leaf.dist = {0.0, 0.9, 0.0, 0.0, 0.1, 0.0};
        tree.nodes.push_back(leaf);
        const auto pred = classify(tree, FeatureVector{});
        CHECK(pred.tech == Technology::Wlan11g);
        CHECK(pred.confidence == doctest::Approx(0.9));
    }
    SUBCASE("two-way tie resolves to the first class in enumeration order") {
        ClassificationTree tree;
        TreeNode leaf;
        leaf.dist = {0.0, 0.0, 0.5, 0.0, 0.5, 0.0};
        tree.nodes.push_back(leaf);
        const auto pred = classify(tree, FeatureVector{});
        CHECK(pred.tech == Technology::Wlan11n);
        CHECK(pred.confidence == doctest::Approx(0.5));
    }
    SUBCASE("non-finite features are rejected") {
        ClassificationTree tree;
        tree.nodes.push_back(TreeNode{});
        FeatureVector fv;
        fv.duration_us = std::nan("");
        CHECK_THROWS_AS(classify(tree, fv), DataError);
    }
}

TEST_CASE("evaluation metrics") {
    SUBCASE("perfect predictor scores 1.0") {
        Dataset d;
        Rng rng(9);
        for (int c = 0; c < 6; ++c) {
            for (int i = 0; i < 30; ++i) {
                d.rows.push_back(row({c * 1000.0 + rng.uniform(0, 500), -60, -58, 1, 2, 0, 0,
                                      static_cast<double>(c)},
                                     static_cast<Technology>(c)));
            }
        }
        const auto m = evaluate(train_tree(d, 50, 1), d, 1);
        CHECK(m.accuracy == 1.0);
        for (int c = 0; c < 6; ++c) CHECK(m.recall[c] == 1.0);
    }
    SUBCASE("constant model on a balanced 6-class set sits at chance") {
        Dataset single;
        for (int i = 0; i < 30; ++i) {
            single.rows.push_back(row({100.0 + i, -60, -58, 1, 2, 0, 0, 9}, Technology::Ble));
        }
        const auto constant = train_tree(single, 10, 1);
        Dataset balanced;
        for (int c = 0; c < 6; ++c) {
            for (int i = 0; i < 50; ++i) {
                balanced.rows.push_back(row({100.0 + i, -60, -58, 1, 2, 0, 0, 9},
                                            static_cast<Technology>(c)));
            }
        }
        const auto m = evaluate(constant, balanced, 1);
        CHECK(m.accuracy == doctest::Approx(1.0 / 6.0).epsilon(0.02));
        CHECK(m.bursts_per_second > 0.0);
        CHECK(m.confusion[static_cast<int>(Technology::Wlan11b)][static_cast<int>(Technology::Ble)] == 50);
    }
}

TEST_CASE("spectral-feature ablation on constructed datasets") {
    Rng rng(13);
    SUBCASE("bandwidth-only separation collapses without SFs") {
        Dataset d;
        for (int i = 0; i < 600; ++i) {
            // identical envelope statistics, classes differ only in bandwidth
            const double dur = rng.uniform(500, 2000);
            const double mean = rng.uniform(-70, -50);
            const bool wide = (i % 2) == 0;
            d.rows.push_back(row({dur, mean, mean + 1, 0.5, 1.0, wide ? 0.0 : 27.0,
                                  wide ? 0.0 : 38.0, wide ? 9.0 : 2.0},
                                 wide ? Technology::Wlan11g : Technology::Zigbee802154));
        }
        auto [train, test] = split_stratified(d, 0.7, 3);
        const auto [with_sf, without_sf] = ablate_spectral_features(train, test, 20, 3);
        CHECK(with_sf >= 0.9);
        CHECK(without_sf <= 0.65);  // about chance for two classes
    }
    SUBCASE("duration-only separation is insensitive to SFs") {
        Dataset d;
        for (int i = 0; i < 600; ++i) {
            const bool lng = (i % 2) == 0;
            const double dur = lng ? rng.uniform(2000, 4000) : rng.uniform(300, 900);
            const double mean = rng.uniform(-70, -50);
            d.rows.push_back(row({dur, mean, mean + 1, 0.5, 1.0, 0.0, 0.0, 9.0},
                                 lng ? Technology::Wlan11b : Technology::Wlan11n));
        }
        auto [train, test] = split_stratified(d, 0.7, 3);
        const auto [with_sf, without_sf] = ablate_spectral_features(train, test, 20, 3);
        CHECK(std::abs(with_sf - without_sf) <= 0.02);
    }
}

TEST_CASE("k-NN baseline and model serialization") {
    const Dataset d = synthetic_dataset(900, 55);
    auto [train, test] = split_stratified(d, 0.7, 9);

    const auto knn = train_knn(train, 5);
    const auto m = evaluate(knn, test, 1);
    CHECK(m.accuracy > 0.5);

    const auto tree = train_tree(train, 25, 1);
    const auto forest = train_forest(train, 7, 40, 2);

    const auto tree_rt = model_from_json(tree_to_json(tree));
    const auto forest_rt = model_from_json(forest_to_json(forest));
    const auto knn_rt = model_from_json(knn_to_json(knn));
    for (size_t i = 0; i < test.rows.size(); i += 7) {
        const auto f = test.rows[i].features.as_array();
        CHECK(tree_rt.predict_dist(f) == tree.predict_dist(f));
        CHECK(forest_rt.predict_dist(f) == forest.predict_dist(f));
        CHECK(knn_rt.predict_dist(f) == knn.predict_dist(f));
    }
    CHECK_THROWS_AS(model_from_json("{\"type\":\"qlearning\"}"), DataError);
    CHECK_THROWS_AS(model_from_json("not json"), DataError);
}

TEST_CASE("stratified split preserves class proportions") {
    const Dataset d = synthetic_dataset(1200, 61);
    auto [train, test] = split_stratified(d, 0.7, 4);
    CHECK(train.size() + test.size() == d.size());
    std::map<Technology, int> total, in_train;
    for (const auto& r : d.rows) total[r.label]++;
    for (const auto& r : train.rows) in_train[r.label]++;
    for (const auto& [tech, n] : total) {
        CHECK(in_train[tech] == doctest::Approx(0.7 * n).epsilon(0.02));
    }
    CHECK_THROWS_AS(split_stratified(d, 1.5, 1), ConfigError);
}
