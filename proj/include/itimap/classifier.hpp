#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "itimap/pipeline.hpp"

namespace itimap {

struct Dataset {
    std::vector<LabeledBurst> rows;

    size_t size() const { return rows.size(); }
    std::vector<Technology> class_set() const;
};

struct TreeConfig {
    int max_splits = 50;  // the complexity knob s
    int min_leaf = 5;
    int max_depth = 0;  // 0 = unbounded
    std::vector<int> feature_indices = {0, 1, 2, 3, 4, 5, 6, 7};
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<double, kTechnologyCount> dist{};  // leaf class distribution, sums to 1
};

class ClassificationTree {
  public:
    std::vector<TreeNode> nodes;
    int split_count = 0;

    std::array<double, kTechnologyCount> predict_dist(const std::array<double, 8>& f) const;
    // Number of threshold comparisons spent classifying this input.
    int path_comparisons(const std::array<double, 8>& f) const;
    int depth() const;
};

struct ForestConfig {
    int n_trees = 30;
    TreeConfig tree = TreeConfig{.max_splits = 100};
    bool bootstrap = true;        // off: degenerate mode, trees see the full sample
    int features_per_split = 3;   // ceil(sqrt(8)); 0 = use all features
};

class Forest {
  public:
    std::vector<ClassificationTree> trees;

    // Mean of the member leaf distributions.
    std::array<double, kTechnologyCount> predict_dist(const std::array<double, 8>& f) const;
};

class KnnModel {
  public:
    int k = 5;
    std::vector<int> feature_indices;
    std::array<double, 8> mean{};
    std::array<double, 8> scale{};
    std::vector<std::array<double, 8>> points;  // standardized training rows
    std::vector<Technology> labels;

    std::array<double, kTechnologyCount> predict_dist(const std::array<double, 8>& f) const;
};

ClassificationTree train_tree(const Dataset& train, const TreeConfig& cfg, uint64_t seed);

inline ClassificationTree train_tree(const Dataset& train, int max_splits, uint64_t seed) {
    return train_tree(train, TreeConfig{.max_splits = max_splits}, seed);
}

Forest train_forest(const Dataset& train, const ForestConfig& cfg, uint64_t seed);

inline Forest train_forest(const Dataset& train, int n_trees, int max_splits, uint64_t seed) {
    ForestConfig cfg;
    cfg.n_trees = n_trees;
    cfg.tree.max_splits = max_splits;
    return train_forest(train, cfg, seed);
}

KnnModel train_knn(const Dataset& train, int k,
                   const std::vector<int>& feature_indices = {0, 1, 2, 3, 4, 5, 6, 7});

struct Prediction {
    Technology tech = Technology::Wlan11b;
    double confidence = 0.0;
};

template <class Model>
Prediction classify(const Model& model, const FeatureVector& fv) {
    const auto f = fv.as_array();
    for (double v : f) {
        if (!std::isfinite(v)) throw DataError("classify: non-finite feature value");
    }
    const auto dist = model.predict_dist(f);
    int best = 0;
    for (int c = 1; c < kTechnologyCount; ++c) {
        if (dist[c] > dist[best]) best = c;  // ties: lowest enumeration value wins
    }
    return {static_cast<Technology>(best), dist[best]};
}

struct Metrics {
    double accuracy = 0.0;
    std::array<double, kTechnologyCount> recall{};  // NaN where the class is absent
    std::array<std::array<int64_t, kTechnologyCount>, kTechnologyCount> confusion{};  // [truth][pred]
    double bursts_per_second = 0.0;
    int64_t n_test = 0;
};

template <class Model>
Metrics evaluate(const Model& model, const Dataset& test, int64_t min_classifications = 100000) {
    if (test.rows.empty()) throw ConfigError("evaluate: empty test set");
    Metrics m;
    m.n_test = static_cast<int64_t>(test.rows.size());

    std::vector<std::array<double, 8>> feats;
    feats.reserve(test.rows.size());
    for (const auto& row : test.rows) feats.push_back(row.features.as_array());

    for (size_t i = 0; i < test.rows.size(); ++i) {
        const auto pred = classify(model, test.rows[i].features);
        m.confusion[static_cast<size_t>(test.rows[i].label)][static_cast<size_t>(pred.tech)]++;
    }
    int64_t correct = 0;
    for (int c = 0; c < kTechnologyCount; ++c) {
        correct += m.confusion[c][c];
        int64_t row_total = 0;
        for (int p = 0; p < kTechnologyCount; ++p) row_total += m.confusion[c][p];
        m.recall[c] = row_total > 0 ? static_cast<double>(m.confusion[c][c]) / row_total
                                    : std::nan("");
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n_test);

    // Throughput over repeated classifications; the sink keeps the loop alive.
    const int64_t reps = std::max<int64_t>(min_classifications, m.n_test);
    uint64_t sink = 0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int64_t i = 0; i < reps; ++i) {
        const auto& f = feats[static_cast<size_t>(i) % feats.size()];
        const auto dist = model.predict_dist(f);
        int best = 0;
        for (int c = 1; c < kTechnologyCount; ++c) {
            if (dist[c] > dist[best]) best = c;
        }
        sink += static_cast<uint64_t>(best);
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    m.bursts_per_second = static_cast<double>(reps) / std::max(secs, 1e-9) + (sink & 1) * 1e-12;
    return m;
}

// Held-out accuracy with the full 8-feature space vs the envelope-only f1-f5
// space, same split cap.
std::pair<double, double> ablate_spectral_features(const Dataset& train, const Dataset& test,
                                                   int max_splits, uint64_t seed);

struct SweepRow {
    std::string name;
    int max_splits = 0;
    int n_trees = 0;
    Metrics metrics;
};

std::vector<SweepRow> sweep_complexity(const Dataset& train, const Dataset& test,
                                       const std::vector<int>& splits_list,
                                       const std::vector<int>& forest_sizes, uint64_t seed,
                                       int knn_k = 5, int forest_max_splits = 100);

std::pair<Dataset, Dataset> split_stratified(const Dataset& data, double train_fraction,
                                             uint64_t seed);

std::string tree_to_json(const ClassificationTree& tree);
std::string forest_to_json(const Forest& forest);
std::string knn_to_json(const KnnModel& knn);

// Self-describing model file ("type": tree | forest | knn).
struct ModelFile {
    enum class Type { Tree, Forest, Knn } type = Type::Tree;
    ClassificationTree tree;
    Forest forest;
    KnnModel knn;

    std::array<double, kTechnologyCount> predict_dist(const std::array<double, 8>& f) const;
};

ModelFile model_from_json(const std::string& json_text);

// include_speed = false omits the wall-clock throughput column, which is the
// one measurement that cannot be reproduced byte-identically across runs.
void write_metrics_csv(const std::vector<SweepRow>& rows, std::ostream& out,
                       bool include_speed = true);
std::string metrics_to_json(const std::vector<SweepRow>& rows, bool include_speed = true);

}  // namespace itimap
