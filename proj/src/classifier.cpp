#include "itimap/classifier.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

namespace itimap {

std::vector<Technology> Dataset::class_set() const {
    std::array<bool, kTechnologyCount> seen{};
    for (const auto& row : rows) seen[static_cast<size_t>(row.label)] = true;
    std::vector<Technology> out;
    for (int c = 0; c < kTechnologyCount; ++c) {
        if (seen[c]) out.push_back(static_cast<Technology>(c));
    }
    return out;
}

std::array<double, kTechnologyCount> ClassificationTree::predict_dist(
    const std::array<double, 8>& f) const {
    int i = 0;
    while (nodes[i].feature >= 0) {
        i = f[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    }
    return nodes[i].dist;
}

int ClassificationTree::path_comparisons(const std::array<double, 8>& f) const {
    int i = 0;
    int steps = 0;
    while (nodes[i].feature >= 0) {
        ++steps;
        i = f[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    }
    return steps;
}

int ClassificationTree::depth() const {
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int depth = 0;
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        if (nodes[i].feature < 0) {
            depth = std::max(depth, d);
        } else {
            stack.push_back({nodes[i].left, d + 1});
            stack.push_back({nodes[i].right, d + 1});
        }
    }
    return depth;
}

std::array<double, kTechnologyCount> Forest::predict_dist(const std::array<double, 8>& f) const {
    std::array<double, kTechnologyCount> acc{};
    for (const auto& tree : trees) {
        const auto d = tree.predict_dist(f);
        for (int c = 0; c < kTechnologyCount; ++c) acc[c] += d[c];
    }
    for (int c = 0; c < kTechnologyCount; ++c) acc[c] /= static_cast<double>(trees.size());
    return acc;
}

std::array<double, kTechnologyCount> KnnModel::predict_dist(const std::array<double, 8>& f) const {
    std::array<double, 8> q{};
    for (int d : feature_indices) q[d] = (f[d] - mean[d]) / scale[d];

    std::vector<std::pair<double, size_t>> dist;
    dist.reserve(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        double s = 0.0;
        for (int d : feature_indices) {
            const double diff = q[d] - points[i][d];
            s += diff * diff;
        }
        dist.emplace_back(s, i);
    }
    const size_t kk = std::min<size_t>(static_cast<size_t>(k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
    std::array<double, kTechnologyCount> votes{};
    for (size_t i = 0; i < kk; ++i) {
        votes[static_cast<size_t>(labels[dist[i].second])] += 1.0 / static_cast<double>(kk);
    }
    return votes;
}

namespace {

using Counts = std::array<int64_t, kTechnologyCount>;

// n * Gini(counts) = n - sum(c^2)/n; absolute (count-weighted) impurity, so
// split gains compare directly across nodes of different size.
double weighted_gini(const Counts& counts, int64_t n) {
    if (n == 0) return 0.0;
    double sq = 0.0;
    for (int64_t c : counts) sq += static_cast<double>(c) * static_cast<double>(c);
    return static_cast<double>(n) - sq / static_cast<double>(n);
}

bool is_pure(const Counts& counts) {
    int nonzero = 0;
    for (int64_t c : counts) nonzero += c > 0;
    return nonzero <= 1;
}

struct BestSplit {
    bool valid = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

struct Frontier {
    int node_index;
    std::vector<uint32_t> rows;
    Counts counts;
    int depth;
    BestSplit best;
};

constexpr double kMinGain = 1e-9;

class TreeBuilder {
  public:
    TreeBuilder(const std::vector<std::array<double, 8>>& feats,
                const std::vector<Technology>& labels, const TreeConfig& cfg, Rng* feature_rng,
                int features_per_split)
        : feats_(feats),
          labels_(labels),
          cfg_(cfg),
          feature_rng_(feature_rng),
          features_per_split_(features_per_split) {}

    ClassificationTree build(std::vector<uint32_t> rows) {
        ClassificationTree tree;
        Counts counts = count(rows);
        tree.nodes.push_back(make_leaf(counts, rows.size()));
        std::vector<Frontier> frontier;
        consider(frontier, 0, std::move(rows), counts, 0);

        while (tree.split_count < cfg_.max_splits && !frontier.empty()) {
            // Best-first growth: expand the frontier leaf with the largest
            // impurity decrease; ties go to the earliest-created node.
            size_t pick = 0;
            for (size_t i = 1; i < frontier.size(); ++i) {
                if (frontier[i].best.gain > frontier[pick].best.gain) pick = i;
            }
            Frontier cand = std::move(frontier[pick]);
            frontier.erase(frontier.begin() + static_cast<ptrdiff_t>(pick));

            std::vector<uint32_t> left_rows, right_rows;
            Counts left_counts{}, right_counts{};
            for (uint32_t r : cand.rows) {
                if (feats_[r][cand.best.feature] <= cand.best.threshold) {
                    left_rows.push_back(r);
                    left_counts[static_cast<size_t>(labels_[r])]++;
                } else {
                    right_rows.push_back(r);
                    right_counts[static_cast<size_t>(labels_[r])]++;
                }
            }

            const int left_index = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(make_leaf(left_counts, left_rows.size()));
            const int right_index = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(make_leaf(right_counts, right_rows.size()));

            TreeNode& parent = tree.nodes[static_cast<size_t>(cand.node_index)];
            parent.feature = cand.best.feature;
            parent.threshold = cand.best.threshold;
            parent.left = left_index;
            parent.right = right_index;
            tree.split_count++;

            consider(frontier, left_index, std::move(left_rows), left_counts, cand.depth + 1);
            consider(frontier, right_index, std::move(right_rows), right_counts, cand.depth + 1);
        }
        return tree;
    }

  private:
    TreeNode make_leaf(const Counts& counts, size_t n) {
        TreeNode leaf;
        for (int c = 0; c < kTechnologyCount; ++c) {
            leaf.dist[c] = n > 0 ? static_cast<double>(counts[c]) / static_cast<double>(n) : 0.0;
        }
        return leaf;
    }

    Counts count(const std::vector<uint32_t>& rows) const {
        Counts counts{};
        for (uint32_t r : rows) counts[static_cast<size_t>(labels_[r])]++;
        return counts;
    }

    void consider(std::vector<Frontier>& frontier, int node_index, std::vector<uint32_t> rows,
                  const Counts& counts, int depth) {
        if (cfg_.max_depth > 0 && depth >= cfg_.max_depth) return;
        if (rows.size() < 2 * static_cast<size_t>(cfg_.min_leaf)) return;
        if (is_pure(counts)) return;
        const BestSplit best = find_best_split(rows, counts);
        if (!best.valid) return;
        frontier.push_back({node_index, std::move(rows), counts, depth, best});
    }

    std::vector<int> split_features() {
        if (feature_rng_ == nullptr || features_per_split_ <= 0 ||
            features_per_split_ >= static_cast<int>(cfg_.feature_indices.size())) {
            return cfg_.feature_indices;
        }
        // Partial Fisher-Yates, then ascending order so the feature-index
        // tie-break stays well defined.
        std::vector<int> pool = cfg_.feature_indices;
        for (int i = 0; i < features_per_split_; ++i) {
            const size_t j =
                i + static_cast<size_t>(feature_rng_->uniform_int(pool.size() - static_cast<size_t>(i)));
            std::swap(pool[static_cast<size_t>(i)], pool[j]);
        }
        pool.resize(static_cast<size_t>(features_per_split_));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    BestSplit find_best_split(const std::vector<uint32_t>& rows, const Counts& counts) {
        BestSplit best;
        const int64_t n = static_cast<int64_t>(rows.size());
        const double parent_impurity = weighted_gini(counts, n);
        std::vector<uint32_t> order(rows);

        for (int f : split_features()) {
            std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
                return feats_[a][f] < feats_[b][f];
            });
            Counts left{};
            Counts right = counts;
            for (int64_t i = 0; i + 1 < n; ++i) {
                const size_t cls = static_cast<size_t>(labels_[order[static_cast<size_t>(i)]]);
                left[cls]++;
                right[cls]--;
                const double v = feats_[order[static_cast<size_t>(i)]][f];
                const double v_next = feats_[order[static_cast<size_t>(i + 1)]][f];
                if (v == v_next) continue;
                const int64_t nl = i + 1;
                const int64_t nr = n - nl;
                if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) continue;
                const double thr = (v + v_next) / 2.0;
                // Midpoints of adjacent representable values can round onto
                // one endpoint; such a threshold would not realize the
                // counted partition.
                if (!(v <= thr && v_next > thr)) continue;
                const double gain =
                    parent_impurity - weighted_gini(left, nl) - weighted_gini(right, nr);
                if (gain > best.gain + kMinGain ||
                    (!best.valid && gain > kMinGain)) {
                    best.valid = true;
                    best.feature = f;
                    best.threshold = thr;
                    best.gain = gain;
                }
            }
        }
        return best;
    }

    const std::vector<std::array<double, 8>>& feats_;
    const std::vector<Technology>& labels_;
    const TreeConfig& cfg_;
    Rng* feature_rng_;
    int features_per_split_;
};

void flatten(const Dataset& data, std::vector<std::array<double, 8>>& feats,
             std::vector<Technology>& labels) {
    feats.reserve(data.rows.size());
    labels.reserve(data.rows.size());
    for (const auto& row : data.rows) {
        const auto f = row.features.as_array();
        for (double v : f) {
            if (!std::isfinite(v)) throw ConfigError("train: non-finite feature value");
        }
        feats.push_back(f);
        labels.push_back(row.label);
    }
}

}  // namespace

ClassificationTree train_tree(const Dataset& train, const TreeConfig& cfg, uint64_t seed) {
    (void)seed;  // exhaustive split search with fixed tie-breaks needs no randomness
    if (train.rows.empty()) throw ConfigError("train_tree: empty dataset");
    if (cfg.max_splits < 0) throw ConfigError("train_tree: max_splits must be >= 0");
    std::vector<std::array<double, 8>> feats;
    std::vector<Technology> labels;
    flatten(train, feats, labels);
    std::vector<uint32_t> rows(train.rows.size());
    std::iota(rows.begin(), rows.end(), 0U);
    TreeBuilder builder(feats, labels, cfg, nullptr, 0);
    return builder.build(std::move(rows));
}

Forest train_forest(const Dataset& train, const ForestConfig& cfg, uint64_t seed) {
    if (train.rows.empty()) throw ConfigError("train_forest: empty dataset");
    if (cfg.n_trees < 1) throw ConfigError("train_forest: need at least one tree");
    std::vector<std::array<double, 8>> feats;
    std::vector<Technology> labels;
    flatten(train, feats, labels);

    Forest forest;
    for (int t = 0; t < cfg.n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<uint64_t>(t), 0xf03e57ULL));
        std::vector<uint32_t> rows(train.rows.size());
        if (cfg.bootstrap) {
            for (auto& r : rows) {
                r = static_cast<uint32_t>(rng.uniform_int(train.rows.size()));
            }
        } else {
            std::iota(rows.begin(), rows.end(), 0U);
        }
        const int per_split = cfg.bootstrap ? cfg.features_per_split : 0;
        TreeBuilder builder(feats, labels, cfg.tree, per_split > 0 ? &rng : nullptr, per_split);
        forest.trees.push_back(builder.build(std::move(rows)));
    }
    return forest;
}

KnnModel train_knn(const Dataset& train, int k, const std::vector<int>& feature_indices) {
    if (train.rows.empty()) throw ConfigError("train_knn: empty dataset");
    if (k < 1) throw ConfigError("train_knn: k must be >= 1");
    KnnModel m;
    m.k = k;
    m.feature_indices = feature_indices;
    std::vector<std::array<double, 8>> feats;
    flatten(train, feats, m.labels);

    const double n = static_cast<double>(feats.size());
    for (int d : feature_indices) {
        double mu = 0.0;
        for (const auto& f : feats) mu += f[d];
        mu /= n;
        double var = 0.0;
        for (const auto& f : feats) var += (f[d] - mu) * (f[d] - mu);
        const double sd = std::sqrt(var / n);
        m.mean[d] = mu;
        m.scale[d] = sd > 0.0 ? sd : 1.0;
    }
    m.points.resize(feats.size());
    for (size_t i = 0; i < feats.size(); ++i) {
        for (int d : feature_indices) m.points[i][d] = (feats[i][d] - m.mean[d]) / m.scale[d];
    }
    return m;
}

std::pair<double, double> ablate_spectral_features(const Dataset& train, const Dataset& test,
                                                   int max_splits, uint64_t seed) {
    TreeConfig full;
    full.max_splits = max_splits;
    TreeConfig envelope;
    envelope.max_splits = max_splits;
    envelope.feature_indices = {0, 1, 2, 3, 4};

    const auto with_sf = evaluate(train_tree(train, full, seed), test, 1).accuracy;
    const auto without_sf = evaluate(train_tree(train, envelope, seed), test, 1).accuracy;
    return {with_sf, without_sf};
}

std::vector<SweepRow> sweep_complexity(const Dataset& train, const Dataset& test,
                                       const std::vector<int>& splits_list,
                                       const std::vector<int>& forest_sizes, uint64_t seed,
                                       int knn_k, int forest_max_splits) {
    if (splits_list.empty()) throw ConfigError("sweep_complexity: empty splits list");
    std::vector<SweepRow> rows;
    for (int s : splits_list) {
        SweepRow row;
        row.name = "ct";
        row.max_splits = s;
        row.metrics = evaluate(train_tree(train, s, seed), test);
        rows.push_back(std::move(row));
    }
    for (int n : forest_sizes) {
        SweepRow row;
        row.name = "forest";
        row.n_trees = n;
        row.max_splits = forest_max_splits;
        row.metrics = evaluate(train_forest(train, n, forest_max_splits, seed), test);
        rows.push_back(std::move(row));
    }
    if (knn_k > 0) {
        SweepRow row;
        row.name = "knn";
        row.n_trees = knn_k;
        row.metrics = evaluate(train_knn(train, knn_k), test);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::pair<Dataset, Dataset> split_stratified(const Dataset& data, double train_fraction,
                                             uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw ConfigError("split: train fraction must be in (0, 1)");
    }
    std::array<std::vector<uint32_t>, kTechnologyCount> by_class;
    for (size_t i = 0; i < data.rows.size(); ++i) {
        by_class[static_cast<size_t>(data.rows[i].label)].push_back(static_cast<uint32_t>(i));
    }
    Dataset train, test;
    for (int c = 0; c < kTechnologyCount; ++c) {
        auto& idx = by_class[c];
        Rng rng(derive_seed(seed, static_cast<uint64_t>(c), 0x5911fULL));
        for (size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
        }
        const size_t n_train = static_cast<size_t>(
            std::llround(train_fraction * static_cast<double>(idx.size())));
        for (size_t i = 0; i < idx.size(); ++i) {
            (i < n_train ? train : test).rows.push_back(data.rows[idx[i]]);
        }
    }
    return {train, test};
}

namespace {

using nlohmann::json;

json tree_nodes_json(const ClassificationTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
        if (n.feature >= 0) {
            nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
        } else {
            nodes.push_back({{"dist", n.dist}});
        }
    }
    return nodes;
}

ClassificationTree tree_from_nodes(const json& jnodes) {
    ClassificationTree tree;
    for (const auto& jn : jnodes) {
        TreeNode n;
        if (jn.contains("f")) {
            n.feature = jn.at("f").get<int>();
            n.threshold = jn.at("t").get<double>();
            n.left = jn.at("l").get<int>();
            n.right = jn.at("r").get<int>();
            tree.split_count++;
        } else {
            const auto d = jn.at("dist").get<std::vector<double>>();
            if (d.size() != kTechnologyCount) throw DataError("model: bad leaf distribution");
            std::copy(d.begin(), d.end(), n.dist.begin());
        }
        tree.nodes.push_back(n);
    }
    if (tree.nodes.empty()) throw DataError("model: empty tree");
    return tree;
}

}  // namespace

std::string tree_to_json(const ClassificationTree& tree) {
    json j{{"type", "tree"}, {"splits", tree.split_count}, {"nodes", tree_nodes_json(tree)}};
    return j.dump(2);
}

std::string forest_to_json(const Forest& forest) {
    json trees = json::array();
    for (const auto& t : forest.trees) trees.push_back(tree_nodes_json(t));
    json j{{"type", "forest"}, {"trees", trees}};
    return j.dump(2);
}

std::string knn_to_json(const KnnModel& knn) {
    json pts = json::array();
    for (const auto& p : knn.points) pts.push_back(p);
    json labels = json::array();
    for (auto l : knn.labels) labels.push_back(static_cast<int>(l));
    json j{{"type", "knn"},    {"k", knn.k},        {"features", knn.feature_indices},
           {"mean", knn.mean}, {"scale", knn.scale}, {"points", pts},
           {"labels", labels}};
    return j.dump();
}

std::array<double, kTechnologyCount> ModelFile::predict_dist(
    const std::array<double, 8>& f) const {
    switch (type) {
        case Type::Tree:
            return tree.predict_dist(f);
        case Type::Forest:
            return forest.predict_dist(f);
        case Type::Knn:
            return knn.predict_dist(f);
    }
    return {};
}

ModelFile model_from_json(const std::string& json_text) {
    try {
        const auto j = json::parse(json_text);
        ModelFile m;
        const std::string type = j.at("type").get<std::string>();
        if (type == "tree") {
            m.type = ModelFile::Type::Tree;
            m.tree = tree_from_nodes(j.at("nodes"));
        } else if (type == "forest") {
            m.type = ModelFile::Type::Forest;
            for (const auto& jt : j.at("trees")) m.forest.trees.push_back(tree_from_nodes(jt));
            if (m.forest.trees.empty()) throw DataError("model: empty forest");
        } else if (type == "knn") {
            m.type = ModelFile::Type::Knn;
            m.knn.k = j.at("k").get<int>();
            m.knn.feature_indices = j.at("features").get<std::vector<int>>();
            const auto mean = j.at("mean").get<std::vector<double>>();
            const auto scale = j.at("scale").get<std::vector<double>>();
            std::copy(mean.begin(), mean.end(), m.knn.mean.begin());
            std::copy(scale.begin(), scale.end(), m.knn.scale.begin());
            for (const auto& jp : j.at("points")) {
                std::array<double, 8> p{};
                const auto v = jp.get<std::vector<double>>();
                std::copy(v.begin(), v.end(), p.begin());
                m.knn.points.push_back(p);
            }
            for (const auto& jl : j.at("labels")) {
                m.knn.labels.push_back(static_cast<Technology>(jl.get<int>()));
            }
        } else {
            throw DataError("model: unknown type '" + type + "'");
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("model: ") + e.what());
    }
}

void write_metrics_csv(const std::vector<SweepRow>& rows, std::ostream& out,
                       bool include_speed) {
    out << "name,max_splits,n_trees,accuracy";
    if (include_speed) out << ",bursts_per_second";
    for (auto tech : kAllTechnologies) out << ",recall_" << to_string(tech);
    out << '\n';
    for (const auto& row : rows) {
        out << row.name << ',' << row.max_splits << ',' << row.n_trees << ','
            << format_double(row.metrics.accuracy);
        if (include_speed) out << ',' << format_double(row.metrics.bursts_per_second);
        for (double r : row.metrics.recall) out << ',' << format_double(r);
        out << '\n';
    }
}

std::string metrics_to_json(const std::vector<SweepRow>& rows, bool include_speed) {
    json arr = json::array();
    for (const auto& row : rows) {
        json recall;
        for (int c = 0; c < kTechnologyCount; ++c) {
            const double r = row.metrics.recall[c];
            recall[std::string(to_string(static_cast<Technology>(c)))] =
                std::isnan(r) ? json() : json(r);
        }
        json entry{{"name", row.name},
                   {"max_splits", row.max_splits},
                   {"n_trees", row.n_trees},
                   {"accuracy", row.metrics.accuracy},
                   {"n_test", row.metrics.n_test},
                   {"recall", recall},
                   {"confusion", row.metrics.confusion}};
        if (include_speed) entry["bursts_per_second"] = row.metrics.bursts_per_second;
        arr.push_back(entry);
    }
    return arr.dump(2);
}

}  // namespace itimap
