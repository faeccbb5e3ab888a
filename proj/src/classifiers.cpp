#include "watvec/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "watvec/common.hpp"

namespace watvec::ml {

const char* name_of(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::gnb: return "gnb";
        case ClassifierKind::rf: return "rf";
        case ClassifierKind::gbdt: return "gbdt";
        case ClassifierKind::linear: return "linear";
    }
    return "?";
}

std::optional<ClassifierKind> parse_kind(std::string_view name) {
    std::string lower = to_lower(name);
    if (lower == "gnb" || lower == "nb") return ClassifierKind::gnb;
    if (lower == "rf") return ClassifierKind::rf;
    if (lower == "gbdt") return ClassifierKind::gbdt;
    if (lower == "linear") return ClassifierKind::linear;
    return std::nullopt;
}

void ClassifierSpec::check() const {
    if (rf_trees < 1 || rf_min_leaf < 1) throw std::invalid_argument("rf settings must be >= 1");
    if (rf_max_depth < 0) throw std::invalid_argument("rf_max_depth must be >= 0 (0 = unbounded)");
    if (gbdt_rounds < 1 || gbdt_depth < 1) throw std::invalid_argument("gbdt settings must be >= 1");
    if (gbdt_learning_rate <= 0) throw std::invalid_argument("gbdt_learning_rate must be > 0");
    if (linear_epochs < 1) throw std::invalid_argument("linear_epochs must be >= 1");
    if (linear_lambda <= 0) throw std::invalid_argument("linear_lambda must be > 0");
}

namespace {

void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::size_t j = rng() % i;
        std::swap(idx[i - 1], idx[j]);
    }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + exp(x)) without overflow
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

std::pair<std::vector<LabeledVector>, std::vector<LabeledVector>> train_test_split(
    const std::vector<LabeledVector>& data, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0,1)");

    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < data.size(); ++i) {
        int label = data[i].label;
        if (label != kBenign && label != kMalicious) throw std::invalid_argument("label must be 0 or 1");
        by_class[label].push_back(i);
    }
    if (by_class[0].empty() || by_class[1].empty()) {
        throw ClassMissing("ClassMissing: need at least one sample of each class");
    }

    std::mt19937_64 rng(seed);
    std::vector<bool> in_train(data.size(), false);
    for (auto& idx : by_class) {
        shuffle_indices(idx, rng);
        std::size_t n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < n_train && k < idx.size(); ++k) in_train[idx[k]] = true;
    }

    std::pair<std::vector<LabeledVector>, std::vector<LabeledVector>> out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        (in_train[i] ? out.first : out.second).push_back(data[i]);
    }
    return out;
}

double Tree::predict(std::span<const double> features) const {
    int at = 0;
    for (;;) {
        const TreeNode& n = nodes[at];
        if (n.feature < 0) return n.value;
        at = features[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
}

namespace {

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

// Best squared-deviation reduction for `targets` restricted to `items`,
// scanning midpoints between distinct consecutive feature values. Shared by
// CART (targets = labels, variance == Gini up to a factor of two on binary
// data) and the boosting regression trees (targets = gradients).
SplitChoice best_split(const std::vector<std::size_t>& items, const std::vector<LabeledVector>& data,
                       const std::vector<double>& targets, const std::vector<int>& features, int min_leaf) {
    SplitChoice best;
    const std::size_t n = items.size();
    std::vector<std::pair<double, double>> column(n);  // value, target

    double total_sum = 0;
    for (std::size_t i : items) total_sum += targets[i];

    for (int f : features) {
        for (std::size_t k = 0; k < n; ++k) {
            column[k] = {data[items[k]].features[static_cast<std::size_t>(f)], targets[items[k]]};
        }
        std::sort(column.begin(), column.end());

        double left_sum = 0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            left_sum += column[k].second;
            if (column[k].first == column[k + 1].first) continue;
            std::size_t nl = k + 1, nr = n - nl;
            if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) continue;
            double right_sum = total_sum - left_sum;
            // variance reduction up to constants: sum^2/n per side
            double gain = left_sum * left_sum / static_cast<double>(nl) +
                          right_sum * right_sum / static_cast<double>(nr) -
                          total_sum * total_sum / static_cast<double>(n);
            if (gain > best.gain + 1e-12) {
                best.gain = gain;
                best.feature = f;
                best.threshold = 0.5 * (column[k].first + column[k + 1].first);
            }
        }
    }
    return best;
}

struct TreeBuilder {
    const std::vector<LabeledVector>& data;
    const std::vector<double>& targets;
    int min_leaf = 1;
    int max_depth = 0;  // 0 = unbounded
    int features_per_split = 0;  // 0 = all
    std::mt19937_64* rng = nullptr;
    // boosting leaves take a Newton step; plain CART leaves average targets
    const std::vector<double>* hessians = nullptr;

    Tree tree;

    int build(const std::vector<std::size_t>& items, int depth) {
        TreeNode node;
        double sum = 0;
        for (std::size_t i : items) sum += targets[i];

        bool stop = (max_depth > 0 && depth >= max_depth) || items.size() < 2 * static_cast<std::size_t>(min_leaf);
        if (!stop) {
            bool constant = true;
            for (std::size_t i : items) {
                if (targets[i] != targets[items[0]]) {
                    constant = false;
                    break;
                }
            }
            stop = constant;
        }

        SplitChoice split;
        if (!stop) {
            split = best_split(items, data, targets, candidate_features(), min_leaf);
            stop = split.feature < 0;
        }

        if (stop) {
            if (hessians) {
                double hess = 0;
                for (std::size_t i : items) hess += (*hessians)[i];
                node.value = sum / (hess + 1.0);  // L2-regularized Newton leaf
            } else {
                node.value = sum / static_cast<double>(items.size());
            }
            tree.nodes.push_back(node);
            return static_cast<int>(tree.nodes.size() - 1);
        }

        std::vector<std::size_t> left, right;
        for (std::size_t i : items) {
            double v = data[i].features[static_cast<std::size_t>(split.feature)];
            (v <= split.threshold ? left : right).push_back(i);
        }
        node.feature = split.feature;
        node.threshold = split.threshold;
        tree.nodes.push_back(node);
        int at = static_cast<int>(tree.nodes.size() - 1);
        int l = build(left, depth + 1);
        int r = build(right, depth + 1);
        tree.nodes[at].left = l;
        tree.nodes[at].right = r;
        return at;
    }

    std::vector<int> candidate_features() const {
        std::size_t d = data[0].features.size();
        std::vector<int> all(d);
        std::iota(all.begin(), all.end(), 0);
        if (features_per_split <= 0 || static_cast<std::size_t>(features_per_split) >= d) return all;
        // partial Fisher-Yates, then sorted for a deterministic scan order
        for (int k = 0; k < features_per_split; ++k) {
            std::size_t j = k + (*rng)() % (d - k);
            std::swap(all[k], all[j]);
        }
        all.resize(features_per_split);
        std::sort(all.begin(), all.end());
        return all;
    }
};

GnbParams fit_gnb(const std::vector<LabeledVector>& train, std::size_t d) {
    GnbParams p;
    p.log_prior.assign(2, 0.0);
    p.mean.assign(2, std::vector<double>(d, 0.0));
    p.variance.assign(2, std::vector<double>(d, 0.0));
    std::size_t counts[2] = {0, 0};
    for (const auto& s : train) {
        ++counts[s.label];
        for (std::size_t j = 0; j < d; ++j) p.mean[s.label][j] += s.features[j];
    }
    for (int c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < d; ++j) p.mean[c][j] /= static_cast<double>(counts[c]);
        p.log_prior[c] = std::log(static_cast<double>(counts[c]) / static_cast<double>(train.size()));
    }
    for (const auto& s : train) {
        for (std::size_t j = 0; j < d; ++j) {
            double diff = s.features[j] - p.mean[s.label][j];
            p.variance[s.label][j] += diff * diff;
        }
    }
    for (int c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            p.variance[c][j] = std::max(p.variance[c][j] / static_cast<double>(counts[c]), 1e-9);
        }
    }
    return p;
}

ForestParams fit_rf(const ClassifierSpec& spec, const std::vector<LabeledVector>& train, std::size_t d) {
    ForestParams forest;
    std::vector<double> targets(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) targets[i] = static_cast<double>(train[i].label);
    int per_split = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));

    for (int t = 0; t < spec.rf_trees; ++t) {
        // per-tree seed keeps the ensemble schedule-independent
        std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(t));
        std::vector<std::size_t> sample(train.size());
        for (auto& i : sample) i = rng() % train.size();

        TreeBuilder builder{train, targets, spec.rf_min_leaf, spec.rf_max_depth, per_split, &rng};
        builder.build(sample, 0);
        forest.trees.push_back(std::move(builder.tree));
    }
    return forest;
}

BoostParams fit_gbdt(const ClassifierSpec& spec, const std::vector<LabeledVector>& train) {
    BoostParams boost;
    boost.learning_rate = spec.gbdt_learning_rate;
    const std::size_t n = train.size();

    double positives = 0;
    for (const auto& s : train) positives += s.label;
    double p = positives / static_cast<double>(n);
    boost.base_score = std::log(p / (1.0 - p));

    std::vector<double> score(n, boost.base_score);
    std::vector<double> grad(n), hess(n);
    double prev_loss = std::numeric_limits<double>::infinity();

    for (int round = 0; round < spec.gbdt_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            double prob = sigmoid(score[i]);
            grad[i] = static_cast<double>(train[i].label) - prob;
            hess[i] = prob * (1.0 - prob);
        }
        TreeBuilder builder{train, grad, 1, spec.gbdt_depth, 0, nullptr, &hess};
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        builder.build(all, 0);

        for (std::size_t i = 0; i < n; ++i) {
            score[i] += boost.learning_rate * builder.tree.predict(train[i].features);
        }
        boost.trees.push_back(std::move(builder.tree));

        double loss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            loss += softplus(score[i]) - static_cast<double>(train[i].label) * score[i];
        }
        if (loss > prev_loss + 1e-9) {
            throw std::logic_error("gbdt training loss increased at round " + std::to_string(round));
        }
        prev_loss = loss;
        boost.train_loss.push_back(loss);
    }
    return boost;
}

LinearParams fit_linear(const ClassifierSpec& spec, const std::vector<LabeledVector>& train, std::size_t d) {
    LinearParams lin;
    lin.weights.assign(d, 0.0);
    std::mt19937_64 rng(spec.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    const double eta0 = 0.5;
    const double lambda = spec.linear_lambda;
    std::size_t step = 0;
    for (int epoch = 0; epoch < spec.linear_epochs; ++epoch) {
        shuffle_indices(order, rng);
        for (std::size_t i : order) {
            double eta = eta0 / (1.0 + eta0 * lambda * static_cast<double>(step));
            const LabeledVector& s = train[i];
            double y = s.label == kMalicious ? 1.0 : -1.0;
            double margin = lin.bias;
            for (std::size_t j = 0; j < d; ++j) margin += lin.weights[j] * s.features[j];
            margin *= y;
            double decay = 1.0 - eta * lambda;
            for (std::size_t j = 0; j < d; ++j) {
                lin.weights[j] *= decay;
                if (margin < 1.0) lin.weights[j] += eta * y * s.features[j];
            }
            if (margin < 1.0) lin.bias += eta * y;
            ++step;
        }
    }
    return lin;
}

}  // namespace

TrainedClassifier fit(const ClassifierSpec& spec, const std::vector<LabeledVector>& train) {
    spec.check();
    if (train.size() < 2) throw std::invalid_argument("fit: need at least 2 samples");
    const std::size_t d = train[0].features.size();
    bool seen[2] = {false, false};
    for (const auto& s : train) {
        if (s.features.size() != d) throw DimensionMismatch("fit: inconsistent feature dimensions");
        if (s.label != kBenign && s.label != kMalicious) throw std::invalid_argument("label must be 0 or 1");
        seen[s.label] = true;
    }
    if (!seen[0] || !seen[1]) throw ClassMissing("ClassMissing: fit requires both classes");

    TrainedClassifier model;
    model.spec = spec;
    model.dimension = d;
    switch (spec.kind) {
        case ClassifierKind::gnb: model.params = fit_gnb(train, d); break;
        case ClassifierKind::rf: model.params = fit_rf(spec, train, d); break;
        case ClassifierKind::gbdt: model.params = fit_gbdt(spec, train); break;
        case ClassifierKind::linear: model.params = fit_linear(spec, train, d); break;
    }
    return model;
}

Prediction predict(const TrainedClassifier& model, std::span<const double> features) {
    if (features.size() != model.dimension) {
        throw DimensionMismatch("predict: expected dimension " + std::to_string(model.dimension) + ", got " +
                                std::to_string(features.size()));
    }
    Prediction out;
    if (const auto* gnb = std::get_if<GnbParams>(&model.params)) {
        double log_post[2];
        for (int c = 0; c < 2; ++c) {
            double acc = gnb->log_prior[c];
            for (std::size_t j = 0; j < features.size(); ++j) {
                double var = gnb->variance[c][j];
                double diff = features[j] - gnb->mean[c][j];
                acc += -0.5 * std::log(2.0 * M_PI * var) - diff * diff / (2.0 * var);
            }
            log_post[c] = acc;
        }
        out.score = log_post[kMalicious] - log_post[kBenign];
    } else if (const auto* rf = std::get_if<ForestParams>(&model.params)) {
        std::size_t votes = 0;
        for (const Tree& t : rf->trees) {
            if (t.predict(features) > 0.5) ++votes;
        }
        out.score = static_cast<double>(votes) / static_cast<double>(rf->trees.size()) - 0.5;
    } else if (const auto* boost = std::get_if<BoostParams>(&model.params)) {
        double f = boost->base_score;
        for (const Tree& t : boost->trees) f += boost->learning_rate * t.predict(features);
        out.score = f;
    } else {
        const auto& lin = std::get<LinearParams>(model.params);
        double margin = lin.bias;
        for (std::size_t j = 0; j < features.size(); ++j) margin += lin.weights[j] * features[j];
        out.score = margin;
    }
    out.label = out.score > 0.0 ? kMalicious : kBenign;  // ties break benign
    return out;
}

eval::ConfusionCounts evaluate(const TrainedClassifier& model, const std::vector<LabeledVector>& test) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
    eval::ConfusionCounts c;
    for (const auto& s : test) {
        int got = predict(model, s.features).label;
        if (s.label == kMalicious) {
            (got == kMalicious ? c.tp : c.fn) += 1;
        } else {
            (got == kBenign ? c.tn : c.fp) += 1;
        }
    }
    return c;
}

}  // namespace watvec::ml
