#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "watvec/eval.hpp"

namespace watvec::ml {

class ClassMissing : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class DimensionMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr int kBenign = 0;
constexpr int kMalicious = 1;  // the positive class throughout

struct LabeledVector {
    std::string doc_id;
    std::vector<double> features;
    int label = kBenign;
};

enum class ClassifierKind { gnb, rf, gbdt, linear };

const char* name_of(ClassifierKind kind);
std::optional<ClassifierKind> parse_kind(std::string_view name);

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::gnb;
    std::uint64_t seed = 1;

    int rf_trees = 100;
    int rf_max_depth = 0;  // 0 = unbounded
    int rf_min_leaf = 1;

    int gbdt_rounds = 100;
    int gbdt_depth = 3;
    double gbdt_learning_rate = 0.1;

    int linear_epochs = 50;
    double linear_lambda = 1e-4;

    void check() const;
};

// shared node layout for classification and regression trees
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf payload: class-1 fraction or boost step
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    double predict(std::span<const double> features) const;
};

struct GnbParams {
    std::vector<double> log_prior;  // [2]
    eval::Matrix mean;              // class x feature
    eval::Matrix variance;          // floored
};

struct ForestParams {
    std::vector<Tree> trees;
};

struct BoostParams {
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<Tree> trees;
    std::vector<double> train_loss;  // per round, non-increasing
};

struct LinearParams {
    std::vector<double> weights;
    double bias = 0.0;
};

struct TrainedClassifier {
    ClassifierSpec spec;
    std::size_t dimension = 0;
    std::variant<GnbParams, ForestParams, BoostParams, LinearParams> params;
};

struct Prediction {
    int label = kBenign;
    double score = 0.0;  // log-odds or margin; ties resolve to benign
};

// Stratified split with a seeded shuffle; both halves keep input order.
std::pair<std::vector<LabeledVector>, std::vector<LabeledVector>> train_test_split(
    const std::vector<LabeledVector>& data, double ratio, std::uint64_t seed);

// gnb is invariant to training-sample order (up to float rounding); the
// seeded learners are deterministic for a fixed order, but reordering the
// samples while keeping the seed is outside their contract
TrainedClassifier fit(const ClassifierSpec& spec, const std::vector<LabeledVector>& train);

Prediction predict(const TrainedClassifier& model, std::span<const double> features);

eval::ConfusionCounts evaluate(const TrainedClassifier& model, const std::vector<LabeledVector>& test);

void save_classifier(const TrainedClassifier& model, const std::string& path);
TrainedClassifier load_classifier(const std::string& path);

}  // namespace watvec::ml
