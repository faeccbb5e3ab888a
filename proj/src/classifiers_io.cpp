#include <json.hpp>

#include "watvec/classifiers.hpp"
#include "watvec/common.hpp"

namespace watvec::ml {

using nlohmann::json;

namespace {

constexpr const char* kContainer = "watvec-classifier";
constexpr int kVersion = 1;

json tree_to_json(const Tree& t) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes) {
        nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    }
    return nodes;
}

Tree tree_from_json(const json& j) {
    Tree t;
    for (const auto& n : j) {
        t.nodes.push_back(TreeNode{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                                   n.at(3).get<int>(), n.at(4).get<double>()});
    }
    return t;
}

json spec_to_json(const ClassifierSpec& s) {
    return json{
        {"kind", name_of(s.kind)},
        {"seed", s.seed},
        {"rf_trees", s.rf_trees},
        {"rf_max_depth", s.rf_max_depth},
        {"rf_min_leaf", s.rf_min_leaf},
        {"gbdt_rounds", s.gbdt_rounds},
        {"gbdt_depth", s.gbdt_depth},
        {"gbdt_learning_rate", s.gbdt_learning_rate},
        {"linear_epochs", s.linear_epochs},
        {"linear_lambda", s.linear_lambda},
    };
}

ClassifierSpec spec_from_json(const json& j) {
    ClassifierSpec s;
    auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown classifier kind in container");
    s.kind = *kind;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.rf_trees = j.at("rf_trees").get<int>();
    s.rf_max_depth = j.at("rf_max_depth").get<int>();
    s.rf_min_leaf = j.at("rf_min_leaf").get<int>();
    s.gbdt_rounds = j.at("gbdt_rounds").get<int>();
    s.gbdt_depth = j.at("gbdt_depth").get<int>();
    s.gbdt_learning_rate = j.at("gbdt_learning_rate").get<double>();
    s.linear_epochs = j.at("linear_epochs").get<int>();
    s.linear_lambda = j.at("linear_lambda").get<double>();
    return s;
}

}  // namespace

void save_classifier(const TrainedClassifier& model, const std::string& path) {
    json j;
    j["container"] = kContainer;
    j["version"] = kVersion;
    j["spec"] = spec_to_json(model.spec);
    j["dimension"] = model.dimension;

    if (const auto* gnb = std::get_if<GnbParams>(&model.params)) {
        j["gnb"] = {{"log_prior", gnb->log_prior}, {"mean", gnb->mean}, {"variance", gnb->variance}};
    } else if (const auto* rf = std::get_if<ForestParams>(&model.params)) {
        json trees = json::array();
        for (const Tree& t : rf->trees) trees.push_back(tree_to_json(t));
        j["rf"] = {{"trees", std::move(trees)}};
    } else if (const auto* boost = std::get_if<BoostParams>(&model.params)) {
        json trees = json::array();
        for (const Tree& t : boost->trees) trees.push_back(tree_to_json(t));
        j["gbdt"] = {{"base_score", boost->base_score},
                     {"learning_rate", boost->learning_rate},
                     {"trees", std::move(trees)},
                     {"train_loss", boost->train_loss}};
    } else {
        const auto& lin = std::get<LinearParams>(model.params);
        j["linear"] = {{"weights", lin.weights}, {"bias", lin.bias}};
    }
    write_text_file(path, j.dump(1) + "\n");
}

TrainedClassifier load_classifier(const std::string& path) {
    json j = json::parse(read_text_file(path));
    if (j.value("container", "") != kContainer) throw std::runtime_error("not a classifier file: " + path);
    if (j.value("version", 0) != kVersion) throw std::runtime_error("unsupported classifier version in " + path);

    TrainedClassifier model;
    model.spec = spec_from_json(j.at("spec"));
    model.dimension = j.at("dimension").get<std::size_t>();

    if (j.contains("gnb")) {
        GnbParams p;
        p.log_prior = j["gnb"].at("log_prior").get<std::vector<double>>();
        p.mean = j["gnb"].at("mean").get<eval::Matrix>();
        p.variance = j["gnb"].at("variance").get<eval::Matrix>();
        model.params = std::move(p);
    } else if (j.contains("rf")) {
        ForestParams p;
        for (const auto& t : j["rf"].at("trees")) p.trees.push_back(tree_from_json(t));
        model.params = std::move(p);
    } else if (j.contains("gbdt")) {
        BoostParams p;
        p.base_score = j["gbdt"].at("base_score").get<double>();
        p.learning_rate = j["gbdt"].at("learning_rate").get<double>();
        for (const auto& t : j["gbdt"].at("trees")) p.trees.push_back(tree_from_json(t));
        p.train_loss = j["gbdt"].at("train_loss").get<std::vector<double>>();
        model.params = std::move(p);
    } else if (j.contains("linear")) {
        LinearParams p;
        p.weights = j["linear"].at("weights").get<std::vector<double>>();
        p.bias = j["linear"].at("bias").get<double>();
        model.params = std::move(p);
    } else {
        throw std::runtime_error("classifier container missing parameters: " + path);
    }
    return model;
}

}  // namespace watvec::ml
