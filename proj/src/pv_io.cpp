#include <cmath>

#include <json.hpp>

#include "watvec/common.hpp"
#include "watvec/pv.hpp"

namespace watvec::pv {

using nlohmann::json;

namespace {

constexpr const char* kContainer = "watvec-pv-model";
constexpr int kVersion = 1;

// index map / totals / sampling table from entries already in index order
void finalize_vocab(Vocab& v) {
    v.index.clear();
    v.total_count = 0;
    v.sampling_cdf.clear();
    for (std::size_t i = 0; i < v.entries.size(); ++i) {
        v.index.emplace(v.entries[i].token, static_cast<std::uint32_t>(i));
        v.total_count += v.entries[i].count;
    }
    double norm = 0.0;
    for (const auto& e : v.entries) norm += std::pow(static_cast<double>(e.count), 0.75);
    double acc = 0.0;
    for (const auto& e : v.entries) {
        acc += std::pow(static_cast<double>(e.count), 0.75) / norm;
        v.sampling_cdf.push_back(acc);
    }
    if (!v.sampling_cdf.empty()) v.sampling_cdf.back() = 1.0;
}

json hyper_to_json(const PVHyperparams& h) {
    return json{
        {"vector_size", h.vector_size}, {"epochs", h.epochs},
        {"mode", name_of(h.mode)},      {"window", h.window},
        {"negative", h.negative},       {"alpha_start", h.alpha_start},
        {"alpha_end", h.alpha_end},     {"min_count", h.min_count},
        {"seed", h.seed},
    };
}

PVHyperparams hyper_from_json(const json& j) {
    PVHyperparams h;
    h.vector_size = j.at("vector_size").get<int>();
    h.epochs = j.at("epochs").get<int>();
    auto mode = parse_mode(j.at("mode").get<std::string>());
    if (!mode) throw std::runtime_error("unknown pv mode in model file");
    h.mode = *mode;
    h.window = j.at("window").get<int>();
    h.negative = j.at("negative").get<int>();
    h.alpha_start = j.at("alpha_start").get<double>();
    h.alpha_end = j.at("alpha_end").get<double>();
    h.min_count = j.at("min_count").get<int>();
    h.seed = j.at("seed").get<std::uint64_t>();
    return h;
}

}  // namespace

void save_model(const PVModel& model, const std::string& path) {
    json j;
    j["container"] = kContainer;
    j["version"] = kVersion;
    j["hyper"] = hyper_to_json(model.hyper);
    json vocab = json::array();
    for (const auto& e : model.vocab.entries) vocab.push_back(json::array({e.token, e.count}));
    j["vocab"] = std::move(vocab);
    j["vocab_min_count"] = model.vocab.min_count;
    j["word_in"] = model.word_in;
    j["word_out"] = model.word_out;
    j["doc_ids"] = model.doc_ids;
    j["doc_vecs"] = model.doc_vecs;
    write_text_file(path, j.dump(1) + "\n");
}

PVModel load_model(const std::string& path) {
    json j = json::parse(read_text_file(path));
    if (j.value("container", "") != kContainer) throw std::runtime_error("not a pv model file: " + path);
    if (j.value("version", 0) != kVersion) throw std::runtime_error("unsupported pv model version in " + path);

    PVModel model;
    model.hyper = hyper_from_json(j.at("hyper"));
    model.vocab.min_count = j.at("vocab_min_count").get<int>();
    for (const auto& pair : j.at("vocab")) {
        model.vocab.entries.push_back({pair.at(0).get<std::string>(), pair.at(1).get<std::int64_t>()});
    }
    finalize_vocab(model.vocab);
    model.word_in = j.at("word_in").get<Matrix>();
    model.word_out = j.at("word_out").get<Matrix>();
    model.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
    model.doc_vecs = j.at("doc_vecs").get<Matrix>();
    for (std::size_t i = 0; i < model.doc_ids.size(); ++i) model.doc_index.emplace(model.doc_ids[i], i);
    return model;
}

}  // namespace watvec::pv
