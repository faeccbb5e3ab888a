#include "watvec/pipeline.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "watvec/common.hpp"
#include "watvec/js_compiler.hpp"
#include "watvec/wasm_codec.hpp"

namespace watvec::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string base64(const std::vector<std::uint8_t>& bytes) {
    static const char* alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        std::uint32_t chunk = bytes[i] << 16;
        if (i + 1 < bytes.size()) chunk |= bytes[i + 1] << 8;
        if (i + 2 < bytes.size()) chunk |= bytes[i + 2];
        out.push_back(alphabet[(chunk >> 18) & 63]);
        out.push_back(alphabet[(chunk >> 12) & 63]);
        out.push_back(i + 1 < bytes.size() ? alphabet[(chunk >> 6) & 63] : '=');
        out.push_back(i + 2 < bytes.size() ? alphabet[chunk & 63] : '=');
    }
    return out;
}

json label_json(const std::optional<ingest::Label>& label) {
    if (!label) return nullptr;
    return ingest::name_of(*label);
}

std::optional<ingest::Label> label_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return ingest::parse_label(j.get<std::string>());
}

// one line per record, stable key order via nlohmann's sorted objects
void write_jsonl(const fs::path& path, const std::vector<json>& records) {
    std::ostringstream out;
    for (const json& r : records) out << r.dump() << "\n";
    write_text_file(path, out.str());
}

std::vector<json> read_jsonl(const fs::path& path) {
    std::vector<json> out;
    if (!fs::exists(path)) return out;
    std::string text = read_text_file(path);
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        if (!trim(line).empty()) out.push_back(json::parse(line));
    }
    return out;
}

// each stage owns its lines in the shared skip report; reruns replace them
void update_skip_report(const store::RunDir& dir, const std::vector<std::string>& owned_stages,
                        const std::vector<json>& fresh) {
    fs::path path = dir.reports() / "skip_report.jsonl";
    std::vector<json> kept;
    for (json& line : read_jsonl(path)) {
        std::string stage = line.value("stage", "");
        if (std::find(owned_stages.begin(), owned_stages.end(), stage) == owned_stages.end()) {
            kept.push_back(std::move(line));
        }
    }
    kept.insert(kept.end(), fresh.begin(), fresh.end());
    write_jsonl(path, kept);
}

std::uint64_t digest_file(const fs::path& path) { return fnv1a64(read_text_file(path)); }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

void PipelineConfig::check() const {
    if (!benign_list && !malicious_list && !unlabeled_list) {
        throw UsageError("at least one input list is required");
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw UsageError("split_ratio must be in (0,1)");
    if (run_id.empty()) throw UsageError("run_id must not be empty");
    if (infer_epochs < 0) throw UsageError("infer_epochs must be >= 0");
    try {
        fetch.check();
        pv.check();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

json PipelineConfig::manifest_config() const {
    json lists = json::object();
    auto add_list = [&](const char* name, const std::optional<fs::path>& path) {
        if (!path) return;
        json entry;
        entry["path"] = path->string();
        entry["digest"] = fs::exists(*path) ? hex64(digest_file(*path)) : "missing";
        lists[name] = std::move(entry);
    };
    add_list("benign", benign_list);
    add_list("malicious", malicious_list);
    add_list("unlabeled", unlabeled_list);

    json j;
    j["inputs"] = std::move(lists);
    j["offline_root"] = fetch.offline_root ? json(fetch.offline_root->string()) : json(nullptr);
    j["fetch"] = {{"timeout_seconds", fetch.timeout_seconds},
                  {"max_retries", fetch.max_retries},
                  {"max_body_bytes", fetch.max_body_bytes},
                  {"concurrency", fetch.concurrency},
                  {"user_agent", fetch.user_agent}};
    j["pv"] = {{"vector_size", pv.vector_size}, {"epochs", pv.epochs},
               {"mode", pv::name_of(pv.mode)},  {"window", pv.window},
               {"negative", pv.negative},       {"alpha_start", pv.alpha_start},
               {"alpha_end", pv.alpha_end},     {"min_count", pv.min_count}};
    j["infer_epochs"] = infer_epochs;
    json kinds = json::array();
    for (ml::ClassifierKind k : classifiers) kinds.push_back(ml::name_of(k));
    j["classifiers"] = std::move(kinds);
    j["split_ratio"] = split_ratio;
    j["seed"] = seed;
    j["emit_base64"] = emit_base64;
    j["dump_convertible"] = dump_convertible;
    return j;
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
    PipelineConfig c;
    auto path_of = [&](const json& v) -> fs::path {
        fs::path p = v.get<std::string>();
        return p.is_absolute() ? p : base_dir / p;
    };
    if (j.contains("benign_list")) c.benign_list = path_of(j["benign_list"]);
    if (j.contains("malicious_list")) c.malicious_list = path_of(j["malicious_list"]);
    if (j.contains("unlabeled_list")) c.unlabeled_list = path_of(j["unlabeled_list"]);
    if (j.contains("offline_root")) c.fetch.offline_root = path_of(j["offline_root"]);
    if (j.contains("run_root")) c.run_root = path_of(j["run_root"]);
    if (j.contains("run_id")) c.run_id = j["run_id"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("split_ratio")) c.split_ratio = j["split_ratio"].get<double>();
    if (j.contains("emit_base64")) c.emit_base64 = j["emit_base64"].get<bool>();
    if (j.contains("dump_convertible")) c.dump_convertible = j["dump_convertible"].get<bool>();
    if (j.contains("infer_epochs")) c.infer_epochs = j["infer_epochs"].get<int>();

    if (j.contains("fetch")) {
        const json& f = j["fetch"];
        if (f.contains("timeout_seconds")) c.fetch.timeout_seconds = f["timeout_seconds"].get<double>();
        if (f.contains("max_retries")) c.fetch.max_retries = f["max_retries"].get<int>();
        if (f.contains("max_body_bytes")) c.fetch.max_body_bytes = f["max_body_bytes"].get<std::size_t>();
        if (f.contains("concurrency")) c.fetch.concurrency = f["concurrency"].get<int>();
        if (f.contains("user_agent")) c.fetch.user_agent = f["user_agent"].get<std::string>();
    }
    if (j.contains("pv")) {
        const json& p = j["pv"];
        if (p.contains("vector_size")) c.pv.vector_size = p["vector_size"].get<int>();
        if (p.contains("epochs")) c.pv.epochs = p["epochs"].get<int>();
        if (p.contains("mode")) {
            auto mode = pv::parse_mode(p["mode"].get<std::string>());
            if (!mode) throw UsageError("unknown pv mode: " + p["mode"].get<std::string>());
            c.pv.mode = *mode;
        }
        if (p.contains("window")) c.pv.window = p["window"].get<int>();
        if (p.contains("negative")) c.pv.negative = p["negative"].get<int>();
        if (p.contains("alpha_start")) c.pv.alpha_start = p["alpha_start"].get<double>();
        if (p.contains("alpha_end")) c.pv.alpha_end = p["alpha_end"].get<double>();
        if (p.contains("min_count")) c.pv.min_count = p["min_count"].get<int>();
    }
    if (j.contains("classifiers")) {
        c.classifiers.clear();
        for (const json& k : j["classifiers"]) {
            auto kind = ml::parse_kind(k.get<std::string>());
            if (!kind) throw UsageError("unknown classifier kind: " + k.get<std::string>());
            c.classifiers.push_back(*kind);
        }
    }
    return c;
}

namespace {

store::RunDir open_run_dir(const PipelineConfig& config, const std::string& stage) {
    try {
        return store::layout_run_dir(config.run_root, config.run_id, config.manifest_config());
    } catch (const store::ManifestConflict& e) {
        throw StageFailure(stage, e.what());
    }
}

struct LoadedLists {
    std::vector<ingest::UrlEntry> entries;
    std::vector<json> parse_skips;
};

LoadedLists load_url_lists(const PipelineConfig& config) {
    LoadedLists out;
    auto add = [&](const std::optional<fs::path>& path, std::optional<ingest::Label> forced) {
        if (!path) return;
        if (!fs::exists(*path)) throw StageFailure("collect", "input list not found: " + path->string());
        auto parsed = ingest::parse_url_list(read_text_file(*path));
        for (auto& entry : parsed.entries) {
            // list identity assigns the label; explicit per-line labels win
            if (forced && !entry.label) entry.label = forced;
            out.entries.push_back(std::move(entry));
        }
        for (const auto& err : parsed.errors) {
            out.parse_skips.push_back(json{{"url", err.text},
                                           {"stage", "parse"},
                                           {"reason", err.reason + " (" + path->filename().string() + " line " +
                                                          std::to_string(err.line) + ")"}});
        }
    };
    add(config.benign_list, ingest::Label::benign);
    add(config.malicious_list, ingest::Label::malicious);
    add(config.unlabeled_list, std::nullopt);
    return out;
}

}  // namespace

StageCounts cmd_collect(const PipelineConfig& config, eval::StageTimer* timer) {
    config.check();
    store::RunDir dir = open_run_dir(config, "collect");
    if (timer) timer->start("collect");

    LoadedLists lists = load_url_lists(config);
    std::vector<json> skips = std::move(lists.parse_skips);

    ingest::CollectResult collected;
    try {
        ingest::Fetcher fetcher(config.fetch);
        collected = ingest::collect(lists.entries, fetcher);
    } catch (const std::exception& e) {
        throw StageFailure("collect", e.what());
    }
    for (const auto& s : collected.skipped) {
        skips.push_back(json{{"url", s.url}, {"stage", s.stage}, {"reason", s.reason}});
    }

    std::vector<json> index;
    std::set<std::string> stems;
    std::size_t stored = 0;
    for (const auto& item : collected.scripts) {
        std::string stem = store::file_stem(item.entry.url, item.script.source_text);
        if (!stems.insert(stem).second) {
            skips.push_back(json{{"url", item.entry.url}, {"stage", "store"}, {"reason", "duplicate document " + stem}});
            continue;
        }
        std::string file = stem + ".js";
        write_text_file(dir.scripts() / file, item.script.source_text);
        index.push_back(json{{"doc_id", stem},
                             {"url", item.entry.url},
                             {"label", label_json(item.entry.label)},
                             {"kind", ingest::name_of(item.script.kind)},
                             {"fetched_at", item.script.fetched_at},
                             {"file", file}});
        ++stored;
    }
    write_text_file(dir.scripts() / "index.json", json(index).dump(1) + "\n");
    update_skip_report(dir, {"parse", "fetch", "extract", "store"}, skips);

    if (timer) timer->stop(stored);
    StageCounts counts{stored, skips.size()};
    store::record_stage(dir, "collect",
                        json{{"processed", counts.processed}, {"skipped", counts.skipped},
                             {"input_entries", lists.entries.size()}});
    return counts;
}

StageCounts cmd_convert(const PipelineConfig& config, eval::StageTimer* timer) {
    config.check();
    store::RunDir dir = open_run_dir(config, "convert");
    fs::path index_path = dir.scripts() / "index.json";
    if (!fs::exists(index_path)) throw StageFailure("convert", "scripts/index.json missing; run collect first");
    if (timer) timer->start("convert");

    json script_index = json::parse(read_text_file(index_path));
    std::vector<json> skips;
    std::vector<json> conversion_lines;
    std::vector<json> convertible_dump;
    std::vector<json> wat_index;
    std::size_t converted = 0;

    for (const json& entry : script_index) {
        std::string doc_id = entry.at("doc_id").get<std::string>();
        std::string url = entry.at("url").get<std::string>();
        std::string source = read_text_file(dir.scripts() / entry.at("file").get<std::string>());

        auto extraction = js::extract_convertible(js::lex_js(source));
        json skipped_fns = json::array();
        for (const auto& sk : extraction.report.skipped) {
            skipped_fns.push_back(json{{"name", sk.name}, {"line", sk.line}, {"reason", sk.reason}});
        }
        conversion_lines.push_back(json{{"doc_id", doc_id},
                                        {"url", url},
                                        {"functions_converted", extraction.report.functions_converted},
                                        {"functions_skipped", extraction.report.functions_skipped()},
                                        {"literals_embedded", extraction.report.literals_embedded},
                                        {"skipped", std::move(skipped_fns)}});

        if (config.dump_convertible) {
            convertible_dump.push_back(
                json{{"doc_id", doc_id}, {"url", url}, {"convertible", json::parse(js::to_json(extraction.set))}});
        }

        auto module = js::compile_to_module(extraction.set);
        if (!module) {
            skips.push_back(json{{"url", url}, {"stage", "convert"}, {"reason", "nothing convertible"}});
            continue;
        }
        std::vector<std::uint8_t> bytes;
        std::string wat;
        try {
            bytes = wasm::encode_module(*module);
            wat = wasm::print_wat(*module);
        } catch (const std::exception& e) {
            throw StageFailure("convert", std::string("emitted module rejected: ") + e.what() + " (" + doc_id + ")");
        }
        write_binary_file(dir.wasm() / (doc_id + ".wasm"), bytes);
        if (config.emit_base64) write_text_file(dir.wasm() / (doc_id + ".wasm.b64"), base64(bytes) + "\n");
        write_text_file(dir.wat() / (doc_id + ".wat"), wat);
        wat_index.push_back(json{{"doc_id", doc_id},
                                 {"url", url},
                                 {"label", entry.at("label")},
                                 {"file", doc_id + ".wat"}});
        ++converted;
    }

    write_text_file(dir.wat() / "index.json", json(wat_index).dump(1) + "\n");
    write_jsonl(dir.reports() / "conversion_report.jsonl", conversion_lines);
    if (config.dump_convertible) write_jsonl(dir.reports() / "convertible_dump.jsonl", convertible_dump);
    update_skip_report(dir, {"convert"}, skips);

    if (timer) timer->stop(converted);
    StageCounts counts{converted, skips.size()};
    store::record_stage(dir, "convert", json{{"processed", counts.processed}, {"skipped", counts.skipped}});
    return counts;
}

StageCounts cmd_vectorize(const PipelineConfig& config, eval::StageTimer* timer) {
    config.check();
    store::RunDir dir = open_run_dir(config, "vectorize");
    fs::path index_path = dir.wat() / "index.json";
    if (!fs::exists(index_path)) throw StageFailure("vectorize", "wat/index.json missing; run convert first");
    if (timer) timer->start("vectorize");

    json wat_index = json::parse(read_text_file(index_path));
    std::vector<pv::WatDocument> docs;
    std::vector<std::optional<ingest::Label>> labels;
    std::vector<json> skips;
    for (const json& entry : wat_index) {
        std::string doc_id = entry.at("doc_id").get<std::string>();
        auto doc = pv::tokenize_wat(read_text_file(dir.wat() / entry.at("file").get<std::string>()), doc_id);
        if (doc.empty()) {
            skips.push_back(json{{"url", entry.at("url")}, {"stage", "vectorize"}, {"reason", "empty WAT document"}});
            continue;
        }
        docs.push_back(std::move(doc));
        labels.push_back(label_from_json(entry.at("label")));
    }

    pv::PVHyperparams hyper = config.pv;
    hyper.seed = config.seed;
    pv::PVModel model;
    try {
        model = pv::train(docs, hyper);
    } catch (const std::exception& e) {
        throw StageFailure("vectorize", e.what());
    }
    pv::save_model(model, (dir.models() / "pv_model.json").string());

    store::VectorDataset ds;
    ds.dimension = static_cast<std::size_t>(hyper.vector_size);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        ds.rows.push_back({docs[i].doc_id, labels[i], model.doc_vecs[i]});
    }
    store::write_dataset(ds, dir.vectors() / "dataset.csv");
    update_skip_report(dir, {"vectorize"}, skips);

    if (timer) timer->stop(docs.size());
    StageCounts counts{docs.size(), skips.size()};
    store::record_stage(dir, "vectorize",
                        json{{"processed", counts.processed}, {"skipped", counts.skipped},
                             {"vocabulary", model.vocab.size()}});
    return counts;
}

DetectionResult cmd_detect(const PipelineConfig& config) {
    config.check();
    store::RunDir dir = open_run_dir(config, "detect");
    fs::path vectors_path = dir.vectors() / "dataset.csv";
    if (!fs::exists(vectors_path)) throw StageFailure("detect", "vectors/dataset.csv missing; run vectorize first");

    DetectionResult result;
    try {
        store::VectorDataset ds = store::read_dataset(vectors_path);
        std::vector<ml::LabeledVector> labeled;
        for (const auto& row : ds.rows) {
            if (!row.label) {
                ++result.unlabeled_skipped;
                continue;
            }
            labeled.push_back({row.doc_id, row.features, *row.label == ingest::Label::malicious ? 1 : 0});
        }
        auto [train, test] = ml::train_test_split(labeled, config.split_ratio, config.seed);
        result.train_size = train.size();
        result.test_size = test.size();

        for (ml::ClassifierKind kind : config.classifiers) {
            ml::ClassifierSpec spec;
            spec.kind = kind;
            spec.seed = config.seed;
            ml::TrainedClassifier model = ml::fit(spec, train);
            ml::save_classifier(model, (dir.models() / ("classifier_" + std::string(ml::name_of(kind)) + ".json")).string());
            ModelEvaluation ev;
            ev.kind = kind;
            ev.confusion = ml::evaluate(model, test);
            ev.metrics = eval::classification_metrics(ev.confusion);
            result.models.push_back(ev);
        }
    } catch (const StageFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw StageFailure("detect", e.what());
    }

    json models = json::array();
    for (const auto& ev : result.models) {
        auto metric = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
        models.push_back(json{{"kind", ml::name_of(ev.kind)},
                              {"confusion",
                               {{"tp", ev.confusion.tp}, {"tn", ev.confusion.tn}, {"fp", ev.confusion.fp},
                                {"fn", ev.confusion.fn}}},
                              {"metrics",
                               {{"accuracy", metric(ev.metrics.accuracy)},
                                {"precision", metric(ev.metrics.precision)},
                                {"recall", metric(ev.metrics.recall)},
                                {"f1", metric(ev.metrics.f1)}}}});
    }
    json report{{"seed", config.seed},
                {"split_ratio", config.split_ratio},
                {"train_size", result.train_size},
                {"test_size", result.test_size},
                {"unlabeled_skipped", result.unlabeled_skipped},
                {"models", std::move(models)}};
    write_text_file(dir.reports() / "detection_report.json", report.dump(1) + "\n");
    store::record_stage(dir, "detect", json{{"train_size", result.train_size}, {"test_size", result.test_size}});
    return result;
}

eval::DiffStats cmd_compare(const fs::path& model_a, const fs::path& model_b, const fs::path& wat_dir,
                            int infer_epochs, const std::optional<fs::path>& report_dir) {
    pv::PVModel a, b;
    std::vector<fs::path> wat_files;
    try {
        a = pv::load_model(model_a.string());
        b = pv::load_model(model_b.string());
        for (const auto& entry : fs::directory_iterator(wat_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".wat") wat_files.push_back(entry.path());
        }
    } catch (const std::exception& e) {
        throw StageFailure("compare", e.what());
    }
    std::sort(wat_files.begin(), wat_files.end());
    if (wat_files.size() < 2) throw StageFailure("compare", "need at least 2 .wat files in " + wat_dir.string());

    int epochs_a = infer_epochs > 0 ? infer_epochs : a.hyper.epochs;
    int epochs_b = infer_epochs > 0 ? infer_epochs : b.hyper.epochs;
    eval::VectorsById vecs_a, vecs_b;
    for (const fs::path& path : wat_files) {
        std::string doc_id = path.stem().string();
        pv::WatDocument doc = pv::tokenize_wat(read_text_file(path), doc_id);
        vecs_a[doc_id] = pv::infer_vector(a, doc, epochs_a).vector;
        vecs_b[doc_id] = pv::infer_vector(b, doc, epochs_b).vector;
    }

    eval::DiffStats stats;
    try {
        stats = eval::cosine_diff_distribution(vecs_a, vecs_b);
    } catch (const std::exception& e) {
        throw StageFailure("compare", e.what());
    }

    if (report_dir) {
        fs::create_directories(*report_dir);
        const eval::BoxStats& box = stats.box;
        json report{{"n_docs", stats.n_docs},
                    {"n_pairs", stats.n_pairs},
                    {"box",
                     {{"min", box.min}, {"q1", box.q1}, {"median", box.median}, {"q3", box.q3}, {"max", box.max},
                      {"whisker_low", box.whisker_low}, {"whisker_high", box.whisker_high},
                      {"outliers", box.outliers}}}};
        write_text_file(*report_dir / "compare_report.json", report.dump(1) + "\n");
        std::ostringstream csv;
        csv << "series,value\n";
        for (double v : stats.samples) csv << "cosine_diff," << shortest_double(v) << "\n";
        write_text_file(*report_dir / "compare_box.csv", csv.str());
    }
    return stats;
}

PcaResult cmd_pca(const fs::path& vectors_csv, const fs::path& out_dir) {
    PcaResult result;
    try {
        store::VectorDataset ds = store::read_dataset(vectors_csv);
        eval::Matrix x;
        for (const auto& row : ds.rows) x.push_back(row.features);
        eval::Pca2d pca = eval::pca_2d(x);
        result.explained_variance = pca.explained_variance;
        result.degenerate_rank = pca.degenerate_rank;

        fs::create_directories(out_dir);
        std::ostringstream csv;
        csv << "doc_id,label,pc1,pc2\n";
        for (std::size_t i = 0; i < ds.rows.size(); ++i) {
            csv << ds.rows[i].doc_id << ',' << (ds.rows[i].label ? ingest::name_of(*ds.rows[i].label) : "") << ','
                << shortest_double(pca.projections[i][0]) << ',' << shortest_double(pca.projections[i][1]) << "\n";
        }
        result.scatter_csv = out_dir / "pca_scatter.csv";
        write_text_file(result.scatter_csv, csv.str());
        json report{{"explained_variance", {pca.explained_variance[0], pca.explained_variance[1]}},
                    {"degenerate_rank", pca.degenerate_rank}};
        write_text_file(out_dir / "pca_report.json", report.dump(1) + "\n");
    } catch (const std::exception& e) {
        throw StageFailure("pca", e.what());
    }
    return result;
}

RunResult cmd_run(const PipelineConfig& config) {
    config.check();
    store::RunDir dir = open_run_dir(config, "run");

    RunResult result;
    eval::StageTimer timer;
    result.collect = cmd_collect(config, &timer);
    result.convert = cmd_convert(config, &timer);
    result.vectorize = cmd_vectorize(config, &timer);
    result.timing = timer.report();

    json stages = json::array();
    for (const auto& s : result.timing) {
        stages.push_back(json{{"stage", s.name},
                              {"total_seconds", s.total_seconds},
                              {"samples", s.samples},
                              {"mean_seconds", s.mean_seconds ? json(*s.mean_seconds) : json(nullptr)}});
    }
    write_text_file(dir.timing_path(), json{{"stages", std::move(stages)}}.dump(1) + "\n");
    return result;
}

std::string format_detection_table(const DetectionResult& result) {
    std::ostringstream out;
    out << "model    accuracy   precision  recall     f1\n";
    auto cell = [](const std::optional<double>& v) {
        std::ostringstream c;
        if (v) {
            c << std::fixed << std::setprecision(4) << *v;
        } else {
            c << "undefined";
        }
        std::string s = c.str();
        s.resize(11, ' ');
        return s;
    };
    for (const auto& ev : result.models) {
        std::string name = ml::name_of(ev.kind);
        name.resize(9, ' ');
        out << name << cell(ev.metrics.accuracy) << cell(ev.metrics.precision) << cell(ev.metrics.recall)
            << cell(ev.metrics.f1) << "\n";
    }
    return out.str();
}

std::string format_timing_table(const std::vector<eval::StageTimer::Stage>& stages) {
    std::ostringstream out;
    out << "stage       total_s    samples  mean_s\n";
    for (const auto& s : stages) {
        std::string name = s.name;
        name.resize(12, ' ');
        out << name << std::fixed << std::setprecision(4) << std::setw(8) << s.total_seconds << "  " << std::setw(9)
            << s.samples << "  ";
        if (s.mean_seconds) {
            out << std::fixed << std::setprecision(6) << *s.mean_seconds;
        } else {
            out << "undefined";
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace watvec::pipeline
