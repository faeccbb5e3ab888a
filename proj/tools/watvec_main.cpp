// watvec: turn listed websites into a pseudo-WebAssembly vector dataset and
// evaluate it for malicious-website detection.
//
//   collect    URL lists -> scripts/
//   convert    scripts/  -> wasm/ + wat/
//   vectorize  wat/      -> models/pv_model.json + vectors/dataset.csv
//   detect     vectors/  -> per-classifier metrics
//   compare    two models + shared WAT dir -> cosine-difference stats
//   pca        vectors CSV -> 2-D scatter data
//   run        collect; convert; vectorize, with stage timing

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "watvec/common.hpp"
#include "watvec/pipeline.hpp"

namespace {

using watvec::pipeline::PipelineConfig;
namespace fs = std::filesystem;
using nlohmann::json;

struct CliOverrides {
    std::string config_path;
    std::string benign_list, malicious_list, unlabeled_list;
    std::string offline_root, run_root, run_id;
    std::string mode;
    std::vector<std::string> classifiers;
    std::uint64_t seed = 0;
    int vector_size = 0, epochs = 0, infer_epochs = -1, concurrency = 0;
    double split_ratio = 0.0;
    bool emit_base64 = false;
    bool dump_convertible = false;
    bool offline_flag_used = false;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file; flags override file values");
    cmd->add_option("--benign-list", o.benign_list, "URL list labeled benign");
    cmd->add_option("--malicious-list", o.malicious_list, "URL list labeled malicious");
    cmd->add_option("--unlabeled-list", o.unlabeled_list, "URL list without a forced label");
    cmd->add_option("--offline", o.offline_root, "offline fixture root; no network access")
        ->expected(1);
    cmd->add_option("--run-root", o.run_root, "run directory root (env WATVEC_RUN_ROOT)");
    cmd->add_option("--run-id", o.run_id, "run identifier under the run root");
    cmd->add_option("--seed", o.seed, "master seed for every stage");
    cmd->add_option("--vector-size", o.vector_size, "paragraph-vector dimension");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--infer-epochs", o.infer_epochs, "inference epochs (0 = same as epochs)");
    cmd->add_option("--mode", o.mode, "pvdm|pvdbow");
    cmd->add_option("--split-ratio", o.split_ratio, "train fraction for detect");
    cmd->add_option("--classifiers", o.classifiers, "classifier kinds for detect")->delimiter(',');
    cmd->add_option("--concurrency", o.concurrency, "parallel fetches during collect");
    cmd->add_flag("--emit-base64", o.emit_base64, "also write base64-encoded wasm");
    cmd->add_flag("--dump-convertible", o.dump_convertible, "dump each convertible set as JSON lines");
}

PipelineConfig build_config(const CliOverrides& o) {
    PipelineConfig config;
    if (!o.config_path.empty()) {
        fs::path path = o.config_path;
        json j = json::parse(watvec::read_text_file(path));
        config = PipelineConfig::from_json(j, path.parent_path());
    }
    if (const char* env_root = std::getenv("WATVEC_RUN_ROOT"); env_root && config.run_root == "runs") {
        config.run_root = env_root;
    }
    if (!o.benign_list.empty()) config.benign_list = o.benign_list;
    if (!o.malicious_list.empty()) config.malicious_list = o.malicious_list;
    if (!o.unlabeled_list.empty()) config.unlabeled_list = o.unlabeled_list;
    if (!o.offline_root.empty()) config.fetch.offline_root = o.offline_root;
    if (!o.run_root.empty()) config.run_root = o.run_root;
    if (!o.run_id.empty()) config.run_id = o.run_id;
    if (o.seed != 0) config.seed = o.seed;
    if (o.vector_size != 0) config.pv.vector_size = o.vector_size;
    if (o.epochs != 0) config.pv.epochs = o.epochs;
    if (o.infer_epochs >= 0) config.infer_epochs = o.infer_epochs;
    if (o.concurrency != 0) config.fetch.concurrency = o.concurrency;
    if (o.split_ratio != 0.0) config.split_ratio = o.split_ratio;
    if (o.emit_base64) config.emit_base64 = true;
    if (o.dump_convertible) config.dump_convertible = true;
    if (!o.mode.empty()) {
        auto mode = watvec::pv::parse_mode(o.mode);
        if (!mode) throw watvec::pipeline::UsageError("unknown mode: " + o.mode);
        config.pv.mode = *mode;
    }
    if (!o.classifiers.empty()) {
        config.classifiers.clear();
        for (const auto& name : o.classifiers) {
            auto kind = watvec::ml::parse_kind(name);
            if (!kind) throw watvec::pipeline::UsageError("unknown classifier: " + name);
            config.classifiers.push_back(*kind);
        }
    }
    return config;
}

void write_error_report(const fs::path& dir, const std::string& stage, const std::string& message) {
    try {
        fs::create_directories(dir);
        json report{{"stage", stage}, {"error", message}, {"at", watvec::ingest::utc_timestamp()}};
        watvec::write_text_file(dir / "error.json", report.dump(1) + "\n");
    } catch (...) {
        // stderr still carries the message
    }
}

// run-dir subcommands report into the run dir; compare/pca into their
// output dir (or the working directory when none was given)
void write_error_report_for(const std::string& active, const PipelineConfig& config, const std::string& out_dir,
                            const std::string& stage, const std::string& message) {
    if (active == "compare" || active == "pca") {
        write_error_report(out_dir.empty() ? fs::path(".") : fs::path(out_dir), stage, message);
    } else {
        write_error_report(config.run_root / config.run_id, stage, message);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"JavaScript-to-WAT vector dataset pipeline"};
    app.require_subcommand(1);

    CliOverrides o;
    std::string compare_model_a, compare_model_b, compare_wat_dir, pca_vectors, pca_out;

    auto* cmd_collect = app.add_subcommand("collect", "fetch pages and extract one script per site");
    auto* cmd_convert = app.add_subcommand("convert", "compile scripts to wasm and print WAT");
    auto* cmd_vectorize = app.add_subcommand("vectorize", "train paragraph vectors over WAT files");
    auto* cmd_detect = app.add_subcommand("detect", "split, train and evaluate the classifiers");
    auto* cmd_run = app.add_subcommand("run", "collect, convert and vectorize with timing");
    auto* cmd_compare = app.add_subcommand("compare", "cosine-difference distribution of two models");
    auto* cmd_pca = app.add_subcommand("pca", "project a vector dataset to two dimensions");

    for (auto* cmd : {cmd_collect, cmd_convert, cmd_vectorize, cmd_detect, cmd_run}) {
        add_common_options(cmd, o);
    }
    cmd_compare->add_option("--model-a", compare_model_a, "first trained model")->required();
    cmd_compare->add_option("--model-b", compare_model_b, "second trained model")->required();
    cmd_compare->add_option("--wat-dir", compare_wat_dir, "directory of shared .wat test files")->required();
    cmd_compare->add_option("--infer-epochs", o.infer_epochs, "inference epochs (0 = model epochs)");
    cmd_compare->add_option("--report-dir", pca_out, "where to write compare reports");
    cmd_pca->add_option("vectors", pca_vectors, "vector dataset CSV")->required();
    cmd_pca->add_option("--out-dir", pca_out, "output directory for scatter data");

    CLI11_PARSE(app, argc, argv);

    std::string active = app.get_subcommands().front()->get_name();
    PipelineConfig config;
    try {
        if (active != "compare" && active != "pca") config = build_config(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        using watvec::pipeline::StageCounts;
        if (active == "collect") {
            StageCounts c = watvec::pipeline::cmd_collect(config);
            std::cout << "collect: " << c.processed << " scripts, " << c.skipped << " skipped\n";
        } else if (active == "convert") {
            StageCounts c = watvec::pipeline::cmd_convert(config);
            std::cout << "convert: " << c.processed << " modules, " << c.skipped << " skipped\n";
        } else if (active == "vectorize") {
            StageCounts c = watvec::pipeline::cmd_vectorize(config);
            std::cout << "vectorize: " << c.processed << " vectors, " << c.skipped << " skipped\n";
        } else if (active == "detect") {
            auto result = watvec::pipeline::cmd_detect(config);
            std::cout << "train " << result.train_size << " / test " << result.test_size;
            if (result.unlabeled_skipped) std::cout << " (" << result.unlabeled_skipped << " unlabeled skipped)";
            std::cout << "\n" << watvec::pipeline::format_detection_table(result);
        } else if (active == "run") {
            auto result = watvec::pipeline::cmd_run(config);
            std::cout << "collect: " << result.collect.processed << " scripts, " << result.collect.skipped
                      << " skipped\n";
            std::cout << "convert: " << result.convert.processed << " modules, " << result.convert.skipped
                      << " skipped\n";
            std::cout << "vectorize: " << result.vectorize.processed << " vectors, " << result.vectorize.skipped
                      << " skipped\n";
            std::cout << watvec::pipeline::format_timing_table(result.timing);
        } else if (active == "compare") {
            std::optional<fs::path> report_dir;
            if (!pca_out.empty()) report_dir = pca_out;
            auto stats = watvec::pipeline::cmd_compare(compare_model_a, compare_model_b, compare_wat_dir,
                                                       std::max(o.infer_epochs, 0), report_dir);
            std::cout << "docs " << stats.n_docs << ", pairs " << stats.n_pairs << "\n";
            std::cout << "median |dcos| " << stats.box.median << ", q1 " << stats.box.q1 << ", q3 " << stats.box.q3
                      << ", max " << stats.box.max << "\n";
        } else if (active == "pca") {
            fs::path out_dir = pca_out.empty() ? fs::path(".") : fs::path(pca_out);
            auto result = watvec::pipeline::cmd_pca(pca_vectors, out_dir);
            std::cout << "explained variance: " << result.explained_variance[0] << ", "
                      << result.explained_variance[1] << "\n";
            if (result.degenerate_rank) std::cout << "warning: second component is degenerate\n";
            std::cout << "scatter: " << result.scatter_csv.string() << "\n";
        }
    } catch (const watvec::pipeline::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const watvec::pipeline::StageFailure& e) {
        std::cerr << "error in stage " << e.stage << ": " << e.what() << "\n";
        write_error_report_for(active, config, pca_out, e.stage, e.what());
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error in stage " << active << ": " << e.what() << "\n";
        write_error_report_for(active, config, pca_out, active, e.what());
        return 2;
    }
    return 0;
}
