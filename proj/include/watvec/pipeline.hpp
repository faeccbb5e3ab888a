#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "watvec/classifiers.hpp"
#include "watvec/dataset_store.hpp"
#include "watvec/eval.hpp"
#include "watvec/ingest.hpp"
#include "watvec/pv.hpp"

namespace watvec::pipeline {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StageFailure : public std::runtime_error {
public:
    StageFailure(std::string stage_name, const std::string& what)
        : std::runtime_error(what), stage(std::move(stage_name)) {}
    std::string stage;
};

struct PipelineConfig {
    std::optional<std::filesystem::path> benign_list;
    std::optional<std::filesystem::path> malicious_list;
    std::optional<std::filesystem::path> unlabeled_list;

    ingest::FetchConfig fetch;
    pv::PVHyperparams pv;
    int infer_epochs = 0;  // 0 = same as pv.epochs
    std::vector<ml::ClassifierKind> classifiers{ml::ClassifierKind::gnb, ml::ClassifierKind::rf,
                                                ml::ClassifierKind::gbdt, ml::ClassifierKind::linear};
    double split_ratio = 0.8;
    std::uint64_t seed = 1;
    std::filesystem::path run_root = "runs";
    std::string run_id = "run";
    bool emit_base64 = false;
    bool dump_convertible = false;

    void check() const;  // throws UsageError

    // everything that determines a re-run, including input list digests
    nlohmann::json manifest_config() const;

    // file values; relative paths resolve against the config file directory
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
};

struct StageCounts {
    std::size_t processed = 0;
    std::size_t skipped = 0;
};

StageCounts cmd_collect(const PipelineConfig& config, eval::StageTimer* timer = nullptr);
StageCounts cmd_convert(const PipelineConfig& config, eval::StageTimer* timer = nullptr);
StageCounts cmd_vectorize(const PipelineConfig& config, eval::StageTimer* timer = nullptr);

struct ModelEvaluation {
    ml::ClassifierKind kind;
    eval::ConfusionCounts confusion;
    eval::MetricReport metrics;
};

struct DetectionResult {
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t unlabeled_skipped = 0;
    std::vector<ModelEvaluation> models;
};

DetectionResult cmd_detect(const PipelineConfig& config);

eval::DiffStats cmd_compare(const std::filesystem::path& model_a, const std::filesystem::path& model_b,
                            const std::filesystem::path& wat_dir, int infer_epochs,
                            const std::optional<std::filesystem::path>& report_dir);

struct PcaResult {
    std::array<double, 2> explained_variance{0.0, 0.0};
    bool degenerate_rank = false;
    std::filesystem::path scatter_csv;
};

PcaResult cmd_pca(const std::filesystem::path& vectors_csv, const std::filesystem::path& out_dir);

struct RunResult {
    StageCounts collect;
    StageCounts convert;
    StageCounts vectorize;
    std::vector<eval::StageTimer::Stage> timing;
};

RunResult cmd_run(const PipelineConfig& config);

// formatting shared with the CLI
std::string format_detection_table(const DetectionResult& result);
std::string format_timing_table(const std::vector<eval::StageTimer::Stage>& stages);

}  // namespace watvec::pipeline
