#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "watvec/ingest.hpp"

namespace watvec::store {

class SchemaMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& why)
        : std::runtime_error("line " + std::to_string(line) + ": " + why), line(line) {}
    int line;
};
class DuplicateDocId : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class ManifestConflict : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct VectorDataset {
    struct Row {
        std::string doc_id;
        std::optional<ingest::Label> label;
        std::vector<double> features;
    };
    std::size_t dimension = 0;
    std::vector<Row> rows;
};

// CSV with header doc_id,label,f0..f{d-1}; floats carry round-trip precision
void write_dataset(const VectorDataset& ds, const std::filesystem::path& path);
VectorDataset read_dataset(const std::filesystem::path& path);

// URL-derived slug plus content digest; stable and collision-safe file stem
std::string file_stem(const std::string& url, std::string_view content);

struct RunDir {
    std::filesystem::path root;  // <run_root>/<run_id>

    std::filesystem::path scripts() const { return root / "scripts"; }
    std::filesystem::path wasm() const { return root / "wasm"; }
    std::filesystem::path wat() const { return root / "wat"; }
    std::filesystem::path vectors() const { return root / "vectors"; }
    std::filesystem::path models() const { return root / "models"; }
    std::filesystem::path reports() const { return root / "reports"; }
    std::filesystem::path manifest_path() const { return root / "manifest.json"; }
    std::filesystem::path timing_path() const { return root / "timing.json"; }
};

// Creates the six-directory skeleton and the manifest. Idempotent for the
// same configuration; a differing configuration is a ManifestConflict.
RunDir layout_run_dir(const std::filesystem::path& run_root, const std::string& run_id,
                      const nlohmann::json& config);

nlohmann::json read_manifest(const RunDir& dir);

// Merges per-stage counts into the manifest ("stages" object).
void record_stage(const RunDir& dir, const std::string& stage, const nlohmann::json& info);

}  // namespace watvec::store
