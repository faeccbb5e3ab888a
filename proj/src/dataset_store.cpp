#include "watvec/dataset_store.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "watvec/common.hpp"

namespace watvec::store {

using nlohmann::json;

void write_dataset(const VectorDataset& ds, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "doc_id,label";
    for (std::size_t i = 0; i < ds.dimension; ++i) out << ",f" << i;
    out << "\n";

    std::set<std::string> seen;
    for (const auto& row : ds.rows) {
        if (row.features.size() != ds.dimension) {
            throw SchemaMismatch("row " + row.doc_id + " has " + std::to_string(row.features.size()) +
                                 " features, dataset dimension is " + std::to_string(ds.dimension));
        }
        if (row.doc_id.find_first_of(",\"\n\r") != std::string::npos) {
            throw SchemaMismatch("doc_id contains CSV delimiter characters: " + row.doc_id);
        }
        if (!seen.insert(row.doc_id).second) throw DuplicateDocId("DuplicateDocId: " + row.doc_id);
        out << row.doc_id << ',' << (row.label ? ingest::name_of(*row.label) : "");
        for (double v : row.features) out << ',' << shortest_double(v);
        out << "\n";
    }
    write_text_file(path, out.str());
}

VectorDataset read_dataset(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? text.size() - pos : nl - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        pos = nl == std::string::npos ? text.size() : nl + 1;
    }
    if (lines.empty()) throw SchemaMismatch("empty dataset file: " + path.string());

    auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string::npos ? line.size() - start : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return fields;
    };

    auto header = split(lines[0]);
    if (header.size() < 2 || header[0] != "doc_id" || header[1] != "label") {
        throw SchemaMismatch("bad header: " + lines[0]);
    }
    VectorDataset ds;
    ds.dimension = header.size() - 2;
    for (std::size_t i = 0; i < ds.dimension; ++i) {
        if (header[i + 2] != "f" + std::to_string(i)) throw SchemaMismatch("bad header column: " + header[i + 2]);
    }

    std::set<std::string> seen;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        auto fields = split(lines[li]);
        int line_no = static_cast<int>(li + 1);
        if (fields.size() != ds.dimension + 2) {
            throw ParseError(line_no, "expected " + std::to_string(ds.dimension + 2) + " fields, got " +
                                          std::to_string(fields.size()));
        }
        VectorDataset::Row row;
        row.doc_id = fields[0];
        if (row.doc_id.empty()) throw ParseError(line_no, "empty doc_id");
        if (!seen.insert(row.doc_id).second) throw DuplicateDocId("DuplicateDocId: " + row.doc_id);
        if (!fields[1].empty()) {
            auto label = ingest::parse_label(fields[1]);
            if (!label) throw ParseError(line_no, "unknown label: " + fields[1]);
            row.label = label;
        }
        row.features.reserve(ds.dimension);
        for (std::size_t k = 2; k < fields.size(); ++k) {
            const std::string& f = fields[k];
            double v = 0;
            auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
                throw ParseError(line_no, "bad float: " + f);
            }
            row.features.push_back(v);
        }
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

std::string file_stem(const std::string& url, std::string_view content) {
    std::string slug;
    auto parsed = ingest::ParsedUrl::parse(url);
    std::string base = parsed ? parsed->host + parsed->path : url;
    for (char c : base) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_') {
            slug.push_back(c);
        } else {
            slug.push_back('_');
        }
        if (slug.size() >= 80) break;
    }
    while (!slug.empty() && slug.back() == '_') slug.pop_back();
    if (slug.empty()) slug = "doc";

    char digest[17];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(content)));
    return slug + "-" + std::string(digest, 12);
}

RunDir layout_run_dir(const std::filesystem::path& run_root, const std::string& run_id, const json& config) {
    RunDir dir{run_root / run_id};
    std::filesystem::create_directories(dir.root);
    for (const auto& sub : {dir.scripts(), dir.wasm(), dir.wat(), dir.vectors(), dir.models(), dir.reports()}) {
        std::filesystem::create_directories(sub);
    }

    if (std::filesystem::exists(dir.manifest_path())) {
        json existing = json::parse(read_text_file(dir.manifest_path()));
        if (existing.value("config", json::object()) != config) {
            throw ManifestConflict("ManifestConflict: run " + run_id +
                                   " already exists with a different configuration");
        }
        return dir;
    }

    json manifest;
    manifest["container"] = "watvec-run-manifest";
    manifest["version"] = 1;
    manifest["tool_version"] = kToolVersion;
    manifest["created_at"] = ingest::utc_timestamp();
    manifest["config"] = config;
    manifest["stages"] = json::object();
    write_text_file(dir.manifest_path(), manifest.dump(1) + "\n");
    return dir;
}

json read_manifest(const RunDir& dir) {
    return json::parse(read_text_file(dir.manifest_path()));
}

void record_stage(const RunDir& dir, const std::string& stage, const json& info) {
    json manifest = read_manifest(dir);
    manifest["stages"][stage] = info;
    manifest["updated_at"] = ingest::utc_timestamp();
    write_text_file(dir.manifest_path(), manifest.dump(1) + "\n");
}

}  // namespace watvec::store
