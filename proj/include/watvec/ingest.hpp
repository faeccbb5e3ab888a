#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace watvec::ingest {

enum class Label { benign, malicious };

const char* name_of(Label label);
std::optional<Label> parse_label(std::string_view text);

struct UrlEntry {
    std::string url;
    std::optional<Label> label;
};

struct ParsedUrl {
    std::string scheme;  // http or https
    std::string host;
    int port = -1;  // -1 = scheme default
    std::string path;   // always starts with '/'
    std::string query;  // without '?', may be empty

    static std::optional<ParsedUrl> parse(std::string_view url);
    std::string origin() const;    // scheme://host[:port]
    std::string request_target() const;  // path[?query]
};

struct LineError {
    int line = 0;  // 1-based
    std::string text;
    std::string reason;
};

struct UrlListResult {
    std::vector<UrlEntry> entries;
    std::vector<LineError> errors;
};

// Records `url` or `url,label`; `#` lines are comments. Malformed lines are
// collected as errors, valid lines still come back in input order.
UrlListResult parse_url_list(std::string_view text);

struct FetchConfig {
    double timeout_seconds = 10.0;
    int max_retries = 2;
    std::size_t max_body_bytes = 4 * 1024 * 1024;
    int concurrency = 4;
    std::string user_agent = "watvec/0.1";
    std::optional<std::filesystem::path> offline_root;

    void check() const;
};

enum class FetchFailure { bad_url, not_found, timeout, http_status, oversize, connection };

const char* name_of(FetchFailure f);

struct FetchError {
    std::string url;
    FetchFailure cause = FetchFailure::connection;
    std::string detail;
};

struct FetchResult {
    std::optional<std::string> body;
    std::optional<FetchError> error;
    bool ok() const { return body.has_value(); }
};

// Offline mode reads fixture files under offline_root and never opens a
// connection; the http path is virtual so tests can plant a failing stub.
class Fetcher {
public:
    explicit Fetcher(FetchConfig cfg);
    virtual ~Fetcher() = default;

    FetchResult fetch_page(const std::string& url) const;
    const FetchConfig& config() const { return cfg_; }

    // <offline_root>/<host><path>, '/' as directory separators, trailing
    // index.html for bare hosts and directory paths
    static std::filesystem::path offline_path(const std::filesystem::path& root, const ParsedUrl& url);

protected:
    virtual FetchResult fetch_http(const ParsedUrl& url) const;

private:
    FetchResult fetch_offline(const ParsedUrl& url) const;
    FetchConfig cfg_;
};

enum class ScriptKind { inline_script, external_script };

const char* name_of(ScriptKind kind);

struct ScriptSource {
    std::string origin_url;
    ScriptKind kind = ScriptKind::inline_script;
    std::string source_text;  // non-empty
    std::string fetched_at;   // UTC, ISO-8601
};

struct MissingScript {
    std::string reason;
};

using ExtractOutcome = std::variant<ScriptSource, MissingScript>;

// First <script> with a non-empty inline body wins; otherwise src scripts
// are fetched in document order, falling through on failure. Non-JavaScript
// `type` attributes are skipped.
ExtractOutcome extract_first_script(std::string_view html, const std::string& base_url, const Fetcher& fetcher);

// RFC-3986-ish reference resolution, enough for script src attributes
std::optional<ParsedUrl> resolve_url(const ParsedUrl& base, std::string_view href);

struct CollectedScript {
    std::size_t input_index = 0;
    UrlEntry entry;
    ScriptSource script;
};

struct SkippedEntry {
    std::size_t input_index = 0;
    std::string url;
    std::string stage;  // "fetch" | "extract"
    std::string reason;
};

struct CollectResult {
    std::vector<CollectedScript> scripts;  // input order
    std::vector<SkippedEntry> skipped;     // input order
};

// Bounded-parallel fetch+extract re-sequenced to input order.
CollectResult collect(const std::vector<UrlEntry>& entries, const Fetcher& fetcher);

std::string utc_timestamp();

}  // namespace watvec::ingest
