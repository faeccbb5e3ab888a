#include "watvec/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <thread>

#include <httplib.h>

#include "watvec/common.hpp"

namespace watvec::ingest {

const char* name_of(Label label) { return label == Label::benign ? "benign" : "malicious"; }

std::optional<Label> parse_label(std::string_view text) {
    std::string lower = to_lower(trim(text));
    if (lower == "benign") return Label::benign;
    if (lower == "malicious") return Label::malicious;
    return std::nullopt;
}

const char* name_of(FetchFailure f) {
    switch (f) {
        case FetchFailure::bad_url: return "bad_url";
        case FetchFailure::not_found: return "not_found";
        case FetchFailure::timeout: return "timeout";
        case FetchFailure::http_status: return "http_status";
        case FetchFailure::oversize: return "oversize";
        case FetchFailure::connection: return "connection";
    }
    return "?";
}

const char* name_of(ScriptKind kind) { return kind == ScriptKind::inline_script ? "inline" : "external"; }

std::optional<ParsedUrl> ParsedUrl::parse(std::string_view url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos || scheme_end == 0) return std::nullopt;
    ParsedUrl out;
    out.scheme = to_lower(url.substr(0, scheme_end));
    if (out.scheme != "http" && out.scheme != "https") return std::nullopt;

    std::string_view rest = url.substr(scheme_end + 3);
    auto frag = rest.find('#');
    if (frag != std::string_view::npos) rest = rest.substr(0, frag);

    auto path_start = rest.find_first_of("/?");
    std::string_view authority = path_start == std::string_view::npos ? rest : rest.substr(0, path_start);
    if (authority.empty()) return std::nullopt;

    auto colon = authority.rfind(':');
    if (colon != std::string_view::npos) {
        std::string_view port_text = authority.substr(colon + 1);
        if (port_text.empty()) return std::nullopt;
        int port = 0;
        for (char c : port_text) {
            if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
            port = port * 10 + (c - '0');
            if (port > 65535) return std::nullopt;
        }
        out.port = port;
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) return std::nullopt;
    for (char c : authority) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == '/') return std::nullopt;
    }
    out.host = to_lower(authority);

    if (path_start == std::string_view::npos) {
        out.path = "/";
        return out;
    }
    std::string_view tail = rest.substr(path_start);
    auto qmark = tail.find('?');
    if (qmark == std::string_view::npos) {
        out.path = std::string(tail);
    } else {
        out.path = std::string(tail.substr(0, qmark));
        out.query = std::string(tail.substr(qmark + 1));
    }
    if (out.path.empty()) out.path = "/";
    if (out.path[0] != '/') out.path.insert(out.path.begin(), '/');
    return out;
}

std::string ParsedUrl::origin() const {
    std::string out = scheme + "://" + host;
    if (port >= 0) out += ":" + std::to_string(port);
    return out;
}

std::string ParsedUrl::request_target() const {
    return query.empty() ? path : path + "?" + query;
}

UrlListResult parse_url_list(std::string_view text) {
    UrlListResult out;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;

        auto comma = line.find(',');
        std::string url_part = trim(comma == std::string::npos ? line : line.substr(0, comma));
        if (!ParsedUrl::parse(url_part)) {
            out.errors.push_back({line_no, line, "not an absolute http(s) URL"});
            continue;
        }
        UrlEntry entry;
        entry.url = url_part;
        if (comma != std::string::npos) {
            std::string label_part = line.substr(comma + 1);
            auto label = parse_label(label_part);
            if (!label) {
                out.errors.push_back({line_no, line, "unknown label: " + trim(label_part)});
                continue;
            }
            entry.label = label;
        }
        out.entries.push_back(std::move(entry));
    }
    return out;
}

void FetchConfig::check() const {
    if (!(timeout_seconds > 0)) throw std::invalid_argument("timeout must be > 0");
    if (concurrency < 1) throw std::invalid_argument("concurrency must be >= 1");
    if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
    if (max_body_bytes < 1) throw std::invalid_argument("max_body_bytes must be >= 1");
}

Fetcher::Fetcher(FetchConfig cfg) : cfg_(std::move(cfg)) { cfg_.check(); }

std::filesystem::path Fetcher::offline_path(const std::filesystem::path& root, const ParsedUrl& url) {
    std::string host_dir = url.host;
    if (url.port >= 0) host_dir += "_" + std::to_string(url.port);

    std::string path = url.path;
    if (path.empty() || path == "/") path = "/index.html";
    if (path.back() == '/') path += "index.html";

    std::filesystem::path out = root / host_dir;
    std::size_t start = 1;  // skip the leading '/'
    while (start <= path.size()) {
        auto slash = path.find('/', start);
        std::string seg = path.substr(start, slash == std::string::npos ? path.size() - start : slash - start);
        start = slash == std::string::npos ? path.size() + 1 : slash + 1;
        if (seg.empty() || seg == "." || seg == "..") seg = "_";
        out /= seg;
    }
    return out;
}

FetchResult Fetcher::fetch_offline(const ParsedUrl& url) const {
    std::filesystem::path path = offline_path(*cfg_.offline_root, url);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        return {std::nullopt, FetchError{url.origin() + url.request_target(), FetchFailure::not_found,
                                         "no fixture at " + path.string()}};
    }
    auto size = std::filesystem::file_size(path, ec);
    if (!ec && size > cfg_.max_body_bytes) {
        return {std::nullopt, FetchError{url.origin() + url.request_target(), FetchFailure::oversize,
                                         std::to_string(size) + " bytes"}};
    }
    return {read_text_file(path), std::nullopt};
}

FetchResult Fetcher::fetch_http(const ParsedUrl& url) const {
    std::string full_url = url.origin() + url.request_target();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (url.scheme == "https") {
        return {std::nullopt, FetchError{full_url, FetchFailure::connection, "built without TLS support"}};
    }
#endif
    httplib::Client client(url.origin());
    client.set_follow_location(true);
    auto timeout = std::chrono::duration<double>(cfg_.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));

    std::string body;
    bool oversize = false;
    httplib::Headers headers{{"User-Agent", cfg_.user_agent}};
    auto res = client.Get(url.request_target(), headers, [&](const char* data, size_t len) {
        if (body.size() + len > cfg_.max_body_bytes) {
            oversize = true;
            return false;
        }
        body.append(data, len);
        return true;
    });

    if (oversize) {
        return {std::nullopt, FetchError{full_url, FetchFailure::oversize, "body cap exceeded"}};
    }
    if (!res) {
        auto err = res.error();
        FetchFailure cause = FetchFailure::connection;
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
            cause = FetchFailure::timeout;
        }
        return {std::nullopt, FetchError{full_url, cause, httplib::to_string(err)}};
    }
    if (res->status < 200 || res->status >= 300) {
        return {std::nullopt, FetchError{full_url, FetchFailure::http_status, "HTTP " + std::to_string(res->status)}};
    }
    return {std::move(body), std::nullopt};
}

FetchResult Fetcher::fetch_page(const std::string& url) const {
    auto parsed = ParsedUrl::parse(url);
    if (!parsed) {
        return {std::nullopt, FetchError{url, FetchFailure::bad_url, "unparseable URL"}};
    }
    if (cfg_.offline_root) return fetch_offline(*parsed);

    FetchResult last;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        last = fetch_http(*parsed);
        if (last.ok()) return last;
        bool transient = last.error->cause == FetchFailure::timeout ||
                         last.error->cause == FetchFailure::connection ||
                         (last.error->cause == FetchFailure::http_status && last.error->detail >= "HTTP 500");
        if (!transient) return last;
    }
    return last;
}

// ---- script extraction -------------------------------------------------

namespace {

bool iequal_at(std::string_view text, std::size_t pos, std::string_view word) {
    if (pos + word.size() > text.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[pos + i])) != word[i]) return false;
    }
    return true;
}

struct ScriptElement {
    std::vector<std::pair<std::string, std::string>> attrs;  // lowercase names
    std::string_view body;

    std::optional<std::string_view> attr(std::string_view name) const {
        for (const auto& [k, v] : attrs) {
            if (k == name) return std::string_view(v);
        }
        return std::nullopt;
    }
};

// single-pass tolerant scan for <script ...>...</script>, document order
std::vector<ScriptElement> scan_scripts(std::string_view html) {
    std::vector<ScriptElement> out;
    std::size_t pos = 0;
    while (pos < html.size()) {
        auto lt = html.find('<', pos);
        if (lt == std::string_view::npos) break;
        if (!iequal_at(html, lt + 1, "script") ||
            (lt + 7 < html.size() && (std::isalnum(static_cast<unsigned char>(html[lt + 7])) || html[lt + 7] == '-'))) {
            pos = lt + 1;
            continue;
        }

        ScriptElement element;
        std::size_t i = lt + 7;
        bool self_closing = false;
        while (i < html.size() && html[i] != '>') {
            unsigned char c = static_cast<unsigned char>(html[i]);
            if (std::isspace(c)) {
                ++i;
                continue;
            }
            if (html[i] == '/' ) {
                if (i + 1 < html.size() && html[i + 1] == '>') self_closing = true;
                ++i;
                continue;
            }
            std::size_t name_start = i;
            while (i < html.size() && html[i] != '=' && html[i] != '>' && html[i] != '/' &&
                   !std::isspace(static_cast<unsigned char>(html[i]))) {
                ++i;
            }
            std::string name = to_lower(html.substr(name_start, i - name_start));
            std::string value;
            while (i < html.size() && std::isspace(static_cast<unsigned char>(html[i]))) ++i;
            if (i < html.size() && html[i] == '=') {
                ++i;
                while (i < html.size() && std::isspace(static_cast<unsigned char>(html[i]))) ++i;
                if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
                    char quote = html[i++];
                    std::size_t val_start = i;
                    while (i < html.size() && html[i] != quote) ++i;
                    value = std::string(html.substr(val_start, i - val_start));
                    if (i < html.size()) ++i;
                } else {
                    std::size_t val_start = i;
                    while (i < html.size() && html[i] != '>' &&
                           !std::isspace(static_cast<unsigned char>(html[i]))) {
                        ++i;
                    }
                    value = std::string(html.substr(val_start, i - val_start));
                }
            }
            if (!name.empty()) element.attrs.emplace_back(std::move(name), std::move(value));
        }
        if (i >= html.size()) break;  // unterminated open tag
        ++i;                          // consume '>'

        if (self_closing) {
            element.body = html.substr(i, 0);
            out.push_back(std::move(element));
            pos = i;
            continue;
        }

        std::size_t body_start = i;
        std::size_t close = std::string_view::npos;
        for (std::size_t k = body_start; k + 8 <= html.size(); ++k) {
            if (html[k] == '<' && html[k + 1] == '/' && iequal_at(html, k + 2, "script")) {
                close = k;
                break;
            }
        }
        if (close == std::string_view::npos) {
            element.body = html.substr(body_start);
            out.push_back(std::move(element));
            break;
        }
        element.body = html.substr(body_start, close - body_start);
        out.push_back(std::move(element));
        auto end_gt = html.find('>', close);
        pos = end_gt == std::string_view::npos ? html.size() : end_gt + 1;
    }
    return out;
}

bool is_javascript_type(std::optional<std::string_view> type) {
    if (!type) return true;
    std::string t = to_lower(trim(*type));
    return t.empty() || t == "text/javascript" || t == "application/javascript" ||
           t == "application/x-javascript" || t == "text/ecmascript" || t == "application/ecmascript" ||
           t == "module";
}

bool has_content(std::string_view text) {
    return std::any_of(text.begin(), text.end(),
                       [](unsigned char c) { return !std::isspace(c); });
}

}  // namespace

std::optional<ParsedUrl> resolve_url(const ParsedUrl& base, std::string_view href) {
    std::string ref = trim(href);
    if (ref.empty()) return std::nullopt;
    if (ref.find("://") != std::string::npos) return ParsedUrl::parse(ref);
    if (ref.rfind("//", 0) == 0) return ParsedUrl::parse(base.scheme + ":" + ref);

    ParsedUrl out = base;
    out.query.clear();
    auto frag = ref.find('#');
    if (frag != std::string::npos) ref = ref.substr(0, frag);
    auto qmark = ref.find('?');
    if (qmark != std::string::npos) {
        out.query = ref.substr(qmark + 1);
        ref = ref.substr(0, qmark);
    }

    std::string merged;
    if (!ref.empty() && ref[0] == '/') {
        merged = ref;
    } else {
        auto slash = base.path.rfind('/');
        merged = base.path.substr(0, slash + 1) + ref;
    }

    // dot-segment removal
    std::vector<std::string> segments;
    std::size_t start = 1;
    while (start <= merged.size()) {
        auto slash = merged.find('/', start);
        std::string seg = merged.substr(start, slash == std::string::npos ? merged.size() - start : slash - start);
        start = slash == std::string::npos ? merged.size() + 1 : slash + 1;
        if (seg == ".") continue;
        if (seg == "..") {
            if (!segments.empty()) segments.pop_back();
            continue;
        }
        segments.push_back(std::move(seg));
    }
    out.path = "/";
    for (std::size_t i = 0; i < segments.size(); ++i) {
        out.path += segments[i];
        if (i + 1 < segments.size()) out.path += "/";
    }
    if (!merged.empty() && merged.back() == '/' && out.path.back() != '/') out.path += "/";
    return out;
}

ExtractOutcome extract_first_script(std::string_view html, const std::string& base_url, const Fetcher& fetcher) {
    auto base = ParsedUrl::parse(base_url);
    if (!base) return MissingScript{"bad base URL: " + base_url};

    auto elements = scan_scripts(html);
    if (elements.empty()) return MissingScript{"no script elements"};

    // inline bodies first
    for (const ScriptElement& el : elements) {
        if (!is_javascript_type(el.attr("type"))) continue;
        if (el.attr("src")) continue;  // browsers ignore the body when src is present
        if (has_content(el.body)) {
            return ScriptSource{base_url, ScriptKind::inline_script, std::string(el.body), utc_timestamp()};
        }
    }

    // then external candidates, falling through on fetch failure
    std::string last_failure;
    for (const ScriptElement& el : elements) {
        if (!is_javascript_type(el.attr("type"))) continue;
        auto src = el.attr("src");
        if (!src) continue;
        auto resolved = resolve_url(*base, *src);
        if (!resolved) {
            last_failure = "unresolvable src: " + std::string(*src);
            continue;
        }
        FetchResult res = fetcher.fetch_page(resolved->origin() + resolved->request_target());
        if (!res.ok()) {
            last_failure = std::string(name_of(res.error->cause)) + " fetching " + res.error->url;
            continue;
        }
        if (!has_content(*res.body)) {
            last_failure = "empty external script";
            continue;
        }
        return ScriptSource{base_url, ScriptKind::external_script, std::move(*res.body), utc_timestamp()};
    }
    if (!last_failure.empty()) return MissingScript{"no usable script (" + last_failure + ")"};
    return MissingScript{"no usable script"};
}

CollectResult collect(const std::vector<UrlEntry>& entries, const Fetcher& fetcher) {
    struct Slot {
        std::optional<CollectedScript> script;
        std::optional<SkippedEntry> skipped;
    };
    std::vector<Slot> slots(entries.size());

    auto process = [&](std::size_t i) {
        const UrlEntry& entry = entries[i];
        FetchResult page = fetcher.fetch_page(entry.url);
        if (!page.ok()) {
            slots[i].skipped = SkippedEntry{i, entry.url, "fetch", name_of(page.error->cause)};
            return;
        }
        ExtractOutcome outcome = extract_first_script(*page.body, entry.url, fetcher);
        if (auto* script = std::get_if<ScriptSource>(&outcome)) {
            slots[i].script = CollectedScript{i, entry, std::move(*script)};
        } else {
            slots[i].skipped = SkippedEntry{i, entry.url, "extract", std::get<MissingScript>(outcome).reason};
        }
    };

    int workers = std::min<int>(fetcher.config().concurrency, static_cast<int>(entries.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < entries.size(); ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= entries.size()) return;
                    process(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    CollectResult out;
    for (Slot& slot : slots) {
        if (slot.script) out.scripts.push_back(std::move(*slot.script));
        if (slot.skipped) out.skipped.push_back(std::move(*slot.skipped));
    }
    return out;
}

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

}  // namespace watvec::ingest
