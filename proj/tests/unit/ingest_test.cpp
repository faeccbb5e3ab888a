#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "watvec/common.hpp"
#include "watvec/ingest.hpp"

using namespace watvec;
using ingest::FetchConfig;
using ingest::Fetcher;
using ingest::Label;
using ingest::ParsedUrl;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("watvec_ingest_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    void put(const std::string& rel, const std::string& content) const {
        fs::path p = path / rel;
        fs::create_directories(p.parent_path());
        std::ofstream(p, std::ios::binary) << content;
    }
};

FetchConfig offline_cfg(const fs::path& root) {
    FetchConfig cfg;
    cfg.offline_root = root;
    return cfg;
}

// network access in offline mode must be impossible, not just unused
class NoNetworkFetcher : public Fetcher {
public:
    using Fetcher::Fetcher;
    mutable int http_calls = 0;

protected:
    ingest::FetchResult fetch_http(const ParsedUrl&) const override {
        ++http_calls;
        throw std::logic_error("network touched in offline mode");
    }
};

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("parse_url_list maps labels") {
    auto r = ingest::parse_url_list("https://a.example,benign\nhttps://b.example,malicious");
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[0].url == "https://a.example");
    CHECK(r.entries[0].label == Label::benign);
    CHECK(r.entries[1].label == Label::malicious);
    CHECK(r.errors.empty());
}

TEST_CASE("parse_url_list keeps unlabeled entries and order") {
    auto r = ingest::parse_url_list("https://a.example\n# comment\n\nhttps://b.example\nhttps://a.example");
    REQUIRE(r.entries.size() == 3);
    CHECK(!r.entries[0].label.has_value());
    CHECK(r.entries[2].url == "https://a.example");  // duplicates preserved
}

TEST_CASE("parse_url_list collects line errors") {
    auto r = ingest::parse_url_list("not a url,benign");
    CHECK(r.entries.empty());
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].line == 1);

    auto r2 = ingest::parse_url_list("https://a.example,friendly\nhttps://b.example,MALICIOUS");
    REQUIRE(r2.entries.size() == 1);
    CHECK(r2.entries[0].label == Label::malicious);  // labels are case-insensitive
    REQUIRE(r2.errors.size() == 1);
    CHECK(r2.errors[0].reason.find("unknown label") != std::string::npos);
}

TEST_CASE("url parsing") {
    auto u = ParsedUrl::parse("https://a.example:8080/x/y?q=1#frag");
    REQUIRE(u.has_value());
    CHECK(u->scheme == "https");
    CHECK(u->host == "a.example");
    CHECK(u->port == 8080);
    CHECK(u->path == "/x/y");
    CHECK(u->query == "q=1");
    CHECK(u->origin() == "https://a.example:8080");

    CHECK(!ParsedUrl::parse("ftp://a.example").has_value());
    CHECK(!ParsedUrl::parse("a.example/path").has_value());
    CHECK(!ParsedUrl::parse("https://").has_value());
}

TEST_CASE("offline fixture layout") {
    fs::path root = "/tmp/fixroot";
    CHECK(Fetcher::offline_path(root, *ParsedUrl::parse("https://a.example")) == root / "a.example/index.html");
    CHECK(Fetcher::offline_path(root, *ParsedUrl::parse("http://a.example/dir/")) == root / "a.example/dir/index.html");
    CHECK(Fetcher::offline_path(root, *ParsedUrl::parse("http://a.example/x/y.js")) == root / "a.example/x/y.js");
    CHECK(Fetcher::offline_path(root, *ParsedUrl::parse("http://a.example:81/f.js")) == root / "a.example_81/f.js");
}

TEST_CASE("offline fetch reads fixtures and reports gaps") {
    TempDir tmp;
    tmp.put("a.example/index.html", "<html>hello</html>");
    Fetcher fetcher(offline_cfg(tmp.path));

    auto ok = fetcher.fetch_page("https://a.example");
    REQUIRE(ok.ok());
    CHECK(*ok.body == "<html>hello</html>");

    auto missing = fetcher.fetch_page("https://nowhere.example");
    REQUIRE(!missing.ok());
    CHECK(missing.error->cause == ingest::FetchFailure::not_found);

    FetchConfig tight = offline_cfg(tmp.path);
    tight.max_body_bytes = 4;
    auto oversize = Fetcher(tight).fetch_page("https://a.example");
    REQUIRE(!oversize.ok());
    CHECK(oversize.error->cause == ingest::FetchFailure::oversize);

    auto bad = fetcher.fetch_page("garbage");
    REQUIRE(!bad.ok());
    CHECK(bad.error->cause == ingest::FetchFailure::bad_url);
}

TEST_CASE("extract takes the first inline script") {
    TempDir tmp;
    Fetcher fetcher(offline_cfg(tmp.path));
    auto outcome = ingest::extract_first_script("<html><script>var x=1;</script></html>", "https://a.example", fetcher);
    auto* script = std::get_if<ingest::ScriptSource>(&outcome);
    REQUIRE(script != nullptr);
    CHECK(script->kind == ingest::ScriptKind::inline_script);
    CHECK(script->source_text == "var x=1;");
    CHECK(script->origin_url == "https://a.example");
}

TEST_CASE("extract fetches the first external script when no inline exists") {
    TempDir tmp;
    tmp.put("a.example/a.js", "f()");
    Fetcher fetcher(offline_cfg(tmp.path));
    auto outcome = ingest::extract_first_script("<script src=\"/a.js\"></script>", "https://a.example", fetcher);
    auto* script = std::get_if<ingest::ScriptSource>(&outcome);
    REQUIRE(script != nullptr);
    CHECK(script->kind == ingest::ScriptKind::external_script);
    CHECK(script->source_text == "f()");
}

TEST_CASE("no script tags means MissingScript") {
    TempDir tmp;
    Fetcher fetcher(offline_cfg(tmp.path));
    auto outcome = ingest::extract_first_script("<html><body>plain</body></html>", "https://a.example", fetcher);
    CHECK(std::holds_alternative<ingest::MissingScript>(outcome));
}

TEST_CASE("inline body wins over an earlier src script") {
    TempDir tmp;
    tmp.put("a.example/lib.js", "lib()");
    Fetcher fetcher(offline_cfg(tmp.path));
    auto outcome = ingest::extract_first_script(
        "<script src=\"/lib.js\"></script><script>inline()</script>", "https://a.example", fetcher);
    auto* script = std::get_if<ingest::ScriptSource>(&outcome);
    REQUIRE(script != nullptr);
    CHECK(script->kind == ingest::ScriptKind::inline_script);
    CHECK(script->source_text == "inline()");
}

TEST_CASE("non-JavaScript types are skipped") {
    TempDir tmp;
    Fetcher fetcher(offline_cfg(tmp.path));
    auto outcome = ingest::extract_first_script(
        "<script type=\"application/json\">{\"a\":1}</script>"
        "<SCRIPT TYPE=\"text/javascript\">go()</SCRIPT>",
        "https://a.example", fetcher);
    auto* script = std::get_if<ingest::ScriptSource>(&outcome);
    REQUIRE(script != nullptr);
    CHECK(script->source_text == "go()");

    auto none = ingest::extract_first_script("<script type=\"text/template\"><b>x</b></script>",
                                             "https://a.example", fetcher);
    CHECK(std::holds_alternative<ingest::MissingScript>(none));
}

TEST_CASE("external fetch failure falls through to the next candidate") {
    TempDir tmp;
    tmp.put("a.example/second.js", "second()");
    Fetcher fetcher(offline_cfg(tmp.path));
    auto outcome = ingest::extract_first_script(
        "<script src=\"/missing.js\"></script><script src=\"/second.js\"></script>", "https://a.example", fetcher);
    auto* script = std::get_if<ingest::ScriptSource>(&outcome);
    REQUIRE(script != nullptr);
    CHECK(script->source_text == "second()");

    auto gone = ingest::extract_first_script("<script src=\"/missing.js\"></script>", "https://a.example", fetcher);
    auto* miss = std::get_if<ingest::MissingScript>(&gone);
    REQUIRE(miss != nullptr);
    CHECK(miss->reason.find("not_found") != std::string::npos);
}

TEST_CASE("src resolution handles the usual reference forms") {
    auto base = *ParsedUrl::parse("https://a.example/dir/page.html");
    auto abs = ingest::resolve_url(base, "http://b.example/x.js");
    REQUIRE(abs.has_value());
    CHECK(abs->host == "b.example");
    auto scheme_rel = ingest::resolve_url(base, "//cdn.example/x.js");
    REQUIRE(scheme_rel.has_value());
    CHECK(scheme_rel->scheme == "https");
    CHECK(scheme_rel->host == "cdn.example");
    auto root_rel = ingest::resolve_url(base, "/top.js");
    REQUIRE(root_rel.has_value());
    CHECK(root_rel->path == "/top.js");
    auto rel = ingest::resolve_url(base, "sub/x.js");
    REQUIRE(rel.has_value());
    CHECK(rel->path == "/dir/sub/x.js");
    auto up = ingest::resolve_url(base, "../x.js");
    REQUIRE(up.has_value());
    CHECK(up->path == "/x.js");
}

TEST_CASE("collect preserves input order under concurrency") {
    TempDir tmp;
    std::vector<ingest::UrlEntry> entries;
    for (int i = 0; i < 40; ++i) {
        std::string host = "site" + std::to_string(i) + ".example";
        if (i % 7 == 3) {
            tmp.put(host + "/index.html", "<p>no scripts here</p>");
        } else {
            tmp.put(host + "/index.html", "<script>var v" + std::to_string(i) + "=1;</script>");
        }
        entries.push_back({"https://" + host, i % 2 ? std::optional(Label::malicious) : std::nullopt});
    }
    FetchConfig cfg = offline_cfg(tmp.path);
    cfg.concurrency = 8;
    Fetcher fetcher(cfg);
    auto result = ingest::collect(entries, fetcher);

    std::size_t expected_skips = 0;
    for (int i = 0; i < 40; ++i) {
        if (i % 7 == 3) ++expected_skips;
    }
    CHECK(result.skipped.size() == expected_skips);
    CHECK(result.scripts.size() + result.skipped.size() == entries.size());

    for (std::size_t k = 1; k < result.scripts.size(); ++k) {
        CHECK(result.scripts[k - 1].input_index < result.scripts[k].input_index);
    }
    for (const auto& s : result.scripts) {
        CHECK(s.script.source_text == "var v" + std::to_string(s.input_index) + "=1;");
    }
}

TEST_CASE("offline mode never opens a connection") {
    TempDir tmp;
    tmp.put("a.example/index.html", "<script src=\"/x.js\"></script><script>go()</script>");
    FetchConfig cfg = offline_cfg(tmp.path);
    cfg.concurrency = 4;
    NoNetworkFetcher fetcher(cfg);
    std::vector<ingest::UrlEntry> entries{{"https://a.example", std::nullopt}};
    auto result = ingest::collect(entries, fetcher);
    CHECK(result.scripts.size() == 1);
    CHECK(fetcher.http_calls == 0);
}

TEST_CASE("identical fixtures give identical extractions") {
    TempDir tmp;
    tmp.put("a.example/index.html", "<script>var stable=1;</script>");
    Fetcher fetcher(offline_cfg(tmp.path));
    std::vector<ingest::UrlEntry> entries{{"https://a.example", Label::benign}};
    auto r1 = ingest::collect(entries, fetcher);
    auto r2 = ingest::collect(entries, fetcher);
    REQUIRE(r1.scripts.size() == 1);
    REQUIRE(r2.scripts.size() == 1);
    CHECK(r1.scripts[0].script.source_text == r2.scripts[0].script.source_text);
    CHECK(r1.scripts[0].script.kind == r2.scripts[0].script.kind);
}

}  // TEST_SUITE
