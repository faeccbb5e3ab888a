#include "watvec/js_lexer.hpp"

#include <array>
#include <cctype>
#include <cstdint>
#include <unordered_set>

namespace watvec::js {

bool is_js_keyword(std::string_view word) {
    static const std::unordered_set<std::string_view> kKeywords = {
        "var", "let", "const", "function", "return", "if", "else", "for", "while", "do",
        "break", "continue", "new", "delete", "typeof", "instanceof", "in", "of", "class",
        "extends", "super", "this", "null", "true", "false", "undefined", "void", "switch",
        "case", "default", "try", "catch", "finally", "throw", "yield", "async", "await",
        "static", "import", "export", "with", "debugger",
    };
    return kKeywords.contains(word);
}

namespace {

bool is_ident_start(unsigned char c) {
    return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}
bool is_ident_char(unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
}
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_hex_digit(unsigned char c) { return std::isxdigit(c); }

}  // namespace

std::vector<JsToken> lex_js(std::string_view src) {
    std::vector<JsToken> tokens;
    std::size_t i = 0;
    int line = 1;
    const std::size_t n = src.size();

    auto emit = [&](TokenKind kind, std::size_t begin, std::size_t end, int begin_line) {
        tokens.push_back(JsToken{kind, std::string(src.substr(begin, end - begin)), begin_line, begin});
    };

    while (i < n) {
        unsigned char c = static_cast<unsigned char>(src[i]);
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        int begin_line = line;

        // comments
        if (c == '/' && i + 1 < n && src[i + 1] == '/') {
            i += 2;
            while (i < n && src[i] != '\n') ++i;
            emit(TokenKind::comment, begin, i, begin_line);
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            i += 2;
            while (i < n && !(src[i] == '*' && i + 1 < n && src[i + 1] == '/')) {
                if (src[i] == '\n') ++line;
                ++i;
            }
            if (i < n) i += 2;  // consume "*/"; unterminated comments run to EOF
            emit(TokenKind::comment, begin, i, begin_line);
            continue;
        }

        // strings: '…' "…" `…`
        if (c == '\'' || c == '"' || c == '`') {
            char quote = static_cast<char>(c);
            ++i;
            while (i < n) {
                if (src[i] == '\\' && i + 1 < n) {
                    if (src[i + 1] == '\n') ++line;
                    i += 2;
                    continue;
                }
                if (src[i] == quote) {
                    ++i;
                    break;
                }
                if (src[i] == '\n') ++line;
                ++i;
            }
            emit(TokenKind::string, begin, i, begin_line);
            continue;
        }

        // numbers: 123, 1.5, .5, 1e-3, 0x1f
        if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(static_cast<unsigned char>(src[i + 1])))) {
            if (c == '0' && i + 1 < n && (src[i + 1] == 'x' || src[i + 1] == 'X')) {
                i += 2;
                while (i < n && is_hex_digit(static_cast<unsigned char>(src[i]))) ++i;
            } else {
                while (i < n && is_digit(static_cast<unsigned char>(src[i]))) ++i;
                if (i < n && src[i] == '.') {
                    ++i;
                    while (i < n && is_digit(static_cast<unsigned char>(src[i]))) ++i;
                }
                if (i < n && (src[i] == 'e' || src[i] == 'E')) {
                    std::size_t save = i;
                    ++i;
                    if (i < n && (src[i] == '+' || src[i] == '-')) ++i;
                    if (i < n && is_digit(static_cast<unsigned char>(src[i]))) {
                        while (i < n && is_digit(static_cast<unsigned char>(src[i]))) ++i;
                    } else {
                        i = save;  // bare `e` belongs to the next token
                    }
                }
            }
            emit(TokenKind::number, begin, i, begin_line);
            continue;
        }

        // identifiers / keywords
        if (is_ident_start(c)) {
            ++i;
            while (i < n && is_ident_char(static_cast<unsigned char>(src[i]))) ++i;
            std::string_view word = src.substr(begin, i - begin);
            emit(is_js_keyword(word) ? TokenKind::keyword : TokenKind::identifier, begin, i, begin_line);
            continue;
        }

        // single-character punctuators
        if (std::ispunct(c)) {
            ++i;
            emit(TokenKind::punctuator, begin, i, begin_line);
            continue;
        }

        // anything else (stray control bytes etc.)
        ++i;
        emit(TokenKind::other, begin, i, begin_line);
    }
    return tokens;
}

std::string decode_string_literal(std::string_view text) {
    if (text.size() < 2) return std::string(text);
    char quote = text.front();
    std::string_view inner = text;
    inner.remove_prefix(1);
    if (!inner.empty() && inner.back() == quote) inner.remove_suffix(1);

    auto append_utf8 = [](std::string& out, std::uint32_t cp) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    };

    std::string out;
    out.reserve(inner.size());
    for (std::size_t i = 0; i < inner.size(); ++i) {
        char c = inner[i];
        if (c != '\\' || i + 1 >= inner.size()) {
            out.push_back(c);
            continue;
        }
        char e = inner[++i];
        switch (e) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case 'b': out.push_back('\b'); break;
            case 'f': out.push_back('\f'); break;
            case 'v': out.push_back('\v'); break;
            case '0': out.push_back('\0'); break;
            case '\n': break;  // line continuation
            case 'x': {
                if (i + 2 < inner.size() && std::isxdigit(static_cast<unsigned char>(inner[i + 1])) &&
                    std::isxdigit(static_cast<unsigned char>(inner[i + 2]))) {
                    std::uint32_t v = std::stoul(std::string(inner.substr(i + 1, 2)), nullptr, 16);
                    out.push_back(static_cast<char>(v));
                    i += 2;
                } else {
                    out.push_back('x');
                }
                break;
            }
            case 'u': {
                if (i + 4 < inner.size() && std::isxdigit(static_cast<unsigned char>(inner[i + 1])) &&
                    std::isxdigit(static_cast<unsigned char>(inner[i + 2])) &&
                    std::isxdigit(static_cast<unsigned char>(inner[i + 3])) &&
                    std::isxdigit(static_cast<unsigned char>(inner[i + 4]))) {
                    std::uint32_t v = std::stoul(std::string(inner.substr(i + 1, 4)), nullptr, 16);
                    append_utf8(out, v);
                    i += 4;
                } else {
                    out.push_back('u');
                }
                break;
            }
            default:
                out.push_back(e);  // \' \" \` \\ and unknown escapes
                break;
        }
    }
    return out;
}

}  // namespace watvec::js
