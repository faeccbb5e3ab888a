#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace watvec::js {

enum class TokenKind {
    identifier,
    number,
    string,
    punctuator,
    keyword,
    comment,
    other,
};

struct JsToken {
    TokenKind kind = TokenKind::other;
    std::string text;         // exact source slice
    int line = 1;             // 1-based line of the first character
    std::size_t offset = 0;   // byte offset into the source
};

// Total over arbitrary byte sequences; unknown bytes become `other` tokens.
std::vector<JsToken> lex_js(std::string_view source);

bool is_js_keyword(std::string_view word);

// Decoded byte content of a string token (quotes stripped, escapes resolved).
std::string decode_string_literal(std::string_view token_text);

}  // namespace watvec::js
