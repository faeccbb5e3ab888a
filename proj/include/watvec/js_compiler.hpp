#pragma once

#include <optional>
#include <string>
#include <vector>

#include "watvec/js_lexer.hpp"
#include "watvec/wasm_module.hpp"

namespace watvec::js {

// Arithmetic expression over function parameters and number literals,
// stored as an index-linked arena so functions stay copyable values.
struct ExprNode {
    enum class Kind { number, param, neg, add, sub, mul, div, rem };
    Kind kind = Kind::number;
    double number = 0.0;  // Kind::number
    int param = 0;        // Kind::param
    int lhs = -1;         // unary operand lives in lhs
    int rhs = -1;
};

struct ArithFunction {
    std::string name;
    std::vector<std::string> params;
    std::vector<ExprNode> nodes;
    int root = -1;
};

struct ConvertibleSet {
    std::vector<ArithFunction> functions;
    std::vector<std::string> literal_pool;  // decoded string bytes, file order
};

struct SkippedFunction {
    std::string name;
    int line = 0;
    std::string reason;
};

struct ConversionReport {
    int functions_converted = 0;
    std::vector<SkippedFunction> skipped;
    int literals_embedded = 0;

    int functions_skipped() const { return static_cast<int>(skipped.size()); }
    int functions_seen() const { return functions_converted + functions_skipped(); }
};

struct ExtractResult {
    ConvertibleSet set;
    ConversionReport report;
};

// Recognizes `function NAME(p1,…,pk){ return EXPR; }` over params, number
// literals, + - * / %, unary minus and parentheses; collects every string
// literal into the pool. Everything else is skipped with a reason.
ExtractResult extract_convertible(const std::vector<JsToken>& tokens);

// NothingConvertible (both functions and pool empty) comes back as nullopt.
std::optional<wasm::WasmModule> compile_to_module(const ConvertibleSet& set);

// infix rendering of one expression, for reports and debugging
std::string expr_to_string(const ArithFunction& fn, int node_index);

// JSON object for the optional convertible-set debug dump
std::string to_json(const ConvertibleSet& set);

}  // namespace watvec::js
