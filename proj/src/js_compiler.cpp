#include "watvec/js_compiler.hpp"

#include <algorithm>
#include <cstdlib>
#include <unordered_set>

namespace watvec::js {

namespace {

double number_token_value(const std::string& text) {
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        return static_cast<double>(std::strtoull(text.c_str() + 2, nullptr, 16));
    }
    return std::strtod(text.c_str(), nullptr);
}

// Recursive-descent parser for the arithmetic subset, over a token slice.
class ExprParser {
public:
    ExprParser(const std::vector<JsToken>& tokens, std::size_t pos, const std::vector<std::string>& params,
               ArithFunction& fn)
        : tokens_(tokens), pos_(pos), params_(params), fn_(fn) {}

    // Returns root node index or records a failure reason.
    int parse() {
        int root = expr();
        if (root < 0) return -1;
        // the expression must stop right before `;` or `}`
        if (!is_punct(";") && !is_punct("}")) {
            fail("trailing tokens after expression");
            return -1;
        }
        return root;
    }

    std::size_t pos() const { return pos_; }
    const std::string& reason() const { return reason_; }

private:
    int expr() {
        int lhs = term();
        if (lhs < 0) return -1;
        while (is_punct("+") || is_punct("-")) {
            bool add = is_punct("+");
            ++pos_;
            int rhs = term();
            if (rhs < 0) return -1;
            lhs = make(add ? ExprNode::Kind::add : ExprNode::Kind::sub, lhs, rhs);
        }
        return lhs;
    }

    int term() {
        int lhs = unary();
        if (lhs < 0) return -1;
        while (is_punct("*") || is_punct("/") || is_punct("%")) {
            ExprNode::Kind kind = is_punct("*")   ? ExprNode::Kind::mul
                                  : is_punct("/") ? ExprNode::Kind::div
                                                  : ExprNode::Kind::rem;
            ++pos_;
            int rhs = unary();
            if (rhs < 0) return -1;
            lhs = make(kind, lhs, rhs);
        }
        return lhs;
    }

    int unary() {
        if (is_punct("-")) {
            ++pos_;
            int child = unary();
            if (child < 0) return -1;
            return make(ExprNode::Kind::neg, child, -1);
        }
        return primary();
    }

    int primary() {
        const JsToken* t = peek();
        if (!t) {
            fail("unexpected end of input in expression");
            return -1;
        }
        if (t->kind == TokenKind::number) {
            ++pos_;
            ExprNode node;
            node.kind = ExprNode::Kind::number;
            node.number = number_token_value(t->text);
            fn_.nodes.push_back(node);
            return static_cast<int>(fn_.nodes.size() - 1);
        }
        if (t->kind == TokenKind::identifier) {
            const JsToken* next = peek(1);
            if (next && next->kind == TokenKind::punctuator && next->text == "(") {
                fail("call expression: " + t->text);
                return -1;
            }
            auto it = std::find(params_.begin(), params_.end(), t->text);
            if (it == params_.end()) {
                fail("free identifier: " + t->text);
                return -1;
            }
            ++pos_;
            ExprNode node;
            node.kind = ExprNode::Kind::param;
            node.param = static_cast<int>(it - params_.begin());
            fn_.nodes.push_back(node);
            return static_cast<int>(fn_.nodes.size() - 1);
        }
        if (is_punct("(")) {
            ++pos_;
            int inner = expr();
            if (inner < 0) return -1;
            if (!is_punct(")")) {
                fail("unbalanced parenthesis");
                return -1;
            }
            ++pos_;
            return inner;
        }
        fail("unsupported token in expression: " + t->text);
        return -1;
    }

    int make(ExprNode::Kind kind, int lhs, int rhs) {
        ExprNode node;
        node.kind = kind;
        node.lhs = lhs;
        node.rhs = rhs;
        fn_.nodes.push_back(node);
        return static_cast<int>(fn_.nodes.size() - 1);
    }

    const JsToken* peek(std::size_t ahead = 0) const {
        return pos_ + ahead < tokens_.size() ? &tokens_[pos_ + ahead] : nullptr;
    }
    bool is_punct(std::string_view text) const {
        const JsToken* t = peek();
        return t && t->kind == TokenKind::punctuator && t->text == text;
    }
    void fail(std::string why) {
        if (reason_.empty()) reason_ = std::move(why);
    }

    const std::vector<JsToken>& tokens_;
    std::size_t pos_;
    const std::vector<std::string>& params_;
    ArithFunction& fn_;
    std::string reason_;
};

}  // namespace

ExtractResult extract_convertible(const std::vector<JsToken>& raw_tokens) {
    // comments play no grammatical role
    std::vector<JsToken> tokens;
    tokens.reserve(raw_tokens.size());
    for (const JsToken& t : raw_tokens) {
        if (t.kind != TokenKind::comment) tokens.push_back(t);
    }

    ExtractResult out;
    std::unordered_set<std::string> taken_names;

    for (const JsToken& t : tokens) {
        if (t.kind == TokenKind::string) {
            out.set.literal_pool.push_back(decode_string_literal(t.text));
        }
    }
    out.report.literals_embedded = static_cast<int>(out.set.literal_pool.size());

    auto is_punct = [&](std::size_t i, std::string_view text) {
        return i < tokens.size() && tokens[i].kind == TokenKind::punctuator && tokens[i].text == text;
    };
    auto skip = [&](std::string name, int line, std::string reason) {
        out.report.skipped.push_back(SkippedFunction{std::move(name), line, std::move(reason)});
    };

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!(tokens[i].kind == TokenKind::keyword && tokens[i].text == "function")) continue;
        const int line = tokens[i].line;
        std::size_t p = i + 1;

        if (p >= tokens.size() || tokens[p].kind != TokenKind::identifier) {
            skip("<anonymous>", line, "anonymous or malformed function");
            continue;
        }
        ArithFunction fn;
        fn.name = tokens[p].text;
        ++p;

        if (!is_punct(p, "(")) {
            skip(fn.name, line, "missing parameter list");
            continue;
        }
        ++p;
        bool params_ok = true;
        if (!is_punct(p, ")")) {
            for (;;) {
                if (p >= tokens.size() || tokens[p].kind != TokenKind::identifier) {
                    params_ok = false;
                    break;
                }
                fn.params.push_back(tokens[p].text);
                ++p;
                if (is_punct(p, ",")) {
                    ++p;
                    continue;
                }
                break;
            }
        }
        if (!params_ok || !is_punct(p, ")")) {
            skip(fn.name, line, "unparseable parameter list");
            continue;
        }
        ++p;

        if (!is_punct(p, "{")) {
            skip(fn.name, line, "missing function body");
            continue;
        }
        ++p;
        if (!(p < tokens.size() && tokens[p].kind == TokenKind::keyword && tokens[p].text == "return")) {
            skip(fn.name, line, "body is not a single return statement");
            continue;
        }
        ++p;

        ExprParser parser(tokens, p, fn.params, fn);
        fn.root = parser.parse();
        if (fn.root < 0) {
            skip(fn.name, line, parser.reason());
            continue;
        }
        p = parser.pos();
        if (is_punct(p, ";")) ++p;
        if (!is_punct(p, "}")) {
            skip(fn.name, line, "body is not a single return statement");
            continue;
        }

        if (!taken_names.insert(fn.name).second) {
            skip(fn.name, line, "duplicate function name");
            continue;
        }
        out.set.functions.push_back(std::move(fn));
        ++out.report.functions_converted;
    }
    return out;
}

namespace {

using wasm::Instruction;
using wasm::Opcode;

void lower_expr(const ArithFunction& fn, int node_index, std::uint32_t tmp_a, std::uint32_t tmp_b,
                std::vector<Instruction>& body) {
    const ExprNode& node = fn.nodes[node_index];
    switch (node.kind) {
        case ExprNode::Kind::number:
            body.push_back(Instruction::f64_const(node.number));
            break;
        case ExprNode::Kind::param:
            body.push_back(Instruction::local_get(static_cast<std::uint32_t>(node.param)));
            break;
        case ExprNode::Kind::neg:
            // multiply by -1: exact IEEE sign flip, unlike 0 - x at x = 0
            body.push_back(Instruction::f64_const(-1.0));
            lower_expr(fn, node.lhs, tmp_a, tmp_b, body);
            body.push_back(Instruction::simple(Opcode::f64_mul));
            break;
        case ExprNode::Kind::add:
        case ExprNode::Kind::sub:
        case ExprNode::Kind::mul:
        case ExprNode::Kind::div: {
            lower_expr(fn, node.lhs, tmp_a, tmp_b, body);
            lower_expr(fn, node.rhs, tmp_a, tmp_b, body);
            Opcode op = node.kind == ExprNode::Kind::add   ? Opcode::f64_add
                        : node.kind == ExprNode::Kind::sub ? Opcode::f64_sub
                        : node.kind == ExprNode::Kind::mul ? Opcode::f64_mul
                                                           : Opcode::f64_div;
            body.push_back(Instruction::simple(op));
            break;
        }
        case ExprNode::Kind::rem:
            // a % b as a - trunc(a/b)*b; wasm has no f64 remainder
            lower_expr(fn, node.lhs, tmp_a, tmp_b, body);
            lower_expr(fn, node.rhs, tmp_a, tmp_b, body);
            body.push_back(Instruction::local_set(tmp_b));
            body.push_back(Instruction::local_set(tmp_a));
            body.push_back(Instruction::local_get(tmp_a));
            body.push_back(Instruction::local_get(tmp_a));
            body.push_back(Instruction::local_get(tmp_b));
            body.push_back(Instruction::simple(Opcode::f64_div));
            body.push_back(Instruction::simple(Opcode::f64_trunc));
            body.push_back(Instruction::local_get(tmp_b));
            body.push_back(Instruction::simple(Opcode::f64_mul));
            body.push_back(Instruction::simple(Opcode::f64_sub));
            break;
    }
}

bool uses_rem(const ArithFunction& fn) {
    for (const ExprNode& n : fn.nodes) {
        if (n.kind == ExprNode::Kind::rem) return true;
    }
    return false;
}

}  // namespace

std::optional<wasm::WasmModule> compile_to_module(const ConvertibleSet& set) {
    if (set.functions.empty() && set.literal_pool.empty()) return std::nullopt;

    wasm::WasmModule m;

    // one (f64^k) -> f64 type per distinct arity, in order of first use
    std::vector<std::size_t> arity_of_type;
    auto type_for_arity = [&](std::size_t arity) -> std::uint32_t {
        for (std::size_t i = 0; i < arity_of_type.size(); ++i) {
            if (arity_of_type[i] == arity) return static_cast<std::uint32_t>(i);
        }
        wasm::FuncType t;
        t.params.assign(arity, wasm::ValType::f64);
        t.results = {wasm::ValType::f64};
        m.types.push_back(std::move(t));
        arity_of_type.push_back(arity);
        return static_cast<std::uint32_t>(m.types.size() - 1);
    };

    for (std::size_t i = 0; i < set.functions.size(); ++i) {
        const ArithFunction& fn = set.functions[i];
        wasm::Function wf;
        wf.type_index = type_for_arity(fn.params.size());
        const std::uint32_t nparams = static_cast<std::uint32_t>(fn.params.size());
        std::uint32_t tmp_a = nparams, tmp_b = nparams + 1;
        if (uses_rem(fn)) wf.locals = {wasm::ValType::f64, wasm::ValType::f64};
        lower_expr(fn, fn.root, tmp_a, tmp_b, wf.body);
        wf.body.push_back(Instruction::end());
        m.functions.push_back(std::move(wf));
        m.exports.push_back(wasm::Export{fn.name, wasm::ExportKind::func, static_cast<std::uint32_t>(i)});
    }

    if (!set.literal_pool.empty()) {
        std::vector<std::uint8_t> bytes;
        for (const std::string& s : set.literal_pool) bytes.insert(bytes.end(), s.begin(), s.end());
        std::uint32_t pages = std::max<std::uint32_t>(
            1, static_cast<std::uint32_t>((bytes.size() + wasm::kPageSize - 1) / wasm::kPageSize));
        m.memories.push_back(wasm::Memory{pages, std::nullopt});
        m.data_segments.push_back(wasm::DataSegment::at_offset(0, std::move(bytes)));
    }
    return m;
}

}  // namespace watvec::js
