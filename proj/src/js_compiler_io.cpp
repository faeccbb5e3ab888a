#include <json.hpp>

#include "watvec/common.hpp"
#include "watvec/js_compiler.hpp"

namespace watvec::js {

using nlohmann::json;

std::string expr_to_string(const ArithFunction& fn, int node_index) {
    const ExprNode& n = fn.nodes[node_index];
    switch (n.kind) {
        case ExprNode::Kind::number:
            return shortest_double(n.number);
        case ExprNode::Kind::param:
            return fn.params[n.param];
        case ExprNode::Kind::neg:
            return "(-" + expr_to_string(fn, n.lhs) + ")";
        default: {
            const char* op = n.kind == ExprNode::Kind::add   ? "+"
                             : n.kind == ExprNode::Kind::sub ? "-"
                             : n.kind == ExprNode::Kind::mul ? "*"
                             : n.kind == ExprNode::Kind::div ? "/"
                                                             : "%";
            return "(" + expr_to_string(fn, n.lhs) + op + expr_to_string(fn, n.rhs) + ")";
        }
    }
}

std::string to_json(const ConvertibleSet& set) {
    json functions = json::array();
    for (const ArithFunction& fn : set.functions) {
        functions.push_back(json{{"name", fn.name}, {"params", fn.params}, {"expr", expr_to_string(fn, fn.root)}});
    }
    return json{{"functions", std::move(functions)}, {"literal_pool", set.literal_pool}}.dump();
}

}  // namespace watvec::js
