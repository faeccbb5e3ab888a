#include "ref_interp.hpp"

#include <cmath>
#include <stdexcept>

namespace watvec::testing {

using wasm::Opcode;
using wasm::ValType;

std::vector<Value> invoke(const wasm::WasmModule& m, std::uint32_t func_index, const std::vector<Value>& args,
                          int depth) {
    if (depth > 1000) throw std::logic_error("call depth exceeded");
    if (func_index >= m.functions.size()) throw std::logic_error("function index out of range");
    const wasm::Function& fn = m.functions[func_index];
    const wasm::FuncType& sig = m.types.at(fn.type_index);
    if (args.size() != sig.params.size()) throw std::logic_error("argument count mismatch");

    std::vector<Value> locals = args;
    for (ValType t : fn.locals) {
        locals.push_back(t == ValType::i32 ? Value::of_i32(0) : Value::of_f64(0.0));
    }

    std::vector<Value> stack;
    auto pop = [&]() -> Value {
        if (stack.empty()) throw std::logic_error("stack underflow");
        Value v = stack.back();
        stack.pop_back();
        return v;
    };
    auto pop_f64 = [&]() -> double {
        Value v = pop();
        if (v.type != ValType::f64) throw std::logic_error("type confusion: expected f64");
        return v.f64;
    };
    auto take_results = [&]() -> std::vector<Value> {
        std::vector<Value> out(sig.results.size());
        for (std::size_t i = sig.results.size(); i-- > 0;) {
            Value v = pop();
            if (v.type != sig.results[i]) throw std::logic_error("type confusion: result");
            out[i] = v;
        }
        return out;
    };

    for (const wasm::Instruction& ins : fn.body) {
        switch (ins.op) {
            case Opcode::i32_const:
                stack.push_back(Value::of_i32(ins.i32));
                break;
            case Opcode::f64_const:
                stack.push_back(Value::of_f64(ins.f64));
                break;
            case Opcode::local_get:
                stack.push_back(locals.at(ins.index));
                break;
            case Opcode::local_set: {
                Value v = pop();
                if (v.type != locals.at(ins.index).type) throw std::logic_error("type confusion: local.set");
                locals[ins.index] = v;
                break;
            }
            case Opcode::f64_add: {
                double b = pop_f64(), a = pop_f64();
                stack.push_back(Value::of_f64(a + b));
                break;
            }
            case Opcode::f64_sub: {
                double b = pop_f64(), a = pop_f64();
                stack.push_back(Value::of_f64(a - b));
                break;
            }
            case Opcode::f64_mul: {
                double b = pop_f64(), a = pop_f64();
                stack.push_back(Value::of_f64(a * b));
                break;
            }
            case Opcode::f64_div: {
                double b = pop_f64(), a = pop_f64();
                stack.push_back(Value::of_f64(a / b));
                break;
            }
            case Opcode::f64_trunc:
                stack.push_back(Value::of_f64(std::trunc(pop_f64())));
                break;
            case Opcode::drop:
                pop();
                break;
            case Opcode::call: {
                const wasm::FuncType& callee = m.types.at(m.functions.at(ins.index).type_index);
                std::vector<Value> call_args(callee.params.size());
                for (std::size_t i = callee.params.size(); i-- > 0;) {
                    Value v = pop();
                    if (v.type != callee.params[i]) throw std::logic_error("type confusion: call arg");
                    call_args[i] = v;
                }
                for (Value v : invoke(m, ins.index, call_args, depth + 1)) stack.push_back(v);
                break;
            }
            case Opcode::ret:
                return take_results();
            case Opcode::end:
                return take_results();
        }
    }
    throw std::logic_error("body missing `end`");
}

double invoke_f64(const wasm::WasmModule& m, std::uint32_t func_index, std::span<const double> args) {
    std::vector<Value> vals;
    vals.reserve(args.size());
    for (double a : args) vals.push_back(Value::of_f64(a));
    std::vector<Value> results = invoke(m, func_index, vals);
    if (results.size() != 1 || results[0].type != ValType::f64) throw std::logic_error("expected one f64 result");
    return results[0].f64;
}

}  // namespace watvec::testing
