#include <sstream>

#include "watvec/common.hpp"
#include "watvec/wasm_codec.hpp"

namespace watvec::wasm {

namespace {

// WAT string literal: printable ASCII kept, everything else as \xx hex.
std::string escape_string(const std::uint8_t* data, std::size_t len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(len + 2);
    for (std::size_t i = 0; i < len; ++i) {
        std::uint8_t c = data[i];
        if (c == '"' || c == '\\') {
            out.push_back('\\');
            out.push_back(static_cast<char>(c));
        } else if (c >= 0x20 && c < 0x7F) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('\\');
            out.push_back(digits[c >> 4]);
            out.push_back(digits[c & 0xF]);
        }
    }
    return out;
}

void print_valtypes(std::ostream& os, const char* keyword, const std::vector<ValType>& types) {
    if (types.empty()) return;
    os << " (" << keyword;
    for (ValType t : types) os << ' ' << name_of(t);
    os << ')';
}

void print_instruction(std::ostream& os, const Instruction& ins) {
    os << name_of(ins.op);
    switch (ins.op) {
        case Opcode::i32_const:
            os << ' ' << ins.i32;
            break;
        case Opcode::f64_const:
            os << ' ' << shortest_double(ins.f64);
            break;
        case Opcode::local_get:
        case Opcode::local_set:
        case Opcode::call:
            os << ' ' << ins.index;
            break;
        default:
            break;
    }
}

}  // namespace

std::string print_wat(const WasmModule& m) {
    if (auto errs = validate(m); !errs.empty()) throw InvalidModule(std::move(errs));

    bool empty = m.types.empty() && m.functions.empty() && m.memories.empty() && m.exports.empty() &&
                 m.data_segments.empty();
    if (empty) return "(module)\n";

    std::ostringstream os;
    os << "(module\n";
    for (std::size_t i = 0; i < m.types.size(); ++i) {
        os << "  (type (;" << i << ";) (func";
        print_valtypes(os, "param", m.types[i].params);
        print_valtypes(os, "result", m.types[i].results);
        os << "))\n";
    }
    for (std::size_t i = 0; i < m.functions.size(); ++i) {
        const Function& f = m.functions[i];
        const FuncType& sig = m.types[f.type_index];
        os << "  (func (;" << i << ";) (type " << f.type_index << ")";
        print_valtypes(os, "param", sig.params);
        print_valtypes(os, "result", sig.results);
        os << '\n';
        if (!f.locals.empty()) {
            os << "    (local";
            for (ValType t : f.locals) os << ' ' << name_of(t);
            os << ")\n";
        }
        // final `end` is implied by the closing paren
        for (std::size_t k = 0; k + 1 < f.body.size(); ++k) {
            os << "    ";
            print_instruction(os, f.body[k]);
            os << '\n';
        }
        os << "  )\n";
    }
    for (std::size_t i = 0; i < m.memories.size(); ++i) {
        os << "  (memory (;" << i << ";) " << m.memories[i].min_pages;
        if (m.memories[i].max_pages) os << ' ' << *m.memories[i].max_pages;
        os << ")\n";
    }
    for (const Export& e : m.exports) {
        os << "  (export \"" << escape_string(reinterpret_cast<const std::uint8_t*>(e.name.data()), e.name.size())
           << "\" (" << (e.kind == ExportKind::func ? "func" : "memory") << ' ' << e.index << "))\n";
    }
    for (const DataSegment& seg : m.data_segments) {
        os << "  (data ";
        if (seg.memory_index != 0) os << "(memory " << seg.memory_index << ") ";
        os << "(i32.const " << seg.offset_expr[0].i32 << ") \"" << escape_string(seg.bytes.data(), seg.bytes.size())
           << "\")\n";
    }
    os << ")\n";
    return os.str();
}

}  // namespace watvec::wasm
