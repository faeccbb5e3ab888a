#include "watvec/wasm_codec.hpp"

#include <algorithm>
#include <cstring>
#include <set>
#include <sstream>

namespace watvec::wasm {

const char* name_of(ValType t) {
    switch (t) {
        case ValType::i32: return "i32";
        case ValType::f64: return "f64";
    }
    return "?";
}

const char* name_of(Opcode op) {
    switch (op) {
        case Opcode::end: return "end";
        case Opcode::ret: return "return";
        case Opcode::call: return "call";
        case Opcode::drop: return "drop";
        case Opcode::local_get: return "local.get";
        case Opcode::local_set: return "local.set";
        case Opcode::i32_const: return "i32.const";
        case Opcode::f64_const: return "f64.const";
        case Opcode::f64_trunc: return "f64.trunc";
        case Opcode::f64_add: return "f64.add";
        case Opcode::f64_sub: return "f64.sub";
        case Opcode::f64_mul: return "f64.mul";
        case Opcode::f64_div: return "f64.div";
    }
    return "?";
}

bool has_index_immediate(Opcode op) {
    return op == Opcode::local_get || op == Opcode::local_set || op == Opcode::call;
}

// ---- LEB128 ----------------------------------------------------------

void append_uleb128(std::vector<std::uint8_t>& out, std::uint64_t value) {
    do {
        std::uint8_t byte = value & 0x7F;
        value >>= 7;
        if (value != 0) byte |= 0x80;
        out.push_back(byte);
    } while (value != 0);
}

void append_sleb128(std::vector<std::uint8_t>& out, std::int64_t value) {
    bool more = true;
    while (more) {
        std::uint8_t byte = value & 0x7F;
        value >>= 7;
        bool sign = (byte & 0x40) != 0;
        if ((value == 0 && !sign) || (value == -1 && sign)) {
            more = false;
        } else {
            byte |= 0x80;
        }
        out.push_back(byte);
    }
}

// ---- Validation ------------------------------------------------------

namespace {

void add_error(std::vector<ValidationError>& errs, std::string msg, int func = -1, int instr = -1) {
    errs.push_back(ValidationError{std::move(msg), func, instr});
}

// Abstract stack type check of one body against its signature.
void check_body(const WasmModule& m, std::uint32_t func_index, std::vector<ValidationError>& errs) {
    const Function& fn = m.functions[func_index];
    const FuncType& sig = m.types[fn.type_index];

    std::vector<ValType> locals = sig.params;
    locals.insert(locals.end(), fn.locals.begin(), fn.locals.end());

    if (fn.body.empty() || fn.body.back().op != Opcode::end) {
        add_error(errs, "body does not end with `end`", static_cast<int>(func_index));
        return;
    }

    std::vector<ValType> stack;
    bool unreachable = false;
    const int fi = static_cast<int>(func_index);

    auto pop_any = [&](int at) -> bool {
        if (!stack.empty()) {
            stack.pop_back();
            return true;
        }
        if (unreachable) return true;
        add_error(errs, "StackUnderflow", fi, at);
        return false;
    };
    auto pop_expect = [&](ValType want, int at) -> bool {
        if (!stack.empty()) {
            ValType got = stack.back();
            stack.pop_back();
            if (got != want) {
                add_error(errs, std::string("type mismatch: expected ") + name_of(want) + ", got " + name_of(got), fi, at);
                return false;
            }
            return true;
        }
        if (unreachable) return true;
        add_error(errs, "StackUnderflow", fi, at);
        return false;
    };

    for (std::size_t i = 0; i < fn.body.size(); ++i) {
        const Instruction& ins = fn.body[i];
        const int at = static_cast<int>(i);
        if (ins.op == Opcode::end) {
            if (i + 1 != fn.body.size()) {
                add_error(errs, "code after `end`", fi, at);
                return;
            }
            if (!unreachable) {
                if (stack.size() != sig.results.size() || !std::equal(stack.begin(), stack.end(), sig.results.begin())) {
                    add_error(errs, "result arity/type mismatch at `end`", fi, at);
                }
            }
            return;
        }
        switch (ins.op) {
            case Opcode::i32_const:
                stack.push_back(ValType::i32);
                break;
            case Opcode::f64_const:
                stack.push_back(ValType::f64);
                break;
            case Opcode::local_get:
                if (ins.index >= locals.size()) {
                    add_error(errs, "local index out of range", fi, at);
                    return;
                }
                stack.push_back(locals[ins.index]);
                break;
            case Opcode::local_set:
                if (ins.index >= locals.size()) {
                    add_error(errs, "local index out of range", fi, at);
                    return;
                }
                if (!pop_expect(locals[ins.index], at)) return;
                break;
            case Opcode::f64_add:
            case Opcode::f64_sub:
            case Opcode::f64_mul:
            case Opcode::f64_div:
                if (!pop_expect(ValType::f64, at)) return;
                if (!pop_expect(ValType::f64, at)) return;
                stack.push_back(ValType::f64);
                break;
            case Opcode::f64_trunc:
                if (!pop_expect(ValType::f64, at)) return;
                stack.push_back(ValType::f64);
                break;
            case Opcode::drop:
                if (!pop_any(at)) return;
                break;
            case Opcode::call: {
                if (ins.index >= m.functions.size()) {
                    add_error(errs, "call index out of range", fi, at);
                    return;
                }
                const FuncType& callee = m.types[m.functions[ins.index].type_index];
                for (auto it = callee.params.rbegin(); it != callee.params.rend(); ++it) {
                    if (!pop_expect(*it, at)) return;
                }
                for (ValType r : callee.results) stack.push_back(r);
                break;
            }
            case Opcode::ret:
                for (auto it = sig.results.rbegin(); it != sig.results.rend(); ++it) {
                    if (!pop_expect(*it, at)) return;
                }
                stack.clear();
                unreachable = true;
                break;
            case Opcode::end:
                break;  // handled above
        }
    }
}

}  // namespace

std::vector<ValidationError> validate(const WasmModule& m) {
    std::vector<ValidationError> errs;

    for (std::size_t i = 0; i < m.types.size(); ++i) {
        if (m.types[i].results.size() > 1) {
            add_error(errs, "type " + std::to_string(i) + ": more than one result");
        }
    }
    for (std::size_t i = 0; i < m.memories.size(); ++i) {
        const Memory& mem = m.memories[i];
        if (mem.min_pages > kMaxPages) add_error(errs, "memory " + std::to_string(i) + ": min exceeds page limit");
        if (mem.max_pages) {
            if (*mem.max_pages > kMaxPages) add_error(errs, "memory " + std::to_string(i) + ": max exceeds page limit");
            if (*mem.max_pages < mem.min_pages) add_error(errs, "memory " + std::to_string(i) + ": max < min");
        }
    }
    for (std::size_t i = 0; i < m.functions.size(); ++i) {
        if (m.functions[i].type_index >= m.types.size()) {
            add_error(errs, "function type index out of range", static_cast<int>(i));
        }
    }
    std::set<std::string> names;
    for (const Export& e : m.exports) {
        if (!names.insert(e.name).second) add_error(errs, "duplicate export name: " + e.name);
        switch (e.kind) {
            case ExportKind::func:
                if (e.index >= m.functions.size()) add_error(errs, "IndexOutOfRange: export \"" + e.name + "\" (func)");
                break;
            case ExportKind::memory:
                if (e.index >= m.memories.size()) add_error(errs, "IndexOutOfRange: export \"" + e.name + "\" (memory)");
                break;
        }
    }
    for (std::size_t i = 0; i < m.data_segments.size(); ++i) {
        const DataSegment& seg = m.data_segments[i];
        if (seg.memory_index >= m.memories.size()) {
            add_error(errs, "data segment " + std::to_string(i) + ": memory index out of range");
        }
        bool shape_ok = seg.offset_expr.size() == 2 && seg.offset_expr[0].op == Opcode::i32_const &&
                        seg.offset_expr[1].op == Opcode::end;
        if (!shape_ok) {
            add_error(errs, "data segment " + std::to_string(i) + ": offset expression is not `i32.const k; end`");
        } else if (seg.offset_expr[0].i32 < 0) {
            add_error(errs, "data segment " + std::to_string(i) + ": negative offset");
        }
    }

    // Bodies are only checked when the index spaces above are coherent.
    if (errs.empty()) {
        for (std::size_t i = 0; i < m.functions.size(); ++i) {
            check_body(m, static_cast<std::uint32_t>(i), errs);
        }
    }
    return errs;
}

std::string format_errors(const std::vector<ValidationError>& errors) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (i) ss << "; ";
        if (errors[i].func_index >= 0) ss << "func " << errors[i].func_index << " ";
        if (errors[i].instr_index >= 0) ss << "instr " << errors[i].instr_index << " ";
        ss << errors[i].message;
    }
    return ss.str();
}

// ---- Encoder ---------------------------------------------------------

namespace {

constexpr std::uint8_t kPreamble[8] = {0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00};

void append_instruction(std::vector<std::uint8_t>& out, const Instruction& ins) {
    out.push_back(static_cast<std::uint8_t>(ins.op));
    switch (ins.op) {
        case Opcode::i32_const:
            append_sleb128(out, ins.i32);
            break;
        case Opcode::f64_const: {
            std::uint64_t bits;
            std::memcpy(&bits, &ins.f64, sizeof(bits));
            for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
            break;
        }
        case Opcode::local_get:
        case Opcode::local_set:
        case Opcode::call:
            append_uleb128(out, ins.index);
            break;
        default:
            break;
    }
}

void append_section(std::vector<std::uint8_t>& out, std::uint8_t id, const std::vector<std::uint8_t>& payload) {
    if (payload.empty()) return;
    out.push_back(id);
    append_uleb128(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
}

}  // namespace

InvalidModule::InvalidModule(std::vector<ValidationError> errs)
    : std::runtime_error("invalid module: " + format_errors(errs)), errors(std::move(errs)) {}

std::vector<std::uint8_t> encode_module(const WasmModule& m) {
    if (auto errs = validate(m); !errs.empty()) throw InvalidModule(std::move(errs));

    std::vector<std::uint8_t> out(kPreamble, kPreamble + 8);

    if (!m.types.empty()) {
        std::vector<std::uint8_t> p;
        append_uleb128(p, m.types.size());
        for (const FuncType& t : m.types) {
            p.push_back(0x60);
            append_uleb128(p, t.params.size());
            for (ValType v : t.params) p.push_back(static_cast<std::uint8_t>(v));
            append_uleb128(p, t.results.size());
            for (ValType v : t.results) p.push_back(static_cast<std::uint8_t>(v));
        }
        append_section(out, 1, p);
    }
    if (!m.functions.empty()) {
        std::vector<std::uint8_t> p;
        append_uleb128(p, m.functions.size());
        for (const Function& f : m.functions) append_uleb128(p, f.type_index);
        append_section(out, 3, p);
    }
    if (!m.memories.empty()) {
        std::vector<std::uint8_t> p;
        append_uleb128(p, m.memories.size());
        for (const Memory& mem : m.memories) {
            p.push_back(mem.max_pages ? 0x01 : 0x00);
            append_uleb128(p, mem.min_pages);
            if (mem.max_pages) append_uleb128(p, *mem.max_pages);
        }
        append_section(out, 5, p);
    }
    if (!m.exports.empty()) {
        std::vector<std::uint8_t> p;
        append_uleb128(p, m.exports.size());
        for (const Export& e : m.exports) {
            append_uleb128(p, e.name.size());
            p.insert(p.end(), e.name.begin(), e.name.end());
            p.push_back(static_cast<std::uint8_t>(e.kind));
            append_uleb128(p, e.index);
        }
        append_section(out, 7, p);
    }
    if (!m.functions.empty()) {
        std::vector<std::uint8_t> p;
        append_uleb128(p, m.functions.size());
        for (const Function& f : m.functions) {
            std::vector<std::uint8_t> body;
            // locals, grouped into maximal runs of one value type
            std::vector<std::pair<std::uint32_t, ValType>> groups;
            for (ValType v : f.locals) {
                if (!groups.empty() && groups.back().second == v) {
                    ++groups.back().first;
                } else {
                    groups.emplace_back(1, v);
                }
            }
            append_uleb128(body, groups.size());
            for (auto& [count, type] : groups) {
                append_uleb128(body, count);
                body.push_back(static_cast<std::uint8_t>(type));
            }
            for (const Instruction& ins : f.body) append_instruction(body, ins);
            append_uleb128(p, body.size());
            p.insert(p.end(), body.begin(), body.end());
        }
        append_section(out, 10, p);
    }
    if (!m.data_segments.empty()) {
        std::vector<std::uint8_t> p;
        append_uleb128(p, m.data_segments.size());
        for (const DataSegment& seg : m.data_segments) {
            append_uleb128(p, seg.memory_index);
            for (const Instruction& ins : seg.offset_expr) append_instruction(p, ins);
            append_uleb128(p, seg.bytes.size());
            p.insert(p.end(), seg.bytes.begin(), seg.bytes.end());
        }
        append_section(out, 11, p);
    }
    return out;
}

// ---- Decoder ---------------------------------------------------------

DecodeError::DecodeError(DecodeErrorKind k, std::size_t off, int sid, const std::string& what)
    : std::runtime_error(what + " at offset " + std::to_string(off)), kind(k), offset(off), section_id(sid) {}

namespace {

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> bytes, std::size_t base, int section_id)
        : bytes_(bytes), base_(base), section_id_(section_id) {}

    std::size_t pos() const { return pos_; }
    std::size_t abs() const { return base_ + pos_; }
    bool eof() const { return pos_ >= bytes_.size(); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint8_t u8() {
        if (eof()) fail_truncated();
        return bytes_[pos_++];
    }

    std::uint32_t uleb32() {
        std::uint64_t result = 0;
        int shift = 0;
        for (int n = 0; n < 5; ++n) {
            std::uint8_t b = u8();
            result |= std::uint64_t(b & 0x7F) << shift;
            if ((b & 0x80) == 0) {
                if (result > 0xFFFFFFFFull) {
                    throw DecodeError(DecodeErrorKind::malformed_leb, abs(), section_id_, "u32 LEB128 overflow");
                }
                return static_cast<std::uint32_t>(result);
            }
            shift += 7;
        }
        throw DecodeError(DecodeErrorKind::malformed_leb, abs(), section_id_, "u32 LEB128 too long");
    }

    std::int32_t sleb32() {
        std::int64_t result = 0;
        int shift = 0;
        for (int n = 0; n < 5; ++n) {
            std::uint8_t b = u8();
            result |= std::int64_t(b & 0x7F) << shift;
            shift += 7;
            if ((b & 0x80) == 0) {
                if (shift < 64 && (b & 0x40)) result |= -(std::int64_t(1) << shift);
                if (result < INT32_MIN || result > INT32_MAX) {
                    throw DecodeError(DecodeErrorKind::malformed_leb, abs(), section_id_, "s32 LEB128 overflow");
                }
                return static_cast<std::int32_t>(result);
            }
        }
        throw DecodeError(DecodeErrorKind::malformed_leb, abs(), section_id_, "s32 LEB128 too long");
    }

    double f64() {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= std::uint64_t(u8()) << (8 * i);
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        return d;
    }

    std::vector<std::uint8_t> raw(std::size_t n) {
        if (remaining() < n) fail_truncated();
        std::vector<std::uint8_t> out(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }

    void skip(std::size_t n) {
        if (remaining() < n) fail_truncated();
        pos_ += n;
    }

    [[noreturn]] void fail_truncated() const {
        throw DecodeError(DecodeErrorKind::truncated_section, base_ + pos_, section_id_,
                          section_id_ >= 0 ? "truncated section " + std::to_string(section_id_) : "truncated module");
    }

    ValType valtype() {
        std::size_t at = abs();
        std::uint8_t b = u8();
        if (b == 0x7F) return ValType::i32;
        if (b == 0x7C) return ValType::f64;
        throw DecodeError(DecodeErrorKind::unknown_opcode, at, section_id_,
                          "unsupported value type 0x" + hex(b));
    }

    Instruction instruction() {
        std::size_t at = abs();
        std::uint8_t b = u8();
        switch (static_cast<Opcode>(b)) {
            case Opcode::end:
            case Opcode::ret:
            case Opcode::drop:
            case Opcode::f64_trunc:
            case Opcode::f64_add:
            case Opcode::f64_sub:
            case Opcode::f64_mul:
            case Opcode::f64_div:
                return Instruction::simple(static_cast<Opcode>(b));
            case Opcode::call:
                return Instruction::call(uleb32());
            case Opcode::local_get:
                return Instruction::local_get(uleb32());
            case Opcode::local_set:
                return Instruction::local_set(uleb32());
            case Opcode::i32_const:
                return Instruction::i32_const(sleb32());
            case Opcode::f64_const:
                return Instruction::f64_const(f64());
        }
        throw DecodeError(DecodeErrorKind::unknown_opcode, at, section_id_, "unsupported opcode 0x" + hex(b));
    }

private:
    static std::string hex(std::uint8_t b) {
        static const char* digits = "0123456789abcdef";
        return std::string{digits[b >> 4], digits[b & 0xF]};
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    std::size_t base_;
    int section_id_;
};

}  // namespace

DecodeResult decode_module(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || !std::equal(kPreamble, kPreamble + 8, bytes.begin())) {
        throw DecodeError(DecodeErrorKind::bad_preamble, 0, -1, "BadPreamble");
    }

    DecodeResult result;
    std::vector<std::uint32_t> func_type_indices;
    std::vector<std::pair<std::vector<ValType>, std::vector<Instruction>>> code_entries;
    bool seen[16] = {};
    int last_id = 0;

    ByteReader top(bytes.subspan(8), 8, -1);
    while (!top.eof()) {
        std::size_t id_at = top.abs();
        std::uint8_t id = top.u8();
        std::uint32_t size = top.uleb32();
        if (top.remaining() < size) {
            throw DecodeError(DecodeErrorKind::truncated_section, top.abs(), id, "section size runs past end of module");
        }
        std::size_t payload_base = top.abs();
        std::vector<std::uint8_t> payload = top.raw(size);
        ByteReader r({payload.data(), payload.size()}, payload_base, id);

        bool known = id == 1 || id == 3 || id == 5 || id == 7 || id == 10 || id == 11;
        if (!known) {
            result.warnings.push_back({id_at, "skipped section id " + std::to_string(id)});
            continue;
        }
        if (seen[id]) {
            result.warnings.push_back({id_at, "duplicate section id " + std::to_string(id)});
        } else if (id < last_id) {
            result.warnings.push_back({id_at, "out-of-order section id " + std::to_string(id)});
        }
        seen[id] = true;
        last_id = std::max<int>(last_id, id);

        switch (id) {
            case 1: {
                std::uint32_t n = r.uleb32();
                for (std::uint32_t i = 0; i < n; ++i) {
                    std::size_t at = r.abs();
                    std::uint8_t tag = r.u8();
                    if (tag != 0x60) {
                        throw DecodeError(DecodeErrorKind::unknown_opcode, at, id, "unsupported type tag");
                    }
                    FuncType t;
                    std::uint32_t np = r.uleb32();
                    for (std::uint32_t k = 0; k < np; ++k) t.params.push_back(r.valtype());
                    std::uint32_t nr = r.uleb32();
                    for (std::uint32_t k = 0; k < nr; ++k) t.results.push_back(r.valtype());
                    result.module.types.push_back(std::move(t));
                }
                break;
            }
            case 3: {
                std::uint32_t n = r.uleb32();
                for (std::uint32_t i = 0; i < n; ++i) func_type_indices.push_back(r.uleb32());
                break;
            }
            case 5: {
                std::uint32_t n = r.uleb32();
                for (std::uint32_t i = 0; i < n; ++i) {
                    std::size_t at = r.abs();
                    std::uint8_t flag = r.u8();
                    if (flag > 1) throw DecodeError(DecodeErrorKind::unknown_opcode, at, id, "unsupported limits flag");
                    Memory mem;
                    mem.min_pages = r.uleb32();
                    if (flag == 1) mem.max_pages = r.uleb32();
                    result.module.memories.push_back(mem);
                }
                break;
            }
            case 7: {
                std::uint32_t n = r.uleb32();
                for (std::uint32_t i = 0; i < n; ++i) {
                    std::uint32_t len = r.uleb32();
                    std::vector<std::uint8_t> name = r.raw(len);
                    std::size_t at = r.abs();
                    std::uint8_t kind = r.u8();
                    std::uint32_t index = r.uleb32();
                    if (kind == 0x00 || kind == 0x02) {
                        result.module.exports.push_back(
                            Export{std::string(name.begin(), name.end()), static_cast<ExportKind>(kind), index});
                    } else {
                        result.warnings.push_back({at, "skipped export of unsupported kind " + std::to_string(kind)});
                    }
                }
                break;
            }
            case 10: {
                std::uint32_t n = r.uleb32();
                for (std::uint32_t i = 0; i < n; ++i) {
                    std::uint32_t body_size = r.uleb32();
                    std::size_t body_base = r.abs();
                    std::vector<std::uint8_t> body_bytes = r.raw(body_size);
                    ByteReader br({body_bytes.data(), body_bytes.size()}, body_base, id);
                    std::vector<ValType> locals;
                    std::uint32_t groups = br.uleb32();
                    for (std::uint32_t g = 0; g < groups; ++g) {
                        std::uint32_t count = br.uleb32();
                        if (count > 1000000) {
                            throw DecodeError(DecodeErrorKind::malformed_leb, br.abs(), id, "unreasonable local count");
                        }
                        ValType t = br.valtype();
                        locals.insert(locals.end(), count, t);
                    }
                    std::vector<Instruction> instrs;
                    while (!br.eof()) instrs.push_back(br.instruction());
                    code_entries.emplace_back(std::move(locals), std::move(instrs));
                }
                break;
            }
            case 11: {
                std::uint32_t n = r.uleb32();
                for (std::uint32_t i = 0; i < n; ++i) {
                    DataSegment seg;
                    seg.memory_index = r.uleb32();
                    for (;;) {
                        Instruction ins = r.instruction();
                        seg.offset_expr.push_back(ins);
                        if (ins.op == Opcode::end) break;
                    }
                    std::uint32_t len = r.uleb32();
                    seg.bytes = r.raw(len);
                    result.module.data_segments.push_back(std::move(seg));
                }
                break;
            }
        }
        if (!r.eof()) {
            result.warnings.push_back({r.abs(), "trailing bytes in section id " + std::to_string(id)});
        }
    }

    if (func_type_indices.size() != code_entries.size()) {
        result.warnings.push_back(
            {bytes.size(), "function/code section count mismatch: " + std::to_string(func_type_indices.size()) +
                               " vs " + std::to_string(code_entries.size())});
    }
    std::size_t nfuncs = std::min(func_type_indices.size(), code_entries.size());
    for (std::size_t i = 0; i < nfuncs; ++i) {
        result.module.functions.push_back(
            Function{func_type_indices[i], std::move(code_entries[i].first), std::move(code_entries[i].second)});
    }
    return result;
}

}  // namespace watvec::wasm
