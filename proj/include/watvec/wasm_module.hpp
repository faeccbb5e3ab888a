#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace watvec::wasm {

constexpr std::uint32_t kPageSize = 65536;
constexpr std::uint32_t kMaxPages = 65536;

enum class ValType : std::uint8_t {
    i32 = 0x7F,
    f64 = 0x7C,
};

const char* name_of(ValType t);

// Instruction subset: everything the JS-subset compiler can emit.
enum class Opcode : std::uint8_t {
    end = 0x0B,
    ret = 0x0F,  // "return"
    call = 0x10,
    drop = 0x1A,
    local_get = 0x20,
    local_set = 0x21,
    i32_const = 0x41,
    f64_const = 0x44,
    f64_trunc = 0x9D,
    f64_add = 0xA0,
    f64_sub = 0xA1,
    f64_mul = 0xA2,
    f64_div = 0xA3,
};

const char* name_of(Opcode op);

struct Instruction {
    Opcode op = Opcode::end;
    std::uint32_t index = 0;  // local.get / local.set / call
    std::int32_t i32 = 0;     // i32.const
    double f64 = 0.0;         // f64.const

    bool operator==(const Instruction&) const = default;

    static Instruction simple(Opcode op) { return Instruction{op, 0, 0, 0.0}; }
    static Instruction i32_const(std::int32_t v) { return Instruction{Opcode::i32_const, 0, v, 0.0}; }
    static Instruction f64_const(double v) { return Instruction{Opcode::f64_const, 0, 0, v}; }
    static Instruction local_get(std::uint32_t i) { return Instruction{Opcode::local_get, i, 0, 0.0}; }
    static Instruction local_set(std::uint32_t i) { return Instruction{Opcode::local_set, i, 0, 0.0}; }
    static Instruction call(std::uint32_t f) { return Instruction{Opcode::call, f, 0, 0.0}; }
    static Instruction end() { return simple(Opcode::end); }
};

bool has_index_immediate(Opcode op);

struct FuncType {
    std::vector<ValType> params;
    std::vector<ValType> results;
    bool operator==(const FuncType&) const = default;
};

struct Function {
    std::uint32_t type_index = 0;
    std::vector<ValType> locals;     // extra locals, params not included
    std::vector<Instruction> body;   // must end with `end`
    bool operator==(const Function&) const = default;
};

struct Memory {
    std::uint32_t min_pages = 0;
    std::optional<std::uint32_t> max_pages;
    bool operator==(const Memory&) const = default;
};

enum class ExportKind : std::uint8_t {
    func = 0x00,
    memory = 0x02,
};

struct Export {
    std::string name;
    ExportKind kind = ExportKind::func;
    std::uint32_t index = 0;
    bool operator==(const Export&) const = default;
};

struct DataSegment {
    std::uint32_t memory_index = 0;
    std::vector<Instruction> offset_expr;  // single i32.const followed by end
    std::vector<std::uint8_t> bytes;
    bool operator==(const DataSegment&) const = default;

    static DataSegment at_offset(std::int32_t offset, std::vector<std::uint8_t> data) {
        return DataSegment{0, {Instruction::i32_const(offset), Instruction::end()}, std::move(data)};
    }
};

struct WasmModule {
    std::vector<FuncType> types;
    std::vector<Function> functions;
    std::vector<Memory> memories;
    std::vector<Export> exports;
    std::vector<DataSegment> data_segments;
    bool operator==(const WasmModule&) const = default;
};

}  // namespace watvec::wasm
