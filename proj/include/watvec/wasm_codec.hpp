#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "watvec/wasm_module.hpp"

namespace watvec::wasm {

// ---- LEB128 ----------------------------------------------------------

void append_uleb128(std::vector<std::uint8_t>& out, std::uint64_t value);
void append_sleb128(std::vector<std::uint8_t>& out, std::int64_t value);

// ---- Validation ------------------------------------------------------

struct ValidationError {
    std::string message;
    int func_index = -1;   // -1 when not tied to a function
    int instr_index = -1;  // -1 when not tied to an instruction
};

std::vector<ValidationError> validate(const WasmModule& m);

std::string format_errors(const std::vector<ValidationError>& errors);

// ---- Binary encode / decode ------------------------------------------

// Thrown by encode_module when the module fails validate().
class InvalidModule : public std::runtime_error {
public:
    explicit InvalidModule(std::vector<ValidationError> errors);
    std::vector<ValidationError> errors;
};

std::vector<std::uint8_t> encode_module(const WasmModule& m);

enum class DecodeErrorKind {
    bad_preamble,
    truncated_section,
    malformed_leb,
    unknown_opcode,
};

class DecodeError : public std::runtime_error {
public:
    DecodeError(DecodeErrorKind kind, std::size_t offset, int section_id, const std::string& what);
    DecodeErrorKind kind;
    std::size_t offset;    // byte offset into the input
    int section_id;        // -1 outside any section
};

struct DecodeWarning {
    std::size_t offset = 0;
    std::string message;
};

struct DecodeResult {
    WasmModule module;
    std::vector<DecodeWarning> warnings;
};

DecodeResult decode_module(std::span<const std::uint8_t> bytes);

// one JSON object per line, for the warning/validation report files
std::string to_json_lines(const std::vector<DecodeWarning>& warnings);
std::string to_json_lines(const std::vector<ValidationError>& errors);

// ---- WAT text --------------------------------------------------------

// Deterministic linear WAT; requires a module that passes validate().
std::string print_wat(const WasmModule& m);

}  // namespace watvec::wasm
