#include <json.hpp>

#include "watvec/wasm_codec.hpp"

namespace watvec::wasm {

using nlohmann::json;

std::string to_json_lines(const std::vector<DecodeWarning>& warnings) {
    std::string out;
    for (const DecodeWarning& w : warnings) {
        out += json{{"offset", w.offset}, {"message", w.message}}.dump();
        out += "\n";
    }
    return out;
}

std::string to_json_lines(const std::vector<ValidationError>& errors) {
    std::string out;
    for (const ValidationError& e : errors) {
        json j{{"message", e.message}};
        if (e.func_index >= 0) j["func"] = e.func_index;
        if (e.instr_index >= 0) j["instr"] = e.instr_index;
        out += j.dump();
        out += "\n";
    }
    return out;
}

}  // namespace watvec::wasm
