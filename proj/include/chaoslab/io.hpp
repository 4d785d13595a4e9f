#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "chaoslab/chaos.hpp"

namespace chaoslab {

using Json = nlohmann::json;

// Raised for malformed input; `field` names the offending JSON path.
struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string f, const std::string& msg) : std::runtime_error(f + ": " + msg), field(std::move(f)) {}
};

// Asymmetry up to 1e-12 (relative) is silently removed; up to 1e-8 it is removed with a
// warning appended to `warnings`; beyond that the input is rejected.
// {"order": q, "dim": M, "coeffs": [M^q numbers, row-major]}; order 2 also accepts {"matrix": [[..],..]}
SymKernel kernel_from_json(const Json& j, const std::string& where = "kernel",
                           std::vector<std::string>* warnings = nullptr);
// {"dim": M, "components": [{"constant": c, "kernels": [kernel, ...]}, ...]}
// or {"kernels": [kernel, ...]} for a pure vector
ChaosVector chaos_vector_from_json(const Json& j, std::vector<std::string>* warnings = nullptr);
// [[..], ..] square symmetric
Mat matrix_from_json(const Json& j, const std::string& where = "matrix", std::vector<std::string>* warnings = nullptr);

Json kernel_to_json(const Kernel& k);
Json chaos_vector_to_json(const ChaosVector& F);
Json matrix_to_json(const Mat& m);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace chaoslab
