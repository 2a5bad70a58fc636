#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mrt/real.hpp"

namespace mrt::io {

using json = nlohmann::ordered_json;

// Reals travel as decimal strings with the round-trip digit count for their
// precision, so a file written at P bits reads back bit-identically at P.
json to_json(const num::Real& x);
num::Real real_from_json(const json& j, const std::string& what);
json to_json(const std::vector<num::Real>& xs);
std::vector<num::Real> reals_from_json(const json& j, const std::string& what);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

// "<name>.meta.json" next to a CSV artifact.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

// Checks that a sidecar's precision matches the working precision.
void check_precision(const json& meta, const std::filesystem::path& source);

}  // namespace mrt::io
