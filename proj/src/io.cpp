#include "mrt/io.hpp"

#include <fstream>
#include <sstream>

#include "mrt/errors.hpp"

namespace mrt::io {

json to_json(const num::Real& x) { return x.str(); }

num::Real real_from_json(const json& j, const std::string& what) {
  if (j.is_string()) return num::Real::from_string(j.get<std::string>());
  if (j.is_number_integer()) return num::Real(j.get<long>());
  if (j.is_number()) return num::Real(j.get<double>());
  throw ValidationError(what + " must be a decimal string or number");
}

json to_json(const std::vector<num::Real>& xs) {
  json arr = json::array();
  for (const auto& x : xs) arr.push_back(to_json(x));
  return arr;
}

std::vector<num::Real> reals_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + " must be an array");
  std::vector<num::Real> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(real_from_json(e, what));
  return out;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".meta.json");
  return p;
}

void check_precision(const json& meta, const std::filesystem::path& source) {
  if (!meta.contains("precision_bits")) return;
  const int bits = meta["precision_bits"].get<int>();
  if (bits != num::working_precision()) {
    throw PrecisionError(source.string() + " was written at " + std::to_string(bits) +
                         " bits but the working precision is " +
                         std::to_string(num::working_precision()) + "; pass --precision-bits " +
                         std::to_string(bits));
  }
}

}  // namespace mrt::io
