#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cwlab/gmm.hpp"

namespace cwlab {

using Json = nlohmann::json;

/// Malformed or invalid input documents. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mixture document:
///   {"dim": d, "weights": [...],
///    "components": [{"mean": [...], "cov": s | [d entries] | [[row], ...]}]}
/// A scalar cov is isotropic, a flat list of d entries diagonal, and a list of
/// d rows (or a flat list of d*d entries, d > 1) a full row-major matrix.
Json mixture_to_json(const Mixture& mixture);
Mixture mixture_from_json(const Json& doc);

Mixture read_mixture_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Shortest representation that round-trips a double (up to 17 significant digits).
std::string format_real(double v);

/// 64-bit FNV-1a hash, hex encoded. Stable across platforms and runs.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace cwlab
