#include "cwlab/io.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace cwlab {
namespace {

std::vector<double> as_reals(const Json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(fmt::format("{} must be a list", what));
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(fmt::format("{} must contain numbers", what));
    out.push_back(v.get<double>());
  }
  return out;
}

Covariance covariance_from_json(const Json& j, Index dim) {
  if (j.is_number()) return Covariance::isotropic(dim, j.get<double>());
  if (!j.is_array()) throw ConfigError("cov must be a number, a list, or a matrix");
  if (!j.empty() && j.front().is_array()) {
    if (static_cast<Index>(j.size()) != dim) throw ConfigError("cov matrix row count differs from dim");
    MatrixXd m(dim, dim);
    for (Index r = 0; r < dim; ++r) {
      const auto row = as_reals(j[static_cast<std::size_t>(r)], "cov row");
      if (static_cast<Index>(row.size()) != dim) throw ConfigError("cov matrix row length differs from dim");
      for (Index c = 0; c < dim; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return Covariance::full(std::move(m));
  }
  const auto flat = as_reals(j, "cov");
  if (static_cast<Index>(flat.size()) == dim) {
    return Covariance::diagonal(Eigen::Map<const VectorXd>(flat.data(), dim));
  }
  if (static_cast<Index>(flat.size()) == dim * dim) {
    return Covariance::full(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), dim, dim));
  }
  throw ConfigError(fmt::format("cov list has {} entries; expected {} or {}", flat.size(), dim, dim * dim));
}

Json covariance_to_json(const Covariance& c) {
  switch (c.kind()) {
    case CovarianceKind::isotropic:
      return c.isotropic_variance();
    case CovarianceKind::diagonal:
      return std::vector<double>(c.diagonal_variances().begin(), c.diagonal_variances().end());
    case CovarianceKind::full: {
      Json rows = Json::array();
      const MatrixXd& m = c.full_matrix();
      for (Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Index col = 0; col < m.cols(); ++col) row.push_back(m(r, col));
        rows.push_back(row);
      }
      return rows;
    }
  }
  return nullptr;
}

}  // namespace

Json mixture_to_json(const Mixture& mixture) {
  Json doc;
  doc["dim"] = mixture.dim();
  doc["weights"] = mixture.weights();
  Json comps = Json::array();
  for (const auto& c : mixture.components()) {
    comps.push_back({{"mean", std::vector<double>(c.mean.begin(), c.mean.end())}, {"cov", covariance_to_json(c.cov)}});
  }
  doc["components"] = comps;
  return doc;
}

Mixture mixture_from_json(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("mixture document must be an object");
  if (!doc.contains("dim") || !doc["dim"].is_number_integer()) throw ConfigError("mixture needs integer key 'dim'");
  const Index dim = doc["dim"].get<Index>();
  if (dim < 1) throw ConfigError("mixture dim must be positive");
  if (!doc.contains("components") || !doc["components"].is_array() || doc["components"].empty()) {
    throw ConfigError("mixture needs a nonempty 'components' list");
  }
  std::vector<GaussianComponent> comps;
  try {
    for (const auto& c : doc["components"]) {
      if (!c.contains("mean")) throw ConfigError("component needs 'mean'");
      const auto mean = as_reals(c["mean"], "mean");
      if (static_cast<Index>(mean.size()) != dim) throw ConfigError("component mean length differs from dim");
      const Json cov = c.contains("cov") ? c["cov"] : Json(1.0);
      comps.emplace_back(Eigen::Map<const VectorXd>(mean.data(), dim), covariance_from_json(cov, dim));
    }
    std::vector<double> weights;
    if (doc.contains("weights")) {
      weights = as_reals(doc["weights"], "weights");
    } else {
      weights.assign(comps.size(), 1.0 / static_cast<double>(comps.size()));
    }
    return Mixture(std::move(comps), std::move(weights));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Mixture read_mixture_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ConfigError(fmt::format("mixture file {} is empty", path.string()));
  }
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("mixture file {}: {}", path.string(), e.what()));
  }
  return mixture_from_json(doc);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

std::string format_real(double v) { return fmt::format("{}", v); }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace cwlab
