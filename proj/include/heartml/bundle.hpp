#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>

#include "heartml/error.hpp"
#include "heartml/serialization.hpp"

namespace heartml {

/// Write-temp-then-rename so readers never see a partial file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::WriteFailed, tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::WriteFailed, tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorKind::WriteFailed, path + ": " + ec.message());
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Everything needed to reproduce predictions: the fitted preprocessor, the
/// model, and the configuration that produced them.
struct ModelBundle {
  int format_version = kFormatVersion;
  std::string created_at;
  Algorithm algorithm = Algorithm::XGBoost;
  FittedPreprocessor preprocessor;
  FittedModel model;
  json train_config = json::object();
  std::optional<EvalReport> metrics_at_save;
  std::optional<TrainHistory> history;

  double threshold() const {
    if (train_config.contains("model") && train_config["model"].contains("threshold")) {
      return train_config["model"]["threshold"].get<double>();
    }
    return kDefaultThreshold;
  }
};

/// Model input width must agree with the preprocessor's column count.
inline void check_bundle(const ModelBundle& b) {
  const bool ok = std::visit(
      [](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, RNNParams>) return m.input_size() == 1 && m.hidden_size() > 0;
        else return m.features == kFeatureCount;
      },
      b.model);
  if (!ok) throw Error(ErrorKind::SchemaMismatch, "model input width does not match the preprocessor");
}

inline json to_json(const ModelBundle& b) {
  json j;
  j["format_version"] = b.format_version;
  j["created_at"] = b.created_at;
  j["algorithm"] = short_name(b.algorithm);
  j["preprocessor"] = to_json(b.preprocessor);
  j["model"] = to_json(b.model);
  j["train_config"] = b.train_config;
  j["metrics_at_save"] = b.metrics_at_save ? to_json(*b.metrics_at_save) : json(nullptr);
  if (b.history) j["train_history"] = to_json(*b.history);
  return j;
}

inline ModelBundle bundle_from_json(const json& j) {
  ModelBundle b;
  detail::check_version(j, "bundle");
  b.created_at = detail::field<std::string>(j, "created_at");
  b.algorithm = parse_algorithm(detail::field<std::string>(j, "algorithm"));
  b.preprocessor = preprocessor_from_json(j.at("preprocessor"));
  b.model = model_from_json(b.algorithm, j.at("model"));
  b.train_config = j.contains("train_config") ? j.at("train_config") : json::object();
  if (j.contains("metrics_at_save") && !j.at("metrics_at_save").is_null()) {
    b.metrics_at_save = report_from_json(j.at("metrics_at_save"));
  }
  if (j.contains("train_history")) b.history = history_from_json(j.at("train_history"));
  check_bundle(b);
  return b;
}

inline std::string dump_bundle(const ModelBundle& b) { return to_json(b).dump(2) + "\n"; }

inline void save_bundle(const ModelBundle& b, const std::string& path) { write_file_atomic(path, dump_bundle(b)); }

inline ModelBundle load_bundle(const std::string& path) {
  const auto text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedDocument, path + ": " + e.what());
  }
  try {
    return bundle_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedDocument, path + ": " + e.what());
  }
}

}  // namespace heartml
