#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "heartml/boosting.hpp"
#include "heartml/error.hpp"
#include "heartml/metrics.hpp"
#include "heartml/model.hpp"
#include "heartml/naive_bayes.hpp"
#include "heartml/preprocess.hpp"
#include "heartml/rnn.hpp"
#include "heartml/schema.hpp"

namespace heartml {

using json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

namespace detail {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::MalformedDocument, std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedDocument, std::string("field \"") + key + "\": " + e.what());
  }
}

inline void check_version(const json& j, const char* what) {
  const int v = field<int>(j, "format_version");
  if (v != kFormatVersion) {
    throw Error(ErrorKind::VersionMismatch, std::string(what) + " format_version " + std::to_string(v) +
                                                ", this build reads " + std::to_string(kFormatVersion));
  }
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return field<double>(j, key);
}

}  // namespace detail

// --- preprocessor ----------------------------------------------------------

inline json to_json(const FittedPreprocessor& fp) {
  json cols = json::array();
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    json col;
    col["name"] = kHeartSchema[c].name;
    if (is_numeric(c)) {
      col["kind"] = "numeric";
      col["mean"] = fp.scale_stats[c].mean;
      col["std"] = fp.scale_stats[c].std;
      col["global_median"] = detail::optional_number(fp.global_medians[c]);
    } else {
      col["kind"] = "categorical";
      col["vocab"] = fp.vocab[c];
      col["mode"] = fp.modes[c];
    }
    cols.push_back(std::move(col));
  }
  json table = json::array();
  for (const auto& [cohort, medians] : fp.impute_table) {
    json m = json::object();
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      if (is_numeric(c) && medians[c]) m[std::string(kHeartSchema[c].name)] = *medians[c];
    }
    table.push_back({{"sex", cohort.sex}, {"decade", cohort.decade}, {"medians", std::move(m)}});
  }
  return {{"format_version", kFormatVersion},
          {"unseen_policy", fp.unseen_policy == UnseenPolicy::Error ? "error" : "map_to_mode"},
          {"columns", std::move(cols)},
          {"impute_table", std::move(table)}};
}

inline FittedPreprocessor preprocessor_from_json(const json& j) {
  detail::check_version(j, "preprocessor");
  FittedPreprocessor fp;
  const auto policy = detail::field<std::string>(j, "unseen_policy");
  if (policy == "error") fp.unseen_policy = UnseenPolicy::Error;
  else if (policy == "map_to_mode") fp.unseen_policy = UnseenPolicy::MapToMode;
  else throw Error(ErrorKind::MalformedDocument, "unseen_policy \"" + policy + "\"");

  const auto& cols = j.at("columns");
  if (!cols.is_array() || cols.size() != kFeatureCount) {
    throw Error(ErrorKind::SchemaMismatch, "preprocessor must describe exactly " + std::to_string(kFeatureCount) + " columns");
  }
  fp.vocab.resize(kFeatureCount);
  fp.modes.assign(kFeatureCount, 0);
  fp.scale_stats.resize(kFeatureCount);
  fp.global_medians.resize(kFeatureCount);
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    const auto& col = cols[c];
    if (detail::field<std::string>(col, "name") != kHeartSchema[c].name) {
      throw Error(ErrorKind::SchemaMismatch, "column " + std::to_string(c) + " is not " + std::string(kHeartSchema[c].name));
    }
    if (is_numeric(c)) {
      fp.scale_stats[c] = {detail::field<double>(col, "mean"), detail::field<double>(col, "std")};
      fp.global_medians[c] = detail::read_optional(col, "global_median");
    } else {
      fp.vocab[c] = detail::field<std::vector<std::string>>(col, "vocab");
      fp.modes[c] = detail::field<std::size_t>(col, "mode");
      if (fp.vocab[c].empty() || fp.modes[c] >= fp.vocab[c].size()) {
        throw Error(ErrorKind::MalformedDocument, "bad vocabulary for " + std::string(kHeartSchema[c].name));
      }
    }
  }
  for (const auto& entry : j.at("impute_table")) {
    Cohort key{detail::field<std::string>(entry, "sex"), detail::field<int>(entry, "decade")};
    std::vector<std::optional<double>> medians(kFeatureCount);
    const auto& m = entry.at("medians");
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      const std::string name(kHeartSchema[c].name);
      if (is_numeric(c) && m.contains(name)) medians[c] = m.at(name).get<double>();
    }
    fp.impute_table.emplace(std::move(key), std::move(medians));
  }
  return fp;
}

// --- Naive Bayes ------------------------------------------------------------

inline json to_json(const GaussianNBModel& m) {
  const auto d = static_cast<std::ptrdiff_t>(m.features);
  json means = json::array();
  json vars = json::array();
  for (std::ptrdiff_t c = 0; c < 2; ++c) {
    means.push_back(std::vector<double>(m.means.begin() + c * d, m.means.begin() + (c + 1) * d));
    vars.push_back(std::vector<double>(m.variances.begin() + c * d, m.variances.begin() + (c + 1) * d));
  }
  return {{"format_version", kFormatVersion}, {"features", m.features}, {"priors", m.priors},
          {"means", std::move(means)},        {"variances", std::move(vars)}, {"var_floor", m.var_floor}};
}

inline GaussianNBModel nb_from_json(const json& j) {
  detail::check_version(j, "naive bayes model");
  GaussianNBModel m;
  m.features = detail::field<std::size_t>(j, "features");
  m.priors = detail::field<std::array<double, 2>>(j, "priors");
  m.var_floor = detail::field<double>(j, "var_floor");
  const auto means = detail::field<std::vector<std::vector<double>>>(j, "means");
  const auto vars = detail::field<std::vector<std::vector<double>>>(j, "variances");
  if (means.size() != 2 || vars.size() != 2) throw Error(ErrorKind::MalformedDocument, "expected two classes");
  for (int c = 0; c < 2; ++c) {
    if (means[c].size() != m.features || vars[c].size() != m.features) {
      throw Error(ErrorKind::MalformedDocument, "naive bayes parameter width mismatch");
    }
    m.means.insert(m.means.end(), means[c].begin(), means[c].end());
    m.variances.insert(m.variances.end(), vars[c].begin(), vars[c].end());
  }
  return m;
}

// --- boosting ---------------------------------------------------------------

namespace detail {

inline json tree_node_json(const Tree& t, std::size_t i) {
  const auto& n = t.nodes[i];
  if (n.is_leaf()) return {{"weight", n.weight}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"left", tree_node_json(t, static_cast<std::size_t>(n.left))},
          {"right", tree_node_json(t, static_cast<std::size_t>(n.right))}};
}

inline int tree_node_from_json(Tree& t, const json& j, std::size_t features) {
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("weight")) {
    t.nodes.back().weight = field<double>(j, "weight");
    return id;
  }
  const int feature = field<int>(j, "feature");
  if (feature < 0 || static_cast<std::size_t>(feature) >= features) {
    throw Error(ErrorKind::MalformedDocument, "tree feature index out of range");
  }
  const double threshold = field<double>(j, "threshold");
  const int l = tree_node_from_json(t, j.at("left"), features);
  const int r = tree_node_from_json(t, j.at("right"), features);
  auto& n = t.nodes[static_cast<std::size_t>(id)];
  n.feature = feature;
  n.threshold = threshold;
  n.left = l;
  n.right = r;
  return id;
}

}  // namespace detail

inline json to_json(const Tree& t) { return detail::tree_node_json(t, 0); }

inline json to_json(const BoostedEnsemble& e) {
  json trees = json::array();
  for (const auto& t : e.trees) trees.push_back(to_json(t));
  return {{"format_version", kFormatVersion},
          {"mode", e.mode == BoostMode::FirstOrder ? "first_order" : "second_order"},
          {"base_score", e.base_score},
          {"learning_rate", e.learning_rate},
          {"lambda", e.lambda},
          {"gamma", e.gamma},
          {"max_depth", e.max_depth},
          {"n_rounds", e.n_rounds},
          {"min_child_weight", e.min_child_weight},
          {"features", e.features},
          {"trees", std::move(trees)}};
}

inline BoostedEnsemble boosted_from_json(const json& j) {
  detail::check_version(j, "boosted ensemble");
  BoostedEnsemble e;
  const auto mode = detail::field<std::string>(j, "mode");
  if (mode == "first_order") e.mode = BoostMode::FirstOrder;
  else if (mode == "second_order") e.mode = BoostMode::SecondOrder;
  else throw Error(ErrorKind::MalformedDocument, "boosting mode \"" + mode + "\"");
  e.base_score = detail::field<double>(j, "base_score");
  e.learning_rate = detail::field<double>(j, "learning_rate");
  e.lambda = detail::field<double>(j, "lambda");
  e.gamma = detail::field<double>(j, "gamma");
  e.max_depth = detail::field<unsigned>(j, "max_depth");
  e.n_rounds = detail::field<unsigned>(j, "n_rounds");
  e.min_child_weight = detail::field<double>(j, "min_child_weight");
  e.features = detail::field<std::size_t>(j, "features");
  for (const auto& tj : j.at("trees")) {
    Tree t;
    detail::tree_node_from_json(t, tj, e.features);
    e.trees.push_back(std::move(t));
  }
  return e;
}

// --- RNN --------------------------------------------------------------------

namespace detail {

inline json tensor(std::span<const double> data, std::vector<std::size_t> shape) {
  return {{"shape", std::move(shape)}, {"data", std::vector<double>(data.begin(), data.end())}};
}

inline void read_tensor(const json& j, const char* key, std::span<double> out, std::vector<std::size_t> shape) {
  const auto& t = j.at(key);
  if (field<std::vector<std::size_t>>(t, "shape") != shape) {
    throw Error(ErrorKind::MalformedDocument, std::string("tensor \"") + key + "\" has the wrong shape");
  }
  const auto data = field<std::vector<double>>(t, "data");
  if (data.size() != out.size()) throw Error(ErrorKind::MalformedDocument, std::string("tensor \"") + key + "\" size");
  std::copy(data.begin(), data.end(), out.begin());
}

}  // namespace detail

inline json to_json(const RNNParams& p) {
  const auto H = p.hidden_size();
  const auto I = p.input_size();
  return {{"format_version", kFormatVersion},
          {"hidden_size", H},
          {"input_size", I},
          {"W_xh", detail::tensor(p.w_xh(), {H, I})},
          {"W_hh", detail::tensor(p.w_hh(), {H, H})},
          {"W_hy", detail::tensor(p.w_hy(), {1, H})},
          {"b_h", detail::tensor(p.b_h(), {H})},
          {"b_y", p.b_y()}};
}

inline RNNParams rnn_from_json(const json& j) {
  detail::check_version(j, "rnn parameters");
  const auto H = detail::field<std::size_t>(j, "hidden_size");
  const auto I = detail::field<std::size_t>(j, "input_size");
  RNNParams p(H, I);
  detail::read_tensor(j, "W_xh", p.w_xh(), {H, I});
  detail::read_tensor(j, "W_hh", p.w_hh(), {H, H});
  detail::read_tensor(j, "W_hy", p.w_hy(), {1, H});
  detail::read_tensor(j, "b_h", p.b_h(), {H});
  p.b_y() = detail::field<double>(j, "b_y");
  return p;
}

inline json to_json(const TrainHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) epochs.push_back({e.train_loss, e.val_loss});
  return {{"best_epoch", h.best_epoch}, {"stopped_epoch", h.stopped_epoch}, {"epochs", std::move(epochs)}};
}

inline TrainHistory history_from_json(const json& j) {
  TrainHistory h;
  h.best_epoch = detail::field<unsigned>(j, "best_epoch");
  h.stopped_epoch = detail::field<unsigned>(j, "stopped_epoch");
  for (const auto& e : j.at("epochs")) h.epochs.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
  return h;
}

// --- reports and configs ----------------------------------------------------

inline json to_json(const EvalReport& r) {
  return {{"model_id", r.model_id},
          {"threshold", r.threshold},
          {"accuracy", detail::optional_number(r.accuracy)},
          {"precision", detail::optional_number(r.precision)},
          {"recall", detail::optional_number(r.recall)},
          {"f1", detail::optional_number(r.f1)},
          {"confusion", {{"tp", r.matrix.tp}, {"fp", r.matrix.fp}, {"fn", r.matrix.fn}, {"tn", r.matrix.tn}}}};
}

inline EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.model_id = detail::field<std::string>(j, "model_id");
  r.threshold = detail::field<double>(j, "threshold");
  r.accuracy = detail::read_optional(j, "accuracy");
  r.precision = detail::read_optional(j, "precision");
  r.recall = detail::read_optional(j, "recall");
  r.f1 = detail::read_optional(j, "f1");
  const auto& c = j.at("confusion");
  r.matrix = {detail::field<std::size_t>(c, "tp"), detail::field<std::size_t>(c, "fp"),
              detail::field<std::size_t>(c, "fn"), detail::field<std::size_t>(c, "tn")};
  return r;
}

inline json to_json(const ModelSpec& s) {
  json j = {{"algorithm", short_name(s.algorithm)},
            {"threshold", s.threshold},
            {"smote", s.smote},
            {"smote_k", s.smote_k},
            {"unseen_policy", s.unseen_policy == UnseenPolicy::Error ? "error" : "map_to_mode"}};
  if (s.algorithm == Algorithm::RNN) {
    j["validation_fraction"] = s.validation_fraction;
    j["rnn"] = {{"learning_rate", s.rnn.learning_rate}, {"rms_decay", s.rnn.rms_decay},
                {"epsilon", s.rnn.epsilon},             {"max_epochs", s.rnn.max_epochs},
                {"patience", s.rnn.patience},           {"batch_size", s.rnn.batch_size},
                {"hidden_size", s.rnn.hidden_size},     {"init_scale", s.rnn.init_scale}};
  } else if (s.algorithm != Algorithm::NaiveBayes) {
    const auto b = s.boost_config();
    j["boost"] = {{"n_rounds", b.n_rounds},       {"learning_rate", b.learning_rate}, {"max_depth", b.max_depth},
                  {"lambda", b.lambda},           {"gamma", b.gamma},                 {"min_child_weight", b.min_child_weight}};
  }
  return j;
}

inline json to_json(const FittedModel& m) {
  return std::visit([](const auto& model) { return to_json(model); }, m);
}

inline FittedModel model_from_json(Algorithm a, const json& j) {
  switch (a) {
    case Algorithm::NaiveBayes: return nb_from_json(j);
    case Algorithm::GradientBoosting:
    case Algorithm::XGBoost: return boosted_from_json(j);
    case Algorithm::RNN: return rnn_from_json(j);
  }
  throw Error(ErrorKind::MalformedDocument, "unknown algorithm");
}

}  // namespace heartml
