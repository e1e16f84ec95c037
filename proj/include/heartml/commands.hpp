#pragma once

#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "heartml/bundle.hpp"
#include "heartml/dataset.hpp"
#include "heartml/error.hpp"
#include "heartml/evaluation.hpp"
#include "heartml/model.hpp"
#include "heartml/preprocess.hpp"
#include "heartml/serialization.hpp"

namespace heartml {

/// Settings shared by every subcommand. Hyperparameter overrides are kept
/// per algorithm so `compare` can tune each model independently.
struct RunConfig {
  std::string data_path;
  Algorithm algorithm = Algorithm::XGBoost;
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
  double threshold = kDefaultThreshold;
  bool smote = true;
  UnseenPolicy unseen_policy = UnseenPolicy::Error;
  std::map<Algorithm, ParamAssignment> hyperparameters;

  ModelSpec spec_for(Algorithm a) const {
    ModelSpec s;
    s.algorithm = a;
    s.threshold = threshold;
    s.smote = smote;
    s.unseen_policy = unseen_policy;
    if (const auto it = hyperparameters.find(a); it != hyperparameters.end()) s = apply(s, it->second);
    return s;
  }
  ModelSpec spec() const { return spec_for(algorithm); }
};

inline void validate(const RunConfig& c, bool all_algorithms = false) {
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
    throw Error(ErrorKind::FractionOutOfRange, "test fraction must lie in (0, 1)");
  }
  if (all_algorithms) {
    for (auto a : kAllAlgorithms) validate(c.spec_for(a));
  } else {
    validate(c.spec());
  }
}

namespace detail {

inline const json& require_object(const json& j, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorKind::BadArgument, what + " must be an object");
  return j;
}

inline ParamAssignment read_assignment(const json& j, Algorithm a) {
  ParamAssignment out;
  ModelSpec probe;
  probe.algorithm = a;
  for (const auto& [name, value] : require_object(j, "hyperparameters." + std::string(short_name(a))).items()) {
    if (!value.is_number() && !value.is_boolean()) {
      throw Error(ErrorKind::BadArgument, "hyperparameter \"" + name + "\" must be numeric");
    }
    const double v = value.is_boolean() ? (value.get<bool>() ? 1.0 : 0.0) : value.get<double>();
    set_param(probe, name, v);
    out.emplace_back(name, v);
  }
  return out;
}

}  // namespace detail

/// Overlay a JSON config document onto `base`. Keys present in the file win
/// over command-line flags.
inline RunConfig apply_config_json(RunConfig base, const json& j) {
  detail::require_object(j, "config");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "data") base.data_path = value.get<std::string>();
      else if (key == "algo") base.algorithm = parse_algorithm(value.get<std::string>());
      else if (key == "seed") base.seed = value.get<std::uint64_t>();
      else if (key == "test_fraction") base.test_fraction = value.get<double>();
      else if (key == "threshold") base.threshold = value.get<double>();
      else if (key == "smote") base.smote = value.get<bool>();
      else if (key == "unseen_policy") {
        const auto p = value.get<std::string>();
        if (p == "error") base.unseen_policy = UnseenPolicy::Error;
        else if (p == "map_to_mode") base.unseen_policy = UnseenPolicy::MapToMode;
        else throw Error(ErrorKind::BadArgument, "unseen_policy must be error or map_to_mode");
      } else if (key == "hyperparameters") {
        for (const auto& [algo, params] : detail::require_object(value, "hyperparameters").items()) {
          const auto a = parse_algorithm(algo);
          auto& slot = base.hyperparameters[a];
          for (auto& p : detail::read_assignment(params, a)) slot.push_back(std::move(p));
        }
      } else {
        throw Error(ErrorKind::BadArgument, "unknown config key \"" + key + "\"");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadArgument, std::string("config: ") + e.what());
  }
  return base;
}

inline RunConfig apply_config_file(RunConfig base, const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadArgument, path + ": " + e.what());
  }
  return apply_config_json(std::move(base), j);
}

/// Parse a grid document: {"params": {name: [values...]}, "selection_metric":
/// "accuracy"|"f1", "k": 5}. Names are checked against `algorithm`.
inline GridSpec parse_grid(const json& j, Algorithm algorithm, std::uint64_t seed) {
  detail::require_object(j, "grid");
  GridSpec g;
  g.seed = seed;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "params") {
        ModelSpec probe;
        probe.algorithm = algorithm;
        for (const auto& [name, list] : detail::require_object(value, "params").items()) {
          if (!list.is_array()) throw Error(ErrorKind::BadArgument, "grid field \"" + name + "\" must be a list");
          auto values = list.get<std::vector<double>>();
          if (values.empty()) throw Error(ErrorKind::EmptyGrid, "grid field \"" + name + "\" has no candidates");
          set_param(probe, name, values.front());
          g.params[name] = std::move(values);
        }
      } else if (key == "selection_metric") {
        const auto m = value.get<std::string>();
        if (m == "accuracy") g.selection_metric = SelectionMetric::Accuracy;
        else if (m == "f1") g.selection_metric = SelectionMetric::F1;
        else throw Error(ErrorKind::BadArgument, "selection_metric must be accuracy or f1");
      } else if (key == "k") {
        g.k = value.get<std::size_t>();
      } else {
        throw Error(ErrorKind::BadArgument, "unknown grid field \"" + key + "\"");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadArgument, std::string("grid: ") + e.what());
  }
  if (g.params.empty()) throw Error(ErrorKind::EmptyGrid, "grid has no parameters");
  return g;
}

// --- output formatting ------------------------------------------------------

inline std::string format_percent(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", *v * 100.0);
  return buf;
}

inline std::string format_metric(const std::optional<double>& v) {
  return v ? detail::format_double(*v) : std::string("NA");
}

inline std::string format_params(const ParamAssignment& p) {
  std::string out;
  for (const auto& [name, value] : p) {
    if (!out.empty()) out += ';';
    out += name + "=" + detail::format_double(value);
  }
  return out;
}

struct ResultRow {
  std::string model_id;
  std::string params;
  std::string fold;
  EvalReport report;
};

inline std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out = "model_id,params,fold,accuracy,precision,recall,f1\n";
  for (const auto& r : rows) {
    out += r.model_id + "," + r.params + "," + r.fold + "," + format_metric(r.report.accuracy) + "," +
           format_metric(r.report.precision) + "," + format_metric(r.report.recall) + "," +
           format_metric(r.report.f1) + "\n";
  }
  return out;
}

inline std::string curves_csv(const TrainHistory& h) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < h.epochs.size(); ++e) {
    out += std::to_string(e + 1) + "," + detail::format_double(h.epochs[e].train_loss) + "," +
           detail::format_double(h.epochs[e].val_loss) + "\n";
  }
  return out;
}

/// Aligned human-readable metric table.
inline void print_table(std::ostream& os, const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::size_t w = std::string("Algorithm").size();
  for (const auto& [name, _] : rows) w = std::max(w, name.size());
  auto line = [&](const std::string& a, const std::string& b, const std::string& c, const std::string& d,
                  const std::string& e) {
    os << std::left << std::setw(static_cast<int>(w) + 2) << a << std::right << std::setw(10) << b
       << std::setw(11) << c << std::setw(10) << d << std::setw(13) << e << "\n";
  };
  line("Algorithm", "Accuracy", "Precision", "Recall", "F1(derived)");
  for (const auto& [name, r] : rows) {
    line(name, format_percent(r.accuracy), format_percent(r.precision), format_percent(r.recall),
         format_percent(r.f1));
  }
}

inline void print_confusion(std::ostream& os, const ConfusionMatrix& cm) {
  os << "confusion: tp=" << cm.tp << " fp=" << cm.fp << " fn=" << cm.fn << " tn=" << cm.tn << "\n";
}

inline std::string format_error_line(const Error& e) {
  std::string detail = e.detail();
  for (auto& ch : detail) {
    if (ch == '\n' || ch == '\r') ch = ' ';
    if (ch == '"') ch = '\'';
  }
  return "error code=" + std::string(to_string(e.code())) + " kind=" + std::string(to_string(e.kind())) +
         " detail=\"" + detail + "\"";
}

// --- commands -----------------------------------------------------------------

inline json run_config_json(const RunConfig& cfg, const ModelSpec& spec) {
  return {{"data", cfg.data_path}, {"test_fraction", cfg.test_fraction}, {"seed", cfg.seed}, {"model", to_json(spec)}};
}

inline SummaryReport cmd_summarize(const RunConfig& cfg, std::ostream& os) {
  const auto data = load_csv(cfg.data_path);
  const auto rep = summarize(data);
  os << "rows: " << rep.rows << "  positives: " << rep.positives << " (" << format_percent(rep.positive_fraction)
     << ")\n\n";
  os << std::left << std::setw(16) << "numeric" << std::right << std::setw(7) << "count" << std::setw(9) << "missing"
     << std::setw(10) << "min" << std::setw(10) << "max" << std::setw(12) << "mean" << std::setw(12) << "std" << "\n";
  for (const auto& s : rep.numeric) {
    os << std::left << std::setw(16) << s.name << std::right << std::setw(7) << s.count << std::setw(9) << s.missing
       << std::setw(10) << s.min << std::setw(10) << s.max << std::setw(12) << std::setprecision(6) << s.mean
       << std::setw(12) << s.std << "\n";
  }
  os << "\n";
  for (const auto& s : rep.categorical) {
    os << s.name << ":";
    for (const auto& [token, count] : s.histogram) os << " " << token << "=" << count;
    os << "\n";
  }
  return rep;
}

inline std::string matrix_csv(const FeatureMatrix& m) {
  std::string out;
  for (const auto& n : m.column_names) out += n + ",";
  out += std::string(kLabelColumn) + "\n";
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t c = 0; c < m.cols; ++c) out += detail::format_double(m.at(i, c)) + ",";
    out += std::to_string(m.labels[i]) + "\n";
  }
  return out;
}

/// Fit the preprocessor on the training partition and write the transformed
/// partitions plus the fitted state under `out_prefix`.
inline OutlierReport cmd_preprocess(const RunConfig& cfg, const std::string& out_prefix, std::ostream& os) {
  validate(cfg);
  const auto data = load_csv(cfg.data_path);
  const auto split = stratified_split(data, cfg.test_fraction, cfg.seed);
  const auto pre = fit(split.train, cfg.unseen_policy);
  const auto train = transform(pre, split.train);
  const auto test = transform(pre, split.test);
  const auto outliers = flag_outliers(train);
  write_file_atomic(out_prefix + ".train.csv", matrix_csv(train));
  write_file_atomic(out_prefix + ".test.csv", matrix_csv(test));
  write_file_atomic(out_prefix + ".preprocessor.json", to_json(pre).dump(2) + "\n");
  os << "train rows: " << train.rows << "  test rows: " << test.rows << "\n";
  os << "outliers (|z| > " << outliers.threshold_z << ", retained): " << outliers.count << "\n";
  for (std::size_t c = 0; c < train.cols; ++c) {
    if (outliers.per_column[c]) os << "  " << train.column_names[c] << ": " << outliers.per_column[c] << "\n";
  }
  return outliers;
}

struct TrainOutputs {
  std::string bundle_path = "model.json";
  std::optional<std::string> report_csv;
  std::optional<std::string> curves_csv;  // RNN; defaults next to the bundle
};

struct TrainOutcome {
  ModelBundle bundle;
  EvalReport report;
};

inline std::string default_curves_path(const std::string& bundle_path) {
  std::filesystem::path p(bundle_path);
  p.replace_extension(".curves.csv");
  return p.string();
}

/// load -> stratified split -> fit preprocessor on train -> transform both ->
/// SMOTE on train -> fit -> evaluate on the untouched test split -> write bundle.
inline TrainOutcome cmd_train(const RunConfig& cfg, const TrainOutputs& outputs, std::ostream& os,
                              const PipelineHooks& hooks = {}) {
  validate(cfg);
  const auto spec = cfg.spec();
  const auto data = load_csv(cfg.data_path);
  const auto split = stratified_split(data, cfg.test_fraction, cfg.seed);
  auto pipe = train_pipeline(spec, split.train, cfg.seed, hooks);
  const auto test = transform(pipe.preprocessor, split.test);
  const auto report = evaluate_model(pipe.model, test, spec.threshold, std::string(display_name(spec.algorithm)));

  ModelBundle bundle;
  bundle.created_at = utc_timestamp();
  bundle.algorithm = spec.algorithm;
  bundle.preprocessor = std::move(pipe.preprocessor);
  bundle.model = std::move(pipe.model);
  bundle.train_config = run_config_json(cfg, spec);
  bundle.metrics_at_save = report;
  bundle.history = pipe.history;
  save_bundle(bundle, outputs.bundle_path);

  print_table(os, {{report.model_id, report}});
  print_confusion(os, report.matrix);
  os << "bundle: " << outputs.bundle_path << "\n";
  if (outputs.report_csv) {
    write_file_atomic(*outputs.report_csv, results_csv({{report.model_id, "", "test", report}}));
  }
  if (bundle.history) {
    const auto path = outputs.curves_csv.value_or(default_curves_path(outputs.bundle_path));
    write_file_atomic(path, curves_csv(*bundle.history));
    os << "curves: " << path << " (best epoch " << bundle.history->best_epoch << " of "
       << bundle.history->stopped_epoch << ")\n";
  }
  return {std::move(bundle), report};
}

/// Score a saved bundle on a labelled CSV.
inline EvalReport cmd_evaluate(const std::string& bundle_path, const std::string& data_path, std::ostream& os,
                               const std::optional<std::string>& report_csv = std::nullopt) {
  const auto bundle = load_bundle(bundle_path);
  const auto data = load_csv(data_path);
  const auto m = transform(bundle.preprocessor, data);
  const auto report = evaluate_model(bundle.model, m, bundle.threshold(), std::string(display_name(bundle.algorithm)));
  print_table(os, {{report.model_id, report}});
  print_confusion(os, report.matrix);
  if (report_csv) write_file_atomic(*report_csv, results_csv({{report.model_id, "", "all", report}}));
  return report;
}

/// Per-row probabilities and labels for an unlabelled CSV.
inline std::string cmd_predict(const std::string& bundle_path, const std::string& input_path,
                               const std::optional<std::string>& out_path, std::ostream& os) {
  const auto bundle = load_bundle(bundle_path);
  Dataset data;
  try {
    data = load_csv(input_path, LabelColumn::Absent);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::MissingColumn || e.kind() == ErrorKind::UnknownColumn ||
        e.kind() == ErrorKind::DuplicateHeader || e.kind() == ErrorKind::RaggedRow) {
      throw Error(ErrorKind::SchemaMismatch, e.what());
    }
    throw;
  }
  const auto m = transform(bundle.preprocessor, data);
  const double threshold = bundle.threshold();
  std::string out = "row_index,probability,label\n";
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double p = predict_proba(bundle.model, m.row(i));
    out += std::to_string(i) + "," + detail::format_double(p) + "," + (p >= threshold ? "1" : "0") + "\n";
  }
  if (out_path) {
    write_file_atomic(*out_path, out);
  } else {
    os << out;
  }
  return out;
}

/// Grid search by cross-validation on the training partition only.
inline GridResult cmd_gridsearch(const RunConfig& cfg, const GridSpec& grid, const std::optional<std::string>& results_path,
                                 std::ostream& os, const PipelineHooks& hooks = {}) {
  validate(cfg);
  const auto data = load_csv(cfg.data_path);
  const auto split = stratified_split(data, cfg.test_fraction, cfg.seed);
  const auto result = grid_search(grid, cfg.spec(), split.train, hooks);

  std::vector<ResultRow> rows;
  const std::string id(display_name(cfg.algorithm));
  for (const auto& c : result.candidates) {
    for (std::size_t f = 0; f < c.cv.folds.size(); ++f) {
      rows.push_back({id, format_params(c.params), std::to_string(f), c.cv.folds[f]});
    }
  }
  if (results_path) write_file_atomic(*results_path, results_csv(rows));

  os << "candidates: " << result.candidates.size() << "  folds: " << grid.k << "\n";
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const auto& c = result.candidates[i];
    os << (i == result.best ? "* " : "  ") << std::left << std::setw(48) << format_params(c.params) << std::right
       << " accuracy " << format_percent(c.cv.summary.accuracy.mean) << " f1 " << format_percent(c.cv.summary.f1.mean)
       << "\n";
  }
  os << "best: " << format_params(result.best_candidate().params) << "\n";
  return result;
}

/// Train all four algorithms on one split and one fitted preprocessor.
inline std::vector<EvalReport> cmd_compare(const RunConfig& cfg, const std::optional<std::string>& csv_path,
                                           std::ostream& os, const PipelineHooks& hooks = {}) {
  validate(cfg, true);
  const auto data = load_csv(cfg.data_path);
  const auto split = stratified_split(data, cfg.test_fraction, cfg.seed);
  if (hooks.on_preprocessor_fit) hooks.on_preprocessor_fit(split.train);
  const auto pre = fit(split.train, cfg.unseen_policy);
  const auto train = transform(pre, split.train);
  const auto test = transform(pre, split.test);

  std::vector<EvalReport> reports;
  std::vector<std::pair<std::string, EvalReport>> table;
  std::vector<ResultRow> rows;
  for (auto a : kAllAlgorithms) {
    const auto spec = cfg.spec_for(a);
    const auto trained = fit_model(spec, train, cfg.seed, hooks);
    auto report = evaluate_model(trained.model, test, spec.threshold, std::string(display_name(a)));
    const auto it = cfg.hyperparameters.find(a);
    rows.push_back({report.model_id, it == cfg.hyperparameters.end() ? "" : format_params(it->second), "test", report});
    table.emplace_back(report.model_id, report);
    reports.push_back(std::move(report));
  }
  print_table(os, table);
  if (csv_path) write_file_atomic(*csv_path, results_csv(rows));
  return reports;
}

/// Training/validation loss per epoch of the RNN: read from an RNN bundle, or
/// produced by training on the canonical split.
inline TrainHistory cmd_curves(const RunConfig& cfg, const std::optional<std::string>& bundle_path,
                               const std::string& out_path, std::ostream& os) {
  TrainHistory history;
  if (bundle_path) {
    const auto bundle = load_bundle(*bundle_path);
    if (!bundle.history) throw Error(ErrorKind::BadArgument, *bundle_path + " carries no training history (not an rnn bundle)");
    history = *bundle.history;
  } else {
    RunConfig rnn_cfg = cfg;
    rnn_cfg.algorithm = Algorithm::RNN;
    validate(rnn_cfg);
    const auto data = load_csv(rnn_cfg.data_path);
    const auto split = stratified_split(data, rnn_cfg.test_fraction, rnn_cfg.seed);
    const auto pipe = train_pipeline(rnn_cfg.spec(), split.train, rnn_cfg.seed);
    history = *pipe.history;
  }
  write_file_atomic(out_path, curves_csv(history));
  os << "epochs: " << history.stopped_epoch << "  best: " << history.best_epoch << "  curves: " << out_path << "\n";
  return history;
}

}  // namespace heartml
