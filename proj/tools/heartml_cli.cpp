#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "heartml/heartml.hpp"

namespace {

using namespace heartml;

struct Flags {
  std::string data;
  std::string algo = "xgb";
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  double threshold = kDefaultThreshold;
  bool no_smote = false;
  std::string out;
  std::string config;
  std::vector<std::string> params;
  std::string unseen = "error";
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--data", f.data, "input CSV");
  cmd->add_option("--algo", f.algo, "nb, gb, xgb or rnn");
  cmd->add_option("--seed", f.seed, "seed for every random step");
  cmd->add_option("--test-fraction", f.test_fraction, "held-out share, stratified");
  cmd->add_option("--threshold", f.threshold, "probability cut-off for label 1");
  cmd->add_flag("--no-smote", f.no_smote, "skip SMOTE on the training partition");
  cmd->add_option("--out", f.out, "output path");
  cmd->add_option("--config", f.config, "JSON config; its keys override flags");
  cmd->add_option("--param", f.params, "hyperparameter for --algo as name=value (repeatable)");
  cmd->add_option("--unseen", f.unseen, "unseen category policy: error or map_to_mode");
}

RunConfig to_config(const Flags& f) {
  RunConfig c;
  c.data_path = f.data;
  c.algorithm = parse_algorithm(f.algo);
  c.seed = f.seed;
  c.test_fraction = f.test_fraction;
  c.threshold = f.threshold;
  c.smote = !f.no_smote;
  if (f.unseen == "error") c.unseen_policy = UnseenPolicy::Error;
  else if (f.unseen == "map_to_mode") c.unseen_policy = UnseenPolicy::MapToMode;
  else throw Error(ErrorKind::BadArgument, "--unseen must be error or map_to_mode");
  for (const auto& p : f.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::BadArgument, "--param expects name=value, got " + p);
    const auto v = detail::parse_double(std::string_view(p).substr(eq + 1));
    if (!v) throw Error(ErrorKind::BadArgument, "--param value is not a number: " + p);
    ModelSpec probe;
    probe.algorithm = c.algorithm;
    set_param(probe, p.substr(0, eq), *v);
    c.hyperparameters[c.algorithm].emplace_back(p.substr(0, eq), *v);
  }
  if (!f.config.empty()) c = apply_config_file(std::move(c), f.config);
  if (c.data_path.empty()) throw Error(ErrorKind::BadArgument, "--data is required");
  return c;
}

std::optional<std::string> opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heartml: tabular heart-disease risk classifiers"};
  app.require_subcommand(1);

  Flags f;
  std::string bundle;
  std::string grid;
  std::string report_csv;
  std::string curves;
  std::size_t folds = 0;

  auto* summarize = app.add_subcommand("summarize", "per-column statistics and label balance");
  auto* preprocess = app.add_subcommand("preprocess", "fit preprocessing on the train split, write matrices");
  auto* train = app.add_subcommand("train", "train one model, evaluate on the held-out split, save a bundle");
  auto* evaluate = app.add_subcommand("evaluate", "score a saved bundle on a labelled CSV");
  auto* predict = app.add_subcommand("predict", "per-row probabilities from a saved bundle");
  auto* gridsearch = app.add_subcommand("gridsearch", "cross-validated grid search on the train split");
  auto* compare = app.add_subcommand("compare", "train all four algorithms on one split");
  auto* curves_cmd = app.add_subcommand("curves", "RNN train/validation loss per epoch");
  for (auto* c : {summarize, preprocess, train, evaluate, predict, gridsearch, compare, curves_cmd}) add_common(c, f);
  for (auto* c : {evaluate, predict, curves_cmd}) c->add_option("--bundle", bundle, "saved model bundle");
  for (auto* c : {train, evaluate, compare}) c->add_option("--report-csv", report_csv, "also write metrics as CSV");
  train->add_option("--curves", curves, "RNN curves CSV (default: next to the bundle)");
  gridsearch->add_option("--grid", grid, "grid JSON file")->required();
  gridsearch->add_option("--folds", folds, "override k from the grid file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << format_error_line(Error(ErrorKind::BadArgument, e.what())) << "\n";
    return exit_status(ErrorCode::Config);
  }

  try {
    auto& os = std::cout;
    if (*evaluate || *predict) {
      if (bundle.empty()) throw Error(ErrorKind::BadArgument, "--bundle is required");
      if (f.data.empty()) throw Error(ErrorKind::BadArgument, "--data is required");
      if (*evaluate) cmd_evaluate(bundle, f.data, os, opt(report_csv));
      else cmd_predict(bundle, f.data, opt(f.out), os);
      return 0;
    }
    if (*curves_cmd && !bundle.empty()) {
      cmd_curves(RunConfig{}, bundle, f.out.empty() ? "curves.csv" : f.out, os);
      return 0;
    }
    const RunConfig cfg = to_config(f);
    if (*summarize) {
      cmd_summarize(cfg, os);
    } else if (*preprocess) {
      cmd_preprocess(cfg, f.out.empty() ? "preprocessed" : f.out, os);
    } else if (*train) {
      TrainOutputs outputs;
      if (!f.out.empty()) outputs.bundle_path = f.out;
      outputs.report_csv = opt(report_csv);
      outputs.curves_csv = opt(curves);
      cmd_train(cfg, outputs, os);
    } else if (*gridsearch) {
      json doc;
      try {
        doc = json::parse(read_file(grid));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::BadArgument, grid + ": " + e.what());
      }
      auto spec = parse_grid(doc, cfg.algorithm, cfg.seed);
      if (folds) spec.k = folds;
      cmd_gridsearch(cfg, spec, opt(f.out), os);
    } else if (*compare) {
      cmd_compare(cfg, opt(f.out.empty() ? report_csv : f.out), os);
    } else if (*curves_cmd) {
      cmd_curves(cfg, std::nullopt, f.out.empty() ? "curves.csv" : f.out, os);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << format_error_line(e) << "\n";
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error code=E_INTERNAL kind=Unexpected detail=\"" << e.what() << "\"\n";
    return 1;
  }
}
