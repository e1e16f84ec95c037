// Library walk-through: split, preprocess, balance, fit two models and score
// them on the held-out rows.

#include <iostream>

#include "heartml/heartml.hpp"

int main() {
  using namespace heartml;

  const Dataset data = synth_generate(400, 0.4, 7);
  const SplitResult split = stratified_split(data, 0.2, 42);

  // Everything is learned from the training rows only.
  const FittedPreprocessor pre = fit(split.train);
  const FeatureMatrix train = transform(pre, split.train);
  const FeatureMatrix test = transform(pre, split.test);
  const FeatureMatrix balanced = balance(train, 5, 42);
  std::cout << "train rows " << train.rows << " -> " << balanced.rows << " after SMOTE, test rows " << test.rows
            << "\n";

  const GaussianNBModel nb = fit_nb(balanced);
  BoostConfig cfg;
  cfg.n_rounds = 100;
  const BoostedEnsemble xgb = fit_boosted(balanced, cfg);

  print_table(std::cout, {{"NaiveBayes", evaluate_model(nb, test, 0.5, "NaiveBayes")},
                          {"XGBoost", evaluate_model(xgb, test, 0.5, "XGBoost")}});

  const auto first = test.row(0);
  std::cout << "row 0: P(disease) nb=" << predict_proba(nb, first) << " xgb=" << predict_proba(xgb, first)
            << " label=" << test.labels[0] << "\n";
  return 0;
}
