#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lrpeeg/csp.hpp"
#include "lrpeeg/mlp.hpp"
#include "lrpeeg/rng.hpp"
#include "lrpeeg/slda.hpp"
#include "lrpeeg/types.hpp"

namespace lrpeeg::eval {

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) fail(ErrorKind::shape, "prediction/label count mismatch");
  if (truth.empty()) fail(ErrorKind::insufficient_data, "accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline std::vector<Fold> leave_one_out(std::size_t n) {
  if (n < 2) fail(ErrorKind::insufficient_data, "leave-one-out needs at least 2 trials");
  std::vector<Fold> folds(n);
  for (std::size_t i = 0; i < n; ++i) {
    folds[i].test = {i};
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) folds[i].train.push_back(j);
  }
  return folds;
}

/// Explicit test indices; everything else trains.
inline Fold holdout(std::size_t n, std::vector<std::size_t> test) {
  std::vector<char> is_test(n, 0);
  for (auto i : test) {
    if (i >= n) fail(ErrorKind::index, "test index " + std::to_string(i) + " out of range");
    is_test[i] = 1;
  }
  Fold f;
  for (std::size_t i = 0; i < n; ++i) (is_test[i] ? f.test : f.train).push_back(i);
  return f;
}

/// Seeded random split with round(n * test_fraction) test trials.
inline Fold random_holdout(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail(ErrorKind::spec, "test_fraction must lie in (0, 1)");
  Rng rng(seed);
  auto perm = rng.permutation(n);
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::sort(test.begin(), test.end());
  return holdout(n, std::move(test));
}

struct CspLdaModel {
  csp::SpatialFilterBank bank;
  slda::LdaModel lda;
};

struct CspLdaOptions {
  int n_pairs = 3;
  csp::CovarianceOptions covariance{};
};

inline CspLdaModel train_csp_lda(const EpochSet& ep, const CspLdaOptions& opt = {}) {
  const auto cov = csp::class_covariances(ep, opt.covariance);
  CspLdaModel m;
  m.bank = csp::csp_decompose(cov.class0, cov.class1, opt.n_pairs, opt.covariance.ridge_scale);
  const auto feats = csp::csp_features(ep, m.bank);
  m.lda = slda::lda_train(feats.features, ep.labels);
  return m;
}

struct Scored {
  std::vector<int> labels;
  std::vector<double> scores;
};

inline Scored predict_csp_lda(const CspLdaModel& m, const EpochSet& ep) {
  const auto feats = csp::csp_features(ep, m.bank);
  const Vector s = slda::lda_scores(m.lda, feats.features);
  Scored out;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    out.scores.push_back(s(i));
    out.labels.push_back(s(i) > 0.0 ? 1 : 0);
  }
  return out;
}

inline Json to_json(const CspLdaModel& m) {
  return Json{{"format", "lrpeeg-csp-lda"}, {"csp", csp::to_json(m.bank)}, {"lda", slda::to_json(m.lda)}};
}

inline CspLdaModel csp_lda_from_json(const Json& j) {
  if (j.value("format", "") != "lrpeeg-csp-lda") fail(ErrorKind::format, "not a CSP-LDA model file");
  return {csp::bank_from_json(j.at("csp")), slda::lda_from_json(j.at("lda"))};
}

struct FoldOutcome {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<int> predictions;
  std::vector<int> truth;
  std::vector<double> scores;

  std::size_t correct() const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) k += predictions[i] == truth[i];
    return k;
  }
};

inline Json to_json(const FoldOutcome& f) {
  return Json{{"train_size", f.train.size()}, {"test_size", f.test.size()}, {"test_indices", f.test},
              {"labels", f.truth},           {"predictions", f.predictions}, {"scores", f.scores},
              {"correct", f.correct()}};
}

/// Pooled accuracy over the test trials of all folds.
inline double pooled_accuracy(const std::vector<FoldOutcome>& folds) {
  std::size_t hits = 0, total = 0;
  for (const auto& f : folds) {
    hits += f.correct();
    total += f.truth.size();
  }
  if (total == 0) fail(ErrorKind::insufficient_data, "no test trials");
  return static_cast<double>(hits) / static_cast<double>(total);
}

inline FoldOutcome run_csp_lda_fold(const EpochSet& ep, const Fold& fold, const CspLdaOptions& opt) {
  const auto train = subset(ep, fold.train);
  const auto test = subset(ep, fold.test);
  const auto model = train_csp_lda(train, opt);
  const auto pred = predict_csp_lda(model, test);
  return {fold.train, fold.test, pred.labels, test.labels, pred.scores};
}

struct DnnOptions {
  mlp::TrainConfig train{};
  Eigen::Index n_hidden = mlp::kDefaultHidden;
};

/// Network initialized and trained from options.train.seed.
inline mlp::MlpModel train_dnn(const EpochSet& train, const DnnOptions& opt) {
  auto model = mlp::init_model(train.n_features(), opt.train.seed, opt.n_hidden);
  return mlp::train(std::move(model), train, opt.train);
}

inline FoldOutcome run_dnn_fold(const EpochSet& ep, const Fold& fold, const DnnOptions& opt, mlp::MlpModel* trained = nullptr) {
  const auto train = subset(ep, fold.train);
  const auto test = subset(ep, fold.test);
  auto model = train_dnn(train, opt);
  const auto pred = mlp::predict(model, test);
  if (trained) *trained = std::move(model);
  return {fold.train, fold.test, pred.labels, test.labels, pred.scores};
}

}  // namespace lrpeeg::eval
