#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lrpeeg/types.hpp"

namespace lrpeeg::slda {

struct ShrinkageResult {
  Matrix covariance;
  double gamma = 0.0;
};

/// Analytic shrinkage towards nu*I (nu = trace(S)/p).
///
/// gamma = sum_ij Var(s_ij) / (sum_{i!=j} s_ij^2 + sum_i (s_ii - nu)^2), clipped
/// to [0, 1], where Var(s_ij) is n/(n-1)^2 times the unbiased sample variance
/// of the centered cross products x_ki x_kj over samples k.
inline ShrinkageResult shrinkage_covariance(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n < 2) fail(ErrorKind::insufficient_data, "shrinkage covariance needs n >= 2 samples, got " + std::to_string(n));
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const double nd = static_cast<double>(n);
  const Matrix s = (xc.transpose() * xc) / (nd - 1.0);
  const double nu = s.trace() / static_cast<double>(p);

  // Sum over k of (w_kij - mean_ij)^2 = sum_k w_kij^2 - n mean_ij^2, with
  // mean_ij = (n-1)/n s_ij and sum_k w_kij^2 = sum_k x_ki^2 x_kj^2.
  const Matrix sq = xc.array().square().matrix();
  const Matrix sum_w2 = sq.transpose() * sq;
  const Matrix mean_w = s * ((nd - 1.0) / nd);
  const Matrix ss = sum_w2 - nd * mean_w.cwiseProduct(mean_w);
  const double var_sum = (nd / ((nd - 1.0) * (nd - 1.0))) * (ss.sum() / (nd - 1.0));

  Matrix target_diff = s;
  target_diff.diagonal().array() -= nu;
  const double denom = target_diff.squaredNorm();

  double gamma = 0.0;
  if (denom > 0.0) gamma = std::clamp(var_sum / denom, 0.0, 1.0);
  else gamma = 0.0;  // S already equals nu*I.

  ShrinkageResult out;
  out.gamma = gamma;
  out.covariance = (1.0 - gamma) * s;
  out.covariance.diagonal().array() += gamma * nu;
  return out;
}

struct LdaModel {
  Vector weights;
  double bias = 0.0;
  double shrinkage_gamma = 0.0;
};

inline LdaModel lda_train(const Matrix& features, const std::vector<int>& labels) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) fail(ErrorKind::shape, "label count does not match feature rows");
  Vector mean[2] = {Vector::Zero(p), Vector::Zero(p)};
  std::size_t count[2] = {0, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1) fail(ErrorKind::validation, "labels must be 0 or 1");
    mean[y] += features.row(i).transpose();
    ++count[y];
  }
  if (count[0] == 0 || count[1] == 0) fail(ErrorKind::insufficient_data, "both classes must be present");
  for (int k = 0; k < 2; ++k) mean[k] /= static_cast<double>(count[k]);

  // Pooled covariance on class-centered samples, shrunk once.
  Matrix centered(n, p);
  for (Eigen::Index i = 0; i < n; ++i) centered.row(i) = features.row(i) - mean[labels[static_cast<std::size_t>(i)]].transpose();
  const auto shrunk = shrinkage_covariance(centered);
  if (!(shrunk.covariance.trace() > 0.0)) fail(ErrorKind::degenerate_data, "pooled feature covariance is zero");

  LdaModel model;
  model.shrinkage_gamma = shrunk.gamma;
  Eigen::LDLT<Matrix> ldlt(shrunk.covariance);
  if (ldlt.info() != Eigen::Success) fail(ErrorKind::numerical, "shrinkage covariance is singular");
  model.weights = ldlt.solve(mean[1] - mean[0]);
  model.bias = -0.5 * model.weights.dot(mean[0] + mean[1]);
  if (!model.weights.allFinite()) fail(ErrorKind::degenerate_data, "LDA weights are not finite");
  return model;
}

inline Vector lda_scores(const LdaModel& model, const Matrix& features) {
  if (features.cols() != model.weights.size())
    fail(ErrorKind::shape, "model expects " + std::to_string(model.weights.size()) + " features, got " +
                               std::to_string(features.cols()));
  return (features * model.weights).array() + model.bias;
}

/// Class 1 iff score > 0; an exact 0 goes to class 0.
inline std::vector<int> lda_predict(const LdaModel& model, const Matrix& features) {
  const Vector s = lda_scores(model, features);
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s(i) > 0.0 ? 1 : 0;
  return out;
}

inline Json to_json(const LdaModel& m) {
  return Json{{"weights", std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size())},
              {"bias", m.bias},
              {"gamma", m.shrinkage_gamma}};
}

inline LdaModel lda_from_json(const Json& j) {
  try {
    LdaModel m;
    const auto w = j.at("weights").get<std::vector<double>>();
    m.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.bias = j.at("bias").get<double>();
    m.shrinkage_gamma = j.at("gamma").get<double>();
    return m;
  } catch (const Json::exception& e) {
    fail(ErrorKind::format, std::string("LDA model: ") + e.what());
  }
}

}  // namespace lrpeeg::slda
