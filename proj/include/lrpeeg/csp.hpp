#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lrpeeg/types.hpp"

namespace lrpeeg::csp {

struct SpatialFilterBank {
  Matrix filters;   // [n_channels x n_selected]
  Matrix patterns;  // [n_channels x n_selected]
  Vector eigenvalues;
};

struct CovarianceOptions {
  bool trace_normalize = true;
  double ridge_scale = 1e-10;  // ridge = ridge_scale * trace / n_channels
};

struct ClassCovariances {
  Matrix class0;
  Matrix class1;
};

/// Trial covariance X^T X, optionally scaled to unit trace, averaged per class.
inline ClassCovariances class_covariances(const EpochSet& ep, const CovarianceOptions& opt = {}) {
  const Eigen::Index n_ch = ep.n_channels();
  ClassCovariances out{Matrix::Zero(n_ch, n_ch), Matrix::Zero(n_ch, n_ch)};
  std::size_t counts[2] = {0, 0};
  for (std::size_t t = 0; t < ep.n_trials(); ++t) {
    const Matrix& x = ep.trials[t];
    Matrix c = x.transpose() * x;
    if (opt.trace_normalize) {
      const double tr = c.trace();
      if (!(tr > 0.0)) fail(ErrorKind::degenerate_data, "trial " + std::to_string(t) + " has zero power");
      c /= tr;
    }
    (ep.labels[t] == 0 ? out.class0 : out.class1) += c;
    ++counts[ep.labels[t]];
  }
  for (int k = 0; k < 2; ++k)
    if (counts[k] < 2)
      fail(ErrorKind::insufficient_data, "class " + std::to_string(k) + " has " + std::to_string(counts[k]) +
                                             " trials, need at least 2");
  out.class0 /= static_cast<double>(counts[0]);
  out.class1 /= static_cast<double>(counts[1]);
  out.class0 = 0.5 * (out.class0 + out.class0.transpose());
  out.class1 = 0.5 * (out.class1 + out.class1.transpose());
  return out;
}

/// Full generalized decomposition class0 w = lambda (class0 + class1) w,
/// columns sorted by descending lambda and normalized so W^T C W = I.
struct FullDecomposition {
  Matrix filters;
  Vector eigenvalues;
};

inline FullDecomposition decompose_full(const Matrix& class0, const Matrix& class1, double ridge_scale = 1e-10) {
  const Eigen::Index n = class0.rows();
  if (class0.cols() != n || class1.rows() != n || class1.cols() != n)
    fail(ErrorKind::shape, "class covariances must be square and of equal size");
  // The ridge is a fallback for rank-deficient composites (condition > 1e12);
  // a well-conditioned composite is used as is, keeping W'(S0+S1)W = I exact.
  Matrix composite = class0 + class1;
  const Eigen::SelfAdjointEigenSolver<Matrix> spectrum(composite, Eigen::EigenvaluesOnly);
  const double lo0 = spectrum.eigenvalues().minCoeff();
  const double hi0 = spectrum.eigenvalues().maxCoeff();
  if (!(lo0 > 0.0) || hi0 / lo0 > 1e12)
    composite.diagonal().array() += ridge_scale * composite.trace() / static_cast<double>(n);

  Eigen::LLT<Matrix> llt(composite);
  if (llt.info() != Eigen::Success)
    fail(ErrorKind::numerical, "composite covariance is not positive definite (eigenvalue range [" + std::to_string(lo0) +
                                   ", " + std::to_string(hi0) + "], condition estimate " +
                                   std::to_string(lo0 > 0 ? hi0 / lo0 : INFINITY) + ")");
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(class0, composite, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) fail(ErrorKind::numerical, "generalized eigendecomposition failed");

  // Eigen returns ascending order.
  FullDecomposition out;
  out.filters = ges.eigenvectors().rowwise().reverse();
  out.eigenvalues = ges.eigenvalues().reverse();
  return out;
}

/// Selection order [largest, smallest, 2nd largest, 2nd smallest, ...].
inline std::vector<Eigen::Index> selection_order(Eigen::Index n, int n_pairs) {
  std::vector<Eigen::Index> idx;
  for (int i = 0; i < n_pairs; ++i) {
    idx.push_back(i);
    idx.push_back(n - 1 - i);
  }
  return idx;
}

inline SpatialFilterBank csp_decompose(const Matrix& class0, const Matrix& class1, int n_pairs, double ridge_scale = 1e-10) {
  const Eigen::Index n = class0.rows();
  if (n_pairs < 1 || 2 * n_pairs > n)
    fail(ErrorKind::shape, std::to_string(n_pairs) + " filter pairs requested for " + std::to_string(n) + " channels");
  const auto full = decompose_full(class0, class1, ridge_scale);
  const auto order = selection_order(n, n_pairs);

  SpatialFilterBank bank;
  bank.filters.resize(n, static_cast<Eigen::Index>(order.size()));
  bank.eigenvalues.resize(static_cast<Eigen::Index>(order.size()));
  for (std::size_t j = 0; j < order.size(); ++j) {
    bank.filters.col(static_cast<Eigen::Index>(j)) = full.filters.col(order[j]);
    bank.eigenvalues(static_cast<Eigen::Index>(j)) = full.eigenvalues(order[j]);
  }
  // A = C W (W^T C W)^-1 on the unridged composite.
  const Matrix composite = class0 + class1;
  const Matrix cw = composite * bank.filters;
  bank.patterns = cw * (bank.filters.transpose() * cw).inverse();

  // Sign: largest-magnitude pattern coefficient positive.
  for (Eigen::Index j = 0; j < bank.filters.cols(); ++j) {
    Eigen::Index arg = 0;
    bank.patterns.col(j).cwiseAbs().maxCoeff(&arg);
    if (bank.patterns(arg, j) < 0.0) {
      bank.patterns.col(j) *= -1.0;
      bank.filters.col(j) *= -1.0;
    }
  }
  return bank;
}

inline constexpr double kVarianceFloor = 1e-12;

struct FeatureResult {
  Matrix features;  // [n_trials x n_selected]
  /// (trial, filter) pairs whose projection variance fell below the floor.
  std::vector<std::pair<std::size_t, Eigen::Index>> clamped;
};

/// log(var(X w_j)) per trial and filter, variance with 1/(n-1).
inline FeatureResult csp_features(const EpochSet& ep, const SpatialFilterBank& bank) {
  if (bank.filters.rows() != ep.n_channels())
    fail(ErrorKind::shape, "filter bank expects " + std::to_string(bank.filters.rows()) + " channels, epochs have " +
                               std::to_string(ep.n_channels()));
  if (ep.n_timepoints() < 2) fail(ErrorKind::shape, "need at least two timepoints for a variance");
  FeatureResult out;
  out.features.resize(static_cast<Eigen::Index>(ep.n_trials()), bank.filters.cols());
  for (std::size_t t = 0; t < ep.n_trials(); ++t) {
    const Matrix proj = ep.trials[t] * bank.filters;
    for (Eigen::Index j = 0; j < proj.cols(); ++j) {
      const auto col = proj.col(j).array();
      double var = (col - col.mean()).square().sum() / static_cast<double>(proj.rows() - 1);
      if (!(var > kVarianceFloor)) {
        var = kVarianceFloor;
        out.clamped.emplace_back(t, j);
      }
      out.features(static_cast<Eigen::Index>(t), j) = std::log(var);
    }
  }
  return out;
}

inline Json to_json(const SpatialFilterBank& bank) {
  auto dump = [](const Matrix& m) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
    return v;
  };
  Json j;
  j["n_channels"] = bank.filters.rows();
  j["n_selected"] = bank.filters.cols();
  j["filters"] = dump(bank.filters);
  j["patterns"] = dump(bank.patterns);
  j["eigenvalues"] = std::vector<double>(bank.eigenvalues.data(), bank.eigenvalues.data() + bank.eigenvalues.size());
  return j;
}

inline SpatialFilterBank bank_from_json(const Json& j) {
  try {
    const auto rows = j.at("n_channels").get<Eigen::Index>();
    const auto cols = j.at("n_selected").get<Eigen::Index>();
    auto load = [&](const char* key) {
      const auto v = j.at(key).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(v.size()) != rows * cols) fail(ErrorKind::format, std::string("filter bank field '") + key + "' has wrong length");
      return Matrix(Eigen::Map<const RowMatrix>(v.data(), rows, cols));
    };
    SpatialFilterBank bank{load("filters"), load("patterns"), Vector()};
    const auto ev = j.at("eigenvalues").get<std::vector<double>>();
    bank.eigenvalues = Eigen::Map<const Vector>(ev.data(), static_cast<Eigen::Index>(ev.size()));
    return bank;
  } catch (const Json::exception& e) {
    fail(ErrorKind::format, std::string("filter bank: ") + e.what());
  }
}

}  // namespace lrpeeg::csp
