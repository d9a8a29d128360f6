#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lrpeeg/error.hpp"

namespace lrpeeg {

using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Json = nlohmann::json;

struct Marker {
  std::int64_t sample = 0;
  int label = 0;

  friend bool operator==(const Marker&, const Marker&) = default;
};

/// Continuous multichannel signal. samples is [n_samples x n_channels].
struct Recording {
  Matrix samples;
  double fs = 0.0;
  std::vector<std::string> channel_names;
  std::vector<Marker> markers;
  Json meta = Json::object();

  Eigen::Index n_samples() const { return samples.rows(); }
  Eigen::Index n_channels() const { return samples.cols(); }
};

/// Trials x time x channels, one [n_timepoints x n_channels] matrix per trial.
/// Labels are normalized to {0,1}; the original class values, when known,
/// live in class_values (class_values[k] is the raw label of class k).
struct EpochSet {
  std::vector<Matrix> trials;
  std::vector<int> labels;
  std::vector<double> time_axis_ms;
  double fs = 0.0;
  std::vector<std::string> channel_names;
  std::vector<int> class_values;
  Json meta = Json::object();

  std::size_t n_trials() const { return trials.size(); }
  Eigen::Index n_timepoints() const { return static_cast<Eigen::Index>(time_axis_ms.size()); }
  Eigen::Index n_channels() const { return static_cast<Eigen::Index>(channel_names.size()); }
  Eigen::Index n_features() const { return n_timepoints() * n_channels(); }
};

/// Head-centric 2D electrode positions; the unit circle is the head outline.
struct Montage {
  std::vector<std::string> channel_names;
  std::vector<std::array<double, 2>> positions;
};

/// Relevance of every (timepoint, channel) cell for one trial's decision.
struct RelevanceMap {
  Matrix values;
  std::size_t trial_index = 0;
  int decoded_class = 0;
  double classifier_score = 0.0;
  int target_class = 0;
};

namespace detail {

inline void check_channel_names(const std::vector<std::string>& names) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) fail(ErrorKind::validation, "empty channel name");
    if (!seen.insert(n).second) fail(ErrorKind::validation, "duplicate channel name '" + n + "'");
  }
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace detail

inline void validate(const Recording& rec) {
  if (!(rec.fs > 0.0) || !std::isfinite(rec.fs)) fail(ErrorKind::validation, "fs must be positive");
  if (static_cast<std::size_t>(rec.n_channels()) != rec.channel_names.size())
    fail(ErrorKind::validation, "channel count " + std::to_string(rec.n_channels()) +
                                    " does not match " + std::to_string(rec.channel_names.size()) +
                                    " channel names");
  detail::check_channel_names(rec.channel_names);
  for (std::size_t i = 0; i < rec.markers.size(); ++i) {
    const auto s = rec.markers[i].sample;
    if (s < 0 || s >= rec.n_samples())
      fail(ErrorKind::validation, "marker " + std::to_string(i) + " at sample " + std::to_string(s) +
                                      " outside [0, " + std::to_string(rec.n_samples()) + ")");
  }
  if (!detail::all_finite(rec.samples)) fail(ErrorKind::validation, "non-finite sample value");
}

inline void validate(const EpochSet& ep) {
  if (!(ep.fs > 0.0) || !std::isfinite(ep.fs)) fail(ErrorKind::validation, "fs must be positive");
  if (ep.labels.size() != ep.trials.size())
    fail(ErrorKind::validation, "label count does not match trial count");
  detail::check_channel_names(ep.channel_names);
  const double step = 1000.0 / ep.fs;
  for (std::size_t i = 1; i < ep.time_axis_ms.size(); ++i) {
    const double d = ep.time_axis_ms[i] - ep.time_axis_ms[i - 1];
    if (!(d > 0.0) || std::abs(d - step) > 1e-6 * std::max(1.0, step))
      fail(ErrorKind::validation, "time axis must increase uniformly by 1000/fs ms");
  }
  for (std::size_t t = 0; t < ep.trials.size(); ++t) {
    const auto& m = ep.trials[t];
    if (m.rows() != ep.n_timepoints() || m.cols() != ep.n_channels())
      fail(ErrorKind::validation, "trial " + std::to_string(t) + " has shape " +
                                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    if (!detail::all_finite(m)) fail(ErrorKind::validation, "non-finite value in trial " + std::to_string(t));
  }
  for (int l : ep.labels)
    if (l != 0 && l != 1) fail(ErrorKind::validation, "labels must be 0 or 1");
}

inline void validate(const Montage& montage) {
  if (montage.positions.size() != montage.channel_names.size())
    fail(ErrorKind::validation, "montage needs one position per channel");
  detail::check_channel_names(montage.channel_names);
  for (std::size_t i = 0; i < montage.positions.size(); ++i) {
    const auto [x, y] = montage.positions[i];
    if (!(std::hypot(x, y) <= 1.2))
      fail(ErrorKind::validation, "electrode '" + montage.channel_names[i] + "' lies outside radius 1.2");
  }
}

/// Flattens one trial time-major: index = t * n_channels + c.
inline Vector vectorize_epoch(const EpochSet& ep, std::size_t trial) {
  if (trial >= ep.n_trials())
    fail(ErrorKind::index, "trial " + std::to_string(trial) + " out of range [0, " +
                               std::to_string(ep.n_trials()) + ")");
  const RowMatrix rm = ep.trials[trial];
  return Eigen::Map<const Vector>(rm.data(), rm.size());
}

inline Matrix unvectorize(const Vector& v, Eigen::Index n_timepoints, Eigen::Index n_channels) {
  if (v.size() != n_timepoints * n_channels)
    fail(ErrorKind::shape, "vector of length " + std::to_string(v.size()) + " cannot be reshaped to " +
                               std::to_string(n_timepoints) + "x" + std::to_string(n_channels));
  return Eigen::Map<const RowMatrix>(v.data(), n_timepoints, n_channels);
}

/// Stacks every trial into a [n_trials x n_features] design matrix.
inline RowMatrix design_matrix(const EpochSet& ep) {
  RowMatrix x(static_cast<Eigen::Index>(ep.n_trials()), ep.n_features());
  for (std::size_t t = 0; t < ep.n_trials(); ++t) x.row(static_cast<Eigen::Index>(t)) = vectorize_epoch(ep, t).transpose();
  return x;
}

/// Returns a copy holding only the given trials, in the given order.
inline EpochSet subset(const EpochSet& ep, const std::vector<std::size_t>& indices) {
  EpochSet out;
  out.fs = ep.fs;
  out.time_axis_ms = ep.time_axis_ms;
  out.channel_names = ep.channel_names;
  out.class_values = ep.class_values;
  out.meta = ep.meta;
  out.trials.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    if (i >= ep.n_trials()) fail(ErrorKind::index, "trial " + std::to_string(i) + " out of range");
    out.trials.push_back(ep.trials[i]);
    out.labels.push_back(ep.labels[i]);
  }
  return out;
}

}  // namespace lrpeeg
