#pragma once

// Layer-wise relevance propagation through the two-layer network.
//
// For a linear layer with inputs a_i, weights w_ij and bias b_j, relevance
// r_j on output j is redistributed as
//
//   r_i = sum_j z_ij / (sum_i' z_i'j + b_j + eps * sign(sum_i' z_i'j + b_j)) * r_j,
//   z_ij = a_i w_ij,
//
// so that sum_i r_i = sum_j r_j - (bias share), with the bias share equal to
// sum_j (b_j + eps*sign) / denom_j * r_j. tanh layers pass relevance through
// unchanged, and propagation starts at the target logit (or, optionally, at
// the target's softmax probability) with zero relevance on the other output.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lrpeeg/mlp.hpp"
#include "lrpeeg/types.hpp"

namespace lrpeeg::lrp {

enum class Target { predicted, class0, class1 };
enum class StartLayer { logits, probability };

struct LrpConfig {
  double epsilon = 1e-9;
  Target target = Target::predicted;
  StartLayer start_layer = StartLayer::logits;
};

inline void validate(const LrpConfig& cfg) {
  if (!(cfg.epsilon >= 0.0) || !std::isfinite(cfg.epsilon)) fail(ErrorKind::spec, "epsilon must be finite and >= 0");
}

/// sign with sign(0) = +1, so that eps > 0 always moves the denominator away from zero.
inline double stabilizer_sign(double v) { return v >= 0.0 ? 1.0 : -1.0; }

struct LinearResult {
  Vector input_relevance;
  double bias_share = 0.0;
};

/// One application of the rule. weights is [n_in x n_out]; bias may be empty
/// (treated as zero).
inline LinearResult propagate_linear(const Vector& input, const Matrix& weights, const Vector& bias,
                                     const Vector& output_relevance, double epsilon) {
  if (weights.rows() != input.size() || weights.cols() != output_relevance.size() ||
      (bias.size() != 0 && bias.size() != weights.cols()))
    fail(ErrorKind::shape, "relevance propagation: layer shapes do not match");
  Vector denom = weights.transpose() * input;
  if (bias.size() != 0) denom += bias;
  Vector scaled(denom.size());
  LinearResult out;
  for (Eigen::Index j = 0; j < denom.size(); ++j) {
    const double d = denom(j) + epsilon * stabilizer_sign(denom(j));
    const double rj = output_relevance(j);
    if (rj == 0.0) {
      scaled(j) = 0.0;
      continue;
    }
    if (d == 0.0)
      fail(ErrorKind::numerical, "zero denominator at output neuron " + std::to_string(j) + "; use epsilon > 0");
    scaled(j) = rj / d;
    const double b = (bias.size() != 0 ? bias(j) : 0.0) + epsilon * stabilizer_sign(denom(j));
    out.bias_share += b * scaled(j);
  }
  out.input_relevance = input.cwiseProduct(weights * scaled);
  if (!out.input_relevance.allFinite())
    fail(ErrorKind::numerical, "non-finite relevance; use epsilon > 0");
  return out;
}

inline int resolve_target(const LrpConfig& cfg, int decoded_class) {
  switch (cfg.target) {
    case Target::class0: return 0;
    case Target::class1: return 1;
    case Target::predicted: return decoded_class;
  }
  return decoded_class;
}

struct Trace {
  mlp::ForwardResult forward;
  int decoded_class = 0;
  int target_class = 0;
  double start_relevance = 0.0;  // f(x)
  Vector hidden_relevance;
  Vector input_relevance;
  double output_bias_share = 0.0;
  double hidden_bias_share = 0.0;
};

inline Trace propagate(const mlp::MlpModel& model, const Vector& x, const LrpConfig& cfg) {
  validate(cfg);
  Trace t;
  t.forward = mlp::forward(model, x);
  t.decoded_class = t.forward.probs(1) > t.forward.probs(0) ? 1 : 0;
  t.target_class = resolve_target(cfg, t.decoded_class);
  t.start_relevance = cfg.start_layer == StartLayer::logits ? t.forward.logits(t.target_class)
                                                            : t.forward.probs(t.target_class);
  Vector r_out = Vector::Zero(mlp::kOutputs);
  r_out(t.target_class) = t.start_relevance;
  const auto top = propagate_linear(t.forward.hidden, model.w2, model.b2, r_out, cfg.epsilon);
  t.hidden_relevance = top.input_relevance;
  t.output_bias_share = top.bias_share;
  // tanh passes relevance through: hidden-output relevance is pre-activation relevance.
  const auto bottom = propagate_linear(x, model.w1, model.b1, t.hidden_relevance, cfg.epsilon);
  t.input_relevance = bottom.input_relevance;
  t.hidden_bias_share = bottom.bias_share;
  return t;
}

/// Relevance of every input, reshaped time-major to [n_timepoints x n_channels].
inline RelevanceMap relevance_propagate(const mlp::MlpModel& model, const Vector& x, const LrpConfig& cfg,
                                        Eigen::Index n_timepoints, Eigen::Index n_channels, std::size_t trial_index = 0) {
  if (n_timepoints * n_channels != model.n_input())
    fail(ErrorKind::shape, "map shape " + std::to_string(n_timepoints) + "x" + std::to_string(n_channels) +
                               " does not match network input " + std::to_string(model.n_input()));
  const auto t = propagate(model, x, cfg);
  RelevanceMap map;
  map.values = unvectorize(t.input_relevance, n_timepoints, n_channels);
  map.trial_index = trial_index;
  map.decoded_class = t.decoded_class;
  map.classifier_score = t.forward.probs(1);
  map.target_class = t.target_class;
  return map;
}

inline RelevanceMap relevance_propagate(const mlp::MlpModel& model, const EpochSet& ep, std::size_t trial, const LrpConfig& cfg) {
  return relevance_propagate(model, vectorize_epoch(ep, trial), cfg, ep.n_timepoints(), ep.n_channels(), trial);
}

struct ConservationReport {
  std::vector<double> layer_sums;   // [logit layer, hidden layer, input layer]
  std::vector<double> bias_shares;  // absorbed at [logit layer, hidden layer]
  double input_sum = 0.0;
  double f_x = 0.0;
  double bias_leak = 0.0;
  int target_class = 0;
  int decoded_class = 0;
};

inline ConservationReport conservation_report(const mlp::MlpModel& model, const Vector& x, const LrpConfig& cfg) {
  const auto t = propagate(model, x, cfg);
  ConservationReport rep;
  rep.f_x = t.start_relevance;
  rep.input_sum = t.input_relevance.sum();
  rep.layer_sums = {t.start_relevance, t.hidden_relevance.sum(), rep.input_sum};
  rep.bias_shares = {t.output_bias_share, t.hidden_bias_share};
  rep.bias_leak = rep.f_x - rep.input_sum;
  rep.target_class = t.target_class;
  rep.decoded_class = t.decoded_class;
  return rep;
}

inline Json to_json(const ConservationReport& r) {
  return Json{{"layer_sums", r.layer_sums}, {"bias_shares", r.bias_shares}, {"input_sum", r.input_sum},
              {"f_x", r.f_x},           {"bias_leak", r.bias_leak},     {"target_class", r.target_class},
              {"decoded_class", r.decoded_class}};
}

enum class AggregateMode { time_average, class_average };

/// Per-channel mean over timepoints.
inline Vector time_average(const RelevanceMap& map) { return map.values.colwise().mean().transpose(); }

/// time_average needs exactly one map; class_average averages the
/// time-averaged maps of every given trial.
inline Vector aggregate_maps(std::span<const RelevanceMap> maps, AggregateMode mode) {
  if (maps.empty()) fail(ErrorKind::usage, "aggregate_maps needs at least one map");
  if (mode == AggregateMode::time_average) {
    if (maps.size() != 1) fail(ErrorKind::usage, "time-average takes a single map; use class-average for several");
    return time_average(maps.front());
  }
  const auto rows = maps.front().values.rows();
  const auto cols = maps.front().values.cols();
  Vector acc = Vector::Zero(cols);
  for (const auto& m : maps) {
    if (m.values.rows() != rows || m.values.cols() != cols) fail(ErrorKind::shape, "relevance maps differ in shape");
    acc += time_average(m);
  }
  return acc / static_cast<double>(maps.size());
}

/// Element-wise mean of full maps.
inline Matrix mean_map(std::span<const RelevanceMap> maps) {
  if (maps.empty()) fail(ErrorKind::usage, "mean_map needs at least one map");
  Matrix acc = Matrix::Zero(maps.front().values.rows(), maps.front().values.cols());
  for (const auto& m : maps) {
    if (m.values.rows() != acc.rows() || m.values.cols() != acc.cols()) fail(ErrorKind::shape, "relevance maps differ in shape");
    acc += m.values;
  }
  return acc / static_cast<double>(maps.size());
}

}  // namespace lrpeeg::lrp
