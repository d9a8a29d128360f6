#pragma once

// Two-layer network: dense(n_input -> n_hidden) + tanh, dense(n_hidden -> 2)
// + softmax, trained with plain minibatch SGD on mean cross-entropy.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lrpeeg/erf.hpp"
#include "lrpeeg/rng.hpp"
#include "lrpeeg/types.hpp"

namespace lrpeeg::mlp {

inline constexpr Eigen::Index kOutputs = 2;
inline constexpr Eigen::Index kDefaultHidden = 500;

struct MlpModel {
  Matrix w1;  // [n_input x n_hidden]
  Vector b1;
  Matrix w2;  // [n_hidden x 2]
  Vector b2;
  std::uint64_t rng_seed = 0;
  std::int64_t iterations_trained = 0;
  Json meta = Json::object();

  Eigen::Index n_input() const { return w1.rows(); }
  Eigen::Index n_hidden() const { return w1.cols(); }
};

struct TrainConfig {
  int batch_size = 5;
  int iterations = 3000;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) fail(ErrorKind::spec, "batch_size must be >= 1");
  if (cfg.iterations < 0) fail(ErrorKind::spec, "iterations must be >= 0");
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) fail(ErrorKind::spec, "learning_rate must be > 0");
}

inline void validate(const MlpModel& m) {
  if (m.b1.size() != m.n_hidden() || m.w2.rows() != m.n_hidden() || m.w2.cols() != kOutputs || m.b2.size() != kOutputs)
    fail(ErrorKind::shape, "inconsistent network parameter shapes");
  if (!m.w1.allFinite() || !m.b1.allFinite() || !m.w2.allFinite() || !m.b2.allFinite())
    fail(ErrorKind::numerical, "network parameters are not finite");
}

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
inline MlpModel init_model(Eigen::Index n_input, std::uint64_t seed, Eigen::Index n_hidden = kDefaultHidden) {
  if (n_input < 1) fail(ErrorKind::spec, "n_input must be >= 1");
  if (n_hidden < 1) fail(ErrorKind::spec, "n_hidden must be >= 1");
  Rng rng(seed);
  MlpModel m;
  m.rng_seed = seed;
  const double a1 = 1.0 / std::sqrt(static_cast<double>(n_input));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(n_hidden));
  m.w1.resize(n_input, n_hidden);
  for (Eigen::Index i = 0; i < n_input; ++i)
    for (Eigen::Index j = 0; j < n_hidden; ++j) m.w1(i, j) = rng.uniform(-a1, a1);
  m.w2.resize(n_hidden, kOutputs);
  for (Eigen::Index i = 0; i < n_hidden; ++i)
    for (Eigen::Index j = 0; j < kOutputs; ++j) m.w2(i, j) = rng.uniform(-a2, a2);
  m.b1 = Vector::Zero(n_hidden);
  m.b2 = Vector::Zero(kOutputs);
  return m;
}

struct ForwardResult {
  Vector probs;
  Vector hidden;
  Vector logits;
};

/// Softmax with max subtraction.
inline Vector softmax(const Vector& logits) {
  const Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

inline ForwardResult forward(const MlpModel& m, const Vector& x) {
  if (x.size() != m.n_input())
    fail(ErrorKind::shape, "input has length " + std::to_string(x.size()) + ", network expects " + std::to_string(m.n_input()));
  if (!x.allFinite()) fail(ErrorKind::validation, "input contains NaN or infinity");
  ForwardResult r;
  r.hidden = (m.w1.transpose() * x + m.b1).array().tanh();
  r.logits = m.w2.transpose() * r.hidden + m.b2;
  r.probs = softmax(r.logits);
  return r;
}

struct Gradients {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
};

/// Intermediate terms of one minibatch backward pass. The w1 gradient is
/// x^T d_pre, kept factored so the SGD step can apply it without forming it.
struct BatchTerms {
  double loss = 0.0;
  RowMatrix hidden;  // [B x H]
  RowMatrix d_pre;   // dLoss / d(hidden pre-activation), [B x H]
  RowMatrix d_logits;
};

inline BatchTerms batch_terms(const MlpModel& m, const RowMatrix& xb, const std::vector<int>& yb) {
  const Eigen::Index b = xb.rows();
  BatchTerms t;
  RowMatrix pre = xb * m.w1;
  pre.rowwise() += m.b1.transpose();
  t.hidden = pre.array().tanh();
  RowMatrix logits = t.hidden * m.w2;
  logits.rowwise() += m.b2.transpose();

  t.d_logits.resize(b, kOutputs);
  const double inv_b = 1.0 / static_cast<double>(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
    const double z = e.sum();
    const int y = yb[static_cast<std::size_t>(i)];
    t.loss -= (logits(i, y) - mx - std::log(z)) * inv_b;
    t.d_logits.row(i) = e / z * inv_b;
    t.d_logits(i, y) -= inv_b;
  }
  t.d_pre = (t.d_logits * m.w2.transpose()).array() * (1.0 - t.hidden.array().square());
  return t;
}

/// Mean cross-entropy over the batch and its gradient.
inline std::pair<double, Gradients> loss_and_gradient(const MlpModel& m, const RowMatrix& xb, const std::vector<int>& yb) {
  const auto t = batch_terms(m, xb, yb);
  Gradients g;
  g.w1 = xb.transpose() * t.d_pre;
  g.b1 = t.d_pre.colwise().sum().transpose();
  g.w2 = t.hidden.transpose() * t.d_logits;
  g.b2 = t.d_logits.colwise().sum().transpose();
  return {t.loss, std::move(g)};
}

namespace detail {

inline void check_labels(const std::vector<int>& labels) {
  for (int y : labels)
    if (y != 0 && y != 1) fail(ErrorKind::validation, "labels must be 0 or 1");
}

}  // namespace detail

/// SGD on a prepared design matrix (one row per trial). Batches are drawn
/// uniformly with replacement from a stream seeded by
/// derive_seed(cfg.seed, iterations_trained at entry).
inline MlpModel train_design(MlpModel m, const RowMatrix& x, const std::vector<int>& labels, const TrainConfig& cfg) {
  validate(cfg);
  validate(m);
  if (x.rows() == 0) fail(ErrorKind::insufficient_data, "cannot train on an empty epoch set");
  if (x.cols() != m.n_input())
    fail(ErrorKind::shape, "training data has " + std::to_string(x.cols()) + " features, network expects " +
                               std::to_string(m.n_input()));
  detail::check_labels(labels);
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(m.iterations_trained)));
  const auto n = static_cast<std::size_t>(x.rows());
  RowMatrix xb(cfg.batch_size, x.cols());
  std::vector<int> yb(static_cast<std::size_t>(cfg.batch_size));
  for (int it = 0; it < cfg.iterations; ++it) {
    for (int i = 0; i < cfg.batch_size; ++i) {
      const auto k = rng.index(n);
      xb.row(i) = x.row(static_cast<Eigen::Index>(k));
      yb[static_cast<std::size_t>(i)] = labels[k];
    }
    const auto t = batch_terms(m, xb, yb);
    const double lr = cfg.learning_rate;
    m.w2.noalias() -= lr * (t.hidden.transpose() * t.d_logits);
    m.b2 -= lr * t.d_logits.colwise().sum().transpose();
    m.w1.noalias() -= lr * (xb.transpose() * t.d_pre);
    m.b1 -= lr * t.d_pre.colwise().sum().transpose();
  }
  m.iterations_trained += cfg.iterations;
  if (!m.w1.allFinite() || !m.w2.allFinite())
    fail(ErrorKind::numerical, "training diverged (non-finite weights); lower the learning rate");
  return m;
}

inline MlpModel train(MlpModel m, const EpochSet& ep, const TrainConfig& cfg) {
  if (ep.n_trials() == 0) fail(ErrorKind::insufficient_data, "cannot train on an empty epoch set");
  return train_design(std::move(m), design_matrix(ep), ep.labels, cfg);
}

struct TransferResult {
  std::vector<MlpModel> models;
  std::vector<std::vector<std::size_t>> orders;
};

/// Sequential subject-to-subject training. For each of n_orders seeded
/// permutations, a network initialized once from cfg.seed is trained
/// cfg.iterations on every source subject in permuted order. Initialization
/// and batch streams depend only on the stage position, so equal subjects
/// give equal models whatever the order.
inline TransferResult train_transfer(const std::vector<EpochSet>& subjects, const TrainConfig& cfg, int n_orders = 5,
                                     Eigen::Index n_hidden = kDefaultHidden) {
  if (subjects.empty()) fail(ErrorKind::insufficient_data, "transfer needs at least one source subject");
  if (n_orders < 1) fail(ErrorKind::spec, "n_orders must be >= 1");
  const Eigen::Index n_input = subjects.front().n_features();
  std::vector<RowMatrix> designs;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    if (subjects[s].n_features() != n_input)
      fail(ErrorKind::shape, "subject " + std::to_string(s) + " has " + std::to_string(subjects[s].n_features()) +
                                 " features, subject 0 has " + std::to_string(n_input));
    if (subjects[s].n_trials() == 0) fail(ErrorKind::insufficient_data, "subject " + std::to_string(s) + " has no trials");
    designs.push_back(design_matrix(subjects[s]));
  }
  TransferResult out;
  for (int o = 0; o < n_orders; ++o) {
    Rng order_rng(derive_seed(derive_seed(cfg.seed, "order"), static_cast<std::uint64_t>(o)));
    auto order = order_rng.permutation(subjects.size());
    MlpModel m = init_model(n_input, cfg.seed, n_hidden);
    for (auto s : order) m = train_design(std::move(m), designs[s], subjects[s].labels, cfg);
    out.models.push_back(std::move(m));
    out.orders.push_back(std::move(order));
  }
  return out;
}

struct Prediction {
  std::vector<int> labels;
  std::vector<double> scores;  // probability of class 1
};

/// argmax with exact ties going to class 0.
inline Prediction predict_design(const MlpModel& m, const RowMatrix& x) {
  if (x.cols() != m.n_input())
    fail(ErrorKind::shape, "data has " + std::to_string(x.cols()) + " features, network expects " + std::to_string(m.n_input()));
  RowMatrix pre = x * m.w1;
  pre.rowwise() += m.b1.transpose();
  const RowMatrix hidden = pre.array().tanh();
  RowMatrix logits = hidden * m.w2;
  logits.rowwise() += m.b2.transpose();
  Prediction p;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector probs = softmax(logits.row(i).transpose());
    p.labels.push_back(probs(1) > probs(0) ? 1 : 0);
    p.scores.push_back(probs(1));
  }
  return p;
}

inline Prediction predict(const MlpModel& m, const EpochSet& ep) { return predict_design(m, design_matrix(ep)); }

inline std::string encode_model(const MlpModel& m) {
  validate(m);
  Json h;
  h["format"] = "lrpeeg-mlp";
  h["n_input"] = m.n_input();
  h["n_hidden"] = m.n_hidden();
  h["n_output"] = kOutputs;
  h["rng_seed"] = m.rng_seed;
  h["iterations_trained"] = m.iterations_trained;
  h["meta"] = m.meta;
  std::string out = h.dump();
  out.push_back('\n');
  auto put_matrix = [&out](const Matrix& a) {
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c) io::put_f64(out, a(r, c));
  };
  out.reserve(out.size() + static_cast<std::size_t>(m.w1.size() + m.b1.size() + m.w2.size() + m.b2.size()) * 8);
  put_matrix(m.w1);
  put_matrix(m.b1);
  put_matrix(m.w2);
  put_matrix(m.b2);
  return out;
}

inline MlpModel decode_model(std::string_view bytes, const std::string& what = "model") {
  auto [h, payload] = io::split_header(bytes, what);
  if (h.value("format", "") != "lrpeeg-mlp") fail(ErrorKind::format, what + ": field 'format' must be \"lrpeeg-mlp\"");
  const auto n_input = io::int_field(h, "n_input", what);
  const auto n_hidden = io::int_field(h, "n_hidden", what);
  if (io::int_field(h, "n_output", what) != kOutputs) fail(ErrorKind::format, what + ": field 'n_output' must be 2");
  const auto& seed = io::field(h, "rng_seed", what);
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) fail(ErrorKind::format, what + ": field 'rng_seed' must be an integer");
  MlpModel m;
  m.rng_seed = seed.get<std::uint64_t>();
  m.iterations_trained = io::int_field(h, "iterations_trained", what);
  m.meta = io::meta_or_empty(h);
  const std::size_t n_values = static_cast<std::size_t>(n_input * n_hidden + n_hidden + n_hidden * kOutputs + kOutputs);
  if (payload.size() < n_values * 8) fail(ErrorKind::truncation, what + ": payload shorter than declared shapes");
  if (payload.size() > n_values * 8) fail(ErrorKind::format, what + ": trailing bytes after payload");
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  auto get_matrix = [&p](Eigen::Index rows, Eigen::Index cols) {
    Matrix a(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c, p += 8) a(r, c) = io::get_f64(p);
    return a;
  };
  m.w1 = get_matrix(n_input, n_hidden);
  m.b1 = get_matrix(n_hidden, 1);
  m.w2 = get_matrix(n_hidden, kOutputs);
  m.b2 = get_matrix(kOutputs, 1);
  validate(m);
  return m;
}

inline void write_model(const MlpModel& m, const std::filesystem::path& path) { io::write_file(path, encode_model(m)); }

inline MlpModel read_model(const std::filesystem::path& path) { return decode_model(io::read_file(path), path.string()); }

}  // namespace lrpeeg::mlp
