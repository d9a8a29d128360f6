#pragma once

// End-to-end orchestration behind the `lrpeeg` subcommands.
//
// Randomness: one root seed. Stage streams use derive_seed(root, label) with
// labels "train" (network init and batch sampling), "split" (random holdout).
// The synthetic generator takes the root seed directly.
//
// Preprocessed data directory layout:
//   envelope.erf     envelope epochs, baseline subtracted (network input)
//   bandpass.erf     band-passed epochs (CSP-LDA input)
//   provenance.json  parameters, library version, seed

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrpeeg/dsp.hpp"
#include "lrpeeg/erf.hpp"
#include "lrpeeg/evaluate.hpp"
#include "lrpeeg/lrp.hpp"
#include "lrpeeg/mlp.hpp"
#include "lrpeeg/montage.hpp"
#include "lrpeeg/synth.hpp"
#include "lrpeeg/viz.hpp"

#ifndef LRPEEG_VERSION_STRING
#define LRPEEG_VERSION_STRING "0.0.0"
#endif

namespace lrpeeg::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = LRPEEG_VERSION_STRING;
inline constexpr const char* kEnvelopeFile = "envelope.erf";
inline constexpr const char* kBandpassFile = "bandpass.erf";
inline constexpr const char* kProvenanceFile = "provenance.json";

enum class ModelKind { csp_lda, dnn, dnn_transfer };
enum class EvalMode { holdout, leave_one_out };

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "csp-lda") return ModelKind::csp_lda;
  if (s == "dnn") return ModelKind::dnn;
  if (s == "dnn-transfer") return ModelKind::dnn_transfer;
  fail(ErrorKind::usage, "model: unknown value '" + s + "' (expected csp-lda, dnn or dnn-transfer)");
}

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::csp_lda: return "csp-lda";
    case ModelKind::dnn: return "dnn";
    case ModelKind::dnn_transfer: return "dnn-transfer";
  }
  return "?";
}

inline EvalMode parse_eval_mode(const std::string& s) {
  if (s == "holdout") return EvalMode::holdout;
  if (s == "leave-one-out" || s == "loo") return EvalMode::leave_one_out;
  fail(ErrorKind::usage, "evaluation.mode: unknown value '" + s + "' (expected holdout or leave-one-out)");
}

inline lrp::Target parse_target(const std::string& s) {
  if (s == "predicted") return lrp::Target::predicted;
  if (s == "class-0" || s == "0") return lrp::Target::class0;
  if (s == "class-1" || s == "1") return lrp::Target::class1;
  fail(ErrorKind::usage, "lrp.target: unknown value '" + s + "' (expected predicted, class-0 or class-1)");
}

inline lrp::StartLayer parse_start_layer(const std::string& s) {
  if (s == "logits") return lrp::StartLayer::logits;
  if (s == "probability") return lrp::StartLayer::probability;
  fail(ErrorKind::usage, "lrp.start_layer: unknown value '" + s + "' (expected logits or probability)");
}

struct PreprocessConfig {
  double target_fs = 100.0;
  double band_low_hz = 9.0;
  double band_high_hz = 13.0;
  int n_taps = 0;  // 0: dsp::default_bandpass_taps(target_fs)
  std::pair<double, double> window_ms{1000.0, 4000.0};
  std::pair<double, double> baseline_ms{-300.0, 0.0};
  std::vector<int> classes;
};

struct EvaluationConfig {
  EvalMode mode = EvalMode::holdout;
  double test_fraction = 0.5;
  std::vector<std::size_t> test_indices;
  int n_orders = 5;
};

struct PipelineConfig {
  std::string input;       // recording (preprocess) or relevance csv (render)
  std::string data;        // preprocessed directory
  std::string test_data;   // optional preprocessed holdout test directory
  std::vector<std::string> sources;  // preprocessed directories of transfer source subjects
  std::string output;      // output file or directory
  std::string model_path;  // trained model (explain)
  std::string montage;     // optional montage csv
  PreprocessConfig preprocess;
  ModelKind model = ModelKind::dnn;
  mlp::TrainConfig train;
  int n_hidden = static_cast<int>(mlp::kDefaultHidden);
  int csp_pairs = 3;
  lrp::LrpConfig lrp;
  EvaluationConfig evaluation;
  synth::SynthSpec synth;
  std::uint64_t seed = 0;
};

namespace detail {

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const Json::exception&) {
      fail(ErrorKind::usage, std::string("config field '") + key + "' has the wrong type");
    }
  }
}

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(ErrorKind::usage, "config: unknown field '" + where + it.key() + "'");
  }
}

inline std::pair<double, double> read_pair(const Json& j, const char* key, std::pair<double, double> def) {
  if (auto it = j.find(key); it != j.end()) {
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
      fail(ErrorKind::usage, std::string("config field '") + key + "' must be [number, number]");
    return {(*it)[0].get<double>(), (*it)[1].get<double>()};
  }
  return def;
}

}  // namespace detail

/// Overlays a JSON config object onto `cfg`. Unknown keys are rejected.
inline void apply_json(PipelineConfig& cfg, const Json& j) {
  if (!j.is_object()) fail(ErrorKind::usage, "config must be a JSON object");
  detail::check_keys(j, {"input", "data", "test_data", "sources", "output", "model_path", "montage", "preprocess", "model",
                         "train", "lrp", "evaluation", "synth", "seed", "csp_pairs"},
                     "");
  detail::read_opt(j, "input", cfg.input);
  detail::read_opt(j, "data", cfg.data);
  detail::read_opt(j, "test_data", cfg.test_data);
  detail::read_opt(j, "sources", cfg.sources);
  detail::read_opt(j, "output", cfg.output);
  detail::read_opt(j, "model_path", cfg.model_path);
  detail::read_opt(j, "montage", cfg.montage);
  detail::read_opt(j, "seed", cfg.seed);
  detail::read_opt(j, "csp_pairs", cfg.csp_pairs);
  if (auto it = j.find("model"); it != j.end()) cfg.model = parse_model_kind(it->get<std::string>());
  if (auto it = j.find("preprocess"); it != j.end()) {
    const auto& p = *it;
    detail::check_keys(p, {"target_fs", "band", "n_taps", "window_ms", "baseline_ms", "classes"}, "preprocess.");
    detail::read_opt(p, "target_fs", cfg.preprocess.target_fs);
    detail::read_opt(p, "n_taps", cfg.preprocess.n_taps);
    detail::read_opt(p, "classes", cfg.preprocess.classes);
    const auto band = detail::read_pair(p, "band", {cfg.preprocess.band_low_hz, cfg.preprocess.band_high_hz});
    cfg.preprocess.band_low_hz = band.first;
    cfg.preprocess.band_high_hz = band.second;
    cfg.preprocess.window_ms = detail::read_pair(p, "window_ms", cfg.preprocess.window_ms);
    cfg.preprocess.baseline_ms = detail::read_pair(p, "baseline_ms", cfg.preprocess.baseline_ms);
  }
  if (auto it = j.find("train"); it != j.end()) {
    detail::check_keys(*it, {"batch_size", "iterations", "learning_rate", "hidden"}, "train.");
    detail::read_opt(*it, "batch_size", cfg.train.batch_size);
    detail::read_opt(*it, "iterations", cfg.train.iterations);
    detail::read_opt(*it, "learning_rate", cfg.train.learning_rate);
    detail::read_opt(*it, "hidden", cfg.n_hidden);
  }
  if (auto it = j.find("lrp"); it != j.end()) {
    detail::check_keys(*it, {"epsilon", "target", "start_layer"}, "lrp.");
    detail::read_opt(*it, "epsilon", cfg.lrp.epsilon);
    if (auto t = it->find("target"); t != it->end()) cfg.lrp.target = parse_target(t->get<std::string>());
    if (auto t = it->find("start_layer"); t != it->end()) cfg.lrp.start_layer = parse_start_layer(t->get<std::string>());
  }
  if (auto it = j.find("evaluation"); it != j.end()) {
    detail::check_keys(*it, {"mode", "test_fraction", "test_indices", "n_orders"}, "evaluation.");
    if (auto m = it->find("mode"); m != it->end()) cfg.evaluation.mode = parse_eval_mode(m->get<std::string>());
    detail::read_opt(*it, "test_fraction", cfg.evaluation.test_fraction);
    detail::read_opt(*it, "test_indices", cfg.evaluation.test_indices);
    detail::read_opt(*it, "n_orders", cfg.evaluation.n_orders);
  }
  if (auto it = j.find("synth"); it != j.end()) {
    detail::check_keys(*it, {"n_channels", "n_trials_per_class", "fs", "carrier_hz", "modulation_depth", "noise_sigma",
                             "discriminative"},
                       "synth.");
    auto& s = cfg.synth;
    detail::read_opt(*it, "n_channels", s.n_channels);
    detail::read_opt(*it, "n_trials_per_class", s.n_trials_per_class);
    detail::read_opt(*it, "fs", s.fs);
    detail::read_opt(*it, "carrier_hz", s.carrier_hz);
    detail::read_opt(*it, "modulation_depth", s.modulation_depth);
    detail::read_opt(*it, "noise_sigma", s.noise_sigma);
    if (auto d = it->find("discriminative"); d != it->end()) {
      if (!d->is_array() || d->size() != 2) fail(ErrorKind::usage, "synth.discriminative must be [[...], [...]]");
      s.discriminative[0] = (*d)[0].get<std::vector<int>>();
      s.discriminative[1] = (*d)[1].get<std::vector<int>>();
    }
  }
}

/// LRPEEG_SEED, when set, overrides the configured seed.
inline void apply_env(PipelineConfig& cfg) {
  if (const char* s = std::getenv("LRPEEG_SEED"); s != nullptr && *s != '\0') {
    char* end = nullptr;
    const auto v = std::strtoull(s, &end, 10);
    if (end == nullptr || *end != '\0') fail(ErrorKind::usage, "LRPEEG_SEED must be a non-negative integer");
    cfg.seed = v;
  }
}

inline mlp::TrainConfig stage_train_config(const PipelineConfig& cfg) {
  auto t = cfg.train;
  t.seed = derive_seed(cfg.seed, "train");
  return t;
}

inline dsp::BandpassSpec band_spec(const PreprocessConfig& p) {
  return {p.band_low_hz, p.band_high_hz, p.n_taps > 0 ? p.n_taps : dsp::default_bandpass_taps(p.target_fs)};
}

inline Json to_json(const PreprocessConfig& p) {
  const auto band = band_spec(p);
  return Json{{"target_fs", p.target_fs},
              {"band", {p.band_low_hz, p.band_high_hz}},
              {"n_taps", band.n_taps},
              {"window_ms", {p.window_ms.first, p.window_ms.second}},
              {"baseline_ms", {p.baseline_ms.first, p.baseline_ms.second}},
              {"classes", p.classes},
              {"chain", {"decimate", "bandpass", "epoch", "envelope", "baseline"}}};
}

struct Preprocessed {
  EpochSet envelope;  // baseline-subtracted envelope epochs
  EpochSet bandpass;  // band-passed epochs over the same window
};

/// decimate -> bandpass -> epoch -> envelope -> baseline.
inline Preprocessed preprocess(const Recording& rec, const PreprocessConfig& p) {
  const auto decimated = dsp::decimate(rec, p.target_fs);
  const auto filtered = dsp::bandpass(decimated, band_spec(p));
  auto epochs = dsp::extract_epochs(filtered, p.window_ms, p.classes);
  const auto base = dsp::extract_epochs(filtered, p.baseline_ms, epochs.class_values);
  Preprocessed out;
  out.envelope = dsp::baseline_subtract(dsp::envelope(epochs), dsp::envelope(base));
  out.envelope.meta["features"] = "envelope-baseline";
  out.bandpass = std::move(epochs);
  out.bandpass.meta["features"] = "bandpass";
  return out;
}

namespace detail {

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) fail(ErrorKind::usage, std::string(what) + " is required");
  if (!fs::exists(path)) fail(ErrorKind::io, std::string(what) + " '" + path + "' does not exist");
}

inline void ensure_dir(const std::string& path) {
  if (path.empty()) fail(ErrorKind::usage, "output is required");
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) fail(ErrorKind::io, "cannot create directory '" + path + "': " + ec.message());
}

inline void write_json(const fs::path& path, const Json& j) { io::write_file(path, j.dump(2) + "\n"); }

inline EpochSet load_epochs(const std::string& dir, ModelKind kind) {
  require_file(dir, "data directory");
  const fs::path file = fs::path(dir) / (kind == ModelKind::csp_lda ? kBandpassFile : kEnvelopeFile);
  if (!fs::exists(file)) fail(ErrorKind::io, "'" + file.string() + "' does not exist");
  return read_epochs(file);
}

}  // namespace detail

inline Json cmd_synth(const PipelineConfig& cfg) {
  auto spec = cfg.synth;
  spec.seed = cfg.seed;
  if (spec.discriminative[0].empty() && spec.discriminative[1].empty()) synth::set_default_discriminative(spec);
  if (cfg.output.empty()) fail(ErrorKind::usage, "output is required");
  const auto result = synth::generate(spec);
  write_recording(result.recording, cfg.output);
  return Json{{"output", cfg.output},
              {"n_samples", result.recording.n_samples()},
              {"n_channels", result.recording.n_channels()},
              {"n_trials", result.recording.markers.size()},
              {"discriminative", {spec.discriminative[0], spec.discriminative[1]}}};
}

inline Json cmd_preprocess(const PipelineConfig& cfg) {
  detail::require_file(cfg.input, "input recording");
  const auto rec = read_recording(cfg.input);
  const auto out = preprocess(rec, cfg.preprocess);
  detail::ensure_dir(cfg.output);
  write_epochs(out.envelope, fs::path(cfg.output) / kEnvelopeFile);
  write_epochs(out.bandpass, fs::path(cfg.output) / kBandpassFile);
  Json prov{{"input", fs::path(cfg.input).filename().string()},
            {"preprocess", to_json(cfg.preprocess)},
            {"library_version", kVersion},
            {"seed", cfg.seed},
            {"n_trials", out.envelope.n_trials()},
            {"n_timepoints", out.envelope.n_timepoints()},
            {"n_channels", out.envelope.n_channels()},
            {"class_values", out.envelope.class_values}};
  detail::write_json(fs::path(cfg.output) / kProvenanceFile, prov);
  return prov;
}

inline eval::Fold holdout_fold(const PipelineConfig& cfg, std::size_t n) {
  if (!cfg.evaluation.test_indices.empty()) return eval::holdout(n, cfg.evaluation.test_indices);
  return eval::random_holdout(n, cfg.evaluation.test_fraction, derive_seed(cfg.seed, "split"));
}

struct EvaluationResult {
  Json metrics;
  std::vector<mlp::MlpModel> networks;  // trained networks, in fold/order sequence
};

/// Trains and tests the configured model. In holdout mode test trials never
/// reach training. Leave-one-out iterates single-trial folds. Transfer mode
/// trains on the source subjects only and tests on the target's test trials
/// (all target trials under leave-one-out), averaging over the orders.
inline EvaluationResult run_evaluation(const PipelineConfig& cfg) {
  const auto ep = detail::load_epochs(cfg.data, cfg.model);
  EvaluationResult res;
  Json& m = res.metrics;
  m["model"] = to_string(cfg.model);
  m["mode"] = cfg.evaluation.mode == EvalMode::holdout ? "holdout" : "leave-one-out";
  m["seed"] = cfg.seed;
  m["library_version"] = kVersion;

  const eval::CspLdaOptions csp_opt{cfg.csp_pairs, {}};
  const eval::DnnOptions dnn_opt{stage_train_config(cfg), cfg.n_hidden};

  if (cfg.model == ModelKind::dnn_transfer) {
    if (cfg.sources.empty()) fail(ErrorKind::usage, "sources: dnn-transfer needs at least one source directory");
    std::vector<EpochSet> sources;
    for (const auto& s : cfg.sources) sources.push_back(detail::load_epochs(s, cfg.model));
    EpochSet test;
    if (!cfg.test_data.empty()) test = detail::load_epochs(cfg.test_data, cfg.model);
    else if (cfg.evaluation.mode == EvalMode::leave_one_out) test = ep;
    else test = subset(ep, holdout_fold(cfg, ep.n_trials()).test);
    if (test.n_trials() == 0) fail(ErrorKind::insufficient_data, "no test trials");
    const auto tr = mlp::train_transfer(sources, dnn_opt.train, cfg.evaluation.n_orders, dnn_opt.n_hidden);
    Json orders = Json::array();
    double sum = 0.0;
    for (std::size_t o = 0; o < tr.models.size(); ++o) {
      const auto pred = mlp::predict(tr.models[o], test);
      const double acc = eval::accuracy(pred.labels, test.labels);
      sum += acc;
      orders.push_back(Json{{"order", tr.orders[o]}, {"accuracy", acc}, {"predictions", pred.labels},
                            {"scores", pred.scores}, {"iterations_trained", tr.models[o].iterations_trained}});
    }
    m["orders"] = std::move(orders);
    m["n_orders"] = tr.models.size();
    m["test_size"] = test.n_trials();
    m["accuracy"] = sum / static_cast<double>(tr.models.size());
    res.networks = tr.models;
    return res;
  }

  std::vector<eval::FoldOutcome> outcomes;
  auto run_fold = [&](const EpochSet& data, const eval::Fold& fold) {
    if (cfg.model == ModelKind::csp_lda) return eval::run_csp_lda_fold(data, fold, csp_opt);
    mlp::MlpModel net;
    auto out = eval::run_dnn_fold(data, fold, dnn_opt, &net);
    res.networks.push_back(std::move(net));
    return out;
  };

  if (cfg.evaluation.mode == EvalMode::leave_one_out) {
    for (const auto& fold : eval::leave_one_out(ep.n_trials())) outcomes.push_back(run_fold(ep, fold));
  } else if (!cfg.test_data.empty()) {
    // Separate test file: concatenate and hold out the appended trials.
    const auto test = detail::load_epochs(cfg.test_data, cfg.model);
    if (test.n_features() != ep.n_features()) fail(ErrorKind::shape, "test data shape differs from training data");
    EpochSet all = ep;
    all.trials.insert(all.trials.end(), test.trials.begin(), test.trials.end());
    all.labels.insert(all.labels.end(), test.labels.begin(), test.labels.end());
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < test.n_trials(); ++i) test_idx.push_back(ep.n_trials() + i);
    outcomes.push_back(run_fold(all, eval::holdout(all.n_trials(), test_idx)));
  } else {
    outcomes.push_back(run_fold(ep, holdout_fold(cfg, ep.n_trials())));
  }

  Json folds = Json::array();
  for (const auto& f : outcomes) folds.push_back(eval::to_json(f));
  m["n_folds"] = outcomes.size();
  m["folds"] = std::move(folds);
  m["accuracy"] = eval::pooled_accuracy(outcomes);
  return res;
}

inline Json cmd_evaluate(const PipelineConfig& cfg) {
  auto res = run_evaluation(cfg);
  if (!cfg.output.empty()) detail::write_json(cfg.output, res.metrics);
  return res.metrics;
}

/// Trains on every trial of `data` and writes the model to `output`:
/// binary network file for dnn, JSON for csp-lda.
inline Json cmd_train(const PipelineConfig& cfg) {
  if (cfg.output.empty()) fail(ErrorKind::usage, "output is required");
  if (cfg.model == ModelKind::dnn_transfer) {
    std::vector<EpochSet> sources;
    for (const auto& s : cfg.sources) sources.push_back(detail::load_epochs(s, cfg.model));
    if (sources.empty()) fail(ErrorKind::usage, "sources: dnn-transfer needs at least one source directory");
    auto tr = mlp::train_transfer(sources, stage_train_config(cfg), 1, cfg.n_hidden);
    auto net = std::move(tr.models.front());
    net.meta = {{"model", "dnn-transfer"}, {"channels", sources.front().channel_names},
                {"time_axis_ms", sources.front().time_axis_ms}, {"class_values", sources.front().class_values}};
    mlp::write_model(net, cfg.output);
    return Json{{"model", "dnn-transfer"}, {"output", cfg.output}, {"iterations_trained", net.iterations_trained}};
  }
  const auto ep = detail::load_epochs(cfg.data, cfg.model);
  if (cfg.model == ModelKind::csp_lda) {
    const auto model = eval::train_csp_lda(ep, {cfg.csp_pairs, {}});
    Json j = eval::to_json(model);
    j["channels"] = ep.channel_names;
    j["class_values"] = ep.class_values;
    detail::write_json(cfg.output, j);
    return Json{{"model", "csp-lda"}, {"output", cfg.output}, {"gamma", model.lda.shrinkage_gamma}};
  }
  auto net = eval::train_dnn(ep, {stage_train_config(cfg), cfg.n_hidden});
  net.meta = {{"model", "dnn"}, {"channels", ep.channel_names}, {"time_axis_ms", ep.time_axis_ms},
              {"class_values", ep.class_values}};
  mlp::write_model(net, cfg.output);
  return Json{{"model", "dnn"}, {"output", cfg.output}, {"iterations_trained", net.iterations_trained}};
}

inline std::optional<Montage> resolve_montage(const PipelineConfig& cfg, const std::vector<std::string>& channels) {
  if (!cfg.montage.empty()) {
    detail::require_file(cfg.montage, "montage");
    return select_channels(read_montage_csv(cfg.montage), channels);
  }
  for (const auto& c : channels)
    if (!standard_position(c)) return std::nullopt;
  return standard_montage(channels);
}

inline std::string trial_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trial_%04zu", i);
  return buf;
}

/// Per trial: relevance CSV, heatmap PNG (+ scale sidecar), conservation
/// report. Per class (true label): time-averaged relevance per channel, and a
/// scalp topography when every channel has a montage position.
inline Json cmd_explain(const PipelineConfig& cfg) {
  detail::require_file(cfg.model_path, "model");
  const auto net = mlp::read_model(cfg.model_path);
  const auto ep = detail::load_epochs(cfg.data, ModelKind::dnn);
  if (ep.n_features() != net.n_input())
    fail(ErrorKind::usage, "model expects " + std::to_string(net.n_input()) + " inputs, epochs have " +
                               std::to_string(ep.n_features()));
  detail::ensure_dir(cfg.output);
  const fs::path out(cfg.output);

  std::vector<RelevanceMap> maps;
  Json trials = Json::array();
  for (std::size_t t = 0; t < ep.n_trials(); ++t) {
    const Vector x = vectorize_epoch(ep, t);
    auto map = lrp::relevance_propagate(net, x, cfg.lrp, ep.n_timepoints(), ep.n_channels(), t);
    const auto rep = lrp::conservation_report(net, x, cfg.lrp);
    const auto stem = trial_stem(t);
    io::write_file(out / (stem + ".csv"), viz::relevance_csv(map.values, ep.time_axis_ms, ep.channel_names));
    viz::render_heatmap(map, out / (stem + ".png"));
    Json cj = lrp::to_json(rep);
    cj["trial"] = t;
    cj["label"] = ep.labels[t];
    cj["classifier_score"] = map.classifier_score;
    detail::write_json(out / (stem + ".conservation.json"), cj);
    trials.push_back(Json{{"trial", t}, {"label", ep.labels[t]}, {"decoded_class", map.decoded_class},
                          {"target_class", map.target_class}, {"classifier_score", map.classifier_score},
                          {"bias_leak", rep.bias_leak}});
    maps.push_back(std::move(map));
  }

  const auto montage = resolve_montage(cfg, ep.channel_names);
  Json classes = Json::array();
  for (int k = 0; k < 2; ++k) {
    std::vector<RelevanceMap> members;
    for (std::size_t t = 0; t < maps.size(); ++t)
      if (ep.labels[t] == k) members.push_back(maps[t]);
    if (members.empty()) continue;
    const Vector avg = lrp::aggregate_maps(members, lrp::AggregateMode::class_average);
    std::string csv = "channel,relevance\n";
    for (Eigen::Index c = 0; c < avg.size(); ++c)
      csv += ep.channel_names[static_cast<std::size_t>(c)] + "," + viz::format_number(avg(c)) + "\n";
    const std::string stem = "class_" + std::to_string(k) + "_average";
    io::write_file(out / (stem + ".csv"), csv);
    Json cj{{"class", k}, {"n_trials", members.size()}, {"file", stem + ".csv"}};
    if (montage) {
      const auto grid = viz::topography(viz::require_montage_values(avg, ep.channel_names, *montage), *montage);
      io::write_file(out / (stem + ".topography.csv"), viz::grid_csv(grid));
      viz::render_matrix(grid.grid, out / (stem + ".topography.png"), 4);
      cj["topography"] = stem + ".topography.png";
    }
    classes.push_back(std::move(cj));
  }
  Json summary{{"model", cfg.model_path.empty() ? "" : fs::path(cfg.model_path).filename().string()},
               {"n_trials", ep.n_trials()},
               {"lrp", {{"epsilon", cfg.lrp.epsilon},
                        {"target", cfg.lrp.target == lrp::Target::predicted ? "predicted"
                                   : cfg.lrp.target == lrp::Target::class0  ? "class-0"
                                                                            : "class-1"},
                        {"start_layer", cfg.lrp.start_layer == lrp::StartLayer::logits ? "logits" : "probability"}}},
               {"trials", std::move(trials)},
               {"classes", std::move(classes)}};
  detail::write_json(out / "summary.json", summary);
  return summary;
}

/// Renders a relevance CSV: heatmap by default, or a scalp topography of the
/// time average or of the row at time_ms.
inline Json cmd_render(const PipelineConfig& cfg, std::optional<double> time_ms, bool time_average) {
  detail::require_file(cfg.input, "input");
  if (cfg.output.empty()) fail(ErrorKind::usage, "output is required");
  const auto csv = viz::parse_relevance_csv(io::read_file(cfg.input), cfg.input);
  if (!time_ms && !time_average) {
    viz::render_matrix(csv.values, cfg.output);
    return Json{{"output", cfg.output}, {"kind", "heatmap"}};
  }
  Vector values;
  if (time_average) values = csv.values.colwise().mean().transpose();
  else {
    std::size_t row = csv.time_axis_ms.size();
    for (std::size_t i = 0; i < csv.time_axis_ms.size(); ++i)
      if (std::abs(csv.time_axis_ms[i] - *time_ms) < 1e-6) row = i;
    if (row == csv.time_axis_ms.size()) fail(ErrorKind::usage, "time " + viz::format_number(*time_ms) + " ms not in map");
    values = csv.values.row(static_cast<Eigen::Index>(row)).transpose();
  }
  auto montage = resolve_montage(cfg, csv.channel_names);
  if (!montage) {
    for (const auto& c : csv.channel_names)
      if (!standard_position(c)) fail(ErrorKind::montage, "channel '" + c + "' has no standard electrode position");
  }
  const auto grid = viz::topography(viz::require_montage_values(values, csv.channel_names, *montage), *montage);
  viz::render_matrix(grid.grid, cfg.output, 4);
  io::write_file(cfg.output + ".grid.csv", viz::grid_csv(grid));
  return Json{{"output", cfg.output}, {"kind", "topography"}};
}

}  // namespace lrpeeg::pipeline
