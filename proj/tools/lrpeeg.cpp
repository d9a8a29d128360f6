// lrpeeg: command-line front end for the preprocessing / training /
// evaluation / relevance pipeline. Exit codes: 0 success, 2 usage or config,
// 3 data, 4 numerical.

#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrpeeg/pipeline.hpp"

namespace {

using lrpeeg::pipeline::PipelineConfig;

// Flag values are collected here and only applied when given, so that a
// --config file supplies defaults and explicit flags win.
struct Flags {
  std::string config;
  std::string input, data, test_data, output, model_path, montage, model, mode, target, start_layer;
  std::vector<std::string> sources;
  std::vector<double> band, window, baseline;
  std::vector<int> classes;
  std::vector<std::size_t> test_indices;
  double target_fs = 0, learning_rate = 0, epsilon = 0, test_fraction = 0;
  double fs = 0, carrier = 0, depth = 0, noise = 0;
  int n_taps = 0, batch_size = 0, iterations = 0, hidden = 0, n_orders = 0, csp_pairs = 0;
  int channels = 0, trials = 0;
  std::uint64_t seed = 0;
  std::optional<double> time_ms;
  bool time_average = false;
};

struct Registered {
  std::vector<std::pair<CLI::Option*, std::function<void(PipelineConfig&)>>> setters;

  template <typename T, typename Fn>
  void add(CLI::App* app, const std::string& name, T& target, const std::string& help, Fn apply) {
    auto* opt = app->add_option(name, target, help);
    setters.emplace_back(opt, apply);
  }

  void apply(PipelineConfig& cfg) const {
    for (const auto& [opt, fn] : setters)
      if (opt->count() > 0) fn(cfg);
  }
};

void add_common(CLI::App* app, Flags& f, Registered& r) {
  app->add_option("--config", f.config, "JSON config file (flags override it)")->check(CLI::ExistingFile);
  r.add(app, "--seed", f.seed, "root seed (LRPEEG_SEED overrides)", [&f](PipelineConfig& c) { c.seed = f.seed; });
  r.add(app, "-o,--out", f.output, "output file or directory", [&f](PipelineConfig& c) { c.output = f.output; });
}

void add_model_flags(CLI::App* app, Flags& f, Registered& r) {
  r.add(app, "--data", f.data, "preprocessed data directory", [&f](PipelineConfig& c) { c.data = f.data; });
  r.add(app, "--model", f.model, "csp-lda | dnn | dnn-transfer",
        [&f](PipelineConfig& c) { c.model = lrpeeg::pipeline::parse_model_kind(f.model); });
  r.add(app, "--sources", f.sources, "preprocessed directories of transfer source subjects",
        [&f](PipelineConfig& c) { c.sources = f.sources; });
  r.add(app, "--batch-size", f.batch_size, "SGD batch size (5)", [&f](PipelineConfig& c) { c.train.batch_size = f.batch_size; });
  r.add(app, "--iterations", f.iterations, "SGD iterations per subject (3000)",
        [&f](PipelineConfig& c) { c.train.iterations = f.iterations; });
  r.add(app, "--learning-rate", f.learning_rate, "SGD learning rate (0.01)",
        [&f](PipelineConfig& c) { c.train.learning_rate = f.learning_rate; });
  r.add(app, "--hidden", f.hidden, "hidden units (500)", [&f](PipelineConfig& c) { c.n_hidden = f.hidden; });
  r.add(app, "--csp-pairs", f.csp_pairs, "CSP filter pairs (3)", [&f](PipelineConfig& c) { c.csp_pairs = f.csp_pairs; });
}

std::string read_text(const std::string& path) { return lrpeeg::io::read_file(path); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lrpeeg: EEG single-trial classification with relevance heatmaps"};
  app.require_subcommand(1);
  Flags f;
  Registered reg;

  auto* synth = app.add_subcommand("synth", "generate a synthetic motor-imagery recording (ERF)");
  add_common(synth, f, reg);
  reg.add(synth, "--channels", f.channels, "channel count (64)", [&f](PipelineConfig& c) { c.synth.n_channels = f.channels; });
  reg.add(synth, "--trials", f.trials, "trials per class (100)", [&f](PipelineConfig& c) { c.synth.n_trials_per_class = f.trials; });
  reg.add(synth, "--fs", f.fs, "sampling rate in Hz (100)", [&f](PipelineConfig& c) { c.synth.fs = f.fs; });
  reg.add(synth, "--carrier", f.carrier, "carrier frequency in Hz (11)", [&f](PipelineConfig& c) { c.synth.carrier_hz = f.carrier; });
  reg.add(synth, "--depth", f.depth, "modulation depth in [0,1] (0.7)", [&f](PipelineConfig& c) { c.synth.modulation_depth = f.depth; });
  reg.add(synth, "--noise", f.noise, "noise sigma (0.5)", [&f](PipelineConfig& c) { c.synth.noise_sigma = f.noise; });

  auto* pre = app.add_subcommand("preprocess", "decimate, band-pass, epoch, envelope, baseline");
  add_common(pre, f, reg);
  reg.add(pre, "-i,--input", f.input, "input recording (ERF)", [&f](PipelineConfig& c) { c.input = f.input; });
  reg.add(pre, "--target-fs", f.target_fs, "target rate in Hz (100)", [&f](PipelineConfig& c) { c.preprocess.target_fs = f.target_fs; });
  reg.add(pre, "--band", f.band, "band edges in Hz (9 13)", [&f](PipelineConfig& c) {
    if (f.band.size() != 2) lrpeeg::fail(lrpeeg::ErrorKind::usage, "--band takes two values");
    c.preprocess.band_low_hz = f.band[0];
    c.preprocess.band_high_hz = f.band[1];
  });
  reg.add(pre, "--taps", f.n_taps, "band-pass taps, odd (2*fs+1)", [&f](PipelineConfig& c) { c.preprocess.n_taps = f.n_taps; });
  reg.add(pre, "--window", f.window, "epoch window in ms (1000 4000)", [&f](PipelineConfig& c) {
    if (f.window.size() != 2) lrpeeg::fail(lrpeeg::ErrorKind::usage, "--window takes two values");
    c.preprocess.window_ms = {f.window[0], f.window[1]};
  });
  reg.add(pre, "--baseline", f.baseline, "baseline window in ms (-300 0)", [&f](PipelineConfig& c) {
    if (f.baseline.size() != 2) lrpeeg::fail(lrpeeg::ErrorKind::usage, "--baseline takes two values");
    c.preprocess.baseline_ms = {f.baseline[0], f.baseline[1]};
  });
  reg.add(pre, "--classes", f.classes, "marker labels mapped to classes 0 and 1", [&f](PipelineConfig& c) { c.preprocess.classes = f.classes; });

  auto* train = app.add_subcommand("train", "train a model on all trials of a data directory");
  add_common(train, f, reg);
  add_model_flags(train, f, reg);

  auto* evaluate = app.add_subcommand("evaluate", "train/test evaluation, writes metrics JSON");
  add_common(evaluate, f, reg);
  add_model_flags(evaluate, f, reg);
  reg.add(evaluate, "--test-data", f.test_data, "separate preprocessed test directory", [&f](PipelineConfig& c) { c.test_data = f.test_data; });
  reg.add(evaluate, "--mode", f.mode, "holdout | leave-one-out",
          [&f](PipelineConfig& c) { c.evaluation.mode = lrpeeg::pipeline::parse_eval_mode(f.mode); });
  reg.add(evaluate, "--test-fraction", f.test_fraction, "random holdout fraction (0.5)",
          [&f](PipelineConfig& c) { c.evaluation.test_fraction = f.test_fraction; });
  reg.add(evaluate, "--test-indices", f.test_indices, "explicit holdout trial indices",
          [&f](PipelineConfig& c) { c.evaluation.test_indices = f.test_indices; });
  reg.add(evaluate, "--orders", f.n_orders, "transfer subject orders (5)", [&f](PipelineConfig& c) { c.evaluation.n_orders = f.n_orders; });

  auto* explain = app.add_subcommand("explain", "relevance maps, heatmaps and conservation reports");
  add_common(explain, f, reg);
  reg.add(explain, "--data", f.data, "preprocessed data directory", [&f](PipelineConfig& c) { c.data = f.data; });
  reg.add(explain, "--model-path", f.model_path, "trained network file", [&f](PipelineConfig& c) { c.model_path = f.model_path; });
  reg.add(explain, "--montage", f.montage, "montage CSV (name,x,y)", [&f](PipelineConfig& c) { c.montage = f.montage; });
  reg.add(explain, "--epsilon", f.epsilon, "stabilizer (1e-9)", [&f](PipelineConfig& c) { c.lrp.epsilon = f.epsilon; });
  reg.add(explain, "--target", f.target, "predicted | class-0 | class-1",
          [&f](PipelineConfig& c) { c.lrp.target = lrpeeg::pipeline::parse_target(f.target); });
  reg.add(explain, "--start-layer", f.start_layer, "logits | probability",
          [&f](PipelineConfig& c) { c.lrp.start_layer = lrpeeg::pipeline::parse_start_layer(f.start_layer); });

  auto* render = app.add_subcommand("render", "render a relevance CSV as heatmap or scalp topography");
  add_common(render, f, reg);
  reg.add(render, "-i,--input", f.input, "relevance CSV", [&f](PipelineConfig& c) { c.input = f.input; });
  reg.add(render, "--montage", f.montage, "montage CSV (name,x,y)", [&f](PipelineConfig& c) { c.montage = f.montage; });
  render->add_option("--time-ms", f.time_ms, "topography of the row at this time");
  render->add_flag("--time-average", f.time_average, "topography of the time average");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    PipelineConfig cfg;
    if (!f.config.empty()) {
      lrpeeg::Json j;
      try {
        j = lrpeeg::Json::parse(read_text(f.config));
      } catch (const lrpeeg::Json::exception& e) {
        lrpeeg::fail(lrpeeg::ErrorKind::usage, "config '" + f.config + "' is not valid JSON: " + e.what());
      }
      lrpeeg::pipeline::apply_json(cfg, j);
    }
    reg.apply(cfg);
    lrpeeg::pipeline::apply_env(cfg);

    lrpeeg::Json result;
    if (synth->parsed()) result = lrpeeg::pipeline::cmd_synth(cfg);
    else if (pre->parsed()) result = lrpeeg::pipeline::cmd_preprocess(cfg);
    else if (train->parsed()) result = lrpeeg::pipeline::cmd_train(cfg);
    else if (evaluate->parsed()) result = lrpeeg::pipeline::cmd_evaluate(cfg);
    else if (explain->parsed()) {
      result = lrpeeg::pipeline::cmd_explain(cfg);
      result.erase("trials");
    } else if (render->parsed()) result = lrpeeg::pipeline::cmd_render(cfg, f.time_ms, f.time_average);
    std::cout << result.dump(2) << "\n";
    return 0;
  } catch (const lrpeeg::Error& e) {
    std::cerr << "lrpeeg: " << e.what() << "\n";
    return lrpeeg::exit_code(e.kind());
  } catch (const lrpeeg::Json::exception& e) {
    std::cerr << "lrpeeg: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "lrpeeg: " << e.what() << "\n";
    return 3;
  }
}
