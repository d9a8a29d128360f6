// Small end-to-end walk through the library API: synthesize a recording,
// preprocess it, train a reduced network and explain one trial.

#include <cstdio>

#include "lrpeeg/lrpeeg.hpp"

int main() {
  using namespace lrpeeg;

  synth::SynthSpec spec;
  spec.n_channels = 42;
  spec.n_trials_per_class = 30;
  spec.seed = 7;
  synth::set_default_discriminative(spec);
  const auto rec = synth::generate(spec).recording;

  const auto data = pipeline::preprocess(rec, pipeline::PreprocessConfig{});
  std::printf("epochs: %zu trials, %td timepoints x %td channels\n", data.envelope.n_trials(),
              data.envelope.n_timepoints(), data.envelope.n_channels());

  const auto split = eval::random_holdout(data.envelope.n_trials(), 0.5, 1);
  const auto train = subset(data.envelope, split.train);
  const auto test = subset(data.envelope, split.test);

  mlp::TrainConfig cfg;
  cfg.iterations = 500;
  cfg.seed = 1;
  auto net = mlp::train(mlp::init_model(train.n_features(), cfg.seed, 50), train, cfg);
  const auto pred = mlp::predict(net, test);
  std::printf("test accuracy: %.3f\n", eval::accuracy(pred.labels, test.labels));

  const lrp::LrpConfig lrp_cfg;
  const auto map = lrp::relevance_propagate(net, test, 0, lrp_cfg);
  const auto report = lrp::conservation_report(net, vectorize_epoch(test, 0), lrp_cfg);
  std::printf("trial 0: decoded %d (p1 = %.3f), f(x) = %.6f, sum r = %.6f, bias leak = %.3g\n", map.decoded_class,
              map.classifier_score, report.f_x, report.input_sum, report.bias_leak);

  const Vector per_channel = lrp::time_average(map);
  for (Eigen::Index c = 0; c < per_channel.size(); ++c)
    std::printf("  %-4s %+.5f\n", test.channel_names[static_cast<std::size_t>(c)].c_str(), per_channel(c));
  return 0;
}
