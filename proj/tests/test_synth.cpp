#include <cmath>

#include <gtest/gtest.h>

#include "lrpeeg/dsp.hpp"
#include "lrpeeg/synth.hpp"

using namespace lrpeeg;

namespace {

synth::SynthSpec small_spec(std::uint64_t seed) {
  synth::SynthSpec s;
  s.n_trials_per_class = 20;
  s.seed = seed;
  synth::set_default_discriminative(s);
  return s;
}

double welch_t(const std::vector<double>& a, const std::vector<double>& b) {
  auto stats = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m) / static_cast<double>(v.size() - 1);
    return std::pair{m, s};
  };
  const auto [ma, va] = stats(a);
  const auto [mb, vb] = stats(b);
  return (ma - mb) / std::sqrt(va / static_cast<double>(a.size()) + vb / static_cast<double>(b.size()));
}

}  // namespace

TEST(Synth, DefaultDiscriminativeChannelsAreMotorSites) {
  const auto s = small_spec(1);
  const auto names = synth::channel_names(64);
  ASSERT_EQ(s.discriminative[0].size(), 3u);
  EXPECT_EQ(names[static_cast<std::size_t>(s.discriminative[0][1])], "C3");
  EXPECT_EQ(names[static_cast<std::size_t>(s.discriminative[1][1])], "C4");
  synth::SynthSpec tiny;
  tiny.n_channels = 4;
  synth::set_default_discriminative(tiny);
  EXPECT_EQ(tiny.discriminative[0], std::vector<int>{0});
  EXPECT_EQ(tiny.discriminative[1], std::vector<int>{1});
}

TEST(Synth, LayoutAndMarkers) {
  const auto r = synth::generate(small_spec(2)).recording;
  EXPECT_EQ(r.n_channels(), 64);
  EXPECT_EQ(r.n_samples(), 40 * 900);
  ASSERT_EQ(r.markers.size(), 40u);
  int ones = 0;
  for (std::size_t i = 0; i < r.markers.size(); ++i) {
    EXPECT_EQ(r.markers[i].sample, static_cast<std::int64_t>(i) * 900 + 250);
    ones += r.markers[i].label;
  }
  EXPECT_EQ(ones, 20);
  EXPECT_NO_THROW(validate(r));
}

TEST(Synth, SuppressionProfile) {
  EXPECT_EQ(synth::suppression(-1.0), 0.0);
  EXPECT_NEAR(synth::suppression(150.0), 0.5, 1e-12);
  EXPECT_EQ(synth::suppression(300.0), 1.0);
  EXPECT_EQ(synth::suppression(4999.0), 1.0);
  EXPECT_NEAR(synth::suppression(5150.0), 0.5, 1e-12);
  EXPECT_EQ(synth::suppression(5300.0), 0.0);
}

TEST(Synth, DeterministicPerSeed) {
  const auto a = synth::generate(small_spec(3)).recording;
  const auto b = synth::generate(small_spec(3)).recording;
  const auto c = synth::generate(small_spec(4)).recording;
  EXPECT_TRUE(a.samples == b.samples);
  EXPECT_EQ(a.markers, b.markers);
  EXPECT_FALSE(a.samples == c.samples);
}

TEST(Synth, ZeroDepthOnlyChangesNothingOffTarget) {
  auto spec = small_spec(5);
  const auto full = synth::generate(spec).recording;
  spec.modulation_depth = 0.0;
  const auto none = synth::generate(spec).recording;
  std::vector<char> disc(64, 0);
  for (const auto& set : spec.discriminative)
    for (int c : set) disc[static_cast<std::size_t>(c)] = 1;
  for (Eigen::Index c = 0; c < 64; ++c) {
    const bool same = full.samples.col(c) == none.samples.col(c);
    EXPECT_EQ(same, !disc[static_cast<std::size_t>(c)]) << c;
  }
}

TEST(Synth, FullDepthSilencesCarrierNoiselessly) {
  auto spec = small_spec(6);
  spec.modulation_depth = 1.0;
  spec.noise_sigma = 0.0;
  const auto r = synth::generate(spec).recording;
  for (const auto& m : r.markers) {
    const auto& target = spec.discriminative[m.label];
    const auto& other = spec.discriminative[1 - m.label];
    for (Eigen::Index s = m.sample + 30; s < m.sample + 500; ++s) {
      for (int c : target) EXPECT_EQ(r.samples(s, c), 0.0);
    }
    double power = 0.0;
    for (Eigen::Index s = m.sample + 30; s < m.sample + 500; ++s) power += r.samples(s, other[0]) * r.samples(s, other[0]);
    EXPECT_GT(power / 470.0, 0.4);
  }
}

TEST(Synth, EnvelopeContrastOnlyOnDiscriminativeChannels) {
  const auto spec = small_spec(7);
  const auto rec = synth::generate(spec).recording;
  const auto band = dsp::bandpass(rec, {9.0, 13.0, 201});
  const auto env = dsp::envelope(dsp::extract_epochs(band, {1000.0, 4000.0}));
  std::vector<double> t_stat(64);
  for (Eigen::Index c = 0; c < 64; ++c) {
    std::vector<double> g[2];
    for (std::size_t k = 0; k < env.n_trials(); ++k) g[env.labels[k]].push_back(env.trials[k].col(c).mean());
    t_stat[static_cast<std::size_t>(c)] = welch_t(g[0], g[1]);
  }
  for (int c : spec.discriminative[0]) EXPECT_LT(t_stat[static_cast<std::size_t>(c)], -8.0);  // class 0 suppressed
  for (int c : spec.discriminative[1]) EXPECT_GT(t_stat[static_cast<std::size_t>(c)], 8.0);
  std::vector<char> disc(64, 0);
  for (const auto& set : spec.discriminative)
    for (int c : set) disc[static_cast<std::size_t>(c)] = 1;
  for (std::size_t c = 0; c < 64; ++c)
    if (!disc[c]) EXPECT_LT(std::abs(t_stat[c]), 4.5) << c;
}

TEST(Synth, InvalidSpecsRejected) {
  auto s = small_spec(8);
  s.modulation_depth = 1.5;
  EXPECT_THROW(synth::generate(s), Error);
  s = small_spec(8);
  s.discriminative[1] = s.discriminative[0];
  EXPECT_THROW(synth::generate(s), Error);
  s = small_spec(8);
  s.carrier_hz = 49.8;
  EXPECT_THROW(synth::generate(s), Error);
  s = small_spec(8);
  s.discriminative[0] = {64};
  EXPECT_THROW(synth::generate(s), Error);
}
