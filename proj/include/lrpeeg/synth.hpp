#pragma once

// Synthetic motor-imagery-like recordings. Every channel carries a continuous
// sinusoid near carrier_hz (per-channel frequency offset in [-0.5, 0.5] Hz and
// random phase) plus white Gaussian noise. After each cue the carrier on the
// cued class's discriminative channels is attenuated by modulation_depth,
// an event-related desynchronization analogue.
//
// Trial block layout, relative to the cue:
//   [-2500, 0)    rest
//   [0, 300)      raised-cosine onset of the suppression
//   [300, 5000)   full suppression
//   [5000, 5300)  release
//   [5300, 6500)  rest
// The recording starts with the first block; blocks are 9 s long.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "lrpeeg/rng.hpp"
#include "lrpeeg/types.hpp"

namespace lrpeeg::synth {

inline const std::vector<std::string>& standard_channel_names() {
  static const std::vector<std::string> names = {
      "Fp1", "Fpz", "Fp2", "AF7", "AF3", "AFz", "AF4", "AF8", "F7",  "F5",  "F3",  "F1",  "Fz",
      "F2",  "F4",  "F6",  "F8",  "FT7", "FC5", "FC3", "FC1", "FCz", "FC2", "FC4", "FC6", "FT8",
      "T7",  "C5",  "C3",  "C1",  "Cz",  "C2",  "C4",  "C6",  "T8",  "TP7", "CP5", "CP3", "CP1",
      "CPz", "CP2", "CP4", "CP6", "TP8", "P7",  "P5",  "P3",  "P1",  "Pz",  "P2",  "P4",  "P6",
      "P8",  "PO7", "PO3", "POz", "PO4", "PO8", "O1",  "Oz",  "O2",  "P9",  "P10", "Iz"};
  return names;
}

/// The first n standard names when n <= 64, otherwise Ch1..ChN.
inline std::vector<std::string> channel_names(std::size_t n) {
  const auto& std_names = standard_channel_names();
  if (n <= std_names.size()) return {std_names.begin(), std_names.begin() + static_cast<std::ptrdiff_t>(n)};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("Ch" + std::to_string(i + 1));
  return out;
}

struct SynthSpec {
  int n_channels = 64;
  int n_trials_per_class = 100;
  double fs = 100.0;
  double carrier_hz = 11.0;
  double modulation_depth = 0.7;
  /// discriminative[k]: channels suppressed on class-k trials.
  std::vector<int> discriminative[2];
  double noise_sigma = 0.5;
  std::uint64_t seed = 0;
};

/// Left-hemisphere motor channels for class 0 and right for class 1 when the
/// standard names are in use, otherwise channel 0 vs. channel 1.
inline void set_default_discriminative(SynthSpec& spec) {
  const auto names = channel_names(static_cast<std::size_t>(spec.n_channels));
  auto find = [&names](const char* n) {
    auto it = std::find(names.begin(), names.end(), n);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
  };
  const char* sets[2][3] = {{"FC3", "C3", "CP3"}, {"FC4", "C4", "CP4"}};
  for (int k = 0; k < 2; ++k) {
    spec.discriminative[k].clear();
    for (const char* n : sets[k])
      if (int idx = find(n); idx >= 0) spec.discriminative[k].push_back(idx);
  }
  if (spec.discriminative[0].empty() || spec.discriminative[1].empty()) {
    spec.discriminative[0] = {0};
    spec.discriminative[1] = {spec.n_channels > 1 ? 1 : 0};
  }
}

inline void validate(const SynthSpec& s) {
  if (s.n_channels < 1) fail(ErrorKind::spec, "n_channels must be >= 1");
  if (s.n_trials_per_class < 1) fail(ErrorKind::spec, "n_trials_per_class must be >= 1");
  if (!(s.fs > 0.0)) fail(ErrorKind::spec, "fs must be positive");
  if (!(s.carrier_hz + 0.5 < s.fs / 2.0) || !(s.carrier_hz > 0.5)) fail(ErrorKind::spec, "carrier must lie in (0.5, fs/2 - 0.5) Hz");
  if (!(s.modulation_depth >= 0.0 && s.modulation_depth <= 1.0)) fail(ErrorKind::spec, "modulation_depth must lie in [0, 1]");
  if (!(s.noise_sigma >= 0.0)) fail(ErrorKind::spec, "noise_sigma must be >= 0");
  std::set<int> seen;
  for (const auto& set : s.discriminative)
    for (int c : set) {
      if (c < 0 || c >= s.n_channels) fail(ErrorKind::spec, "discriminative channel " + std::to_string(c) + " out of range");
      if (!seen.insert(c).second) fail(ErrorKind::spec, "discriminative channel sets must be disjoint");
    }
}

inline constexpr double kPreCueMs = 2500.0;
inline constexpr double kBlockMs = 9000.0;

/// Suppression profile in [0, 1] at `ms` after the cue.
inline double suppression(double ms) {
  auto rise = [](double u) { return 0.5 - 0.5 * std::cos(std::numbers::pi * u); };
  if (ms < 0.0 || ms >= 5300.0) return 0.0;
  if (ms < 300.0) return rise(ms / 300.0);
  if (ms < 5000.0) return 1.0;
  return 1.0 - rise((ms - 5000.0) / 300.0);
}

struct SynthResult {
  Recording recording;
  SynthSpec ground_truth;
};

inline SynthResult generate(const SynthSpec& spec) {
  validate(spec);
  const int n_trials = 2 * spec.n_trials_per_class;
  const auto block = static_cast<Eigen::Index>(std::llround(kBlockMs / 1000.0 * spec.fs));
  const auto pre = static_cast<Eigen::Index>(std::llround(kPreCueMs / 1000.0 * spec.fs));
  const Eigen::Index n_samples = block * n_trials;

  Rng carrier_rng(derive_seed(spec.seed, "synth/carrier"));
  std::vector<double> freq(static_cast<std::size_t>(spec.n_channels)), phase(freq.size());
  for (std::size_t c = 0; c < freq.size(); ++c) {
    freq[c] = spec.carrier_hz + carrier_rng.uniform(-0.5, 0.5);
    phase[c] = carrier_rng.uniform(0.0, 2.0 * std::numbers::pi);
  }

  std::vector<int> classes(static_cast<std::size_t>(n_trials));
  for (int i = 0; i < n_trials; ++i) classes[static_cast<std::size_t>(i)] = i < spec.n_trials_per_class ? 0 : 1;
  Rng order_rng(derive_seed(spec.seed, "synth/order"));
  const auto perm = order_rng.permutation(classes.size());

  Recording rec;
  rec.fs = spec.fs;
  rec.channel_names = channel_names(static_cast<std::size_t>(spec.n_channels));
  rec.samples.resize(n_samples, spec.n_channels);
  std::vector<double> gain(static_cast<std::size_t>(n_samples), 1.0);
  std::vector<int> sample_class(static_cast<std::size_t>(n_samples), -1);
  for (int tr = 0; tr < n_trials; ++tr) {
    const int cls = classes[perm[static_cast<std::size_t>(tr)]];
    const Eigen::Index cue = tr * block + pre;
    rec.markers.push_back({cue, cls});
    for (Eigen::Index s = tr * block; s < (tr + 1) * block; ++s) {
      const double ms = static_cast<double>(s - cue) * 1000.0 / spec.fs;
      gain[static_cast<std::size_t>(s)] = 1.0 - spec.modulation_depth * suppression(ms);
      sample_class[static_cast<std::size_t>(s)] = cls;
    }
  }

  std::vector<char> is_disc[2];
  for (int k = 0; k < 2; ++k) {
    is_disc[k].assign(static_cast<std::size_t>(spec.n_channels), 0);
    for (int c : spec.discriminative[k]) is_disc[k][static_cast<std::size_t>(c)] = 1;
  }

  Rng noise_rng(derive_seed(spec.seed, "synth/noise"));
  for (Eigen::Index s = 0; s < n_samples; ++s) {
    const double t = static_cast<double>(s) / spec.fs;
    const int cls = sample_class[static_cast<std::size_t>(s)];
    for (int c = 0; c < spec.n_channels; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      const double g = is_disc[cls][cu] ? gain[static_cast<std::size_t>(s)] : 1.0;
      const double carrier = std::sin(2.0 * std::numbers::pi * freq[cu] * t + phase[cu]);
      rec.samples(s, c) = g * carrier + spec.noise_sigma * noise_rng.normal();
    }
  }
  rec.meta["generator"] = "lrpeeg-synth";
  rec.meta["seed"] = spec.seed;
  rec.meta["modulation_depth"] = spec.modulation_depth;
  rec.meta["noise_sigma"] = spec.noise_sigma;
  rec.meta["discriminative"] = {spec.discriminative[0], spec.discriminative[1]};
  return {std::move(rec), spec};
}

}  // namespace lrpeeg::synth
