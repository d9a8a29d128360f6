#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "lrpeeg/types.hpp"

namespace lrpeeg::dsp {

/// Maps any integer index onto [0, n) by whole-sample mirror reflection
/// about the end points (x[-1] = x[1], x[n] = x[n-2]).
inline Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

inline std::vector<double> hamming(int n_taps) {
  std::vector<double> w(static_cast<std::size_t>(n_taps));
  if (n_taps == 1) {
    w[0] = 1.0;
    return w;
  }
  // mirrored so the window is exactly symmetric
  for (int i = 0; i <= (n_taps - 1) / 2; ++i) {
    const double v = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n_taps - 1));
    w[static_cast<std::size_t>(i)] = v;
    w[static_cast<std::size_t>(n_taps - 1 - i)] = v;
  }
  return w;
}

/// Ideal lowpass impulse response 2 fc sinc(2 fc m), fc in cycles/sample.
inline double ideal_lowpass(double fc, double m) {
  if (m == 0.0) return 2.0 * fc;
  return std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
}

/// Magnitude of the taps' DTFT at freq_hz; the filter is treated as centered
/// (zero phase), so this is the real amplitude response up to sign.
inline double frequency_response(const std::vector<double>& taps, double freq_hz, double fs) {
  const double half = (static_cast<double>(taps.size()) - 1.0) / 2.0;
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const double phase = -2.0 * std::numbers::pi * freq_hz / fs * (static_cast<double>(k) - half);
    acc += taps[k] * std::polar(1.0, phase);
  }
  return std::abs(acc);
}

/// Hamming-windowed sinc lowpass with unit DC gain.
inline std::vector<double> design_lowpass(int n_taps, double cutoff_hz, double fs) {
  if (n_taps < 1 || n_taps % 2 == 0) fail(ErrorKind::spec, "n_taps must be a positive odd integer");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs / 2.0)) fail(ErrorKind::spec, "lowpass cutoff must lie in (0, fs/2)");
  const auto w = hamming(n_taps);
  const double half = (n_taps - 1) / 2.0;
  std::vector<double> h(static_cast<std::size_t>(n_taps));
  double sum = 0.0;
  for (int k = 0; k < n_taps; ++k) {
    h[static_cast<std::size_t>(k)] = ideal_lowpass(cutoff_hz / fs, k - half) * w[static_cast<std::size_t>(k)];
    sum += h[static_cast<std::size_t>(k)];
  }
  for (auto& v : h) v /= sum;
  return h;
}

struct BandpassSpec {
  double low_hz = 9.0;
  double high_hz = 13.0;
  int n_taps = 201;
};

inline void validate(const BandpassSpec& spec, double fs) {
  if (!(spec.low_hz > 0.0) || !(spec.low_hz < spec.high_hz) || !(spec.high_hz < fs / 2.0))
    fail(ErrorKind::spec, "band [" + std::to_string(spec.low_hz) + ", " + std::to_string(spec.high_hz) +
                              "] Hz must satisfy 0 < low < high < fs/2 = " + std::to_string(fs / 2.0));
  if (spec.n_taps < 3 || spec.n_taps % 2 == 0) fail(ErrorKind::spec, "n_taps must be an odd integer >= 3");
}

/// Default tap count for a bandpass at fs: 2*fs+1 (201 at 100 Hz).
inline int default_bandpass_taps(double fs) { return 2 * static_cast<int>(std::lround(fs)) + 1; }

/// Band edges of the designed filter. The nominal band [low, high] is the
/// passband; the -6 dB cutoffs sit `guard` Hz outside it, in the middle of
/// the 2 Hz transition zone.
inline std::pair<double, double> bandpass_cutoffs(const BandpassSpec& spec, double fs) {
  const double guard = std::min({1.0, spec.low_hz / 2.0, (fs / 2.0 - spec.high_hz) / 2.0});
  return {spec.low_hz - guard, spec.high_hz + guard};
}

/// Hamming-windowed sinc bandpass, normalized to unit gain at band center.
inline std::vector<double> design_bandpass(const BandpassSpec& spec, double fs) {
  validate(spec, fs);
  const auto [lo, hi] = bandpass_cutoffs(spec, fs);
  const auto w = hamming(spec.n_taps);
  const double half = (spec.n_taps - 1) / 2.0;
  std::vector<double> h(static_cast<std::size_t>(spec.n_taps));
  for (int k = 0; k < spec.n_taps; ++k) {
    const double m = k - half;
    h[static_cast<std::size_t>(k)] = (ideal_lowpass(hi / fs, m) - ideal_lowpass(lo / fs, m)) * w[static_cast<std::size_t>(k)];
  }
  const double gain = frequency_response(h, 0.5 * (spec.low_hz + spec.high_hz), fs);
  for (auto& v : h) v /= gain;
  return h;
}

/// Zero-phase FIR application along columns: the (n_taps-1)/2 group delay is
/// compensated and the input is extended by mirror reflection, so the output
/// has the input's length. Taps are assumed symmetric.
inline Matrix filter_columns(const Matrix& x, const std::vector<double>& taps) {
  const Eigen::Index n = x.rows();
  const auto half = static_cast<Eigen::Index>((taps.size() - 1) / 2);
  Matrix y(n, x.cols());
  if (n == 0) return y;
  std::vector<double> padded(static_cast<std::size_t>(n + 2 * half));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index i = 0; i < n + 2 * half; ++i)
      padded[static_cast<std::size_t>(i)] = x(reflect_index(i - half, n), c);
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      const double* p = padded.data() + i;
      for (std::size_t k = 0; k < taps.size(); ++k) acc += taps[k] * p[k];
      y(i, c) = acc;
    }
  }
  return y;
}

inline Recording bandpass(const Recording& rec, const BandpassSpec& spec) {
  const auto taps = design_bandpass(spec, rec.fs);
  Recording out = rec;
  out.samples = filter_columns(rec.samples, taps);
  return out;
}

/// Integer-factor decimation. A factor of 1 returns the input unchanged;
/// otherwise a Hamming-windowed sinc lowpass with cutoff 0.4*target_fs and
/// 16k+1 taps runs zero-phase before every k-th sample is kept.
inline Recording decimate(const Recording& rec, double target_fs) {
  if (!(target_fs > 0.0)) fail(ErrorKind::unsupported_rate, "target rate must be positive");
  const double ratio = rec.fs / target_fs;
  const auto k = static_cast<Eigen::Index>(std::llround(ratio));
  if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-9 * ratio)
    fail(ErrorKind::unsupported_rate, "source rate " + std::to_string(rec.fs) + " Hz is not an integer multiple of " +
                                          std::to_string(target_fs) + " Hz");
  if (k == 1) return rec;
  const auto taps = design_lowpass(static_cast<int>(16 * k + 1), 0.8 * target_fs / 2.0, rec.fs);
  const Matrix filtered = filter_columns(rec.samples, taps);
  Recording out;
  out.fs = target_fs;
  out.channel_names = rec.channel_names;
  out.meta = rec.meta;
  const Eigen::Index n_out = (rec.n_samples() + k - 1) / k;
  out.samples.resize(n_out, rec.n_channels());
  for (Eigen::Index i = 0; i < n_out; ++i) out.samples.row(i) = filtered.row(i * k);
  out.markers.reserve(rec.markers.size());
  for (const auto& m : rec.markers) out.markers.push_back({m.sample / k, m.label});
  return out;
}

inline Eigen::Index ms_to_samples(double ms, double fs) {
  return static_cast<Eigen::Index>(std::llround(ms / 1000.0 * fs));
}

/// Cuts [start_ms, end_ms] (inclusive) around every marker whose label is in
/// `classes`. classes[k] becomes normalized label k; with an empty list the
/// sorted distinct marker labels are used (at most two).
inline EpochSet extract_epochs(const Recording& rec, std::pair<double, double> window_ms, std::vector<int> classes = {}) {
  const auto [start_ms, end_ms] = window_ms;
  if (!(end_ms > start_ms)) fail(ErrorKind::spec, "epoch window end must exceed start");
  if (classes.empty()) {
    for (const auto& m : rec.markers)
      if (std::find(classes.begin(), classes.end(), m.label) == classes.end()) classes.push_back(m.label);
    std::sort(classes.begin(), classes.end());
  }
  if (classes.size() > 2) fail(ErrorKind::validation, "expected at most two classes, found " + std::to_string(classes.size()));

  const Eigen::Index offset = ms_to_samples(start_ms, rec.fs);
  const Eigen::Index n_tp = ms_to_samples(end_ms - start_ms, rec.fs) + 1;

  EpochSet ep;
  ep.fs = rec.fs;
  ep.channel_names = rec.channel_names;
  ep.class_values = classes;
  ep.meta = rec.meta;
  ep.meta["window_ms"] = {start_ms, end_ms};
  for (Eigen::Index i = 0; i < n_tp; ++i) ep.time_axis_ms.push_back(start_ms + static_cast<double>(i) * 1000.0 / rec.fs);

  std::vector<std::size_t> bad;
  std::size_t trial = 0;
  for (const auto& m : rec.markers) {
    auto it = std::find(classes.begin(), classes.end(), m.label);
    if (it == classes.end()) continue;
    const Eigen::Index first = m.sample + offset;
    if (first < 0 || first + n_tp > rec.n_samples()) {
      bad.push_back(trial++);
      continue;
    }
    ep.trials.push_back(rec.samples.middleRows(first, n_tp));
    ep.labels.push_back(static_cast<int>(it - classes.begin()));
    ++trial;
  }
  if (!bad.empty()) {
    std::string list;
    for (auto b : bad) list += (list.empty() ? "" : ", ") + std::to_string(b);
    fail(ErrorKind::epoch_range, "window [" + std::to_string(start_ms) + ", " + std::to_string(end_ms) +
                                     "] ms exceeds the recording for trials " + list);
  }
  return ep;
}

namespace detail {

// FFTW planning is not thread-safe; execution with new-array execute is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPair {
 public:
  explicit FftPair(int n) : n_(n) {
    in_ = fftw_alloc_complex(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n));
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_1d(n, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(n, out_, in_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;
  ~FftPair() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(in_);
    fftw_free(out_);
  }

  /// |analytic signal| of the real sequence x (length n).
  void analytic_magnitude(const std::vector<double>& x, std::vector<double>& mag) {
    for (int i = 0; i < n_; ++i) {
      in_[i][0] = x[static_cast<std::size_t>(i)];
      in_[i][1] = 0.0;
    }
    fftw_execute(forward_);
    // Keep DC (and Nyquist for even n), double positive frequencies, zero the rest.
    const int half = n_ / 2;
    for (int k = 1; k < n_; ++k) {
      double g = 0.0;
      if (k < (n_ + 1) / 2) g = 2.0;
      else if (n_ % 2 == 0 && k == half) g = 1.0;
      out_[k][0] *= g;
      out_[k][1] *= g;
    }
    fftw_execute(backward_);
    mag.resize(static_cast<std::size_t>(n_));
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) mag[static_cast<std::size_t>(i)] = std::hypot(in_[i][0], in_[i][1]) * scale;
  }

 private:
  int n_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan forward_;
  fftw_plan backward_;
};

/// Fills `padded` (length n + 2 pad) with x and `pad` extrapolated samples
/// per side. The extrapolation is a forward-backward least-squares linear
/// predictor of order kEnvelopeOrder, which continues narrow-band signals
/// without the derivative kink of mirror padding. Falls back to mirror
/// reflection for short segments or a predictor that grows.
inline constexpr Eigen::Index kEnvelopeOrder = 10;

inline void extend_for_envelope(const Vector& x, Eigen::Index pad, std::vector<double>& padded) {
  const Eigen::Index n = x.size();
  const Eigen::Index p = kEnvelopeOrder;
  padded.assign(static_cast<std::size_t>(n + 2 * pad), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) padded[static_cast<std::size_t>(i + pad)] = x(i);
  auto mirror = [&] {
    for (Eigen::Index i = 0; i < pad; ++i) {
      padded[static_cast<std::size_t>(i)] = x(reflect_index(i - pad, n));
      padded[static_cast<std::size_t>(n + pad + i)] = x(reflect_index(n + i, n));
    }
  };
  const double peak = x.cwiseAbs().maxCoeff();
  if (n < 4 * p || peak == 0.0) return mirror();

  // Rows predict x[i] from x[i-1..i-p], forward and time-reversed.
  const Eigen::Index rows = 2 * (n - p);
  Matrix a(rows, p);
  Vector b(rows);
  for (Eigen::Index i = p; i < n; ++i) {
    const Eigen::Index f = i - p, r = n - p + (i - p);
    b(f) = x(i);
    b(r) = x(n - 1 - i);
    for (Eigen::Index k = 0; k < p; ++k) {
      a(f, k) = x(i - 1 - k);
      a(r, k) = x(n - i + k);
    }
  }
  const Vector coef = a.completeOrthogonalDecomposition().solve(b);

  std::vector<double> hist(static_cast<std::size_t>(p));
  auto run = [&](auto sample, auto put) {
    for (Eigen::Index k = 0; k < p; ++k) hist[static_cast<std::size_t>(k)] = sample(k);  // newest first
    for (Eigen::Index i = 0; i < pad; ++i) {
      double v = 0.0;
      for (Eigen::Index k = 0; k < p; ++k) v += coef(k) * hist[static_cast<std::size_t>(k)];
      if (!std::isfinite(v) || std::abs(v) > 4.0 * peak) return false;
      std::rotate(hist.rbegin(), hist.rbegin() + 1, hist.rend());
      hist[0] = v;
      put(i, v);
    }
    return true;
  };
  const bool ok =
      run([&](Eigen::Index k) { return x(n - 1 - k); },
          [&](Eigen::Index i, double v) { padded[static_cast<std::size_t>(n + pad + i)] = v; }) &&
      run([&](Eigen::Index k) { return x(k); }, [&](Eigen::Index i, double v) { padded[static_cast<std::size_t>(pad - 1 - i)] = v; });
  if (!ok) mirror();
}

}  // namespace detail

/// Instantaneous amplitude of one column: |analytic signal| of the segment
/// extended by n/2 predicted samples per side, padding discarded afterwards.
inline Vector envelope(const Vector& x) {
  const Eigen::Index n = x.size();
  if (n == 0) return x;
  const Eigen::Index pad = n / 2;
  detail::FftPair fft(static_cast<int>(n + 2 * pad));
  std::vector<double> padded, mag;
  detail::extend_for_envelope(x, pad, padded);
  fft.analytic_magnitude(padded, mag);
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = mag[static_cast<std::size_t>(i + pad)];
  return out;
}

inline EpochSet envelope(const EpochSet& ep) {
  EpochSet out = ep;
  const Eigen::Index n = ep.n_timepoints();
  if (n == 0) return out;
  const Eigen::Index pad = n / 2;
  detail::FftPair fft(static_cast<int>(n + 2 * pad));
  std::vector<double> padded, mag;
  for (auto& trial : out.trials) {
    for (Eigen::Index c = 0; c < trial.cols(); ++c) {
      detail::extend_for_envelope(trial.col(c), pad, padded);
      fft.analytic_magnitude(padded, mag);
      for (Eigen::Index i = 0; i < n; ++i) trial(i, c) = mag[static_cast<std::size_t>(i + pad)];
    }
  }
  return out;
}

/// Subtracts, per trial and channel, the mean of the matching baseline epoch.
inline EpochSet baseline_subtract(const EpochSet& ep, const EpochSet& baseline) {
  if (ep.n_trials() != baseline.n_trials())
    fail(ErrorKind::shape, "epoch set has " + std::to_string(ep.n_trials()) + " trials, baseline has " +
                               std::to_string(baseline.n_trials()));
  if (ep.n_channels() != baseline.n_channels())
    fail(ErrorKind::shape, "epoch set has " + std::to_string(ep.n_channels()) + " channels, baseline has " +
                               std::to_string(baseline.n_channels()));
  if (baseline.n_timepoints() == 0) fail(ErrorKind::shape, "baseline window is empty");
  EpochSet out = ep;
  for (std::size_t t = 0; t < ep.n_trials(); ++t) {
    const Eigen::RowVectorXd mean = baseline.trials[t].colwise().mean();
    out.trials[t].rowwise() -= mean;
  }
  return out;
}

}  // namespace lrpeeg::dsp
