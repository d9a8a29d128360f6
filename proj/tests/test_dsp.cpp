#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lrpeeg/dsp.hpp"
#include "lrpeeg/rng.hpp"
#include "oracles.hpp"

using namespace lrpeeg;

namespace {

constexpr double kPi = std::numbers::pi;

Recording sine_recording(double freq, double fs, double seconds, double amp = 1.0) {
  Recording rec;
  rec.fs = fs;
  rec.channel_names = {"Cz"};
  const auto n = static_cast<Eigen::Index>(std::llround(seconds * fs));
  rec.samples.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) rec.samples(i, 0) = amp * std::sin(2.0 * kPi * freq * static_cast<double>(i) / fs);
  return rec;
}

double rms(const Eigen::Ref<const Vector>& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::usage;
}

EpochSet single_column_epochs(const Vector& x, double fs) {
  EpochSet ep;
  ep.fs = fs;
  ep.channel_names = {"Cz"};
  for (Eigen::Index i = 0; i < x.size(); ++i) ep.time_axis_ms.push_back(1000.0 * static_cast<double>(i) / fs);
  ep.trials = {x};
  ep.labels = {0};
  return ep;
}

}  // namespace

TEST(Reflect, MirrorsWithoutRepeatingEndpoints) {
  EXPECT_EQ(dsp::reflect_index(-1, 5), 1);
  EXPECT_EQ(dsp::reflect_index(-2, 5), 2);
  EXPECT_EQ(dsp::reflect_index(5, 5), 3);
  EXPECT_EQ(dsp::reflect_index(6, 5), 2);
  EXPECT_EQ(dsp::reflect_index(3, 5), 3);
  EXPECT_EQ(dsp::reflect_index(-7, 1), 0);
  for (Eigen::Index i = -40; i < 40; ++i) {
    const auto r = dsp::reflect_index(i, 4);
    EXPECT_GE(r, 0);
    EXPECT_LT(r, 4);
  }
}

TEST(Bandpass, DefaultTapsAt100Hz) { EXPECT_EQ(dsp::default_bandpass_taps(100.0), 201); }

TEST(Bandpass, PassbandRippleAndStopbandOnDenseGrid) {
  const double fs = 100.0;
  const auto taps = dsp::design_bandpass({9.0, 13.0, 201}, fs);
  double pass_lo = 1e9, pass_hi = 0.0, stop_max = 0.0;
  for (int k = 0; k <= 1024; ++k) {
    const double f = fs / 2.0 * k / 1024.0;
    const double a = oracle::dtft_amplitude(taps, f, fs);
    if (f >= 9.0 && f <= 13.0) {
      pass_lo = std::min(pass_lo, a);
      pass_hi = std::max(pass_hi, a);
    }
    if (f <= 7.0 || f >= 15.0) stop_max = std::max(stop_max, a);
  }
  EXPECT_LT(20.0 * std::log10(pass_hi / pass_lo), 1.0);
  EXPECT_LT(20.0 * std::log10(stop_max / pass_hi), -40.0);
}

TEST(Bandpass, ResponseMatchesIndependentDtft) {
  const auto taps = dsp::design_bandpass({9.0, 13.0, 201}, 100.0);
  for (double f : {0.0, 3.3, 9.0, 11.0, 13.0, 20.0, 49.9})
    EXPECT_NEAR(dsp::frequency_response(taps, f, 100.0), oracle::dtft_amplitude(taps, f, 100.0), 1e-12);
}

TEST(Bandpass, TapsAreSymmetric) {
  const auto taps = dsp::design_bandpass({9.0, 13.0, 201}, 100.0);
  for (std::size_t k = 0; k < taps.size(); ++k) EXPECT_DOUBLE_EQ(taps[k], taps[taps.size() - 1 - k]);
}

TEST(Bandpass, InBandSinePreserved) {
  const auto rec = sine_recording(11.0, 100.0, 20.0);
  const auto out = dsp::bandpass(rec, {9.0, 13.0, 201});
  ASSERT_EQ(out.n_samples(), rec.n_samples());
  const Vector mid = out.samples.col(0).segment(300, 1400);
  EXPECT_NEAR(rms(mid) * std::sqrt(2.0), 1.0, 0.05);
  // zero phase: output follows the input sample for sample
  EXPECT_LT((mid - rec.samples.col(0).segment(300, 1400)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Bandpass, OutOfBandSineAttenuated) {
  const auto rec = sine_recording(2.0, 100.0, 20.0);
  const auto out = dsp::bandpass(rec, {9.0, 13.0, 201});
  const Vector mid = out.samples.col(0).segment(300, 1400);
  EXPECT_LT(20.0 * std::log10(rms(mid) * std::sqrt(2.0)), -40.0);
}

TEST(Bandpass, Linearity) {
  Rng rng(5);
  Recording a, b;
  a.fs = b.fs = 100.0;
  a.channel_names = b.channel_names = {"C3", "C4"};
  a.samples.resize(500, 2);
  b.samples.resize(500, 2);
  for (Eigen::Index i = 0; i < a.samples.size(); ++i) {
    a.samples.data()[i] = rng.normal();
    b.samples.data()[i] = rng.normal();
  }
  const double alpha = 1.7, beta = -0.4;
  Recording mix = a;
  mix.samples = alpha * a.samples + beta * b.samples;
  const dsp::BandpassSpec spec{9.0, 13.0, 201};
  const Matrix lhs = dsp::bandpass(mix, spec).samples;
  const Matrix rhs = alpha * dsp::bandpass(a, spec).samples + beta * dsp::bandpass(b, spec).samples;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Bandpass, InvalidSpecsRejected) {
  EXPECT_EQ(kind_of([] { dsp::design_bandpass({13.0, 9.0, 201}, 100.0); }), ErrorKind::spec);
  EXPECT_EQ(kind_of([] { dsp::design_bandpass({9.0, 60.0, 201}, 100.0); }), ErrorKind::spec);
  EXPECT_EQ(kind_of([] { dsp::design_bandpass({9.0, 13.0, 200}, 100.0); }), ErrorKind::spec);
}

TEST(Decimate, SlowSineSurvives1000To100) {
  const auto rec = sine_recording(2.0, 1000.0, 10.0);
  const auto out = dsp::decimate(rec, 100.0);
  EXPECT_EQ(out.fs, 100.0);
  ASSERT_EQ(out.n_samples(), 1000);
  double max_err = 0.0;
  for (Eigen::Index i = 100; i < 900; ++i)
    max_err = std::max(max_err, std::abs(out.samples(i, 0) - std::sin(2.0 * kPi * 2.0 * static_cast<double>(i) / 100.0)));
  EXPECT_LT(max_err, 0.01);
}

TEST(Decimate, AliasingComponentSuppressed) {
  // 93 Hz at 1000 Hz would fold onto 7 Hz after naive subsampling to 100 Hz.
  const auto rec = sine_recording(93.0, 1000.0, 10.0);
  const auto out = dsp::decimate(rec, 100.0);
  EXPECT_LT(rms(out.samples.col(0).segment(100, 800)), 0.01);
}

TEST(Decimate, MarkersFloorDivided) {
  auto rec = sine_recording(2.0, 1000.0, 1.0);
  rec.markers = {{0, 1}, {9, 1}, {10, 2}, {999, 1}};
  const auto out = dsp::decimate(rec, 100.0);
  ASSERT_EQ(out.markers.size(), 4u);
  EXPECT_EQ(out.markers[1].sample, 0);
  EXPECT_EQ(out.markers[2].sample, 1);
  EXPECT_EQ(out.markers[3].sample, 99);
}

TEST(Decimate, FactorOneIsPassThrough) {
  const auto rec = sine_recording(7.0, 100.0, 2.0);
  EXPECT_TRUE(dsp::decimate(rec, 100.0).samples == rec.samples);
}

TEST(Decimate, NonIntegerRatioRejected) {
  const auto rec = sine_recording(2.0, 250.0, 1.0);
  EXPECT_EQ(kind_of([&] { dsp::decimate(rec, 100.0); }), ErrorKind::unsupported_rate);
  EXPECT_EQ(kind_of([&] { dsp::decimate(rec, 1000.0); }), ErrorKind::unsupported_rate);
}

TEST(Epochs, WindowHas301Timepoints) {
  Recording rec;
  rec.fs = 100.0;
  rec.channel_names = {"C3", "C4"};
  rec.samples = Matrix::Zero(2000, 2);
  for (Eigen::Index i = 0; i < 2000; ++i) rec.samples(i, 0) = static_cast<double>(i);
  rec.markers = {{100, 1}, {500, 2}, {900, 1}};
  const auto ep = dsp::extract_epochs(rec, {1000.0, 4000.0});
  ASSERT_EQ(ep.n_trials(), 3u);
  EXPECT_EQ(ep.n_timepoints(), 301);
  EXPECT_EQ(ep.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(ep.class_values, (std::vector<int>{1, 2}));
  EXPECT_EQ(ep.trials[1](0, 0), 600.0);
  EXPECT_EQ(ep.trials[1](300, 0), 900.0);
  EXPECT_DOUBLE_EQ(ep.time_axis_ms.front(), 1000.0);
  EXPECT_DOUBLE_EQ(ep.time_axis_ms.back(), 4000.0);
}

TEST(Epochs, OutOfRangeTrialsListed) {
  Recording rec;
  rec.fs = 100.0;
  rec.channel_names = {"C3"};
  rec.samples = Matrix::Zero(1000, 1);
  rec.markers = {{10, 1}, {500, 1}, {900, 1}};
  try {
    dsp::extract_epochs(rec, {-300.0, 4000.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::epoch_range);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("trials 0, 2"), std::string::npos) << msg;
  }
}

TEST(Epochs, ClassFilterSelectsMarkers) {
  Recording rec;
  rec.fs = 100.0;
  rec.channel_names = {"C3"};
  rec.samples = Matrix::Zero(1000, 1);
  rec.markers = {{100, 3}, {200, 4}, {300, 5}};
  const auto ep = dsp::extract_epochs(rec, {0.0, 100.0}, {5, 3});
  EXPECT_EQ(ep.labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(kind_of([&] { dsp::extract_epochs(rec, {0.0, 100.0}); }), ErrorKind::validation);
}

TEST(Envelope, ConstantAmplitudeSine) {
  const double fs = 100.0;
  Vector x(301);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 2.5 * std::sin(2.0 * kPi * 11.0 * static_cast<double>(i) / fs + 0.3);
  const Vector env = dsp::envelope(x).segment(30, 241);  // central 80%
  EXPECT_LT((env.array() - 2.5).abs().maxCoeff() / 2.5, 0.02);
}

TEST(Envelope, TracksSlowAmplitudeModulation) {
  const double fs = 100.0;
  Vector x(301), a(301);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / fs;
    a(i) = 1.0 + 0.5 * std::sin(2.0 * kPi * 0.5 * t);
    x(i) = a(i) * std::sin(2.0 * kPi * 11.0 * t);
  }
  const Vector env = dsp::envelope(x);
  // away from the edges
  const Eigen::Index lo = 20, n = 261;
  EXPECT_LT(((env.segment(lo, n) - a.segment(lo, n)).array().abs() / a.segment(lo, n).array()).maxCoeff(), 0.05);
}

TEST(Envelope, EpochVersionMatchesColumnVersion) {
  Rng rng(9);
  const Vector x = oracle::random_vector(120, rng);
  const auto ep = dsp::envelope(single_column_epochs(x, 100.0));
  EXPECT_LT((ep.trials[0].col(0) - dsp::envelope(x)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Envelope, NonNegative) {
  Rng rng(10);
  for (Eigen::Index n : {1, 2, 7, 64, 301}) {
    const Vector env = dsp::envelope(oracle::random_vector(n, rng));
    EXPECT_GE(env.minCoeff(), 0.0);
  }
}

TEST(Baseline, ConstantOffsetRemoved) {
  Vector x = Vector::Constant(50, 3.0);
  x.tail(25).array() += 1.0;
  const auto ep = single_column_epochs(x, 100.0);
  const auto base = single_column_epochs(Vector::Constant(10, 3.0), 100.0);
  const auto out = dsp::baseline_subtract(ep, base);
  EXPECT_DOUBLE_EQ(out.trials[0](0, 0), 0.0);
  EXPECT_DOUBLE_EQ(out.trials[0](49, 0), 1.0);
}

TEST(Baseline, ZeroBaselineIsIdentity) {
  Rng rng(1);
  const auto ep = single_column_epochs(oracle::random_vector(30, rng), 100.0);
  const auto out = dsp::baseline_subtract(ep, single_column_epochs(Vector::Zero(5), 100.0));
  EXPECT_TRUE(out.trials[0] == ep.trials[0]);
}

TEST(Baseline, ShapeMismatchRejected) {
  const auto ep = single_column_epochs(Vector::Zero(30), 100.0);
  auto base = ep;
  base.trials.push_back(base.trials[0]);
  base.labels.push_back(0);
  EXPECT_EQ(kind_of([&] { dsp::baseline_subtract(ep, base); }), ErrorKind::shape);
  base = ep;
  base.channel_names.push_back("C3");
  base.trials[0] = Matrix::Zero(30, 2);
  EXPECT_EQ(kind_of([&] { dsp::baseline_subtract(ep, base); }), ErrorKind::shape);
}
