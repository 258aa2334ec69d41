// Copyright 2026 The kwsep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "helpers.hpp"
#include "kwsep/audio/lfbe.hpp"
#include "kwsep/audio/wav.hpp"
#include "kwsep/data/synth.hpp"

using namespace kwsep;
using namespace kwsep::audio;

namespace {

void put_le(std::string& s, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

// Minimal hand-rolled RIFF writer, independent of write_wav.
std::string wav_bytes(int channels, int bits, int format, const std::vector<std::int16_t>& samples) {
  std::string data;
  for (auto s : samples) put_le(data, static_cast<std::uint16_t>(s), bits / 8);
  std::string out = "RIFF";
  put_le(out, static_cast<std::uint32_t>(36 + data.size()), 4);
  out += "WAVEfmt ";
  put_le(out, 16, 4);
  put_le(out, format, 2);
  put_le(out, channels, 2);
  put_le(out, 16000, 4);
  put_le(out, 16000 * channels * bits / 8, 4);
  put_le(out, channels * bits / 8, 2);
  put_le(out, bits, 2);
  out += "data";
  put_le(out, static_cast<std::uint32_t>(data.size()), 4);
  return out + data;
}

std::filesystem::path write_bytes(const std::filesystem::path& dir, const std::string& name, const std::string& b) {
  auto p = dir / name;
  std::ofstream(p, std::ios::binary) << b;
  return p;
}

// Direct-DFT LFBE written from the definition: symmetric Hann window, zero
// padding to fft_size, |X_k|^2, triangular filters on the HTK mel scale
// (2595 log10(1 + f/700)), natural log with a floor.
std::vector<std::vector<double>> oracle_lfbe(const std::vector<float>& x, int sr, int frame, int hop, int nfft,
                                             int n_mels, double fmin, double fmax, double floor) {
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  const double lo = mel(fmin), hi = mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = lo + (hi - lo) * i / (n_mels + 1);
  std::vector<std::vector<double>> out;
  for (std::size_t start = 0; start + frame <= x.size(); start += hop) {
    std::vector<double> power(nfft / 2 + 1);
    for (int k = 0; k <= nfft / 2; ++k) {
      std::complex<double> acc = 0;
      for (int n = 0; n < frame; ++n) {
        const double w = 0.5 * (1 - std::cos(2 * std::numbers::pi * n / (frame - 1)));
        acc += x[start + n] * w * std::polar(1.0, -2 * std::numbers::pi * k * n / nfft);
      }
      power[k] = std::norm(acc);
    }
    std::vector<double> row(n_mels);
    for (int m = 0; m < n_mels; ++m) {
      double e = 0;
      for (int k = 0; k <= nfft / 2; ++k) {
        const double z = mel(static_cast<double>(k) * sr / nfft);
        double w = 0;
        if (z > edges[m] && z <= edges[m + 1]) w = (z - edges[m]) / (edges[m + 1] - edges[m]);
        else if (z > edges[m + 1] && z < edges[m + 2]) w = (edges[m + 2] - z) / (edges[m + 2] - edges[m + 1]);
        e += w * power[k];
      }
      row[m] = std::log(std::max(e, floor));
    }
    out.push_back(row);
  }
  return out;
}

AudioClip sine(double hz, double seconds, double amp = 0.5) {
  AudioClip c;
  c.samples.resize(static_cast<std::size_t>(seconds * c.sample_rate));
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    c.samples[i] = static_cast<float>(amp * std::sin(2 * std::numbers::pi * hz * i / c.sample_rate));
  }
  return c;
}

}  // namespace

TEST_SUITE("audio") {

TEST_CASE("one second of digital silence reads back as 16000 zero samples") {
  auto dir = test::scratch_dir("wav");
  auto p = write_bytes(dir, "silence.wav", wav_bytes(1, 16, 1, std::vector<std::int16_t>(16000, 0)));
  auto clip = read_wav(p);
  CHECK(clip.sample_rate == 16000);
  REQUIRE(clip.samples.size() == 16000);
  CHECK(std::all_of(clip.samples.begin(), clip.samples.end(), [](float s) { return s == 0.0f; }));
}

TEST_CASE("samples are scaled by 1/32768") {
  auto dir = test::scratch_dir("wav");
  auto p = write_bytes(dir, "v.wav", wav_bytes(1, 16, 1, {-32768, -16384, 0, 16384, 32767}));
  auto clip = read_wav(p);
  CHECK(clip.samples[0] == -1.0f);
  CHECK(clip.samples[1] == -0.5f);
  CHECK(clip.samples[3] == 0.5f);
  CHECK(clip.samples[4] == doctest::Approx(32767.0 / 32768.0));
}

TEST_CASE("a synthesized stream survives a WAV round trip within one quantization step") {
  data::SyntheticKeywordSpec spec;
  data::WindowConfig window;
  auto rec = data::synth_stream(spec, window, 11, true);
  auto dir = test::scratch_dir("wav");
  write_wav(dir / "s.wav", rec.audio);
  auto back = read_wav(dir / "s.wav");
  REQUIRE(back.samples.size() == rec.audio.samples.size());
  double worst = 0;
  for (std::size_t i = 0; i < back.samples.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(back.samples[i]) - rec.audio.samples[i]));
  }
  CHECK(worst <= 1.0 / 32768.0);
}

TEST_CASE("WAV failures carry distinct error codes") {
  auto dir = test::scratch_dir("wav");
  CHECK(test::error_code_of([&] { read_wav(dir / "missing.wav"); }) == ErrorCode::kMissingFile);
  auto stereo = write_bytes(dir, "stereo.wav", wav_bytes(2, 16, 1, {0, 0, 0, 0}));
  CHECK(test::error_code_of([&] { read_wav(stereo); }) == ErrorCode::kUnsupportedChannels);
  try {
    read_wav(stereo);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("unsupported channel count") != std::string::npos);
  }
  auto pcm8 = write_bytes(dir, "pcm8.wav", wav_bytes(1, 8, 1, {1, 2, 3}));
  CHECK(test::error_code_of([&] { read_wav(pcm8); }) == ErrorCode::kUnsupportedEncoding);
  auto fl = write_bytes(dir, "float.wav", wav_bytes(1, 16, 3, {1, 2, 3}));
  CHECK(test::error_code_of([&] { read_wav(fl); }) == ErrorCode::kUnsupportedEncoding);
  auto good = wav_bytes(1, 16, 1, std::vector<std::int16_t>(100, 7));
  auto truncated = write_bytes(dir, "trunc.wav", good.substr(0, good.size() - 50));
  CHECK(test::error_code_of([&] { read_wav(truncated); }) == ErrorCode::kMalformedFile);
  auto junk = write_bytes(dir, "junk.wav", "not a wav file at all");
  CHECK(test::error_code_of([&] { read_wav(junk); }) == ErrorCode::kMalformedFile);
}

TEST_CASE("silence gives 98 frames of log(log_floor)") {
  AudioClip c;
  c.samples.assign(16000, 0.0f);
  FeatureConfig cfg;
  REQUIRE(cfg.frame_samples(16000) == 400);
  REQUIRE(cfg.hop_samples(16000) == 160);
  auto f = lfbe(c, cfg);
  CHECK(f.n_frames == 98);
  CHECK(f.n_dims == 64);
  CHECK(f.origin_ms == 0.0);
  const float expect = static_cast<float>(std::log(cfg.log_floor));
  CHECK(std::all_of(f.values.begin(), f.values.end(), [&](float v) { return v == expect; }));
}

TEST_CASE("frame count follows floor((n - frame) / hop) + 1 for random lengths") {
  std::mt19937_64 rng(5);
  FeatureConfig cfg;
  for (int i = 0; i < 40; ++i) {
    const std::size_t n = 400 + rng() % 6000;
    AudioClip c;
    c.samples.assign(n, 0.01f);
    const int expect = static_cast<int>((n - 400) / 160) + 1;
    CHECK(frame_count(n, 400, 160) == expect);
    CHECK(lfbe(c, cfg).n_frames == expect);
  }
  CHECK(frame_count(399, 400, 160) == 0);
  AudioClip short_clip;
  short_clip.samples.assign(399, 0.0f);
  CHECK(test::error_code_of([&] { lfbe(short_clip, cfg); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("lfbe matches a direct-DFT filterbank oracle") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.0, 0.1);
  AudioClip c = sine(440.0, 0.25);
  for (auto& s : c.samples) s += static_cast<float>(noise(rng));
  FeatureConfig cfg;
  auto f = lfbe(c, cfg);
  auto o = oracle_lfbe(c.samples, 16000, 400, 160, 512, 64, cfg.mel_fmin_hz, cfg.mel_fmax_hz, cfg.log_floor);
  REQUIRE(static_cast<int>(o.size()) == f.n_frames);
  double worst = 0;
  for (int t = 0; t < f.n_frames; ++t) {
    for (int m = 0; m < 64; ++m) worst = std::max(worst, std::abs(f.at(t, m) - o[t][m]));
  }
  CHECK(worst < 1e-4);  // float32 output of log energies
}

TEST_CASE("a 1 kHz sine peaks in the mel bin whose center is nearest 1 kHz") {
  FeatureConfig cfg;
  auto c = sine(1000.0, 0.5);
  auto f = lfbe(c, cfg);
  auto centers = mel_center_frequencies(cfg);
  int nearest = 0;
  for (int m = 1; m < cfg.n_mels; ++m) {
    if (std::abs(centers[m] - 1000.0) < std::abs(centers[nearest] - 1000.0)) nearest = m;
  }
  auto o = oracle_lfbe(c.samples, 16000, 400, 160, 512, 64, cfg.mel_fmin_hz, cfg.mel_fmax_hz, cfg.log_floor);
  for (int t = 0; t < f.n_frames; ++t) {
    auto row = f.frame(t);
    const int arg = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    CHECK(arg == nearest);
    const int oracle_arg = static_cast<int>(std::max_element(o[t].begin(), o[t].end()) - o[t].begin());
    CHECK(oracle_arg == nearest);
  }
}

TEST_CASE("features are 64-dimensional by default") {
  auto f = lfbe(sine(300.0, 0.1), FeatureConfig{});
  CHECK(f.n_dims == 64);
}

TEST_CASE("silent padding shorter than a hop leaves the features unchanged") {
  auto c = sine(700.0, 0.3);
  c.samples.resize(400 + 160 * 27);  // ends exactly on a frame boundary
  auto padded = c;
  padded.samples.resize(c.samples.size() + 159, 0.0f);
  auto a = lfbe(c, FeatureConfig{});
  auto b = lfbe(padded, FeatureConfig{});
  CHECK(a.n_frames == b.n_frames);
  CHECK(a.values == b.values);
}

TEST_CASE("entries are finite and never below log(log_floor)") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  AudioClip c;
  c.samples.resize(8000);
  for (auto& s : c.samples) s = u(rng);
  c.samples[100] = 0;
  FeatureConfig cfg;
  auto f = lfbe(c, cfg);
  for (float v : f.values) {
    CHECK(std::isfinite(v));
    CHECK(v >= static_cast<float>(std::log(cfg.log_floor)));
  }
}

TEST_CASE("feature config validation names the field") {
  FeatureConfig cfg;
  cfg.fft_size = 300;
  try {
    cfg.validate(16000);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.key() == "features.fft_size");
  }
  cfg = {};
  cfg.fft_size = 256;  // 400-sample frame does not fit
  CHECK_THROWS_AS(cfg.validate(16000), ValidationError);
  cfg = {};
  cfg.mel_fmax_hz = 9000;
  CHECK_THROWS_AS(cfg.validate(16000), ValidationError);
}

TEST_CASE("normalize with unit stats is the identity") {
  auto f = lfbe(sine(500.0, 0.2), FeatureConfig{});
  FeatureStats s{std::vector<double>(64, 0.0), std::vector<double>(64, 1.0)};
  CHECK(normalize(f, s).values == f.values);
}

TEST_CASE("a constant dimension with matching mean normalizes to zero") {
  FeatureMatrix m;
  m.n_frames = 3;
  m.n_dims = 2;
  m.values = {5, 1, 5, 2, 5, 3};
  FeatureStats s{{5.0, 2.0}, {1.0, 1.0}};
  auto n = normalize(m, s);
  CHECK(n.values[0] == 0.0f);
  CHECK(n.values[2] == 0.0f);
  CHECK(n.values[4] == 0.0f);
  s.var[0] = 0.0;
  CHECK_THROWS_AS(normalize(m, s), Error);
}

TEST_CASE("normalized corpus recomputes to zero mean and unit variance") {
  std::vector<FeatureMatrix> corpus;
  for (int i = 0; i < 4; ++i) corpus.push_back(lfbe(sine(200.0 + 300 * i, 0.3, 0.1 + 0.2 * i), FeatureConfig{}));
  std::mt19937_64 rng(1);
  std::normal_distribution<float> noise(0.0f, 0.05f);
  for (auto& m : corpus) {
    for (auto& v : m.values) v += noise(rng);
  }
  auto stats = compute_stats(corpus);
  std::vector<FeatureMatrix> normed;
  for (const auto& m : corpus) normed.push_back(normalize(m, stats));
  auto again = compute_stats(normed);
  for (int d = 0; d < 64; ++d) {
    CHECK(std::abs(again.mean[d]) < 1e-6);
    CHECK(std::abs(again.var[d] - 1.0) < 1e-6);
  }
}

}  // TEST_SUITE
