// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "detsep/metrics.hpp"
#include "detsep/models.hpp"
#include "detsep/objectives.hpp"
#include "detsep/ops.hpp"
#include "detsep/rng.hpp"
#include "detsep/synth.hpp"

using namespace detsep;
using ad::Tensor;

namespace {

SeparatorConfig conditioned_config(FusionMethod fusion,
                                   ClueComposition comp, int clips) {
  SeparatorConfig cfg;
  cfg.fusion = fusion;
  cfg.composition = comp;
  cfg.audio_clips = clips;
  cfg.init_seed = 77;
  return cfg;
}

// Analytic/numeric gradient agreement over every model parameter, perturbing
// the raw parameter storage.
double model_param_grad_check(const std::function<Tensor()>& loss_fn,
                              std::vector<Tensor> params, double h = 1e-5) {
  for (auto& p : params) p.zero_grad();
  ad::backward(loss_fn());
  double worst = 0.0;
  for (auto& p : params) {
    const auto analytic = p.has_grad()
                              ? p.grad()
                              : std::vector<double>(p.values().size(), 0.0);
    auto& vals = p.mutable_values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      vals[i] = orig + h;
      const double up = loss_fn().item();
      vals[i] = orig - h;
      const double dn = loss_fn().item();
      vals[i] = orig;
      const double numeric = (up - dn) / (2.0 * h);
      const double denom =
          std::max({1.0, std::fabs(analytic[i]), std::fabs(numeric)});
      worst = std::max(worst, std::fabs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("text clue lookup is deterministic and routes grads to one row") {
  auto cfg = conditioned_config(FusionMethod::kConcat, ClueComposition::kText,
                                0);
  SeparatorModel model(cfg);
  Tensor v1 = model.encode_text_clue(0);
  Tensor v2 = model.encode_text_clue(0);
  CHECK(v1.values() == v2.values());
  CHECK(v1.shape() == ad::Shape{32});

  ad::backward(ad::sum(model.encode_text_clue(1)));
  for (auto& [name, p] : model.named_params()) {
    if (name != "clue.embed") continue;
    const auto& g = p.grad();
    for (int col = 0; col < 32; ++col) {
      CHECK(g[32 + col] == 1.0);  // row 1
      CHECK(g[col] == 0.0);       // row 0 untouched
    }
  }

  CHECK_THROWS_WITH_AS(model.encode_text_clue(99),
                       doctest::Contains("keyword id out of range"),
                       std::runtime_error);
}

TEST_CASE("audio clue encoding shapes and empty-list error") {
  auto cfg = conditioned_config(FusionMethod::kConcat, ClueComposition::kAudio,
                                10);
  SeparatorModel model(cfg);
  auto clue = make_clue(cfg);
  REQUIRE(clue.clue_clips.size() == 10);

  auto vecs = model.encode_audio_clues(clue.clue_clips);
  CHECK(vecs.size() == 10);
  for (const auto& v : vecs) CHECK(v.shape() == ad::Shape{32});

  // identical clips give identical vectors
  auto twice = model.encode_audio_clues({clue.clue_clips[0],
                                         clue.clue_clips[0]});
  CHECK(twice[0].values() == twice[1].values());

  CHECK_THROWS_WITH_AS(model.encode_audio_clues({}),
                       doctest::Contains("empty clip list"),
                       std::runtime_error);
}

TEST_CASE("conditioned model at init is bit-identical to unconditioned") {
  Waveform mixture = synth_speaker(5, 1.0, 8000);
  {
    Waveform kw = synth_keyword(3, 8000);
    for (std::size_t i = 0; i < kw.samples.size(); ++i)
      mixture.samples[2000 + i] += kw.samples[i];
  }

  SeparatorConfig base;
  base.init_seed = 77;
  SeparatorModel plain(base);
  auto ref = plain.forward(mixture, std::nullopt, true);

  const struct {
    FusionMethod fusion;
    ClueComposition comp;
    int clips;
  } cases[] = {
      {FusionMethod::kAppend, ClueComposition::kBoth, 3},
      {FusionMethod::kFilm, ClueComposition::kBoth, 3},
      {FusionMethod::kConcat, ClueComposition::kText, 0},
      {FusionMethod::kConcatAvgPool, ClueComposition::kBoth, 3},
      {FusionMethod::kCrossAttention, ClueComposition::kBoth, 3},
  };
  for (const auto& c : cases) {
    CAPTURE(to_string(c.fusion));
    auto cfg = conditioned_config(c.fusion, c.comp, c.clips);
    SeparatorModel model(cfg);
    auto clue = make_clue(cfg);
    auto est = model.forward(mixture, clue, true);
    REQUIRE(est.size() == 2);
    for (int ch = 0; ch < 2; ++ch) {
      REQUIRE(est[ch].size() == ref[ch].size());
      for (int64_t i = 0; i < est[ch].size(); ++i)
        CHECK(est[ch].values()[i] == ref[ch].values()[i]);
    }
  }
}

TEST_CASE("clue cache: no encoder work after warm-up") {
  auto cfg = conditioned_config(FusionMethod::kConcat, ClueComposition::kBoth,
                                5);
  SeparatorModel model(cfg);
  auto clue = make_clue(cfg);
  Waveform mixture = synth_speaker(9, 0.8, 8000);

  CHECK(model.clue_encoder_forwards() == 0);
  (void)separate(mixture, clue, model);
  const int64_t after_first = model.clue_encoder_forwards();
  CHECK(after_first == 5);
  (void)separate(mixture, clue, model);
  (void)separate(mixture, clue, model);
  CHECK(model.clue_encoder_forwards() == after_first);
}

TEST_CASE("separate contracts") {
  SeparatorConfig cfg;
  cfg.init_seed = 13;
  SeparatorModel model(cfg);

  // zero input -> exactly zero outputs, correct length
  Waveform zeros;
  zeros.samples.assign(4000, 0.0);
  auto [z1, z2] = separate(zeros, std::nullopt, model);
  CHECK(z1.samples.size() == 4000);
  for (double v : z1.samples) CHECK(v == 0.0);
  for (double v : z2.samples) CHECK(v == 0.0);

  // untrained model: finite samples, input length preserved
  Waveform s = synth_speaker(4, 0.73, 8000);
  auto [a, b] = separate(s, std::nullopt, model);
  CHECK(a.samples.size() == s.samples.size());
  CHECK(b.samples.size() == s.samples.size());
  for (double v : a.samples) CHECK(std::isfinite(v));

  // determinism across repeated calls
  auto [a2, b2] = separate(s, std::nullopt, model);
  CHECK(a.samples == a2.samples);

  // conditioned model without clue
  auto ccfg = conditioned_config(FusionMethod::kFilm, ClueComposition::kText,
                                 0);
  SeparatorModel cond(ccfg);
  CHECK_THROWS_WITH_AS(separate(s, std::nullopt, cond),
                       doctest::Contains("clue required"),
                       std::runtime_error);

  // enhance wants a single-channel model
  CHECK_THROWS_WITH_AS(enhance(s, std::nullopt, model),
                       doctest::Contains("not single-channel"),
                       std::runtime_error);
  SeparatorConfig se_cfg;
  se_cfg.channels = 1;
  SeparatorModel se(se_cfg);
  Waveform e = enhance(s, std::nullopt, se);
  CHECK(e.samples.size() == s.samples.size());
  CHECK_THROWS_AS(separate(s, std::nullopt, se), std::runtime_error);
}

TEST_CASE("detector posteriors and score contract") {
  DetectorConfig cfg;
  cfg.init_seed = 5;
  DetectorModel model(cfg);

  Waveform s = synth_speaker(8, 1.0, 8000);
  auto res = detect(s, model);
  CHECK(res.frame_posteriors.size() == (8000 - 256) / 128 + 1);
  double mx = 0.0;
  for (double p : res.frame_posteriors) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    mx = std::max(mx, p);
  }
  CHECK(res.score == mx);

  auto res2 = detect(s, model);
  CHECK(res2.frame_posteriors == res.frame_posteriors);

  Waveform brief;
  brief.samples.assign(100, 0.1);
  CHECK_THROWS_WITH_AS(detect(brief, model), doctest::Contains("too short"),
                       std::runtime_error);
}

TEST_CASE("fusion methods leave the frame count and output shape unchanged") {
  Waveform mixture = synth_speaker(6, 0.6, 8000);
  const struct {
    FusionMethod fusion;
    ClueComposition comp;
    int clips;
  } cases[] = {
      {FusionMethod::kAppend, ClueComposition::kBoth, 4},
      {FusionMethod::kFilm, ClueComposition::kAudio, 4},
      {FusionMethod::kConcat, ClueComposition::kText, 0},
      {FusionMethod::kConcatAvgPool, ClueComposition::kBoth, 4},
      {FusionMethod::kCrossAttention, ClueComposition::kText, 0},
  };
  for (const auto& c : cases) {
    auto cfg = conditioned_config(c.fusion, c.comp, c.clips);
    SeparatorModel model(cfg);
    auto clue = make_clue(cfg);
    auto est = model.forward(mixture, clue, false);
    for (const auto& e : est)
      CHECK(e.shape() == ad::Shape{static_cast<int64_t>(
                             mixture.samples.size())});
  }

  // unknown method / wrong modality combinations are rejected at build time
  CHECK_THROWS_AS(SeparatorModel(conditioned_config(
                      FusionMethod::kConcatAvgPool, ClueComposition::kText, 0)),
                  std::runtime_error);
  CHECK_THROWS_WITH_AS(fusion_from_string("bogus"),
                       doctest::Contains("unknown fusion method"),
                       std::runtime_error);
}

TEST_CASE("tiny end-to-end separator model passes grad_check") {
  SeparatorConfig cfg;
  cfg.cond_dim = 8;
  cfg.hidden = 8;
  cfg.layers = 2;
  cfg.fusion = FusionMethod::kConcat;
  cfg.composition = ClueComposition::kText;
  cfg.init_seed = 3;
  SeparatorModel model(cfg);
  auto clue = make_clue(cfg);

  // ~8 frames of audio
  Waveform mixture = synth_speaker(2, 0.12, 8000);
  Waveform ref = synth_speaker(3, 0.12, 8000);
  Tensor ref_t = Tensor::constant(
      {static_cast<int64_t>(ref.samples.size())}, ref.samples);

  auto loss_fn = [&]() {
    auto est = model.forward(mixture, clue, false);
    return ad::add(si_snr_loss(est[0], ref_t), si_snr_loss(est[1], ref_t));
  };
  CHECK(model_param_grad_check(loss_fn, model.param_list()) < 1e-4);
}

TEST_CASE("tiny detector passes grad_check through the max-pooling loss") {
  DetectorConfig cfg;
  cfg.channels = 6;
  cfg.init_seed = 9;
  DetectorModel model(cfg);
  Waveform audio = synth_keyword(1, 8000);

  auto loss_fn = [&]() {
    return loss_maxpool_kws(std::vector<Tensor>{model.forward(audio)}, {true});
  };
  CHECK(model_param_grad_check(loss_fn, model.param_list()) < 1e-4);
}

TEST_CASE("separator checkpoints round-trip bit-exactly") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "detsep_ckpt_test";
  fs::create_directories(dir);

  auto cfg = conditioned_config(FusionMethod::kCrossAttention,
                                ClueComposition::kBoth, 2);
  SeparatorModel model(cfg);
  const std::string path = (dir / "sep.ckpt").string();
  save_checkpoint(path, model.to_checkpoint());
  auto loaded = SeparatorModel::from_checkpoint(load_checkpoint(path));

  REQUIRE(loaded.named_params().size() == model.named_params().size());
  for (std::size_t i = 0; i < model.named_params().size(); ++i) {
    CHECK(loaded.named_params()[i].first == model.named_params()[i].first);
    CHECK(loaded.named_params()[i].second.values() ==
          model.named_params()[i].second.values());
  }
  CHECK(loaded.config().fusion == cfg.fusion);
  CHECK(loaded.config().audio_clips == cfg.audio_clips);

  // a detector checkpoint is refused
  DetectorModel det{DetectorConfig{}};
  const std::string dpath = (dir / "det.ckpt").string();
  save_checkpoint(dpath, det.to_checkpoint());
  CHECK_THROWS_WITH_AS(SeparatorModel::from_checkpoint(load_checkpoint(dpath)),
                       doctest::Contains("not a separator"),
                       std::runtime_error);

  // truncated file is reported as corrupt
  {
    std::ofstream os((dir / "bad.ckpt").string(), std::ios::binary);
    os << "DSCKPT0\nXX";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint((dir / "bad.ckpt").string()),
                       doctest::Contains("corrupt checkpoint"),
                       std::runtime_error);
}
