// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "detsep/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "detsep/fft.hpp"
#include "detsep/ops.hpp"
#include "detsep/rng.hpp"
#include "detsep/synth.hpp"

namespace detsep {

using ad::Tensor;
using nlohmann::json;

namespace {

constexpr uint64_t kBackboneTag = 0xBAC0B0ull;
constexpr uint64_t kClueTag = 0xC10Eull;

std::vector<double> xavier(Rng& rng, int64_t fan_out, int64_t fan_in) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(static_cast<std::size_t>(fan_in * fan_out));
  for (auto& x : v) x = rng.uniform(-a, a);
  return v;
}

Tensor average(const std::vector<Tensor>& vs) {
  Tensor acc = vs[0];
  for (std::size_t i = 1; i < vs.size(); ++i) acc = ad::add(acc, vs[i]);
  return ad::scale(acc, 1.0 / static_cast<double>(vs.size()));
}

// ---------------------------------------------------------------------------
// Masked synthesis: mask (frames x bands) applied to the mixture
// spectrogram, inverted by overlap-add. Linear in the mask, with an exact
// adjoint.
// ---------------------------------------------------------------------------

struct SynthContext {
  StftConfig cfg;
  std::size_t signal_len = 0;
  std::vector<std::vector<double>> re, im;  // frames x bins
  std::vector<double> win;
};

std::shared_ptr<SynthContext> prepare_synthesis(const Spectrogram& spec) {
  auto ctx = std::make_shared<SynthContext>();
  ctx->cfg = spec.cfg;
  ctx->signal_len = spec.signal_len;
  ctx->win = stft_window(spec.cfg.frame);
  ctx->re.resize(spec.frames.size());
  ctx->im.resize(spec.frames.size());
  for (std::size_t t = 0; t < spec.frames.size(); ++t) {
    ctx->re[t].resize(spec.frames[t].size());
    ctx->im[t].resize(spec.frames[t].size());
    for (std::size_t k = 0; k < spec.frames[t].size(); ++k) {
      ctx->re[t][k] = spec.frames[t][k].real();
      ctx->im[t][k] = spec.frames[t][k].imag();
    }
  }
  return ctx;
}

Tensor masked_istft(const Tensor& mask, std::shared_ptr<SynthContext> ctx) {
  const int frame = ctx->cfg.frame, hop = ctx->cfg.hop;
  const int bins = ctx->cfg.bins(), bands = ctx->cfg.bands();
  const int64_t frames = static_cast<int64_t>(ctx->re.size());
  if (mask.shape() != ad::Shape{frames, bands})
    throw std::runtime_error("masked_istft: mask shape " +
                             ad::shape_str(mask.shape()) + " does not match " +
                             std::to_string(frames) + " frames x " +
                             std::to_string(bands) + " bands");

  const auto& mv = mask.values();
  const std::size_t total = (ctx->re.size() - 1) * hop + frame;
  std::vector<double> buf(total, 0.0);
  std::vector<std::complex<double>> masked(bins);
  for (int64_t t = 0; t < frames; ++t) {
    for (int k = 0; k < bins; ++k) {
      const double m = mv[t * bands + bin_to_band(k, ctx->cfg)];
      masked[k] = {m * ctx->re[t][k], m * ctx->im[t][k]};
    }
    const auto seg = irfft(masked, frame);
    for (int i = 0; i < frame; ++i) buf[t * hop + i] += seg[i] * ctx->win[i];
  }
  std::vector<double> out(ctx->signal_len);
  for (std::size_t i = 0; i < ctx->signal_len; ++i) out[i] = buf[i + hop];

  return ad::make_op(
      "masked_istft", {static_cast<int64_t>(ctx->signal_len)}, std::move(out),
      {mask}, [ctx, frames, frame, hop, bins, bands](ad::Node& n) {
        const auto& p = n.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        const std::size_t total = (ctx->re.size() - 1) * hop + frame;
        std::vector<double> gbuf(total, 0.0);
        for (std::size_t i = 0; i < ctx->signal_len; ++i)
          gbuf[i + hop] = n.grad[i];
        std::vector<double> gseg(frame);
        for (int64_t t = 0; t < frames; ++t) {
          for (int i = 0; i < frame; ++i)
            gseg[i] = gbuf[t * hop + i] * ctx->win[i];
          const auto g_bins = rfft(gseg);
          for (int k = 0; k < bins; ++k) {
            const double c = (k == 0 || k == bins - 1) ? 1.0 : 2.0;
            const double g_re = c / frame * g_bins[k].real();
            const double g_im = (k == 0 || k == bins - 1)
                                    ? 0.0
                                    : 2.0 / frame * g_bins[k].imag();
            p->grad[t * bands + bin_to_band(k, ctx->cfg)] +=
                ctx->re[t][k] * g_re + ctx->im[t][k] * g_im;
          }
        }
      });
}

// Per-utterance scalar mean/variance normalization of the log-band features.
Tensor normalized_features(const std::vector<std::vector<double>>& rows) {
  const int64_t t = static_cast<int64_t>(rows.size());
  const int64_t b = static_cast<int64_t>(rows[0].size());
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(t * b));
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  double m = 0.0;
  for (double v : flat) m += v;
  m /= static_cast<double>(flat.size());
  double var = 0.0;
  for (double v : flat) var += (v - m) * (v - m);
  const double sd = std::max(std::sqrt(var / flat.size()), 1e-3);
  for (double& v : flat) v = (v - m) / sd;
  return Tensor::constant({t, b}, std::move(flat));
}

}  // namespace

// ---------------------------------------------------------------------------
// Enum names
// ---------------------------------------------------------------------------

std::string to_string(FusionMethod m) {
  switch (m) {
    case FusionMethod::kNone: return "none";
    case FusionMethod::kAppend: return "append";
    case FusionMethod::kFilm: return "film";
    case FusionMethod::kConcat: return "concat";
    case FusionMethod::kConcatAvgPool: return "concat_avgpool";
    case FusionMethod::kCrossAttention: return "cross_attention";
  }
  return "none";
}

std::string to_string(ClueComposition c) {
  switch (c) {
    case ClueComposition::kNone: return "none";
    case ClueComposition::kText: return "text";
    case ClueComposition::kAudio: return "audio";
    case ClueComposition::kBoth: return "both";
  }
  return "none";
}

FusionMethod fusion_from_string(const std::string& s) {
  if (s == "none") return FusionMethod::kNone;
  if (s == "append") return FusionMethod::kAppend;
  if (s == "film") return FusionMethod::kFilm;
  if (s == "concat") return FusionMethod::kConcat;
  if (s == "concat_avgpool") return FusionMethod::kConcatAvgPool;
  if (s == "cross_attention") return FusionMethod::kCrossAttention;
  throw std::runtime_error("unknown fusion method: " + s);
}

ClueComposition composition_from_string(const std::string& s) {
  if (s == "none") return ClueComposition::kNone;
  if (s == "text") return ClueComposition::kText;
  if (s == "audio") return ClueComposition::kAudio;
  if (s == "both") return ClueComposition::kBoth;
  throw std::runtime_error("unknown clue composition: " + s);
}

// ---------------------------------------------------------------------------
// SeparatorModel
// ---------------------------------------------------------------------------

SeparatorModel::SeparatorModel(const SeparatorConfig& cfg) : cfg_(cfg) {
  if (cfg_.hidden % 2 != 0)
    throw std::runtime_error("separator: hidden size must be even");
  if (cfg_.channels != 1 && cfg_.channels != 2)
    throw std::runtime_error("separator: channels must be 1 or 2");
  const bool has_fusion = cfg_.fusion != FusionMethod::kNone;
  const bool has_comp = cfg_.composition != ClueComposition::kNone;
  if (has_fusion != has_comp)
    throw std::runtime_error(
        "separator: fusion method and clue composition must be set together");
  if (cfg_.fusion == FusionMethod::kConcatAvgPool &&
      cfg_.composition != ClueComposition::kBoth)
    throw std::runtime_error(
        "concat_avgpool fusion needs both text and audio clues");
  const bool wants_audio = cfg_.composition == ClueComposition::kAudio ||
                           cfg_.composition == ClueComposition::kBoth;
  if (wants_audio && cfg_.audio_clips <= 0)
    throw std::runtime_error("audio clue composition needs audio_clips > 0");

  const int d = cfg_.cond_dim;
  const int bands = cfg_.stft.bands();
  const int hd = cfg_.hidden / 2;

  Rng rng(cfg_.init_seed ^ kBackboneTag);
  auto param = [&](const std::string& name, ad::Shape shape,
                   std::vector<double> v) {
    params_.emplace_back(name, Tensor::param(std::move(shape), std::move(v)));
  };

  param("frontend.proj_w", {bands, d}, xavier(rng, bands, d));
  param("frontend.proj_b", {d}, std::vector<double>(d, 0.0));
  for (int l = 0; l < cfg_.layers; ++l) {
    const int in = l == 0 ? d : cfg_.hidden;
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string p = "core.l" + std::to_string(l) + "." + dir + ".";
      for (const char* gate : {"z", "r", "h"}) {
        param(p + "W" + gate, {hd, in}, xavier(rng, hd, in));
        param(p + "U" + gate, {hd, hd}, xavier(rng, hd, hd));
        param(p + "b" + gate, {hd}, std::vector<double>(hd, 0.0));
      }
    }
  }
  for (int c = 0; c < cfg_.channels; ++c) {
    const std::string p = "head." + std::to_string(c) + ".";
    param(p + "w", {cfg_.hidden, bands}, xavier(rng, cfg_.hidden, bands));
    // Masks start near pass-through.
    param(p + "b", {bands}, std::vector<double>(bands, 1.0));
  }

  if (has_comp) {
    Rng crng(cfg_.init_seed ^ kClueTag);
    param("clue.embed", {cfg_.text_vocab, d}, xavier(crng, cfg_.text_vocab, d));
    param("clue.mlp_w1", {d, bands}, xavier(crng, d, bands));
    param("clue.mlp_b1", {d}, std::vector<double>(d, 0.0));
    param("clue.mlp_w2", {d, d}, xavier(crng, d, d));
    param("clue.mlp_b2", {d}, std::vector<double>(d, 0.0));

    auto zeros = [](int64_t r, int64_t c) {
      return std::vector<double>(static_cast<std::size_t>(r * c), 0.0);
    };
    switch (cfg_.fusion) {
      case FusionMethod::kAppend:
        param("fusion.token_w", {d, d}, zeros(d, d));
        param("fusion.token_b", {d}, zeros(d, 1));
        break;
      case FusionMethod::kFilm:
        param("fusion.gamma_w", {d, d}, zeros(d, d));
        param("fusion.gamma_b", {d}, zeros(d, 1));
        param("fusion.beta_w", {d, d}, zeros(d, d));
        param("fusion.beta_b", {d}, zeros(d, 1));
        break;
      case FusionMethod::kConcat:
      case FusionMethod::kConcatAvgPool: {
        const int cd = cfg_.fusion == FusionMethod::kConcatAvgPool ? 2 * d : d;
        // Identity on the frame block, zero on the condition block.
        std::vector<double> w(static_cast<std::size_t>((d + cd) * d), 0.0);
        for (int i = 0; i < d; ++i) w[i * d + i] = 1.0;
        param("fusion.cat_w", {d + cd, d}, std::move(w));
        param("fusion.cat_b", {d}, zeros(d, 1));
        break;
      }
      case FusionMethod::kCrossAttention:
        param("fusion.wq", {d, d}, xavier(crng, d, d));
        param("fusion.wk", {d, d}, xavier(crng, d, d));
        param("fusion.wv", {d, d}, xavier(crng, d, d));
        param("fusion.wo", {d, d}, zeros(d, d));
        break;
      case FusionMethod::kNone:
        break;
    }
  }
}

Tensor SeparatorModel::find(const std::string& name) const {
  for (const auto& [n, t] : params_)
    if (n == name) return t;
  throw std::runtime_error("separator: unknown parameter " + name);
}

std::vector<Tensor> SeparatorModel::param_list() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [n, t] : params_) out.push_back(t);
  return out;
}

Tensor SeparatorModel::encode_text_clue(int keyword_id) {
  if (keyword_id < 0 || keyword_id >= cfg_.text_vocab)
    throw std::runtime_error("keyword id out of range: " +
                             std::to_string(keyword_id));
  Tensor embed = find("clue.embed");
  return ad::reshape(ad::slice(embed, 0, keyword_id, keyword_id + 1),
                     {cfg_.cond_dim});
}

std::vector<Tensor> SeparatorModel::encode_audio_clues(
    const std::vector<Waveform>& clue_clips) {
  if (clue_clips.empty())
    throw std::runtime_error("audio clue clips missing: empty clip list");
  Tensor w1 = find("clue.mlp_w1"), b1 = find("clue.mlp_b1");
  Tensor w2 = find("clue.mlp_w2"), b2 = find("clue.mlp_b2");
  std::vector<Tensor> out;
  out.reserve(clue_clips.size());
  for (const auto& clip : clue_clips) {
    const auto rows = log_band_features_unpadded(clip.samples, cfg_.stft);
    std::vector<double> pooled(cfg_.stft.bands(), 0.0);
    for (const auto& r : rows)
      for (std::size_t j = 0; j < r.size(); ++j) pooled[j] += r[j];
    for (auto& v : pooled) v /= static_cast<double>(rows.size());
    Tensor x = Tensor::constant({cfg_.stft.bands()}, std::move(pooled));
    Tensor h = ad::relu(ad::add(ad::matmul(w1, x), b1));
    out.push_back(ad::add(ad::matmul(w2, h), b2));
    clue_encoder_forwards_ += 1;
  }
  return out;
}

std::vector<Tensor> SeparatorModel::condition_vectors(
    const ConditionClue& clue, bool inference) {
  const bool wants_text = cfg_.composition == ClueComposition::kText ||
                          cfg_.composition == ClueComposition::kBoth;
  const bool wants_audio = cfg_.composition == ClueComposition::kAudio ||
                           cfg_.composition == ClueComposition::kBoth;
  if (wants_text && !clue.keyword_id)
    throw std::runtime_error("missing text clue for composition " +
                             to_string(cfg_.composition));
  if (wants_audio && clue.clue_clips.empty())
    throw std::runtime_error("missing audio clue clips for composition " +
                             to_string(cfg_.composition));

  if (inference && !cond_cache_.empty()) {
    std::vector<Tensor> out;
    out.reserve(cond_cache_.size());
    for (const auto& v : cond_cache_)
      out.push_back(Tensor::constant({cfg_.cond_dim}, v));
    return out;
  }

  std::vector<Tensor> vecs;
  if (wants_text) vecs.push_back(encode_text_clue(*clue.keyword_id));
  if (wants_audio) {
    auto audio = encode_audio_clues(clue.clue_clips);
    vecs.insert(vecs.end(), audio.begin(), audio.end());
  }
  if (inference) {
    for (const auto& v : vecs) cond_cache_.push_back(v.values());
  }
  return vecs;
}

Tensor SeparatorModel::core(const Tensor& frames, int64_t n_tok) {
  const int hd = cfg_.hidden / 2;
  Tensor x = frames;
  for (int l = 0; l < cfg_.layers; ++l) {
    const int64_t t_len = x.shape()[0];
    std::vector<Tensor> dir_outs;
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string p = "core.l" + std::to_string(l) + "." + dir + ".";
      Tensor wz = find(p + "Wz"), uz = find(p + "Uz"), bz = find(p + "bz");
      Tensor wr = find(p + "Wr"), ur = find(p + "Ur"), br = find(p + "br");
      Tensor wh = find(p + "Wh"), uh = find(p + "Uh"), bh = find(p + "bh");
      const bool reverse = dir[0] == 'b';
      // The backward lane covers only genuine frames; any prepended
      // condition tokens feed the forward lane alone and their rows stay
      // zero here (they are stripped after the core anyway).
      const int64_t lo = reverse ? n_tok : 0;
      Tensor h = Tensor::zeros({hd});
      Tensor ones = Tensor::constant({hd}, std::vector<double>(hd, 1.0));
      std::vector<Tensor> steps(static_cast<std::size_t>(t_len));
      for (int64_t i = 0; i < lo; ++i)
        steps[static_cast<std::size_t>(i)] = Tensor::zeros({1, hd});
      for (int64_t s = 0; s < t_len - lo; ++s) {
        const int64_t t = reverse ? t_len - 1 - s : s + lo;
        Tensor xt = ad::reshape(ad::slice(x, 0, t, t + 1), {x.shape()[1]});
        Tensor z = ad::sigmoid(
            ad::add(ad::add(ad::matmul(wz, xt), ad::matmul(uz, h)), bz));
        Tensor r = ad::sigmoid(
            ad::add(ad::add(ad::matmul(wr, xt), ad::matmul(ur, h)), br));
        Tensor hc = ad::tanh_t(ad::add(
            ad::add(ad::matmul(wh, xt), ad::mul(r, ad::matmul(uh, h))), bh));
        h = ad::add(ad::mul(ad::sub(ones, z), h), ad::mul(z, hc));
        steps[static_cast<std::size_t>(t)] = ad::reshape(h, {1, hd});
      }
      dir_outs.push_back(ad::concat(0, steps));
    }
    x = ad::concat(1, dir_outs);
  }
  return x;
}

std::vector<Tensor> SeparatorModel::forward(
    const Waveform& mixture, const std::optional<ConditionClue>& clue,
    bool inference) {
  if (mixture.samples.empty())
    throw std::runtime_error("separator: empty mixture");
  if (conditioned() && !clue)
    throw std::runtime_error("clue required for conditioned separator");

  const auto spec = stft(mixture.samples, cfg_.stft);
  const auto feats = log_band_features(spec);
  Tensor x = normalized_features(feats);
  const int64_t t_len = x.shape()[0];
  const int d = cfg_.cond_dim;

  Tensor h = ad::relu(
      ad::add(ad::matmul(x, find("frontend.proj_w")),
              ad::broadcast_to(find("frontend.proj_b"), {t_len, d})));

  int64_t n_tok = 0;
  if (conditioned()) {
    auto cvecs = condition_vectors(*clue, inference);
    switch (cfg_.fusion) {
      case FusionMethod::kAppend: {
        Tensor tw = find("fusion.token_w"), tb = find("fusion.token_b");
        std::vector<Tensor> rows;
        rows.reserve(cvecs.size() + 1);
        for (const auto& v : cvecs)
          rows.push_back(ad::reshape(ad::add(ad::matmul(tw, v), tb), {1, d}));
        rows.push_back(h);
        h = ad::concat(0, rows);
        n_tok = static_cast<int64_t>(cvecs.size());
        break;
      }
      case FusionMethod::kFilm: {
        Tensor cbar = average(cvecs);
        Tensor gamma =
            ad::add_scalar(ad::add(ad::matmul(find("fusion.gamma_w"), cbar),
                                   find("fusion.gamma_b")),
                           1.0);
        Tensor beta = ad::add(ad::matmul(find("fusion.beta_w"), cbar),
                              find("fusion.beta_b"));
        h = ad::add(ad::mul(ad::broadcast_to(gamma, {t_len, d}), h),
                    ad::broadcast_to(beta, {t_len, d}));
        break;
      }
      case FusionMethod::kConcat:
      case FusionMethod::kConcatAvgPool: {
        Tensor cond;
        if (cfg_.fusion == FusionMethod::kConcat) {
          cond = average(cvecs);
        } else {
          // Text vector kept, audio clip vectors average-pooled.
          Tensor text = cvecs[0];
          std::vector<Tensor> audio(cvecs.begin() + 1, cvecs.end());
          cond = ad::concat(0, {text, average(audio)});
        }
        Tensor rows = ad::broadcast_to(cond, {t_len, cond.shape()[0]});
        h = ad::add(ad::matmul(ad::concat(1, {h, rows}), find("fusion.cat_w")),
                    ad::broadcast_to(find("fusion.cat_b"), {t_len, d}));
        break;
      }
      case FusionMethod::kCrossAttention: {
        std::vector<Tensor> rows;
        rows.reserve(cvecs.size());
        for (const auto& v : cvecs) rows.push_back(ad::reshape(v, {1, d}));
        Tensor cmat = ad::concat(0, rows);
        Tensor q = ad::matmul(h, find("fusion.wq"));
        Tensor k = ad::matmul(cmat, find("fusion.wk"));
        Tensor v = ad::matmul(cmat, find("fusion.wv"));
        Tensor scores =
            ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(d));
        Tensor ctx = ad::matmul(ad::softmax(scores), v);
        h = ad::add(h, ad::matmul(ctx, find("fusion.wo")));
        break;
      }
      case FusionMethod::kNone:
        break;
    }
  }

  h = core(h, n_tok);
  if (n_tok > 0) h = ad::slice(h, 0, n_tok, h.shape()[0]);

  auto ctx = prepare_synthesis(spec);
  std::vector<Tensor> estimates;
  for (int c = 0; c < cfg_.channels; ++c) {
    const std::string p = "head." + std::to_string(c) + ".";
    Tensor mask = ad::sigmoid(
        ad::add(ad::matmul(h, find(p + "w")),
                ad::broadcast_to(find(p + "b"), {t_len, cfg_.stft.bands()})));
    estimates.push_back(masked_istft(mask, ctx));
  }
  return estimates;
}

Checkpoint SeparatorModel::to_checkpoint() const {
  json meta;
  meta["kind"] = "separator";
  meta["sample_rate_hz"] = cfg_.sample_rate_hz;
  meta["frame"] = cfg_.stft.frame;
  meta["hop"] = cfg_.stft.hop;
  meta["cond_dim"] = cfg_.cond_dim;
  meta["hidden"] = cfg_.hidden;
  meta["layers"] = cfg_.layers;
  meta["channels"] = cfg_.channels;
  meta["fusion"] = to_string(cfg_.fusion);
  meta["composition"] = to_string(cfg_.composition);
  meta["text_vocab"] = cfg_.text_vocab;
  meta["text_id"] = cfg_.text_id;
  meta["audio_clips"] = cfg_.audio_clips;
  meta["clue_seed"] = cfg_.clue_seed;
  meta["init_seed"] = cfg_.init_seed;
  Checkpoint ckpt;
  ckpt.meta_json = meta.dump();
  ckpt.params = params_;
  return ckpt;
}

SeparatorModel SeparatorModel::from_checkpoint(const Checkpoint& ckpt) {
  json meta;
  try {
    meta = json::parse(ckpt.meta_json);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("corrupt checkpoint: bad metadata (") +
                             e.what() + ")");
  }
  if (meta.value("kind", "") != "separator")
    throw std::runtime_error("checkpoint is not a separator (kind=" +
                             meta.value("kind", "?") + ")");
  SeparatorConfig cfg;
  cfg.sample_rate_hz = meta.at("sample_rate_hz").get<int>();
  cfg.stft.frame = meta.at("frame").get<int>();
  cfg.stft.hop = meta.at("hop").get<int>();
  cfg.cond_dim = meta.at("cond_dim").get<int>();
  cfg.hidden = meta.at("hidden").get<int>();
  cfg.layers = meta.at("layers").get<int>();
  cfg.channels = meta.at("channels").get<int>();
  cfg.fusion = fusion_from_string(meta.at("fusion").get<std::string>());
  cfg.composition =
      composition_from_string(meta.at("composition").get<std::string>());
  cfg.text_vocab = meta.at("text_vocab").get<int>();
  cfg.text_id = meta.at("text_id").get<int>();
  cfg.audio_clips = meta.at("audio_clips").get<int>();
  cfg.clue_seed = meta.at("clue_seed").get<uint64_t>();
  cfg.init_seed = meta.at("init_seed").get<uint64_t>();

  SeparatorModel model(cfg);
  if (ckpt.params.size() != model.params_.size())
    throw std::runtime_error("corrupt checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    auto& [name, tensor] = model.params_[i];
    const auto& [ck_name, ck_tensor] = ckpt.params[i];
    if (name != ck_name || tensor.shape() != ck_tensor.shape())
      throw std::runtime_error("corrupt checkpoint: parameter mismatch at " +
                               ck_name);
    tensor.mutable_values() = ck_tensor.values();
  }
  return model;
}

// ---------------------------------------------------------------------------
// DetectorModel
// ---------------------------------------------------------------------------

DetectorModel::DetectorModel(const DetectorConfig& cfg) : cfg_(cfg) {
  Rng rng(cfg_.init_seed ^ kBackboneTag);
  auto param = [&](const std::string& name, ad::Shape shape,
                   std::vector<double> v) {
    params_.emplace_back(name, Tensor::param(std::move(shape), std::move(v)));
  };
  int in = cfg_.stft.bands();
  for (std::size_t l = 0; l < cfg_.dilations.size(); ++l) {
    const std::string p = "conv" + std::to_string(l) + ".";
    for (int tap = 0; tap < cfg_.kernel; ++tap)
      param(p + "w" + std::to_string(tap), {in, cfg_.channels},
            xavier(rng, in, cfg_.channels));
    param(p + "b", {cfg_.channels}, std::vector<double>(cfg_.channels, 0.0));
    in = cfg_.channels;
  }
  param("head.w", {cfg_.channels, 1}, xavier(rng, cfg_.channels, 1));
  param("head.b", {1}, std::vector<double>(1, -1.0));
}

Tensor DetectorModel::find(const std::string& name) const {
  for (const auto& [n, t] : params_)
    if (n == name) return t;
  throw std::runtime_error("detector: unknown parameter " + name);
}

std::vector<Tensor> DetectorModel::param_list() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [n, t] : params_) out.push_back(t);
  return out;
}

Tensor DetectorModel::forward(const Waveform& audio) {
  const auto rows = log_band_features_unpadded(audio.samples, cfg_.stft);
  Tensor x = normalized_features(rows);
  const int64_t t_len = x.shape()[0];

  for (std::size_t l = 0; l < cfg_.dilations.size(); ++l) {
    const std::string p = "conv" + std::to_string(l) + ".";
    const int dil = cfg_.dilations[l];
    const int pad = (cfg_.kernel / 2) * dil;
    const int64_t in_ch = x.shape()[1];
    Tensor zeros = Tensor::zeros({pad, in_ch});
    Tensor padded = ad::concat(0, {zeros, x, zeros});
    Tensor acc = ad::broadcast_to(find(p + "b"), {t_len, cfg_.channels});
    for (int tap = 0; tap < cfg_.kernel; ++tap) {
      Tensor part = ad::slice(padded, 0, tap * dil, tap * dil + t_len);
      acc = ad::add(acc, ad::matmul(part, find(p + "w" + std::to_string(tap))));
    }
    x = ad::relu(acc);
  }
  Tensor logits = ad::add(ad::matmul(x, find("head.w")),
                          ad::broadcast_to(find("head.b"), {t_len, 1}));
  forward_count_ += 1;
  return ad::sigmoid(ad::reshape(logits, {t_len}));
}

Checkpoint DetectorModel::to_checkpoint() const {
  json meta;
  meta["kind"] = "detector";
  meta["sample_rate_hz"] = cfg_.sample_rate_hz;
  meta["frame"] = cfg_.stft.frame;
  meta["hop"] = cfg_.stft.hop;
  meta["channels"] = cfg_.channels;
  meta["kernel"] = cfg_.kernel;
  meta["dilations"] = cfg_.dilations;
  meta["init_seed"] = cfg_.init_seed;
  Checkpoint ckpt;
  ckpt.meta_json = meta.dump();
  ckpt.params = params_;
  return ckpt;
}

DetectorModel DetectorModel::from_checkpoint(const Checkpoint& ckpt) {
  json meta;
  try {
    meta = json::parse(ckpt.meta_json);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("corrupt checkpoint: bad metadata (") +
                             e.what() + ")");
  }
  if (meta.value("kind", "") != "detector")
    throw std::runtime_error("checkpoint is not a detector (kind=" +
                             meta.value("kind", "?") + ")");
  DetectorConfig cfg;
  cfg.sample_rate_hz = meta.at("sample_rate_hz").get<int>();
  cfg.stft.frame = meta.at("frame").get<int>();
  cfg.stft.hop = meta.at("hop").get<int>();
  cfg.channels = meta.at("channels").get<int>();
  cfg.kernel = meta.at("kernel").get<int>();
  cfg.dilations = meta.at("dilations").get<std::vector<int>>();
  cfg.init_seed = meta.at("init_seed").get<uint64_t>();

  DetectorModel model(cfg);
  if (ckpt.params.size() != model.params_.size())
    throw std::runtime_error("corrupt checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    auto& [name, tensor] = model.params_[i];
    const auto& [ck_name, ck_tensor] = ckpt.params[i];
    if (name != ck_name || tensor.shape() != ck_tensor.shape())
      throw std::runtime_error("corrupt checkpoint: parameter mismatch at " +
                               ck_name);
    tensor.mutable_values() = ck_tensor.values();
  }
  return model;
}

// ---------------------------------------------------------------------------
// Wrappers
// ---------------------------------------------------------------------------

ConditionClue make_clue(const SeparatorConfig& cfg) {
  ConditionClue clue;
  if (cfg.composition == ClueComposition::kText ||
      cfg.composition == ClueComposition::kBoth)
    clue.keyword_id = cfg.text_id;
  if (cfg.composition == ClueComposition::kAudio ||
      cfg.composition == ClueComposition::kBoth) {
    clue.clue_clips.reserve(cfg.audio_clips);
    for (int i = 0; i < cfg.audio_clips; ++i)
      clue.clue_clips.push_back(synth_keyword(
          cfg.clue_seed + static_cast<uint64_t>(i), cfg.sample_rate_hz));
  }
  return clue;
}

std::pair<Waveform, Waveform> separate(
    const Waveform& mixture, const std::optional<ConditionClue>& clue,
    SeparatorModel& model) {
  if (model.config().channels != 2)
    throw std::runtime_error("separate: model has a single output channel");
  auto est = model.forward(mixture, clue, /*inference=*/true);
  Waveform a, b;
  a.sample_rate_hz = b.sample_rate_hz = mixture.sample_rate_hz;
  a.samples = est[0].values();
  b.samples = est[1].values();
  return {std::move(a), std::move(b)};
}

Waveform enhance(const Waveform& mixture,
                 const std::optional<ConditionClue>& clue,
                 SeparatorModel& model) {
  if (model.config().channels != 1)
    throw std::runtime_error("enhance: model is not single-channel");
  auto est = model.forward(mixture, clue, /*inference=*/true);
  Waveform out;
  out.sample_rate_hz = mixture.sample_rate_hz;
  out.samples = est[0].values();
  return out;
}

DetectionResult detect(const Waveform& audio, DetectorModel& model) {
  Tensor post = model.forward(audio);
  DetectionResult res;
  res.frame_posteriors = post.values();
  res.score = *std::max_element(res.frame_posteriors.begin(),
                                res.frame_posteriors.end());
  return res;
}

}  // namespace detsep
