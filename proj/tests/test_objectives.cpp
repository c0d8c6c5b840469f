// Copyright 2026 detsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "detsep/metrics.hpp"
#include "detsep/objectives.hpp"
#include "detsep/ops.hpp"
#include "detsep/rng.hpp"

using namespace detsep;
using ad::Tensor;

namespace {

Tensor random_vec(Rng& rng, int64_t n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rng.gauss();
  return Tensor::constant({n}, std::move(v));
}

Waveform to_wave(const Tensor& t) {
  Waveform w;
  w.samples = t.values();
  return w;
}

SeparatedItem random_item(Rng& rng, int64_t n, bool keyword) {
  SeparatedItem it;
  it.estimate1 = random_vec(rng, n);
  it.estimate2 = random_vec(rng, n);
  it.reference1 = random_vec(rng, n);
  it.reference2 = random_vec(rng, n);
  it.contains_keyword = keyword;
  return it;
}

SeparatedItem swapped_estimates(const SeparatedItem& it) {
  SeparatedItem sw = it;
  std::swap(sw.estimate1, sw.estimate2);
  return sw;
}

}  // namespace

TEST_CASE("si_snr_loss forward matches the metrics value") {
  Rng rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    Tensor est = random_vec(rng, 200);
    Tensor ref = random_vec(rng, 200);
    const double loss = si_snr_loss(est, ref).item();
    CHECK(loss == doctest::Approx(-si_snr(to_wave(est), to_wave(ref)))
                      .epsilon(1e-10));
  }

  // the metrics hand example carries over with flipped sign
  Tensor est = Tensor::constant({4}, {2, 1, 0, -1});
  Tensor ref = Tensor::constant({4}, {1, 0, -1, 0});
  CHECK(si_snr_loss(est, ref).item() == doctest::Approx(1.76).epsilon(0.01));

  // perfect reconstruction drives the loss far negative
  Tensor same = random_vec(rng, 100);
  CHECK(si_snr_loss(same, same).item() < -30.0);

  CHECK_THROWS_WITH_AS(
      si_snr_loss(est, Tensor::constant({4}, {2, 2, 2, 2})),
      doctest::Contains("degenerate reference"), std::runtime_error);
}

TEST_CASE("loss_pit picks the better permutation and is swap-invariant") {
  Rng rng(11);

  // estimates equal references in order: identity wins
  SeparatedItem it = random_item(rng, 64, false);
  it.estimate1 = it.reference1;
  it.estimate2 = it.reference2;
  SeparatedBatch ordered{{it}};
  const double perfect = loss_pit(ordered).item();
  CHECK(perfect < -60.0);  // two perfect channels

  // swapped estimates give the same PIT value
  SeparatedBatch swapped{{swapped_estimates(it)}};
  CHECK(loss_pit(swapped).item() == doctest::Approx(perfect).epsilon(1e-12));

  // random batches: equals brute force over both permutations, and channel
  // swap never changes the value
  for (int rep = 0; rep < 50; ++rep) {
    SeparatedItem r = random_item(rng, 100, false);
    const double ident =
        si_snr_loss(r.estimate1, r.reference1).item() +
        si_snr_loss(r.estimate2, r.reference2).item();
    const double cross =
        si_snr_loss(r.estimate1, r.reference2).item() +
        si_snr_loss(r.estimate2, r.reference1).item();
    SeparatedBatch batch{{r}};
    CHECK(loss_pit(batch).item() ==
          doctest::Approx(std::min(ident, cross)).epsilon(1e-12));
    SeparatedBatch batch_sw{{swapped_estimates(r)}};
    CHECK(std::fabs(loss_pit(batch).item() - loss_pit(batch_sw).item()) <
          1e-12);
  }
}

TEST_CASE("loss_pdt is the preset assignment and dominates loss_pit") {
  Rng rng(13);

  // perfect separation into the wrong channels: PIT stays minimal, PDT
  // explodes; this asymmetry is the whole point
  SeparatedItem it = random_item(rng, 64, true);
  it.estimate1 = it.reference2;
  it.estimate2 = it.reference1;
  SeparatedBatch swapped{{it}};
  CHECK(loss_pit(swapped).item() < -60.0);
  CHECK(loss_pdt(swapped).item() > 0.0);

  // y_k = 0 item refused
  SeparatedBatch nokey{{random_item(rng, 64, false)}};
  CHECK_THROWS_WITH_AS(loss_pdt(nokey),
                       doctest::Contains("PDT requires keyword item"),
                       std::runtime_error);

  // dominance on random batches
  for (int rep = 0; rep < 200; ++rep) {
    SeparatedBatch batch{{random_item(rng, 80, true)}};
    CHECK(loss_pit(batch).item() <= loss_pdt(batch).item() + 1e-12);
  }

  // swap changes PDT on non-symmetric batches
  SeparatedItem r = random_item(rng, 80, true);
  SeparatedBatch b1{{r}}, b2{{swapped_estimates(r)}};
  CHECK(std::fabs(loss_pdt(b1).item() - loss_pdt(b2).item()) > 1e-9);
}

TEST_CASE("loss_total follows the keyword gate") {
  Rng rng(19);

  // y_k = 0: contribution is exactly loss_pit, bit for bit
  SeparatedBatch nokey{{random_item(rng, 90, false),
                        random_item(rng, 90, false)}};
  CHECK(loss_total(nokey).item() == loss_pit(nokey).item());
  CHECK(loss_total(nokey, LossMode::kPitOnly).item() ==
        loss_pit(nokey).item());

  // y_k = 1: pit + pdt
  SeparatedBatch keyed{{random_item(rng, 90, true)}};
  CHECK(loss_total(keyed).item() ==
        doctest::Approx(loss_pit(keyed).item() + loss_pdt(keyed).item())
            .epsilon(1e-12));

  // all-keyword batch: linearity within 1e-12
  SeparatedBatch multi{{random_item(rng, 90, true),
                        random_item(rng, 90, true),
                        random_item(rng, 90, true)}};
  CHECK(std::fabs(loss_total(multi).item() -
                  (loss_pit(multi).item() + loss_pdt(multi).item())) < 1e-12);

  // PDT-only mode refuses non-keyword batches
  SeparatedBatch mixed{{random_item(rng, 90, true),
                        random_item(rng, 90, false)}};
  CHECK_THROWS_WITH_AS(loss_total(mixed, LossMode::kPdtOnly),
                       doctest::Contains("all-keyword"), std::runtime_error);
  CHECK_NOTHROW(loss_total(mixed, LossMode::kPitOnly));
  CHECK_NOTHROW(loss_total(mixed));
}

TEST_CASE("loss_maxpool_kws values and argmax routing") {
  // positive with a confident frame -> loss ~ 0
  Tensor confident = Tensor::constant({1, 4}, {0.01, 0.999999, 0.2, 0.3});
  CHECK(loss_maxpool_kws(confident, {true}).item() ==
        doctest::Approx(0.0).epsilon(1e-4));

  // negative with all posteriors ~ 0 -> loss ~ 0
  Tensor quiet = Tensor::constant({1, 4}, {1e-9, 1e-9, 1e-9, 1e-9});
  CHECK(loss_maxpool_kws(quiet, {false}).item() ==
        doctest::Approx(0.0).epsilon(1e-6));

  // positive with peak 0.5 -> ln 2
  Tensor half = Tensor::constant({1, 3}, {0.1, 0.5, 0.25});
  CHECK(loss_maxpool_kws(half, {true}).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-9));

  // gradient reaches only the argmax frame (ties to the lowest index)
  Tensor p = Tensor::param({3}, {0.4, 0.7, 0.7});
  ad::backward(loss_maxpool_kws(std::vector<Tensor>{p}, {true}));
  CHECK(p.grad()[0] == 0.0);
  CHECK(p.grad()[1] != 0.0);
  CHECK(p.grad()[2] == 0.0);
}

TEST_CASE("all four losses pass grad_check at tie-free points") {
  Rng rng(37);
  const int64_t n = 48;

  // fixed non-degenerate references
  Tensor ref1 = random_vec(rng, n);
  Tensor ref2 = random_vec(rng, n);

  auto rel_err = [&](const std::function<Tensor(const Tensor&)>& f,
                     const Tensor& point) { return ad::grad_check(f, point); };

  for (int rep = 0; rep < 8; ++rep) {
    Tensor point = random_vec(rng, 2 * n);

    // si_snr_loss on the first half of the point vector
    CHECK(rel_err(
              [&](const Tensor& x) {
                return si_snr_loss(ad::slice(x, 0, 0, n), ref1);
              },
              point) < 1e-4);

    // loss_pit / loss_pdt / loss_total with both estimates from the point
    auto batch_of = [&](const Tensor& x, bool keyword) {
      SeparatedItem it;
      it.estimate1 = ad::slice(x, 0, 0, n);
      it.estimate2 = ad::slice(x, 0, n, 2 * n);
      it.reference1 = ref1;
      it.reference2 = ref2;
      it.contains_keyword = keyword;
      return SeparatedBatch{{it}};
    };
    CHECK(rel_err(
              [&](const Tensor& x) { return loss_pit(batch_of(x, false)); },
              point) < 1e-4);
    CHECK(rel_err(
              [&](const Tensor& x) { return loss_pdt(batch_of(x, true)); },
              point) < 1e-4);
    CHECK(rel_err(
              [&](const Tensor& x) { return loss_total(batch_of(x, true)); },
              point) < 1e-4);
  }

  // max-pooling loss at a point with a unique frame max, in (0,1)
  for (int rep = 0; rep < 8; ++rep) {
    std::vector<double> v(16);
    for (auto& x : v) x = rng.uniform(0.05, 0.6);
    v[static_cast<std::size_t>(rng.uniform_int(16))] = 0.9;  // unique max
    Tensor point = Tensor::constant({16}, v);
    CHECK(rel_err(
              [&](const Tensor& x) {
                return loss_maxpool_kws(std::vector<Tensor>{x},
                                        {rep % 2 == 0});
              },
              point) < 1e-4);
  }
}
