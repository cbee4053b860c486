#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "core/errors.hpp"
#include "core/mixers.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace gemix;

namespace {

ImageTensor constant(int size, float v) { return ImageTensor(size, size, 1, v); }

GeneratorHandle stub_generator(int classes, int size = 4, int latent = 3) {
  GeneratorHandle g;
  g.info = {classes, size, 1, latent};
  g.generate = [size](const LatentVector&, const SoftLabel& ell) {
    return ImageTensor(size, size, 1, static_cast<float>(ell.weights[0]));
  };
  return g;
}

}  // namespace

TEST_CASE("mixup_pair identities") {
  std::mt19937_64 rng(1);
  const auto a = testing::random_image(5, 5, 1, rng);
  const auto b = testing::random_image(5, 5, 1, rng);
  const auto ya = SoftLabel::one_hot(0, 2), yb = SoftLabel::one_hot(1, 2);

  const auto id = mixup_pair(a, ya, b, yb, 1.0);
  CHECK(id.image == a);
  CHECK(id.label == ya);
  CHECK(id.provenance == Provenance::mixup);

  const auto half = mixup_pair(constant(3, 0.0f), ya, constant(3, 1.0f), yb, 0.5);
  for (float v : half.image.values) CHECK(v == 0.5f);
  CHECK(half.label.weights == std::vector<double>{0.5, 0.5});
}

TEST_CASE("mixup_pair matches the elementwise oracle on fixed 2x2 images") {
  ImageTensor a(2, 2, 1), b(2, 2, 1);
  a.values = {0.1f, 0.2f, 0.3f, 0.4f};
  b.values = {0.9f, 0.7f, 0.5f, 0.0f};
  const auto out = mixup_pair(a, SoftLabel::one_hot(0, 2), b, SoftLabel::one_hot(1, 2), 0.3);
  CHECK(oracle::max_abs_diff(oracle::pair_mix(a, b, 0.3), out.image) <= 1e-6);
  CHECK(out.label.weights[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(out.label.weights[1] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("mixup_pair preconditions") {
  const auto y = SoftLabel::one_hot(0, 2);
  CHECK_THROWS_AS(mixup_pair(constant(3, 0), y, constant(4, 0), y, 0.5), Error);
  CHECK_THROWS_AS(mixup_pair(constant(3, 0), y, constant(3, 0), SoftLabel::one_hot(0, 3), 0.5), Error);
  CHECK_THROWS_AS(mixup_pair(constant(3, 0), y, constant(3, 0), y, 1.5), Error);
}

TEST_CASE("mmixup matches the accumulation oracle and reduces to mixup_pair") {
  std::mt19937_64 rng(2);
  std::vector<ImageTensor> imgs;
  for (int j = 0; j < 3; ++j) imgs.push_back(testing::random_image(4, 4, 1, rng));
  std::vector<const ImageTensor*> ptrs{&imgs[0], &imgs[1], &imgs[2]};
  for (int trial = 0; trial < 20; ++trial) {
    SoftLabel ell{testing::random_simplex(3, rng)};
    const auto out = mmixup(ptrs, ell);
    CHECK(oracle::max_abs_diff(oracle::weighted_sum(imgs, ell.weights), out.image) <= 1e-6);
    CHECK(out.label == ell);
    CHECK(out.provenance == Provenance::mmixup);
  }

  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double lam = u(rng);
    const auto via_m = mmixup(std::vector<const ImageTensor*>{&imgs[0], &imgs[1]}, SoftLabel{{lam, 1.0 - lam}});
    const auto via_p = mixup_pair(imgs[0], SoftLabel::one_hot(0, 2), imgs[1], SoftLabel::one_hot(1, 2), lam);
    for (std::size_t k = 0; k < via_m.image.size(); ++k)
      CHECK(std::abs(via_m.image.values[k] - via_p.image.values[k]) <= 1e-6);
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(std::abs(via_m.label.weights[j] - via_p.label.weights[j]) <= 1e-6);
  }
}

TEST_CASE("mmixup with a one-hot label returns the source image exactly") {
  std::mt19937_64 rng(3);
  std::vector<ImageTensor> imgs;
  for (int j = 0; j < 4; ++j) imgs.push_back(testing::random_image(6, 6, 3, rng));
  std::vector<const ImageTensor*> ptrs;
  for (auto& i : imgs) ptrs.push_back(&i);
  for (int j = 0; j < 4; ++j) CHECK(mmixup(ptrs, SoftLabel::one_hot(j, 4)).image == imgs[static_cast<std::size_t>(j)]);
}

TEST_CASE("mmixup preconditions") {
  const auto img = constant(3, 0.5f);
  const auto other = constant(4, 0.5f);
  CHECK_THROWS_AS(mmixup(std::vector<const ImageTensor*>{&img, &img}, SoftLabel::one_hot(0, 3)), Error);
  CHECK_THROWS_AS(mmixup(std::vector<const ImageTensor*>{&img, &other}, SoftLabel::one_hot(0, 2)), Error);
  CHECK_THROWS_AS(mmixup(std::vector<const ImageTensor*>{}, SoftLabel{}), Error);
}

TEST_CASE("pixel mixers stay inside the convex hull of their inputs") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ImageTensor> imgs;
    for (int j = 0; j < 3; ++j) imgs.push_back(testing::random_image(8, 8, 1, rng));
    std::vector<const ImageTensor*> ptrs{&imgs[0], &imgs[1], &imgs[2]};
    const auto out = mmixup(ptrs, SoftLabel{testing::random_simplex(3, rng)});
    for (std::size_t k = 0; k < out.image.size(); ++k) {
      const float lo = std::min({imgs[0].values[k], imgs[1].values[k], imgs[2].values[k]});
      const float hi = std::max({imgs[0].values[k], imgs[1].values[k], imgs[2].values[k]});
      CHECK(out.image.values[k] >= lo - 1e-6f);
      CHECK(out.image.values[k] <= hi + 1e-6f);
    }
    double mass = 0.0;
    for (double w : out.label.weights) mass += w;
    CHECK(std::abs(mass - 1.0) <= 1e-6);
  }
}

TEST_CASE("gemix_sample agrees with a stub generator") {
  const auto g = stub_generator(3);
  SamplingStreams streams(10);
  for (int i = 0; i < 200; ++i) {
    const auto s = gemix_sample(g, 3, {}, streams);
    CHECK(s.provenance == Provenance::gemix);
    CHECK(s.label.on_simplex(1e-6));
    for (float v : s.image.values) CHECK(std::abs(v - s.label.weights[0]) <= 1e-6);
  }
}

TEST_CASE("gemix_sample with a single class") {
  const auto g = stub_generator(1);
  SamplingStreams streams(1);
  const auto s = gemix_sample(g, 1, {}, streams);
  CHECK(s.label.weights == std::vector<double>{1.0});
  for (float v : s.image.values) CHECK(v == 1.0f);
}

TEST_CASE("gemix_sample is reproducible for a fixed seed") {
  auto run = [](std::vector<std::vector<float>>& latents) {
    GeneratorHandle g;
    g.info = {3, 2, 1, 5};
    g.generate = [&latents](const LatentVector& z, const SoftLabel&) {
      latents.push_back(z.z);
      return ImageTensor(2, 2, 1, 0.0f);
    };
    SamplingStreams streams(77);
    std::vector<SoftLabel> labels;
    for (int i = 0; i < 20; ++i) labels.push_back(gemix_sample(g, 3, {}, streams).label);
    return labels;
  };
  std::vector<std::vector<float>> z1, z2;
  CHECK(run(z1) == run(z2));
  CHECK(z1 == z2);
}

TEST_CASE("gemix_sample propagates generator failures with context") {
  GeneratorHandle g = stub_generator(2);
  g.generate = [](const LatentVector&, const SoftLabel&) -> ImageTensor {
    throw std::runtime_error("device lost");
  };
  SamplingStreams streams(1);
  try {
    gemix_sample(g, 2, {}, streams);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("device lost") != std::string::npos);
    CHECK(std::string(e.what()).find("generator") != std::string::npos);
  }
  CHECK_THROWS_AS(gemix_sample(stub_generator(3), 2, {}, streams), Error);
}

TEST_CASE("gemix_batch sizes and dominant-class balance") {
  const auto g = stub_generator(3, 1, 1);
  SamplingStreams streams(5);
  CHECK(gemix_batch(g, 0, {}, streams).empty());
  const auto batch = gemix_batch(g, 30000, {}, streams);
  REQUIRE(batch.size() == 30000);
  // The dominant class is not stored; recover the pick stream to count it.
  SamplingStreams replay(5);
  std::vector<int> hist(3, 0);
  for (int i = 0; i < 30000; ++i) ++hist[static_cast<std::size_t>(sample_dominant_class(3, replay.class_picks))];
  for (int h : hist) CHECK(std::abs(h / 30000.0 - 1.0 / 3.0) < 0.02);
  // Labels peak at the dominant class more often than not.
  std::vector<int> argmax_hist(3, 0);
  for (const auto& s : batch) ++argmax_hist[static_cast<std::size_t>(s.label.argmax())];
  for (int h : argmax_hist) CHECK(std::abs(h / 30000.0 - 1.0 / 3.0) < 0.02);
}

TEST_CASE("mmixup_batch scalar oracle, emptiness and determinism") {
  const std::vector<float> v{0.2f, 0.5f, 0.9f};
  std::vector<ImageTensor> imgs;
  for (float x : v) imgs.push_back(constant(3, x));
  std::vector<std::vector<const ImageTensor*>> by_class{{&imgs[0]}, {&imgs[1]}, {&imgs[2]}};

  SamplingStreams streams(3);
  const auto one = mmixup_batch(by_class, 1, {}, streams);
  REQUIRE(one.size() == 1);
  double expected = 0.0;
  for (int j = 0; j < 3; ++j) expected += one[0].label.weights[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
  for (float px : one[0].image.values) CHECK(std::abs(px - expected) <= 1e-6);

  CHECK(mmixup_batch(by_class, 0, {}, streams).empty());

  std::mt19937_64 rng(8);
  std::vector<ImageTensor> pool;
  for (int i = 0; i < 12; ++i) pool.push_back(testing::random_image(4, 4, 1, rng));
  std::vector<std::vector<const ImageTensor*>> groups(3);
  for (int i = 0; i < 12; ++i) groups[static_cast<std::size_t>(i % 3)].push_back(&pool[static_cast<std::size_t>(i)]);
  SamplingStreams s1(21), s2(21);
  const auto b1 = mmixup_batch(groups, 50, {}, s1);
  const auto b2 = mmixup_batch(groups, 50, {}, s2);
  for (std::size_t i = 0; i < b1.size(); ++i) {
    CHECK(b1[i].image == b2[i].image);
    CHECK(b1[i].label == b2[i].label);
  }

  std::vector<std::vector<const ImageTensor*>> with_empty{{&imgs[0]}, {}};
  CHECK_THROWS_AS(mmixup_batch(with_empty, 1, {}, streams), Error);
}

TEST_CASE("mixup_batch draws pairs and Beta coefficients") {
  std::mt19937_64 rng(9);
  std::vector<LabeledSample> pool;
  for (int i = 0; i < 10; ++i)
    pool.push_back({testing::random_image(4, 4, 1, rng), SoftLabel::one_hot(i % 2, 2), Provenance::real});
  SamplingStreams streams(4);
  const auto batch = mixup_batch(pool, 300, 1.0, streams);
  REQUIRE(batch.size() == 300);
  for (const auto& s : batch) {
    CHECK(s.provenance == Provenance::mixup);
    CHECK(s.label.on_simplex(1e-9));
    CHECK(s.image.in_unit_range());
  }
  CHECK(mixup_batch(pool, 0, 1.0, streams).empty());
  CHECK_THROWS_AS(mixup_batch(pool, 1, 0.0, streams), Error);
  CHECK_THROWS_AS(mixup_batch(std::span<const LabeledSample>{}, 1, 1.0, streams), Error);
}
