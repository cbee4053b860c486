#include "core/mixers.hpp"

#include <exception>

#include "core/errors.hpp"

namespace gemix {

MixedSample mixup_pair(const ImageTensor& x_i, const SoftLabel& y_i,
                       const ImageTensor& x_j, const SoftLabel& y_j, double lam) {
  x_i.validate();
  x_j.validate();
  require(x_i.same_shape(x_j), "mixup_pair: image shapes differ");
  require(y_i.classes() == y_j.classes(), "mixup_pair: label lengths differ");
  require(lam >= 0.0 && lam <= 1.0, "mixup_pair: lambda outside [0,1]");

  MixedSample out;
  out.provenance = Provenance::mixup;
  out.image = ImageTensor(x_i.height, x_i.width, x_i.channels);
  const float a = static_cast<float>(lam);
  const float b = static_cast<float>(1.0 - lam);
  for (std::size_t k = 0; k < x_i.size(); ++k)
    out.image.values[k] = a * x_i.values[k] + b * x_j.values[k];
  out.label.weights.resize(y_i.classes());
  for (std::size_t j = 0; j < y_i.classes(); ++j)
    out.label.weights[j] = lam * y_i.weights[j] + (1.0 - lam) * y_j.weights[j];
  return out;
}

MixedSample mmixup(std::span<const ImageTensor* const> images,
                   const SoftLabel& ell) {
  require(!images.empty(), "mmixup: no images");
  require(images.size() == ell.classes(),
          "mmixup: expected " + std::to_string(ell.classes()) +
              " images (one per class), got " + std::to_string(images.size()));
  const ImageTensor& first = *images[0];
  first.validate();
  for (const auto* img : images) {
    require(img != nullptr, "mmixup: null image");
    require(img->same_shape(first), "mmixup: image shapes differ");
  }

  MixedSample out;
  out.provenance = Provenance::mmixup;
  out.label = ell;
  out.image = ImageTensor(first.height, first.width, first.channels);
  for (std::size_t j = 0; j < images.size(); ++j) {
    const float w = static_cast<float>(ell.weights[j]);
    if (w == 0.0f) continue;
    const auto& src = images[j]->values;
    for (std::size_t k = 0; k < src.size(); ++k) out.image.values[k] += w * src[k];
  }
  return out;
}

MixedSample gemix_sample(const GeneratorHandle& generator, int classes,
                         const DirichletPrior& prior, SamplingStreams& streams) {
  require(generator.generate != nullptr, "gemix: generator handle is empty");
  require(generator.info.classes == classes,
          "gemix: generator is conditioned on " +
              std::to_string(generator.info.classes) + " classes, requested " +
              std::to_string(classes));
  const int c = sample_dominant_class(classes, streams.class_picks);
  SoftLabel ell;
  if (classes == 1) {
    ell = SoftLabel::one_hot(0, 1);
  } else {
    const auto theta = build_concentration(c, classes, prior.dominant, prior.other);
    ell = sample_soft_label(theta, streams.soft_labels);
  }
  const auto z = sample_latent(generator.info.latent_dim, streams.latents);

  MixedSample out;
  out.provenance = Provenance::gemix;
  try {
    out.image = generator.generate(z, ell);
  } catch (const Error& e) {
    throw Error(e.code(), std::string("gemix: generator failed: ") + e.what());
  } catch (const std::exception& e) {
    fail(ErrorCode::runtime, std::string("gemix: generator failed: ") + e.what());
  }
  out.label = std::move(ell);
  return out;
}

std::vector<MixedSample> gemix_batch(const GeneratorHandle& generator, int count,
                                     const DirichletPrior& prior,
                                     SamplingStreams& streams) {
  require(count >= 0, "gemix_batch: count must be >= 0");
  std::vector<MixedSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out.push_back(gemix_sample(generator, generator.info.classes, prior, streams));
  return out;
}

std::vector<MixedSample> mmixup_batch(
    const std::vector<std::vector<const ImageTensor*>>& by_class, int count,
    const DirichletPrior& prior, SamplingStreams& streams) {
  require(count >= 0, "mmixup_batch: count must be >= 0");
  require(!by_class.empty(), "mmixup_batch: no classes");
  for (std::size_t j = 0; j < by_class.size(); ++j)
    require(!by_class[j].empty(),
            "mmixup_batch: class " + std::to_string(j) + " has no images");

  const int classes = static_cast<int>(by_class.size());
  std::vector<MixedSample> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<const ImageTensor*> picks(by_class.size());
  for (int i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < by_class.size(); ++j)
      picks[j] = by_class[j][streams.image_picks.uniform_index(by_class[j].size())];
    const int c = sample_dominant_class(classes, streams.class_picks);
    const SoftLabel ell =
        classes == 1
            ? SoftLabel::one_hot(0, 1)
            : sample_soft_label(
                  build_concentration(c, classes, prior.dominant, prior.other),
                  streams.soft_labels);
    out.push_back(mmixup(picks, ell));
  }
  return out;
}

std::vector<MixedSample> mixup_batch(std::span<const LabeledSample> pool,
                                     int count, double alpha,
                                     SamplingStreams& streams) {
  require(count >= 0, "mixup_batch: count must be >= 0");
  require(alpha > 0.0, "mixup_batch: alpha must be > 0");
  if (count == 0) return {};
  require(!pool.empty(), "mixup_batch: empty source pool");
  std::vector<MixedSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto& a = pool[streams.image_picks.uniform_index(pool.size())];
    const auto& b = pool[streams.image_picks.uniform_index(pool.size())];
    const double lam = sample_mix_coefficient(alpha, streams.mix_coefficients);
    out.push_back(mixup_pair(a.image, a.label, b.image, b.label, lam));
  }
  return out;
}

}  // namespace gemix
