#pragma once

#include <functional>
#include <span>
#include <vector>

#include "core/image.hpp"
#include "core/label_sampler.hpp"

namespace gemix {

using MixedSample = LabeledSample;

struct GeneratorInfo {
  int classes = 0;
  int image_size = 0;
  int channels = 1;
  int latent_dim = 0;
};

/// Conditional generator (z, soft label) -> image in [0,1].
struct GeneratorHandle {
  GeneratorInfo info;
  std::function<ImageTensor(const LatentVector&, const SoftLabel&)> generate;
};

/// lam * (x_i, y_i) + (1 - lam) * (x_j, y_j).
MixedSample mixup_pair(const ImageTensor& x_i, const SoftLabel& y_i,
                       const ImageTensor& x_j, const SoftLabel& y_j, double lam);

/// sum_j ell_j * x_j with one image per class; the label is ell itself.
MixedSample mmixup(std::span<const ImageTensor* const> images,
                   const SoftLabel& ell);

struct DirichletPrior {
  double dominant = kDefaultDominantConcentration;
  double other = kDefaultOtherConcentration;
};

/// One draw: c ~ U{0..K-1}, ell ~ Dir(theta(c)), z ~ N(0, I), x = G(z, ell).
MixedSample gemix_sample(const GeneratorHandle& generator, int classes,
                         const DirichletPrior& prior, SamplingStreams& streams);

std::vector<MixedSample> gemix_batch(const GeneratorHandle& generator, int count,
                                     const DirichletPrior& prior,
                                     SamplingStreams& streams);

/// Each draw picks one image per class uniformly (with replacement across
/// draws) and blends them with a pivot-biased Dirichlet label.
std::vector<MixedSample> mmixup_batch(
    const std::vector<std::vector<const ImageTensor*>>& by_class, int count,
    const DirichletPrior& prior, SamplingStreams& streams);

/// Classic two-image mixup: pairs drawn uniformly from `pool`,
/// lambda ~ Beta(alpha, alpha).
std::vector<MixedSample> mixup_batch(std::span<const LabeledSample> pool,
                                     int count, double alpha,
                                     SamplingStreams& streams);

}  // namespace gemix
