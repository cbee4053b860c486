#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/label_sampler.hpp"

namespace gemix {

/// Parametric shape families used as class surrogates, in class order.
inline constexpr int kMaxShapeClasses = 6;
std::vector<std::string> shape_class_names(int classes);

/// One grayscale image of `family` with jittered centre, size, rotation,
/// intensities and additive noise.
ImageTensor render_shape(int family, int size, Rng& rng);

std::vector<LabeledSample> generate_shape_samples(int classes, int per_class, int size,
                                                  std::uint64_t seed);

/// Writes root/<index>_<name>/<n>.png for every class. Images go through
/// 8-bit PNG quantisation.
void write_shape_dataset(const std::filesystem::path& root, int classes, int per_class,
                         int size, std::uint64_t seed);

}  // namespace gemix
