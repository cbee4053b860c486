#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gemix {

/// H x W x C float image, interleaved (HWC) storage. Canonical range is [0,1].
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<float> values;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c, float fill = 0.0f);

  std::size_t size() const noexcept { return values.size(); }
  bool same_shape(const ImageTensor& other) const noexcept {
    return height == other.height && width == other.width &&
           channels == other.channels;
  }
  float& at(int y, int x, int c = 0) {
    return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c = 0) const {
    return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  /// Throws when the shape is degenerate or the buffer size disagrees.
  void validate() const;
  bool in_unit_range() const noexcept;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;
};

/// Probability vector over K classes.
struct SoftLabel {
  std::vector<double> weights;

  std::size_t classes() const noexcept { return weights.size(); }
  static SoftLabel one_hot(int class_index, int classes);

  /// Checks each weight in [0,1] and the sum within `tolerance` of 1.
  bool on_simplex(double tolerance = 1e-6) const noexcept;
  /// Index of the largest weight, lowest index on ties.
  int argmax() const noexcept;
  /// True when one weight is exactly 1 and the rest exactly 0.
  bool is_one_hot() const noexcept;

  friend bool operator==(const SoftLabel&, const SoftLabel&) = default;
};

enum class Provenance { real, mixup, mmixup, gemix };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct LabeledSample {
  ImageTensor image;
  SoftLabel label;
  Provenance provenance = Provenance::real;
};

/// Bilinear resize using pixel-centre alignment (edges clamped).
ImageTensor resize_bilinear(const ImageTensor& src, int out_height,
                            int out_width);

}  // namespace gemix
