#include "core/image.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace gemix {

ImageTensor::ImageTensor(int h, int w, int c, float fill)
    : height(h), width(w), channels(c) {
  require(h >= 1 && w >= 1 && c >= 1, "image dimensions must be >= 1");
  values.assign(static_cast<std::size_t>(h) * w * c, fill);
}

void ImageTensor::validate() const {
  require(height >= 1 && width >= 1 && channels >= 1,
          "image dimensions must be >= 1");
  require(values.size() == static_cast<std::size_t>(height) * width * channels,
          "image buffer size does not match its shape");
}

bool ImageTensor::in_unit_range() const noexcept {
  return std::all_of(values.begin(), values.end(),
                     [](float v) { return v >= 0.0f && v <= 1.0f; });
}

SoftLabel SoftLabel::one_hot(int class_index, int classes) {
  require(classes >= 1, "class count must be >= 1");
  require(class_index >= 0 && class_index < classes,
          "class index " + std::to_string(class_index) + " outside [0, " +
              std::to_string(classes) + ")");
  SoftLabel label;
  label.weights.assign(static_cast<std::size_t>(classes), 0.0);
  label.weights[static_cast<std::size_t>(class_index)] = 1.0;
  return label;
}

bool SoftLabel::on_simplex(double tolerance) const noexcept {
  if (weights.empty()) return false;
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) return false;
    sum += w;
  }
  return std::abs(sum - 1.0) <= tolerance;
}

int SoftLabel::argmax() const noexcept {
  int best = 0;
  for (std::size_t j = 1; j < weights.size(); ++j)
    if (weights[j] > weights[static_cast<std::size_t>(best)])
      best = static_cast<int>(j);
  return best;
}

bool SoftLabel::is_one_hot() const noexcept {
  int ones = 0;
  for (double w : weights) {
    if (w == 1.0)
      ++ones;
    else if (w != 0.0)
      return false;
  }
  return ones == 1;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::real: return "real";
    case Provenance::mixup: return "mixup";
    case Provenance::mmixup: return "mmixup";
    case Provenance::gemix: return "gemix";
  }
  return "real";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "real") return Provenance::real;
  if (s == "mixup") return Provenance::mixup;
  if (s == "mmixup") return Provenance::mmixup;
  if (s == "gemix") return Provenance::gemix;
  fail(ErrorCode::format, "unknown provenance tag '" + std::string(s) + "'");
}

ImageTensor resize_bilinear(const ImageTensor& src, int out_height,
                            int out_width) {
  src.validate();
  require(out_height >= 1 && out_width >= 1, "resize target must be >= 1");
  if (out_height == src.height && out_width == src.width) return src;

  ImageTensor out(out_height, out_width, src.channels);
  const double sy = static_cast<double>(src.height) / out_height;
  const double sx = static_cast<double>(src.width) / out_width;
  for (int y = 0; y < out_height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < src.channels; ++c) {
        const double top = (1 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c);
        const double bot = (1 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c);
        out.at(y, x, c) = static_cast<float>((1 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

}  // namespace gemix
