#include "core/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "core/errors.hpp"
#include "core/image_codec.hpp"

namespace gemix {
namespace fs = std::filesystem;

namespace {

struct Point {
  double x;
  double y;
};

double box_sd(Point p, double hx, double hy) {
  const double dx = std::abs(p.x) - hx;
  const double dy = std::abs(p.y) - hy;
  const double outside = std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
  return outside + std::min(std::max(dx, dy), 0.0);
}

double triangle_sd(Point p, double r) {
  // Equilateral triangle with circumradius r.
  const double k = std::sqrt(3.0);
  const double side = r * k;
  p.x = std::abs(p.x) - side / 2.0;
  p.y = -p.y + r / 2.0;
  if (p.x + k * p.y > 0.0) p = {(p.x - k * p.y) / 2.0, (-k * p.x - p.y) / 2.0};
  p.x -= std::clamp(p.x, -side, 0.0);
  return -std::hypot(p.x, p.y) * (p.y < 0.0 ? -1.0 : 1.0);
}

double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng.engine());
}

}  // namespace

std::vector<std::string> shape_class_names(int classes) {
  static const char* names[kMaxShapeClasses] = {"disk", "ring", "cross", "square", "triangle", "frame"};
  require(classes >= 1 && classes <= kMaxShapeClasses,
          "synthetic dataset supports 1.." + std::to_string(kMaxShapeClasses) + " classes");
  return {names, names + classes};
}

ImageTensor render_shape(int family, int size, Rng& rng) {
  require(family >= 0 && family < kMaxShapeClasses, "unknown shape family");
  require(size >= 8, "synthetic images need size >= 8");
  const double s = size;
  const double cx = s / 2.0 + uniform(rng, -0.1, 0.1) * s;
  const double cy = s / 2.0 + uniform(rng, -0.1, 0.1) * s;
  const double r = uniform(rng, 0.24, 0.34) * s;
  const double angle = uniform(rng, -0.35, 0.35);
  const double background = uniform(rng, 0.05, 0.25);
  const double foreground = uniform(rng, 0.65, 0.95);
  const double thickness = uniform(rng, 0.28, 0.4) * r;
  const double noise_sigma = 0.03;
  const double ca = std::cos(angle), sa = std::sin(angle);
  std::normal_distribution<double> noise(0.0, noise_sigma);

  ImageTensor img(size, size, 1);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const Point p{ca * dx + sa * dy, -sa * dx + ca * dy};
      double sd = 0.0;
      switch (family) {
        case 0: sd = std::hypot(p.x, p.y) - r; break;
        case 1: sd = std::abs(std::hypot(p.x, p.y) - (r - thickness / 2)) - thickness / 2; break;
        case 2:
          sd = std::min(box_sd(p, r, thickness / 2), box_sd(p, thickness / 2, r));
          break;
        case 3: sd = box_sd(p, 0.8 * r, 0.8 * r); break;
        case 4: sd = triangle_sd(p, 1.1 * r); break;
        case 5: sd = std::abs(box_sd(p, 0.85 * r, 0.85 * r) + thickness / 2) - thickness / 2; break;
      }
      const double coverage = std::clamp(0.5 - sd, 0.0, 1.0);
      const double v = background + (foreground - background) * coverage + noise(rng.engine());
      img.at(y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  return img;
}

std::vector<LabeledSample> generate_shape_samples(int classes, int per_class, int size,
                                                  std::uint64_t seed) {
  shape_class_names(classes);
  require(per_class >= 1, "per_class must be >= 1");
  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(classes) * per_class);
  for (int c = 0; c < classes; ++c) {
    // One stream per class: changing per_class for one class leaves others intact.
    Rng rng = Rng::derive(seed, 1000 + static_cast<std::uint64_t>(c));
    for (int i = 0; i < per_class; ++i)
      out.push_back({render_shape(c, size, rng), SoftLabel::one_hot(c, classes), Provenance::real});
  }
  return out;
}

void write_shape_dataset(const fs::path& root, int classes, int per_class, int size,
                         std::uint64_t seed) {
  const auto names = shape_class_names(classes);
  require(per_class >= 1, "per_class must be >= 1");
  for (int c = 0; c < classes; ++c) {
    std::ostringstream folder;
    folder << c << '_' << names[static_cast<std::size_t>(c)];
    const fs::path dir = root / folder.str();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
    Rng rng = Rng::derive(seed, 1000 + static_cast<std::uint64_t>(c));
    for (int i = 0; i < per_class; ++i) {
      std::ostringstream name;
      name << std::setw(6) << std::setfill('0') << i << ".png";
      write_png(dir / name.str(), render_shape(c, size, rng));
    }
  }
}

}  // namespace gemix
