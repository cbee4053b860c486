#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace gemix::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("gemix-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline ImageTensor random_image(int h, int w, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ImageTensor img(h, w, c);
  for (auto& v : img.values) v = u(rng);
  return img;
}

/// Uniform point on the K-simplex from sorted uniform spacings.
inline std::vector<double> random_simplex(int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> cuts(static_cast<std::size_t>(k - 1));
  for (auto& c : cuts) c = u(rng);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> p(static_cast<std::size_t>(k));
  double prev = 0.0;
  for (int j = 0; j < k - 1; ++j) {
    p[static_cast<std::size_t>(j)] = cuts[static_cast<std::size_t>(j)] - prev;
    prev = cuts[static_cast<std::size_t>(j)];
  }
  p.back() = 1.0 - prev;
  return p;
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Every regular file under `root`, relative path -> contents.
inline std::vector<std::pair<std::string, std::string>> snapshot_tree(
    const std::filesystem::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      out.emplace_back(std::filesystem::relative(entry.path(), root).string(),
                       read_bytes(entry.path()));
  std::sort(out.begin(), out.end());
  return out;
}

/// Kolmogorov-Smirnov distance between a sample and the Uniform(0,1) CDF.
inline double ks_uniform(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = std::clamp(xs[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace gemix::testing
