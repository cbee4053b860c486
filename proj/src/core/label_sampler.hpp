#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace gemix {

/// Algorithm defaults: dominant / other concentration and batch size.
inline constexpr double kDefaultDominantConcentration = 2.0;
inline constexpr double kDefaultOtherConcentration = 1.0;
inline constexpr int kDefaultGemixCount = 30000;
inline constexpr double kDefaultMixupAlpha = 1.0;

/// Seeded 64-bit Mersenne Twister. Distinct purposes get distinct streams via
/// `Rng::derive`, so adding draws of one kind never shifts another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Independent stream for `purpose`, a fixed offset from the run seed.
  static Rng derive(std::uint64_t seed, std::uint64_t purpose);

  std::mt19937_64& engine() noexcept { return engine_; }
  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

  std::string state() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

/// Fixed substream offsets used across the pipeline.
namespace stream {
inline constexpr std::uint64_t data_generation = 1;
inline constexpr std::uint64_t pool_selection = 2;
inline constexpr std::uint64_t train_split = 3;
inline constexpr std::uint64_t gan_training = 4;
inline constexpr std::uint64_t class_picks = 5;
inline constexpr std::uint64_t soft_labels = 6;
inline constexpr std::uint64_t latents = 7;
inline constexpr std::uint64_t image_picks = 8;
inline constexpr std::uint64_t mix_coefficients = 9;
inline constexpr std::uint64_t classifier_training = 10;
inline constexpr std::uint64_t setup_assembly = 11;
inline constexpr std::uint64_t evaluation_draws = 12;
}  // namespace stream

/// Per-purpose streams consumed by the batch mixers.
struct SamplingStreams {
  Rng class_picks;
  Rng soft_labels;
  Rng latents;
  Rng image_picks;
  Rng mix_coefficients;

  explicit SamplingStreams(std::uint64_t seed);
};

struct ConcentrationVector {
  std::vector<double> theta;
  int dominant = 0;
};

struct LatentVector {
  std::vector<float> z;
};

int sample_dominant_class(int classes, Rng& rng);

/// theta_j = dominant_concentration at j == dominant, other_concentration
/// elsewhere. Requires dominant_concentration > other_concentration > 0.
ConcentrationVector build_concentration(int dominant, int classes,
                                        double dominant_concentration,
                                        double other_concentration);

/// Dirichlet(theta) via normalised Gamma(theta_j, 1) draws.
SoftLabel sample_soft_label(const ConcentrationVector& theta, Rng& rng);

/// lambda ~ Beta(alpha, alpha) as X / (X + Y), X, Y ~ Gamma(alpha, 1).
double sample_mix_coefficient(double alpha, Rng& rng);

LatentVector sample_latent(int dim, Rng& rng);

}  // namespace gemix
