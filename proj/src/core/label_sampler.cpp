#include "core/label_sampler.hpp"

#include <sstream>

#include "core/errors.hpp"

namespace gemix {

Rng Rng::derive(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose),
                    static_cast<std::uint32_t>(purpose >> 32)};
  Rng rng;
  rng.engine_.seed(seq);
  return rng;
}

std::size_t Rng::uniform_index(std::size_t n) {
  require(n >= 1, "uniform_index needs a non-empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream in(state);
  in >> engine_;
  if (!in) fail(ErrorCode::format, "malformed RNG state");
}

SamplingStreams::SamplingStreams(std::uint64_t seed)
    : class_picks(Rng::derive(seed, stream::class_picks)),
      soft_labels(Rng::derive(seed, stream::soft_labels)),
      latents(Rng::derive(seed, stream::latents)),
      image_picks(Rng::derive(seed, stream::image_picks)),
      mix_coefficients(Rng::derive(seed, stream::mix_coefficients)) {}

int sample_dominant_class(int classes, Rng& rng) {
  require(classes >= 1, "class count must be >= 1, got " + std::to_string(classes));
  return static_cast<int>(rng.uniform_index(static_cast<std::size_t>(classes)));
}

ConcentrationVector build_concentration(int dominant, int classes,
                                        double dominant_concentration,
                                        double other_concentration) {
  require(classes >= 1, "class count must be >= 1");
  require(dominant >= 0 && dominant < classes,
          "dominant class " + std::to_string(dominant) + " outside [0, " +
              std::to_string(classes) + ")");
  require(other_concentration > 0.0 &&
              dominant_concentration > other_concentration,
          "concentrations must satisfy a_eq > a_neq > 0 (got a_eq=" +
              std::to_string(dominant_concentration) +
              ", a_neq=" + std::to_string(other_concentration) + ")");
  ConcentrationVector cv;
  cv.dominant = dominant;
  cv.theta.assign(static_cast<std::size_t>(classes), other_concentration);
  cv.theta[static_cast<std::size_t>(dominant)] = dominant_concentration;
  return cv;
}

SoftLabel sample_soft_label(const ConcentrationVector& theta, Rng& rng) {
  require(!theta.theta.empty(), "concentration vector is empty");
  SoftLabel label;
  label.weights.resize(theta.theta.size());
  if (theta.theta.size() == 1) {
    label.weights[0] = 1.0;
    return label;
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < theta.theta.size(); ++j) {
    require(theta.theta[j] > 0.0, "concentration entries must be positive");
    std::gamma_distribution<double> gamma(theta.theta[j], 1.0);
    label.weights[j] = gamma(rng.engine());
    sum += label.weights[j];
  }
  if (!(sum > 0.0)) {
    // Every gamma draw underflowed; fall back to the mode direction.
    label.weights.assign(theta.theta.size(), 0.0);
    label.weights[static_cast<std::size_t>(theta.dominant)] = 1.0;
    return label;
  }
  for (double& w : label.weights) w /= sum;
  // Second pass removes the residual rounding from the first division.
  double renorm = 0.0;
  for (double w : label.weights) renorm += w;
  for (double& w : label.weights) w /= renorm;
  return label;
}

double sample_mix_coefficient(double alpha, Rng& rng) {
  require(alpha > 0.0, "mixup alpha must be > 0, got " + std::to_string(alpha));
  std::gamma_distribution<double> gamma(alpha, 1.0);
  const double x = gamma(rng.engine());
  const double y = gamma(rng.engine());
  if (x + y <= 0.0) return 0.5;
  return x / (x + y);
}

LatentVector sample_latent(int dim, Rng& rng) {
  require(dim >= 1, "latent dimension must be >= 1, got " + std::to_string(dim));
  std::normal_distribution<double> normal(0.0, 1.0);
  LatentVector v;
  v.z.resize(static_cast<std::size_t>(dim));
  for (float& x : v.z) x = static_cast<float>(normal(rng.engine()));
  return v;
}

}  // namespace gemix
