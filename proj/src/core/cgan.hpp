#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/label_sampler.hpp"
#include "core/mixers.hpp"

namespace gemix {

struct GanConfig {
  int image_size = 32;  // 4 * 2^n, n >= 1
  int channels = 1;
  int classes = 3;
  int latent_dim = 64;
  int batch_size = 32;
  int steps = 5000;
  double lr_generator = 2e-4;
  double lr_discriminator = 2e-4;
  double adam_beta1 = 0.5;
  int label_embed_dim = 16;
  int base_width = 32;
  std::uint64_t seed = 0;

  /// Throws Error(config) on the first invalid field.
  void validate() const;
};

struct GanLossRecord {
  std::int64_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;

  friend bool operator==(const GanLossRecord&, const GanLossRecord&) = default;
};

/// Generator + discriminator parameters with their config and training state.
/// Copies share the underlying networks.
class GanCheckpoint {
 public:
  /// Freshly initialised networks (seeded by config.seed).
  explicit GanCheckpoint(const GanConfig& config);
  ~GanCheckpoint();
  GanCheckpoint(const GanCheckpoint&);
  GanCheckpoint& operator=(const GanCheckpoint&);
  GanCheckpoint(GanCheckpoint&&) noexcept;
  GanCheckpoint& operator=(GanCheckpoint&&) noexcept;

  const GanConfig& config() const;
  std::int64_t step() const;
  const std::string& rng_state() const;

  /// Deterministic G(z, ell) in [0,1]. Soft labels are accepted.
  ImageTensor generate(const LatentVector& z, const SoftLabel& ell) const;

  /// Output of the generator's linear label pathway.
  std::vector<float> embed_label(const SoftLabel& ell) const;

  /// Discriminator logit for an image/label pair.
  double discriminate(const ImageTensor& image, const SoftLabel& ell) const;

  GeneratorHandle handle() const;

  void save(const std::filesystem::path& path) const;
  static GanCheckpoint load(const std::filesystem::path& path);

  struct Impl;

 private:
  explicit GanCheckpoint(std::shared_ptr<Impl> impl);
  std::shared_ptr<Impl> impl_;
  friend struct GanTrainingResult train_cgan(const std::vector<LabeledSample>&,
                                            const GanConfig&,
                                            const std::function<void(const GanLossRecord&)>&);
};

struct GanTrainingResult {
  GanCheckpoint checkpoint;
  std::vector<GanLossRecord> log;
};

using GanProgress = std::function<void(const GanLossRecord&)>;

/// Alternating 1:1 discriminator / generator updates of the conditional
/// objective with the non-saturating generator loss. Stage-1 input must be
/// one-hot labelled.
GanTrainingResult train_cgan(const std::vector<LabeledSample>& dataset,
                             const GanConfig& config, const GanProgress& progress = {});

void write_gan_log(const std::filesystem::path& path, const std::vector<GanLossRecord>& log);
std::vector<GanLossRecord> read_gan_log(const std::filesystem::path& path);

}  // namespace gemix
