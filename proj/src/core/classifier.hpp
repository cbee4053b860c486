#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/image.hpp"

namespace gemix {

// ---------------------------------------------------------------------------
// Training setups

enum class SetupTag {
  real,
  mixup,
  mmixup,
  gemix,
  real_mixup,
  real_mmixup,
  real_gemix,
  real_mmixup_gemix,
};

inline constexpr SetupTag kAllSetups[] = {
    SetupTag::real,        SetupTag::mixup,       SetupTag::mmixup,
    SetupTag::gemix,       SetupTag::real_mixup,  SetupTag::real_mmixup,
    SetupTag::real_gemix,  SetupTag::real_mmixup_gemix,
};

std::string_view to_string(SetupTag tag);
SetupTag setup_from_string(std::string_view s);

/// Per-source sample counts of one regime.
struct TrainingSetup {
  SetupTag tag = SetupTag::real;
  std::size_t real = 0;
  std::size_t mixup = 0;
  std::size_t mmixup = 0;
  std::size_t gemix = 0;

  std::size_t total() const noexcept { return real + mixup + mmixup + gemix; }

  /// Regime sizes from a base count (the real train split) and the
  /// extra count used when real data is stacked with one augmentation.
  /// Single-source regimes use `base` images; Real+X uses base + extra;
  /// Real+MMixup+GeMix uses base of each.
  static TrainingSetup make(SetupTag tag, std::size_t base, std::size_t extra);
};

struct SetupSources {
  const std::vector<LabeledSample>* real = nullptr;
  const std::vector<LabeledSample>* mixup = nullptr;
  const std::vector<LabeledSample>* mmixup = nullptr;
  const std::vector<LabeledSample>* gemix = nullptr;
};

/// Concatenates the first n samples of each required source, then shuffles.
std::vector<LabeledSample> assemble_training_set(const TrainingSetup& setup,
                                                 const SetupSources& sources,
                                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Soft-label loss (double precision reference path)

inline constexpr double kProbabilityFloor = 1e-12;

/// -sum_j target_j * log(max(p_j, 1e-12)).
double soft_cross_entropy(std::span<const double> probs, std::span<const double> target);

std::vector<double> softmax(std::span<const double> logits);

/// Soft cross-entropy of softmax(logits) against target, evaluated in a
/// numerically stable log-sum-exp form.
double soft_cross_entropy_logits(std::span<const double> logits,
                                 std::span<const double> target);

/// d/dlogits of soft_cross_entropy_logits: softmax(logits) * sum(target) - target.
std::vector<double> soft_cross_entropy_logits_grad(std::span<const double> logits,
                                                   std::span<const double> target);

double entropy(std::span<const double> p);

// ---------------------------------------------------------------------------
// Classifier

struct ClassifierConfig {
  int epochs = 5;
  int batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int classes = 3;
  int image_size = 32;
  int channels = 1;
  int base_width = 32;
  std::uint64_t seed = 0;
  std::string backbone = "small-cnn";

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

class ClassifierModel {
 public:
  explicit ClassifierModel(const ClassifierConfig& config);
  ~ClassifierModel();
  ClassifierModel(const ClassifierModel&);
  ClassifierModel& operator=(const ClassifierModel&);
  ClassifierModel(ClassifierModel&&) noexcept;
  ClassifierModel& operator=(ClassifierModel&&) noexcept;

  const ClassifierConfig& config() const;

  /// Class probabilities (rows on the simplex), inference mode.
  std::vector<std::vector<double>> predict(std::span<const ImageTensor> images) const;
  /// Penultimate (globally pooled) activations.
  std::vector<std::vector<float>> extract_features(std::span<const ImageTensor> images) const;
  int feature_dim() const;

  void save(const std::filesystem::path& path) const;
  static ClassifierModel load(const std::filesystem::path& path);

  struct Impl;

 private:
  explicit ClassifierModel(std::shared_ptr<Impl> impl);
  std::shared_ptr<Impl> impl_;
  friend struct ClassifierTraining train_classifier(
      const std::vector<LabeledSample>&, const std::vector<LabeledSample>&,
      const ClassifierConfig&, const std::function<void(const EpochRecord&)>&);
};

struct ClassifierTraining {
  ClassifierModel model;
  std::vector<EpochRecord> log;
};

using EpochProgress = std::function<void(const EpochRecord&)>;

/// Mini-batch momentum SGD on soft cross-entropy. `val` may be empty.
ClassifierTraining train_classifier(const std::vector<LabeledSample>& train,
                                    const std::vector<LabeledSample>& val,
                                    const ClassifierConfig& config,
                                    const EpochProgress& progress = {});

void write_epoch_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log);

/// CSV with header `sample_id,provenance,f_1,...,f_d`.
void write_feature_table(const std::filesystem::path& path,
                         const std::vector<std::string>& sample_ids,
                         const std::vector<std::string>& provenance,
                         const std::vector<std::vector<float>>& features);

}  // namespace gemix
