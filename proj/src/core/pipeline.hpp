#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/classifier.hpp"
#include "core/dataset_store.hpp"
#include "core/run_config.hpp"

namespace gemix {

enum class AugmentKind { mixup, mmixup, gemix };
std::string_view to_string(AugmentKind kind);
AugmentKind augment_kind_from_string(std::string_view s);

using LogSink = std::function<void(std::string_view)>;

/// Fixed artifact layout under the output root.
struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path gan_dir() const { return root / "gan"; }
  std::filesystem::path gan_checkpoint() const { return gan_dir() / "checkpoint.gmx"; }
  std::filesystem::path gan_log() const { return gan_dir() / "loss_log.jsonl"; }
  std::filesystem::path augment_dir(AugmentKind kind) const;
  std::filesystem::path model_dir(SetupTag setup) const;
  std::filesystem::path model_file(SetupTag setup) const { return model_dir(setup) / "model.gmx"; }
  std::filesystem::path epoch_log(SetupTag setup) const { return model_dir(setup) / "epochs.jsonl"; }
  std::filesystem::path reports() const { return root / "reports"; }
  std::filesystem::path report_file(SetupTag setup) const;
  std::filesystem::path table_file() const { return reports() / "table.txt"; }
  std::filesystem::path features_file(SetupTag setup) const;
};

/// Real-data pools: GAN training, classifier train/val and test, disjoint by
/// image identity.
struct DataPools {
  std::vector<LabeledSample> gan;
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> val;
  std::vector<LabeledSample> test;
  std::vector<std::string> class_names;
};

/// The pipeline stages. Each stage reads its prerequisites from the layout
/// and overwrites its own outputs.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config, LogSink log = {});

  const RunConfig& config() const { return config_; }
  const RunLayout& layout() const { return layout_; }

  std::filesystem::path gen_data();
  std::filesystem::path train_gan();
  std::filesystem::path augment(AugmentKind kind);
  std::filesystem::path train_clf(SetupTag setup);
  /// Evaluates models/<setup>/model.gmx, or `model` when given, on the test pool.
  std::filesystem::path eval(SetupTag setup, const std::optional<std::filesystem::path>& model = {});
  /// Renders reports (all reports/*.json when `reports` is empty) into
  /// reports/table.txt and returns the table text.
  std::string report(const std::vector<std::filesystem::path>& reports = {});
  /// Penultimate features of `features_per_setting` samples per available
  /// setting (real test, mixup, mmixup, gemix) under the given model.
  std::filesystem::path export_features(SetupTag model_setup);

  const DataPools& pools();

 private:
  void log(const std::string& line) const;
  TrainingSetup setup_sizes(SetupTag setup);

  RunConfig config_;
  RunLayout layout_;
  LogSink log_;
  std::optional<DataPools> pools_;
};

}  // namespace gemix
