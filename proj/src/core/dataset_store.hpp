#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/label_sampler.hpp"

namespace gemix {

struct DatasetSplit {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> val;
  std::vector<LabeledSample> test;
};

struct DatasetManifest {
  int format_version = 1;
  int classes = 0;
  int image_size = 0;
  int channels = 1;
  std::size_t count = 0;
  std::vector<std::string> class_names;
};

/// Reads `root/<class>/*` with exactly `classes` sub-directories (sorted by
/// name), resizing every image to image_size x image_size.
std::vector<LabeledSample> load_class_folders(const std::filesystem::path& root,
                                              int classes, int image_size,
                                              int channels = 1,
                                              std::vector<std::string>* class_names = nullptr);

/// Exactly `per_class` samples of each hard class, uniformly without
/// replacement. Output is grouped by class, order permuted within class.
std::vector<LabeledSample> balanced_subsample(const std::vector<LabeledSample>& samples,
                                              int classes, std::size_t per_class,
                                              Rng& rng);

/// Disjoint balanced pools drawn in order, each from what remains.
std::vector<std::vector<LabeledSample>> draw_disjoint_pools(
    const std::vector<LabeledSample>& samples, int classes,
    const std::vector<std::size_t>& per_class_sizes, Rng& rng);

/// Stratified per-class split: round(n_c * train_fraction) train samples.
DatasetSplit split_train_val(const std::vector<LabeledSample>& samples,
                             int classes, double train_fraction, Rng& rng);

/// Writes images/<index>.pfm, labels.jsonl and manifest.json under `out`.
/// Returns the manifest path.
std::filesystem::path save_dataset(const std::vector<LabeledSample>& samples,
                                   const std::filesystem::path& out,
                                   const std::vector<std::string>& class_names = {});

std::vector<LabeledSample> load_dataset(const std::filesystem::path& dir,
                                        DatasetManifest* manifest = nullptr);

DatasetManifest read_manifest(const std::filesystem::path& dir);

/// Per-class counts by hard label (argmax).
std::vector<std::size_t> class_histogram(const std::vector<LabeledSample>& samples,
                                         int classes);

}  // namespace gemix
