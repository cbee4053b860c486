#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/cgan.hpp"
#include "core/classifier.hpp"
#include "core/mixers.hpp"

namespace gemix {

inline constexpr const char* kOutputRootEnv = "GEMIX_OUTPUT_ROOT";

struct DataConfig {
  int classes = 3;
  int image_size = 32;
  int channels = 1;
  int per_class = 3000;  // images gen-data writes per class
  std::string source;    // class-folder root; empty -> <output>/data/real
  int gan_per_class = 1000;
  int clf_per_class = 1000;
  int test_per_class = 1000;
  double train_fraction = 0.8;
};

struct MixerConfig {
  int count = 3000;
  double a_eq = kDefaultDominantConcentration;
  double a_neq = kDefaultOtherConcentration;
  double alpha = kDefaultMixupAlpha;
};

struct SetupSizes {
  int base = 0;   // 0 -> size of the real train split
  int extra = 0;  // 0 -> mixers.count
};

/// Everything one experiment needs. JSON field names mirror the members.
struct RunConfig {
  std::string preset = "desk";
  std::string output_dir;  // empty -> $GEMIX_OUTPUT_ROOT or ./gemix-run
  std::uint64_t seed = 1234;
  int threads = 1;
  int positive_class = 0;
  int features_per_setting = 100;
  DataConfig data;
  GanConfig gan;
  ClassifierConfig classifier;
  MixerConfig mixers;
  SetupSizes setups;

  /// Desk-scale defaults (3 classes, 32 px, 1000 images per pool and class).
  static RunConfig desk();
  /// Protocol-scale counts: 10000 per class per pool, 1000 test per class,
  /// 128 px, 24000 real / 30000 augmented.
  static RunConfig paper();

  /// Loads a JSON file. A "preset" key selects the base before other keys apply.
  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_json_text(const std::string& text);
  std::string to_json_text() const;

  /// Dotted-key override, e.g. set("gan.steps", "200"). The value is parsed
  /// as JSON when possible and as a plain string otherwise.
  void set(const std::string& key, const std::string& value);

  /// Rejects any value that would violate a downstream precondition.
  void validate() const;

  std::filesystem::path output_root() const;
  std::filesystem::path data_source() const;
  /// Module configs with the shared fields (classes, size, seed) filled in.
  GanConfig gan_config() const;
  ClassifierConfig classifier_config() const;
};

}  // namespace gemix
