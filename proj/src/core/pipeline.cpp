#include "core/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "core/cgan.hpp"
#include "core/errors.hpp"
#include "core/evaluation.hpp"
#include "core/mixers.hpp"
#include "core/runtime.hpp"
#include "core/shapes.hpp"

namespace gemix {
namespace fs = std::filesystem;

std::string_view to_string(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::mixup: return "mixup";
    case AugmentKind::mmixup: return "mmixup";
    case AugmentKind::gemix: return "gemix";
  }
  return "mixup";
}

AugmentKind augment_kind_from_string(std::string_view s) {
  if (s == "mixup") return AugmentKind::mixup;
  if (s == "mmixup") return AugmentKind::mmixup;
  if (s == "gemix") return AugmentKind::gemix;
  fail(ErrorCode::invalid_argument,
       "unknown augmentation kind '" + std::string(s) + "' (expected mixup, mmixup or gemix)");
}

fs::path RunLayout::augment_dir(AugmentKind kind) const {
  return root / "aug" / std::string(to_string(kind));
}
fs::path RunLayout::model_dir(SetupTag setup) const {
  return root / "models" / std::string(to_string(setup));
}
fs::path RunLayout::report_file(SetupTag setup) const {
  return reports() / (std::string(to_string(setup)) + ".json");
}
fs::path RunLayout::features_file(SetupTag setup) const {
  return root / "features" / (std::string(to_string(setup)) + ".csv");
}

namespace {

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
}

std::uint64_t augment_seed(std::uint64_t seed, AugmentKind kind) {
  return Rng::derive(seed, 20 + static_cast<std::uint64_t>(kind)).next();
}

std::vector<int> hard_labels(const std::vector<LabeledSample>& samples) {
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label.argmax());
  return labels;
}

std::vector<ImageTensor> images_of(const std::vector<LabeledSample>& samples, std::size_t limit) {
  std::vector<ImageTensor> out;
  const auto n = std::min(limit, samples.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(samples[i].image);
  return out;
}

}  // namespace

Pipeline::Pipeline(RunConfig config, LogSink log)
    : config_(std::move(config)), log_(std::move(log)) {
  config_.validate();
  layout_.root = config_.output_root();
  set_compute_threads(config_.threads);
}

void Pipeline::log(const std::string& line) const {
  if (log_) log_(line);
}

fs::path Pipeline::gen_data() {
  if (!config_.data.source.empty())
    fail(ErrorCode::config, "gen-data writes the synthetic dataset under " + layout_.data().string() +
                                "; unset data.source to use it");
  const fs::path target = config_.data_source();
  std::error_code ec;
  fs::remove_all(target, ec);
  make_dirs(target);
  log("writing " + std::to_string(config_.data.per_class) + " images per class for " +
      std::to_string(config_.data.classes) + " classes to " + target.string());
  write_shape_dataset(target, config_.data.classes, config_.data.per_class, config_.data.image_size,
                      config_.seed);
  pools_.reset();
  return target;
}

const DataPools& Pipeline::pools() {
  if (pools_) return *pools_;
  const fs::path source = config_.data_source();
  if (!fs::is_directory(source))
    fail(ErrorCode::missing_artifact,
         "no dataset at " + source.string() + " (run the gen-data stage or set data.source)");
  DataPools pools;
  const auto all = load_class_folders(source, config_.data.classes, config_.data.image_size,
                                      config_.data.channels, &pools.class_names);
  Rng pool_rng = Rng::derive(config_.seed, stream::pool_selection);
  auto drawn = draw_disjoint_pools(
      all, config_.data.classes,
      {static_cast<std::size_t>(config_.data.gan_per_class),
       static_cast<std::size_t>(config_.data.clf_per_class),
       static_cast<std::size_t>(config_.data.test_per_class)},
      pool_rng);
  Rng split_rng = Rng::derive(config_.seed, stream::train_split);
  auto split = split_train_val(drawn[1], config_.data.classes, config_.data.train_fraction, split_rng);
  pools.gan = std::move(drawn[0]);
  pools.train = std::move(split.train);
  pools.val = std::move(split.val);
  pools.test = std::move(drawn[2]);
  pools_ = std::move(pools);
  return *pools_;
}

fs::path Pipeline::train_gan() {
  const auto& data = pools();
  const auto gan_config = config_.gan_config();
  make_dirs(layout_.gan_dir());
  log("training cGAN on " + std::to_string(data.gan.size()) + " images for " +
      std::to_string(gan_config.steps) + " steps");
  auto result = train_cgan(data.gan, gan_config, [this, &gan_config](const GanLossRecord& r) {
    if (r.step % 500 == 0 || r.step == gan_config.steps) {
      std::ostringstream line;
      line << "  step " << r.step << " d_loss " << r.d_loss << " g_loss " << r.g_loss;
      log(line.str());
    }
  });
  write_gan_log(layout_.gan_log(), result.log);
  result.checkpoint.save(layout_.gan_checkpoint());
  return layout_.gan_checkpoint();
}

fs::path Pipeline::augment(AugmentKind kind) {
  const int count = config_.mixers.count;
  const DirichletPrior prior{config_.mixers.a_eq, config_.mixers.a_neq};
  SamplingStreams streams(augment_seed(config_.seed, kind));
  std::vector<MixedSample> batch;
  std::vector<std::string> class_names;

  if (kind == AugmentKind::gemix) {
    const auto ckpt_path = layout_.gan_checkpoint();
    if (!fs::exists(ckpt_path))
      fail(ErrorCode::missing_artifact, "augment gemix needs the train-gan stage output: " +
                                            ckpt_path.string() + " not found");
    const auto ckpt = GanCheckpoint::load(ckpt_path);
    const auto& gc = ckpt.config();
    if (gc.classes != config_.data.classes || gc.image_size != config_.data.image_size ||
        gc.channels != config_.data.channels)
      fail(ErrorCode::config, "checkpoint " + ckpt_path.string() +
                                  " was trained for a different class count or image shape");
    log("generating " + std::to_string(count) + " GeMix samples");
    batch = gemix_batch(ckpt.handle(), count, prior, streams);
    if (fs::is_directory(config_.data_source())) class_names = pools().class_names;
  } else {
    const auto& data = pools();
    class_names = data.class_names;
    if (kind == AugmentKind::mixup) {
      log("mixing " + std::to_string(count) + " image pairs (alpha " +
          std::to_string(config_.mixers.alpha) + ")");
      batch = mixup_batch(data.train, count, config_.mixers.alpha, streams);
    } else {
      std::vector<std::vector<const ImageTensor*>> by_class(static_cast<std::size_t>(config_.data.classes));
      for (const auto& s : data.train) by_class[static_cast<std::size_t>(s.label.argmax())].push_back(&s.image);
      log("blending " + std::to_string(count) + " multi-image mixtures");
      batch = mmixup_batch(by_class, count, prior, streams);
    }
  }
  const auto dir = layout_.augment_dir(kind);
  make_dirs(dir);
  save_dataset(batch, dir, class_names);
  return dir;
}

TrainingSetup Pipeline::setup_sizes(SetupTag setup) {
  const std::size_t base = config_.setups.base > 0 ? static_cast<std::size_t>(config_.setups.base)
                                                   : pools().train.size();
  const std::size_t extra = config_.setups.extra > 0 ? static_cast<std::size_t>(config_.setups.extra)
                                                     : static_cast<std::size_t>(config_.mixers.count);
  return TrainingSetup::make(setup, base, extra);
}

fs::path Pipeline::train_clf(SetupTag setup) {
  const auto sizes = setup_sizes(setup);
  const auto& data = pools();

  std::vector<LabeledSample> mixup, mmixup, gemix;
  auto load_source = [&](std::size_t needed, AugmentKind kind, std::vector<LabeledSample>& dst) {
    if (needed == 0) return;
    const auto dir = layout_.augment_dir(kind);
    if (!fs::exists(dir / "manifest.json"))
      fail(ErrorCode::missing_artifact, "setup " + std::string(to_string(setup)) + " needs the augment " +
                                            std::string(to_string(kind)) + " stage output: " + dir.string() +
                                            " not found");
    dst = load_dataset(dir);
  };
  load_source(sizes.mixup, AugmentKind::mixup, mixup);
  load_source(sizes.mmixup, AugmentKind::mmixup, mmixup);
  load_source(sizes.gemix, AugmentKind::gemix, gemix);
  if (sizes.real > data.train.size())
    fail(ErrorCode::config, "setup " + std::string(to_string(setup)) + " needs " +
                                std::to_string(sizes.real) + " real samples, the train split has " +
                                std::to_string(data.train.size()));

  SetupSources sources{&data.train, sizes.mixup ? &mixup : nullptr, sizes.mmixup ? &mmixup : nullptr,
                       sizes.gemix ? &gemix : nullptr};
  const auto train = assemble_training_set(sizes, sources, config_.seed);
  log("training " + config_.classifier.backbone + " on " + std::string(to_string(setup)) + " (" +
      std::to_string(train.size()) + " samples)");
  auto trained = train_classifier(train, data.val, config_.classifier_config(), [this](const EpochRecord& r) {
    std::ostringstream line;
    line << "  epoch " << r.epoch << " train_loss " << r.train_loss << " val_loss " << r.val_loss
         << " val_acc " << r.val_accuracy;
    log(line.str());
  });
  make_dirs(layout_.model_dir(setup));
  write_epoch_log(layout_.epoch_log(setup), trained.log);
  trained.model.save(layout_.model_file(setup));
  return layout_.model_file(setup);
}

fs::path Pipeline::eval(SetupTag setup, const std::optional<fs::path>& model) {
  const fs::path model_path = model.value_or(layout_.model_file(setup));
  if (!fs::exists(model_path))
    fail(ErrorCode::missing_artifact, "eval needs the train-clf stage output: " + model_path.string() +
                                          " not found");
  const auto clf = ClassifierModel::load(model_path);
  const auto& test = pools().test;
  const auto images = images_of(test, test.size());
  const auto probs = clf.predict(images);
  const auto cm = confusion_matrix(probs, hard_labels(test), config_.data.classes);
  const auto report = make_report(std::string(to_string(setup)), clf.config().backbone, cm,
                                  config_.positive_class);
  make_dirs(layout_.reports());
  const auto out = layout_.report_file(setup);
  write_report(report, out);
  log(render_table_row(report));
  return out;
}

std::string Pipeline::report(const std::vector<fs::path>& reports) {
  std::vector<fs::path> paths = reports;
  if (paths.empty() && fs::is_directory(layout_.reports())) {
    for (const auto& entry : fs::directory_iterator(layout_.reports()))
      if (entry.path().extension() == ".json") paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
  }
  if (paths.empty())
    fail(ErrorCode::missing_artifact, "report needs eval stage outputs; none found under " +
                                          layout_.reports().string());
  std::vector<MetricsReport> loaded;
  for (const auto& p : paths) loaded.push_back(read_report(p));
  const auto table = render_table(loaded);
  make_dirs(layout_.reports());
  std::ofstream out(layout_.table_file(), std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + layout_.table_file().string());
  out << table;
  return table;
}

fs::path Pipeline::export_features(SetupTag model_setup) {
  const auto model_path = layout_.model_file(model_setup);
  if (!fs::exists(model_path))
    fail(ErrorCode::missing_artifact, "features need the train-clf stage output: " + model_path.string() +
                                          " not found");
  const auto clf = ClassifierModel::load(model_path);
  const auto per_setting = static_cast<std::size_t>(config_.features_per_setting);

  std::vector<std::string> ids, provenance;
  std::vector<std::vector<float>> features;
  auto add = [&](const std::string& setting, const std::vector<LabeledSample>& samples) {
    const auto images = images_of(samples, per_setting);
    auto f = clf.extract_features(images);
    for (std::size_t i = 0; i < f.size(); ++i) {
      ids.push_back(setting + "_" + std::to_string(i));
      provenance.push_back(std::string(to_string(samples[i].provenance)));
      features.push_back(std::move(f[i]));
    }
  };
  add("real", pools().test);
  for (auto kind : {AugmentKind::mixup, AugmentKind::mmixup, AugmentKind::gemix}) {
    const auto dir = layout_.augment_dir(kind);
    if (fs::exists(dir / "manifest.json")) add(std::string(to_string(kind)), load_dataset(dir));
  }
  const auto out = layout_.features_file(model_setup);
  make_dirs(out.parent_path());
  write_feature_table(out, ids, provenance, features);
  return out;
}

}  // namespace gemix
