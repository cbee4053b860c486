#include "core/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <mutex>
#include <numeric>

#include "core/errors.hpp"
#include "core/label_sampler.hpp"
#include "core/torch_util.hpp"

namespace gemix {
namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Setups

std::string_view to_string(SetupTag tag) {
  switch (tag) {
    case SetupTag::real: return "Real";
    case SetupTag::mixup: return "Mixup";
    case SetupTag::mmixup: return "MMixup";
    case SetupTag::gemix: return "GeMix";
    case SetupTag::real_mixup: return "Real+Mixup";
    case SetupTag::real_mmixup: return "Real+MMixup";
    case SetupTag::real_gemix: return "Real+GeMix";
    case SetupTag::real_mmixup_gemix: return "Real+MMixup+GeMix";
  }
  return "Real";
}

SetupTag setup_from_string(std::string_view s) {
  for (auto tag : kAllSetups)
    if (to_string(tag) == s) return tag;
  fail(ErrorCode::invalid_argument, "unknown training setup '" + std::string(s) + "'");
}

TrainingSetup TrainingSetup::make(SetupTag tag, std::size_t base, std::size_t extra) {
  TrainingSetup s;
  s.tag = tag;
  switch (tag) {
    case SetupTag::real: s.real = base; break;
    case SetupTag::mixup: s.mixup = base; break;
    case SetupTag::mmixup: s.mmixup = base; break;
    case SetupTag::gemix: s.gemix = base; break;
    case SetupTag::real_mixup: s.real = base; s.mixup = extra; break;
    case SetupTag::real_mmixup: s.real = base; s.mmixup = extra; break;
    case SetupTag::real_gemix: s.real = base; s.gemix = extra; break;
    case SetupTag::real_mmixup_gemix: s.real = base; s.mmixup = base; s.gemix = base; break;
  }
  return s;
}

std::vector<LabeledSample> assemble_training_set(const TrainingSetup& setup,
                                                 const SetupSources& sources,
                                                 std::uint64_t seed) {
  std::vector<LabeledSample> out;
  out.reserve(setup.total());
  auto take = [&](std::size_t n, const std::vector<LabeledSample>* src, const char* name) {
    if (n == 0) return;
    if (src == nullptr)
      fail(ErrorCode::missing_artifact, "setup " + std::string(to_string(setup.tag)) +
                                            " requires the " + name + " source, which is missing");
    if (src->size() < n)
      fail(ErrorCode::missing_artifact, "setup " + std::string(to_string(setup.tag)) + " needs " +
                                            std::to_string(n) + " " + name + " samples, source has " +
                                            std::to_string(src->size()));
    out.insert(out.end(), src->begin(), src->begin() + static_cast<std::ptrdiff_t>(n));
  };
  take(setup.real, sources.real, "real");
  take(setup.mixup, sources.mixup, "mixup");
  take(setup.mmixup, sources.mmixup, "mmixup");
  take(setup.gemix, sources.gemix, "gemix");
  Rng rng = Rng::derive(seed, stream::setup_assembly);
  for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.uniform_index(i)]);
  return out;
}

// ---------------------------------------------------------------------------
// Loss

double soft_cross_entropy(std::span<const double> probs, std::span<const double> target) {
  require(probs.size() == target.size(), "soft_cross_entropy: length mismatch (" +
                                             std::to_string(probs.size()) + " vs " +
                                             std::to_string(target.size()) + ")");
  double loss = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j)
    if (target[j] != 0.0) loss -= target[j] * std::log(std::max(probs[j], kProbabilityFloor));
  return loss;
}

std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), "softmax: empty input");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) sum += p[j] = std::exp(logits[j] - mx);
  for (double& v : p) v /= sum;
  return p;
}

double soft_cross_entropy_logits(std::span<const double> logits,
                                 std::span<const double> target) {
  require(logits.size() == target.size(), "soft_cross_entropy_logits: length mismatch");
  require(!logits.empty(), "soft_cross_entropy_logits: empty input");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  const double log_z = mx + std::log(sum);
  double loss = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) loss -= target[j] * (logits[j] - log_z);
  return loss;
}

std::vector<double> soft_cross_entropy_logits_grad(std::span<const double> logits,
                                                   std::span<const double> target) {
  require(logits.size() == target.size(), "soft_cross_entropy_logits_grad: length mismatch");
  auto p = softmax(logits);
  const double mass = std::accumulate(target.begin(), target.end(), 0.0);
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = p[j] * mass - target[j];
  return p;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

// ---------------------------------------------------------------------------
// Network

namespace {

constexpr const char* kArchiveKind = "gemix.classifier";
constexpr int kModelSchema = 1;

json config_to_json(const ClassifierConfig& c) {
  return {{"epochs", c.epochs},        {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},    {"weight_decay", c.weight_decay},
          {"classes", c.classes},      {"image_size", c.image_size},
          {"channels", c.channels},    {"base_width", c.base_width},
          {"seed", c.seed},            {"backbone", c.backbone}};
}

ClassifierConfig config_from_json(const json& j) {
  ClassifierConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.classes = j.at("classes").get<int>();
  c.image_size = j.at("image_size").get<int>();
  c.channels = j.at("channels").get<int>();
  c.base_width = j.at("base_width").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.backbone = j.at("backbone").get<std::string>();
  return c;
}

// Three conv-BN-ReLU-pool blocks, global average pooling, linear head.
struct SmallCnnImpl : torch::nn::Module {
  explicit SmallCnnImpl(const ClassifierConfig& c) {
    int in = c.channels;
    int width = c.base_width;
    for (int block = 0; block < 3; ++block) {
      body->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, width, 3).padding(1).bias(false)));
      body->push_back(torch::nn::BatchNorm2d(width));
      body->push_back(torch::nn::ReLU());
      body->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2)));
      in = width;
      width *= 2;
    }
    feature_dim = in;
    register_module("body", body);
    head = register_module("head", torch::nn::Linear(in, c.classes));
  }

  torch::Tensor features(const torch::Tensor& x) {
    auto h = body->forward(x * 2.0f - 1.0f);
    return h.mean({2, 3});
  }
  torch::Tensor forward(const torch::Tensor& x) { return head(features(x)); }

  int feature_dim = 0;
  torch::nn::Sequential body;
  torch::nn::Linear head{nullptr};
};
TORCH_MODULE(SmallCnn);

torch::Tensor soft_ce_batch(const torch::Tensor& logits, const torch::Tensor& targets) {
  return -(targets * torch::log_softmax(logits, 1)).sum(1).mean();
}

}  // namespace

void ClassifierConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::config, "invalid classifier config: " + what);
  };
  check(epochs >= 0, "epochs must be >= 0");
  check(batch_size >= 1, "batch_size must be >= 1");
  check(learning_rate > 0, "learning_rate must be > 0");
  check(momentum >= 0 && momentum < 1, "momentum must lie in [0, 1)");
  check(weight_decay >= 0, "weight_decay must be >= 0");
  check(classes >= 1, "classes must be >= 1");
  check(image_size >= 8, "image_size must be >= 8");
  check(channels == 1 || channels == 3, "channels must be 1 or 3");
  check(base_width >= 1, "base_width must be >= 1");
  check(backbone == "small-cnn", "backbone '" + backbone + "' is not available (small-cnn)");
}

struct ClassifierModel::Impl {
  ClassifierConfig config;
  SmallCnn net{nullptr};
  mutable std::mutex mutex;

  explicit Impl(const ClassifierConfig& c) : config(c) {
    config.validate();
    torch::manual_seed(config.seed);
    net = SmallCnn(config);
    net->eval();
  }

  torch::Tensor batch(std::span<const ImageTensor> images) const {
    std::vector<const ImageTensor*> ptrs;
    ptrs.reserve(images.size());
    for (const auto& img : images) {
      if (img.height != config.image_size || img.width != config.image_size ||
          img.channels != config.channels)
        fail(ErrorCode::invalid_argument,
             "image shape " + std::to_string(img.height) + "x" + std::to_string(img.width) + "x" +
                 std::to_string(img.channels) + " does not match the model input " +
                 std::to_string(config.image_size) + "x" + std::to_string(config.image_size) + "x" +
                 std::to_string(config.channels));
      ptrs.push_back(&img);
    }
    return detail::images_to_tensor(ptrs);
  }
};

ClassifierModel::ClassifierModel(const ClassifierConfig& config)
    : impl_(std::make_shared<Impl>(config)) {}
ClassifierModel::ClassifierModel(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
ClassifierModel::~ClassifierModel() = default;
ClassifierModel::ClassifierModel(const ClassifierModel&) = default;
ClassifierModel& ClassifierModel::operator=(const ClassifierModel&) = default;
ClassifierModel::ClassifierModel(ClassifierModel&&) noexcept = default;
ClassifierModel& ClassifierModel::operator=(ClassifierModel&&) noexcept = default;

const ClassifierConfig& ClassifierModel::config() const { return impl_->config; }
int ClassifierModel::feature_dim() const { return impl_->net->feature_dim; }

namespace {
constexpr std::size_t kInferenceChunk = 256;
}

std::vector<std::vector<double>> ClassifierModel::predict(std::span<const ImageTensor> images) const {
  std::vector<std::vector<double>> out;
  out.reserve(images.size());
  torch::NoGradGuard no_grad;
  for (std::size_t off = 0; off < images.size(); off += kInferenceChunk) {
    const auto chunk = images.subspan(off, std::min(kInferenceChunk, images.size() - off));
    auto x = impl_->batch(chunk);
    torch::Tensor logits;
    {
      std::lock_guard lock(impl_->mutex);
      logits = impl_->net->forward(x).to(torch::kFloat64).contiguous();
    }
    const auto k = logits.size(1);
    const double* data = logits.data_ptr<double>();
    for (std::int64_t i = 0; i < logits.size(0); ++i)
      out.push_back(softmax(std::span<const double>(data + i * k, static_cast<std::size_t>(k))));
  }
  return out;
}

std::vector<std::vector<float>> ClassifierModel::extract_features(std::span<const ImageTensor> images) const {
  std::vector<std::vector<float>> out;
  out.reserve(images.size());
  torch::NoGradGuard no_grad;
  for (std::size_t off = 0; off < images.size(); off += kInferenceChunk) {
    const auto chunk = images.subspan(off, std::min(kInferenceChunk, images.size() - off));
    auto x = impl_->batch(chunk);
    torch::Tensor f;
    {
      std::lock_guard lock(impl_->mutex);
      f = impl_->net->features(x).contiguous();
    }
    const auto d = f.size(1);
    const float* data = f.data_ptr<float>();
    for (std::int64_t i = 0; i < f.size(0); ++i) out.emplace_back(data + i * d, data + (i + 1) * d);
  }
  return out;
}

void ClassifierModel::save(const fs::path& path) const {
  Archive archive;
  archive.kind = kArchiveKind;
  archive.metadata = json{{"schema", kModelSchema}, {"config", config_to_json(impl_->config)}}.dump();
  detail::export_module(*impl_->net, "net.", archive);
  write_archive(path, archive);
}

ClassifierModel ClassifierModel::load(const fs::path& path) {
  const Archive archive = read_archive(path, kArchiveKind);
  ClassifierConfig config;
  try {
    const auto meta = json::parse(archive.metadata);
    const int schema = meta.at("schema").get<int>();
    if (schema != kModelSchema)
      fail(ErrorCode::format, "model schema " + std::to_string(schema) +
                                  " is not supported (expected " + std::to_string(kModelSchema) + ")");
    config = config_from_json(meta.at("config"));
  } catch (const json::exception& e) {
    fail(ErrorCode::format, "malformed model metadata in " + path.string() + ": " + e.what());
  }
  auto impl = std::make_shared<Impl>(config);
  detail::import_module(*impl->net, "net.", archive);
  return ClassifierModel(std::move(impl));
}

namespace {

struct Batches {
  torch::Tensor images;
  torch::Tensor labels;
};

Batches stack(const std::vector<LabeledSample>& samples, const ClassifierConfig& c, const char* what) {
  std::vector<const ImageTensor*> images;
  std::vector<const SoftLabel*> labels;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.image.height != c.image_size || s.image.width != c.image_size ||
        s.image.channels != c.channels)
      fail(ErrorCode::invalid_argument, std::string(what) + " sample " + std::to_string(i) +
                                            " image shape disagrees with the classifier config");
    if (static_cast<int>(s.label.classes()) != c.classes)
      fail(ErrorCode::invalid_argument, std::string(what) + " sample " + std::to_string(i) +
                                            " label length disagrees with the classifier config");
    images.push_back(&s.image);
    labels.push_back(&s.label);
  }
  return {detail::images_to_tensor(images), detail::labels_to_tensor(labels)};
}

}  // namespace

ClassifierTraining train_classifier(const std::vector<LabeledSample>& train,
                                    const std::vector<LabeledSample>& val,
                                    const ClassifierConfig& config,
                                    const EpochProgress& progress) {
  config.validate();
  require(!train.empty(), "train_classifier: training set is empty");
  const auto train_data = stack(train, config, "training");
  Batches val_data;
  if (!val.empty()) val_data = stack(val, config, "validation");

  auto impl = std::make_shared<ClassifierModel::Impl>(config);
  auto& net = impl->net;
  torch::optim::SGD optimizer(net->parameters(), torch::optim::SGDOptions(config.learning_rate)
                                                     .momentum(config.momentum)
                                                     .weight_decay(config.weight_decay));
  Rng rng = Rng::derive(config.seed, stream::classifier_training);
  const auto n = static_cast<std::int64_t>(train.size());
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  ClassifierTraining result{ClassifierModel(impl), {}};
  const std::int64_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::int64_t total_steps = steps_per_epoch * config.epochs;
  std::int64_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    net->train();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    double loss_sum = 0.0;
    for (std::int64_t off = 0; off < n; off += config.batch_size) {
      // Cosine decay to zero over the whole run.
      const double lr = 0.5 * config.learning_rate *
                        (1.0 + std::cos(M_PI * static_cast<double>(step) / static_cast<double>(total_steps)));
      for (auto& group : optimizer.param_groups())
        static_cast<torch::optim::SGDOptions&>(group.options()).lr(lr);
      const auto end = std::min(off + config.batch_size, n);
      auto idx = torch::tensor(std::vector<std::int64_t>(order.begin() + off, order.begin() + end), torch::kLong);
      auto x = train_data.images.index_select(0, idx);
      auto y = train_data.labels.index_select(0, idx);
      optimizer.zero_grad();
      auto loss = soft_ce_batch(net->forward(x), y);
      loss.backward();
      optimizer.step();
      const double value = loss.item<double>();
      if (!std::isfinite(value))
        fail(ErrorCode::runtime, "train_classifier: non-finite loss in epoch " + std::to_string(epoch) +
                                     " at step " + std::to_string(step) + "; lower the learning rate");
      loss_sum += value * static_cast<double>(end - off);
      ++step;
    }
    net->eval();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    if (!val.empty()) {
      torch::NoGradGuard no_grad;
      auto logits = net->forward(val_data.images);
      rec.val_loss = soft_ce_batch(logits, val_data.labels).item<double>();
      rec.val_accuracy =
          logits.argmax(1).eq(val_data.labels.argmax(1)).to(torch::kFloat64).mean().item<double>();
    }
    result.log.push_back(rec);
    if (progress) progress(rec);
  }
  net->eval();
  return result;
}

void write_epoch_log(const fs::path& path, const std::vector<EpochRecord>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  for (const auto& r : log)
    out << json{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss},
                {"val_accuracy", r.val_accuracy}}
               .dump()
        << '\n';
  if (!out) fail(ErrorCode::io, "short write to " + path.string());
}

void write_feature_table(const fs::path& path, const std::vector<std::string>& sample_ids,
                         const std::vector<std::string>& provenance,
                         const std::vector<std::vector<float>>& features) {
  require(sample_ids.size() == features.size() && provenance.size() == features.size(),
          "feature table columns have different lengths");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  const std::size_t dim = features.empty() ? 0 : features.front().size();
  out << "sample_id,provenance";
  for (std::size_t d = 1; d <= dim; ++d) out << ",f_" << d;
  out << '\n' << std::setprecision(9);
  for (std::size_t i = 0; i < features.size(); ++i) {
    require(features[i].size() == dim, "feature rows have different dimensions");
    out << sample_ids[i] << ',' << provenance[i];
    for (float v : features[i]) out << ',' << v;
    out << '\n';
  }
  if (!out) fail(ErrorCode::io, "short write to " + path.string());
}

}  // namespace gemix
