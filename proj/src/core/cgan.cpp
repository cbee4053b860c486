#include "core/cgan.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <json.hpp>

#include "core/errors.hpp"
#include "core/torch_util.hpp"

namespace gemix {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kArchiveKind = "gemix.cgan";
constexpr int kCheckpointSchema = 1;

int upsampling_levels(int image_size) {
  int levels = 0;
  int s = image_size;
  while (s > 4 && s % 2 == 0) {
    s /= 2;
    ++levels;
  }
  return s == 4 ? levels : -1;
}

json config_to_json(const GanConfig& c) {
  return {{"image_size", c.image_size},     {"channels", c.channels},
          {"classes", c.classes},           {"latent_dim", c.latent_dim},
          {"batch_size", c.batch_size},     {"steps", c.steps},
          {"lr_generator", c.lr_generator}, {"lr_discriminator", c.lr_discriminator},
          {"adam_beta1", c.adam_beta1},     {"label_embed_dim", c.label_embed_dim},
          {"base_width", c.base_width},     {"seed", c.seed}};
}

GanConfig config_from_json(const json& j) {
  GanConfig c;
  c.image_size = j.at("image_size").get<int>();
  c.channels = j.at("channels").get<int>();
  c.classes = j.at("classes").get<int>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.steps = j.at("steps").get<int>();
  c.lr_generator = j.at("lr_generator").get<double>();
  c.lr_discriminator = j.at("lr_discriminator").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.label_embed_dim = j.at("label_embed_dim").get<int>();
  c.base_width = j.at("base_width").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

// Per-sample, per-pixel feature normalisation; identical in training and
// inference, so generate() never depends on batch statistics.
torch::Tensor pixel_norm(const torch::Tensor& x) {
  return x * torch::rsqrt(x.pow(2).mean(1, /*keepdim=*/true) + 1e-8);
}

// Label pathway: a bias-free linear map, so convex mixtures of labels map to
// the same mixtures of embeddings.
struct GeneratorNetImpl : torch::nn::Module {
  GeneratorNetImpl(const GanConfig& c) {
    const int levels = upsampling_levels(c.image_size);
    top_width = c.base_width << (levels - 1);
    label_embed = register_module(
        "label_embed", torch::nn::Linear(torch::nn::LinearOptions(c.classes, c.label_embed_dim).bias(false)));
    project = register_module(
        "project", torch::nn::Linear(c.latent_dim + c.label_embed_dim, top_width * 16));
    int width = top_width;
    for (int level = 0; level < levels; ++level) {
      const bool last = level == levels - 1;
      const int out = last ? c.channels : width / 2;
      ups.push_back(register_module(
          "up" + std::to_string(level),
          torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(width, out, 4).stride(2).padding(1))));
      width = out;
    }
  }

  torch::Tensor forward(const torch::Tensor& z, const torch::Tensor& labels) {
    auto h = project(torch::cat({z, label_embed(labels)}, 1));
    h = torch::relu(pixel_norm(h.view({-1, top_width, 4, 4})));
    for (std::size_t i = 0; i < ups.size(); ++i) {
      h = ups[i]->forward(h);
      if (i + 1 < ups.size()) h = torch::relu(pixel_norm(h));
    }
    return torch::tanh(h);  // [-1, 1]
  }

  int top_width = 0;
  torch::nn::Linear label_embed{nullptr};
  torch::nn::Linear project{nullptr};
  std::vector<torch::nn::ConvTranspose2d> ups;
};
TORCH_MODULE(GeneratorNet);

// Image features are concatenated with the embedded label ahead of a hidden
// layer; a projection of the same embedding onto the hidden activations adds
// a direct class-matching term to the logit.
struct DiscriminatorNetImpl : torch::nn::Module {
  DiscriminatorNetImpl(const GanConfig& c) {
    const int levels = upsampling_levels(c.image_size);
    int in = c.channels;
    int width = c.base_width;
    for (int level = 0; level < levels; ++level) {
      downs->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, width, 4).stride(2).padding(1)));
      downs->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)));
      in = width;
      width *= 2;
    }
    downs->push_back(torch::nn::Flatten());
    register_module("downs", downs);
    feature_dim = in * 16;
    label_embed = register_module(
        "label_embed", torch::nn::Linear(torch::nn::LinearOptions(c.classes, c.label_embed_dim).bias(false)));
    hidden = register_module("hidden", torch::nn::Linear(feature_dim + c.label_embed_dim, kHidden));
    label_project = register_module(
        "label_project", torch::nn::Linear(torch::nn::LinearOptions(c.label_embed_dim, kHidden).bias(false)));
    out = register_module("out", torch::nn::Linear(kHidden, 1));
  }

  torch::Tensor forward(const torch::Tensor& images, const torch::Tensor& labels) {
    auto features = downs->forward(images);
    auto embedded = label_embed(labels);
    auto h = torch::leaky_relu(hidden(torch::cat({features, embedded}, 1)), 0.2);
    auto projection = (label_project(embedded) * h).sum(1, /*keepdim=*/true);
    return (out(h) + projection).squeeze(1);
  }

  static constexpr int kHidden = 256;
  int feature_dim = 0;
  torch::nn::Sequential downs;
  torch::nn::Linear label_embed{nullptr};
  torch::nn::Linear hidden{nullptr};
  torch::nn::Linear label_project{nullptr};
  torch::nn::Linear out{nullptr};
};
TORCH_MODULE(DiscriminatorNet);

void init_weights(torch::nn::Module& module) {
  torch::NoGradGuard no_grad;
  for (const auto& m : module.modules(/*include_self=*/false)) {
    if (auto* bn = m->as<torch::nn::BatchNorm2d>()) {
      bn->weight.normal_(1.0, 0.02);
      bn->bias.zero_();
      continue;
    }
    for (auto& item : m->named_parameters(/*recurse=*/false)) {
      if (item.key() == "weight")
        item.value().normal_(0.0, 0.02);
      else
        item.value().zero_();
    }
  }
}

}  // namespace

void GanConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::config, "invalid GAN config: " + what);
  };
  check(image_size >= 8 && upsampling_levels(image_size) >= 1,
        "image_size must be 4 * 2^n with n >= 1 (got " + std::to_string(image_size) + ")");
  check(channels == 1 || channels == 3, "channels must be 1 or 3");
  check(classes >= 1, "classes must be >= 1");
  check(latent_dim >= 1, "latent_dim must be >= 1");
  check(batch_size >= 1, "batch_size must be >= 1");
  check(steps >= 0, "steps must be >= 0");
  check(lr_generator > 0 && lr_discriminator > 0, "learning rates must be > 0");
  check(adam_beta1 >= 0 && adam_beta1 < 1, "adam_beta1 must lie in [0, 1)");
  check(label_embed_dim >= 1, "label_embed_dim must be >= 1");
  check(base_width >= 2 && base_width % 2 == 0, "base_width must be even and >= 2");
}

struct GanCheckpoint::Impl {
  GanConfig config;
  GeneratorNet generator{nullptr};
  DiscriminatorNet discriminator{nullptr};
  std::int64_t step = 0;
  std::string rng_state;
  mutable std::mutex mutex;

  explicit Impl(const GanConfig& c) : config(c) {
    config.validate();
    torch::manual_seed(config.seed);
    generator = GeneratorNet(config);
    discriminator = DiscriminatorNet(config);
    init_weights(*generator);
    init_weights(*discriminator);
    generator->eval();
    discriminator->eval();
    rng_state = Rng::derive(config.seed, stream::gan_training).state();
  }

  void check_label(const SoftLabel& ell) const {
    if (static_cast<int>(ell.classes()) != config.classes)
      fail(ErrorCode::invalid_argument, "label has " + std::to_string(ell.classes()) +
                                            " classes, generator expects " +
                                            std::to_string(config.classes));
  }
};

GanCheckpoint::GanCheckpoint(const GanConfig& config)
    : impl_(std::make_shared<Impl>(config)) {}
GanCheckpoint::GanCheckpoint(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
GanCheckpoint::~GanCheckpoint() = default;
GanCheckpoint::GanCheckpoint(const GanCheckpoint&) = default;
GanCheckpoint& GanCheckpoint::operator=(const GanCheckpoint&) = default;
GanCheckpoint::GanCheckpoint(GanCheckpoint&&) noexcept = default;
GanCheckpoint& GanCheckpoint::operator=(GanCheckpoint&&) noexcept = default;

const GanConfig& GanCheckpoint::config() const { return impl_->config; }
std::int64_t GanCheckpoint::step() const { return impl_->step; }
const std::string& GanCheckpoint::rng_state() const { return impl_->rng_state; }

ImageTensor GanCheckpoint::generate(const LatentVector& z, const SoftLabel& ell) const {
  const auto& c = impl_->config;
  if (static_cast<int>(z.z.size()) != c.latent_dim)
    fail(ErrorCode::invalid_argument, "latent has dimension " + std::to_string(z.z.size()) +
                                          ", generator expects " + std::to_string(c.latent_dim));
  impl_->check_label(ell);
  torch::NoGradGuard no_grad;
  auto zt = torch::from_blob(const_cast<float*>(z.z.data()), {1, c.latent_dim}, torch::kFloat32);
  auto lt = detail::labels_to_tensor({&ell});
  torch::Tensor raw;
  {
    // Module forward touches autograd bookkeeping; serialise access.
    std::lock_guard lock(impl_->mutex);
    raw = impl_->generator->forward(zt, lt);
  }
  auto unit = ((raw[0] + 1.0f) * 0.5f).clamp(0.0f, 1.0f);
  return detail::tensor_to_image(unit);
}

std::vector<float> GanCheckpoint::embed_label(const SoftLabel& ell) const {
  impl_->check_label(ell);
  torch::NoGradGuard no_grad;
  auto e = impl_->generator->label_embed(detail::labels_to_tensor({&ell}))[0].contiguous();
  return {e.data_ptr<float>(), e.data_ptr<float>() + e.numel()};
}

double GanCheckpoint::discriminate(const ImageTensor& image, const SoftLabel& ell) const {
  impl_->check_label(ell);
  const auto& c = impl_->config;
  require(image.height == c.image_size && image.width == c.image_size &&
              image.channels == c.channels,
          "discriminate: image shape does not match the checkpoint");
  torch::NoGradGuard no_grad;
  auto x = detail::images_to_tensor({&image}) * 2.0f - 1.0f;
  std::lock_guard lock(impl_->mutex);
  return impl_->discriminator->forward(x, detail::labels_to_tensor({&ell})).item<double>();
}

GeneratorHandle GanCheckpoint::handle() const {
  GeneratorHandle h;
  h.info = {impl_->config.classes, impl_->config.image_size, impl_->config.channels,
            impl_->config.latent_dim};
  auto self = *this;
  h.generate = [self](const LatentVector& z, const SoftLabel& ell) { return self.generate(z, ell); };
  return h;
}

void GanCheckpoint::save(const fs::path& path) const {
  Archive archive;
  archive.kind = kArchiveKind;
  archive.metadata = json{{"schema", kCheckpointSchema},
                          {"config", config_to_json(impl_->config)},
                          {"step", impl_->step},
                          {"rng_state", impl_->rng_state}}
                         .dump();
  detail::export_module(*impl_->generator, "generator.", archive);
  detail::export_module(*impl_->discriminator, "discriminator.", archive);
  write_archive(path, archive);
}

GanCheckpoint GanCheckpoint::load(const fs::path& path) {
  const Archive archive = read_archive(path, kArchiveKind);
  GanConfig config;
  std::int64_t step = 0;
  std::string rng_state;
  try {
    const auto meta = json::parse(archive.metadata);
    const int schema = meta.at("schema").get<int>();
    if (schema != kCheckpointSchema)
      fail(ErrorCode::format, "checkpoint schema " + std::to_string(schema) +
                                  " is not supported (expected " +
                                  std::to_string(kCheckpointSchema) + ")");
    config = config_from_json(meta.at("config"));
    step = meta.at("step").get<std::int64_t>();
    rng_state = meta.at("rng_state").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorCode::format, "malformed checkpoint metadata in " + path.string() + ": " + e.what());
  }
  auto impl = std::make_shared<Impl>(config);
  detail::import_module(*impl->generator, "generator.", archive);
  detail::import_module(*impl->discriminator, "discriminator.", archive);
  impl->step = step;
  impl->rng_state = std::move(rng_state);
  return GanCheckpoint(std::move(impl));
}

GanTrainingResult train_cgan(const std::vector<LabeledSample>& dataset,
                             const GanConfig& config, const GanProgress& progress) {
  config.validate();
  require(!dataset.empty(), "train_cgan: dataset is empty");
  std::vector<const ImageTensor*> images;
  std::vector<const SoftLabel*> labels;
  images.reserve(dataset.size());
  labels.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset[i];
    if (!s.label.is_one_hot())
      fail(ErrorCode::invalid_argument,
           "train_cgan: sample " + std::to_string(i) +
               " has a non-one-hot label; stage-1 training takes hard labels only");
    if (static_cast<int>(s.label.classes()) != config.classes)
      fail(ErrorCode::invalid_argument, "train_cgan: sample " + std::to_string(i) +
                                            " label length disagrees with config.classes");
    if (s.image.height != config.image_size || s.image.width != config.image_size ||
        s.image.channels != config.channels)
      fail(ErrorCode::invalid_argument,
           "train_cgan: sample " + std::to_string(i) + " image shape disagrees with config");
    images.push_back(&s.image);
    labels.push_back(&s.label);
  }

  auto impl = std::make_shared<GanCheckpoint::Impl>(config);
  auto& G = impl->generator;
  auto& D = impl->discriminator;
  const auto all_images = detail::images_to_tensor(images) * 2.0f - 1.0f;
  const auto all_labels = detail::labels_to_tensor(labels);

  torch::optim::Adam opt_g(G->parameters(),
                           torch::optim::AdamOptions(config.lr_generator).betas({config.adam_beta1, 0.999}));
  torch::optim::Adam opt_d(D->parameters(),
                           torch::optim::AdamOptions(config.lr_discriminator).betas({config.adam_beta1, 0.999}));

  Rng rng = Rng::derive(config.seed, stream::gan_training);
  auto noise = at::detail::createCPUGenerator(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto n = static_cast<std::int64_t>(dataset.size());
  const std::int64_t batch = std::min<std::int64_t>(config.batch_size, n);

  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  GanTrainingResult result{GanCheckpoint(impl), {}};
  result.log.reserve(static_cast<std::size_t>(config.steps));
  G->train();
  D->train();
  for (int step = 1; step <= config.steps; ++step) {
    std::vector<std::int64_t> pick(static_cast<std::size_t>(batch));
    for (auto& p : pick) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
        cursor = 0;
      }
      p = order[cursor++];
    }
    auto idx = torch::tensor(pick, torch::kLong);
    auto real = all_images.index_select(0, idx);
    auto real_labels = all_labels.index_select(0, idx);

    std::vector<std::int64_t> fake_classes(static_cast<std::size_t>(batch));
    for (auto& c : fake_classes) c = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::size_t>(config.classes)));
    auto fake_labels = torch::one_hot(torch::tensor(fake_classes, torch::kLong), config.classes).to(torch::kFloat32);
    auto z = torch::randn({batch, config.latent_dim}, noise);

    auto fake = G->forward(z, fake_labels);

    opt_d.zero_grad();
    auto d_real = D->forward(real, real_labels);
    auto d_fake = D->forward(fake.detach(), fake_labels);
    auto d_loss = torch::binary_cross_entropy_with_logits(d_real, torch::ones_like(d_real)) +
                  torch::binary_cross_entropy_with_logits(d_fake, torch::zeros_like(d_fake));
    d_loss.backward();
    opt_d.step();

    opt_g.zero_grad();
    auto d_gen = D->forward(fake, fake_labels);
    auto g_loss = torch::binary_cross_entropy_with_logits(d_gen, torch::ones_like(d_gen));
    g_loss.backward();
    opt_g.step();

    GanLossRecord rec{step, d_loss.item<double>(), g_loss.item<double>()};
    if (!std::isfinite(rec.d_loss) || !std::isfinite(rec.g_loss))
      fail(ErrorCode::runtime, "train_cgan: non-finite loss at step " + std::to_string(step) +
                                   " (d_loss=" + std::to_string(rec.d_loss) +
                                   ", g_loss=" + std::to_string(rec.g_loss) +
                                   "); lower the learning rates");
    result.log.push_back(rec);
    if (progress) progress(rec);
  }
  G->eval();
  D->eval();
  impl->step = config.steps;
  impl->rng_state = rng.state();
  return result;
}

void write_gan_log(const fs::path& path, const std::vector<GanLossRecord>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  for (const auto& r : log)
    out << json{{"step", r.step}, {"d_loss", r.d_loss}, {"g_loss", r.g_loss}}.dump() << '\n';
  if (!out) fail(ErrorCode::io, "short write to " + path.string());
}

std::vector<GanLossRecord> read_gan_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::missing_artifact, "cannot open " + path.string());
  std::vector<GanLossRecord> log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      log.push_back({j.at("step").get<std::int64_t>(), j.at("d_loss").get<double>(),
                     j.at("g_loss").get<double>()});
    } catch (const json::exception& e) {
      fail(ErrorCode::format, "malformed GAN log row in " + path.string() + ": " + e.what());
    }
  }
  return log;
}

}  // namespace gemix
