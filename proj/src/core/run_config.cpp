#include "core/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <json.hpp>

#include "core/errors.hpp"
#include "core/shapes.hpp"

namespace gemix {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json to_json(const RunConfig& c) {
  return {
      {"preset", c.preset},
      {"output_dir", c.output_dir},
      {"seed", c.seed},
      {"threads", c.threads},
      {"positive_class", c.positive_class},
      {"features_per_setting", c.features_per_setting},
      {"data",
       {{"classes", c.data.classes},
        {"image_size", c.data.image_size},
        {"channels", c.data.channels},
        {"per_class", c.data.per_class},
        {"source", c.data.source},
        {"gan_per_class", c.data.gan_per_class},
        {"clf_per_class", c.data.clf_per_class},
        {"test_per_class", c.data.test_per_class},
        {"train_fraction", c.data.train_fraction}}},
      {"gan",
       {{"latent_dim", c.gan.latent_dim},
        {"batch_size", c.gan.batch_size},
        {"steps", c.gan.steps},
        {"lr_generator", c.gan.lr_generator},
        {"lr_discriminator", c.gan.lr_discriminator},
        {"adam_beta1", c.gan.adam_beta1},
        {"label_embed_dim", c.gan.label_embed_dim},
        {"base_width", c.gan.base_width}}},
      {"classifier",
       {{"epochs", c.classifier.epochs},
        {"batch_size", c.classifier.batch_size},
        {"learning_rate", c.classifier.learning_rate},
        {"momentum", c.classifier.momentum},
        {"weight_decay", c.classifier.weight_decay},
        {"base_width", c.classifier.base_width},
        {"backbone", c.classifier.backbone}}},
      {"mixers",
       {{"count", c.mixers.count},
        {"a_eq", c.mixers.a_eq},
        {"a_neq", c.mixers.a_neq},
        {"alpha", c.mixers.alpha}}},
      {"setups", {{"base", c.setups.base}, {"extra", c.setups.extra}}},
  };
}

template <typename T>
void read_field(const json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::config, "config key '" + where + key + "' has the wrong type");
  }
}

void reject_unknown(const json& given, const json& known, const std::string& where) {
  if (!given.is_object()) fail(ErrorCode::config, "config section '" + where + "' must be an object");
  for (const auto& [key, value] : given.items()) {
    if (!known.contains(key)) fail(ErrorCode::config, "unknown config key '" + where + key + "'");
    if (known.at(key).is_object()) reject_unknown(value, known.at(key), where + key + ".");
  }
}

RunConfig apply_json(RunConfig c, const json& j) {
  reject_unknown(j, to_json(c), "");
  read_field(j, "preset", c.preset, "");
  read_field(j, "output_dir", c.output_dir, "");
  read_field(j, "seed", c.seed, "");
  read_field(j, "threads", c.threads, "");
  read_field(j, "positive_class", c.positive_class, "");
  read_field(j, "features_per_setting", c.features_per_setting, "");
  if (j.contains("data")) {
    const auto& d = j.at("data");
    read_field(d, "classes", c.data.classes, "data.");
    read_field(d, "image_size", c.data.image_size, "data.");
    read_field(d, "channels", c.data.channels, "data.");
    read_field(d, "per_class", c.data.per_class, "data.");
    read_field(d, "source", c.data.source, "data.");
    read_field(d, "gan_per_class", c.data.gan_per_class, "data.");
    read_field(d, "clf_per_class", c.data.clf_per_class, "data.");
    read_field(d, "test_per_class", c.data.test_per_class, "data.");
    read_field(d, "train_fraction", c.data.train_fraction, "data.");
  }
  if (j.contains("gan")) {
    const auto& g = j.at("gan");
    read_field(g, "latent_dim", c.gan.latent_dim, "gan.");
    read_field(g, "batch_size", c.gan.batch_size, "gan.");
    read_field(g, "steps", c.gan.steps, "gan.");
    read_field(g, "lr_generator", c.gan.lr_generator, "gan.");
    read_field(g, "lr_discriminator", c.gan.lr_discriminator, "gan.");
    read_field(g, "adam_beta1", c.gan.adam_beta1, "gan.");
    read_field(g, "label_embed_dim", c.gan.label_embed_dim, "gan.");
    read_field(g, "base_width", c.gan.base_width, "gan.");
  }
  if (j.contains("classifier")) {
    const auto& k = j.at("classifier");
    read_field(k, "epochs", c.classifier.epochs, "classifier.");
    read_field(k, "batch_size", c.classifier.batch_size, "classifier.");
    read_field(k, "learning_rate", c.classifier.learning_rate, "classifier.");
    read_field(k, "momentum", c.classifier.momentum, "classifier.");
    read_field(k, "weight_decay", c.classifier.weight_decay, "classifier.");
    read_field(k, "base_width", c.classifier.base_width, "classifier.");
    read_field(k, "backbone", c.classifier.backbone, "classifier.");
  }
  if (j.contains("mixers")) {
    const auto& m = j.at("mixers");
    read_field(m, "count", c.mixers.count, "mixers.");
    read_field(m, "a_eq", c.mixers.a_eq, "mixers.");
    read_field(m, "a_neq", c.mixers.a_neq, "mixers.");
    read_field(m, "alpha", c.mixers.alpha, "mixers.");
  }
  if (j.contains("setups")) {
    const auto& s = j.at("setups");
    read_field(s, "base", c.setups.base, "setups.");
    read_field(s, "extra", c.setups.extra, "setups.");
  }
  return c;
}

RunConfig preset_config(const std::string& name) {
  if (name == "desk") return RunConfig::desk();
  if (name == "paper") return RunConfig::paper();
  fail(ErrorCode::config, "unknown preset '" + name + "' (expected desk or paper)");
}

}  // namespace

RunConfig RunConfig::desk() { return RunConfig{}; }

RunConfig RunConfig::paper() {
  RunConfig c;
  c.preset = "paper";
  c.data.image_size = 128;
  c.data.gan_per_class = 10000;
  c.data.clf_per_class = 10000;
  c.data.test_per_class = 1000;
  c.data.per_class = 21000;
  c.mixers.count = kDefaultGemixCount;
  c.setups.base = 24000;
  c.setups.extra = 30000;
  return c;
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::config, "config must be a JSON object");
  RunConfig base;
  if (j.contains("preset")) {
    if (!j.at("preset").is_string()) fail(ErrorCode::config, "config key 'preset' must be a string");
    base = preset_config(j.at("preset").get<std::string>());
  }
  return apply_json(base, j);
}

RunConfig RunConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, "cannot read config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string RunConfig::to_json_text() const { return to_json(*this).dump(2); }

void RunConfig::set(const std::string& key, const std::string& value) {
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  if (key == "preset") {
    if (!parsed.is_string()) fail(ErrorCode::config, "preset must be a string");
    // Switching preset resets every other field; apply it first.
    *this = preset_config(parsed.get<std::string>());
    return;
  }
  json patch = json::object();
  json* cursor = &patch;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorCode::config, "malformed config key '" + key + "'");
    if (dot == std::string::npos) {
      (*cursor)[part] = parsed;
      break;
    }
    cursor = &(*cursor)[part];
    start = dot + 1;
  }
  *this = apply_json(*this, patch);
}

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::config, "invalid config: " + what);
  };
  check(threads >= 1, "threads must be >= 1");
  check(data.classes >= 1, "data.classes must be >= 1");
  check(data.channels == 1 || data.channels == 3, "data.channels must be 1 or 3");
  check(data.per_class >= 1, "data.per_class must be >= 1");
  check(data.gan_per_class >= 1 && data.clf_per_class >= 2 && data.test_per_class >= 1,
        "pool sizes must be >= 1 (clf_per_class >= 2)");
  check(data.train_fraction > 0.0 && data.train_fraction < 1.0, "data.train_fraction must lie in (0, 1)");
  if (data.source.empty()) {
    check(data.classes <= kMaxShapeClasses,
          "the synthetic dataset supports at most " + std::to_string(kMaxShapeClasses) + " classes");
    check(data.channels == 1, "the synthetic dataset is grayscale (data.channels = 1)");
    check(static_cast<long long>(data.gan_per_class) + data.clf_per_class + data.test_per_class <=
              data.per_class,
          "gan_per_class + clf_per_class + test_per_class exceeds data.per_class");
  }
  check(positive_class >= 0 && positive_class < data.classes, "positive_class must index a class");
  check(features_per_setting >= 1, "features_per_setting must be >= 1");
  check(mixers.count >= 0, "mixers.count must be >= 0");
  check(mixers.a_neq > 0.0 && mixers.a_eq > mixers.a_neq, "mixers need a_eq > a_neq > 0");
  check(mixers.alpha > 0.0, "mixers.alpha must be > 0");
  check(setups.base >= 0 && setups.extra >= 0, "setup sizes must be >= 0");
  gan_config().validate();
  classifier_config().validate();
}

fs::path RunConfig::output_root() const {
  if (!output_dir.empty()) return output_dir;
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
  return "gemix-run";
}

fs::path RunConfig::data_source() const {
  return data.source.empty() ? output_root() / "data" / "real" : fs::path(data.source);
}

GanConfig RunConfig::gan_config() const {
  GanConfig g = gan;
  g.image_size = data.image_size;
  g.channels = data.channels;
  g.classes = data.classes;
  g.seed = seed;
  return g;
}

ClassifierConfig RunConfig::classifier_config() const {
  ClassifierConfig k = classifier;
  k.image_size = data.image_size;
  k.channels = data.channels;
  k.classes = data.classes;
  k.seed = seed;
  return k;
}

}  // namespace gemix
