// extern "C" surface over the C++ core. Exceptions never cross this file.

#include "gemix/gemix.h"

#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "core/cgan.hpp"
#include "core/classifier.hpp"
#include "core/errors.hpp"
#include "core/evaluation.hpp"
#include "core/label_sampler.hpp"
#include "core/mixers.hpp"
#include "core/pipeline.hpp"
#include "core/run_config.hpp"

struct gemix_config {
  gemix::RunConfig config;
};

struct gemix_pipeline {
  gemix::Pipeline pipeline;
  std::string last_output;
};

struct gemix_rng {
  gemix::Rng rng;
};

struct gemix_generator {
  gemix::GanCheckpoint checkpoint;
};

struct gemix_classifier {
  gemix::ClassifierModel model;
};

struct gemix_report {
  gemix::MetricsReport report;
};

namespace {

thread_local std::string g_last_error;

gemix_status to_status(gemix::ErrorCode code) {
  switch (code) {
    case gemix::ErrorCode::invalid_argument: return GEMIX_ERR_INVALID_ARGUMENT;
    case gemix::ErrorCode::config: return GEMIX_ERR_CONFIG;
    case gemix::ErrorCode::io: return GEMIX_ERR_IO;
    case gemix::ErrorCode::format: return GEMIX_ERR_FORMAT;
    case gemix::ErrorCode::missing_artifact: return GEMIX_ERR_MISSING_ARTIFACT;
    case gemix::ErrorCode::runtime: return GEMIX_ERR_RUNTIME;
  }
  return GEMIX_ERR_INTERNAL;
}

template <typename F>
gemix_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return GEMIX_OK;
  } catch (const gemix::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return GEMIX_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GEMIX_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return GEMIX_ERR_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (p == nullptr) gemix::fail(gemix::ErrorCode::invalid_argument, std::string(name) + " must not be NULL");
}

void copy_out(const std::string& text, char* buf, std::size_t capacity, std::size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (buf == nullptr || capacity < text.size() + 1)
    gemix::fail(gemix::ErrorCode::invalid_argument,
                "output buffer too small: need " + std::to_string(text.size() + 1) + " bytes");
  std::memcpy(buf, text.c_str(), text.size() + 1);
}

gemix::ImageTensor image_from(const float* data, int h, int w, int c) {
  gemix::ImageTensor img(h, w, c);
  std::memcpy(img.values.data(), data, img.values.size() * sizeof(float));
  return img;
}

gemix::SoftLabel label_from(const double* data, int k) {
  gemix::require(k >= 1, "classes must be >= 1");
  return gemix::SoftLabel{std::vector<double>(data, data + k)};
}

gemix::ConfusionMatrix matrix_from(const long long* counts, int k) {
  gemix::require(k >= 1, "classes must be >= 1");
  gemix::ConfusionMatrix cm;
  for (int t = 0; t < k; ++t) cm.counts.emplace_back(counts + t * k, counts + (t + 1) * k);
  return cm;
}

std::vector<gemix::ImageTensor> batch_from(const float* images, std::size_t count, int size, int channels) {
  const std::size_t stride = static_cast<std::size_t>(size) * size * channels;
  std::vector<gemix::ImageTensor> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(image_from(images + i * stride, size, size, channels));
  return out;
}

}  // namespace

extern "C" {

const char* gemix_version(void) { return "0.1.0"; }
const char* gemix_last_error(void) { return g_last_error.c_str(); }

const char* gemix_status_string(gemix_status status) {
  switch (status) {
    case GEMIX_OK: return "ok";
    case GEMIX_ERR_INVALID_ARGUMENT: return "invalid argument";
    case GEMIX_ERR_CONFIG: return "configuration error";
    case GEMIX_ERR_IO: return "I/O error";
    case GEMIX_ERR_FORMAT: return "format error";
    case GEMIX_ERR_MISSING_ARTIFACT: return "missing artifact";
    case GEMIX_ERR_RUNTIME: return "runtime failure";
    case GEMIX_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int gemix_status_exit_code(gemix_status status) {
  switch (status) {
    case GEMIX_OK: return 0;
    case GEMIX_ERR_INVALID_ARGUMENT:
    case GEMIX_ERR_CONFIG: return 1;
    default: return 2;
  }
}

// ---- config

gemix_status gemix_config_new(const char* preset, gemix_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto cfg = std::make_unique<gemix_config>();
    if (preset != nullptr) cfg->config.set("preset", std::string("\"") + preset + "\"");
    *out = cfg.release();
  });
}

gemix_status gemix_config_load(const char* path, gemix_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new gemix_config{gemix::RunConfig::from_file(path)};
  });
}

gemix_status gemix_config_set(gemix_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    config->config.set(key, value);
  });
}

gemix_status gemix_config_validate(const gemix_config* config) {
  return guarded([&] {
    need(config, "config");
    config->config.validate();
  });
}

gemix_status gemix_config_to_json(const gemix_config* config, char* buf, size_t capacity, size_t* needed) {
  return guarded([&] {
    need(config, "config");
    copy_out(config->config.to_json_text(), buf, capacity, needed);
  });
}

void gemix_config_free(gemix_config* config) { delete config; }

// ---- pipeline

gemix_status gemix_pipeline_new(const gemix_config* config, gemix_log_fn log, void* user,
                                gemix_pipeline** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = nullptr;
    gemix::LogSink sink;
    if (log != nullptr) sink = [log, user](std::string_view line) { log(std::string(line).c_str(), user); };
    *out = new gemix_pipeline{gemix::Pipeline(config->config, std::move(sink)), {}};
  });
}

void gemix_pipeline_free(gemix_pipeline* pipeline) { delete pipeline; }

gemix_status gemix_pipeline_gen_data(gemix_pipeline* p) {
  return guarded([&] {
    need(p, "pipeline");
    p->last_output = p->pipeline.gen_data().string();
  });
}

gemix_status gemix_pipeline_train_gan(gemix_pipeline* p) {
  return guarded([&] {
    need(p, "pipeline");
    p->last_output = p->pipeline.train_gan().string();
  });
}

gemix_status gemix_pipeline_augment(gemix_pipeline* p, const char* kind) {
  return guarded([&] {
    need(p, "pipeline");
    need(kind, "kind");
    p->last_output = p->pipeline.augment(gemix::augment_kind_from_string(kind)).string();
  });
}

gemix_status gemix_pipeline_train_clf(gemix_pipeline* p, const char* setup) {
  return guarded([&] {
    need(p, "pipeline");
    need(setup, "setup");
    p->last_output = p->pipeline.train_clf(gemix::setup_from_string(setup)).string();
  });
}

gemix_status gemix_pipeline_eval(gemix_pipeline* p, const char* setup, const char* model_path) {
  return guarded([&] {
    need(p, "pipeline");
    need(setup, "setup");
    std::optional<std::filesystem::path> model;
    if (model_path != nullptr) model = model_path;
    p->last_output = p->pipeline.eval(gemix::setup_from_string(setup), model).string();
  });
}

gemix_status gemix_pipeline_report(gemix_pipeline* p, const char* const* report_paths, size_t count) {
  return guarded([&] {
    need(p, "pipeline");
    std::vector<std::filesystem::path> paths;
    if (count > 0) need(report_paths, "report_paths");
    for (size_t i = 0; i < count; ++i) {
      need(report_paths[i], "report path");
      paths.emplace_back(report_paths[i]);
    }
    p->last_output = p->pipeline.report(paths);
  });
}

gemix_status gemix_pipeline_features(gemix_pipeline* p, const char* setup) {
  return guarded([&] {
    need(p, "pipeline");
    need(setup, "setup");
    p->last_output = p->pipeline.export_features(gemix::setup_from_string(setup)).string();
  });
}

const char* gemix_pipeline_last_output(const gemix_pipeline* p) {
  return p ? p->last_output.c_str() : "";
}

// ---- sampling

gemix_status gemix_rng_new(uint64_t seed, gemix_rng** out) {
  return guarded([&] {
    need(out, "out");
    *out = new gemix_rng{gemix::Rng(seed)};
  });
}

void gemix_rng_free(gemix_rng* rng) { delete rng; }

gemix_status gemix_sample_dominant_class(gemix_rng* rng, int classes, int* out) {
  return guarded([&] {
    need(rng, "rng");
    need(out, "out");
    *out = gemix::sample_dominant_class(classes, rng->rng);
  });
}

gemix_status gemix_build_concentration(int dominant, int classes, double a_eq, double a_neq, double* theta_out) {
  return guarded([&] {
    need(theta_out, "theta_out");
    const auto cv = gemix::build_concentration(dominant, classes, a_eq, a_neq);
    std::copy(cv.theta.begin(), cv.theta.end(), theta_out);
  });
}

gemix_status gemix_sample_soft_label(gemix_rng* rng, const double* theta, int classes, double* label_out) {
  return guarded([&] {
    need(rng, "rng");
    need(theta, "theta");
    need(label_out, "label_out");
    gemix::require(classes >= 1, "classes must be >= 1");
    gemix::ConcentrationVector cv;
    cv.theta.assign(theta, theta + classes);
    for (int j = 1; j < classes; ++j)
      if (theta[j] > theta[cv.dominant]) cv.dominant = j;
    const auto ell = gemix::sample_soft_label(cv, rng->rng);
    std::copy(ell.weights.begin(), ell.weights.end(), label_out);
  });
}

gemix_status gemix_sample_mix_coefficient(gemix_rng* rng, double alpha, double* out) {
  return guarded([&] {
    need(rng, "rng");
    need(out, "out");
    *out = gemix::sample_mix_coefficient(alpha, rng->rng);
  });
}

gemix_status gemix_sample_latent(gemix_rng* rng, int dim, float* out) {
  return guarded([&] {
    need(rng, "rng");
    need(out, "out");
    const auto z = gemix::sample_latent(dim, rng->rng);
    std::copy(z.z.begin(), z.z.end(), out);
  });
}

// ---- mixers

gemix_status gemix_mixup_pair(const float* x_i, const double* y_i, const float* x_j, const double* y_j,
                              int height, int width, int channels, int classes, double lambda,
                              float* image_out, double* label_out) {
  return guarded([&] {
    need(x_i, "x_i");
    need(x_j, "x_j");
    need(y_i, "y_i");
    need(y_j, "y_j");
    need(image_out, "image_out");
    need(label_out, "label_out");
    const auto mixed = gemix::mixup_pair(image_from(x_i, height, width, channels), label_from(y_i, classes),
                                         image_from(x_j, height, width, channels), label_from(y_j, classes),
                                         lambda);
    std::copy(mixed.image.values.begin(), mixed.image.values.end(), image_out);
    std::copy(mixed.label.weights.begin(), mixed.label.weights.end(), label_out);
  });
}

gemix_status gemix_mmixup(const float* const* images, int classes, int height, int width, int channels,
                          const double* label, float* image_out) {
  return guarded([&] {
    need(images, "images");
    need(label, "label");
    need(image_out, "image_out");
    std::vector<gemix::ImageTensor> owned;
    std::vector<const gemix::ImageTensor*> ptrs;
    owned.reserve(static_cast<std::size_t>(std::max(classes, 0)));
    for (int j = 0; j < classes; ++j) {
      need(images[j], "image");
      owned.push_back(image_from(images[j], height, width, channels));
    }
    for (const auto& img : owned) ptrs.push_back(&img);
    const auto mixed = gemix::mmixup(ptrs, label_from(label, classes));
    std::copy(mixed.image.values.begin(), mixed.image.values.end(), image_out);
  });
}

// ---- generator

gemix_status gemix_generator_load(const char* path, gemix_generator** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new gemix_generator{gemix::GanCheckpoint::load(path)};
  });
}

gemix_status gemix_generator_save(const gemix_generator* g, const char* path) {
  return guarded([&] {
    need(g, "generator");
    need(path, "path");
    g->checkpoint.save(path);
  });
}

gemix_status gemix_generator_info(const gemix_generator* g, int* classes, int* image_size, int* channels,
                                  int* latent_dim) {
  return guarded([&] {
    need(g, "generator");
    const auto& c = g->checkpoint.config();
    if (classes) *classes = c.classes;
    if (image_size) *image_size = c.image_size;
    if (channels) *channels = c.channels;
    if (latent_dim) *latent_dim = c.latent_dim;
  });
}

gemix_status gemix_generator_generate(const gemix_generator* g, const float* z, const double* label,
                                      float* image_out) {
  return guarded([&] {
    need(g, "generator");
    need(z, "z");
    need(label, "label");
    need(image_out, "image_out");
    const auto& c = g->checkpoint.config();
    gemix::LatentVector latent{std::vector<float>(z, z + c.latent_dim)};
    const auto img = g->checkpoint.generate(latent, label_from(label, c.classes));
    std::copy(img.values.begin(), img.values.end(), image_out);
  });
}

void gemix_generator_free(gemix_generator* g) { delete g; }

// ---- classifier

gemix_status gemix_classifier_load(const char* path, gemix_classifier** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new gemix_classifier{gemix::ClassifierModel::load(path)};
  });
}

gemix_status gemix_classifier_info(const gemix_classifier* c, int* classes, int* image_size, int* channels,
                                   int* feature_dim) {
  return guarded([&] {
    need(c, "classifier");
    const auto& cfg = c->model.config();
    if (classes) *classes = cfg.classes;
    if (image_size) *image_size = cfg.image_size;
    if (channels) *channels = cfg.channels;
    if (feature_dim) *feature_dim = c->model.feature_dim();
  });
}

gemix_status gemix_classifier_predict(const gemix_classifier* c, const float* images, size_t count,
                                      double* probs_out) {
  return guarded([&] {
    need(c, "classifier");
    if (count == 0) return;
    need(images, "images");
    need(probs_out, "probs_out");
    const auto& cfg = c->model.config();
    const auto probs = c->model.predict(batch_from(images, count, cfg.image_size, cfg.channels));
    for (std::size_t i = 0; i < probs.size(); ++i)
      std::copy(probs[i].begin(), probs[i].end(), probs_out + i * static_cast<std::size_t>(cfg.classes));
  });
}

gemix_status gemix_classifier_features(const gemix_classifier* c, const float* images, size_t count,
                                       float* features_out) {
  return guarded([&] {
    need(c, "classifier");
    if (count == 0) return;
    need(images, "images");
    need(features_out, "features_out");
    const auto& cfg = c->model.config();
    const auto f = c->model.extract_features(batch_from(images, count, cfg.image_size, cfg.channels));
    const auto dim = static_cast<std::size_t>(c->model.feature_dim());
    for (std::size_t i = 0; i < f.size(); ++i) std::copy(f[i].begin(), f[i].end(), features_out + i * dim);
  });
}

void gemix_classifier_free(gemix_classifier* c) { delete c; }

// ---- loss and metrics

gemix_status gemix_soft_cross_entropy(const double* probs, const double* target, int classes, double* out) {
  return guarded([&] {
    need(probs, "probs");
    need(target, "target");
    need(out, "out");
    gemix::require(classes >= 1, "classes must be >= 1");
    const auto k = static_cast<std::size_t>(classes);
    *out = gemix::soft_cross_entropy({probs, k}, {target, k});
  });
}

gemix_status gemix_confusion_matrix(const double* probs, const int* true_labels, size_t count, int classes,
                                    long long* counts_out) {
  return guarded([&] {
    need(counts_out, "counts_out");
    gemix::require(classes >= 1, "classes must be >= 1");
    if (count > 0) {
      need(probs, "probs");
      need(true_labels, "true_labels");
    }
    const auto k = static_cast<std::size_t>(classes);
    std::vector<std::vector<double>> p;
    p.reserve(count);
    for (std::size_t i = 0; i < count; ++i) p.emplace_back(probs + i * k, probs + (i + 1) * k);
    const auto cm = gemix::confusion_matrix(p, std::vector<int>(true_labels, true_labels + count), classes);
    for (std::size_t t = 0; t < k; ++t)
      std::copy(cm.counts[t].begin(), cm.counts[t].end(), counts_out + t * k);
  });
}

gemix_status gemix_macro_prf(const long long* counts, int classes, double* precision, double* recall,
                             double* f1) {
  return guarded([&] {
    need(counts, "counts");
    const auto m = gemix::macro_prf(matrix_from(counts, classes));
    if (precision) *precision = m.precision;
    if (recall) *recall = m.recall;
    if (f1) *f1 = m.f1;
  });
}

gemix_status gemix_false_negative_rate(const long long* counts, int classes, int positive, double* out) {
  return guarded([&] {
    need(counts, "counts");
    need(out, "out");
    *out = gemix::false_negative_rate(matrix_from(counts, classes), positive);
  });
}

// ---- reports

gemix_status gemix_report_read(const char* path, gemix_report** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new gemix_report{gemix::read_report(path)};
  });
}

gemix_status gemix_report_write(const gemix_report* r, const char* path) {
  return guarded([&] {
    need(r, "report");
    need(path, "path");
    gemix::write_report(r->report, path);
  });
}

gemix_status gemix_report_metrics(const gemix_report* r, double* macro_p, double* macro_r, double* macro_f1,
                                  double* fn_rate) {
  return guarded([&] {
    need(r, "report");
    if (macro_p) *macro_p = r->report.macro_p;
    if (macro_r) *macro_r = r->report.macro_r;
    if (macro_f1) *macro_f1 = r->report.macro_f1;
    if (fn_rate) *fn_rate = r->report.fn_rate;
  });
}

const char* gemix_report_setup(const gemix_report* r) { return r ? r->report.setup.c_str() : ""; }

gemix_status gemix_report_row(const gemix_report* r, char* buf, size_t capacity, size_t* needed) {
  return guarded([&] {
    need(r, "report");
    copy_out(gemix::render_table_row(r->report), buf, capacity, needed);
  });
}

void gemix_report_free(gemix_report* r) { delete r; }

}  // extern "C"
