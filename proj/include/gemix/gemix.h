/*
 * gemix C API.
 *
 * Every function returns a gemix_status. On failure a human-readable message
 * is available from gemix_last_error() on the calling thread until the next
 * call into the library from that thread. Objects are opaque handles created
 * by *_new / *_load and released by the matching *_free (NULL is accepted).
 *
 * Images cross the boundary as interleaved H x W x C float32 buffers in
 * [0, 1]; labels and probability vectors as K doubles.
 */
#ifndef GEMIX_GEMIX_H
#define GEMIX_GEMIX_H

#include <stddef.h>
#include <stdint.h>

#if defined(GEMIX_BUILDING_LIBRARY)
#define GEMIX_API __attribute__((visibility("default")))
#else
#define GEMIX_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gemix_status {
  GEMIX_OK = 0,
  GEMIX_ERR_INVALID_ARGUMENT = 1,
  GEMIX_ERR_CONFIG = 2,
  GEMIX_ERR_IO = 3,
  GEMIX_ERR_FORMAT = 4,
  GEMIX_ERR_MISSING_ARTIFACT = 5,
  GEMIX_ERR_RUNTIME = 6,
  GEMIX_ERR_INTERNAL = 7
} gemix_status;

GEMIX_API const char* gemix_version(void);
GEMIX_API const char* gemix_last_error(void);
GEMIX_API const char* gemix_status_string(gemix_status status);
/* Process exit code for a status: 0 success, 1 usage/config, 2 runtime. */
GEMIX_API int gemix_status_exit_code(gemix_status status);

/* ---- run configuration ------------------------------------------------ */

typedef struct gemix_config gemix_config;

/* preset: "desk", "paper", or NULL for desk. */
GEMIX_API gemix_status gemix_config_new(const char* preset, gemix_config** out);
GEMIX_API gemix_status gemix_config_load(const char* path, gemix_config** out);
/* Dotted key override, e.g. ("gan.steps", "200"). Values parse as JSON when
 * possible, otherwise as strings. */
GEMIX_API gemix_status gemix_config_set(gemix_config* config, const char* key, const char* value);
GEMIX_API gemix_status gemix_config_validate(const gemix_config* config);
/* Copies the JSON form into buf (NUL-terminated). *needed receives the
 * required capacity; a too-small buffer yields GEMIX_ERR_INVALID_ARGUMENT. */
GEMIX_API gemix_status gemix_config_to_json(const gemix_config* config, char* buf, size_t capacity,
                                            size_t* needed);
GEMIX_API void gemix_config_free(gemix_config* config);

/* ---- pipeline stages -------------------------------------------------- */

typedef struct gemix_pipeline gemix_pipeline;
typedef void (*gemix_log_fn)(const char* line, void* user);

/* Validates the config; log may be NULL. */
GEMIX_API gemix_status gemix_pipeline_new(const gemix_config* config, gemix_log_fn log, void* user,
                                          gemix_pipeline** out);
GEMIX_API void gemix_pipeline_free(gemix_pipeline* pipeline);

GEMIX_API gemix_status gemix_pipeline_gen_data(gemix_pipeline* pipeline);
GEMIX_API gemix_status gemix_pipeline_train_gan(gemix_pipeline* pipeline);
/* kind: "mixup", "mmixup" or "gemix". */
GEMIX_API gemix_status gemix_pipeline_augment(gemix_pipeline* pipeline, const char* kind);
/* setup: "Real", "Mixup", "MMixup", "GeMix", "Real+Mixup", "Real+MMixup",
 * "Real+GeMix" or "Real+MMixup+GeMix". */
GEMIX_API gemix_status gemix_pipeline_train_clf(gemix_pipeline* pipeline, const char* setup);
/* model_path may be NULL to use the setup's model from the run layout. */
GEMIX_API gemix_status gemix_pipeline_eval(gemix_pipeline* pipeline, const char* setup,
                                           const char* model_path);
/* With count == 0 every report in the run's reports directory is used. */
GEMIX_API gemix_status gemix_pipeline_report(gemix_pipeline* pipeline, const char* const* report_paths,
                                             size_t count);
GEMIX_API gemix_status gemix_pipeline_features(gemix_pipeline* pipeline, const char* setup);
/* Path written by the last successful stage; for report, the table text. */
GEMIX_API const char* gemix_pipeline_last_output(const gemix_pipeline* pipeline);

/* ---- sampling --------------------------------------------------------- */

typedef struct gemix_rng gemix_rng;

GEMIX_API gemix_status gemix_rng_new(uint64_t seed, gemix_rng** out);
GEMIX_API void gemix_rng_free(gemix_rng* rng);

GEMIX_API gemix_status gemix_sample_dominant_class(gemix_rng* rng, int classes, int* out);
/* theta_out receives `classes` values. */
GEMIX_API gemix_status gemix_build_concentration(int dominant, int classes, double a_eq, double a_neq,
                                                 double* theta_out);
GEMIX_API gemix_status gemix_sample_soft_label(gemix_rng* rng, const double* theta, int classes,
                                               double* label_out);
GEMIX_API gemix_status gemix_sample_mix_coefficient(gemix_rng* rng, double alpha, double* out);
GEMIX_API gemix_status gemix_sample_latent(gemix_rng* rng, int dim, float* out);

/* ---- pixel-space mixers ----------------------------------------------- */

GEMIX_API gemix_status gemix_mixup_pair(const float* x_i, const double* y_i, const float* x_j,
                                        const double* y_j, int height, int width, int channels,
                                        int classes, double lambda, float* image_out,
                                        double* label_out);
/* images: `classes` pointers, one image per class. */
GEMIX_API gemix_status gemix_mmixup(const float* const* images, int classes, int height, int width,
                                    int channels, const double* label, float* image_out);

/* ---- conditional generator -------------------------------------------- */

typedef struct gemix_generator gemix_generator;

GEMIX_API gemix_status gemix_generator_load(const char* path, gemix_generator** out);
GEMIX_API gemix_status gemix_generator_save(const gemix_generator* generator, const char* path);
GEMIX_API gemix_status gemix_generator_info(const gemix_generator* generator, int* classes,
                                            int* image_size, int* channels, int* latent_dim);
/* z: latent_dim floats; label: classes doubles; image_out: size*size*channels. */
GEMIX_API gemix_status gemix_generator_generate(const gemix_generator* generator, const float* z,
                                                const double* label, float* image_out);
GEMIX_API void gemix_generator_free(gemix_generator* generator);

/* ---- classifier ------------------------------------------------------- */

typedef struct gemix_classifier gemix_classifier;

GEMIX_API gemix_status gemix_classifier_load(const char* path, gemix_classifier** out);
GEMIX_API gemix_status gemix_classifier_info(const gemix_classifier* classifier, int* classes,
                                             int* image_size, int* channels, int* feature_dim);
/* images: count consecutive images; probs_out: count * classes doubles. */
GEMIX_API gemix_status gemix_classifier_predict(const gemix_classifier* classifier, const float* images,
                                                size_t count, double* probs_out);
/* features_out: count * feature_dim floats. */
GEMIX_API gemix_status gemix_classifier_features(const gemix_classifier* classifier, const float* images,
                                                 size_t count, float* features_out);
GEMIX_API void gemix_classifier_free(gemix_classifier* classifier);

/* ---- loss and metrics ------------------------------------------------- */

GEMIX_API gemix_status gemix_soft_cross_entropy(const double* probs, const double* target, int classes,
                                                double* out);
/* counts_out: classes * classes, row-major, rows = true class. */
GEMIX_API gemix_status gemix_confusion_matrix(const double* probs, const int* true_labels, size_t count,
                                              int classes, long long* counts_out);
GEMIX_API gemix_status gemix_macro_prf(const long long* counts, int classes, double* precision,
                                       double* recall, double* f1);
GEMIX_API gemix_status gemix_false_negative_rate(const long long* counts, int classes, int positive,
                                                 double* out);

/* ---- reports ---------------------------------------------------------- */

typedef struct gemix_report gemix_report;

GEMIX_API gemix_status gemix_report_read(const char* path, gemix_report** out);
GEMIX_API gemix_status gemix_report_write(const gemix_report* report, const char* path);
GEMIX_API gemix_status gemix_report_metrics(const gemix_report* report, double* macro_p, double* macro_r,
                                            double* macro_f1, double* fn_rate);
GEMIX_API const char* gemix_report_setup(const gemix_report* report);
/* "Setup P R F1" row with three decimals; buffer semantics as gemix_config_to_json. */
GEMIX_API gemix_status gemix_report_row(const gemix_report* report, char* buf, size_t capacity,
                                        size_t* needed);
GEMIX_API void gemix_report_free(gemix_report* report);

#ifdef __cplusplus
}
#endif

#endif /* GEMIX_GEMIX_H */
