/* C API for the GAN-inversion toolkit. Opaque handles + error codes;
 * every function returns GI_OK or an error code, with a thread-local
 * message available from gi_last_error(). Image buffers are row-major
 * float32 [N,C,H,W] with pixel values in [-1, 1]; latent buffers are
 * row-major float32 [N, dim].
 */
#ifndef GANINVERT_H
#define GANINVERT_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  GI_OK = 0,
  GI_ERR_CONFIG = 1,
  GI_ERR_SHAPE = 2,
  GI_ERR_NUMERICAL = 3,
  GI_ERR_PERSISTENCE = 4,
  GI_ERR_TRAINING = 5,
  GI_ERR_IO = 6,
  GI_ERR_UNKNOWN = 7
} gi_status;

/* Message for the most recent failure on this thread. */
const char* gi_last_error(void);

typedef struct gi_generator gi_generator;
typedef struct gi_encoder gi_encoder;
typedef struct gi_extractor gi_extractor;

/* ---- latent space ---- */

/* kind: "uniform" | "standard_normal". out must hold n*dim floats. */
gi_status gi_sample_prior(const char* kind, int dim, double lo, double hi,
                          long long n, unsigned long long seed, float* out);

/* Replaces out-of-range coordinates with uniform draws inside (lo, hi). */
gi_status gi_stochastic_clip(float* z, int dim, double lo, double hi,
                             unsigned long long seed);
gi_status gi_hard_clip(float* z, int dim, double lo, double hi);

/* ZVEC1 container round-trip. gi_latents_load allocates *out (free with
 * gi_buffer_free) and reports dim/count. */
gi_status gi_latents_save(const char* path, const float* values, int dim,
                          long long count);
gi_status gi_latents_load(const char* path, float** out, int* dim,
                          long long* count);
void gi_buffer_free(void* p);

/* ---- generator ---- */

gi_status gi_generator_load(const char* path, gi_generator** out);
/* config_json: RunConfig JSON text (generator/prior sections are used). */
gi_status gi_generator_build(const char* config_json,
                             unsigned long long seed, gi_generator** out);
gi_status gi_generator_save(const gi_generator* g, const char* path);
void gi_generator_free(gi_generator* g);
gi_status gi_generator_info(const gi_generator* g, int* latent_dim, int* c,
                            int* h, int* w);
gi_status gi_generate(const gi_generator* g, const float* z, int n,
                      float* out_images);

/* ---- encoder ---- */

gi_status gi_encoder_load(const char* path, gi_encoder** out);
void gi_encoder_free(gi_encoder* e);
gi_status gi_encoder_info(const gi_encoder* e, int* latent_dim, int* c,
                          int* h, int* w);
gi_status gi_encode(const gi_encoder* e, const float* images, int n,
                    float* out_z);

/* ---- feature extractor ---- */

gi_status gi_extractor_load(const char* path, gi_extractor** out);
gi_status gi_extractor_build(const char* config_json, gi_extractor** out);
void gi_extractor_free(gi_extractor* e);
gi_status gi_perceptual_loss(const gi_extractor* e, const float* a,
                             const float* b, int c, int h, int w,
                             double* out);

/* ---- optimization-based inversion ---- */

typedef struct {
  int iterations;        /* >= 0 */
  double learning_rate;  /* > 0 */
  int loss_kind;         /* 0 = mae, 1 = l2 */
  int clip_mode;         /* 0 = none, 1 = hard, 2 = stochastic */
  double beta1, beta2, epsilon;
  int has_stop_threshold;
  double stop_threshold;
  unsigned long long seed;
} gi_invert_config;

/* Sensible defaults: 200 iterations, lr 0.01, MAE, no clipping. */
void gi_invert_config_init(gi_invert_config* cfg);

/* target: one image (c*h*w floats). z_out: latent_dim floats.
 * loss_trace (optional): caller-allocated, capacity cfg->iterations.
 * termination: 0 max_iters, 1 threshold, 2 numerical_error. */
gi_status gi_invert(const gi_generator* g, const float* target,
                    const char* prior_kind, double lo, double hi,
                    const gi_invert_config* cfg, float* z_out,
                    double* loss_trace, int* iterations_run, int* termination,
                    double* wall_time_s);

/* ---- metrics ---- */

gi_status gi_pixel_mae(const float* a, const float* b, long long n,
                       double* out);
gi_status gi_psnr(const float* a, const float* b, long long n, double* out);
gi_status gi_cosine_distance(const float* a, const float* b, int dim,
                             double* out);
gi_status gi_embedding_distance(const gi_extractor* e, const float* a,
                                const float* b, int c, int h, int w,
                                double* out);

/* ---- command-level entry points (RunConfig JSON text) ---- */

gi_status gi_cmd_train_gan(const char* config_json);
gi_status gi_cmd_build_dataset(const char* config_json);
gi_status gi_cmd_train_encoder(const char* config_json);
gi_status gi_cmd_invert(const char* config_json, const char* method);
/* On success allocates *report_json_out (free with gi_buffer_free). */
gi_status gi_cmd_evaluate(const char* config_json, const char* method,
                          char** report_json_out);
gi_status gi_cmd_compare(const char* config_json, char** report_json_out);

#ifdef __cplusplus
}
#endif

#endif /* GANINVERT_H */
