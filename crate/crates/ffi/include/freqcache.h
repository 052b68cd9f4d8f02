#ifndef FREQCACHE_H
#define FREQCACHE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum fqc_status {
  FQC_STATUS_OK = 0,
  FQC_STATUS_NULL_POINTER = 1,
  FQC_STATUS_INVALID_ARGUMENT = 2,
  FQC_STATUS_DIMENSION_MISMATCH = 3,
  FQC_STATUS_DEGENERATE_SPECTRUM = 4,
  FQC_STATUS_NO_TEXTURE = 5,
  FQC_STATUS_INVARIANT_VIOLATION = 6,
  FQC_STATUS_INTERNAL = 7,
} fqc_status;

/**
 * Opaque streaming session.
 */
typedef struct fqc_session fqc_session;

/**
 * Pipeline parameters. Start from `fqc_config_default`.
 */
typedef struct fqc_config {
  double tau_mig;
  double lambda;
  double alpha_min;
  double alpha_max;
  size_t patch_size;
  bool include_dc;
} fqc_config;

/**
 * Scalar fields of one decision. The index sets are fetched separately.
 */
typedef struct fqc_decision_summary {
  size_t step;
  bool flushed;
  double sim_freq;
  int64_t di;
  int64_t dj;
  int64_t di_patches;
  int64_t dj_patches;
  double entropy_raw;
  double entropy_normalized;
  double alpha;
  size_t k_reuse;
  size_t k_candidate;
  size_t k_final;
  size_t n_tokens;
} fqc_decision_summary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

struct fqc_config fqc_config_default(void);

/**
 * Static NUL-terminated version string.
 */
const char *fqc_version(void);

/**
 * Message of the last failing call on this thread, or NULL. Valid until
 * the next failing call on the same thread.
 */
const char *fqc_last_error_message(void);

/**
 * Creates a session. `config` may be NULL for defaults.
 */
enum fqc_status fqc_session_new(const struct fqc_config *config, struct fqc_session **out);

/**
 * Frees a session; NULL is a no-op.
 */
void fqc_session_free(struct fqc_session *session);

/**
 * Feeds the next frame. `*has_decision` is false for the first frame,
 * which only fills the cache; `summary_out` is then left untouched.
 */
enum fqc_status fqc_session_push(struct fqc_session *session,
                                 const double *pixels,
                                 size_t height,
                                 size_t width,
                                 struct fqc_decision_summary *summary_out,
                                 bool *has_decision);

/**
 * Copies the reuse set of the last decision (ascending energy order) into
 * `out`. `*len` receives the full set size even when it exceeds
 * `capacity`, in which case nothing is copied and `InvalidArgument` is
 * returned.
 */
enum fqc_status fqc_session_reuse_set(const struct fqc_session *session,
                                      size_t *out,
                                      size_t capacity,
                                      size_t *len);

/**
 * The last decision as a JSON object, or NULL before the first decision or
 * on error. Release with `fqc_string_free`.
 */
char *fqc_session_decision_json(const struct fqc_session *session);

/**
 * Frees a string returned by this library; NULL is a no-op.
 */
void fqc_string_free(char *s);

/**
 * Shift `(di, dj)` such that `curr(r, c) ~ prev(r - di, c - dj)`.
 */
enum fqc_status fqc_phase_correlation(const double *prev,
                                      const double *curr,
                                      size_t height,
                                      size_t width,
                                      int64_t *di,
                                      int64_t *dj);

/**
 * Cosine similarity of the two frames' amplitude spectra.
 */
enum fqc_status fqc_sim_freq(const double *prev,
                             const double *curr,
                             size_t height,
                             size_t width,
                             double *out);

/**
 * Spectral entropy of a frame in nats and normalized to `[0, 1]`.
 */
enum fqc_status fqc_spectral_entropy(const double *pixels,
                                     size_t height,
                                     size_t width,
                                     bool include_dc,
                                     double *raw,
                                     double *normalized);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FREQCACHE_H */
