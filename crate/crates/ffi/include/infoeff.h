#ifndef INFOEFF_H
#define INFOEFF_H

#include <stddef.h>
#include <stdint.h>

typedef enum IeBandMode {
  IE_BAND_MODE_GAUSSIAN = 0,
  IE_BAND_MODE_QUANTILE = 1,
} IeBandMode;

/*
 Result code of every call.
 */
typedef enum IeStatus {
  IE_STATUS_OK = 0,
  IE_STATUS_NULL_POINTER = 1,
  IE_STATUS_INVALID_ARGUMENT = 2,
  IE_STATUS_INSUFFICIENT_DATA = 3,
  IE_STATUS_INTERNAL = 4,
  IE_STATUS_PANIC = 5,
  IE_STATUS_BUFFER_TOO_SMALL = 6,
} IeStatus;

typedef enum IeDtwCost {
  IE_DTW_COST_SQUARED = 0,
  IE_DTW_COST_ABS = 1,
} IeDtwCost;

/*
 Opaque analysis result for one return series.
 */
typedef struct IeTrack IeTrack;

/*
 Parameters of the sliding-window analysis. Obtain defaults from
 [`ie_config_default`] and override fields as needed.
 */
typedef struct IeConfig {
  size_t embedding_dim;
  size_t window;
  size_t surrogates;
  double confidence;
  size_t efficiency_window;
  uint64_t master_seed;
  enum IeBandMode band_mode;
} IeConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Default analysis parameters.
 */
struct IeConfig ie_config_default(void);

/*
 Copies the calling thread's last error message into `buf` (NUL-terminated,
 truncated to `len - 1` bytes) and returns the full message length in bytes
 excluding the terminator. Pass a null `buf` to query the length.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t ie_last_error_message(char *buf, size_t len);

/*
 Normalized permutation entropy and statistical complexity of one window.

 # Safety
 `values` must point to `n` doubles; `entropy` and `complexity` must be
 writable.
 */
enum IeStatus ie_ordinal_measures(const double *values,
                                  size_t n,
                                  size_t embedding_dim,
                                  double *entropy,
                                  double *complexity);

/*
 Largest Jensen–Shannon divergence from the uniform distribution over
 `embedding_dim!` patterns.

 # Safety
 `out` must be writable.
 */
enum IeStatus ie_max_divergence(size_t embedding_dim, double *out);

/*
 Dynamic time warping distance between two series.

 # Safety
 `a` and `b` must point to `na` and `nb` doubles; `out` must be writable.
 */
enum IeStatus ie_dtw_distance(const double *a,
                              size_t na,
                              const double *b,
                              size_t nb,
                              enum IeDtwCost cost,
                              double *out);

/*
 Runs the sliding-window analysis with surrogate bands on a series of log
 returns. On success `*out` receives a new handle.

 # Safety
 `config` must be valid, `returns` must point to `n` doubles and `out` must
 be writable.
 */
enum IeStatus ie_track_analyze(const struct IeConfig *config,
                               const double *returns,
                               size_t n,
                               struct IeTrack **out);

/*
 Releases a handle from [`ie_track_analyze`]. Null is ignored.

 # Safety
 `track` must be null or a handle not yet freed.
 */
void ie_track_free(struct IeTrack *track);

/*
 Number of windows in the track.

 # Safety
 `track` must be a live handle; `out` must be writable.
 */
enum IeStatus ie_track_len(const struct IeTrack *track, size_t *out);

/*
 Copies per-window values. Each output pointer is optional (null skips it)
 and otherwise must hold `len` elements, where `len` equals the track
 length. `inside` receives 1 for windows inside their band, else 0.

 # Safety
 Non-null outputs must point to `len` writable elements.
 */
enum IeStatus ie_track_copy(const struct IeTrack *track,
                            double *entropy,
                            double *complexity,
                            uint8_t *inside,
                            size_t len);

/*
 Fraction of windows inside their surrogate band.

 # Safety
 `track` must be a live handle; `out` must be writable.
 */
enum IeStatus ie_track_efficiency(const struct IeTrack *track, double *out);

/*
 Time-resolved efficiency with the configured averaging window. The number
 of points is always stored in `*out_len`. Values are copied when `values`
 is non-null and `capacity` is large enough; otherwise the call returns
 `BufferTooSmall` (or `Ok` for a null `values` length query).

 # Safety
 `track` must be a live handle, `out_len` writable and `values` null or
 pointing to `capacity` doubles.
 */
enum IeStatus ie_track_efficiency_series(const struct IeTrack *track,
                                         double *values,
                                         size_t capacity,
                                         size_t *out_len);

/*
 Average-linkage clustering of a row-major `k × k` distance matrix, cut at
 the threshold with the highest mean silhouette. `labels` receives `k`
 cluster ids numbered by first appearance in dendrogram leaf order.

 # Safety
 `distances` must point to `k * k` doubles, `labels` to `k` writable
 elements; the scalar outputs are optional.
 */
enum IeStatus ie_cluster_optimal_cut(const double *distances,
                                     size_t k,
                                     size_t *labels,
                                     double *threshold,
                                     double *mean_silhouette,
                                     size_t *n_clusters);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFOEFF_H */
