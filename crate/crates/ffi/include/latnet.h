/* C ABI for the latnet manifest-subnetwork identification toolkit. */

#ifndef LATNET_H
#define LATNET_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes returned by every fallible function.
 */
typedef enum LatnetStatus {
  LATNET_STATUS_OK = 0,
  LATNET_STATUS_NULL_POINTER = 1,
  LATNET_STATUS_INVALID_ARGUMENT = 2,
  LATNET_STATUS_DATA_FORMAT = 3,
  LATNET_STATUS_SINGULAR = 4,
  LATNET_STATUS_NUMERIC_OVERFLOW = 5,
  LATNET_STATUS_UNDEFINED_RATIO = 6,
  LATNET_STATUS_IO = 7,
  LATNET_STATUS_INVALID_UTF8 = 8,
  LATNET_STATUS_INTERNAL = 9,
} LatnetStatus;

/**
 * Opaque handle to a classified manifest interaction graph.
 */
typedef struct LatnetGraph LatnetGraph;

/**
 * Opaque handle to an AR model.
 */
typedef struct LatnetModel LatnetModel;

/**
 * Opaque handle to a partitioned ground-truth network.
 */
typedef struct LatnetNetwork LatnetNetwork;

/**
 * Opaque handle to a manifest time-series record.
 */
typedef struct LatnetTimeSeries LatnetTimeSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *latnet_last_error_message(void);

/**
 * Builds a directed ring network. `manifest` points at `manifest_len`
 * 1-based node indices.
 *
 * # Safety
 * `manifest` must reference `manifest_len` readable elements; `out` must
 * be a writable pointer slot.
 */
enum LatnetStatus latnet_network_ring(size_t n,
                                      double edge_weight,
                                      double self_loop,
                                      const size_t *manifest,
                                      size_t manifest_len,
                                      struct LatnetNetwork **out);

/**
 * Builds a seeded weighted Erdős–Rényi network.
 *
 * # Safety
 * `out` must be a writable pointer slot.
 */
enum LatnetStatus latnet_network_erdos_renyi(size_t n,
                                             double p,
                                             double w_min,
                                             double w_max,
                                             size_t n_manifest,
                                             uint64_t seed,
                                             struct LatnetNetwork **out);

/**
 * Reads a network JSON file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be a writable pointer slot.
 */
enum LatnetStatus latnet_network_read_json(const char *path, struct LatnetNetwork **out);

/**
 * Writes a network to a JSON file.
 *
 * # Safety
 * `net` must be a live handle; `path` must be NUL-terminated.
 */
enum LatnetStatus latnet_network_write_json(const struct LatnetNetwork *net, const char *path);

/**
 * Manifest and latent node counts.
 *
 * # Safety
 * All pointers must be valid.
 */
enum LatnetStatus latnet_network_counts(const struct LatnetNetwork *net,
                                        size_t *out_n_m,
                                        size_t *out_n_l);

/**
 * Spectral radii of the full matrix and of the latent block, with the
 * Schur-stability flags they imply.
 *
 * # Safety
 * All pointers must be valid.
 */
enum LatnetStatus latnet_network_stability(const struct LatnetNetwork *net,
                                           double *out_rho_full,
                                           double *out_rho_latent,
                                           bool *out_stable,
                                           bool *out_latent_stable);

/**
 * Releases a network handle. Null is ignored.
 *
 * # Safety
 * `net` must have come from this library and not been freed before.
 */
void latnet_network_free(struct LatnetNetwork *net);

/**
 * Simulates `n` samples under seeded white Gaussian manifest input,
 * after discarding `burn_in` leading steps.
 *
 * # Safety
 * `net` must be a live handle; `out` must be a writable pointer slot.
 */
enum LatnetStatus latnet_simulate(const struct LatnetNetwork *net,
                                  size_t n,
                                  uint64_t seed,
                                  size_t burn_in,
                                  struct LatnetTimeSeries **out);

/**
 * Reads a time-series CSV file (input columns optional).
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be a writable pointer slot.
 */
enum LatnetStatus latnet_timeseries_read_csv(const char *path, struct LatnetTimeSeries **out);

/**
 * Writes a record to a time-series CSV file.
 *
 * # Safety
 * `ts` must be a live handle; `path` must be NUL-terminated.
 */
enum LatnetStatus latnet_timeseries_write_csv(const struct LatnetTimeSeries *ts, const char *path);

/**
 * Channel count and sample count of a record.
 *
 * # Safety
 * All pointers must be valid.
 */
enum LatnetStatus latnet_timeseries_dims(const struct LatnetTimeSeries *ts,
                                         size_t *out_channels,
                                         size_t *out_samples);

/**
 * Releases a time-series handle. Null is ignored.
 *
 * # Safety
 * `ts` must have come from this library and not been freed before.
 */
void latnet_timeseries_free(struct LatnetTimeSeries *ts);

/**
 * The optimal AR sequence of a known network at the given order.
 *
 * # Safety
 * `net` must be a live handle; `out` must be a writable pointer slot.
 */
enum LatnetStatus latnet_optimal_ar(const struct LatnetNetwork *net,
                                    size_t tau,
                                    struct LatnetModel **out);

/**
 * Least-squares AR fit of a record at the given order.
 *
 * # Safety
 * `ts` must be a live handle; `out` must be a writable pointer slot.
 */
enum LatnetStatus latnet_lsar_fit(const struct LatnetTimeSeries *ts,
                                  size_t tau,
                                  struct LatnetModel **out);

/**
 * Exponentially regularized AR fit.
 *
 * # Safety
 * `ts` must be a live handle; `out` must be a writable pointer slot.
 */
enum LatnetStatus latnet_lsar_fit_regularized(const struct LatnetTimeSeries *ts,
                                              size_t tau,
                                              double gamma,
                                              double rho0,
                                              struct LatnetModel **out);

/**
 * Reads an AR model JSON file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be a writable pointer slot.
 */
enum LatnetStatus latnet_model_read_json(const char *path, struct LatnetModel **out);

/**
 * Writes an AR model to a JSON file.
 *
 * # Safety
 * `model` must be a live handle; `path` must be NUL-terminated.
 */
enum LatnetStatus latnet_model_write_json(const struct LatnetModel *model, const char *path);

/**
 * Manifest dimension and order of a model.
 *
 * # Safety
 * All pointers must be valid.
 */
enum LatnetStatus latnet_model_dims(const struct LatnetModel *model,
                                    size_t *out_n_m,
                                    size_t *out_tau);

/**
 * Coefficient `(row, col)` of the order-`order` block.
 *
 * # Safety
 * All pointers must be valid.
 */
enum LatnetStatus latnet_model_coefficient(const struct LatnetModel *model,
                                           size_t order,
                                           size_t row,
                                           size_t col,
                                           double *out);

/**
 * Releases a model handle. Null is ignored.
 *
 * # Safety
 * `model` must have come from this library and not been freed before.
 */
void latnet_model_free(struct LatnetModel *model);

/**
 * H-infinity distance between a model's transfer function and the
 * manifest transfer function of a network.
 *
 * # Safety
 * Handles must be live; `out` must be a writable slot.
 */
enum LatnetStatus latnet_hinf_fit_error(const struct LatnetModel *model,
                                        const struct LatnetNetwork *net,
                                        size_t grid_size,
                                        double *out);

/**
 * H-infinity norm of the manifest transfer function.
 *
 * # Safety
 * `net` must be a live handle; `out` must be a writable slot.
 */
enum LatnetStatus latnet_manifest_hinf_norm(const struct LatnetNetwork *net,
                                            size_t grid_size,
                                            double *out);

/**
 * One-step prediction quality of a model on a holdout record.
 *
 * # Safety
 * Handles must be live; `out` must be a writable slot.
 */
enum LatnetStatus latnet_r_squared(const struct LatnetModel *model,
                                   const struct LatnetTimeSeries *holdout,
                                   double *out);

/**
 * Classifies manifest pairs with the proportional threshold rule.
 *
 * # Safety
 * `model` must be a live handle; `out` must be a writable pointer slot.
 */
enum LatnetStatus latnet_classify(const struct LatnetModel *model,
                                  double alpha,
                                  struct LatnetGraph **out);

/**
 * Writes a classified graph as JSON (adjacency lists with orders).
 *
 * # Safety
 * `graph` must be a live handle; `path` must be NUL-terminated.
 */
enum LatnetStatus latnet_graph_write_json(const struct LatnetGraph *graph, const char *path);

/**
 * Writes the plot-ready `src,dst,kind,weight_or_order` edge list.
 *
 * # Safety
 * `graph` must be a live handle; `path` must be NUL-terminated.
 */
enum LatnetStatus latnet_graph_write_edge_csv(const struct LatnetGraph *graph, const char *path);

/**
 * Number of direct edges and indirect pairs in a classified graph.
 *
 * # Safety
 * All pointers must be valid.
 */
enum LatnetStatus latnet_graph_counts(const struct LatnetGraph *graph,
                                      size_t *out_direct,
                                      size_t *out_indirect);

/**
 * Releases a graph handle. Null is ignored.
 *
 * # Safety
 * `graph` must have come from this library and not been freed before.
 */
void latnet_graph_free(struct LatnetGraph *graph);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* LATNET_H */
