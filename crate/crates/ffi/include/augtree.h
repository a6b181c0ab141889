#ifndef AUGTREE_H
#define AUGTREE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum AugtreeStatus {
  AUGTREE_STATUS_OK = 0,
  AUGTREE_STATUS_INVALID_ARGUMENT = 1,
  AUGTREE_STATUS_NULL_POINTER = 2,
  AUGTREE_STATUS_NUMERICAL = 3,
  AUGTREE_STATUS_PARSE = 4,
  AUGTREE_STATUS_INTERNAL = 5,
} AugtreeStatus;

typedef enum AugtreeCriticalMode {
  AUGTREE_CRITICAL_MODE_STAR = 0,
  AUGTREE_CRITICAL_MODE_SHARP = 1,
} AugtreeCriticalMode;

typedef struct AugtreeModel AugtreeModel;

typedef struct AugtreeNetwork AugtreeNetwork;

typedef struct AugtreeTree AugtreeTree;

/*
 Bracket returned by [`augtree_critical_search`].
 */
typedef struct AugtreeBracket {
  double lambda_lo;
  double lambda_hi;
  double beta_lo;
  double beta_hi;
} AugtreeBracket;

/*
 Message of the last failure on this thread, or null. Valid until the next
 failing call on the same thread.
 */
const char *augtree_last_error(void);

/*
 Library version as a static string.
 */
const char *augtree_version(void);

/*
 # Safety
 `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum AugtreeStatus augtree_model_from_json(const char *json, struct AugtreeModel **out);

/*
 Built-in model such as `interval`, `rotated-interval:p=0.5` or `gasket`.

 # Safety
 `name` must be a nul-terminated string and `out` a valid pointer.
 */
enum AugtreeStatus augtree_model_builtin(const char *name, struct AugtreeModel **out);

/*
 # Safety
 `model` must come from this library and not be used afterwards.
 */
void augtree_model_free(struct AugtreeModel *model);

/*
 Augmented tree to depth `levels`. A non-positive `gamma` selects the
 model's value, or `r0 / 2`.

 # Safety
 `model` and `out` must be valid pointers.
 */
enum AugtreeStatus augtree_tree_build(const struct AugtreeModel *model,
                                      uintptr_t levels,
                                      double gamma,
                                      struct AugtreeTree **out);

/*
 # Safety
 `tree` must come from this library and not be used afterwards.
 */
void augtree_tree_free(struct AugtreeTree *tree);

/*
 # Safety
 `tree` and `out` must be valid pointers.
 */
enum AugtreeStatus augtree_tree_vertex_count(const struct AugtreeTree *tree, uintptr_t *out);

/*
 # Safety
 `tree` and `out` must be valid pointers.
 */
enum AugtreeStatus augtree_tree_level_size(const struct AugtreeTree *tree,
                                           uintptr_t level,
                                           uintptr_t *out);

/*
 `μ(Φ(v))` for vertex id `v`.

 # Safety
 `tree` and `out` must be valid pointers.
 */
enum AugtreeStatus augtree_tree_measure(const struct AugtreeTree *tree,
                                        uintptr_t vertex,
                                        double *out);

/*
 # Safety
 `tree` and `out` must be valid pointers.
 */
enum AugtreeStatus augtree_network_build(const struct AugtreeTree *tree,
                                         double lambda,
                                         struct AugtreeNetwork **out);

/*
 # Safety
 `net` must come from this library and not be used afterwards.
 */
void augtree_network_free(struct AugtreeNetwork *net);

/*
 Writes the law of the first hit of level `level` from the root into
 `out[0..len]`; `len` must equal the level size.

 # Safety
 `net` must be valid and `out` must hold `len` doubles.
 */
enum AugtreeStatus augtree_hitting_distribution(const struct AugtreeNetwork *net,
                                                uintptr_t level,
                                                double *out,
                                                uintptr_t len);

/*
 # Safety
 `net` and `out` must be valid pointers.
 */
enum AugtreeStatus augtree_return_ratio(const struct AugtreeNetwork *net,
                                        uintptr_t vertex,
                                        double *out);

/*
 Level-`n` effective resistance between two set descriptors
 (`w:<label>`, `#id`, or `+`-joined points).

 # Safety
 `net` and `out` must be valid; `a` and `b` nul-terminated strings.
 */
enum AugtreeStatus augtree_level_resistance(const struct AugtreeNetwork *net,
                                            uintptr_t n,
                                            const char *a,
                                            const char *b,
                                            double *out);

/*
 Bisection for the critical λ of an IFS model on a tree of depth `n_max`.
 `mode` takes an [`AugtreeCriticalMode`] value.

 # Safety
 `model` and `out` must be valid pointers.
 */
enum AugtreeStatus augtree_critical_search(const struct AugtreeModel *model,
                                           uint32_t mode,
                                           uintptr_t n_max,
                                           uintptr_t iters,
                                           double gamma,
                                           struct AugtreeBracket *out);

#endif  /* AUGTREE_H */
