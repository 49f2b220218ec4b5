/* C interface to the islandrun orchestration engine. */

#ifndef ISLANDRUN_H
#define ISLANDRUN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every API function.
 */
typedef enum IrStatus {
  IR_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  IR_STATUS_NULL_ARGUMENT = 1,
  /**
   * An input string was not valid UTF-8.
   */
  IR_STATUS_INVALID_UTF8 = 2,
  /**
   * JSON or TOML input failed to parse.
   */
  IR_STATUS_PARSE_ERROR = 3,
  /**
   * Input parsed but violated a domain invariant.
   */
  IR_STATUS_VALIDATION_ERROR = 4,
  /**
   * Duplicate registration or similar conflict.
   */
  IR_STATUS_CONFLICT_ERROR = 5,
  /**
   * Simulation or I/O failure at run time.
   */
  IR_STATUS_RUNTIME_ERROR = 6,
  /**
   * The orchestrated policy detected a privacy violation and aborted.
   */
  IR_STATUS_PRIVACY_VIOLATION = 7,
  /**
   * An internal panic was caught at the boundary.
   */
  IR_STATUS_INTERNAL_PANIC = 8,
} IrStatus;

/**
 * Opaque island catalog handle.
 */
typedef struct IrCatalog IrCatalog;

/**
 * Opaque routing engine: catalog, capacity monitor, and router built from a
 * scenario configuration.
 */
typedef struct IrEngine IrEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer is valid
 * until the next failing call on the same thread; do not free it.
 */
const char *ir_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `ptr` must be a pointer previously returned via an out-parameter of this
 * library (or NULL), not yet freed.
 */
void ir_string_free(char *ptr);

/**
 * Compose a trust score from owner-declared components.
 * `mode`: 0 = min composition, 1 = product composition.
 *
 * # Safety
 * `out_trust` must point to writable memory for one double.
 */
enum IrStatus ir_compose_trust(double base,
                               double certification,
                               double jurisdiction,
                               int mode,
                               double *out_trust);

/**
 * Available capacity `R = 1 - max(cpu/100, gpu/100, mem_used/mem_total)`.
 *
 * # Safety
 * `out_available` must point to writable memory for one double.
 */
enum IrStatus ir_compute_available(double cpu_pct,
                                   double gpu_pct,
                                   uint64_t mem_used,
                                   uint64_t mem_total,
                                   double *out_available);

/**
 * Create an empty catalog. `trust_mode`: 0 = min, 1 = product.
 *
 * # Safety
 * `out_catalog` must point to writable memory for one pointer.
 */
enum IrStatus ir_catalog_new(int trust_mode, struct IrCatalog **out_catalog);

/**
 * Release a catalog handle.
 *
 * # Safety
 * `catalog` must be a pointer from [`ir_catalog_new`] (or NULL), not yet
 * freed.
 */
void ir_catalog_free(struct IrCatalog *catalog);

/**
 * Validate and register one island declaration (JSON).
 *
 * # Safety
 * `catalog` must be a live handle from [`ir_catalog_new`];
 * `declaration_json` must be a NUL-terminated string.
 */
enum IrStatus ir_catalog_register_json(struct IrCatalog *catalog, const char *declaration_json);

/**
 * Number of registered islands.
 *
 * # Safety
 * `catalog` must be a live handle from [`ir_catalog_new`].
 */
uintptr_t ir_catalog_len(const struct IrCatalog *catalog);

/**
 * Build an engine from scenario TOML text.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string; `out_engine` non-NULL.
 */
enum IrStatus ir_engine_from_toml(const char *config_toml, struct IrEngine **out_engine);

/**
 * Build an engine from a scenario file path.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `out_engine` non-NULL.
 */
enum IrStatus ir_engine_from_file(const char *config_path, struct IrEngine **out_engine);

/**
 * Release an engine handle.
 *
 * # Safety
 * `engine` must be a pointer from an `ir_engine_from_*` call (or NULL),
 * not yet freed.
 */
void ir_engine_free(struct IrEngine *engine);

/**
 * Route one request (JSON `InferenceRequest`) at a simulation tick.
 * Writes the routing decision as JSON. `session_token` seeds the
 * sanitization map id; pass NULL for a random session.
 *
 * # Safety
 * `engine` must be a live engine handle; `request_json` NUL-terminated;
 * `out_decision_json` non-NULL.
 */
enum IrStatus ir_engine_route_json(struct IrEngine *engine,
                                   const char *request_json,
                                   uint64_t tick,
                                   const char *session_token,
                                   char **out_decision_json);

/**
 * Analyze prompt sensitivity; writes a JSON report
 * `{score, triggers: [...], stage2_class}`.
 *
 * # Safety
 * `prompt` must be NUL-terminated; `out_report_json` non-NULL.
 */
enum IrStatus ir_analyze_sensitivity(const char *prompt, char **out_report_json);

/**
 * Detect entities; writes a JSON array of `{kind, start, end, surface}`.
 *
 * # Safety
 * `text` must be NUL-terminated; `out_entities_json` non-NULL.
 */
enum IrStatus ir_detect_entities(const char *text, char **out_entities_json);

/**
 * Sanitize a history (JSON array of turn strings) for a target privacy
 * score. Writes a JSON `{turns, map}` document whose map reverses the
 * substitution.
 *
 * # Safety
 * `history_json` and `session_token` (nullable) must be NUL-terminated;
 * `out_sanitized_json` non-NULL.
 */
enum IrStatus ir_sanitize(const char *history_json,
                          double target_privacy,
                          const char *session_token,
                          char **out_sanitized_json);

/**
 * Reverse placeholders in a response using a map JSON produced by
 * [`ir_sanitize`] (the `map` field). Writes JSON
 * `{text, unknown_placeholders}`.
 *
 * # Safety
 * `response` and `map_json` must be NUL-terminated; `out_json` non-NULL.
 */
enum IrStatus ir_desanitize(const char *response, const char *map_json, char **out_json);

/**
 * Run a scenario file under a policy. `policy` is one of `islandrun`,
 * `cloud-only`, `local-only`, `latency-greedy`, `privacy-only`; `disable`
 * is NULL or one of `mist`, `tide`, `lighthouse`. Writes the metrics as
 * JSON; `out_trace` (nullable) receives the full trace text.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out_metrics_json` non-NULL.
 */
enum IrStatus ir_run_scenario_file(const char *config_path,
                                   const char *policy,
                                   const char *disable,
                                   char **out_metrics_json,
                                   char **out_trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISLANDRUN_H */
