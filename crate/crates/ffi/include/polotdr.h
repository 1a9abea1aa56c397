#ifndef POLOTDR_H
#define POLOTDR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PolotdrStatus {
  POLOTDR_STATUS_OK = 0,
  POLOTDR_STATUS_NULL_POINTER = 1,
  // Invalid argument or configuration.
  POLOTDR_STATUS_CONFIG = 2,
  // Malformed data or a scheme the data cannot feed.
  POLOTDR_STATUS_DATA = 3,
  POLOTDR_STATUS_IO = 4,
  // Index outside a handle's range.
  POLOTDR_STATUS_OUT_OF_RANGE = 5,
  // A Rust panic was caught at the boundary.
  POLOTDR_STATUS_PANIC = 6,
} PolotdrStatus;

// Opaque fiber realization.
typedef struct PolotdrFiber PolotdrFiber;

// Opaque scenario result: named CSV tables plus the manifest.
typedef struct PolotdrResult PolotdrResult;

// Opaque resolved scenario.
typedef struct PolotdrScenario PolotdrScenario;

typedef struct PolotdrFiberSpec {
  double length_m;
  double segment_length_m;
  double alpha_db_per_km;
  uint32_t scatterers_per_segment;
  double group_index;
} PolotdrFiberSpec;

typedef struct PolotdrComplex {
  double re;
  double im;
} PolotdrComplex;

typedef struct PolotdrSegment {
  double theta_cap;
  double beta;
  double gamma;
  double attenuation;
  struct PolotdrComplex phasor;
  double z_m;
  double tau_s;
} PolotdrSegment;

// Row-major Jones matrix `[[xx, xy], [yx, yy]]`.
typedef struct PolotdrJones {
  struct PolotdrComplex xx;
  struct PolotdrComplex xy;
  struct PolotdrComplex yx;
  struct PolotdrComplex yy;
} PolotdrJones;

typedef struct PolotdrPhase {
  double value;
  // Nonzero when the operand fell below the fading floor.
  uint8_t flagged;
} PolotdrPhase;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *polotdr_version(void);

// Message of the last failed call on this thread ("" after a success).
const char *polotdr_last_error(void);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void polotdr_string_free(char *s);

// # Safety
// `out` must be valid for writes.
enum PolotdrStatus polotdr_fiber_spec_default(struct PolotdrFiberSpec *out);

// Draws a fiber realization.
//
// # Safety
// `spec` must point to a valid spec; `out` must be valid for writes.
enum PolotdrStatus polotdr_fiber_sample(const struct PolotdrFiberSpec *spec,
                                        uint64_t seed,
                                        struct PolotdrFiber **out);

// # Safety
// `fiber` must be a live handle; `out` valid for writes.
enum PolotdrStatus polotdr_fiber_len(const struct PolotdrFiber *fiber, size_t *out);

// # Safety
// `fiber` must be a live handle; `out` valid for writes.
enum PolotdrStatus polotdr_fiber_segment(const struct PolotdrFiber *fiber,
                                         size_t index,
                                         struct PolotdrSegment *out);

// # Safety
// `fiber` must be null or a handle from `polotdr_fiber_sample`, not yet freed.
void polotdr_fiber_free(struct PolotdrFiber *fiber);

// Backscatter Jones matrix of a segment under TX/RX misalignment `theta_mis`.
//
// # Safety
// `seg` must be valid for reads and `out` for writes.
enum PolotdrStatus polotdr_backscatter_matrix(const struct PolotdrSegment *seg,
                                              double theta_mis,
                                              struct PolotdrJones *out);

// `½·∠det H`, flagged when `|det H| < floor²`.
//
// # Safety
// `h` must be valid for reads and `out` for writes.
enum PolotdrStatus polotdr_phase_mimo(const struct PolotdrJones *h,
                                      double floor,
                                      struct PolotdrPhase *out);

// `∠(h_xx + h_yx)`, flagged when the sum is below `floor`.
//
// # Safety
// `out` must be valid for writes.
enum PolotdrStatus polotdr_phase_simo(struct PolotdrComplex h_xx,
                                      struct PolotdrComplex h_yx,
                                      double floor,
                                      struct PolotdrPhase *out);

// `∠h_xx`, flagged when `|h_xx|` is below `floor`.
//
// # Safety
// `out` must be valid for writes.
enum PolotdrStatus polotdr_phase_siso(struct PolotdrComplex h_xx,
                                      double floor,
                                      struct PolotdrPhase *out);

// Parses and resolves a scenario from the flat TOML key/value format.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` valid for writes.
enum PolotdrStatus polotdr_scenario_from_toml(const char *toml, struct PolotdrScenario **out);

// # Safety
// `scenario` must be a live handle.
enum PolotdrStatus polotdr_scenario_set_seed(struct PolotdrScenario *scenario, uint64_t seed);

// # Safety
// `scenario` must be null or a live handle.
void polotdr_scenario_free(struct PolotdrScenario *scenario);

// Runs the scenario. The result holds the CSV tables the CLI would write.
//
// # Safety
// `scenario` must be a live handle; `out` valid for writes.
enum PolotdrStatus polotdr_scenario_run(const struct PolotdrScenario *scenario,
                                        struct PolotdrResult **out);

// # Safety
// `result` must be a live handle; `out` valid for writes.
enum PolotdrStatus polotdr_result_table_count(const struct PolotdrResult *result, size_t *out);

// Copies table `index` out as two new strings (name and CSV text), each to
// be released with `polotdr_string_free`. Either out pointer may be null.
//
// # Safety
// `result` must be a live handle; non-null out pointers valid for writes.
enum PolotdrStatus polotdr_result_table(const struct PolotdrResult *result,
                                        size_t index,
                                        char **name_out,
                                        char **csv_out);

// Manifest of the resolved scenario as a new string.
//
// # Safety
// `result` must be a live handle; `out` valid for writes.
enum PolotdrStatus polotdr_result_manifest(const struct PolotdrResult *result, char **out);

// # Safety
// `result` must be null or a live handle.
void polotdr_result_free(struct PolotdrResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLOTDR_H */
