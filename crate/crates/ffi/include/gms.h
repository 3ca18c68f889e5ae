#ifndef GMS_H
#define GMS_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum GmsStatus {
  GMS_STATUS_OK = 0,
  GMS_STATUS_NULL_POINTER = 1,
  GMS_STATUS_INVALID_UTF8 = 2,
  // Malformed JSON or a document of the wrong shape.
  GMS_STATUS_PARSE = 3,
  // Input violates a documented precondition (e.g. unnormalized law).
  GMS_STATUS_PRECONDITION = 4,
  // Structural validation failed (bad segments, partitions, bounds).
  GMS_STATUS_INVALID = 5,
  GMS_STATUS_NUMERIC = 6,
  // The operation is not defined for sampled maps.
  GMS_STATUS_UNSUPPORTED = 7,
  GMS_STATUS_IO = 8,
  // A Rust panic was caught at the boundary.
  GMS_STATUS_PANIC = 9,
} GmsStatus;

// Canonical double-coset label `(ν₁, ν₂, …; ν∞)`.
typedef struct GmsLabel GmsLabel;

// A measure-class-preserving piecewise map of `[0, 1]`.
typedef struct GmsMap GmsMap;

// A finite positive measure on `(0, ∞)`.
typedef struct GmsMeasure GmsMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL if none failed.
// The pointer stays valid until the next failing call on the same thread.
const char *gms_last_error_message(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void gms_string_free(char *s);

// Parses a measure from its JSON form.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum GmsStatus gms_measure_from_json(const char *json, struct GmsMeasure **out);

// # Safety
// `m` must be a live handle; `out` must be writable.
enum GmsStatus gms_measure_to_json(const struct GmsMeasure *m, char **out);

// # Safety
// `m` must be NULL or a handle that has not been freed.
void gms_measure_free(struct GmsMeasure *m);

// Total mass `ν(0, ∞)`.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum GmsStatus gms_measure_mass(const struct GmsMeasure *m, double *out);

// First moment `∫ t dν`.
//
// # Safety
// `m` must be a live handle; `out` must be writable.
enum GmsStatus gms_measure_moment(const struct GmsMeasure *m, double *out);

// `χ(z) = ∫ t^z dν(t)` at `z = re + i·im`, with `0 <= re <= 1`.
//
// # Safety
// `m` must be a live handle; both out pointers must be writable.
enum GmsStatus gms_measure_char_fn(const struct GmsMeasure *m,
                                   double re,
                                   double im,
                                   double *out_re,
                                   double *out_im);

// Largest `|χ_a − χ_b|` over the default strip grid.
//
// # Safety
// `a`, `b` must be live handles; `out` must be writable.
enum GmsStatus gms_measure_distance(const struct GmsMeasure *a,
                                    const struct GmsMeasure *b,
                                    double *out);

// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum GmsStatus gms_map_from_json(const char *json, struct GmsMap **out);

// # Safety
// `g` must be a live handle; `out` must be writable.
enum GmsStatus gms_map_to_json(const struct GmsMap *g, char **out);

// # Safety
// `out` must be writable.
enum GmsStatus gms_map_identity(struct GmsMap **out);

// # Safety
// `g` must be NULL or a handle that has not been freed.
void gms_map_free(struct GmsMap *g);

// # Safety
// `g` must be a live handle; `out` must be writable.
enum GmsStatus gms_map_evaluate(const struct GmsMap *g, double x, double *out);

// The convex map whose derivative has law `nu` (a probability measure
// with unit first moment).
//
// # Safety
// `nu` must be a live handle; `out` must be writable.
enum GmsStatus gms_map_convex_section(const struct GmsMeasure *nu, struct GmsMap **out);

// Law of the derivative `g'` under Lebesgue measure.
//
// # Safety
// `g` must be a live handle; `out` must be writable.
enum GmsStatus gms_map_derivative_law(const struct GmsMap *g, struct GmsMeasure **out);

// `g ∘ h`, applying `h` first.
//
// # Safety
// `g`, `h` must be live handles; `out` must be writable.
enum GmsStatus gms_map_compose(const struct GmsMap *g, const struct GmsMap *h, struct GmsMap **out);

// # Safety
// `g` must be a live handle; `out` must be writable.
enum GmsStatus gms_map_invert(const struct GmsMap *g, struct GmsMap **out);

// Truncated inverse-limit distance with dyadic levels `1..=depth` and the
// default strip grid.
//
// # Safety
// `g`, `h` must be live handles; `out` must be writable.
enum GmsStatus gms_distance(const struct GmsMap *g,
                            const struct GmsMap *h,
                            uint32_t depth,
                            double *out);

// # Safety
// `g` must be a live handle; `out` must be writable.
enum GmsStatus gms_canonical_form(const struct GmsMap *g, struct GmsLabel **out);

// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum GmsStatus gms_label_from_json(const char *json, struct GmsLabel **out);

// # Safety
// `l` must be a live handle; `out` must be writable.
enum GmsStatus gms_label_to_json(const struct GmsLabel *l, char **out);

// Number of finite parts `ν₁, ν₂, …` of the label.
//
// # Safety
// `l` must be a live handle; `out` must be writable.
enum GmsStatus gms_label_line_count(const struct GmsLabel *l, uintptr_t *out);

// # Safety
// `l` must be NULL or a handle that has not been freed.
void gms_label_free(struct GmsLabel *l);

// Whether `g` and `h` lie in the same double coset.
//
// # Safety
// `g`, `h` must be live handles; `out` must be writable.
enum GmsStatus gms_same_double_coset(const struct GmsMap *g, const struct GmsMap *h, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GMS_H */
