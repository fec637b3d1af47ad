#ifndef KLOOSTPATH_H
#define KLOOSTPATH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Return codes. `KP_STATUS_OK` is zero.
typedef enum KpStatus {
  KP_STATUS_OK = 0,
  KP_STATUS_NULL_POINTER = 1,
  KP_STATUS_INVALID_MODULUS = 2,
  KP_STATUS_NOT_A_UNIT = 3,
  KP_STATUS_NOT_A_SQUARE = 4,
  KP_STATUS_UNSUPPORTED_DEPTH = 5,
  KP_STATUS_INVALID_ARGUMENT = 6,
  KP_STATUS_BUFFER_TOO_SMALL = 7,
  KP_STATUS_IO = 8,
  KP_STATUS_PANIC = 9,
} KpStatus;

typedef enum KpVariant {
  KP_VARIANT_STANDARD = 0,
  KP_VARIANT_RENORMALIZED = 1,
  KP_VARIANT_REARRANGED = 2,
} KpVariant;

typedef enum KpFormat {
  KP_FORMAT_CSV = 0,
  KP_FORMAT_JSON = 1,
  KP_FORMAT_SVG = 2,
} KpFormat;

// A modulus `p^n` together with the default square-root branch.
typedef struct KpModulus KpModulus;

// A Kloosterman path (vertex list).
typedef struct KpPath KpPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code. Never null.
const char *kp_status_message(enum KpStatus status);

// Message of the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *kp_last_error(void);

// Library version, e.g. `"0.1.0"`.
const char *kp_version(void);

// Create the modulus `p^n` (`p` an odd prime, `p^n < 2^63`).
//
// # Safety
// `out_modulus` must be a valid pointer to writable storage for a handle.
enum KpStatus kp_modulus_new(uint64_t p, uint32_t n, struct KpModulus **out_modulus);

// Release a modulus. Null is ignored.
//
// # Safety
// `modulus` must come from `kp_modulus_new` and not be used afterwards.
void kp_modulus_free(struct KpModulus *modulus);

// `p^n`.
//
// # Safety
// Pointers must be valid.
enum KpStatus kp_modulus_value(const struct KpModulus *modulus, uint64_t *out_q);

// Normalized sum `Kl_{p^n}(a, b)` by direct summation (real and imaginary part).
//
// # Safety
// Pointers must be valid.
enum KpStatus kp_kloosterman_naive(const struct KpModulus *modulus,
                                   uint64_t a,
                                   uint64_t b,
                                   double *out_re,
                                   double *out_im);

// Normalized sum `Kl_{p^n}(a, b)` in closed form; requires `n >= 2`.
//
// # Safety
// Pointers must be valid.
enum KpStatus kp_kloosterman_closed(const struct KpModulus *modulus,
                                    uint64_t a,
                                    uint64_t b,
                                    double *out_value);

// Build a path of the given variant for units `a`, `b`.
//
// # Safety
// Pointers must be valid.
enum KpStatus kp_path_new(const struct KpModulus *modulus,
                          uint64_t a,
                          uint64_t b,
                          enum KpVariant variant,
                          struct KpPath **out_path);

// Release a path. Null is ignored.
//
// # Safety
// `path` must come from `kp_path_new` and not be used afterwards.
void kp_path_free(struct KpPath *path);

// Number of vertices.
//
// # Safety
// Pointers must be valid.
enum KpStatus kp_path_len(const struct KpPath *path, size_t *out_len);

// Copy the vertices as interleaved `re, im` pairs into `buf`, which holds
// `capacity` pairs. `out_written` receives the vertex count; when it exceeds
// `capacity` nothing is copied and `KP_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `buf` must point to `2 * capacity` writable doubles (may be null when
// `capacity` is 0).
enum KpStatus kp_path_vertices(const struct KpPath *path,
                               double *buf,
                               size_t capacity,
                               size_t *out_written);

// Point of the path at `t ∈ [0, 1]`.
//
// # Safety
// Pointers must be valid.
enum KpStatus kp_path_eval(const struct KpPath *path, double t, double *out_re, double *out_im);

// Write the path to a file as CSV, JSON or SVG.
//
// # Safety
// `filename` must be a NUL-terminated UTF-8 string.
enum KpStatus kp_path_write(const struct KpPath *path, enum KpFormat format, const char *filename);

// Variant of a path.
//
// # Safety
// Pointers must be valid.
enum KpStatus kp_path_variant(const struct KpPath *path, enum KpVariant *out_variant);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KLOOSTPATH_H */
