/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef VSCREEN_H
#define VSCREEN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum VsStatus {
  VS_STATUS_OK = 0,
  VS_STATUS_NULL_ARGUMENT = 1,
  VS_STATUS_INVALID_UTF8 = 2,
  VS_STATUS_PARSE_ERROR = 3,
  VS_STATUS_CONFIG_ERROR = 4,
  VS_STATUS_DATA_ERROR = 5,
  VS_STATUS_RUNTIME_ERROR = 6,
  VS_STATUS_PANIC = 7,
} VsStatus;

typedef enum VsDirection {
  // Lower scores are better.
  VS_DIRECTION_MINIMIZE = 0,
  VS_DIRECTION_MAXIMIZE = 1,
} VsDirection;

// A fixed-width fingerprint bit vector.
typedef struct VsFingerprint VsFingerprint;

// A parsed and loaded scored library.
typedef struct VsLibrary VsLibrary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next call into the library from this thread.
const char *vs_last_error(void);

// Library version as a static string.
const char *vs_version(void);

// Release a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void vs_string_free(char *s);

// Morgan fingerprint of a SMILES string.
//
// # Safety
// `smiles` must be a nul-terminated string and `out` a writable pointer.
enum VsStatus vs_morgan_fingerprint(const char *smiles,
                                    uint32_t radius,
                                    size_t width,
                                    struct VsFingerprint **out);

// Atom-pair fingerprint over topological distances `min_distance..=max_distance`.
//
// # Safety
// `smiles` must be a nul-terminated string and `out` a writable pointer.
enum VsStatus vs_atom_pair_fingerprint(const char *smiles,
                                       uint32_t min_distance,
                                       uint32_t max_distance,
                                       size_t width,
                                       struct VsFingerprint **out);

// Number of set bits; 0 for null.
//
// # Safety
// `fp` must be null or a live fingerprint handle.
size_t vs_fingerprint_popcount(const struct VsFingerprint *fp);

// Width in bits; 0 for null.
//
// # Safety
// `fp` must be null or a live fingerprint handle.
size_t vs_fingerprint_width(const struct VsFingerprint *fp);

// Lowercase hex encoding, bit 0 in the low bit of the first byte.
//
// # Safety
// `fp` must be a live fingerprint handle and `out` a writable pointer.
enum VsStatus vs_fingerprint_hex(const struct VsFingerprint *fp, char **out);

// Dice similarity `2|A∩B| / (|A|+|B|)` of two fingerprints of the same kind and width.
//
// # Safety
// `a` and `b` must be live fingerprint handles and `out` a writable pointer.
enum VsStatus vs_dice(const struct VsFingerprint *a, const struct VsFingerprint *b, double *out);

// # Safety
// `fp` must be null or a live fingerprint handle.
void vs_fingerprint_free(struct VsFingerprint *fp);

// Load a delimited scored library. Null column names mean `smiles` / `score`.
//
// # Safety
// String arguments must be null or nul-terminated; `out` must be writable.
enum VsStatus vs_library_load(const char *path,
                              const char *smiles_column,
                              const char *score_column,
                              enum VsDirection direction,
                              struct VsLibrary **out);

// Number of records; 0 for null.
//
// # Safety
// `lib` must be null or a live library handle.
size_t vs_library_len(const struct VsLibrary *lib);

// Write the indices of the `k` best records, best first, into `out[0..k]`.
//
// # Safety
// `lib` must be a live handle and `out` must have room for `k` values.
enum VsStatus vs_library_topk(const struct VsLibrary *lib, size_t k, size_t *out);

// # Safety
// `lib` must be null or a live library handle.
void vs_library_free(struct VsLibrary *lib);

// Run one campaign over `lib`. `config_toml` uses the run-file layout
// (`[features]`, `[surrogate]`, `[acquisition]`, `[campaign]`); the
// `[library]` and `[output]` tables are ignored and only the first seed is
// run. The trace JSON is written to `out_trace_json`.
//
// # Safety
// `lib` must be a live handle, `config_toml` null or nul-terminated, and
// `out_trace_json` writable.
enum VsStatus vs_run_campaign(const struct VsLibrary *lib,
                              const char *config_toml,
                              char **out_trace_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VSCREEN_H */
