#ifndef GAUSSNL_H
#define GAUSSNL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of doubles in a settings array.
 */
#define GNL_SETTINGS_LEN 12

typedef enum {
  GNL_STATUS_OK = 0,
  GNL_STATUS_NULL_POINTER = 1,
  GNL_STATUS_TRIANGLE_VIOLATION = 2,
  GNL_STATUS_DOMAIN = 3,
  GNL_STATUS_NUMERICAL_DOMAIN = 4,
  GNL_STATUS_DIMENSION_MISMATCH = 5,
  GNL_STATUS_INVALID_COVARIANCE = 6,
  GNL_STATUS_PARSE = 7,
  GNL_STATUS_CONSISTENCY = 8,
  GNL_STATUS_IO = 9,
  GNL_STATUS_BUFFER_TOO_SMALL = 10,
  GNL_STATUS_INVALID_UTF8 = 11,
  GNL_STATUS_PANIC = 12,
} GnlStatus;

/**
 * Bell expression handle.
 */
typedef struct GnlBellExpression GnlBellExpression;

/**
 * Covariance matrix handle.
 */
typedef struct GnlCovariance GnlCovariance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *gnl_last_error_message(void);

/**
 * Library version, static string.
 */
const char *gnl_version(void);

/**
 * Pure three-mode state in standard form with local invariants `a1, a2, a3`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
GnlStatus gnl_cm_pure(double a1, double a2, double a3, GnlCovariance **out);

/**
 * Fully symmetric pure state.
 *
 * # Safety
 * As [`gnl_cm_pure`].
 */
GnlStatus gnl_cm_symmetric(double a, GnlCovariance **out);

/**
 * Symmetric state rescaled to purity `mu`.
 *
 * # Safety
 * As [`gnl_cm_pure`].
 */
GnlStatus gnl_cm_symmetric_mixed(double a, double mu, GnlCovariance **out);

/**
 * Validated covariance matrix from `(2 modes)²` row-major entries.
 *
 * # Safety
 * `entries` must point to `len` readable doubles; `out` as in [`gnl_cm_pure`].
 */
GnlStatus gnl_cm_from_row_major(size_t modes,
                                const double *entries,
                                size_t len,
                                GnlCovariance **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `cm` must come from a `gnl_cm_*` constructor and not be used afterwards.
 */
void gnl_cm_free(GnlCovariance *cm);

/**
 * Number of modes, 0 for a null handle.
 *
 * # Safety
 * `cm` must be null or a live handle.
 */
size_t gnl_cm_modes(const GnlCovariance *cm);

/**
 * Writes the `(2n)²` entries row-major into `buf`; `written` receives the
 * required length even when `cap` is too small.
 *
 * # Safety
 * `buf` must hold `cap` doubles; `written` must be writable.
 */
GnlStatus gnl_cm_entries(const GnlCovariance *cm, double *buf, size_t cap, size_t *written);

/**
 * `(det σ)^(-1/2)`.
 *
 * # Safety
 * `cm` a live handle, `out` writable.
 */
GnlStatus gnl_cm_purity(const GnlCovariance *cm, double *out);

/**
 * Symplectic eigenvalues in descending order.
 *
 * # Safety
 * As [`gnl_cm_entries`].
 */
GnlStatus gnl_cm_symplectic_eigenvalues(const GnlCovariance *cm,
                                        double *buf,
                                        size_t cap,
                                        size_t *written);

/**
 * `½ ln det σ`.
 *
 * # Safety
 * `cm` a live handle, `out` writable.
 */
GnlStatus gnl_renyi2_entropy(const GnlCovariance *cm, double *out);

/**
 * Residual Rényi-2 tripartite entanglement of a pure state.
 *
 * # Safety
 * `out` writable.
 */
GnlStatus gnl_tripartite_renyi2_pure(double a1, double a2, double a3, double *out);

/**
 * Closed-form maximum of `|S|` for the symmetric pure state.
 *
 * # Safety
 * `out` writable.
 */
GnlStatus gnl_symmetric_max_analytic(double a, double *out);

/**
 * Signed Svetlichny functional at `settings` (twelve doubles).
 *
 * # Safety
 * `cm` a live three-mode handle, `settings` twelve readable doubles, `out`
 * writable.
 */
GnlStatus gnl_svetlichny_value(const GnlCovariance *cm, const double *settings, double *out);

/**
 * Maximum of `|S|` over momentum-antisymmetric settings with default
 * optimizer options and `seed`. `settings_out` (twelve doubles) may be null.
 *
 * # Safety
 * `cm` a live handle, `value` writable, `settings_out` null or twelve
 * writable doubles.
 */
GnlStatus gnl_maximize_restricted(const GnlCovariance *cm,
                                  uint64_t seed,
                                  double *value,
                                  double *settings_out);

/**
 * Maximum of `|S|` over all twelve setting coordinates.
 *
 * # Safety
 * As [`gnl_maximize_restricted`].
 */
GnlStatus gnl_maximize_full(const GnlCovariance *cm,
                            uint64_t seed,
                            double *value,
                            double *settings_out);

/**
 * Parses an expression in the text format (NUL-terminated UTF-8).
 *
 * # Safety
 * `text` a valid C string, `out` writable.
 */
GnlStatus gnl_bell_parse(const char *text, GnlBellExpression **out);

/**
 * The built-in Svetlichny expression.
 *
 * # Safety
 * `out` writable.
 */
GnlStatus gnl_bell_svetlichny(GnlBellExpression **out);

/**
 * Releases an expression; null is ignored.
 *
 * # Safety
 * `e` must come from `gnl_bell_parse` or `gnl_bell_svetlichny` and not be
 * used afterwards.
 */
void gnl_bell_free(GnlBellExpression *e);

/**
 * Local bound of the expression.
 *
 * # Safety
 * `e` a live handle, `out` writable.
 */
GnlStatus gnl_bell_bound(const GnlBellExpression *e, double *out);

/**
 * Value of the expression at `settings`.
 *
 * # Safety
 * Live handles, `settings` twelve readable doubles, `out` writable.
 */
GnlStatus gnl_bell_evaluate(const GnlBellExpression *e,
                            const GnlCovariance *cm,
                            const double *settings,
                            double *out);

/**
 * Maximum of `|value|` over the twelve setting coordinates.
 *
 * # Safety
 * As [`gnl_maximize_restricted`], plus a live expression handle.
 */
GnlStatus gnl_bell_maximize(const GnlBellExpression *e,
                            const GnlCovariance *cm,
                            uint64_t seed,
                            double *value,
                            double *settings_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUSSNL_H */
