#ifndef DOA_OMP_H
#define DOA_OMP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum DoaStatus {
  DOA_STATUS_OK = 0,
  DOA_STATUS_NULL_POINTER = 1,
  DOA_STATUS_DOMAIN = 2,
  DOA_STATUS_DIMENSION = 3,
  DOA_STATUS_IDENTIFIABILITY = 4,
  DOA_STATUS_INFEASIBLE = 5,
  DOA_STATUS_NUMERICAL = 6,
  DOA_STATUS_INVARIANT = 7,
  DOA_STATUS_BUFFER_TOO_SMALL = 8,
  DOA_STATUS_PANIC = 9,
  DOA_STATUS_OTHER = 10,
} DoaStatus;

// Angle grid and its steering dictionary (identity measurement).
typedef struct DoaDictionary DoaDictionary;

// Output of one OMP recovery.
typedef struct DoaOmpResult DoaOmpResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or "" after a success.
//
// The pointer stays valid until the next call into this library on the
// same thread.
const char *doa_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *doa_version(void);

// Build a dictionary over the uniform grid `start_deg..=stop_deg`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum DoaStatus doa_dictionary_new(size_t n_sensors,
                                  double spacing,
                                  double start_deg,
                                  double stop_deg,
                                  double step_deg,
                                  struct DoaDictionary **out);

// Release a dictionary. Null is ignored.
//
// # Safety
// `dict` must come from [`doa_dictionary_new`] and not be used afterwards.
void doa_dictionary_free(struct DoaDictionary *dict);

// Number of sensors (rows); 0 for a null handle.
//
// # Safety
// `dict` must be null or a live handle.
size_t doa_dictionary_sensors(const struct DoaDictionary *dict);

// Number of grid angles (atoms); 0 for a null handle.
//
// # Safety
// `dict` must be null or a live handle.
size_t doa_dictionary_atoms(const struct DoaDictionary *dict);

// Copy the grid angles in degrees.
//
// # Safety
// `dict` must be a live handle and `out` must hold `cap` doubles.
enum DoaStatus doa_dictionary_angles(const struct DoaDictionary *dict, double *out, size_t cap);

// Steering vector of an `n_sensors` array at `theta_deg`.
//
// # Safety
// `out_re` and `out_im` must each hold `cap` doubles.
enum DoaStatus doa_steering_vector(size_t n_sensors,
                                   double spacing,
                                   double theta_deg,
                                   double *out_re,
                                   double *out_im,
                                   size_t cap);

// Largest source count uniquely identifiable from data of rank `rank_x`.
//
// # Safety
// `out` must point to writable storage for one `size_t`.
enum DoaStatus doa_max_identifiable_sources(size_t n_sensors, size_t rank_x, size_t *out);

// Run OMP on one snapshot `y` of length `len` (must equal the sensor count).
//
// # Safety
// `dict` must be a live handle, `y_re`/`y_im` must hold `len` doubles and
// `out` must point to writable storage for one handle.
enum DoaStatus doa_omp_recover(const struct DoaDictionary *dict,
                               const double *y_re,
                               const double *y_im,
                               size_t len,
                               size_t sparsity,
                               double tolerance,
                               struct DoaOmpResult **out);

// Release a recovery result. Null is ignored.
//
// # Safety
// `res` must come from [`doa_omp_recover`] and not be used afterwards.
void doa_omp_result_free(struct DoaOmpResult *res);

// Number of selected atoms; 0 for a null handle.
//
// # Safety
// `res` must be null or a live handle.
size_t doa_omp_result_support_len(const struct DoaOmpResult *res);

// Iterations performed; 0 for a null handle.
//
// # Safety
// `res` must be null or a live handle.
size_t doa_omp_result_iterations(const struct DoaOmpResult *res);

// Copy the support (grid indices, selection order).
//
// # Safety
// `res` must be a live handle and `out` must hold `cap` elements.
enum DoaStatus doa_omp_result_support(const struct DoaOmpResult *res, size_t *out, size_t cap);

// Copy the coefficients aligned with the support.
//
// # Safety
// `res` must be a live handle; `out_re`/`out_im` must each hold `cap` doubles.
enum DoaStatus doa_omp_result_coefficients(const struct DoaOmpResult *res,
                                           double *out_re,
                                           double *out_im,
                                           size_t cap);

// Copy the residual norms, starting with the norm of the measurement.
// The count is `iterations + 1`.
//
// # Safety
// `res` must be a live handle and `out` must hold `cap` doubles.
enum DoaStatus doa_omp_result_residual_norms(const struct DoaOmpResult *res,
                                             double *out,
                                             size_t cap);

// The `m_sources` strongest angles of the recovery, ascending, in degrees.
//
// Writes the number found to `out_count` (fewer than `m_sources` when the
// support is smaller; `out_shortfall` is then set to 1).
//
// # Safety
// Handles must be live, `out_angles` must hold `cap` doubles and the two
// scalar outputs must be writable.
enum DoaStatus doa_omp_result_estimate_doas(const struct DoaOmpResult *res,
                                            const struct DoaDictionary *dict,
                                            size_t m_sources,
                                            double *out_angles,
                                            size_t cap,
                                            size_t *out_count,
                                            int32_t *out_shortfall);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOA_OMP_H */
