#ifndef WAVROM_H
#define WAVROM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WavromStatus {
  WAVROM_STATUS_OK = 0,
  WAVROM_STATUS_NULL_POINTER = 1,
  WAVROM_STATUS_INVALID_ARGUMENT = 2,
  WAVROM_STATUS_CONFIG_ERROR = 3,
  WAVROM_STATUS_IO_ERROR = 4,
  WAVROM_STATUS_ARCHIVE_ERROR = 5,
  WAVROM_STATUS_NUMERICAL_ERROR = 6,
  WAVROM_STATUS_PANIC = 7,
} WavromStatus;

/*
 A trained surrogate: full-order model, POD basis and the network for the
 largest configured basis size.
 */
typedef struct WavromSurrogate WavromSurrogate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread, or null. The string
 stays valid until the next wavrom call on the same thread.
 */
const char *wavrom_last_error_message(void);

/*
 Runs the offline pipeline for the JSON config at `config_path`, reusing
 any current artifacts in its output directory.

 # Safety
 `config_path` must be null or a NUL-terminated string.
 */
enum WavromStatus wavrom_run_pipeline(const char *config_path);

/*
 Opens a surrogate for the config at `config_path`. Missing or stale
 artifacts are computed first, which may take as long as a pipeline run.

 # Safety
 `config_path` must be null or a NUL-terminated string and `out` must be
 null or valid for a pointer write.
 */
enum WavromStatus wavrom_surrogate_open(const char *config_path, struct WavromSurrogate **out);

/*
 Releases a handle from [`wavrom_surrogate_open`]. Null is ignored.

 # Safety
 `handle` must be null or a live handle that is not used afterwards.
 */
void wavrom_surrogate_free(struct WavromSurrogate *handle);

/*
 Number of complex degrees of freedom of the full-order model.

 # Safety
 `handle` must be null or live; `out` must be null or writable.
 */
enum WavromStatus wavrom_surrogate_num_dofs(const struct WavromSurrogate *handle, size_t *out);

/*
 Number of parameters a query takes.

 # Safety
 `handle` must be null or live; `out` must be null or writable.
 */
enum WavromStatus wavrom_surrogate_param_dim(const struct WavromSurrogate *handle, size_t *out);

/*
 Size of the reduced basis used by the reduced solvers.

 # Safety
 `handle` must be null or live; `out` must be null or writable.
 */
enum WavromStatus wavrom_surrogate_num_modes(const struct WavromSurrogate *handle, size_t *out);

/*
 Network prediction at `y`, lifted to the full space.

 # Safety
 `handle` must be null or live, `y` must hold `y_len` doubles and `out`
 must hold `out_len` doubles.
 */
enum WavromStatus wavrom_surrogate_predict(const struct WavromSurrogate *handle,
                                           const double *y,
                                           size_t y_len,
                                           double *out,
                                           size_t out_len);

/*
 Galerkin reduced solution at `y`, lifted to the full space.

 # Safety
 As for [`wavrom_surrogate_predict`].
 */
enum WavromStatus wavrom_surrogate_gpod(const struct WavromSurrogate *handle,
                                        const double *y,
                                        size_t y_len,
                                        double *out,
                                        size_t out_len);

/*
 Full-order solution at `y`.

 # Safety
 As for [`wavrom_surrogate_predict`].
 */
enum WavromStatus wavrom_surrogate_solve_hf(const struct WavromSurrogate *handle,
                                            const double *y,
                                            size_t y_len,
                                            double *out,
                                            size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAVROM_H */
