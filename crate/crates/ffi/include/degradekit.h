#ifndef DEGRADEKIT_H
#define DEGRADEKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  DK_STATUS_OK = 0,
  DK_STATUS_NULL_POINTER = 1,
  DK_STATUS_INVALID_ARGUMENT = 2,
  DK_STATUS_IO = 3,
  DK_STATUS_FORMAT = 4,
  DK_STATUS_PARAM = 5,
  DK_STATUS_SHAPE = 6,
  DK_STATUS_UNSUPPORTED = 7,
  DK_STATUS_LOOKUP = 8,
  DK_STATUS_UNDEFINED = 9,
  DK_STATUS_BACKEND = 10,
  DK_STATUS_PANIC = 11,
} DkStatus;

/**
 * Opaque image handle.
 */
typedef struct DkImage DkImage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the next
 * call into this library from the same thread.
 */
const char *dk_last_error(void);

/**
 * Number of degradation tasks.
 */
uint32_t dk_task_count(void);

/**
 * Static snake_case name of task `index`, or NULL when out of range.
 */
const char *dk_task_name(uint32_t index);

/**
 * Creates an image from `width * height * channels` interleaved floats.
 *
 * # Safety
 * `data` must point to `len` readable floats; `out` must be writable.
 */
DkStatus dk_image_new(uintptr_t width,
                      uintptr_t height,
                      uintptr_t channels,
                      const float *data,
                      uintptr_t len,
                      DkImage **out);

/**
 * Loads a PNG or JPEG file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
DkStatus dk_image_load(const char *path, DkImage **out);

/**
 * Writes an 8-bit PNG.
 *
 * # Safety
 * `img` must be a live handle and `path` a NUL-terminated string.
 */
DkStatus dk_image_save_png(const DkImage *img, const char *path);

/**
 * Writes width, height and channel count. Any output pointer may be NULL.
 *
 * # Safety
 * `img` must be a live handle; non-null outputs must be writable.
 */
DkStatus dk_image_shape(const DkImage *img,
                        uintptr_t *width,
                        uintptr_t *height,
                        uintptr_t *channels);

/**
 * Copies pixels into `buf`, which must hold exactly the image's sample count.
 *
 * # Safety
 * `img` must be a live handle and `buf` must point to `len` writable floats.
 */
DkStatus dk_image_copy_data(const DkImage *img, float *buf, uintptr_t len);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `img` must be NULL or a handle from this library not yet freed.
 */
void dk_image_free(DkImage *img);

/**
 * Degrades `img` with task `task` at `severity` in [0, 1]. `depth` may be
 * NULL except for haze; its first channel is read as normalized depth.
 * Parameters and noise are drawn from `seed` exactly as `synth` does for a
 * given seed node.
 *
 * # Safety
 * `img` must be a live handle, `depth` NULL or a live handle, `out` writable.
 */
DkStatus dk_degrade(const DkImage *img,
                    const DkImage *depth,
                    uint32_t task,
                    double severity,
                    uint64_t seed,
                    DkImage **out);

/**
 * Pixel-heuristic degradation score on the 1 to 5 scale.
 *
 * # Safety
 * `img` must be a live handle and `out` writable.
 */
DkStatus dk_degradation_score(const DkImage *img, uint32_t task, double *out);

/**
 * Multi-scale structural distance in [0, 1].
 *
 * # Safety
 * `a` and `b` must be live handles and `out` writable.
 */
DkStatus dk_distance(const DkImage *a, const DkImage *b, double *out);

/**
 * Final score from a perceptual distance in [0, 1] and a restoration score.
 *
 * # Safety
 * `out` must be writable.
 */
DkStatus dk_final_score(double lps, double rs, double *out);

/**
 * Spearman rank correlation of two length-`n` series.
 *
 * # Safety
 * `x` and `y` must point to `n` readable doubles and `out` must be writable.
 */
DkStatus dk_spearman(const double *x, const double *y, uintptr_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEGRADEKIT_H */
