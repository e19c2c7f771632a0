#ifndef JULIA_CYCLES_H
#define JULIA_CYCLES_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JcChart {
  /**
   * `value = f(z)`.
   */
  JC_CHART_IDENTITY = 0,
  /**
   * `value = 1/f(z)`.
   */
  JC_CHART_RECIPROCAL = 1,
} JcChart;

typedef enum JcCycleClass {
  JC_CYCLE_CLASS_REPELLING = 0,
  JC_CYCLE_CLASS_ATTRACTING = 1,
  JC_CYCLE_CLASS_INDIFFERENT = 2,
} JcCycleClass;

typedef enum JcPixelFlag {
  JC_PIXEL_FLAG_JULIA = 0,
  JC_PIXEL_FLAG_FATOU = 1,
  JC_PIXEL_FLAG_POLE_ORBIT = 2,
} JcPixelFlag;

typedef enum JcStatus {
  JC_STATUS_OK = 0,
  JC_STATUS_NULL_POINTER = 1,
  JC_STATUS_INVALID_UTF8 = 2,
  JC_STATUS_PARSE_ERROR = 3,
  JC_STATUS_EVAL_ERROR = 4,
  JC_STATUS_INVALID_ARGUMENT = 5,
  JC_STATUS_OUT_OF_RANGE = 6,
  JC_STATUS_BUFFER_TOO_SMALL = 7,
  JC_STATUS_PANIC = 8,
} JcStatus;

/**
 * Cycles in increasing period.
 */
typedef struct JcCycleList JcCycleList;

/**
 * Parsed expression.
 */
typedef struct JcExpr JcExpr;

/**
 * Julia raster.
 */
typedef struct JcRaster JcRaster;

typedef struct JcComplex {
  double re;
  double im;
} JcComplex;

/**
 * Value and derivative of a function at `base`, in the given chart.
 */
typedef struct JcJet {
  enum JcChart chart;
  struct JcComplex value;
  struct JcComplex deriv;
  struct JcComplex base;
} JcJet;

/**
 * A point of the Riemann sphere; `value` is ignored when `is_infinite`.
 */
typedef struct JcSpherePoint {
  bool is_infinite;
  struct JcComplex value;
} JcSpherePoint;

/**
 * Summary of one cycle; the orbit itself is read with
 * [`jc_cycle_list_points`].
 */
typedef struct JcCycleInfo {
  size_t period;
  struct JcComplex representative;
  struct JcComplex multiplier;
  enum JcCycleClass kind;
  double residual;
} JcCycleInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *jc_version(void);

/**
 * Message of the last failed call on this thread, or an empty string.
 * Valid until the next call into the library on this thread.
 */
const char *jc_last_error(void);

enum JcStatus jc_expr_parse(const char *text, struct JcExpr **out);

void jc_expr_free(struct JcExpr *expr);

/**
 * Canonical, fully parenthesised text of `expr`. Free the result with
 * [`jc_string_free`].
 */
enum JcStatus jc_expr_to_string(const struct JcExpr *expr, char **out);

void jc_string_free(char *s);

enum JcStatus jc_eval_jet(const struct JcExpr *expr, struct JcComplex z, struct JcJet *out);

/**
 * Jet of the `n`-th iterate; `deriv` is the chain-rule derivative `(f^n)'(z)`.
 */
enum JcStatus jc_iterate_jet(const struct JcExpr *expr, struct JcComplex z, size_t n, struct JcJet *out);

/**
 * Chordal distance on the sphere of diameter 2.
 */
double jc_chordal_distance(struct JcSpherePoint a, struct JcSpherePoint b);

/**
 * `|f'(z)| (1 + |z|^2) / (1 + |f(z)|^2)`; NaN for a null jet.
 */
double jc_spherical_derivative(const struct JcJet *jet);

/**
 * `|f'(z)| / (1 + |f(z)|^2)`; NaN for a null jet.
 */
double jc_marty_derivative(const struct JcJet *jet);

/**
 * Classifies every pixel of an `nx × ny` grid of the given size around
 * `center` by growth of the iterates' spherical derivative.
 */
enum JcStatus jc_raster_new(const struct JcExpr *expr, struct JcComplex center, double width, double height, size_t nx, size_t ny, size_t nmax, double growth_threshold, struct JcRaster **out);

void jc_raster_free(struct JcRaster *raster);

enum JcStatus jc_raster_size(const struct JcRaster *raster, size_t *nx, size_t *ny);

/**
 * Flag of pixel `(i, j)`; row `j = 0` is the top edge.
 */
enum JcStatus jc_raster_flag(const struct JcRaster *raster, size_t i, size_t j, enum JcPixelFlag *out);

/**
 * Sample point of pixel `(i, j)`.
 */
enum JcStatus jc_raster_point(const struct JcRaster *raster, size_t i, size_t j, struct JcComplex *out);

/**
 * Counts of Julia, Fatou and pole-orbit pixels.
 */
enum JcStatus jc_raster_counts(const struct JcRaster *raster, size_t *julia, size_t *fatou, size_t *pole_orbit);

/**
 * Cycles of period dividing `period` from an `nre × nim` Newton seed
 * lattice on the rectangle, with default tolerances.
 */
enum JcStatus jc_find_cycles(const struct JcExpr *expr, size_t period, double re_min, double re_max, double im_min, double im_max, size_t nre, size_t nim, struct JcCycleList **out);

void jc_cycle_list_free(struct JcCycleList *list);

/**
 * Number of cycles; 0 for a null list.
 */
size_t jc_cycle_list_len(const struct JcCycleList *list);

enum JcStatus jc_cycle_list_get(const struct JcCycleList *list, size_t index, struct JcCycleInfo *out);

/**
 * Copies the orbit of cycle `index` into `buf`. `written` receives the
 * orbit length; `JC_STATUS_BUFFER_TOO_SMALL` if `cap` is less than that.
 */
enum JcStatus jc_cycle_list_points(const struct JcCycleList *list, size_t index, struct JcComplex *buf, size_t cap, size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JULIA_CYCLES_H */
