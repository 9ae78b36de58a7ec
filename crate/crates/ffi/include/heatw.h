#ifndef HEATW_H
#define HEATW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum HwStatus {
  HwStatus_Ok = 0,
  HwStatus_NullPointer = 1,
  HwStatus_InvalidArgument = 2,
  HwStatus_InvalidMeasure = 3,
  HwStatus_IncompatibleData = 4,
  HwStatus_SingularSystem = 5,
  HwStatus_NumericalBreakdown = 6,
  HwStatus_TailBoundExceeded = 7,
  HwStatus_RuntimeError = 8,
  HwStatus_Panic = 9,
} HwStatus;

/**
 * Opaque measure handle.
 */
typedef struct HwMeasure HwMeasure;

/**
 * Opaque problem handle: a measure, a grid resolution, and (once set)
 * admissible initial data.
 */
typedef struct HwProblem HwProblem;

/**
 * Opaque solution handle: space-time samples plus metadata.
 */
typedef struct HwSolution HwSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must point to at least `cap` writable bytes, or be NULL (then only
 * the length is returned).
 */
size_t hw_last_error_message(char *buf, size_t cap);

/**
 * Create the Lebesgue measure.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HwStatus hw_measure_lebesgue(struct HwMeasure **out);

/**
 * Create `(1−c)·Lebesgue + c·δ_p`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HwStatus hw_measure_lebesgue_plus_delta(double p, double c, struct HwMeasure **out);

/**
 * Create the two-atom measure `½L + ¼δ_{½−1/n} + ¼δ_{½+1/n}`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HwStatus hw_measure_two_atoms(uint32_t n, struct HwMeasure **out);

/**
 * Create the level-`n` Cantor staircase approximant measure.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HwStatus hw_measure_cantor_approx(uint32_t level, struct HwMeasure **out);

/**
 * Create a measure from raw arrays: breakpoints (length `n_breaks`, first 0,
 * last 1), densities (length `n_breaks − 1`), and optional atoms.
 *
 * # Safety
 * The array pointers must be valid for the stated lengths; `atom_pos` and
 * `atom_mass` may be NULL when `n_atoms` is 0.
 */
enum HwStatus hw_measure_custom(const double *breakpoints,
                                size_t n_breaks,
                                const double *densities,
                                size_t n_densities,
                                const double *atom_pos,
                                const double *atom_mass,
                                size_t n_atoms,
                                struct HwMeasure **out);

/**
 * Evaluate the distribution function `W(x)`.
 *
 * # Safety
 * `measure` and `out` must be valid pointers.
 */
enum HwStatus hw_measure_cdf(const struct HwMeasure *measure, double x, double *out);

/**
 * Evaluate the generalized inverse `w(s)`.
 *
 * # Safety
 * `measure` and `out` must be valid pointers.
 */
enum HwStatus hw_measure_inverse_cdf(const struct HwMeasure *measure, double s, double *out);

/**
 * Release a measure handle. NULL is a no-op.
 *
 * # Safety
 * `measure` must come from this library and not be freed twice.
 */
void hw_measure_free(struct HwMeasure *measure);

/**
 * Create a problem on `n_cells` grid cells (at least 4).
 *
 * # Safety
 * `measure` and `out` must be valid pointers.
 */
enum HwStatus hw_problem_new(const struct HwMeasure *measure,
                             size_t n_cells,
                             struct HwProblem **out);

/**
 * Set the initial condition through the `y`-space pathway: samples of the
 * generalized second derivative `g` on a uniform grid, plus the additive
 * constant `b`.
 *
 * # Safety
 * `g` must point to `len` readable doubles; `problem` must be valid.
 */
enum HwStatus hw_problem_set_initial_yspace(struct HwProblem *problem,
                                            const double *g,
                                            size_t len,
                                            double b);

/**
 * Set the initial condition through the `x`-space pathway: samples of `f`
 * and `f″` at the cell centers (`len` must equal the problem's `n_cells`).
 *
 * # Safety
 * `f` and `f_second` must point to `len` readable doubles; `problem` valid.
 */
enum HwStatus hw_problem_set_initial_xspace(struct HwProblem *problem,
                                            const double *f,
                                            const double *f_second,
                                            size_t len);

/**
 * Release a problem handle. NULL is a no-op.
 *
 * # Safety
 * `problem` must come from this library and not be freed twice.
 */
void hw_problem_free(struct HwProblem *problem);

/**
 * Solve with the frequency-domain pipeline and sample at the given times.
 *
 * # Safety
 * `problem`, `times` (length `n_times`) and `out` must be valid pointers.
 */
enum HwStatus hw_solve_spectral(const struct HwProblem *problem,
                                double xi_max,
                                size_t n_freqs,
                                const double *times,
                                size_t n_times,
                                struct HwSolution **out);

/**
 * Solve with the time-stepping backend (`theta` is 1.0 or 0.5).
 *
 * # Safety
 * `problem`, `times` (length `n_times`) and `out` must be valid pointers.
 */
enum HwStatus hw_solve_oracle(const struct HwProblem *problem,
                              double dt,
                              double theta,
                              const double *times,
                              size_t n_times,
                              struct HwSolution **out);

/**
 * Number of stored time samples.
 *
 * # Safety
 * `solution` must be a valid handle.
 */
size_t hw_solution_n_times(const struct HwSolution *solution);

/**
 * Number of spatial cells.
 *
 * # Safety
 * `solution` must be a valid handle.
 */
size_t hw_solution_n_cells(const struct HwSolution *solution);

/**
 * Time of sample `i` (after snapping, for the oracle backend).
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum HwStatus hw_solution_time(const struct HwSolution *solution, size_t i, double *out);

/**
 * Value `v(t_i, x_j)`.
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum HwStatus hw_solution_value(const struct HwSolution *solution, size_t i, size_t j, double *out);

/**
 * The conserved weighted mean of the solution.
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum HwStatus hw_solution_mean(const struct HwSolution *solution, double *out);

/**
 * Reported spectral tail bound (0 for the oracle backend).
 *
 * # Safety
 * `solution` and `out` must be valid pointers.
 */
enum HwStatus hw_solution_tail_bound(const struct HwSolution *solution, double *out);

/**
 * Release a solution handle. NULL is a no-op.
 *
 * # Safety
 * `solution` must come from this library and not be freed twice.
 */
void hw_solution_free(struct HwSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEATW_H */
