#ifndef DOPPLER_CLOAK_H
#define DOPPLER_CLOAK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DcStatus {
  DC_STATUS_OK = 0,
  DC_STATUS_NULL_POINTER = 1,
  DC_STATUS_INVALID_ARGUMENT = 2,
  /*
   No capacitance reaches the requested phase.
   */
  DC_STATUS_NO_SOLUTION = 3,
  DC_STATUS_PARSE = 4,
  DC_STATUS_IO = 5,
  /*
   Phase row not strictly increasing over the varactor range.
   */
  DC_STATUS_CALIBRATION = 6,
  DC_STATUS_NO_DETECTION = 7,
  DC_STATUS_PANIC = 8,
} DcStatus;

/*
 Opaque calibrated design: phase map, default varactor and carrier.
 */
typedef struct DcCloak DcCloak;

/*
 Opaque phase map over (capacitance × frequency).
 */
typedef struct DcPhaseMap DcPhaseMap;

typedef struct DcComplex {
  double re;
  double im;
} DcComplex;

/*
 Grounded-slab surrogate parameters, SI units.
 */
typedef struct DcSurfaceParams {
  double substrate_thickness;
  double relative_permittivity;
  double sheet_resistance;
  double sheet_inductance;
  double sheet_capacitance;
} DcSurfaceParams;

/*
 Outcome of one simulated concealment run.
 */
typedef struct DcConcealment {
  double modulation_frequency;
  double velocity_uncloaked;
  /*
   NaN when the cloaked spectrum is empty.
   */
  double velocity_cloaked;
  double velocity_bin;
  double attenuation_db;
} DcConcealment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the calling thread's last error message into `buf` (NUL
 terminated, truncated to `len`). Returns the full message length
 including the terminator, or 0 if there is no error. Pass a null `buf` to
 query the length.
 */
size_t dc_last_error(char *buf, size_t len);

/*
 Phase lag of a single varactor-loaded dipole, rad.
 */
enum DcStatus dc_phase_shift(double r, double l, double c, double cv, double f, double *out);

/*
 Varactor capacitance giving a π/4 lag at `f`; `DC_STATUS_NO_SOLUTION`
 where none exists.
 */
enum DcStatus dc_rectifying_capacitance(double r, double l, double c, double f, double *out);

enum DcStatus dc_cancellation_frequency(double velocity, double carrier, double span, double *out);

enum DcStatus dc_spoof_frequency(double v_true,
                                 double v_apparent,
                                 double carrier,
                                 double span,
                                 double *out);

/*
 Two-pulse canceller: writes `len - 1` samples to `out`.
 */
enum DcStatus dc_mti_two_pulse(const struct DcComplex *input, size_t len, struct DcComplex *out);

enum DcStatus dc_surface_params_default(struct DcSurfaceParams *out);

/*
 Slab thinned so the span over 0.6–2.6 pF at 1.5 GHz is 330°.
 */
enum DcStatus dc_surface_params_experiment(struct DcSurfaceParams *out);

enum DcStatus dc_phase_map_dipole(double r,
                                  double l,
                                  double c,
                                  const double *caps,
                                  size_t num_caps,
                                  const double *freqs,
                                  size_t num_freqs,
                                  struct DcPhaseMap **out);

enum DcStatus dc_phase_map_surface(const struct DcSurfaceParams *params,
                                   const double *caps,
                                   size_t num_caps,
                                   const double *freqs,
                                   size_t num_freqs,
                                   struct DcPhaseMap **out);

enum DcStatus dc_phase_map_read_csv(const char *file, struct DcPhaseMap **out);

enum DcStatus dc_phase_map_write_csv(const struct DcPhaseMap *map, const char *file);

enum DcStatus dc_phase_map_shape(const struct DcPhaseMap *map, size_t *num_caps, size_t *num_freqs);

enum DcStatus dc_phase_map_value(const struct DcPhaseMap *map,
                                 size_t freq_index,
                                 size_t cap_index,
                                 double *out);

/*
 Capacitance at which the row nearest `f` first reaches `threshold`.
 */
enum DcStatus dc_phase_map_threshold(const struct DcPhaseMap *map,
                                     double f,
                                     double threshold,
                                     double *out);

/*
 Rectifies `map`; when `offsets` is non-null it receives one extra
 capacitance per frequency row.
 */
enum DcStatus dc_phase_map_rectify(const struct DcPhaseMap *map,
                                   double threshold,
                                   double *offsets,
                                   struct DcPhaseMap **out);

/*
 Widest band whose knife edges agree within `tolerance` farads.
 */
enum DcStatus dc_phase_map_bandwidth(const struct DcPhaseMap *map,
                                     double tolerance,
                                     double threshold,
                                     double *out);

/*
 Releases a map; null is ignored.
 */
void dc_phase_map_free(struct DcPhaseMap *map);

/*
 Calibrates the default 2.6–0.6 pF varactor against `map` at `carrier`.
 The map is copied; the caller keeps ownership of it.
 */
enum DcStatus dc_cloak_new(const struct DcPhaseMap *map, double carrier, struct DcCloak **out);

enum DcStatus dc_cloak_span(const struct DcCloak *cloak, double *out);

/*
 Simulates one target at 3 m moving at `velocity` with the default radar
 and compares bare and coated runs. A NaN `modulation_frequency` selects
 the cancelling frequency; a NaN `snr_db` runs noiseless.
 */
enum DcStatus dc_cloak_evaluate(const struct DcCloak *cloak,
                                double velocity,
                                double modulation_frequency,
                                double snr_db,
                                uint64_t seed,
                                struct DcConcealment *out);

/*
 Releases a design; null is ignored.
 */
void dc_cloak_free(struct DcCloak *cloak);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOPPLER_CLOAK_H */
