//! C ABI over the simulator.
//!
//! Every function returns a [`DcStatus`]; on failure a human-readable message
//! is available from [`dc_last_error`] on the same thread. Phase maps and
//! cloak designs live behind opaque handles that the caller releases with
//! the matching `*_free` function. Panics never cross the boundary.
//!
//! Pointer arguments must be null or valid for the access their name implies;
//! null is always reported, never dereferenced.

// The entry points are called from C, where `unsafe` carries no meaning.
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use doppler_cloak::circuit_model::{self, CircuitParams};
use doppler_cloak::cloak::{self, CloakDesign, CloakPlan};
use doppler_cloak::dsp::{self, Processing};
use doppler_cloak::metasurface::{self, Flatness, SurfaceParams};
use doppler_cloak::modulation::VaractorCurve;
use doppler_cloak::phase_map::PhaseMap;
use doppler_cloak::scene::{RadarConfig, Scene, Target};
use doppler_cloak::Error;
use num_complex::Complex64;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// No capacitance reaches the requested phase.
    NoSolution = 3,
    Parse = 4,
    Io = 5,
    /// Phase row not strictly increasing over the varactor range.
    Calibration = 6,
    NoDetection = 7,
    Panic = 8,
}

/// Opaque phase map over (capacitance × frequency).
pub struct DcPhaseMap(PhaseMap);

/// Opaque calibrated design: phase map, default varactor and carrier.
pub struct DcCloak(CloakDesign);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcComplex {
    pub re: f64,
    pub im: f64,
}

/// Grounded-slab surrogate parameters, SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcSurfaceParams {
    pub substrate_thickness: f64,
    pub relative_permittivity: f64,
    pub sheet_resistance: f64,
    pub sheet_inductance: f64,
    pub sheet_capacitance: f64,
}

/// Outcome of one simulated concealment run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcConcealment {
    pub modulation_frequency: f64,
    pub velocity_uncloaked: f64,
    /// NaN when the cloaked spectrum is empty.
    pub velocity_cloaked: f64,
    pub velocity_bin: f64,
    pub attenuation_db: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(DcStatus, String);

fn status_of(e: &Error) -> DcStatus {
    match e {
        Error::NoRectifyingCapacitance { .. } | Error::EdgeOutsideMap { .. } | Error::Fit(_) => DcStatus::NoSolution,
        Error::Parse { .. } | Error::Config { .. } | Error::Csv(_) => DcStatus::Parse,
        Error::Io(_) | Error::Read { .. } => DcStatus::Io,
        Error::NonMonotone { .. } => DcStatus::Calibration,
        Error::NoDetection => DcStatus::NoDetection,
        Error::Domain(_)
        | Error::FrequencyOffGrid { .. }
        | Error::TooShort { .. }
        | Error::DopplerAboveNyquist { .. }
        | Error::WaveformTooShort { .. } => DcStatus::InvalidArgument,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `body`, recording any failure or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> DcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DcStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {what}"));
            DcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(DcStatus::NullPointer, format!("{what} is null"))
}

fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller guarantees non-null pointers are valid for writes.
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

fn in_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees non-null pointers are valid for reads.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: the caller guarantees `len` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: the caller guarantees `len` writable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

fn path<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    // SAFETY: the caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(DcStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

fn circuit(r: f64, l: f64, c: f64) -> Result<CircuitParams, Failure> {
    Ok(CircuitParams::new(r, l, c)?)
}

fn surface(p: &DcSurfaceParams) -> SurfaceParams {
    SurfaceParams {
        substrate_thickness: p.substrate_thickness,
        relative_permittivity: p.relative_permittivity,
        sheet_resistance: p.sheet_resistance,
        sheet_inductance: p.sheet_inductance,
        sheet_capacitance: p.sheet_capacitance,
        ..SurfaceParams::default()
    }
}

fn surface_out(s: SurfaceParams) -> DcSurfaceParams {
    DcSurfaceParams {
        substrate_thickness: s.substrate_thickness,
        relative_permittivity: s.relative_permittivity,
        sheet_resistance: s.sheet_resistance,
        sheet_inductance: s.sheet_inductance,
        sheet_capacitance: s.sheet_capacitance,
    }
}

fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    *out_ref(out, "output handle")? = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// including the terminator, or 0 if there is no error. Pass a null `buf` to
/// query the length.
#[no_mangle]
pub extern "C" fn dc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(message) = slot.as_ref() else { return 0 };
        let bytes = message.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            // SAFETY: the caller provides `len` writable bytes at `buf`.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len()
    })
}

/// Phase lag of a single varactor-loaded dipole, rad.
#[no_mangle]
pub extern "C" fn dc_phase_shift(r: f64, l: f64, c: f64, cv: f64, f: f64, out: *mut f64) -> DcStatus {
    guard(|| {
        *out_ref(out, "out")? = circuit_model::phase_shift(&circuit(r, l, c)?, cv, f)?;
        Ok(())
    })
}

/// Varactor capacitance giving a π/4 lag at `f`; `DC_STATUS_NO_SOLUTION`
/// where none exists.
#[no_mangle]
pub extern "C" fn dc_rectifying_capacitance(r: f64, l: f64, c: f64, f: f64, out: *mut f64) -> DcStatus {
    guard(|| {
        *out_ref(out, "out")? = circuit_model::rectifying_capacitance(&circuit(r, l, c)?, f)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dc_cancellation_frequency(velocity: f64, carrier: f64, span: f64, out: *mut f64) -> DcStatus {
    guard(|| {
        *out_ref(out, "out")? = cloak::cancellation_frequency(velocity, carrier, span)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dc_spoof_frequency(v_true: f64, v_apparent: f64, carrier: f64, span: f64, out: *mut f64) -> DcStatus {
    guard(|| {
        *out_ref(out, "out")? = cloak::spoof_frequency(v_true, v_apparent, carrier, span)?;
        Ok(())
    })
}

/// Two-pulse canceller: writes `len - 1` samples to `out`.
#[no_mangle]
pub extern "C" fn dc_mti_two_pulse(input: *const DcComplex, len: usize, out: *mut DcComplex) -> DcStatus {
    guard(|| {
        let x: Vec<Complex64> = slice(input, len, "input")?
            .iter()
            .map(|c| Complex64::new(c.re, c.im))
            .collect();
        let y = dsp::mti_two_pulse(&x)?;
        for (dst, v) in slice_mut(out, y.len(), "out")?.iter_mut().zip(&y) {
            *dst = DcComplex { re: v.re, im: v.im };
        }
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dc_surface_params_default(out: *mut DcSurfaceParams) -> DcStatus {
    guard(|| {
        *out_ref(out, "out")? = surface_out(SurfaceParams::default());
        Ok(())
    })
}

/// Slab thinned so the span over 0.6–2.6 pF at 1.5 GHz is 330°.
#[no_mangle]
pub extern "C" fn dc_surface_params_experiment(out: *mut DcSurfaceParams) -> DcStatus {
    guard(|| {
        *out_ref(out, "out")? = surface_out(SurfaceParams::experiment());
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dc_phase_map_dipole(
    r: f64,
    l: f64,
    c: f64,
    caps: *const f64,
    num_caps: usize,
    freqs: *const f64,
    num_freqs: usize,
    out: *mut *mut DcPhaseMap,
) -> DcStatus {
    guard(|| {
        let caps = slice(caps, num_caps, "caps")?;
        let freqs = slice(freqs, num_freqs, "freqs")?;
        let map = circuit_model::knife_map(&circuit(r, l, c)?, caps, freqs)?;
        emit(out, DcPhaseMap(map))
    })
}

#[no_mangle]
pub extern "C" fn dc_phase_map_surface(
    params: *const DcSurfaceParams,
    caps: *const f64,
    num_caps: usize,
    freqs: *const f64,
    num_freqs: usize,
    out: *mut *mut DcPhaseMap,
) -> DcStatus {
    guard(|| {
        let params = surface(in_ref(params, "params")?);
        let caps = slice(caps, num_caps, "caps")?;
        let freqs = slice(freqs, num_freqs, "freqs")?;
        let map = metasurface::surface_phase_map(&params, caps, freqs)?;
        emit(out, DcPhaseMap(map))
    })
}

#[no_mangle]
pub extern "C" fn dc_phase_map_read_csv(file: *const c_char, out: *mut *mut DcPhaseMap) -> DcStatus {
    guard(|| {
        let name = path(file)?;
        let f = File::open(name).map_err(|e| Failure(DcStatus::Io, format!("cannot read {name}: {e}")))?;
        emit(out, DcPhaseMap(PhaseMap::read_csv(f)?))
    })
}

#[no_mangle]
pub extern "C" fn dc_phase_map_write_csv(map: *const DcPhaseMap, file: *const c_char) -> DcStatus {
    guard(|| {
        let map = in_ref(map, "map")?;
        let name = path(file)?;
        let f = File::create(name).map_err(|e| Failure(DcStatus::Io, format!("cannot write {name}: {e}")))?;
        map.0.write_csv(f)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dc_phase_map_shape(map: *const DcPhaseMap, num_caps: *mut usize, num_freqs: *mut usize) -> DcStatus {
    guard(|| {
        let map = in_ref(map, "map")?;
        *out_ref(num_caps, "num_caps")? = map.0.num_capacitances();
        *out_ref(num_freqs, "num_freqs")? = map.0.num_frequencies();
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn dc_phase_map_value(
    map: *const DcPhaseMap,
    freq_index: usize,
    cap_index: usize,
    out: *mut f64,
) -> DcStatus {
    guard(|| {
        let map = &in_ref(map, "map")?.0;
        if freq_index >= map.num_frequencies() || cap_index >= map.num_capacitances() {
            return Err(Failure(
                DcStatus::InvalidArgument,
                format!("index ({freq_index}, {cap_index}) outside the map"),
            ));
        }
        *out_ref(out, "out")? = map.value(freq_index, cap_index);
        Ok(())
    })
}

/// Capacitance at which the row nearest `f` first reaches `threshold`.
#[no_mangle]
pub extern "C" fn dc_phase_map_threshold(map: *const DcPhaseMap, f: f64, threshold: f64, out: *mut f64) -> DcStatus {
    guard(|| {
        let map = in_ref(map, "map")?;
        *out_ref(out, "out")? = metasurface::threshold_capacitance(&map.0, f, threshold)?;
        Ok(())
    })
}

/// Rectifies `map`; when `offsets` is non-null it receives one extra
/// capacitance per frequency row.
#[no_mangle]
pub extern "C" fn dc_phase_map_rectify(
    map: *const DcPhaseMap,
    threshold: f64,
    offsets: *mut f64,
    out: *mut *mut DcPhaseMap,
) -> DcStatus {
    guard(|| {
        let map = in_ref(map, "map")?;
        let (curve, rectified) = metasurface::rectify(&map.0, threshold)?;
        if !offsets.is_null() {
            slice_mut(offsets, curve.capacitance.len(), "offsets")?.copy_from_slice(&curve.capacitance);
        }
        emit(out, DcPhaseMap(rectified))
    })
}

/// Widest band whose knife edges agree within `tolerance` farads.
#[no_mangle]
pub extern "C" fn dc_phase_map_bandwidth(
    map: *const DcPhaseMap,
    tolerance: f64,
    threshold: f64,
    out: *mut f64,
) -> DcStatus {
    guard(|| {
        let map = in_ref(map, "map")?;
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(Failure(
                DcStatus::InvalidArgument,
                format!("tolerance must be >= 0, got {tolerance}"),
            ));
        }
        *out_ref(out, "out")? = metasurface::usable_bandwidth(&map.0, Flatness::Absolute(tolerance), threshold);
        Ok(())
    })
}

/// Releases a map; null is ignored.
#[no_mangle]
pub extern "C" fn dc_phase_map_free(map: *mut DcPhaseMap) {
    if !map.is_null() {
        // SAFETY: `map` came from Box::into_raw in this library.
        let _ = catch_unwind(AssertUnwindSafe(|| drop(unsafe { Box::from_raw(map) })));
    }
}

/// Calibrates the default 2.6–0.6 pF varactor against `map` at `carrier`.
/// The map is copied; the caller keeps ownership of it.
#[no_mangle]
pub extern "C" fn dc_cloak_new(map: *const DcPhaseMap, carrier: f64, out: *mut *mut DcCloak) -> DcStatus {
    guard(|| {
        let map = in_ref(map, "map")?;
        let design = CloakDesign::new(map.0.clone(), VaractorCurve::default(), carrier)?;
        emit(out, DcCloak(design))
    })
}

#[no_mangle]
pub extern "C" fn dc_cloak_span(cloak: *const DcCloak, out: *mut f64) -> DcStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(cloak, "cloak")?.0.span();
        Ok(())
    })
}

/// Simulates one target at 3 m moving at `velocity` with the default radar
/// and compares bare and coated runs. A NaN `modulation_frequency` selects
/// the cancelling frequency; a NaN `snr_db` runs noiseless.
#[no_mangle]
pub extern "C" fn dc_cloak_evaluate(
    cloak: *const DcCloak,
    velocity: f64,
    modulation_frequency: f64,
    snr_db: f64,
    seed: u64,
    out: *mut DcConcealment,
) -> DcStatus {
    guard(|| {
        let design = &in_ref(cloak, "cloak")?.0;
        let out = out_ref(out, "out")?;
        let (carrier, span) = (design.carrier(), design.span());
        let plan = if modulation_frequency.is_nan() {
            CloakPlan::cancel(velocity, carrier, span)?
        } else {
            CloakPlan::with_frequency(velocity, carrier, span, modulation_frequency)?
        };
        let scene = Scene {
            radar: RadarConfig {
                carriers: vec![carrier],
                snr_db: (!snr_db.is_nan()).then_some(snr_db),
                ..RadarConfig::default()
            },
            targets: vec![Target::new(3.0, velocity, 1.0)],
            clutter: Vec::new(),
            seed,
        };
        let report = cloak::evaluate_concealment(&scene, 0, design, &plan, &Processing::default())?;
        *out = DcConcealment {
            modulation_frequency: plan.modulation_frequency,
            velocity_uncloaked: report.uncloaked_pre.estimated_velocity.unwrap_or(f64::NAN),
            velocity_cloaked: report.cloaked_pre.estimated_velocity.unwrap_or(f64::NAN),
            velocity_bin: report.velocity_bin,
            attenuation_db: report.attenuation_db,
        };
        Ok(())
    })
}

/// Releases a design; null is ignored.
#[no_mangle]
pub extern "C" fn dc_cloak_free(cloak: *mut DcCloak) {
    if !cloak.is_null() {
        // SAFETY: `cloak` came from Box::into_raw in this library.
        let _ = catch_unwind(AssertUnwindSafe(|| drop(unsafe { Box::from_raw(cloak) })));
    }
}
