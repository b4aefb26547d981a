//! Reflection-phase surrogate for a varactor-loaded dipole array over a
//! grounded dielectric slab, and numerical knife-edge rectification for any
//! phase map.
//!
//! The array is modelled as a series R-L-C sheet (the varactor adds to the
//! sheet capacitance) shunting the input impedance of a shorted slab:
//!
//! ```text
//! Z_sheet = R_s + j(ωL_s − 1/(ω(C_s + Cv)))
//! Z_slab  = j η0/√εr · tan(ω √εr h / c)
//! Γ       = (1 − η0 Y) / (1 + η0 Y),   Y = 1/Z_sheet + 1/Z_slab
//! ```
//!
//! The phase shift of a row is the unwrapped lag `−(arg Γ(Cv) − arg Γ(Cv0))`.

use crate::error::ensure_finite;
use crate::interp::{lerp_clamped, linspace, unwrap_in_place};
use crate::phase_map::{format_axis, format_cell, PhaseMap};
use crate::{Error, Result, FREE_SPACE_IMPEDANCE, SPEED_OF_LIGHT};
use argmin::core::{CostFunction, Executor};
use argmin::solver::brent::BrentRoot;
use argmin::solver::neldermead::NelderMead;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;

/// Largest |tan| admitted for the slab term before it is limited and the
/// sample flagged.
const SLAB_TAN_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceParams {
    /// Substrate thickness between the dipoles and the ground plane, m.
    pub substrate_thickness: f64,
    pub relative_permittivity: f64,
    /// Unit-cell period, m.
    pub cell_period: f64,
    /// Ω/sq
    pub sheet_resistance: f64,
    /// H
    pub sheet_inductance: f64,
    /// Intrinsic array capacitance in parallel with the varactor, F.
    pub sheet_capacitance: f64,
    /// Geometry carried for documentation and fitting only, m.
    pub dipole_length: f64,
    pub stub_length: f64,
    pub stub_width: f64,
    pub strip_width: f64,
}

impl Default for SurfaceParams {
    /// FR-4 at h = 6 mm with a sheet fitted so the knife sits inside
    /// 1.2–1.7 GHz for a 0.6–2.6 pF varactor.
    fn default() -> Self {
        Self {
            substrate_thickness: 6e-3,
            relative_permittivity: 4.3,
            cell_period: 50e-3,
            sheet_resistance: 0.1,
            sheet_inductance: 6e-9,
            sheet_capacitance: 0.0,
            dipole_length: 40e-3,
            stub_length: 42e-3,
            stub_width: 10e-3,
            strip_width: 10e-3,
        }
    }
}

impl SurfaceParams {
    /// Default sheet on a thinner slab, chosen so the phase span over
    /// 0.6–2.6 pF at 1.5 GHz is 330°. See [`fit_thickness_for_span`].
    pub fn experiment() -> Self {
        Self {
            substrate_thickness: 4.788_320_8e-3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("substrate thickness", self.substrate_thickness),
            ("cell period", self.cell_period),
            ("sheet inductance", self.sheet_inductance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be finite and positive, got {v}")));
            }
        }
        let nonnegative = [
            ("sheet resistance", self.sheet_resistance),
            ("sheet capacitance", self.sheet_capacitance),
            ("dipole length", self.dipole_length),
            ("stub length", self.stub_length),
            ("stub width", self.stub_width),
            ("strip width", self.strip_width),
        ];
        for (name, v) in nonnegative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.relative_permittivity.is_finite() && self.relative_permittivity >= 1.0) {
            return Err(Error::Domain(format!(
                "relative permittivity must be >= 1, got {}",
                self.relative_permittivity
            )));
        }
        Ok(())
    }
}

/// Reflection coefficient plus whether the slab term had to be limited.
pub fn reflection_sample(surface: &SurfaceParams, cv: f64, f: f64) -> Result<(Complex64, bool)> {
    surface.validate()?;
    ensure_finite("varactor capacitance", cv)?;
    ensure_finite("frequency", f)?;
    if cv < 0.0 {
        return Err(Error::Domain(format!("varactor capacitance must be >= 0, got {cv}")));
    }
    if f <= 0.0 {
        return Err(Error::Domain(format!("frequency must be > 0, got {f}")));
    }
    let w = 2.0 * PI * f;
    let eta = FREE_SPACE_IMPEDANCE;
    let n = surface.relative_permittivity.sqrt();

    let cap = surface.sheet_capacitance + cv;
    // an open sheet (no capacitance at all) carries no current
    let y_sheet = if cap > 0.0 {
        let z = Complex64::new(surface.sheet_resistance, w * surface.sheet_inductance - 1.0 / (w * cap));
        if z == Complex64::new(0.0, 0.0) {
            return Ok((Complex64::new(-1.0, 0.0), false));
        }
        z.inv()
    } else {
        Complex64::new(0.0, 0.0)
    };

    let mut t = (w * n * surface.substrate_thickness / SPEED_OF_LIGHT).tan();
    let limited = !t.is_finite() || t.abs() > SLAB_TAN_LIMIT;
    if limited {
        t = SLAB_TAN_LIMIT.copysign(if t.is_nan() { 1.0 } else { t });
    }
    let z_slab = eta / n * t;
    if z_slab == 0.0 {
        // shorted surface
        return Ok((Complex64::new(-1.0, 0.0), limited));
    }
    let y_slab = Complex64::new(0.0, -1.0 / z_slab);

    let ey = (y_sheet + y_slab) * eta;
    let one = Complex64::new(1.0, 0.0);
    Ok(((one - ey) / (one + ey), limited))
}

pub fn reflection_coefficient(surface: &SurfaceParams, cv: f64, f: f64) -> Result<Complex64> {
    reflection_sample(surface, cv, f).map(|(g, _)| g)
}

/// 201 points over the 0.6–2.6 pF varactor range.
pub fn default_capacitance_grid() -> Vec<f64> {
    linspace(0.6e-12, 2.6e-12, 201)
}

/// Unwrapped phase lag and |Γ| along one frequency row.
fn surface_row(surface: &SurfaceParams, cap_grid: &[f64], f: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<usize>)> {
    let mut phase = Vec::with_capacity(cap_grid.len());
    let mut amp = Vec::with_capacity(cap_grid.len());
    let mut flagged = Vec::new();
    for (ci, &cv) in cap_grid.iter().enumerate() {
        let (g, limited) = reflection_sample(surface, cv, f)?;
        if limited {
            flagged.push(ci);
        }
        phase.push(g.arg());
        amp.push(g.norm());
    }
    unwrap_in_place(&mut phase);
    let reference = phase[0];
    for p in &mut phase {
        *p = reference - *p;
    }
    Ok((phase, amp, flagged))
}

pub fn surface_phase_map(surface: &SurfaceParams, cap_grid: &[f64], freq_grid: &[f64]) -> Result<PhaseMap> {
    if cap_grid.is_empty() || freq_grid.is_empty() {
        return Err(Error::Domain("surface map grids must be nonempty".into()));
    }
    let rows = freq_grid
        .par_iter()
        .map(|&f| surface_row(surface, cap_grid, f))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(cap_grid.len() * freq_grid.len());
    let mut amplitude = Vec::with_capacity(values.capacity());
    let mut flags = Vec::new();
    for (fi, (phase, amp, flagged)) in rows.into_iter().enumerate() {
        values.extend(phase);
        amplitude.extend(amp);
        flags.extend(flagged.into_iter().map(|ci| (fi, ci)));
    }
    Ok(PhaseMap::new(cap_grid.to_vec(), freq_grid.to_vec(), values, Some(amplitude))?.with_flags(flags))
}

/// Smallest capacitance at which a row first reaches `threshold`, linearly
/// interpolated between the bracketing samples.
fn edge_on_row(caps: &[f64], row: &[f64], threshold: f64) -> Option<f64> {
    if row[0] >= threshold {
        return Some(caps[0]);
    }
    let i = row.iter().position(|&v| v >= threshold)?;
    let (c0, c1, p0, p1) = (caps[i - 1], caps[i], row[i - 1], row[i]);
    Some(c0 + (threshold - p0) / (p1 - p0) * (c1 - c0))
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::Domain(format!(
            "threshold must be finite and >= 0, got {threshold}"
        )));
    }
    Ok(())
}

/// Knife edge on the row nearest `f`.
pub fn threshold_capacitance(map: &PhaseMap, f: f64, threshold: f64) -> Result<f64> {
    check_threshold(threshold)?;
    let fi = map.row_index(f)?;
    row_threshold(map, fi, threshold)
}

fn row_threshold(map: &PhaseMap, fi: usize, threshold: f64) -> Result<f64> {
    edge_on_row(map.capacitance(), map.row(fi), threshold).ok_or(Error::EdgeOutsideMap {
        frequency: map.frequency()[fi],
        threshold,
    })
}

/// Per-frequency extra capacitance that aligns every knife edge with the
/// band minimum `reference_threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersiveCapacitorCurve {
    pub frequency: Vec<f64>,
    pub capacitance: Vec<f64>,
    pub reference_threshold: f64,
}

impl DispersiveCapacitorCurve {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["f_Hz", "C_omega_F"])?;
        for (&f, &c) in self.frequency.iter().zip(&self.capacitance) {
            w.write_record([format_axis(f), format_cell(c)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Flattens the knife: each row is re-indexed with effective capacitance
/// `Cv + C_ω(f)` so every edge lands on the smallest edge of the band.
///
/// Resampling is linear in capacitance and holds the end values, so the
/// rectified edge is exact up to the interpolation error of one grid cell.
pub fn rectify(map: &PhaseMap, threshold: f64) -> Result<(DispersiveCapacitorCurve, PhaseMap)> {
    check_threshold(threshold)?;
    let edges = (0..map.num_frequencies())
        .map(|fi| row_threshold(map, fi, threshold))
        .collect::<Result<Vec<f64>>>()?;
    let reference = edges.iter().copied().fold(f64::INFINITY, f64::min);
    let offsets: Vec<f64> = edges.iter().map(|e| e - reference).collect();

    let caps = map.capacitance();
    let mut values = Vec::with_capacity(caps.len() * map.num_frequencies());
    let mut amplitude = map.has_amplitude().then(Vec::new);
    for (fi, &extra) in offsets.iter().enumerate() {
        let row = map.row(fi);
        values.extend(caps.iter().map(|&c| lerp_clamped(caps, row, c + extra)));
        if let (Some(out), Some(amp)) = (amplitude.as_mut(), map.amplitude_row(fi)) {
            out.extend(caps.iter().map(|&c| lerp_clamped(caps, amp, c + extra)));
        }
    }
    let rectified = PhaseMap::new(caps.to_vec(), map.frequency().to_vec(), values, amplitude)?;
    let curve = DispersiveCapacitorCurve {
        frequency: map.frequency().to_vec(),
        capacitance: offsets,
        reference_threshold: reference,
    };
    Ok((curve, rectified))
}

/// How closely the knife edges of neighbouring rows must agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Flatness {
    /// Spread of edge capacitances within the band, F.
    Absolute(f64),
    /// Spread as a fraction of the largest edge within the band.
    Relative(f64),
}

impl Flatness {
    /// 5% of the span of a varactor range.
    pub fn varactor_fraction(c_min: f64, c_max: f64) -> Self {
        Flatness::Absolute(0.05 * (c_max - c_min))
    }

    fn accepts(&self, lo: f64, hi: f64) -> bool {
        match *self {
            Flatness::Absolute(tol) => hi - lo <= tol,
            Flatness::Relative(frac) => hi - lo <= frac * hi.abs(),
        }
    }
}

/// Width of the widest contiguous run of rows whose edges agree within
/// `flatness`. Rows without an edge break a run.
pub fn usable_bandwidth(map: &PhaseMap, flatness: Flatness, threshold: f64) -> f64 {
    let edges: Vec<Option<f64>> = (0..map.num_frequencies())
        .map(|fi| row_threshold(map, fi, threshold).ok())
        .collect();
    let freq = map.frequency();
    let mut best = 0.0_f64;
    for start in 0..edges.len() {
        let Some(first) = edges[start] else { continue };
        let (mut lo, mut hi) = (first, first);
        for end in start..edges.len() {
            let Some(e) = edges[end] else { break };
            lo = lo.min(e);
            hi = hi.max(e);
            if !flatness.accepts(lo, hi) {
                break;
            }
            best = best.max(freq[end] - freq[start]);
        }
    }
    best
}

/// Phase span between the ends of a varactor range at one frequency,
/// sampled on `samples` points.
pub fn phase_span(surface: &SurfaceParams, f: f64, c_min: f64, c_max: f64, samples: usize) -> Result<f64> {
    let caps = linspace(c_min, c_max, samples.max(2));
    let (phase, _, _) = surface_row(surface, &caps, f)?;
    Ok(phase[phase.len() - 1])
}

struct SpanMismatch {
    base: SurfaceParams,
    frequency: f64,
    c_min: f64,
    c_max: f64,
    target: f64,
}

impl CostFunction for SpanMismatch {
    type Param = f64;
    type Output = f64;

    fn cost(&self, h: &f64) -> std::result::Result<f64, argmin::core::Error> {
        let surface = SurfaceParams {
            substrate_thickness: *h,
            ..self.base
        };
        let span = phase_span(&surface, self.frequency, self.c_min, self.c_max, 401)
            .map_err(|e| argmin::core::Error::msg(e.to_string()))?;
        Ok(span - self.target)
    }
}

/// Solves for the substrate thickness, inside `bracket` (m), that gives a
/// phase span of `target_span` over `[c_min, c_max]` at frequency `f`.
pub fn fit_thickness_for_span(
    base: &SurfaceParams,
    f: f64,
    (c_min, c_max): (f64, f64),
    target_span: f64,
    bracket: (f64, f64),
) -> Result<SurfaceParams> {
    let problem = SpanMismatch {
        base: *base,
        frequency: f,
        c_min,
        c_max,
        target: target_span,
    };
    let solver = BrentRoot::new(bracket.0, bracket.1, 1e-12);
    let result = Executor::new(problem, solver)
        .configure(|s| s.max_iters(200))
        .run()
        .map_err(|e| Error::Fit(e.to_string()))?;
    let h = *result
        .state()
        .param
        .as_ref()
        .ok_or_else(|| Error::Fit("root finder returned no thickness".into()))?;
    Ok(SurfaceParams {
        substrate_thickness: h,
        ..*base
    })
}

struct EdgeMismatch<'a> {
    base: SurfaceParams,
    cap_grid: &'a [f64],
    targets: &'a [(f64, f64)],
    threshold: f64,
}

impl EdgeMismatch<'_> {
    /// Optimizer coordinates are (L_s in nH, C_s in pF); C_s enters as |x|.
    fn surface(&self, p: &[f64]) -> SurfaceParams {
        SurfaceParams {
            sheet_inductance: p[0].abs().max(1e-6) * 1e-9,
            sheet_capacitance: p[1].abs() * 1e-12,
            ..self.base
        }
    }
}

impl CostFunction for EdgeMismatch<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let surface = self.surface(p);
        let mut sum = 0.0;
        for &(f, target) in self.targets {
            let (row, _, _) =
                surface_row(&surface, self.cap_grid, f).map_err(|e| argmin::core::Error::msg(e.to_string()))?;
            // a missing edge costs as much as a full-range miss
            let miss = match edge_on_row(self.cap_grid, &row, self.threshold) {
                Some(edge) => (edge - target) * 1e12,
                None => 10.0,
            };
            sum += miss * miss;
        }
        Ok(sum)
    }
}

/// Least-squares fit of the sheet inductance and capacitance to observed
/// knife-edge locations `(frequency, edge capacitance)`.
pub fn fit_sheet(
    initial: &SurfaceParams,
    targets: &[(f64, f64)],
    cap_grid: &[f64],
    threshold: f64,
) -> Result<SurfaceParams> {
    if targets.is_empty() {
        return Err(Error::Fit("no edge locations to fit".into()));
    }
    let problem = EdgeMismatch {
        base: *initial,
        cap_grid,
        targets,
        threshold,
    };
    let l0 = initial.sheet_inductance * 1e9;
    let c0 = initial.sheet_capacitance * 1e12;
    let simplex = vec![vec![l0, c0], vec![l0 * 1.1, c0], vec![l0, c0 + 0.05]];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-12)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let result = Executor::new(problem, solver)
        .configure(|s| s.max_iters(400))
        .run()
        .map_err(|e| Error::Fit(e.to_string()))?;
    let best = result
        .state()
        .best_param
        .clone()
        .ok_or_else(|| Error::Fit("optimizer returned no parameters".into()))?;
    // rebuild the problem view to map coordinates back to physical units
    let view = EdgeMismatch {
        base: *initial,
        cap_grid,
        targets,
        threshold,
    };
    Ok(view.surface(&best))
}

/// Convenience: the knife edge at π/4.
pub const DEFAULT_THRESHOLD: f64 = FRAC_PI_4;
