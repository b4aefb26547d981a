//! Lumped series-RLC model of a single varactor-loaded dipole.
//!
//! The dipole is a series R, L and C with the varactor `Cv` in parallel with
//! `C`. Driven by a unit voltage, its current is
//!
//! ```text
//! i = jωC' / (1 + jωRC' − ω²LC'),   C' = C + Cv
//! ```
//!
//! `Re i > 0` for every positive frequency, so `arg i` lies in (−π/2, π/2)
//! and needs no branch handling. Adding capacitance lowers the resonance
//! and therefore retards the current phase; the phase shift reported here is
//! that lag, `arg i(0) − arg i(Cv)`, which lies in [0, π).

use crate::error::ensure_finite;
use crate::interp::{linspace, logspace};
use crate::phase_map::PhaseMap;
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_4, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    /// Ohmic plus radiation resistance, Ω.
    pub resistance: f64,
    /// H
    pub inductance: f64,
    /// Intrinsic dipole capacitance, F.
    pub capacitance: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self {
            resistance: 50.0,
            inductance: 0.1e-6,
            capacitance: 0.1e-12,
        }
    }
}

impl CircuitParams {
    pub fn new(resistance: f64, inductance: f64, capacitance: f64) -> Result<Self> {
        let p = Self {
            resistance,
            inductance,
            capacitance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("resistance", self.resistance),
            ("inductance", self.inductance),
            ("capacitance", self.capacitance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Resonance of the unloaded dipole, 1/(2π√(LC)).
    pub fn resonance(&self) -> f64 {
        1.0 / (2.0 * PI * (self.inductance * self.capacitance).sqrt())
    }
}

fn check_inputs(params: &CircuitParams, cv: f64, f: f64) -> Result<f64> {
    params.validate()?;
    ensure_finite("varactor capacitance", cv)?;
    ensure_finite("frequency", f)?;
    if cv < 0.0 {
        return Err(Error::Domain(format!("varactor capacitance must be >= 0, got {cv}")));
    }
    if f <= 0.0 {
        return Err(Error::Domain(format!("frequency must be > 0, got {f}")));
    }
    Ok(2.0 * PI * f)
}

/// Current per unit drive voltage.
pub fn dipole_current(params: &CircuitParams, cv: f64, f: f64) -> Result<Complex64> {
    let w = check_inputs(params, cv, f)?;
    let c = params.capacitance + cv;
    let num = Complex64::new(0.0, w * c);
    let den = Complex64::new(1.0 - w * w * params.inductance * c, w * params.resistance * c);
    Ok(num / den)
}

/// Current phase `atan(Im i / Re i)`, in (−π/2, π/2).
pub fn current_phase(params: &CircuitParams, cv: f64, f: f64) -> Result<f64> {
    let w = check_inputs(params, cv, f)?;
    let c = params.capacitance + cv;
    Ok(((1.0 - w * w * params.inductance * c) / (w * params.resistance * c)).atan())
}

/// Phase lag introduced by the varactor, in [0, π). Exactly zero at `cv = 0`.
pub fn phase_shift(params: &CircuitParams, cv: f64, f: f64) -> Result<f64> {
    let w = check_inputs(params, cv, f)?;
    let (num, den) = shift_terms(params, cv, w);
    Ok(num.atan2(den))
}

/// Sine- and cosine-side terms of the phase lag: `tan Δφ = R·Cv·ω / D`,
/// with `D = a + b·Cv` linear in the varactor capacitance.
fn shift_terms(params: &CircuitParams, cv: f64, w: f64) -> (f64, f64) {
    let (a, b) = lag_coefficients(params, w);
    (params.resistance * cv * w, a + b * cv)
}

fn lag_coefficients(params: &CircuitParams, w: f64) -> (f64, f64) {
    let CircuitParams {
        resistance: r,
        inductance: l,
        capacitance: c,
    } = *params;
    let w2 = w * w;
    let a = (1.0 - l * c * w2).powi(2) + (r * c * w).powi(2);
    let b = r * r * c * w2 - l * w2 + l * l * c * w2 * w2;
    (a, b)
}

/// Varactor capacitance at which the phase lag reaches `threshold`
/// (radians, in (0, π)).
pub fn threshold_capacitance(params: &CircuitParams, f: f64, threshold: f64) -> Result<f64> {
    let w = check_inputs(params, 0.0, f)?;
    if !(threshold > 0.0 && threshold < PI) {
        return Err(Error::Domain(format!("threshold must lie in (0, π), got {threshold}")));
    }
    let (a, b) = lag_coefficients(params, w);
    let (s, co) = threshold.sin_cos();
    let den = params.resistance * w * co - b * s;
    let cv = a * s / den;
    // the lag saturates at atan2(Rω, b); past that the threshold is unreachable
    if !(den > 0.0) || !cv.is_finite() {
        return Err(Error::NoRectifyingCapacitance { frequency: f });
    }
    Ok(cv)
}

/// Capacitance that places the knife edge (lag of π/4) at frequency `f`.
pub fn rectifying_capacitance(params: &CircuitParams, f: f64) -> Result<f64> {
    threshold_capacitance(params, f, FRAC_PI_4)
}

/// Default capacitance grid: zero followed by 200 log-spaced points over
/// 0.01–10 pF. The leading zero makes the first column the true reference.
pub fn default_capacitance_grid() -> Vec<f64> {
    let mut grid = Vec::with_capacity(201);
    grid.push(0.0);
    grid.extend(logspace(0.01e-12, 10e-12, 200));
    grid
}

/// 101 points over 1.2–1.7 GHz.
pub fn default_frequency_grid() -> Vec<f64> {
    linspace(1.2e9, 1.7e9, 101)
}

/// Phase-lag surface over the grids, each row referenced to the first
/// capacitance sample.
pub fn knife_map(params: &CircuitParams, cap_grid: &[f64], freq_grid: &[f64]) -> Result<PhaseMap> {
    if cap_grid.is_empty() || freq_grid.is_empty() {
        return Err(Error::Domain("knife map grids must be nonempty".into()));
    }
    let rows: Vec<Vec<f64>> = freq_grid
        .par_iter()
        .map(|&f| {
            let reference = phase_shift(params, cap_grid[0], f)?;
            cap_grid
                .iter()
                .map(|&cv| Ok(phase_shift(params, cv, f)? - reference))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    PhaseMap::new(cap_grid.to_vec(), freq_grid.to_vec(), rows.concat(), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults() {
        let p = CircuitParams::default();
        assert_eq!(p.resistance, 50.0);
        assert_eq!(p.inductance, 1e-7);
        assert_eq!(p.capacitance, 1e-13);
        assert_relative_eq!(p.resonance(), 1.591_549_430_9e9, max_relative = 1e-9);
    }

    #[test]
    fn resonance_current_is_real() {
        let p = CircuitParams::default();
        let i = dipole_current(&p, 0.0, p.resonance()).unwrap();
        assert_relative_eq!(i.re, 1.0 / 50.0, max_relative = 1e-12);
        assert!(i.im.abs() < 1e-12);
        assert!(current_phase(&p, 0.0, p.resonance()).unwrap().abs() < 1e-9);
    }

    #[test]
    fn low_frequency_limits() {
        let p = CircuitParams::default();
        assert!(dipole_current(&p, 0.0, 1.0).unwrap().norm() < 1e-12);
        let ph = current_phase(&p, 0.0, 1e6).unwrap();
        assert!((ph - PI / 2.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = CircuitParams::default();
        assert!(dipole_current(&p, -1e-12, 1e9).is_err());
        assert!(dipole_current(&p, 0.0, 0.0).is_err());
        assert!(dipole_current(&p, f64::NAN, 1e9).is_err());
        assert!(CircuitParams::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_varactor_gives_zero_shift() {
        let p = CircuitParams::default();
        for f in [1.2e9, 1.5e9, 1.7e9] {
            assert_eq!(phase_shift(&p, 0.0, f).unwrap(), 0.0);
        }
    }

    #[test]
    fn threshold_unreachable_reports_absence() {
        let p = CircuitParams::default();
        // above the divergence of the π/4 edge there is no solution
        assert!(matches!(
            rectifying_capacitance(&p, 1.7e9),
            Err(Error::NoRectifyingCapacitance { .. })
        ));
        assert!(threshold_capacitance(&p, 1.5e9, 0.0).is_err());
        assert!(threshold_capacitance(&p, 1.5e9, PI).is_err());
    }

    #[test]
    fn one_by_one_map() {
        let m = knife_map(&CircuitParams::default(), &[0.0], &[1.5e9]).unwrap();
        assert_eq!(m.value(0, 0), 0.0);
    }
}
