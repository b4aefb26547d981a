//! Varactor bias model, calibration of the bias-to-phase response and the
//! sawtooth bias waveform that imprints a linear phase ramp.

use crate::error::ensure_finite;
use crate::interp::{lerp_clamped, linspace};
use crate::phase_map::{format_cell, PhaseMap};
use crate::{Error, Result};
use std::io::Write;

/// Abrupt-junction capacitance `C(V) = C_j0 / (1 + V/V_j)^M`, clamped to
/// `[c_min, c_max]` and defined on `[v_min, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaractorCurve {
    pub zero_bias_capacitance: f64,
    pub junction_potential: f64,
    pub grading_exponent: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub c_min: f64,
    pub c_max: f64,
}

impl Default for VaractorCurve {
    /// 2.6 pF at 0 V falling to 0.6 pF at 30 V.
    fn default() -> Self {
        Self::through_endpoints(2.6e-12, 0.6e-12, 0.0, 30.0, 0.77).expect("default varactor endpoints are valid")
    }
}

impl VaractorCurve {
    /// Chooses `C_j0` and the grading exponent so the curve passes through
    /// `c_max` at `v_min` and `c_min` at `v_max`.
    pub fn through_endpoints(c_max: f64, c_min: f64, v_min: f64, v_max: f64, junction_potential: f64) -> Result<Self> {
        if !(c_min > 0.0 && c_max > c_min && v_max > v_min && junction_potential > 0.0 && v_min > -junction_potential) {
            return Err(Error::Domain(
                "varactor endpoints must satisfy 0 < c_min < c_max, v_min < v_max".into(),
            ));
        }
        let u = |v: f64| (1.0 + v / junction_potential).ln();
        let grading_exponent = (c_max / c_min).ln() / (u(v_max) - u(v_min));
        let zero_bias_capacitance = c_max * (1.0 + v_min / junction_potential).powf(grading_exponent);
        let curve = Self {
            zero_bias_capacitance,
            junction_potential,
            grading_exponent,
            v_min,
            v_max,
            c_min,
            c_max,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [
            self.zero_bias_capacitance,
            self.junction_potential,
            self.grading_exponent,
            self.c_min,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
            && self.v_min.is_finite()
            && self.v_max.is_finite()
            && self.v_max > self.v_min
            && self.v_min > -self.junction_potential
            && self.c_max.is_finite()
            && self.c_max > self.c_min;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid varactor curve {self:?}")))
        }
    }

    fn voltage_tolerance(&self) -> f64 {
        1e-9 * (self.v_max - self.v_min)
    }

    pub fn capacitance(&self, v: f64) -> Result<f64> {
        ensure_finite("bias voltage", v)?;
        let tol = self.voltage_tolerance();
        if v < self.v_min - tol || v > self.v_max + tol {
            return Err(Error::Domain(format!(
                "bias {v} V outside [{}, {}] V",
                self.v_min, self.v_max
            )));
        }
        let v = v.clamp(self.v_min, self.v_max);
        let c = self.zero_bias_capacitance / (1.0 + v / self.junction_potential).powf(self.grading_exponent);
        Ok(c.clamp(self.c_min, self.c_max))
    }

    /// Bias that produces capacitance `c`, clamped to the voltage range.
    pub fn voltage_for(&self, c: f64) -> Result<f64> {
        ensure_finite("capacitance", c)?;
        if c <= 0.0 {
            return Err(Error::Domain(format!("capacitance must be > 0, got {c}")));
        }
        let v = self.junction_potential * ((self.zero_bias_capacitance / c).powf(1.0 / self.grading_exponent) - 1.0);
        Ok(v.clamp(self.v_min, self.v_max))
    }
}

/// Tabulated inverse of the bias-to-phase response on one map row.
///
/// Phase is measured from the low-capacitance end of the varactor range
/// (highest bias), so phase 0 corresponds to `v_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    carrier: f64,
    row: usize,
    capacitance: Vec<f64>,
    /// ascending
    phase: Vec<f64>,
    /// descending, paired with `phase`
    voltage: Vec<f64>,
    curve: VaractorCurve,
}

/// Sub-intervals inserted between neighbouring map samples so the table
/// follows the curvature of C(V).
const SUBDIVISIONS: usize = 8;

pub fn calibrate(map: &PhaseMap, curve: &VaractorCurve, carrier: f64) -> Result<Calibration> {
    curve.validate()?;
    let row = map.row_index(carrier)?;
    let axis = map.capacitance();

    let mut knots = vec![curve.c_min];
    knots.extend(axis.iter().copied().filter(|&c| c > curve.c_min && c < curve.c_max));
    knots.push(curve.c_max);
    let mut capacitance = Vec::with_capacity(knots.len() * SUBDIVISIONS);
    for w in knots.windows(2) {
        let seg = linspace(w[0], w[1], SUBDIVISIONS + 1);
        capacitance.extend_from_slice(&seg[..SUBDIVISIONS]);
    }
    capacitance.push(curve.c_max);

    let base = map.phase_at(row, curve.c_min);
    let phase: Vec<f64> = capacitance.iter().map(|&c| map.phase_at(row, c) - base).collect();
    for (i, w) in phase.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotone {
                from: capacitance[i],
                to: capacitance[i + 1],
            });
        }
    }
    let voltage = capacitance
        .iter()
        .map(|&c| curve.voltage_for(c))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Calibration {
        carrier,
        row,
        capacitance,
        phase,
        voltage,
        curve: *curve,
    })
}

impl Calibration {
    /// Achievable phase span at the carrier, rad.
    pub fn span(&self) -> f64 {
        self.phase[self.phase.len() - 1]
    }

    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    /// Map row used for the calibration.
    pub fn row(&self) -> usize {
        self.row
    }

    pub fn curve(&self) -> &VaractorCurve {
        &self.curve
    }

    /// Bias voltage that produces `phase` (clamped to `[0, span]`).
    pub fn voltage(&self, phase: f64) -> f64 {
        lerp_clamped(&self.phase, &self.voltage, phase)
    }

    /// Capacitance node table, ascending, paired with [`Self::phases`].
    pub fn capacitances(&self) -> &[f64] {
        &self.capacitance
    }

    pub fn phases(&self) -> &[f64] {
        &self.phase
    }

    /// Forward response: phase actually produced by `voltage` through the
    /// varactor curve and the map row, relative to phase 0.
    pub fn phase_of_voltage(&self, map: &PhaseMap, voltage: f64) -> Result<f64> {
        let c = self.curve.capacitance(voltage)?;
        Ok(map.phase_at(self.row, c) - map.phase_at(self.row, self.curve.c_min))
    }
}

/// Bias samples for a sawtooth phase ramp, with the commanded phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationWaveform {
    pub sample_times: Vec<f64>,
    pub bias_voltage: Vec<f64>,
    /// Commanded sawtooth phase at each sample, rad.
    pub induced_phase: Vec<f64>,
    /// Signed; positive means a rising phase.
    pub modulation_frequency: f64,
    pub phase_span: f64,
    pub sample_rate: f64,
}

/// Sawtooth phase at time `t`: rises from 0 to `span` for positive `f_m`,
/// falls from `span` to 0 for negative `f_m`, with an instantaneous flyback.
pub fn sawtooth_phase(f_m: f64, span: f64, t: f64) -> f64 {
    let cycles = f_m.abs() * t;
    let frac = cycles - cycles.floor();
    if f_m >= 0.0 {
        span * frac
    } else {
        span * (1.0 - frac)
    }
}

pub fn waveform(calibration: &Calibration, f_m: f64, duration: f64, sample_rate: f64) -> Result<ModulationWaveform> {
    ensure_finite("modulation frequency", f_m)?;
    ensure_finite("duration", duration)?;
    ensure_finite("sample rate", sample_rate)?;
    if sample_rate <= 0.0 {
        return Err(Error::Domain(format!("sample rate must be > 0, got {sample_rate}")));
    }
    if duration < 0.0 {
        return Err(Error::Domain(format!("duration must be >= 0, got {duration}")));
    }
    if sample_rate < 20.0 * f_m.abs() {
        return Err(Error::Domain(format!(
            "sample rate {sample_rate} Hz is below 20 × |f_m| = {} Hz",
            20.0 * f_m.abs()
        )));
    }
    let span = calibration.span();
    let n = (duration * sample_rate).ceil() as usize + 1;
    let sample_times: Vec<f64> = (0..n).map(|k| k as f64 / sample_rate).collect();
    let induced_phase: Vec<f64> = sample_times.iter().map(|&t| sawtooth_phase(f_m, span, t)).collect();
    let bias_voltage = induced_phase.iter().map(|&p| calibration.voltage(p)).collect();
    Ok(ModulationWaveform {
        sample_times,
        bias_voltage,
        induced_phase,
        modulation_frequency: f_m,
        phase_span: span,
        sample_rate,
    })
}

impl ModulationWaveform {
    /// Time covered by the samples under zero-order hold.
    pub fn coverage(&self) -> f64 {
        self.sample_times.len() as f64 / self.sample_rate
    }

    fn hold_index(&self, t: f64) -> usize {
        let k = (t * self.sample_rate + 1e-9).floor();
        (k.max(0.0) as usize).min(self.sample_times.len() - 1)
    }

    /// Bias held from the most recent sample at or before `t`.
    pub fn voltage_at(&self, t: f64) -> f64 {
        self.bias_voltage[self.hold_index(t)]
    }

    /// Frequency shift imparted by the ramp, `f_m Δφ / 2π`.
    pub fn frequency_shift(&self) -> f64 {
        self.modulation_frequency * self.phase_span / std::f64::consts::TAU
    }

    /// Whether the imparted shift exceeds the unambiguous Doppler span
    /// ±1/(2 T_s) of a radar sampling every `slow_time_interval`.
    pub fn exceeds_unambiguous_span(&self, slow_time_interval: f64) -> bool {
        self.frequency_shift().abs() > 0.5 / slow_time_interval
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t_s", "V_volts", "phase_rad"])?;
        for ((t, v), p) in self
            .sample_times
            .iter()
            .zip(&self.bias_voltage)
            .zip(&self.induced_phase)
        {
            w.write_record([format_cell(*t), format_cell(*v), format_cell(*p)])?;
        }
        w.flush()?;
        Ok(())
    }
}
