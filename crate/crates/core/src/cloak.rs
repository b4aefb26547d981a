//! Modulation planning and end-to-end concealment evaluation.
//!
//! A target's two-way phase advances at `−4π f_c v / c` rad/s and a sawtooth
//! of span Δφ at frequency `f_m` adds `f_m Δφ` rad/s. Choosing
//! `f_m = 4π f_c v / (c Δφ)` cancels the two, so the radar sees a static
//! scatterer that its canceller removes.

use crate::dsp::{doppler_for_velocity, magnitude_db, process, DopplerReport, Processing};
use crate::error::ensure_finite;
use crate::interp::linspace;
use crate::modulation::{calibrate, waveform, Calibration, VaractorCurve};
use crate::phase_map::{format_cell, PhaseMap};
use crate::scene::{Coating, Scene, Target};
use crate::{Error, Result, SPEED_OF_LIGHT};
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::sync::Arc;

fn check_span(span: f64) -> Result<()> {
    ensure_finite("phase span", span)?;
    if span <= 0.0 {
        return Err(Error::Domain(format!("phase span must be > 0, got {span}")));
    }
    Ok(())
}

/// Modulation frequency whose sawtooth negates the Doppler phase rate.
pub fn cancellation_frequency(velocity: f64, carrier: f64, span: f64) -> Result<f64> {
    spoof_frequency(velocity, 0.0, carrier, span)
}

/// Modulation frequency that makes a target moving at `v_true` appear to
/// move at `v_apparent`.
pub fn spoof_frequency(v_true: f64, v_apparent: f64, carrier: f64, span: f64) -> Result<f64> {
    check_span(span)?;
    ensure_finite("velocity", v_true)?;
    ensure_finite("apparent velocity", v_apparent)?;
    ensure_finite("carrier", carrier)?;
    Ok(4.0 * PI * carrier * (v_true - v_apparent) / (SPEED_OF_LIGHT * span))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloakPlan {
    pub velocity: f64,
    pub carrier: f64,
    pub phase_span: f64,
    pub modulation_frequency: f64,
    /// `|f_D + f_m Δφ / 2π|`, Hz.
    pub predicted_residual: f64,
}

impl CloakPlan {
    pub fn cancel(velocity: f64, carrier: f64, span: f64) -> Result<Self> {
        Self::with_frequency(
            velocity,
            carrier,
            span,
            cancellation_frequency(velocity, carrier, span)?,
        )
    }

    pub fn spoof(v_true: f64, v_apparent: f64, carrier: f64, span: f64) -> Result<Self> {
        Self::with_frequency(
            v_true,
            carrier,
            span,
            spoof_frequency(v_true, v_apparent, carrier, span)?,
        )
    }

    /// Plan for an explicitly chosen modulation frequency.
    pub fn with_frequency(velocity: f64, carrier: f64, span: f64, f_m: f64) -> Result<Self> {
        check_span(span)?;
        ensure_finite("modulation frequency", f_m)?;
        Ok(Self {
            velocity,
            carrier,
            phase_span: span,
            modulation_frequency: f_m,
            predicted_residual: (doppler_for_velocity(velocity, carrier) + f_m * span / TAU).abs(),
        })
    }

    pub fn to_text(&self) -> String {
        format!(
            "v_mps={}\ncarrier_Hz={}\nphase_span_rad={}\nf_m_Hz={}\npredicted_residual_Hz={}\n",
            format_cell(self.velocity),
            format_cell(self.carrier),
            format_cell(self.phase_span),
            format_cell(self.modulation_frequency),
            format_cell(self.predicted_residual),
        )
    }
}

/// A phase map, the varactor that drives it and the calibration at one
/// carrier.
#[derive(Debug, Clone)]
pub struct CloakDesign {
    pub map: Arc<PhaseMap>,
    pub varactor: VaractorCurve,
    pub calibration: Arc<Calibration>,
    pub amplitude_ripple: bool,
}

impl CloakDesign {
    pub fn new(map: PhaseMap, varactor: VaractorCurve, carrier: f64) -> Result<Self> {
        let calibration = calibrate(&map, &varactor, carrier)?;
        Ok(Self {
            map: Arc::new(map),
            varactor,
            calibration: Arc::new(calibration),
            amplitude_ripple: true,
        })
    }

    /// Calibrated phase span at the design carrier.
    pub fn span(&self) -> f64 {
        self.calibration.span()
    }

    pub fn carrier(&self) -> f64 {
        self.calibration.carrier()
    }

    /// Coating driven at `f_m`, sampled fast enough for a radar sweeping
    /// every `interval` and long enough for `duration`.
    pub fn coating(&self, f_m: f64, duration: f64, interval: f64) -> Result<Coating> {
        let rate = (1.0 / interval).max(20.0 * f_m.abs());
        let wf = waveform(&self.calibration, f_m, duration, rate)?;
        Ok(Coating {
            map: Arc::clone(&self.map),
            varactor: self.varactor,
            waveform: Arc::new(wf),
            amplitude_ripple: self.amplitude_ripple,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ConcealmentReport {
    pub plan: CloakPlan,
    /// Full-rate spectra without the canceller.
    pub uncloaked_pre: DopplerReport,
    pub cloaked_pre: DopplerReport,
    /// Decimated spectra after the canceller.
    pub uncloaked_post: DopplerReport,
    pub cloaked_post: DopplerReport,
    /// One FFT bin of the full-rate spectrum, m/s.
    pub velocity_bin: f64,
    /// Uncloaked over cloaked post-canceller peak, dB.
    pub attenuation_db: f64,
}

impl ConcealmentReport {
    /// Velocity the radar reports for the cloaked target.
    pub fn residual_velocity(&self) -> Option<f64> {
        self.cloaked_pre.estimated_velocity
    }

    pub fn to_text(&self) -> String {
        let v = |r: &DopplerReport| r.estimated_velocity.map_or_else(|| "none".to_string(), format_cell);
        let mut s = self.plan.to_text();
        s.push_str(&format!(
            "v_hat_uncloaked_mps={}\nv_hat_cloaked_mps={}\nvelocity_bin_mps={}\ndecimation={}\npost_mti_uncloaked_dB={}\npost_mti_cloaked_dB={}\nattenuation_dB={}\n",
            v(&self.uncloaked_pre),
            v(&self.cloaked_pre),
            format_cell(self.velocity_bin),
            self.cloaked_post.decimation,
            format_cell(magnitude_db(self.uncloaked_post.peak_magnitude)),
            format_cell(magnitude_db(self.cloaked_post.peak_magnitude)),
            format_cell(self.attenuation_db),
        ));
        if let Some(a) = self.cloaked_post.attenuation_at_truth {
            s.push_str(&format!("attenuation_at_truth_dB={}\n", format_cell(a)));
        }
        s
    }
}

/// Simulates `scene` twice, with target `target` bare and coated per
/// `plan`, and runs both through the victim radar.
///
/// The canceller path decimates for `processing.expected_doppler`, or for the
/// target's true Doppler when none is given; a static target is not
/// decimated.
pub fn evaluate_concealment(
    scene: &Scene,
    target: usize,
    design: &CloakDesign,
    plan: &CloakPlan,
    processing: &Processing,
) -> Result<ConcealmentReport> {
    let bare = scene
        .targets
        .get(target)
        .ok_or_else(|| Error::Domain(format!("scene has no target {target}")))?;
    let interval = scene.radar.slow_time_interval;
    let coating = design.coating(plan.modulation_frequency, scene.radar.observation_time(), interval)?;
    let mut cloaked_scene = scene.clone();
    cloaked_scene.targets[target] = Target {
        coating: Some(coating),
        ..bare.clone()
    };
    let mut uncloaked_scene = scene.clone();
    uncloaked_scene.targets[target].coating = None;

    let (uncloaked, cloaked) = rayon::join(
        || uncloaked_scene.simulate_carrier(plan.carrier),
        || cloaked_scene.simulate_carrier(plan.carrier),
    );
    let (uncloaked, cloaked) = (uncloaked?, cloaked?);

    let true_doppler = doppler_for_velocity(bare.radial_velocity, plan.carrier);
    let pre = Processing {
        mti: false,
        expected_doppler: None,
        ..*processing
    };
    let expected = processing
        .expected_doppler
        .or((true_doppler != 0.0).then_some(true_doppler.abs()));
    let post = Processing {
        mti: true,
        expected_doppler: expected,
        ..*processing
    };
    let uncloaked_pre = process(&uncloaked.samples, interval, plan.carrier, &pre)?;
    let cloaked_pre = process(&cloaked.samples, interval, plan.carrier, &pre)?;
    let uncloaked_post = process(&uncloaked.samples, interval, plan.carrier, &post)?;
    let mut cloaked_post = process(&cloaked.samples, interval, plan.carrier, &post)?;

    let bin_at = |r: &DopplerReport| {
        let df = r.frequency_axis[1] - r.frequency_axis[0];
        let n = r.frequency_axis.len() as f64;
        let k = (true_doppler / df).round().rem_euclid(n) as usize;
        r.spectrum_magnitude[(k + r.frequency_axis.len() / 2) % r.frequency_axis.len()]
    };
    cloaked_post.attenuation_at_truth =
        Some(magnitude_db(bin_at(&uncloaked_post)) - magnitude_db(bin_at(&cloaked_post)));
    let attenuation_db = magnitude_db(uncloaked_post.peak_magnitude) - magnitude_db(cloaked_post.peak_magnitude);
    Ok(ConcealmentReport {
        plan: *plan,
        velocity_bin: uncloaked_pre.velocity_bin(),
        uncloaked_pre,
        cloaked_pre,
        uncloaked_post,
        cloaked_post,
        attenuation_db,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub modulation_frequency: f64,
    pub true_velocity: f64,
    pub estimated_velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit("a line fit needs at least two paired samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub carrier: f64,
    pub phase_span: f64,
    pub velocity_bin: f64,
    pub points: Vec<SweepPoint>,
    /// One fit of v̂ against f_m per true velocity.
    pub fits: Vec<(f64, LineFit)>,
    /// Slope shared by all velocities (per-velocity intercepts), m/s per Hz.
    pub common_slope: f64,
    /// Line `v = k · f_m` through the origin fitted to the zero crossings of
    /// the per-velocity fits; `k` in m/s per Hz.
    pub invisibility_slope: f64,
}

impl SweepResult {
    /// Slope predicted by the serrodyne relation, `−c Δφ / (4π f_c)`.
    pub fn predicted_slope(&self) -> f64 {
        -SPEED_OF_LIGHT * self.phase_span / (4.0 * PI * self.carrier)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["f_m_Hz", "v_true_mps", "v_hat_mps"])?;
        for p in &self.points {
            w.write_record([
                format_cell(p.modulation_frequency),
                format_cell(p.true_velocity),
                format_cell(p.estimated_velocity),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_fits_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["line", "v_true_mps", "slope_mps_per_Hz", "intercept_mps", "r_squared"])?;
        for (v, fit) in &self.fits {
            w.write_record([
                "velocity".to_string(),
                format_cell(*v),
                format_cell(fit.slope),
                format_cell(fit.intercept),
                format_cell(fit.r_squared),
            ])?;
        }
        let empty = String::new;
        w.write_record([
            "common".to_string(),
            empty(),
            format_cell(self.common_slope),
            empty(),
            empty(),
        ])?;
        w.write_record([
            "predicted".to_string(),
            empty(),
            format_cell(self.predicted_slope()),
            empty(),
            empty(),
        ])?;
        w.write_record([
            "invisibility".to_string(),
            empty(),
            format_cell(self.invisibility_slope),
            format_cell(0.0),
            empty(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Default experiment grid: five velocities over ±0.04 m/s.
pub fn default_sweep_velocities() -> Vec<f64> {
    linspace(-0.04, 0.04, 5)
}

/// Default experiment grid: 25 modulation frequencies over ±1 Hz.
pub fn default_sweep_frequencies() -> Vec<f64> {
    linspace(-1.0, 1.0, 25)
}

/// Runs every (velocity, f_m) pair through the full-rate Doppler FFT and
/// fits the resulting lines. `template` supplies range and reflectivity.
pub fn sweep(
    scene: &Scene,
    template: &Target,
    design: &CloakDesign,
    velocities: &[f64],
    modulation_frequencies: &[f64],
    processing: &Processing,
) -> Result<SweepResult> {
    let carrier = design.carrier();
    let interval = scene.radar.slow_time_interval;
    let pre = Processing {
        mti: false,
        expected_doppler: None,
        ..*processing
    };
    let pairs: Vec<(f64, f64)> = velocities
        .iter()
        .flat_map(|&v| modulation_frequencies.iter().map(move |&f| (v, f)))
        .collect();
    let points = pairs
        .par_iter()
        .map(|&(v, f_m)| {
            let coating = design.coating(f_m, scene.radar.observation_time(), interval)?;
            let mut run = scene.clone();
            run.targets = vec![Target {
                radial_velocity: v,
                coating: Some(coating),
                ..template.clone()
            }];
            let train = run.simulate_carrier(carrier)?;
            let report = process(&train.samples, interval, carrier, &pre)?;
            Ok(SweepPoint {
                modulation_frequency: f_m,
                true_velocity: v,
                estimated_velocity: report.estimated_velocity.ok_or(Error::NoDetection)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut fits = Vec::with_capacity(velocities.len());
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &v in velocities {
        let (x, y): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.true_velocity == v)
            .map(|p| (p.modulation_frequency, p.estimated_velocity))
            .unzip();
        let fit = fit_line(&x, &y)?;
        let mx = x.iter().sum::<f64>() / x.len() as f64;
        let my = y.iter().sum::<f64>() / y.len() as f64;
        sxy += x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>();
        sxx += x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        fits.push((v, fit));
    }
    let common_slope = sxy / sxx;

    // v̂ = 0 where each fitted line crosses zero
    let (mut num, mut den) = (0.0, 0.0);
    for (v, fit) in &fits {
        let crossing = -fit.intercept / fit.slope;
        num += v * crossing;
        den += crossing * crossing;
    }
    let invisibility_slope = if den > 0.0 { num / den } else { f64::NAN };

    let bin = SPEED_OF_LIGHT / (2.0 * carrier * processing.fft_size.max(scene.radar.num_pulses) as f64 * interval);
    Ok(SweepResult {
        carrier,
        phase_span: design.span(),
        velocity_bin: bin,
        points,
        fits,
        common_slope,
        invisibility_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cancellation_arithmetic() {
        let f = cancellation_frequency(0.03, 1.5e9, 330f64.to_radians()).unwrap();
        assert_relative_eq!(
            f,
            4.0 * PI * 0.03 * 1.5e9 / 2.998e8 / 330f64.to_radians(),
            max_relative = 1e-15
        );
        assert_eq!(cancellation_frequency(0.0, 1.5e9, 1.0).unwrap(), 0.0);
        assert!(cancellation_frequency(0.03, 1.5e9, 0.0).is_err());
        // a full-cycle span moves the line by exactly f_m
        let f = cancellation_frequency(-0.03, 1.5e9, TAU).unwrap();
        assert_relative_eq!(f, -doppler_for_velocity(-0.03, 1.5e9), max_relative = 1e-12);
    }

    #[test]
    fn spoof_reduces_to_cancel() {
        let a = spoof_frequency(-0.02, 0.0, 1.4e9, 5.0).unwrap();
        let b = cancellation_frequency(-0.02, 1.4e9, 5.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(spoof_frequency(0.01, 0.01, 1.4e9, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn planned_residual_is_zero() {
        let p = CloakPlan::cancel(-0.03, 1.5e9, 5.7596).unwrap();
        assert!(p.predicted_residual < 1e-15);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let fit = fit_line(&x, &y).unwrap();
        assert_relative_eq!(fit.slope, -0.5);
        assert_relative_eq!(fit.intercept, 2.0);
        assert_relative_eq!(fit.r_squared, 1.0);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }
}
