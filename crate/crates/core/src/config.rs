//! Flat key-value run configuration (TOML syntax, no tables).
//!
//! Every key is optional. Targets are described by parallel arrays indexed
//! by target; `target_range` fixes the count and the other `target_*` arrays
//! are either empty (per-target default) or the same length.
//!
//! ```toml
//! map_kind = "experiment"        # dipole | surface | experiment
//! carriers = [1.5e9]
//! target_range = [3.0]
//! target_velocity = [-0.03]
//! target_coating = ["cancel"]    # none | cancel | fixed | spoof
//! seed = 7
//! ```

use crate::circuit_model::{self, CircuitParams};
use crate::cloak::{default_sweep_frequencies, default_sweep_velocities, CloakDesign, CloakPlan};
use crate::dsp::{Processing, Window};
use crate::interp::linspace;
use crate::metasurface::{self, Flatness, SurfaceParams};
use crate::modulation::VaractorCurve;
use crate::phase_map::PhaseMap;
use crate::scene::{RadarConfig, Scene, Target};
use crate::{Error, Result, SPEED_OF_LIGHT};
use serde::Deserialize;
use std::f64::consts::FRAC_PI_4;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    /// Single varactor-loaded dipole.
    Dipole,
    /// Array surrogate on the default 6 mm slab.
    Surface,
    /// Array surrogate on the slab giving a 330° span at 1.5 GHz.
    Experiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoatingKind {
    None,
    /// Drive at the frequency that nulls the target's Doppler.
    Cancel,
    /// Drive at `target_fm`.
    Fixed,
    /// Drive so the target appears at `target_apparent_velocity`.
    Spoof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlatnessKind {
    /// `flatness_fraction` of the varactor's capacitance range.
    Varactor,
    /// `flatness_fraction` of the row's own threshold capacitance.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub map_kind: MapKind,
    pub dipole_resistance: f64,
    pub dipole_inductance: f64,
    pub dipole_capacitance: f64,
    pub substrate_thickness: Option<f64>,
    pub relative_permittivity: Option<f64>,
    pub sheet_resistance: Option<f64>,
    pub sheet_inductance: Option<f64>,
    pub sheet_capacitance: Option<f64>,
    pub cap_min: Option<f64>,
    pub cap_max: Option<f64>,
    pub cap_points: Option<usize>,
    pub freq_min: f64,
    pub freq_max: f64,
    pub freq_points: usize,
    /// Phase defining the knife edge, rad.
    pub threshold: f64,
    pub flatness: FlatnessKind,
    pub flatness_fraction: f64,

    pub varactor_c_min: f64,
    pub varactor_c_max: f64,
    pub varactor_v_min: f64,
    pub varactor_v_max: f64,
    pub varactor_junction_potential: f64,
    pub amplitude_ripple: bool,
    /// Carrier the bias waveform is calibrated at; first carrier if unset.
    pub design_carrier: Option<f64>,

    pub band_min: f64,
    pub band_max: f64,
    pub carriers: Vec<f64>,
    pub slow_time_interval: f64,
    pub num_pulses: usize,
    pub snr_db: Option<f64>,

    pub target_range: Vec<f64>,
    pub target_velocity: Vec<f64>,
    pub target_reflectivity: Vec<f64>,
    pub target_coating: Vec<CoatingKind>,
    pub target_fm: Vec<f64>,
    pub target_apparent_velocity: Vec<f64>,
    pub clutter: Vec<f64>,
    pub seed: u64,

    pub fft_size: usize,
    pub window: String,
    pub mti: bool,
    pub expected_doppler: Option<f64>,

    pub sweep_velocities: Vec<f64>,
    pub sweep_frequencies: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let circuit = CircuitParams::default();
        let radar = RadarConfig::default();
        let processing = Processing::default();
        Self {
            map_kind: MapKind::Experiment,
            dipole_resistance: circuit.resistance,
            dipole_inductance: circuit.inductance,
            dipole_capacitance: circuit.capacitance,
            substrate_thickness: None,
            relative_permittivity: None,
            sheet_resistance: None,
            sheet_inductance: None,
            sheet_capacitance: None,
            cap_min: None,
            cap_max: None,
            cap_points: None,
            freq_min: 1.2e9,
            freq_max: 1.7e9,
            freq_points: 101,
            threshold: FRAC_PI_4,
            flatness: FlatnessKind::Varactor,
            flatness_fraction: 0.05,
            varactor_c_min: 0.6e-12,
            varactor_c_max: 2.6e-12,
            varactor_v_min: 0.0,
            varactor_v_max: 30.0,
            varactor_junction_potential: 0.77,
            amplitude_ripple: true,
            design_carrier: None,
            band_min: radar.band.0,
            band_max: radar.band.1,
            carriers: radar.carriers,
            slow_time_interval: radar.slow_time_interval,
            num_pulses: radar.num_pulses,
            snr_db: None,
            target_range: vec![3.0],
            target_velocity: vec![-0.03],
            target_reflectivity: Vec::new(),
            target_coating: Vec::new(),
            target_fm: Vec::new(),
            target_apparent_velocity: Vec::new(),
            clutter: Vec::new(),
            seed: 2024,
            fft_size: processing.fft_size,
            window: "rect".into(),
            mti: false,
            expected_doppler: None,
            sweep_velocities: default_sweep_velocities(),
            sweep_frequencies: default_sweep_frequencies(),
        }
    }
}

/// 1-based line on which `key` is assigned, or 0 if it is not present.
fn key_line(text: &str, key: &str) -> usize {
    text.lines()
        .position(|line| {
            line.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

fn byte_line(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        std::io::Read::read_to_string(&mut crate::error::open(path)?, &mut text)?;
        Self::parse(&text)
    }

    /// Parses and validates; every error carries the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map_or(0, |s| byte_line(text, s.start)),
            message: e.message().to_string(),
        })?;
        config.validate().map_err(|(key, message)| Error::Config {
            line: key_line(text, key),
            message: format!("{key}: {message}"),
        })?;
        Ok(config)
    }

    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let n = self.target_range.len();
        let parallel: [(&'static str, usize); 5] = [
            ("target_velocity", self.target_velocity.len()),
            ("target_reflectivity", self.target_reflectivity.len()),
            ("target_coating", self.target_coating.len()),
            ("target_fm", self.target_fm.len()),
            ("target_apparent_velocity", self.target_apparent_velocity.len()),
        ];
        for (key, len) in parallel {
            if len != 0 && len != n {
                return Err((key, format!("has {len} entries but target_range has {n}")));
            }
        }
        for (i, kind) in self.coatings().iter().enumerate() {
            let missing = match kind {
                CoatingKind::Fixed => self.target_fm.is_empty().then_some("target_fm"),
                CoatingKind::Spoof => self
                    .target_apparent_velocity
                    .is_empty()
                    .then_some("target_apparent_velocity"),
                _ => None,
            };
            if let Some(key) = missing {
                return Err(("target_coating", format!("target {i} needs {key}")));
            }
        }
        self.window.parse::<Window>().map_err(|e| ("window", e.to_string()))?;
        if self.fft_size == 0 {
            return Err(("fft_size", "must be positive".into()));
        }
        if self.freq_points < 2 || !(self.freq_min < self.freq_max) {
            return Err(("freq_points", "need at least 2 points on an increasing axis".into()));
        }
        if self.cap_points.is_some_and(|p| p < 2) {
            return Err(("cap_points", "need at least 2 points".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < std::f64::consts::PI) {
            return Err(("threshold", "must lie in (0, π)".into()));
        }
        if !(self.flatness_fraction > 0.0) {
            return Err(("flatness_fraction", "must be positive".into()));
        }
        self.circuit().map_err(|e| ("dipole_resistance", e.to_string()))?;
        if let Some(s) = self.surface() {
            s.validate().map_err(|e| ("substrate_thickness", e.to_string()))?;
        }
        self.varactor().map_err(|e| ("varactor_c_min", e.to_string()))?;
        self.radar().validate().map_err(|e| ("carriers", e.to_string()))?;
        if let Some(f) = self.design_carrier {
            if !(f >= self.freq_min && f <= self.freq_max) {
                return Err(("design_carrier", "must lie on the map's frequency axis".into()));
            }
        }
        Ok(())
    }

    fn coatings(&self) -> Vec<CoatingKind> {
        if self.target_coating.is_empty() {
            vec![CoatingKind::None; self.target_range.len()]
        } else {
            self.target_coating.clone()
        }
    }

    /// Radial velocity of target `i`; stationary when `target_velocity` is empty.
    fn velocity(&self, i: usize) -> f64 {
        self.target_velocity.get(i).copied().unwrap_or(0.0)
    }

    pub fn circuit(&self) -> Result<CircuitParams> {
        CircuitParams::new(self.dipole_resistance, self.dipole_inductance, self.dipole_capacitance)
    }

    /// Surface parameters with overrides applied; `None` for a dipole map.
    pub fn surface(&self) -> Option<SurfaceParams> {
        let base = match self.map_kind {
            MapKind::Dipole => return None,
            MapKind::Surface => SurfaceParams::default(),
            MapKind::Experiment => SurfaceParams::experiment(),
        };
        Some(SurfaceParams {
            substrate_thickness: self.substrate_thickness.unwrap_or(base.substrate_thickness),
            relative_permittivity: self.relative_permittivity.unwrap_or(base.relative_permittivity),
            sheet_resistance: self.sheet_resistance.unwrap_or(base.sheet_resistance),
            sheet_inductance: self.sheet_inductance.unwrap_or(base.sheet_inductance),
            sheet_capacitance: self.sheet_capacitance.unwrap_or(base.sheet_capacitance),
            ..base
        })
    }

    pub fn varactor(&self) -> Result<VaractorCurve> {
        VaractorCurve::through_endpoints(
            self.varactor_c_max,
            self.varactor_c_min,
            self.varactor_v_min,
            self.varactor_v_max,
            self.varactor_junction_potential,
        )
    }

    pub fn capacitance_grid(&self) -> Vec<f64> {
        if self.cap_min.is_none() && self.cap_max.is_none() && self.cap_points.is_none() {
            return match self.map_kind {
                MapKind::Dipole => circuit_model::default_capacitance_grid(),
                _ => metasurface::default_capacitance_grid(),
            };
        }
        let (lo, hi) = match self.map_kind {
            MapKind::Dipole => (0.0, 10e-12),
            _ => (0.6e-12, 2.6e-12),
        };
        linspace(
            self.cap_min.unwrap_or(lo),
            self.cap_max.unwrap_or(hi),
            self.cap_points.unwrap_or(201),
        )
    }

    pub fn frequency_grid(&self) -> Vec<f64> {
        linspace(self.freq_min, self.freq_max, self.freq_points)
    }

    pub fn phase_map(&self) -> Result<PhaseMap> {
        let caps = self.capacitance_grid();
        let freqs = self.frequency_grid();
        match self.surface() {
            Some(surface) => metasurface::surface_phase_map(&surface, &caps, &freqs),
            None => circuit_model::knife_map(&self.circuit()?, &caps, &freqs),
        }
    }

    pub fn flatness(&self) -> Flatness {
        match self.flatness {
            FlatnessKind::Varactor => {
                Flatness::Absolute(self.flatness_fraction * (self.varactor_c_max - self.varactor_c_min))
            }
            FlatnessKind::Relative => Flatness::Relative(self.flatness_fraction),
        }
    }

    pub fn radar(&self) -> RadarConfig {
        RadarConfig {
            band: (self.band_min, self.band_max),
            carriers: self.carriers.clone(),
            slow_time_interval: self.slow_time_interval,
            num_pulses: self.num_pulses,
            snr_db: self.snr_db,
            speed_of_light: SPEED_OF_LIGHT,
        }
    }

    /// Processing chain; `force_mti` switches the canceller on regardless of
    /// the `mti` key.
    pub fn processing(&self, force_mti: bool) -> Result<Processing> {
        Ok(Processing {
            fft_size: self.fft_size,
            window: self.window.parse()?,
            mti: self.mti || force_mti,
            expected_doppler: self.expected_doppler,
        })
    }

    pub fn design_carrier(&self) -> f64 {
        self.design_carrier.unwrap_or(self.carriers[0])
    }

    /// Builds the phase map and calibrates the varactor at the design carrier.
    pub fn design(&self) -> Result<CloakDesign> {
        let mut design = CloakDesign::new(self.phase_map()?, self.varactor()?, self.design_carrier())?;
        design.amplitude_ripple = self.amplitude_ripple;
        Ok(design)
    }

    /// Modulation plan per target; `None` for bare targets.
    pub fn plans(&self, design: &CloakDesign) -> Result<Vec<Option<CloakPlan>>> {
        let carrier = design.carrier();
        let span = design.span();
        self.coatings()
            .iter()
            .enumerate()
            .map(|(i, kind)| {
                let v = self.velocity(i);
                match kind {
                    CoatingKind::None => Ok(None),
                    CoatingKind::Cancel => CloakPlan::cancel(v, carrier, span).map(Some),
                    CoatingKind::Fixed => CloakPlan::with_frequency(v, carrier, span, self.target_fm[i]).map(Some),
                    CoatingKind::Spoof => {
                        CloakPlan::spoof(v, self.target_apparent_velocity[i], carrier, span).map(Some)
                    }
                }
            })
            .collect()
    }

    /// Scene with targets bare; pair with [`RunConfig::coated_scene`] or
    /// `cloak::evaluate_concealment`.
    pub fn bare_scene(&self) -> Scene {
        let targets = (0..self.target_range.len())
            .map(|i| {
                Target::new(
                    self.target_range[i],
                    self.velocity(i),
                    self.target_reflectivity.get(i).copied().unwrap_or(1.0),
                )
            })
            .collect();
        Scene {
            radar: self.radar(),
            targets,
            clutter: self.clutter.clone(),
            seed: self.seed,
        }
    }

    /// Scene with each planned target wearing its coating.
    pub fn coated_scene(&self, design: &CloakDesign, plans: &[Option<CloakPlan>]) -> Result<Scene> {
        let mut scene = self.bare_scene();
        let duration = scene.radar.observation_time();
        for (target, plan) in scene.targets.iter_mut().zip(plans) {
            if let Some(plan) = plan {
                target.coating = Some(design.coating(plan.modulation_frequency, duration, self.slow_time_interval)?);
            }
        }
        Ok(scene)
    }
}
