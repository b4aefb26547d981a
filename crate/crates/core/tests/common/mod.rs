#![allow(dead_code)]

use doppler_cloak::circuit_model::default_frequency_grid;
use doppler_cloak::cloak::CloakDesign;
use doppler_cloak::metasurface::{default_capacitance_grid, surface_phase_map, SurfaceParams};
use doppler_cloak::modulation::VaractorCurve;
use doppler_cloak::scene::{RadarConfig, Scene, Target};

pub const CARRIER: f64 = 1.5e9;

/// Surrogate fitted to the experiment's 330° span, calibrated at 1.5 GHz.
pub fn experiment_design() -> CloakDesign {
    let map = surface_phase_map(
        &SurfaceParams::experiment(),
        &default_capacitance_grid(),
        &default_frequency_grid(),
    )
    .unwrap();
    CloakDesign::new(map, VaractorCurve::default(), CARRIER).unwrap()
}

pub fn scene_with(velocity: f64, snr_db: Option<f64>) -> Scene {
    Scene {
        radar: RadarConfig {
            snr_db,
            ..RadarConfig::default()
        },
        targets: vec![Target::new(3.0, velocity, 1.0)],
        clutter: vec![],
        seed: 2024,
    }
}
