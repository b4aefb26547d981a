mod common;

use common::{experiment_design, scene_with, CARRIER};
use doppler_cloak::cloak::CloakPlan;
use doppler_cloak::dsp::{
    doppler_fft, doppler_for_velocity, downsample_for_mti, mti_response, mti_two_pulse, process, velocity_for_doppler,
    Processing, Window,
};
use doppler_cloak::interp::unwrap_in_place;
use doppler_cloak::scene::{doppler_phase, Scene, Target};
use doppler_cloak::SPEED_OF_LIGHT;
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

#[test]
fn doppler_arithmetic() {
    let f_d = doppler_for_velocity(-0.03, CARRIER);
    assert!((f_d.abs() - 2.0 * 0.03 * CARRIER / SPEED_OF_LIGHT).abs() < 1e-15);
    assert!((f_d.abs() - 0.300).abs() < 1e-3);
    let t = Target::new(3.0, -0.03, 1.0);
    let per_second = doppler_phase(&t, CARRIER, 1.0) - doppler_phase(&t, CARRIER, 0.0);
    assert!((per_second.abs() - TAU * f_d.abs()).abs() < 1e-9);
    assert!((per_second.abs() - 1.885).abs() < 2e-3);
    let still = Target::new(3.0, 0.0, 1.0);
    assert_eq!(doppler_phase(&still, CARRIER, 0.0), doppler_phase(&still, CARRIER, 7.0));
    assert!((velocity_for_doppler(0.3, CARRIER).abs() - 0.03).abs() < 1e-4);
}

#[test]
fn static_target_repeats_exactly() {
    let train = scene_with(0.0, None).simulate_carrier(CARRIER).unwrap();
    assert!(train.samples.iter().all(|&x| x == train.samples[0]));
}

#[test]
fn moving_target_phase_follows_the_range_term() {
    let scene = scene_with(-0.03, None);
    let train = scene.simulate_carrier(CARRIER).unwrap();
    let mut phase = train.phases();
    unwrap_in_place(&mut phase);
    let target = &scene.targets[0];
    let offset = phase[0] - doppler_phase(target, CARRIER, 0.0);
    for (p, &t) in phase.iter().zip(&train.timestamps) {
        assert!((p - offset - doppler_phase(target, CARRIER, t)).abs() < 1e-6);
    }
    // receding and approaching targets ramp in opposite directions
    let mut back = scene_with(0.03, None).simulate_carrier(CARRIER).unwrap().phases();
    unwrap_in_place(&mut back);
    let slope = |p: &[f64]| p[p.len() - 1] - p[0];
    assert!(slope(&phase) * slope(&back) < 0.0);
}

#[test]
fn cancelled_target_phase_only_steps_at_flybacks() {
    let design = experiment_design();
    let plan = CloakPlan::cancel(-0.03, CARRIER, design.span()).unwrap();
    let mut scene = scene_with(-0.03, None);
    let duration = scene.radar.observation_time();
    scene.targets[0].coating = Some(
        design
            .coating(plan.modulation_frequency, duration, scene.radar.slow_time_interval)
            .unwrap(),
    );
    let train = scene.simulate_carrier(CARRIER).unwrap();
    let mut phase = train.phases();
    unwrap_in_place(&mut phase);
    let steps: Vec<f64> = phase.windows(2).map(|w| w[1] - w[0]).collect();
    let quiet = steps.iter().filter(|d| d.abs() < 0.01).count();
    assert!(quiet as f64 >= 0.95 * steps.len() as f64, "{quiet}/{}", steps.len());
    // each flyback leaves at most the missing part of the cycle behind
    let flybacks = (plan.modulation_frequency.abs() * duration).ceil();
    let drift = (phase[phase.len() - 1] - phase[0]).abs();
    assert!(drift <= (TAU - design.span()) * (flybacks + 1.0), "drift {drift}");
    // the bare target would have moved through far more phase
    assert!(drift < 0.25 * TAU * plan.velocity.abs() * 2.0 * CARRIER / SPEED_OF_LIGHT * duration);
}

#[test]
fn echoes_superpose() {
    let mut both = scene_with(-0.03, None);
    both.targets.push(Target::new(4.2, 0.02, 0.4));
    both.clutter = vec![];
    let single = |i: usize| {
        let mut s = both.clone();
        s.targets = vec![both.targets[i].clone()];
        s.simulate_carrier(CARRIER).unwrap().samples
    };
    let (a, b) = (single(0), single(1));
    let sum = both.simulate_carrier(CARRIER).unwrap().samples;
    for ((s, x), y) in sum.iter().zip(&a).zip(&b) {
        assert!((s - (x + y)).norm() < 1e-12);
    }
}

#[test]
fn seeded_noise_is_reproducible() {
    let noisy = |seed| Scene {
        seed,
        ..scene_with(-0.03, Some(10.0))
    };
    let a = noisy(5).simulate().unwrap();
    let b = noisy(5).simulate().unwrap();
    let c = noisy(6).simulate().unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0].samples, c[0].samples);
}

#[test]
fn canceller_special_inputs() {
    let alt: Vec<Complex64> = (0..16).map(|k| Complex64::from_polar(1.5, PI * k as f64)).collect();
    assert!(mti_two_pulse(&alt)
        .unwrap()
        .iter()
        .all(|y| (y.norm() - 3.0).abs() < 1e-12));
    for w in [0.1, 1.0, 2.5] {
        let x: Vec<Complex64> = (0..16).map(|k| Complex64::from_polar(1.0, w * k as f64)).collect();
        let y = mti_two_pulse(&x).unwrap();
        assert!(y.iter().all(|v| (v.norm() - 2.0 * (w / 2.0).sin().abs()).abs() < 1e-12));
    }
    assert_eq!(mti_response(0.0), 0.0);
    assert!((mti_response(PI) - 2.0).abs() < 1e-15);
    assert!((mti_response(PI / 2.0) - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn decimation_lifts_the_expected_doppler_into_the_passband() {
    let x = vec![Complex64::new(1.0, 0.0); 512];
    let (y, factor) = downsample_for_mti(&x, 0.3, 0.05).unwrap();
    assert_eq!(factor, 33);
    assert_eq!(y.len(), 512usize.div_ceil(33));
    let omega = TAU * 0.3 * 0.05 * factor as f64;
    assert!(mti_response(omega) >= 1.8);
    let (_, one) = downsample_for_mti(&x, 0.5 / 0.05, 0.05).unwrap();
    assert_eq!(one, 1);
}

#[test]
fn tone_on_bin_centre_peaks_there() {
    let n = 256;
    let interval = 0.05;
    let f_d = 10.0 / (n as f64 * interval);
    let x: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, TAU * f_d * k as f64 * interval))
        .collect();
    let peak = doppler_fft(&x, n, Window::Rectangular, interval)
        .unwrap()
        .peak()
        .unwrap();
    assert!((peak.frequency - f_d).abs() < 1e-9);
    let dc = doppler_fft(&vec![Complex64::new(0.3, 0.1); n], n, Window::Rectangular, interval)
        .unwrap()
        .peak()
        .unwrap();
    assert_eq!(dc.frequency, 0.0);
    assert_eq!(velocity_for_doppler(dc.frequency, CARRIER), 0.0);
}

#[test]
fn two_tones_keep_their_level_difference() {
    let n = 256;
    let tone = |bin: f64, a: f64| move |k: usize| Complex64::from_polar(a, TAU * bin * k as f64 / n as f64);
    let (t1, t2) = (tone(20.0, 1.0), tone(31.0, 0.2));
    let x: Vec<Complex64> = (0..n).map(|k| t1(k) + t2(k)).collect();
    let s = doppler_fft(&x, n, Window::Rectangular, 1.0).unwrap();
    // brute-force DFT at the two tone bins
    let dft = |bin: f64| -> f64 {
        x.iter()
            .enumerate()
            .map(|(k, v)| v * Complex64::from_polar(1.0, -TAU * bin * k as f64 / n as f64))
            .sum::<Complex64>()
            .norm()
    };
    let ratio_db = 20.0 * (dft(20.0) / dft(31.0)).log10();
    assert!((ratio_db - 14.0).abs() <= 1.0, "{ratio_db}");
    let m = s.magnitude();
    let at = |bin: usize| m[bin + n / 2];
    assert!((20.0 * (at(20) / at(31)).log10() - ratio_db).abs() < 1e-9);
}

#[test]
fn parseval_and_cascade() {
    let n = 128;
    let x: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new((0.37 * k as f64).sin(), (0.11 * (k * k) as f64).cos()))
        .collect();
    let s = doppler_fft(&x, n, Window::Rectangular, 1.0).unwrap();
    let time: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    let freq: f64 = s.bins.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
    assert!((time - freq).abs() / time < 1e-9);

    let bin = 9.0;
    let w = TAU * bin / n as f64;
    let tone: Vec<Complex64> = (0..n + 1).map(|k| Complex64::from_polar(0.7, w * k as f64)).collect();
    let y = mti_two_pulse(&tone).unwrap();
    assert_eq!(y.len(), n);
    let peak = doppler_fft(&y, n, Window::Rectangular, 1.0).unwrap().peak().unwrap();
    let expected = 0.7 * n as f64 * mti_response(w);
    assert!((peak.magnitude - expected).abs() / expected < 0.01);
}

#[test]
fn uncloaked_estimate_lands_on_truth() {
    let scene = scene_with(-0.03, None);
    let train = scene.simulate_carrier(CARRIER).unwrap();
    let report = process(
        &train.samples,
        scene.radar.slow_time_interval,
        CARRIER,
        &Processing::default(),
    )
    .unwrap();
    let v = report.estimated_velocity.unwrap();
    assert!((v + 0.03).abs() < report.velocity_bin(), "{v}");
    assert_eq!(report.spectrum_magnitude.len(), 512);
    for (f, v) in report.frequency_axis.iter().zip(&report.velocity_axis) {
        assert!((v.abs() - f.abs() * SPEED_OF_LIGHT / (2.0 * CARRIER)).abs() < 1e-12);
    }
}

#[test]
fn canceller_floors_static_scenes() {
    let mut scene = scene_with(0.0, None);
    scene.clutter = vec![2.0, -0.5];
    let train = scene.simulate_carrier(CARRIER).unwrap();
    let processing = Processing {
        mti: true,
        ..Processing::default()
    };
    let report = process(&train.samples, scene.radar.slow_time_interval, CARRIER, &processing).unwrap();
    assert!(report.spectrum_magnitude.iter().all(|&m| m == 0.0));
    assert!(report.estimated_velocity.is_none());
}
