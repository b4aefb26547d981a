mod common;

use common::{experiment_design, CARRIER};
use doppler_cloak::interp::linspace;
use doppler_cloak::modulation::{calibrate, sawtooth_phase, waveform, VaractorCurve};
use doppler_cloak::Error;

#[test]
fn varactor_endpoints_and_monotonicity() {
    let v = VaractorCurve::default();
    assert!((v.capacitance(0.0).unwrap() - 2.6e-12).abs() < 1e-18);
    assert!((v.capacitance(30.0).unwrap() - 0.6e-12).abs() < 1e-18);
    let c: Vec<f64> = linspace(0.0, 30.0, 301)
        .iter()
        .map(|&x| v.capacitance(x).unwrap())
        .collect();
    assert!(c.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn calibration_endpoints_and_span() {
    let design = experiment_design();
    let cal = &design.calibration;
    assert!((cal.span() - 5.7596).abs() < 1e-3, "{}", cal.span());
    assert_eq!(cal.voltage(0.0), design.varactor.v_max);
    assert!((cal.voltage(cal.span()) - design.varactor.v_min).abs() < 1e-9);
}

#[test]
fn calibration_round_trips_through_the_forward_map() {
    let design = experiment_design();
    let cal = &design.calibration;
    for phase in linspace(0.0, cal.span(), 50) {
        let v = cal.voltage(phase);
        let back = cal.phase_of_voltage(&design.map, v).unwrap();
        assert!((back - phase).abs() < 1e-3, "{phase} -> {v} V -> {back}");
    }
}

#[test]
fn non_monotone_rows_refuse_calibration() {
    use doppler_cloak::phase_map::PhaseMap;
    let caps = linspace(0.6e-12, 2.6e-12, 5);
    let map = PhaseMap::new(caps, vec![CARRIER], vec![0.0, 1.0, 0.5, 2.0, 3.0], None).unwrap();
    assert!(matches!(
        calibrate(&map, &VaractorCurve::default(), CARRIER),
        Err(Error::NonMonotone { .. })
    ));
}

#[test]
fn unmodulated_waveform_is_constant() {
    let design = experiment_design();
    let wf = waveform(&design.calibration, 0.0, 5.0, 20.0).unwrap();
    assert!(wf.bias_voltage.iter().all(|&v| v == wf.bias_voltage[0]));
    assert!(wf.induced_phase.iter().all(|&p| p == wf.induced_phase[0]));
}

/// Total phase advanced by a sawtooth, counting each flyback as a wrap.
fn unwrapped_advance(phase: &[f64], span: f64) -> f64 {
    let mut total = 0.0;
    for w in phase.windows(2) {
        let mut d = w[1] - w[0];
        if d < -span / 2.0 {
            d += span;
        } else if d > span / 2.0 {
            d -= span;
        }
        total += d;
    }
    total
}

#[test]
fn ramp_advances_at_the_imparted_rate() {
    let design = experiment_design();
    let cal = &design.calibration;
    let up = waveform(cal, 0.33, 10.0, 100.0).unwrap();
    let down = waveform(cal, -0.33, 10.0, 100.0).unwrap();
    let span = cal.span();
    let n = up.sample_times.len();
    let duration = up.sample_times[n - 1];
    let expected = 0.33 * span * duration;
    assert!((expected - 19.0).abs() < 0.05);
    assert!((unwrapped_advance(&up.induced_phase, span) - expected).abs() < 1e-9);
    assert!((unwrapped_advance(&down.induced_phase, span) + expected).abs() < 1e-9);
    assert!((up.frequency_shift() + down.frequency_shift()).abs() < 1e-15);
}

#[test]
fn sawtooth_repeats_every_period() {
    let span = 5.7596;
    for f_m in [0.33, -0.5, 1.7] {
        let period = 1.0 / f64::abs(f_m);
        for t in linspace(0.0, 3.0, 37) {
            let d = sawtooth_phase(f_m, span, t + period) - sawtooth_phase(f_m, span, t);
            let r = d.rem_euclid(span);
            assert!(r < 1e-9 || span - r < 1e-9, "{f_m} at {t}: {d}");
        }
    }
}

#[test]
fn bias_stays_in_range_and_phase_is_linear() {
    let design = experiment_design();
    let cal = &design.calibration;
    let span = cal.span();
    let f_m = 0.33;
    let wf = waveform(cal, f_m, 10.0, 200.0).unwrap();
    let curve = design.varactor;
    assert!(wf.bias_voltage.iter().all(|&v| v >= curve.v_min && v <= curve.v_max));

    // realised phase through C(V) and the forward map, against the ideal ramp
    let row = cal.row();
    let mut sq = 0.0;
    let mut count = 0usize;
    for ((&t, &v), &ideal) in wf.sample_times.iter().zip(&wf.bias_voltage).zip(&wf.induced_phase) {
        let cycle = (f_m * t).fract();
        if !(0.02..=0.98).contains(&cycle) {
            continue; // flyback neighbourhood
        }
        let realised = design.map.phase_at(row, curve.capacitance(v).unwrap());
        sq += (realised - ideal).powi(2);
        count += 1;
    }
    let rms = (sq / count as f64).sqrt();
    assert!(rms < 0.01 * span, "rms {rms}");
}

#[test]
fn waveform_rejects_bad_rates() {
    let design = experiment_design();
    let cal = &design.calibration;
    assert!(waveform(cal, 1.0, 1.0, 10.0).is_err());
    assert!(waveform(cal, 0.1, 1.0, 0.0).is_err());
    assert!(waveform(cal, f64::NAN, 1.0, 20.0).is_err());
}
