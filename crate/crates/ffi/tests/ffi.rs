use doppler_cloak::circuit_model::{self, CircuitParams};
use doppler_cloak::cloak::cancellation_frequency;
use doppler_cloak::metasurface::default_capacitance_grid;
use doppler_cloak_ffi::*;
use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

const R: f64 = 50.0;
const L: f64 = 1e-7;
const C: f64 = 1e-13;
const CARRIER: f64 = 1.5e9;

fn last_error() -> String {
    let len = dc_last_error(ptr::null_mut(), 0);
    let mut buf = vec![0 as c_char; len.max(1)];
    dc_last_error(buf.as_mut_ptr(), buf.len());
    let bytes: Vec<u8> = buf.iter().take_while(|&&b| b != 0).map(|&b| b as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn ok(status: DcStatus) {
    assert_eq!(status, DcStatus::Ok, "{}", last_error());
}

fn experiment_map(freqs: &[f64]) -> *mut DcPhaseMap {
    let mut params = DcSurfaceParams {
        substrate_thickness: 0.0,
        relative_permittivity: 0.0,
        sheet_resistance: 0.0,
        sheet_inductance: 0.0,
        sheet_capacitance: 0.0,
    };
    ok(dc_surface_params_experiment(&mut params));
    let caps = default_capacitance_grid();
    let mut map = ptr::null_mut();
    ok(dc_phase_map_surface(
        &params,
        caps.as_ptr(),
        caps.len(),
        freqs.as_ptr(),
        freqs.len(),
        &mut map,
    ));
    map
}

#[test]
fn closed_forms_match_the_library() {
    let p = CircuitParams::new(R, L, C).unwrap();
    let mut cv = 0.0;
    ok(dc_rectifying_capacitance(R, L, C, CARRIER, &mut cv));
    assert_eq!(cv, circuit_model::rectifying_capacitance(&p, CARRIER).unwrap());
    let mut lag = 0.0;
    ok(dc_phase_shift(R, L, C, cv, CARRIER, &mut lag));
    assert!((lag - std::f64::consts::FRAC_PI_4).abs() < 1e-9);

    let mut f_m = 0.0;
    ok(dc_cancellation_frequency(-0.03, CARRIER, 5.7596, &mut f_m));
    assert_eq!(f_m, cancellation_frequency(-0.03, CARRIER, 5.7596).unwrap());
    let mut spoof = 1.0;
    ok(dc_spoof_frequency(-0.03, -0.03, CARRIER, 5.7596, &mut spoof));
    assert_eq!(spoof, 0.0);
}

#[test]
fn errors_map_to_status_codes() {
    let mut out = 0.0;
    assert_eq!(
        dc_phase_shift(-1.0, L, C, 1e-12, CARRIER, &mut out),
        DcStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        dc_rectifying_capacitance(R, L, C, 1.7e9, &mut out),
        DcStatus::NoSolution
    );
    assert_eq!(
        dc_cancellation_frequency(0.03, CARRIER, 0.0, &mut out),
        DcStatus::InvalidArgument
    );
    assert_eq!(
        dc_phase_shift(R, L, C, 1e-12, CARRIER, ptr::null_mut()),
        DcStatus::NullPointer
    );
    assert!(last_error().contains("null"));

    let missing = CString::new("/definitely/not/here.csv").unwrap();
    let mut map = ptr::null_mut();
    assert_eq!(dc_phase_map_read_csv(missing.as_ptr(), &mut map), DcStatus::Io);
    assert!(map.is_null());
    assert!(last_error().contains("/definitely/not/here.csv"));
}

#[test]
fn last_error_truncates_and_reports_length() {
    let mut out = 0.0;
    assert_eq!(
        dc_phase_shift(R, L, C, 1e-12, CARRIER, ptr::null_mut()),
        DcStatus::NullPointer
    );
    let full = dc_last_error(ptr::null_mut(), 0);
    assert!(full > 4);
    let mut small = [1 as c_char; 4];
    assert_eq!(dc_last_error(small.as_mut_ptr(), small.len()), full);
    assert_eq!(small[3], 0);
    // success leaves the previous message in place
    ok(dc_phase_shift(R, L, C, 1e-12, CARRIER, &mut out));
    assert_eq!(dc_last_error(ptr::null_mut(), 0), full);
}

#[test]
fn canceller_through_the_boundary() {
    let x: Vec<DcComplex> = (0..8)
        .map(|k| DcComplex {
            re: k as f64,
            im: -(k as f64),
        })
        .collect();
    let mut y = vec![DcComplex { re: 0.0, im: 0.0 }; 7];
    ok(dc_mti_two_pulse(x.as_ptr(), x.len(), y.as_mut_ptr()));
    assert!(y.iter().all(|v| *v == DcComplex { re: 1.0, im: -1.0 }));
    assert_eq!(
        dc_mti_two_pulse(x.as_ptr(), 1, y.as_mut_ptr()),
        DcStatus::InvalidArgument
    );
    assert_eq!(dc_mti_two_pulse(ptr::null(), 8, y.as_mut_ptr()), DcStatus::NullPointer);
}

#[test]
fn dipole_map_handle_lifecycle() {
    let caps: Vec<f64> = (0..=50).map(|i| i as f64 * 1e-13).collect();
    let freqs = [1.3e9, 1.5e9];
    let mut map = ptr::null_mut();
    ok(dc_phase_map_dipole(
        R,
        L,
        C,
        caps.as_ptr(),
        caps.len(),
        freqs.as_ptr(),
        freqs.len(),
        &mut map,
    ));
    let (mut nc, mut nf) = (0, 0);
    ok(dc_phase_map_shape(map, &mut nc, &mut nf));
    assert_eq!((nc, nf), (51, 2));

    let p = CircuitParams::default();
    let mut v = 0.0;
    ok(dc_phase_map_value(map, 1, 10, &mut v));
    assert_eq!(v, circuit_model::phase_shift(&p, caps[10], 1.5e9).unwrap());
    assert_eq!(dc_phase_map_value(map, 2, 0, &mut v), DcStatus::InvalidArgument);

    let mut edge = 0.0;
    ok(dc_phase_map_threshold(
        map,
        1.5e9,
        std::f64::consts::FRAC_PI_4,
        &mut edge,
    ));
    let exact = circuit_model::rectifying_capacitance(&p, 1.5e9).unwrap();
    assert!((edge - exact).abs() <= 1e-13, "{edge} vs {exact}");

    dc_phase_map_free(map);
    dc_phase_map_free(ptr::null_mut());
}

#[test]
fn rectified_map_survives_a_csv_round_trip() {
    let freqs: Vec<f64> = (0..=20).map(|i| 1.2e9 + i as f64 * 2.5e7).collect();
    let map = experiment_map(&freqs);
    let mut offsets = vec![f64::NAN; freqs.len()];
    let mut rectified = ptr::null_mut();
    ok(dc_phase_map_rectify(
        map,
        std::f64::consts::FRAC_PI_4,
        offsets.as_mut_ptr(),
        &mut rectified,
    ));
    assert!(offsets.iter().all(|c| c.is_finite()));

    let (mut before, mut after) = (0.0, 0.0);
    ok(dc_phase_map_bandwidth(
        map,
        0.1e-12,
        std::f64::consts::FRAC_PI_4,
        &mut before,
    ));
    ok(dc_phase_map_bandwidth(
        rectified,
        0.1e-12,
        std::f64::consts::FRAC_PI_4,
        &mut after,
    ));
    assert!(after >= before && after > 0.0, "{before} -> {after}");
    assert_eq!(
        dc_phase_map_bandwidth(map, -1.0, 0.5, &mut after),
        DcStatus::InvalidArgument
    );

    let dir = tempfile::tempdir().unwrap();
    let file = CString::new(dir.path().join("rect.csv").to_str().unwrap()).unwrap();
    ok(dc_phase_map_write_csv(rectified, file.as_ptr()));
    let mut back = ptr::null_mut();
    ok(dc_phase_map_read_csv(file.as_ptr(), &mut back));
    let (mut a, mut b) = (0.0, 0.0);
    ok(dc_phase_map_value(rectified, 7, 33, &mut a));
    ok(dc_phase_map_value(back, 7, 33, &mut b));
    assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-300));

    for m in [map, rectified, back] {
        dc_phase_map_free(m);
    }
}

#[test]
fn cloak_conceals_and_spoofs() {
    let map = experiment_map(&[1.4e9, 1.5e9, 1.6e9]);
    let mut cloak = ptr::null_mut();
    ok(dc_cloak_new(map, CARRIER, &mut cloak));
    dc_phase_map_free(map);
    let mut span = 0.0;
    ok(dc_cloak_span(cloak, &mut span));
    assert!((span.to_degrees() - 330.0).abs() < 1.0, "{}", span.to_degrees());

    let mut hidden = DcConcealment {
        modulation_frequency: 0.0,
        velocity_uncloaked: 0.0,
        velocity_cloaked: 0.0,
        velocity_bin: 0.0,
        attenuation_db: 0.0,
    };
    ok(dc_cloak_evaluate(cloak, -0.03, f64::NAN, f64::NAN, 2024, &mut hidden));
    assert_eq!(
        hidden.modulation_frequency,
        cancellation_frequency(-0.03, CARRIER, span).unwrap()
    );
    assert!((hidden.velocity_uncloaked + 0.03).abs() < hidden.velocity_bin);
    assert!(hidden.velocity_cloaked.abs() < hidden.velocity_bin);
    assert!(hidden.attenuation_db > 10.0);

    let mut same = hidden;
    ok(dc_cloak_evaluate(cloak, -0.03, f64::NAN, 20.0, 7, &mut same));
    let mut again = hidden;
    ok(dc_cloak_evaluate(cloak, -0.03, f64::NAN, 20.0, 7, &mut again));
    assert_eq!(same, again);

    let mut fixed = hidden;
    ok(dc_cloak_evaluate(cloak, -0.03, 0.5, f64::NAN, 2024, &mut fixed));
    assert_eq!(fixed.modulation_frequency, 0.5);
    assert_ne!(fixed.velocity_cloaked, hidden.velocity_cloaked);

    assert_eq!(
        dc_cloak_evaluate(ptr::null(), 0.0, 0.0, f64::NAN, 1, &mut fixed),
        DcStatus::NullPointer
    );
    dc_cloak_free(cloak);
}

#[test]
fn cloak_requires_a_covering_map() {
    let caps = [0.0, 1e-13, 2e-13];
    let freqs = [CARRIER];
    let mut map = ptr::null_mut();
    ok(dc_phase_map_dipole(
        R,
        L,
        C,
        caps.as_ptr(),
        caps.len(),
        freqs.as_ptr(),
        1,
        &mut map,
    ));
    let mut cloak = ptr::null_mut();
    // a 0–0.2 pF map cannot be extended over the 0.6–2.6 pF varactor range
    assert_eq!(dc_cloak_new(map, CARRIER, &mut cloak), DcStatus::Calibration);
    assert!(cloak.is_null());
    let unsorted = [1e-13, 0.0];
    let mut bad = ptr::null_mut();
    assert_eq!(
        dc_phase_map_dipole(R, L, C, unsorted.as_ptr(), 2, freqs.as_ptr(), 1, &mut bad),
        DcStatus::InvalidArgument
    );
    dc_phase_map_free(map);
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|deps| deps.parent()).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(crate_dir.join("include/doppler_cloak.h")).unwrap();
    for name in [
        "DC_STATUS_NO_SOLUTION",
        "dc_cloak_evaluate",
        "typedef struct DcPhaseMap DcPhaseMap",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let lib_dir = target_dir();
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping link check");
        return;
    };
    assert!(cc.status.success());
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let build = Command::new("cc")
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .args(["-ldoppler_cloak_ffi", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&exe).env("LD_LIBRARY_PATH", &lib_dir).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("smoke ok"));
}
