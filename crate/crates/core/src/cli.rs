//! Batch front-end. Each subcommand reads a [`RunConfig`], writes CSV
//! artifacts into the output directory and finishes with `manifest.txt`.
//!
//! Files are written to a temporary name, checked against their expected
//! header and then renamed into place, so a failed run never leaves a
//! half-written artifact behind.

use crate::cloak::{evaluate_concealment, sweep};
use crate::config::{CoatingKind, RunConfig};
use crate::dsp::process;
use crate::error::open;
use crate::interp::unwrap_in_place;
use crate::metasurface::{rectify, threshold_capacitance, usable_bandwidth};
use crate::phase_map::{format_axis, format_cell, PhaseMap, CORNER_LABEL};
use crate::scene::{PulseTrain, Scene};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Parser)]
#[command(
    name = "doppler-cloak",
    version,
    about = "Time-modulated metasurface Doppler cloaking studies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat key-value run configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Overrides the configured RNG seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Phase-shift map over capacitance and frequency, plus its knife edge.
    Knife(CommonArgs),
    /// Dispersive-capacitor correction and bandwidth before and after.
    Rectify {
        #[command(flatten)]
        common: CommonArgs,
        /// Phase map CSV to rectify instead of the configured one.
        #[arg(long, value_name = "PATH")]
        map: Option<PathBuf>,
        /// Amplitude map matching `--map`.
        #[arg(long, value_name = "PATH", requires = "map")]
        amplitude: Option<PathBuf>,
    },
    /// Echo phase against slow time for each carrier.
    Phases(CommonArgs),
    /// Doppler spectra and concealment reports.
    Doppler {
        #[command(flatten)]
        common: CommonArgs,
        /// Apply the two-pulse canceller.
        #[arg(long)]
        mti: bool,
    },
    /// Estimated velocity over a grid of true velocities and modulation frequencies.
    Sweep(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Knife(_) => "knife",
            Command::Rectify { .. } => "rectify",
            Command::Phases(_) => "phases",
            Command::Doppler { .. } => "doppler",
            Command::Sweep(_) => "sweep",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Knife(c) | Command::Phases(c) | Command::Sweep(c) => c,
            Command::Rectify { common, .. } | Command::Doppler { common, .. } => common,
        }
    }
}

/// Record of one run, written next to its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let config = self
            .config
            .as_ref()
            .map_or_else(|| "(defaults)".to_string(), |p| p.display().to_string());
        let mut s = format!(
            "subcommand={}\nconfig={}\noutput_dir={}\nseed={}\ntimestamp={}\n",
            self.subcommand,
            config,
            self.output_dir.display(),
            self.seed,
            self.timestamp
        );
        for f in &self.files {
            s.push_str(&format!("file={f}\n"));
        }
        s
    }
}

/// Expected first row of an artifact.
#[derive(Debug, Clone, Copy)]
enum Schema {
    Columns(&'static [&'static str]),
    /// Phase or amplitude map: corner label, then frequencies.
    Map,
    Text,
}

const PULSES: Schema = Schema::Columns(&["k", "t_s", "re", "im"]);
const TRUTH: Schema = Schema::Columns(&["target", "carrier_Hz", "r0_m", "v_true_mps", "f_m_Hz"]);
const PHASES: Schema = Schema::Columns(&["k", "t_s", "phase_rad", "amplitude"]);
const WAVEFORM: Schema = Schema::Columns(&["t_s", "V_volts", "phase_rad"]);
const EDGE: Schema = Schema::Columns(&["f_Hz", "C_edge_F"]);
const C_OMEGA: Schema = Schema::Columns(&["f_Hz", "C_omega_F"]);
const SPECTRUM: Schema = Schema::Columns(&["f_Hz", "v_mps", "mag_dB"]);
const SWEEP: Schema = Schema::Columns(&["f_m_Hz", "v_true_mps", "v_hat_mps"]);
const FITS: Schema = Schema::Columns(&["line", "v_true_mps", "slope_mps_per_Hz", "intercept_mps", "r_squared"]);

/// Columns allowed without a unit suffix.
const DIMENSIONLESS: [&str; 7] = ["k", "target", "re", "im", "amplitude", "line", "r_squared"];
const UNIT_SUFFIXES: [&str; 9] = ["_Hz", "_s", "_F", "_m", "_mps", "_mps_per_Hz", "_dB", "_rad", "_volts"];

fn has_unit(column: &str) -> bool {
    DIMENSIONLESS.contains(&column) || UNIT_SUFFIXES.iter().any(|u| column.ends_with(u))
}

fn check_schema(path: &Path, name: &str, schema: Schema) -> Result<()> {
    let mismatch = |msg: String| Error::Domain(format!("schema check failed for {name}: {msg}"));
    let columns = match schema {
        Schema::Text => return Ok(()),
        Schema::Columns(c) => c,
        Schema::Map => &[CORNER_LABEL][..],
    };
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    let found: Vec<&str> = first.trim_end().split(',').collect();
    let matches = match schema {
        Schema::Map => found.len() >= 2 && found[0] == CORNER_LABEL,
        _ => found == columns,
    };
    if !matches {
        return Err(mismatch(format!("expected {columns:?}, found {found:?}")));
    }
    if let Some(bad) = columns.iter().find(|c| !has_unit(c)) {
        return Err(mismatch(format!("column {bad:?} has no unit suffix")));
    }
    Ok(())
}

/// Writes artifacts atomically into one directory and remembers their names.
struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, schema: Schema, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let result = (|| -> Result<()> {
            let mut w = BufWriter::new(File::create(&tmp)?);
            body(&mut w)?;
            w.flush()?;
            drop(w);
            check_schema(&tmp, name, schema)?;
            fs::rename(&tmp, self.dir.join(name))?;
            Ok(())
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write(name, Schema::Text, |w| Ok(w.write_all(text.as_bytes())?))
    }

    fn map(&mut self, stem: &str, map: &PhaseMap) -> Result<()> {
        self.write(&format!("{stem}.csv"), Schema::Map, |w| map.write_csv(w))?;
        if map.has_amplitude() {
            self.write(&format!("{stem}_amplitude.csv"), Schema::Map, |w| {
                map.write_amplitude_csv(w).map(|_| ())
            })?;
        }
        Ok(())
    }
}

fn carrier_tag(f: f64) -> String {
    format!("{f:.0}Hz")
}

/// Phase map and its numerically extracted knife edge.
fn cmd_knife(config: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let map = config.phase_map()?;
    out.map("map", &map)?;
    out.write("edge.csv", EDGE, |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["f_Hz", "C_edge_F"])?;
        for &f in map.frequency() {
            match threshold_capacitance(&map, f, config.threshold) {
                Ok(c) => w.write_record([format_axis(f), format_cell(c)])?,
                Err(Error::EdgeOutsideMap { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        w.flush()?;
        Ok(())
    })
}

fn cmd_rectify(config: &RunConfig, map: Option<&Path>, amplitude: Option<&Path>, out: &mut Artifacts) -> Result<()> {
    let map = match (map, amplitude) {
        (Some(m), Some(a)) => PhaseMap::read_csv_with_amplitude(open(m)?, open(a)?)?,
        (Some(m), None) => PhaseMap::read_csv(open(m)?)?,
        _ => config.phase_map()?,
    };
    let (curve, rectified) = rectify(&map, config.threshold)?;
    out.write("c_omega.csv", C_OMEGA, |w| curve.write_csv(w))?;
    out.map("rectified_map", &rectified)?;
    let flatness = config.flatness();
    let before = usable_bandwidth(&map, flatness, config.threshold);
    let after = usable_bandwidth(&rectified, flatness, config.threshold);
    let centre = 0.5 * (map.frequency()[0] + map.frequency()[map.num_frequencies() - 1]);
    out.text(
        "bandwidth.txt",
        &format!(
            "threshold_rad={}\nflatness={:?}\nbandwidth_before_Hz={}\nbandwidth_after_Hz={}\nfractional_after={}\n",
            format_cell(config.threshold),
            flatness,
            format_cell(before),
            format_cell(after),
            format_cell(after / centre),
        ),
    )
}

fn write_train(out: &mut Artifacts, train: &PulseTrain) -> Result<()> {
    let tag = carrier_tag(train.carrier);
    out.write(&format!("pulses_{tag}.csv"), PULSES, |w| train.write_csv(w))?;
    out.write(&format!("truth_{tag}.csv"), TRUTH, |w| train.write_truth_csv(w))
}

/// Unwrapped echo phase and magnitude against slow time, per carrier.
fn cmd_phases(config: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let scene = coated_scene(config, out)?;
    for train in scene.simulate()? {
        write_train(out, &train)?;
        let mut phase = train.phases();
        unwrap_in_place(&mut phase);
        out.write(&format!("phases_{}.csv", carrier_tag(train.carrier)), PHASES, |w| {
            let mut w = csv::Writer::from_writer(w);
            w.write_record(["k", "t_s", "phase_rad", "amplitude"])?;
            for (k, ((t, p), x)) in train.timestamps.iter().zip(&phase).zip(&train.samples).enumerate() {
                w.write_record([k.to_string(), format_cell(*t), format_cell(*p), format_cell(x.norm())])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    Ok(())
}

/// Builds the configured scene, writing each coated target's plan and bias
/// waveform along the way.
fn coated_scene(config: &RunConfig, out: &mut Artifacts) -> Result<Scene> {
    if !config.target_coating.iter().any(|k| *k != CoatingKind::None) {
        return Ok(config.bare_scene());
    }
    let design = config.design()?;
    let plans = config.plans(&design)?;
    let scene = config.coated_scene(&design, &plans)?;
    for (i, (target, plan)) in scene.targets.iter().zip(&plans).enumerate() {
        if let (Some(coating), Some(plan)) = (&target.coating, plan) {
            out.text(&format!("plan_t{i}.txt"), &plan.to_text())?;
            out.write(&format!("waveform_t{i}.csv"), WAVEFORM, |w| {
                coating.waveform.write_csv(w)
            })?;
        }
    }
    Ok(scene)
}

/// Doppler spectrum per carrier, plus a concealment report per coated target.
fn cmd_doppler(config: &RunConfig, mti: bool, out: &mut Artifacts) -> Result<()> {
    let processing = config.processing(mti)?;
    let scene = coated_scene(config, out)?;
    let interval = scene.radar.slow_time_interval;
    let mut summary = String::new();
    for train in scene.simulate()? {
        let report = process(&train.samples, interval, train.carrier, &processing)?;
        let tag = carrier_tag(train.carrier);
        out.write(&format!("doppler_{tag}.csv"), SPECTRUM, |w| report.write_csv(w))?;
        summary.push_str(&format!("[{tag}]\n{}", report.summary()));
    }
    out.text("doppler_summary.txt", &summary)?;

    if scene.targets.iter().any(|t| t.coating.is_some()) {
        let design = config.design()?;
        let plans = config.plans(&design)?;
        for (i, plan) in plans.iter().enumerate() {
            if let Some(plan) = plan {
                let report = evaluate_concealment(&scene, i, &design, plan, &processing)?;
                out.text(&format!("concealment_t{i}.txt"), &report.to_text())?;
            }
        }
    }
    Ok(())
}

/// Velocity estimate over the configured velocity × modulation-frequency grid
/// using the first target's range and reflectivity.
fn cmd_sweep(config: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let design = config.design()?;
    let scene = config.bare_scene();
    let template = scene
        .targets
        .first()
        .cloned()
        .ok_or_else(|| Error::Domain("sweep needs at least one target".into()))?;
    let result = sweep(
        &scene,
        &template,
        &design,
        &config.sweep_velocities,
        &config.sweep_frequencies,
        &config.processing(false)?,
    )?;
    out.write("sweep.csv", SWEEP, |w| result.write_csv(w))?;
    out.write("sweep_fits.csv", FITS, |w| result.write_fits_csv(w))?;
    out.text(
        "sweep_summary.txt",
        &format!(
            "carrier_Hz={}\nphase_span_rad={}\nvelocity_bin_mps={}\ncommon_slope_mps_per_Hz={}\npredicted_slope_mps_per_Hz={}\ninvisibility_slope_mps_per_Hz={}\n",
            format_cell(result.carrier),
            format_cell(result.phase_span),
            format_cell(result.velocity_bin),
            format_cell(result.common_slope),
            format_cell(result.predicted_slope()),
            format_cell(result.invisibility_slope),
        ),
    )
}

/// Runs one subcommand end to end and returns its manifest.
pub fn run(command: &Command) -> Result<RunManifest> {
    let common = command.common();
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let mut out = Artifacts::new(&common.out)?;
    match command {
        Command::Knife(_) => cmd_knife(&config, &mut out)?,
        Command::Rectify { map, amplitude, .. } => {
            cmd_rectify(&config, map.as_deref(), amplitude.as_deref(), &mut out)?
        }
        Command::Phases(_) => cmd_phases(&config, &mut out)?,
        Command::Doppler { mti, .. } => cmd_doppler(&config, *mti, &mut out)?,
        Command::Sweep(_) => cmd_sweep(&config, &mut out)?,
    }
    let manifest = RunManifest {
        subcommand: command.name().to_string(),
        config: common.config.clone(),
        output_dir: common.out.clone(),
        seed: config.seed,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        files: out.files.clone(),
    };
    out.text("manifest.txt", &manifest.to_text())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_suffixes_are_enforced() {
        assert!(has_unit("f_Hz") && has_unit("v_hat_mps") && has_unit("k"));
        assert!(!has_unit("velocity"));
    }

    #[test]
    fn schema_mismatch_is_rejected_and_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Artifacts::new(dir.path()).unwrap();
        let err = out
            .write("bad.csv", SWEEP, |w| Ok(w.write_all(b"a,b\n1,2\n")?))
            .unwrap_err();
        assert!(err.to_string().contains("schema check failed"));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn command_names() {
        let cli = Cli::try_parse_from(["doppler-cloak", "doppler", "--mti", "--seed", "3"]).unwrap();
        assert_eq!(cli.command.name(), "doppler");
        assert_eq!(cli.command.common().seed, Some(3));
        assert!(Cli::try_parse_from(["doppler-cloak", "knife", "--format", "json"]).is_err());
    }
}
