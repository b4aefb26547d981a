//! The victim radar's slow-time chain: decimation, two-pulse canceller,
//! Doppler FFT and peak-based velocity estimation.

use crate::error::ensure_finite;
use crate::phase_map::format_cell;
use crate::{Error, Result, SPEED_OF_LIGHT};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;

/// `y_k = x_k − x_{k−1}`.
pub fn mti_two_pulse(x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    Ok(x.windows(2).map(|w| w[1] - w[0]).collect())
}

/// `|1 − e^{−jω}|` for normalized frequency ω in rad/sample.
pub fn mti_response(omega: f64) -> f64 {
    2.0 * (0.5 * omega).sin().abs()
}

/// Keeps every `factor`-th sample so that `expected_doppler` lands near the
/// canceller's passband peak at π rad/sample.
pub fn downsample_for_mti(x: &[Complex64], expected_doppler: f64, interval: f64) -> Result<(Vec<Complex64>, usize)> {
    ensure_finite("expected Doppler", expected_doppler)?;
    ensure_finite("slow-time interval", interval)?;
    if expected_doppler <= 0.0 || interval <= 0.0 {
        return Err(Error::Domain(
            "expected Doppler and slow-time interval must be > 0".into(),
        ));
    }
    if x.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let ideal = (1.0 / (2.0 * expected_doppler * interval)).round();
    let ceiling = (x.len() / 4).max(1);
    let factor = (ideal.max(1.0) as usize).min(ceiling);
    let nyquist = 0.5 / (interval * factor as f64);
    if expected_doppler > nyquist * (1.0 + 1e-12) {
        return Err(Error::DopplerAboveNyquist {
            expected: expected_doppler,
            nyquist,
        });
    }
    Ok((x.iter().step_by(factor).copied().collect(), factor))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann if len <= 1 => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / (len - 1) as f64).cos()))
                .collect(),
        }
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" | "none" => Ok(Window::Rectangular),
            "hann" | "hanning" => Ok(Window::Hann),
            other => Err(Error::Domain(format!("unknown window {other:?}"))),
        }
    }
}

/// Magnitude spectrum on an ascending (fft-shifted) frequency axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequency: Vec<f64>,
    pub bins: Vec<Complex64>,
    /// Sample interval the axis was built for, s.
    pub interval: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Index into the shifted axis.
    pub bin: usize,
    /// Interpolated peak frequency, Hz.
    pub frequency: f64,
    pub magnitude: f64,
}

/// Windowed, zero-padded DFT of `x` sampled every `interval` seconds.
pub fn doppler_fft(x: &[Complex64], fft_size: usize, window: Window, interval: f64) -> Result<Spectrum> {
    if x.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    if fft_size < x.len() {
        return Err(Error::Domain(format!(
            "FFT size {fft_size} is shorter than the {} input samples",
            x.len()
        )));
    }
    ensure_finite("sample interval", interval)?;
    if interval <= 0.0 {
        return Err(Error::Domain("sample interval must be > 0".into()));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    for ((dst, &src), w) in buf.iter_mut().zip(x).zip(window.coefficients(x.len())) {
        *dst = src * w;
    }
    FftPlanner::new().plan_fft_forward(fft_size).process(&mut buf);

    let half = fft_size / 2;
    let scale = 1.0 / (fft_size as f64 * interval);
    let frequency = (0..fft_size).map(|i| (i as f64 - half as f64) * scale).collect();
    let bins = (0..fft_size).map(|i| buf[(i + fft_size - half) % fft_size]).collect();
    Ok(Spectrum {
        frequency,
        bins,
        interval,
    })
}

impl Spectrum {
    pub fn magnitude(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.norm()).collect()
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / (self.bins.len() as f64 * self.interval)
    }

    /// Magnitude in the bin nearest `frequency`, folded into the unambiguous
    /// span.
    pub fn magnitude_near(&self, frequency: f64) -> f64 {
        let n = self.bins.len() as f64;
        let k = (frequency / self.bin_width()).round().rem_euclid(n) as usize;
        let half = self.bins.len() / 2;
        self.bins[(k + half) % self.bins.len()].norm()
    }

    /// Strongest bin, refined by a parabola through the log-magnitudes of
    /// the peak and its two neighbours.
    pub fn peak(&self) -> Result<Peak> {
        let mag = self.magnitude();
        let (bin, &top) = mag
            .iter()
            .enumerate()
            .fold((0, &0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(top > 0.0) {
            return Err(Error::NoDetection);
        }
        let mut offset = 0.0;
        // neighbours at round-off level carry no shape information
        let floor = top * 1e-9;
        if bin > 0 && bin + 1 < mag.len() && mag[bin - 1] > floor && mag[bin + 1] > floor {
            let (a, b, c) = (mag[bin - 1].ln(), top.ln(), mag[bin + 1].ln());
            let den = a - 2.0 * b + c;
            if den < 0.0 {
                offset = (0.5 * (a - c) / den).clamp(-0.5, 0.5);
            }
        }
        Ok(Peak {
            bin,
            frequency: self.frequency[bin] + offset * self.bin_width(),
            magnitude: top,
        })
    }
}

/// Radial velocity for a Doppler frequency: `v = −f c / (2 f_c)`, so a
/// receding target (negative v) shows a positive Doppler line.
pub fn velocity_for_doppler(frequency: f64, carrier: f64) -> f64 {
    -frequency * SPEED_OF_LIGHT / (2.0 * carrier)
}

/// Doppler frequency for a radial velocity, inverse of
/// [`velocity_for_doppler`].
pub fn doppler_for_velocity(velocity: f64, carrier: f64) -> f64 {
    -2.0 * velocity * carrier / SPEED_OF_LIGHT
}

#[derive(Debug, Clone, PartialEq)]
pub struct DopplerReport {
    pub carrier: f64,
    pub frequency_axis: Vec<f64>,
    pub velocity_axis: Vec<f64>,
    pub spectrum_magnitude: Vec<f64>,
    pub peak_bin: usize,
    pub peak_frequency: f64,
    pub peak_magnitude: f64,
    /// `None` when the spectrum is identically zero.
    pub estimated_velocity: Option<f64>,
    pub mti_applied: bool,
    pub decimation: usize,
    /// Magnitude at the true Doppler bin relative to a reference run, dB.
    pub attenuation_at_truth: Option<f64>,
}

impl DopplerReport {
    pub fn from_spectrum(spectrum: &Spectrum, carrier: f64, mti_applied: bool, decimation: usize) -> Self {
        let peak = spectrum.peak().ok();
        Self {
            carrier,
            velocity_axis: spectrum
                .frequency
                .iter()
                .map(|&f| velocity_for_doppler(f, carrier))
                .collect(),
            frequency_axis: spectrum.frequency.clone(),
            spectrum_magnitude: spectrum.magnitude(),
            peak_bin: peak.map_or(spectrum.frequency.len() / 2, |p| p.bin),
            peak_frequency: peak.map_or(0.0, |p| p.frequency),
            peak_magnitude: peak.map_or(0.0, |p| p.magnitude),
            estimated_velocity: peak.map(|p| velocity_for_doppler(p.frequency, carrier)),
            mti_applied,
            decimation,
            attenuation_at_truth: None,
        }
    }

    /// Velocity resolution of one FFT bin, m/s.
    pub fn velocity_bin(&self) -> f64 {
        let df = self.frequency_axis[1.min(self.frequency_axis.len() - 1)] - self.frequency_axis[0];
        (df * SPEED_OF_LIGHT / (2.0 * self.carrier)).abs()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["f_Hz", "v_mps", "mag_dB"])?;
        for ((f, v), m) in self
            .frequency_axis
            .iter()
            .zip(&self.velocity_axis)
            .zip(&self.spectrum_magnitude)
        {
            w.write_record([format_cell(*f), format_cell(*v), format_cell(magnitude_db(*m))])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `key=value` summary lines.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "carrier_Hz={}\npeak_bin={}\npeak_f_Hz={}\npeak_mag_dB={}\nv_hat_mps={}\nvelocity_bin_mps={}\nmti_applied={}\ndecimation={}\n",
            format_cell(self.carrier),
            self.peak_bin,
            format_cell(self.peak_frequency),
            format_cell(magnitude_db(self.peak_magnitude)),
            self.estimated_velocity.map_or_else(|| "none".to_string(), format_cell),
            format_cell(self.velocity_bin()),
            self.mti_applied,
            self.decimation,
        );
        if let Some(a) = self.attenuation_at_truth {
            s.push_str(&format!("attenuation_at_truth_dB={}\n", format_cell(a)));
        }
        s
    }
}

/// `v̂` from a populated report.
pub fn estimate_velocity(report: &DopplerReport, carrier: f64) -> Result<f64> {
    if !report.spectrum_magnitude.iter().any(|&m| m > 0.0) {
        return Err(Error::NoDetection);
    }
    Ok(velocity_for_doppler(report.peak_frequency, carrier))
}

/// 20·log10 with a floor at −300 dB.
pub fn magnitude_db(m: f64) -> f64 {
    20.0 * m.max(1e-15).log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Processing {
    pub fft_size: usize,
    pub window: Window,
    pub mti: bool,
    /// Decimate before the canceller so this Doppler falls near its peak.
    pub expected_doppler: Option<f64>,
}

impl Default for Processing {
    fn default() -> Self {
        Self {
            fft_size: 512,
            window: Window::Rectangular,
            mti: false,
            expected_doppler: None,
        }
    }
}

/// Runs decimation (when an expected Doppler is given), the optional
/// canceller and the Doppler FFT on one slow-time sequence.
pub fn process(x: &[Complex64], interval: f64, carrier: f64, processing: &Processing) -> Result<DopplerReport> {
    let (samples, factor) = match processing.expected_doppler {
        Some(fd) => downsample_for_mti(x, fd, interval)?,
        None => (x.to_vec(), 1),
    };
    let samples = if processing.mti {
        mti_two_pulse(&samples)?
    } else {
        samples
    };
    let fft_size = processing.fft_size.max(samples.len());
    let spectrum = doppler_fft(&samples, fft_size, processing.window, interval * factor as f64)?;
    Ok(DopplerReport::from_spectrum(&spectrum, carrier, processing.mti, factor))
}
