//! Sampled phase-shift surface over (varactor capacitance × frequency).
//!
//! A row is one frequency; along a row the phase shift is unwrapped and
//! referenced to the first capacitance sample.
//!
//! CSV layout: the header row carries the frequency axis in Hz, the first
//! column carries the capacitance axis in F, and each cell holds Δφ in radians
//! with 9 significant digits. Axis values are written in shortest round-trip
//! form.

use crate::interp::{is_strictly_increasing, lerp_clamped, nearest_index};
use crate::{Error, Result};
use std::io::{Read, Write};

/// Top-left cell of the CSV layout.
pub const CORNER_LABEL: &str = "C_F\\f_Hz";

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    capacitance: Vec<f64>,
    frequency: Vec<f64>,
    /// frequency-major: `values[fi * ncap + ci]`
    values: Vec<f64>,
    amplitude: Option<Vec<f64>>,
    flagged: Vec<(usize, usize)>,
}

impl PhaseMap {
    pub fn new(
        capacitance: Vec<f64>,
        frequency: Vec<f64>,
        values: Vec<f64>,
        amplitude: Option<Vec<f64>>,
    ) -> Result<Self> {
        if capacitance.is_empty() || frequency.is_empty() {
            return Err(Error::Domain("phase map axes must be nonempty".into()));
        }
        if !is_strictly_increasing(&capacitance) {
            return Err(Error::Domain("capacitance axis must be strictly increasing".into()));
        }
        if !is_strictly_increasing(&frequency) {
            return Err(Error::Domain("frequency axis must be strictly increasing".into()));
        }
        let cells = capacitance.len() * frequency.len();
        if values.len() != cells {
            return Err(Error::Domain(format!(
                "phase matrix has {} cells, axes need {cells}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("phase matrix contains non-finite values".into()));
        }
        if let Some(amp) = &amplitude {
            if amp.len() != cells {
                return Err(Error::Domain(format!(
                    "amplitude matrix has {} cells, axes need {cells}",
                    amp.len()
                )));
            }
            if amp.iter().any(|a| !a.is_finite() || *a < 0.0) {
                return Err(Error::Domain("amplitude matrix must be finite and nonnegative".into()));
            }
        }
        Ok(Self {
            capacitance,
            frequency,
            values,
            amplitude,
            flagged: Vec::new(),
        })
    }

    pub(crate) fn with_flags(mut self, flagged: Vec<(usize, usize)>) -> Self {
        self.flagged = flagged;
        self
    }

    pub fn capacitance(&self) -> &[f64] {
        &self.capacitance
    }

    pub fn frequency(&self) -> &[f64] {
        &self.frequency
    }

    pub fn num_capacitances(&self) -> usize {
        self.capacitance.len()
    }

    pub fn num_frequencies(&self) -> usize {
        self.frequency.len()
    }

    pub fn value(&self, freq_index: usize, cap_index: usize) -> f64 {
        self.values[freq_index * self.capacitance.len() + cap_index]
    }

    pub fn row(&self, freq_index: usize) -> &[f64] {
        let n = self.capacitance.len();
        &self.values[freq_index * n..(freq_index + 1) * n]
    }

    pub fn amplitude_row(&self, freq_index: usize) -> Option<&[f64]> {
        let n = self.capacitance.len();
        self.amplitude
            .as_ref()
            .map(|a| &a[freq_index * n..(freq_index + 1) * n])
    }

    pub fn has_amplitude(&self) -> bool {
        self.amplitude.is_some()
    }

    /// Grid points where the underlying model was singular and had to be
    /// limited, as `(freq_index, cap_index)`.
    pub fn flagged(&self) -> &[(usize, usize)] {
        &self.flagged
    }

    /// Nearest-row lookup; errors when `f` is more than half a grid step away.
    pub fn row_index(&self, f: f64) -> Result<usize> {
        nearest_index(&self.frequency, f)
    }

    /// Phase shift at an arbitrary capacitance on a row, interpolated linearly
    /// and held constant beyond the axis ends.
    pub fn phase_at(&self, freq_index: usize, cap: f64) -> f64 {
        lerp_clamped(&self.capacitance, self.row(freq_index), cap)
    }

    pub fn amplitude_at(&self, freq_index: usize, cap: f64) -> Option<f64> {
        self.amplitude_row(freq_index)
            .map(|row| lerp_clamped(&self.capacitance, row, cap))
    }

    /// Largest phase excursion on a row.
    pub fn swing(&self, freq_index: usize) -> f64 {
        let row = self.row(freq_index);
        let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        hi - lo
    }

    /// Largest |Δφ| in the first capacitance column. Zero for maps built
    /// directly from a model; rectified maps carry the offset of C_ω here.
    pub fn reference_offset(&self) -> f64 {
        (0..self.frequency.len())
            .map(|fi| self.value(fi, 0).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_matrix(writer, &self.capacitance, &self.frequency, |fi, ci| self.value(fi, ci))
    }

    /// Writes the |Γ| matrix in the same layout, if present.
    pub fn write_amplitude_csv<W: Write>(&self, writer: W) -> Result<bool> {
        match &self.amplitude {
            None => Ok(false),
            Some(amp) => {
                let n = self.capacitance.len();
                write_matrix(writer, &self.capacitance, &self.frequency, |fi, ci| amp[fi * n + ci])?;
                Ok(true)
            }
        }
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (capacitance, frequency, values) = read_matrix(reader)?;
        Self::new(capacitance, frequency, values, None)
    }

    /// Reads a phase CSV together with an amplitude CSV on identical axes.
    pub fn read_csv_with_amplitude<R: Read, A: Read>(phase: R, amplitude: A) -> Result<Self> {
        let (capacitance, frequency, values) = read_matrix(phase)?;
        let (cap_a, freq_a, amp) = read_matrix(amplitude)?;
        if cap_a != capacitance || freq_a != frequency {
            return Err(Error::Domain("amplitude CSV axes differ from the phase CSV".into()));
        }
        Self::new(capacitance, frequency, values, Some(amp))
    }
}

pub(crate) fn format_cell(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.8e}")
}

pub(crate) fn format_axis(v: f64) -> String {
    format!("{v:e}")
}

fn write_matrix<W: Write>(
    writer: W,
    capacitance: &[f64],
    frequency: &[f64],
    cell: impl Fn(usize, usize) -> f64,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = Vec::with_capacity(frequency.len() + 1);
    header.push(CORNER_LABEL.to_string());
    header.extend(frequency.iter().map(|&f| format_axis(f)));
    w.write_record(&header)?;
    for (ci, &c) in capacitance.iter().enumerate() {
        let mut record = Vec::with_capacity(frequency.len() + 1);
        record.push(format_axis(c));
        record.extend((0..frequency.len()).map(|fi| format_cell(cell(fi, ci))));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

type Matrix = (Vec<f64>, Vec<f64>, Vec<f64>);

fn parse_number(text: &str, row: usize, column: usize) -> Result<f64> {
    let value: f64 = text.trim().parse().map_err(|_| Error::Parse {
        row,
        column,
        message: format!("not a number: {text:?}"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            row,
            column,
            message: format!("non-finite value {text:?}"),
        });
    }
    Ok(value)
}

fn read_matrix<R: Read>(reader: R) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r?,
        None => {
            return Err(Error::Parse {
                row: 1,
                column: 1,
                message: "empty file".into(),
            })
        }
    };
    if header.len() < 2 {
        return Err(Error::Parse {
            row: 1,
            column: header.len().max(1),
            message: "header needs at least one frequency".into(),
        });
    }
    let frequency = header
        .iter()
        .enumerate()
        .skip(1)
        .map(|(col, text)| parse_number(text, 1, col + 1))
        .collect::<Result<Vec<_>>>()?;
    check_axis(&frequency, |i| (1, i + 2), "frequency")?;

    let nf = frequency.len();
    let mut capacitance = Vec::new();
    let mut by_cap: Vec<f64> = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record?;
        let row = i + 2;
        if record.len() != nf + 1 {
            return Err(Error::Parse {
                row,
                column: record.len().min(nf + 1) + 1,
                message: format!("expected {} fields, found {}", nf + 1, record.len()),
            });
        }
        capacitance.push(parse_number(&record[0], row, 1)?);
        for col in 1..=nf {
            by_cap.push(parse_number(&record[col], row, col + 1)?);
        }
    }
    if capacitance.is_empty() {
        return Err(Error::Parse {
            row: 2,
            column: 1,
            message: "no capacitance rows".into(),
        });
    }
    check_axis(&capacitance, |i| (i + 2, 1), "capacitance")?;

    // transpose cap-major file order into the frequency-major layout
    let nc = capacitance.len();
    let mut values = vec![0.0; nc * nf];
    for ci in 0..nc {
        for fi in 0..nf {
            values[fi * nc + ci] = by_cap[ci * nf + fi];
        }
    }
    Ok((capacitance, frequency, values))
}

fn check_axis(axis: &[f64], position: impl Fn(usize) -> (usize, usize), name: &str) -> Result<()> {
    for i in 1..axis.len() {
        if axis[i] <= axis[i - 1] {
            let (row, column) = position(i);
            return Err(Error::Parse {
                row,
                column,
                message: format!("{name} axis is not strictly increasing"),
            });
        }
    }
    Ok(())
}
