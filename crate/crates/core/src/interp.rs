//! Grid construction and piecewise-linear interpolation helpers.

use crate::{Error, Result};
use std::f64::consts::PI;

pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

pub fn logspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    let mut out: Vec<f64> = linspace(start.ln(), stop.ln(), n).into_iter().map(f64::exp).collect();
    // pin the endpoints exactly
    if let Some(first) = out.first_mut() {
        *first = start;
    }
    if n > 1 {
        out[n - 1] = stop;
    }
    out
}

pub fn is_strictly_increasing(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite()) && xs.windows(2).all(|w| w[1] > w[0])
}

/// Linear interpolation of `ys` over increasing `xs`, holding the end values
/// outside the axis.
pub fn lerp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n == 1 || x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    // first index with xs[i] > x; 1 <= hi <= n-1
    let hi = xs.partition_point(|&v| v <= x);
    let lo = hi - 1;
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}

/// Index of the axis sample nearest to `x`, rejecting requests farther than
/// half a grid step from it.
pub fn nearest_index(axis: &[f64], x: f64) -> Result<usize> {
    if axis.is_empty() || !x.is_finite() {
        return Err(Error::Domain(format!("cannot look up {x} on an empty axis")));
    }
    let hi = axis.partition_point(|&v| v < x);
    let idx = if hi == 0 {
        0
    } else if hi == axis.len() {
        axis.len() - 1
    } else if (x - axis[hi - 1]) <= (axis[hi] - x) {
        hi - 1
    } else {
        hi
    };
    let half_step = if axis.len() == 1 {
        0.0
    } else {
        let left = if idx > 0 {
            axis[idx] - axis[idx - 1]
        } else {
            f64::INFINITY
        };
        let right = if idx + 1 < axis.len() {
            axis[idx + 1] - axis[idx]
        } else {
            f64::INFINITY
        };
        0.5 * left.min(right)
    };
    let tol = 1e-9 * axis[idx].abs().max(1.0);
    if (x - axis[idx]).abs() > half_step + tol {
        return Err(Error::FrequencyOffGrid {
            requested: x,
            nearest: axis[idx],
        });
    }
    Ok(idx)
}

/// Removes 2π jumps so consecutive samples differ by at most π.
pub fn unwrap_in_place(phases: &mut [f64]) {
    let mut offset = 0.0;
    for i in 1..phases.len() {
        let raw = phases[i] + offset;
        let mut delta = raw - phases[i - 1];
        while delta > PI {
            offset -= 2.0 * PI;
            delta -= 2.0 * PI;
        }
        while delta < -PI {
            offset += 2.0 * PI;
            delta += 2.0 * PI;
        }
        phases[i] = phases[i - 1] + delta;
    }
}
