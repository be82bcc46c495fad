//! Discrete Fourier utilities and grid functionals.
//!
//! Continuum norms are approximated by grid extrema of spectrally computed
//! samples: `sup_norm` and `extrema` look at the nodes only, so e.g.
//! `sin(x)` reports a maximum of exactly 1 only when `pi/2` is a node.

use rustfft::num_complex::Complex;

use crate::error::{MuskatError, Result};
use crate::grid::TorusGrid;
use crate::state::InterfaceState;

/// Fourier derivative of `state` of order 1 or 2.
///
/// The Nyquist coefficient of the derivative is dropped, so the result is
/// exact on trigonometric polynomials of degree `< n/2`.
pub fn spectral_derivative(state: &InterfaceState, order: u8) -> Result<Vec<f64>> {
    match order {
        1 => Ok(derivative(state.grid(), state.samples())),
        2 => Ok(second_derivative(state.grid(), state.samples())),
        _ => Err(MuskatError::InvalidState(format!(
            "derivative order {order} not supported (use 1 or 2)"
        ))),
    }
}

/// First spectral derivative of raw samples on `grid`.
pub fn derivative(grid: &TorusGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.n();
    assert_eq!(f.len(), n, "sample count must match the grid");
    let c = &grid.ops().d1;
    let half_n = n / 2;
    (0..n)
        .map(|m| {
            let mut acc = 0.0;
            for d in 1..half_n {
                acc += c[d] * (f[(m + n - d) % n] - f[(m + d) % n]);
            }
            acc
        })
        .collect()
}

/// Second spectral derivative of raw samples on `grid`.
pub fn second_derivative(grid: &TorusGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.n();
    assert_eq!(f.len(), n, "sample count must match the grid");
    let c = &grid.ops().d2;
    let half_n = n / 2;
    (0..n)
        .map(|m| {
            let fm = f[m];
            let mut acc = 0.0;
            for d in 1..half_n {
                acc += c[d] * ((f[(m + n - d) % n] - fm) + (f[(m + d) % n] - fm));
            }
            acc + c[half_n] * (f[(m + half_n) % n] - fm)
        })
        .collect()
}

/// Band-limited interpolant of `f` evaluated at the half nodes `x_m + dx/2`.
pub fn half_shift(grid: &TorusGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.n();
    assert_eq!(f.len(), n, "sample count must match the grid");
    let w = &grid.ops().half;
    (0..n)
        .map(|m| {
            let mut acc = 0.0;
            for d in 0..n {
                acc += w[d] * f[(m + n - d) % n];
            }
            acc
        })
        .collect()
}

/// Multiplies Fourier coefficient `k` of `f` by `symbol(k)`.
///
/// `symbol` must be even in `k` for the output to stay real.
pub fn fourier_multiply<S: Fn(f64) -> f64>(grid: &TorusGrid, f: &[f64], symbol: S) -> Vec<f64> {
    let n = grid.n();
    let ops = grid.ops();
    let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
    ops.fft_forward.process(&mut buf);
    for (idx, c) in buf.iter_mut().enumerate() {
        *c *= symbol(grid.wavenumber(idx) as f64);
    }
    ops.fft_inverse.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Trigonometric interpolation of `f` (sampled on `from`) onto the nodes of `to`.
///
/// Modes `|k| < min(n, m)/2` are kept; the Nyquist mode is dropped.
pub fn resample(from: &TorusGrid, f: &[f64], to: &TorusGrid) -> Vec<f64> {
    let (n, m) = (from.n(), to.n());
    let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
    from.ops().fft_forward.process(&mut buf);
    let keep = n.min(m) as i64 / 2;
    let mut out = vec![Complex::new(0.0, 0.0); m];
    for (idx, c) in buf.iter().enumerate() {
        let k = from.wavenumber(idx);
        if k.abs() < keep {
            out[k.rem_euclid(m as i64) as usize] = *c / n as f64;
        }
    }
    to.ops().fft_inverse.process(&mut out);
    out.iter().map(|c| c.re).collect()
}

/// Heat-kernel mollification: coefficient `k` is damped by `exp(-k^2 eps_m)`.
pub fn heat_mollify(state: &InterfaceState, eps_m: f64) -> Result<InterfaceState> {
    if !(eps_m >= 0.0 && eps_m.is_finite()) {
        return Err(MuskatError::InvalidConfig(format!(
            "mollifier time {eps_m} must be finite and >= 0"
        )));
    }
    if eps_m == 0.0 {
        return Ok(state.clone());
    }
    let m = mean(state);
    let mut out = fourier_multiply(state.grid(), state.samples(), |k| (-k * k * eps_m).exp());
    // the k = 0 coefficient is untouched; pin the mean against FFT round-off
    let drift = out.iter().sum::<f64>() / out.len() as f64 - m;
    out.iter_mut().for_each(|v| *v -= drift);
    state.with_samples(out)
}

/// Average `(1/2pi) int f dx`, which the periodic trapezoid rule gives exactly.
pub fn mean(state: &InterfaceState) -> f64 {
    mean_of(state.samples())
}

pub fn mean_of(f: &[f64]) -> f64 {
    f.iter().sum::<f64>() / f.len() as f64
}

/// Grid maximum of `|f_j|`.
pub fn sup_norm(samples: &[f64]) -> f64 {
    samples.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Grid `(max, min)`.
pub fn extrema(samples: &[f64]) -> (f64, f64) {
    samples
        .iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &v| (hi.max(v), lo.min(v)))
}

/// Oscillation `max - min` over the grid.
pub fn osc(samples: &[f64]) -> f64 {
    let (hi, lo) = extrema(samples);
    hi - lo
}

/// `L^2(T)` norm by the periodic trapezoid rule.
pub fn l2_norm(grid: &TorusGrid, samples: &[f64]) -> f64 {
    (grid.dx() * samples.iter().map(|v| v * v).sum::<f64>()).sqrt()
}
