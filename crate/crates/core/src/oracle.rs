//! Slow, independent reference computations for the test suite.
//!
//! Nothing here shares code with `kernels` or the stencil machinery in
//! `grid`/`spectral`: Fourier coefficients come from a naive DFT, the
//! interface is evaluated from its trigonometric series at arbitrary points,
//! and every integral is a plain double loop.

use std::f64::consts::PI;

use crate::error::{MuskatError, Result};
use crate::state::{InterfaceState, PhysicalParams};

/// Real trigonometric interpolant of grid samples, without the Nyquist mode.
#[derive(Debug, Clone)]
pub struct TrigSeries {
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigSeries {
    /// Naive DFT of samples taken at `x_j = -pi + 2 pi j / n`.
    pub fn from_samples(f: &[f64]) -> Self {
        let n = f.len();
        let kmax = n / 2;
        let x = |j: usize| -PI + 2.0 * PI * j as f64 / n as f64;
        let mean = f.iter().sum::<f64>() / n as f64;
        let mut cos = Vec::with_capacity(kmax);
        let mut sin = Vec::with_capacity(kmax);
        for k in 1..kmax {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, v) in f.iter().enumerate() {
                let arg = k as f64 * x(j);
                a += v * arg.cos();
                b += v * arg.sin();
            }
            cos.push(2.0 * a / n as f64);
            sin.push(2.0 * b / n as f64);
        }
        Self { mean, cos, sin }
    }

    pub fn value(&self, x: f64) -> f64 {
        let mut acc = self.mean;
        for (idx, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let arg = (idx + 1) as f64 * x;
            acc += a * arg.cos() + b * arg.sin();
        }
        acc
    }

    pub fn slope(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (idx, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let k = (idx + 1) as f64;
            let arg = k * x;
            acc += k * (b * arg.cos() - a * arg.sin());
        }
        acc
    }
}

/// Contour-equation velocity at the nodes of `state`, by direct double
/// loops on a grid `oversample` times finer, with the vorticity taken from
/// its defining (derivative-carrying) integral.
pub fn oracle_rhs(state: &InterfaceState, params: &PhysicalParams, oversample: usize) -> Result<Vec<f64>> {
    if oversample < 4 {
        return Err(MuskatError::InvalidConfig(format!(
            "oracle oversample {oversample} must be at least 4"
        )));
    }
    let h2 = params.h2;
    let clearance = state.min() + h2;
    if clearance < 1e-3 * h2 {
        return Err(MuskatError::TouchingRisk {
            clearance,
            guard: 1e-3 * h2,
        });
    }
    let series = TrigSeries::from_samples(state.samples());
    let n = state.samples().len();
    let fine = n * oversample;
    let h = 2.0 * PI / fine as f64;
    let r = params.kappa_plus * (params.rho_minus - params.rho_plus);
    let k = (params.kappa_plus - params.kappa_minus) / (params.kappa_plus + params.kappa_minus);
    let a_coef = r * k / (2.0 * PI);

    let fine_nodes: Vec<f64> = (0..fine).map(|l| -PI + l as f64 * h).collect();
    let f_fine: Vec<f64> = fine_nodes.iter().map(|&x| series.value(x)).collect();
    let fp_fine: Vec<f64> = fine_nodes.iter().map(|&x| series.slope(x)).collect();

    let mut omega = vec![0.0; fine];
    if a_coef != 0.0 {
        for (l, w) in omega.iter_mut().enumerate() {
            let beta = fine_nodes[l];
            let mut acc = 0.0;
            for m in 0..fine {
                let a = h2 + f_fine[m];
                acc += a.sinh() * fp_fine[m] / (a.cosh() - (beta - fine_nodes[m]).cos());
            }
            *w = a_coef * h * acc;
        }
    }

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = -PI + 2.0 * PI * i as f64 / n as f64;
        let fx = series.value(x);
        let fpx = series.slope(x);

        let mut first = 0.0;
        for j in 0..fine {
            let beta = -PI + (j as f64 + 0.5) * h;
            let y = x - beta;
            let num = beta.sin() * (fpx - series.slope(y));
            let den = (fx - series.value(y)).cosh() - beta.cos();
            first += num / den;
        }
        first *= r * h / (4.0 * PI);

        let mut second = 0.0;
        if a_coef != 0.0 {
            let a = fx + h2;
            for l in 0..fine {
                let z = x - fine_nodes[l];
                second += (fpx * a.sinh() + z.sin()) * omega[l] / (a.cosh() - z.cos());
            }
            second *= h / (4.0 * PI);
        }
        let v = first + second;
        if !v.is_finite() {
            return Err(MuskatError::NonFinite { node: i, value: v });
        }
        out.push(v);
    }
    Ok(out)
}

/// Fourth-order centered finite differences of order 1 or 2.
pub fn fd_derivative(samples: &[f64], dx: f64, order: u8) -> Result<Vec<f64>> {
    let n = samples.len();
    if n < 8 {
        return Err(MuskatError::InvalidGrid(format!("finite differences need n >= 8, got {n}")));
    }
    let f = |j: isize| samples[j.rem_euclid(n as isize) as usize];
    let out = (0..n as isize)
        .map(|j| match order {
            1 => Ok((-f(j + 2) + 8.0 * f(j + 1) - 8.0 * f(j - 1) + f(j - 2)) / (12.0 * dx)),
            2 => Ok((-f(j + 2) + 16.0 * f(j + 1) - 30.0 * f(j) + 16.0 * f(j - 1) - f(j - 2)) / (12.0 * dx * dx)),
            _ => Err(MuskatError::InvalidState(format!("order {order} not supported"))),
        })
        .collect();
    out
}

/// Partial sum of the series bound: `sum_{k=1}^{n_terms} (1 + k) r^k` with
/// `r = sinh(z pi / 2)^2`, plus the explicit term `z/2 (2 pi cosh(pi z) + pi sinh(pi z))`.
pub fn series_p(z: f64, n_terms: usize) -> Result<f64> {
    let r = (z * PI / 2.0).sinh().powi(2);
    if r >= 1.0 || !r.is_finite() {
        return Err(MuskatError::OutOfDomain {
            value: z,
            reason: format!("series ratio sinh(z pi/2)^2 = {r} must be < 1"),
        });
    }
    let mut bracket = 0.0;
    let mut power = 1.0;
    for k in 1..=n_terms {
        power *= r;
        bracket += (1.0 + k as f64) * power;
    }
    Ok(bracket + 0.5 * z * (2.0 * PI * (PI * z).cosh() + PI * (PI * z).sinh()))
}

/// Periodic trapezoid rule for `g` on `[-pi, pi)` with `m` half-offset points.
pub fn trapezoid_periodic<G: Fn(f64) -> f64>(g: G, m: usize) -> f64 {
    let h = 2.0 * PI / m as f64;
    (0..m).map(|j| g(-PI + (j as f64 + 0.5) * h)).sum::<f64>() * h
}

/// `int_{-pi}^{pi} db / (cosh a - cos b) = 2 pi / sinh a`.
pub fn inverse_cosh_integral(a: f64) -> f64 {
    2.0 * PI / a.sinh()
}

/// `int_{-pi}^{pi} log(cosh a - cos b) db = 2 pi (a - log 2)` for `a > 0`.
pub fn log_cosh_integral(a: f64) -> f64 {
    2.0 * PI * (a - 2.0f64.ln())
}

/// Composite Simpson value of `int_0^pi cot(b/2) sin(k b) db` (equal to `pi`
/// for every integer `k >= 1`); the integrand tends to `2k` at `b = 0`.
pub fn cot_sine_integral(k: u32, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let h = PI / m as f64;
    let k = k as f64;
    let g = |b: f64| if b == 0.0 { 2.0 * k } else { (k * b).sin() / (0.5 * b).tan() };
    let mut acc = g(0.0) + g(PI);
    for j in 1..m {
        acc += if j % 2 == 1 { 4.0 } else { 2.0 } * g(j as f64 * h);
    }
    acc * h / 3.0
}
