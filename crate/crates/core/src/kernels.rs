//! Principal-value integrals of the contour equation.
//!
//! The interface evolves by
//!
//! ```text
//! f_t(x) = R/(4 pi) PV int sin(b) (f'(x) - f'(x-b)) / (cosh(f(x) - f(x-b)) - cos b) db
//!        + 1/(4 pi)  int (f'(x) sinh(f(x)+h2) + sin(x-b)) w2(b) / (cosh(f(x)+h2) - cos(x-b)) db
//! ```
//!
//! where `w2` is the vorticity density carried by the permeability line.
//! The first kernel has a removable singularity at `b = 0` and is sampled
//! on the half-offset points `b_j = -pi + (j + 1/2) dx`; the values
//! `f(x_i - b_j)` then land on the half nodes and come from band-limited
//! interpolation. Everything else is node aligned.
//!
//! Denominators are written as `cosh a - cos b = 2 sinh^2(a/2) + 2 sin^2(b/2)`,
//! which has no cancellation near `a = b = 0`.
//!
//! Each node reduces its integrand in a fixed offset order, so results do
//! not depend on the thread count and commute exactly with node shifts.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::grid::TorusGrid;
use crate::spectral::{derivative, half_shift, second_derivative};
use crate::state::{InterfaceState, PhysicalParams, RhsForm};

/// Evaluations abort once `min f + h2` drops below this fraction of `h2`.
pub const TOUCHING_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Nondivergence,
    Divergence,
    Regularized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhsEvaluation {
    pub dfdt: Vec<f64>,
    pub formulation: Formulation,
    /// Seconds spent in the evaluation.
    pub wall_time: f64,
}

/// The two potentials whose derivative gives the divergence form.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    /// `PV int arctan(tanh((f(x) - f(x-b))/2) / tan(b/2)) db`.
    pub arctan: Vec<f64>,
    /// `int log(cosh(f(x)+h2) - cos(x-b)) w2(b) db`.
    pub log: Vec<f64>,
}

impl Potentials {
    /// `R/(2 pi) * arctan + 1/(4 pi) * log`, the flux whose derivative is `f_t`.
    pub fn flux(&self, params: &PhysicalParams) -> Vec<f64> {
        let cu = arctan_coefficient(params);
        self.arctan
            .iter()
            .zip(&self.log)
            .map(|(u, v)| cu * u + v / (4.0 * PI))
            .collect()
    }
}

/// Prefactor of the arctan potential, `R / (2 pi)`.
///
/// This is the value that reproduces the `R / (4 pi)` kernel of the
/// non-divergence form after differentiation.
pub fn arctan_coefficient(params: &PhysicalParams) -> f64 {
    params.rayleigh() / (2.0 * PI)
}

/// Periodic trapezoid sum `dx * sum(samples)` of an integrand sampled on the
/// half-offset points, which never include the singular point `b = 0`.
pub fn pv_quadrature_offset(dx: f64, samples: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (node, &value) in samples.iter().enumerate() {
        if !value.is_finite() {
            return Err(MuskatError::NonFinite { node, value });
        }
        acc += value;
    }
    Ok(dx * acc)
}

fn check_clearance(state: &InterfaceState, params: &PhysicalParams, guarded: bool) -> Result<()> {
    let clearance = state.min() + params.h2;
    let guard = if guarded { TOUCHING_GUARD * params.h2 } else { 0.0 };
    if clearance <= 0.0 || clearance < guard {
        return Err(MuskatError::TouchingRisk { clearance, guard });
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(node) => Err(MuskatError::NonFinite {
            node,
            value: values[node],
        }),
        None => Ok(()),
    }
}

/// Per-node quantities of the permeability-line geometry: `sinh(a)` and
/// `sinh^2(a/2)` with `a = f + h2`.
struct LineGeometry {
    sinh_a: Vec<f64>,
    sinh2_half_a: Vec<f64>,
}

impl LineGeometry {
    fn new(f: &[f64], h2: f64) -> Self {
        let sinh_a = f.iter().map(|v| (v + h2).sinh()).collect();
        let sinh2_half_a = f
            .iter()
            .map(|v| {
                let s = (0.5 * (v + h2)).sinh();
                s * s
            })
            .collect();
        Self { sinh_a, sinh2_half_a }
    }
}

/// Vorticity density on the permeability line from its defining integral,
/// `A int sinh(h2 + f(g)) f'(g) / (cosh(h2 + f(g)) - cos(b - g)) dg`.
pub fn vorticity_full(state: &InterfaceState, params: &PhysicalParams) -> Result<Vec<f64>> {
    check_clearance(state, params, false)?;
    let grid = state.grid();
    let fp = derivative(grid, state.samples());
    let geo = LineGeometry::new(state.samples(), params.h2);
    let weights: Vec<f64> = geo.sinh_a.iter().zip(&fp).map(|(s, d)| s * d).collect();
    let omega = line_convolution(grid, params.coupling(), &geo, |j, _| weights[j]);
    check_finite(&omega)?;
    Ok(omega)
}

/// Derivative-free form of the vorticity density,
/// `A int sin(b - g) / (cosh(h2 + f(g)) - cos(b - g)) dg`.
///
/// It differs from [`vorticity_full`] by the integral of a total derivative.
pub fn vorticity_reduced(state: &InterfaceState, params: &PhysicalParams) -> Result<Vec<f64>> {
    check_clearance(state, params, false)?;
    let grid = state.grid();
    let geo = LineGeometry::new(state.samples(), params.h2);
    let sin_node = &grid.ops().sin_node;
    let omega = line_convolution(grid, params.coupling(), &geo, |_, d| sin_node[d]);
    check_finite(&omega)?;
    Ok(omega)
}

/// `coef * dx * sum_d numer(j, d) / (cosh(a_j) - cos(d dx))` with `j = i - d`.
fn line_convolution<F>(grid: &TorusGrid, coef: f64, geo: &LineGeometry, numer: F) -> Vec<f64>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let n = grid.n();
    if coef == 0.0 {
        return vec![0.0; n];
    }
    let s2 = &grid.ops().sin2_half_node;
    let dx = grid.dx();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (d, s2d) in s2.iter().enumerate() {
                let j = (i + n - d) % n;
                acc += numer(j, d) / (2.0 * (geo.sinh2_half_a[j] + s2d));
            }
            coef * dx * acc
        })
        .collect()
}

/// Index of the half node holding `x_i - b_j`.
#[inline]
fn half_index(i: usize, j: usize, n: usize) -> usize {
    (i + n + n / 2 - j - 1) % n
}

/// Right-hand side of the contour equation in its non-divergence form.
pub fn rhs_nondivergence(state: &InterfaceState, params: &PhysicalParams) -> Result<RhsEvaluation> {
    let start = Instant::now();
    let dfdt = nondivergence_values(state, params)?;
    Ok(RhsEvaluation {
        dfdt,
        formulation: Formulation::Nondivergence,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn nondivergence_values(state: &InterfaceState, params: &PhysicalParams) -> Result<Vec<f64>> {
    check_clearance(state, params, true)?;
    let grid = state.grid();
    let n = grid.n();
    let dx = grid.dx();
    let ops = grid.ops();
    let f = state.samples();
    let fp = derivative(grid, f);
    let fh = half_shift(grid, f);
    let fph = half_shift(grid, &fp);
    let r = params.rayleigh();

    let omega = vorticity_reduced(state, params)?;
    let geo = LineGeometry::new(f, params.h2);
    let has_line = params.coupling() != 0.0;

    let values: Result<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut integrand = vec![0.0; n];
            for (j, slot) in integrand.iter_mut().enumerate() {
                let m = half_index(i, j, n);
                let sh = (0.5 * (f[i] - fh[m])).sinh();
                *slot = ops.sin_beta[j] * (fp[i] - fph[m]) / (2.0 * (sh * sh + ops.sin2_half_beta[j]));
            }
            let interface = r / (4.0 * PI) * pv_quadrature_offset(dx, &integrand)?;

            let mut line = 0.0;
            if has_line {
                let lead = fp[i] * geo.sinh_a[i];
                for d in 0..n {
                    let b = (i + n - d) % n;
                    line += (lead + ops.sin_node[d]) * omega[b]
                        / (2.0 * (geo.sinh2_half_a[i] + ops.sin2_half_node[d]));
                }
                line *= dx / (4.0 * PI);
            }
            Ok(interface + line)
        })
        .collect();
    let values = values?;
    check_finite(&values)?;
    Ok(values)
}

/// Arctan and log potentials of the divergence form.
pub fn potentials(state: &InterfaceState, params: &PhysicalParams) -> Result<Potentials> {
    check_clearance(state, params, true)?;
    let grid = state.grid();
    let n = grid.n();
    let dx = grid.dx();
    let ops = grid.ops();
    let f = state.samples();
    let fh = half_shift(grid, f);

    let omega = vorticity_reduced(state, params)?;
    let geo = LineGeometry::new(f, params.h2);
    let has_line = params.coupling() != 0.0;

    let pairs: Result<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut integrand = vec![0.0; n];
            for (j, slot) in integrand.iter_mut().enumerate() {
                let m = half_index(i, j, n);
                *slot = ((0.5 * (f[i] - fh[m])).tanh() * ops.cot_half_beta[j]).atan();
            }
            let u = pv_quadrature_offset(dx, &integrand)?;

            let mut v = 0.0;
            if has_line {
                for d in 0..n {
                    let b = (i + n - d) % n;
                    v += (2.0 * (geo.sinh2_half_a[i] + ops.sin2_half_node[d])).ln() * omega[b];
                }
                v *= dx;
            }
            Ok((u, v))
        })
        .collect();
    let (arctan, log): (Vec<f64>, Vec<f64>) = pairs?.into_iter().unzip();
    check_finite(&arctan)?;
    check_finite(&log)?;
    Ok(Potentials { arctan, log })
}

/// Right-hand side in divergence form: the spectral derivative of the flux
/// `R/(2 pi) U + 1/(4 pi) V`.
pub fn rhs_divergence(state: &InterfaceState, params: &PhysicalParams) -> Result<RhsEvaluation> {
    let start = Instant::now();
    let dfdt = divergence_values(state, params)?;
    Ok(RhsEvaluation {
        dfdt,
        formulation: Formulation::Divergence,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn divergence_values(state: &InterfaceState, params: &PhysicalParams) -> Result<Vec<f64>> {
    let flux = potentials(state, params)?.flux(params);
    let dfdt = derivative(state.grid(), &flux);
    check_finite(&dfdt)?;
    Ok(dfdt)
}

/// Non-divergence right-hand side plus the viscous term `epsilon * f_xx`.
pub fn rhs_regularized(state: &InterfaceState, params: &PhysicalParams, epsilon: f64) -> Result<RhsEvaluation> {
    let start = Instant::now();
    let dfdt = evaluate(state, params, RhsForm::Nondivergence, epsilon)?;
    Ok(RhsEvaluation {
        dfdt,
        formulation: Formulation::Regularized,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// `f_t` for the chosen form, with `epsilon * f_xx` added when `epsilon > 0`.
pub fn evaluate(state: &InterfaceState, params: &PhysicalParams, form: RhsForm, epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(MuskatError::InvalidConfig(format!("epsilon = {epsilon} must be >= 0")));
    }
    let mut dfdt = match form {
        RhsForm::Nondivergence => nondivergence_values(state, params)?,
        RhsForm::Divergence => divergence_values(state, params)?,
    };
    if epsilon > 0.0 {
        let fxx = second_derivative(state.grid(), state.samples());
        dfdt.iter_mut().zip(&fxx).for_each(|(v, d)| *v += epsilon * d);
    }
    Ok(dfdt)
}
