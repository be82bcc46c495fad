//! Uniform periodic grid on `[-pi, pi)` together with the precomputed
//! circulant stencils used for spectral differentiation and half-node
//! interpolation.
//!
//! Every discrete operator here is applied as a circulant sum taken in a
//! fixed offset order, so shifting the input by whole nodes shifts the
//! output by the same number of nodes bit for bit.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{MuskatError, Result};

/// Smallest admissible number of nodes.
pub const MIN_NODES: usize = 16;

#[derive(Clone)]
pub struct TorusGrid {
    n: usize,
    dx: f64,
    nodes: Arc<[f64]>,
    ops: Arc<GridOperators>,
}

/// Stencils and trigonometric tables for one grid size.
pub(crate) struct GridOperators {
    /// First-derivative stencil, indexed by offset `d = 0..=n/2`
    /// (antisymmetric: the coefficient for offset `-d` is `-d1[d]`).
    pub d1: Vec<f64>,
    /// Second-derivative stencil, indexed by offset `d = 0..=n/2` (symmetric).
    pub d2: Vec<f64>,
    /// Weights giving `f(x_m + dx/2) = sum_d half[d] * f_{m-d}`.
    pub half: Vec<f64>,
    /// `sin(d dx)` for node offsets `d = 0..n`.
    pub sin_node: Vec<f64>,
    /// `sin^2(d dx / 2)` for node offsets.
    pub sin2_half_node: Vec<f64>,
    /// Half-offset quadrature points `beta_j = -pi + (j + 1/2) dx`.
    pub beta: Vec<f64>,
    pub sin_beta: Vec<f64>,
    pub sin2_half_beta: Vec<f64>,
    pub cot_half_beta: Vec<f64>,
    pub fft_forward: Arc<dyn Fft<f64>>,
    pub fft_inverse: Arc<dyn Fft<f64>>,
}

impl TorusGrid {
    /// Builds a grid with `n` nodes; `n` must be even and at least [`MIN_NODES`].
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES || !n.is_multiple_of(2) {
            return Err(MuskatError::InvalidGrid(format!(
                "n = {n}: need an even number of nodes >= {MIN_NODES}"
            )));
        }
        let dx = 2.0 * PI / n as f64;
        let nodes: Arc<[f64]> = (0..n).map(|j| -PI + j as f64 * dx).collect();
        let ops = Arc::new(GridOperators::build(n));
        Ok(Self { n, dx, nodes, ops })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Wavenumber carried by FFT bin `idx`, in the range `-n/2+1 ..= n/2`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let idx = idx as i64;
        if idx <= n / 2 {
            idx
        } else {
            idx - n
        }
    }

    /// Wavenumbers in FFT bin order.
    pub fn wavenumbers(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Largest resolved wavenumber `n/2`.
    pub fn k_max(&self) -> f64 {
        (self.n / 2) as f64
    }

    /// Quadrature points `-pi + (j + 1/2) dx` for the singular kernel.
    pub fn half_offset_points(&self) -> &[f64] {
        &self.ops.beta
    }

    /// Evaluates `g` at every node.
    pub fn sample<F: Fn(f64) -> f64>(&self, g: F) -> Vec<f64> {
        self.nodes.iter().map(|&x| g(x)).collect()
    }

    pub(crate) fn ops(&self) -> &GridOperators {
        &self.ops
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("n", &self.n)
            .field("dx", &self.dx)
            .finish()
    }
}

impl GridOperators {
    fn build(n: usize) -> Self {
        let half_n = n / 2;
        // cos/sin(2 pi q / n) and cos(pi q / n) from exact integer angles
        let sin_tab: Vec<f64> = (0..n).map(|q| exact_sin(q, n)).collect();
        let cos_tab: Vec<f64> = (0..n).map(|q| exact_cos(q, n)).collect();
        let cos_tab2: Vec<f64> = (0..2 * n).map(|q| (PI * q as f64 / n as f64).cos()).collect();

        let mut d1 = vec![0.0; half_n + 1];
        let mut d2 = vec![0.0; half_n + 1];
        for d in 1..=half_n {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for k in 1..half_n {
                let q = (k * d) % n;
                s1 += k as f64 * sin_tab[q];
                s2 += (k * k) as f64 * cos_tab[q];
            }
            d1[d] = -2.0 * s1 / n as f64;
            d2[d] = -2.0 * s2 / n as f64;
        }
        d1[half_n] = 0.0;
        // zero row sum: the constant mode has zero second derivative
        d2[0] = -(2.0 * d2[1..half_n].iter().sum::<f64>() + d2[half_n]);

        let half: Vec<f64> = (0..n)
            .map(|d| {
                let mut s = 1.0;
                for k in 1..half_n {
                    s += 2.0 * cos_tab2[(k * (2 * d + 1)) % (2 * n)];
                }
                s / n as f64
            })
            .collect();

        let sin_node = sin_tab.clone();
        let sin2_half_node: Vec<f64> = (0..n)
            .map(|d| {
                let s = (PI * d as f64 / n as f64).sin();
                s * s
            })
            .collect();

        let beta: Vec<f64> = (0..n)
            .map(|j| PI * (2.0 * j as f64 + 1.0 - n as f64) / n as f64)
            .collect();
        let sin_beta = beta.iter().map(|b| b.sin()).collect();
        let sin2_half_beta = beta
            .iter()
            .map(|b| {
                let s = (0.5 * b).sin();
                s * s
            })
            .collect();
        let cot_half_beta = beta.iter().map(|b| 1.0 / (0.5 * b).tan()).collect();

        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n);
        let fft_inverse = planner.plan_fft_inverse(n);

        Self {
            d1,
            d2,
            half,
            sin_node,
            sin2_half_node,
            beta,
            sin_beta,
            sin2_half_beta,
            cot_half_beta,
            fft_forward,
            fft_inverse,
        }
    }
}

/// `sin(2 pi q / n)` with exact zeros at multiples of `pi` and exact odd symmetry.
fn exact_sin(q: usize, n: usize) -> f64 {
    let q = q % n;
    if q == 0 || 2 * q == n {
        return 0.0;
    }
    if 2 * q > n {
        return -exact_sin(n - q, n);
    }
    if 4 * q == n {
        return 1.0;
    }
    (2.0 * PI * q as f64 / n as f64).sin()
}

/// `cos(2 pi q / n)` with the same integer symmetries as [`exact_sin`].
fn exact_cos(q: usize, n: usize) -> f64 {
    let q = q % n;
    if n.is_multiple_of(4) {
        exact_sin(q + n / 4, n)
    } else if 2 * q > n {
        exact_cos(n - q, n)
    } else {
        (2.0 * PI * q as f64 / n as f64).cos()
    }
}
