//! Interface samples, physical parameters and solver settings.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::grid::TorusGrid;

/// Samples of the interface height `f(x, t)` on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceState {
    grid: TorusGrid,
    f: Vec<f64>,
    t: f64,
}

impl InterfaceState {
    pub fn new(grid: TorusGrid, f: Vec<f64>, t: f64) -> Result<Self> {
        if f.len() != grid.n() {
            return Err(MuskatError::InvalidState(format!(
                "{} samples for a grid of {} nodes",
                f.len(),
                grid.n()
            )));
        }
        if let Some((node, &value)) = f.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(MuskatError::NonFinite { node, value });
        }
        if !t.is_finite() {
            return Err(MuskatError::InvalidState(format!("time {t} is not finite")));
        }
        Ok(Self { grid, f, t })
    }

    /// Samples `profile` at the grid nodes.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: &TorusGrid, profile: F, t: f64) -> Result<Self> {
        let f = grid.sample(profile);
        Self::new(grid.clone(), f, t)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.f
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.f
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn min(&self) -> f64 {
        self.f.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.f.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `min_j f_j > 0`: the interface stays above the `y = 0` reference line.
    pub fn is_positive(&self) -> bool {
        self.min() > 0.0
    }

    /// Same grid and time, new samples.
    pub fn with_samples(&self, f: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), f, self.t)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Cyclic shift by `s` nodes: the result at node `j` is the input at node `j - s`.
    pub fn shifted(&self, s: usize) -> Self {
        let n = self.f.len();
        let f = (0..n).map(|j| self.f[(j + n - s % n) % n]).collect();
        Self {
            grid: self.grid.clone(),
            f,
            t: self.t,
        }
    }
}

/// Permeabilities, densities and the depth of the permeability line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub h2: f64,
}

impl PhysicalParams {
    pub fn new(kappa_plus: f64, kappa_minus: f64, rho_plus: f64, rho_minus: f64, h2: f64) -> Result<Self> {
        let p = Self {
            kappa_plus,
            kappa_minus,
            rho_plus,
            rho_minus,
            h2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa_plus, self.kappa_minus, self.rho_plus, self.rho_minus, self.h2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(MuskatError::InvalidParams("all parameters must be finite".into()));
        }
        if self.kappa_plus <= 0.0 || self.kappa_minus <= 0.0 {
            return Err(MuskatError::InvalidParams(format!(
                "permeabilities must be positive (kappa+ = {}, kappa- = {})",
                self.kappa_plus, self.kappa_minus
            )));
        }
        if self.h2 <= 0.0 {
            return Err(MuskatError::InvalidParams(format!("h2 = {} must be positive", self.h2)));
        }
        Ok(())
    }

    /// Permeability contrast `K = (kappa+ - kappa-) / (kappa+ + kappa-)`, always in `(-1, 1)`.
    pub fn contrast(&self) -> f64 {
        (self.kappa_plus - self.kappa_minus) / (self.kappa_plus + self.kappa_minus)
    }

    /// `R = kappa+ (rho- - rho+)`.
    pub fn rayleigh(&self) -> f64 {
        self.kappa_plus * (self.rho_minus - self.rho_plus)
    }

    /// Coupling constant `A = R K / (2 pi)` of the permeability-line vorticity.
    pub fn coupling(&self) -> f64 {
        self.rayleigh() * self.contrast() / (2.0 * PI)
    }

    /// Rayleigh-Taylor stable: the heavier fluid is below.
    pub fn is_stable(&self) -> bool {
        self.rayleigh() > 0.0
    }

    /// Flag raised when a simulation is run outside the stable regime.
    pub fn stability_warning(&self) -> Option<String> {
        (!self.is_stable()).then(|| {
            format!(
                "R = {:.6e} <= 0: Rayleigh-Taylor unstable or neutral configuration",
                self.rayleigh()
            )
        })
    }
}

/// Time-step choice: a fixed step or one picked from the transport bound each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeStep {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl TimeStep {
    pub const AUTO: TimeStep = TimeStep::Auto(AutoTag::Auto);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StepperKind {
    /// Integrating-factor RK4 when `epsilon > 0`, plain RK4 otherwise.
    #[default]
    Auto,
    Rk4,
    Ifrk4,
}

/// Which form of the contour equation drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RhsForm {
    #[default]
    Nondivergence,
    Divergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Viscosity added as `epsilon * f_xx`.
    #[serde(default)]
    pub epsilon: f64,
    /// Heat-kernel time used to mollify the initial data.
    #[serde(default)]
    pub mollify_eps: f64,
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: TimeStep,
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    /// Refinement factor for oracle cross-checks; the production kernels ignore it.
    #[serde(default = "default_oversample")]
    pub quadrature_oversample: usize,
    #[serde(default)]
    pub stepper: StepperKind,
    #[serde(default)]
    pub formulation: RhsForm,
}

fn default_dt() -> TimeStep {
    TimeStep::AUTO
}

fn default_cfl() -> f64 {
    0.5
}

fn default_output_every() -> usize {
    1
}

fn default_oversample() -> usize {
    1
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            mollify_eps: 0.0,
            t_end: 1.0,
            dt: TimeStep::AUTO,
            cfl_safety: default_cfl(),
            output_every: 1,
            quadrature_oversample: 1,
            stepper: StepperKind::Auto,
            formulation: RhsForm::Nondivergence,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MuskatError::InvalidConfig(msg));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon = {} must be finite and >= 0", self.epsilon));
        }
        if !(self.mollify_eps >= 0.0 && self.mollify_eps.is_finite()) {
            return bad(format!("mollify_eps = {} must be finite and >= 0", self.mollify_eps));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt = {dt} must be positive"));
            }
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety = {} must lie in (0, 1]", self.cfl_safety));
        }
        if self.output_every == 0 {
            return bad("output_every must be at least 1".into());
        }
        if self.quadrature_oversample == 0 {
            return bad("quadrature_oversample must be at least 1".into());
        }
        Ok(())
    }

    /// The stepper actually used once `Auto` is resolved.
    pub fn resolved_stepper(&self) -> StepperKind {
        match self.stepper {
            StepperKind::Auto if self.epsilon > 0.0 => StepperKind::Ifrk4,
            StepperKind::Auto => StepperKind::Rk4,
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants() {
        let p = PhysicalParams::new(2.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert!((p.contrast() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.rayleigh(), 2.0);
        assert!((p.coupling() - 2.0 / 3.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(p.stability_warning().is_none());
    }

    #[test]
    fn contrast_is_bounded() {
        for &(a, b) in &[(1e-6, 1e6), (1e6, 1e-6), (1.0, 1.0), (3.0, 0.5)] {
            let p = PhysicalParams::new(a, b, 0.0, 1.0, 1.0).unwrap();
            assert!(p.contrast().abs() < 1.0);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(PhysicalParams::new(0.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 0.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, 0.0, 1.0, 0.0).is_err());
        let unstable = PhysicalParams::new(1.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(unstable.stability_warning().is_some());
    }

    #[test]
    fn state_validation() {
        let g = TorusGrid::new(16).unwrap();
        assert!(InterfaceState::new(g.clone(), vec![1.0; 15], 0.0).is_err());
        let mut f = vec![1.0; 16];
        f[3] = f64::NAN;
        assert!(matches!(
            InterfaceState::new(g.clone(), f, 0.0),
            Err(MuskatError::NonFinite { node: 3, .. })
        ));
        let s = InterfaceState::from_fn(&g, |x| 1.0 + 0.5 * x.sin(), 0.0).unwrap();
        assert!(s.is_positive());
        let shifted = s.shifted(3);
        assert_eq!(shifted.samples()[3], s.samples()[0]);
        assert_eq!(shifted.samples()[0], s.samples()[13]);
    }

    #[test]
    fn solver_config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.dt = TimeStep::Fixed(0.0);
        assert!(c.validate().is_err());
        c.dt = TimeStep::AUTO;
        c.cfl_safety = 1.5;
        assert!(c.validate().is_err());
        c.cfl_safety = 0.5;
        c.epsilon = 0.1;
        assert_eq!(c.resolved_stepper(), StepperKind::Ifrk4);
    }
}
