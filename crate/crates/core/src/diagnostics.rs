//! Observables, smallness conditions and decay-rate estimates.
//!
//! `check_teo1_condition` evaluates the oscillation-decay hypothesis with the
//! actual mean of the data; `decay_rate_mu` evaluates the guaranteed rate
//! with the mean normalized to 1, which is the form the rate is derived in.
//! All extrema are grid extrema.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::kernels::potentials;
use crate::spectral::{derivative, extrema, l2_norm, mean, sup_norm};
use crate::state::{InterfaceState, PhysicalParams};
use crate::stepper::Trajectory;

/// Scalar observables of one interface state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mean: f64,
    pub fmax: f64,
    pub fmin: f64,
    /// `fmax - fmin`.
    pub osc: f64,
    /// Grid maximum of `|f_x|`.
    pub lip: f64,
    pub dmax: f64,
    pub dmin: f64,
    pub l2: f64,
    pub dl2: f64,
}

impl DiagnosticsRecord {
    /// Column order used by the CSV writers.
    pub const COLUMNS: [&'static str; 10] =
        ["t", "mean", "fmax", "fmin", "osc", "lip", "dmax", "dmin", "l2", "dl2"];

    pub fn values(&self) -> [f64; 10] {
        [
            self.t, self.mean, self.fmax, self.fmin, self.osc, self.lip, self.dmax, self.dmin, self.l2,
            self.dl2,
        ]
    }
}

pub fn record(state: &InterfaceState) -> DiagnosticsRecord {
    let grid = state.grid();
    let f = state.samples();
    let fx = derivative(grid, f);
    let (fmax, fmin) = extrema(f);
    let (dmax, dmin) = extrema(&fx);
    DiagnosticsRecord {
        t: state.t(),
        mean: mean(state),
        fmax,
        fmin,
        osc: fmax - fmin,
        lip: dmax.max(-dmin),
        dmax,
        dmin,
        l2: l2_norm(grid, f),
        dl2: l2_norm(grid, &fx),
    }
}

/// Outcome of a smallness-condition check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `margin > 0`; borderline data counts as unsatisfied.
    pub satisfied: bool,
    pub margin: f64,
    /// Guaranteed decay rate, when one is available.
    pub mu: Option<f64>,
    pub inputs: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn require_stable(params: &PhysicalParams) -> Result<()> {
    if params.is_stable() {
        Ok(())
    } else {
        Err(MuskatError::StabilityRegime { r: params.rayleigh() })
    }
}

fn require_positive(f0: &InterfaceState) -> Result<()> {
    let min = f0.min();
    if min > 0.0 {
        Ok(())
    } else {
        Err(MuskatError::PositivityLost { min })
    }
}

/// `1/cosh(O/2) - 8|K|/pi^2 * sinh(m + O + h2) / (cosh(h2 + m) - 1)^3`.
fn oscillation_margin(osc0: f64, mean0: f64, contrast: f64, h2: f64) -> f64 {
    1.0 / (0.5 * osc0).cosh()
        - 8.0 * contrast.abs() / (PI * PI) * (mean0 + osc0 + h2).sinh() / ((h2 + mean0).cosh() - 1.0).powi(3)
}

/// Smallness condition under which the oscillation `max f - min f` decays
/// exponentially.
pub fn check_teo1_condition(f0: &InterfaceState, params: &PhysicalParams) -> Result<ConditionReport> {
    require_stable(params)?;
    require_positive(f0)?;
    let (fmax, fmin) = extrema(f0.samples());
    let osc0 = fmax - fmin;
    let mean0 = mean(f0);
    let margin = oscillation_margin(osc0, mean0, params.contrast(), params.h2);

    let mut notes = Vec::new();
    let mu = match decay_rate_mu(f0, params) {
        Ok(mu) => {
            if (mean0 - 1.0).abs() > 1e-12 {
                notes.push(format!("decay rate evaluated with the mean normalized to 1 (actual mean {mean0})"));
            }
            Some(mu)
        }
        Err(e) => {
            notes.push(format!("no guaranteed decay rate: {e}"));
            None
        }
    };
    let inputs = BTreeMap::from([
        ("osc0".to_string(), osc0),
        ("mean0".to_string(), mean0),
        ("contrast".to_string(), params.contrast()),
        ("rayleigh".to_string(), params.rayleigh()),
        ("h2".to_string(), params.h2),
    ]);
    Ok(ConditionReport {
        satisfied: margin > 0.0,
        margin,
        mu,
        inputs,
        notes,
    })
}

/// Guaranteed oscillation decay rate
/// `mu = R/2 [1/cosh(O/2) - 16|A| / (R pi (cosh(h2+1) - 1)^3) sinh(1 + O + h2)]`,
/// with the data shifted to unit mean.
pub fn decay_rate_mu(f0: &InterfaceState, params: &PhysicalParams) -> Result<f64> {
    require_stable(params)?;
    let osc0 = crate::spectral::osc(f0.samples());
    let h2 = params.h2;
    let normalized = oscillation_margin(osc0, 1.0, params.contrast(), h2);
    if normalized <= 0.0 {
        return Err(MuskatError::NoGuarantee { margin: normalized });
    }
    let r = params.rayleigh();
    let a = params.coupling().abs();
    let mu = 0.5 * r
        * (1.0 / (0.5 * osc0).cosh()
            - 16.0 * a / (r * PI * ((h2 + 1.0).cosh() - 1.0).powi(3)) * (1.0 + osc0 + h2).sinh());
    Ok(mu)
}

/// Upper limit `(2/pi) asinh(1)` of the domain of [`p_of_z`].
pub fn p_of_z_limit() -> f64 {
    2.0 / PI * 1.0f64.asinh()
}

/// Series bound `[1/(1 - sinh(z pi/2)^2)^2 - 1] + z/2 (2 pi cosh(pi z) + pi sinh(pi z))`.
pub fn p_of_z(z: f64) -> Result<f64> {
    let s = (0.5 * PI * z).sinh();
    if z.is_nan() || z < 0.0 || s >= 1.0 {
        return Err(MuskatError::OutOfDomain {
            value: z,
            reason: format!("need 0 <= z < {:.12}", p_of_z_limit()),
        });
    }
    let r = s * s;
    Ok(1.0 / ((1.0 - r) * (1.0 - r)) - 1.0 + 0.5 * z * (2.0 * PI * (PI * z).cosh() + PI * (PI * z).sinh()))
}

/// Smallness condition for the decay of `||f_x||_inf`.
///
/// The margin is the negated right-hand side of the hypothesis, so a
/// positive margin means the hypothesis holds. The hypothesis also requires
/// the oscillation condition; its status is echoed in the notes and under
/// `inputs["oscillation_margin"]`.
pub fn check_teo2_condition(f0: &InterfaceState, params: &PhysicalParams) -> Result<ConditionReport> {
    require_stable(params)?;
    require_positive(f0)?;
    let z = sup_norm(&derivative(f0.grid(), f0.samples()));
    let p = p_of_z(z)?;
    let sup = sup_norm(f0.samples());
    let margin = lipschitz_margin(z, p, sup, params);

    let osc_report = check_teo1_condition(f0, params)?;
    let mut notes = vec!["no closed-form decay rate; fit the Lipschitz series instead".to_string()];
    if !osc_report.satisfied {
        notes.push("the oscillation condition fails, so the Lipschitz hypothesis is not met".to_string());
    }
    let inputs = BTreeMap::from([
        ("lip0".to_string(), z),
        ("p_of_lip0".to_string(), p),
        ("sup0".to_string(), sup),
        ("coupling".to_string(), params.coupling()),
        ("rayleigh".to_string(), params.rayleigh()),
        ("h2".to_string(), params.h2),
        ("oscillation_margin".to_string(), osc_report.margin),
    ]);
    Ok(ConditionReport {
        satisfied: margin > 0.0,
        margin,
        mu: None,
        inputs,
        notes,
    })
}

fn lipschitz_margin(z: f64, p: f64, sup: f64, params: &PhysicalParams) -> f64 {
    let a = params.coupling().abs();
    let h2 = params.h2;
    let gap = h2.cosh() - 1.0;
    let lift = sup + h2;
    0.25 * params.rayleigh() * z * (1.0 - p)
        - PI * a * lift.cosh() / gap.powi(2) * z * z
        - 2.0 * PI * a * lift.sinh().powi(2) / gap.powi(3) * z * z
        - 2.0 * PI * a * lift.sinh() / gap.powi(3) * z
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub mu_hat: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `log(value) = c - mu t`.
pub fn fit_decay_rate(series: &[(f64, f64)]) -> Result<DecayFit> {
    if series.len() < 5 {
        return Err(MuskatError::InvalidSeries(format!(
            "need at least 5 samples, got {}",
            series.len()
        )));
    }
    if let Some(&(t, v)) = series.iter().find(|(t, v)| !(*v > 0.0 && v.is_finite() && t.is_finite())) {
        return Err(MuskatError::InvalidSeries(format!("non-positive value {v} at t = {t}")));
    }
    let n = series.len() as f64;
    let tm = series.iter().map(|(t, _)| t).sum::<f64>() / n;
    let ym = series.iter().map(|(_, v)| v.ln()).sum::<f64>() / n;
    let (mut sty, mut stt, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in series {
        let dt = t - tm;
        let dy = v.ln() - ym;
        sty += dt * dy;
        stt += dt * dt;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(MuskatError::InvalidSeries("all samples share one time".into()));
    }
    let slope = sty / stt;
    let r_squared = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Ok(DecayFit {
        mu_hat: -slope,
        r_squared,
    })
}

/// Space-time test function for the weak formulation.
pub trait TestFunction {
    fn value(&self, x: f64, t: f64) -> f64;
    fn time_derivative(&self, x: f64, t: f64) -> f64;
    fn space_derivative(&self, x: f64, t: f64) -> f64;
}

/// `chi(t) * cos(k x)` (or `sin`), with `chi` the smooth bump
/// `exp(1 - 1/(1 - s^2))` on `(t_start, t_stop)`, flat to all orders at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpMode {
    pub t_start: f64,
    pub t_stop: f64,
    pub k: f64,
    pub sine: bool,
}

impl BumpMode {
    pub fn cosine(t_start: f64, t_stop: f64, k: f64) -> Self {
        Self {
            t_start,
            t_stop,
            k,
            sine: false,
        }
    }

    fn scaled(&self, t: f64) -> Option<f64> {
        let s = (2.0 * t - (self.t_start + self.t_stop)) / (self.t_stop - self.t_start);
        (s.abs() < 1.0).then_some(s)
    }

    fn chi(&self, t: f64) -> f64 {
        self.scaled(t).map_or(0.0, |s| (1.0 - 1.0 / (1.0 - s * s)).exp())
    }

    fn chi_prime(&self, t: f64) -> f64 {
        self.scaled(t).map_or(0.0, |s| {
            let q = 1.0 - s * s;
            (1.0 - 1.0 / q).exp() * (-2.0 * s / (q * q)) * 2.0 / (self.t_stop - self.t_start)
        })
    }

    fn mode(&self, x: f64) -> (f64, f64) {
        let arg = self.k * x;
        if self.sine {
            (arg.sin(), self.k * arg.cos())
        } else {
            (arg.cos(), -self.k * arg.sin())
        }
    }
}

impl TestFunction for BumpMode {
    fn value(&self, x: f64, t: f64) -> f64 {
        self.chi(t) * self.mode(x).0
    }

    fn time_derivative(&self, x: f64, t: f64) -> f64 {
        self.chi_prime(t) * self.mode(x).0
    }

    fn space_derivative(&self, x: f64, t: f64) -> f64 {
        self.chi(t) * self.mode(x).1
    }
}

/// Discrete residual of the weak formulation along a stored trajectory:
///
/// ```text
/// -int phi(x,0) f0 dx - int int phi_t f dx dt + int int phi_x (R/(2 pi) U + V/(4 pi)) dx dt
/// ```
///
/// with `U`, `V` the arctan and log potentials. Periodic trapezoid in space,
/// trapezoid over the stored times.
pub fn weak_residual<T: TestFunction>(trajectory: &Trajectory, test_fn: &T) -> Result<f64> {
    let states = &trajectory.states;
    if states.len() < 2 {
        return Err(MuskatError::InvalidSeries(
            "weak residual needs at least two stored states".into(),
        ));
    }
    let params = &trajectory.params;
    let t_final = states[states.len() - 1].t();
    let grid = states[0].grid();
    let x = grid.nodes();
    let dx = grid.dx();

    let max_abs = x
        .iter()
        .map(|&xj| test_fn.value(xj, t_final).abs())
        .fold(0.0, f64::max);
    if max_abs > 1e-12 {
        return Err(MuskatError::SupportViolation { max_abs });
    }

    let f0 = &states[0];
    let t0 = f0.t();
    let initial: f64 = x
        .iter()
        .zip(f0.samples())
        .map(|(&xj, fj)| test_fn.value(xj, t0) * fj)
        .sum::<f64>()
        * dx;

    // integrand of the time integral at each stored time
    let mut slices = Vec::with_capacity(states.len());
    for s in states {
        let t = s.t();
        let flux = potentials(s, params)?.flux(params);
        let mut acc = 0.0;
        for ((&xj, fj), wj) in x.iter().zip(s.samples()).zip(&flux) {
            acc += -test_fn.time_derivative(xj, t) * fj + test_fn.space_derivative(xj, t) * wj;
        }
        slices.push((t, acc * dx));
    }
    let time_integral: f64 = slices
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    Ok(-initial + time_integral)
}
