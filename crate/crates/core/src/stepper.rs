//! Time integration of the (regularized) contour equation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{record, DiagnosticsRecord};
use crate::error::{MuskatError, Result};
use crate::kernels::{evaluate, TOUCHING_GUARD};
use crate::spectral::{derivative, fourier_multiply, heat_mollify, sup_norm};
use crate::state::{InterfaceState, PhysicalParams, RhsForm, SolverConfig, StepperKind, TimeStep};

/// Largest `|z|` on the negative real axis inside the RK4 stability region (about 2.785).
const RK4_REAL_STABILITY: f64 = 2.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    TouchingRisk,
    BlowupDetected,
    UserStop,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::TouchingRisk => "touching_risk",
            Termination::BlowupDetected => "blowup_detected",
            Termination::UserStop => "user_stop",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<InterfaceState>,
    pub records: Vec<DiagnosticsRecord>,
    /// Step index of each stored state (0 for the initial state).
    pub step_indices: Vec<usize>,
    pub config: SolverConfig,
    pub params: PhysicalParams,
    pub termination: Termination,
    /// Reason for an early stop.
    pub message: Option<String>,
    /// Number of time steps taken.
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &InterfaceState {
        self.states.last().expect("a trajectory always holds its initial state")
    }

    /// `(t, value)` pairs of one diagnostics column.
    pub fn series<F: Fn(&DiagnosticsRecord) -> f64>(&self, column: F) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, column(r))).collect()
    }
}

/// `f + sum_i w_i k_i`; a non-finite result surfaces as an error.
fn advance(state: &InterfaceState, stages: &[(f64, &[f64])]) -> Result<InterfaceState> {
    let mut f = state.samples().to_vec();
    for (w, k) in stages {
        f.iter_mut().zip(k.iter()).for_each(|(v, d)| *v += w * d);
    }
    state.with_samples(f)
}

/// Classical RK4 step of `f_t = N(f) + epsilon f_xx` with the non-divergence `N`.
pub fn step_rk4(state: &InterfaceState, params: &PhysicalParams, dt: f64, epsilon: f64) -> Result<InterfaceState> {
    step_rk4_with(state, params, dt, epsilon, RhsForm::Nondivergence)
}

pub fn step_rk4_with(
    state: &InterfaceState,
    params: &PhysicalParams,
    dt: f64,
    epsilon: f64,
    form: RhsForm,
) -> Result<InterfaceState> {
    check_dt(dt)?;
    let rhs = |s: &InterfaceState| evaluate(s, params, form, epsilon);
    let k1 = rhs(state)?;
    let s2 = advance(state, &[(0.5 * dt, &k1)])?;
    let k2 = rhs(&s2)?;
    let s3 = advance(state, &[(0.5 * dt, &k2)])?;
    let k3 = rhs(&s3)?;
    let s4 = advance(state, &[(dt, &k3)])?;
    let k4 = rhs(&s4)?;
    let out = advance(
        state,
        &[(dt / 6.0, &k1), (dt / 3.0, &k2), (dt / 3.0, &k3), (dt / 6.0, &k4)],
    )?;
    Ok(out.with_time(state.t() + dt))
}

/// Integrating-factor RK4: the viscous term is integrated exactly in Fourier
/// space through `exp(-epsilon k^2 t)`, the nonlocal part by RK4.
pub fn step_ifrk4(state: &InterfaceState, params: &PhysicalParams, dt: f64, epsilon: f64) -> Result<InterfaceState> {
    step_ifrk4_with(state, params, dt, epsilon, RhsForm::Nondivergence)
}

pub fn step_ifrk4_with(
    state: &InterfaceState,
    params: &PhysicalParams,
    dt: f64,
    epsilon: f64,
    form: RhsForm,
) -> Result<InterfaceState> {
    check_dt(dt)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(MuskatError::InvalidConfig(format!("epsilon = {epsilon} must be >= 0")));
    }
    if epsilon == 0.0 {
        return step_rk4_with(state, params, dt, 0.0, form);
    }
    let grid = state.grid();
    let half = |v: &[f64]| fourier_multiply(grid, v, |k| (-epsilon * k * k * 0.5 * dt).exp());
    let full = |v: &[f64]| fourier_multiply(grid, v, |k| (-epsilon * k * k * dt).exp());
    let nonlinear = |s: &InterfaceState| evaluate(s, params, form, 0.0);
    let f = state.samples();
    let axpy = |base: &[f64], w: f64, k: &[f64]| -> Vec<f64> {
        base.iter().zip(k).map(|(b, d)| b + w * d).collect()
    };

    let k1 = nonlinear(state)?;
    let ef = half(f);
    let s2 = state.with_samples(half(&axpy(f, 0.5 * dt, &k1)))?;
    let k2 = nonlinear(&s2)?;
    let s3 = state.with_samples(axpy(&ef, 0.5 * dt, &k2))?;
    let k3 = nonlinear(&s3)?;
    let s4 = state.with_samples(axpy(&full(f), dt, &half(&k3)))?;
    let k4 = nonlinear(&s4)?;

    // E f + dt/6 (E k1 + 2 E_h (k2 + k3) + k4), E = full step, E_h = half step
    let mid: Vec<f64> = k2.iter().zip(&k3).map(|(a, b)| a + b).collect();
    let e_mid = half(&mid);
    let pre: Vec<f64> = f
        .iter()
        .zip(&k1)
        .map(|(v, k)| v + dt / 6.0 * k)
        .collect();
    let e_pre = full(&pre);
    let out: Vec<f64> = e_pre
        .iter()
        .zip(&e_mid)
        .zip(&k4)
        .map(|((a, m), k)| a + dt / 3.0 * m + dt / 6.0 * k)
        .collect();
    Ok(state.with_samples(out)?.with_time(state.t() + dt))
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(MuskatError::InvalidConfig(format!("dt = {dt} must be positive")))
    }
}

/// Transport-bound time step `cfl_safety * dx / v_max` with
/// `v_max = R/2 (1 + ||f_x||) + |A| 2 pi sinh(||f|| + h2) / (cosh h2 - 1)^2`.
///
/// With `epsilon > 0` and plain RK4 the viscous limit
/// `cfl_safety * 2.8 / (epsilon k_max^2)` also applies. Returns infinity
/// when neither bound is active.
pub fn select_dt(
    state: &InterfaceState,
    params: &PhysicalParams,
    cfl_safety: f64,
    epsilon: f64,
    stepper: StepperKind,
) -> f64 {
    let grid = state.grid();
    let f = state.samples();
    let slope = sup_norm(&derivative(grid, f));
    let h2 = params.h2;
    let v_max = 0.5 * params.rayleigh().abs() * (1.0 + slope)
        + params.coupling().abs() * 2.0 * PI * (sup_norm(f) + h2).sinh() / (h2.cosh() - 1.0).powi(2);
    let mut dt = if v_max > 0.0 {
        cfl_safety * grid.dx() / v_max
    } else {
        f64::INFINITY
    };
    let explicit_viscous = match stepper {
        StepperKind::Rk4 => true,
        StepperKind::Ifrk4 => false,
        StepperKind::Auto => epsilon == 0.0,
    };
    if epsilon > 0.0 && explicit_viscous {
        let k = grid.k_max();
        dt = dt.min(cfl_safety * RK4_REAL_STABILITY / (epsilon * k * k));
    }
    dt
}

/// Outcome of a positivity check on a freshly computed state.
fn touching(state: &InterfaceState, params: &PhysicalParams) -> Option<String> {
    let min = state.min();
    if min <= 0.0 {
        return Some(format!("min f = {min:.6e} <= 0 at t = {}", state.t()));
    }
    if min + params.h2 <= TOUCHING_GUARD * params.h2 {
        return Some(format!(
            "min f + h2 = {:.6e} within the touching guard at t = {}",
            min + params.h2,
            state.t()
        ));
    }
    None
}

fn classify(e: &MuskatError) -> Termination {
    match e {
        MuskatError::TouchingRisk { .. } | MuskatError::PositivityLost { .. } => Termination::TouchingRisk,
        _ => Termination::BlowupDetected,
    }
}

/// Integrates from `initial` to `config.t_end`.
///
/// Initial data is first mollified by the heat kernel for time
/// `config.mollify_eps`. Math failures end the run with a tagged
/// termination instead of an error; only an invalid configuration is an `Err`.
pub fn run(initial: &InterfaceState, params: &PhysicalParams, config: &SolverConfig) -> Result<Trajectory> {
    run_until(initial, params, config, |_, _| false)
}

/// As [`run`], but `stop` is polled after every recorded state and ends the
/// run with [`Termination::UserStop`] when it returns `true`.
pub fn run_until<S>(
    initial: &InterfaceState,
    params: &PhysicalParams,
    config: &SolverConfig,
    mut stop: S,
) -> Result<Trajectory>
where
    S: FnMut(&InterfaceState, &DiagnosticsRecord) -> bool,
{
    config.validate()?;
    params.validate()?;
    let start = heat_mollify(initial, config.mollify_eps)?;
    let stepper = config.resolved_stepper();
    let epsilon = config.epsilon;
    let form = config.formulation;

    let mut traj = Trajectory {
        records: vec![record(&start)],
        step_indices: vec![0],
        states: vec![start.clone()],
        config: config.clone(),
        params: *params,
        termination: Termination::Completed,
        message: None,
        steps: 0,
    };
    if let Some(msg) = touching(&start, params) {
        traj.termination = Termination::TouchingRisk;
        traj.message = Some(msg);
        return Ok(traj);
    }
    if stop(&start, &traj.records[0]) {
        traj.termination = Termination::UserStop;
        return Ok(traj);
    }

    let t_end = config.t_end;
    let t0 = start.t();
    let mut current = start;
    let mut recorded_last = true;
    while current.t() < t_end {
        let mut dt = match config.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto(_) => select_dt(&current, params, config.cfl_safety, epsilon, stepper),
        };
        if dt.is_nan() || dt <= 0.0 {
            traj.termination = Termination::BlowupDetected;
            traj.message = Some(format!("time step collapsed to {dt:e} at t = {}", current.t()));
            break;
        }
        let remaining = t_end - current.t();
        let last = dt >= remaining * (1.0 - 1e-12) || remaining <= 1e-12 * (t_end - t0).abs();
        if last {
            dt = remaining;
        }
        let stepped = match stepper {
            StepperKind::Ifrk4 => step_ifrk4_with(&current, params, dt, epsilon, form),
            _ => step_rk4_with(&current, params, dt, epsilon, form),
        };
        let next = match stepped {
            Ok(s) => s,
            Err(e) => {
                traj.termination = classify(&e);
                traj.message = Some(format!("step {} at t = {}: {e}", traj.steps + 1, current.t()));
                break;
            }
        };
        traj.steps += 1;
        let next = if last { next.with_time(t_end) } else { next };
        if let Some(msg) = touching(&next, params) {
            traj.termination = Termination::TouchingRisk;
            traj.message = Some(msg);
            break;
        }
        current = next;
        recorded_last = false;
        if traj.steps.is_multiple_of(config.output_every) || last {
            let rec = record(&current);
            traj.states.push(current.clone());
            traj.records.push(rec);
            traj.step_indices.push(traj.steps);
            recorded_last = true;
            if stop(&current, &rec) {
                traj.termination = Termination::UserStop;
                return Ok(traj);
            }
        }
    }
    if !recorded_last {
        traj.records.push(record(&current));
        traj.step_indices.push(traj.steps);
        traj.states.push(current);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::spectral::l2_norm;

    fn heat_only() -> PhysicalParams {
        PhysicalParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    fn homogeneous() -> PhysicalParams {
        PhysicalParams::new(1.0, 1.0, 0.0, 1.0, 1.0).unwrap()
    }

    fn sine(n: usize, amp: f64) -> InterfaceState {
        InterfaceState::from_fn(&TorusGrid::new(n).unwrap(), |x| 1.0 + amp * x.sin(), 0.0).unwrap()
    }

    fn dist(a: &InterfaceState, b: &InterfaceState) -> f64 {
        a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn flat_state_is_fixed() {
        let s = InterfaceState::from_fn(&TorusGrid::new(32).unwrap(), |_| 1.0, 0.0).unwrap();
        let p = PhysicalParams::new(2.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let out = step_rk4(&s, &p, 0.1, 0.0).unwrap();
        assert!(dist(&s, &out) < 1e-14);
        assert_eq!(out.t(), 0.1);
    }

    #[test]
    fn rk4_heat_factor() {
        let s = sine(32, 0.1);
        let (dt, eps) = (0.01, 0.1);
        let out = step_rk4(&s, &heat_only(), dt, eps).unwrap();
        let z: f64 = -eps * dt;
        let poly = 1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0;
        let exact = sine(32, 0.1 * poly);
        assert!(dist(&out, &exact) < 1e-15);
    }

    #[test]
    fn ifrk4_is_exact_for_heat() {
        let s = sine(32, 0.1);
        let out = step_ifrk4(&s, &heat_only(), 0.5, 0.1).unwrap();
        let exact = sine(32, 0.1 * (-0.05f64).exp());
        assert!(dist(&out, &exact) < 1e-15);
    }

    #[test]
    fn ifrk4_without_viscosity_is_rk4() {
        let s = sine(64, 0.2);
        let p = homogeneous();
        let a = step_ifrk4(&s, &p, 0.01, 0.0).unwrap();
        let b = step_rk4(&s, &p, 0.01, 0.0).unwrap();
        assert_eq!(a.samples(), b.samples());
    }

    #[test]
    fn local_error_is_fifth_order() {
        let s = sine(64, 0.2);
        let p = PhysicalParams::new(2.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let reference = |dt: f64| {
            let mut r = s.clone();
            for _ in 0..16 {
                r = step_rk4(&r, &p, dt / 16.0, 0.0).unwrap();
            }
            r
        };
        let errs: Vec<f64> = [0.2, 0.1]
            .iter()
            .map(|&dt| dist(&step_rk4(&s, &p, dt, 0.0).unwrap(), &reference(dt)))
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 4.5, "local order {order}");
    }

    #[test]
    fn integrators_agree_with_mixed_terms() {
        let s = sine(64, 0.2);
        let p = homogeneous();
        let lo = |step: fn(&InterfaceState, &PhysicalParams, f64, f64) -> Result<InterfaceState>| {
            let mut r = s.clone();
            for _ in 0..100 {
                r = step(&r, &p, 1e-3, 0.05).unwrap();
            }
            r
        };
        assert!(dist(&lo(step_rk4), &lo(step_ifrk4)) < 1e-10);
    }

    #[test]
    fn dt_selection() {
        let p = homogeneous();
        let s = sine(64, 0.2);
        let dt = select_dt(&s, &p, 0.5, 0.0, StepperKind::Rk4);
        let slope = sup_norm(&derivative(s.grid(), s.samples()));
        assert!((dt - 0.5 * s.grid().dx() / (0.5 * (1.0 + slope))).abs() < 1e-15);
        let fine = select_dt(&sine(128, 0.2), &p, 0.5, 0.0, StepperKind::Rk4);
        assert!((dt / fine - 2.0).abs() < 1e-10);
        assert!(select_dt(&s, &p, 0.5, 1.0, StepperKind::Rk4) < dt);
        assert_eq!(select_dt(&s, &p, 0.5, 1.0, StepperKind::Ifrk4), dt);
        assert_eq!(select_dt(&s, &heat_only(), 0.5, 0.0, StepperKind::Rk4), f64::INFINITY);
    }

    #[test]
    fn rejects_bad_dt() {
        assert!(step_rk4(&sine(32, 0.1), &homogeneous(), 0.0, 0.0).is_err());
        assert!(step_ifrk4(&sine(32, 0.1), &homogeneous(), f64::NAN, 0.1).is_err());
    }

    fn config(t_end: f64) -> SolverConfig {
        SolverConfig {
            t_end,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn flat_run_stays_flat() {
        let s = InterfaceState::from_fn(&TorusGrid::new(32).unwrap(), |_| 1.0, 0.0).unwrap();
        let p = PhysicalParams::new(2.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let traj = run(&s, &p, &SolverConfig { dt: TimeStep::Fixed(0.1), ..config(1.0) }).unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        assert_eq!(traj.final_state().t(), 1.0);
        assert!(dist(traj.final_state(), &s) < 1e-13);
        assert_eq!(traj.records.len(), traj.steps + 1);
    }

    #[test]
    fn homogeneous_max_decreases() {
        let traj = run(&sine(64, 0.3), &homogeneous(), &config(1.0)).unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        assert!(traj.records.windows(2).all(|w| w[1].fmax <= w[0].fmax + 1e-14));
        assert!(traj.final_state().max() < 1.25);
    }

    #[test]
    fn output_every_thins_records() {
        let cfg = SolverConfig {
            dt: TimeStep::Fixed(0.01),
            output_every: 7,
            ..config(0.2)
        };
        let traj = run(&sine(32, 0.1), &homogeneous(), &cfg).unwrap();
        assert_eq!(traj.steps, 20);
        let times: Vec<f64> = traj.records.iter().map(|r| r.t).collect();
        assert_eq!(times.len(), 4);
        assert_eq!(traj.step_indices, vec![0, 7, 14, 20]);
        assert_eq!(*times.last().unwrap(), 0.2);
    }

    #[test]
    fn negative_data_is_touching_risk() {
        let s = InterfaceState::from_fn(&TorusGrid::new(32).unwrap(), |x| 0.05 + 0.1 * x.sin(), 0.0).unwrap();
        let traj = run(&s, &homogeneous(), &config(1.0)).unwrap();
        assert_eq!(traj.termination, Termination::TouchingRisk);
        assert_eq!(traj.steps, 0);
    }

    #[test]
    fn overflow_is_blowup() {
        let s = InterfaceState::from_fn(&TorusGrid::new(32).unwrap(), |x| 800.0 + 0.1 * x.sin(), 0.0).unwrap();
        let p = PhysicalParams::new(2.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let traj = run(&s, &p, &config(1.0)).unwrap();
        assert_eq!(traj.termination, Termination::BlowupDetected);
        assert_eq!(traj.records.len(), 1);
    }

    #[test]
    fn user_stop() {
        let traj = run_until(&sine(32, 0.1), &homogeneous(), &config(1.0), |s, _| s.t() > 0.1).unwrap();
        assert_eq!(traj.termination, Termination::UserStop);
        assert!(traj.final_state().t() < 1.0);
    }

    #[test]
    fn vanishing_viscosity() {
        let s = sine(64, 0.2);
        let p = homogeneous();
        let finals: Vec<_> = [1e-2, 1e-3, 1e-4, 0.0]
            .iter()
            .map(|&epsilon| {
                let cfg = SolverConfig { epsilon, ..config(0.5) };
                run(&s, &p, &cfg).unwrap().final_state().clone()
            })
            .collect();
        let gaps: Vec<f64> = finals
            .windows(2)
            .map(|w| {
                let d: Vec<f64> = w[0].samples().iter().zip(w[1].samples()).map(|(a, b)| a - b).collect();
                l2_norm(w[0].grid(), &d)
            })
            .collect();
        assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{gaps:?}");
    }

    #[test]
    fn reruns_are_identical() {
        let p = PhysicalParams::new(2.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let a = run(&sine(64, 0.2), &p, &config(0.3)).unwrap();
        let b = run(&sine(64, 0.2), &p, &config(0.3)).unwrap();
        assert_eq!(a.final_state().samples(), b.final_state().samples());
    }
}
