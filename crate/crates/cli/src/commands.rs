use muskat_core::diagnostics::{check_teo1_condition, check_teo2_condition, decay_rate_mu, fit_decay_rate};
use muskat_core::spectral::heat_mollify;
use muskat_core::stepper::{run, select_dt};
use muskat_core::{ConditionReport, InterfaceState, Result as CoreResult, SolverConfig, Termination, TimeStep, Trajectory};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::CliError;
use crate::output::{fmt_f64, write_file, write_run};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_TOUCHING: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_OSCILLATION_ONLY: i32 = 4;
pub const EXIT_NEITHER: i32 = 5;

pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const CONVERGENCE_JSON: &str = "convergence.json";
pub const DECAY_SUMMARY: &str = "decay_summary.json";

fn termination_code(t: Termination) -> i32 {
    match t {
        Termination::Completed | Termination::UserStop => EXIT_OK,
        Termination::TouchingRisk => EXIT_TOUCHING,
        Termination::BlowupDetected => EXIT_BLOWUP,
    }
}

fn report_termination(traj: &Trajectory) -> i32 {
    if let Some(msg) = &traj.message {
        eprintln!("{}: {msg}", traj.termination.as_str());
    }
    termination_code(traj.termination)
}

fn warn_regime(config: &Config) {
    if let Some(w) = config.params.stability_warning() {
        eprintln!("warning: {w}");
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values always encode"));
}

pub fn cmd_run(config: &Config) -> Result<i32, CliError> {
    let initial = config.initial_state()?;
    warn_regime(config);
    let traj = run(&initial, &config.params, &config.solver)?;
    let outputs = write_run(config, &traj)?;
    println!(
        "{} after {} steps, t = {}; {} files in {}",
        traj.termination.as_str(),
        traj.steps,
        traj.final_state().t(),
        outputs.len(),
        config.output.dir.display()
    );
    Ok(report_termination(&traj))
}

fn report_json(r: &CoreResult<ConditionReport>) -> Value {
    match r {
        Ok(rep) => serde_json::to_value(rep).expect("reports always encode"),
        Err(e) => json!({ "satisfied": false, "error": e.to_string() }),
    }
}

fn satisfied(r: &CoreResult<ConditionReport>) -> bool {
    matches!(r, Ok(rep) if rep.satisfied)
}

pub fn cmd_check(config: &Config) -> Result<i32, CliError> {
    let f0 = heat_mollify(&config.initial_state()?, config.solver.mollify_eps)?;
    let osc = check_teo1_condition(&f0, &config.params);
    let lip = check_teo2_condition(&f0, &config.params);
    let (code, verdict) = match (satisfied(&osc), satisfied(&lip)) {
        (true, true) => (EXIT_OK, "both"),
        (true, false) => (EXIT_OSCILLATION_ONLY, "oscillation_only"),
        (false, _) => (EXIT_NEITHER, "neither"),
    };
    print_json(&json!({
        "oscillation_condition": report_json(&osc),
        "lipschitz_condition": report_json(&lip),
        "verdict": verdict,
    }));
    Ok(code)
}

#[derive(Debug, Serialize)]
struct ConvergenceRow {
    study: &'static str,
    n: usize,
    steps: usize,
    dt: f64,
    /// Sup-norm distance to the next finer level (temporal) or to the finest grid (spatial).
    error: f64,
    order: Option<f64>,
}

fn final_samples(config: &Config, initial: &InterfaceState, steps: usize) -> Result<(Vec<f64>, i32), CliError> {
    let solver = SolverConfig {
        dt: TimeStep::Fixed(config.solver.t_end / steps as f64),
        output_every: usize::MAX,
        ..config.solver.clone()
    };
    let traj = run(initial, &config.params, &solver)?;
    let code = report_termination(&traj);
    Ok((traj.final_state().samples().to_vec(), code))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn observed_orders(errors: &[f64], ratio: f64) -> Vec<Option<f64>> {
    let mut out = vec![None];
    out.extend(errors.windows(2).map(|w| {
        let o = (w[0] / w[1]).ln() / ratio.ln();
        o.is_finite().then_some(o)
    }));
    out
}

pub fn cmd_convergence(config: &Config) -> Result<i32, CliError> {
    let conv = &config.convergence;
    let mut grids = conv.grids.clone();
    grids.sort_unstable();
    grids.dedup();
    let finest = *grids.last().expect("validated non-empty");
    if let Some(bad) = grids.iter().find(|&&n| !finest.is_multiple_of(n)) {
        return Err(CliError::Config(format!("grid {bad} does not divide the finest grid {finest}")));
    }
    warn_regime(config);
    let mut code = EXIT_OK;
    let mut rows = Vec::new();

    // temporal: fixed grid, steps doubled per level
    let initial = config.initial_state()?;
    let levels: Vec<usize> = (0..=conv.halvings).map(|i| conv.time_steps << i).collect();
    let mut finals = Vec::new();
    for &steps in &levels {
        let (f, c) = final_samples(config, &initial, steps)?;
        code = code.max(c);
        finals.push(f);
    }
    let t_err: Vec<f64> = finals.windows(2).map(|w| sup_diff(&w[0], &w[1])).collect();
    let t_ord = observed_orders(&t_err, 2.0);
    for (i, e) in t_err.iter().enumerate() {
        rows.push(ConvergenceRow {
            study: "temporal",
            n: config.grid.n,
            steps: levels[i],
            dt: config.solver.t_end / levels[i] as f64,
            error: *e,
            order: t_ord[i],
        });
    }

    // spatial: one time step shared by all grids, stable on the finest
    let fine_initial = heat_mollify(&config.initial_state_on(finest)?, config.solver.mollify_eps)?;
    let stability = config.solver.t_end
        / select_dt(
            &fine_initial,
            &config.params,
            config.solver.cfl_safety,
            config.solver.epsilon,
            config.solver.resolved_stepper(),
        );
    let steps = (*levels.last().unwrap()).max(stability.ceil() as usize);
    let mut spatial = Vec::new();
    for &n in &grids {
        let (f, c) = final_samples(config, &config.initial_state_on(n)?, steps)?;
        code = code.max(c);
        spatial.push(f);
    }
    let reference = spatial.last().unwrap().clone();
    let s_err: Vec<f64> = grids[..grids.len() - 1]
        .iter()
        .zip(&spatial)
        .map(|(&n, f)| {
            let coarse_view: Vec<f64> = reference.iter().step_by(finest / n).copied().collect();
            sup_diff(f, &coarse_view)
        })
        .collect();
    let s_ord = observed_orders(&s_err, 2.0);
    for (i, e) in s_err.iter().enumerate() {
        rows.push(ConvergenceRow {
            study: "spatial",
            n: grids[i],
            steps,
            dt: config.solver.t_end / steps as f64,
            error: *e,
            order: s_ord[i],
        });
    }

    let mut csv = String::from("study,n,steps,dt,error,order\n");
    for r in &rows {
        let order = r.order.map(fmt_f64).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{},{},{}\n", r.study, r.n, r.steps, fmt_f64(r.dt), fmt_f64(r.error), order));
    }
    let dir = &config.output.dir;
    write_file(&dir.join(CONVERGENCE_CSV), &csv)?;
    let summary = json!({
        "temporal_orders": t_ord.iter().flatten().collect::<Vec<_>>(),
        "temporal_errors": t_err,
        "spatial_errors": s_err,
        "spatial_grids": grids,
        "rows": rows,
    });
    write_file(&dir.join(CONVERGENCE_JSON), &serde_json::to_string_pretty(&summary).unwrap())?;
    print_json(&summary);
    Ok(code)
}

fn fit_summary(series: &[(f64, f64)]) -> Value {
    if series.iter().all(|(_, v)| *v == 0.0) {
        return json!({ "status": "degenerate", "reason": "series is identically zero" });
    }
    match fit_decay_rate(series) {
        Ok(fit) => json!({ "status": "ok", "mu_hat": fit.mu_hat, "r_squared": fit.r_squared }),
        Err(e) => json!({ "status": "fit_failed", "reason": e.to_string() }),
    }
}

pub fn cmd_decay_study(config: &Config) -> Result<i32, CliError> {
    let initial = config.initial_state()?;
    warn_regime(config);
    let traj = run(&initial, &config.params, &config.solver)?;
    write_run(config, &traj)?;
    let f0 = &traj.states[0];

    let osc_series = traj.series(|r| r.osc);
    let lip_series = traj.series(|r| r.lip);
    let osc_fit = fit_summary(&osc_series);
    let lip_fit = fit_summary(&lip_series);

    let condition = check_teo1_condition(f0, &config.params);
    let mu = match &condition {
        Ok(rep) if rep.satisfied => decay_rate_mu(f0, &config.params).ok(),
        _ => None,
    };
    let certificate = match mu {
        Some(mu) => {
            let osc0 = traj.records[0].osc;
            let worst = traj
                .records
                .iter()
                .map(|r| if osc0 > 0.0 { r.osc / (osc0 * (-mu * r.t).exp()) } else { 0.0 })
                .fold(0.0, f64::max);
            let min_f = traj.records.iter().map(|r| r.fmin).fold(f64::INFINITY, f64::min);
            json!({
                "status": "checked",
                "passed": worst <= 1.0 + 1e-3 && min_f > 0.0,
                "max_ratio_to_bound": worst,
                "min_f": min_f,
            })
        }
        None => json!({ "status": "not_applicable", "reason": "oscillation condition not satisfied" }),
    };
    let exceeds = match (mu, osc_fit.get("mu_hat").and_then(Value::as_f64)) {
        (Some(mu), Some(hat)) => Some(hat >= mu),
        _ => None,
    };
    let summary = json!({
        "termination": traj.termination.as_str(),
        "steps": traj.steps,
        "t_final": traj.final_state().t(),
        "guaranteed_mu": mu,
        "linear_rate_mode1": 0.5 * config.params.rayleigh(),
        "oscillation_fit": osc_fit,
        "lipschitz_fit": lip_fit,
        "mu_hat_at_least_guaranteed": exceeds,
        "certificate": certificate,
        "oscillation_condition": report_json(&condition),
    });
    let path = config.output.dir.join(DECAY_SUMMARY);
    write_file(&path, &serde_json::to_string_pretty(&summary).unwrap())?;
    print_json(&summary);
    Ok(report_termination(&traj))
}
