//! Command-line driver: problem and config parsing, solver dispatch and artifacts.
//!
//! Every solve writes `report.json`, `trace.csv`, `feasibility.dat`, `psi.dat`
//! and `impulse.csv` into the output directory. Exit codes: 0 success, 2 bad
//! input, 3 non-convergence (artifacts are still written), 4 numerical failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::admm::{admm_solve, AdmmParams, AdmmRecord, AdmmState, Penalty};
use crate::error::{Error, Result};
use crate::fprox::PbcdConfig;
use crate::io::{load_config, matrix_from_rows, Problem};
use crate::model::{validate_assumption1, StandardForm};
use crate::palm::{
    palm_solve, suggest_params, validate_params, CouplingNorms, IterRecord, PalmOptions, PalmParams, PalmState,
    SolveStatus,
};
use crate::report::{evaluate_gain, fmt_float, impulse_response, GainOptions, SolveReport, SolverSummary, Table};
use crate::symvec;

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "gslq", version, about = "Group-sparse static state-feedback LQ synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub args: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the plant assumptions and the PALM weights.
    Validate,
    /// Penalty PALM with the group-ℓ0 penalty.
    SolvePalm,
    /// Direct ADMM with the group-ℓ0 penalty.
    SolveAdmm,
    /// Direct ADMM with the group-ℓ1 penalty.
    SolveL1,
    /// Closed-loop checks of the gain given under `gain` in the config.
    EvalGain,
    /// Grid of solves over `gammaValues` × `rhoValues` (PALM) or `betaValues` (ADMM).
    Sweep,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, global = true)]
    pub problem: Option<PathBuf>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Abort when the PALM weights fail the descent conditions.
    #[arg(long, global = true)]
    pub strict_params: bool,
    /// Double ρ whenever PALM feasibility stalls.
    #[arg(long, global = true)]
    pub rho_continuation: bool,
}

/// Flat run configuration. Every key is optional; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RunConfig {
    pub sigma: Option<f64>,
    pub beta: Option<f64>,
    pub mu: Option<f64>,
    pub tau: Option<f64>,
    pub rho: Option<f64>,
    pub gamma: Option<f64>,
    pub budget: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol_feas: Option<f64>,
    pub tol_step: Option<f64>,
    /// Replace `(β, μ, τ)` by values that pass the descent conditions.
    pub auto_params: Option<bool>,
    pub stall_window: Option<usize>,
    pub kkt_every: Option<usize>,

    pub xi: Option<f64>,
    pub eta_rel: Option<f64>,
    pub sustain: Option<usize>,
    pub window: Option<usize>,

    pub pbcd_eps: Option<f64>,
    pub pbcd_max_iter: Option<usize>,
    pub warm_start: Option<bool>,
    pub pbcd_primal_tol: Option<f64>,

    /// Lower bound on `W1` added to the cone, also the pseudo-inverse cutoff.
    pub delta_floor: Option<f64>,
    /// Constant initial value (PALM: all of `W, P, z, u`; ADMM: `W`).
    pub init_value: Option<f64>,

    /// Gain for `eval-gain`, as rows.
    pub gain: Option<Vec<Vec<f64>>>,

    /// `palm` (default), `admm` or `l1`.
    pub sweep_solver: Option<String>,
    pub gamma_values: Option<Vec<f64>>,
    pub rho_values: Option<Vec<f64>>,
    pub beta_values: Option<Vec<f64>>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flags {
    pub strict_params: bool,
    pub rho_continuation: bool,
}

impl RunConfig {
    pub fn pbcd(&self) -> PbcdConfig {
        let d = PbcdConfig::default();
        PbcdConfig {
            eps: self.pbcd_eps.unwrap_or(d.eps),
            max_iter: self.pbcd_max_iter.unwrap_or(d.max_iter),
            warm_start: self.warm_start.unwrap_or(d.warm_start),
            primal_tol: self.pbcd_primal_tol.or(d.primal_tol),
        }
    }

    pub fn palm_params(&self, sf: &StandardForm) -> Result<PalmParams> {
        let d = PalmParams::default();
        let rho = self.rho.unwrap_or(d.rho);
        let sigma = self.sigma.unwrap_or(d.sigma);
        let mut p = if self.auto_params.unwrap_or(false) {
            suggest_params(rho, sigma, &CouplingNorms::of(sf)?.scaled(rho))?
        } else {
            PalmParams {
                sigma,
                rho,
                beta: self.beta.unwrap_or(d.beta),
                mu: self.mu.unwrap_or(d.mu),
                tau: self.tau.unwrap_or(d.tau),
                ..d
            }
        };
        p.gamma = self.gamma.unwrap_or(d.gamma);
        p.budget = self.budget;
        p.max_iter = self.max_iter.unwrap_or(d.max_iter);
        p.tol_feas = self.tol_feas.unwrap_or(d.tol_feas);
        p.tol_step = self.tol_step.unwrap_or(d.tol_step);
        Ok(p)
    }

    pub fn palm_options(&self, flags: Flags) -> PalmOptions {
        let d = PalmOptions::default();
        PalmOptions {
            pbcd: self.pbcd(),
            strict: flags.strict_params,
            rho_continuation: flags.rho_continuation,
            stall_window: self.stall_window.unwrap_or(d.stall_window),
            kkt_every: self.kkt_every.unwrap_or(d.kkt_every),
        }
    }

    pub fn admm_params(&self, penalty: Penalty) -> AdmmParams {
        let d = AdmmParams::default();
        AdmmParams {
            beta: self.beta.unwrap_or(d.beta),
            xi: self.xi.unwrap_or(d.xi),
            gamma: self.gamma.unwrap_or(d.gamma),
            budget: self.budget,
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol_feas: self.tol_feas.unwrap_or(d.tol_feas),
            eta_rel: self.eta_rel.unwrap_or(d.eta_rel),
            penalty,
            sustain: self.sustain.unwrap_or(d.sustain),
            window: self.window.unwrap_or(d.window),
        }
    }

    fn gain_options(&self) -> GainOptions {
        match self.delta_floor {
            Some(delta_floor) => GainOptions { delta_floor },
            None => GainOptions::default(),
        }
    }
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Io(_) | Error::Dimension { .. } | Error::Invalid(_) | Error::Parameters(_) => EXIT_PARSE,
        Error::Unstable { .. } | Error::Numerical(_) | Error::SpectralNorm { .. } | Error::SingularW1 { .. } => EXIT_NUMERICAL,
    }
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::MaxIterations | SolveStatus::NotStarted => EXIT_NOT_CONVERGED,
    }
}

fn status_name(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIterations => "max-iterations",
        SolveStatus::NotStarted => "not-started",
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Numerical(format!("serializing output: {e}")))
}

pub fn palm_trace_table(trace: &[IterRecord]) -> Table {
    let mut t = Table::new(&[
        "iter", "psi", "feas", "step_w", "step_p", "step_z", "step_u", "kkt", "inner_iters", "nnz_groups",
    ]);
    for r in trace {
        t.push(vec![
            r.iter.to_string(),
            fmt_float(r.psi),
            fmt_float(r.feas),
            fmt_float(r.step_w),
            fmt_float(r.step_p),
            fmt_float(r.step_z),
            fmt_float(r.step_u),
            fmt_float(r.kkt),
            r.inner_iters.to_string(),
            r.nnz_groups.to_string(),
        ]);
    }
    t
}

pub fn admm_trace_table(trace: &[AdmmRecord]) -> Table {
    let mut t = Table::new(&[
        "iter",
        "psi",
        "feas",
        "step_w",
        "step_p",
        "step_z",
        "step_u",
        "kkt",
        "inner_iters",
        "nnz_groups",
        "structure_res",
        "coupling_res",
        "running_min_feas",
        "window_amplitude",
    ]);
    for r in trace {
        t.push(vec![
            r.iter.to_string(),
            fmt_float(r.psi),
            fmt_float(r.feas),
            fmt_float(r.step_w),
            fmt_float(r.step_p),
            fmt_float(r.step_z),
            fmt_float(r.step_u),
            fmt_float(r.kkt),
            r.inner_iters.to_string(),
            r.nnz_groups.to_string(),
            fmt_float(r.structure_res),
            fmt_float(r.coupling_res),
            fmt_float(r.running_min_feas),
            fmt_float(r.window_amplitude),
        ]);
    }
    t
}

fn write_solve_artifacts(out: &Path, problem: &Problem, report: &SolveReport, trace: &Table) -> Result<()> {
    std::fs::create_dir_all(out)?;
    write(&out.join("report.json"), &report.to_json()?)?;
    trace.write_csv(&out.join("trace.csv"))?;
    write(&out.join("feasibility.dat"), &trace.to_gnuplot("iter", "feas")?)?;
    write(&out.join("psi.dat"), &trace.to_gnuplot("iter", "psi")?)?;
    impulse_response(&problem.system, &report.gain())?.write_csv(&out.join("impulse.csv"))?;
    Ok(())
}

/// Outcome of one solve as seen by the driver.
#[derive(Debug, Clone)]
pub struct SolveRun {
    pub report: SolveReport,
    pub status: SolveStatus,
}

impl SolveRun {
    pub fn exit_code(&self) -> u8 {
        status_code(self.status)
    }
}

fn standard_form(problem: &Problem, cfg: &RunConfig) -> Result<StandardForm> {
    Ok(problem.standard_form()?.with_delta_floor(cfg.delta_floor))
}

pub fn run_palm(problem: &Problem, cfg: &RunConfig, flags: Flags, out: &Path) -> Result<SolveRun> {
    let (run, trace) = solve_palm(problem, cfg, flags)?;
    write_solve_artifacts(out, problem, &run.report, &trace)?;
    Ok(run)
}

/// Runs PALM and builds the report and trace table without touching the filesystem.
pub fn solve_palm(problem: &Problem, cfg: &RunConfig, flags: Flags) -> Result<(SolveRun, Table)> {
    let sf = standard_form(problem, cfg)?;
    let params = cfg.palm_params(&sf)?;
    let init = PalmState::constant(&sf, cfg.init_value.unwrap_or(1.0));
    let outcome = palm_solve(&sf, params, init, cfg.palm_options(flags))?;

    let slacks: Vec<f64> = outcome.trace.iter().map(|r| r.descent_slack).filter(|s| !s.is_nan()).collect();
    let min_slack = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    let diagnostics = json!({
        "parameterVerdict": outcome.verdict,
        "lipschitz": outcome.lipschitz,
        "finalKkt": outcome.final_kkt,
        "finalRho": outcome.params.rho,
        "descentViolations": slacks.iter().filter(|&&s| s < -1e-9).count(),
        "minDescentSlack": if min_slack.is_finite() { Some(min_slack) } else { None },
        "innerNonConverged": outcome.trace.iter().filter(|r| !r.inner_converged).count(),
    });
    let final_feasibility = outcome.trace.last().map_or_else(
        || sf.constraint_residual(&outcome.state.wt, &outcome.state.pt).norm(),
        |r| r.feas,
    );
    let summary = SolverSummary {
        solver: "palm",
        solver_status: status_name(outcome.status),
        w: symvec::symmetrize(&symvec::unvec(&outcome.state.z, sf.p, sf.p)),
        pt: outcome.state.pt.clone(),
        final_feasibility,
        iterations: outcome.iterations,
        wall_time: outcome.wall_time,
        parameter_echo: json!({
            "palm": params,
            "pbcd": pbcd_echo(&cfg.pbcd()),
            "strictParams": flags.strict_params,
            "rhoContinuation": flags.rho_continuation,
            "deltaFloor": cfg.delta_floor,
            "initValue": cfg.init_value.unwrap_or(1.0),
        }),
        waivers: outcome.waivers.clone(),
        diagnostics,
    };
    let report = SolveReport::build(&problem.system, &sf, summary, &cfg.gain_options())?;
    Ok((SolveRun { report, status: outcome.status }, palm_trace_table(&outcome.trace)))
}

fn pbcd_echo(c: &PbcdConfig) -> serde_json::Value {
    json!({ "eps": c.eps, "maxIter": c.max_iter, "warmStart": c.warm_start, "primalTol": c.primal_tol })
}

pub fn run_admm(problem: &Problem, cfg: &RunConfig, penalty: Penalty, out: &Path) -> Result<SolveRun> {
    let (run, trace) = solve_admm(problem, cfg, penalty)?;
    write_solve_artifacts(out, problem, &run.report, &trace)?;
    Ok(run)
}

pub fn solve_admm(problem: &Problem, cfg: &RunConfig, penalty: Penalty) -> Result<(SolveRun, Table)> {
    let sf = standard_form(problem, cfg)?;
    let params = cfg.admm_params(penalty);
    let init = AdmmState::flat(&sf, cfg.init_value.unwrap_or(50.0));
    let outcome = admm_solve(&sf, params, init, cfg.pbcd())?;
    let final_feasibility = outcome.trace.last().map_or_else(
        || sf.constraint_residual(&outcome.state.wt, &outcome.state.pt).norm(),
        |r| r.feas,
    );
    let summary = SolverSummary {
        solver: match penalty {
            Penalty::GroupL0 => "admm",
            Penalty::GroupL1 => "admm-l1",
        },
        solver_status: status_name(outcome.status),
        w: symvec::symmetrize(&symvec::unvec(&outcome.state.wt, sf.p, sf.p)),
        pt: outcome.state.pt.clone(),
        final_feasibility,
        iterations: outcome.iterations,
        wall_time: outcome.wall_time,
        parameter_echo: json!({
            "admm": params,
            "pbcd": pbcd_echo(&cfg.pbcd()),
            "deltaFloor": cfg.delta_floor,
            "initValue": cfg.init_value.unwrap_or(50.0),
        }),
        waivers: Vec::new(),
        diagnostics: json!({
            "runningMinFeas": outcome.running_min_feas,
            "runningMinStructure": outcome.state.running_min_structure,
            "runningMinCoupling": outcome.state.running_min_coupling,
            "windowAmplitude": outcome.window_amplitude,
            "convergenceClaimed": false,
        }),
    };
    let report = SolveReport::build(&problem.system, &sf, summary, &cfg.gain_options())?;
    Ok((SolveRun { report, status: outcome.status }, admm_trace_table(&outcome.trace)))
}

/// Assumption checks plus the PALM weight verdict.
pub fn run_validate(problem: &Problem, cfg: &RunConfig, out: &Path) -> Result<u8> {
    let assumptions = validate_assumption1(&problem.system)?;
    let sf = standard_form(problem, cfg)?;
    let params = cfg.palm_params(&sf)?;
    let verdict = validate_params(&params, &CouplingNorms::of(&sf)?.scaled(params.rho));
    std::fs::create_dir_all(out)?;
    let hard = assumptions.hard_failures().count();
    write(
        &out.join("validation.json"),
        &to_json(&json!({
            "valid": hard == 0,
            "assumptions": assumptions,
            "palmParameters": params,
            "parameterVerdict": verdict,
        }))?,
    )?;
    Ok(if hard == 0 { EXIT_OK } else { EXIT_PARSE })
}

pub fn run_eval_gain(problem: &Problem, cfg: &RunConfig, out: &Path) -> Result<u8> {
    let rows = cfg
        .gain
        .as_ref()
        .ok_or_else(|| Error::Parse { context: "config".into(), message: "eval-gain needs a `gain` matrix".into() })?;
    let k: DMatrix<f64> = matrix_from_rows("gain", rows)?;
    let sf = standard_form(problem, cfg)?;
    let eval = evaluate_gain(&problem.system, &sf, &k)?;
    std::fs::create_dir_all(out)?;
    let status = if eval.stabilizing { "stabilizing" } else { "not-stabilizing" };
    write(&out.join("report.json"), &to_json(&json!({ "status": status, "evaluation": eval }))?)?;
    impulse_response(&problem.system, &k)?.write_csv(&out.join("impulse.csv"))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SweepSolver {
    Palm,
    Admm(Penalty),
}

fn sweep_grid(cfg: &RunConfig) -> Result<(SweepSolver, Vec<(f64, f64)>)> {
    let solver = match cfg.sweep_solver.as_deref().unwrap_or("palm") {
        "palm" => SweepSolver::Palm,
        "admm" => SweepSolver::Admm(Penalty::GroupL0),
        "l1" => SweepSolver::Admm(Penalty::GroupL1),
        other => {
            return Err(Error::Parse { context: "sweepSolver".into(), message: format!("unknown solver `{other}`") });
        }
    };
    let gammas = cfg.gamma_values.clone().unwrap_or_else(|| vec![cfg.gamma.unwrap_or(1.0)]);
    let weights = match solver {
        SweepSolver::Palm => cfg.rho_values.clone().unwrap_or_else(|| vec![cfg.rho.unwrap_or(PalmParams::default().rho)]),
        SweepSolver::Admm(_) => cfg.beta_values.clone().unwrap_or_else(|| vec![cfg.beta.unwrap_or(AdmmParams::default().beta)]),
    };
    let grid = weights.iter().flat_map(|&w| gammas.iter().map(move |&g| (w, g))).collect();
    Ok((solver, grid))
}

/// One grid point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub weight: f64,
    pub gamma: f64,
    pub dir: String,
    pub result: std::result::Result<SolveRun, String>,
}

pub fn run_sweep(problem: &Problem, cfg: &RunConfig, flags: Flags, out: &Path) -> Result<(u8, Vec<SweepRow>)> {
    let (solver, grid) = sweep_grid(cfg)?;
    std::fs::create_dir_all(out)?;
    let threads = cfg
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, grid.len().max(1));
    let jobs: Vec<(usize, f64, f64)> = grid.iter().enumerate().map(|(k, &(w, g))| (k, w, g)).collect();
    let mut rows: Vec<Option<SweepRow>> = vec![None; jobs.len()];

    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(jobs.len().div_ceil(threads).max(1))
            .map(|chunk| {
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|&(k, weight, gamma)| {
                            let dir = format!("run-{k:03}");
                            let mut c = cfg.clone();
                            c.gamma = Some(gamma);
                            let result = match solver {
                                SweepSolver::Palm => {
                                    c.rho = Some(weight);
                                    run_palm(problem, &c, flags, &out.join(&dir))
                                }
                                SweepSolver::Admm(pen) => {
                                    c.beta = Some(weight);
                                    run_admm(problem, &c, pen, &out.join(&dir))
                                }
                            };
                            (k, SweepRow { weight, gamma, dir, result: result.map_err(|e| e.to_string()) })
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (k, row) in h.join().expect("sweep worker panicked") {
                rows[k] = Some(row);
            }
        }
    });
    let rows: Vec<SweepRow> = rows.into_iter().map(|r| r.expect("every grid point ran")).collect();

    let weight_name = if solver == SweepSolver::Palm { "rho" } else { "beta" };
    let mut table = Table::new(&[
        "dir", weight_name, "gamma", "status", "solver_status", "final_feas", "nnz_blocks", "pattern", "h2_cost",
        "cost_upper_bound", "error",
    ]);
    for row in &rows {
        let cells = match &row.result {
            Ok(run) => {
                let r = &run.report;
                let nnz: usize = r.sparsity_pattern.iter().flatten().map(|&b| b as usize).sum();
                let pattern: Vec<String> =
                    r.sparsity_pattern.iter().map(|row| row.iter().map(|b| b.to_string()).collect()).collect();
                vec![
                    r.status.clone(),
                    r.solver_status.clone(),
                    fmt_float(r.final_feasibility),
                    nnz.to_string(),
                    pattern.join("/"),
                    fmt_float(r.h2_cost.unwrap_or(f64::INFINITY)),
                    fmt_float(r.cost_upper_bound),
                    String::new(),
                ]
            }
            Err(e) => {
                let mut v = vec![String::new(); 7];
                v.push(format!("\"{}\"", e.replace('"', "'")));
                v
            }
        };
        let mut line = vec![row.dir.clone(), fmt_float(row.weight), fmt_float(row.gamma)];
        line.extend(cells);
        table.push(line);
    }
    table.write_csv(&out.join("summary.csv"))?;
    let code = if rows.iter().all(|r| r.result.is_err()) { EXIT_NUMERICAL } else { EXIT_OK };
    Ok((code, rows))
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Parse { context: "command line".into(), message: format!("missing --{flag}") })
}

fn dispatch(cli: &Cli) -> Result<u8> {
    let a = &cli.args;
    let problem = Problem::load(required(&a.problem, "problem")?)?;
    let cfg: RunConfig = match &a.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    let out = required(&a.out, "out")?;
    let flags = Flags { strict_params: a.strict_params, rho_continuation: a.rho_continuation };
    match cli.command {
        Command::Validate => run_validate(&problem, &cfg, out),
        Command::SolvePalm => Ok(run_palm(&problem, &cfg, flags, out)?.exit_code()),
        Command::SolveAdmm => Ok(run_admm(&problem, &cfg, Penalty::GroupL0, out)?.exit_code()),
        Command::SolveL1 => Ok(run_admm(&problem, &cfg, Penalty::GroupL1, out)?.exit_code()),
        Command::EvalGain => run_eval_gain(&problem, &cfg, out),
        Command::Sweep => Ok(run_sweep(&problem, &cfg, flags, out)?.0),
    }
}

/// Runs the CLI on the given arguments and returns the process exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gslq: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        let err = crate::io::parse_config::<RunConfig>("{\"rho\": 1, \"rhoo\": 2}", "cfg.json").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        assert_eq!(exit_code(&err), EXIT_PARSE);
    }

    #[test]
    fn config_keys_map_onto_params() {
        let cfg: RunConfig = crate::io::parse_config(
            r#"{"rho": 100, "gamma": 0.1, "maxIter": 600, "xi": 1, "etaRel": 0.5, "pbcdEps": 1e-9, "budget": 2}"#,
            "cfg",
        )
        .unwrap();
        let sf = crate::cases::example1().standard_form().unwrap();
        let p = cfg.palm_params(&sf).unwrap();
        assert_eq!((p.rho, p.gamma, p.max_iter, p.budget), (100.0, 0.1, 600, Some(2)));
        assert_eq!(p.beta, PalmParams::default().beta);
        let a = cfg.admm_params(Penalty::GroupL1);
        assert_eq!((a.xi, a.eta_rel, a.beta), (1.0, 0.5, 300.0));
        assert_eq!(cfg.pbcd().eps, 1e-9);
    }

    #[test]
    fn auto_params_pass_validation() {
        let cfg = RunConfig { rho: Some(500.0), auto_params: Some(true), ..RunConfig::default() };
        let sf = crate::cases::example1().standard_form().unwrap();
        let p = cfg.palm_params(&sf).unwrap();
        assert!(validate_params(&p, &CouplingNorms::of(&sf).unwrap().scaled(500.0)).valid);
    }

    #[test]
    fn sweep_grid_is_weight_major() {
        let cfg = RunConfig {
            gamma_values: Some(vec![0.1, 1.0]),
            rho_values: Some(vec![10.0, 50.0]),
            ..RunConfig::default()
        };
        let (solver, grid) = sweep_grid(&cfg).unwrap();
        assert_eq!(solver, SweepSolver::Palm);
        assert_eq!(grid, vec![(10.0, 0.1), (10.0, 1.0), (50.0, 0.1), (50.0, 1.0)]);
        let bad = RunConfig { sweep_solver: Some("newton".into()), ..RunConfig::default() };
        assert!(sweep_grid(&bad).is_err());
    }

    #[test]
    fn trace_tables_have_the_documented_columns() {
        assert_eq!(palm_trace_table(&[]).to_csv(), "iter,psi,feas,step_w,step_p,step_z,step_u,kkt,inner_iters,nnz_groups\n");
        assert!(admm_trace_table(&[]).to_csv().ends_with("nnz_groups,structure_res,coupling_res,running_min_feas,window_amplitude\n"));
    }
}
