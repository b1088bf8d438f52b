//! Penalty PALM for
//!
//! ```text
//! min  f(W) + g(P) + (ρ/2)‖A·W + B·P‖²
//! ```
//!
//! with `f` the cone-constrained linear cost (see [`crate::fprox`]) and `g` the
//! budgeted group-ℓ0 penalty (see [`crate::gprox`]). One iteration performs
//!
//! ```text
//! P ← prox_{g/μ}(P − (ρ/μ)Bᵀ(AW + BP))
//! z ← prox_{f/β}(W + u/β)
//! W ← W − (ρAᵀ(AW + BP) + u + β(W − z))/τ
//! u ← u + σβ(W − z)
//! ```
//!
//! The iterate `W` lives in `ℝ^{p²}` and is deliberately not symmetrized: only
//! `z` is a symmetric matrix. Convergence is monitored through the merit
//! function [`psi_eval`], which decreases by a computable quadratic amount per
//! step whenever the weights pass [`validate_params`].

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fprox::{FProx, PbcdConfig};
use crate::gprox::{group_l0_norm, group_l0_prox, GroupProxParams};
use crate::model::StandardForm;
use crate::symvec::{self, spectral_norm};

/// Tolerance of the cone indicator inside [`psi_eval`].
pub const INDICATOR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PalmParams {
    pub sigma: f64,
    pub beta: f64,
    pub mu: f64,
    pub tau: f64,
    pub rho: f64,
    pub gamma: f64,
    /// Cap on nonzero groups; `None` means no cap.
    pub budget: Option<usize>,
    pub max_iter: usize,
    pub tol_feas: f64,
    pub tol_step: f64,
}

impl Default for PalmParams {
    /// The reference example-1 tuning with `ρ = 50`, `γ = 1`.
    fn default() -> Self {
        PalmParams {
            sigma: 1.0 / 50.0,
            beta: 6618.0,
            mu: 1309.0,
            tau: 10454.0,
            rho: 50.0,
            gamma: 1.0,
            budget: None,
            max_iter: 10_000,
            tol_feas: 1e-6,
            tol_step: 1e-8,
        }
    }
}

impl PalmParams {
    fn check_basic(&self) -> Result<()> {
        let positive = [
            ("sigma", self.sigma),
            ("beta", self.beta),
            ("mu", self.mu),
            ("tau", self.tau),
            ("rho", self.rho),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameters(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.sigma > 1.0 {
            return Err(Error::Parameters(format!("sigma must lie in (0, 1], got {}", self.sigma)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Parameters(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if !(self.tol_feas > 0.0) || !(self.tol_step > 0.0) {
            return Err(Error::Parameters("tolerances must be > 0".into()));
        }
        Ok(())
    }

    pub fn group_prox(&self, sf: &StandardForm) -> Result<GroupProxParams> {
        let budget = self.budget.unwrap_or(sf.groups.len());
        if budget > sf.groups.len() {
            return Err(Error::Parameters(format!("budget {budget} exceeds the {} groups", sf.groups.len())));
        }
        GroupProxParams::new(self.gamma, self.mu, budget)
    }
}

/// Unscaled operator norms `‖AᵀA‖`, `‖BᵀB‖`, `‖AᵀB‖` of the coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingNorms {
    pub ata: f64,
    pub btb: f64,
    pub atb: f64,
}

impl CouplingNorms {
    pub fn of(sf: &StandardForm) -> Result<Self> {
        let a = &sf.acoup;
        let b = &sf.bcoup;
        Ok(CouplingNorms {
            ata: spectral_norm(&a.tr_mul(a))?,
            btb: spectral_norm(&b.tr_mul(b))?,
            atb: spectral_norm(&a.tr_mul(b))?,
        })
    }

    pub fn scaled(&self, rho: f64) -> LipschitzConstants {
        LipschitzConstants { kappa1: rho * self.ata, kappa2: rho * self.btb, kappa3: rho * self.atb }
    }
}

/// Lipschitz moduli of the penalty gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzConstants {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
}

impl LipschitzConstants {
    pub fn compute(sf: &StandardForm, rho: f64) -> Result<Self> {
        Ok(CouplingNorms::of(sf)?.scaled(rho))
    }
}

/// Weights of the merit function and of its per-step decrease.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

pub fn descent_constants(p: &PalmParams, l: &LipschitzConstants) -> DescentConstants {
    let (s, b, t) = (p.sigma, p.beta, p.tau);
    let coupled = 8.0 * (s * t + l.kappa1).powi(2) / (s * b);
    DescentConstants {
        c0: 4.0 * (1.0 - s) / (s * s * b),
        c1: coupled,
        c2: t - (l.kappa1 + b) / 2.0 - 4.0 * s * t * t / b - coupled,
        c3: (p.mu - l.kappa2) / 2.0 - 8.0 * l.kappa3 * l.kappa3 / (s * b),
        c4: 1.0 / (s * b),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamCheck {
    pub name: &'static str,
    /// Positive when the inequality holds.
    pub slack: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ParamVerdict {
    pub valid: bool,
    pub checks: Vec<ParamCheck>,
    pub varsigma: f64,
    pub beta_lower: f64,
    pub mu_lower: f64,
    pub tau_lower: f64,
    pub tau_upper: f64,
    pub constants: DescentConstants,
}

impl ParamVerdict {
    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

fn beta_bound(sigma: f64, kappa1: f64) -> f64 {
    4.0 * kappa1 / (1.0 - 24.0 * sigma) * (4.0 + 3.0 * sigma + (24.0 - 168.0 * sigma + 9.0 * sigma * sigma).sqrt())
}

fn mu_bound(sigma: f64, beta: f64, l: &LipschitzConstants) -> f64 {
    l.kappa2 + 16.0 * l.kappa3 * l.kappa3 / (sigma * beta)
}

fn varsigma(sigma: f64, beta: f64, kappa1: f64) -> f64 {
    1.0 - 32.0 * kappa1 / beta - 128.0 * kappa1 * kappa1 / (beta * beta) - 24.0 * kappa1 * sigma / beta - 24.0 * sigma
}

fn tau_interval(sigma: f64, beta: f64, kappa1: f64, vs: f64) -> (f64, f64) {
    let scale = beta / (24.0 * sigma);
    let mid = 1.0 - 16.0 * kappa1 / beta;
    let root = vs.max(0.0).sqrt();
    ((beta / 2.0).max(scale * (mid - root)), scale * (mid + root))
}

/// Checks the sufficient conditions for the merit-function decrease and reports
/// every slack. All inequalities are strict.
pub fn validate_params(p: &PalmParams, l: &LipschitzConstants) -> ParamVerdict {
    let (s, b) = (p.sigma, p.beta);
    let beta_lower = beta_bound(s, l.kappa1);
    let mu_lower = mu_bound(s, b, l);
    let vs = varsigma(s, b, l.kappa1);
    let (tau_lower, tau_upper) = tau_interval(s, b, l.kappa1, vs);
    let constants = descent_constants(p, l);

    let mut checks = Vec::new();
    let mut push = |name, slack: f64| checks.push(ParamCheck { name, slack, passed: slack > 0.0 });
    let sigma_ok = s > 0.0 && s < 1.0 / 24.0;
    push("sigma < 1/24", 1.0 / 24.0 - s);
    // the β and τ formulas are only meaningful once σ < 1/24
    push("beta lower bound", if sigma_ok { b - beta_lower } else { f64::NAN });
    push("mu lower bound", p.mu - mu_lower);
    push("varsigma > 0", vs);
    push("tau > lower", if vs > 0.0 { p.tau - tau_lower } else { f64::NAN });
    push("tau < upper", if vs > 0.0 { tau_upper - p.tau } else { f64::NAN });
    push("C2 > 0", constants.c2);
    push("C3 > 0", constants.c3);
    push("C4 > 0", constants.c4);

    ParamVerdict {
        valid: checks.iter().all(|c| c.passed),
        checks,
        varsigma: vs,
        beta_lower,
        mu_lower,
        tau_lower,
        tau_upper,
        constants,
    }
}

/// Smallest `β` and `μ` used when the Lipschitz constants vanish.
pub const MIN_WEIGHT: f64 = 1.0;

/// Constructs `(β, μ, τ)` passing [`validate_params`] for the given `ρ`, `σ`:
/// `β` and `μ` at 1.05× their lower bounds and `τ` at the middle of its interval.
pub fn suggest_params(rho: f64, sigma: f64, l: &LipschitzConstants) -> Result<PalmParams> {
    if !(sigma > 0.0 && sigma < 1.0 / 24.0) {
        return Err(Error::Parameters(format!("sigma must lie in (0, 1/24), got {sigma}")));
    }
    let mut beta = (1.05 * beta_bound(sigma, l.kappa1)).max(MIN_WEIGHT);
    for _ in 0..=40 {
        let vs = varsigma(sigma, beta, l.kappa1);
        if vs > 0.0 {
            let mu = (1.05 * mu_bound(sigma, beta, l)).max(MIN_WEIGHT);
            let (lo, hi) = tau_interval(sigma, beta, l.kappa1, vs);
            let candidate = PalmParams {
                sigma,
                beta,
                mu,
                tau: 0.5 * (lo + hi),
                rho,
                ..PalmParams::default()
            };
            if validate_params(&candidate, l).valid {
                return Ok(candidate);
            }
        }
        beta *= 2.0;
    }
    Err(Error::Parameters(format!("no valid (beta, mu, tau) found for rho = {rho}, sigma = {sigma}")))
}

/// Iterate tuple plus one step of history.
#[derive(Debug, Clone, PartialEq)]
pub struct PalmState {
    pub wt: DVector<f64>,
    pub pt: DVector<f64>,
    pub z: DVector<f64>,
    pub u: DVector<f64>,
    pub prev_wt: Option<DVector<f64>>,
    pub prev_u: Option<DVector<f64>>,
}

impl PalmState {
    pub fn new(sf: &StandardForm, wt: DVector<f64>, pt: DVector<f64>, z: DVector<f64>, u: DVector<f64>) -> Result<Self> {
        let pp = sf.p * sf.p;
        for (name, v, len) in [("W", &wt, pp), ("P", &pt, sf.mn()), ("z", &z, pp), ("u", &u, pp)] {
            if v.len() != len {
                return Err(Error::dim(format!("initial {name}"), len, v.len()));
            }
        }
        Ok(PalmState { wt, pt, z, u, prev_wt: None, prev_u: None })
    }

    /// Every component set to `value`.
    pub fn constant(sf: &StandardForm, value: f64) -> Self {
        let pp = sf.p * sf.p;
        PalmState {
            wt: DVector::from_element(pp, value),
            pt: DVector::from_element(sf.mn(), value),
            z: DVector::from_element(pp, value),
            u: DVector::from_element(pp, value),
            prev_wt: None,
            prev_u: None,
        }
    }

    pub fn all_ones(sf: &StandardForm) -> Self {
        Self::constant(sf, 1.0)
    }
}

/// `f(z)`: `<R, W>` when `W = unvec(z)` is feasible to within `tol`, else `+∞`.
pub fn f_value(z: &DVector<f64>, sf: &StandardForm, tol: f64) -> Result<f64> {
    let w = symvec::symmetrize(&symvec::unvec(z, sf.p, sf.p));
    if !sf.feasibility(&w)?.within(tol) {
        return Ok(f64::INFINITY);
    }
    Ok(sf.r.dot(&w))
}

/// `γ·‖π(P)‖₀`, or `+∞` above the budget.
pub fn g_value(pt: &DVector<f64>, sf: &StandardForm, params: &PalmParams) -> f64 {
    let nnz = group_l0_norm(pt, &sf.groups);
    if nnz > params.budget.unwrap_or(sf.groups.len()) {
        return f64::INFINITY;
    }
    params.gamma * nnz as f64
}

pub fn penalty(wt: &DVector<f64>, pt: &DVector<f64>, sf: &StandardForm, rho: f64) -> f64 {
    0.5 * rho * sf.constraint_residual(wt, pt).norm_squared()
}

/// Regularized augmented Lagrangian at the state and its one-step history.
pub fn psi_eval(state: &PalmState, sf: &StandardForm, params: &PalmParams, lips: &LipschitzConstants) -> Result<f64> {
    let (Some(prev_wt), Some(prev_u)) = (&state.prev_wt, &state.prev_u) else {
        return Err(Error::Invalid("merit function needs one step of history".into()));
    };
    let k = descent_constants(params, lips);
    let gap = &state.wt - &state.z;
    let dw = &state.wt - prev_wt;
    let du = &state.u - prev_u;
    let mixed = &du + &dw * (params.sigma * (params.tau - params.beta));
    Ok(f_value(&state.z, sf, INDICATOR_TOL)?
        + g_value(&state.pt, sf, params)
        + penalty(&state.wt, &state.pt, sf, params.rho)
        + state.u.dot(&gap)
        + 0.5 * params.beta * gap.norm_squared()
        + k.c0 * mixed.norm_squared()
        + k.c1 * dw.norm_squared())
}

/// Stationarity measure of the penalized problem: the largest of the `W`
/// gradient residual, the `P` prox residual, the `z` prox residual and `‖z − W‖`.
pub fn kkt_residual(state: &PalmState, sf: &StandardForm, params: &PalmParams, prox: &mut FProx) -> Result<f64> {
    let r = sf.constraint_residual(&state.wt, &state.pt);
    let grad_w = &state.u + sf.acoup.tr_mul(&r) * params.rho;
    let shifted = &state.pt - sf.bcoup.tr_mul(&r) * (params.rho / params.mu);
    let p_res = (&state.pt - group_l0_prox(&shifted, sf, &params.group_prox(sf)?)).norm();
    let (zp, _) = prox.solve_vec(&(&state.z + &state.u / params.beta))?;
    let z_res = (&state.z - zp).norm();
    Ok(grad_w.norm().max(p_res).max(z_res).max((&state.z - &state.wt).norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterRecord {
    pub iter: usize,
    pub psi: f64,
    /// `Ψₙ − Ψₙ₊₁ − (C₂‖ΔW‖² + C₃‖ΔP‖² + C₄‖Δu‖²)`; NaN without a previous `Ψ`.
    pub descent_slack: f64,
    pub feas: f64,
    pub step_w: f64,
    pub step_p: f64,
    pub step_z: f64,
    pub step_u: f64,
    pub kkt: f64,
    pub inner_iters: usize,
    pub inner_converged: bool,
    pub nnz_groups: usize,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    NotStarted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalmOptions {
    pub pbcd: PbcdConfig,
    /// Abort when the weights fail [`validate_params`].
    pub strict: bool,
    /// Double `ρ` whenever feasibility stalls above `tol_feas`.
    pub rho_continuation: bool,
    pub stall_window: usize,
    /// Compute the KKT residual every this many iterations (always at the end).
    pub kkt_every: usize,
}

impl Default for PalmOptions {
    fn default() -> Self {
        PalmOptions { pbcd: PbcdConfig::default(), strict: false, rho_continuation: false, stall_window: 200, kkt_every: 1 }
    }
}

/// A PALM run that can be advanced one iteration at a time.
pub struct PalmRun<'a> {
    sf: &'a StandardForm,
    params: PalmParams,
    opts: PalmOptions,
    norms: CouplingNorms,
    lips: LipschitzConstants,
    verdict: ParamVerdict,
    prox: FProx,
    kkt_prox: FProx,
    state: PalmState,
    iter: usize,
    psi: Option<f64>,
    trace: Vec<IterRecord>,
    waivers: Vec<String>,
    stall_start: (usize, f64),
}

impl<'a> PalmRun<'a> {
    pub fn new(sf: &'a StandardForm, params: PalmParams, init: PalmState, opts: PalmOptions) -> Result<Self> {
        params.check_basic()?;
        params.group_prox(sf)?;
        let pp = sf.p * sf.p;
        if init.wt.len() != pp || init.z.len() != pp || init.u.len() != pp || init.pt.len() != sf.mn() {
            return Err(Error::dim("initial point", format!("W, z, u of length {pp}, P of length {}", sf.mn()), "mismatch"));
        }
        let norms = CouplingNorms::of(sf)?;
        let lips = norms.scaled(params.rho);
        let verdict = validate_params(&params, &lips);
        let mut waivers = Vec::new();
        if !verdict.valid {
            let msg = format!("weights fail the descent conditions at rho = {}: {}", params.rho, verdict.failures().join(", "));
            if opts.strict {
                return Err(Error::Parameters(msg));
            }
            waivers.push(msg);
        }
        // Ψ needs z inside the cone to within INDICATOR_TOL
        let mut opts = opts;
        opts.pbcd.primal_tol.get_or_insert(0.1 * INDICATOR_TOL);
        Ok(PalmRun {
            sf,
            params,
            opts,
            norms,
            lips,
            verdict,
            prox: FProx::new(sf, params.beta, opts.pbcd)?,
            kkt_prox: FProx::new(sf, params.beta, opts.pbcd)?,
            state: init,
            iter: 0,
            psi: None,
            trace: Vec::new(),
            waivers,
            stall_start: (0, f64::INFINITY),
        })
    }

    pub fn state(&self) -> &PalmState {
        &self.state
    }
    pub fn params(&self) -> &PalmParams {
        &self.params
    }
    pub fn lipschitz(&self) -> &LipschitzConstants {
        &self.lips
    }
    pub fn verdict(&self) -> &ParamVerdict {
        &self.verdict
    }
    pub fn trace(&self) -> &[IterRecord] {
        &self.trace
    }
    pub fn iterations(&self) -> usize {
        self.iter
    }

    pub fn feasibility(&self) -> f64 {
        self.sf.constraint_residual(&self.state.wt, &self.state.pt).norm()
    }

    /// One PALM iteration.
    pub fn step(&mut self) -> Result<&IterRecord> {
        let sf = self.sf;
        let p = self.params;
        let gl0 = p.group_prox(sf)?;
        let old = self.state.clone();

        let r = sf.constraint_residual(&old.wt, &old.pt);
        let pt = group_l0_prox(&(&old.pt - sf.bcoup.tr_mul(&r) * (p.rho / p.mu)), sf, &gl0);
        let (z, inner) = self.prox.solve_vec(&(&old.wt + &old.u / p.beta))?;
        let r_mid = sf.constraint_residual(&old.wt, &pt);
        let grad = sf.acoup.tr_mul(&r_mid) * p.rho + &old.u + (&old.wt - &z) * p.beta;
        let wt = &old.wt - grad / p.tau;
        let u = &old.u + (&wt - &z) * (p.sigma * p.beta);

        self.state = PalmState { wt, pt, z, u, prev_wt: Some(old.wt.clone()), prev_u: Some(old.u.clone()) };
        self.iter += 1;

        let step_w = (&self.state.wt - &old.wt).norm();
        let step_p = (&self.state.pt - &old.pt).norm();
        let step_u = (&self.state.u - &old.u).norm();
        let psi = psi_eval(&self.state, sf, &p, &self.lips)?;
        let k = descent_constants(&p, &self.lips);
        let descent_slack = match self.psi {
            Some(prev) => prev - psi - (k.c2 * step_w * step_w + k.c3 * step_p * step_p + k.c4 * step_u * step_u),
            None => f64::NAN,
        };
        self.psi = Some(psi);
        let kkt = if self.iter % self.opts.kkt_every.max(1) == 0 {
            kkt_residual(&self.state, sf, &p, &mut self.kkt_prox)?
        } else {
            f64::NAN
        };
        let feas = self.feasibility();
        self.trace.push(IterRecord {
            iter: self.iter,
            psi,
            descent_slack,
            feas,
            step_w,
            step_p,
            step_z: (&self.state.z - &old.z).norm(),
            step_u,
            kkt,
            inner_iters: inner.iterations,
            inner_converged: inner.converged,
            nnz_groups: group_l0_norm(&self.state.pt, &sf.groups),
            rho: p.rho,
        });
        if self.opts.rho_continuation {
            self.maybe_increase_rho(feas)?;
        }
        Ok(self.trace.last().expect("record just pushed"))
    }

    fn maybe_increase_rho(&mut self, feas: f64) -> Result<()> {
        if feas <= self.params.tol_feas {
            self.stall_start = (self.iter, feas);
            return Ok(());
        }
        let (start, start_feas) = self.stall_start;
        if self.iter - start < self.opts.stall_window {
            return Ok(());
        }
        // less than a 10% reduction over the window counts as a stall
        if feas < 0.9 * start_feas {
            self.stall_start = (self.iter, feas);
            return Ok(());
        }
        let rho = 2.0 * self.params.rho;
        let lips = self.norms.scaled(rho);
        let mut next = PalmParams { rho, ..self.params };
        if !validate_params(&next, &lips).valid {
            let s = suggest_params(rho, self.params.sigma, &lips)?;
            next = PalmParams { beta: s.beta, mu: s.mu, tau: s.tau, ..next };
        }
        if next.beta != self.params.beta {
            self.prox = FProx::new(self.sf, next.beta, self.opts.pbcd)?;
            self.kkt_prox = FProx::new(self.sf, next.beta, self.opts.pbcd)?;
        }
        self.params = next;
        self.lips = lips;
        self.verdict = validate_params(&next, &lips);
        // Ψ changes with ρ; the next record starts a fresh descent chain
        self.psi = None;
        self.stall_start = (self.iter, feas);
        Ok(())
    }

    fn converged(&self) -> bool {
        let Some(last) = self.trace.last() else {
            return false;
        };
        let step = last.step_w.max(last.step_p).max(last.step_z).max(last.step_u);
        last.feas <= self.params.tol_feas && step <= self.params.tol_step && last.kkt <= self.params.tol_feas
    }

    pub fn finish(mut self, status: SolveStatus, started: Instant) -> Result<PalmOutcome> {
        let kkt = if self.iter == 0 { f64::NAN } else { kkt_residual(&self.state, self.sf, &self.params, &mut self.kkt_prox)? };
        Ok(PalmOutcome {
            status,
            iterations: self.iter,
            final_kkt: kkt,
            state: self.state,
            params: self.params,
            verdict: self.verdict,
            lipschitz: self.lips,
            waivers: self.waivers,
            trace: self.trace,
            wall_time: started.elapsed().as_secs_f64(),
        })
    }

    /// Iterates until the stopping test holds or `max_iter` is reached.
    pub fn run(mut self) -> Result<PalmOutcome> {
        let started = Instant::now();
        if self.params.max_iter == 0 {
            return self.finish(SolveStatus::NotStarted, started);
        }
        while self.iter < self.params.max_iter {
            self.step()?;
            if self.converged() {
                return self.finish(SolveStatus::Converged, started);
            }
        }
        self.finish(SolveStatus::MaxIterations, started)
    }
}

#[derive(Debug, Clone)]
pub struct PalmOutcome {
    pub status: SolveStatus,
    pub iterations: usize,
    pub state: PalmState,
    /// Parameters in force at the end (differs from the input under continuation).
    pub params: PalmParams,
    pub verdict: ParamVerdict,
    pub lipschitz: LipschitzConstants,
    pub waivers: Vec<String>,
    pub trace: Vec<IterRecord>,
    pub final_kkt: f64,
    pub wall_time: f64,
}

/// Runs PALM from `init` to completion.
pub fn palm_solve(sf: &StandardForm, params: PalmParams, init: PalmState, opts: PalmOptions) -> Result<PalmOutcome> {
    PalmRun::new(sf, params, init, opts)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    fn ex1() -> StandardForm {
        cases::example1().standard_form().unwrap()
    }

    #[test]
    fn example1_norms_are_unit() {
        let norms = CouplingNorms::of(&ex1()).unwrap();
        for v in [norms.ata, norms.btb, norms.atb] {
            assert!((v - 1.0).abs() < 1e-10, "{norms:?}");
        }
    }

    #[test]
    fn reference_weights_valid_at_rho_50() {
        let l = LipschitzConstants { kappa1: 50.0, kappa2: 50.0, kappa3: 50.0 };
        let v = validate_params(&PalmParams::default(), &l);
        assert!(v.valid, "{:?}", v.failures());
        assert!((v.varsigma - 0.267).abs() < 1e-3, "{}", v.varsigma);
        assert!((v.tau_lower - 4991.0).abs() < 5.0, "{}", v.tau_lower);
        assert!((v.tau_upper - 19247.0).abs() < 5.0, "{}", v.tau_upper);
        assert!(v.constants.c2 > 0.0 && v.constants.c3 > 0.0 && v.constants.c4 > 0.0);
    }

    #[test]
    fn sigma_at_boundary_is_rejected() {
        let l = LipschitzConstants { kappa1: 50.0, kappa2: 50.0, kappa3: 50.0 };
        let v = validate_params(&PalmParams { sigma: 1.0 / 24.0, ..PalmParams::default() }, &l);
        assert!(!v.valid);
        assert!(v.failures().contains(&"sigma < 1/24"));
    }

    #[test]
    fn huge_rho_violates_mu_bound() {
        let l = LipschitzConstants { kappa1: 1e4, kappa2: 1e4, kappa3: 1e4 };
        let v = validate_params(&PalmParams { rho: 1e4, ..PalmParams::default() }, &l);
        assert!(v.failures().contains(&"mu lower bound"));
    }

    #[test]
    fn suggestions_validate() {
        let l = LipschitzConstants { kappa1: 50.0, kappa2: 50.0, kappa3: 50.0 };
        for sigma in [0.02, 0.0416] {
            let p = suggest_params(50.0, sigma, &l).unwrap();
            assert!(validate_params(&p, &l).valid);
        }
        let zero = LipschitzConstants { kappa1: 0.0, kappa2: 0.0, kappa3: 0.0 };
        let p = suggest_params(0.0, 0.02, &zero).unwrap();
        assert_eq!(p.beta, MIN_WEIGHT);
        assert_eq!(p.mu, MIN_WEIGHT);
        assert!(validate_params(&p, &zero).valid);
        assert!(suggest_params(50.0, 1.0 / 24.0, &l).is_err());
    }

    #[test]
    fn psi_term_by_term() {
        let sf = ex1();
        let params = PalmParams { gamma: 0.7, ..PalmParams::default() };
        let lips = LipschitzConstants::compute(&sf, params.rho).unwrap();
        let mut pt = DVector::zeros(6);
        pt[0] = 0.5;
        pt[5] = -1.0;
        let at = |z: DVector<f64>| PalmState {
            wt: z.clone(),
            pt: pt.clone(),
            z: z.clone(),
            u: DVector::zeros(25),
            prev_wt: Some(z),
            prev_u: Some(DVector::zeros(25)),
        };

        // W = I violates the Lyapunov cone: A has a zero diagonal
        let eye = symvec::vec_of(&nalgebra::DMatrix::identity(5, 5));
        assert_eq!(psi_eval(&at(eye.clone()), &sf, &params, &lips).unwrap(), f64::INFINITY);

        // the relative pBCD residual needs to be tight for a 1e-6 absolute margin
        let cfg = PbcdConfig { eps: 1e-13, ..PbcdConfig::default() };
        let mut prox = FProx::new(&sf, params.beta, cfg).unwrap();
        let (z, _) = prox.solve_vec(&(eye * 3.0)).unwrap();
        let w = symvec::unvec(&z, 5, 5);
        let fe = sf.feasibility(&w).unwrap();
        assert!(fe.within(INDICATOR_TOL), "{fe:?}");
        let state = at(z);
        let expect = sf.r.dot(&symvec::symmetrize(&w)) + 0.7 * 2.0 + penalty(&state.wt, &pt, &sf, params.rho);
        let got = psi_eval(&state, &sf, &params, &lips).unwrap();
        assert!((got - expect).abs() < 1e-10 * expect.abs(), "{got} vs {expect}");
    }

    #[test]
    fn psi_needs_history() {
        let sf = ex1();
        let params = PalmParams::default();
        let lips = LipschitzConstants::compute(&sf, params.rho).unwrap();
        assert!(psi_eval(&PalmState::all_ones(&sf), &sf, &params, &lips).is_err());
    }

    #[test]
    fn zero_iterations_return_the_start() {
        let sf = ex1();
        let init = PalmState::all_ones(&sf);
        let out = palm_solve(&sf, PalmParams { max_iter: 0, ..PalmParams::default() }, init.clone(), PalmOptions::default()).unwrap();
        assert_eq!(out.status, SolveStatus::NotStarted);
        assert_eq!(out.state, init);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn strict_mode_rejects_invalid_weights() {
        let sf = ex1();
        let params = PalmParams { rho: 100.0, ..PalmParams::default() };
        let opts = PalmOptions { strict: true, ..PalmOptions::default() };
        assert!(matches!(PalmRun::new(&sf, params, PalmState::all_ones(&sf), opts), Err(Error::Parameters(_))));
        let run = PalmRun::new(&sf, params, PalmState::all_ones(&sf), PalmOptions::default()).unwrap();
        assert_eq!(run.waivers.len(), 1);
    }

    #[test]
    fn multiplier_update_identity_holds() {
        let sf = ex1();
        let mut run = PalmRun::new(&sf, PalmParams::default(), PalmState::all_ones(&sf), PalmOptions::default()).unwrap();
        for _ in 0..5 {
            let before = run.state().u.clone();
            run.step().unwrap();
            let s = run.state();
            let expect = (&s.wt - &s.z) * (run.params().sigma * run.params().beta);
            assert!((&s.u - &before - expect).norm() <= 1e-12 * (1.0 + s.u.norm()));
        }
    }

    #[test]
    fn kkt_residual_positive_at_all_ones() {
        let sf = ex1();
        let params = PalmParams::default();
        let mut prox = FProx::new(&sf, params.beta, PbcdConfig::default()).unwrap();
        assert!(kkt_residual(&PalmState::all_ones(&sf), &sf, &params, &mut prox).unwrap() > 0.0);
    }
}
