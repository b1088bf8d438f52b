//! Direct ADMM baseline on the constrained problem
//!
//! ```text
//! min f(W) + g(P)   s.t.  A·W + B·P = 0
//! ```
//!
//! with relaxation `ξ ∈ [0, 1]`:
//!
//! ```text
//! u ← λ − β(1−ξ)(AW + BP)
//! W ← argmin f(W) + <u, AW> + (β/2)‖AW + BP‖² + (η/2)‖W − W_prev‖²
//! λ ← u + β(AW + BP)
//! P ← prox_{g/β}(−Bᵀ(AW + λ/β))
//! ```
//!
//! `AᵀA` is only a coordinate projector, so the `W` step carries a small
//! proximal term (`η = eta_rel·β`) to keep it strongly convex. No convergence
//! is claimed; the run records cluster-point diagnostics instead.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fprox::{FProx, PbcdConfig};
use crate::gprox::{group_l0_norm, group_l0_prox, group_l1_norm, group_l1_prox, GroupProxParams};
use crate::model::StandardForm;
use crate::palm::SolveStatus;
use crate::symvec::{self, svec, svec_index, svec_len};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Penalty {
    GroupL0,
    GroupL1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AdmmParams {
    pub beta: f64,
    pub xi: f64,
    pub gamma: f64,
    pub budget: Option<usize>,
    pub max_iter: usize,
    pub tol_feas: f64,
    /// Proximal weight of the `W` step relative to `β`.
    pub eta_rel: f64,
    pub penalty: Penalty,
    /// Consecutive iterations with feasibility below `tol_feas` needed to stop.
    pub sustain: usize,
    /// Length of the trailing diagnostics window.
    pub window: usize,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams {
            beta: 300.0,
            xi: 0.5,
            gamma: 1.0,
            budget: None,
            max_iter: 5000,
            tol_feas: 1e-6,
            eta_rel: 0.3,
            penalty: Penalty::GroupL0,
            sustain: 50,
            window: 500,
        }
    }
}

impl AdmmParams {
    pub fn check(&self, sf: &StandardForm) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Parameters(format!("beta must be finite and > 0, got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(Error::Parameters(format!("xi must lie in [0, 1], got {}", self.xi)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Parameters(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if !(self.eta_rel > 0.0 && self.eta_rel.is_finite()) {
            return Err(Error::Parameters(format!("etaRel must be finite and > 0, got {}", self.eta_rel)));
        }
        if !(self.tol_feas > 0.0) {
            return Err(Error::Parameters("tolFeas must be > 0".into()));
        }
        if self.window == 0 || self.sustain == 0 {
            return Err(Error::Parameters("window and sustain must be >= 1".into()));
        }
        if let Some(b) = self.budget {
            if b > sf.groups.len() {
                return Err(Error::Parameters(format!("budget {b} exceeds the {} groups", sf.groups.len())));
            }
        }
        Ok(())
    }

    fn budget(&self, sf: &StandardForm) -> usize {
        self.budget.unwrap_or(sf.groups.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub wt: DVector<f64>,
    pub pt: DVector<f64>,
    pub lambda: DVector<f64>,
    pub u: DVector<f64>,
    pub running_min_feas: f64,
    pub running_min_structure: f64,
    pub running_min_coupling: f64,
    /// Trailing feasibility values, oldest first.
    pub window: VecDeque<f64>,
}

impl AdmmState {
    pub fn new(sf: &StandardForm, u: DVector<f64>, wt: DVector<f64>, lambda: DVector<f64>, pt: DVector<f64>) -> Result<Self> {
        let (pp, rows) = (sf.p * sf.p, sf.rows());
        for (name, v, len) in [("u", &u, rows), ("W", &wt, pp), ("lambda", &lambda, rows), ("P", &pt, sf.mn())] {
            if v.len() != len {
                return Err(Error::dim(format!("initial {name}"), len, v.len()));
            }
        }
        Ok(AdmmState {
            wt,
            pt,
            lambda,
            u,
            running_min_feas: f64::INFINITY,
            running_min_structure: f64::INFINITY,
            running_min_coupling: f64::INFINITY,
            window: VecDeque::new(),
        })
    }

    /// `(u, W, λ, P) = (0, w0·𝟏, 0, 0)`.
    pub fn flat(sf: &StandardForm, w0: f64) -> Self {
        let rows = sf.rows();
        AdmmState {
            wt: DVector::from_element(sf.p * sf.p, w0),
            pt: DVector::zeros(sf.mn()),
            lambda: DVector::zeros(rows),
            u: DVector::zeros(rows),
            running_min_feas: f64::INFINITY,
            running_min_structure: f64::INFINITY,
            running_min_coupling: f64::INFINITY,
            window: VecDeque::new(),
        }
    }

    pub fn window_amplitude(&self) -> f64 {
        if self.window.is_empty() {
            return 0.0;
        }
        let (lo, hi) = self
            .window
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmmRecord {
    pub iter: usize,
    /// Augmented Lagrangian `f + g + <λ, r> + (β/2)‖r‖²`.
    pub psi: f64,
    pub feas: f64,
    pub step_w: f64,
    pub step_p: f64,
    /// `‖Δλ‖`.
    pub step_z: f64,
    pub step_u: f64,
    /// `max(feas, β‖AᵀB ΔP‖)`.
    pub kkt: f64,
    pub inner_iters: usize,
    pub inner_converged: bool,
    pub nnz_groups: usize,
    /// Largest residual entry outside the coupling rows (zeroed `W1` blocks, forbidden entries).
    pub structure_res: f64,
    /// `‖vec(W2ᵀ) − vec(P)‖`.
    pub coupling_res: f64,
    pub running_min_feas: f64,
    pub running_min_structure: f64,
    pub running_min_coupling: f64,
    pub window_amplitude: f64,
}

/// Residual split into the largest non-coupling entry and the coupling-row norm.
pub fn split_residual(sf: &StandardForm, r: &DVector<f64>) -> (f64, f64) {
    let coupling = sf.coupling_rows();
    let structure = (0..r.len()).filter(|i| !coupling.contains(i)).map(|i| r[i].abs()).fold(0.0, f64::max);
    (structure, r.rows(coupling.start, coupling.len()).norm())
}

/// Diagonal metric of the `W` step in `svec` coordinates: `β·diag(DᵀAᵀAD) + η`.
pub fn w_step_metric(sf: &StandardForm, beta: f64, eta: f64) -> DVector<f64> {
    let p = sf.p;
    let proj: Vec<f64> = (0..p * p).map(|k| sf.acoup.column(k).norm_squared()).collect();
    let mut h = DVector::from_element(svec_len(p), eta);
    for j in 0..p {
        for i in j..p {
            let s = if i == j { proj[i + p * j] } else { 0.5 * (proj[i + p * j] + proj[j + p * i]) };
            h[svec_index(p, i, j)] += beta * s;
        }
    }
    h
}

/// A resumable ADMM run.
pub struct AdmmRun<'a> {
    sf: &'a StandardForm,
    params: AdmmParams,
    prox: FProx,
    state: AdmmState,
    iter: usize,
    below: usize,
    trace: Vec<AdmmRecord>,
}

impl<'a> AdmmRun<'a> {
    pub fn new(sf: &'a StandardForm, params: AdmmParams, init: AdmmState, pbcd: PbcdConfig) -> Result<Self> {
        params.check(sf)?;
        AdmmState::new(sf, init.u.clone(), init.wt.clone(), init.lambda.clone(), init.pt.clone())?;
        let metric = w_step_metric(sf, params.beta, params.eta_rel * params.beta);
        Ok(AdmmRun {
            sf,
            params,
            prox: FProx::with_metric(sf, metric, pbcd)?,
            state: init,
            iter: 0,
            below: 0,
            trace: Vec::new(),
        })
    }

    pub fn state(&self) -> &AdmmState {
        &self.state
    }
    pub fn params(&self) -> &AdmmParams {
        &self.params
    }
    pub fn trace(&self) -> &[AdmmRecord] {
        &self.trace
    }
    pub fn iterations(&self) -> usize {
        self.iter
    }

    fn p_step(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let p = &self.params;
        match p.penalty {
            Penalty::GroupL0 => {
                let gp = GroupProxParams::new(p.gamma, p.beta, p.budget(self.sf))?;
                Ok(group_l0_prox(v, self.sf, &gp))
            }
            Penalty::GroupL1 => group_l1_prox(v, self.sf, p.gamma / p.beta),
        }
    }

    fn g(&self, pt: &DVector<f64>) -> f64 {
        match self.params.penalty {
            Penalty::GroupL0 => self.params.gamma * group_l0_norm(pt, &self.sf.groups) as f64,
            Penalty::GroupL1 => self.params.gamma * group_l1_norm(pt, &self.sf.groups),
        }
    }

    /// One ADMM iteration.
    pub fn step(&mut self) -> Result<&AdmmRecord> {
        let sf = self.sf;
        let p = self.params;
        let dim = sf.p;
        let eta = p.eta_rel * p.beta;
        let old = &self.state;

        let r_old = sf.constraint_residual(&old.wt, &old.pt);
        let u = &old.lambda - &r_old * (p.beta * (1.0 - p.xi));

        let bp = &sf.bcoup * &old.pt;
        let lin = svec(&symvec::unvec(&sf.acoup.tr_mul(&(&u + &bp * p.beta)), dim, dim));
        let w_prev = svec(&symvec::symmetrize(&symvec::unvec(&old.wt, dim, dim)));
        let metric_inv = &self.prox.derived().metric_inv;
        let center = (w_prev * eta - lin).component_mul(metric_inv);
        let inner = self.prox.solve_svec(&center)?;
        let wt = inner.vec(dim);

        let aw = &sf.acoup * &wt;
        let lambda = &u + (&aw + &bp) * p.beta;
        let target = -sf.bcoup.tr_mul(&(&aw + &lambda / p.beta));
        let pt = self.p_step(&target)?;

        let r = &aw + &sf.bcoup * &pt;
        let feas = r.norm();
        let (structure_res, coupling_res) = split_residual(sf, &r);
        let dual_res = p.beta * sf.acoup.tr_mul(&(&sf.bcoup * (&pt - &old.pt))).norm();
        let w_mat = symvec::unvec(&wt, dim, dim);
        let psi = sf.r.dot(&w_mat) + self.g(&pt) + lambda.dot(&r) + 0.5 * p.beta * r.norm_squared();

        let mut window = old.window.clone();
        window.push_back(feas);
        while window.len() > p.window {
            window.pop_front();
        }
        let record = AdmmRecord {
            iter: self.iter + 1,
            psi,
            feas,
            step_w: (&wt - &old.wt).norm(),
            step_p: (&pt - &old.pt).norm(),
            step_z: (&lambda - &old.lambda).norm(),
            step_u: (&u - &old.u).norm(),
            kkt: feas.max(dual_res),
            inner_iters: inner.iterations,
            inner_converged: inner.converged,
            nnz_groups: group_l0_norm(&pt, &sf.groups),
            structure_res,
            coupling_res,
            running_min_feas: old.running_min_feas.min(feas),
            running_min_structure: old.running_min_structure.min(structure_res),
            running_min_coupling: old.running_min_coupling.min(coupling_res),
            window_amplitude: 0.0,
        };
        self.state = AdmmState {
            wt,
            pt,
            lambda,
            u,
            running_min_feas: record.running_min_feas,
            running_min_structure: record.running_min_structure,
            running_min_coupling: record.running_min_coupling,
            window,
        };
        self.iter += 1;
        self.below = if feas <= p.tol_feas { self.below + 1 } else { 0 };
        self.trace.push(AdmmRecord { window_amplitude: self.state.window_amplitude(), ..record });
        Ok(self.trace.last().expect("record just pushed"))
    }

    fn converged(&self) -> bool {
        self.below >= self.params.sustain
    }

    pub fn finish(self, status: SolveStatus, started: Instant) -> AdmmOutcome {
        AdmmOutcome {
            status,
            iterations: self.iter,
            running_min_feas: self.state.running_min_feas,
            window_amplitude: self.state.window_amplitude(),
            state: self.state,
            params: self.params,
            trace: self.trace,
            wall_time: started.elapsed().as_secs_f64(),
        }
    }

    pub fn run(mut self) -> Result<AdmmOutcome> {
        let started = Instant::now();
        if self.params.max_iter == 0 {
            return Ok(self.finish(SolveStatus::NotStarted, started));
        }
        while self.iter < self.params.max_iter {
            self.step()?;
            if self.converged() {
                return Ok(self.finish(SolveStatus::Converged, started));
            }
        }
        Ok(self.finish(SolveStatus::MaxIterations, started))
    }
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    pub status: SolveStatus,
    pub iterations: usize,
    pub state: AdmmState,
    pub params: AdmmParams,
    pub trace: Vec<AdmmRecord>,
    pub running_min_feas: f64,
    pub window_amplitude: f64,
    pub wall_time: f64,
}

pub fn admm_solve(sf: &StandardForm, params: AdmmParams, init: AdmmState, pbcd: PbcdConfig) -> Result<AdmmOutcome> {
    AdmmRun::new(sf, params, init, pbcd)?.run()
}
