//! Proximal map of the cone-constrained linear cost
//!
//! ```text
//! f(W) = <R, W> + indicator{ W ⪰ 0, V₂(FᵢW + WFᵢᵀ + Q)V₂ᵀ ⪯ 0 for every vertex i }
//! ```
//!
//! evaluated through its Lagrangian dual. In `svec` coordinates the primal is
//!
//! ```text
//! minimize   <r, w> + ½ (w − c)ᵀ H (w − c)
//! subject to opⱼ·w + offsetⱼ ∈ 𝕊₊  (one block per vertex, optional floor block)
//!            w ∈ 𝕊₊ᵖ
//! ```
//!
//! with a positive diagonal metric `H` (`βI` for the PALM step). Writing
//! `d = r − X₀ − Σ opⱼᵀXⱼ`, the dual objective to be minimized over PSD blocks is
//!
//! ```text
//! Ω(X) = Σ <Xⱼ, offsetⱼ> − <d, c> + ½ dᵀH⁻¹d
//! ```
//!
//! and the primal point is recovered as `w = c − H⁻¹d`. Blocks are updated
//! Gauss–Seidel style from the last vertex down to `X₀`, each by a projected
//! gradient step of length `1/ρⱼ`, `ρⱼ = λmax(opⱼH⁻¹opⱼᵀ)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::StandardForm;
use crate::symvec::{self, psd_project_svec, smat, svec, svec_len};

/// Floor for `ρⱼ` when a block's curvature vanishes.
pub const RHO_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbcdConfig {
    /// Stopping tolerance on the relative fixed-point residual.
    pub eps: f64,
    pub max_iter: usize,
    pub warm_start: bool,
    /// When set, keep iterating past `eps` until the recovered primal point
    /// violates every cone by at most this much.
    pub primal_tol: Option<f64>,
}

impl Default for PbcdConfig {
    fn default() -> Self {
        PbcdConfig { eps: 1e-8, max_iter: 50_000, warm_start: true, primal_tol: None }
    }
}

impl PbcdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::Invalid(format!("pbcd eps must be > 0, got {}", self.eps)));
        }
        if let Some(t) = self.primal_tol {
            if !(t > 0.0) {
                return Err(Error::Invalid(format!("pbcd primal tolerance must be > 0, got {t}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Invalid("pbcd maxIter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// `−V₂(FᵢW + WFᵢᵀ + Q)V₂ᵀ ⪰ 0` for vertex `i`.
    Vertex(usize),
    /// `W₁ − δI ⪰ 0`.
    Floor,
}

/// One conic constraint `op·w + offset ∈ 𝕊₊^side` of the primal.
#[derive(Debug, Clone)]
pub struct ConeBlock {
    pub kind: BlockKind,
    pub side: usize,
    pub op: DMatrix<f64>,
    pub offset: DVector<f64>,
    /// `op·H⁻¹·opᵀ`, the block's Hessian in the dual.
    pub gram: DMatrix<f64>,
    pub rho: f64,
}

/// Operators shared by every prox evaluation with the same metric.
#[derive(Debug, Clone)]
pub struct PbcdDerived {
    pub p: usize,
    /// `svec(R)`.
    pub r: DVector<f64>,
    pub metric: DVector<f64>,
    pub metric_inv: DVector<f64>,
    /// Step constant of the `X₀` block, `max H⁻¹`.
    pub rho0: f64,
    /// Cone blocks in storage order; updates run over them in reverse.
    pub blocks: Vec<ConeBlock>,
}

/// `Aᵢ(W) = V₂(FᵢW + WFᵢᵀ)V₂ᵀ` as a matrix acting on `svec(W)`.
fn lyapunov_operator(f: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let p = f.nrows();
    let cols = svec_len(p);
    let mut op = DMatrix::zeros(svec_len(n), cols);
    for k in 0..cols {
        let mut e = DVector::zeros(cols);
        e[k] = 1.0;
        let w = smat(&e, p);
        let full = f * &w + &w * f.transpose();
        let block = full.view((0, 0), (n, n)).into_owned();
        op.set_column(k, &svec(&block));
    }
    op
}

fn floor_operator(p: usize, n: usize) -> DMatrix<f64> {
    let cols = svec_len(p);
    let mut op = DMatrix::zeros(svec_len(n), cols);
    for k in 0..cols {
        let mut e = DVector::zeros(cols);
        e[k] = 1.0;
        let w = smat(&e, p);
        op.set_column(k, &svec(&w.view((0, 0), (n, n)).into_owned()));
    }
    op
}

fn make_block(kind: BlockKind, side: usize, op: DMatrix<f64>, offset: DVector<f64>, metric_inv: &DVector<f64>) -> Result<ConeBlock> {
    let mut scaled = op.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= metric_inv[k];
    }
    let gram = symvec::symmetrize(&(&scaled * op.transpose()));
    let rho = if gram.nrows() == 0 { RHO_FLOOR } else { symvec::max_eig(&gram)?.max(RHO_FLOOR) };
    Ok(ConeBlock { kind, side, op, offset, gram, rho })
}

impl PbcdDerived {
    /// Operators for a diagonal metric `H = diag(metric)` in `svec` coordinates.
    pub fn with_metric(sf: &StandardForm, metric: DVector<f64>) -> Result<Self> {
        let p = sf.p;
        let n = sf.n;
        if metric.len() != svec_len(p) {
            return Err(Error::dim("prox metric", svec_len(p), metric.len()));
        }
        if metric.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Invalid("prox metric must be positive and finite".into()));
        }
        let metric_inv = metric.map(|h| 1.0 / h);
        let rho0 = metric_inv.max();

        let q_top = sf.q.view((0, 0), (n, n)).into_owned();
        let q_offset = -svec(&q_top);
        let mut blocks = Vec::with_capacity(sf.vertices() + 1);
        for (i, f) in sf.f.iter().enumerate() {
            let op = -lyapunov_operator(f, n);
            blocks.push(make_block(BlockKind::Vertex(i), n, op, q_offset.clone(), &metric_inv)?);
        }
        if let Some(delta) = sf.delta_floor {
            let offset = -svec(&(DMatrix::<f64>::identity(n, n) * delta));
            blocks.push(make_block(BlockKind::Floor, n, floor_operator(p, n), offset, &metric_inv)?);
        }
        Ok(PbcdDerived { p, r: svec(&sf.r), metric, metric_inv, rho0, blocks })
    }

    /// Largest cone violation of `w`: `max(−λmin(W), −λmin(opⱼw + offⱼ))`.
    pub fn primal_violation(&self, w: &DVector<f64>) -> Result<f64> {
        let mut worst = -symvec::min_eig(&smat(w, self.p))?;
        for b in &self.blocks {
            worst = worst.max(-symvec::min_eig(&smat(&(&b.op * w + &b.offset), b.side))?);
        }
        Ok(worst)
    }

    pub fn dual_len(&self) -> usize {
        svec_len(self.p)
    }

    /// `d = r − X₀ − Σ opⱼᵀXⱼ`.
    pub fn aggregate(&self, ds: &DualState) -> DVector<f64> {
        let mut d = &self.r - &ds.x0;
        for (b, x) in self.blocks.iter().zip(&ds.blocks) {
            d -= b.op.tr_mul(x);
        }
        d
    }

    /// Primal point `w = c − H⁻¹d`.
    pub fn primal_from_aggregate(&self, d: &DVector<f64>, center: &DVector<f64>) -> DVector<f64> {
        center - d.component_mul(&self.metric_inv)
    }

    pub fn recover_primal(&self, ds: &DualState, center: &DVector<f64>) -> DVector<f64> {
        self.primal_from_aggregate(&self.aggregate(ds), center)
    }

    /// `<r, w> + ½ (w − c)ᵀH(w − c)`, without the cone indicators.
    pub fn primal_value(&self, w: &DVector<f64>, center: &DVector<f64>) -> f64 {
        let diff = w - center;
        self.r.dot(w) + 0.5 * diff.component_mul(&diff).dot(&self.metric)
    }
}

/// Builds the operators for the PALM prox step, `H = βI`.
pub fn precompute(sf: &StandardForm, beta: f64) -> Result<PbcdDerived> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Invalid(format!("beta must be > 0, got {beta}")));
    }
    PbcdDerived::with_metric(sf, DVector::from_element(svec_len(sf.p), beta))
}

/// Dual multipliers: `x0` for `W ⪰ 0`, then one entry per cone block.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub x0: DVector<f64>,
    pub blocks: Vec<DVector<f64>>,
}

impl DualState {
    pub fn zeros(derived: &PbcdDerived) -> Self {
        DualState {
            x0: DVector::zeros(derived.dual_len()),
            blocks: derived.blocks.iter().map(|b| DVector::zeros(svec_len(b.side))).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x0.norm_squared() + self.blocks.iter().map(|x| x.norm_squared()).sum::<f64>()).sqrt()
    }

    fn matches(&self, derived: &PbcdDerived) -> bool {
        self.x0.len() == derived.dual_len()
            && self.blocks.len() == derived.blocks.len()
            && self.blocks.iter().zip(&derived.blocks).all(|(x, b)| x.len() == svec_len(b.side))
    }
}

/// Smooth part of the dual objective `Ω` (cone indicators excluded).
pub fn dual_smooth_value(ds: &DualState, center: &DVector<f64>, derived: &PbcdDerived) -> f64 {
    let d = derived.aggregate(ds);
    smooth_value_from_aggregate(ds, &d, center, derived)
}

fn smooth_value_from_aggregate(ds: &DualState, d: &DVector<f64>, center: &DVector<f64>, derived: &PbcdDerived) -> f64 {
    let linear: f64 = derived.blocks.iter().zip(&ds.blocks).map(|(b, x)| b.offset.dot(x)).sum();
    linear - d.dot(center) + 0.5 * d.component_mul(d).dot(&derived.metric_inv)
}

/// Gradient of the smooth part of `Ω`, block by block.
pub fn dual_gradient(ds: &DualState, center: &DVector<f64>, derived: &PbcdDerived) -> DualState {
    let w = derived.recover_primal(ds, center);
    DualState {
        x0: w.clone(),
        blocks: derived.blocks.iter().map(|b| &b.op * &w + &b.offset).collect(),
    }
}

fn sweep(ds: &mut DualState, d: &mut DVector<f64>, center: &DVector<f64>, derived: &PbcdDerived) -> Result<()> {
    for (j, b) in derived.blocks.iter().enumerate().rev() {
        let w = derived.primal_from_aggregate(d, center);
        let grad = &b.op * &w + &b.offset;
        let trial = &ds.blocks[j] - grad / b.rho;
        let next = psd_project_svec(&trial, b.side)?;
        *d -= b.op.tr_mul(&(&next - &ds.blocks[j]));
        ds.blocks[j] = next;
    }
    let w = derived.primal_from_aggregate(d, center);
    let trial = &ds.x0 - w / derived.rho0;
    let next = psd_project_svec(&trial, derived.p)?;
    *d -= &next - &ds.x0;
    ds.x0 = next;
    Ok(())
}

/// One full Gauss–Seidel sweep, blocks in descending order then `X₀`.
pub fn pbcd_step(ds: &DualState, center: &DVector<f64>, derived: &PbcdDerived) -> Result<DualState> {
    let mut next = ds.clone();
    let mut d = derived.aggregate(ds);
    sweep(&mut next, &mut d, center, derived)?;
    Ok(next)
}

fn block_residual(x: &DVector<f64>, grad: &DVector<f64>, side: usize) -> Result<f64> {
    let proj = psd_project_svec(&(x - grad), side)?;
    Ok((x - proj).norm() / (1.0 + x.norm() + grad.norm()))
}

fn residual_from_aggregate(ds: &DualState, d: &DVector<f64>, center: &DVector<f64>, derived: &PbcdDerived) -> Result<f64> {
    let w = derived.primal_from_aggregate(d, center);
    let mut err = block_residual(&ds.x0, &w, derived.p)?;
    for (b, x) in derived.blocks.iter().zip(&ds.blocks) {
        let grad = &b.op * &w + &b.offset;
        err = err.max(block_residual(x, &grad, b.side)?);
    }
    Ok(err)
}

/// Relative fixed-point residual `max_j ‖Xⱼ − Π(Xⱼ − ∇ⱼΩ)‖ / (1 + ‖Xⱼ‖ + ‖∇ⱼΩ‖)`.
pub fn residual(ds: &DualState, center: &DVector<f64>, derived: &PbcdDerived) -> Result<f64> {
    residual_from_aggregate(ds, &derived.aggregate(ds), center, derived)
}

#[derive(Debug, Clone)]
pub struct ProxOutcome {
    /// Recovered primal point in `svec` coordinates.
    pub w: DVector<f64>,
    pub dual: DualState,
    pub iterations: usize,
    pub converged: bool,
    pub err: f64,
    pub err_history: Vec<f64>,
}

impl ProxOutcome {
    pub fn matrix(&self, p: usize) -> DMatrix<f64> {
        smat(&self.w, p)
    }

    /// `vec` of the recovered primal point.
    pub fn vec(&self, p: usize) -> DVector<f64> {
        symvec::vec_of(&self.matrix(p))
    }
}

/// Runs pBCD from `start` until the residual drops to `cfg.eps` or the cap is hit.
pub fn solve_dual(center: &DVector<f64>, derived: &PbcdDerived, cfg: &PbcdConfig, start: DualState) -> Result<ProxOutcome> {
    cfg.validate()?;
    if center.len() != derived.dual_len() {
        return Err(Error::dim("prox center", derived.dual_len(), center.len()));
    }
    if !start.matches(derived) {
        return Err(Error::Invalid("dual warm start does not match the problem".into()));
    }
    let mut ds = start;
    let mut d = derived.aggregate(&ds);
    let mut err = residual_from_aggregate(&ds, &d, center, derived)?;
    let mut history = vec![err];
    let mut iterations = 0;
    let primal_ok = |d: &DVector<f64>| -> Result<bool> {
        match cfg.primal_tol {
            Some(tol) => Ok(derived.primal_violation(&derived.primal_from_aggregate(d, center))? <= tol),
            None => Ok(true),
        }
    };
    while iterations < cfg.max_iter && (err > cfg.eps || !primal_ok(&d)?) {
        sweep(&mut ds, &mut d, center, derived)?;
        iterations += 1;
        err = residual_from_aggregate(&ds, &d, center, derived)?;
        history.push(err);
    }
    // refresh the incrementally maintained aggregate before recovery
    let w = derived.recover_primal(&ds, center);
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("pBCD produced a non-finite primal point".into()));
    }
    let converged = err <= cfg.eps && primal_ok(&derived.aggregate(&ds))?;
    Ok(ProxOutcome { w, dual: ds, iterations, converged, err, err_history: history })
}

/// Symmetric part of `unvec(xi)` in `svec` coordinates.
pub fn center_from_vec(xi: &DVector<f64>, p: usize) -> Result<DVector<f64>> {
    if xi.len() != p * p {
        return Err(Error::dim("prox argument", p * p, xi.len()));
    }
    Ok(svec(&symvec::symmetrize(&symvec::unvec(xi, p, p))))
}

/// `argmin_z f(z) + (β/2)‖z − xi‖²` for `xi ∈ ℝ^{p²}`.
pub fn prox_f(
    xi: &DVector<f64>,
    sf: &StandardForm,
    beta: f64,
    cfg: &PbcdConfig,
    warm: Option<&DualState>,
) -> Result<ProxOutcome> {
    let derived = precompute(sf, beta)?;
    let center = center_from_vec(xi, sf.p)?;
    let start = match warm {
        Some(ds) if cfg.warm_start => ds.clone(),
        _ => DualState::zeros(&derived),
    };
    solve_dual(&center, &derived, cfg, start)
}

/// Reusable prox evaluator that keeps its operators and the last dual point.
#[derive(Debug, Clone)]
pub struct FProx {
    derived: PbcdDerived,
    cfg: PbcdConfig,
    warm: Option<DualState>,
}

impl FProx {
    pub fn new(sf: &StandardForm, beta: f64, cfg: PbcdConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(FProx { derived: precompute(sf, beta)?, cfg, warm: None })
    }

    pub fn with_metric(sf: &StandardForm, metric: DVector<f64>, cfg: PbcdConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(FProx { derived: PbcdDerived::with_metric(sf, metric)?, cfg, warm: None })
    }

    pub fn derived(&self) -> &PbcdDerived {
        &self.derived
    }

    pub fn config(&self) -> &PbcdConfig {
        &self.cfg
    }

    /// Solves for a center given in `svec` coordinates.
    pub fn solve_svec(&mut self, center: &DVector<f64>) -> Result<ProxOutcome> {
        let start = match (&self.warm, self.cfg.warm_start) {
            (Some(ds), true) => ds.clone(),
            _ => DualState::zeros(&self.derived),
        };
        let out = solve_dual(center, &self.derived, &self.cfg, start)?;
        self.warm = Some(out.dual.clone());
        Ok(out)
    }

    /// Solves for `xi ∈ ℝ^{p²}` and returns the result as a `vec`.
    pub fn solve_vec(&mut self, xi: &DVector<f64>) -> Result<(DVector<f64>, ProxOutcome)> {
        let center = center_from_vec(xi, self.derived.p)?;
        let out = self.solve_svec(&center)?;
        Ok((out.vec(self.derived.p), out))
    }
}
