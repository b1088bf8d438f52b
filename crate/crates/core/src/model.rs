//! Plant data, standing-assumption checks and assembly of the conic standard
//! form consumed by every solver.
//!
//! With `p = n + m` the decision variable is a symmetric `W ∈ 𝕊ᵖ`,
//!
//! ```text
//! W = [ W1   W2 ]      W1 ∈ 𝕊ⁿ, W2 ∈ ℝⁿˣᵐ,
//!     [ W2ᵀ  W3 ]
//! ```
//!
//! and a stabilizing gain is recovered as `K = W2ᵀ W1⁻¹`. The coupling matrices
//! `A` and `B` stack, in order: one selector block per pair of column groups
//! `i < j` (forcing the off-diagonal blocks of `W1` to zero), the copy
//! constraint `vec(W2ᵀ) − vec(P) = 0`, and one row per forbidden gain entry.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symvec;

/// Continuous-time plant `ẋ = Ax + B₂u + B₁w`, `z = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub a: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

fn shape(m: &DMatrix<f64>) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

impl LtiSystem {
    pub fn new(
        a: DMatrix<f64>,
        b1: DMatrix<f64>,
        b2: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::dim("A", "square with n >= 1", shape(&a)));
        }
        if b1.nrows() != n || b1.ncols() == 0 {
            return Err(Error::dim("B1", format!("{n}xl, l >= 1"), shape(&b1)));
        }
        if b2.nrows() != n || b2.ncols() == 0 {
            return Err(Error::dim("B2", format!("{n}xm, m >= 1"), shape(&b2)));
        }
        let m = b2.ncols();
        if c.ncols() != n || c.nrows() == 0 {
            return Err(Error::dim("C", format!("qx{n}"), shape(&c)));
        }
        if d.nrows() != c.nrows() || d.ncols() != m {
            return Err(Error::dim("D", format!("{}x{m}", c.nrows()), shape(&d)));
        }
        Ok(LtiSystem { a, b1, b2, c, d })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn m(&self) -> usize {
        self.b2.ncols()
    }
    pub fn l(&self) -> usize {
        self.b1.ncols()
    }
    pub fn q(&self) -> usize {
        self.c.nrows()
    }
}

/// One vertex `(Aᵢ, B₂ᵢ)` of the polytopic uncertainty set.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub a: DMatrix<f64>,
    pub b2: DMatrix<f64>,
}

/// Ordered, non-empty list of uncertainty vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSet {
    vertices: Vec<Vertex>,
}

impl VertexSet {
    pub fn new(vertices: Vec<Vertex>, n: usize, m: usize) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Invalid("vertex set must contain at least one vertex".into()));
        }
        for (k, v) in vertices.iter().enumerate() {
            if v.a.nrows() != n || v.a.ncols() != n {
                return Err(Error::dim(format!("vertex {} A", k + 1), format!("{n}x{n}"), shape(&v.a)));
            }
            if v.b2.nrows() != n || v.b2.ncols() != m {
                return Err(Error::dim(format!("vertex {} B2", k + 1), format!("{n}x{m}"), shape(&v.b2)));
            }
        }
        Ok(VertexSet { vertices })
    }

    /// The certain system: a single vertex equal to the nominal `(A, B₂)`.
    pub fn nominal(sys: &LtiSystem) -> Self {
        VertexSet {
            vertices: vec![Vertex { a: sys.a.clone(), b2: sys.b2.clone() }],
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter()
    }
}

/// Row and column partition of the gain `K ∈ ℝᵐˣⁿ` into `s × t` blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockStructure {
    row_dims: Vec<usize>,
    col_dims: Vec<usize>,
}

impl BlockStructure {
    pub fn new(row_dims: Vec<usize>, col_dims: Vec<usize>) -> Result<Self> {
        if row_dims.is_empty() || col_dims.is_empty() {
            return Err(Error::Invalid("block structure needs at least one row and one column group".into()));
        }
        if row_dims.iter().chain(col_dims.iter()).any(|&d| d == 0) {
            return Err(Error::Invalid("block dimensions must be >= 1".into()));
        }
        Ok(BlockStructure { row_dims, col_dims })
    }

    /// A single `m × n` block (no block-sparsity structure).
    pub fn single(m: usize, n: usize) -> Self {
        BlockStructure { row_dims: vec![m], col_dims: vec![n] }
    }

    pub fn s(&self) -> usize {
        self.row_dims.len()
    }
    pub fn t(&self) -> usize {
        self.col_dims.len()
    }
    pub fn row_dims(&self) -> &[usize] {
        &self.row_dims
    }
    pub fn col_dims(&self) -> &[usize] {
        &self.col_dims
    }

    pub fn check(&self, m: usize, n: usize) -> Result<()> {
        let rs: usize = self.row_dims.iter().sum();
        let cs: usize = self.col_dims.iter().sum();
        if rs != m {
            return Err(Error::dim("block rowDims sum", m, rs));
        }
        if cs != n {
            return Err(Error::dim("block colDims sum", n, cs));
        }
        Ok(())
    }

    pub fn row_range(&self, i: usize) -> Range<usize> {
        let start: usize = self.row_dims[..i].iter().sum();
        start..start + self.row_dims[i]
    }

    pub fn col_range(&self, j: usize) -> Range<usize> {
        let start: usize = self.col_dims[..j].iter().sum();
        start..start + self.col_dims[j]
    }

    /// Block map `g(K)`: `true` where block `(i, j)` has an entry above `tol`.
    pub fn pattern(&self, k: &DMatrix<f64>, tol: f64) -> Vec<Vec<bool>> {
        (0..self.s())
            .map(|i| {
                (0..self.t())
                    .map(|j| {
                        self.row_range(i)
                            .any(|r| self.col_range(j).any(|c| k[(r, c)].abs() > tol))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Gain entries `(i, j)` (0-based) that must be zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ForbiddenSet {
    entries: Vec<(usize, usize)>,
}

impl ForbiddenSet {
    pub fn new(entries: Vec<(usize, usize)>) -> Self {
        ForbiddenSet { entries }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// Must hold for the formulation to make sense.
    Hard,
    /// Violated by some reference instances; reported, not enforced.
    Warning,
    /// Heuristic diagnostic; never blocks a solve.
    Diagnostic,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub severity: Severity,
    pub passed: bool,
    /// Smallest eigenvalue / singular value, or largest violation for equalities.
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<Check>,
}

impl AssumptionReport {
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn hard_failures(&self) -> impl Iterator<Item = &Check> {
        self.checks
            .iter()
            .filter(|c| c.severity == Severity::Hard && !c.passed)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.severity != Severity::Hard && !c.passed)
    }
}

// σ_n of a complex n-row (or n-column) matrix via its real embedding.
fn complex_min_rank_margin(re: &DMatrix<f64>, im: &DMatrix<f64>, rank: usize) -> f64 {
    let (r, c) = re.shape();
    let mut emb = DMatrix::zeros(2 * r, 2 * c);
    emb.view_mut((0, 0), (r, c)).copy_from(re);
    emb.view_mut((0, c), (r, c)).copy_from(&(-im));
    emb.view_mut((r, 0), (r, c)).copy_from(im);
    emb.view_mut((r, c), (r, c)).copy_from(re);
    let mut sv: Vec<f64> = emb.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // each singular value of the complex matrix appears twice
    sv.get(2 * rank - 1).copied().unwrap_or(0.0)
}

/// Checks the standing assumptions on the plant.
///
/// `CᵀD = 0`, `DᵀD ≻ 0` and `B₁B₁ᵀ ≻ 0` are hard checks; `CᵀC ≻ 0` is reported
/// as a warning. Stabilizability of `(A, B₂)` and observability of imaginary-axis
/// modes of `(A, C)` are PBH rank tests evaluated at the eigenvalues of `A` only.
pub fn validate_assumption1(sys: &LtiSystem) -> Result<AssumptionReport> {
    let n = sys.n();
    let mut checks = Vec::new();

    let ctd = sys.c.transpose() * &sys.d;
    let ctd_max = ctd.amax();
    checks.push(Check {
        name: "CtD_zero".into(),
        severity: Severity::Hard,
        passed: ctd_max <= 1e-12,
        margin: ctd_max,
        detail: "max |CᵀD| entry".into(),
    });

    let mut pd = |name: &str, sev: Severity, m: DMatrix<f64>| -> Result<()> {
        let e = symvec::min_eig(&m)?;
        checks.push(Check {
            name: name.into(),
            severity: sev,
            passed: e > 0.0,
            margin: e.max(0.0).min(e),
            detail: "smallest eigenvalue".into(),
        });
        Ok(())
    };
    pd("DtD_pd", Severity::Hard, sys.d.transpose() * &sys.d)?;
    pd("CtC_pd", Severity::Warning, sys.c.transpose() * &sys.c)?;
    pd("B1B1t_pd", Severity::Hard, &sys.b1 * sys.b1.transpose())?;

    let eigs = symvec::eigenvalues(&sys.a)?;
    let scale = sys.a.norm().max(1.0);
    let tol = 1e-9 * scale;
    let eye = DMatrix::<f64>::identity(n, n);

    let mut stab_margin = f64::INFINITY;
    let mut obs_margin = f64::INFINITY;
    for &(re, im) in &eigs {
        let a_re = &sys.a - &eye * re;
        let a_im = -&eye * im;
        if re >= -tol {
            let mut mr = DMatrix::zeros(n, n + sys.m());
            mr.view_mut((0, 0), (n, n)).copy_from(&a_re);
            mr.view_mut((0, n), (n, sys.m())).copy_from(&sys.b2);
            let mut mi = DMatrix::zeros(n, n + sys.m());
            mi.view_mut((0, 0), (n, n)).copy_from(&a_im);
            stab_margin = stab_margin.min(complex_min_rank_margin(&mr, &mi, n));
        }
        if re.abs() <= tol {
            let q = sys.q();
            let mut mr = DMatrix::zeros(n + q, n);
            mr.view_mut((0, 0), (n, n)).copy_from(&a_re);
            mr.view_mut((n, 0), (q, n)).copy_from(&sys.c);
            let mut mi = DMatrix::zeros(n + q, n);
            mi.view_mut((0, 0), (n, n)).copy_from(&a_im);
            obs_margin = obs_margin.min(complex_min_rank_margin(&mr, &mi, n));
        }
    }
    checks.push(Check {
        name: "stabilizable".into(),
        severity: Severity::Diagnostic,
        passed: stab_margin > tol,
        margin: stab_margin,
        detail: "PBH: min σ_n([A−λI, B₂]) over eigenvalues of A with Re λ ≥ 0 (∞ if none)".into(),
    });
    checks.push(Check {
        name: "imag_axis_observable".into(),
        severity: Severity::Diagnostic,
        passed: obs_margin > tol,
        margin: obs_margin,
        detail: "PBH: min σ_n([A−λI; C]) over eigenvalues of A on the imaginary axis (∞ if none)".into(),
    });

    Ok(AssumptionReport { checks })
}

/// `R`, `Q` and vertex matrices `Fᵢ` of the lifted problem (all `p × p`).
#[derive(Debug, Clone)]
pub struct Augmented {
    pub r: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub f: Vec<DMatrix<f64>>,
}

pub fn build_augmented(sys: &LtiSystem, vs: &VertexSet) -> Result<Augmented> {
    let (n, m) = (sys.n(), sys.m());
    let p = n + m;
    let mut r = DMatrix::zeros(p, p);
    r.view_mut((0, 0), (n, n)).copy_from(&(sys.c.transpose() * &sys.c));
    r.view_mut((n, n), (m, m)).copy_from(&(sys.d.transpose() * &sys.d));
    let mut q = DMatrix::zeros(p, p);
    q.view_mut((0, 0), (n, n)).copy_from(&(&sys.b1 * sys.b1.transpose()));
    let mut f = Vec::with_capacity(vs.len());
    for v in vs.iter() {
        if v.a.shape() != (n, n) || v.b2.shape() != (n, m) {
            return Err(Error::dim("vertex", format!("A {n}x{n}, B2 {n}x{m}"), format!("A {}, B2 {}", shape(&v.a), shape(&v.b2))));
        }
        let mut fi = DMatrix::zeros(p, p);
        fi.view_mut((0, 0), (n, n)).copy_from(&v.a);
        // u = −Kx with K = W2ᵀW1⁻¹ puts −B2 in the lifted drift
        fi.view_mut((0, n), (n, m)).copy_from(&(-&v.b2));
        f.push(fi);
    }
    Ok(Augmented { r, q, f })
}

/// Selector matrices of the lifted problem.
#[derive(Debug, Clone)]
pub struct Selectors {
    /// `[0 I_m]`, `m × p`.
    pub v1: DMatrix<f64>,
    /// `[I_n 0]`, `n × p`.
    pub v2: DMatrix<f64>,
    /// `(V_{j1}, V_{j2})` for each pair of column groups, `V_{j1}` is `n_ξ × p`
    /// and `V_{j2}` is `p × n_κ`.
    pub block_pairs: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    /// 0-based `(ξ(j), κ(j))` in lexicographic order.
    pub pairs: Vec<(usize, usize)>,
}

fn group_selector(bs: &BlockStructure, group: usize, p: usize) -> DMatrix<f64> {
    let range = bs.col_range(group);
    let mut v = DMatrix::zeros(range.len(), p);
    for (r, c) in range.enumerate() {
        v[(r, c)] = 1.0;
    }
    v
}

pub fn build_selectors(bs: &BlockStructure, n: usize, m: usize) -> Result<Selectors> {
    bs.check(m, n)?;
    let p = n + m;
    let mut v1 = DMatrix::zeros(m, p);
    for i in 0..m {
        v1[(i, n + i)] = 1.0;
    }
    let mut v2 = DMatrix::zeros(n, p);
    for i in 0..n {
        v2[(i, i)] = 1.0;
    }
    let t = bs.t();
    let mut pairs = Vec::with_capacity(t * t.saturating_sub(1) / 2);
    let mut block_pairs = Vec::with_capacity(pairs.capacity());
    for i in 0..t {
        for j in (i + 1)..t {
            pairs.push((i, j));
            block_pairs.push((group_selector(bs, i, p), group_selector(bs, j, p).transpose()));
        }
    }
    Ok(Selectors { v1, v2, block_pairs, pairs })
}

/// Everything the solvers need, assembled once.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub blocks: BlockStructure,
    pub forbidden: ForbiddenSet,
    pub r: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub f: Vec<DMatrix<f64>>,
    pub selectors: Selectors,
    /// Stacked coupling matrix `A`, `rows × p²`.
    pub acoup: DMatrix<f64>,
    /// `B`, `rows × mn`.
    pub bcoup: DMatrix<f64>,
    /// Group index sets into `vec(P)`, ordered by `ℓ = i + s·j`.
    pub groups: Vec<Vec<usize>>,
    /// Optional floor `W1 − δI ⪰ 0`.
    pub delta_floor: Option<f64>,
    coupling_start: usize,
}

pub fn assemble_standard_form(
    sys: &LtiSystem,
    vs: &VertexSet,
    bs: &BlockStructure,
    forbidden: &ForbiddenSet,
) -> Result<StandardForm> {
    let (n, m) = (sys.n(), sys.m());
    let p = n + m;
    let aug = build_augmented(sys, vs)?;
    let sel = build_selectors(bs, n, m)?;
    for &(i, j) in forbidden.entries() {
        if i >= m || j >= n {
            return Err(Error::Invalid(format!(
                "forbidden entry ({}, {}) outside the {m}x{n} gain",
                i + 1,
                j + 1
            )));
        }
    }

    let mut rows: Vec<DMatrix<f64>> = sel
        .block_pairs
        .iter()
        .map(|(vj1, vj2)| vj2.transpose().kronecker(vj1))
        .collect();
    let coupling_start: usize = rows.iter().map(|r| r.nrows()).sum();
    rows.push(sel.v2.kronecker(&sel.v1));
    let mut forb = DMatrix::zeros(forbidden.len(), p * p);
    for (k, &(i, j)) in forbidden.entries().iter().enumerate() {
        forb[(k, (n + i) + p * j)] = 1.0;
    }
    rows.push(forb);

    let total: usize = rows.iter().map(|r| r.nrows()).sum();
    let mut acoup = DMatrix::zeros(total, p * p);
    let mut off = 0;
    for r in &rows {
        acoup.view_mut((off, 0), (r.nrows(), p * p)).copy_from(r);
        off += r.nrows();
    }
    let mut bcoup = DMatrix::zeros(total, m * n);
    for k in 0..m * n {
        bcoup[(coupling_start + k, k)] = -1.0;
    }

    let mut groups = Vec::with_capacity(bs.s() * bs.t());
    for j in 0..bs.t() {
        for i in 0..bs.s() {
            let mut idx: Vec<usize> = bs
                .col_range(j)
                .flat_map(|c| bs.row_range(i).map(move |r| r + m * c))
                .collect();
            idx.sort_unstable();
            groups.push(idx);
        }
    }

    Ok(StandardForm {
        n,
        m,
        p,
        blocks: bs.clone(),
        forbidden: forbidden.clone(),
        r: aug.r,
        q: aug.q,
        f: aug.f,
        selectors: sel,
        acoup,
        bcoup,
        groups,
        delta_floor: None,
        coupling_start,
    })
}

impl StandardForm {
    /// Convenience: nominal plant, no forbidden entries.
    pub fn sf_lq(sys: &LtiSystem, bs: &BlockStructure) -> Result<Self> {
        assemble_standard_form(sys, &VertexSet::nominal(sys), bs, &ForbiddenSet::empty())
    }

    pub fn with_delta_floor(mut self, delta: Option<f64>) -> Self {
        self.delta_floor = delta;
        self
    }

    pub fn vertices(&self) -> usize {
        self.f.len()
    }
    pub fn s(&self) -> usize {
        self.blocks.s()
    }
    pub fn t(&self) -> usize {
        self.blocks.t()
    }
    pub fn mn(&self) -> usize {
        self.m * self.n
    }
    pub fn rows(&self) -> usize {
        self.acoup.nrows()
    }

    /// Rows of `A`/`B` carrying `vec(W2ᵀ) − vec(P)`.
    pub fn coupling_rows(&self) -> Range<usize> {
        self.coupling_start..self.coupling_start + self.mn()
    }

    /// Rows forcing the off-diagonal blocks of `W1` to zero.
    pub fn block_rows(&self) -> Range<usize> {
        0..self.coupling_start
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    /// `A·w + B·p`.
    pub fn constraint_residual(&self, wt: &DVector<f64>, pt: &DVector<f64>) -> DVector<f64> {
        &self.acoup * wt + &self.bcoup * pt
    }

    /// Squared Euclidean norm of `v` on each group.
    pub fn group_norms(&self, v: &DVector<f64>) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.mn());
        self.groups
            .iter()
            .map(|g| g.iter().map(|&k| v[k] * v[k]).sum())
            .collect()
    }

    /// Number of groups of `v` with at least one nonzero entry.
    pub fn nonzero_groups(&self, v: &DVector<f64>) -> usize {
        self.groups
            .iter()
            .filter(|g| g.iter().any(|&k| v[k] != 0.0))
            .count()
    }

    /// `Θᵢ,₁(W) = V₂(FᵢW + WFᵢᵀ + Q)V₂ᵀ`, the upper-left `n × n` block.
    pub fn theta1(&self, vertex: usize, w: &DMatrix<f64>) -> DMatrix<f64> {
        let fi = &self.f[vertex];
        let full = fi * w + w * fi.transpose() + &self.q;
        full.view((0, 0), (self.n, self.n)).into_owned()
    }

    /// Eigenvalue margins of `W` against the parameterization set.
    pub fn feasibility(&self, w: &DMatrix<f64>) -> Result<Feasibility> {
        let min_eig_w = symvec::min_eig(w)?;
        let mut max_eig_theta = f64::NEG_INFINITY;
        for i in 0..self.vertices() {
            max_eig_theta = max_eig_theta.max(symvec::max_eig(&self.theta1(i, w))?);
        }
        let min_eig_floor = match self.delta_floor {
            Some(delta) => {
                let w1 = w.view((0, 0), (self.n, self.n)).into_owned();
                Some(symvec::min_eig(&w1)? - delta)
            }
            None => None,
        };
        Ok(Feasibility { min_eig_w, max_eig_theta, min_eig_floor })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Feasibility {
    pub min_eig_w: f64,
    pub max_eig_theta: f64,
    pub min_eig_floor: Option<f64>,
}

impl Feasibility {
    pub fn within(&self, tol: f64) -> bool {
        self.min_eig_w >= -tol
            && self.max_eig_theta <= tol
            && self.min_eig_floor.is_none_or(|e| e >= -tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let err = LtiSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
        )
        .unwrap_err();
        assert!(err.to_string().contains("B2"), "{err}");
    }

    #[test]
    fn example1_assumptions_downgrade_ctc() {
        let ex = cases::example1();
        let rep = validate_assumption1(&ex.system).unwrap();
        assert!(rep.get("CtD_zero").unwrap().passed);
        let ctc = rep.get("CtC_pd").unwrap();
        assert!(!ctc.passed);
        assert_eq!(ctc.severity, Severity::Warning);
        assert!(rep.get("DtD_pd").unwrap().passed);
        assert!(rep.get("B1B1t_pd").unwrap().passed);
        assert_eq!(rep.hard_failures().count(), 0);
        assert!(rep.get("stabilizable").unwrap().passed);
        assert!(rep.get("imag_axis_observable").unwrap().passed);
    }

    #[test]
    fn identity_case_passes_all_pd_checks() {
        let sys = LtiSystem::new(
            mat(2, 2, &[-1.0, 0.0, 0.0, -2.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            mat(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
            mat(4, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        let rep = validate_assumption1(&sys).unwrap();
        assert!(rep.checks.iter().all(|c| c.passed), "{rep:?}");
    }

    #[test]
    fn singular_dtd_fails_hard_with_zero_margin() {
        let sys = LtiSystem::new(
            DMatrix::identity(2, 2) * -1.0,
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            mat(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        )
        .unwrap();
        let rep = validate_assumption1(&sys).unwrap();
        let c = rep.get("DtD_pd").unwrap();
        assert!(!c.passed);
        assert_eq!(c.margin, 0.0);
        assert_eq!(rep.hard_failures().count(), 1);
    }

    #[test]
    fn example1_r_matrix() {
        let ex = cases::example1();
        let aug = build_augmented(&ex.system, &VertexSet::nominal(&ex.system)).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0, 1.0]));
        assert_eq!(aug.r, expect);
    }

    #[test]
    fn zero_output_gives_zero_r() {
        let sys = LtiSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 1),
            DMatrix::zeros(3, 2),
            DMatrix::zeros(3, 1),
        )
        .unwrap();
        let aug = build_augmented(&sys, &VertexSet::nominal(&sys)).unwrap();
        assert_eq!(aug.r, DMatrix::zeros(3, 3));
    }

    #[test]
    fn example2_q_matrix() {
        let ex = cases::example2();
        let aug = build_augmented(&ex.system, &VertexSet::nominal(&ex.system)).unwrap();
        let mut expect = DMatrix::zeros(7, 7);
        expect.view_mut((0, 0), (5, 5)).fill_with_identity();
        assert_eq!(aug.q, expect);
    }

    #[test]
    fn selectors_single_group_has_no_pairs() {
        let sel = build_selectors(&BlockStructure::single(2, 3), 3, 2).unwrap();
        assert!(sel.block_pairs.is_empty());
        assert_eq!(sel.v1.shape(), (2, 5));
        assert_eq!(sel.v2.shape(), (3, 5));
    }

    #[test]
    fn selectors_example1() {
        let bs = BlockStructure::new(vec![1, 1], vec![2, 1]).unwrap();
        let sel = build_selectors(&bs, 3, 2).unwrap();
        assert_eq!(sel.pairs, vec![(0, 1)]);
        let (vj1, vj2) = &sel.block_pairs[0];
        assert_eq!(vj1, &mat(2, 5, &[1., 0., 0., 0., 0., 0., 1., 0., 0., 0.]));
        assert_eq!(vj2.transpose(), mat(1, 5, &[0., 0., 1., 0., 0.]));
    }

    #[test]
    fn selectors_three_groups_enumerate_lexicographically() {
        let bs = BlockStructure::new(vec![1], vec![1, 1, 1]).unwrap();
        let sel = build_selectors(&bs, 3, 1).unwrap();
        // brute force over all ordered pairs, keep i < j in scan order
        let mut expect = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                if a < b {
                    expect.push((a, b));
                }
            }
        }
        assert_eq!(sel.pairs, expect);
    }

    #[test]
    fn example1_coupling_matrix_layout() {
        let ex = cases::example1();
        let sf = StandardForm::sf_lq(&ex.system, &ex.blocks).unwrap();
        assert_eq!(sf.acoup.shape(), (8, 25));
        assert_eq!(sf.coupling_rows(), 2..8);
        // rows 1-2 (0-based 0..2) pick W(0,2) and W(1,2)
        assert_eq!(sf.acoup[(0, 2 * 5)], 1.0);
        assert_eq!(sf.acoup[(1, 1 + 2 * 5)], 1.0);
        for k in 0..6 {
            assert_eq!(sf.bcoup[(2 + k, k)], -1.0);
        }
        assert_eq!(sf.bcoup.iter().filter(|&&x| x != 0.0).count(), 6);
    }

    #[test]
    fn single_group_has_only_copy_rows() {
        let ex = cases::example1();
        let sf = StandardForm::sf_lq(&ex.system, &BlockStructure::single(2, 3)).unwrap();
        assert_eq!(sf.acoup.shape(), (6, 25));
        assert_eq!(sf.acoup, sf.selectors.v2.kronecker(&sf.selectors.v1));
    }

    #[test]
    fn example2_row_count() {
        let ex = cases::example2();
        let sf = StandardForm::sf_lq(&ex.system, &ex.blocks).unwrap();
        assert_eq!(sf.rows(), (2 * 2 + 2 + 2) + 10);
    }

    #[test]
    fn forbidden_out_of_range_is_rejected() {
        let ex = cases::example1();
        let err = assemble_standard_form(
            &ex.system,
            &VertexSet::nominal(&ex.system),
            &ex.blocks,
            &ForbiddenSet::new(vec![(2, 0)]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn group_norms_simple_cases() {
        let ex = cases::example1();
        let sf = StandardForm::sf_lq(&ex.system, &ex.blocks).unwrap();
        let zero = DVector::zeros(6);
        assert!(sf.group_norms(&zero).iter().all(|&x| x == 0.0));
        for (l, g) in sf.groups.iter().enumerate() {
            let mut v = DVector::zeros(6);
            for &k in g {
                v[k] = 2.0;
            }
            let w = sf.group_norms(&v);
            for (l2, &x) in w.iter().enumerate() {
                let expect = if l2 == l { 4.0 * g.len() as f64 } else { 0.0 };
                assert_eq!(x, expect);
            }
        }
    }

    #[test]
    fn example1_group_order() {
        // ℓ = i + s·j: (1,1), (2,1), (1,2), (2,2); vec(P) of a 2x3 P is column-major
        let ex = cases::example1();
        let sf = StandardForm::sf_lq(&ex.system, &ex.blocks).unwrap();
        assert_eq!(sf.groups, vec![vec![0, 2], vec![1, 3], vec![4], vec![5]]);
    }
}
