//! Gain recovery, closed-loop verification and the on-disk artifacts.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Feasibility, LtiSystem, StandardForm};
use crate::symvec::{self, h2_cost, sym_eigenvalues};

/// Entries at or below this magnitude count as zero in sparsity patterns.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainOptions {
    /// Below this smallest eigenvalue of `W1` the pseudo-inverse is used.
    pub delta_floor: f64,
}

impl Default for GainOptions {
    fn default() -> Self {
        GainOptions { delta_floor: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GainConditioning {
    pub min_eig_w1: f64,
    pub max_eig_w1: f64,
    pub condition: f64,
    pub used_pseudo_inverse: bool,
    pub warning: Option<String>,
}

/// `K = W2ᵀ W1⁻¹` from a `(n+m)×(n+m)` symmetric `W`.
pub fn extract_gain(w: &DMatrix<f64>, n: usize, m: usize, opts: &GainOptions) -> Result<(DMatrix<f64>, GainConditioning)> {
    let p = n + m;
    if w.shape() != (p, p) {
        return Err(Error::dim("W", format!("{p}x{p}"), format!("{}x{}", w.nrows(), w.ncols())));
    }
    let w = symvec::symmetrize(w);
    let w1 = w.view((0, 0), (n, n)).into_owned();
    let w2t = w.view((n, 0), (m, n)).into_owned();
    let eig = sym_eigenvalues(&w1)?;
    let (min_eig, max_eig) = (eig.min(), eig.max());
    let condition = if min_eig > 0.0 { max_eig / min_eig } else { f64::INFINITY };

    if min_eig >= opts.delta_floor {
        let x = w1
            .clone()
            .cholesky()
            .map(|c| c.solve(&w2t.transpose()))
            .or_else(|| w1.clone().lu().solve(&w2t.transpose()))
            .ok_or(Error::SingularW1 { min_eig, condition })?;
        let cond = GainConditioning { min_eig_w1: min_eig, max_eig_w1: max_eig, condition, used_pseudo_inverse: false, warning: None };
        return Ok((x.transpose(), cond));
    }
    if max_eig.abs() <= f64::EPSILON {
        return Err(Error::SingularW1 { min_eig, condition });
    }
    let pinv = w1
        .clone()
        .pseudo_inverse(f64::EPSILON.sqrt() * max_eig.abs())
        .map_err(|_| Error::SingularW1 { min_eig, condition })?;
    let cond = GainConditioning {
        min_eig_w1: min_eig,
        max_eig_w1: max_eig,
        condition,
        used_pseudo_inverse: true,
        warning: Some(format!("min eig(W1) = {min_eig:e} is below the floor {:e}; gain uses the pseudo-inverse", opts.delta_floor)),
    };
    Ok((w2t * pinv, cond))
}

/// Replaces the `W2ᵀ` block of `W` by `P` and zeroes the off-diagonal blocks of
/// `W1`, so that zero groups of `P` become exact zero blocks of the gain.
pub fn structured_w(sf: &StandardForm, w: &DMatrix<f64>, pt: &DVector<f64>) -> DMatrix<f64> {
    let (n, m) = (sf.n, sf.m);
    let mut out = symvec::symmetrize(w);
    let bs = &sf.blocks;
    for a in 0..bs.t() {
        for b in 0..bs.t() {
            if a == b {
                continue;
            }
            for i in bs.col_range(a) {
                for j in bs.col_range(b) {
                    out[(i, j)] = 0.0;
                }
            }
        }
    }
    let p = symvec::unvec(pt, m, n);
    out.view_mut((n, 0), (m, n)).copy_from(&p);
    out.view_mut((0, n), (n, m)).copy_from(&p.transpose());
    out
}

/// Closed-loop numbers of one gain.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GainEvaluation {
    pub k: Vec<Vec<f64>>,
    pub sparsity_pattern: Vec<Vec<u8>>,
    pub spectral_abscissa: f64,
    /// `None` when the loop is unstable.
    pub h2_cost: Option<f64>,
    pub stabilizing: bool,
}

pub fn evaluate_gain(sys: &LtiSystem, sf: &StandardForm, k: &DMatrix<f64>) -> Result<GainEvaluation> {
    let h2 = h2_cost(sys, k)?;
    Ok(GainEvaluation {
        k: crate::io::rows_from_matrix(k),
        sparsity_pattern: sf
            .blocks
            .pattern(k, ZERO_TOL)
            .into_iter()
            .map(|row| row.into_iter().map(u8::from).collect())
            .collect(),
        spectral_abscissa: h2.abscissa,
        h2_cost: h2.is_stable().then_some(h2.cost),
        stabilizing: h2.is_stable(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveReport {
    /// `stabilizing`, `not-stabilizing` or `not-started`.
    pub status: String,
    pub solver: String,
    /// Solver termination: `converged`, `max-iterations` or `not-started`.
    pub solver_status: String,
    pub k: Vec<Vec<f64>>,
    pub sparsity_pattern: Vec<Vec<u8>>,
    pub spectral_abscissa: f64,
    /// `<R, W>` of the reported `W`.
    pub cost_upper_bound: f64,
    pub h2_cost: Option<f64>,
    /// Upper-left entry of `W`.
    pub w11: f64,
    pub w: Vec<Vec<f64>>,
    pub w_feasibility: Feasibility,
    pub w_feasible: bool,
    pub final_feasibility: f64,
    pub gain_conditioning: GainConditioning,
    /// Gain recovered directly from the feasible prox iterate, before the
    /// block structure is imposed.
    pub unstructured: Option<UnstructuredGain>,
    pub iterations: usize,
    pub wall_time: f64,
    pub parameter_echo: serde_json::Value,
    pub waivers: Vec<String>,
    pub warnings: Vec<String>,
    pub diagnostics: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UnstructuredGain {
    pub evaluation: GainEvaluation,
    pub cost_upper_bound: f64,
    pub w_feasible: bool,
}

/// Feasibility tolerance for the reported `W`.
pub const W_FEAS_TOL: f64 = 1e-6;

/// What a solver hands over for reporting.
pub struct SolverSummary<'a> {
    pub solver: &'a str,
    pub solver_status: &'a str,
    /// Symmetric `W` whose `W2ᵀ` block approximates `P`.
    pub w: DMatrix<f64>,
    pub pt: DVector<f64>,
    pub final_feasibility: f64,
    pub iterations: usize,
    pub wall_time: f64,
    pub parameter_echo: serde_json::Value,
    pub waivers: Vec<String>,
    pub diagnostics: serde_json::Value,
}

impl SolveReport {
    pub fn build(sys: &LtiSystem, sf: &StandardForm, s: SolverSummary<'_>, opts: &GainOptions) -> Result<Self> {
        let mut warnings = Vec::new();
        let structured = structured_w(sf, &s.w, &s.pt);
        let (k, gain_conditioning) = extract_gain(&structured, sf.n, sf.m, opts)?;
        if let Some(w) = &gain_conditioning.warning {
            warnings.push(w.clone());
        }
        let eval = evaluate_gain(sys, sf, &k)?;
        let feas = sf.feasibility(&structured)?;

        let unstructured = match extract_gain(&s.w, sf.n, sf.m, opts) {
            Ok((ku, _)) => Some(UnstructuredGain {
                evaluation: evaluate_gain(sys, sf, &ku)?,
                cost_upper_bound: sf.r.dot(&symvec::symmetrize(&s.w)),
                w_feasible: sf.feasibility(&s.w)?.within(W_FEAS_TOL),
            }),
            Err(e) => {
                warnings.push(format!("unstructured gain unavailable: {e}"));
                None
            }
        };
        let status = if s.solver_status == "not-started" {
            "not-started"
        } else if eval.stabilizing {
            "stabilizing"
        } else {
            "not-stabilizing"
        };
        Ok(SolveReport {
            status: status.into(),
            solver: s.solver.into(),
            solver_status: s.solver_status.into(),
            k: eval.k,
            sparsity_pattern: eval.sparsity_pattern,
            spectral_abscissa: eval.spectral_abscissa,
            cost_upper_bound: sf.r.dot(&structured),
            h2_cost: eval.h2_cost,
            w11: structured[(0, 0)],
            w: crate::io::rows_from_matrix(&structured),
            w_feasibility: feas,
            w_feasible: feas.within(W_FEAS_TOL),
            final_feasibility: s.final_feasibility,
            gain_conditioning,
            unstructured,
            iterations: s.iterations,
            wall_time: s.wall_time,
            parameter_echo: s.parameter_echo,
            waivers: s.waivers,
            warnings,
            diagnostics: s.diagnostics,
        })
    }

    pub fn gain(&self) -> DMatrix<f64> {
        let rows = self.k.len();
        let cols = self.k.first().map_or(0, |r| r.len());
        DMatrix::from_fn(rows, cols, |i, j| self.k[i][j])
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(format!("serializing report: {e}")))
    }
}

/// 17 significant digits; `inf`, `-inf` and `nan` spelled out.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Two-column whitespace-separated data for gnuplot.
    pub fn to_gnuplot(&self, x: &str, y: &str) -> Result<String> {
        let col = |name: &str| {
            self.header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Invalid(format!("no column {name}")))
        };
        let (xi, yi) = (col(x)?, col(y)?);
        let mut out = format!("# {x} {y}\n");
        for row in &self.rows {
            let _ = writeln!(out, "{} {}", row[xi], row[yi]);
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Time step and horizon of the impulse simulation.
pub const IMPULSE_DT: f64 = 1e-2;
pub const IMPULSE_HORIZON: f64 = 10.0;

/// Samples `ẋ = (A − B₂K)x` from `x(0) = B₁𝟏/‖B₁𝟏‖` on a uniform grid, using the
/// exact one-step transition matrix.
pub fn impulse_response(sys: &LtiSystem, k: &DMatrix<f64>) -> Result<Table> {
    let n = sys.n();
    let mut x = &sys.b1 * DVector::from_element(sys.l(), 1.0);
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::Invalid("B1·1 is zero; impulse direction undefined".into()));
    }
    x /= norm;
    let acl = &sys.a - &sys.b2 * k;
    let step = (acl * IMPULSE_DT).exp();
    let samples = (IMPULSE_HORIZON / IMPULSE_DT).round() as usize;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    let mut table = Table { header, rows: Vec::with_capacity(samples + 1) };
    for s in 0..=samples {
        let mut row = vec![fmt_float(s as f64 * IMPULSE_DT)];
        row.extend(x.iter().map(|&v| fmt_float(v)));
        table.rows.push(row);
        x = &step * x;
    }
    Ok(table)
}
