//! Symmetric vectorization, PSD projection and the small dense kernels shared by
//! every solver: spectral norms, Lyapunov solves and closed-loop H₂ evaluation.
//!
//! `svec` uses the orthonormal convention: the lower triangle is stacked column
//! by column and off-diagonal entries carry a factor √2, so that
//! `<svec(S), svec(T)> = <S, T>_F`. The duplication operator `D` (vec = D·svec)
//! then satisfies `DᵀD = I`, and the elimination operator is simply `T = Dᵀ`.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::LtiSystem;

const SQRT2: f64 = std::f64::consts::SQRT_2;
const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

/// Length of `svec` for an `n×n` symmetric matrix.
pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry `(i, j)`, `i >= j`, in `svec` (lower triangle, column-major).
#[inline]
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j && i < n);
    j * n - j * j.saturating_sub(1) / 2 + (i - j)
}

/// `svec(S) = Dᵀ vec(S)`. For a non-symmetric input this is the `svec` of its
/// symmetric part.
pub fn svec(s: &DMatrix<f64>) -> DVector<f64> {
    let n = s.nrows();
    debug_assert_eq!(n, s.ncols());
    let mut out = DVector::zeros(svec_len(n));
    let mut k = 0;
    for j in 0..n {
        out[k] = s[(j, j)];
        k += 1;
        for i in (j + 1)..n {
            out[k] = (s[(i, j)] + s[(j, i)]) / SQRT2;
            k += 1;
        }
    }
    out
}

/// Inverse of [`svec`] on symmetric matrices.
pub fn smat(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), svec_len(n));
    let mut out = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        out[(j, j)] = v[k];
        k += 1;
        for i in (j + 1)..n {
            let x = v[k] / SQRT2;
            out[(i, j)] = x;
            out[(j, i)] = x;
            k += 1;
        }
    }
    out
}

/// Column-major `vec` of a matrix.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// `(S + Sᵀ)/2`.
pub fn symmetrize(s: &DMatrix<f64>) -> DMatrix<f64> {
    (s + s.transpose()) * 0.5
}

/// Explicit duplication and elimination operators for one matrix size.
#[derive(Debug, Clone)]
pub struct SymVecMap {
    pub dim: usize,
    /// `n² × n(n+1)/2`, `vec(S) = dup · svec(S)`.
    pub dup: DMatrix<f64>,
    /// `n(n+1)/2 × n²`, `svec(S) = elim · vec(S)`.
    pub elim: DMatrix<f64>,
}

impl SymVecMap {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "SymVecMap needs n >= 1");
        let len = svec_len(n);
        let mut dup = DMatrix::zeros(n * n, len);
        let mut k = 0;
        for j in 0..n {
            dup[(j + n * j, k)] = 1.0;
            k += 1;
            for i in (j + 1)..n {
                dup[(i + n * j, k)] = 1.0 / SQRT2;
                dup[(j + n * i, k)] = 1.0 / SQRT2;
                k += 1;
            }
        }
        let elim = dup.transpose();
        SymVecMap { dim: n, dup, elim }
    }
}

fn sym_eigen(s: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(symmetrize(s), EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| Error::Numerical(format!("symmetric eigensolver failed on {}x{} input", s.nrows(), s.ncols())))
}

/// Eigenvalues of the symmetric part of `s`.
pub fn sym_eigenvalues(s: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(sym_eigen(s)?.eigenvalues)
}

pub fn min_eig(s: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigenvalues(s)?.min())
}

pub fn max_eig(s: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigenvalues(s)?.max())
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues are clamped to 0.
pub fn psd_project(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(s)?;
    let n = s.nrows();
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return Ok(symmetrize(s));
    }
    let mut out = DMatrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.0 {
            let v = eig.eigenvectors.column(k);
            out += lam * v * v.transpose();
        }
    }
    Ok(symmetrize(&out))
}

/// PSD projection in `svec` coordinates, `svec ∘ Π ∘ smat`.
pub fn psd_project_svec(v: &DVector<f64>, n: usize) -> Result<DVector<f64>> {
    Ok(svec(&psd_project(&smat(v, n))?))
}

/// Largest singular value by power iteration on `AᵀA`.
///
/// Starts from the all-ones vector; a second deterministic start guards against
/// an initial vector orthogonal to the dominant singular direction.
pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 || a.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let gram = a.transpose() * a;
    let k = gram.nrows();
    let ones = DVector::from_element(k, 1.0);
    let alt = DVector::from_fn(k, |i, _| ((i as f64 + 1.0) * 0.754_877_666).sin() + 0.5 / (i as f64 + 1.0));
    let first = power_iterate(&gram, ones);
    let second = power_iterate(&gram, alt);
    match (first, second) {
        (Ok(x), Ok(y)) => Ok(x.max(y).sqrt()),
        (Ok(x), Err(Error::SpectralNorm { estimate, .. })) | (Err(Error::SpectralNorm { estimate, .. }), Ok(x)) => {
            Ok(x.max(estimate * estimate).sqrt())
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

const POWER_MAX_ITER: usize = 200_000;

// Returns the dominant eigenvalue of the PSD matrix `m`.
fn power_iterate(m: &DMatrix<f64>, start: DVector<f64>) -> Result<f64> {
    let mut v = start;
    let nrm = v.norm();
    if nrm == 0.0 {
        return Ok(0.0);
    }
    v /= nrm;
    let mut lambda = 0.0;
    for it in 0..POWER_MAX_ITER {
        let mv = m * &v;
        let new_lambda = v.dot(&mv);
        let mv_norm = mv.norm();
        if mv_norm == 0.0 {
            return Ok(0.0);
        }
        let resid = (&mv - new_lambda * &v).norm();
        if resid <= 1e-9 * new_lambda.abs()
            || (it > 0 && (new_lambda - lambda).abs() <= 1e-15 * new_lambda.abs())
        {
            return Ok(new_lambda);
        }
        lambda = new_lambda;
        v = mv / mv_norm;
    }
    Err(Error::SpectralNorm {
        iterations: POWER_MAX_ITER,
        estimate: lambda.max(0.0).sqrt(),
    })
}

/// Eigenvalues (real, imaginary) of a general real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<(f64, f64)>> {
    let schur = Schur::try_new(a.clone(), EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect())
}

/// Maximum real part of the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .into_iter()
        .map(|(re, _)| re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Solves `A W + W Aᵀ + Q = 0` through the Kronecker-vectorized system.
pub fn lyapunov_solve(acl: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = acl.nrows();
    if acl.ncols() != n {
        return Err(Error::dim("Lyapunov state matrix", format!("{n}x{n}"), format!("{}x{}", n, acl.ncols())));
    }
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::dim("Lyapunov right-hand side", format!("{n}x{n}"), format!("{}x{}", q.nrows(), q.ncols())));
    }
    let abscissa = spectral_abscissa(acl)?;
    if abscissa >= 0.0 {
        return Err(Error::Unstable { real_part: abscissa });
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let kron = eye.kronecker(acl) + acl.kronecker(&eye);
    let rhs = -vec_of(q);
    let sol = kron
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov operator".into()))?;
    let w = symmetrize(&unvec(&sol, n, n));
    Ok(w)
}

/// Closed-loop H₂ evaluation of a static gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2Eval {
    /// `Tr((C−DK) W_c (C−DK)ᵀ)`, `+∞` when the loop is not stable.
    pub cost: f64,
    /// `max Re eig(A − B₂K)`.
    pub abscissa: f64,
}

impl H2Eval {
    pub fn is_stable(&self) -> bool {
        self.abscissa < 0.0
    }
}

/// H₂ cost of `u = −Kx` on the nominal plant.
pub fn h2_cost(sys: &LtiSystem, k: &DMatrix<f64>) -> Result<H2Eval> {
    if k.nrows() != sys.m() || k.ncols() != sys.n() {
        return Err(Error::dim("gain K", format!("{}x{}", sys.m(), sys.n()), format!("{}x{}", k.nrows(), k.ncols())));
    }
    let acl = &sys.a - &sys.b2 * k;
    let abscissa = spectral_abscissa(&acl)?;
    if abscissa >= 0.0 {
        return Ok(H2Eval { cost: f64::INFINITY, abscissa });
    }
    let wc = lyapunov_solve(&acl, &(&sys.b1 * sys.b1.transpose()))?;
    let out = &sys.c - &sys.d * k;
    let cost = (&out * wc * out.transpose()).trace();
    Ok(H2Eval { cost, abscissa })
}
