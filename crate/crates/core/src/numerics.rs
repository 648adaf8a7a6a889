//! Dense symmetric eigendecomposition, SVD and singular value thresholding.
//!
//! The eigensolver comes from `nalgebra` and the SVD from `faer`; this module
//! pins the conventions every caller relies on: eigenpair ordering, the
//! null-space tolerance, a deterministic eigenvector sign, and descending
//! singular values.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// Relative asymmetry tolerated by [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Relative magnitude below which an eigenvalue counts as null.
pub const NULL_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spectrum {
    Smallest,
    Largest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EigenSelection {
    pub count: usize,
    pub which: Spectrum,
    /// Pass over eigenpairs with |λ| at or below [`null_tolerance`] before counting.
    pub skip_null: bool,
}

impl EigenSelection {
    pub fn smallest(count: usize) -> Self {
        Self {
            count,
            which: Spectrum::Smallest,
            skip_null: false,
        }
    }

    pub fn largest(count: usize) -> Self {
        Self {
            count,
            which: Spectrum::Largest,
            skip_null: false,
        }
    }

    pub fn skipping_null(mut self) -> Self {
        self.skip_null = true;
        self
    }
}

/// Selected eigenpairs; column `j` of `vectors` belongs to `values[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

pub(crate) fn ensure_finite(op: &'static str, m: &DenseMatrix) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::contract(op, "empty matrix"));
    }
    if let Some(pos) = m.iter().position(|x| !x.is_finite()) {
        return Err(Error::contract(
            op,
            format!(
                "non-finite entry at ({}, {})",
                pos % m.nrows(),
                pos / m.nrows()
            ),
        ));
    }
    Ok(())
}

/// Null-space threshold for a spectrum: `1e-9 * max(1, |λ|_max)`.
pub fn null_tolerance(values: &[f64]) -> f64 {
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    NULL_REL_TOL * scale.max(1.0)
}

/// Flips `v` so that its largest-magnitude entry is positive. Near-ties go
/// to the lowest index.
pub(crate) fn fix_sign(mut v: nalgebra::DVectorViewMut<'_, f64>) {
    let max = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.abs() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    if v[pivot] < 0.0 {
        v.neg_mut();
    }
}

// Convergence threshold for the symmetric eigensolver (nalgebra's default).
const SOLVER_EPS: f64 = 5.0 * f64::EPSILON;

/// Eigenpairs of a symmetric matrix, chosen and ordered per `sel`.
pub fn sym_eig(a: &DenseMatrix, sel: EigenSelection) -> Result<SymEig> {
    const OP: &str = "sym_eig";
    ensure_finite(OP, a)?;
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::contract(
            OP,
            format!("matrix is {}x{}, not square", n, a.ncols()),
        ));
    }
    let scale = a.amax().max(1.0);
    let mut asym = 0.0_f64;
    for j in 0..n {
        for i in 0..j {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::contract(
            OP,
            format!("matrix is not symmetric (max |A - A^T| = {asym:e})"),
        ));
    }
    if sel.count == 0 || sel.count > n {
        return Err(Error::contract(
            OP,
            format!("requested {} eigenpairs of a {n}x{n} matrix", sel.count),
        ));
    }

    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, SOLVER_EPS, 0)
        .ok_or_else(|| Error::contract(OP, "eigensolver failed to converge"))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (x, y) = (eig.eigenvalues[i], eig.eigenvalues[j]);
        match sel.which {
            Spectrum::Smallest => x.total_cmp(&y),
            Spectrum::Largest => y.total_cmp(&x),
        }
        .then(i.cmp(&j))
    });

    let tol = null_tolerance(eig.eigenvalues.as_slice());
    let chosen: Vec<usize> = order
        .into_iter()
        .filter(|&i| !sel.skip_null || eig.eigenvalues[i].abs() > tol)
        .take(sel.count)
        .collect();
    if chosen.len() < sel.count {
        return Err(Error::InsufficientSpectrum {
            requested: sel.count,
            available: chosen.len(),
        });
    }

    let mut vectors = DenseMatrix::zeros(n, sel.count);
    let mut values = Vec::with_capacity(sel.count);
    for (col, &i) in chosen.iter().enumerate() {
        values.push(eig.eigenvalues[i]);
        vectors.set_column(col, &eig.eigenvectors.column(i));
        fix_sign(vectors.column_mut(col));
    }
    Ok(SymEig { values, vectors })
}

/// Thin SVD with singular values in descending order.
///
/// Backed by `faer`: the nalgebra bidiagonal SVD silently returns wrong
/// factors on some rank-deficient inputs, which is exactly what thresholding
/// produces.
pub fn svd(m: &DenseMatrix) -> Result<Svd> {
    const OP: &str = "svd";
    ensure_finite(OP, m)?;
    let (rows, cols) = m.shape();
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let dec = fm
        .thin_svd()
        .map_err(|e| Error::contract(OP, format!("SVD failed: {e:?}")))?;
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    let r = rows.min(cols);

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));

    let mut su = DenseMatrix::zeros(rows, r);
    let mut sv = DenseMatrix::zeros(cols, r);
    let mut sigma = Vec::with_capacity(r);
    for (col, &i) in order.iter().enumerate() {
        sigma.push(s[i].max(0.0));
        for a in 0..rows {
            su[(a, col)] = u[(a, i)];
        }
        for b in 0..cols {
            sv[(b, col)] = v[(b, i)];
        }
    }
    let recon = &su * DenseMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&sigma)) * sv.transpose();
    let err = (m - recon).norm();
    if err > 1e-8 * m.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::contract(OP, format!("decomposition residual {err:e} too large")));
    }
    Ok(Svd {
        u: su,
        singular_values: sigma,
        v: sv,
    })
}

/// Soft-thresholds the singular values of `m` by `tau`.
pub fn svt(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::contract("svt", format!("tau must be >= 0, got {tau}")));
    }
    let Svd {
        u,
        singular_values,
        v,
    } = svd(m)?;
    let mut out = DenseMatrix::zeros(m.nrows(), m.ncols());
    for (i, s) in singular_values.iter().enumerate() {
        let shrunk = s - tau;
        if shrunk > 0.0 {
            out += (u.column(i) * shrunk) * v.column(i).transpose();
        }
    }
    Ok(out)
}

pub fn nuclear_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(svd(m)?.singular_values.iter().sum())
}

/// Numerical rank: singular values above `rel_tol * σ_max`.
pub fn numerical_rank(m: &DenseMatrix, rel_tol: f64) -> Result<usize> {
    let s = svd(m)?.singular_values;
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&x| x > rel_tol * top).count())
}

/// A `d x n` matrix with orthonormal rows drawn from the Haar measure.
pub fn random_orthonormal_rows<R: rand::Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> DenseMatrix {
    assert!(d >= 1 && d <= n, "need 1 <= d <= n");
    let g = DenseMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q.columns(0, d).into_owned();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q.transpose()
}
