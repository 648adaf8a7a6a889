//! Single-view embeddings: L²E, classical LLE, feature-concatenation LLE and
//! the normalized spectral embedding baseline.

use crate::error::{Error, Result};
use crate::graph::{l2e_weights, WeightMatrix};
use crate::numerics::{ensure_finite, sym_eig, DenseMatrix, EigenSelection};

/// Tolerance for the orthonormal-rows invariant `‖Y Yᵀ - I‖_F`.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// A `d x N` coordinate matrix with orthonormal rows; column `i` is sample `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    coords: DenseMatrix,
}

impl Embedding {
    pub fn new(coords: DenseMatrix) -> Result<Self> {
        ensure_finite("Embedding::new", &coords)?;
        if coords.nrows() > coords.ncols() {
            return Err(Error::Inconsistent(format!(
                "embedding dimension {} exceeds sample count {}",
                coords.nrows(),
                coords.ncols()
            )));
        }
        let e = Self { coords };
        let dev = e.orthonormality_error();
        if dev > ORTHONORMAL_TOL {
            return Err(Error::Inconsistent(format!(
                "embedding rows are not orthonormal (‖YYᵀ - I‖ = {dev:e})"
            )));
        }
        Ok(e)
    }

    /// Rows are the columns of `vectors` (`N x d`, orthonormal columns).
    pub(crate) fn from_eigenvectors(vectors: &DenseMatrix) -> Self {
        Self {
            coords: vectors.transpose(),
        }
    }

    pub fn d(&self) -> usize {
        self.coords.nrows()
    }

    pub fn n(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &DenseMatrix {
        &self.coords
    }

    pub fn into_coords(self) -> DenseMatrix {
        self.coords
    }

    /// `‖Y Yᵀ - I_d‖_F`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = &self.coords * self.coords.transpose();
        (g - DenseMatrix::identity(self.d(), self.d())).norm()
    }

    /// `tr(Y A Yᵀ)`.
    pub fn trace_form(&self, a: &DenseMatrix) -> f64 {
        (&self.coords * a * self.coords.transpose()).trace()
    }

    /// Linear kernel `YᵀY` (`N x N`).
    pub fn gram(&self) -> DenseMatrix {
        self.coords.tr_mul(&self.coords)
    }
}

/// `Φ(Y) = Σ_i ‖y_i - Σ_j W_ij y_j‖²`.
pub fn reconstruction_cost(y: &Embedding, w: &WeightMatrix) -> Result<f64> {
    if y.n() != w.n() {
        return Err(Error::Inconsistent(format!(
            "embedding has {} samples, weights cover {}",
            y.n(),
            w.n()
        )));
    }
    let recon = w.reconstruct(y.coords())?;
    Ok((y.coords() - recon).norm_squared())
}

/// Bottom `d` non-null eigenvectors of `(I - W)ᵀ(I - W)` as embedding rows.
pub fn embed_from_weights(w: &WeightMatrix, d: usize) -> Result<Embedding> {
    let n = w.n();
    if d < 1 || d + 1 > n {
        return Err(Error::contract(
            "embed_from_weights",
            format!("need 1 <= d <= N-1, got d={d}, N={n}"),
        ));
    }
    let m = w.cost_matrix();
    let eig = sym_eig(&m, EigenSelection::smallest(d).skipping_null())?;
    Ok(Embedding::from_eigenvectors(&eig.vectors))
}

/// Eigenvalues paired with [`embed_from_weights`]; their sum is the optimal cost.
pub fn embedding_spectrum(w: &WeightMatrix, d: usize) -> Result<Vec<f64>> {
    let m = w.cost_matrix();
    Ok(sym_eig(&m, EigenSelection::smallest(d).skipping_null())?.values)
}

/// Locality low-rank embedding of one view (`D x N`).
pub fn l2e_embed(x: &DenseMatrix, k: usize, reg: f64, mu: f64, d: usize) -> Result<Embedding> {
    let w = l2e_weights(x, k, reg, mu)?;
    embed_from_weights(&w, d)
}

/// Classical LLE: L²E without the low-rank stage.
pub fn lle_embed(x: &DenseMatrix, k: usize, reg: f64, d: usize) -> Result<Embedding> {
    l2e_embed(x, k, reg, 0.0, d)
}

/// Stacks views row-wise (`Σ D_v x N`).
pub fn concat_views<'a>(views: impl IntoIterator<Item = &'a DenseMatrix>) -> Result<DenseMatrix> {
    let views: Vec<&DenseMatrix> = views.into_iter().collect();
    let first = views
        .first()
        .ok_or_else(|| Error::InvalidInput("no views to concatenate".into()))?;
    let n = first.ncols();
    if let Some(bad) = views.iter().find(|v| v.ncols() != n) {
        return Err(Error::Inconsistent(format!(
            "view with {} samples, expected {n}",
            bad.ncols()
        )));
    }
    let rows: usize = views.iter().map(|v| v.nrows()).sum();
    let mut out = DenseMatrix::zeros(rows, n);
    let mut at = 0;
    for v in views {
        out.rows_mut(at, v.nrows()).copy_from(v);
        at += v.nrows();
    }
    Ok(out)
}

/// Feature-concatenation LLE.
pub fn clle_embed<'a>(
    views: impl IntoIterator<Item = &'a DenseMatrix>,
    k: usize,
    reg: f64,
    d: usize,
) -> Result<Embedding> {
    lle_embed(&concat_views(views)?, k, reg, d)
}

/// Gaussian similarity `exp(-‖x_i - x_j‖² / 2σ²)` with σ the median pairwise distance.
pub fn gaussian_similarity(x: &DenseMatrix) -> Result<DenseMatrix> {
    ensure_finite("gaussian_similarity", x)?;
    let n = x.ncols();
    let mut d2 = DenseMatrix::zeros(n, n);
    let mut dists = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for j in 0..n {
        for i in 0..j {
            let v = (x.column(i) - x.column(j)).norm_squared();
            d2[(i, j)] = v;
            d2[(j, i)] = v;
            dists.push(v.sqrt());
        }
    }
    let sigma = median(&mut dists).filter(|s| *s > 0.0).unwrap_or(1.0);
    let denom = 2.0 * sigma * sigma;
    Ok(d2.map(|v| (-v / denom).exp()))
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

/// `D^{-1/2} S D^{-1/2}` for a symmetric nonnegative similarity.
pub fn normalized_affinity(s: &DenseMatrix) -> Result<DenseMatrix> {
    const OP: &str = "spectral_embed";
    ensure_finite(OP, s)?;
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::contract(OP, "similarity matrix must be square"));
    }
    let scale = s.amax().max(1.0);
    for j in 0..n {
        for i in 0..n {
            if s[(i, j)] < 0.0 {
                return Err(Error::contract(OP, format!("negative similarity at ({i}, {j})")));
            }
            if i < j && (s[(i, j)] - s[(j, i)]).abs() > crate::numerics::SYMMETRY_TOL * scale {
                return Err(Error::contract(OP, "similarity matrix is not symmetric"));
            }
        }
    }
    let inv_sqrt: Vec<f64> = s
        .row_iter()
        .enumerate()
        .map(|(i, r)| {
            let sum = r.sum();
            if sum > 0.0 {
                Ok(1.0 / sum.sqrt())
            } else {
                Err(Error::DegenerateGraph { row: i })
            }
        })
        .collect::<Result<_>>()?;
    let l = DenseMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * s[(i, j)] * inv_sqrt[j]);
    Ok((&l + l.transpose()) * 0.5)
}

/// Normalized spectral embedding: top `d` eigenvectors of `D^{-1/2} S D^{-1/2}`.
pub fn spectral_embed(s: &DenseMatrix, d: usize) -> Result<Embedding> {
    let l = normalized_affinity(s)?;
    if d < 1 || d > l.nrows() {
        return Err(Error::contract(
            "spectral_embed",
            format!("need 1 <= d <= N, got d={d}, N={}", l.nrows()),
        ));
    }
    let eig = sym_eig(&l, EigenSelection::largest(d))?;
    Ok(Embedding::from_eigenvectors(&eig.vectors))
}
