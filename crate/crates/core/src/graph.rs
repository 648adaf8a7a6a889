//! Neighbor dictionaries, local affine codes and the sparse weight matrix.
//!
//! Stage 1 solves, per sample, the sum-to-one constrained least-squares fit of
//! `x_i` from its `K` nearest neighbors. Stage 2 shrinks the whole `K x N`
//! code matrix toward low rank with singular value thresholding and restores
//! the affine constraint. The fill transform then scatters the codes into an
//! `N x N` matrix whose row `i` reconstructs sample `i`.

use nalgebra::{DVector, DMatrix};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{ensure_finite, svd, svt, DenseMatrix};

/// Pivot magnitude below which the stage-1 normalizer is considered degenerate.
pub const DEGENERATE_SUM_TOL: f64 = 1e-12;

/// Columns whose post-SVT sum falls below this keep their pre-SVT values.
pub const RENORMALIZE_TOL: f64 = 1e-8;

/// Tolerance for the unit column/row sum invariants.
pub const AFFINE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborDictionary {
    k: usize,
    neighbors: Vec<Vec<usize>>,
}

impl NeighborDictionary {
    /// Builds a dictionary from explicit lists, checking that each list has
    /// exactly `k` distinct in-range indices and excludes its own sample.
    pub fn from_lists(k: usize, neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = neighbors.len();
        if k == 0 || k >= n.max(1) {
            return Err(Error::InvalidK { k, n });
        }
        for (i, list) in neighbors.iter().enumerate() {
            if list.len() != k {
                return Err(Error::Inconsistent(format!(
                    "sample {i} has {} neighbors, expected {k}",
                    list.len()
                )));
            }
            for (r, &j) in list.iter().enumerate() {
                if j >= n || j == i || list[..r].contains(&j) {
                    return Err(Error::Inconsistent(format!(
                        "sample {i} has invalid neighbor {j}"
                    )));
                }
            }
        }
        Ok(Self { k, neighbors })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_samples(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.neighbors
    }
}

/// Stage-1/2 coefficients: column `i` holds sample `i`'s weights over its neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCodes {
    codes: DenseMatrix,
    residual_norms: Vec<f64>,
}

impl LocalCodes {
    pub fn new(codes: DenseMatrix, residual_norms: Vec<f64>) -> Result<Self> {
        ensure_finite("LocalCodes::new", &codes)?;
        if residual_norms.len() != codes.ncols() {
            return Err(Error::Inconsistent(format!(
                "{} residuals for {} code columns",
                residual_norms.len(),
                codes.ncols()
            )));
        }
        if let Some(i) = residual_norms.iter().position(|r| !(*r >= 0.0)) {
            return Err(Error::Inconsistent(format!(
                "residual norm of sample {i} is negative or NaN"
            )));
        }
        for (i, col) in codes.column_iter().enumerate() {
            let s = col.sum();
            if (s - 1.0).abs() > AFFINE_TOL {
                return Err(Error::Inconsistent(format!(
                    "code column {i} sums to {s}, expected 1"
                )));
            }
        }
        Ok(Self {
            codes,
            residual_norms,
        })
    }

    /// `K x N` code matrix.
    pub fn codes(&self) -> &DenseMatrix {
        &self.codes
    }

    pub fn residual_norms(&self) -> &[f64] {
        &self.residual_norms
    }

    pub fn k(&self) -> usize {
        self.codes.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.codes.ncols()
    }
}

/// Sparse `N x N` reconstruction weights, stored by row.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl WeightMatrix {
    /// Wraps explicit rows. Column indices must be in range and unique per row.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            for (r, &(j, w)) in row.iter().enumerate() {
                if j >= n || row[..r].iter().any(|&(c, _)| c == j) || !w.is_finite() {
                    return Err(Error::Inconsistent(format!(
                        "row {i} has an invalid entry at column {j}"
                    )));
                }
            }
        }
        Ok(Self { n, rows })
    }

    pub fn from_dense(w: &DenseMatrix) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::Inconsistent("weight matrix must be square".into()));
        }
        let rows = (0..w.nrows())
            .map(|i| {
                (0..w.ncols())
                    .filter(|&j| w[(i, j)] != 0.0)
                    .map(|j| (j, w[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut w = DenseMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                w[(i, j)] = v;
            }
        }
        w
    }

    /// `(I - W)^T (I - W)`.
    pub fn cost_matrix(&self) -> DenseMatrix {
        let mut a = DenseMatrix::identity(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                a[(i, j)] -= v;
            }
        }
        let m = a.tr_mul(&a);
        // Exact symmetry so downstream symmetry checks never trip on rounding.
        (&m + m.transpose()) * 0.5
    }

    /// Column `i` of the result is `Σ_j W_ij x_j` for the columns `x_j` of `x`.
    pub fn reconstruct(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.ncols() != self.n {
            return Err(Error::Inconsistent(format!(
                "matrix has {} columns, weights cover {} samples",
                x.ncols(),
                self.n
            )));
        }
        let mut out = DenseMatrix::zeros(x.nrows(), self.n);
        for (i, row) in self.rows.iter().enumerate() {
            let mut col = out.column_mut(i);
            for &(j, v) in row {
                col.axpy(v, &x.column(j), 1.0);
            }
        }
        Ok(out)
    }
}

fn squared_distance(x: &DenseMatrix, i: usize, j: usize) -> f64 {
    x.column(i)
        .iter()
        .zip(x.column(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// The `k` Euclidean-nearest samples of every column of `x` (`D x N`),
/// excluding the sample itself. Ties go to the smaller index.
pub fn knn_dictionary(x: &DenseMatrix, k: usize) -> Result<NeighborDictionary> {
    ensure_finite("knn_dictionary", x)?;
    let n = x.ncols();
    if k < 1 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    let neighbors = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (squared_distance(x, i, j), j))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(NeighborDictionary { k, neighbors })
}

fn check_alignment(x: &DenseMatrix, nd: &NeighborDictionary) -> Result<()> {
    if x.ncols() != nd.n_samples() {
        return Err(Error::Inconsistent(format!(
            "data has {} samples, dictionary has {}",
            x.ncols(),
            nd.n_samples()
        )));
    }
    Ok(())
}

fn code_for_sample(x: &DenseMatrix, nbrs: &[usize], i: usize, reg: f64) -> Result<(DVector<f64>, f64)> {
    let k = nbrs.len();
    let xi = x.column(i);
    let mut diffs = DMatrix::zeros(x.nrows(), k);
    for (r, &j) in nbrs.iter().enumerate() {
        diffs.set_column(r, &(x.column(j) - xi));
    }
    let mut gram = diffs.tr_mul(&diffs);
    let trace = gram.trace();
    let mut shift = reg * trace / k as f64;
    if shift == 0.0 && reg > 0.0 {
        // all neighbors coincide with x_i
        shift = reg;
    }
    for r in 0..k {
        gram[(r, r)] += shift;
    }
    let ones = DVector::from_element(k, 1.0);
    let w = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&ones),
        None => gram.lu().solve(&ones).ok_or_else(|| Error::DegenerateGeometry {
            sample: i,
            msg: "singular local Gram matrix".into(),
        })?,
    };
    let total = w.sum();
    if !(total.abs() >= DEGENERATE_SUM_TOL) {
        return Err(Error::DegenerateGeometry {
            sample: i,
            msg: format!("weight normalizer {total:e} is too small"),
        });
    }
    let z = w / total;
    let residual = (diffs * &z).norm();
    Ok((z, residual))
}

/// Stage 1: closed-form affine reconstruction codes with a relative Tikhonov
/// term `reg * tr(G_i) / K` on each local Gram matrix.
pub fn local_codes(x: &DenseMatrix, nd: &NeighborDictionary, reg: f64) -> Result<LocalCodes> {
    if !(reg >= 0.0) || !reg.is_finite() {
        return Err(Error::contract("local_codes", format!("reg must be >= 0, got {reg}")));
    }
    ensure_finite("local_codes", x)?;
    check_alignment(x, nd)?;
    let per_sample: Vec<(DVector<f64>, f64)> = (0..x.ncols())
        .into_par_iter()
        .map(|i| code_for_sample(x, nd.neighbors(i), i, reg))
        .collect::<Result<_>>()?;

    let mut codes = DenseMatrix::zeros(nd.k(), x.ncols());
    let mut residual_norms = Vec::with_capacity(x.ncols());
    for (i, (z, r)) in per_sample.into_iter().enumerate() {
        codes.set_column(i, &z);
        residual_norms.push(r);
    }
    Ok(LocalCodes {
        codes,
        residual_norms,
    })
}

/// `‖x_i - D_i z_i‖` for every sample, against the given dictionaries.
pub fn residual_norms(x: &DenseMatrix, nd: &NeighborDictionary, codes: &DenseMatrix) -> Result<Vec<f64>> {
    check_alignment(x, nd)?;
    if codes.nrows() != nd.k() || codes.ncols() != nd.n_samples() {
        return Err(Error::Inconsistent("code matrix shape does not match dictionary".into()));
    }
    Ok((0..x.ncols())
        .map(|i| {
            let mut r = x.column(i).into_owned();
            for (p, &j) in nd.neighbors(i).iter().enumerate() {
                r.axpy(-codes[(p, i)], &x.column(j), 1.0);
            }
            r.norm()
        })
        .collect())
}

/// Returns a copy of `codes` with residuals recomputed against `x`.
pub fn with_recomputed_residuals(
    x: &DenseMatrix,
    nd: &NeighborDictionary,
    codes: LocalCodes,
) -> Result<LocalCodes> {
    let residual_norms = residual_norms(x, nd, &codes.codes)?;
    Ok(LocalCodes {
        residual_norms,
        ..codes
    })
}

/// The SVT output before column renormalization, with `tau = mu * σ_max`.
pub fn shrink_codes(codes: &LocalCodes, mu: f64) -> Result<DenseMatrix> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::contract("low_rank_refine", format!("mu must be >= 0, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(codes.codes.clone());
    }
    let sigma_max = svd(&codes.codes)?.singular_values[0];
    svt(&codes.codes, mu * sigma_max)
}

/// Stage 2: singular value thresholding of the code matrix followed by
/// column renormalization. Residual norms are carried through unchanged.
pub fn low_rank_refine(codes: &LocalCodes, mu: f64) -> Result<LocalCodes> {
    let mut shrunk = shrink_codes(codes, mu)?;
    if mu == 0.0 {
        return Ok(codes.clone());
    }
    for i in 0..shrunk.ncols() {
        let s = shrunk.column(i).sum();
        if s.abs() < RENORMALIZE_TOL {
            shrunk.set_column(i, &codes.codes.column(i));
        } else {
            shrunk.column_mut(i).unscale_mut(s);
        }
    }
    Ok(LocalCodes {
        codes: shrunk,
        residual_norms: codes.residual_norms.clone(),
    })
}

/// Fill transform: `W[i][nbr_i[r]] = codes[r][i]`, zeros elsewhere.
pub fn assemble_weight_matrix(codes: &LocalCodes, nd: &NeighborDictionary) -> Result<WeightMatrix> {
    if codes.k() != nd.k() || codes.n_samples() != nd.n_samples() {
        return Err(Error::Inconsistent(format!(
            "codes are {}x{}, dictionary has k={} over {} samples",
            codes.k(),
            codes.n_samples(),
            nd.k(),
            nd.n_samples()
        )));
    }
    let rows = nd
        .lists()
        .iter()
        .enumerate()
        .map(|(i, list)| {
            list.iter()
                .enumerate()
                .map(|(r, &j)| (j, codes.codes[(r, i)]))
                .collect()
        })
        .collect();
    Ok(WeightMatrix {
        n: nd.n_samples(),
        rows,
    })
}

/// Full weight pipeline for one view: neighbors, stage 1, stage 2, fill.
pub fn l2e_weights(x: &DenseMatrix, k: usize, reg: f64, mu: f64) -> Result<WeightMatrix> {
    let nd = knn_dictionary(x, k)?;
    let codes = local_codes(x, &nd, reg)?;
    let refined = low_rank_refine(&codes, mu)?;
    assemble_weight_matrix(&refined, &nd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DenseMatrix {
        DenseMatrix::from_row_slice(1, points.len(), points)
    }

    #[test]
    fn knn_on_a_line_breaks_ties_low() {
        let x = line(&[0.0, 1.0, 2.0, 10.0]);
        let nd = knn_dictionary(&x, 1).unwrap();
        assert_eq!(nd.lists(), &[vec![1], vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn knn_all_others_when_k_is_n_minus_one() {
        let x = line(&[3.0, -1.0, 0.5, 7.0, 2.0]);
        let nd = knn_dictionary(&x, 4).unwrap();
        for i in 0..5 {
            let mut got = nd.neighbors(i).to_vec();
            got.sort();
            let want: Vec<usize> = (0..5).filter(|&j| j != i).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn knn_rejects_bad_k() {
        let x = line(&[0.0, 1.0, 2.0]);
        assert!(matches!(knn_dictionary(&x, 0), Err(Error::InvalidK { k: 0, n: 3 })));
        assert!(matches!(knn_dictionary(&x, 3), Err(Error::InvalidK { k: 3, n: 3 })));
    }

    #[test]
    fn symmetric_cross_gives_equal_weights() {
        // sample 0 at the origin, neighbors ±e1, ±e2
        let x = DenseMatrix::from_row_slice(
            2,
            5,
            &[0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0],
        );
        let nd = NeighborDictionary::from_lists(
            4,
            vec![
                vec![1, 2, 3, 4],
                vec![0, 3, 4, 2],
                vec![0, 3, 4, 1],
                vec![0, 1, 2, 4],
                vec![0, 1, 2, 3],
            ],
        )
        .unwrap();
        let codes = local_codes(&x, &nd, 1e-3).unwrap();
        for r in 0..4 {
            assert!((codes.codes()[(r, 0)] - 0.25).abs() < 1e-12);
        }
        assert!(codes.residual_norms()[0] < 1e-12);
    }

    #[test]
    fn single_neighbor_code_is_forced() {
        let x = line(&[0.0, 1.0, 2.5, 10.0]);
        let nd = knn_dictionary(&x, 1).unwrap();
        let codes = local_codes(&x, &nd, 1e-3).unwrap();
        assert!(codes.codes().iter().all(|&z| (z - 1.0).abs() < 1e-14));
        let expect = [1.0, 1.0, 1.5, 7.5];
        for (r, e) in codes.residual_norms().iter().zip(expect) {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_points_are_regularized() {
        let x = line(&[1.0, 1.0, 1.0, 4.0]);
        let nd = knn_dictionary(&x, 2).unwrap();
        let codes = local_codes(&x, &nd, 1e-3).unwrap();
        for col in codes.codes().column_iter() {
            assert!((col.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unregularized_singular_system_is_degenerate() {
        let x = line(&[1.0, 1.0, 1.0, 4.0]);
        let nd = knn_dictionary(&x, 2).unwrap();
        let err = local_codes(&x, &nd, 0.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry { sample: 0, .. }), "{err}");
    }

    #[test]
    fn refine_zero_mu_is_identity() {
        let x = DenseMatrix::from_fn(3, 9, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.1 * j as f64);
        let nd = knn_dictionary(&x, 3).unwrap();
        let codes = local_codes(&x, &nd, 1e-3).unwrap();
        let refined = low_rank_refine(&codes, 0.0).unwrap();
        assert_eq!(refined, codes);
        assert!(matches!(low_rank_refine(&codes, -1.0), Err(Error::Contract { .. })));
    }

    #[test]
    fn fill_transform_places_codes() {
        let nd = NeighborDictionary::from_lists(1, vec![vec![1], vec![0], vec![1]]).unwrap();
        let codes = LocalCodes::new(DenseMatrix::from_element(1, 3, 1.0), vec![0.0; 3]).unwrap();
        let w = assemble_weight_matrix(&codes, &nd).unwrap().to_dense();
        let expect = DenseMatrix::from_row_slice(3, 3, &[0., 1., 0., 1., 0., 0., 0., 1., 0.]);
        assert_eq!(w, expect);
    }

    #[test]
    fn fill_transform_rejects_mismatch() {
        let nd = NeighborDictionary::from_lists(1, vec![vec![1], vec![0], vec![1]]).unwrap();
        let codes = LocalCodes::new(DenseMatrix::from_element(1, 4, 1.0), vec![0.0; 4]).unwrap();
        assert!(matches!(
            assemble_weight_matrix(&codes, &nd),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn dictionary_validation() {
        assert!(NeighborDictionary::from_lists(1, vec![vec![0], vec![0]]).is_err());
        assert!(NeighborDictionary::from_lists(2, vec![vec![1, 1], vec![0, 2], vec![0, 1]]).is_err());
        assert!(NeighborDictionary::from_lists(1, vec![vec![5], vec![0]]).is_err());
    }
}
