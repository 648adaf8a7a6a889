//! Independent reference implementations used as test oracles. None of these
//! call into the factorization routines under test.
#![allow(dead_code)]

use mvl2e::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let a = random_matrix(n, n, rng);
    (&a + a.transpose()) * 0.5
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns eigenvalues
/// ascending and eigenvectors as matching columns.
pub fn jacobi_eigen(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off < 1e-30 * m.norm_squared().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// One-sided Jacobi SVD. Returns `(U, σ descending, V)` in thin form.
pub fn jacobi_svd(a: &DenseMatrix) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let transpose = a.nrows() < a.ncols();
    let work = if transpose { a.transpose() } else { a.clone() };
    let (m, n) = work.shape();
    let mut u = work;
    let mut v = DenseMatrix::identity(n, n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = u.column(p).norm_squared();
                let beta: f64 = u.column(q).norm_squared();
                let gamma: f64 = u.column(p).dot(&u.column(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let up = u[(k, p)];
                    let uq = u[(k, q)];
                    u[(k, p)] = c * up - s * uq;
                    u[(k, q)] = s * up + c * uq;
                }
                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = c * vp - s * vq;
                    v[(k, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<(f64, usize)> = (0..n).map(|j| (u.column(j).norm(), j)).collect();
    sigma.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut uu = DenseMatrix::zeros(m, n);
    let mut vv = DenseMatrix::zeros(n, n);
    for (c, &(s, j)) in sigma.iter().enumerate() {
        if s > 0.0 {
            uu.set_column(c, &(u.column(j) / s));
        }
        vv.set_column(c, &v.column(j));
    }
    let values = sigma.iter().map(|s| s.0).collect();
    if transpose {
        (vv, values, uu)
    } else {
        (uu, values, vv)
    }
}

/// `Σ max(σ_i - tau, 0) u_i v_iᵀ` from the Jacobi SVD.
pub fn svt_oracle(a: &DenseMatrix, tau: f64) -> DenseMatrix {
    let (u, s, v) = jacobi_svd(a);
    let mut out = DenseMatrix::zeros(a.nrows(), a.ncols());
    for (i, si) in s.iter().enumerate() {
        if si > &tau {
            out += (u.column(i) * (si - tau)) * v.column(i).transpose();
        }
    }
    out
}

/// Brute-force neighbor lists via a full pairwise distance sort.
pub fn brute_knn(x: &DenseMatrix, k: usize) -> Vec<Vec<usize>> {
    let n = x.ncols();
    (0..n)
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| ((x.column(i) - x.column(j)).norm(), j))
                .collect();
            all.sort_by(|a, b| a.partial_cmp(b).unwrap());
            all.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs())).unwrap();
        m.swap_rows(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[(r, col)] / m[(col, col)];
            for c in col..n {
                m[(r, c)] -= f * m[(col, c)];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[(r, c)] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[(r, r)];
    }
    x
}

/// Equality-constrained least squares
/// `min ‖x - D z‖² + eps ‖z‖²  s.t. 1ᵀz = 1`
/// solved through the bordered KKT system
/// `[[DᵀD + eps I, 1], [1ᵀ, 0]] [z; ν] = [Dᵀx; 1]`.
pub fn bordered_codes(x: &DenseMatrix, nbrs: &[Vec<usize>], reg: f64) -> DenseMatrix {
    let n = x.ncols();
    let k = nbrs[0].len();
    let mut out = DenseMatrix::zeros(k, n);
    for i in 0..n {
        let dict = DenseMatrix::from_fn(x.nrows(), k, |r, c| x[(r, nbrs[i][c])]);
        // the regularizer is defined on the translated dictionary
        let trace: f64 = (0..k).map(|c| (dict.column(c) - x.column(i)).norm_squared()).sum();
        let eps = reg * trace / k as f64;
        let mut kkt = DenseMatrix::zeros(k + 1, k + 1);
        let gram = dict.transpose() * &dict;
        let rhs_top = dict.transpose() * x.column(i);
        let mut rhs = vec![0.0; k + 1];
        for r in 0..k {
            for c in 0..k {
                kkt[(r, c)] = gram[(r, c)];
            }
            kkt[(r, r)] += eps;
            kkt[(r, k)] = 1.0;
            kkt[(k, r)] = 1.0;
            rhs[r] = rhs_top[r];
        }
        rhs[k] = 1.0;
        let sol = solve_dense(&kkt, &rhs);
        for r in 0..k {
            out[(r, i)] = sol[r];
        }
    }
    out
}

/// Classical LLE computed from scratch: brute-force neighbors, bordered
/// constrained least squares, dense `(I-W)ᵀ(I-W)`, Jacobi eigenvectors with
/// the (numerically) null directions dropped. Rows are the embedding.
pub fn lle_oracle(x: &DenseMatrix, k: usize, reg: f64, d: usize) -> DenseMatrix {
    let n = x.ncols();
    let nbrs = brute_knn(x, k);
    let codes = bordered_codes(x, &nbrs, reg);
    let mut a = DenseMatrix::identity(n, n);
    for i in 0..n {
        for (r, &j) in nbrs[i].iter().enumerate() {
            a[(i, j)] -= codes[(r, i)];
        }
    }
    let m = a.transpose() * &a;
    let (vals, vecs) = jacobi_eigen(&m);
    let scale = vals.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i].abs() > 1e-9 * scale).take(d).collect();
    DenseMatrix::from_fn(d, n, |r, c| vecs[(c, keep[r])])
}

/// Largest |difference| between `a` and `b` after flipping each row of `b`
/// to best match the corresponding row of `a`.
pub fn max_error_up_to_row_sign(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (0..a.nrows())
        .map(|r| {
            let plus = (a.row(r) - b.row(r)).amax();
            let minus = (a.row(r) + b.row(r)).amax();
            plus.min(minus)
        })
        .fold(0.0, f64::max)
}

/// `‖P_a - P_b‖_F` for the row-space projectors of two orthonormal-row matrices.
pub fn projector_distance(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a.transpose() * a - b.transpose() * b).norm()
}

/// A random row-stochastic sparse weight pattern: `k` distinct non-self
/// neighbors per row with weights summing to one (some may be negative).
pub fn random_affine_weights(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<(usize, f64)>> {
    (0..n)
        .map(|i| {
            let mut cols: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            for t in 0..k {
                let s = rng.random_range(t..cols.len());
                cols.swap(t, s);
            }
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            cols[..k].iter().zip(raw).map(|(&j, w)| (j, w / total)).collect()
        })
        .collect()
}

/// Random `d x n` matrix with orthonormal rows by modified Gram-Schmidt on
/// Gaussian-ish rows.
pub fn random_orthonormal(d: usize, n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut y = random_matrix(d, n, rng);
    for r in 0..d {
        for s in 0..r {
            let dot = y.row(r).dot(&y.row(s));
            let prev = y.row(s).into_owned();
            let mut row = y.row_mut(r);
            row -= prev * dot;
        }
        let norm = y.row(r).norm();
        y.row_mut(r).scale_mut(1.0 / norm);
    }
    y
}

/// `tr(Y A Yᵀ)` written out entrywise.
pub fn trace_form(y: &DenseMatrix, a: &DenseMatrix) -> f64 {
    let mut t = 0.0;
    for r in 0..y.nrows() {
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                t += y[(r, i)] * a[(i, j)] * y[(r, j)];
            }
        }
    }
    t
}

/// Dense `(I - W)ᵀ(I - W)` built from row lists.
pub fn cost_from_rows(rows: &[Vec<(usize, f64)>]) -> DenseMatrix {
    let n = rows.len();
    let mut a = DenseMatrix::identity(n, n);
    for (i, row) in rows.iter().enumerate() {
        for &(j, w) in row {
            a[(i, j)] -= w;
        }
    }
    a.transpose() * &a
}
