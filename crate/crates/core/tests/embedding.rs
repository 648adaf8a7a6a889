mod common;

use common::*;
use mvl2e::embed::{concat_views, embedding_spectrum, normalized_affinity};
use mvl2e::graph::l2e_weights;
use mvl2e::{
    clle_embed, embed_from_weights, gaussian_similarity, l2e_embed, lle_embed, reconstruction_cost, spectral_embed,
    DenseMatrix, Embedding, WeightMatrix,
};

fn null_skipping_oracle(a: &DenseMatrix, d: usize) -> (Vec<f64>, DenseMatrix) {
    let (vals, vecs) = jacobi_eigen(a);
    let scale = vals.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs() > 1e-9 * scale).take(d).collect();
    (
        keep.iter().map(|&i| vals[i]).collect(),
        DenseMatrix::from_fn(d, a.nrows(), |r, c| vecs[(c, keep[r])]),
    )
}

#[test]
fn five_sample_graph_matches_full_spectrum() {
    let mut r = rng(20);
    let rows = random_affine_weights(5, 2, &mut r);
    let cost = cost_from_rows(&rows);
    let w = WeightMatrix::from_rows(rows).unwrap();
    let y = embed_from_weights(&w, 2).unwrap();
    let (vals, oracle) = null_skipping_oracle(&cost, 2);
    assert!(projector_distance(y.coords(), &oracle) < 1e-8);
    let phi = reconstruction_cost(&y, &w).unwrap();
    assert!((phi - vals.iter().sum::<f64>()).abs() < 1e-10);
    assert!(y.orthonormality_error() < 1e-10);
}

#[test]
fn embedding_spectrum_is_the_optimal_cost() {
    let mut r = rng(21);
    for n in [6, 11, 20] {
        let w = WeightMatrix::from_rows(random_affine_weights(n, 3, &mut r)).unwrap();
        let y = embed_from_weights(&w, 3).unwrap();
        let spectrum = embedding_spectrum(&w, 3).unwrap();
        assert!((reconstruction_cost(&y, &w).unwrap() - spectrum.iter().sum::<f64>()).abs() < 1e-10);
        let ones = nalgebra::DVector::from_element(n, 1.0);
        assert!((y.coords() * ones).amax() < 1e-8);
    }
}

#[test]
fn cost_matches_explicit_trace_form() {
    let mut r = rng(22);
    let rows = random_affine_weights(12, 4, &mut r);
    let cost = cost_from_rows(&rows);
    let w = WeightMatrix::from_rows(rows).unwrap();
    let y = Embedding::new(random_orthonormal(3, 12, &mut r)).unwrap();
    assert!((reconstruction_cost(&y, &w).unwrap() - trace_form(y.coords(), &cost)).abs() < 1e-10);
}

#[test]
fn cost_is_rotation_invariant() {
    let mut r = rng(23);
    let w = WeightMatrix::from_rows(random_affine_weights(15, 3, &mut r)).unwrap();
    let y = embed_from_weights(&w, 3).unwrap();
    let q = random_orthonormal(3, 3, &mut r);
    let rotated = Embedding::new(&q * y.coords()).unwrap();
    let a = reconstruction_cost(&y, &w).unwrap();
    let b = reconstruction_cost(&rotated, &w).unwrap();
    assert!((a - b).abs() < 1e-10);
}

#[test]
fn embedding_beats_random_candidates() {
    let mut r = rng(24);
    let n = 14;
    let w = WeightMatrix::from_rows(random_affine_weights(n, 3, &mut r)).unwrap();
    let best = reconstruction_cost(&embed_from_weights(&w, 2).unwrap(), &w).unwrap();
    for _ in 0..1000 {
        // candidates live in the complement of the constant vector, like the optimum
        let mut c = random_matrix(2, n, &mut r);
        for mut row in c.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
        let mut y = c;
        for i in 0..2 {
            for j in 0..i {
                let dot = y.row(i).dot(&y.row(j));
                let prev = y.row(j).into_owned();
                let mut row = y.row_mut(i);
                row -= prev * dot;
            }
            let norm = y.row(i).norm();
            y.row_mut(i).scale_mut(1.0 / norm);
        }
        let cand = Embedding::new(y).unwrap();
        assert!(reconstruction_cost(&cand, &w).unwrap() >= best - 1e-10);
    }
}

#[test]
fn dimension_bounds_are_enforced() {
    let w = WeightMatrix::from_rows(random_affine_weights(6, 2, &mut rng(25))).unwrap();
    assert!(embed_from_weights(&w, 0).is_err());
    assert!(embed_from_weights(&w, 6).is_err());
    assert!(embed_from_weights(&w, 5).is_ok());
}

#[test]
fn zero_mu_matches_classical_lle() {
    for seed in 0..10 {
        let mut r = rng(100 + seed);
        let x = random_matrix(4, 25, &mut r);
        let y = l2e_embed(&x, 6, 1e-3, 0.0, 2).unwrap();
        let oracle = lle_oracle(&x, 6, 1e-3, 2);
        assert!(max_error_up_to_row_sign(y.coords(), &oracle) < 1e-6, "seed {seed}");
        assert_eq!(lle_embed(&x, 6, 1e-3, 2).unwrap(), y);
    }
}

#[test]
fn l2e_is_weights_then_embedding() {
    let x = random_matrix(5, 30, &mut rng(26));
    let w = l2e_weights(&x, 7, 1e-3, 0.1).unwrap();
    assert_eq!(l2e_embed(&x, 7, 1e-3, 0.1, 3).unwrap(), embed_from_weights(&w, 3).unwrap());
}

#[test]
fn concatenation_baseline_matches_stacked_lle() {
    let mut r = rng(27);
    let a = random_matrix(3, 20, &mut r);
    let b = random_matrix(2, 20, &mut r);
    let stacked = DenseMatrix::from_fn(5, 20, |i, j| if i < 3 { a[(i, j)] } else { b[(i - 3, j)] });
    assert_eq!(concat_views([&a, &b]).unwrap(), stacked);
    let y = clle_embed([&a, &b], 5, 1e-3, 2).unwrap();
    let oracle = lle_oracle(&stacked, 5, 1e-3, 2);
    assert!(max_error_up_to_row_sign(y.coords(), &oracle) < 1e-6);
    assert!(concat_views([&a, &random_matrix(2, 19, &mut r)]).is_err());
}

#[test]
fn gaussian_similarity_uses_median_distance() {
    let x = DenseMatrix::from_row_slice(1, 3, &[0.0, 1.0, 3.0]);
    let s = gaussian_similarity(&x).unwrap();
    // pairwise distances 1, 3, 2: median 2
    let sigma2: f64 = 2.0 * 4.0;
    assert!((s[(0, 1)] - (-1.0 / sigma2).exp()).abs() < 1e-15);
    assert!((s[(0, 2)] - (-9.0 / sigma2).exp()).abs() < 1e-15);
    assert!((s[(1, 2)] - (-4.0 / sigma2).exp()).abs() < 1e-15);
    for i in 0..3 {
        assert_eq!(s[(i, i)], 1.0);
    }
}

#[test]
fn spectral_embedding_separates_blocks() {
    let n = 10;
    let s = DenseMatrix::from_fn(n, n, |i, j| if (i < 4) == (j < 4) { 1.0 } else { 0.0 });
    let y = spectral_embed(&s, 2).unwrap();
    // leading eigenspace of D^-1/2 S D^-1/2 is spanned by the scaled block indicators
    let mut basis = DenseMatrix::zeros(2, n);
    for j in 0..n {
        if j < 4 {
            basis[(0, j)] = 0.5;
        } else {
            basis[(1, j)] = 1.0 / 6f64.sqrt();
        }
    }
    assert!(projector_distance(y.coords(), &basis) < 1e-10);
}

#[test]
fn spectral_embedding_attains_top_eigenvalue_sum() {
    let mut r = rng(28);
    let x = random_matrix(3, 16, &mut r);
    let s = gaussian_similarity(&x).unwrap();
    let l = normalized_affinity(&s).unwrap();
    let y = spectral_embed(&s, 3).unwrap();
    let (vals, _) = jacobi_eigen(&l);
    let top: f64 = vals.iter().rev().take(3).sum();
    assert!((trace_form(y.coords(), &l) - top).abs() < 1e-10);
    for _ in 0..1000 {
        let cand = random_orthonormal(3, 16, &mut r);
        assert!(trace_form(&cand, &l) <= top + 1e-10);
    }
}

#[test]
fn spectral_rejects_isolated_samples() {
    let mut s = DenseMatrix::identity(4, 4);
    s[(0, 0)] = 0.0;
    assert!(spectral_embed(&s, 2).is_err());
}
