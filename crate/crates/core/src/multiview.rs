//! Centroid-based multi-view embedding and the co-regularized spectral baseline.
//!
//! The objective is
//!
//! ```text
//! f = γ Σ_v tr(Y*ᵀY* YᵛᵀYᵛ) - Σ_v tr(Yᵛ (I - Wᵛ)ᵀ(I - Wᵛ) Yᵛᵀ)
//! ```
//!
//! over orthonormal-row `Y*` and `Yᵛ`. Each block update is a trace
//! maximization solved exactly by the top eigenvectors of a symmetric operand,
//! so the alternating sweep never decreases `f`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embed::{embed_from_weights, normalized_affinity, reconstruction_cost, Embedding};
use crate::error::{Error, Result, ResultExt};
use crate::graph::{l2e_weights, WeightMatrix};
use crate::numerics::{random_orthonormal_rows, sym_eig, DenseMatrix, EigenSelection};

#[derive(Debug, Clone)]
pub struct MvState {
    pub centroid: Embedding,
    pub views: Vec<Embedding>,
    pub weights: Vec<WeightMatrix>,
    pub gamma: f64,
}

impl MvState {
    pub fn new(centroid: Embedding, views: Vec<Embedding>, weights: Vec<WeightMatrix>, gamma: f64) -> Result<Self> {
        if views.is_empty() || views.len() != weights.len() {
            return Err(Error::Inconsistent(format!(
                "{} view embeddings for {} weight matrices",
                views.len(),
                weights.len()
            )));
        }
        let n = centroid.n();
        if views.iter().any(|y| y.n() != n) || weights.iter().any(|w| w.n() != n) {
            return Err(Error::Inconsistent("embeddings disagree on sample count".into()));
        }
        if !(gamma >= 0.0) {
            return Err(Error::contract("MvState::new", format!("gamma must be >= 0, got {gamma}")));
        }
        Ok(Self {
            centroid,
            views,
            weights,
            gamma,
        })
    }

    pub fn m(&self) -> usize {
        self.views.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizationTrace {
    /// Objective after each full sweep (centroid update then all view updates).
    pub objective_values: Vec<f64>,
    /// Projection distance `‖P_t - P_{t-1}‖_F` between successive centroid row
    /// spaces; the first entry is measured against the first centroid, so it is zero.
    pub centroid_shift: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub rel_change_at_stop: f64,
}

/// Hyperparameters of a full fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Mvl2eParams {
    pub k: usize,
    pub reg: f64,
    pub mu: f64,
    pub gamma: f64,
    pub d_views: Vec<usize>,
    pub d_star: usize,
    pub tol: f64,
    pub max_iters: usize,
    /// Extra runs from random orthonormal starts; the best final objective wins.
    pub restarts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Mvl2eFit {
    pub state: MvState,
    pub trace: OptimizationTrace,
    /// Per-view L²E embeddings the alternating loop started from.
    pub initial_views: Vec<Embedding>,
}

/// `tr(YaᵀYa YbᵀYb) = ‖Ya Ybᵀ‖²_F`. Bit-identical under argument swap.
pub fn agreement(ya: &Embedding, yb: &Embedding) -> Result<f64> {
    if ya.n() != yb.n() {
        return Err(Error::Inconsistent(format!(
            "agreement between embeddings of {} and {} samples",
            ya.n(),
            yb.n()
        )));
    }
    let (a, b) = (ya.coords(), yb.coords());
    let mut squares = Vec::with_capacity(a.nrows() * b.nrows());
    for r in 0..a.nrows() {
        for s in 0..b.nrows() {
            let dot: f64 = a.row(r).iter().zip(b.row(s).iter()).map(|(x, y)| x * y).sum();
            squares.push(dot * dot);
        }
    }
    // summation order must not depend on which argument came first
    squares.sort_by(f64::total_cmp);
    Ok(squares.into_iter().sum())
}

pub fn mv_objective(state: &MvState) -> Result<f64> {
    objective(&state.centroid, &state.views, &state.weights, state.gamma)
}

fn objective(centroid: &Embedding, views: &[Embedding], weights: &[WeightMatrix], gamma: f64) -> Result<f64> {
    let mut agree = 0.0;
    let mut cost = 0.0;
    for (y, w) in views.iter().zip(weights) {
        agree += agreement(centroid, y)?;
        cost += reconstruction_cost(y, w)?;
    }
    Ok(gamma * agree - cost)
}

/// `γ Σ_v YᵛᵀYᵛ`.
pub fn centroid_operand(views: &[Embedding], gamma: f64) -> Result<DenseMatrix> {
    let first = views
        .first()
        .ok_or_else(|| Error::InvalidInput("centroid update needs at least one view".into()))?;
    let n = first.n();
    let mut l = DenseMatrix::zeros(n, n);
    for y in views {
        if y.n() != n {
            return Err(Error::Inconsistent("views disagree on sample count".into()));
        }
        l += y.gram();
    }
    l *= gamma;
    Ok(l)
}

/// Top-`d_star` eigenvectors of `γ Σ_v YᵛᵀYᵛ`.
pub fn update_centroid(views: &[Embedding], gamma: f64, d_star: usize) -> Result<Embedding> {
    if !(gamma > 0.0) {
        return Err(Error::DegenerateUpdate(format!(
            "centroid update needs gamma > 0, got {gamma}"
        )));
    }
    let l = centroid_operand(views, gamma)?;
    let eig = sym_eig(&l, EigenSelection::largest(d_star))?;
    Ok(Embedding::from_eigenvectors(&eig.vectors))
}

/// `γ Y*ᵀY* - (I - W)ᵀ(I - W)`.
pub fn view_operand(centroid: &Embedding, w: &WeightMatrix, gamma: f64) -> Result<DenseMatrix> {
    if centroid.n() != w.n() {
        return Err(Error::Inconsistent(format!(
            "centroid has {} samples, weights cover {}",
            centroid.n(),
            w.n()
        )));
    }
    let op = centroid.gram() * gamma - w.cost_matrix();
    Ok((&op + op.transpose()) * 0.5)
}

/// Top-`d_v` eigenvectors of `γ Y*ᵀY* - (I - W)ᵀ(I - W)`.
pub fn update_view(centroid: &Embedding, w: &WeightMatrix, gamma: f64, d_v: usize) -> Result<Embedding> {
    let op = view_operand(centroid, w, gamma)?;
    let eig = sym_eig(&op, EigenSelection::largest(d_v))?;
    Ok(Embedding::from_eigenvectors(&eig.vectors))
}

fn validate(views: &[&DenseMatrix], p: &Mvl2eParams) -> Result<usize> {
    let first = views
        .first()
        .ok_or_else(|| Error::InvalidInput("at least one view is required".into()))?;
    let n = first.ncols();
    if views.iter().any(|v| v.ncols() != n) {
        return Err(Error::Inconsistent("views disagree on sample count".into()));
    }
    if p.d_views.len() != views.len() {
        return Err(Error::InvalidInput(format!(
            "{} view dimensions for {} views",
            p.d_views.len(),
            views.len()
        )));
    }
    if p.d_star < 1 || p.d_star > n {
        return Err(Error::InvalidInput(format!("d_star={} invalid for N={n}", p.d_star)));
    }
    if !(p.tol > 0.0) || p.max_iters == 0 {
        return Err(Error::InvalidInput("tol must be > 0 and max_iters >= 1".into()));
    }
    Ok(n)
}

/// Weights and the initial L²E embedding for each view.
pub fn initialize(views: &[&DenseMatrix], p: &Mvl2eParams) -> Result<(Vec<WeightMatrix>, Vec<Embedding>)> {
    validate(views, p)?;
    views
        .par_iter()
        .zip(&p.d_views)
        .enumerate()
        .map(|(v, (x, &d))| {
            let w = l2e_weights(x, p.k, p.reg, p.mu).context(|| format!("view {v}: weights"))?;
            let y = embed_from_weights(&w, d).context(|| format!("view {v}: initial embedding"))?;
            Ok((w, y))
        })
        .collect::<Result<Vec<_>>>()
        .map(|pairs| pairs.into_iter().unzip())
}

/// Alternating centroid/view updates from the given starting views.
pub fn optimize(
    weights: Vec<WeightMatrix>,
    initial: Vec<Embedding>,
    p: &Mvl2eParams,
) -> Result<(MvState, OptimizationTrace)> {
    if initial.len() != weights.len() || initial.len() != p.d_views.len() {
        return Err(Error::Inconsistent("views, weights and dimensions disagree in count".into()));
    }
    let mut trace = OptimizationTrace::default();
    let mut views = initial;
    let mut last: Option<(f64, Embedding)> = None;

    for it in 0..p.max_iters {
        let centroid = update_centroid(&views, p.gamma, p.d_star)
            .context(|| format!("iteration {it}: centroid update"))?;
        views = weights
            .par_iter()
            .zip(&p.d_views)
            .enumerate()
            .map(|(v, (w, &d))| {
                update_view(&centroid, w, p.gamma, d).context(|| format!("iteration {it}: view {v} update"))
            })
            .collect::<Result<_>>()?;

        let f = objective(&centroid, &views, &weights, p.gamma)?;
        let (rel, shift) = match &last {
            Some((prev_f, prev_c)) => {
                let overlap = agreement(prev_c, &centroid)?;
                (
                    (f - prev_f).abs() / prev_f.abs().max(1.0),
                    (2.0 * (p.d_star as f64 - overlap)).max(0.0).sqrt(),
                )
            }
            None => (f64::INFINITY, 0.0),
        };
        trace.objective_values.push(f);
        trace.centroid_shift.push(shift);
        trace.iterations = it + 1;
        trace.rel_change_at_stop = rel;
        last = Some((f, centroid));
        if rel < p.tol {
            trace.converged = true;
            break;
        }
    }

    let (_, centroid) = last.expect("max_iters >= 1");
    let state = MvState::new(centroid, views, weights, p.gamma)?;
    Ok((state, trace))
}

/// Full fit: per-view weights and L²E initialization, then the alternating
/// loop. With `restarts > 0`, additional runs start from seeded random
/// orthonormal views and the highest final objective is kept.
pub fn fit(views: &[&DenseMatrix], p: &Mvl2eParams) -> Result<Mvl2eFit> {
    let n = validate(views, p)?;
    let (weights, initial_views) = initialize(views, p)?;
    let (mut state, mut trace) = optimize(weights.clone(), initial_views.clone(), p)?;

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    for r in 0..p.restarts {
        let starts = p
            .d_views
            .iter()
            .map(|&d| Embedding::new(random_orthonormal_rows(d, n, &mut rng)))
            .collect::<Result<Vec<_>>>()?;
        let (s, t) = optimize(weights.clone(), starts, p).context(|| format!("restart {}", r + 1))?;
        let best = trace.objective_values.last().copied().unwrap_or(f64::NEG_INFINITY);
        if t.objective_values.last().copied().unwrap_or(f64::NEG_INFINITY) > best {
            state = s;
            trace = t;
        }
    }
    Ok(Mvl2eFit {
        state,
        trace,
        initial_views,
    })
}

/// Result of the co-regularized spectral baseline.
#[derive(Debug, Clone)]
pub struct CoregFit {
    pub embeddings: Vec<Embedding>,
    pub objective_values: Vec<f64>,
    pub converged: bool,
}

/// `Σ_v tr(Uᵛ Lᵛ Uᵛᵀ) + λ Σ_{v<w} tr(UᵛᵀUᵛ UʷᵀUʷ)`.
pub fn coregularized_objective(affinities: &[DenseMatrix], embeddings: &[Embedding], lambda: f64) -> Result<f64> {
    let mut f = 0.0;
    for (l, u) in affinities.iter().zip(embeddings) {
        f += u.trace_form(l);
    }
    for v in 0..embeddings.len() {
        for w in v + 1..embeddings.len() {
            f += lambda * agreement(&embeddings[v], &embeddings[w])?;
        }
    }
    Ok(f)
}

/// Co-regularized multi-view spectral embedding: each view's embedding is
/// refit in turn to the top eigenvectors of `Lᵛ + λ Σ_{w≠v} UʷᵀUʷ`.
pub fn coregularized_fit(similarities: &[DenseMatrix], lambda: f64, d: usize, max_iters: usize) -> Result<CoregFit> {
    const TOL: f64 = 1e-6;
    if !(lambda >= 0.0) {
        return Err(Error::contract("coregularized_fit", format!("lambda must be >= 0, got {lambda}")));
    }
    if similarities.is_empty() {
        return Err(Error::InvalidInput("at least one similarity matrix is required".into()));
    }
    let affinities = similarities
        .iter()
        .enumerate()
        .map(|(v, s)| normalized_affinity(s).context(|| format!("view {v}")))
        .collect::<Result<Vec<_>>>()?;
    let n = affinities[0].nrows();
    if affinities.iter().any(|l| l.nrows() != n) {
        return Err(Error::Inconsistent("similarities disagree on sample count".into()));
    }
    let mut embeddings = affinities
        .iter()
        .map(|l| Ok(Embedding::from_eigenvectors(&sym_eig(l, EigenSelection::largest(d))?.vectors)))
        .collect::<Result<Vec<_>>>()?;

    let mut objective_values = vec![coregularized_objective(&affinities, &embeddings, lambda)?];
    let mut converged = false;
    for it in 0..max_iters {
        for v in 0..embeddings.len() {
            let mut op = affinities[v].clone();
            for (w, u) in embeddings.iter().enumerate() {
                if w != v {
                    op += u.gram() * lambda;
                }
            }
            let op = (&op + op.transpose()) * 0.5;
            let eig = sym_eig(&op, EigenSelection::largest(d)).context(|| format!("iteration {it}: view {v}"))?;
            embeddings[v] = Embedding::from_eigenvectors(&eig.vectors);
        }
        let f = coregularized_objective(&affinities, &embeddings, lambda)?;
        let prev = *objective_values.last().expect("nonempty");
        objective_values.push(f);
        if (f - prev).abs() / prev.abs().max(1.0) < TOL {
            converged = true;
            break;
        }
    }
    Ok(CoregFit {
        embeddings,
        objective_values,
        converged,
    })
}

/// A single `d`-dimensional consensus of several embeddings: the top
/// eigenvectors of `Σ_v UᵛᵀUᵛ`.
pub fn consensus_embedding(embeddings: &[Embedding], d: usize) -> Result<Embedding> {
    update_centroid(embeddings, 1.0, d)
}
