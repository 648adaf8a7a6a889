//! 1NN evaluation of embeddings over repeated random train/test splits, and
//! the dimension and γ sweeps built on it.
//!
//! Evaluation is transductive: every sample is embedded once, and only the
//! labels are split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::data::MultiViewDataset;
use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::methods::{fit_methods, MethodFits};
use crate::multiview::{self, OptimizationTrace};
use crate::numerics::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_rep_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    pub max_accuracy: f64,
    pub train_fraction: f64,
    pub repetitions: usize,
    pub seed: u64,
}

impl EvalReport {
    fn from_accuracies(per_rep_accuracy: Vec<f64>, train_fraction: f64, seed: u64) -> Self {
        let repetitions = per_rep_accuracy.len();
        let mean_accuracy = per_rep_accuracy.iter().sum::<f64>() / repetitions as f64;
        let max_accuracy = per_rep_accuracy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            per_rep_accuracy,
            mean_accuracy,
            max_accuracy,
            train_fraction,
            repetitions,
            seed,
        }
    }
}

/// One train/test partition; training order is the permutation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Labels each column of `test` with the label of its nearest column of
/// `train` (Euclidean). Ties go to the smaller training index.
pub fn knn1_classify(train: &DenseMatrix, train_labels: &[usize], test: &DenseMatrix) -> Result<Vec<usize>> {
    if train.ncols() == 0 {
        return Err(Error::InvalidInput("1NN needs at least one training sample".into()));
    }
    if train_labels.len() != train.ncols() {
        return Err(Error::InvalidInput(format!(
            "{} training labels for {} training samples",
            train_labels.len(),
            train.ncols()
        )));
    }
    if test.ncols() > 0 && test.nrows() != train.nrows() {
        return Err(Error::InvalidInput(format!(
            "train has dimension {}, test has {}",
            train.nrows(),
            test.nrows()
        )));
    }
    Ok(test
        .column_iter()
        .map(|t| {
            let mut best = (f64::INFINITY, 0);
            for (j, c) in train.column_iter().enumerate() {
                let d: f64 = t.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.0 {
                    best = (d, j);
                }
            }
            train_labels[best.1]
        })
        .collect())
}

/// Seeded splits: repetition `r` shuffles `0..n` with a ChaCha8 stream `r`
/// keyed by `seed` and takes the first `floor(train_fraction * n)` as training.
pub fn split_schedule(n: usize, train_fraction: f64, repetitions: usize, seed: u64) -> Result<Vec<Split>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if repetitions == 0 {
        return Err(Error::InvalidInput("repetitions must be >= 1".into()));
    }
    let n_train = (train_fraction * n as f64).floor() as usize;
    if n_train == 0 {
        return Err(Error::InvalidSplit(format!(
            "train_fraction {train_fraction} of {n} samples leaves no training samples"
        )));
    }
    if n_train >= n {
        return Err(Error::InvalidSplit(format!("no test samples left out of {n}")));
    }
    Ok((0..repetitions)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let test = perm.split_off(n_train);
            Split { train: perm, test }
        })
        .collect())
}

fn gather(y: &DenseMatrix, idx: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(y.nrows(), idx.len(), |r, c| y[(r, idx[c])])
}

/// 1NN accuracy for each split, in split order.
pub fn eval_splits(y: &DenseMatrix, labels: &[usize], splits: &[Split]) -> Result<Vec<f64>> {
    if labels.len() != y.ncols() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} samples",
            labels.len(),
            y.ncols()
        )));
    }
    splits
        .par_iter()
        .map(|s| {
            if s.train.is_empty() {
                return Err(Error::InvalidSplit("training split is empty".into()));
            }
            let train_labels: Vec<usize> = s.train.iter().map(|&i| labels[i]).collect();
            let predicted = knn1_classify(&gather(y, &s.train), &train_labels, &gather(y, &s.test))?;
            let correct = predicted
                .iter()
                .zip(&s.test)
                .filter(|(p, &i)| **p == labels[i])
                .count();
            Ok(correct as f64 / s.test.len() as f64)
        })
        .collect()
}

pub fn split_eval(
    y: &Embedding,
    labels: &[usize],
    train_fraction: f64,
    repetitions: usize,
    seed: u64,
) -> Result<EvalReport> {
    let splits = split_schedule(y.n(), train_fraction, repetitions, seed)?;
    let acc = eval_splits(y.coords(), labels, &splits)?;
    Ok(EvalReport::from_accuracies(acc, train_fraction, seed))
}

/// One cell of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: String,
    pub dimension: usize,
    pub outcome: std::result::Result<EvalReport, String>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// MvL²E optimization trace per swept dimension (when MvL²E is enabled).
    pub traces: Vec<(usize, OptimizationTrace)>,
}

impl SweepTable {
    pub fn get(&self, method: &str, dimension: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.method == method && r.dimension == dimension)
    }
}

/// Evaluates every fitted embedding plus the best-of groups (BLLE/BLE).
pub fn evaluate_fits(fits: &MethodFits, labels: &[usize], cfg: &PipelineConfig) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = fits
        .cells
        .iter()
        .map(|c| SweepRow {
            method: c.method.clone(),
            dimension: c.dimension,
            outcome: c.embedding.as_ref().map_err(Clone::clone).and_then(|y| {
                split_eval(y, labels, cfg.train_fraction, cfg.repetitions, cfg.seed).map_err(|e| e.to_string())
            }),
        })
        .collect();
    for group in &fits.groups {
        let best = rows
            .iter()
            .filter(|r| group.members.contains(&r.method))
            .filter_map(|r| r.outcome.as_ref().ok().map(|rep| (r.dimension, rep)))
            .fold(None::<(usize, &EvalReport)>, |acc, cur| match acc {
                Some(a) if a.1.mean_accuracy >= cur.1.mean_accuracy => Some(a),
                _ => Some(cur),
            });
        let row = match best {
            Some((dimension, rep)) => SweepRow {
                method: group.name.clone(),
                dimension,
                outcome: Ok(rep.clone()),
            },
            None => SweepRow {
                method: group.name.clone(),
                dimension: group.dimension,
                outcome: Err("no member view succeeded".into()),
            },
        };
        rows.push(row);
    }
    rows
}

/// Fits and evaluates the configured methods at each dimension in `dims`.
/// All cells share `cfg.seed`, so every method sees the same splits.
pub fn dimension_sweep(ds: &MultiViewDataset, dims: &[usize], cfg: &PipelineConfig) -> Result<SweepTable> {
    if dims.is_empty() {
        return Err(Error::InvalidInput("dimension sweep needs at least one dimension".into()));
    }
    let labels = ds.label_codes();
    let mut table = SweepTable::default();
    for &d in dims {
        let cell_cfg = cfg.at_dimension(d);
        let fits = fit_methods(ds, &cell_cfg);
        table.rows.extend(evaluate_fits(&fits, &labels, &cell_cfg));
        if let Some(trace) = fits.trace {
            table.traces.push((d, trace));
        }
    }
    Ok(table)
}

/// One row of the γ-sensitivity table.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRow {
    pub gamma: f64,
    pub dimension: usize,
    pub outcome: std::result::Result<EvalReport, String>,
}

/// MvL²E centroid accuracy for each trade-off value in `gammas`, at the
/// configured dimensions.
pub fn gamma_sweep(ds: &MultiViewDataset, gammas: &[f64], cfg: &PipelineConfig) -> Result<Vec<GammaRow>> {
    let labels = ds.label_codes();
    let views = ds.matrices();
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let mut params = cfg.mvl2e_params(ds.m())?;
        params.gamma = gamma;
        let outcome = multiview::fit(&views, &params)
            .and_then(|fit| split_eval(&fit.state.centroid, &labels, cfg.train_fraction, cfg.repetitions, cfg.seed))
            .map_err(|e| format!("mvl2e fit at gamma={gamma}: {e}"));
        rows.push(GammaRow {
            gamma,
            dimension: params.d_star,
            outcome,
        });
    }
    Ok(rows)
}
