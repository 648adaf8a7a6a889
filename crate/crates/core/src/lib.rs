//! Locality low-rank embedding (L²E) and its centroid-based multi-view
//! extension (MvL²E) for unsupervised dimension reduction, with the usual
//! single- and multi-view baselines and a 1NN evaluation harness.
//!
//! Data matrices are `D x N` with one sample per column; embeddings are
//! `d x N` with orthonormal rows.

// `!(x >= 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod embed;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod methods;
pub mod multiview;
pub mod numerics;

pub use config::{Baseline, PipelineConfig};
pub use data::{load_manifest, save_dataset, synth_multiview, Manifold, MultiViewDataset, SynthSpec, View};
pub use embed::{
    clle_embed, embed_from_weights, gaussian_similarity, l2e_embed, lle_embed, reconstruction_cost,
    spectral_embed, Embedding,
};
pub use error::{Error, Result};
pub use eval::{dimension_sweep, gamma_sweep, knn1_classify, split_eval, EvalReport};
pub use experiment::run_experiment;
pub use graph::{
    assemble_weight_matrix, knn_dictionary, local_codes, low_rank_refine, LocalCodes, NeighborDictionary,
    WeightMatrix,
};
pub use multiview::{
    agreement, coregularized_fit, mv_objective, update_centroid, update_view, MvState, Mvl2eFit, Mvl2eParams,
    OptimizationTrace,
};
pub use numerics::{svd, svt, sym_eig, DenseMatrix, EigenSelection, Spectrum};

/// Fits MvL²E on a dataset with the given configuration.
pub fn mvl2e_fit(dataset: &MultiViewDataset, cfg: &PipelineConfig) -> Result<Mvl2eFit> {
    let params = cfg.mvl2e_params(dataset.m())?;
    multiview::fit(&dataset.matrices(), &params)
}
