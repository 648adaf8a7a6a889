//! Fits every method enabled in a [`PipelineConfig`] on one dataset.
//!
//! Method names used in result tables:
//!
//! | name           | embedding                                        |
//! |----------------|--------------------------------------------------|
//! | `mvl2e`        | MvL²E centroid                                   |
//! | `mvl2e[v]`     | view `v` after the alternating optimization      |
//! | `l2e[v]`       | original single-view L²E of view `v`             |
//! | `lle[v]`, `blle` | per-view LLE and the best of them              |
//! | `le[v]`, `ble` | per-view spectral embedding and the best of them |
//! | `clle`         | LLE on concatenated views                        |
//! | `coreg`        | consensus of co-regularized spectral embeddings  |

use crate::config::{Baseline, PipelineConfig};
use crate::data::MultiViewDataset;
use crate::embed::{clle_embed, gaussian_similarity, lle_embed, spectral_embed, Embedding};
use crate::error::Result;
use crate::multiview::{self, consensus_embedding, coregularized_fit, OptimizationTrace};

#[derive(Debug, Clone)]
pub struct MethodCell {
    pub method: String,
    pub dimension: usize,
    pub embedding: std::result::Result<Embedding, String>,
}

/// Methods reported as the best member (by mean accuracy) of a family.
#[derive(Debug, Clone)]
pub struct BestOf {
    pub name: String,
    pub dimension: usize,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct MethodFits {
    pub cells: Vec<MethodCell>,
    pub groups: Vec<BestOf>,
    pub trace: Option<OptimizationTrace>,
}

impl MethodFits {
    fn push(&mut self, method: String, dimension: usize, embedding: Result<Embedding>) {
        self.cells.push(MethodCell {
            embedding: embedding.map_err(|e| format!("{method}: {e}")),
            method,
            dimension,
        });
    }

    pub fn embedding(&self, method: &str) -> Option<&Embedding> {
        self.cells
            .iter()
            .find(|c| c.method == method)
            .and_then(|c| c.embedding.as_ref().ok())
    }
}

fn tagged(prefix: &str, view: &str) -> String {
    format!("{prefix}[{view}]")
}

/// Fits every enabled method. Failures are recorded per cell.
pub fn fit_methods(ds: &MultiViewDataset, cfg: &PipelineConfig) -> MethodFits {
    let mut out = MethodFits::default();
    let views = ds.matrices();
    let names: Vec<&str> = ds.views().iter().map(|v| v.name.as_str()).collect();
    let dims = cfg.resolve_dims(ds.m());
    let (d_views, d_star) = match dims {
        Ok(d) => d,
        Err(e) => {
            out.push("config".into(), 0, Err(e));
            return out;
        }
    };

    if cfg.mvl2e {
        match cfg.mvl2e_params(ds.m()).and_then(|p| multiview::fit(&views, &p)) {
            Ok(fit) => {
                out.push("mvl2e".into(), d_star, Ok(fit.state.centroid.clone()));
                if cfg.l2e_views {
                    for (v, name) in names.iter().enumerate() {
                        out.push(tagged("mvl2e", name), d_views[v], Ok(fit.state.views[v].clone()));
                    }
                    for (v, name) in names.iter().enumerate() {
                        out.push(tagged("l2e", name), d_views[v], Ok(fit.initial_views[v].clone()));
                    }
                }
                out.trace = Some(fit.trace);
            }
            Err(e) => {
                let msg = e.to_string();
                out.cells.push(MethodCell {
                    method: "mvl2e".into(),
                    dimension: d_star,
                    embedding: Err(format!("mvl2e: {msg}")),
                });
            }
        }
    }

    let mut baselines = cfg.baselines.clone();
    baselines.sort();
    baselines.dedup();
    for b in baselines {
        match b {
            Baseline::Blle => {
                let members = names.iter().map(|n| tagged("lle", n)).collect::<Vec<_>>();
                for (v, x) in views.iter().enumerate() {
                    out.push(members[v].clone(), d_views[v], lle_embed(x, cfg.k, cfg.reg, d_views[v]));
                }
                out.groups.push(BestOf {
                    name: "blle".into(),
                    dimension: d_star,
                    members,
                });
            }
            Baseline::Ble => {
                let members = names.iter().map(|n| tagged("le", n)).collect::<Vec<_>>();
                for (v, x) in views.iter().enumerate() {
                    let y = gaussian_similarity(x).and_then(|s| spectral_embed(&s, d_views[v]));
                    out.push(members[v].clone(), d_views[v], y);
                }
                out.groups.push(BestOf {
                    name: "ble".into(),
                    dimension: d_star,
                    members,
                });
            }
            Baseline::Clle => {
                out.push("clle".into(), d_star, clle_embed(views.iter().copied(), cfg.k, cfg.reg, d_star));
            }
            Baseline::Coreg => {
                let y = views
                    .iter()
                    .map(|x| gaussian_similarity(x))
                    .collect::<Result<Vec<_>>>()
                    .and_then(|s| coregularized_fit(&s, cfg.coreg_lambda, d_star, cfg.max_iters))
                    .and_then(|fit| consensus_embedding(&fit.embeddings, d_star));
                out.push("coreg".into(), d_star, y);
            }
        }
    }
    out
}
