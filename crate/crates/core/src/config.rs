//! Experiment configuration: a flat TOML file whose keys mirror [`PipelineConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiview::Mvl2eParams;

/// Comparison methods that can be switched on next to MvL²E.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Per-view classical LLE plus the best view by mean accuracy.
    Blle,
    /// Per-view normalized spectral embedding plus the best view.
    Ble,
    /// LLE on the row-wise concatenation of all views.
    Clle,
    /// Co-regularized multi-view spectral embedding.
    Coreg,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [Baseline::Blle, Baseline::Ble, Baseline::Clle, Baseline::Coreg];

    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::Blle => "blle",
            Baseline::Ble => "ble",
            Baseline::Clle => "clle",
            Baseline::Coreg => "coreg",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown baseline {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Manifest path, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    pub k: usize,
    pub reg: f64,
    pub mu: f64,
    pub gamma: f64,
    /// Per-view target dimensions; empty means "use `d_star` for every view".
    pub d_views: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_star: Option<usize>,
    pub tol: f64,
    pub max_iters: usize,
    pub train_fraction: f64,
    pub repetitions: usize,
    pub seed: u64,
    /// Fit and report the MvL²E centroid (and, with `l2e_views`, its view embeddings).
    pub mvl2e: bool,
    /// Also report original per-view L²E and the in-framework view embeddings.
    pub l2e_views: bool,
    pub baselines: Vec<Baseline>,
    pub coreg_lambda: f64,
    pub restarts: usize,
    /// Dimension sweep; each entry sets every view dimension and `d_star`.
    pub dims: Vec<usize>,
    /// Trade-off values for the γ-sensitivity sweep.
    pub gammas: Vec<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            k: 10,
            reg: 1e-3,
            mu: 0.05,
            gamma: 0.8,
            d_views: Vec::new(),
            d_star: None,
            tol: 1e-6,
            max_iters: 100,
            train_fraction: 0.8,
            repetitions: 30,
            seed: 0,
            mvl2e: true,
            l2e_views: true,
            baselines: Vec::new(),
            coreg_lambda: 0.1,
            restarts: 0,
            dims: Vec::new(),
            gammas: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::NotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let Some(ds) = &cfg.dataset {
            if ds.is_relative() {
                cfg.dataset = Some(path.parent().unwrap_or(Path::new("")).join(ds));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every numeric field against the preconditions of the operation it feeds.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.k < 1 {
            return fail("k must be >= 1".into());
        }
        if !(self.reg >= 0.0 && self.reg.is_finite()) {
            return fail(format!("reg must be finite and >= 0, got {}", self.reg));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return fail(format!("mu must be finite and >= 0, got {}", self.mu));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return fail(format!("gamma must be finite and > 0, got {}", self.gamma));
        }
        if self.d_views.contains(&0) || self.d_star == Some(0) || self.dims.contains(&0) {
            return fail("dimensions must be >= 1".into());
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return fail("tol must be > 0 and max_iters >= 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!("train_fraction must be in (0, 1), got {}", self.train_fraction));
        }
        if self.repetitions == 0 {
            return fail("repetitions must be >= 1".into());
        }
        if !(self.coreg_lambda >= 0.0 && self.coreg_lambda.is_finite()) {
            return fail("coreg_lambda must be finite and >= 0".into());
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return fail(format!("gamma sweep values must be > 0, got {g}"));
        }
        Ok(())
    }

    /// Per-view dimensions and `d_star` for `m` views. `d_star` falls back to
    /// the common view dimension; unequal view dimensions need it explicitly.
    pub fn resolve_dims(&self, m: usize) -> Result<(Vec<usize>, usize)> {
        match (self.d_views.as_slice(), self.d_star) {
            ([], Some(d)) => Ok((vec![d; m], d)),
            ([], None) => match self.dims.first() {
                Some(&d) => Ok((vec![d; m], d)),
                None => Err(Error::Config("no embedding dimension: set d_star, d_views or dims".into())),
            },
            ([d], star) if m > 1 => Ok((vec![*d; m], star.unwrap_or(*d))),
            (dv, _) if dv.len() != m => Err(Error::Config(format!(
                "d_views has {} entries for {m} views",
                dv.len()
            ))),
            (dv, Some(d)) => Ok((dv.to_vec(), d)),
            (dv, None) => {
                if dv.iter().all(|&d| d == dv[0]) {
                    Ok((dv.to_vec(), dv[0]))
                } else {
                    Err(Error::Config(
                        "d_views differ across views; d_star must be given explicitly".into(),
                    ))
                }
            }
        }
    }

    /// Copy with every view dimension and `d_star` set to `d`.
    pub fn at_dimension(&self, d: usize) -> Self {
        Self {
            d_views: Vec::new(),
            d_star: Some(d),
            ..self.clone()
        }
    }

    pub fn mvl2e_params(&self, m: usize) -> Result<Mvl2eParams> {
        let (d_views, d_star) = self.resolve_dims(m)?;
        Ok(Mvl2eParams {
            k: self.k,
            reg: self.reg,
            mu: self.mu,
            gamma: self.gamma,
            d_views,
            d_star,
            tol: self.tol,
            max_iters: self.max_iters,
            restarts: self.restarts,
            seed: self.seed,
        })
    }
}
