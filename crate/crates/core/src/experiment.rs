//! End-to-end runs driven by a config file, and the result files they write.
//!
//! Every result file starts with the fully resolved configuration as `# `
//! comment lines, followed by a CSV header and one row per record. Floats are
//! written in shortest round-trip form, so reading a file back reproduces the
//! in-memory values exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::PipelineConfig;
use crate::data::{format_table, load_manifest, write_atomic, MultiViewDataset};
use crate::error::{Error, Result, ResultExt};
use crate::eval::{dimension_sweep, gamma_sweep, GammaRow, SweepRow, SweepTable};
use crate::multiview::{self, OptimizationTrace};

pub const RESULTS_FILE: &str = "results.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const TRACE_DIAGNOSTICS_FILE: &str = "trace_diagnostics.csv";
pub const GAMMA_SWEEP_FILE: &str = "gamma_sweep.csv";

pub const RESULTS_HEADER: &str = "method,dimension,mean_accuracy,max_accuracy";
pub const TRACE_HEADER: &str = "iteration,objective";
pub const GAMMA_HEADER: &str = "gamma,dimension,mean_accuracy,max_accuracy";

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// A config with its dataset loaded and all dimensions resolved.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: PipelineConfig,
    pub dataset: MultiViewDataset,
}

pub fn prepare(config_path: &Path, overrides: &Overrides) -> Result<Prepared> {
    let mut config = PipelineConfig::load(config_path)?;
    if let Some(ds) = &overrides.dataset {
        config.dataset = Some(ds.clone());
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    let manifest = config
        .dataset
        .clone()
        .ok_or_else(|| Error::Config("no dataset: set `dataset` in the config or pass --dataset".into()))?;
    let dataset = load_manifest(&manifest).context(|| format!("loading dataset {}", manifest.display()))?;
    let (d_views, d_star) = config.resolve_dims(dataset.m())?;
    config.d_views = d_views;
    config.d_star = Some(d_star);
    Ok(Prepared { config, dataset })
}

fn config_preamble(cfg: &PipelineConfig) -> String {
    let mut out = String::new();
    for line in cfg.to_toml_string().lines() {
        let _ = writeln!(out, "# {line}");
    }
    // a bare `#` closes the config block; later comments are file metadata
    out.push_str("#\n");
    out
}

/// Recovers the configuration embedded in a result file's comment preamble.
pub fn read_embedded_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let body: String = text
        .lines()
        .take_while(|l| l.starts_with('#') && l.trim_end() != "#")
        .map(|l| l.strip_prefix("# ").unwrap_or(&l[1..]))
        .collect::<Vec<_>>()
        .join("\n");
    PipelineConfig::from_toml_str(&body)
}

/// Row-level view of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub method: String,
    pub dimension: usize,
    pub mean_accuracy: f64,
    pub max_accuracy: f64,
}

pub fn format_results(cfg: &PipelineConfig, rows: &[SweepRow]) -> String {
    let mut out = config_preamble(cfg);
    for r in rows {
        if let Err(e) = &r.outcome {
            let _ = writeln!(out, "# error method={} dimension={}: {}", r.method, r.dimension, e.replace('\n', " "));
        }
    }
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        if let Ok(rep) = &r.outcome {
            let _ = writeln!(out, "{},{},{},{}", r.method, r.dimension, rep.mean_accuracy, rep.max_accuracy);
        }
    }
    out
}

pub fn format_trace(cfg: &PipelineConfig, trace: &OptimizationTrace) -> String {
    let mut out = config_preamble(cfg);
    let _ = writeln!(out, "# iterations = {}", trace.iterations);
    let _ = writeln!(out, "# converged = {}", trace.converged);
    let _ = writeln!(out, "# rel_change_at_stop = {}", trace.rel_change_at_stop);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (i, f) in trace.objective_values.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, f);
    }
    out
}

fn format_trace_diagnostics(cfg: &PipelineConfig, trace: &OptimizationTrace) -> String {
    let mut out = config_preamble(cfg);
    out.push_str("iteration,centroid_shift\n");
    for (i, s) in trace.centroid_shift.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, s);
    }
    out
}

pub fn format_gamma_sweep(cfg: &PipelineConfig, rows: &[GammaRow]) -> String {
    let mut out = config_preamble(cfg);
    for r in rows {
        if let Err(e) = &r.outcome {
            let _ = writeln!(out, "# error gamma={}: {}", r.gamma, e.replace('\n', " "));
        }
    }
    out.push_str(GAMMA_HEADER);
    out.push('\n');
    for r in rows {
        if let Ok(rep) = &r.outcome {
            let _ = writeln!(out, "{},{},{},{}", r.gamma, r.dimension, rep.mean_accuracy, rep.max_accuracy);
        }
    }
    out
}

fn data_lines(path: &Path, expected_header: &str) -> Result<Vec<(usize, Vec<String>)>> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == expected_header => {}
        other => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: other.map(|(i, _)| i + 1).unwrap_or(0),
                col: 1,
                msg: format!("expected header {expected_header:?}"),
            })
        }
    }
    Ok(lines
        .map(|(i, l)| (i + 1, l.split(',').map(|c| c.trim().to_string()).collect()))
        .collect())
}

fn parse_cell<T: std::str::FromStr>(path: &Path, row: usize, col: usize, cell: Option<&String>) -> Result<T> {
    cell.and_then(|c| c.parse().ok()).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        row,
        col,
        msg: format!("bad or missing value {:?}", cell),
    })
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    data_lines(path, RESULTS_HEADER)?
        .into_iter()
        .map(|(row, cells)| {
            Ok(ResultRecord {
                method: parse_cell(path, row, 1, cells.first())?,
                dimension: parse_cell(path, row, 2, cells.get(1))?,
                mean_accuracy: parse_cell(path, row, 3, cells.get(2))?,
                max_accuracy: parse_cell(path, row, 4, cells.get(3))?,
            })
        })
        .collect()
}

pub fn read_trace(path: &Path) -> Result<Vec<(usize, f64)>> {
    data_lines(path, TRACE_HEADER)?
        .into_iter()
        .map(|(row, cells)| Ok((parse_cell(path, row, 1, cells.first())?, parse_cell(path, row, 2, cells.get(1))?)))
        .collect()
}

pub fn read_gamma_sweep(path: &Path) -> Result<Vec<(f64, usize, f64, f64)>> {
    data_lines(path, GAMMA_HEADER)?
        .into_iter()
        .map(|(row, c)| {
            Ok((
                parse_cell(path, row, 1, c.first())?,
                parse_cell(path, row, 2, c.get(1))?,
                parse_cell(path, row, 3, c.get(2))?,
                parse_cell(path, row, 4, c.get(3))?,
            ))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub table: SweepTable,
    pub gamma_rows: Vec<GammaRow>,
    pub config: PipelineConfig,
}

fn write(out_dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = out_dir.join(name);
    write_atomic(&path, contents.as_bytes())?;
    files.push(path);
    Ok(())
}

fn write_table(out_dir: &Path, cfg: &PipelineConfig, table: &SweepTable, files: &mut Vec<PathBuf>) -> Result<()> {
    write(out_dir, RESULTS_FILE, &format_results(cfg, &table.rows), files)?;
    if let Some((_, trace)) = table.traces.first() {
        write(out_dir, TRACE_FILE, &format_trace(cfg, trace), files)?;
        write(out_dir, TRACE_DIAGNOSTICS_FILE, &format_trace_diagnostics(cfg, trace), files)?;
    }
    Ok(())
}

/// Dimensions a run evaluates: the sweep list, or the resolved `d_star`.
fn run_dims(cfg: &PipelineConfig) -> Vec<usize> {
    if cfg.dims.is_empty() {
        cfg.d_star.into_iter().collect()
    } else {
        cfg.dims.clone()
    }
}

/// Evaluates at the resolved dimensions only (no sweep).
fn single_dimension_table(p: &Prepared) -> Result<SweepTable> {
    let labels = p.dataset.label_codes();
    let fits = crate::methods::fit_methods(&p.dataset, &p.config);
    let rows = crate::eval::evaluate_fits(&fits, &labels, &p.config);
    Ok(SweepTable {
        rows,
        traces: fits.trace.map(|t| vec![(p.config.d_star.unwrap_or(0), t)]).unwrap_or_default(),
    })
}

/// Full experiment: dimension sweep (or single dimension) over all enabled
/// methods, the MvL²E objective trace, and the γ sweep when `gammas` is set.
pub fn run_experiment(config_path: &Path, overrides: &Overrides, out_dir: &Path) -> Result<RunSummary> {
    let p = prepare(config_path, overrides)?;
    let table = if p.config.dims.is_empty() {
        single_dimension_table(&p)?
    } else {
        dimension_sweep(&p.dataset, &run_dims(&p.config), &p.config)?
    };
    let mut files = Vec::new();
    write_table(out_dir, &p.config, &table, &mut files)?;
    let gamma_rows = if p.config.gammas.is_empty() {
        Vec::new()
    } else {
        let rows = gamma_sweep(&p.dataset, &p.config.gammas, &p.config)?;
        write(out_dir, GAMMA_SWEEP_FILE, &format_gamma_sweep(&p.config, &rows), &mut files)?;
        rows
    };
    Ok(RunSummary {
        files,
        table,
        gamma_rows,
        config: p.config,
    })
}

/// `eval`: all enabled methods at the configured dimension.
pub fn run_eval(config_path: &Path, overrides: &Overrides, out_dir: &Path) -> Result<RunSummary> {
    let p = prepare(config_path, overrides)?;
    let table = single_dimension_table(&p)?;
    let mut files = Vec::new();
    write_table(out_dir, &p.config, &table, &mut files)?;
    Ok(RunSummary {
        files,
        table,
        gamma_rows: Vec::new(),
        config: p.config,
    })
}

/// `sweep`: all enabled methods over `dims`.
pub fn run_sweep(config_path: &Path, overrides: &Overrides, out_dir: &Path) -> Result<RunSummary> {
    let p = prepare(config_path, overrides)?;
    if p.config.dims.is_empty() {
        return Err(Error::Config("sweep needs a nonempty `dims` list".into()));
    }
    let table = dimension_sweep(&p.dataset, &p.config.dims, &p.config)?;
    let mut files = Vec::new();
    write_table(out_dir, &p.config, &table, &mut files)?;
    Ok(RunSummary {
        files,
        table,
        gamma_rows: Vec::new(),
        config: p.config,
    })
}

/// `gamma-sweep`: MvL²E centroid accuracy for each configured γ.
pub fn run_gamma_sweep(config_path: &Path, overrides: &Overrides, out_dir: &Path) -> Result<RunSummary> {
    let p = prepare(config_path, overrides)?;
    if p.config.gammas.is_empty() {
        return Err(Error::Config("gamma-sweep needs a nonempty `gammas` list".into()));
    }
    let rows = gamma_sweep(&p.dataset, &p.config.gammas, &p.config)?;
    let mut files = Vec::new();
    write(out_dir, GAMMA_SWEEP_FILE, &format_gamma_sweep(&p.config, &rows), &mut files)?;
    Ok(RunSummary {
        files,
        table: SweepTable::default(),
        gamma_rows: rows,
        config: p.config,
    })
}

/// `baselines`: only the enabled comparison methods, at each run dimension.
pub fn run_baselines(config_path: &Path, overrides: &Overrides, out_dir: &Path) -> Result<RunSummary> {
    let mut p = prepare(config_path, overrides)?;
    p.config.mvl2e = false;
    if p.config.baselines.is_empty() {
        return Err(Error::Config("no baselines enabled".into()));
    }
    let table = dimension_sweep(&p.dataset, &run_dims(&p.config), &p.config)?;
    let mut files = Vec::new();
    write_table(out_dir, &p.config, &table, &mut files)?;
    Ok(RunSummary {
        files,
        table,
        gamma_rows: Vec::new(),
        config: p.config,
    })
}

/// `embed`: fits MvL²E and writes the centroid and per-view embeddings
/// (samples as rows) plus the objective trace.
pub fn run_embed(config_path: &Path, overrides: &Overrides, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let p = prepare(config_path, overrides)?;
    let params = p.config.mvl2e_params(p.dataset.m())?;
    let fit = multiview::fit(&p.dataset.matrices(), &params).context(|| "mvl2e fit".to_string())?;
    let mut files = Vec::new();
    let preamble = config_preamble(&p.config);
    write(
        out_dir,
        "embedding_centroid.csv",
        &format!("{preamble}{}", format_table(fit.state.centroid.coords(), "y")),
        &mut files,
    )?;
    for (view, y) in p.dataset.views().iter().zip(&fit.state.views) {
        write(
            out_dir,
            &format!("embedding_{}.csv", view.name),
            &format!("{preamble}{}", format_table(y.coords(), "y")),
            &mut files,
        )?;
    }
    write(out_dir, TRACE_FILE, &format_trace(&p.config, &fit.trace), &mut files)?;
    Ok(files)
}
