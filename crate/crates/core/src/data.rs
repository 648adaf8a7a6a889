//! Multi-view datasets: validation, the manifest/CSV on-disk layout, and a
//! seeded synthetic generator.
//!
//! On disk every view is a comma-separated table with a header row and one
//! sample per row. In memory a view is `D x N` (samples as columns), so the
//! loaders transpose.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{random_orthonormal_rows, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub name: String,
    /// `D x N`.
    pub data: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    name: String,
    views: Vec<View>,
    labels: Vec<String>,
}

impl MultiViewDataset {
    pub fn new(name: impl Into<String>, views: Vec<View>, labels: Vec<String>) -> Result<Self> {
        let first = views
            .first()
            .ok_or_else(|| Error::InvalidInput("a dataset needs at least one view".into()))?;
        let n = first.data.ncols();
        for v in &views {
            if v.data.ncols() != n {
                return Err(Error::Alignment {
                    view: v.name.clone(),
                    rows: v.data.ncols(),
                    expected: n,
                });
            }
            if v.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("view {} has non-finite entries", v.name)));
            }
        }
        if labels.len() != n {
            return Err(Error::Alignment {
                view: "labels".into(),
                rows: labels.len(),
                expected: n,
            });
        }
        for (i, v) in views.iter().enumerate() {
            if views[..i].iter().any(|o| o.name == v.name) {
                return Err(Error::InvalidInput(format!("duplicate view name {}", v.name)));
            }
        }
        Ok(Self {
            name: name.into(),
            views,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn m(&self) -> usize {
        self.views.len()
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    pub fn matrices(&self) -> Vec<&DenseMatrix> {
        self.views.iter().map(|v| &v.data).collect()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Labels mapped to dense class ids in order of first appearance.
    pub fn label_codes(&self) -> Vec<usize> {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        self.labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.as_str()).or_insert(next)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    Linear,
    SwissRoll,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    pub latent_dim: usize,
    pub view_dims: Vec<usize>,
    pub noise_sigmas: Vec<f64>,
    pub manifold: Manifold,
    pub seed: u64,
    /// Reuse the first view's map for every view (requires equal view dims).
    #[serde(default)]
    pub shared_map: bool,
}

impl SynthSpec {
    /// The reference two-view benchmark: 200 samples of a 4-dimensional
    /// linear latent space seen through two 50-dimensional views with noise 0.1.
    pub fn standard_two_view(seed: u64) -> Self {
        Self {
            n: 200,
            latent_dim: 4,
            view_dims: vec![50, 50],
            noise_sigmas: vec![0.1, 0.1],
            manifold: Manifold::Linear,
            seed,
            shared_map: false,
        }
    }

    /// Reads a TOML spec file and validates it.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::NotFound(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: Self = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::contract("synth_multiview", msg));
        if self.n < 10 {
            return bad(format!("n must be >= 10, got {}", self.n));
        }
        if self.view_dims.is_empty() || self.view_dims.len() != self.noise_sigmas.len() {
            return bad("view_dims and noise_sigmas must be nonempty and equal in length".into());
        }
        if self.latent_dim == 0 || self.latent_dim > *self.view_dims.iter().min().unwrap() {
            return bad(format!(
                "latent_dim {} must be in 1..=min(view_dims)",
                self.latent_dim
            ));
        }
        if self.manifold == Manifold::SwissRoll && self.latent_dim < 3 {
            return bad("swiss_roll needs latent_dim >= 3".into());
        }
        if self.noise_sigmas.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return bad("noise sigmas must be finite and >= 0".into());
        }
        if self.shared_map && self.view_dims.iter().any(|&d| d != self.view_dims[0]) {
            return bad("shared_map needs identical view dims".into());
        }
        Ok(())
    }
}

/// Latent points (`latent_dim x n`) and their class labels.
fn sample_latent(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> (DenseMatrix, Vec<String>) {
    let mut z = DenseMatrix::zeros(spec.latent_dim, spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let label = match spec.manifold {
            Manifold::Linear => {
                for r in 0..spec.latent_dim {
                    z[(r, i)] = rng.random_range(-1.0..1.0);
                }
                // quadrant of the first two latent coordinates
                let hi = z[(0, i)] >= 0.0;
                if spec.latent_dim == 1 {
                    usize::from(hi)
                } else {
                    usize::from(hi) + 2 * usize::from(z[(1, i)] >= 0.0)
                }
            }
            Manifold::SwissRoll => {
                let u: f64 = rng.random_range(0.0..1.0);
                let t = 1.5 * std::f64::consts::PI * (1.0 + 2.0 * u);
                z[(0, i)] = t * t.cos();
                z[(1, i)] = 21.0 * rng.random_range(0.0..1.0);
                z[(2, i)] = t * t.sin();
                for r in 3..spec.latent_dim {
                    z[(r, i)] = rng.random_range(-1.0..1.0);
                }
                // four equal arc segments
                ((u * 4.0) as usize).min(3)
            }
        };
        labels.push(label.to_string());
    }
    (z, labels)
}

/// Seeded synthetic multi-view data: shared latent points pushed through a
/// random orthonormal-column map per view, plus isotropic Gaussian noise.
pub fn synth_multiview(spec: &SynthSpec) -> Result<MultiViewDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (latent, labels) = sample_latent(spec, &mut rng);

    let mut shared: Option<DenseMatrix> = None;
    let mut views = Vec::with_capacity(spec.view_dims.len());
    for (v, (&dim, &sigma)) in spec.view_dims.iter().zip(&spec.noise_sigmas).enumerate() {
        let map = match (&shared, spec.shared_map) {
            (Some(m), true) => m.clone(),
            _ => {
                let m = random_orthonormal_rows(spec.latent_dim, dim, &mut rng).transpose();
                if spec.shared_map {
                    shared = Some(m.clone());
                }
                m
            }
        };
        let mut data = &map * &latent;
        if sigma > 0.0 {
            let noise = Normal::new(0.0, sigma).expect("sigma validated");
            data.iter_mut().for_each(|x| *x += noise.sample(&mut rng));
        }
        views.push(View {
            name: format!("view{}", v + 1),
            data,
        });
    }
    let name = match spec.manifold {
        Manifold::Linear => "synthetic-linear",
        Manifold::SwissRoll => "synthetic-swiss-roll",
    };
    MultiViewDataset::new(name, views, labels)
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        path: path.to_path_buf(),
        row,
        col: 0,
        msg: e.to_string(),
    }
}

/// Reads a samples-as-rows numeric table and returns it as `D x N`.
pub fn read_view_table(path: &Path) -> Result<DenseMatrix> {
    let mut rdr = open_csv(path)?;
    let width = rdr.headers().map_err(|e| csv_error(path, e))?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(rows + 2);
        if rec.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: line,
                col: rec.len() + 1,
                msg: format!("expected {width} columns, found {}", rec.len()),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: line,
                col: c + 1,
                msg: format!("non-numeric cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    col: c + 1,
                    msg: format!("non-finite value {cell:?}"),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 || width == 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row: 1,
            col: 1,
            msg: "table has no data".into(),
        });
    }
    // rows are samples
    Ok(DenseMatrix::from_row_slice(rows, width, &values).transpose())
}

/// Writes a `D x N` matrix as a samples-as-rows table with header `<prefix>0,<prefix>1,...`.
pub fn format_table(m: &DenseMatrix, prefix: &str) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..m.nrows()).map(|r| format!("{prefix}{r}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for col in m.column_iter() {
        let cells: Vec<String> = col.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn read_labels(path: &Path) -> Result<Vec<String>> {
    let mut rdr = open_csv(path)?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            rec.get(0).map(str::to_string).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                row: rec.position().map(|p| p.line() as usize).unwrap_or(0),
                col: 1,
                msg: "empty label row".into(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub name: String,
    pub labels: PathBuf,
    pub views: Vec<(String, PathBuf)>,
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    if v.len() >= 2 && ((v.starts_with('"') && v.ends_with('"')) || (v.starts_with('\'') && v.ends_with('\''))) {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

/// Parses `key = value` lines: `dataset.name`, `labels`, and one `view.<name>`
/// per view (in file order). Relative paths resolve against `base`.
pub fn parse_manifest(text: &str, path: &Path) -> Result<Manifest> {
    let base = path.parent().unwrap_or(Path::new(""));
    let mut name = None;
    let mut labels = None;
    let mut views: Vec<(String, PathBuf)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            row: lineno + 1,
            col: 1,
            msg,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected `key = value`, got {line:?}")))?;
        let (key, value) = (key.trim(), unquote(value));
        match key {
            "dataset.name" => name = Some(value.to_string()),
            "labels" => labels = Some(base.join(value)),
            k if k.starts_with("view.") && k.len() > 5 => {
                let view = k[5..].to_string();
                if views.iter().any(|(v, _)| *v == view) {
                    return Err(parse_err(format!("view {view} declared twice")));
                }
                views.push((view, base.join(value)));
            }
            other => return Err(parse_err(format!("unknown manifest key {other:?}"))),
        }
    }
    let missing = |what: &str| Error::Parse {
        path: path.to_path_buf(),
        row: 0,
        col: 0,
        msg: format!("manifest is missing {what}"),
    };
    if views.is_empty() {
        return Err(missing("view.<name> entries"));
    }
    Ok(Manifest {
        name: name.ok_or_else(|| missing("dataset.name"))?,
        labels: labels.ok_or_else(|| missing("labels"))?,
        views,
    })
}

pub fn load_manifest(path: &Path) -> Result<MultiViewDataset> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest = parse_manifest(&text, path)?;

    let mut views = Vec::with_capacity(manifest.views.len());
    let mut expected: Option<(String, usize)> = None;
    for (name, file) in &manifest.views {
        let data = read_view_table(file)?;
        match &expected {
            None => expected = Some((name.clone(), data.ncols())),
            Some((_, n)) if data.ncols() != *n => {
                return Err(Error::Alignment {
                    view: name.clone(),
                    rows: data.ncols(),
                    expected: *n,
                })
            }
            _ => {}
        }
        views.push(View {
            name: name.clone(),
            data,
        });
    }
    let labels = read_labels(&manifest.labels)?;
    MultiViewDataset::new(manifest.name, views, labels)
}

/// Writes `manifest.txt`, `labels.csv` and one `<view>.csv` per view into
/// `dir`; returns the manifest path.
pub fn save_dataset(ds: &MultiViewDataset, dir: &Path) -> Result<PathBuf> {
    let mut manifest = format!("dataset.name = {}\nlabels = labels.csv\n", ds.name());
    for v in ds.views() {
        let file = format!("{}.csv", v.name);
        write_atomic(&dir.join(&file), format_table(&v.data, "f").as_bytes())?;
        manifest.push_str(&format!("view.{} = {file}\n", v.name));
    }
    let mut labels = String::from("label\n");
    for l in ds.labels() {
        labels.push_str(l);
        labels.push('\n');
    }
    write_atomic(&dir.join("labels.csv"), labels.as_bytes())?;
    let path = dir.join("manifest.txt");
    write_atomic(&path, manifest.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SynthSpec {
        SynthSpec {
            n: 40,
            latent_dim: 2,
            view_dims: vec![5, 5],
            noise_sigmas: vec![0.0, 0.0],
            manifold: Manifold::Linear,
            seed: 3,
            shared_map: true,
        }
    }

    #[test]
    fn shared_map_without_noise_gives_identical_views() {
        let ds = synth_multiview(&spec()).unwrap();
        assert_eq!(ds.views()[0].data, ds.views()[1].data);
    }

    #[test]
    fn synth_is_seed_deterministic() {
        let mut s = spec();
        s.shared_map = false;
        s.noise_sigmas = vec![0.1, 0.3];
        assert_eq!(synth_multiview(&s).unwrap(), synth_multiview(&s).unwrap());
        let mut other = s.clone();
        other.seed = 4;
        assert_ne!(synth_multiview(&s).unwrap(), synth_multiview(&other).unwrap());
    }

    #[test]
    fn swiss_roll_shapes_and_labels() {
        let s = SynthSpec {
            n: 60,
            latent_dim: 3,
            view_dims: vec![6, 4],
            noise_sigmas: vec![0.05, 0.05],
            manifold: Manifold::SwissRoll,
            seed: 9,
            shared_map: false,
        };
        let ds = synth_multiview(&s).unwrap();
        assert_eq!(ds.views()[0].data.shape(), (6, 60));
        assert_eq!(ds.views()[1].data.shape(), (4, 60));
        assert!(ds.label_codes().iter().all(|&c| c < 4));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = spec();
        s.n = 5;
        assert!(synth_multiview(&s).is_err());
        let mut s = spec();
        s.latent_dim = 6;
        assert!(synth_multiview(&s).is_err());
        let mut s = spec();
        s.view_dims = vec![5, 6];
        assert!(synth_multiview(&s).is_err());
        let mut s = spec();
        s.manifold = Manifold::SwissRoll;
        assert!(synth_multiview(&s).is_err());
    }

    #[test]
    fn manifest_parsing() {
        let text = "# demo\ndataset.name = \"demo\"\nlabels = y.csv\nview.a = a.csv\nview.b = 'b.csv'\n";
        let m = parse_manifest(text, Path::new("/data/m.txt")).unwrap();
        assert_eq!(m.name, "demo");
        assert_eq!(m.labels, PathBuf::from("/data/y.csv"));
        assert_eq!(
            m.views,
            vec![
                ("a".to_string(), PathBuf::from("/data/a.csv")),
                ("b".to_string(), PathBuf::from("/data/b.csv"))
            ]
        );
        assert!(parse_manifest("labels = y.csv\nview.a = a.csv\n", Path::new("m")).is_err());
        assert!(parse_manifest("dataset.name = x\nlabels = y\nfoo = 1\n", Path::new("m")).is_err());
    }

    #[test]
    fn label_codes_first_appearance() {
        let v = View {
            name: "a".into(),
            data: DenseMatrix::zeros(1, 4),
        };
        let ds = MultiViewDataset::new("x", vec![v], vec!["b".into(), "a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(ds.label_codes(), vec![0, 1, 0, 2]);
    }
}
