//! JSON problem-file schemas and their conversion into core types.

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

use kkm_core::cutting::{Box2, BoxFamily};
use kkm_core::measure::GridDensity;

/// Piecewise-constant density on a `kx x ky` grid of equal cells.
/// Values are auto-normalized to total mass 1.
#[derive(Debug, Deserialize)]
pub struct DensityFile {
    pub kx: usize,
    pub ky: usize,
    pub values: Vec<f64>,
}

/// A family of planar sets, open or compact, reduced to axis-parallel
/// boxes (polygons contribute their bounding projections).
#[derive(Debug, Deserialize)]
pub struct FamilyFile {
    pub open: bool,
    pub sets: Vec<SetEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetEntry {
    /// `[x_lo, x_hi, y_lo, y_hi]`
    Box([f64; 4]),
    /// Vertices of a simple polygon; only the bounding box matters for
    /// axis-parallel line cuts.
    Polygon(Vec<[f64; 2]>),
}

/// Tabulated scores on a barycentric lattice. For product fields each
/// `"i,j"` array is x-major over pairs of lattice points; for per-column
/// simplex coverings it runs over the row simplex's lattice alone.
#[derive(Debug, Deserialize)]
pub struct ScoreFile {
    pub n: usize,
    pub m: usize,
    pub lattice_resolution: u32,
    pub values: BTreeMap<String, Vec<f64>>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid", path.display()))
}

pub fn load_density(path: &Path) -> Result<GridDensity> {
    let file: DensityFile = read_json(path)?;
    if file.values.iter().any(|v| !v.is_finite()) {
        bail!("{}: density values must be finite", path.display());
    }
    let (density, total) = GridDensity::normalized(file.kx, file.ky, file.values)?;
    if (total - 1.0).abs() > 1e-6 {
        eprintln!("warning: density mass {total} was normalized to 1");
    }
    Ok(density)
}

pub fn load_family(path: &Path) -> Result<BoxFamily> {
    let file: FamilyFile = read_json(path)?;
    let mut boxes = Vec::with_capacity(file.sets.len());
    for (k, entry) in file.sets.iter().enumerate() {
        let (x_lo, x_hi, y_lo, y_hi) = match entry {
            SetEntry::Box(b) => (b[0], b[1], b[2], b[3]),
            SetEntry::Polygon(vertices) => {
                if vertices.is_empty() {
                    bail!("{}: set {k} is an empty polygon", path.display());
                }
                let xs = vertices.iter().map(|v| v[0]);
                let ys = vertices.iter().map(|v| v[1]);
                (
                    xs.clone().fold(f64::INFINITY, f64::min),
                    xs.fold(f64::NEG_INFINITY, f64::max),
                    ys.clone().fold(f64::INFINITY, f64::min),
                    ys.fold(f64::NEG_INFINITY, f64::max),
                )
            }
        };
        boxes.push(
            Box2::new(x_lo, x_hi, y_lo, y_hi)
                .with_context(|| format!("{}: set {k}", path.display()))?,
        );
    }
    let family = if file.open {
        BoxFamily::open(boxes)?
    } else {
        BoxFamily::closed(boxes)?
    };
    Ok(family)
}

pub fn load_scores(path: &Path) -> Result<ScoreFile> {
    let file: ScoreFile = read_json(path)?;
    if file.n == 0 || file.m == 0 {
        bail!("{}: n and m must be positive", path.display());
    }
    if file.lattice_resolution == 0 {
        bail!("{}: lattice_resolution must be positive", path.display());
    }
    for (key, values) in &file.values {
        if values.iter().any(|v| !v.is_finite()) {
            bail!("{}: values for {key} must be finite", path.display());
        }
    }
    Ok(file)
}

/// The `"i,j"` table for one covering set, checked for presence and length.
pub fn set_values(
    file: &ScoreFile,
    i: usize,
    j: usize,
    expected_len: usize,
) -> Result<&[f64]> {
    let key = format!("{i},{j}");
    let values = file
        .values
        .get(&key)
        .with_context(|| format!("score file is missing values for \"{key}\""))?;
    if values.len() != expected_len {
        bail!(
            "values for \"{key}\" hold {} entries, expected {expected_len}",
            values.len()
        );
    }
    Ok(values)
}
