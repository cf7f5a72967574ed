//! Axis-parallel measure partition of the unit square.
//!
//! Densities are piecewise constant on a `kx x ky` grid and integrate to
//! 1; rectangle masses come from a prefix-sum table with bilinear
//! handling of fractional boundary cells, so they are exact for the
//! piecewise-constant density up to float rounding. A partition candidate
//! is a pair of barycentric points (segment widths and heights); the
//! threshold score of cell `(i, j)` is the amount by which its mass
//! clears `c - eps`, which plugs the partition problem straight into the
//! covering solver.

use thiserror::Error;

use crate::matching::{Assignment, QuotaVector};
use crate::simplex::{ProductPoint, ScoreField};
use crate::solver::{solve_kkm_product, SolverError};

#[derive(Debug, Clone, Error)]
pub enum MeasureError {
    #[error("bad density grid: {0}")]
    BadGrid(String),
    #[error("density integrates to {mass}, expected 1 within 1e-9")]
    MassNotOne { mass: f64 },
    #[error("bad rectangle: {0}")]
    BadRectangle(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("re-verification failed: {0}")]
    VerificationFailed(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Piecewise-constant density on the unit square: cell `(ix, iy)` spans
/// `[ix/kx, (ix+1)/kx) x [iy/ky, (iy+1)/ky)` and carries density value
/// `values[iy * kx + ix]` (row-major, rows bottom to top). The mean of
/// the values must be 1 so the total mass is 1.
#[derive(Debug, Clone)]
pub struct GridDensity {
    kx: usize,
    ky: usize,
    values: Vec<f64>,
    /// `prefix[iy * (kx+1) + ix]` = mass of the cells below row `iy` and
    /// left of column `ix`.
    prefix: Vec<f64>,
}

impl GridDensity {
    pub fn new(kx: usize, ky: usize, values: Vec<f64>) -> Result<Self, MeasureError> {
        let density = Self::unchecked(kx, ky, values)?;
        let mass = density.prefix[(density.kx + 1) * (density.ky + 1) - 1];
        if (mass - 1.0).abs() > 1e-9 {
            return Err(MeasureError::MassNotOne { mass });
        }
        Ok(density)
    }

    /// Rescales arbitrary nonnegative values to total mass 1. Returns the
    /// density and the original total mass.
    pub fn normalized(kx: usize, ky: usize, values: Vec<f64>) -> Result<(Self, f64), MeasureError> {
        let raw = Self::unchecked(kx, ky, values)?;
        let mass = raw.prefix[(raw.kx + 1) * (raw.ky + 1) - 1];
        if mass <= 0.0 {
            return Err(MeasureError::BadGrid(
                "cannot normalize an all-zero density".into(),
            ));
        }
        let values = raw.values.iter().map(|v| v / mass).collect();
        Ok((Self::unchecked(kx, ky, values)?, mass))
    }

    pub fn uniform(kx: usize, ky: usize) -> Self {
        Self::unchecked(kx, ky, vec![1.0; kx * ky]).expect("uniform grid is valid")
    }

    fn unchecked(kx: usize, ky: usize, values: Vec<f64>) -> Result<Self, MeasureError> {
        if kx == 0 || ky == 0 {
            return Err(MeasureError::BadGrid(format!(
                "grid must be at least 1 x 1, got {kx} x {ky}"
            )));
        }
        if values.len() != kx * ky {
            return Err(MeasureError::BadGrid(format!(
                "expected {} values for a {kx} x {ky} grid, got {}",
                kx * ky,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(MeasureError::BadGrid(format!(
                "values must be finite and nonnegative, found {bad}"
            )));
        }
        let cell_area = 1.0 / (kx * ky) as f64;
        let mut prefix = vec![0.0f64; (kx + 1) * (ky + 1)];
        for iy in 0..ky {
            for ix in 0..kx {
                let cell = values[iy * kx + ix] * cell_area;
                prefix[(iy + 1) * (kx + 1) + (ix + 1)] = cell
                    + prefix[iy * (kx + 1) + (ix + 1)]
                    + prefix[(iy + 1) * (kx + 1) + ix]
                    - prefix[iy * (kx + 1) + ix];
            }
        }
        Ok(Self {
            kx,
            ky,
            values,
            prefix,
        })
    }

    pub fn kx(&self) -> usize {
        self.kx
    }

    pub fn ky(&self) -> usize {
        self.ky
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mass of `[0, x] x [0, y]`; `x` and `y` are clamped into `[0, 1]`.
    fn cumulative(&self, x: f64, y: f64) -> f64 {
        let (ix, fx) = split(x, self.kx);
        let (iy, fy) = split(y, self.ky);
        let k = self.kx + 1;
        let p00 = self.prefix[iy * k + ix];
        let p10 = self.prefix[iy * k + ix + 1];
        let p01 = self.prefix[(iy + 1) * k + ix];
        let p11 = self.prefix[(iy + 1) * k + ix + 1];
        p00 + fx * (p10 - p00) + fy * (p01 - p00) + fx * fy * (p11 - p10 - p01 + p00)
    }

    pub(crate) fn mass_unchecked(&self, x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> f64 {
        if x_hi <= x_lo || y_hi <= y_lo {
            return 0.0;
        }
        let m = self.cumulative(x_hi, y_hi) - self.cumulative(x_lo, y_hi)
            - self.cumulative(x_hi, y_lo)
            + self.cumulative(x_lo, y_lo);
        m.max(0.0)
    }

    /// Mass of the rectangle `[x_lo, x_hi] x [y_lo, y_hi]`.
    pub fn rectangle_mass(
        &self,
        x_lo: f64,
        x_hi: f64,
        y_lo: f64,
        y_hi: f64,
    ) -> Result<f64, MeasureError> {
        for (name, v) in [("x_lo", x_lo), ("x_hi", x_hi), ("y_lo", y_lo), ("y_hi", y_hi)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(MeasureError::BadRectangle(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        if x_hi < x_lo || y_hi < y_lo {
            return Err(MeasureError::BadRectangle(format!(
                "inverted rectangle [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}]"
            )));
        }
        Ok(self.mass_unchecked(x_lo, x_hi, y_lo, y_hi))
    }
}

/// Fractional grid coordinate of `v` in `[0, 1]` split into a cell index
/// and the position within that cell; the last cell owns `v = 1`.
fn split(v: f64, k: usize) -> (usize, f64) {
    let clamped = v.clamp(0.0, 1.0);
    let scaled = clamped * k as f64;
    let mut cell = scaled.floor() as usize;
    if cell >= k {
        cell = k - 1;
    }
    (cell, scaled - cell as f64)
}

/// An axis-parallel partition of the unit square: sorted x and y
/// boundaries starting at 0 and ending at 1. With `n+1` x-boundaries and
/// `m+1` y-boundaries it has `n x m` cells and `n-1 + m-1` interior cuts.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPair {
    x_cuts: Vec<f64>,
    y_cuts: Vec<f64>,
}

impl PartitionPair {
    pub fn new(x_cuts: Vec<f64>, y_cuts: Vec<f64>) -> Result<Self, MeasureError> {
        for (axis, cuts) in [("x", &x_cuts), ("y", &y_cuts)] {
            if cuts.len() < 2 {
                return Err(MeasureError::BadInput(format!(
                    "{axis} boundaries need at least 2 entries"
                )));
            }
            if cuts.first() != Some(&0.0) || cuts.last() != Some(&1.0) {
                return Err(MeasureError::BadInput(format!(
                    "{axis} boundaries must start at 0 and end at 1"
                )));
            }
            if cuts.windows(2).any(|w| w[0].is_nan() || w[1].is_nan() || w[0] > w[1]) {
                return Err(MeasureError::BadInput(format!(
                    "{axis} boundaries must be nondecreasing"
                )));
            }
        }
        Ok(Self { x_cuts, y_cuts })
    }

    /// Boundaries from a two-factor point: coordinates are segment widths
    /// and heights. Partial sums are taken exactly before conversion, so
    /// the last boundary is exactly 1.
    pub fn from_point(point: &ProductPoint) -> Result<Self, MeasureError> {
        if point.factors().len() != 2 {
            return Err(MeasureError::BadInput(format!(
                "partition point needs 2 factors, got {}",
                point.factors().len()
            )));
        }
        Ok(Self {
            x_cuts: point.factor(0).partial_sums_f64(),
            y_cuts: point.factor(1).partial_sums_f64(),
        })
    }

    pub fn x_cuts(&self) -> &[f64] {
        &self.x_cuts
    }

    pub fn y_cuts(&self) -> &[f64] {
        &self.y_cuts
    }

    pub fn x_segments(&self) -> usize {
        self.x_cuts.len() - 1
    }

    pub fn y_segments(&self) -> usize {
        self.y_cuts.len() - 1
    }

    pub fn x_bounds(&self, i: usize) -> (f64, f64) {
        (self.x_cuts[i], self.x_cuts[i + 1])
    }

    pub fn y_bounds(&self, j: usize) -> (f64, f64) {
        (self.y_cuts[j], self.y_cuts[j + 1])
    }

    /// Interior x-boundaries — the vertical cut lines.
    pub fn x_interior(&self) -> &[f64] {
        &self.x_cuts[1..self.x_cuts.len() - 1]
    }

    pub fn y_interior(&self) -> &[f64] {
        &self.y_cuts[1..self.y_cuts.len() - 1]
    }
}

/// Score field over partitions: cell `(i, j)` scores the amount by which
/// its mass clears `c - eps`. A point where row `i`'s cells all reach the
/// threshold for the columns assigned to it realizes the quota outcome;
/// a point where every score vanishes realizes the all-below outcome.
pub struct ThresholdScores<'a> {
    density: &'a GridDensity,
    shape: Vec<usize>,
    threshold: f64,
}

impl<'a> ThresholdScores<'a> {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl ScoreField for ThresholdScores<'_> {
    fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn eval(&self, index: &[usize], factors: &[&[f64]]) -> f64 {
        let (x_lo, x_hi) = segment(factors[0], index[0]);
        let (y_lo, y_hi) = segment(factors[1], index[1]);
        let mass = self.density.mass_unchecked(x_lo, x_hi, y_lo, y_hi);
        (mass - self.threshold).max(0.0)
    }
}

pub(crate) fn segment(widths: &[f64], i: usize) -> (f64, f64) {
    let lo: f64 = widths[..i].iter().sum();
    let hi = lo + widths[i];
    (lo.min(1.0), hi.min(1.0))
}

/// Builds the threshold field for `rows x cols` partition cells at level
/// `c` with slack `eps`.
pub fn build_threshold_scores<'a>(
    density: &'a GridDensity,
    c: f64,
    eps: f64,
    rows: usize,
    cols: usize,
) -> Result<ThresholdScores<'a>, MeasureError> {
    if !(c.is_finite() && c > 0.0) {
        return Err(MeasureError::BadInput(format!("c must be positive, got {c}")));
    }
    if !(eps.is_finite() && eps > 0.0 && eps < c) {
        return Err(MeasureError::BadInput(format!(
            "eps must satisfy 0 < eps < c, got eps = {eps}, c = {c}"
        )));
    }
    if rows == 0 || cols == 0 {
        return Err(MeasureError::BadInput(format!(
            "partition needs at least 1 x 1 cells, got {rows} x {cols}"
        )));
    }
    Ok(ThresholdScores {
        density,
        shape: vec![rows, cols],
        threshold: c - eps,
    })
}

/// Outcome of the square partition search.
#[derive(Debug, Clone)]
pub enum SquareOutcome {
    /// A partition where column `j`'s cell in row `assignment[j]` has
    /// mass at least `c - eps`, with row `i` assigned `quota[i]` columns.
    Quota {
        pair: PartitionPair,
        assignment: Assignment,
        min_mass: f64,
        residual: f64,
    },
    /// A partition where every cell has mass below `c`.
    AllBelow { pair: PartitionPair },
}

/// Searches for either partition outcome. `rows x cols` cells, `quota`
/// with `rows` parts summing to `cols`. Whatever the solver path, the
/// returned masses are re-verified through [`GridDensity::rectangle_mass`].
#[allow(clippy::too_many_arguments)]
pub fn solve_square_partition(
    density: &GridDensity,
    c: f64,
    rows: usize,
    cols: usize,
    quota: &QuotaVector,
    eps: f64,
    tol: f64,
    budget: usize,
) -> Result<SquareOutcome, MeasureError> {
    if quota.len() != rows || quota.target() != cols {
        return Err(MeasureError::BadInput(format!(
            "quota {:?} does not fit {rows} rows x {cols} columns",
            quota.parts()
        )));
    }
    let field = build_threshold_scores(density, c, eps, rows, cols)?;
    match solve_kkm_product(&field, quota, tol, budget) {
        Ok(solution) => {
            let pair = PartitionPair::from_point(&solution.point)?;
            let mut min_mass = f64::INFINITY;
            for (j, &i) in solution.assignment.map().iter().enumerate() {
                let (x_lo, x_hi) = pair.x_bounds(i);
                let (y_lo, y_hi) = pair.y_bounds(j);
                let mass = density.rectangle_mass(x_lo, x_hi, y_lo, y_hi)?;
                // 1e-12 absorbs the difference between the score path's
                // running sums and the exact boundary conversion.
                if mass < c - eps - 1e-12 {
                    return Err(MeasureError::VerificationFailed(format!(
                        "assigned cell ({i}, {j}) has mass {mass} < {}",
                        c - eps
                    )));
                }
                min_mass = min_mass.min(mass);
            }
            Ok(SquareOutcome::Quota {
                pair,
                assignment: solution.assignment,
                min_mass,
                residual: solution.residual,
            })
        }
        Err(SolverError::NotCovered(point)) => {
            let pair = PartitionPair::from_point(&point)?;
            for i in 0..rows {
                for j in 0..cols {
                    let (x_lo, x_hi) = pair.x_bounds(i);
                    let (y_lo, y_hi) = pair.y_bounds(j);
                    let mass = density.rectangle_mass(x_lo, x_hi, y_lo, y_hi)?;
                    if mass >= c {
                        return Err(MeasureError::VerificationFailed(format!(
                            "uncovered partition has cell ({i}, {j}) with mass {mass} >= {c}"
                        )));
                    }
                }
            }
            Ok(SquareOutcome::AllBelow { pair })
        }
        Err(e) => Err(e.into()),
    }
}
