//! Exact simplex points, product lattices, and score-field coverings.
//!
//! Points carry arbitrary-precision rational coordinates so that repeated
//! window refinement in the solvers never loses the boundary/interior
//! distinction: a coordinate is on a facet iff it is exactly zero. Scores
//! are evaluated in `f64` (they are compared against thresholds, not
//! accumulated over long chains), so [`ScoreField::eval`] takes plain
//! float coordinate slices and exact points are converted once per probe.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact scalar used for all lattice coordinates.
pub type Rational = BigRational;

/// Shorthand for building a small rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimplexError {
    #[error("a barycentric point needs at least one coordinate")]
    EmptyCoordinates,
    #[error("coordinate {index} is negative ({value})")]
    NegativeCoordinate { index: usize, value: Rational },
    #[error("coordinates sum to {sum}, expected exactly 1")]
    SumNotOne { sum: Rational },
    #[error("index {index} out of range for {size} entries")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("lattice resolution must be at least 1")]
    ResolutionZero,
    #[error("a product point needs at least one factor")]
    EmptyProduct,
    #[error("point has shape {actual:?}, field expects {expected:?}")]
    ShapeMismatch { expected: Vec<usize>, actual: Vec<usize> },
    #[error("every score vanishes at {0}; the field does not cover it")]
    NotCovered(ProductPoint),
}

/// A point of the standard simplex: nonnegative rational coordinates
/// summing to exactly 1. `coords.len()` is the number of vertices, so the
/// simplex dimension is `coords.len() - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BarycentricPoint {
    coords: Vec<Rational>,
}

impl BarycentricPoint {
    /// Validates and wraps barycentric coordinates. Rejects empty input,
    /// any negative coordinate, and any sum other than exactly 1.
    pub fn new(coords: Vec<Rational>) -> Result<Self, SimplexError> {
        if coords.is_empty() {
            return Err(SimplexError::EmptyCoordinates);
        }
        for (index, value) in coords.iter().enumerate() {
            if value.is_negative() {
                return Err(SimplexError::NegativeCoordinate {
                    index,
                    value: value.clone(),
                });
            }
        }
        let sum: Rational = coords.iter().sum();
        if !sum.is_one() {
            return Err(SimplexError::SumNotOne { sum });
        }
        Ok(Self { coords })
    }

    /// Builds a point from `(numerator, denominator)` pairs.
    pub fn from_ratios(parts: &[(i64, i64)]) -> Result<Self, SimplexError> {
        Self::new(parts.iter().map(|&(n, d)| ratio(n, d)).collect())
    }

    /// The barycenter of the simplex on `len` vertices.
    pub fn uniform(len: usize) -> Self {
        let coords = vec![ratio(1, len as i64); len];
        Self { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Simplex dimension (`len() - 1`).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn coord(&self, index: usize) -> &Rational {
        &self.coords[index]
    }

    /// Whether the point lies on the facet where coordinate `index`
    /// vanishes. Exact: no epsilon is involved.
    pub fn on_facet(&self, index: usize) -> Result<bool, SimplexError> {
        match self.coords.get(index) {
            Some(value) => Ok(value.is_zero()),
            None => Err(SimplexError::IndexOutOfRange {
                index,
                size: self.coords.len(),
            }),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords
            .iter()
            .map(|c| c.to_f64().expect("rational fits in f64"))
            .collect()
    }

    /// The `len() + 1` running sums `0, c_0, c_0 + c_1, ..., 1`, summed
    /// exactly before conversion so the endpoints are exactly 0 and 1.
    pub fn partial_sums_f64(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coords.len() + 1);
        let mut acc = Rational::from_integer(0.into());
        out.push(0.0);
        for c in &self.coords {
            acc += c;
            out.push(acc.to_f64().expect("rational fits in f64"));
        }
        out
    }
}

impl fmt::Display for BarycentricPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.coords.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A point of a product of simplices, one barycentric factor per simplex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductPoint {
    factors: Vec<BarycentricPoint>,
}

impl ProductPoint {
    pub fn new(factors: Vec<BarycentricPoint>) -> Result<Self, SimplexError> {
        if factors.is_empty() {
            return Err(SimplexError::EmptyProduct);
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[BarycentricPoint] {
        &self.factors
    }

    pub fn factor(&self, k: usize) -> &BarycentricPoint {
        &self.factors[k]
    }

    /// Number of coordinates per factor, e.g. `[n, m]` for
    /// two-factor products.
    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|p| p.len()).collect()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.factors.iter().map(|p| p.to_f64()).collect()
    }
}

impl fmt::Display for ProductPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.factors.iter().enumerate() {
            if k > 0 {
                write!(f, " x ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// All points of the simplex on `dim + 1` vertices whose coordinates are
/// multiples of `1/resolution`, in lexicographic order of the coordinate
/// tuples. There are `C(resolution + dim, dim)` of them.
pub fn lattice_points(dim: usize, resolution: u32) -> Result<Vec<BarycentricPoint>, SimplexError> {
    if resolution == 0 {
        return Err(SimplexError::ResolutionZero);
    }
    let mut out = Vec::new();
    let mut nums = vec![0u32; dim + 1];
    fill_compositions(&mut out, &mut nums, 0, resolution, resolution);
    Ok(out)
}

fn fill_compositions(
    out: &mut Vec<BarycentricPoint>,
    nums: &mut [u32],
    pos: usize,
    remaining: u32,
    resolution: u32,
) {
    if pos + 1 == nums.len() {
        nums[pos] = remaining;
        let coords = nums
            .iter()
            .map(|&n| ratio(n as i64, resolution as i64))
            .collect();
        out.push(BarycentricPoint { coords });
        return;
    }
    for value in 0..=remaining {
        nums[pos] = value;
        fill_compositions(out, nums, pos + 1, remaining - value, resolution);
    }
}

/// Number of index tuples of a shape.
pub fn tuple_count(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Row-major position of `index` among the tuples of `shape`.
pub fn flat_index(shape: &[usize], index: &[usize]) -> usize {
    debug_assert_eq!(shape.len(), index.len());
    let mut flat = 0;
    for (size, i) in shape.iter().zip(index) {
        debug_assert!(i < size);
        flat = flat * size + i;
    }
    flat
}

/// Iterates all index tuples of `shape` in row-major (lexicographic) order.
pub fn index_tuples(shape: &[usize]) -> IndexTuples {
    IndexTuples {
        shape: shape.to_vec(),
        current: vec![0; shape.len()],
        done: shape.contains(&0),
        started: false,
    }
}

pub struct IndexTuples {
    shape: Vec<usize>,
    current: Vec<usize>,
    done: bool,
    started: bool,
}

impl Iterator for IndexTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.current.clone());
        }
        for k in (0..self.current.len()).rev() {
            self.current[k] += 1;
            if self.current[k] < self.shape[k] {
                return Some(self.current.clone());
            }
            self.current[k] = 0;
        }
        self.done = true;
        None
    }
}

/// A family of covering sets over a product of simplices, one set per
/// index tuple. Each set is the positive support of its score: the point
/// `x` belongs to the set at `index` iff `eval(index, x) > 0`. Scores must
/// be continuous and nonnegative; a valid covering keeps them zero on the
/// forbidden facet products (checked by [`check_cover_conditions`]).
pub trait ScoreField: Sync {
    /// Coordinate counts per factor, e.g. `[n, m]`.
    fn shape(&self) -> &[usize];

    /// Score of the set at `index`, given each factor's barycentric
    /// coordinates as a float slice.
    fn eval(&self, index: &[usize], factors: &[&[f64]]) -> f64;

    fn eval_point(&self, index: &[usize], point: &ProductPoint) -> f64 {
        let coords = point.to_f64();
        let views: Vec<&[f64]> = coords.iter().map(|c| c.as_slice()).collect();
        self.eval(index, &views)
    }
}

/// Scores of every index tuple at one point, in row-major tuple order.
pub fn score_vector(field: &dyn ScoreField, factors: &[&[f64]]) -> Vec<f64> {
    index_tuples(field.shape())
        .map(|t| field.eval(&t, factors))
        .collect()
}

/// The canonical covering `s(t, x) = prod_k x_k[t_k]`: set `t` is the region
/// where every selected coordinate is positive. Covers the whole product and
/// vanishes on every forbidden facet product.
#[derive(Debug, Clone)]
pub struct CanonicalField {
    shape: Vec<usize>,
}

impl CanonicalField {
    pub fn new(shape: Vec<usize>) -> Self {
        assert!(!shape.is_empty() && shape.iter().all(|&s| s > 0));
        Self { shape }
    }
}

impl ScoreField for CanonicalField {
    fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn eval(&self, index: &[usize], factors: &[&[f64]]) -> f64 {
        index
            .iter()
            .zip(factors)
            .map(|(&i, coords)| coords[i])
            .product()
    }
}

/// Score field backed by a closure; the workhorse for tests and callers
/// with ad-hoc coverings.
pub struct FnField<F: Fn(&[usize], &[&[f64]]) -> f64 + Sync> {
    shape: Vec<usize>,
    eval: F,
}

impl<F: Fn(&[usize], &[&[f64]]) -> f64 + Sync> FnField<F> {
    pub fn new(shape: Vec<usize>, eval: F) -> Self {
        assert!(!shape.is_empty() && shape.iter().all(|&s| s > 0));
        Self { shape, eval }
    }
}

impl<F: Fn(&[usize], &[&[f64]]) -> f64 + Sync> ScoreField for FnField<F> {
    fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn eval(&self, index: &[usize], factors: &[&[f64]]) -> f64 {
        (self.eval)(index, factors)
    }
}

/// A partition of unity evaluated at one point: nonnegative weights per
/// index tuple summing to 1.
#[derive(Debug, Clone)]
pub struct UnityWeights {
    shape: Vec<usize>,
    weights: Vec<f64>,
}

impl UnityWeights {
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Weights in row-major tuple order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.weights[flat_index(&self.shape, index)]
    }

    /// Sum of weights over all tuples whose `factor`-th entry is each
    /// value in turn; entries sum to 1.
    pub fn marginal(&self, factor: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.shape[factor]];
        for (t, &w) in index_tuples(&self.shape).zip(&self.weights) {
            out[t[factor]] += w;
        }
        out
    }

    /// Index tuples carrying strictly positive weight.
    pub fn support(&self) -> Vec<Vec<usize>> {
        index_tuples(&self.shape)
            .zip(&self.weights)
            .filter(|&(_, &w)| w > 0.0)
            .map(|(t, _)| t)
            .collect()
    }
}

/// Normalized scores at `point`. Errors with [`SimplexError::NotCovered`]
/// when every score vanishes there.
pub fn unity_weights(
    field: &dyn ScoreField,
    point: &ProductPoint,
) -> Result<UnityWeights, SimplexError> {
    let expected = field.shape();
    let actual = point.shape();
    if expected != actual.as_slice() {
        return Err(SimplexError::ShapeMismatch {
            expected: expected.to_vec(),
            actual,
        });
    }
    let coords = point.to_f64();
    let views: Vec<&[f64]> = coords.iter().map(|c| c.as_slice()).collect();
    // Scores are nonnegative by contract; clamp so a slightly negative
    // provider value cannot corrupt the normalization.
    let mut weights: Vec<f64> = score_vector(field, &views)
        .into_iter()
        .map(|s| s.max(0.0))
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(SimplexError::NotCovered(point.clone()));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(UnityWeights {
        shape: expected.to_vec(),
        weights,
    })
}

/// Outcome of probing a field on a product lattice.
#[derive(Debug, Clone)]
pub struct CoverReport {
    /// True when no score is positive at any probed point of its
    /// forbidden facet product.
    pub boundary_ok: bool,
    /// Probed points where every score vanishes.
    pub uncovered: Vec<ProductPoint>,
    /// `(index, point)` pairs where the set at `index` is positive even
    /// though some factor coordinate `index[k]` vanishes at `point`.
    pub boundary_violations: Vec<(Vec<usize>, ProductPoint)>,
}

/// Probes every point of the product lattice at `resolution` and reports
/// uncovered points and boundary violations. A clean covering yields
/// `boundary_ok == true` and empty `uncovered`.
pub fn check_cover_conditions(
    field: &dyn ScoreField,
    resolution: u32,
) -> Result<CoverReport, SimplexError> {
    let shape = field.shape();
    let mut lattices = Vec::with_capacity(shape.len());
    for &size in shape {
        lattices.push(lattice_points(size - 1, resolution)?);
    }
    let lattice_sizes: Vec<usize> = lattices.iter().map(|l| l.len()).collect();

    let mut report = CoverReport {
        boundary_ok: true,
        uncovered: Vec::new(),
        boundary_violations: Vec::new(),
    };
    let tuples: Vec<Vec<usize>> = index_tuples(shape).collect();
    for combo in index_tuples(&lattice_sizes) {
        let points: Vec<&BarycentricPoint> = combo
            .iter()
            .enumerate()
            .map(|(k, &i)| &lattices[k][i])
            .collect();
        let coords: Vec<Vec<f64>> = points.iter().map(|p| p.to_f64()).collect();
        let views: Vec<&[f64]> = coords.iter().map(|c| c.as_slice()).collect();
        let mut covered = false;
        for t in &tuples {
            let score = field.eval(t, &views);
            if score <= 0.0 {
                continue;
            }
            covered = true;
            let forbidden = t
                .iter()
                .zip(&points)
                .any(|(&i, p)| p.coord(i).is_zero());
            if forbidden {
                report.boundary_ok = false;
                let point = ProductPoint::new(points.iter().map(|&p| p.clone()).collect())?;
                report.boundary_violations.push((t.clone(), point));
            }
        }
        if !covered {
            let point = ProductPoint::new(points.iter().map(|&p| p.clone()).collect())?;
            report.uncovered.push(point);
        }
    }
    Ok(report)
}
