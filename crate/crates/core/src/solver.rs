//! Balanced-point search over score-field coverings and extraction of
//! combinatorial certificates from the resulting partitions of unity.
//!
//! The search is a multi-resolution grid sweep. Candidate points are
//! rational blends of a fixed base lattice toward the current center, so
//! every probe stays an exact simplex point (facet membership remains
//! decidable) while the window shrinks geometrically. At a point whose
//! partition-of-unity marginals are close enough to the target, the
//! support of the weights is thresholded at a sweep of levels `delta` and
//! a quota matching (two factors) or a maximum hypergraph matching
//! (r factors) is extracted from it. Solutions carry enough data to be
//! re-verified from scratch.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::matching::{
    max_hypergraph_matching, quota_matching, Assignment, BipartiteGraph, HMatching, Hypergraph,
    MatchingError, QuotaMatching, QuotaVector,
};
use crate::simplex::{
    index_tuples, lattice_points, unity_weights, BarycentricPoint, ProductPoint, Rational,
    ScoreField, SimplexError, UnityWeights,
};

/// Base lattice resolution per factor; the grid spacing at refinement
/// level `k` is `1 / (8 * 2^k)`.
const BASE_RESOLUTION: u32 = 8;

/// Support thresholds sweep from the starting delta down through this
/// many halvings, then try exactly zero.
const DELTA_LEVELS: usize = 24;

/// Marginal-correction rounds appended to each sweep; one factor is
/// rescaled per round.
const REFIT_ROUNDS: usize = 8;

#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("every score vanishes at {0}; the field does not cover it")]
    NotCovered(ProductPoint),
    #[error("refinement budget exhausted at residual {residual:e}")]
    SolverExhausted { residual: f64 },
    #[error("no support threshold yields a feasible quota matching")]
    ExtractionFailed,
    #[error("largest support matching has {found} edges, needed {required}")]
    MatchingTooSmall { found: usize, required: usize },
    #[error("bad solver input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Marginal targets per factor for the partition of unity at the sought
/// point: entry `[k][l]` is the required total weight of all tuples whose
/// `k`-th index is `l`. Each factor's targets sum to 1.
#[derive(Debug, Clone)]
pub struct BalancedTarget {
    per_factor: Vec<Vec<f64>>,
}

impl BalancedTarget {
    /// Two-factor target for a quota: row `i` must carry `quota[i] / m`
    /// and every column `1 / m`.
    pub fn from_quota(quota: &QuotaVector) -> Self {
        let m = quota.target() as f64;
        let rows = quota.parts().iter().map(|&a| a as f64 / m).collect();
        let cols = vec![1.0 / m; quota.target()];
        Self {
            per_factor: vec![rows, cols],
        }
    }

    /// Every value of every factor must carry `1 / size`.
    pub fn uniform(classes: usize, size: usize) -> Self {
        Self {
            per_factor: vec![vec![1.0 / size as f64; size]; classes],
        }
    }

    pub fn per_factor(&self) -> &[Vec<f64>] {
        &self.per_factor
    }

    /// Sum over factors of the worst marginal deviation from target.
    pub fn residual(&self, weights: &UnityWeights) -> f64 {
        assert_eq!(
            weights.shape().len(),
            self.per_factor.len(),
            "weights and target disagree on factor count"
        );
        let mut total = 0.0;
        for (k, targets) in self.per_factor.iter().enumerate() {
            let marginal = weights.marginal(k);
            assert_eq!(marginal.len(), targets.len());
            let worst = marginal
                .iter()
                .zip(targets)
                .map(|(m, t)| (m - t).abs())
                .fold(0.0f64, f64::max);
            total += worst;
        }
        total
    }
}

struct Best {
    factors: Vec<BarycentricPoint>,
    residual: f64,
}

/// Multi-resolution sweep state. Each `sweep` probes the blend of every
/// base lattice point toward the current center, tracks the best residual
/// ever seen, recenters there, and halves the window.
struct GridSearch<'a> {
    field: &'a dyn ScoreField,
    target: &'a BalancedTarget,
    base: Vec<Vec<BarycentricPoint>>,
    center: Vec<BarycentricPoint>,
    window: Rational,
    best: Option<Best>,
}

impl<'a> GridSearch<'a> {
    fn new(field: &'a dyn ScoreField, target: &'a BalancedTarget) -> Result<Self, SolverError> {
        let shape = field.shape();
        if shape.len() != target.per_factor.len() {
            return Err(SolverError::BadInput(format!(
                "field has {} factors, target has {}",
                shape.len(),
                target.per_factor.len()
            )));
        }
        for (k, &size) in shape.iter().enumerate() {
            if target.per_factor[k].len() != size {
                return Err(SolverError::BadInput(format!(
                    "factor {k} has {size} values, target has {}",
                    target.per_factor[k].len()
                )));
            }
        }
        let mut base = Vec::with_capacity(shape.len());
        for &size in shape {
            base.push(lattice_points(size - 1, BASE_RESOLUTION)?);
        }
        let center = shape.iter().map(|&s| BarycentricPoint::uniform(s)).collect();
        Ok(Self {
            field,
            target,
            base,
            center,
            window: Rational::one(),
            best: None,
        })
    }

    fn best_point(&self) -> ProductPoint {
        let best = self.best.as_ref().expect("sweep() ran at least once");
        ProductPoint::new(best.factors.clone()).expect("factors are valid points")
    }

    fn best_residual(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.residual)
    }

    /// One full pass over the current window's grid, followed by a
    /// proportional-refit probe. Returns the best residual seen so far
    /// (monotone across sweeps). Errors with `NotCovered` at the first
    /// probe where every score vanishes. The window halves only when a
    /// sweep fails to shrink the residual appreciably, so the search can
    /// keep traveling at a productive scale instead of freezing onto an
    /// early center.
    fn sweep(&mut self) -> Result<f64, SolverError> {
        let shape = self.field.shape().to_vec();
        let factors = shape.len();
        let keep = Rational::one() - &self.window;
        let previous = self.best_residual();

        // Exact candidates per factor plus their float images.
        let mut cand: Vec<Vec<BarycentricPoint>> = Vec::with_capacity(factors);
        for (center, base) in self.center.iter().zip(&self.base) {
            cand.push(
                base.iter()
                    .map(|u| blend(center, u, &keep, &self.window))
                    .collect(),
            );
        }
        let cand_f64: Vec<Vec<Vec<f64>>> = cand
            .iter()
            .map(|pts| pts.iter().map(|p| p.to_f64()).collect())
            .collect();

        let sizes: Vec<usize> = cand.iter().map(|pts| pts.len()).collect();
        let tuples: Vec<Vec<usize>> = index_tuples(&shape).collect();
        let mut scores = vec![0.0f64; tuples.len()];
        let mut margs: Vec<Vec<f64>> = shape.iter().map(|&s| vec![0.0f64; s]).collect();
        let mut views: Vec<&[f64]> = Vec::with_capacity(factors);

        let mut sweep_best: Option<(Vec<usize>, f64)> = None;
        for combo in index_tuples(&sizes) {
            views.clear();
            for (k, &i) in combo.iter().enumerate() {
                views.push(&cand_f64[k][i]);
            }
            let Some(residual) =
                probe_residual(self.field, self.target, &tuples, &views, &mut scores, &mut margs)
            else {
                let point = materialize(&cand, &combo)?;
                return Err(SolverError::NotCovered(point));
            };
            if sweep_best.as_ref().is_none_or(|(_, r)| residual < *r) {
                sweep_best = Some((combo, residual));
            }
        }

        let (combo, residual) = sweep_best.expect("grid is nonempty");
        if self.best.as_ref().is_none_or(|b| residual < b.residual) {
            let factors = combo
                .iter()
                .enumerate()
                .map(|(k, &i)| cand[k][i].clone())
                .collect();
            self.best = Some(Best { factors, residual });
        }

        // Refit probes: cyclically rescale one factor of the running
        // point by target / marginal and renormalize. A full step lands
        // its factor exactly on target for product-like fields, turning
        // the tail of the search into a fixed-point iteration instead of
        // pure window shrinking; where the response is steeper than
        // proportional (thresholded masses), the full step overshoots and
        // a damped half-step is tried before giving up on the run.
        let mut cursor = self.best.as_ref().unwrap().factors.clone();
        let mut cursor_coords: Vec<Vec<f64>> = cursor.iter().map(|p| p.to_f64()).collect();
        let mut cursor_res = {
            let views: Vec<&[f64]> = cursor_coords.iter().map(|c| c.as_slice()).collect();
            let Some(r) = probe_residual(
                self.field,
                self.target,
                &tuples,
                &views,
                &mut scores,
                &mut margs,
            ) else {
                return Err(SolverError::NotCovered(ProductPoint::new(cursor)?));
            };
            r
        };
        'rounds: for round in 0..REFIT_ROUNDS {
            let k = round % factors;
            let base_marg = margs[k].clone();
            let mut advanced = false;
            for damp in [1.0, 0.5] {
                let Some(scaled) =
                    rescale_factor(&cursor_coords[k], &base_marg, &self.target.per_factor[k], damp)
                else {
                    break 'rounds;
                };
                let mut trial = cursor.clone();
                let mut trial_coords = cursor_coords.clone();
                trial_coords[k] = scaled.to_f64();
                trial[k] = scaled;
                let views: Vec<&[f64]> = trial_coords.iter().map(|c| c.as_slice()).collect();
                let Some(res) = probe_residual(
                    self.field,
                    self.target,
                    &tuples,
                    &views,
                    &mut scores,
                    &mut margs,
                ) else {
                    return Err(SolverError::NotCovered(ProductPoint::new(trial)?));
                };
                if res < cursor_res {
                    cursor = trial;
                    cursor_coords = trial_coords;
                    cursor_res = res;
                    if self.best.as_ref().is_none_or(|b| res < b.residual) {
                        self.best = Some(Best {
                            factors: cursor.clone(),
                            residual: res,
                        });
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }

        self.center = self.best.as_ref().unwrap().factors.clone();
        let now = self.best_residual();
        if now >= previous * 0.9375 {
            self.window /= Rational::from_integer(2.into());
        }
        Ok(now)
    }
}

/// Scores `views`, accumulating into the reusable buffers; `None` when
/// every score vanishes there, otherwise the marginal residual. On
/// return `margs` holds the normalized marginals of the partition of
/// unity at the probed point.
fn probe_residual(
    field: &dyn ScoreField,
    target: &BalancedTarget,
    tuples: &[Vec<usize>],
    views: &[&[f64]],
    scores: &mut [f64],
    margs: &mut [Vec<f64>],
) -> Option<f64> {
    let mut total = 0.0;
    for (slot, t) in tuples.iter().enumerate() {
        let s = field.eval(t, views).max(0.0);
        scores[slot] = s;
        total += s;
    }
    if total <= 0.0 {
        return None;
    }
    for marg in margs.iter_mut() {
        marg.iter_mut().for_each(|v| *v = 0.0);
    }
    for (slot, t) in tuples.iter().enumerate() {
        for (k, &l) in t.iter().enumerate() {
            margs[k][l] += scores[slot];
        }
    }
    let mut residual = 0.0;
    for (k, marg) in margs.iter_mut().enumerate() {
        let mut worst = 0.0f64;
        for (m, &t) in marg.iter_mut().zip(&target.per_factor[k]) {
            *m /= total;
            worst = worst.max((*m - t).abs());
        }
        residual += worst;
    }
    Some(residual)
}

/// One multiplicative marginal correction: coordinates scaled by
/// (target / marginal)^damp, exactly renormalized; `None` when
/// everything scales to zero.
fn rescale_factor(
    coords: &[f64],
    marginal: &[f64],
    target: &[f64],
    damp: f64,
) -> Option<BarycentricPoint> {
    let mut next: Vec<Rational> = coords
        .iter()
        .zip(marginal)
        .zip(target)
        .map(|((&c, &got), &want)| {
            let scaled = (c * (want / got.max(1e-12)).powf(damp)).max(0.0);
            Rational::from_float(scaled).unwrap_or_else(Rational::zero)
        })
        .collect();
    let total = next.iter().fold(Rational::zero(), |acc, c| acc + c);
    if total.is_zero() {
        return None;
    }
    for c in &mut next {
        *c /= &total;
    }
    Some(BarycentricPoint::new(next).expect("normalized nonnegative coords"))
}

fn blend(
    center: &BarycentricPoint,
    toward: &BarycentricPoint,
    keep: &Rational,
    window: &Rational,
) -> BarycentricPoint {
    let coords = center
        .coords()
        .iter()
        .zip(toward.coords())
        .map(|(c, u)| c * keep + u * window)
        .collect();
    BarycentricPoint::new(coords).expect("convex blend of simplex points")
}

fn materialize(
    cand: &[Vec<BarycentricPoint>],
    combo: &[usize],
) -> Result<ProductPoint, SolverError> {
    let factors = combo
        .iter()
        .enumerate()
        .map(|(k, &i)| cand[k][i].clone())
        .collect();
    Ok(ProductPoint::new(factors)?)
}

/// Searches for a point whose partition-of-unity marginals meet `target`
/// within `tol`, then hands the weights to `extract`; on extraction
/// failure the tolerance is tightened and the search continues. `budget`
/// counts refinement sweeps after the initial full-lattice pass.
fn drive<T>(
    field: &dyn ScoreField,
    target: &BalancedTarget,
    tol: f64,
    budget: usize,
    mut extract: impl FnMut(&UnityWeights) -> Result<T, SolverError>,
) -> Result<(ProductPoint, f64, UnityWeights, T), SolverError> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(SolverError::BadInput(format!(
            "tolerance must be a positive finite number, got {tol}"
        )));
    }
    let mut search = GridSearch::new(field, target)?;
    let mut current_tol = tol;
    let mut last_attempt = f64::INFINITY;
    let mut last_failure: Option<SolverError> = None;
    for _ in 0..=budget {
        let residual = search.sweep()?;
        if residual >= current_tol || residual >= last_attempt {
            continue;
        }
        last_attempt = residual;
        let point = search.best_point();
        let weights = match unity_weights(field, &point) {
            Ok(w) => w,
            Err(SimplexError::NotCovered(p)) => return Err(SolverError::NotCovered(p)),
            Err(e) => return Err(e.into()),
        };
        match extract(&weights) {
            Ok(value) => return Ok((point, residual, weights, value)),
            Err(e) => {
                last_failure = Some(e);
                current_tol /= 4.0;
            }
        }
    }
    Err(match last_failure {
        Some(e) => e,
        None => SolverError::SolverExhausted {
            residual: search.best_residual(),
        },
    })
}

fn validate_quota_shape(
    field: &dyn ScoreField,
    quota: &QuotaVector,
) -> Result<(usize, usize), SolverError> {
    let shape = field.shape();
    if shape.len() != 2 {
        return Err(SolverError::BadInput(format!(
            "quota solving needs a two-factor field, got {} factors",
            shape.len()
        )));
    }
    let (n, m) = (shape[0], shape[1]);
    if quota.len() != n {
        return Err(SolverError::BadInput(format!(
            "quota has {} parts for {n} rows",
            quota.len()
        )));
    }
    if quota.target() != m {
        return Err(SolverError::BadInput(format!(
            "quota parts sum to {} for {m} columns",
            quota.target()
        )));
    }
    Ok((n, m))
}

/// Searches a two-factor field for a point where row `i` of the partition
/// of unity carries `quota[i] / m` and every column `1 / m`, all within
/// `tol`. Returns the point and its residual.
pub fn balanced_point_search(
    field: &dyn ScoreField,
    quota: &QuotaVector,
    tol: f64,
    budget: usize,
) -> Result<(ProductPoint, f64), SolverError> {
    validate_quota_shape(field, quota)?;
    let target = BalancedTarget::from_quota(quota);
    let (point, residual, _, ()) = drive(field, &target, tol, budget, |_| Ok(()))?;
    Ok((point, residual))
}

/// Extracts a quota assignment from the support of a partition of unity.
/// Thresholds sweep from `1 / (2nm)` down through halvings to exactly 0;
/// the first threshold whose support graph admits a feasible quota
/// matching wins. Deterministic.
pub fn extract_assignment(
    weights: &UnityWeights,
    quota: &QuotaVector,
) -> Result<Assignment, SolverError> {
    let shape = weights.shape();
    if shape.len() != 2 {
        return Err(SolverError::BadInput(format!(
            "assignment extraction needs two factors, got {}",
            shape.len()
        )));
    }
    let (n, m) = (shape[0], shape[1]);
    if quota.len() != n || quota.target() != m {
        return Err(SolverError::BadInput(format!(
            "quota {:?} does not fit a {n} x {m} support",
            quota.parts()
        )));
    }
    for delta in threshold_sweep(1.0 / (2.0 * (n * m) as f64)) {
        let edges: Vec<(usize, usize)> = index_tuples(shape)
            .filter(|t| weights.get(t) > delta)
            .map(|t| (t[0], t[1]))
            .collect();
        if edges.is_empty() {
            continue;
        }
        let graph = BipartiteGraph::new(n, m, &edges)?;
        if let QuotaMatching::Feasible(sigma) = quota_matching(&graph, quota)? {
            return Ok(sigma);
        }
    }
    Err(SolverError::ExtractionFailed)
}

fn threshold_sweep(start: f64) -> impl Iterator<Item = f64> {
    (0..=DELTA_LEVELS)
        .map(move |k| start / (1u64 << k) as f64)
        .chain(std::iter::once(0.0))
}

/// A solved two-factor covering instance: a near-balanced point, its
/// partition of unity, and a quota assignment supported there.
#[derive(Debug, Clone)]
pub struct KkmSolution {
    pub point: ProductPoint,
    pub assignment: Assignment,
    pub residual: f64,
    pub weights: UnityWeights,
}

impl KkmSolution {
    /// Re-derives everything from `field` and checks it: quota counts,
    /// marginal residual within `tol`, and a strictly positive score for
    /// every assigned pair at the point.
    pub fn verify(&self, field: &dyn ScoreField, quota: &QuotaVector, tol: f64) -> bool {
        let Ok((n, m)) = validate_quota_shape(field, quota) else {
            return false;
        };
        if self.assignment.len() != m || self.assignment.counts(n) != quota.parts() {
            return false;
        }
        let Ok(weights) = unity_weights(field, &self.point) else {
            return false;
        };
        let residual = BalancedTarget::from_quota(quota).residual(&weights);
        if residual.is_nan() || residual > tol {
            return false;
        }
        self.assignment
            .map()
            .iter()
            .enumerate()
            .all(|(j, &i)| field.eval_point(&[i, j], &self.point) > 0.0)
    }
}

/// Solves a two-factor covering instance: finds a near-balanced point and
/// a quota assignment whose every assigned set contains it.
pub fn solve_kkm_product(
    field: &dyn ScoreField,
    quota: &QuotaVector,
    tol: f64,
    budget: usize,
) -> Result<KkmSolution, SolverError> {
    validate_quota_shape(field, quota)?;
    let target = BalancedTarget::from_quota(quota);
    let (point, residual, weights, assignment) =
        drive(field, &target, tol, budget, |w| extract_assignment(w, quota))?;
    Ok(KkmSolution {
        point,
        assignment,
        residual,
        weights,
    })
}

/// A covering of one simplex by `rows x cols` sets, each given by a
/// nonnegative continuous score on the simplex; set `(i, j)` must avoid
/// the facet where coordinate `i` vanishes, and for every fixed column
/// `j` the sets `(0, j) .. (rows-1, j)` must jointly cover the simplex.
type CellScore = Box<dyn Fn(usize, usize, &[f64]) -> f64 + Send + Sync>;

pub struct SimplexScores {
    rows: usize,
    cols: usize,
    eval: CellScore,
}

impl SimplexScores {
    pub fn new(
        rows: usize,
        cols: usize,
        eval: impl Fn(usize, usize, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(rows > 0 && cols > 0);
        Self {
            rows,
            cols,
            eval: Box::new(eval),
        }
    }

    /// The canonical column-independent covering `s(i, j, x) = x_i`.
    pub fn canonical(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, |i, _, x| x[i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn eval(&self, row: usize, col: usize, x: &[f64]) -> f64 {
        (self.eval)(row, col, x)
    }
}

/// Lift of per-column simplex coverings to a two-factor product field:
/// the column factor enters through the margin by which `y_j` trails the
/// maximum coordinate. Positive scores force `y_j` within `1 / (2 cols)`
/// of the maximum, so lifted scores vanish whenever `y_j = 0`, and the
/// lift keeps the row factor's facet avoidance.
pub struct ColoredLift<'a> {
    scores: &'a SimplexScores,
    shape: Vec<usize>,
}

impl<'a> ColoredLift<'a> {
    pub fn new(scores: &'a SimplexScores) -> Self {
        let shape = vec![scores.rows(), scores.cols()];
        Self { scores, shape }
    }
}

impl ScoreField for ColoredLift<'_> {
    fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn eval(&self, index: &[usize], factors: &[&[f64]]) -> f64 {
        let (i, j) = (index[0], index[1]);
        let y = factors[1];
        let top = y.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let margin = y[j] - top + 1.0 / (2.0 * self.scores.cols() as f64);
        if margin <= 0.0 {
            return 0.0;
        }
        self.scores.eval(i, j, factors[0]) * margin
    }
}

/// Solves the colored variant: `cols` coverings of one simplex, the
/// `j`-th by sets `(0, j) .. (rows-1, j)`, yield a single simplex point
/// lying in set `(sigma(j), j)` for every column, with row `i` chosen by
/// exactly `quota[i]` columns. The returned solution lives on the lifted
/// two-factor product; its first factor is the simplex point.
pub fn solve_colored_kkm(
    scores: &SimplexScores,
    quota: &QuotaVector,
    tol: f64,
    budget: usize,
) -> Result<KkmSolution, SolverError> {
    if quota.len() != scores.rows() || quota.target() != scores.cols() {
        return Err(SolverError::BadInput(format!(
            "quota {:?} does not fit {} rows x {} columns",
            quota.parts(),
            scores.rows(),
            scores.cols()
        )));
    }
    let lift = ColoredLift::new(scores);
    let solution = solve_kkm_product(&lift, quota, tol, budget)?;
    // Positivity of the lifted score at (sigma(j), j) already forces the
    // simplex score positive; double-check directly on the simplex factor.
    let x = solution.point.factor(0).to_f64();
    debug_assert!(solution
        .assignment
        .map()
        .iter()
        .enumerate()
        .all(|(j, &i)| scores.eval(i, j, &x) > 0.0));
    Ok(solution)
}

/// Smallest matching size the r-factor theorem guarantees.
pub fn required_matching_size(size: usize, classes: usize) -> usize {
    assert!(classes >= 2, "need at least two factors");
    size.div_ceil(classes - 1)
}

/// A solved r-factor covering instance: a near-uniform point and a
/// matching of pairwise disjoint index tuples supported there.
#[derive(Debug, Clone)]
pub struct KkmRSolution {
    pub point: ProductPoint,
    pub matching: HMatching,
    pub residual: f64,
    pub weights: UnityWeights,
}

impl KkmRSolution {
    /// Re-derives the partition of unity and checks the uniform residual,
    /// matching disjointness and size, and positivity of every matched
    /// tuple's score at the point.
    pub fn verify(&self, field: &dyn ScoreField, tol: f64) -> bool {
        let shape = field.shape();
        let classes = shape.len();
        let size = shape[0];
        if shape.iter().any(|&s| s != size) || classes < 2 {
            return false;
        }
        if !self.matching.is_disjoint()
            || self.matching.size() < required_matching_size(size, classes)
        {
            return false;
        }
        let Ok(weights) = unity_weights(field, &self.point) else {
            return false;
        };
        let residual = BalancedTarget::uniform(classes, size).residual(&weights);
        if residual.is_nan() || residual > tol {
            return false;
        }
        self.matching
            .edges
            .iter()
            .all(|e| field.eval_point(e, &self.point) > 0.0)
    }
}

fn extract_matching(weights: &UnityWeights, required: usize) -> Result<HMatching, SolverError> {
    let shape = weights.shape().to_vec();
    let classes = shape.len();
    let size = shape[0];
    let start = 1.0 / (2.0 * shape.iter().product::<usize>() as f64);
    let mut best_found = 0usize;
    for delta in threshold_sweep(start) {
        let mut edges = Vec::new();
        let mut edge_weights = Vec::new();
        for t in index_tuples(&shape) {
            let w = weights.get(&t);
            if w > delta {
                edges.push(t);
                edge_weights.push(w);
            }
        }
        if edges.is_empty() {
            continue;
        }
        let h = Hypergraph::with_weights(classes, size, edges, edge_weights)?;
        let matching = max_hypergraph_matching(&h)?;
        if matching.size() >= required {
            return Ok(matching);
        }
        best_found = best_found.max(matching.size());
    }
    Err(SolverError::MatchingTooSmall {
        found: best_found,
        required,
    })
}

/// Solves an r-factor covering instance on equal-size factors: finds a
/// point whose partition of unity is uniform per factor within `tol` and
/// extracts a matching of at least `ceil(size / (classes - 1))` pairwise
/// disjoint tuples from its support.
pub fn solve_kkm_r(
    field: &dyn ScoreField,
    tol: f64,
    budget: usize,
) -> Result<KkmRSolution, SolverError> {
    let shape = field.shape();
    let classes = shape.len();
    if classes < 2 {
        return Err(SolverError::BadInput(format!(
            "need at least two factors, got {classes}"
        )));
    }
    let size = shape[0];
    if shape.iter().any(|&s| s != size) {
        return Err(SolverError::BadInput(format!(
            "factors must have equal size, got {shape:?}"
        )));
    }
    let target = BalancedTarget::uniform(classes, size);
    let required = required_matching_size(size, classes);
    let (point, residual, weights, matching) = drive(field, &target, tol, budget, |w| {
        extract_matching(w, required)
    })?;
    Ok(KkmRSolution {
        point,
        matching,
        residual,
        weights,
    })
}

/// Brute-force reference solver: enumerates every assignment for `quota`
/// and every product lattice point at `resolution`, and returns the first
/// pair maximizing the worst assigned score, if that maximum is positive.
#[derive(Debug, Clone)]
pub enum OracleOutcome {
    Found {
        point: ProductPoint,
        assignment: Assignment,
        min_score: f64,
    },
    NoneFound,
}

pub fn oracle_solve(
    field: &dyn ScoreField,
    quota: &QuotaVector,
    resolution: u32,
) -> Result<OracleOutcome, SolverError> {
    let (n, m) = validate_quota_shape(field, quota)?;
    let rows = lattice_points(n - 1, resolution)?;
    let cols = lattice_points(m - 1, resolution)?;
    let sigmas = Assignment::enumerate_for(quota);
    let work = rows.len() * cols.len() * sigmas.len() * m;
    if work > 50_000_000 {
        return Err(SolverError::BadInput(format!(
            "oracle instance needs {work} evaluations; limit is 50000000"
        )));
    }

    let tuples: Vec<Vec<usize>> = index_tuples(&[n, m]).collect();
    let mut scores = vec![0.0f64; n * m];
    // Per assignment: best worst-score and the first point achieving it.
    let mut best: Vec<(f64, (usize, usize))> = vec![(f64::NEG_INFINITY, (0, 0)); sigmas.len()];
    let rows_f64: Vec<Vec<f64>> = rows.iter().map(|p| p.to_f64()).collect();
    let cols_f64: Vec<Vec<f64>> = cols.iter().map(|p| p.to_f64()).collect();
    for (ri, row) in rows_f64.iter().enumerate() {
        for (ci, col) in cols_f64.iter().enumerate() {
            let views: [&[f64]; 2] = [row, col];
            for (slot, t) in tuples.iter().enumerate() {
                scores[slot] = field.eval(t, &views);
            }
            for (si, sigma) in sigmas.iter().enumerate() {
                let mut worst = f64::INFINITY;
                for (j, &i) in sigma.map().iter().enumerate() {
                    worst = worst.min(scores[i * m + j]);
                }
                if worst > best[si].0 {
                    best[si] = (worst, (ri, ci));
                }
            }
        }
    }

    let mut winner: Option<usize> = None;
    for si in 0..sigmas.len() {
        if winner.is_none_or(|w| best[si].0 > best[w].0) {
            winner = Some(si);
        }
    }
    match winner {
        Some(si) if best[si].0 > 0.0 => {
            let (ri, ci) = best[si].1;
            let point = ProductPoint::new(vec![rows[ri].clone(), cols[ci].clone()])?;
            Ok(OracleOutcome::Found {
                point,
                assignment: sigmas[si].clone(),
                min_score: best[si].0,
            })
        }
        _ => Ok(OracleOutcome::NoneFound),
    }
}

/// Whether some product lattice point at `resolution` has every score
/// along `sigma` strictly positive.
pub fn oracle_sigma_feasible(
    field: &dyn ScoreField,
    sigma: &Assignment,
    resolution: u32,
) -> Result<bool, SolverError> {
    let shape = field.shape();
    if shape.len() != 2 {
        return Err(SolverError::BadInput(format!(
            "oracle needs a two-factor field, got {} factors",
            shape.len()
        )));
    }
    let (n, m) = (shape[0], shape[1]);
    if sigma.len() != m || sigma.map().iter().any(|&i| i >= n) {
        return Err(SolverError::BadInput(format!(
            "assignment {:?} does not fit a {n} x {m} field",
            sigma.map()
        )));
    }
    let rows = lattice_points(n - 1, resolution)?;
    let cols = lattice_points(m - 1, resolution)?;
    for row in &rows {
        let row_f = row.to_f64();
        for col in &cols {
            let col_f = col.to_f64();
            let views: [&[f64]; 2] = [&row_f, &col_f];
            let ok = sigma
                .map()
                .iter()
                .enumerate()
                .all(|(j, &i)| field.eval(&[i, j], &views) > 0.0);
            if ok {
                return Ok(true);
            }
        }
    }
    Ok(false)
}
