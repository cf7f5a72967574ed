//! Cutting planar families by vertical and horizontal lines.
//!
//! A connected planar set is reduced to its two projection intervals
//! ([`Box2`]): an axis-parallel line cuts the set iff its coordinate lies
//! in the matching projection. Families carry an open/closed flag — open
//! sets are cut by strict containment, compact sets by closed
//! containment; the flag also drives the canonical cut positions and
//! disjointness tests.
//!
//! [`find_cut`] decides feasibility of a cut by `n` vertical and `m`
//! horizontal lines exactly. [`find_witness`] exhausts quota-grouped
//! disjointness witnesses. [`witness_from_kkm`] reaches the same
//! dichotomy through the covering solver: partitions of the unit square
//! are scored by how snugly members fit strictly inside their cells, and
//! the balanced point of that field either produces a witness or — when
//! a probed partition supports no member at all — a partition whose
//! interior lines cut every member. Both alternatives of the dichotomy
//! may hold at once; this solver reports whichever it reaches first.

use itertools::Itertools;
use thiserror::Error;

use crate::matching::{Assignment, QuotaVector};
use crate::measure::PartitionPair;
use crate::simplex::ScoreField;
use crate::solver::{solve_kkm_product, SolverError};

#[derive(Debug, Clone, Error)]
pub enum CuttingError {
    #[error("bad box: {0}")]
    BadBox(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("instance exceeds the exact-search budget: {0}")]
    BudgetExceeded(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("witness does not validate: {0}")]
    InvalidWitness(String),
    #[error("re-verification failed: {0}")]
    VerificationFailed(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Containment semantics of a family: open sets (nonempty open
/// projections) or compact sets (closed projections, possibly degenerate).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Open,
    Closed,
}

/// A planar set represented by its x and y projection intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2 {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Box2 {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self, CuttingError> {
        for v in [x_lo, x_hi, y_lo, y_hi] {
            if !v.is_finite() {
                return Err(CuttingError::BadBox(format!("non-finite coordinate {v}")));
            }
        }
        if x_lo > x_hi || y_lo > y_hi {
            return Err(CuttingError::BadBox(format!(
                "inverted projections [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}]"
            )));
        }
        Ok(Self {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> f64 {
        self.y_hi - self.y_lo
    }

    fn interval(&self, axis: Axis) -> (f64, f64) {
        match axis {
            Axis::X => (self.x_lo, self.x_hi),
            Axis::Y => (self.y_lo, self.y_hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

fn contains(interval: (f64, f64), pos: f64, kind: SetKind) -> bool {
    match kind {
        SetKind::Open => interval.0 < pos && pos < interval.1,
        SetKind::Closed => interval.0 <= pos && pos <= interval.1,
    }
}

fn intervals_disjoint(a: (f64, f64), b: (f64, f64), kind: SetKind) -> bool {
    match kind {
        SetKind::Open => a.1 <= b.0 || b.1 <= a.0,
        SetKind::Closed => a.1 < b.0 || b.1 < a.0,
    }
}

/// A family of planar sets under one containment semantics.
#[derive(Debug, Clone)]
pub struct BoxFamily {
    kind: SetKind,
    boxes: Vec<Box2>,
}

impl BoxFamily {
    /// Open sets: both projections must have positive extent.
    pub fn open(boxes: Vec<Box2>) -> Result<Self, CuttingError> {
        for (i, b) in boxes.iter().enumerate() {
            if b.width() <= 0.0 || b.height() <= 0.0 {
                return Err(CuttingError::BadBox(format!(
                    "open set {i} needs positive extent, got {} x {}",
                    b.width(),
                    b.height()
                )));
            }
        }
        Ok(Self {
            kind: SetKind::Open,
            boxes,
        })
    }

    /// Compact sets: degenerate projections (points, segments) allowed.
    pub fn closed(boxes: Vec<Box2>) -> Result<Self, CuttingError> {
        Ok(Self {
            kind: SetKind::Closed,
            boxes,
        })
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn boxes(&self) -> &[Box2] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn subfamily(&self, indices: &[usize]) -> BoxFamily {
        BoxFamily {
            kind: self.kind,
            boxes: indices.iter().map(|&i| self.boxes[i]).collect(),
        }
    }

    /// Whether every member lies inside the unit square.
    pub fn within_unit(&self) -> bool {
        self.boxes.iter().all(|b| {
            b.x_lo >= -1e-9 && b.x_hi <= 1.0 + 1e-9 && b.y_lo >= -1e-9 && b.y_hi <= 1.0 + 1e-9
        })
    }

    /// Rescales the family into the unit square, keeping `pad` of empty
    /// border on every side so members sit strictly inside. Returns the
    /// rescaled family and the frame mapping unit coordinates back.
    pub fn fit_to_unit(&self, pad: f64) -> Result<(BoxFamily, UnitFrame), CuttingError> {
        if !(0.0..0.5).contains(&pad) {
            return Err(CuttingError::BadInput(format!(
                "pad must lie in [0, 0.5), got {pad}"
            )));
        }
        if self.is_empty() {
            return Err(CuttingError::BadInput("cannot fit an empty family".into()));
        }
        let x_lo = self.boxes.iter().map(|b| b.x_lo).fold(f64::INFINITY, f64::min);
        let x_hi = self.boxes.iter().map(|b| b.x_hi).fold(f64::NEG_INFINITY, f64::max);
        let y_lo = self.boxes.iter().map(|b| b.y_lo).fold(f64::INFINITY, f64::min);
        let y_hi = self.boxes.iter().map(|b| b.y_hi).fold(f64::NEG_INFINITY, f64::max);
        let extent = (x_hi - x_lo).max(y_hi - y_lo);
        let frame = UnitFrame {
            offset_x: x_lo,
            offset_y: y_lo,
            scale: if extent > 0.0 { extent } else { 1.0 },
            pad,
        };
        let boxes = self
            .boxes
            .iter()
            .map(|b| Box2 {
                x_lo: frame.to_unit_x(b.x_lo),
                x_hi: frame.to_unit_x(b.x_hi),
                y_lo: frame.to_unit_y(b.y_lo),
                y_hi: frame.to_unit_y(b.y_hi),
            })
            .collect();
        Ok((
            BoxFamily {
                kind: self.kind,
                boxes,
            },
            frame,
        ))
    }
}

/// Affine frame between original plane coordinates and the padded unit
/// square (the same scale on both axes, so shapes are preserved).
#[derive(Debug, Clone, Copy)]
pub struct UnitFrame {
    pub offset_x: f64,
    pub offset_y: f64,
    pub scale: f64,
    pub pad: f64,
}

impl UnitFrame {
    fn factor(&self) -> f64 {
        (1.0 - 2.0 * self.pad) / self.scale
    }

    pub fn to_unit_x(&self, x: f64) -> f64 {
        self.pad + (x - self.offset_x) * self.factor()
    }

    pub fn to_unit_y(&self, y: f64) -> f64 {
        self.pad + (y - self.offset_y) * self.factor()
    }

    pub fn from_unit_x(&self, u: f64) -> f64 {
        self.offset_x + (u - self.pad) / self.factor()
    }

    pub fn from_unit_y(&self, u: f64) -> f64 {
        self.offset_y + (u - self.pad) / self.factor()
    }
}

/// A family of vertical and horizontal cut lines, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct CutFamily {
    vertical: Vec<f64>,
    horizontal: Vec<f64>,
}

impl CutFamily {
    pub fn new(mut vertical: Vec<f64>, mut horizontal: Vec<f64>) -> Self {
        vertical.sort_by(f64::total_cmp);
        vertical.dedup();
        horizontal.sort_by(f64::total_cmp);
        horizontal.dedup();
        Self {
            vertical,
            horizontal,
        }
    }

    pub fn empty() -> Self {
        Self {
            vertical: Vec::new(),
            horizontal: Vec::new(),
        }
    }

    /// The interior boundaries of a partition pair as cut lines.
    pub fn from_pair(pair: &PartitionPair) -> Self {
        Self::new(pair.x_interior().to_vec(), pair.y_interior().to_vec())
    }

    pub fn vertical(&self) -> &[f64] {
        &self.vertical
    }

    pub fn horizontal(&self) -> &[f64] {
        &self.horizontal
    }
}

/// Whether some line of `cut` meets `b` under the given semantics.
pub fn is_cut(b: &Box2, cut: &CutFamily, kind: SetKind) -> bool {
    cut.vertical
        .iter()
        .any(|&v| contains((b.x_lo, b.x_hi), v, kind))
        || cut
            .horizontal
            .iter()
            .any(|&h| contains((b.y_lo, b.y_hi), h, kind))
}

/// Whether `cut` meets every member of the family.
pub fn cuts_family(family: &BoxFamily, cut: &CutFamily) -> bool {
    family.boxes.iter().all(|b| is_cut(b, cut, family.kind))
}

/// Finite set of cut positions sufficient to realize every achievable
/// cut on one axis: the midpoint of each elementary interval of the
/// projection-endpoint arrangement, plus the endpoints themselves for
/// closed families (a closed cut can sit exactly on a boundary).
pub fn canonical_positions(family: &BoxFamily, axis: Axis) -> Vec<f64> {
    let mut endpoints: Vec<f64> = family
        .boxes
        .iter()
        .flat_map(|b| {
            let (lo, hi) = b.interval(axis);
            [lo, hi]
        })
        .collect();
    endpoints.sort_by(f64::total_cmp);
    endpoints.dedup();
    let mut out: Vec<f64> = endpoints.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    if family.kind == SetKind::Closed {
        out.extend_from_slice(&endpoints);
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Result of the cut feasibility search.
#[derive(Debug, Clone, PartialEq)]
pub enum CutOutcome {
    Cut(CutFamily),
    NoneExists,
}

/// The canonical stab position covering an interval that ends at `hi`:
/// for closed families `hi` itself; for open families the midpoint of
/// `hi` and the largest endpoint strictly below it.
fn stab_left(endpoints: &[f64], hi: f64, kind: SetKind) -> f64 {
    match kind {
        SetKind::Closed => hi,
        SetKind::Open => {
            let idx = endpoints.partition_point(|&e| e < hi);
            debug_assert!(idx > 0, "an open interval's low endpoint precedes hi");
            (endpoints[idx - 1] + hi) / 2.0
        }
    }
}

/// Fewest stab positions covering the given intervals, by the classic
/// sweep: order by upper endpoint, stab just inside each first-ending
/// uncovered interval. Positions are canonical.
fn greedy_stabs(
    family: &BoxFamily,
    members: &[usize],
    endpoints: &[f64],
    axis: Axis,
) -> Vec<f64> {
    let mut order: Vec<usize> = members.to_vec();
    order.sort_by(|&a, &b| {
        let ha = family.boxes[a].interval(axis).1;
        let hb = family.boxes[b].interval(axis).1;
        ha.total_cmp(&hb).then(a.cmp(&b))
    });
    let mut out: Vec<f64> = Vec::new();
    for &i in &order {
        let interval = family.boxes[i].interval(axis);
        if let Some(&last) = out.last() {
            // Positions ascend and never pass an uncovered upper endpoint,
            // so checking the most recent stab suffices.
            if contains(interval, last, family.kind) {
                continue;
            }
        }
        out.push(stab_left(endpoints, interval.1, family.kind));
    }
    out
}

fn axis_endpoints(family: &BoxFamily, axis: Axis) -> Vec<f64> {
    let mut endpoints: Vec<f64> = family
        .boxes
        .iter()
        .flat_map(|b| {
            let (lo, hi) = b.interval(axis);
            [lo, hi]
        })
        .collect();
    endpoints.sort_by(f64::total_cmp);
    endpoints.dedup();
    endpoints
}

/// Decides exactly whether the family can be cut by at most `n` vertical
/// and `m` horizontal lines, by branch and bound: repeatedly take the
/// uncut member with the smallest `x_hi` and either cut it with a
/// vertical line at its canonical stab position or defer it to the
/// horizontal side, which is solved greedily.
pub fn find_cut(family: &BoxFamily, n: usize, m: usize) -> Result<CutOutcome, CuttingError> {
    if family.len() > 30 || n > 6 || m > 6 {
        return Err(CuttingError::BudgetExceeded(format!(
            "{} members with budgets {n} + {m}; limits are 30 members and 6 + 6 lines",
            family.len()
        )));
    }
    if family.is_empty() {
        return Ok(CutOutcome::Cut(CutFamily::empty()));
    }
    let x_endpoints = axis_endpoints(family, Axis::X);
    let y_endpoints = axis_endpoints(family, Axis::Y);
    let mut active: Vec<usize> = (0..family.len()).collect();
    active.sort_by(|&a, &b| {
        family.boxes[a]
            .x_hi
            .total_cmp(&family.boxes[b].x_hi)
            .then(a.cmp(&b))
    });
    let mut deferred: Vec<usize> = Vec::new();
    let mut verticals: Vec<f64> = Vec::new();
    let found = branch_cut(
        family,
        &x_endpoints,
        &y_endpoints,
        &active,
        &mut deferred,
        &mut verticals,
        n,
        m,
    );
    match found {
        Some(cut) => {
            debug_assert!(cuts_family(family, &cut));
            Ok(CutOutcome::Cut(cut))
        }
        None => Ok(CutOutcome::NoneExists),
    }
}

#[allow(clippy::too_many_arguments)]
fn branch_cut(
    family: &BoxFamily,
    x_endpoints: &[f64],
    y_endpoints: &[f64],
    active: &[usize],
    deferred: &mut Vec<usize>,
    verticals: &mut Vec<f64>,
    n_left: usize,
    m: usize,
) -> Option<CutFamily> {
    // Horizontal demand only grows as members are deferred.
    let stabs = greedy_stabs(family, deferred, y_endpoints, Axis::Y);
    if stabs.len() > m {
        return None;
    }
    if active.is_empty() {
        return Some(CutFamily::new(verticals.clone(), stabs));
    }
    if n_left == 0 {
        let mut remaining = deferred.clone();
        remaining.extend_from_slice(active);
        let stabs = greedy_stabs(family, &remaining, y_endpoints, Axis::Y);
        if stabs.len() <= m {
            return Some(CutFamily::new(verticals.clone(), stabs));
        }
        return None;
    }

    let first = active[0];
    // Branch (i): a vertical line through the canonical position just
    // left of the first member's right edge.
    let pos = stab_left(x_endpoints, family.boxes[first].x_hi, family.kind);
    debug_assert!(contains(
        (family.boxes[first].x_lo, family.boxes[first].x_hi),
        pos,
        family.kind
    ));
    let surviving: Vec<usize> = active
        .iter()
        .skip(1)
        .copied()
        .filter(|&i| !contains((family.boxes[i].x_lo, family.boxes[i].x_hi), pos, family.kind))
        .collect();
    verticals.push(pos);
    let found = branch_cut(
        family,
        x_endpoints,
        y_endpoints,
        &surviving,
        deferred,
        verticals,
        n_left - 1,
        m,
    );
    verticals.pop();
    if found.is_some() {
        return found;
    }

    // Branch (ii): defer the first member to the horizontal side.
    deferred.push(first);
    let found = branch_cut(
        family,
        x_endpoints,
        y_endpoints,
        &active[1..],
        deferred,
        verticals,
        n_left,
        m,
    );
    deferred.pop();
    found
}

/// An `(m+1)`-subfamily whose members have pairwise disjoint
/// y-projections and fall into `n+1` groups (of sizes given by the
/// quota) with cross-group disjoint x-projections. Such a subfamily
/// cannot be cut by `m` horizontal lines alone (each cuts at most one
/// member) nor by `n` vertical lines alone (each meets at most one
/// group).
#[derive(Debug, Clone, PartialEq)]
pub struct HellyWitness {
    /// Indices into the family, one per column of the grouping.
    pub members: Vec<usize>,
    /// `groups.map()[k]` is the group of `members[k]`, in `0..=n`.
    pub groups: Assignment,
    pub quota: QuotaVector,
}

impl HellyWitness {
    /// Checks every invariant against the family.
    pub fn validate(&self, family: &BoxFamily) -> Result<(), CuttingError> {
        let count = self.quota.target();
        if self.members.len() != count || self.groups.len() != count {
            return Err(CuttingError::InvalidWitness(format!(
                "expected {count} members and group labels, got {} and {}",
                self.members.len(),
                self.groups.len()
            )));
        }
        for &i in &self.members {
            if i >= family.len() {
                return Err(CuttingError::InvalidWitness(format!(
                    "member {i} out of range for family of {}",
                    family.len()
                )));
            }
        }
        let mut sorted = self.members.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != count {
            return Err(CuttingError::InvalidWitness(
                "member indices must be distinct".into(),
            ));
        }
        if self.groups.counts(self.quota.len()) != self.quota.parts() {
            return Err(CuttingError::InvalidWitness(format!(
                "group sizes {:?} do not match quota {:?}",
                self.groups.counts(self.quota.len()),
                self.quota.parts()
            )));
        }
        let kind = family.kind();
        for a in 0..count {
            for b in (a + 1)..count {
                let box_a = &family.boxes()[self.members[a]];
                let box_b = &family.boxes()[self.members[b]];
                if !intervals_disjoint(
                    (box_a.y_lo, box_a.y_hi),
                    (box_b.y_lo, box_b.y_hi),
                    kind,
                ) {
                    return Err(CuttingError::InvalidWitness(format!(
                        "members {} and {} overlap in y",
                        self.members[a], self.members[b]
                    )));
                }
                if self.groups.map()[a] != self.groups.map()[b]
                    && !intervals_disjoint(
                        (box_a.x_lo, box_a.x_hi),
                        (box_b.x_lo, box_b.x_hi),
                        kind,
                    )
                {
                    return Err(CuttingError::InvalidWitness(format!(
                        "cross-group members {} and {} overlap in x",
                        self.members[a], self.members[b]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Exhaustive witness search over `(m+1)`-subsets (lexicographic) and
/// quota-respecting group maps. `quota` has `n+1` parts summing to `m+1`.
pub fn find_witness(
    family: &BoxFamily,
    n: usize,
    m: usize,
    quota: &QuotaVector,
) -> Result<Option<HellyWitness>, CuttingError> {
    if quota.len() != n + 1 || quota.target() != m + 1 {
        return Err(CuttingError::BadInput(format!(
            "quota {:?} must have {} parts summing to {}",
            quota.parts(),
            n + 1,
            m + 1
        )));
    }
    let count = m + 1;
    if family.len() < count {
        return Ok(None);
    }
    let combos = binomial(family.len(), count);
    let work = combos * (n as f64 + 1.0).powi(count as i32);
    if work > 1e7 {
        return Err(CuttingError::TooLarge(format!(
            "witness search needs about {work:.0} checks; limit is 10000000"
        )));
    }
    let kind = family.kind();
    let sigmas = Assignment::enumerate_for(quota);
    for members in (0..family.len()).combinations(count) {
        let y_ok = (0..count).tuple_combinations().all(|(a, b)| {
            let ba = &family.boxes()[members[a]];
            let bb = &family.boxes()[members[b]];
            intervals_disjoint((ba.y_lo, ba.y_hi), (bb.y_lo, bb.y_hi), kind)
        });
        if !y_ok {
            continue;
        }
        for sigma in &sigmas {
            let x_ok = (0..count).tuple_combinations().all(|(a, b)| {
                if sigma.map()[a] == sigma.map()[b] {
                    return true;
                }
                let ba = &family.boxes()[members[a]];
                let bb = &family.boxes()[members[b]];
                intervals_disjoint((ba.x_lo, ba.x_hi), (bb.x_lo, bb.x_hi), kind)
            });
            if x_ok {
                let witness = HellyWitness {
                    members,
                    groups: sigma.clone(),
                    quota: quota.clone(),
                };
                witness.validate(family)?;
                return Ok(Some(witness));
            }
        }
    }
    Ok(None)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut out = 1.0f64;
    for i in 0..k {
        out = out * (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// Scores for the covering reduction: cell `(i, j)` of a partition scores
/// the largest margin by which some member fits strictly inside it. Open
/// families get a small relaxation so that snug-but-valid fits (margin
/// exactly 0, still strict containment between open sets) stay in the
/// support; the relaxation is capped at a quarter of the smallest member
/// extent, which keeps scores zero on degenerate cells.
struct MarginScores<'a> {
    family: &'a BoxFamily,
    shape: Vec<usize>,
    relax: f64,
}

impl ScoreField for MarginScores<'_> {
    fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn eval(&self, index: &[usize], factors: &[&[f64]]) -> f64 {
        let (x_lo, x_hi) = span(factors[0], index[0]);
        let (y_lo, y_hi) = span(factors[1], index[1]);
        let mut best = f64::NEG_INFINITY;
        for b in self.family.boxes() {
            let margin = (b.x_lo - x_lo)
                .min(x_hi - b.x_hi)
                .min(b.y_lo - y_lo)
                .min(y_hi - b.y_hi);
            best = best.max(margin);
        }
        (best + self.relax).max(0.0)
    }
}

fn span(widths: &[f64], i: usize) -> (f64, f64) {
    let lo: f64 = widths[..i].iter().sum();
    (lo, lo + widths[i])
}

fn margin_in_cell(b: &Box2, x: (f64, f64), y: (f64, f64)) -> f64 {
    (b.x_lo - x.0)
        .min(x.1 - b.x_hi)
        .min(b.y_lo - y.0)
        .min(y.1 - b.y_hi)
}

/// Outcome of the covering-solver route to the cutting dichotomy.
#[derive(Debug, Clone)]
pub enum WitnessOutcome {
    Witness(HellyWitness),
    /// A partition of the unit square whose interior lines cut every
    /// member of the family.
    CutPoint(PartitionPair),
}

/// Drives the covering solver on the margin field over partitions of the
/// unit square into `(n+1) x (m+1)` cells. On a balanced point it reads
/// off one member per column (the snuggest fit in the column's assigned
/// cell) — a Helly witness. On an uncovered partition it returns the
/// partition, whose interior lines necessarily cut every member. The
/// family must already lie inside the unit square.
pub fn witness_from_kkm(
    family: &BoxFamily,
    n: usize,
    m: usize,
    quota: &QuotaVector,
    tol: f64,
    budget: usize,
) -> Result<WitnessOutcome, CuttingError> {
    if family.is_empty() {
        return Err(CuttingError::BadInput("family must be nonempty".into()));
    }
    if !family.within_unit() {
        return Err(CuttingError::BadInput(
            "family must lie inside the unit square; rescale with fit_to_unit".into(),
        ));
    }
    if quota.len() != n + 1 || quota.target() != m + 1 {
        return Err(CuttingError::BadInput(format!(
            "quota {:?} must have {} parts summing to {}",
            quota.parts(),
            n + 1,
            m + 1
        )));
    }
    let base_relax = match family.kind() {
        SetKind::Closed => 0.0,
        SetKind::Open => {
            family
                .boxes()
                .iter()
                .map(|b| b.width().min(b.height()))
                .fold(f64::INFINITY, f64::min)
                / 4.0
        }
    };
    let attempts = if family.kind() == SetKind::Open { 4 } else { 1 };
    let mut relax = base_relax;
    for _ in 0..attempts {
        let field = MarginScores {
            family,
            shape: vec![n + 1, m + 1],
            relax,
        };
        match solve_kkm_product(&field, quota, tol, budget) {
            Ok(solution) => {
                let pair = PartitionPair::from_point(&solution.point)
                    .map_err(|e| CuttingError::BadInput(e.to_string()))?;
                match select_members(family, &pair, &solution.assignment) {
                    Some(members) => {
                        let witness = HellyWitness {
                            members,
                            groups: solution.assignment.clone(),
                            quota: quota.clone(),
                        };
                        witness.validate(family)?;
                        return Ok(WitnessOutcome::Witness(witness));
                    }
                    None => {
                        // A selected member only fit thanks to the
                        // relaxation; tighten and retry.
                        relax /= 4.0;
                        continue;
                    }
                }
            }
            Err(SolverError::NotCovered(point)) => {
                let pair = PartitionPair::from_point(&point)
                    .map_err(|e| CuttingError::BadInput(e.to_string()))?;
                let cut = CutFamily::from_pair(&pair);
                if !cuts_family(family, &cut) {
                    return Err(CuttingError::VerificationFailed(
                        "uncovered partition does not cut every member".into(),
                    ));
                }
                return Ok(WitnessOutcome::CutPoint(pair));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(CuttingError::VerificationFailed(
        "every attempt selected members inside the relaxation band".into(),
    ))
}

/// For each column, the member with the largest containment margin in the
/// column's assigned cell; `None` if some column's best member does not
/// genuinely fit (open: margin >= 0; closed: margin > 0).
fn select_members(
    family: &BoxFamily,
    pair: &PartitionPair,
    assignment: &Assignment,
) -> Option<Vec<usize>> {
    let mut members = Vec::with_capacity(assignment.len());
    for (j, &i) in assignment.map().iter().enumerate() {
        let x = pair.x_bounds(i);
        let y = pair.y_bounds(j);
        let best = (0..family.len())
            .map(|k| (k, margin_in_cell(&family.boxes()[k], x, y)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))?;
        let fits = match family.kind() {
            SetKind::Open => best.1 >= 0.0,
            SetKind::Closed => best.1 > 0.0,
        };
        if !fits {
            return None;
        }
        members.push(best.0);
    }
    Some(members)
}

/// Report of the Helly-type condition check.
#[derive(Debug, Clone)]
pub struct HellyReport {
    /// True when every subfamily of size at most `m + 1` can be cut by
    /// `m` horizontal lines alone or by `n` vertical lines alone.
    pub premise: bool,
    /// The first (smallest, then lexicographic) violating subfamily.
    pub violating: Option<Vec<usize>>,
    pub conclusion: CutOutcome,
    /// `premise` implies `conclusion` is a cut. Never false when the
    /// underlying theorem holds.
    pub theorem_respected: bool,
}

/// Checks the Helly-type statement on the family: if every subfamily of
/// size `<= m + 1` is cut by `m` horizontals alone or `n` verticals
/// alone, then the whole family is cut by `m` horizontals and `n`
/// verticals together. The statement presumes `1 <= n <= m`; outside
/// that range it is simply false (one vertical budget with `m = 0`
/// already fails on three staggered boxes), so such inputs are rejected.
pub fn helly_check(family: &BoxFamily, n: usize, m: usize) -> Result<HellyReport, CuttingError> {
    if n == 0 || m < n {
        return Err(CuttingError::BadInput(format!(
            "the condition needs 1 <= n <= m, got n = {n}, m = {m}"
        )));
    }
    if family.len() > 30 || n > 6 || m > 6 {
        return Err(CuttingError::BudgetExceeded(format!(
            "{} members with budgets {n} + {m}; limits are 30 members and 6 + 6 lines",
            family.len()
        )));
    }
    let max_size = (m + 1).min(family.len());
    let mut subsets = 0.0f64;
    for k in 1..=max_size {
        subsets += binomial(family.len(), k);
    }
    if subsets > 1e6 {
        return Err(CuttingError::TooLarge(format!(
            "premise needs {subsets:.0} subfamilies; limit is 1000000"
        )));
    }

    let mut premise = true;
    let mut violating = None;
    'outer: for k in 1..=max_size {
        for combo in (0..family.len()).combinations(k) {
            let sub = family.subfamily(&combo);
            let horizontal_only = matches!(find_cut(&sub, 0, m)?, CutOutcome::Cut(_));
            if horizontal_only {
                continue;
            }
            let vertical_only = matches!(find_cut(&sub, n, 0)?, CutOutcome::Cut(_));
            if !vertical_only {
                premise = false;
                violating = Some(combo);
                break 'outer;
            }
        }
    }
    let conclusion = find_cut(family, n, m)?;
    let theorem_respected = !premise || matches!(conclusion, CutOutcome::Cut(_));
    Ok(HellyReport {
        premise,
        violating,
        conclusion,
        theorem_respected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Box2 {
        Box2::new(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    /// Three boxes pairwise disjoint in both projections: (2k, 2k+1)^2.
    fn diagonal3() -> BoxFamily {
        let boxes = (0..3)
            .map(|k| {
                let lo = 2.0 * k as f64;
                Box2::new(lo, lo + 1.0, lo, lo + 1.0).unwrap()
            })
            .collect();
        BoxFamily::open(boxes).unwrap()
    }

    fn quota(parts: &[usize]) -> QuotaVector {
        QuotaVector::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn is_cut_respects_open_boundaries() {
        let b = unit_box();
        assert!(is_cut(
            &b,
            &CutFamily::new(vec![0.5], vec![]),
            SetKind::Open
        ));
        assert!(!is_cut(
            &b,
            &CutFamily::new(vec![1.0], vec![]),
            SetKind::Open
        ));
        assert!(is_cut(
            &b,
            &CutFamily::new(vec![1.0], vec![]),
            SetKind::Closed
        ));
        let high = Box2::new(0.0, 1.0, 2.0, 3.0).unwrap();
        assert!(is_cut(
            &high,
            &CutFamily::new(vec![], vec![2.5]),
            SetKind::Open
        ));
        assert!(!is_cut(
            &high,
            &CutFamily::new(vec![], vec![0.5]),
            SetKind::Open
        ));
    }

    #[test]
    fn canonical_positions_cover_elementary_intervals() {
        let family = BoxFamily::open(vec![
            Box2::new(0.0, 1.0, 0.0, 1.0).unwrap(),
            Box2::new(2.0, 3.0, 0.0, 1.0).unwrap(),
        ])
        .unwrap();
        let pos = canonical_positions(&family, Axis::X);
        assert!(pos.contains(&0.5));
        assert!(pos.contains(&2.5));

        let family = BoxFamily::open(vec![
            Box2::new(0.0, 2.0, 0.0, 1.0).unwrap(),
            Box2::new(1.0, 3.0, 0.0, 1.0).unwrap(),
        ])
        .unwrap();
        let pos = canonical_positions(&family, Axis::X);
        assert!(pos.contains(&1.5));

        let family = BoxFamily::open(vec![unit_box()]).unwrap();
        assert_eq!(canonical_positions(&family, Axis::X), vec![0.5]);

        // Closed families also get the endpoints.
        let family = BoxFamily::closed(vec![unit_box()]).unwrap();
        let pos = canonical_positions(&family, Axis::X);
        assert_eq!(pos, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn overlapping_boxes_cut_by_one_vertical() {
        // Two boxes sharing the x-overlap (0, 1).
        let family = BoxFamily::open(vec![
            Box2::new(0.0, 1.0, 0.0, 1.0).unwrap(),
            Box2::new(0.0, 1.0, 2.0, 3.0).unwrap(),
        ])
        .unwrap();
        match find_cut(&family, 1, 1).unwrap() {
            CutOutcome::Cut(cut) => {
                assert_eq!(cut.vertical(), &[0.5]);
                assert!(cut.horizontal().is_empty());
                assert!(cuts_family(&family, &cut));
            }
            CutOutcome::NoneExists => panic!("a vertical through the overlap cuts both"),
        }
    }

    #[test]
    fn diagonal_three_needs_three_lines() {
        // Each line cuts at most one of the three: 1 + 1 lines fail.
        assert_eq!(find_cut(&diagonal3(), 1, 1).unwrap(), CutOutcome::NoneExists);

        // 1 + 2 lines suffice.
        match find_cut(&diagonal3(), 1, 2).unwrap() {
            CutOutcome::Cut(cut) => {
                assert_eq!(cut.vertical(), &[0.5]);
                assert_eq!(cut.horizontal(), &[2.5, 4.5]);
            }
            CutOutcome::NoneExists => panic!("three lines cut three boxes"),
        }
    }

    #[test]
    fn closed_point_boxes_need_exact_lines() {
        // Two degenerate closed boxes at the same x: only the exact
        // endpoint position cuts both.
        let family = BoxFamily::closed(vec![
            Box2::new(0.3, 0.3, 0.1, 0.2).unwrap(),
            Box2::new(0.3, 0.3, 0.7, 0.9).unwrap(),
        ])
        .unwrap();
        match find_cut(&family, 1, 0).unwrap() {
            CutOutcome::Cut(cut) => assert_eq!(cut.vertical(), &[0.3]),
            CutOutcome::NoneExists => panic!("the shared x-coordinate cuts both"),
        }
        // Open semantics cannot cut a degenerate interval at all, and the
        // open constructor rejects such boxes outright.
        assert!(BoxFamily::open(vec![Box2::new(0.3, 0.3, 0.1, 0.2).unwrap()]).is_err());
    }

    #[test]
    fn budget_guards() {
        let boxes: Vec<Box2> = (0..31)
            .map(|k| Box2::new(k as f64, k as f64 + 0.5, 0.0, 1.0).unwrap())
            .collect();
        let family = BoxFamily::open(boxes).unwrap();
        assert!(matches!(
            find_cut(&family, 1, 1),
            Err(CuttingError::BudgetExceeded(_))
        ));
        assert!(matches!(
            find_cut(&diagonal3(), 7, 1),
            Err(CuttingError::BudgetExceeded(_))
        ));
    }

    #[test]
    fn witness_found_for_diagonal_three() {
        let witness = find_witness(&diagonal3(), 1, 2, &quota(&[1, 2]))
            .unwrap()
            .expect("all projections pairwise disjoint");
        assert_eq!(witness.members, vec![0, 1, 2]);
        assert_eq!(witness.groups.map(), &[0, 1, 1]);
        witness.validate(&diagonal3()).unwrap();
    }

    #[test]
    fn witness_requires_y_disjointness() {
        let family = BoxFamily::open(vec![
            Box2::new(0.0, 1.0, 0.0, 0.6).unwrap(),
            Box2::new(2.0, 3.0, 0.4, 1.0).unwrap(),
        ])
        .unwrap();
        assert!(find_witness(&family, 1, 1, &quota(&[1, 1]))
            .unwrap()
            .is_none());
    }

    #[test]
    fn witness_requires_cross_group_x_disjointness() {
        // m+1 = 3 stacked boxes share their x-interval: any grouping into
        // two nonempty groups hits the x-condition.
        let family = BoxFamily::open(vec![
            Box2::new(0.0, 1.0, 0.0, 1.0).unwrap(),
            Box2::new(0.0, 1.0, 2.0, 3.0).unwrap(),
            Box2::new(0.0, 1.0, 4.0, 5.0).unwrap(),
        ])
        .unwrap();
        assert!(find_witness(&family, 1, 2, &quota(&[1, 2]))
            .unwrap()
            .is_none());
    }

    #[test]
    fn witness_obstructs_single_orientation_cuts() {
        let witness = find_witness(&diagonal3(), 1, 2, &quota(&[1, 2]))
            .unwrap()
            .unwrap();
        let sub = diagonal3().subfamily(&witness.members);
        assert_eq!(find_cut(&sub, 0, 2).unwrap(), CutOutcome::NoneExists);
        assert_eq!(find_cut(&sub, 1, 0).unwrap(), CutOutcome::NoneExists);
    }

    #[test]
    fn kkm_route_resolves_diagonal_three() {
        let (unit, _) = diagonal3().fit_to_unit(0.125).unwrap();
        match witness_from_kkm(&unit, 1, 2, &quota(&[1, 2]), 1e-3, 40).unwrap() {
            WitnessOutcome::Witness(w) => {
                w.validate(&unit).unwrap();
                // Must agree with the exhaustive search on existence.
                assert!(find_witness(&unit, 1, 2, &quota(&[1, 2])).unwrap().is_some());
            }
            WitnessOutcome::CutPoint(pair) => {
                // Both dichotomy arms hold for this family; a returned
                // partition must genuinely cut everything.
                let cut = CutFamily::from_pair(&pair);
                assert!(cuts_family(&unit, &cut));
            }
        }
    }

    #[test]
    fn kkm_route_cuts_stacked_boxes() {
        // Three stacked boxes sharing x-overlap: no witness exists, so
        // the solver must surface a cutting partition.
        let family = BoxFamily::open(vec![
            Box2::new(0.2, 0.8, 0.05, 0.25).unwrap(),
            Box2::new(0.25, 0.85, 0.4, 0.6).unwrap(),
            Box2::new(0.15, 0.75, 0.75, 0.95).unwrap(),
        ])
        .unwrap();
        match witness_from_kkm(&family, 1, 2, &quota(&[1, 2]), 1e-3, 40).unwrap() {
            WitnessOutcome::CutPoint(pair) => {
                let cut = CutFamily::from_pair(&pair);
                assert!(cuts_family(&family, &cut));
            }
            WitnessOutcome::Witness(w) => {
                panic!("stacked boxes admit no witness, got {w:?}")
            }
        }
    }

    #[test]
    fn kkm_route_cuts_full_square_member() {
        // A member filling the square fits strictly inside no cell, but
        // any interior line cuts it.
        let family = BoxFamily::open(vec![
            Box2::new(0.01, 0.99, 0.01, 0.99).unwrap(),
            Box2::new(0.1, 0.4, 0.2, 0.4).unwrap(),
        ])
        .unwrap();
        match witness_from_kkm(&family, 1, 1, &quota(&[1, 1]), 1e-3, 40).unwrap() {
            WitnessOutcome::CutPoint(pair) => {
                let cut = CutFamily::from_pair(&pair);
                assert!(cuts_family(&family, &cut));
            }
            WitnessOutcome::Witness(w) => {
                panic!("the full-square member fits in no cell, got {w:?}")
            }
        }
    }

    #[test]
    fn kkm_route_validates_inputs() {
        assert!(matches!(
            witness_from_kkm(&diagonal3(), 1, 2, &quota(&[1, 2]), 1e-3, 10),
            Err(CuttingError::BadInput(_))
        ));
        let (unit, _) = diagonal3().fit_to_unit(0.125).unwrap();
        assert!(matches!(
            witness_from_kkm(&unit, 1, 2, &quota(&[1, 1]), 1e-3, 10),
            Err(CuttingError::BadInput(_))
        ));
    }

    #[test]
    fn helly_premise_true_for_common_x_point() {
        // All boxes contain x = 0.5: one vertical line cuts any subfamily.
        let family = BoxFamily::open(vec![
            Box2::new(0.2, 0.8, 0.0, 1.0).unwrap(),
            Box2::new(0.4, 0.6, 2.0, 3.0).unwrap(),
            Box2::new(0.1, 0.9, 4.0, 5.0).unwrap(),
        ])
        .unwrap();
        let report = helly_check(&family, 1, 1).unwrap();
        assert!(report.premise);
        assert!(report.violating.is_none());
        assert!(matches!(report.conclusion, CutOutcome::Cut(_)));
        assert!(report.theorem_respected);
    }

    #[test]
    fn helly_premise_fails_for_diagonal_pair() {
        let report = helly_check(&diagonal3(), 1, 1).unwrap();
        assert!(!report.premise);
        assert_eq!(report.violating, Some(vec![0, 1]));
        assert!(report.theorem_respected);
    }

    #[test]
    fn helly_rejects_out_of_range_budgets() {
        assert!(matches!(
            helly_check(&diagonal3(), 0, 2),
            Err(CuttingError::BadInput(_))
        ));
        assert!(matches!(
            helly_check(&diagonal3(), 2, 1),
            Err(CuttingError::BadInput(_))
        ));
    }

    #[test]
    fn fit_to_unit_keeps_shape_and_pads() {
        let (unit, frame) = diagonal3().fit_to_unit(0.125).unwrap();
        assert!(unit.within_unit());
        for b in unit.boxes() {
            assert!(b.x_lo >= 0.125 - 1e-12 && b.x_hi <= 0.875 + 1e-12);
        }
        // Round trip.
        let b0 = unit.boxes()[0];
        assert!((frame.from_unit_x(b0.x_lo) - 0.0).abs() < 1e-12);
        assert!((frame.from_unit_x(b0.x_hi) - 1.0).abs() < 1e-12);
        assert!((frame.from_unit_y(b0.y_hi) - 1.0).abs() < 1e-12);
    }
}
