//! Quota-constrained bipartite matching and r-partite hypergraph matching.
//!
//! The bipartite side assigns every right vertex to an adjacent left
//! vertex so that left vertex `i` receives exactly `quota[i]` of them —
//! a degree-constrained perfect matching of the right side. Infeasibility
//! comes with a Hall-style certificate: a left set whose quota sum exceeds
//! its joint neighborhood. The hypergraph side finds a maximum matching
//! (pairwise disjoint edges) of an r-partite hypergraph by exhaustive
//! branch and bound, and separately verifies fractional matchings given
//! as edge weights. Everything here is deterministic: ties break toward
//! smaller indices.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MatchingError {
    #[error("quota vector must be nonempty")]
    EmptyQuota,
    #[error("quota part {index} is zero; every part must be positive")]
    ZeroQuotaPart { index: usize },
    #[error("quota parts sum to {total}, expected {expected}")]
    QuotaSumMismatch { total: usize, expected: usize },
    #[error("quota has {parts} parts, graph has {left} left vertices")]
    QuotaLengthMismatch { parts: usize, left: usize },
    #[error("vertex {vertex} out of range for side of size {size}")]
    VertexOutOfRange { vertex: usize, size: usize },
    #[error("edge {position} has {got} entries, hypergraph has {classes} classes")]
    ArityMismatch {
        position: usize,
        got: usize,
        classes: usize,
    },
    #[error("hypergraph has {got} weights for {edges} edges")]
    WeightCountMismatch { got: usize, edges: usize },
    #[error("weight {position} is {value}; weights must be finite and nonnegative")]
    BadWeight { position: usize, value: f64 },
    #[error("hypergraph carries no weights")]
    MissingWeights,
    #[error("instance too large for exhaustive check: {detail}")]
    TooLarge { detail: String },
    #[error("sides must be positive: left {left}, right {right}")]
    EmptySide { left: usize, right: usize },
}

/// Positive integer quotas for the left side of a bipartite graph; the
/// parts sum to the number of right vertices being distributed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotaVector {
    parts: Vec<usize>,
}

impl QuotaVector {
    pub fn new(parts: Vec<usize>) -> Result<Self, MatchingError> {
        if parts.is_empty() {
            return Err(MatchingError::EmptyQuota);
        }
        for (index, &a) in parts.iter().enumerate() {
            if a == 0 {
                return Err(MatchingError::ZeroQuotaPart { index });
            }
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn part(&self, index: usize) -> usize {
        self.parts[index]
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sum of the parts: the number of right vertices a feasible
    /// assignment must distribute.
    pub fn target(&self) -> usize {
        self.parts.iter().sum()
    }

    /// All quota vectors with `parts` positive parts summing to `total`,
    /// in lexicographic order.
    pub fn compositions(total: usize, parts: usize) -> Vec<QuotaVector> {
        let mut out = Vec::new();
        if parts == 0 || total < parts {
            return out;
        }
        let mut current = vec![0usize; parts];
        fn rec(out: &mut Vec<QuotaVector>, current: &mut [usize], pos: usize, remaining: usize) {
            let left = current.len() - pos;
            if left == 1 {
                current[pos] = remaining;
                out.push(QuotaVector {
                    parts: current.to_vec(),
                });
                return;
            }
            // Keep at least 1 for each later part.
            for v in 1..=(remaining - (left - 1)) {
                current[pos] = v;
                rec(out, current, pos + 1, remaining - v);
            }
        }
        rec(&mut out, &mut current, 0, total);
        out
    }
}

/// Bipartite graph with `left` and `right` vertex counts and deduplicated,
/// sorted adjacency lists.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    left: usize,
    right: usize,
    adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(left: usize, right: usize, edges: &[(usize, usize)]) -> Result<Self, MatchingError> {
        if left == 0 || right == 0 {
            return Err(MatchingError::EmptySide { left, right });
        }
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); left];
        for &(v, w) in edges {
            if v >= left {
                return Err(MatchingError::VertexOutOfRange {
                    vertex: v,
                    size: left,
                });
            }
            if w >= right {
                return Err(MatchingError::VertexOutOfRange {
                    vertex: w,
                    size: right,
                });
            }
            sets[v].insert(w);
        }
        let adj = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        Ok(Self { left, right, adj })
    }

    /// Complete bipartite graph.
    pub fn complete(left: usize, right: usize) -> Self {
        let adj = vec![(0..right).collect::<Vec<_>>(); left];
        Self { left, right, adj }
    }

    pub fn left_count(&self) -> usize {
        self.left
    }

    pub fn right_count(&self) -> usize {
        self.right
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, v: usize, w: usize) -> bool {
        self.adj[v].binary_search(&w).is_ok()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (v, ws) in self.adj.iter().enumerate() {
            for &w in ws {
                out.push((v, w));
            }
        }
        out
    }
}

/// A map from right vertices to left vertices: `map()[j]` is the left
/// vertex that receives right vertex `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    sigma: Vec<usize>,
}

impl Assignment {
    pub fn new(sigma: Vec<usize>) -> Self {
        Self { sigma }
    }

    pub fn map(&self) -> &[usize] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// How many right vertices each of `left` left vertices receives.
    pub fn counts(&self, left: usize) -> Vec<usize> {
        let mut out = vec![0usize; left];
        for &v in &self.sigma {
            out[v] += 1;
        }
        out
    }

    /// Whether this assignment uses only edges of `graph` and meets
    /// `quota` exactly.
    pub fn satisfies(&self, graph: &BipartiteGraph, quota: &QuotaVector) -> bool {
        self.sigma.len() == graph.right_count()
            && quota.len() == graph.left_count()
            && self.counts(graph.left_count()) == quota.parts()
            && self
                .sigma
                .iter()
                .enumerate()
                .all(|(w, &v)| graph.has_edge(v, w))
    }

    /// Every assignment of `quota.target()` right vertices whose counts
    /// equal `quota`, in lexicographic order of the maps.
    pub fn enumerate_for(quota: &QuotaVector) -> Vec<Assignment> {
        let m = quota.target();
        let n = quota.len();
        let mut out = Vec::new();
        let mut sigma = vec![0usize; m];
        let mut remaining: Vec<usize> = quota.parts().to_vec();
        fn rec(
            out: &mut Vec<Assignment>,
            sigma: &mut [usize],
            remaining: &mut [usize],
            pos: usize,
            n: usize,
        ) {
            if pos == sigma.len() {
                out.push(Assignment {
                    sigma: sigma.to_vec(),
                });
                return;
            }
            for v in 0..n {
                if remaining[v] == 0 {
                    continue;
                }
                sigma[pos] = v;
                remaining[v] -= 1;
                rec(out, sigma, remaining, pos + 1, n);
                remaining[v] += 1;
            }
        }
        rec(&mut out, &mut sigma, &mut remaining, 0, n);
        out
    }
}

/// Result of a quota matching attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuotaMatching {
    Feasible(Assignment),
    /// A set of left vertices whose joint neighborhood is smaller than
    /// its quota sum — a witness that no feasible assignment exists.
    Infeasible { violating: Vec<usize> },
}

/// Finds an assignment meeting `quota`, or a Hall-style violating set.
///
/// Runs augmenting-path search once per unit of quota (a left vertex with
/// quota `a` behaves like `a` unit-capacity copies). Deterministic:
/// vertices and neighbors are scanned in increasing order, so the
/// feasible assignment is reproducible across runs.
pub fn quota_matching(
    graph: &BipartiteGraph,
    quota: &QuotaVector,
) -> Result<QuotaMatching, MatchingError> {
    if quota.len() != graph.left_count() {
        return Err(MatchingError::QuotaLengthMismatch {
            parts: quota.len(),
            left: graph.left_count(),
        });
    }
    if quota.target() != graph.right_count() {
        return Err(MatchingError::QuotaSumMismatch {
            total: quota.target(),
            expected: graph.right_count(),
        });
    }
    let m = graph.right_count();
    // owner[w] = left vertex currently holding right vertex w.
    let mut owner: Vec<Option<usize>> = vec![None; m];
    let mut complete = true;
    for v in 0..graph.left_count() {
        for _ in 0..quota.part(v) {
            let mut seen = vec![false; m];
            if !augment(graph, v, &mut seen, &mut owner) {
                complete = false;
            }
        }
    }
    if complete {
        let sigma = owner
            .into_iter()
            .map(|o| o.expect("all right vertices owned"))
            .collect();
        return Ok(QuotaMatching::Feasible(Assignment { sigma }));
    }

    // Alternating reachability from unsaturated left vertices on the final
    // matching: the reachable left set violates the quota Hall condition.
    let mut load = vec![0usize; graph.left_count()];
    for owner in owner.iter().flatten() {
        load[*owner] += 1;
    }
    let mut seen_left = vec![false; graph.left_count()];
    let mut seen_right = vec![false; m];
    let mut stack: Vec<usize> = (0..graph.left_count())
        .filter(|&v| load[v] < quota.part(v))
        .collect();
    for &v in &stack {
        seen_left[v] = true;
    }
    while let Some(v) = stack.pop() {
        for &w in graph.neighbors(v) {
            if seen_right[w] {
                continue;
            }
            seen_right[w] = true;
            if let Some(u) = owner[w] {
                if !seen_left[u] {
                    seen_left[u] = true;
                    stack.push(u);
                }
            }
        }
    }
    let violating: Vec<usize> = (0..graph.left_count()).filter(|&v| seen_left[v]).collect();
    debug_assert!({
        let quota_sum: usize = violating.iter().map(|&v| quota.part(v)).sum();
        let hood: BTreeSet<usize> = violating
            .iter()
            .flat_map(|&v| graph.neighbors(v).iter().copied())
            .collect();
        hood.len() < quota_sum
    });
    Ok(QuotaMatching::Infeasible { violating })
}

fn augment(
    graph: &BipartiteGraph,
    v: usize,
    seen: &mut [bool],
    owner: &mut [Option<usize>],
) -> bool {
    // Take the smallest free neighbor before rerouting anyone; this keeps
    // assignments on complete supports in diagonal-ish order.
    for &w in graph.neighbors(v) {
        if !seen[w] && owner[w].is_none() {
            seen[w] = true;
            owner[w] = Some(v);
            return true;
        }
    }
    for &w in graph.neighbors(v) {
        if seen[w] {
            continue;
        }
        seen[w] = true;
        match owner[w] {
            None => {
                owner[w] = Some(v);
                return true;
            }
            Some(u) => {
                if augment(graph, u, seen, owner) {
                    owner[w] = Some(v);
                    return true;
                }
            }
        }
    }
    false
}

/// Checks the quota Hall condition by enumerating every nonempty left
/// subset: feasibility holds iff each subset's joint neighborhood has at
/// least its quota sum. Exponential in the left side; limited to
/// `left <= 20` and `right <= 128`.
pub fn check_hall_quota(
    graph: &BipartiteGraph,
    quota: &QuotaVector,
) -> Result<bool, MatchingError> {
    if quota.len() != graph.left_count() {
        return Err(MatchingError::QuotaLengthMismatch {
            parts: quota.len(),
            left: graph.left_count(),
        });
    }
    if quota.target() != graph.right_count() {
        return Err(MatchingError::QuotaSumMismatch {
            total: quota.target(),
            expected: graph.right_count(),
        });
    }
    let n = graph.left_count();
    if n > 20 || graph.right_count() > 128 {
        return Err(MatchingError::TooLarge {
            detail: format!(
                "hall check on {n} x {} graph; limit is 20 x 128",
                graph.right_count()
            ),
        });
    }
    let masks: Vec<u128> = (0..n)
        .map(|v| {
            graph
                .neighbors(v)
                .iter()
                .fold(0u128, |acc, &w| acc | (1u128 << w))
        })
        .collect();
    for subset in 1u32..(1u32 << n) {
        let mut hood = 0u128;
        let mut demand = 0usize;
        for (v, mask) in masks.iter().enumerate() {
            if subset & (1 << v) != 0 {
                hood |= mask;
                demand += quota.part(v);
            }
        }
        if (hood.count_ones() as usize) < demand {
            return Ok(false);
        }
    }
    Ok(true)
}

/// An r-partite hypergraph on `classes` classes of `class_size` vertices
/// each; an edge picks one vertex per class. Optionally carries one
/// nonnegative weight per edge.
#[derive(Debug, Clone)]
pub struct Hypergraph {
    classes: usize,
    class_size: usize,
    edges: Vec<Vec<usize>>,
    weights: Option<Vec<f64>>,
}

impl Hypergraph {
    pub fn new(
        classes: usize,
        class_size: usize,
        edges: Vec<Vec<usize>>,
    ) -> Result<Self, MatchingError> {
        if classes == 0 || class_size == 0 {
            return Err(MatchingError::EmptySide {
                left: classes,
                right: class_size,
            });
        }
        for (position, e) in edges.iter().enumerate() {
            if e.len() != classes {
                return Err(MatchingError::ArityMismatch {
                    position,
                    got: e.len(),
                    classes,
                });
            }
            for &v in e {
                if v >= class_size {
                    return Err(MatchingError::VertexOutOfRange {
                        vertex: v,
                        size: class_size,
                    });
                }
            }
        }
        Ok(Self {
            classes,
            class_size,
            edges,
            weights: None,
        })
    }

    pub fn with_weights(
        classes: usize,
        class_size: usize,
        edges: Vec<Vec<usize>>,
        weights: Vec<f64>,
    ) -> Result<Self, MatchingError> {
        let mut h = Self::new(classes, class_size, edges)?;
        if weights.len() != h.edges.len() {
            return Err(MatchingError::WeightCountMismatch {
                got: weights.len(),
                edges: h.edges.len(),
            });
        }
        for (position, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(MatchingError::BadWeight { position, value: w });
            }
        }
        h.weights = Some(weights);
        Ok(h)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn class_size(&self) -> usize {
        self.class_size
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }
}

/// A set of pairwise disjoint hypergraph edges (no two share a vertex in
/// any class).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HMatching {
    pub edges: Vec<Vec<usize>>,
}

impl HMatching {
    pub fn size(&self) -> usize {
        self.edges.len()
    }

    /// Whether the stored edges really are pairwise disjoint per class.
    pub fn is_disjoint(&self) -> bool {
        let Some(first) = self.edges.first() else {
            return true;
        };
        let classes = first.len();
        for k in 0..classes {
            let mut seen = BTreeSet::new();
            for e in &self.edges {
                if !seen.insert(e[k]) {
                    return false;
                }
            }
        }
        true
    }
}

/// Exact maximum matching by branch and bound over edges in construction
/// order: at each edge, try including it (if compatible), then excluding
/// it, pruning when the remaining edges cannot beat the incumbent.
/// Deterministic; exhaustive, so intended for desk-scale inputs
/// (limited to 100000 edges).
pub fn max_hypergraph_matching(h: &Hypergraph) -> Result<HMatching, MatchingError> {
    if h.edges.len() > 100_000 {
        return Err(MatchingError::TooLarge {
            detail: format!("{} edges; limit is 100000", h.edges.len()),
        });
    }
    let mut used = vec![vec![false; h.class_size]; h.classes];
    let mut chosen: Vec<usize> = Vec::new();
    let mut best: Vec<usize> = Vec::new();
    branch(h, 0, &mut used, &mut chosen, &mut best);
    let mut edges: Vec<Vec<usize>> = best.into_iter().map(|i| h.edges[i].clone()).collect();
    edges.sort();
    Ok(HMatching { edges })
}

fn branch(
    h: &Hypergraph,
    next: usize,
    used: &mut [Vec<bool>],
    chosen: &mut Vec<usize>,
    best: &mut Vec<usize>,
) {
    // Matching size can never exceed class capacity or remaining edges.
    let capacity = h.class_size - used[0].iter().filter(|&&u| u).count();
    let bound = chosen.len() + capacity.min(h.edges.len() - next);
    if bound <= best.len() {
        return;
    }
    if next == h.edges.len() {
        if chosen.len() > best.len() {
            *best = chosen.clone();
        }
        return;
    }
    let edge = &h.edges[next];
    let compatible = edge.iter().enumerate().all(|(k, &v)| !used[k][v]);
    if compatible {
        for (k, &v) in edge.iter().enumerate() {
            used[k][v] = true;
        }
        chosen.push(next);
        branch(h, next + 1, used, chosen, best);
        chosen.pop();
        for (k, &v) in edge.iter().enumerate() {
            used[k][v] = false;
        }
    }
    branch(h, next + 1, used, chosen, best);
}

/// Verifies that edge weights form a perfect fractional matching: the
/// weights incident to every vertex of every class sum to
/// `1 / class_size` and the total is 1, both within `1e-9`.
pub fn verify_fractional_matching(h: &Hypergraph) -> Result<bool, MatchingError> {
    let weights = h.weights().ok_or(MatchingError::MissingWeights)?;
    let target = 1.0 / h.class_size as f64;
    let mut incident = vec![vec![0.0f64; h.class_size]; h.classes];
    let mut total = 0.0f64;
    for (e, &w) in h.edges.iter().zip(weights) {
        total += w;
        for (k, &v) in e.iter().enumerate() {
            incident[k][v] += w;
        }
    }
    if (total - 1.0).abs() > 1e-9 {
        return Ok(false);
    }
    Ok(incident
        .iter()
        .all(|class| class.iter().all(|&s| (s - target).abs() <= 1e-9)))
}
