//! Seeded instance generators and independent reference oracles shared by
//! the integration suites.

#![allow(dead_code)]

use itertools::Itertools;
use kkm_core::cutting::{canonical_positions, cuts_family, Axis, Box2, BoxFamily, CutFamily};
use kkm_core::matching::Hypergraph;
use kkm_core::simplex::FnField;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random covering of the product of simplices by `n * m` smooth sets:
/// score `(i, j)` is `x_i * y_j` times a positive log-linear bump. The
/// coordinate factors pin both forbidden-face conditions exactly;
/// positivity of the bumps keeps the total positive everywhere, so the
/// covering is always valid and a balanced point exists.
pub fn smooth_cover_field(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
) -> FnField<impl Fn(&[usize], &[&[f64]]) -> f64 + Sync> {
    let offs: Vec<f64> = (0..n * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let row_coef: Vec<f64> = (0..n * m * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let col_coef: Vec<f64> = (0..n * m * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    FnField::new(vec![n, m], move |index: &[usize], factors: &[&[f64]]| {
        let (i, j) = (index[0], index[1]);
        let cell = i * m + j;
        let mut exponent = offs[cell];
        for (k, &x) in factors[0].iter().enumerate() {
            exponent += row_coef[cell * n + k] * x;
        }
        for (l, &y) in factors[1].iter().enumerate() {
            exponent += col_coef[cell * m + l] * y;
        }
        factors[0][i] * factors[1][j] * exponent.exp()
    })
}

/// A covering with genuinely restricted supports: score `(i, j)` vanishes
/// unless `y_j` clears a random threshold below `1/m`. Because some
/// column coordinate always reaches `1/m`, every point keeps a positive
/// total, so the covering stays valid while individual supports shrink.
pub fn threshold_cover_field(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
) -> FnField<impl Fn(&[usize], &[&[f64]]) -> f64 + Sync> {
    let gains: Vec<f64> = (0..n * m).map(|_| rng.gen_range(0.5..1.5)).collect();
    let cutoffs: Vec<f64> = (0..n * m)
        .map(|_| rng.gen_range(0.0..(1.0 / m as f64 - 0.05)))
        .collect();
    FnField::new(vec![n, m], move |index: &[usize], factors: &[&[f64]]| {
        let (i, j) = (index[0], index[1]);
        let cell = i * m + j;
        factors[0][i] * gains[cell] * (factors[1][j] - cutoffs[cell]).max(0.0)
    })
}

fn random_matching_edges(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
    let mut second: Vec<usize> = (0..n).collect();
    let mut third: Vec<usize> = (0..n).collect();
    second.shuffle(rng);
    third.shuffle(rng);
    (0..n).map(|v| vec![v, second[v], third[v]]).collect()
}

/// A weighted sub-hypergraph of the complete 3-partite hypergraph with
/// parts of size `n`, whose weights form a fractional perfect matching
/// (every vertex slot carries total weight `1/n`). Built by masking edges
/// and rebalancing with alternating per-slot scaling; masks that refuse
/// to balance are enriched with extra matchings, with the full edge set
/// as the last resort.
pub fn sinkhorn_hypergraph(rng: &mut ChaCha8Rng, n: usize) -> Hypergraph {
    let mut edges: Vec<Vec<usize>> = random_matching_edges(rng, n);
    let keep = rng.gen_range(0.2..0.7);
    for triple in (0..n).cartesian_product(0..n).cartesian_product(0..n) {
        let e = vec![triple.0 .0, triple.0 .1, triple.1];
        if !edges.contains(&e) && rng.gen_bool(keep) {
            edges.push(e);
        }
    }
    for _ in 0..3 {
        if let Some(weights) = balance_weights(rng, n, &edges) {
            return Hypergraph::with_weights(3, n, edges, weights).unwrap();
        }
        for e in random_matching_edges(rng, n) {
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    let all: Vec<Vec<usize>> = (0..n)
        .cartesian_product(0..n)
        .cartesian_product(0..n)
        .map(|t| vec![t.0 .0, t.0 .1, t.1])
        .collect();
    let weights = vec![1.0 / (n * n * n) as f64; all.len()];
    Hypergraph::with_weights(3, n, all, weights).unwrap()
}

fn balance_weights(rng: &mut ChaCha8Rng, n: usize, edges: &[Vec<usize>]) -> Option<Vec<f64>> {
    let target = 1.0 / n as f64;
    let mut w: Vec<f64> = (0..edges.len()).map(|_| rng.gen_range(0.1..1.0)).collect();
    for _ in 0..5000 {
        let mut worst = 0.0f64;
        for class in 0..3 {
            let mut sums = vec![0.0f64; n];
            for (e, weight) in edges.iter().zip(&w) {
                sums[e[class]] += weight;
            }
            for s in &sums {
                worst = worst.max((s - target).abs());
                if *s <= 0.0 {
                    return None;
                }
            }
            for (e, weight) in edges.iter().zip(w.iter_mut()) {
                *weight *= target / sums[e[class]];
            }
        }
        if worst < 1e-13 {
            return Some(w);
        }
    }
    None
}

/// A random family inside the unit square, clear of the boundary. Half
/// the draws scatter small boxes along a jittered diagonal (pairwise
/// disjoint projections, so uncuttable patterns occur); the rest place
/// freely overlapping blobs. Closed families occasionally degenerate a
/// box to a segment.
pub fn random_family(rng: &mut ChaCha8Rng, max_boxes: usize, open: bool) -> BoxFamily {
    let len = rng.gen_range(1..=max_boxes);
    let mut boxes = Vec::with_capacity(len);
    if rng.gen_bool(0.5) {
        let spacing = 0.96 / len as f64;
        let mut rows: Vec<usize> = (0..len).collect();
        if rng.gen_bool(0.3) {
            rows.shuffle(rng);
        }
        for (i, &row) in rows.iter().enumerate() {
            let cx = 0.02 + (i as f64 + 0.5) * spacing;
            let cy = 0.02 + (row as f64 + 0.5) * spacing;
            let hw = rng.gen_range(0.1..0.45) * spacing;
            let hh = rng.gen_range(0.1..0.45) * spacing;
            boxes.push(Box2::new(cx - hw, cx + hw, cy - hh, cy + hh).unwrap());
        }
    } else {
        for _ in 0..len {
            let cx = rng.gen_range(0.15..0.85);
            let cy = rng.gen_range(0.15..0.85);
            let hw = rng.gen_range(0.01..0.14);
            let hh = rng.gen_range(0.01..0.14);
            boxes.push(Box2::new(cx - hw, cx + hw, cy - hh, cy + hh).unwrap());
        }
    }
    if open {
        BoxFamily::open(boxes).unwrap()
    } else {
        for b in boxes.iter_mut() {
            if rng.gen_bool(0.15) {
                if rng.gen_bool(0.5) {
                    b.x_hi = b.x_lo;
                } else {
                    b.y_hi = b.y_lo;
                }
            }
        }
        BoxFamily::closed(boxes).unwrap()
    }
}

/// Reference decision for cuttability: enumerates every choice of at most
/// `n` canonical vertical and `m` canonical horizontal positions. Sound
/// and complete because a line can slide within its elementary interval
/// (plus exact endpoints for closed families) without changing which
/// members it meets.
pub fn cut_oracle(family: &BoxFamily, n: usize, m: usize) -> bool {
    if family.is_empty() {
        return true;
    }
    let full: u32 = (1u32 << family.len()) - 1;
    let masks = |axis: Axis| -> Vec<u32> {
        canonical_positions(family, axis)
            .into_iter()
            .map(|p| {
                let cut = match axis {
                    Axis::X => CutFamily::new(vec![p], vec![]),
                    Axis::Y => CutFamily::new(vec![], vec![p]),
                };
                family
                    .boxes()
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| kkm_core::cutting::is_cut(b, &cut, family.kind()))
                    .fold(0u32, |acc, (i, _)| acc | 1 << i)
            })
            .collect()
    };
    let x_masks = masks(Axis::X);
    let y_masks = masks(Axis::Y);
    let kx = n.min(x_masks.len());
    let ky = m.min(y_masks.len());
    for x_combo in x_masks.iter().combinations(kx) {
        let x_cover = x_combo.iter().fold(0u32, |acc, &&m| acc | m);
        for y_combo in y_masks.iter().combinations(ky) {
            let cover = y_combo.iter().fold(x_cover, |acc, &&m| acc | m);
            if cover == full {
                return true;
            }
        }
    }
    false
}

/// Sanity helper: a cut produced by the solver must actually cut.
pub fn assert_cuts(family: &BoxFamily, cut: &CutFamily) {
    assert!(
        cuts_family(family, cut),
        "cut {cut:?} misses a member of {family:?}"
    );
}
