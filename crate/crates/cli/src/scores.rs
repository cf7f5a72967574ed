//! Score fields tabulated on barycentric lattices, evaluated anywhere by
//! simplicial interpolation.
//!
//! A table stores one value per lattice point (coordinates in multiples
//! of `1/resolution`, lexicographic order). Off-lattice points are read
//! through the standard triangulation of the dilated simplex: in
//! cumulative coordinates the lattice cell is a cube, and sorting the
//! fractional parts picks the sub-simplex and its barycentric weights.
//! Interpolation is exact at lattice points and linear along edges, so a
//! table that vanishes on a facet's lattice points vanishes on the whole
//! facet — boundary conditions survive tabulation.

use anyhow::{bail, Result};
use std::collections::HashMap;

use kkm_core::simplex::ScoreField;
use kkm_core::solver::SimplexScores;

use crate::input::{set_values, ScoreFile};

/// Lattice points of a simplex with `coords` barycentric coordinates at
/// the given resolution, in lexicographic order of coordinate tuples,
/// with a reverse lookup.
pub struct LatticeIndex {
    coords: usize,
    resolution: u32,
    lookup: HashMap<Vec<u32>, usize>,
    len: usize,
}

impl LatticeIndex {
    pub fn new(coords: usize, resolution: u32) -> Self {
        assert!(coords > 0 && resolution > 0);
        let mut lookup = HashMap::new();
        let mut stack = vec![0u32; coords];
        fill(&mut lookup, &mut stack, 0, resolution);
        let len = lookup.len();
        Self {
            coords,
            resolution,
            lookup,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Interpolation support at barycentric coordinates `x`: flat lattice
    /// indices with convex weights. At most `coords` entries.
    pub fn weights(&self, x: &[f64]) -> Vec<(usize, f64)> {
        debug_assert_eq!(x.len(), self.coords);
        let cube = self.coords - 1;
        if cube == 0 {
            return vec![(0, 1.0)];
        }
        // Cumulative coordinates turn the simplex into the monotone
        // corner of a cube, where lattice cells are unit boxes.
        let mut c = Vec::with_capacity(cube);
        let mut acc = 0.0;
        for &xi in &x[..cube] {
            acc += xi;
            c.push(acc.clamp(0.0, 1.0));
        }
        for k in 1..cube {
            if c[k] < c[k - 1] {
                c[k] = c[k - 1];
            }
        }
        let mut base = vec![0u32; cube];
        let mut frac = vec![0.0f64; cube];
        for k in 0..cube {
            let u = c[k] * self.resolution as f64;
            let b = (u.floor() as i64).clamp(0, self.resolution as i64 - 1) as u32;
            base[k] = b;
            frac[k] = u - b as f64;
        }
        // Descending fractional parts choose the sub-simplex; equal
        // fractions break toward the higher index so the walk never
        // leaves the monotone region.
        let mut order: Vec<usize> = (0..cube).collect();
        order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(b.cmp(&a)));

        let mut out = Vec::with_capacity(cube + 1);
        let mut z = base;
        let push = |z: &[u32], weight: f64, out: &mut Vec<(usize, f64)>| {
            if weight <= 0.0 {
                return;
            }
            let mut occupancy = Vec::with_capacity(self.coords);
            let mut prev = 0u32;
            for &zk in z {
                occupancy.push(zk - prev);
                prev = zk;
            }
            occupancy.push(self.resolution - prev);
            out.push((self.lookup[&occupancy], weight));
        };
        push(&z, 1.0 - frac[order[0]], &mut out);
        for (t, &k) in order.iter().enumerate() {
            z[k] += 1;
            let next = if t + 1 < cube { frac[order[t + 1]] } else { 0.0 };
            push(&z, frac[k] - next, &mut out);
        }
        out
    }
}

fn fill(lookup: &mut HashMap<Vec<u32>, usize>, stack: &mut [u32], pos: usize, remaining: u32) {
    if pos + 1 == stack.len() {
        stack[pos] = remaining;
        let index = lookup.len();
        lookup.insert(stack.to_vec(), index);
        return;
    }
    for value in 0..=remaining {
        stack[pos] = value;
        fill(lookup, stack, pos + 1, remaining - value);
    }
}

/// A two-factor covering tabulated over pairs of lattice points, x-major.
pub struct TabulatedProductField {
    shape: Vec<usize>,
    x: LatticeIndex,
    y: LatticeIndex,
    values: Vec<Vec<f64>>,
}

impl TabulatedProductField {
    pub fn from_file(file: &ScoreFile) -> Result<Self> {
        let x = LatticeIndex::new(file.n, file.lattice_resolution);
        let y = LatticeIndex::new(file.m, file.lattice_resolution);
        let expected = x.len() * y.len();
        let mut values = Vec::with_capacity(file.n * file.m);
        for i in 0..file.n {
            for j in 0..file.m {
                let table = set_values(file, i, j, expected)?;
                values.push(table.iter().map(|v| v.max(0.0)).collect());
            }
        }
        Ok(Self {
            shape: vec![file.n, file.m],
            x,
            y,
            values,
        })
    }
}

impl ScoreField for TabulatedProductField {
    fn shape(&self) -> &[usize] {
        &self.shape
    }

    fn eval(&self, index: &[usize], factors: &[&[f64]]) -> f64 {
        let table = &self.values[index[0] * self.shape[1] + index[1]];
        let mut value = 0.0;
        for (xi, wx) in self.x.weights(factors[0]) {
            for (yi, wy) in self.y.weights(factors[1]) {
                value += wx * wy * table[xi * self.y.len() + yi];
            }
        }
        value.max(0.0)
    }
}

/// Per-column coverings of one simplex, tabulated over its lattice.
pub fn tabulated_simplex_scores(file: &ScoreFile) -> Result<SimplexScores> {
    let lattice = LatticeIndex::new(file.n, file.lattice_resolution);
    let expected = lattice.len();
    let (n, m) = (file.n, file.m);
    let mut values = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let table = set_values(file, i, j, expected)?;
            values.push(table.iter().map(|v| v.max(0.0)).collect::<Vec<f64>>());
        }
    }
    Ok(SimplexScores::new(n, m, move |i, j, x| {
        lattice
            .weights(x)
            .into_iter()
            .map(|(k, w)| w * values[i * m + j][k])
            .sum::<f64>()
            .max(0.0)
    }))
}

/// Parses `--scores`: the `canonical` builtin or a tabulated file, which
/// must agree with any explicit `--n`/`--m`.
pub enum ScoreSource {
    Canonical { n: usize, m: usize },
    File(ScoreFile),
}

impl ScoreSource {
    pub fn parse(spec: &str, n: Option<usize>, m: Option<usize>) -> Result<Self> {
        if spec == "canonical" {
            let (Some(n), Some(m)) = (n, m) else {
                bail!("--scores canonical needs --n and --m");
            };
            if n == 0 || m == 0 {
                bail!("--n and --m must be positive");
            }
            return Ok(Self::Canonical { n, m });
        }
        let file = crate::input::load_scores(std::path::Path::new(spec))?;
        if n.is_some_and(|n| n != file.n) || m.is_some_and(|m| m != file.m) {
            bail!(
                "--n/--m disagree with the score file's {} x {}",
                file.n,
                file.m
            );
        }
        Ok(Self::File(file))
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Canonical { n, m } => (*n, *m),
            Self::File(file) => (file.n, file.m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use kkm_core::simplex::lattice_points;

    #[test]
    fn lattice_order_matches_core_enumeration() {
        let index = LatticeIndex::new(3, 4);
        let points = lattice_points(2, 4).unwrap();
        assert_eq!(index.len(), points.len());
        for (k, p) in points.iter().enumerate() {
            let occupancy: Vec<u32> = p.to_f64().iter().map(|f| (f * 4.0).round() as u32).collect();
            assert_eq!(index.lookup[&occupancy], k, "point {k} out of order");
        }
    }

    #[test]
    fn interpolation_is_exact_on_lattice_points() {
        let index = LatticeIndex::new(3, 5);
        for p in lattice_points(2, 5).unwrap() {
            let x = p.to_f64();
            let w = index.weights(&x);
            let total: f64 = w.iter().map(|(_, v)| v).sum();
            assert!((total - 1.0).abs() < 1e-12);
            // All weight concentrates on the point itself.
            let occupancy: Vec<u32> = x.iter().map(|v| (v * 5.0).round() as u32).collect();
            let own = index.lookup[&occupancy];
            for (k, v) in w {
                if k != own {
                    assert!(v.abs() < 1e-9, "stray weight {v} at {k}");
                }
            }
        }
    }

    #[test]
    fn weights_are_convex_everywhere() {
        let index = LatticeIndex::new(4, 3);
        let probes = [
            [0.1, 0.2, 0.3, 0.4],
            [0.25, 0.25, 0.25, 0.25],
            [0.0, 0.5, 0.5, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.01, 0.02, 0.9, 0.07],
        ];
        for x in probes {
            let w = index.weights(&x);
            let total: f64 = w.iter().map(|(_, v)| v).sum();
            assert!((total - 1.0).abs() < 1e-12, "weights at {x:?} sum {total}");
            assert!(w.iter().all(|&(_, v)| v > 0.0 && v <= 1.0));
        }
    }

    #[test]
    fn facet_values_ignore_off_facet_entries() {
        // A table that vanishes whenever the first coordinate is zero
        // interpolates to zero anywhere on that facet.
        let index = LatticeIndex::new(3, 4);
        let points = lattice_points(2, 4).unwrap();
        let table: Vec<f64> = points
            .iter()
            .map(|p| if p.to_f64()[0] == 0.0 { 0.0 } else { 1.0 })
            .collect();
        for t in 0..=10 {
            let s = t as f64 / 10.0;
            let x = [0.0, s, 1.0 - s];
            let value: f64 = index.weights(&x).iter().map(|&(k, w)| w * table[k]).sum();
            assert!(value.abs() < 1e-12, "facet point {x:?} got {value}");
        }
    }
}
