//! Solvers and certificates for KKM-type covering theorems on products of
//! simplices, together with two planar applications: partitioning a measure
//! on the unit square by axis-parallel cuts, and cutting families of planar
//! sets by horizontal and vertical lines.
//!
//! The central representation is the *score field* ([`simplex::ScoreField`]):
//! a covering set is the positive support of a nonnegative continuous score
//! function. This makes coverings machine-checkable — [`simplex::unity_weights`]
//! turns scores into a partition of unity at a point, and the solvers in
//! [`solver`] search for a point whose partition-of-unity marginals hit
//! prescribed targets, then extract a quota assignment or a hypergraph
//! matching from the support.
//!
//! Every solver output can be re-verified from scratch; the search path is
//! never trusted by downstream consumers.

pub mod cutting;
pub mod matching;
pub mod measure;
pub mod simplex;
pub mod solver;
