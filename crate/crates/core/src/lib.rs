//! First passage percolation on hierarchical Gaussian fields.
//!
//! The crate provides exact, seedable samplers for branching-random-walk
//! style fields with a covariance oracle, a vertex-weighted shortest-path
//! engine for crossing distances on large grids, a regularized
//! total-variation optimizer for Brownian paths, the inductive light-crossing
//! constructor that ties them together, and experiment harnesses for
//! estimating crossing-weight scaling exponents.

pub mod coarsen;
pub mod construct;
pub mod field;
pub mod geodesic;
pub mod harness;
pub mod lattice;
pub mod rng;
pub mod rtv;
pub mod stats;

pub use construct::{run_induction, ConstructParams, CrossingLevel};
pub use field::{
    coeff_vector, exact_cov, eval_point, level_coeffs, sample_field, tilde_r_lookup, CoeffVector,
    FieldKind, FieldSample,
};
pub use geodesic::{crossing_distance, path_weight, CrossDir, CrossingResult, WeightGrid};
pub use lattice::{LatticePath, Point, Rect};
pub use rng::{derive_gaussian, DyadicKey, GaussianSource};
pub use rtv::{rtv_bruteforce, rtv_dp, rtv_scaling, rtv_signs, RtvPartition, SampledPath};
