//! Regularized total variation of discretely sampled paths.
//!
//! For samples `B_0..B_m` and a penalty `lambda > 0`, the objective over
//! grid partitions `0 = t_0 < t_1 < ... < t_{k+1} = m` is
//!
//! ```text
//! Phi = sum_i |B_{t_{i+1}} - B_{t_i}| - lambda * k
//! ```
//!
//! maximized by a linear-time dynamic program over two states: the best
//! partial value whose last interval rises or falls. Because an adjacent
//! same-trend pair of intervals always merges at a gain of `lambda`, the
//! optimum alternates trends, and every interior increment has magnitude at
//! least `lambda`. An exhaustive maximizer over all `2^(m-1)` breakpoint
//! subsets serves as the oracle.

use crate::lattice::Point;
use crate::rng::{derive_u64, DyadicKey, GaussianSource};
use crate::stats;
use rayon::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum RtvError {
    #[error("need at least two samples, got {0}")]
    TooShort(usize),
    #[error("penalty must be positive, got {0}")]
    BadLambda(f64),
    #[error("grid of {0} steps is too large for exhaustive search (max {1})")]
    TooLargeForBruteForce(usize, usize),
}

/// Uniformly sampled path values `B_0..B_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(values: Vec<f64>) -> Result<Self, RtvError> {
        if values.len() < 2 {
            return Err(RtvError::TooShort(values.len()));
        }
        Ok(SampledPath { values })
    }

    /// Number of grid steps `m` (one less than the number of samples).
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Standard Brownian motion on `[0, 1]` sampled at `m + 1` uniform
    /// times, from keyed Gaussian increments of variance `1/m`.
    pub fn brownian(m: usize, source: &GaussianSource, replicate: u64) -> Self {
        let sigma = 1.0 / (m as f64).sqrt();
        let mut values = Vec::with_capacity(m + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for i in 0..m {
            let key = DyadicKey::BmIncrement {
                level: 0,
                corner: Point::new(replicate as i64, -1),
                stream: i as u64,
            };
            acc += sigma * source.standard_normal(key);
            values.push(acc);
        }
        SampledPath { values }
    }
}

/// An optimal partition: `breakpoints` holds `t_0 = 0 < ... < t_{k+1} = m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RtvPartition {
    pub breakpoints: Vec<usize>,
    pub value: f64,
    pub lambda: f64,
}

impl RtvPartition {
    /// Number of interior breakpoints `k`.
    pub fn switch_count(&self) -> usize {
        self.breakpoints.len() - 2
    }

    /// Re-evaluates the objective from the stored breakpoints.
    pub fn evaluate(&self, path: &SampledPath) -> f64 {
        let v = path.values();
        let mut total = 0.0;
        for w in self.breakpoints.windows(2) {
            total += (v[w[1]] - v[w[0]]).abs();
        }
        total - self.lambda * self.switch_count() as f64
    }

    /// Interval increments in order.
    pub fn increments(&self, path: &SampledPath) -> Vec<f64> {
        let v = path.values();
        self.breakpoints.windows(2).map(|w| v[w[1]] - v[w[0]]).collect()
    }
}

#[derive(Clone, Copy)]
struct State {
    value: f64,
    switches: usize,
    open_from: usize,
}

#[inline]
fn better(cand: (f64, usize), cur: (f64, usize)) -> bool {
    cand.0 > cur.0 || (cand.0 == cur.0 && cand.1 < cur.1)
}

/// Exact maximizer by dynamic programming, `O(m)` time.
///
/// Trends alternate by construction; ties prefer fewer breakpoints, then
/// the earliest interval start.
pub fn rtv_dp(path: &SampledPath, lambda: f64) -> Result<RtvPartition, RtvError> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(RtvError::BadLambda(lambda));
    }
    let v = path.values();
    let m = path.steps();
    let sign = |s: usize| if s == 0 { 1.0 } else { -1.0 };

    // open[s]: best prefix that may still absorb points into an interval of
    // trend s (value excludes the closing +-B_i term). closed[s]: best
    // partition of [0, i] whose last interval ends at i with trend s.
    // back[i][s]: start of that last interval.
    let mut open = [
        State { value: -sign(0) * v[0], switches: 0, open_from: 0 },
        State { value: -sign(1) * v[0], switches: 0, open_from: 0 },
    ];
    let mut closed = [State { value: f64::NEG_INFINITY, switches: 0, open_from: 0 }; 2];
    let mut back: Vec<[u32; 2]> = vec![[u32::MAX; 2]; m + 1];

    for i in 1..=m {
        for s in 0..2 {
            closed[s] = State {
                value: sign(s) * v[i] + open[s].value,
                switches: open[s].switches,
                open_from: open[s].open_from,
            };
            back[i][s] = open[s].open_from as u32;
        }
        if i < m {
            for s in 0..2 {
                let opp = closed[1 - s];
                let cand = (opp.value - lambda - sign(s) * v[i], opp.switches + 1);
                if better(cand, (open[s].value, open[s].switches)) {
                    open[s] = State { value: cand.0, switches: cand.1, open_from: i };
                }
            }
        }
    }

    let pick = usize::from(better(
        (closed[1].value, closed[1].switches),
        (closed[0].value, closed[0].switches),
    ));

    let mut breakpoints = vec![m];
    let mut i = m;
    let mut s = pick;
    while i > 0 {
        let j = back[i][s] as usize;
        breakpoints.push(j);
        i = j;
        s = 1 - s;
    }
    breakpoints.reverse();
    let partition = RtvPartition { breakpoints, value: 0.0, lambda };
    let value = partition.evaluate(path);
    Ok(RtvPartition { value, ..partition })
}

/// Largest `m` accepted by [`rtv_bruteforce`].
pub const BRUTE_FORCE_MAX_STEPS: usize = 18;

/// Exhaustive maximum over all breakpoint subsets, with the same tie
/// preferences as the dynamic program.
pub fn rtv_bruteforce(path: &SampledPath, lambda: f64) -> Result<RtvPartition, RtvError> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(RtvError::BadLambda(lambda));
    }
    let m = path.steps();
    if m > BRUTE_FORCE_MAX_STEPS {
        return Err(RtvError::TooLargeForBruteForce(m, BRUTE_FORCE_MAX_STEPS));
    }
    let v = path.values();
    let mut best: Option<(f64, usize, u32)> = None;
    for mask in 0u32..(1 << (m - 1)) {
        let k = mask.count_ones() as usize;
        let mut total = 0.0;
        let mut prev = 0usize;
        for t in 1..m {
            if mask & (1 << (t - 1)) != 0 {
                total += (v[t] - v[prev]).abs();
                prev = t;
            }
        }
        total += (v[m] - v[prev]).abs();
        total -= lambda * k as f64;
        let replace = match &best {
            None => true,
            Some((bv, bk, _)) => total > *bv || (total == *bv && k < *bk),
        };
        if replace {
            best = Some((total, k, mask));
        }
    }
    let (value, _, mask) = best.unwrap();
    let mut breakpoints = vec![0];
    breakpoints.extend((1..m).filter(|t| mask & (1 << (t - 1)) != 0));
    breakpoints.push(m);
    Ok(RtvPartition { breakpoints, value, lambda })
}

/// Trend of the partition interval covering each grid cell `i` in `0..m`:
/// `-1` when the covering interval rises, `+1` when it falls (or is flat).
pub fn rtv_signs(path: &SampledPath, partition: &RtvPartition) -> Vec<i8> {
    let v = path.values();
    let mut signs = Vec::with_capacity(path.steps());
    for w in partition.breakpoints.windows(2) {
        let s: i8 = if v[w[1]] > v[w[0]] { -1 } else { 1 };
        for _ in w[0]..w[1] {
            signs.push(s);
        }
    }
    signs
}

/// One row of the scaling experiment.
#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub lambda: f64,
    pub mean_phi: f64,
    pub std_err: f64,
    pub mean_switches: f64,
}

/// Simulates Brownian paths on `[0, 1]`, optimizes each, and reports the
/// mean objective per penalty. Per-replicate seeds derive from the master
/// seed and the reduction order is fixed, so the table is identical at any
/// parallelism degree.
pub fn rtv_scaling(lambdas: &[f64], m: usize, reps: usize, seed: u64) -> Vec<ScalingRow> {
    assert!(reps >= 1);
    lambdas
        .iter()
        .map(|&lambda| {
            let results: Vec<(f64, usize)> = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let rep_seed = derive_u64(seed, &[0x5ca1e, rep as u64]);
                    let path = SampledPath::brownian(m, &GaussianSource::new(rep_seed), rep as u64);
                    let part = rtv_dp(&path, lambda).unwrap();
                    (part.value, part.switch_count())
                })
                .collect();
            let phis: Vec<f64> = results.iter().map(|r| r.0).collect();
            let ks: Vec<f64> = results.iter().map(|r| r.1 as f64).collect();
            ScalingRow {
                lambda,
                mean_phi: stats::mean(&phis),
                std_err: if reps >= 2 { stats::std_err(&phis) } else { 0.0 },
                mean_switches: stats::mean(&ks),
            }
        })
        .collect()
}

/// Checks the facts that hold at any optimum: trends alternate and interior
/// increments are at least `lambda` in magnitude.
pub fn check_optimum_structure(path: &SampledPath, part: &RtvPartition) -> Result<(), String> {
    let incs = part.increments(path);
    for w in incs.windows(2) {
        if w[0] * w[1] > 0.0 {
            return Err(format!("adjacent intervals share a trend: {} then {}", w[0], w[1]));
        }
    }
    let k = part.switch_count();
    let tol = 1e-9 * (1.0 + part.lambda.abs());
    for (j, inc) in incs.iter().enumerate() {
        if j >= 1 && j < k && inc.abs() < part.lambda - tol {
            return Err(format!(
                "interior increment {inc} smaller than the penalty {}",
                part.lambda
            ));
        }
    }
    Ok(())
}
