//! Experiment orchestration: crossing-weight scans over sizes, exponent
//! fitting with bootstrap intervals, and small closed-form sanity checks.
//!
//! Replicates run concurrently; every replicate derives its own seed from
//! the master seed and results are reduced in replicate order, so reports
//! are byte-identical at any parallelism degree.

use rayon::prelude::*;

use crate::construct::replicate_seed;
use crate::field::{self, FieldError, FieldKind};
use crate::geodesic::{crossing_distance, CrossDir, GeodesicError, WeightGrid};
use crate::lattice::Point;
use crate::rng::{derive_gaussian, DyadicKey, GaussianSource};
use crate::stats;

pub const ORIGIN: Point = Point::new(0, 0);

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("empty size range")]
    EmptyRange,
    #[error("size {n} exceeds the exponent-scan guard {max}")]
    SizeTooLarge { n: u8, max: u8 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
}

/// Memory guard for the exponent scan.
pub const MAX_EXPONENT_LEVEL: u8 = 13;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub gamma: f64,
    pub kind: FieldKind,
    pub cells: u32,
    /// Inclusive range of levels `n` (sizes `N = 2^n`).
    pub n_range: (u8, u8),
    pub replicates: usize,
    pub seed: u64,
    /// Groups for the median-of-means estimate.
    pub mom_groups: usize,
    /// Bootstrap resamples behind the slope interval.
    pub bootstrap: usize,
}

impl ExperimentConfig {
    pub fn new(gamma: f64, n_range: (u8, u8), replicates: usize, seed: u64) -> Self {
        ExperimentConfig {
            gamma,
            kind: FieldKind::Brw,
            cells: 1,
            n_range,
            replicates,
            seed,
            mom_groups: 16,
            bootstrap: 1000,
        }
    }
}

/// Aggregates for one size.
#[derive(Debug, Clone)]
pub struct SizeRow {
    pub n: u8,
    pub mean: f64,
    pub std_err: f64,
    /// Median of group means; crossing weights are heavy-tailed for gamma
    /// around one, where the raw mean does not stabilize at feasible
    /// replicate counts.
    pub mom: f64,
    pub mean_path_len: f64,
    pub min_row_mean: f64,
    /// Samples where the crossing weight exceeded some row's weight
    /// (always zero up to rounding; a row is itself a crossing).
    pub dominance_violations: usize,
}

#[derive(Debug, Clone)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub rows: Vec<SizeRow>,
}

/// Per-size crossing-weight statistics and a log-log slope of the
/// median-of-means against the size, each size weighted equally.
pub fn run_exponent(config: &ExperimentConfig) -> Result<ExponentFit, HarnessError> {
    let (n_lo, n_hi) = config.n_range;
    if n_lo > n_hi {
        return Err(HarnessError::EmptyRange);
    }
    if n_hi > MAX_EXPONENT_LEVEL {
        return Err(HarnessError::SizeTooLarge { n: n_hi, max: MAX_EXPONENT_LEVEL });
    }
    assert!(config.replicates >= 2 && config.mom_groups >= 1);
    let mut rows = Vec::new();
    let mut all_weights: Vec<Vec<f64>> = Vec::new();
    for n in n_lo..=n_hi {
        let samples: Vec<Result<(f64, usize, f64), HarnessError>> = (0..config.replicates)
            .into_par_iter()
            .map(|rep| {
                let seed = replicate_seed(config.seed, n as u64, rep as u64);
                let source = GaussianSource::new(seed);
                let f = field::sample_field(config.kind, n, config.cells, ORIGIN, &source)?;
                let grid = WeightGrid::from_field(&f, config.gamma);
                let crossing = crossing_distance(&grid, grid.region(), CrossDir::LeftRight)?;
                let region = grid.region();
                let min_row = (region.y0..=region.y1)
                    .map(|y| {
                        (region.x0..=region.x1).map(|x| grid.weight(Point::new(x, y))).sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min);
                Ok((crossing.weight, crossing.path.len(), min_row))
            })
            .collect();
        let mut weights = Vec::with_capacity(config.replicates);
        let mut path_lens = Vec::with_capacity(config.replicates);
        let mut min_rows = Vec::with_capacity(config.replicates);
        let mut violations = 0usize;
        for s in samples {
            let (w, len, min_row) = s?;
            if w > min_row * (1.0 + 1e-9) {
                violations += 1;
            }
            weights.push(w);
            path_lens.push(len as f64);
            min_rows.push(min_row);
        }
        rows.push(SizeRow {
            n,
            mean: stats::mean(&weights),
            std_err: stats::std_err(&weights),
            mom: stats::median_of_means(&weights, config.mom_groups.min(weights.len())),
            mean_path_len: stats::mean(&path_lens),
            min_row_mean: stats::mean(&min_rows),
            dominance_violations: violations,
        });
        all_weights.push(weights);
    }

    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mom.log2()).collect();
    if rows.len() < 2 {
        // A single size carries no slope information.
        return Ok(ExponentFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
            rows,
        });
    }
    let (slope, intercept) = stats::ols(&xs, &ys);

    // Bootstrap the slope by resampling replicates within each size.
    let mut boot_slopes: Vec<f64> = (0..config.bootstrap)
        .into_par_iter()
        .map(|b| {
            let ys: Vec<f64> = all_weights
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let idx = stats::bootstrap_indices(
                        replicate_seed(config.seed, 0xb00c, i as u64),
                        b as u64,
                        w.len(),
                    );
                    let resampled: Vec<f64> = idx.into_iter().map(|k| w[k]).collect();
                    stats::median_of_means(&resampled, config.mom_groups.min(resampled.len()))
                        .log2()
                })
                .collect();
            stats::ols(&xs, &ys).0
        })
        .collect();
    boot_slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pick = |q: f64| boot_slopes[((boot_slopes.len() - 1) as f64 * q).round() as usize];
    Ok(ExponentFit { slope, intercept, ci_low: pick(0.025), ci_high: pick(0.975), rows })
}

/// RFC 4180 style table of an exponent scan; `v` is the schema version.
pub fn exponent_csv(config: &ExperimentConfig, fit: &ExponentFit) -> String {
    let mut out =
        String::from("v,n,gamma,reps,mean_d,stderr_d,mom_d,mean_path_len,min_row_mean\n");
    for r in &fit.rows {
        out.push_str(&format!(
            "1,{},{},{},{},{},{},{},{}\n",
            r.n,
            config.gamma,
            config.replicates,
            r.mean,
            r.std_err,
            r.mom,
            r.mean_path_len,
            r.min_row_mean
        ));
    }
    out
}

/// Weight of the straight row `y = row` across the side-`2^n` walk field:
/// the trivial crossing every geodesic must beat.
pub fn straight_line_weight(n: u8, gamma: f64, seed: u64, row: i64) -> Result<f64, HarnessError> {
    let source = GaussianSource::new(seed);
    let side = 1i64 << n;
    assert!(row >= 0 && row < side);
    let mut total = 0.0;
    for x in 0..side {
        let v = field::eval_point(FieldKind::Brw, n, 1, ORIGIN, &source, Point::new(x, row))?;
        total += (gamma * v).exp();
    }
    Ok(total)
}

/// Monte Carlo estimate of `E min(X, Y)` for independent standard normals;
/// the closed form is `-1/sqrt(pi)`. Returns the estimate, its standard
/// error, and the antithetic-variates estimate (a variance diagnostic).
pub fn check_min_toy(reps: usize, seed: u64) -> (f64, f64, f64) {
    assert!(reps >= 2);
    let samples: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let x = derive_gaussian(
                seed,
                DyadicKey::BmIncrement { level: 0, corner: Point::new(i as i64, 0), stream: 1 },
            );
            let y = derive_gaussian(
                seed,
                DyadicKey::BmIncrement { level: 0, corner: Point::new(i as i64, 0), stream: 2 },
            );
            (x.min(y), 0.5 * (x.min(y) + (-x).min(-y)))
        })
        .collect();
    let plain: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let anti: Vec<f64> = samples.iter().map(|s| s.1).collect();
    (stats::mean(&plain), stats::std_err(&plain), stats::mean(&anti))
}

/// Report of a covariance-equality sweep between the tilde field and the
/// concatenated walk.
#[derive(Debug, Clone)]
pub struct CovReport {
    pub pairs_checked: usize,
    pub max_abs_deviation: f64,
}

/// Sweeps `exact_cov(TildeChi) - exact_cov(ConcatBrw)` over point pairs:
/// exhaustive for tiny sizes, uniformly sampled above.
pub fn check_cov_equality(
    n: u8,
    cells: u32,
    sampled_pairs: usize,
    seed: u64,
) -> Result<CovReport, HarnessError> {
    let side = 1i64 << n;
    let width = cells as i64 * side;
    let points = width * side;
    let pairs: Vec<(Point, Point)> = if points * points <= 40_000 {
        (0..points)
            .flat_map(|i| {
                (0..points).map(move |j| {
                    (
                        Point::new(i % width, i / width),
                        Point::new(j % width, j / width),
                    )
                })
            })
            .collect()
    } else {
        (0..sampled_pairs)
            .map(|i| {
                let r = |tag: u64| {
                    let h = crate::rng::derive_u64(seed, &[tag, i as u64]);
                    Point::new((h % width as u64) as i64, ((h >> 32) % side as u64) as i64)
                };
                (r(1), r(2))
            })
            .collect()
    };
    let max_abs_deviation = pairs
        .par_iter()
        .map(|(z1, z2)| {
            let a = field::exact_cov(FieldKind::TildeChi, n, cells, ORIGIN, *z1, *z2).unwrap();
            let b = field::exact_cov(FieldKind::ConcatBrw, n, cells, ORIGIN, *z1, *z2).unwrap();
            (a - b).abs()
        })
        .reduce(|| 0.0, f64::max);
    Ok(CovReport { pairs_checked: pairs.len(), max_abs_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gamma_slope_is_one() {
        let config = ExperimentConfig::new(0.0, (3, 7), 8, 42);
        let fit = run_exponent(&config).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-3, "slope {}", fit.slope);
        for r in &fit.rows {
            assert_eq!(r.mean, (1i64 << r.n) as f64);
            assert_eq!(r.dominance_violations, 0);
        }
    }

    #[test]
    fn exponent_is_deterministic() {
        let config = ExperimentConfig::new(0.8, (3, 5), 16, 7);
        let a = run_exponent(&config).unwrap();
        let b = run_exponent(&config).unwrap();
        assert_eq!(a.slope, b.slope);
        assert_eq!(exponent_csv(&config, &a), exponent_csv(&config, &b));
        assert!(a.ci_low <= a.slope && a.slope <= a.ci_high);
    }

    #[test]
    fn doubling_replicates_shrinks_std_err() {
        let small = ExperimentConfig::new(0.5, (5, 5), 64, 3);
        let large = ExperimentConfig { replicates: 128, ..small.clone() };
        let a = run_exponent(&small).unwrap().rows[0].std_err;
        let b = run_exponent(&large).unwrap().rows[0].std_err;
        let ratio = a / b;
        assert!(ratio > 1.1 && ratio < 1.8, "ratio {ratio}");
    }

    #[test]
    fn straight_line_zero_gamma() {
        assert_eq!(straight_line_weight(6, 0.0, 9, 5).unwrap(), 64.0);
    }

    #[test]
    fn toy_identity_quick() {
        let (est, se, anti) = check_min_toy(200_000, 1);
        let expect = -1.0 / std::f64::consts::PI.sqrt();
        assert!((est - expect).abs() < 4.0 * se, "est {est} expect {expect} se {se}");
        assert!((anti - expect).abs() < 0.01);
    }

    #[test]
    fn cov_equality_sweep_small() {
        let rep = check_cov_equality(2, 3, 0, 0).unwrap();
        assert_eq!(rep.pairs_checked, (3 * 16) * (3 * 16));
        assert!(rep.max_abs_deviation < 1e-9, "{}", rep.max_abs_deviation);
        let rep0 = check_cov_equality(0, 3, 0, 0).unwrap();
        assert_eq!(rep0.max_abs_deviation, 0.0);
    }
}
