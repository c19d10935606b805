//! Monte Carlo agreement between sampled fields and the analytic oracles.

use fpbw_core::field::{coeff_vector, exact_cov, FieldKind};
use fpbw_core::harness::straight_line_weight;
use fpbw_core::lattice::{Point, Rect};
use fpbw_core::rng::{derive_u64, GaussianSource};
use fpbw_core::stats;
use rayon::prelude::*;

const ORIGIN: Point = Point::new(0, 0);

/// Empirical covariance over seeds matches the exact oracle at random
/// point pairs, within four standard errors.
#[test]
fn empirical_covariance_matches_oracle() {
    let n = 3u8;
    let cells = 3u32;
    let side = 1i64 << n;
    let rect = Rect::with_size(0, 0, cells as i64 * side, side);
    let pick = |tag: u64, i: u64| {
        let h = derive_u64(4242, &[tag, i]);
        Point::new((h % rect.width() as u64) as i64, ((h >> 32) % rect.height() as u64) as i64)
    };
    let pairs: Vec<(Point, Point)> = (0..20).map(|i| (pick(1, i), pick(2, i))).collect();
    let seeds = 10_000u64;

    for (z1, z2) in pairs {
        let expect = exact_cov(FieldKind::TildeChi, n, cells, ORIGIN, z1, z2).unwrap();
        let cv1 = coeff_vector(FieldKind::TildeChi, n, cells, ORIGIN, z1).unwrap();
        let cv2 = coeff_vector(FieldKind::TildeChi, n, cells, ORIGIN, z2).unwrap();
        let products: Vec<f64> = (0..seeds)
            .into_par_iter()
            .map(|s| {
                let src = GaussianSource::new(derive_u64(7, &[s]));
                cv1.evaluate(&src) * cv2.evaluate(&src)
            })
            .collect();
        // Field means are zero, so the product mean estimates the covariance.
        let mean = stats::mean(&products);
        let se = stats::std_err(&products);
        assert!(
            (mean - expect).abs() <= 4.0 * se,
            "pair {z1} {z2}: empirical {mean} vs exact {expect} (se {se})"
        );
    }
}

/// The mean straight-row weight matches the lognormal closed form
/// `N * exp(gamma^2 n / 2)` within five percent, using the median of group
/// means against the heavy tail.
#[test]
fn straight_row_mean_matches_lognormal() {
    let n = 6u8;
    let expect = 64.0 * (3.0f64).exp();
    let samples: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|s| straight_line_weight(n, 1.0, s * 13 + 1, 5).unwrap())
        .collect();
    let mom = stats::median_of_means(&samples, 16);
    assert!(
        (mom / expect - 1.0).abs() < 0.05,
        "median of means {mom} vs expected {expect}"
    );
}
