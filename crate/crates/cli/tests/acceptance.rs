//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured quantities (run with `--nocapture` to see them).

use std::collections::{HashMap, HashSet};
use std::process::Command;
use std::time::Instant;

use fpbw_core::construct::{run_induction, ConstructParams};
use fpbw_core::field::{exact_cov, sample_field, shared_box_count, FieldKind};
use fpbw_core::geodesic::{crossing_distance, path_weight, CrossDir, WeightGrid};
use fpbw_core::harness::{check_cov_equality, check_min_toy, run_exponent, ExperimentConfig, ORIGIN};
use fpbw_core::lattice::{Point, Rect};
use fpbw_core::rng::{derive_u64, GaussianSource};
use fpbw_core::rtv::{
    check_optimum_structure, rtv_bruteforce, rtv_dp, rtv_scaling, SampledPath,
};
use fpbw_core::stats;
use rayon::prelude::*;

fn pass(criterion: u32, detail: String) {
    println!("criterion {criterion}: PASS - {detail}");
}

/// Criterion 1: the tilde field and the concatenated walk have identical
/// covariance (n <= 4, 3 cells; exhaustive on small sizes, sampled pairs at
/// the largest), within 1e-9, in under a minute.
#[test]
fn criterion_01_covariance_equality() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    for n in 0..=4u8 {
        let report = check_cov_equality(n, 3, 10_000, 12345).unwrap();
        worst = worst.max(report.max_abs_deviation);
        pairs += report.pairs_checked;
    }
    let elapsed = start.elapsed();
    assert!(worst < 1e-9, "max deviation {worst}");
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    pass(1, format!("max |cov delta| {worst:.2e} over {pairs} pairs in {elapsed:.2?}"));
}

/// Criterion 2: walk covariance equals the shared-dyadic-box count,
/// exhaustively for every pair up to n = 6.
#[test]
fn criterion_02_walk_covariance_law() {
    let start = Instant::now();
    let mut pairs_total = 0u64;
    for n in 1..=6u8 {
        let side = 1i64 << n;
        let points: Vec<Point> =
            Rect::with_size(0, 0, side, side).points().collect();
        let bad = points
            .par_iter()
            .map(|&z1| {
                let mut bad = 0u64;
                for &z2 in &points {
                    let cov = exact_cov(FieldKind::Brw, n, 1, ORIGIN, z1, z2).unwrap();
                    if cov != shared_box_count(n, z1, z2) as f64 {
                        bad += 1;
                    }
                }
                bad
            })
            .sum::<u64>();
        assert_eq!(bad, 0, "mismatches at n = {n}");
        pairs_total += (points.len() * points.len()) as u64;
    }
    pass(2, format!("exact match on {pairs_total} pairs (n = 1..=6) in {:.2?}", start.elapsed()));
}

fn random_rtv_path(seed: u64, m: usize) -> SampledPath {
    let src = GaussianSource::new(seed);
    let mut values = vec![0.0];
    for i in 0..m {
        let key = fpbw_core::rng::DyadicKey::BmIncrement {
            level: 0,
            corner: Point::new(7, 7),
            stream: i as u64,
        };
        values.push(values[i] + src.standard_normal(key));
    }
    SampledPath::new(values).unwrap()
}

/// Criterion 3: the total-variation dynamic program matches the exhaustive
/// oracle exactly, and its optima have the stated structure.
#[test]
fn criterion_03_rtv_oracle_and_structure() {
    let cases = 10_000u64;
    (0..cases).into_par_iter().for_each(|case| {
        let m = 2 + (case % 11) as usize; // up to 12 steps
        let p = random_rtv_path(case, m);
        for lambda in [0.1, 0.5, 2.0] {
            let fast = rtv_dp(&p, lambda).unwrap();
            let brute = rtv_bruteforce(&p, lambda).unwrap();
            assert_eq!(fast.value, brute.value, "case {case} lambda {lambda}");
            assert_eq!(fast.switch_count(), brute.switch_count(), "case {case} lambda {lambda}");
            check_optimum_structure(&p, &fast).unwrap();
        }
    });
    // First-increment sign is a fair coin over Brownian replicates.
    let reps = 10_000usize;
    let positives: u64 = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let src = GaussianSource::new(derive_u64(99, &[rep as u64]));
            let path = SampledPath::brownian(64, &src, rep as u64);
            let part = rtv_dp(&path, 0.4).unwrap();
            u64::from(part.increments(&path)[0] > 0.0)
        })
        .sum();
    let frac = positives as f64 / reps as f64;
    let se = 0.5 / (reps as f64).sqrt();
    assert!((frac - 0.5).abs() <= 3.0 * se, "P(first +) = {frac}");
    pass(3, format!("oracle exact on {cases} sequences x 3 penalties; P(first +) = {frac:.4} +- {se:.4}"));
}

/// Criterion 4: the scaling lower bound lambda * E Phi >= 0.9 at
/// lambda = 0.05, grid 200000, 200 replicates, within ten minutes.
#[test]
fn criterion_04_rtv_scaling_lower_bound() {
    let start = Instant::now();
    let rows = rtv_scaling(&[0.05], 200_000, 200, 2024);
    let elapsed = start.elapsed();
    let product = rows[0].lambda * rows[0].mean_phi;
    assert!(product >= 0.9, "lambda * mean Phi = {product}");
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}");
    pass(4, format!(
        "lambda * mean Phi = {product:.4} (mean switches {:.1}) in {elapsed:.2?}",
        rows[0].mean_switches
    ));
}

/// Criterion 5: E min(X, Y) = -1/sqrt(pi) within 0.003 at a million
/// replicates.
#[test]
fn criterion_05_toy_identity() {
    let (est, se, _) = check_min_toy(1_000_000, 7);
    let expect = -1.0 / std::f64::consts::PI.sqrt();
    assert!((est - expect).abs() <= 0.003, "estimate {est} vs {expect}");
    pass(5, format!("E min(X, Y) = {est:.4} vs {expect:.4} (se {se:.1e})"));
}

/// Exhaustive minimum over simple crossings by branch-and-bound search.
fn brute_force_crossing(grid: &WeightGrid, sub: Rect, dir: CrossDir) -> f64 {
    fn dfs(
        grid: &WeightGrid,
        sub: Rect,
        p: Point,
        seen: &mut HashSet<Point>,
        acc: f64,
        best: &mut f64,
        done: &dyn Fn(Point) -> bool,
    ) {
        let cost = acc + grid.weight(p);
        if cost >= *best {
            return;
        }
        if done(p) {
            *best = cost;
            return;
        }
        seen.insert(p);
        for q in [
            Point::new(p.x - 1, p.y),
            Point::new(p.x + 1, p.y),
            Point::new(p.x, p.y - 1),
            Point::new(p.x, p.y + 1),
        ] {
            if sub.contains(q) && !seen.contains(&q) {
                dfs(grid, sub, q, seen, cost, best, done);
            }
        }
        seen.remove(&p);
    }
    let mut best = f64::INFINITY;
    let (starts, done): (Vec<Point>, Box<dyn Fn(Point) -> bool>) = match dir {
        CrossDir::LeftRight => (
            (sub.y0..=sub.y1).map(|y| Point::new(sub.x0, y)).collect(),
            Box::new(move |p: Point| p.x == sub.x1),
        ),
        CrossDir::TopDown => (
            (sub.x0..=sub.x1).map(|x| Point::new(x, sub.y1)).collect(),
            Box::new(move |p: Point| p.y == sub.y0),
        ),
    };
    for s in starts {
        dfs(grid, sub, s, &mut HashSet::new(), 0.0, &mut best, &done);
    }
    best
}

/// Criterion 6: the crossing engine equals exhaustive enumeration over
/// simple crossings on ten thousand random grids up to 4 x 5. Weights are
/// dyadic rationals, so both sides sum exactly and equality is bitwise.
#[test]
fn criterion_06_geodesic_oracle() {
    let cases = 10_000u64;
    (0..cases).into_par_iter().for_each(|case| {
        let w = 2 + (case % 3) as i64; // 2..4
        let h = 2 + (case % 4) as i64; // 2..5
        let region = Rect::with_size(0, 0, w, h);
        let weights: Vec<f64> = (0..region.area() as u64)
            .map(|i| (103 + derive_u64(case, &[i]) % 10_138) as f64 / 1024.0)
            .collect();
        let grid = WeightGrid::new(region, weights).unwrap();
        for dir in [CrossDir::LeftRight, CrossDir::TopDown] {
            let fast = crossing_distance(&grid, region, dir).unwrap();
            let brute = brute_force_crossing(&grid, region, dir);
            assert_eq!(fast.weight, brute, "case {case} {dir:?}");
            let recomputed = path_weight(&grid, &fast.path).unwrap();
            assert_eq!(recomputed, fast.weight, "case {case} {dir:?} path weight");
        }
    });
    pass(6, format!("exact agreement on {cases} grids, both directions"));
}

/// Criterion 7: the desk-scale stand-in for the asymptotic crossing
/// exponent. The asymptotic bound itself is out of reach at these sizes; what is
/// checked is (a) the exact slope 1 at gamma = 0 and (b) at gamma = 1 a
/// fitted slope well below the straight-line exponent, with every sample
/// dominated by every row.
#[test]
fn criterion_07_exponent_scan() {
    let start = Instant::now();
    let flat = run_exponent(&ExperimentConfig::new(0.0, (4, 8), 50, 11)).unwrap();
    assert!((flat.slope - 1.0).abs() <= 1e-3, "gamma 0 slope {}", flat.slope);

    let config = ExperimentConfig::new(1.0, (4, 10), 200, 17);
    let fit = run_exponent(&config).unwrap();
    let straight_line_exponent = 1.0 + 1.0 / (2.0 * std::f64::consts::LN_2);
    assert!(
        fit.slope < straight_line_exponent - 0.1,
        "slope {} not below {} - 0.1",
        fit.slope,
        straight_line_exponent
    );
    let violations: usize = fit.rows.iter().map(|r| r.dominance_violations).sum();
    assert_eq!(violations, 0, "a crossing exceeded a straight row");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 1800, "took {elapsed:?}");
    pass(7, format!(
        "gamma 0 slope {:.6}; gamma 1 slope {:.3} (CI [{:.3}, {:.3}]) < {:.3}; 0 dominance violations; {elapsed:.2?}",
        flat.slope, fit.slope, fit.ci_low, fit.ci_high, straight_line_exponent - 0.1
    ));
}

/// Criterion 8: constructor validity. One hundred full inductions to level
/// 8 with every structural assertion on every level (simple coarsening,
/// last-hit box matching, geodesic dominance), then reflection symmetry and
/// last-hit uniformity chi-squares over ten thousand smaller runs.
#[test]
fn criterion_08_constructor_validity() {
    let start = Instant::now();
    let params = ConstructParams::desk(1.0, 3).unwrap();

    // Structural sweep at n = 8.
    (0..100u64).into_par_iter().for_each(|seed| {
        let run = run_induction(8, seed, &params).unwrap();
        for r in &run.reports {
            assert!(r.valid, "seed {seed} level {} invalid", r.level);
        }
        let source = GaussianSource::new(seed);
        for cl in &run.lineage {
            cl.validate().unwrap();
            let f = sample_field(FieldKind::Chi, cl.level, 3, ORIGIN, &source).unwrap();
            let grid = WeightGrid::from_field(&f, params.gamma);
            let geodesic = crossing_distance(&grid, grid.region(), CrossDir::LeftRight).unwrap();
            let built = path_weight(&grid, &cl.path).unwrap();
            assert!(
                built >= geodesic.weight - 1e-9,
                "seed {seed} level {}: constructed {built} below geodesic {}",
                cl.level,
                geodesic.weight
            );
        }
    });

    // Distributional checks at n = 4 over ten thousand seeds.
    let n = 4u8;
    let reps = 10_000u64;
    let box_row = 1i64 << (n - 1);
    let l100 = params.hit_box_side(1i64 << n);
    let cands = ((1i64 << n) / l100) as usize;
    let results: Vec<(Vec<Point>, [usize; 2])> = (0..reps)
        .into_par_iter()
        .map(|seed| {
            let run = run_induction(n, seed, &params).unwrap();
            let top = run.lineage.last().unwrap();
            let shape = top.coarse.corners().to_vec();
            let hits = [
                (top.line_hits[0].y / l100) as usize,
                (top.line_hits[1].y / l100) as usize,
            ];
            (shape, hits)
        })
        .collect();

    // The composite enters through the top row half the time.
    let first_top =
        results.iter().filter(|(shape, _)| shape[0].y == box_row).count() as f64;
    let frac_top = first_top / reps as f64;
    let se_top = 0.5 / (reps as f64).sqrt();
    assert!((frac_top - 0.5).abs() <= 3.0 * se_top, "P(enter top) = {frac_top}");

    // Reflection: each staircase shape occurs as often as its mirror.
    let mut shape_counts: HashMap<Vec<Point>, u32> = HashMap::new();
    for (shape, _) in &results {
        *shape_counts.entry(shape.clone()).or_insert(0) += 1;
    }
    let mirror =
        |s: &[Point]| -> Vec<Point> { s.iter().map(|p| Point::new(p.x, box_row - p.y)).collect() };
    let mut chi2 = 0.0f64;
    let mut df = 0u32;
    let mut seen: HashSet<Vec<Point>> = HashSet::new();
    for (s, &c1) in &shape_counts {
        let m = mirror(s);
        if *s == m || seen.contains(s) || seen.contains(&m) {
            continue;
        }
        seen.insert(s.clone());
        seen.insert(m.clone());
        let c2 = shape_counts.get(&m).copied().unwrap_or(0);
        let tot = (c1 + c2) as f64;
        if tot >= 16.0 {
            let d = c1 as f64 - c2 as f64;
            chi2 += d * d / tot;
            df += 1;
        }
    }
    let p_mirror = stats::chi_square_p_value(chi2, df as f64);
    assert!(p_mirror > 0.01, "reflection chi2 {chi2:.1} on {df} df, p = {p_mirror:.4}");

    // Last-hit uniformity over the candidate boxes at both interior lines.
    let mut chi2_u = 0.0f64;
    for line in 0..2usize {
        let mut counts = vec![0u32; cands];
        for (_, hits) in &results {
            counts[hits[line]] += 1;
        }
        let expect = reps as f64 / cands as f64;
        chi2_u += counts.iter().map(|&o| (o as f64 - expect).powi(2) / expect).sum::<f64>();
    }
    let df_u = 2.0 * (cands as f64 - 1.0);
    let p_uniform = stats::chi_square_p_value(chi2_u, df_u);
    assert!(p_uniform > 0.01, "uniformity chi2 {chi2_u:.1}, p = {p_uniform:.4}");

    pass(8, format!(
        "100 inductions to level 8 all valid and dominated by geodesics; P(enter top) = {frac_top:.3}, mirror p = {p_mirror:.3}, uniformity p = {p_uniform:.3} over {reps} seeds; {:.2?}",
        start.elapsed()
    ));
}

/// Criterion 9: the second-order expansion residual of the induction step
/// has mean zero (the switching choice is independent of the rectangle
/// Gaussians).
#[test]
fn criterion_09_expansion_residual_mean_zero() {
    let params = ConstructParams::desk(1.0, 3).unwrap();
    let samples: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|seed| {
            let run = run_induction(3, seed, &params).unwrap();
            let top = run.reports.last().unwrap();
            0.5 * (top.err1[0] + top.err1[1])
        })
        .collect();
    let mean = stats::mean(&samples);
    let se = stats::std_err(&samples);
    assert!(mean.abs() <= 4.0 * se, "Err1 mean {mean} exceeds 4 x {se}");
    pass(9, format!("Err1 mean {mean:.4} within 4 x {se:.4}"));
}

fn fpbw() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fpbw"))
}

/// Criterion 10: CLI determinism. Identical seeds give byte-identical
/// outputs, and the parallelism degree does not change any aggregate.
#[test]
fn criterion_10_cli_determinism() {
    let dir = std::env::temp_dir().join("fpbw-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let csv_a = dir.join("a.csv");
    let csv_b = dir.join("b.csv");

    let run = |path: &std::path::Path, threads: &str| {
        let out = fpbw()
            .args([
                "exponent", "--gamma", "0.8", "--n", "3..6", "--reps", "24", "--seed", "99",
                "--csv",
            ])
            .arg(path)
            .env("FPP_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let stdout_a = run(&csv_a, "1");
    let stdout_b = run(&csv_b, "8");
    assert_eq!(stdout_a, stdout_b, "fit JSON differs across parallelism");
    assert_eq!(
        std::fs::read(&csv_a).unwrap(),
        std::fs::read(&csv_b).unwrap(),
        "CSV differs across parallelism"
    );

    let construct_out = |threads: &str| {
        let out = fpbw()
            .args([
                "construct", "--n", "4", "--gamma", "1.0", "--seed", "5", "--penalty-factor",
                "0.1", "--json",
            ])
            .env("FPP_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(construct_out("2"), construct_out("7"));

    let rtv_out = |threads: &str| {
        let out = fpbw()
            .args(["rtv", "--lambda", "0.2,1.0", "--grid", "5000", "--reps", "64", "--seed", "3"])
            .env("FPP_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(rtv_out("1"), rtv_out("8"));

    pass(10, "byte-identical outputs across repeated runs and 1/2/7/8-way parallelism".into());
}
