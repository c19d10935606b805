//! Inductive construction of light crossings.
//!
//! A level-`l` crossing spans a `cells * 2^l` by `2^l` rectangle under the
//! sign-switched field. Level 0 is the straight row, of weight exactly
//! `cells`. One induction step glues the four level-`l` crossings of the
//! quarters of the doubled rectangle into a level-`l+1` crossing:
//!
//! * the two crossings of each row are joined across the middle with
//!   minimum-weight crossings of the four linking rectangles;
//! * a switching strategy picks, per cell column, which row the composite
//!   follows: either one row per half chosen by minimizing the linear
//!   weight proxy (the simple strategy, also used below the level cutoff),
//!   or a sign plan obtained by running the regularized-total-variation
//!   optimizer on the Brownian stream shared with the field sampler;
//! * at every row change a switching gadget transfers the composite
//!   between rows: annulus contours around the two last-hit boxes at the
//!   switch line plus a minimum-weight vertical crossing between them.
//!
//! The composite's half-scale coarsening is a simple staircase, its law is
//! invariant under vertical reflection, and at every interior cell line it
//! last hits the line in the same small box as the sub-crossing it follows
//! there. These facts are asserted per sample.

mod extend;

pub use extend::{extend_level, LevelDiagnostics};

use crate::coarsen::{self, CoarsePath};
use crate::field::{self, FieldError, FieldKind};
use crate::geodesic::GeodesicError;
use crate::lattice::{LatticePath, Point, Rect};
use crate::rng::{derive_u64, GaussianSource};

#[derive(Debug, thiserror::Error)]
pub enum ConstructError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("quad does not tile the doubled rectangle: {0}")]
    MismatchedQuad(String),
    #[error("level {n} exceeds the desk-scale guard {max}")]
    LevelTooLarge { n: u8, max: u8 },
    #[error("failed to splice: {0}")]
    Splice(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
}

/// Desk-scale cap for [`run_induction`].
pub const MAX_INDUCTION_LEVEL: u8 = 12;

/// Tuning knobs of the constructor.
#[derive(Debug, Clone)]
pub struct ConstructParams {
    /// Weight exponent; zero is allowed and makes every vertex weight one.
    pub gamma: f64,
    /// Cells per rectangle; odd, at least 3.
    pub cells: u32,
    /// Gadget box scale delta as a negative power of two.
    pub delta_exp: u32,
    /// Levels strictly below this use the simple per-half strategy.
    pub case2_cutoff: u32,
    /// Exponents `(a, b)` of the heavy-cell test: a cell is heavy when
    /// `d_j >= cells^-a * d_total`, and the simple strategy applies when
    /// the heavy mass reaches `cells^-b * d_total`.
    pub mass_exponents: (f64, f64),
    /// Switch penalty as a multiple of the sampled total weight.
    pub penalty_factor: f64,
}

impl ConstructParams {
    /// Desk-scale defaults: `delta = 2^-2` and cutoff 2, so that every
    /// strategy actually executes at reachable sizes.
    pub fn desk(gamma: f64, cells: u32) -> Result<Self, ConstructError> {
        Self::with_knobs(gamma, cells, 2, 2)
    }

    /// The asymptotic-regime values `delta = 2^-100`, cutoff 60. Inert at
    /// desk scale: every reachable level falls below the cutoff.
    pub fn paper(gamma: f64, cells: u32) -> Result<Self, ConstructError> {
        Self::with_knobs(gamma, cells, 100, 60)
    }

    pub fn with_knobs(
        gamma: f64,
        cells: u32,
        delta_exp: u32,
        case2_cutoff: u32,
    ) -> Result<Self, ConstructError> {
        if cells < 3 || cells % 2 == 0 {
            return Err(ConstructError::BadParams(format!(
                "cells must be odd and at least 3, got {cells}"
            )));
        }
        if gamma.is_nan() || gamma < 0.0 {
            return Err(ConstructError::BadParams(format!(
                "gamma must be nonnegative, got {gamma}"
            )));
        }
        if delta_exp < 2 {
            return Err(ConstructError::BadParams("delta must be at most 1/4".into()));
        }
        let delta = 0.5f64.powi(delta_exp as i32);
        Ok(ConstructParams {
            gamma,
            cells,
            delta_exp,
            case2_cutoff,
            mass_exponents: (2.0 / 3.0, 0.1),
            penalty_factor: (1.0 + 20.0 * delta) / cells as f64,
        })
    }

    pub fn delta(&self) -> f64 {
        0.5f64.powi(self.delta_exp as i32)
    }

    /// Gadget box side at crossing side `side`: `max(delta * side, 1)`.
    pub fn hit_box_side(&self, side: i64) -> i64 {
        if self.delta_exp >= 63 {
            return 1;
        }
        (side >> self.delta_exp).max(1)
    }
}

/// Which strategy the induction step takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// Heavy cells carry enough mass: one row per half.
    Case1,
    /// Below the level cutoff: same strategy as Case 1.
    Case2,
    /// Main strategy: sign plan from the total-variation optimizer.
    Case3,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Case::Case1 => write!(f, "case1"),
            Case::Case2 => write!(f, "case2"),
            Case::Case3 => write!(f, "case3"),
        }
    }
}

/// Picks the strategy from the per-cell weights at the current level.
pub fn classify_case(d_cells: &[f64], d_total: f64, level: u32, params: &ConstructParams) -> Case {
    if level < params.case2_cutoff {
        return Case::Case2;
    }
    let g = d_cells.len() as f64;
    let (heavy_exp, mass_exp) = params.mass_exponents;
    let heavy_threshold = g.powf(-heavy_exp) * d_total;
    let heavy_mass: f64 = d_cells.iter().filter(|&&d| d >= heavy_threshold).sum();
    if heavy_mass >= d_total * g.powf(-mass_exp) {
        Case::Case1
    } else {
        Case::Case3
    }
}

/// A constructed crossing at one level, with its weight bookkeeping.
#[derive(Debug, Clone)]
pub struct CrossingLevel {
    pub level: u8,
    pub origin: Point,
    pub cells: u32,
    pub path: LatticePath,
    /// Total weight under the own-level field.
    pub d_total: f64,
    /// Weight restricted to each cell, in order; sums to `d_total`.
    pub d_cells: Vec<f64>,
    /// Half-scale coarsening (scale `max(2^(level-1), 1)`); simple.
    pub coarse: CoarsePath,
    /// Per cell line `j` (at `x = origin.x + j * side - 1`, `j` in
    /// `1..=cells`), the last path vertex on the line.
    pub line_hits: Vec<Point>,
    /// Centers of the `hit_box_side` boxes of the `line_hits`.
    pub last_hits: Vec<(f64, f64)>,
}

impl CrossingLevel {
    pub fn side(&self) -> i64 {
        1i64 << self.level
    }

    pub fn rect(&self) -> Rect {
        let side = self.side();
        Rect::with_size(self.origin.x, self.origin.y, self.cells as i64 * side, side)
    }

    /// Structural validity: a genuine left-right crossing with simple
    /// half-scale coarsening and consistent bookkeeping.
    pub fn validate(&self) -> Result<(), String> {
        let rect = self.rect();
        if self.path.first().x != rect.x0 {
            return Err(format!("path starts at {} not on the left boundary", self.path.first()));
        }
        if self.path.last().x != rect.x1 {
            return Err(format!("path ends at {} not on the right boundary", self.path.last()));
        }
        if let Some(p) = self.path.points().iter().find(|p| !rect.contains(**p)) {
            return Err(format!("path leaves the rectangle at {p}"));
        }
        if !self.coarse.is_simple() {
            return Err("half-scale coarsening is not simple".into());
        }
        let sum: f64 = self.d_cells.iter().sum();
        if (sum - self.d_total).abs() > 1e-9 * (1.0 + self.d_total.abs()) {
            return Err(format!("cell weights sum to {sum}, total is {}", self.d_total));
        }
        let side = self.side();
        for (idx, p) in self.line_hits.iter().enumerate() {
            let line_x = self.origin.x + (idx as i64 + 1) * side - 1;
            if p.x != line_x {
                return Err(format!("line hit {p} is not on line x = {line_x}"));
            }
        }
        Ok(())
    }
}

/// Last path index whose vertex lies on the column `x = line_x`.
pub(crate) fn last_index_on_line(path: &LatticePath, line_x: i64) -> Option<usize> {
    path.points().iter().rposition(|p| p.x == line_x)
}

pub(crate) fn compute_line_hits(path: &LatticePath, origin: Point, side: i64, cells: u32) -> Vec<Point> {
    (1..=cells as i64)
        .map(|j| {
            let x = origin.x + j * side - 1;
            let i = last_index_on_line(path, x).expect("a crossing visits every column");
            path.points()[i]
        })
        .collect()
}

pub(crate) fn hit_box_centers(line_hits: &[Point], box_side: i64) -> Vec<(f64, f64)> {
    line_hits
        .iter()
        .map(|p| {
            let corner = coarsen::box_corner(*p, box_side);
            let off = box_side as f64 / 2.0 - 0.5;
            (corner.x as f64 + off, corner.y as f64 + off)
        })
        .collect()
}

/// The level-0 crossing: a straight row across `cells` unit cells. Its
/// field is identically zero, so the weight is exactly `cells`.
pub fn base_crossing(cells: u32, origin: Point, params: &ConstructParams) -> CrossingLevel {
    let path = LatticePath::horizontal(origin.y, origin.x, origin.x + cells as i64 - 1);
    let coarse = coarsen::l_coarsening(&path, 1);
    let line_hits = compute_line_hits(&path, origin, 1, cells);
    let last_hits = hit_box_centers(&line_hits, params.hit_box_side(1));
    CrossingLevel {
        level: 0,
        origin,
        cells,
        path,
        d_total: cells as f64,
        d_cells: vec![1.0; cells as usize],
        coarse,
        line_hits,
        last_hits,
    }
}

/// Recomputes the total and per-cell weights of a path under the
/// sign-switched field of the stated level.
pub fn level_stats(
    path: &LatticePath,
    level: u8,
    cells: u32,
    origin: Point,
    source: &GaussianSource,
    gamma: f64,
) -> Result<(f64, Vec<f64>), FieldError> {
    let side = 1i64 << level;
    let rect = Rect::with_size(origin.x, origin.y, cells as i64 * side, side);
    let mut idx: Vec<usize> = path.points().iter().map(|p| rect.flat_index(*p)).collect();
    idx.sort_unstable();
    idx.dedup();
    let mut d_cells = vec![0.0f64; cells as usize];
    for i in idx {
        let z = rect.point_at(i);
        let v = field::eval_point(FieldKind::Chi, level, cells, origin, source, z)?;
        let j = ((z.x - origin.x) / side) as usize;
        d_cells[j] += (gamma * v).exp();
    }
    let d_total = d_cells.iter().sum();
    Ok((d_total, d_cells))
}

/// One level of an induction run.
#[derive(Debug, Clone)]
pub struct LevelReport {
    pub level: u8,
    /// Strategy of the step that produced this level (none at the base).
    pub case: Option<Case>,
    /// Weight of the returned lineage crossing.
    pub d_total: f64,
    /// Mean weight over every crossing of this level in the build tree.
    pub d_mean: f64,
    /// `d_mean` relative to the previous level's.
    pub ratio: f64,
    /// Row changes in the realized staircase (including the middle).
    pub row_changes: u32,
    /// Gadget switch columns, in cell-column units of the sub level.
    pub switch_columns: Vec<u32>,
    /// All structural assertions held for every crossing of this level.
    pub valid: bool,
    /// Weight-expansion diagnostics of the lineage step, per half.
    pub err1: [f64; 2],
    pub err2: [f64; 2],
    /// Largest switching-stream increment magnitude of the lineage step.
    pub m_dis: f64,
    /// A gadget was clipped by the rectangle boundary somewhere.
    pub clamped: bool,
    /// Link legs replaced by box-confined routes.
    pub fallback_links: u32,
}

/// Output of [`run_induction`]: the origin lineage, one crossing per level,
/// plus per-level reports aggregated over the whole build tree.
#[derive(Debug)]
pub struct InductionRun {
    pub lineage: Vec<CrossingLevel>,
    pub reports: Vec<LevelReport>,
}

struct TreeAccum {
    d_sum: Vec<f64>,
    count: Vec<u64>,
    valid: Vec<bool>,
}

/// Lineage of crossings from the base up, with the step diagnostics
/// aligned to it (none at the base level).
type Lineage = (CrossingLevel, Vec<CrossingLevel>, Vec<Option<LevelDiagnostics>>);

fn build_tree(
    level: u8,
    origin: Point,
    source: &GaussianSource,
    params: &ConstructParams,
    acc: &mut TreeAccum,
) -> Result<Lineage, ConstructError> {
    if level == 0 {
        let base = base_crossing(params.cells, origin, params);
        acc.d_sum[0] += base.d_total;
        acc.count[0] += 1;
        acc.valid[0] &= base.validate().is_ok();
        return Ok((base.clone(), vec![base], vec![None]));
    }
    let sub = 1i64 << (level - 1);
    let w = params.cells as i64 * sub;
    // Quarter origins: [row][column], row 0 on top.
    let origins = [
        [Point::new(origin.x, origin.y + sub), Point::new(origin.x + w, origin.y + sub)],
        [origin, Point::new(origin.x + w, origin.y)],
    ];
    let (bl, mut lineage, mut diags) = build_tree(level - 1, origins[1][0], source, params, acc)?;
    let (tl, _, _) = build_tree(level - 1, origins[0][0], source, params, acc)?;
    let (tr, _, _) = build_tree(level - 1, origins[0][1], source, params, acc)?;
    let (br, _, _) = build_tree(level - 1, origins[1][1], source, params, acc)?;
    let quad = [[&tl, &tr], [&bl, &br]];
    let (crossing, diag) = extend_level(quad, source, params)?;
    let l = level as usize;
    acc.d_sum[l] += crossing.d_total;
    acc.count[l] += 1;
    acc.valid[l] &= crossing.validate().is_ok() && diag.hyp3_ok;
    lineage.push(crossing.clone());
    diags.push(Some(diag));
    Ok((crossing, lineage, diags))
}

/// Runs the full induction from the base to level `n` at the origin,
/// building every sub-rectangle crossing recursively. Returns the lineage
/// through the bottom-left quarters (all anchored at the origin) and the
/// per-level reports.
pub fn run_induction(
    n: u8,
    seed: u64,
    params: &ConstructParams,
) -> Result<InductionRun, ConstructError> {
    if n > MAX_INDUCTION_LEVEL {
        return Err(ConstructError::LevelTooLarge { n, max: MAX_INDUCTION_LEVEL });
    }
    let source = GaussianSource::new(seed);
    let mut acc = TreeAccum {
        d_sum: vec![0.0; n as usize + 1],
        count: vec![0; n as usize + 1],
        valid: vec![true; n as usize + 1],
    };
    let (_, lineage, diags) = build_tree(n, Point::new(0, 0), &source, params, &mut acc)?;
    let mut reports = Vec::with_capacity(n as usize + 1);
    let mut prev_mean = f64::NAN;
    for (l, diag) in diags.iter().enumerate() {
        let d_mean = acc.d_sum[l] / acc.count[l] as f64;
        let ratio = if l == 0 { f64::NAN } else { d_mean / prev_mean };
        prev_mean = d_mean;
        let (case, row_changes, switch_columns, err1, err2, m_dis, clamped, fallback_links) =
            match diag {
                None => (None, 0, vec![], [0.0; 2], [0.0; 2], 0.0, false, 0),
                Some(d) => (
                    Some(d.case),
                    d.row_changes,
                    d.switch_columns.clone(),
                    d.err1,
                    d.err2,
                    d.m_dis,
                    d.clamped,
                    d.fallback_links,
                ),
            };
        reports.push(LevelReport {
            level: l as u8,
            case,
            d_total: lineage[l].d_total,
            d_mean,
            ratio,
            row_changes,
            switch_columns,
            valid: acc.valid[l],
            err1,
            err2,
            m_dis,
            clamped,
            fallback_links,
        });
    }
    Ok(InductionRun { lineage, reports })
}

/// Derived seed for an independent replicate of an experiment.
pub fn replicate_seed(master: u64, tag: u64, replicate: u64) -> u64 {
    derive_u64(master, &[tag, replicate])
}
