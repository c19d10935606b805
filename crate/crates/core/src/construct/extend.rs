//! One induction step: glues the four quarter crossings into a crossing of
//! the doubled rectangle.
//!
//! All routing is arranged so that the composite's box-scale footprint is a
//! simple staircase: joined rows stay inside their half except for the one
//! middle transfer (simple strategy), gadget pieces stay inside the switch
//! column, and every junction is chosen deterministically. Where the
//! minimum-weight link crossings would recross a box boundary, a confined
//! replacement route is used instead and counted in the diagnostics.

use std::collections::{HashMap, HashSet};

use crate::coarsen::{box_corner, l_coarsening};
use crate::field::{self, level_coeffs, FieldKind};
use crate::geodesic::{
    crossing_distance, path_index_map, point_to_row, route_on_path, CrossDir, WeightGrid,
};
use crate::lattice::{LatticePath, Point, Rect};
use crate::rng::GaussianSource;
use crate::rtv::{rtv_dp, rtv_signs, SampledPath};

use super::{
    classify_case, compute_line_hits, hit_box_centers, last_index_on_line, level_stats, Case,
    ConstructError, ConstructParams, CrossingLevel,
};

/// Per-step facts surfaced to reports and tests.
#[derive(Debug, Clone)]
pub struct LevelDiagnostics {
    pub case: Case,
    /// Row per global cell column (length `2 * cells`), 0 = top.
    pub rows: Vec<u8>,
    /// Gadget switch columns (1-based, in sub-cell units).
    pub switch_columns: Vec<u32>,
    pub row_changes: u32,
    /// Linear weight-proxy sums `[half][row]` behind the simple strategy.
    pub case1_sums: [[f64; 2]; 2],
    /// Second-order expansion residual per half; mean zero over seeds.
    pub err1: [f64; 2],
    /// Remainder beyond the second-order expansion per half.
    pub err2: [f64; 2],
    /// Largest switching-stream increment magnitude.
    pub m_dis: f64,
    pub rtv_value: f64,
    pub rtv_switches: usize,
    /// Every interior line's last hit lands in the same box as the followed
    /// sub-crossing's.
    pub hyp3_ok: bool,
    /// A gadget annulus was clipped by the rectangle boundary.
    pub clamped: bool,
    /// Link legs replaced by box-confined routes.
    pub fallback_links: u32,
}

struct Geometry {
    sub_level: u8,
    l: i64,
    cells: u32,
    u: Point,
}

impl Geometry {
    fn g(&self) -> i64 {
        self.cells as i64
    }

    fn parent_rect(&self) -> Rect {
        Rect::with_size(self.u.x, self.u.y, self.g() * 2 * self.l, 2 * self.l)
    }

    /// Line of global sub-column `c`: `x = u.x + c * l - 1`.
    fn line_x(&self, c: i64) -> i64 {
        self.u.x + c * self.l - 1
    }

    /// Box column `c` (1-based) intersected with the row half.
    fn column_half(&self, c: i64, row: u8) -> Rect {
        let y0 = if row == 0 { self.u.y + self.l } else { self.u.y };
        Rect::with_size(self.u.x + (c - 1) * self.l, y0, self.l, self.l)
    }

    fn v_left(&self) -> Rect {
        Rect::with_size(self.u.x + (self.g() - 1) * self.l, self.u.y, self.l, 2 * self.l)
    }

    fn v_right(&self) -> Rect {
        Rect::with_size(self.u.x + self.g() * self.l, self.u.y, self.l, 2 * self.l)
    }

    fn v_horizontal(&self, row: u8) -> Rect {
        let y0 = if row == 0 { self.u.y + self.l } else { self.u.y };
        Rect::with_size(self.u.x + (self.g() - 1) * self.l, y0, 2 * self.l, self.l)
    }
}

/// The switching plan: a row per global column plus the data behind it.
struct Plan {
    rows: Vec<u8>,
    switch_columns: Vec<u32>,
    case1_sums: [[f64; 2]; 2],
    m_dis: f64,
    rtv_value: f64,
    rtv_switches: usize,
}

pub fn extend_level(
    quad: [[&CrossingLevel; 2]; 2],
    source: &GaussianSource,
    params: &ConstructParams,
) -> Result<(CrossingLevel, LevelDiagnostics), ConstructError> {
    let geo = validate_quad(&quad, params)?;
    let cells = geo.cells;
    let parent_level = geo.sub_level + 1;

    // Averaged per-cell weights stand in for the expectations that drive
    // the strategy; the row choice then depends only on the switching
    // Gaussians, not on the rectangle family.
    let mut d_bar = vec![0.0f64; cells as usize];
    for row in &quad {
        for sub in row {
            for (j, d) in sub.d_cells.iter().enumerate() {
                d_bar[j] += 0.25 * d;
            }
        }
    }
    let d_bar_total: f64 = d_bar.iter().sum();
    let case = classify_case(&d_bar, d_bar_total, geo.sub_level as u32, params);

    let (b_coef, c_coef) = level_coeffs(parent_level as u32);
    let z_value = |i: u32, k: u32, j: u32| -> f64 {
        let col = ((k - 1) * cells + j) as i64;
        let sign_b = if col % 2 == 1 { -1.0 } else { 1.0 };
        let sign_c = if i == 1 { -1.0 } else { 1.0 };
        let a_rect = source.standard_normal(field::tilde_r_lookup(k, j, cells, geo.u, geo.sub_level));
        let a_bm = source.standard_normal(field::bm_increment_key(k, j, cells, geo.u, geo.sub_level));
        sign_b * b_coef * a_rect + sign_c * c_coef * a_bm
    };

    let plan = match case {
        Case::Case1 | Case::Case2 => plan_single_rows(&geo, &d_bar, &z_value),
        Case::Case3 => plan_switched(&geo, &d_bar, d_bar_total, c_coef, source, params),
    };

    // Weights of the doubled rectangle's field, evaluated lazily over the
    // small regions the link and gadget crossings need.
    let gamma = params.gamma;
    let field_grid = |rect: Rect| -> Result<WeightGrid, ConstructError> {
        let mut w = Vec::with_capacity(rect.area() as usize);
        for z in rect.points() {
            let v = field::eval_point(FieldKind::Chi, parent_level, cells, geo.u, source, z)?;
            w.push((gamma * v).exp());
        }
        Ok(WeightGrid::new(rect, w)?)
    };

    let mut fallback_links = 0u32;
    let mut clamped = false;
    let composite: Vec<Point> = match case {
        Case::Case1 | Case::Case2 => {
            let (i1, i2) = (plan.rows[0], plan.rows[cells as usize]);
            let (path, fb) =
                join_rows(&geo, quad[i1 as usize][0], quad[i2 as usize][1], i1, i2, &field_grid)?;
            fallback_links += fb;
            path
        }
        Case::Case3 => {
            let mut joined: HashMap<u8, LatticePath> = HashMap::new();
            for &row in plan.rows.iter().collect::<HashSet<_>>().iter() {
                let (path, fb) = join_rows(
                    &geo,
                    quad[*row as usize][0],
                    quad[*row as usize][1],
                    *row,
                    *row,
                    &field_grid,
                )?;
                fallback_links += fb;
                joined.insert(*row, LatticePath::new(path).expect("joined rows are 4-adjacent"));
            }
            let (path, any_clamped) = assemble_switched(&geo, &plan, &joined, params, &field_grid)?;
            clamped = any_clamped;
            path
        }
    };

    let path = LatticePath::new(composite)
        .map_err(|e| ConstructError::Splice(format!("composite is not 4-adjacent: {e}")))?;
    let coarse = l_coarsening(&path, geo.l);
    let (d_total, d_cells) = level_stats(&path, parent_level, cells, geo.u, source, gamma)?;
    let parent_side = 2 * geo.l;
    let line_hits = compute_line_hits(&path, geo.u, parent_side, cells);
    let last_hits = hit_box_centers(&line_hits, params.hit_box_side(parent_side));

    let hyp3_ok = check_last_hit_matching(&geo, &quad, &line_hits, params);

    // Expansion diagnostics under the realized plan.
    let a_sq = b_coef * b_coef + c_coef * c_coef;
    let mut err1 = [0.0f64; 2];
    let mut err2 = [0.0f64; 2];
    for k in 1..=2u32 {
        for j in 1..=cells {
            let col = ((k - 1) * cells + j) as usize;
            let i = plan.rows[col - 1] as u32 + 1;
            let z = z_value(i, k, j);
            let d = d_bar[(j - 1) as usize];
            err1[(k - 1) as usize] += 0.5 * gamma * gamma * d * (z * z - a_sq);
            err2[(k - 1) as usize] +=
                d * ((gamma * z).exp() - (1.0 + gamma * z + 0.5 * gamma * gamma * z * z));
        }
    }

    let row_changes = plan.rows.windows(2).filter(|w| w[0] != w[1]).count() as u32;
    let diag = LevelDiagnostics {
        case,
        rows: plan.rows,
        switch_columns: plan.switch_columns,
        row_changes,
        case1_sums: plan.case1_sums,
        err1,
        err2,
        m_dis: plan.m_dis,
        rtv_value: plan.rtv_value,
        rtv_switches: plan.rtv_switches,
        hyp3_ok,
        clamped,
        fallback_links,
    };
    let crossing = CrossingLevel {
        level: parent_level,
        origin: geo.u,
        cells,
        path,
        d_total,
        d_cells,
        coarse,
        line_hits,
        last_hits,
    };
    Ok((crossing, diag))
}

fn validate_quad(
    quad: &[[&CrossingLevel; 2]; 2],
    params: &ConstructParams,
) -> Result<Geometry, ConstructError> {
    let bl = quad[1][0];
    let sub_level = bl.level;
    let l = 1i64 << sub_level;
    let cells = params.cells;
    if sub_level as u32 + 1 > 63 {
        return Err(ConstructError::BadParams("level overflow".into()));
    }
    let u = bl.origin;
    let w = cells as i64 * l;
    let expect = [
        [Point::new(u.x, u.y + l), Point::new(u.x + w, u.y + l)],
        [u, Point::new(u.x + w, u.y)],
    ];
    for i in 0..2 {
        for k in 0..2 {
            let s = quad[i][k];
            if s.level != sub_level || s.cells != cells {
                return Err(ConstructError::MismatchedQuad(format!(
                    "sub ({i}, {k}) has level {} and {} cells",
                    s.level, s.cells
                )));
            }
            if s.origin != expect[i][k] {
                return Err(ConstructError::MismatchedQuad(format!(
                    "sub ({i}, {k}) sits at {} instead of {}",
                    s.origin, expect[i][k]
                )));
            }
        }
    }
    Ok(Geometry { sub_level, l, cells, u })
}

/// Simple strategy: per half, the row minimizing the linear weight proxy.
fn plan_single_rows(geo: &Geometry, d_bar: &[f64], z: &dyn Fn(u32, u32, u32) -> f64) -> Plan {
    let cells = geo.cells;
    let mut sums = [[0.0f64; 2]; 2];
    for k in 1..=2u32 {
        for i in 1..=2u32 {
            sums[(k - 1) as usize][(i - 1) as usize] =
                (1..=cells).map(|j| d_bar[(j - 1) as usize] * z(i, k, j)).sum();
        }
    }
    let pick = |k: usize| u8::from(sums[k][1] < sums[k][0]);
    let (i1, i2) = (pick(0), pick(1));
    let mut rows = vec![i1; cells as usize];
    rows.extend(vec![i2; cells as usize]);
    Plan {
        rows,
        switch_columns: vec![],
        case1_sums: sums,
        m_dis: 0.0,
        rtv_value: 0.0,
        rtv_switches: 0,
    }
}

/// Main strategy: run the total-variation optimizer on the switching
/// stream restricted to the light cells, and read rows off the trends.
fn plan_switched(
    geo: &Geometry,
    d_bar: &[f64],
    d_bar_total: f64,
    c_coef: f64,
    source: &GaussianSource,
    params: &ConstructParams,
) -> Plan {
    let cells = geo.cells;
    let (heavy_exp, _) = params.mass_exponents;
    let threshold = (cells as f64).powf(-heavy_exp) * d_bar_total;
    let light: Vec<u32> = (1..=cells).filter(|&j| d_bar[(j - 1) as usize] <= threshold).collect();
    debug_assert!(!light.is_empty(), "the switched strategy requires a light cell");

    // Doubled slot list: the light cells of half 1, then of half 2. The
    // increments are the same Brownian-stream Gaussians the field sampler
    // consumed, scaled by the cell weights.
    let slots: Vec<u32> =
        light.iter().copied().chain(light.iter().map(|&j| cells + j)).collect();
    let mut s_values = vec![0.0f64];
    let mut m_dis = 0.0f64;
    for &col in &slots {
        let (k, j) = if col <= cells { (1, col) } else { (2, col - cells) };
        let a = source.standard_normal(field::bm_increment_key(k, j, cells, geo.u, geo.sub_level));
        let d = d_bar[(j - 1) as usize];
        let inc = c_coef * params.gamma * d * a;
        m_dis = m_dis.max(inc.abs());
        s_values.push(s_values.last().unwrap() + inc);
    }
    let stream = SampledPath::new(s_values).expect("at least two slots");
    let lambda = params.penalty_factor * d_bar_total;
    let part = rtv_dp(&stream, lambda).expect("positive penalty");
    let signs = rtv_signs(&stream, &part);

    // Rising trend -> top row (harvests the negative of the rise); cells
    // outside the slot list inherit the next slot's row.
    let slot_rows: Vec<u8> = signs.iter().map(|&s| u8::from(s > 0)).collect();
    let mut rows = vec![u8::MAX; 2 * cells as usize];
    for (slot, &col) in slots.iter().enumerate() {
        rows[(col - 1) as usize] = slot_rows[slot];
    }
    let mut next = *slot_rows.last().unwrap();
    for c in (0..rows.len()).rev() {
        if rows[c] == u8::MAX {
            rows[c] = next;
        } else {
            next = rows[c];
        }
    }
    let switch_columns: Vec<u32> =
        (1..rows.len()).filter(|&c| rows[c - 1] != rows[c]).map(|c| c as u32).collect();
    Plan {
        rows,
        switch_columns,
        case1_sums: [[0.0; 2]; 2],
        m_dis,
        rtv_value: part.value,
        rtv_switches: part.switch_count(),
    }
}

/// Crossing-count prefix along a path for a two-sided vertex predicate;
/// `portion(a, b)` counts side changes between indices `a` and `b`.
struct BoundaryCounter {
    prefix: Vec<u32>,
}

impl BoundaryCounter {
    fn new(path: &LatticePath, side_a: impl Fn(Point) -> bool) -> Self {
        let pts = path.points();
        let mut prefix = Vec::with_capacity(pts.len());
        prefix.push(0);
        for w in pts.windows(2) {
            let cross = side_a(w[0]) != side_a(w[1]);
            prefix.push(prefix.last().unwrap() + u32::from(cross));
        }
        BoundaryCounter { prefix }
    }

    fn portion(&self, a: usize, b: usize) -> u32 {
        self.prefix[a.max(b)] - self.prefix[a.min(b)]
    }
}

/// Joins the left-half crossing `pi_a` (row `row_a`) and the right-half
/// crossing `pi_b` (row `row_b`) into one crossing of the doubled
/// rectangle, via minimum-weight crossings of the linking rectangles.
/// Returns the vertex list and the number of confined fallback legs.
fn join_rows(
    geo: &Geometry,
    pi_a: &CrossingLevel,
    pi_b: &CrossingLevel,
    row_a: u8,
    row_b: u8,
    field_grid: &dyn Fn(Rect) -> Result<WeightGrid, ConstructError>,
) -> Result<(Vec<Point>, u32), ConstructError> {
    let mut fallbacks = 0u32;
    let link_region = Rect::new(
        geo.u.x + (geo.g() - 1) * geo.l,
        geo.u.y,
        geo.u.x + (geo.g() + 1) * geo.l - 1,
        geo.u.y + 2 * geo.l - 1,
    );
    let grid = field_grid(link_region)?;
    let left_td = crossing_distance(&grid, geo.v_left(), CrossDir::TopDown)?;
    let right_td = crossing_distance(&grid, geo.v_right(), CrossDir::TopDown)?;
    let h_cross = crossing_distance(&grid, geo.v_horizontal(row_b), CrossDir::LeftRight)?;

    let mid_y = geo.u.y + geo.l; // top half is y >= mid_y
    let is_top = |p: Point| p.y >= mid_y;
    let boundary_x = geo.u.x + geo.g() * geo.l; // right half is x >= boundary_x
    let is_left = |p: Point| p.x < boundary_x;

    // Leg 1: pi_a to the left vertical crossing. Junctions before the last
    // hit of the final interior line would orphan that hit, so start after.
    let a_pts = pi_a.path.points();
    let p_idx = last_index_on_line(&pi_a.path, geo.line_x(geo.g() - 1))
        .ok_or_else(|| ConstructError::Splice("left sub never meets its last interior line".into()))?;
    let td_index = path_index_map(&left_td.path);
    let h_index = path_index_map(&h_cross.path);
    let td_counter = BoundaryCounter::new(&left_td.path, is_top);

    let v_candidates: Vec<(usize, usize)> = (p_idx + 1..a_pts.len())
        .filter_map(|i| td_index.get(&a_pts[i]).map(|&t| (i, t)))
        .collect();
    let w_candidates: Vec<(usize, usize)> = left_td
        .path
        .points()
        .iter()
        .enumerate()
        .filter_map(|(t, p)| h_index.get(p).map(|&h| (t, h)))
        .collect();
    if v_candidates.is_empty() || w_candidates.is_empty() {
        return Err(ConstructError::Splice("link junctions missing on the left leg".into()));
    }
    let needed_mid = u32::from(row_a != row_b);
    let mut best: Option<(u32, usize, usize, usize)> = None;
    for &(ai, at) in &v_candidates {
        for &(wt, wh) in &w_candidates {
            let crossings = td_counter.portion(at, wt);
            let key = (crossings, ai, wt, wh);
            if best.is_none_or(|b| key < (b.0, b.1, b.2, b.3)) {
                best = Some(key);
            }
        }
    }
    let (min_cross, v_ai, v_wt, v_wh) = best.unwrap();

    let mut out: Vec<Point> = Vec::new();
    let w_vertex_and_h: (Point, usize) = if min_cross <= needed_mid {
        out.extend_from_slice(&a_pts[..=v_ai]);
        let seg = route_on_path(&left_td.path, td_index[&a_pts[v_ai]], v_wt);
        out.extend_from_slice(&seg[1..]);
        (left_td.path.points()[v_wt], v_wh)
    } else {
        fallbacks += 1;
        let (seg, w) = confined_left_leg(geo, pi_a, p_idx, row_a, row_b, &grid, &h_index)?;
        out.extend_from_slice(&seg);
        w
    };

    // Leg 2 and 3: along the horizontal crossing to the right vertical
    // crossing, then down/up to pi_b. Every junction on the right vertical
    // crossing precedes pi_b's last hit of its first line, so any choice
    // keeps that hit on the composite.
    let (w_vertex, w_h) = w_vertex_and_h;
    debug_assert_eq!(h_cross.path.points()[w_h], w_vertex);
    let h_counter = BoundaryCounter::new(&h_cross.path, is_left);
    let tdr_index = path_index_map(&right_td.path);
    let tdr_counter = BoundaryCounter::new(&right_td.path, is_top);
    let b_index = path_index_map(&pi_b.path);

    let x_candidates: Vec<(usize, usize)> = h_cross
        .path
        .points()
        .iter()
        .enumerate()
        .filter_map(|(h, p)| tdr_index.get(p).map(|&t| (h, t)))
        .collect();
    let y_candidates: Vec<(usize, usize)> = right_td
        .path
        .points()
        .iter()
        .enumerate()
        .filter_map(|(t, p)| b_index.get(p).map(|&bi| (t, bi)))
        .collect();
    if y_candidates.is_empty() {
        return Err(ConstructError::Splice("right crossing misses the right sub".into()));
    }
    let mut best: Option<(u32, u32, usize, usize, usize, usize)> = None;
    for &(xh, xt) in &x_candidates {
        for &(yt, ybi) in &y_candidates {
            let hc = h_counter.portion(w_h, xh);
            let tc = tdr_counter.portion(xt, yt);
            let key = (hc, tc, xh, xt, yt, ybi);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
    }
    match best {
        Some((hc, tc, xh, xt, yt, ybi)) if hc <= 1 && tc == 0 => {
            let seg = route_on_path(&h_cross.path, w_h, xh);
            out.extend_from_slice(&seg[1..]);
            let seg = route_on_path(&right_td.path, xt, yt);
            out.extend_from_slice(&seg[1..]);
            out.extend_from_slice(&pi_b.path.points()[ybi + 1..]);
        }
        _ => {
            fallbacks += 1;
            let seg = confined_right_leg(geo, pi_b, row_b, w_vertex, &grid)?;
            out.extend_from_slice(&seg);
        }
    }
    Ok((out, fallbacks))
}

/// Box-confined replacement for the left leg: a vertical crossing of the
/// half box, a step across the middle when rows differ, and a point-to-row
/// descent in the other half.
fn confined_left_leg(
    geo: &Geometry,
    pi_a: &CrossingLevel,
    p_idx: usize,
    row_a: u8,
    row_b: u8,
    grid: &WeightGrid,
    h_index: &HashMap<Point, usize>,
) -> Result<(Vec<Point>, (Point, usize)), ConstructError> {
    let a_pts = pi_a.path.points();
    let box_a = geo.column_half(geo.g(), row_a);
    let td_a = crossing_distance(grid, box_a, CrossDir::TopDown)?;
    let td_a_index = path_index_map(&td_a.path);
    let v = (p_idx + 1..a_pts.len())
        .find(|i| td_a_index.contains_key(&a_pts[*i]))
        .ok_or_else(|| ConstructError::Splice("confined left leg misses the sub".into()))?;
    let mut out: Vec<Point> = a_pts[..=v].to_vec();

    let find_h_junction = |piece: &[Point], from: usize| -> Option<(usize, usize)> {
        (from..piece.len()).find_map(|i| h_index.get(&piece[i]).map(|&h| (i, h)))
    };

    if row_a == row_b {
        let start = td_a_index[&a_pts[v]];
        // Walk toward the horizontal crossing, either direction.
        let fwd = find_h_junction(td_a.path.points(), start);
        let to = match fwd {
            Some((i, h)) => (i, h),
            None => {
                let pts = td_a.path.points();
                let back = (0..=start)
                    .rev()
                    .find_map(|i| h_index.get(&pts[i]).map(|&h| (i, h)))
                    .ok_or_else(|| ConstructError::Splice("half crossing misses the link".into()))?;
                back
            }
        };
        let seg = route_on_path(&td_a.path, start, to.0);
        out.extend_from_slice(&seg[1..]);
        Ok((out, (td_a.path.points()[to.0], to.1)))
    } else {
        // Ride the half crossing to the middle edge (its end for the top
        // box, its start for the bottom one), step across, then walk a
        // point-to-row path until the horizontal crossing appears.
        let start = td_a_index[&a_pts[v]];
        let edge_idx = if row_a == 0 { td_a.path.len() - 1 } else { 0 };
        let seg = route_on_path(&td_a.path, start, edge_idx);
        out.extend_from_slice(&seg[1..]);
        let edge = *out.last().unwrap();
        let step = if row_a == 0 { -1 } else { 1 };
        let crossed = Point::new(edge.x, edge.y + step);
        out.push(crossed);
        let box_b = geo.column_half(geo.g(), row_b);
        let far_y = if row_b == 0 { box_b.y1 } else { box_b.y0 };
        let p2 = point_to_row(grid, box_b, crossed, far_y)?;
        let (i, h) = find_h_junction(p2.path.points(), 0)
            .ok_or_else(|| ConstructError::Splice("descent misses the horizontal crossing".into()))?;
        if i > 0 {
            out.extend_from_slice(&p2.path.points()[1..=i]);
        }
        let junction = p2.path.points()[i];
        Ok((out, (junction, h)))
    }
}

/// Box-confined replacement for the middle and right legs: an east stitch
/// from the current vertex to the right half box, a vertical crossing of
/// that box, and the right sub-crossing onward.
fn confined_right_leg(
    geo: &Geometry,
    pi_b: &CrossingLevel,
    row_b: u8,
    from: Point,
    grid: &WeightGrid,
) -> Result<Vec<Point>, ConstructError> {
    let box_b = geo.column_half(geo.g() + 1, row_b);
    let td_b = crossing_distance(grid, box_b, CrossDir::TopDown)?;
    let td_index = path_index_map(&td_b.path);
    let b_index = path_index_map(&pi_b.path);
    let y = td_b
        .path
        .points()
        .iter()
        .enumerate()
        .filter_map(|(t, p)| b_index.get(p).map(|&bi| (t, bi)))
        .min_by_key(|&(t, bi)| (bi, t))
        .ok_or_else(|| ConstructError::Splice("confined right leg misses the sub".into()))?;
    // Stitch east along the row, then vertically inside the target column.
    let target = td_b.path.points()[y.0];
    let mut out = Vec::new();
    let mut x = from.x;
    while x < target.x {
        x += 1;
        out.push(Point::new(x, from.y));
    }
    let dir = if target.y > from.y { 1 } else { -1 };
    let mut yy = from.y;
    while yy != target.y {
        yy += dir;
        out.push(Point::new(x, yy));
    }
    let seg = route_on_path(&td_b.path, td_index[&target], y.0);
    out.extend_from_slice(&seg[1..]);
    out.extend_from_slice(&pi_b.path.points()[y.1 + 1..]);
    Ok(out)
}

/// Assembles the switched composite: run portions of the joined rows,
/// transferred at each switch column by a gadget.
fn assemble_switched(
    geo: &Geometry,
    plan: &Plan,
    joined: &HashMap<u8, LatticePath>,
    params: &ConstructParams,
    field_grid: &dyn Fn(Rect) -> Result<WeightGrid, ConstructError>,
) -> Result<(Vec<Point>, bool), ConstructError> {
    let mut clamped = false;
    let mut out: Vec<Point> = Vec::new();
    let mut cur_row = plan.rows[0];
    let mut cur_idx = 0usize;
    for &s in &plan.switch_columns {
        let from_path = &joined[&cur_row];
        let line_x = geo.line_x(s as i64);
        let exit = last_index_on_line(from_path, line_x)
            .ok_or_else(|| ConstructError::Splice("joined row misses a switch line".into()))?;
        debug_assert!(exit >= cur_idx);
        out.extend_from_slice(&from_path.points()[cur_idx..=exit]);
        let next_row = plan.rows[s as usize];
        let to_path = &joined[&next_row];
        let p_from = from_path.points()[exit];
        let entry = last_index_on_line(to_path, line_x)
            .ok_or_else(|| ConstructError::Splice("target row misses a switch line".into()))?;
        let p_to = to_path.points()[entry];
        let (gadget, was_clamped) =
            build_gadget(geo, params, s as i64, p_from, p_to, cur_row == 0, field_grid)?;
        clamped |= was_clamped;
        out.extend_from_slice(&gadget);
        cur_row = next_row;
        cur_idx = entry + 1;
    }
    let tail = &joined[&cur_row];
    out.extend_from_slice(&tail.points()[cur_idx..]);
    Ok((out, clamped))
}

/// The switching gadget at column `s`: contours around the two last-hit
/// boxes and a vertical connection between them, all confined to the
/// stacked pair of boxes at that column. Returns the vertex walk strictly
/// after `p_from`, ending exactly at `p_to`.
fn build_gadget(
    geo: &Geometry,
    params: &ConstructParams,
    s: i64,
    p_from: Point,
    p_to: Point,
    from_top: bool,
    field_grid: &dyn Fn(Rect) -> Result<WeightGrid, ConstructError>,
) -> Result<(Vec<Point>, bool), ConstructError> {
    debug_assert_eq!(p_from.x, p_to.x);
    if geo.l == 1 {
        // Halves are single rows; the transfer is one vertical step.
        debug_assert!(p_from.is_adjacent(&p_to));
        return Ok((vec![p_to], false));
    }
    let box_side = params.hit_box_side(geo.l);
    let pad = (box_side / 2).max(1);
    let (row_from, row_to) = if from_top { (0u8, 1u8) } else { (1u8, 0u8) };
    let half_from = geo.column_half(s, row_from);
    let half_to = geo.column_half(s, row_to);
    let a_from = box_rect(p_from, box_side);
    let a_to = box_rect(p_to, box_side);
    let clamped = a_from.y1 + pad > geo.parent_rect().y1
        || a_from.y0 - pad < geo.parent_rect().y0
        || a_to.y1 + pad > geo.parent_rect().y1
        || a_to.y0 - pad < geo.parent_rect().y0;

    let contour_from = gadget_contour(field_grid, a_from, half_from, pad)?;
    let contour_to = gadget_contour(field_grid, a_to, half_to, pad)?;
    let from_index = path_index_map(&contour_from);
    let to_index = path_index_map(&contour_to);

    let col_x = if box_side >= 2 { p_from.x + 1 - box_side / 2 } else { p_from.x };
    let col_top = (a_from.y1.max(a_to.y1) + pad).min(geo.parent_rect().y1);
    let col_bottom = (a_from.y0.min(a_to.y0) - pad).max(geo.parent_rect().y0);

    let mut out: Vec<Point> = Vec::new();
    // West stub from the hit point to the contour, along its own row.
    let x_star = easternmost_at_row(&contour_from, p_from.y, p_from.x)
        .ok_or_else(|| ConstructError::Splice("contour misses the hit row".into()))?;
    let mut x = p_from.x;
    while x > x_star.x {
        x -= 1;
        out.push(Point::new(x, p_from.y));
    }
    // Contour walk to the vertical connector's column.
    let col_points: HashSet<Point> =
        (col_bottom..=col_top).map(|y| Point::new(col_x, y)).collect();
    let junction_from = contour_from
        .points()
        .iter()
        .position(|p| col_points.contains(p))
        .ok_or_else(|| ConstructError::Splice("contour misses the connector column".into()))?;
    let seg = route_on_path(&contour_from, from_index[&x_star], junction_from);
    out.extend_from_slice(&seg[1..]);
    // Vertical connector to the other contour.
    let start_y = contour_from.points()[junction_from].y;
    let dir: i64 = if from_top { -1 } else { 1 };
    let mut yy = start_y;
    let junction_to = loop {
        yy += dir;
        if yy < col_bottom || yy > col_top {
            return Err(ConstructError::Splice("connector misses the target contour".into()));
        }
        let p = Point::new(col_x, yy);
        out.push(p);
        if to_index.contains_key(&p) {
            break p;
        }
    };
    // Contour walk to the target hit row, then the east stub onto p_to.
    let x_star2 = easternmost_at_row(&contour_to, p_to.y, p_to.x)
        .ok_or_else(|| ConstructError::Splice("target contour misses the hit row".into()))?;
    let seg = route_on_path(&contour_to, to_index[&junction_to], to_index[&x_star2]);
    out.extend_from_slice(&seg[1..]);
    let mut x = x_star2.x;
    while x < p_to.x {
        x += 1;
        out.push(Point::new(x, p_to.y));
    }
    Ok((out, clamped))
}

fn box_rect(p: Point, side: i64) -> Rect {
    let c = box_corner(p, side);
    Rect::with_size(c.x, c.y, side, side)
}

fn easternmost_at_row(path: &LatticePath, y: i64, strictly_left_of: i64) -> Option<Point> {
    path.points()
        .iter()
        .filter(|p| p.y == y && p.x < strictly_left_of)
        .max_by_key(|p| p.x)
        .copied()
}

/// Contour of the annulus around `a`, clipped to `region` (the stacked box
/// half owning `a`). The right side is flush with the region by
/// construction, so the contour is an open arc: top strip (when present),
/// down the left strip, and the bottom strip (when present), assembled from
/// minimum-weight crossings.
fn gadget_contour(
    field_grid: &dyn Fn(Rect) -> Result<WeightGrid, ConstructError>,
    a: Rect,
    region: Rect,
    pad: i64,
) -> Result<LatticePath, ConstructError> {
    let big = Rect::new(
        (a.x0 - pad).max(region.x0),
        (a.y0 - pad).max(region.y0),
        a.x1.min(region.x1),
        (a.y1 + pad).min(region.y1),
    );
    debug_assert!(big.x0 < a.x0, "left strip must exist");
    let grid = field_grid(big)?;
    let left = crossing_distance(&grid, Rect::new(big.x0, big.y0, a.x0 - 1, big.y1), CrossDir::TopDown)?;
    let top = (a.y1 < big.y1)
        .then(|| crossing_distance(&grid, Rect::new(big.x0, a.y1 + 1, big.x1, big.y1), CrossDir::LeftRight))
        .transpose()?;
    let bottom = (a.y0 > big.y0)
        .then(|| crossing_distance(&grid, Rect::new(big.x0, big.y0, big.x1, a.y0 - 1), CrossDir::LeftRight))
        .transpose()?;

    let left_index = path_index_map(&left.path);
    let mut pts: Vec<Point> = Vec::new();
    let mut left_from = 0usize;
    if let Some(t) = &top {
        let j = t
            .path
            .points()
            .iter()
            .enumerate()
            .filter_map(|(i, p)| left_index.get(p).map(|&li| (i, li)))
            .min_by_key(|&(i, _)| i)
            .expect("top strip meets the left strip");
        // Walk the top crossing from its right end to the left junction.
        pts.extend(route_on_path(&t.path, t.path.len() - 1, j.0));
        left_from = j.1;
    }
    let (left_to, bottom_seg) = if let Some(bm) = &bottom {
        let j = bm
            .path
            .points()
            .iter()
            .enumerate()
            .filter_map(|(i, p)| left_index.get(p).map(|&li| (i, li)))
            .min_by_key(|&(i, _)| i)
            .expect("bottom strip meets the left strip");
        (j.1, Some(route_on_path(&bm.path, j.0, bm.path.len() - 1)))
    } else {
        (left.path.len() - 1, None)
    };
    let seg = route_on_path(&left.path, left_from, left_to);
    if pts.is_empty() {
        pts.extend(seg);
    } else {
        pts.extend_from_slice(&seg[1..]);
    }
    if let Some(bs) = bottom_seg {
        pts.extend_from_slice(&bs[1..]);
    }
    LatticePath::new(pts)
        .map_err(|e| ConstructError::Splice(format!("contour assembly broke adjacency: {e}")))
}

/// At every interior cell line, the composite's last hit must land in the
/// same box (at the parent hit-box scale) as the followed quarter's own
/// last hit of the same geometric line.
fn check_last_hit_matching(
    geo: &Geometry,
    quad: &[[&CrossingLevel; 2]; 2],
    line_hits: &[Point],
    params: &ConstructParams,
) -> bool {
    let parent_side = 2 * geo.l;
    let box_side = params.hit_box_side(parent_side);
    let mid_y = geo.u.y + geo.l;
    for j in 1..geo.cells as i64 {
        let p = line_hits[(j - 1) as usize];
        let c = 2 * j; // global sub-column of this line
        let (k, m) = if c < geo.g() { (0usize, c) } else { (1usize, c - geo.g()) };
        let i = usize::from(p.y < mid_y);
        let sub = quad[i][k];
        let q = sub.line_hits[(m - 1) as usize];
        if box_corner(p, box_side) != box_corner(q, box_side) {
            return false;
        }
    }
    true
}
