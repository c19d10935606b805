//! Vertex-weighted shortest paths on lattice rectangles.
//!
//! The distance of a path is the sum of the weights of the vertices it
//! visits, each visited vertex counted once and both endpoints included.
//! Crossings run between opposite boundaries of a sub-rectangle. The solver
//! is Dijkstra over 4-neighbours with an implicit super-source attached to
//! the start boundary: `dist(v)` is the weight of the best path ending at
//! `v` including `v`'s own weight. A lazy-deletion binary heap keyed by
//! `(cost, flat index)` and a smallest-predecessor rule on ties make the
//! returned path a deterministic function of the weights.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use crate::field::FieldSample;
use crate::lattice::{LatticePath, Point, Rect};

#[derive(Debug, thiserror::Error)]
pub enum GeodesicError {
    #[error("sub-rectangle {0:?} is not contained in the grid region {1:?}")]
    SubOutOfRegion(Rect, Rect),
    #[error("point {0} lies outside the grid region")]
    PointOutOfRegion(Point),
    #[error("weights must be positive and finite, found {0}")]
    BadWeight(f64),
    #[error("paths share no vertex")]
    DisjointPaths,
    #[error("annulus is malformed or thinner than one vertex")]
    ThinAnnulus,
}

/// Crossing direction: between the left/right or the top/bottom boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossDir {
    LeftRight,
    TopDown,
}

impl std::str::FromStr for CrossDir {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lr" | "left-right" => Ok(CrossDir::LeftRight),
            "td" | "top-down" => Ok(CrossDir::TopDown),
            other => Err(format!("unknown direction `{other}` (expected lr|td)")),
        }
    }
}

/// Positive vertex weights over a rectangle, row-major.
#[derive(Debug, Clone)]
pub struct WeightGrid {
    region: Rect,
    weights: Vec<f64>,
}

impl WeightGrid {
    pub fn new(region: Rect, weights: Vec<f64>) -> Result<Self, GeodesicError> {
        assert_eq!(weights.len(), region.area() as usize);
        if let Some(&w) = weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
            return Err(GeodesicError::BadWeight(w));
        }
        Ok(WeightGrid { region, weights })
    }

    /// Weights `exp(gamma * field)` over the sample's rectangle.
    pub fn from_field(field: &FieldSample, gamma: f64) -> Self {
        let region = field.rect();
        let weights = field.values().iter().map(|v| (gamma * v).exp()).collect();
        WeightGrid { region, weights }
    }

    pub fn uniform(region: Rect, w: f64) -> Self {
        WeightGrid::new(region, vec![w; region.area() as usize]).unwrap()
    }

    pub fn region(&self) -> Rect {
        self.region
    }

    pub fn weight(&self, p: Point) -> f64 {
        self.weights[self.region.flat_index(p)]
    }

    pub fn weight_mut(&mut self, p: Point) -> &mut f64 {
        let i = self.region.flat_index(p);
        &mut self.weights[i]
    }
}

/// A crossing path together with its vertex-set weight.
#[derive(Debug, Clone)]
pub struct CrossingResult {
    pub weight: f64,
    pub path: LatticePath,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    idx: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want smallest (cost, idx).
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap()
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NO_PRED: u32 = u32::MAX;

fn dijkstra(
    grid: &WeightGrid,
    sub: Rect,
    sources: impl Iterator<Item = Point>,
    is_target: impl Fn(Point) -> bool,
) -> Option<(f64, Vec<Point>)> {
    let w = sub.width();
    let h = sub.height();
    let n = (w * h) as usize;
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut heap = BinaryHeap::new();

    let local = |p: Point| ((p.y - sub.y0) * w + (p.x - sub.x0)) as u32;
    let point_of = |i: u32| Point::new(sub.x0 + (i as i64 % w), sub.y0 + (i as i64 / w));

    for p in sources {
        debug_assert!(sub.contains(p));
        let i = local(p);
        let c = grid.weight(p);
        if c < dist[i as usize] {
            dist[i as usize] = c;
            heap.push(HeapEntry { cost: c, idx: i });
        }
    }

    let mut best_target: Option<(f64, u32)> = None;
    while let Some(HeapEntry { cost, idx }) = heap.pop() {
        if cost != dist[idx as usize] {
            continue;
        }
        let p = point_of(idx);
        if is_target(p) {
            best_target = Some((cost, idx));
            break;
        }
        let neighbours = [
            Point::new(p.x - 1, p.y),
            Point::new(p.x + 1, p.y),
            Point::new(p.x, p.y - 1),
            Point::new(p.x, p.y + 1),
        ];
        for q in neighbours {
            if !sub.contains(q) {
                continue;
            }
            let qi = local(q);
            let nd = cost + grid.weight(q);
            let cur = dist[qi as usize];
            if nd < cur {
                dist[qi as usize] = nd;
                pred[qi as usize] = idx;
                heap.push(HeapEntry { cost: nd, idx: qi });
            } else if nd == cur && idx < pred[qi as usize] {
                pred[qi as usize] = idx;
            }
        }
    }

    let (cost, end) = best_target?;
    let mut points = Vec::new();
    let mut cur = end;
    loop {
        points.push(point_of(cur));
        if pred[cur as usize] == NO_PRED {
            break;
        }
        cur = pred[cur as usize];
    }
    points.reverse();
    Some((cost, points))
}

/// Minimum-weight crossing of `sub` between opposite boundaries.
///
/// `LeftRight` runs from the column `x = sub.x0` to `x = sub.x1`; `TopDown`
/// from the row `y = sub.y1` to `y = sub.y0`.
pub fn crossing_distance(
    grid: &WeightGrid,
    sub: Rect,
    dir: CrossDir,
) -> Result<CrossingResult, GeodesicError> {
    if !grid.region().contains_rect(&sub) {
        return Err(GeodesicError::SubOutOfRegion(sub, grid.region()));
    }
    let (sources, is_target): (Vec<Point>, Box<dyn Fn(Point) -> bool>) = match dir {
        CrossDir::LeftRight => (
            (sub.y0..=sub.y1).map(|y| Point::new(sub.x0, y)).collect(),
            Box::new(move |p: Point| p.x == sub.x1),
        ),
        CrossDir::TopDown => (
            (sub.x0..=sub.x1).map(|x| Point::new(x, sub.y1)).collect(),
            Box::new(move |p: Point| p.y == sub.y0),
        ),
    };
    let (weight, points) =
        dijkstra(grid, sub, sources.into_iter(), is_target).expect("boundary is always reachable");
    Ok(CrossingResult { weight, path: LatticePath::new(points).unwrap() })
}

/// Minimum-weight path from `start` to the vertical line `y = target_y`
/// inside `sub`, including both endpoints' weights.
pub fn point_to_row(
    grid: &WeightGrid,
    sub: Rect,
    start: Point,
    target_y: i64,
) -> Result<CrossingResult, GeodesicError> {
    if !grid.region().contains_rect(&sub) {
        return Err(GeodesicError::SubOutOfRegion(sub, grid.region()));
    }
    if !sub.contains(start) {
        return Err(GeodesicError::PointOutOfRegion(start));
    }
    assert!(target_y >= sub.y0 && target_y <= sub.y1);
    let (weight, points) = dijkstra(grid, sub, std::iter::once(start), |p| p.y == target_y)
        .expect("row is always reachable");
    Ok(CrossingResult { weight, path: LatticePath::new(points).unwrap() })
}

/// Weight of the set of vertices visited by `path` (duplicates count once).
pub fn path_weight(grid: &WeightGrid, path: &LatticePath) -> Result<f64, GeodesicError> {
    let region = grid.region();
    let mut idx: Vec<usize> = Vec::with_capacity(path.len());
    for &p in path.points() {
        if !region.contains(p) {
            return Err(GeodesicError::PointOutOfRegion(p));
        }
        idx.push(region.flat_index(p));
    }
    idx.sort_unstable();
    idx.dedup();
    Ok(idx.into_iter().map(|i| grid.weights[i]).sum())
}

/// First-occurrence index of every vertex of `path`.
pub fn path_index_map(path: &LatticePath) -> HashMap<Point, usize> {
    let mut m = HashMap::with_capacity(path.len());
    for (i, &p) in path.points().iter().enumerate() {
        m.entry(p).or_insert(i);
    }
    m
}

/// The sub-path of `path` from index `from` to index `to` inclusive,
/// walked forward or backward as needed.
pub fn route_on_path(path: &LatticePath, from: usize, to: usize) -> Vec<Point> {
    let pts = path.points();
    if from <= to {
        pts[from..=to].to_vec()
    } else {
        pts[to..=from].iter().rev().copied().collect()
    }
}

/// Follows `a` to its first vertex shared with `b`, then `b` onward from
/// that vertex's first occurrence.
pub fn splice(a: &LatticePath, b: &LatticePath) -> Result<LatticePath, GeodesicError> {
    let b_index = path_index_map(b);
    let (ai, bi) = a
        .points()
        .iter()
        .enumerate()
        .find_map(|(i, p)| b_index.get(p).map(|&j| (i, j)))
        .ok_or(GeodesicError::DisjointPaths)?;
    let mut points = a.points()[..=ai].to_vec();
    points.extend_from_slice(&b.points()[bi + 1..]);
    Ok(LatticePath::new(points).expect("junction preserves adjacency"))
}

/// Breadth-first route between two vertices inside an allowed vertex set.
fn bfs_route(allowed: &HashSet<Point>, from: Point, to: Point) -> Option<Vec<Point>> {
    if from == to {
        return Some(vec![from]);
    }
    let mut prev: HashMap<Point, Point> = HashMap::new();
    let mut queue = VecDeque::new();
    queue.push_back(from);
    prev.insert(from, from);
    while let Some(p) = queue.pop_front() {
        for q in [
            Point::new(p.x - 1, p.y),
            Point::new(p.x + 1, p.y),
            Point::new(p.x, p.y - 1),
            Point::new(p.x, p.y + 1),
        ] {
            if allowed.contains(&q) && !prev.contains_key(&q) {
                prev.insert(q, p);
                if q == to {
                    let mut out = vec![q];
                    let mut cur = q;
                    while cur != from {
                        cur = prev[&cur];
                        out.push(cur);
                    }
                    out.reverse();
                    return Some(out);
                }
                queue.push_back(q);
            }
        }
    }
    None
}

/// Walks `path` forward from `start_idx` to its first vertex contained in
/// `targets`; falls back to a breadth-first route through `union` when the
/// forward walk misses.
fn arc_to(
    path: &LatticePath,
    start_idx: usize,
    targets: &HashMap<Point, usize>,
    union: &HashSet<Point>,
    reverse: bool,
) -> (Vec<Point>, Point) {
    let pts = path.points();
    let range: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..=start_idx).rev())
    } else {
        Box::new(start_idx..pts.len())
    };
    for i in range {
        if targets.contains_key(&pts[i]) {
            return (route_on_path(path, start_idx, i), pts[i]);
        }
    }
    // Orderings failed; connect within the union of contour pieces.
    let to = *targets
        .keys()
        .min_by_key(|p| (p.x, p.y))
        .expect("target set is never empty");
    let route = bfs_route(union, pts[start_idx], to).expect("contour pieces are connected");
    (route, to)
}

/// A closed light contour separating `inner` from the complement of
/// `outer`, spliced from minimum-weight crossings of the four overlapping
/// side rectangles of the annulus. The returned path is a cycle: its last
/// vertex is adjacent to its first.
pub fn annulus_contour(
    grid: &WeightGrid,
    inner: Rect,
    outer: Rect,
) -> Result<CrossingResult, GeodesicError> {
    if !grid.region().contains_rect(&outer)
        || inner.x0 - outer.x0 < 1
        || outer.x1 - inner.x1 < 1
        || inner.y0 - outer.y0 < 1
        || outer.y1 - inner.y1 < 1
    {
        return Err(GeodesicError::ThinAnnulus);
    }
    let top = crossing_distance(
        grid,
        Rect::new(outer.x0, inner.y1 + 1, outer.x1, outer.y1),
        CrossDir::LeftRight,
    )?;
    let bottom = crossing_distance(
        grid,
        Rect::new(outer.x0, outer.y0, outer.x1, inner.y0 - 1),
        CrossDir::LeftRight,
    )?;
    let left = crossing_distance(
        grid,
        Rect::new(outer.x0, outer.y0, inner.x0 - 1, outer.y1),
        CrossDir::TopDown,
    )?;
    let right = crossing_distance(
        grid,
        Rect::new(inner.x1 + 1, outer.y0, outer.x1, outer.y1),
        CrossDir::TopDown,
    )?;

    let idx_r = path_index_map(&right.path);
    let idx_b = path_index_map(&bottom.path);
    let idx_l = path_index_map(&left.path);
    let union: HashSet<Point> = top
        .path
        .points()
        .iter()
        .chain(right.path.points())
        .chain(bottom.path.points())
        .chain(left.path.points())
        .copied()
        .collect();

    // Start at the top crossing's first vertex on the left crossing, walk
    // clockwise: top -> right -> bottom (reversed) -> left (reversed).
    let t_start = top
        .path
        .points()
        .iter()
        .position(|p| idx_l.contains_key(p))
        .expect("top and left crossings intersect");
    let start_vertex = top.path.points()[t_start];

    let mut cycle: Vec<Point> = Vec::new();
    let (arc, v_tr) = arc_to(&top.path, t_start, &idx_r, &union, false);
    cycle.extend_from_slice(&arc);
    let (arc, v_rb) = arc_to(&right.path, idx_r[&v_tr], &idx_b, &union, false);
    cycle.extend_from_slice(&arc[1..]);
    let (arc, v_bl) = arc_to(&bottom.path, idx_b[&v_rb], &idx_l, &union, true);
    cycle.extend_from_slice(&arc[1..]);
    let closing = route_on_path(&left.path, idx_l[&v_bl], idx_l[&start_vertex]);
    cycle.extend_from_slice(&closing[1..]);
    // The walk ends back at the start vertex; drop the duplicate.
    debug_assert_eq!(cycle.last(), cycle.first());
    cycle.pop();

    let path = LatticePath::new(cycle).expect("contour arcs join at shared vertices");
    let weight = path_weight(grid, &path)?;
    debug_assert!(weight <= top.weight + bottom.weight + left.weight + right.weight + 1e-9);
    Ok(CrossingResult { weight, path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_u64;

    fn grid_from(rows: &[&[f64]]) -> WeightGrid {
        // rows[0] is the TOP row, so literals read like a picture.
        let h = rows.len() as i64;
        let w = rows[0].len() as i64;
        let region = Rect::with_size(0, 0, w, h);
        let mut weights = vec![0.0; (w * h) as usize];
        for (ri, row) in rows.iter().enumerate() {
            for (ci, &v) in row.iter().enumerate() {
                let p = Point::new(ci as i64, h - 1 - ri as i64);
                weights[region.flat_index(p)] = v;
            }
        }
        WeightGrid::new(region, weights).unwrap()
    }

    /// Exhaustive minimum over simple crossings, by depth-first search.
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

    fn random_weight(seed: u64, i: u64) -> f64 {
        // Uniform in (0.1, 10), deterministic.
        0.1 + 9.9 * (derive_u64(seed, &[i]) >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn single_vertex_region() {
        let g = WeightGrid::uniform(Rect::with_size(0, 0, 1, 1), 2.5);
        let r = crossing_distance(&g, g.region(), CrossDir::LeftRight).unwrap();
        assert_eq!(r.weight, 2.5);
        assert_eq!(r.path.len(), 1);
    }

    #[test]
    fn two_by_two_uniform() {
        let g = WeightGrid::uniform(Rect::with_size(0, 0, 2, 2), 1.0);
        let r = crossing_distance(&g, g.region(), CrossDir::LeftRight).unwrap();
        assert_eq!(r.weight, 2.0);
        assert_eq!(r.path.len(), 2);
    }

    #[test]
    fn three_by_three_matches_brute_force() {
        let g = grid_from(&[&[1.0, 9.0, 1.0], &[1.0, 1.0, 1.0], &[9.0, 9.0, 1.0]]);
        let r = crossing_distance(&g, g.region(), CrossDir::LeftRight).unwrap();
        let expect = brute_force_crossing(&g, g.region(), CrossDir::LeftRight);
        assert_eq!(r.weight, expect);
    }

    #[test]
    fn random_grids_match_brute_force() {
        for case in 0..200u64 {
            let w = 2 + (case % 3) as i64;
            let h = 2 + (case % 4) as i64;
            let region = Rect::with_size(0, 0, w, h);
            let weights: Vec<f64> =
                (0..region.area() as u64).map(|i| random_weight(case, i)).collect();
            let g = WeightGrid::new(region, weights).unwrap();
            for dir in [CrossDir::LeftRight, CrossDir::TopDown] {
                let fast = crossing_distance(&g, region, dir).unwrap();
                let brute = brute_force_crossing(&g, region, dir);
                assert!(
                    (fast.weight - brute).abs() < 1e-9,
                    "case {case} {dir:?}: {} vs {brute}",
                    fast.weight
                );
                let recomputed = path_weight(&g, &fast.path).unwrap();
                assert!((recomputed - fast.weight).abs() < 1e-9);
                assert!(fast.path.is_simple());
            }
        }
    }

    #[test]
    fn monotone_in_single_weight() {
        let region = Rect::with_size(0, 0, 4, 4);
        let weights: Vec<f64> = (0..16u64).map(|i| random_weight(77, i)).collect();
        let g = WeightGrid::new(region, weights).unwrap();
        let base = crossing_distance(&g, region, CrossDir::LeftRight).unwrap().weight;
        for p in region.points() {
            let mut g2 = g.clone();
            *g2.weight_mut(p) += 1.0;
            let bumped = crossing_distance(&g2, region, CrossDir::LeftRight).unwrap().weight;
            assert!(bumped >= base - 1e-12, "raising {p} decreased the distance");
        }
    }

    #[test]
    fn concatenation_upper_bound() {
        // distance(whole) <= distance(left half) + distance(right half)
        //                    + weight of a connecting column.
        let region = Rect::with_size(0, 0, 8, 4);
        let weights: Vec<f64> = (0..32u64).map(|i| random_weight(3, i)).collect();
        let g = WeightGrid::new(region, weights).unwrap();
        let whole = crossing_distance(&g, region, CrossDir::LeftRight).unwrap().weight;
        let lhs = crossing_distance(&g, Rect::new(0, 0, 3, 3), CrossDir::LeftRight).unwrap().weight;
        let rhs = crossing_distance(&g, Rect::new(4, 0, 7, 3), CrossDir::LeftRight).unwrap().weight;
        let col: f64 = (0..4).map(|y| g.weight(Point::new(3, y)) + g.weight(Point::new(4, y))).sum();
        assert!(whole <= lhs + rhs + col + 1e-9);
    }

    #[test]
    fn row_dominates_crossing() {
        let region = Rect::with_size(0, 0, 8, 8);
        let weights: Vec<f64> = (0..64u64).map(|i| random_weight(9, i)).collect();
        let g = WeightGrid::new(region, weights).unwrap();
        let d = crossing_distance(&g, region, CrossDir::LeftRight).unwrap().weight;
        for y in 0..8 {
            let row = LatticePath::horizontal(y, 0, 7);
            assert!(d <= path_weight(&g, &row).unwrap() + 1e-12);
        }
    }

    #[test]
    fn deterministic_paths() {
        let region = Rect::with_size(0, 0, 6, 6);
        // All-equal weights force heavy tie-breaking.
        let g = WeightGrid::uniform(region, 1.0);
        let a = crossing_distance(&g, region, CrossDir::LeftRight).unwrap();
        let b = crossing_distance(&g, region, CrossDir::LeftRight).unwrap();
        assert_eq!(a.path, b.path);
        assert_eq!(a.weight, 6.0);
    }

    #[test]
    fn path_weight_set_semantics() {
        let g = WeightGrid::uniform(Rect::with_size(0, 0, 3, 3), 1.0);
        let revisit = LatticePath::new(
            [(0, 0), (1, 0), (1, 1), (1, 0), (2, 0)]
                .iter()
                .map(|&(x, y)| Point::new(x, y))
                .collect(),
        )
        .unwrap();
        assert_eq!(path_weight(&g, &revisit).unwrap(), 4.0);
        let single = LatticePath::single(Point::new(2, 2));
        assert_eq!(path_weight(&g, &single).unwrap(), 1.0);
    }

    #[test]
    fn splice_cases() {
        let a = LatticePath::horizontal(0, 0, 4);
        assert_eq!(splice(&a, &a).unwrap(), a);
        let b = LatticePath::vertical(2, 0, 3);
        let s = splice(&a, &b).unwrap();
        assert_eq!(s.first(), Point::new(0, 0));
        assert_eq!(s.last(), Point::new(2, 3));
        let far = LatticePath::vertical(9, 0, 3);
        assert!(matches!(splice(&a, &far), Err(GeodesicError::DisjointPaths)));
    }

    #[test]
    fn splice_random_crossings() {
        for case in 0..50u64 {
            let region = Rect::with_size(0, 0, 6, 6);
            let weights: Vec<f64> =
                (0..region.area() as u64).map(|i| random_weight(case + 1000, i)).collect();
            let g = WeightGrid::new(region, weights).unwrap();
            let lr = crossing_distance(&g, region, CrossDir::LeftRight).unwrap();
            let td = crossing_distance(&g, region, CrossDir::TopDown).unwrap();
            let s = splice(&lr.path, &td.path).unwrap();
            let vertices: HashSet<Point> = lr.path.points().iter().chain(td.path.points()).copied().collect();
            assert!(s.points().iter().all(|p| vertices.contains(p)));
        }
    }

    #[test]
    fn perimeter_ring_contour() {
        let g = WeightGrid::uniform(Rect::with_size(0, 0, 5, 5), 1.0);
        let inner = Rect::with_size(2, 2, 1, 1);
        let outer = Rect::with_size(1, 1, 3, 3);
        let c = annulus_contour(&g, inner, outer).unwrap();
        assert_eq!(c.path.len(), 8);
        assert_eq!(c.weight, 8.0);
        assert!(c.path.first().is_adjacent(&c.path.last()));
    }

    #[test]
    fn contour_weight_bound_uniform() {
        let g = WeightGrid::uniform(Rect::with_size(0, 0, 12, 12), 1.0);
        let inner = Rect::with_size(4, 4, 2, 2);
        let outer = Rect::with_size(3, 3, 8, 8);
        let c = annulus_contour(&g, inner, outer).unwrap();
        let side = crossing_distance(&g, Rect::new(3, 6, 10, 10), CrossDir::LeftRight).unwrap();
        assert!(c.weight <= 4.0 * side.weight + 1e-9);
    }

    #[test]
    fn contour_separates() {
        // Flood fill from the inner box must not escape the outer box
        // without touching the contour.
        for case in 0..30u64 {
            let region = Rect::with_size(0, 0, 16, 16);
            let weights: Vec<f64> =
                (0..region.area() as u64).map(|i| random_weight(case + 7, i)).collect();
            let g = WeightGrid::new(region, weights).unwrap();
            let inner = Rect::with_size(6, 6, 4, 4);
            let outer = Rect::with_size(4, 4, 8, 8);
            let contour: HashSet<Point> =
                annulus_contour(&g, inner, outer).unwrap().path.points().iter().copied().collect();
            let mut seen: HashSet<Point> = HashSet::new();
            let mut queue: VecDeque<Point> = inner.points().filter(|p| !contour.contains(p)).collect();
            seen.extend(queue.iter().copied());
            while let Some(p) = queue.pop_front() {
                assert!(outer.contains(p), "case {case}: flood fill escaped at {p}");
                for q in [
                    Point::new(p.x - 1, p.y),
                    Point::new(p.x + 1, p.y),
                    Point::new(p.x, p.y - 1),
                    Point::new(p.x, p.y + 1),
                ] {
                    if region.contains(q) && !contour.contains(&q) && seen.insert(q) {
                        queue.push_back(q);
                    }
                }
            }
        }
    }

    #[test]
    fn thin_annulus_rejected() {
        let g = WeightGrid::uniform(Rect::with_size(0, 0, 8, 8), 1.0);
        let inner = Rect::with_size(2, 2, 2, 2);
        assert!(matches!(
            annulus_contour(&g, inner, Rect::with_size(2, 1, 4, 4)),
            Err(GeodesicError::ThinAnnulus)
        ));
    }
}
