//! Box-coarsening of lattice paths.
//!
//! The plane is covered by non-overlapping `L x L` boxes anchored at the
//! global origin. The `L`-coarsening of a path records the center of each
//! box the path visits, in exit order: starting from the first point's box,
//! a new entry is appended whenever the path leaves the current box. The
//! coarsening of a self-avoiding path is not necessarily self-avoiding.

use crate::lattice::{LatticePath, Point};

/// Sequence of box centers visited by a path at one scale.
///
/// Internally boxes are kept by corner; a box of side `L` at corner `(x, y)`
/// has center `(x + L/2 - 0.5, y + L/2 - 0.5)`, exact in doubles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarsePath {
    side: i64,
    corners: Vec<Point>,
}

impl CoarsePath {
    pub fn side(&self) -> i64 {
        self.side
    }

    pub fn corners(&self) -> &[Point] {
        &self.corners
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    /// Half-integer centers of the visited boxes, in order.
    pub fn centers(&self) -> Vec<(f64, f64)> {
        let off = self.side as f64 / 2.0 - 0.5;
        self.corners.iter().map(|c| (c.x as f64 + off, c.y as f64 + off)).collect()
    }

    pub fn center_at(&self, i: usize) -> (f64, f64) {
        let off = self.side as f64 / 2.0 - 0.5;
        (self.corners[i].x as f64 + off, self.corners[i].y as f64 + off)
    }

    /// True when no box repeats.
    pub fn is_simple(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.corners.len());
        self.corners.iter().all(|c| seen.insert(*c))
    }
}

pub fn box_corner(p: Point, side: i64) -> Point {
    Point::new(p.x.div_euclid(side) * side, p.y.div_euclid(side) * side)
}

/// The `L`-coarsening of `path`. `side` must be a power of two.
pub fn l_coarsening(path: &LatticePath, side: i64) -> CoarsePath {
    assert!(side >= 1 && side.count_ones() == 1, "side must be a power of two");
    let mut corners = Vec::new();
    let mut current = box_corner(path.first(), side);
    corners.push(current);
    for &p in &path.points()[1..] {
        let c = box_corner(p, side);
        if c != current {
            corners.push(c);
            current = c;
        }
    }
    CoarsePath { side, corners }
}

/// True when the coarsening visits no box twice.
pub fn is_simple(coarse: &CoarsePath) -> bool {
    coarse.is_simple()
}

/// True when the `2^level`-coarsening of `path` is a three-box corner of one
/// of the two template shapes: down-then-right or up-then-right. Matching is
/// up to translation only.
pub fn is_l_segment(path: &LatticePath, level: u8) -> bool {
    let side = 1i64 << level;
    let coarse = l_coarsening(path, side);
    if coarse.len() != 3 {
        return false;
    }
    let c = coarse.corners();
    let d1 = (c[1].x - c[0].x, c[1].y - c[0].y);
    let d2 = (c[2].x - c[1].x, c[2].y - c[1].y);
    (d1 == (0, -side) || d1 == (0, side)) && d2 == (side, 0)
}

/// The last center along the coarse path with x-coordinate strictly left of
/// the vertical line `x = x_line`. `None` when every center lies at or right
/// of the line.
pub fn last_hit_left_of(coarse: &CoarsePath, x_line: i64) -> Option<(f64, f64)> {
    let off = coarse.side as f64 / 2.0 - 0.5;
    coarse
        .corners
        .iter()
        .enumerate()
        .filter(|(_, c)| (c.x as f64 + off) < x_line as f64)
        .map(|(i, _)| i)
        .next_back()
        .map(|i| coarse.center_at(i))
}
