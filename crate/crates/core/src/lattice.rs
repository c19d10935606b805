//! Lattice geometry shared by every other module: points, axis-aligned
//! rectangles with inclusive bounds, and 4-adjacent paths.

use std::fmt;

/// A vertex of the square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    /// True when `other` is one of the four lattice neighbours.
    pub fn is_adjacent(&self, other: &Point) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(i64, i64)> for Point {
    fn from((x, y): (i64, i64)) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned rectangle with inclusive corners `(x0, y0)`..`(x1, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl Rect {
    pub fn new(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        assert!(x0 <= x1 && y0 <= y1, "degenerate rectangle {x0},{y0}..{x1},{y1}");
        Rect { x0, y0, x1, y1 }
    }

    /// Rectangle `[x, x+w-1] x [y, y+h-1]`.
    pub fn with_size(x: i64, y: i64, w: i64, h: i64) -> Self {
        assert!(w > 0 && h > 0);
        Rect::new(x, y, x + w - 1, y + h - 1)
    }

    pub fn width(&self) -> i64 {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> i64 {
        self.y1 - self.y0 + 1
    }

    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        r.x0 >= self.x0 && r.x1 <= self.x1 && r.y0 >= self.y0 && r.y1 <= self.y1
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        (x0 <= x1 && y0 <= y1).then(|| Rect::new(x0, y0, x1, y1))
    }

    /// Row-major flat index of `p` (y-major outer loop).
    pub fn flat_index(&self, p: Point) -> usize {
        debug_assert!(self.contains(p));
        ((p.y - self.y0) * self.width() + (p.x - self.x0)) as usize
    }

    pub fn point_at(&self, idx: usize) -> Point {
        let w = self.width() as usize;
        Point::new(self.x0 + (idx % w) as i64, self.y0 + (idx / w) as i64)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Point::new(x, y)))
    }
}

/// Ordered sequence of 4-adjacent lattice points. Never empty.
///
/// Paths may revisit vertices; weight computations treat the vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePath {
    points: Vec<Point>,
}

impl LatticePath {
    /// Builds a path, checking non-emptiness and 4-adjacency of consecutive
    /// points.
    pub fn new(points: Vec<Point>) -> Result<Self, PathError> {
        if points.is_empty() {
            return Err(PathError::Empty);
        }
        for (i, w) in points.windows(2).enumerate() {
            if !w[0].is_adjacent(&w[1]) {
                return Err(PathError::NotAdjacent { index: i, a: w[0], b: w[1] });
            }
        }
        Ok(LatticePath { points })
    }

    pub fn single(p: Point) -> Self {
        LatticePath { points: vec![p] }
    }

    /// Straight horizontal run from `(x0, y)` to `(x1, y)` inclusive.
    pub fn horizontal(y: i64, x0: i64, x1: i64) -> Self {
        let points = if x0 <= x1 {
            (x0..=x1).map(|x| Point::new(x, y)).collect()
        } else {
            (x1..=x0).rev().map(|x| Point::new(x, y)).collect()
        };
        LatticePath { points }
    }

    /// Straight vertical run from `(x, y0)` to `(x, y1)` inclusive.
    pub fn vertical(x: i64, y0: i64, y1: i64) -> Self {
        let points = if y0 <= y1 {
            (y0..=y1).map(|y| Point::new(x, y)).collect()
        } else {
            (y1..=y0).rev().map(|y| Point::new(x, y)).collect()
        };
        LatticePath { points }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> Point {
        self.points[0]
    }

    pub fn last(&self) -> Point {
        *self.points.last().unwrap()
    }

    /// True when no vertex repeats.
    pub fn is_simple(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.points.len());
        self.points.iter().all(|p| seen.insert(*p))
    }

    /// JSON array of `[x, y]` pairs, the serialization used by reports.
    pub fn to_json_array(&self) -> String {
        let mut s = String::with_capacity(self.points.len() * 8 + 2);
        s.push('[');
        for (i, p) in self.points.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("[{},{}]", p.x, p.y));
        }
        s.push(']');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("path must contain at least one point")]
    Empty,
    #[error("points {a} and {b} at position {index} are not 4-adjacent")]
    NotAdjacent { index: usize, a: Point, b: Point },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacency() {
        let p = Point::new(3, 4);
        assert!(p.is_adjacent(&Point::new(2, 4)));
        assert!(p.is_adjacent(&Point::new(3, 5)));
        assert!(!p.is_adjacent(&Point::new(2, 5)));
        assert!(!p.is_adjacent(&p));
    }

    #[test]
    fn path_validation() {
        assert_eq!(LatticePath::new(vec![]), Err(PathError::Empty));
        let ok = LatticePath::new(vec![Point::new(0, 0), Point::new(1, 0), Point::new(1, 1)]);
        assert!(ok.is_ok());
        let bad = LatticePath::new(vec![Point::new(0, 0), Point::new(1, 1)]);
        assert!(matches!(bad, Err(PathError::NotAdjacent { index: 0, .. })));
    }

    #[test]
    fn rect_indexing_roundtrip() {
        let r = Rect::with_size(-3, 5, 4, 3);
        for (i, p) in r.points().enumerate() {
            assert_eq!(r.flat_index(p), i);
            assert_eq!(r.point_at(i), p);
        }
        assert_eq!(r.area(), 12);
    }

    #[test]
    fn straight_runs() {
        let h = LatticePath::horizontal(2, 5, 1);
        assert_eq!(h.first(), Point::new(5, 2));
        assert_eq!(h.last(), Point::new(1, 2));
        assert_eq!(h.len(), 5);
        let v = LatticePath::vertical(0, 0, 3);
        assert_eq!(v.len(), 4);
        assert!(v.is_simple());
    }
}
