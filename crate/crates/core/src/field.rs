//! Hierarchical Gaussian fields on lattice rectangles.
//!
//! Four kinds are provided:
//!
//! * `Brw`: branching random walk on a square of side `2^n`: the value at
//!   `z` sums one unit Gaussian per dyadic box of level `0..n` containing
//!   `z`, so `Var = n` and `Cov(u, v) = n - l` where `l` is the first level
//!   at which `u` and `v` share a box.
//! * `ConcatBrw`: the same sum over a `cells x 1` rectangle of side-`2^n`
//!   squares; boxes of level below `n` never straddle a cell boundary, so
//!   the cells carry independent walks.
//! * `Chi`: the sign-switched representation, built recursively: when a
//!   rectangle of side `2^m` is assembled from its four side-`2^(m-1)`
//!   quarters, every point of quarter-cell `(i, k, j)` receives
//!   `(-1)^((k-1)*cells + j) * b_m * a(rect)` plus `(-1)^i * c_m * a(box)`,
//!   with `b_m = sqrt((1 - 4^-m)/3)`, `c_m = sqrt(2) * b_m`. The rectangle
//!   Gaussian is shared between the two columns of each parent cell and the
//!   box Gaussian between the two rows, which is what lets a crossing
//!   harvest variation by choosing rows.
//! * `TildeChi`: `Chi` plus `b_n * a(cell)` per top-level cell, which
//!   restores exactly the concatenated-walk covariance (checked by the
//!   [`exact_cov`] oracle).
//!
//! The box Gaussians consumed by the `Chi` recursion are realized as
//! unit-time increments of per-rectangle Brownian streams
//! ([`DyadicKey::BmIncrement`]) so the crossing constructor can reuse the
//! same randomness for its switching decisions.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::lattice::{Point, Rect};
use crate::rng::{DyadicKey, GaussianSource};

/// Default cap on the field level; `cells * 4^n` values are materialized.
pub const DEFAULT_MAX_LEVEL: u8 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Brw,
    ConcatBrw,
    Chi,
    TildeChi,
}

impl FieldKind {
    pub fn code(self) -> u8 {
        match self {
            FieldKind::Brw => 0,
            FieldKind::ConcatBrw => 1,
            FieldKind::Chi => 2,
            FieldKind::TildeChi => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => FieldKind::Brw,
            1 => FieldKind::ConcatBrw,
            2 => FieldKind::Chi,
            3 => FieldKind::TildeChi,
            _ => return None,
        })
    }
}

impl std::str::FromStr for FieldKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brw" => Ok(FieldKind::Brw),
            "concat" | "concat-brw" => Ok(FieldKind::ConcatBrw),
            "chi" => Ok(FieldKind::Chi),
            "tilde-chi" | "tilde_chi" => Ok(FieldKind::TildeChi),
            other => Err(format!("unknown field kind `{other}`")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("cell count must be odd and positive, got {0}")]
    EvenCells(u32),
    #[error("kind Brw requires exactly one cell, got {0}")]
    BrwNeedsOneCell(u32),
    #[error("origin {0} is not aligned to the cells x 2^n grid")]
    OriginMisaligned(Point),
    #[error("level {n} exceeds the memory guard {max}")]
    LevelTooLarge { n: u8, max: u8 },
    #[error("point {0} lies outside the field rectangle")]
    OutOfRange(Point),
    #[error("field parameters differ: {0}")]
    ParamMismatch(String),
    #[error("bad field dump: {0}")]
    BadDump(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coefficients `b_m`, `c_m` of the recursion step that assembles side
/// `2^m`: `b = sqrt((1 - 4^-m)/3)`, `c = sqrt(2(1 - 4^-m)/3)`, so that
/// `c^2 = 2 b^2` and `b^2 + c^2 = 1 - 4^-m`.
pub fn level_coeffs(m: u32) -> (f64, f64) {
    assert!(m >= 1, "the recursion's first applied level is 1");
    let v = (1.0 - 0.25f64.powi(m as i32)) / 3.0;
    (v.sqrt(), (2.0 * v).sqrt())
}

/// Key of the stacked rectangle carrying the `b`-coefficient for quarter
/// cell `(k, j)` of the side-`2^(m)` rectangle at `parent` (`sub_level` is
/// `m - 1`, the side of the quarter cells).
///
/// Column `(k-1)*cells + j` uses its own rectangle when odd and the
/// preceding column's when even, so each (odd, even) column pair shares one
/// Gaussian with opposite signs.
pub fn tilde_r_lookup(k: u32, j: u32, cells: u32, parent: Point, sub_level: u8) -> DyadicKey {
    debug_assert!((1..=2).contains(&k) && (1..=cells).contains(&j) && cells % 2 == 1);
    let col = (k - 1) * cells + j;
    // Odd case keeps its column; both even cases resolve to the column
    // before it (for j = 1 that is column (k-1)*cells, the last of half 1).
    let target = if col % 2 == 1 { col } else { col - 1 };
    debug_assert!(target >= 1);
    let side = 1i64 << sub_level;
    DyadicKey::StackedRect {
        level: sub_level,
        corner: Point::new(parent.x + (target as i64 - 1) * side, parent.y),
    }
}

/// Key of the Brownian-stream increment carrying the `c`-coefficient for
/// quarter cell `(k, j)`; both rows of a column consume the same increment.
pub fn bm_increment_key(k: u32, j: u32, cells: u32, parent: Point, sub_level: u8) -> DyadicKey {
    debug_assert!((1..=2).contains(&k) && (1..=cells).contains(&j));
    DyadicKey::BmIncrement {
        level: sub_level,
        corner: parent,
        stream: ((k - 1) * cells + j) as u64,
    }
}

fn validate_params(kind: FieldKind, n: u8, cells: u32, origin: Point) -> Result<(), FieldError> {
    if cells == 0 || cells % 2 == 0 {
        return Err(FieldError::EvenCells(cells));
    }
    if kind == FieldKind::Brw && cells != 1 {
        return Err(FieldError::BrwNeedsOneCell(cells));
    }
    let side = 1i64 << n;
    if origin.x.rem_euclid(cells as i64 * side) != 0 || origin.y.rem_euclid(side) != 0 {
        return Err(FieldError::OriginMisaligned(origin));
    }
    Ok(())
}

/// Realized field values over `[u_x, u_x + cells*2^n - 1] x [u_y, u_y + 2^n - 1]`,
/// stored row-major with the y loop outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub kind: FieldKind,
    pub n: u8,
    pub cells: u32,
    pub origin: Point,
    values: Vec<f64>,
}

impl FieldSample {
    pub fn rect(&self) -> Rect {
        let side = 1i64 << self.n;
        Rect::with_size(self.origin.x, self.origin.y, self.cells as i64 * side, side)
    }

    pub fn side(&self) -> i64 {
        1i64 << self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, z: Point) -> f64 {
        self.values[self.rect().flat_index(z)]
    }

    /// Serializes as a 32-byte header followed by little-endian doubles.
    ///
    /// Header: magic `FPBW`, version u16, kind u8, n u8, cells u32,
    /// origin x i64, origin y i64, 4 zero bytes of padding.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), FieldError> {
        w.write_all(b"FPBW")?;
        w.write_all(&1u16.to_le_bytes())?;
        w.write_all(&[self.kind.code(), self.n])?;
        w.write_all(&self.cells.to_le_bytes())?;
        w.write_all(&self.origin.x.to_le_bytes())?;
        w.write_all(&self.origin.y.to_le_bytes())?;
        w.write_all(&[0u8; 4])?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, FieldError> {
        let mut header = [0u8; 32];
        r.read_exact(&mut header)?;
        if &header[0..4] != b"FPBW" {
            return Err(FieldError::BadDump("bad magic".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != 1 {
            return Err(FieldError::BadDump(format!("unsupported version {version}")));
        }
        let kind = FieldKind::from_code(header[6])
            .ok_or_else(|| FieldError::BadDump(format!("unknown kind {}", header[6])))?;
        let n = header[7];
        let cells = u32::from_le_bytes(header[8..12].try_into().unwrap());
        let ox = i64::from_le_bytes(header[12..20].try_into().unwrap());
        let oy = i64::from_le_bytes(header[20..28].try_into().unwrap());
        let origin = Point::new(ox, oy);
        validate_params(kind, n, cells, origin).map_err(|e| FieldError::BadDump(e.to_string()))?;
        if n > DEFAULT_MAX_LEVEL {
            return Err(FieldError::BadDump(format!("level {n} too large")));
        }
        let len = cells as usize * (1usize << (2 * n as usize));
        let mut values = vec![0.0f64; len];
        let mut buf = [0u8; 8];
        for v in values.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        Ok(FieldSample { kind, n, cells, origin, values })
    }
}

/// Samples the field over its full rectangle. `n` is capped by
/// [`DEFAULT_MAX_LEVEL`]; use [`sample_field_with_limit`] to override.
pub fn sample_field(
    kind: FieldKind,
    n: u8,
    cells: u32,
    origin: Point,
    source: &GaussianSource,
) -> Result<FieldSample, FieldError> {
    sample_field_with_limit(kind, n, cells, origin, source, DEFAULT_MAX_LEVEL)
}

pub fn sample_field_with_limit(
    kind: FieldKind,
    n: u8,
    cells: u32,
    origin: Point,
    source: &GaussianSource,
    max_level: u8,
) -> Result<FieldSample, FieldError> {
    validate_params(kind, n, cells, origin)?;
    if n > max_level {
        return Err(FieldError::LevelTooLarge { n, max: max_level });
    }
    let side = 1i64 << n;
    let width = cells as i64 * side;
    let mut values = vec![0.0f64; (width * side) as usize];
    match kind {
        FieldKind::Brw | FieldKind::ConcatBrw => {
            add_brw_levels(&mut values, n, cells, origin, source);
        }
        FieldKind::Chi => {
            add_chi_levels(&mut values, n, cells, origin, source);
        }
        FieldKind::TildeChi => {
            add_chi_levels(&mut values, n, cells, origin, source);
            if n >= 1 {
                let (b_n, _) = level_coeffs(n as u32);
                for j in 0..cells as i64 {
                    let corner = Point::new(origin.x + j * side, origin.y);
                    let g = source.standard_normal(DyadicKey::Box { level: n, corner });
                    add_to_box(&mut values, width, origin, Rect::with_size(corner.x, corner.y, side, side), b_n * g);
                }
            }
        }
    }
    Ok(FieldSample { kind, n, cells, origin, values })
}

fn add_to_box(values: &mut [f64], width: i64, origin: Point, b: Rect, delta: f64) {
    for y in b.y0..=b.y1 {
        let row = ((y - origin.y) * width) as usize;
        let lo = row + (b.x0 - origin.x) as usize;
        let hi = row + (b.x1 - origin.x) as usize;
        for v in &mut values[lo..=hi] {
            *v += delta;
        }
    }
}

fn add_brw_levels(values: &mut [f64], n: u8, cells: u32, origin: Point, source: &GaussianSource) {
    let side = 1i64 << n;
    let width = cells as i64 * side;
    for level in 0..n {
        let box_side = 1i64 << level;
        let mut by = origin.y;
        while by < origin.y + side {
            let mut bx = origin.x;
            while bx < origin.x + width {
                let corner = Point::new(bx, by);
                let g = source.standard_normal(DyadicKey::Box { level, corner });
                add_to_box(values, width, origin, Rect::with_size(bx, by, box_side, box_side), g);
                bx += box_side;
            }
            by += box_side;
        }
    }
}

fn add_chi_levels(values: &mut [f64], n: u8, cells: u32, origin: Point, source: &GaussianSource) {
    let width = cells as i64 * (1i64 << n);
    for m in 1..=n as u32 {
        let (b_m, c_m) = level_coeffs(m);
        let parent_side = 1i64 << m;
        let sub = parent_side / 2;
        let sub_level = (m - 1) as u8;
        let parent_w = cells as i64 * parent_side;
        let mut py = origin.y;
        while py < origin.y + (1i64 << n) {
            let mut px = origin.x;
            while px < origin.x + width {
                let parent = Point::new(px, py);
                for k in 1..=2u32 {
                    for j in 1..=cells {
                        let col = ((k - 1) * cells + j) as i64;
                        let sign_b = if col % 2 == 1 { -1.0 } else { 1.0 };
                        let g_rect = source.standard_normal(tilde_r_lookup(k, j, cells, parent, sub_level));
                        let g_bm = source.standard_normal(bm_increment_key(k, j, cells, parent, sub_level));
                        let x0 = px + (col - 1) * sub;
                        for i in 1..=2u32 {
                            let sign_c = if i == 1 { -1.0 } else { 1.0 };
                            let y0 = if i == 1 { py + sub } else { py };
                            let delta = sign_b * b_m * g_rect + sign_c * c_m * g_bm;
                            add_to_box(values, width, origin, Rect::with_size(x0, y0, sub, sub), delta);
                        }
                    }
                }
                px += parent_w;
            }
            py += parent_side;
        }
    }
}

/// Evaluates the field at a single point without materializing the grid.
pub fn eval_point(
    kind: FieldKind,
    n: u8,
    cells: u32,
    origin: Point,
    source: &GaussianSource,
    z: Point,
) -> Result<f64, FieldError> {
    let mut acc = 0.0;
    for_each_coeff(kind, n, cells, origin, z, |key, coeff| {
        acc += coeff * source.standard_normal(key);
    })?;
    Ok(acc)
}

/// Sparse coefficient vector: the field value at a point equals
/// `sum coeff(key) * derive(seed, key)` for every seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    entries: BTreeMap<DyadicKey, f64>,
}

impl CoeffVector {
    pub fn entries(&self) -> impl Iterator<Item = (&DyadicKey, &f64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn coeff(&self, key: &DyadicKey) -> f64 {
        self.entries.get(key).copied().unwrap_or(0.0)
    }

    /// Evaluates the represented field value under `source`.
    pub fn evaluate(&self, source: &GaussianSource) -> f64 {
        self.entries.iter().map(|(k, c)| c * source.standard_normal(*k)).sum()
    }

    /// Inner product with another coefficient vector; this is the exact
    /// covariance of the two represented Gaussians.
    pub fn dot(&self, other: &CoeffVector) -> f64 {
        // Iterate the smaller map.
        let (small, large) = if self.entries.len() <= other.entries.len() {
            (&self.entries, &other.entries)
        } else {
            (&other.entries, &self.entries)
        };
        small
            .iter()
            .filter_map(|(k, c)| large.get(k).map(|d| c * d))
            .sum()
    }
}

fn for_each_coeff<F: FnMut(DyadicKey, f64)>(
    kind: FieldKind,
    n: u8,
    cells: u32,
    origin: Point,
    z: Point,
    mut f: F,
) -> Result<(), FieldError> {
    validate_params(kind, n, cells, origin)?;
    let side = 1i64 << n;
    let rect = Rect::with_size(origin.x, origin.y, cells as i64 * side, side);
    if !rect.contains(z) {
        return Err(FieldError::OutOfRange(z));
    }
    match kind {
        FieldKind::Brw | FieldKind::ConcatBrw => {
            for level in 0..n {
                let s = 1i64 << level;
                let corner = Point::new(z.x.div_euclid(s) * s, z.y.div_euclid(s) * s);
                f(DyadicKey::Box { level, corner }, 1.0);
            }
        }
        FieldKind::Chi | FieldKind::TildeChi => {
            for m in 1..=n as u32 {
                let (b_m, c_m) = level_coeffs(m);
                let parent_side = 1i64 << m;
                let sub = parent_side / 2;
                let parent_w = cells as i64 * parent_side;
                let parent = Point::new(
                    origin.x + (z.x - origin.x).div_euclid(parent_w) * parent_w,
                    origin.y + (z.y - origin.y).div_euclid(parent_side) * parent_side,
                );
                let col = (z.x - parent.x).div_euclid(sub) + 1;
                let i = if z.y - parent.y >= sub { 1u32 } else { 2u32 };
                let k = if col <= cells as i64 { 1u32 } else { 2u32 };
                let j = (col - (k as i64 - 1) * cells as i64) as u32;
                let sign_b = if col % 2 == 1 { -1.0 } else { 1.0 };
                let sign_c = if i == 1 { -1.0 } else { 1.0 };
                let sub_level = (m - 1) as u8;
                f(tilde_r_lookup(k, j, cells, parent, sub_level), sign_b * b_m);
                f(bm_increment_key(k, j, cells, parent, sub_level), sign_c * c_m);
            }
            if kind == FieldKind::TildeChi && n >= 1 {
                let (b_n, _) = level_coeffs(n as u32);
                let j = (z.x - origin.x).div_euclid(side);
                let corner = Point::new(origin.x + j * side, origin.y);
                f(DyadicKey::Box { level: n, corner }, b_n);
            }
        }
    }
    Ok(())
}

/// Exact linear-combination representation of the field value at `z`.
pub fn coeff_vector(
    kind: FieldKind,
    n: u8,
    cells: u32,
    origin: Point,
    z: Point,
) -> Result<CoeffVector, FieldError> {
    let mut entries = BTreeMap::new();
    for_each_coeff(kind, n, cells, origin, z, |key, coeff| {
        *entries.entry(key).or_insert(0.0) += coeff;
    })?;
    Ok(CoeffVector { entries })
}

/// Analytic covariance of the field at `z1` and `z2`, computed as the inner
/// product of the two coefficient vectors.
pub fn exact_cov(
    kind: FieldKind,
    n: u8,
    cells: u32,
    origin: Point,
    z1: Point,
    z2: Point,
) -> Result<f64, FieldError> {
    let a = coeff_vector(kind, n, cells, origin, z1)?;
    let b = coeff_vector(kind, n, cells, origin, z2)?;
    Ok(a.dot(&b))
}

/// Shared-dyadic-box count: the brute-force covariance oracle for the
/// branching random walk.
pub fn shared_box_count(n: u8, z1: Point, z2: Point) -> u32 {
    (0..n)
        .filter(|&k| {
            let s = 1i64 << k;
            z1.x.div_euclid(s) == z2.x.div_euclid(s) && z1.y.div_euclid(s) == z2.y.div_euclid(s)
        })
        .count() as u32
}

pub const ORIGIN: Point = Point::new(0, 0);
