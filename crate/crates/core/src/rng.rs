//! Counter-based Gaussian generation.
//!
//! Every unit normal consumed anywhere in the library is addressed by a
//! [`DyadicKey`] and produced as a pure function of `(master_seed, key)`.
//! This makes fields lazily evaluable, order-independent, and safe to sample
//! from many threads with no shared state: the same `(seed, key)` pair always
//! yields the same deviate.
//!
//! The mapping hashes the serialized key into a 64-bit word with a
//! splitmix-style mix chain and feeds the resulting uniform through an
//! inverse normal CDF (Wichura's PPND16 rational approximation).

use crate::lattice::Point;

/// Identifies one unit Gaussian in the hierarchy.
///
/// `Box` entries carry the increments of the branching random walk, one per
/// dyadic box. `StackedRect` entries sit on 2^level x 2^(level+1) rectangles
/// and carry the sign-switched coefficients. `BmIncrement` entries are the
/// unit-time increments of the per-rectangle Brownian streams; `corner` is
/// the owning rectangle's origin and `stream` the 1-based time slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DyadicKey {
    /// Dyadic box of side `2^level` with corner divisible by `2^level`.
    Box { level: u8, corner: Point },
    /// Rectangle of width `2^level`, height `2^(level+1)`, corner divisible
    /// by `2^level` in both coordinates.
    StackedRect { level: u8, corner: Point },
    /// Unit-time increment `W^(corner, level)_stream - W^(corner, level)_(stream-1)`.
    BmIncrement { level: u8, corner: Point, stream: u64 },
}

impl DyadicKey {
    pub fn dyadic_box(level: u8, corner: Point) -> Self {
        debug_assert!(corner.x.rem_euclid(1 << level) == 0 && corner.y.rem_euclid(1 << level) == 0);
        DyadicKey::Box { level, corner }
    }

    fn words(&self) -> [u64; 4] {
        match *self {
            DyadicKey::Box { level, corner } => [level as u64, corner.x as u64, corner.y as u64, 0],
            DyadicKey::StackedRect { level, corner } => {
                [0x100 | level as u64, corner.x as u64, corner.y as u64, 0]
            }
            DyadicKey::BmIncrement { level, corner, stream } => {
                [0x200 | level as u64, corner.x as u64, corner.y as u64, stream]
            }
        }
    }
}

/// splitmix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Absorbs the key words into the seed, one mix round per word.
#[inline]
fn hash_key(seed: u64, words: &[u64; 4]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    for (i, &w) in words.iter().enumerate() {
        h = mix64(h ^ w.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)));
    }
    mix64(h.wrapping_add(GOLDEN))
}

/// Maps a 64-bit word to the open unit interval, offset by half an ulp so 0
/// and 1 are never produced.
#[inline]
fn to_unit(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Inverse of the standard normal CDF (Wichura, algorithm AS 241, PPND16).
///
/// Absolute error is below 1e-15 over the full open interval.
#[allow(clippy::excessive_precision)] // published coefficients, kept verbatim
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_9e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946_1e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_545_4e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Pure map `(seed, key) -> N(0, 1)`.
pub fn derive_gaussian(seed: u64, key: DyadicKey) -> f64 {
    inverse_normal_cdf(to_unit(hash_key(seed, &key.words())))
}

/// Pure map `(seed, key) -> u64`, used for derived experiment seeds.
pub fn derive_u64(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    for (i, &w) in words.iter().enumerate() {
        h = mix64(h ^ w.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)));
    }
    mix64(h.wrapping_add(GOLDEN))
}

/// Seeded source of keyed unit Gaussians.
///
/// Immutable and `Copy`; all methods are pure, so a source can be shared
/// freely across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussianSource {
    master_seed: u64,
}

impl GaussianSource {
    pub fn new(master_seed: u64) -> Self {
        GaussianSource { master_seed }
    }

    pub fn seed(&self) -> u64 {
        self.master_seed
    }

    pub fn standard_normal(&self, key: DyadicKey) -> f64 {
        derive_gaussian(self.master_seed, key)
    }
}
