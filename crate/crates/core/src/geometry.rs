//! Unit vectors, the sign convention, and seeded sphere sampling.

use std::fmt;
use std::ops::{Mul, Neg};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Outcome of [`sgn`]: a measurement result or communicated bit in {−1, +1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    /// The one place the `sgn(0) = +1` convention lives.
    #[inline]
    pub(crate) fn of_finite<T: Real>(x: T) -> Sign {
        if x >= T::zero() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    #[inline]
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Minus => -1,
            Sign::Plus => 1,
        }
    }

    #[inline]
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Minus => -T::one(),
            Sign::Plus => T::one(),
        }
    }

    /// `Plus` maps to bit 0, `Minus` to bit 1; sign products are XOR.
    #[inline]
    pub fn to_bit(self) -> bool {
        self == Sign::Minus
    }

    #[inline]
    pub fn from_bit(bit: bool) -> Sign {
        if bit {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

impl Mul for Sign {
    type Output = Sign;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_bit(self.to_bit() ^ rhs.to_bit())
    }
}

impl Neg for Sign {
    type Output = Sign;
    #[inline]
    fn neg(self) -> Sign {
        Sign::from_bit(!self.to_bit())
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.as_i8()
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be ±1, got {other}")),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// Sign function with `sgn(x) = +1` for `x ≥ 0` (including `-0.0`) and `−1` otherwise.
pub fn sgn<T: Real>(x: T) -> Result<Sign> {
    if x.is_finite() {
        Ok(Sign::of_finite(x))
    } else {
        Err(Error::InvalidArgument(format!("sgn of non-finite value {x}")))
    }
}

/// A real three dimensional unit vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[T; 3]", into = "[T; 3]")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Direction<T> {
    x: T,
    y: T,
    z: T,
}

impl<T: Real> Direction<T> {
    /// Accepts components whose squared norm is within `T::UNIT_TOLERANCE` of 1.
    pub fn new(x: T, y: T, z: T) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::InvalidArgument("non-finite direction component".into()));
        }
        let norm_sq = x * x + y * y + z * z;
        if (norm_sq - T::one()).abs() > T::UNIT_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "direction ({x}, {y}, {z}) is not unit length (|v|² = {norm_sq})"
            )));
        }
        Ok(Self { x, y, z })
    }

    /// Rescales an arbitrary non-zero vector onto the sphere.
    pub fn normalized(x: T, y: T, z: T) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm == T::zero() {
            return Err(Error::InvalidArgument("cannot normalize a zero or non-finite vector".into()));
        }
        Self::new(x / norm, y / norm, z / norm)
    }

    /// Point on the x–z great circle: `(cos θ, 0, sin θ)`.
    pub fn planar(theta: T) -> Self {
        Self { x: theta.cos(), y: T::zero(), z: theta.sin() }
    }

    pub fn e_x() -> Self {
        Self { x: T::one(), y: T::zero(), z: T::zero() }
    }

    pub fn e_y() -> Self {
        Self { x: T::zero(), y: T::one(), z: T::zero() }
    }

    pub fn e_z() -> Self {
        Self { x: T::zero(), y: T::zero(), z: T::one() }
    }

    #[inline]
    pub fn x(&self) -> T {
        self.x
    }

    #[inline]
    pub fn y(&self) -> T {
        self.y
    }

    #[inline]
    pub fn z(&self) -> T {
        self.z
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Inner product with an arbitrary (not necessarily unit) vector.
    #[inline]
    pub fn dot_raw(&self, v: [T; 3]) -> T {
        self.x * v[0] + self.y * v[1] + self.z * v[2]
    }

    /// Angle between two directions, with the dot product clamped for `acos`.
    pub fn angle_to(&self, other: &Self) -> T {
        self.dot(other).max(-T::one()).min(T::one()).acos()
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    /// Re-expresses the direction in another precision.
    pub fn cast<U: Real>(self) -> Direction<U> {
        Direction {
            x: U::lit(self.x.to_f64_lossy()),
            y: U::lit(self.y.to_f64_lossy()),
            z: U::lit(self.z.to_f64_lossy()),
        }
    }
}

impl<T: Real> Neg for Direction<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { x: -self.x, y: -self.y, z: -self.z }
    }
}

impl<T: Real> TryFrom<[T; 3]> for Direction<T> {
    type Error = Error;
    fn try_from(v: [T; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

impl<T: Real> From<Direction<T>> for [T; 3] {
    fn from(d: Direction<T>) -> [T; 3] {
        d.to_array()
    }
}

/// Raw Euclidean inner product of two unit vectors.
#[inline]
pub fn dot<T: Real>(u: &Direction<T>, v: &Direction<T>) -> T {
    u.dot(v)
}

/// Seeded, splittable random stream.
///
/// Backed by ChaCha8: the 256-bit key is expanded from `seed` with
/// `rand_core`'s `seed_from_u64`, and `stream` selects ChaCha's 64-bit stream
/// id. Distinct `(seed, stream)` pairs are therefore independent, and the
/// output depends only on the pair and the number of draws taken.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    draws: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::derived(seed, 0)
    }

    pub fn derived(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, draws: 0, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of 64-bit words consumed so far.
    pub fn position(&self) -> u64 {
        self.draws
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` from the top 53 bits of one 64-bit word.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Uniform in `(0, 1]`; never returns zero, so safe under `ln`.
    #[inline]
    pub fn next_open_unit(&mut self) -> f64 {
        1.0 - self.next_unit()
    }

    #[inline]
    pub fn next_bool(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

/// Uniform draw from the unit sphere.
///
/// Consumes exactly two words: `z = 2u₁ − 1` and azimuth `φ = 2πu₂`.
pub fn sample_direction<T: Real>(rng: &mut RngStream) -> Direction<T> {
    let z = T::lit(2.0 * rng.next_unit() - 1.0);
    let azimuth = T::lit(rng.next_unit()) * T::TAU();
    let r = (T::one() - z * z).max(T::zero()).sqrt();
    Direction { x: r * azimuth.cos(), y: r * azimuth.sin(), z }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sgn_convention() {
        assert_eq!(sgn(0.0_f64).unwrap(), Sign::Plus);
        assert_eq!(sgn(-0.0_f64).unwrap(), Sign::Plus);
        assert_eq!(sgn(-0.3_f64).unwrap(), Sign::Minus);
        assert_eq!(sgn(2.5_f64).unwrap(), Sign::Plus);
        assert_eq!(sgn(0.0_f32).unwrap(), Sign::Plus);
    }

    #[test]
    fn sgn_rejects_non_finite() {
        assert!(matches!(sgn(f64::NAN), Err(Error::InvalidArgument(_))));
        assert!(sgn(f64::INFINITY).is_err());
        assert!(sgn(f32::NEG_INFINITY).is_err());
    }

    #[test]
    fn sign_algebra() {
        assert_eq!(Sign::Minus * Sign::Minus, Sign::Plus);
        assert_eq!(Sign::Minus * Sign::Plus, Sign::Minus);
        assert_eq!(-Sign::Plus, Sign::Minus);
        assert_eq!(Sign::Minus.value::<f64>(), -1.0);
        assert_eq!(serde_json::to_string(&Sign::Minus).unwrap(), "-1");
        assert!(serde_json::from_str::<Sign>("0").is_err());
    }

    #[test]
    fn dot_examples() {
        let ez = Direction::<f64>::e_z();
        let ex = Direction::<f64>::e_x();
        assert_eq!(dot(&ez, &ez), 1.0);
        assert_eq!(dot(&ex, &ez), 0.0);
        let u = Direction::normalized(0.3, -0.4, 1.2).unwrap();
        assert!((dot(&u, &-u) + 1.0_f64).abs() < 1e-15);
    }

    #[test]
    fn construction_checks_norm() {
        assert!(Direction::new(1.0, 1.0, 0.0).is_err());
        assert!(Direction::new(f64::NAN, 0.0, 1.0).is_err());
        assert!(Direction::<f64>::normalized(0.0, 0.0, 0.0).is_err());
        let d: Direction<f64> = serde_json::from_str("[0.0, 0.0, 1.0]").unwrap();
        assert_eq!(d, Direction::e_z());
        assert!(serde_json::from_str::<Direction<f64>>("[1.0, 1.0, 0.0]").is_err());
    }

    #[test]
    fn samples_are_unit_and_two_words_each() {
        let mut rng = RngStream::new(7);
        for k in 0..10_000u64 {
            let d: Direction<f64> = sample_direction(&mut rng);
            assert!((d.norm_sq() - 1.0).abs() < 1e-12);
            assert_eq!(rng.position(), 2 * (k + 1));
        }
        let mut rng32 = RngStream::new(7);
        for _ in 0..1000 {
            let d: Direction<f32> = sample_direction(&mut rng32);
            assert!((d.norm_sq() - 1.0).abs() < f32::UNIT_TOLERANCE);
        }
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::derived(42, 3);
        let mut b = RngStream::derived(42, 3);
        let mut c = RngStream::derived(42, 4);
        let mut differs = false;
        for _ in 0..100 {
            let da: Direction<f64> = sample_direction(&mut a);
            let db: Direction<f64> = sample_direction(&mut b);
            let dc: Direction<f64> = sample_direction(&mut c);
            assert_eq!(da.to_array().map(f64::to_bits), db.to_array().map(f64::to_bits));
            differs |= da != dc;
        }
        assert!(differs);
    }

    #[test]
    fn empirical_moments_of_sphere_samples() {
        let n = 100_000;
        let mut rng = RngStream::new(2024);
        let (mut sx, mut sy, mut sz) = (0.0, 0.0, 0.0);
        let mut upper = 0usize;
        for _ in 0..n {
            let d: Direction<f64> = sample_direction(&mut rng);
            sx += d.x();
            sy += d.y();
            sz += d.z();
            if d.z() > 0.0 {
                upper += 1;
            }
        }
        let nf = n as f64;
        let mean_tol = 4.0 / (3.0 * nf).sqrt();
        for s in [sx, sy, sz] {
            assert!((s / nf).abs() <= mean_tol, "mean {} vs {mean_tol}", s / nf);
        }
        let frac = upper as f64 / nf;
        assert!((frac - 0.5).abs() <= 4.0 * 0.5 / nf.sqrt());
    }

    #[test]
    fn mean_of_a_million_samples_is_near_origin() {
        let n = 1_000_000;
        let mut rng = RngStream::new(11);
        let mut sum = [0.0f64; 3];
        for _ in 0..n {
            let d: Direction<f64> = sample_direction(&mut rng);
            for (acc, c) in sum.iter_mut().zip(d.to_array()) {
                *acc += c;
            }
        }
        let norm = sum.iter().map(|s| (s / n as f64).powi(2)).sum::<f64>().sqrt();
        assert!(norm <= 0.005, "norm {norm}");
    }

    proptest! {
        #[test]
        fn sgn_is_total_and_idempotent(x in -1e300f64..1e300) {
            let s = sgn(x).unwrap();
            prop_assert_eq!(sgn(s.value::<f64>()).unwrap(), s);
            prop_assert_eq!(s == Sign::Plus, x >= 0.0);
        }

        #[test]
        fn planar_directions_are_unit(theta in -50.0f64..50.0) {
            let d = Direction::planar(theta);
            prop_assert!((d.norm_sq() - 1.0).abs() < 1e-12);
            prop_assert_eq!(d.y(), 0.0);
        }
    }
}
