//! Exact quantum-mechanical predictions: singlet statistics, the chained
//! sum, and a four-qubit state vector for the GHZ-type state.

use std::fmt;
use std::ops::Sub;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Direction, Sign};
use crate::hardy::ChainConfig;
use crate::scalar::Real;

/// Planar measurement angle in radians.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle<T>(pub T);

impl<T: Real> Angle<T> {
    pub fn radians(value: T) -> Self {
        Angle(value)
    }

    pub fn degrees(value: T) -> Self {
        Angle(value.to_radians())
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// Representative in `[0, 2π)`.
    pub fn reduced(self) -> T {
        let tau = T::TAU();
        let r = self.0 % tau;
        if r < T::zero() {
            r + tau
        } else {
            r
        }
    }

    pub fn direction(self) -> Direction<T> {
        Direction::planar(self.0)
    }
}

impl<T: Real> Sub for Angle<T> {
    type Output = T;
    fn sub(self, rhs: Self) -> T {
        self.0 - rhs.0
    }
}

impl<T: Real> fmt::Display for Angle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad", self.reduced())
    }
}

/// Probability that the singlet outcomes multiply to `product_sign`:
/// `½[1 ∓ cos(a − b)]` for `±1`.
///
/// The `−1` branch is computed as the complement of the `+1` branch, so the
/// pair sums to exactly one.
pub fn singlet_joint_prob<T: Real>(a: Angle<T>, b: Angle<T>, product_sign: Sign) -> T {
    let half = T::lit(0.5);
    let same = half * (T::one() - (a - b).cos());
    match product_sign {
        Sign::Plus => same,
        Sign::Minus => T::one() - same,
    }
}

/// Singlet correlation `−cos(a − b)` for coplanar settings.
pub fn singlet_correlation<T: Real>(a: Angle<T>, b: Angle<T>) -> T {
    -(a - b).cos()
}

/// Singlet correlation `−â·b̂` for arbitrary directions.
pub fn singlet_correlation_3d<T: Real>(a: &Direction<T>, b: &Direction<T>) -> T {
    -a.dot(b)
}

/// `Σₙ pₙ⁻ + p_N⁺` over the chain's statements, evaluated exactly.
pub fn chain_sum_qm<T: Real>(cfg: &ChainConfig<T>) -> T {
    cfg.statements()
        .map(|st| singlet_joint_prob(Angle(st.a_angle), Angle(st.b_angle), st.target))
        .fold(T::zero(), |acc, p| acc + p)
}

/// Closed form of [`chain_sum_qm`] at the maximally violating spread.
pub fn chain_sum_qm_max<T: Real>(n: usize) -> T {
    let nf = T::from_usize(n).expect("chain size fits");
    nf * T::lit(0.5) * (T::one() + (T::PI() / nf).cos())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Tensor product of four single-qubit Pauli operators, particle 1 first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliWord(pub [Pauli; 4]);

impl PauliWord {
    /// All 256 words in lexicographic order (`IIII`, `IIIX`, …, `ZZZZ`).
    pub fn all() -> impl Iterator<Item = PauliWord> {
        (0..256usize).map(|code| {
            let mut letters = [Pauli::I; 4];
            for (q, slot) in letters.iter_mut().enumerate() {
                *slot = Pauli::ALL[(code >> (2 * (3 - q))) & 3];
            }
            PauliWord(letters)
        })
    }

    pub fn letters(&self) -> &[Pauli; 4] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// True when only `I` and `Z` letters appear.
    pub fn is_z_only(&self) -> bool {
        self.0.iter().all(|&p| matches!(p, Pauli::I | Pauli::Z))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.0 {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 4 {
            return Err(Error::InvalidArgument(format!("Pauli word must have exactly 4 letters, got {s:?}")));
        }
        let mut letters = [Pauli::I; 4];
        for (slot, c) in letters.iter_mut().zip(chars) {
            *slot = Pauli::from_letter(c.to_ascii_uppercase())
                .ok_or_else(|| Error::InvalidArgument(format!("bad Pauli letter {c:?}")))?;
        }
        Ok(PauliWord(letters))
    }
}

impl Serialize for PauliWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sixteen amplitudes over the z basis; `|+⟩ ↦ 0`, `|−⟩ ↦ 1`, particle 1 is
/// the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector4<T> {
    amplitudes: [Complex<T>; 16],
}

impl<T: Real> StateVector4<T> {
    pub fn new(amplitudes: [Complex<T>; 16]) -> Result<Self> {
        let sv = Self { amplitudes };
        let tol = T::UNIT_TOLERANCE;
        if (sv.norm_sq() - T::one()).abs() > tol {
            return Err(Error::InvalidArgument(format!("state has squared norm {}", sv.norm_sq())));
        }
        Ok(sv)
    }

    pub fn amplitude(&self, basis: usize) -> Complex<T> {
        self.amplitudes[basis]
    }

    pub fn norm_sq(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    /// `⟨ψ|P|ψ⟩` with `P` applied basis state by basis state.
    pub fn expectation_complex(&self, word: &PauliWord) -> Complex<T> {
        let zero = T::zero();
        let one = T::one();
        let mut total = Complex::new(zero, zero);
        for (k, amp) in self.amplitudes.iter().enumerate() {
            if amp.norm_sqr() == zero {
                continue;
            }
            let mut target = k;
            let mut phase = Complex::new(one, zero);
            for (q, letter) in word.0.iter().enumerate() {
                let shift = 3 - q;
                let bit = (k >> shift) & 1;
                match letter {
                    Pauli::I => {}
                    Pauli::X => target ^= 1 << shift,
                    Pauli::Y => {
                        target ^= 1 << shift;
                        // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
                        phase = phase * if bit == 0 { Complex::new(zero, one) } else { Complex::new(zero, -one) };
                    }
                    Pauli::Z => {
                        if bit == 1 {
                            phase = -phase;
                        }
                    }
                }
            }
            total = total + self.amplitudes[target].conj() * phase * *amp;
        }
        total
    }

    /// Real part of [`Self::expectation_complex`]; Pauli words are Hermitian.
    pub fn expectation(&self, word: &PauliWord) -> T {
        self.expectation_complex(word).re
    }
}

/// `(|++−−⟩ + |−−++⟩)/√2`.
pub fn ghz4_state<T: Real>() -> StateVector4<T> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut amplitudes = [zero; 16];
    let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    amplitudes[0b0011] = h;
    amplitudes[0b1100] = h;
    StateVector4 { amplitudes }
}

pub fn ghz4_expectation<T: Real>(word: &PauliWord) -> T {
    ghz4_state::<T>().expectation(word)
}
