//! One-bit classical communication protocol reproducing singlet correlations.
//!
//! Alice and Bob share two independent uniform unit vectors `λ₁, λ₂`.
//! Alice outputs `α = −sgn(a·λ₁)` and sends `c = sgn(a·λ₁)·sgn(a·λ₂)`; Bob
//! outputs `β = sgn(b·(λ₁ + c·λ₂))`. The bit `c` may equally be read as an
//! instantaneous influence on Bob's side; the transcript records the same
//! datum either way.

use serde::{Deserialize, Serialize};

use crate::geometry::{sample_direction, Direction, RngStream, Sign};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct HiddenPair<T> {
    pub lambda1: Direction<T>,
    pub lambda2: Direction<T>,
}

impl<T: Real> HiddenPair<T> {
    pub fn new(lambda1: Direction<T>, lambda2: Direction<T>) -> Self {
        Self { lambda1, lambda2 }
    }

    /// `λ₂ = −λ₁`.
    pub fn antipodal(lambda1: Direction<T>) -> Self {
        Self { lambda1, lambda2: -lambda1 }
    }

    /// Two independent sphere draws (four words).
    pub fn sample(rng: &mut RngStream) -> Self {
        let lambda1 = sample_direction(rng);
        let lambda2 = sample_direction(rng);
        Self { lambda1, lambda2 }
    }
}

/// Everything observable in one protocol round.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct TranscriptTb<T> {
    pub alice_out: Sign,
    pub comm_bit: Sign,
    pub bob_out: Sign,
    pub hidden: HiddenPair<T>,
}

impl<T> TranscriptTb<T> {
    pub fn product(&self) -> Sign {
        self.alice_out * self.bob_out
    }
}

/// Alice's output and the bit she sends.
pub fn tb_alice<T: Real>(a: &Direction<T>, hp: &HiddenPair<T>) -> (Sign, Sign) {
    let s1 = Sign::of_finite(a.dot(&hp.lambda1));
    let s2 = Sign::of_finite(a.dot(&hp.lambda2));
    (-s1, s1 * s2)
}

pub fn tb_bob<T: Real>(b: &Direction<T>, c: Sign, hp: &HiddenPair<T>) -> Sign {
    let c = c.value::<T>();
    let l1 = hp.lambda1.to_array();
    let l2 = hp.lambda2.to_array();
    let v = [l1[0] + c * l2[0], l1[1] + c * l2[1], l1[2] + c * l2[2]];
    Sign::of_finite(b.dot_raw(v))
}

/// Runs the protocol on a given hidden pair.
pub fn tb_transcript<T: Real>(a: &Direction<T>, b: &Direction<T>, hp: HiddenPair<T>) -> TranscriptTb<T> {
    let (alice_out, comm_bit) = tb_alice(a, &hp);
    let bob_out = tb_bob(b, comm_bit, &hp);
    TranscriptTb { alice_out, comm_bit, bob_out, hidden: hp }
}

/// Draws a fresh hidden pair and runs the protocol.
pub fn tb_round<T: Real>(a: &Direction<T>, b: &Direction<T>, rng: &mut RngStream) -> TranscriptTb<T> {
    tb_transcript(a, b, HiddenPair::sample(rng))
}
