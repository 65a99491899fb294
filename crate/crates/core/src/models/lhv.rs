//! Local deterministic strategies: `A(a, λ)`, `B(b, λ)` with no cross-dependence.

use serde::{Deserialize, Serialize};

use super::table::check_weights;
use crate::error::{check_index, Error, Result};
use crate::geometry::{Direction, Sign};
use crate::scalar::Real;

/// Finite-λ local model with `±1` responses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct DeterministicLhv<T> {
    /// `alice[a][λ]`
    alice: Vec<Vec<Sign>>,
    /// `bob[b][λ]`
    bob: Vec<Vec<Sign>>,
    weights: Vec<T>,
}

impl<T: Real> DeterministicLhv<T> {
    pub fn new(alice: Vec<Vec<Sign>>, bob: Vec<Vec<Sign>>, weights: Vec<T>) -> Result<Self> {
        check_weights("lhv weights", &weights, T::WEIGHT_TOLERANCE)?;
        let n = weights.len();
        if alice.is_empty() || bob.is_empty() {
            return Err(Error::ModelInvalid("lhv needs at least one setting per party".into()));
        }
        if alice.iter().chain(&bob).any(|row| row.len() != n) {
            return Err(Error::ModelInvalid("lhv response rows must match the λ grid".into()));
        }
        Ok(Self { alice, bob, weights })
    }

    /// Single λ point: one sign per setting.
    pub fn one_point(alice: Vec<Sign>, bob: Vec<Sign>) -> Result<Self> {
        Self::new(
            alice.into_iter().map(|s| vec![s]).collect(),
            bob.into_iter().map(|s| vec![s]).collect(),
            vec![T::one()],
        )
    }

    /// All 16 one-point strategies with two settings per party.
    pub fn all_one_point_2x2() -> Vec<Self> {
        (0u8..16)
            .map(|bits| {
                let s = |k: u8| Sign::from_bit(bits >> k & 1 == 1);
                Self::one_point(vec![s(0), s(1)], vec![s(2), s(3)]).expect("valid by construction")
            })
            .collect()
    }

    pub fn settings(&self) -> (usize, usize) {
        (self.alice.len(), self.bob.len())
    }

    pub fn correlation(&self, a: usize, b: usize) -> Result<T> {
        check_index("alice setting", a, self.alice.len())?;
        check_index("bob setting", b, self.bob.len())?;
        Ok(self
            .weights
            .iter()
            .zip(self.alice[a].iter().zip(&self.bob[b]))
            .fold(T::zero(), |acc, (&w, (&x, &y))| acc + w * (x * y).value::<T>()))
    }
}

/// Bell's sign model on the sphere: `A = −sgn(a·λ)`, `B = sgn(b·λ)`.
///
/// Purely local; its correlation is `−1 + 2θ/π` for angle `θ` between settings.
pub fn sign_model_outputs<T: Real>(a: &Direction<T>, b: &Direction<T>, lambda: &Direction<T>) -> (Sign, Sign) {
    (-Sign::of_finite(a.dot(lambda)), Sign::of_finite(b.dot(lambda)))
}

/// Exact correlation of [`sign_model_outputs`]: `−1 + 2θ/π`.
pub fn sign_model_correlation<T: Real>(a: &Direction<T>, b: &Direction<T>) -> T {
    -T::one() + T::lit(2.0) * a.angle_to(b) / T::PI()
}
