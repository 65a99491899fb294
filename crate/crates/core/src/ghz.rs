//! GHZ-type contradiction for the four-particle state: no assignment of
//! predetermined `±1` values to the twelve single-particle observables
//! reproduces every product the state predicts with certainty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Sign;
use crate::quantum::{ghz4_expectation, Pauli, PauliWord};

/// Observables with `|⟨O⟩| ≥ 1 − CERTAINTY_TOLERANCE` count as certain.
pub const CERTAINTY_TOLERANCE: f64 = 1e-9;

/// Predetermined value for each (particle, letter) pair: bit `3·particle +
/// letter` (X = 0, Y = 1, Z = 2) set means `−1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(u16);

impl Assignment {
    pub const COUNT: u16 = 1 << 12;

    pub fn from_bits(bits: u16) -> Self {
        Assignment(bits & (Self::COUNT - 1))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Assignment> {
        (0..Self::COUNT).map(Assignment)
    }

    fn slot(particle: usize, letter: Pauli) -> Option<u16> {
        let l = match letter {
            Pauli::I => return None,
            Pauli::X => 0,
            Pauli::Y => 1,
            Pauli::Z => 2,
        };
        Some(3 * particle as u16 + l)
    }

    /// Value for a particle (0-based) and letter; the identity is always `+1`.
    pub fn value(self, particle: usize, letter: Pauli) -> Sign {
        match Self::slot(particle, letter) {
            None => Sign::Plus,
            Some(k) => Sign::from_bit(self.0 >> k & 1 == 1),
        }
    }

    pub fn flipped(self, particle: usize, letter: Pauli) -> Self {
        match Self::slot(particle, letter) {
            None => self,
            Some(k) => Assignment(self.0 ^ (1 << k)),
        }
    }

    /// Product of the assigned values over the word's letters.
    pub fn product(self, word: &PauliWord) -> Sign {
        word.letters().iter().enumerate().fold(Sign::Plus, |acc, (q, &p)| acc * self.value(q, p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CertainObservable {
    pub word: PauliWord,
    pub value: Sign,
}

/// All Pauli words with a certain outcome on the state, in lexicographic order.
pub fn certain_observables() -> Vec<CertainObservable> {
    PauliWord::all()
        .filter_map(|word| {
            let e = ghz4_expectation::<f64>(&word);
            (e.abs() >= 1.0 - CERTAINTY_TOLERANCE).then(|| CertainObservable { word, value: Sign::of_finite(e) })
        })
        .collect()
}

pub fn assignment_satisfies(asg: Assignment, obs: &CertainObservable) -> bool {
    asg.product(&obs.word) == obs.value
}

pub fn count_satisfying(observables: &[CertainObservable]) -> usize {
    Assignment::all().filter(|&asg| observables.iter().all(|o| assignment_satisfies(asg, o))).count()
}

/// Deletion-based shrinking: drops each observable in turn whenever the rest
/// stays unsatisfiable. The result is unsatisfiable and irreducible.
pub fn minimal_unsatisfiable_subset(observables: &[CertainObservable]) -> Option<Vec<CertainObservable>> {
    if count_satisfying(observables) > 0 {
        return None;
    }
    let mut core = observables.to_vec();
    let mut i = 0;
    while i < core.len() {
        let mut trial = core.clone();
        trial.remove(i);
        if count_satisfying(&trial) == 0 {
            core = trial;
        } else {
            i += 1;
        }
    }
    Some(core)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhzReport {
    pub satisfying_count: usize,
    pub certain_count: usize,
    pub observables: Vec<CertainObservable>,
    /// Irreducible unsatisfiable subset when `satisfying_count == 0`.
    pub certificate: Option<Vec<CertainObservable>>,
}

/// Exhaustive search over all 4096 assignments.
///
/// Re-verifies each certain value against the state vector and re-checks that
/// the certificate is unsatisfiable before returning.
pub fn ghz_contradiction() -> Result<GhzReport> {
    let observables = certain_observables();
    for o in &observables {
        let e = ghz4_expectation::<f64>(&o.word);
        if (e - o.value.value::<f64>()).abs() >= CERTAINTY_TOLERANCE {
            return Err(Error::Degenerate(format!("{} is not certain ({e})", o.word)));
        }
    }
    let satisfying_count = count_satisfying(&observables);
    let certificate = minimal_unsatisfiable_subset(&observables);
    if let Some(cert) = &certificate {
        if count_satisfying(cert) != 0 {
            return Err(Error::Degenerate("certificate is satisfiable".into()));
        }
    }
    Ok(GhzReport { satisfying_count, certain_count: observables.len(), observables, certificate })
}
