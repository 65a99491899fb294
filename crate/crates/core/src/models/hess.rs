//! Setting-dependent hidden-variable density with a factorized form
//! `ρ(λ, a, b) = Σ_ω σ(λ, a, ω)·τ(λ, b, ω)·υ(ω)`.

use serde::{Deserialize, Serialize};

use super::nested::random_simplex;
use super::table::Table;
use crate::error::{check_index, Error, Result};
use crate::geometry::{RngStream, Sign};
use crate::scalar::Real;

/// Shape of a random model drawn by [`random_hess_model`].
///
/// λ ranges over pairs `(k, m)` with `k < alice_values`, `m < bob_values`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HessShape {
    pub settings_a: usize,
    pub settings_b: usize,
    pub alice_values: usize,
    pub bob_values: usize,
    pub omegas: usize,
    /// When false, σ and τ ignore the settings.
    pub setting_dependent: bool,
}

impl HessShape {
    pub fn chsh(setting_dependent: bool) -> Self {
        Self { settings_a: 2, settings_b: 2, alice_values: 2, bob_values: 2, omegas: 2, setting_dependent }
    }

    pub fn lambdas(&self) -> usize {
        self.alice_values * self.bob_values
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HessDoc<T>", into = "HessDoc<T>")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct HessModel<T> {
    /// `σ[λ][a][ω]`
    sigma: Table<T>,
    /// `τ[λ][b][ω]`
    tau: Table<T>,
    upsilon: Vec<T>,
    /// `A[a][λ]`
    alice: Table<T>,
    /// `B[b][λ]`
    bob: Table<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct HessDoc<T> {
    kind: String,
    kernels: HessKernels<T>,
    responses: HessResponses<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct HessKernels<T> {
    sigma: Table<T>,
    tau: Table<T>,
    upsilon: Vec<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct HessResponses<T> {
    #[serde(rename = "A")]
    alice: Table<T>,
    #[serde(rename = "B")]
    bob: Table<T>,
}

impl<T: Real> TryFrom<HessDoc<T>> for HessModel<T> {
    type Error = Error;
    fn try_from(doc: HessDoc<T>) -> Result<Self> {
        if doc.kind != "hess" {
            return Err(Error::ModelInvalid(format!("expected kind \"hess\", got {:?}", doc.kind)));
        }
        HessModel::new(doc.kernels.sigma, doc.kernels.tau, doc.kernels.upsilon, doc.responses.alice, doc.responses.bob)
    }
}

impl<T: Real> From<HessModel<T>> for HessDoc<T> {
    fn from(m: HessModel<T>) -> Self {
        HessDoc {
            kind: "hess".into(),
            kernels: HessKernels { sigma: m.sigma, tau: m.tau, upsilon: m.upsilon },
            responses: HessResponses { alice: m.alice, bob: m.bob },
        }
    }
}

impl<T: Real> HessModel<T> {
    /// Validates shapes, non-negativity, bounded responses, and
    /// `Σ_λ ρ(λ, a, b) = 1` for every setting pair.
    pub fn new(sigma: Table<T>, tau: Table<T>, upsilon: Vec<T>, alice: Table<T>, bob: Table<T>) -> Result<Self> {
        let dims = |t: &Table<T>, what: &str, rank: usize| -> Result<Vec<usize>> {
            if t.shape().len() != rank || t.shape().contains(&0) {
                return Err(Error::ModelInvalid(format!("{what} must be a non-empty rank-{rank} table")));
            }
            Ok(t.shape().to_vec())
        };
        let s = dims(&sigma, "sigma", 3)?;
        let t = dims(&tau, "tau", 3)?;
        let (lambdas, settings_a, omegas) = (s[0], s[1], s[2]);
        let settings_b = t[1];
        tau.expect_shape("tau", &[lambdas, settings_b, omegas])?;
        if upsilon.len() != omegas {
            return Err(Error::ModelInvalid(format!("upsilon has {} entries for {omegas} ω points", upsilon.len())));
        }
        alice.expect_shape("A", &[settings_a, lambdas])?;
        bob.expect_shape("B", &[settings_b, lambdas])?;
        sigma.expect_nonnegative("sigma")?;
        tau.expect_nonnegative("tau")?;
        if upsilon.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::ModelInvalid("upsilon has a negative or non-finite entry".into()));
        }
        alice.expect_bounded("A")?;
        bob.expect_bounded("B")?;
        let model = Self { sigma, tau, upsilon, alice, bob };
        let tol = T::lit(1e-10).max(T::WEIGHT_TOLERANCE);
        for a in 0..settings_a {
            for b in 0..settings_b {
                let total = (0..lambdas).fold(T::zero(), |acc, l| acc + model.density_unchecked(l, a, b));
                if (total - T::one()).abs() > tol {
                    return Err(Error::ModelInvalid(format!("density at settings ({a}, {b}) sums to {total}")));
                }
            }
        }
        Ok(model)
    }

    pub fn lambdas(&self) -> usize {
        self.sigma.shape()[0]
    }

    pub fn settings(&self) -> (usize, usize) {
        (self.sigma.shape()[1], self.tau.shape()[1])
    }

    pub fn omegas(&self) -> usize {
        self.upsilon.len()
    }

    fn density_unchecked(&self, lambda: usize, a: usize, b: usize) -> T {
        self.upsilon
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (w, &u)| acc + self.sigma.at(&[lambda, a, w]) * self.tau.at(&[lambda, b, w]) * u)
    }

    /// `ρ(λ, a, b)`.
    pub fn density(&self, lambda: usize, a: usize, b: usize) -> Result<T> {
        let (na, nb) = self.settings();
        check_index("lambda", lambda, self.lambdas())?;
        check_index("alice setting", a, na)?;
        check_index("bob setting", b, nb)?;
        Ok(self.density_unchecked(lambda, a, b))
    }

    /// `E(a, b) = Σ_λ A(a, λ) B(b, λ) ρ(λ, a, b)`.
    pub fn correlation(&self, a: usize, b: usize) -> Result<T> {
        let mut total = T::zero();
        for lambda in 0..self.lambdas() {
            let rho = self.density(lambda, a, b)?;
            total = total + self.alice.at(&[a, lambda]) * self.bob.at(&[b, lambda]) * rho;
        }
        Ok(total)
    }
}

pub fn hess_correlation<T: Real>(h: &HessModel<T>, a: usize, b: usize) -> Result<T> {
    h.correlation(a, b)
}

/// Random normalized model.
///
/// For each ω, Alice's component `k` of `λ = (k, m)` is drawn from a
/// setting-conditional distribution `P_ω(k | a)` and Bob's `m` from
/// `Q_ω(m | b)`; `σ(λ, a, ω) = P_ω(k | a)`, `τ(λ, b, ω) = Q_ω(m | b)`, so
/// `Σ_λ ρ = Σ_ω υ(ω) = 1` for every setting pair. Responses are random signs.
///
/// Draw order: υ, then `P_ω(·|a)` for ω, a, then `Q_ω(·|b)` for ω, b, then
/// `A[a][λ]` and `B[b][λ]` one word each. Setting-independent shapes draw one
/// conditional per ω and reuse it for every setting.
pub fn random_hess_model<T: Real>(shape: HessShape, rng: &mut RngStream) -> Result<HessModel<T>> {
    let HessShape { settings_a, settings_b, alice_values, bob_values, omegas, setting_dependent } = shape;
    if [settings_a, settings_b, alice_values, bob_values, omegas].contains(&0) {
        return Err(Error::InvalidArgument(format!("empty dimension in {shape:?}")));
    }
    let lambdas = shape.lambdas();
    let upsilon = random_simplex::<T>(omegas, rng);
    let conditionals = |settings: usize, values: usize, rng: &mut RngStream| -> Vec<Vec<Vec<T>>> {
        (0..omegas)
            .map(|_| {
                if setting_dependent {
                    (0..settings).map(|_| random_simplex(values, rng)).collect()
                } else {
                    let shared = random_simplex(values, rng);
                    vec![shared; settings]
                }
            })
            .collect()
    };
    let p = conditionals(settings_a, alice_values, rng);
    let q = conditionals(settings_b, bob_values, rng);
    let mut sigma = Vec::with_capacity(lambdas * settings_a * omegas);
    let mut tau = Vec::with_capacity(lambdas * settings_b * omegas);
    for lambda in 0..lambdas {
        let (k, m) = (lambda / bob_values, lambda % bob_values);
        for a in 0..settings_a {
            sigma.extend(p.iter().map(|pw| pw[a][k]));
        }
        for b in 0..settings_b {
            tau.extend(q.iter().map(|qw| qw[b][m]));
        }
    }
    let sign = |rng: &mut RngStream| Sign::from_bit(rng.next_bool()).value::<T>();
    let alice = Table::from_fn(vec![settings_a, lambdas], || sign(rng));
    let bob = Table::from_fn(vec![settings_b, lambdas], || sign(rng));
    HessModel::new(
        Table::new(vec![lambdas, settings_a, omegas], sigma)?,
        Table::new(vec![lambdas, settings_b, omegas], tau)?,
        upsilon,
        alice,
        bob,
    )
}
