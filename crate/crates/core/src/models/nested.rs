//! Non-local models built from deeper hidden-variable levels.
//!
//! At depth 1 each party's response averages a product of two bounded
//! factors over its own deeper variable:
//!
//! ```text
//! A(a,b,λ) = Σᵢ p(i) f_A(a,λ,i) g_A(b,λ,i)
//! B(a,b,λ) = Σⱼ q(j) f_B(a,λ,j) g_B(b,λ,j)
//! ```
//!
//! so both outcomes depend on both settings. At depth 2 every factor is
//! itself an average over one more level: the `f` factors average with
//! `p′(l)` and the `g` factors with `q′(k)`,
//!
//! ```text
//! f_s(a,b,λ,h) = Σₗ p′(l) f′_s(a,λ,h,l) g′_s(b,λ,h,l)
//! g_s(a,b,λ,h) = Σₖ q′(k) f″_s(a,λ,h,k) g″_s(b,λ,h,k)
//! ```
//!
//! Integrals are finite weighted sums over `M` support points per level.

use serde::{Deserialize, Serialize};

use super::table::{check_weights, Table};
use crate::error::{check_index, Error, Result};
use crate::geometry::RngStream;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

/// Which of the two factors of a response: `f` (leaf reads Alice's setting)
/// or `g` (leaf reads Bob's setting).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FactorRole {
    F,
    G,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedShape {
    pub settings_a: usize,
    pub settings_b: usize,
    pub lambdas: usize,
    pub support: usize,
}

impl NestedShape {
    /// Two settings per party and three λ points.
    pub fn chsh(support: usize) -> Self {
        Self { settings_a: 2, settings_b: 2, lambdas: 3, support }
    }

    fn leaf_shape(&self, role: FactorRole) -> Vec<usize> {
        let s = match role {
            FactorRole::F => self.settings_a,
            FactorRole::G => self.settings_b,
        };
        vec![s, self.lambdas, self.support]
    }

    fn inner_shape(&self, setting_count: usize) -> Vec<usize> {
        vec![setting_count, self.lambdas, self.support, self.support]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub enum FactorForm<T> {
    /// `values[setting][λ][h]`
    Leaf { values: Table<T> },
    /// `f[a][λ][h][l]`, `g[b][λ][h][l]`, averaged over the inner index `l`.
    Averaged { f: Table<T>, g: Table<T> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SideTables<T> {
    pub f: FactorForm<T>,
    pub g: FactorForm<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct NestedWeights<T> {
    pub p: Vec<T>,
    pub q: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_prime: Option<Vec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_prime: Option<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct NestedResponses<T> {
    #[serde(rename = "A")]
    pub a: SideTables<T>,
    #[serde(rename = "B")]
    pub b: SideTables<T>,
}

/// Validated nested model. Serializes as
/// `{kind: "nested", depth, M, settings, lambdas, weights, responses}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NestedDoc<T>", into = "NestedDoc<T>")]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct NestedModel<T> {
    depth: u8,
    shape: NestedShape,
    weights: NestedWeights<T>,
    responses: NestedResponses<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
struct NestedDoc<T> {
    kind: String,
    depth: u8,
    #[serde(rename = "M")]
    support: usize,
    settings: [usize; 2],
    lambdas: usize,
    weights: NestedWeights<T>,
    responses: NestedResponses<T>,
}

impl<T: Real> TryFrom<NestedDoc<T>> for NestedModel<T> {
    type Error = Error;
    fn try_from(doc: NestedDoc<T>) -> Result<Self> {
        if doc.kind != "nested" {
            return Err(Error::ModelInvalid(format!("expected kind \"nested\", got {:?}", doc.kind)));
        }
        let shape = NestedShape {
            settings_a: doc.settings[0],
            settings_b: doc.settings[1],
            lambdas: doc.lambdas,
            support: doc.support,
        };
        NestedModel::new(doc.depth, shape, doc.weights, doc.responses)
    }
}

impl<T: Real> From<NestedModel<T>> for NestedDoc<T> {
    fn from(m: NestedModel<T>) -> Self {
        NestedDoc {
            kind: "nested".into(),
            depth: m.depth,
            support: m.shape.support,
            settings: [m.shape.settings_a, m.shape.settings_b],
            lambdas: m.shape.lambdas,
            weights: m.weights,
            responses: m.responses,
        }
    }
}

impl<T: Real> NestedModel<T> {
    pub fn new(
        depth: u8,
        shape: NestedShape,
        weights: NestedWeights<T>,
        responses: NestedResponses<T>,
    ) -> Result<Self> {
        if !(1..=2).contains(&depth) {
            return Err(Error::UnsupportedDepth(depth));
        }
        if shape.settings_a == 0 || shape.settings_b == 0 || shape.lambdas == 0 || shape.support == 0 {
            return Err(Error::ModelInvalid(format!("empty dimension in {shape:?}")));
        }
        let tol = T::WEIGHT_TOLERANCE;
        let m = shape.support;
        for (name, w) in [
            ("p", Some(&weights.p)),
            ("q", Some(&weights.q)),
            ("p_prime", weights.p_prime.as_ref()),
            ("q_prime", weights.q_prime.as_ref()),
        ] {
            match (w, depth, name) {
                (None, 1, _) | (None, 2, "p" | "q") => {}
                (None, _, _) => return Err(Error::ModelInvalid(format!("depth 2 requires {name}"))),
                (Some(_), 1, "p_prime" | "q_prime") => {
                    return Err(Error::ModelInvalid(format!("depth 1 model carries {name}")))
                }
                (Some(w), _, _) => {
                    if w.len() != m {
                        return Err(Error::ModelInvalid(format!("{name} has {} entries, M = {m}", w.len())));
                    }
                    check_weights(name, w, tol)?;
                }
            }
        }
        for (party, side) in [("A", &responses.a), ("B", &responses.b)] {
            for (role, form) in [(FactorRole::F, &side.f), (FactorRole::G, &side.g)] {
                let what = format!("{party}.{role:?}");
                match (depth, form) {
                    (1, FactorForm::Leaf { values }) => {
                        values.expect_shape(&what, &shape.leaf_shape(role))?;
                        values.expect_bounded(&what)?;
                    }
                    (2, FactorForm::Averaged { f, g }) => {
                        f.expect_shape(&what, &shape.inner_shape(shape.settings_a))?;
                        g.expect_shape(&what, &shape.inner_shape(shape.settings_b))?;
                        f.expect_bounded(&what)?;
                        g.expect_bounded(&what)?;
                    }
                    _ => return Err(Error::ModelInvalid(format!("{what}: factor form does not match depth {depth}"))),
                }
            }
        }
        Ok(Self { depth, shape, weights, responses })
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn shape(&self) -> NestedShape {
        self.shape
    }

    pub fn weights(&self) -> &NestedWeights<T> {
        &self.weights
    }

    pub fn side(&self, party: Party) -> &SideTables<T> {
        match party {
            Party::A => &self.responses.a,
            Party::B => &self.responses.b,
        }
    }

    /// Deepest-level factor value of a depth-1 model.
    pub fn leaf(&self, party: Party, role: FactorRole, setting: usize, lambda: usize, hidden: usize) -> Result<T> {
        if self.depth != 1 {
            return Err(Error::UnsupportedDepth(self.depth));
        }
        let side = self.side(party);
        let form = match role {
            FactorRole::F => &side.f,
            FactorRole::G => &side.g,
        };
        let settings = match role {
            FactorRole::F => self.shape.settings_a,
            FactorRole::G => self.shape.settings_b,
        };
        check_index("setting", setting, settings)?;
        check_index("lambda", lambda, self.shape.lambdas)?;
        check_index("hidden", hidden, self.shape.support)?;
        match form {
            FactorForm::Leaf { values } => Ok(values.at(&[setting, lambda, hidden])),
            FactorForm::Averaged { .. } => unreachable!("validated depth-1 model"),
        }
    }

    fn factor(&self, form: &FactorForm<T>, role: FactorRole, a: usize, b: usize, lambda: usize, h: usize) -> T {
        match form {
            FactorForm::Leaf { values } => {
                let s = if role == FactorRole::F { a } else { b };
                values.at(&[s, lambda, h])
            }
            FactorForm::Averaged { f, g } => {
                let inner = match role {
                    FactorRole::F => self.weights.p_prime.as_deref(),
                    FactorRole::G => self.weights.q_prime.as_deref(),
                }
                .expect("validated depth-2 model");
                inner
                    .iter()
                    .enumerate()
                    .fold(T::zero(), |acc, (l, &w)| acc + w * f.at(&[a, lambda, h, l]) * g.at(&[b, lambda, h, l]))
            }
        }
    }

    fn check_settings(&self, a: usize, b: usize, lambda: usize) -> Result<()> {
        check_index("alice setting", a, self.shape.settings_a)?;
        check_index("bob setting", b, self.shape.settings_b)?;
        check_index("lambda", lambda, self.shape.lambdas)
    }

    /// `A(a,b,λ)` or `B(a,b,λ)`.
    pub fn response(&self, party: Party, a: usize, b: usize, lambda: usize) -> Result<T> {
        self.check_settings(a, b, lambda)?;
        let (outer, side) = match party {
            Party::A => (&self.weights.p, &self.responses.a),
            Party::B => (&self.weights.q, &self.responses.b),
        };
        Ok(outer.iter().enumerate().fold(T::zero(), |acc, (h, &w)| {
            acc + w
                * self.factor(&side.f, FactorRole::F, a, b, lambda, h)
                * self.factor(&side.g, FactorRole::G, a, b, lambda, h)
        }))
    }

    /// `A(a,b,λ)·B(a,b,λ)`.
    pub fn local_product(&self, a: usize, b: usize, lambda: usize) -> Result<T> {
        Ok(self.response(Party::A, a, b, lambda)? * self.response(Party::B, a, b, lambda)?)
    }

    /// `Σ_λ ρ(λ) A(a,b,λ) B(a,b,λ)`.
    pub fn correlation(&self, a: usize, b: usize, lambda_weights: &[T]) -> Result<T> {
        if lambda_weights.len() != self.shape.lambdas {
            return Err(Error::InvalidArgument(format!(
                "{} λ weights for {} λ points",
                lambda_weights.len(),
                self.shape.lambdas
            )));
        }
        check_weights("λ weights", lambda_weights, T::WEIGHT_TOLERANCE)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut total = T::zero();
        for (lambda, &w) in lambda_weights.iter().enumerate() {
            total = total + w * self.local_product(a, b, lambda)?;
        }
        Ok(total)
    }
}

pub fn nested_response<T: Real>(m: &NestedModel<T>, party: Party, a: usize, b: usize, lambda: usize) -> Result<T> {
    m.response(party, a, b, lambda)
}

pub fn nested_correlation<T: Real>(m: &NestedModel<T>, a: usize, b: usize, lambda_weights: &[T]) -> Result<T> {
    m.correlation(a, b, lambda_weights)
}

/// Symmetric Dirichlet(1) draw: normalized exponentials, one word per entry.
pub fn random_simplex<T: Real>(len: usize, rng: &mut RngStream) -> Vec<T> {
    let raw: Vec<f64> = (0..len).map(|_| -rng.next_open_unit().ln()).collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.iter().map(|&x| T::lit(x / total)).collect()
    } else {
        vec![T::lit(1.0 / len as f64); len]
    }
}

fn uniform_signed<T: Real>(rng: &mut RngStream) -> T {
    T::lit(2.0 * rng.next_unit() - 1.0)
}

/// Random model of the given shape.
///
/// Draw order: `p`, `q`, then `p′`, `q′` at depth 2, then the response
/// tables `A.f`, `A.g`, `B.f`, `B.g` in row-major order, each entry uniform
/// in `[−1, 1)`.
pub fn random_nested_model_with<T: Real>(shape: NestedShape, depth: u8, rng: &mut RngStream) -> Result<NestedModel<T>> {
    if !(1..=2).contains(&depth) {
        return Err(Error::UnsupportedDepth(depth));
    }
    if shape.support == 0 {
        return Err(Error::InvalidArgument("support size must be at least 1".into()));
    }
    let m = shape.support;
    let p = random_simplex(m, rng);
    let q = random_simplex(m, rng);
    let (p_prime, q_prime) = if depth == 2 {
        let pp = random_simplex(m, rng);
        let qp = random_simplex(m, rng);
        (Some(pp), Some(qp))
    } else {
        (None, None)
    };
    let side = |rng: &mut RngStream| -> SideTables<T> {
        let form = |role: FactorRole, rng: &mut RngStream| -> FactorForm<T> {
            if depth == 1 {
                FactorForm::Leaf { values: Table::from_fn(shape.leaf_shape(role), || uniform_signed(rng)) }
            } else {
                let f = Table::from_fn(shape.inner_shape(shape.settings_a), || uniform_signed(rng));
                let g = Table::from_fn(shape.inner_shape(shape.settings_b), || uniform_signed(rng));
                FactorForm::Averaged { f, g }
            }
        };
        let f = form(FactorRole::F, rng);
        let g = form(FactorRole::G, rng);
        SideTables { f, g }
    };
    let a = side(rng);
    let b = side(rng);
    NestedModel::new(depth, shape, NestedWeights { p, q, p_prime, q_prime }, NestedResponses { a, b })
}

/// Random model with two settings per party and three λ points.
pub fn random_nested_model<T: Real>(support: usize, depth: u8, rng: &mut RngStream) -> Result<NestedModel<T>> {
    random_nested_model_with(NestedShape::chsh(support), depth, rng)
}
