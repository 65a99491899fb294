//! CHSH-type evaluators, bounds, and searches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RngStream;
use crate::models::{random_nested_model, random_simplex, FactorRole, HessModel, NestedModel, Party};
use crate::scalar::Real;

/// Largest CHSH value of any local model.
pub const LOCAL_BOUND: f64 = 2.0;
/// CHSH value of the PR box.
pub const PR_BOX_BOUND: f64 = 4.0;
/// Added to analytic bounds when deciding whether a report is satisfied.
pub const REPORT_SLACK: f64 = 1e-9;

/// Quantum maximum `2√2`.
pub fn tsirelson_bound<T: Real>() -> T {
    T::lit(2.0) * T::SQRT_2()
}

/// CHSH settings `(a, a′, b, b′)`: angles for planar models, indices for tables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings<L> {
    pub a: L,
    pub a_prime: L,
    pub b: L,
    pub b_prime: L,
}

impl<L: Copy> ChshSettings<L> {
    pub fn new(a: L, a_prime: L, b: L, b_prime: L) -> Self {
        Self { a, a_prime, b, b_prime }
    }
}

/// `|E(a,b) − E(a,b′)| + |E(a′,b′) + E(a′,b)|`.
pub fn chsh_value<L: Copy, T: Real>(e: impl Fn(L, L) -> T, s: &ChshSettings<L>) -> T {
    (e(s.a, s.b) - e(s.a, s.b_prime)).abs() + (e(s.a_prime, s.b_prime) + e(s.a_prime, s.b)).abs()
}

pub fn try_chsh_value<L: Copy, T: Real>(e: impl Fn(L, L) -> Result<T>, s: &ChshSettings<L>) -> Result<T> {
    Ok((e(s.a, s.b)? - e(s.a, s.b_prime)?).abs() + (e(s.a_prime, s.b_prime)? + e(s.a_prime, s.b)?).abs())
}

/// All 16 labelings of `(a, a′, b, b′)` with two settings per party.
pub fn index_settings() -> impl Iterator<Item = ChshSettings<usize>> {
    (0..16usize).map(|k| ChshSettings::new(k & 1, k >> 1 & 1, k >> 2 & 1, k >> 3 & 1))
}

/// Largest CHSH value over [`index_settings`]; earliest labeling wins ties.
pub fn max_chsh_over_indices<T: Real>(e: impl Fn(usize, usize) -> Result<T>) -> Result<(T, ChshSettings<usize>)> {
    let mut best: Option<(T, ChshSettings<usize>)> = None;
    for s in index_settings() {
        let v = try_chsh_value(&e, &s)?;
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, s));
        }
    }
    Ok(best.expect("sixteen labelings"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub value: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub witness: Option<String>,
}

impl BoundReport {
    pub fn new(value: f64, bound: f64, witness: Option<String>) -> Self {
        Self { value, bound, satisfied: value <= bound + REPORT_SLACK, witness }
    }
}

/// Four-term combination before any averaging: at fixed deeper indices `i`
/// (Alice's side) and `j` (Bob's side), each term is
/// `f_A(x,λ,i) g_A(y,λ,i) f_B(x,λ,j) g_B(y,λ,j)`.
pub fn pointwise_four_term<T: Real>(
    m: &NestedModel<T>,
    i: usize,
    j: usize,
    s: &ChshSettings<usize>,
    lambda: usize,
) -> Result<T> {
    if m.depth() != 1 {
        return Err(Error::UnsupportedDepth(m.depth()));
    }
    let term = |x: usize, y: usize| -> Result<T> {
        Ok(m.leaf(Party::A, FactorRole::F, x, lambda, i)?
            * m.leaf(Party::A, FactorRole::G, y, lambda, i)?
            * m.leaf(Party::B, FactorRole::F, x, lambda, j)?
            * m.leaf(Party::B, FactorRole::G, y, lambda, j)?)
    };
    try_chsh_value(term, s)
}

/// Quantum CHSH-game success `cos²(π/8) = ½ + √2/4`.
pub fn tsirelson_success_probability<T: Real>() -> T {
    T::lit(0.5) + T::SQRT_2() / T::lit(4.0)
}

/// Game success for a strategy with CHSH value `s`: `½ + s/8`.
pub fn chsh_game_success_from_value<T: Real>(s: T) -> T {
    T::lit(0.5) + s / T::lit(8.0)
}

/// Deterministic CHSH-game strategy: `alice[x]`, `bob[y]` output bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameStrategy {
    pub alice: [bool; 2],
    pub bob: [bool; 2],
}

impl GameStrategy {
    /// Win probability over uniform inputs: win iff `a ⊕ b = x ∧ y`.
    pub fn success(&self) -> f64 {
        let wins = (0..4)
            .filter(|&k| {
                let (x, y) = (k & 1 == 1, k >> 1 == 1);
                (self.alice[x as usize] ^ self.bob[y as usize]) == (x & y)
            })
            .count();
        wins as f64 / 4.0
    }

    pub fn all() -> impl Iterator<Item = GameStrategy> {
        (0..16u8)
            .map(|k| GameStrategy { alice: [k & 1 == 1, k >> 1 & 1 == 1], bob: [k >> 2 & 1 == 1, k >> 3 & 1 == 1] })
    }
}

/// Best classical success by exhaustion over all 16 deterministic strategies.
pub fn classical_chsh_game_success() -> (f64, GameStrategy) {
    GameStrategy::all().fold((f64::NEG_INFINITY, GameStrategy::all().next().unwrap()), |best, s| {
        let p = s.success();
        if p > best.0 {
            (p, s)
        } else {
            best
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ChshSearch<T> {
    pub value: T,
    pub settings: ChshSettings<T>,
}

fn grid_points<T: Real>(resolution: T) -> Result<(usize, T)> {
    if !resolution.is_finite() || resolution <= T::zero() {
        return Err(Error::InvalidArgument(format!("search resolution must be positive, got {resolution}")));
    }
    let tau = T::TAU();
    let k = (tau / resolution).ceil().to_usize().unwrap_or(usize::MAX).max(1);
    if k > 4096 {
        return Err(Error::InvalidArgument("search resolution too fine".into()));
    }
    Ok((k, tau / T::from_usize(k).unwrap()))
}

/// Exhaustive grid over `(a′, b, b′)` with `a = 0`.
///
/// Valid for correlations that depend only on `b − a`. Points are visited in
/// lexicographic order and the first maximum found is kept.
pub fn grid_chsh_search<T: Real>(e: impl Fn(T, T) -> T, resolution: T) -> Result<ChshSearch<T>> {
    let (k, step) = grid_points(resolution)?;
    let at = |i: usize| step * T::from_usize(i).unwrap();
    let mut best = ChshSearch {
        value: T::neg_infinity(),
        settings: ChshSettings::new(T::zero(), T::zero(), T::zero(), T::zero()),
    };
    for ia in 0..k {
        for ib in 0..k {
            for ibp in 0..k {
                let s = ChshSettings::new(T::zero(), at(ia), at(ib), at(ibp));
                let v = chsh_value(&e, &s);
                if v > best.value {
                    best = ChshSearch { value: v, settings: s };
                }
            }
        }
    }
    Ok(best)
}

const GOLDEN_TOLERANCE: f64 = 1e-6;

fn golden_max<T: Real>(f: impl Fn(T) -> T, lo: T, hi: T) -> (T, T) {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let tol = T::lit(GOLDEN_TOLERANCE);
    let (mut lo, mut hi) = (lo, hi);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// [`grid_chsh_search`] followed by coordinate-wise golden-section refinement
/// of `a′`, `b`, `b′` to within `1e-6` rad, each inside one grid step of the
/// current point. A refinement step is kept only if it improves the value.
pub fn max_chsh_search<T: Real>(e: impl Fn(T, T) -> T, resolution: T) -> Result<ChshSearch<T>> {
    let (_, step) = grid_points(resolution)?;
    let mut best = grid_chsh_search(&e, resolution)?;
    let value_at = |p: [T; 3]| chsh_value(&e, &ChshSettings::new(T::zero(), p[0], p[1], p[2]));
    let mut point = [best.settings.a_prime, best.settings.b, best.settings.b_prime];
    for _ in 0..200 {
        let before = best.value;
        for c in 0..3 {
            let (x, v) = golden_max(
                |x| {
                    let mut p = point;
                    p[c] = x;
                    value_at(p)
                },
                point[c] - step,
                point[c] + step,
            );
            if v > best.value {
                point[c] = x;
                best = ChshSearch { value: v, settings: ChshSettings::new(T::zero(), point[0], point[1], point[2]) };
            }
        }
        if best.value - before <= T::epsilon() {
            break;
        }
    }
    Ok(best)
}

/// Empirical CHSH scan over random models of the setting-dependent density.
///
/// Trial `t` draws its model from `RngStream::derived(seed, t)`. The report
/// carries the largest value found over all labelings and trials (earliest
/// trial wins ties); `satisfied` says whether it stayed at or below 2. No
/// bound is asserted.
pub fn hess_chsh_scan<T, G>(generator: G, trials: usize, seed: u64) -> Result<BoundReport>
where
    T: Real,
    G: Fn(&mut RngStream) -> Result<HessModel<T>> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial required".into()));
    }
    let per_trial: Vec<(f64, ChshSettings<usize>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::derived(seed, t as u64);
            let h = generator(&mut rng)?;
            let (v, s) = max_chsh_over_indices(|a, b| h.correlation(a, b))?;
            Ok((v.to_f64_lossy(), s))
        })
        .collect::<Result<_>>()?;
    let (trial, (value, s)) = first_max(&per_trial, |r| r.0);
    Ok(BoundReport::new(
        value,
        LOCAL_BOUND,
        Some(format!("trial {trial}, settings (a={}, a'={}, b={}, b'={})", s.a, s.a_prime, s.b, s.b_prime)),
    ))
}

fn first_max<R: Copy>(items: &[R], key: impl Fn(&R) -> f64) -> (usize, R) {
    let mut best = (0, items[0]);
    for (i, r) in items.iter().enumerate().skip(1) {
        if key(r) > key(&best.1) {
            best = (i, *r);
        }
    }
    best
}

/// Maxima observed over a batch of random nested models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedScan {
    /// Pre-average four-term value over all `(i, j, λ)` and labelings; depth 1 only.
    pub pointwise: Option<BoundReport>,
    /// CHSH of `A(x,y,λ)·B(x,y,λ)` at a single λ.
    pub per_lambda: BoundReport,
    /// CHSH of the λ-averaged correlation.
    pub averaged: BoundReport,
}

#[derive(Clone, Copy)]
struct TrialMaxima {
    pointwise: Option<(f64, usize, usize, usize, ChshSettings<usize>)>,
    per_lambda: (f64, usize, ChshSettings<usize>),
    averaged: (f64, ChshSettings<usize>),
}

fn scan_trial(m: &NestedModel<f64>, rho: &[f64]) -> Result<TrialMaxima> {
    let shape = m.shape();
    let pointwise = if m.depth() == 1 {
        let mut best: Option<(f64, usize, usize, usize, ChshSettings<usize>)> = None;
        for lambda in 0..shape.lambdas {
            for i in 0..shape.support {
                for j in 0..shape.support {
                    for s in index_settings() {
                        let v = pointwise_four_term(m, i, j, &s, lambda)?;
                        if best.is_none_or(|b| v > b.0) {
                            best = Some((v, i, j, lambda, s));
                        }
                    }
                }
            }
        }
        best
    } else {
        None
    };
    let mut per_lambda: Option<(f64, usize, ChshSettings<usize>)> = None;
    for lambda in 0..shape.lambdas {
        let (v, s) = max_chsh_over_indices(|a, b| m.local_product(a, b, lambda))?;
        if per_lambda.is_none_or(|b| v > b.0) {
            per_lambda = Some((v, lambda, s));
        }
    }
    let averaged = max_chsh_over_indices(|a, b| m.correlation(a, b, rho))?;
    Ok(TrialMaxima { pointwise, per_lambda: per_lambda.expect("at least one λ"), averaged })
}

/// Draws `trials` random nested models (two settings per party, three λ
/// points) and records the largest four-term values seen.
///
/// Trial `t` uses `RngStream::derived(seed, t)`: the model first, then the λ
/// weights.
pub fn nested_scan(support: usize, depth: u8, trials: usize, seed: u64) -> Result<NestedScan> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial required".into()));
    }
    let results: Vec<TrialMaxima> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::derived(seed, t as u64);
            let m = random_nested_model::<f64>(support, depth, &mut rng)?;
            let rho = random_simplex::<f64>(m.shape().lambdas, &mut rng);
            scan_trial(&m, &rho)
        })
        .collect::<Result<_>>()?;
    let label = |s: &ChshSettings<usize>| format!("(a={}, a'={}, b={}, b'={})", s.a, s.a_prime, s.b, s.b_prime);
    let pointwise = if depth == 1 {
        let (t, r) = first_max(&results, |r| r.pointwise.map_or(f64::NEG_INFINITY, |p| p.0));
        let (v, i, j, lambda, s) = r.pointwise.expect("depth-1 trial");
        Some(BoundReport::new(v, LOCAL_BOUND, Some(format!("trial {t}, i={i}, j={j}, λ={lambda}, {}", label(&s)))))
    } else {
        None
    };
    let (t, r) = first_max(&results, |r| r.per_lambda.0);
    let per_lambda = BoundReport::new(
        r.per_lambda.0,
        LOCAL_BOUND,
        Some(format!("trial {t}, λ={}, {}", r.per_lambda.1, label(&r.per_lambda.2))),
    );
    let (t, r) = first_max(&results, |r| r.averaged.0);
    let averaged = BoundReport::new(r.averaged.0, LOCAL_BOUND, Some(format!("trial {t}, {}", label(&r.averaged.1))));
    Ok(NestedScan { pointwise, per_lambda, averaged })
}
