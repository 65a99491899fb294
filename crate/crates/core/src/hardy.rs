//! Chained statements of the Hardy type evaluated under the one-bit protocol.
//!
//! The chain alternates Alice and Bob angles `a₁, b₂, a₃, …, b_N`. Statements
//! `1..N−1` pair neighbouring angles and assert the outcome product is `−1`;
//! statement `N` pairs `a₁` with `b_N` and asserts `+1`. All statements are
//! evaluated counterfactually on one shared hidden pair.

use serde::{Deserialize, Serialize};

use crate::engine::{combine, estimate_with, run_tallies, CombineOp, Estimate, McOptions};
use crate::error::{Error, Result};
use crate::geometry::{Direction, Sign};
use crate::models::{tb_alice, tb_bob, HiddenPair};
use crate::scalar::Real;

/// Tolerance on `|λ₁·setting|` below which the parity premise is degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ChainConfig<T> {
    n: usize,
    phi: T,
    angles: Vec<T>,
}

/// One statement of the chain, numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Statement<T> {
    pub index: usize,
    pub a_angle: T,
    pub b_angle: T,
    /// Product the statement asserts.
    pub target: Sign,
}

impl<T: Real> ChainConfig<T> {
    /// Evenly spread angles: `θ_k = k·φ/(N−1)`, with `θ_{N−1} = φ` exactly.
    pub fn new(n: usize, phi: T) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("chain size must be even and at least 4, got {n}")));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidArgument("chain spread must be finite".into()));
        }
        let gap = phi / T::from_usize(n - 1).expect("chain size fits");
        let mut angles: Vec<T> = (0..n).map(|k| gap * T::from_usize(k).expect("index fits")).collect();
        angles[n - 1] = phi;
        Ok(Self { n, phi, angles })
    }

    /// Spread `(N−1)π/N`, where the chained sum is largest.
    pub fn phi_max(n: usize) -> T {
        let nf = T::from_usize(n).expect("chain size fits");
        (nf - T::one()) * T::PI() / nf
    }

    pub fn max_violation(n: usize) -> Result<Self> {
        Self::new(n, Self::phi_max(n))
    }

    pub fn is_max_violation(&self) -> bool {
        (self.phi - Self::phi_max(self.n)).abs() <= T::lit(1e-12).max(T::epsilon() * T::lit(8.0))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    /// Shifts every angle by `offset`; gaps are unchanged.
    pub fn offset(&self, offset: T) -> Self {
        Self { n: self.n, phi: self.phi, angles: self.angles.iter().map(|&a| a + offset).collect() }
    }

    pub fn statement(&self, index: usize) -> Statement<T> {
        assert!((1..=self.n).contains(&index), "statement {index} outside 1..={}", self.n);
        if index == self.n {
            return Statement { index, a_angle: self.angles[0], b_angle: self.angles[self.n - 1], target: Sign::Plus };
        }
        // statement n pairs θ_{n−1} with θ_n; even positions hold Alice angles
        let (lo, hi) = (index - 1, index);
        let (a, b) = if lo % 2 == 0 { (lo, hi) } else { (hi, lo) };
        Statement { index, a_angle: self.angles[a], b_angle: self.angles[b], target: Sign::Minus }
    }

    pub fn statements(&self) -> impl Iterator<Item = Statement<T>> + '_ {
        (1..=self.n).map(move |i| self.statement(i))
    }
}

pub fn chain_angles<T: Real>(n: usize, phi: T) -> Result<ChainConfig<T>> {
    ChainConfig::new(n, phi)
}

/// Outcome of evaluating every statement on one hidden pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ChainRun<T> {
    pub hidden: HiddenPair<T>,
    pub products: Vec<Sign>,
    /// Bit Alice sends for each statement's setting.
    pub comm_bits: Vec<Sign>,
    pub verdicts: Vec<bool>,
}

impl<T> ChainRun<T> {
    pub fn all_true(&self) -> bool {
        self.verdicts.iter().all(|&v| v)
    }

    pub fn false_count(&self) -> usize {
        self.verdicts.iter().filter(|&&v| !v).count()
    }

    /// 1-based number of the first false statement.
    pub fn first_false(&self) -> Option<usize> {
        self.verdicts.iter().position(|&v| !v).map(|i| i + 1)
    }
}

pub fn evaluate_chain<T: Real>(cfg: &ChainConfig<T>, hp: &HiddenPair<T>) -> ChainRun<T> {
    let mut products = Vec::with_capacity(cfg.n);
    let mut comm_bits = Vec::with_capacity(cfg.n);
    let mut verdicts = Vec::with_capacity(cfg.n);
    for st in cfg.statements() {
        let (alpha, c) = tb_alice(&Direction::planar(st.a_angle), hp);
        let beta = tb_bob(&Direction::planar(st.b_angle), c, hp);
        let product = alpha * beta;
        products.push(product);
        comm_bits.push(c);
        verdicts.push(product == st.target);
    }
    ChainRun { hidden: *hp, products, comm_bits, verdicts }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ParityOutcome<T> {
    pub false_count: usize,
    /// 1-based number of the first false statement.
    pub first_false: usize,
    pub run: ChainRun<T>,
}

/// Evaluates the chain at `λ₂ = −λ₁`, where the product of all statement
/// outcomes is `+1` but the product of all asserted values is `−1`; an odd
/// number of statements must then fail.
pub fn parity_check<T: Real>(cfg: &ChainConfig<T>, lambda1: &Direction<T>) -> Result<ParityOutcome<T>> {
    let tol = T::lit(DEGENERACY_TOLERANCE);
    for (k, &theta) in cfg.angles().iter().enumerate() {
        let d = lambda1.dot(&Direction::planar(theta));
        if d.abs() <= tol {
            return Err(Error::Degenerate(format!("λ₁ is orthogonal to chain setting {k} (|λ₁·s| = {})", d.abs())));
        }
    }
    let run = evaluate_chain(cfg, &HiddenPair::antipodal(*lambda1));
    let false_count = run.false_count();
    let first_false =
        run.first_false().ok_or_else(|| Error::Degenerate("every chain statement held at λ₂ = −λ₁".into()))?;
    Ok(ParityOutcome { false_count, first_false, run })
}

/// Lane used for the shared-pair ensemble; statement `n` uses lane `n`.
const SHARED_LANE: u32 = 0;

fn statement_lane(index: usize) -> u32 {
    u32::try_from(index).expect("chain size fits in u32")
}

/// Monte Carlo frequency of each statement holding.
///
/// Each statement draws its own independent ensemble of hidden pairs, so the
/// estimates are independent of one another.
pub fn statement_probabilities<T: Real>(cfg: &ChainConfig<T>, opts: McOptions) -> Result<Vec<Estimate>> {
    cfg.statements()
        .map(|st| {
            let a = Direction::planar(st.a_angle);
            let b = Direction::planar(st.b_angle);
            estimate_with(opts, statement_lane(st.index), move |rng| {
                let hp = HiddenPair::<T>::sample(rng);
                let (alpha, c) = tb_alice(&a, &hp);
                let beta = tb_bob(&b, c, &hp);
                ((alpha * beta) == st.target) as i64
            })
        })
        .collect()
}

/// Per-statement frequencies from one shared ensemble (all statements on the
/// same pair), followed by the all-true frequency as the last entry.
pub fn shared_statement_frequencies<T: Real>(cfg: &ChainConfig<T>, opts: McOptions) -> Result<Vec<Estimate>> {
    let n = cfg.len();
    let tallies = run_tallies(opts, SHARED_LANE, n + 1, |rng, out| {
        let run = evaluate_chain(cfg, &HiddenPair::sample(rng));
        for (slot, &v) in out.iter_mut().zip(&run.verdicts) {
            *slot = v as i64;
        }
        out[n] = run.all_true() as i64;
    })?;
    Ok(tallies.iter().map(|t| t.estimate(opts.seed)).collect())
}

/// Frequency with which every statement holds on the same hidden pair.
pub fn joint_satisfaction<T: Real>(cfg: &ChainConfig<T>, opts: McOptions) -> Result<Estimate> {
    estimate_with(opts, SHARED_LANE, |rng| evaluate_chain(cfg, &HiddenPair::sample(rng)).all_true() as i64)
}

/// `Σₙ pₙ⁻ + p_N⁺` from [`statement_probabilities`], errors in quadrature.
pub fn chained_bell_lhs<T: Real>(cfg: &ChainConfig<T>, opts: McOptions) -> Result<Estimate> {
    let probs = statement_probabilities(cfg, opts)?;
    Ok(sum_estimates(&probs))
}

pub fn sum_estimates(estimates: &[Estimate]) -> Estimate {
    let first = estimates[0];
    estimates[1..].iter().fold(first, |acc, e| combine(&acc, e, CombineOp::Sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::pass_fail;
    use crate::geometry::{sample_direction, RngStream};
    use std::f64::consts::PI;

    #[test]
    fn angles_for_four_statements() {
        let cfg = ChainConfig::new(4, 3.0 * PI / 4.0).unwrap();
        let expected = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
        for (a, e) in cfg.angles().iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
        assert!(cfg.is_max_violation());
        assert!(!ChainConfig::new(4, 0.5).unwrap().is_max_violation());
    }

    #[test]
    fn rejects_bad_sizes() {
        for n in [0, 2, 3, 5, 7] {
            assert!(matches!(ChainConfig::new(n, 1.0), Err(Error::InvalidArgument(_))));
        }
        assert!(ChainConfig::new(4, f64::NAN).is_err());
    }

    #[test]
    fn gaps_are_uniform_up_to_large_chains() {
        for n in (4..=1024).step_by(2) {
            for phi in [0.3, PI, ChainConfig::<f64>::phi_max(n), -2.0] {
                let cfg = ChainConfig::new(n, phi).unwrap();
                let gap = phi / (n - 1) as f64;
                let a = cfg.angles();
                assert_eq!(a[n - 1] - a[0], phi);
                for w in a.windows(2) {
                    assert!((w[1] - w[0] - gap).abs() < 1e-12, "N={n}");
                }
            }
        }
    }

    #[test]
    fn statements_follow_the_alternating_pattern() {
        let cfg = ChainConfig::new(6, 1.0).unwrap();
        let a = cfg.angles().to_vec();
        let pairs: Vec<_> = cfg.statements().map(|s| (s.a_angle, s.b_angle, s.target)).collect();
        assert_eq!(pairs[0], (a[0], a[1], Sign::Minus));
        assert_eq!(pairs[1], (a[2], a[1], Sign::Minus));
        assert_eq!(pairs[2], (a[2], a[3], Sign::Minus));
        assert_eq!(pairs[3], (a[4], a[3], Sign::Minus));
        assert_eq!(pairs[4], (a[4], a[5], Sign::Minus));
        assert_eq!(pairs[5], (a[0], a[5], Sign::Plus));
    }

    #[test]
    fn zero_spread_fails_only_the_closing_statement() {
        let cfg = ChainConfig::new(8, 0.0).unwrap();
        let mut rng = RngStream::new(3);
        for _ in 0..1000 {
            let run = evaluate_chain(&cfg, &HiddenPair::sample(&mut rng));
            assert!(run.products.iter().all(|&p| p == Sign::Minus));
            assert!(run.verdicts[..7].iter().all(|&v| v));
            assert!(!run.verdicts[7]);
        }
    }

    #[test]
    fn antipodal_pairs_always_send_minus_one() {
        let cfg = ChainConfig::<f64>::max_violation(8).unwrap();
        let mut rng = RngStream::new(4);
        for _ in 0..1000 {
            let l: Direction<f64> = sample_direction(&mut rng);
            let run = evaluate_chain(&cfg, &HiddenPair::antipodal(l));
            assert!(run.comm_bits.iter().all(|&c| c == Sign::Minus));
        }
    }

    #[test]
    fn evaluation_is_deterministic() {
        let cfg = ChainConfig::<f64>::max_violation(4).unwrap();
        let hp = HiddenPair::sample(&mut RngStream::new(5));
        let hp2 = HiddenPair::sample(&mut RngStream::new(5));
        assert_eq!(evaluate_chain(&cfg, &hp), evaluate_chain(&cfg, &hp2));
    }

    #[test]
    fn parity_for_tilted_lambda() {
        let cfg = ChainConfig::<f64>::max_violation(4).unwrap();
        // e_z rotated 10° in the x–z plane
        let l = Direction::planar(PI / 2.0 - 10f64.to_radians());
        let out = parity_check(&cfg, &l).unwrap();
        assert_eq!(out.false_count % 2, 1);
        // direct count: settings 0°, 45°, 90°, 135° against λ at 80°
        let s = |deg: f64| Sign::of_finite(l.dot(&Direction::planar(deg.to_radians())));
        let expected: usize =
            [(0.0, 45.0, Sign::Minus), (90.0, 45.0, Sign::Minus), (90.0, 135.0, Sign::Minus), (0.0, 135.0, Sign::Plus)]
                .iter()
                .filter(|(a, b, t)| -s(*a) * s(*b) != *t)
                .count();
        assert_eq!(out.false_count, expected);
    }

    #[test]
    fn parity_is_odd_for_random_lambdas() {
        let mut rng = RngStream::new(6);
        for n in [4, 8, 16] {
            let cfg = ChainConfig::<f64>::max_violation(n).unwrap();
            for _ in 0..1000 {
                let l: Direction<f64> = sample_direction(&mut rng);
                let out = parity_check(&cfg, &l).unwrap();
                assert_eq!(out.false_count % 2, 1);
                assert!(!out.run.verdicts[out.first_false - 1]);
            }
        }
    }

    #[test]
    fn parity_rejects_orthogonal_lambda() {
        let cfg = ChainConfig::<f64>::max_violation(4).unwrap();
        assert!(matches!(parity_check(&cfg, &Direction::e_y()), Err(Error::Degenerate(_))));
        // orthogonal to the first setting (θ = 0 ⇒ e_x)
        assert!(parity_check(&cfg, &Direction::e_z()).is_err());
    }

    #[test]
    fn probabilities_match_singlet_statistics() {
        let cfg = ChainConfig::<f64>::max_violation(4).unwrap();
        let probs = statement_probabilities(&cfg, McOptions::new(100_000, 7).with_shards(4)).unwrap();
        let minus = 0.5 * (1.0 + (PI / 4.0).cos());
        let plus = 0.5 * (1.0 - cfg.phi().cos());
        for p in &probs[..3] {
            assert!((0.0..=1.0).contains(&p.mean));
            assert!(pass_fail(p, minus, 5.0), "{p:?}");
        }
        assert!(pass_fail(&probs[3], plus, 5.0));
    }

    #[test]
    fn shared_and_independent_marginals_agree() {
        let cfg = ChainConfig::<f64>::max_violation(8).unwrap();
        let opts = McOptions::new(100_000, 8).with_shards(2);
        let shared = shared_statement_frequencies(&cfg, opts).unwrap();
        let independent = statement_probabilities(&cfg, opts).unwrap();
        for (s, i) in shared.iter().zip(&independent) {
            let d = combine(s, i, CombineOp::Difference);
            assert!(pass_fail(&d, 0.0, 5.0), "{s:?} vs {i:?}");
        }
        let joint = joint_satisfaction(&cfg, opts).unwrap();
        assert_eq!(joint, shared[8]);
    }

    #[test]
    fn boundary_spread_gives_n_minus_one() {
        let cfg = ChainConfig::new(4, 0.0f64).unwrap();
        let lhs = chained_bell_lhs(&cfg, McOptions::new(20_000, 9)).unwrap();
        assert_eq!(lhs.mean, 3.0);
        assert_eq!(lhs.stderr, 0.0);
    }

    #[test]
    fn global_offset_leaves_statistics_unchanged() {
        let cfg = ChainConfig::<f64>::max_violation(4).unwrap();
        let opts = McOptions::new(200_000, 10).with_shards(4);
        let base = chained_bell_lhs(&cfg, opts).unwrap();
        let shifted = chained_bell_lhs(&cfg.offset(0.7), McOptions { seed: 11, ..opts }).unwrap();
        assert!(pass_fail(&combine(&base, &shifted, CombineOp::Difference), 0.0, 5.0));
    }
}
