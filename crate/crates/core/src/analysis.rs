//! Closed-form predictions for the watch-list size and decoder work.
//!
//! An innocent prefix on the grown list is pruned with probability `1 − a` and
//! otherwise contributes two children one level down, so the excess list size
//! `N_ℓ` is a Galton–Watson process with offspring generating function
//! `f(q) = (1 − a) + a q²` plus `k` fresh innocents per level:
//!
//! ```text
//! F_{log2 k}(q) = 1,      F_{ℓ+1}(q) = F_ℓ(f(q)) · q^k.
//! ```
//!
//! Everything that can overflow (powers with exponents of order `k log n`,
//! doubly-exponential iterates of `f`) is carried in log space.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::params::{Scheme, SchemeParams};

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum AnalysisError {
    #[error("survival probability a = {0} must lie in (0, 1/2)")]
    InvalidLaw(f64),
    #[error("q = {q} outside the valid interval [{lo}, {hi})")]
    DomainError { q: f64, lo: f64, hi: f64 },
    #[error("generating function value overflows f64 (ln = {0})")]
    Overflow(f64),
    #[error("total-progeny series diverges at q = {0}")]
    DivergenceDomain(f64),
    #[error("epsilon = {0} must lie in (0, 1/8) for the Chernoff step")]
    EpsilonOutOfRange(f64),
}

/// Which Möbius majorant of `f` the law uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Majorant {
    /// `g(q) = 6/(7 − q)`, fixing 1 and 6 (the `a = 1/16` law).
    FixesSix,
    /// Iterates `1 + 2(q−1)/((3−q)ρ^i + (q−1))` with `ρ = 2 − 2a = 1 + 2ε`.
    FixesThree,
}

/// Offspring law of an innocent prefix: two children with probability `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchingLaw {
    a: f64,
    majorant: Majorant,
}

impl BranchingLaw {
    /// `a = 1/16`.
    pub fn pcns16() -> Self {
        Self { a: 1.0 / 16.0, majorant: Majorant::FixesSix }
    }

    /// `a = 1/2 − ε`.
    pub fn comp(epsilon: f64) -> Result<Self, AnalysisError> {
        Self::new(0.5 - epsilon)
    }

    pub fn new(a: f64) -> Result<Self, AnalysisError> {
        if !(a > 0.0 && a < 0.5) {
            return Err(AnalysisError::InvalidLaw(a));
        }
        Ok(Self { a, majorant: Majorant::FixesThree })
    }

    pub fn for_params(params: &SchemeParams) -> Self {
        match params.scheme {
            Scheme::Pcns16 => Self::pcns16(),
            _ => Self::comp(params.epsilon).expect("validated epsilon"),
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn majorant(&self) -> Majorant {
        self.majorant
    }

    /// `ε = 1/2 − a`.
    pub fn epsilon(&self) -> f64 {
        0.5 - self.a
    }
}

/// Offspring generating function `f(q) = (1 − a) + a q²`.
pub fn f_eval(law: &BranchingLaw, q: f64) -> f64 {
    (1.0 - law.a) + law.a * q * q
}

/// `ln f(e^ln_q)`, stable for `q` near 1 and for huge `q`.
fn ln_f_of_ln(law: &BranchingLaw, ln_q: f64) -> f64 {
    if ln_q < 300.0 {
        let q = ln_q.exp();
        (law.a * (q - 1.0) * (q + 1.0)).ln_1p()
    } else {
        law.a.ln() + 2.0 * ln_q + ((1.0 - law.a) / law.a * (-2.0 * ln_q).exp()).ln_1p()
    }
}

/// The Möbius majorant `g ≥ f` used to bound the iterates of `f`:
/// `6/(7 − q)` for the 1/16 law, `1 + 4a(q − 1)/(3 − q)` otherwise.
pub fn dominating_step(law: &BranchingLaw, q: f64) -> Result<f64, AnalysisError> {
    match law.majorant {
        Majorant::FixesSix => {
            if !(1.0..7.0).contains(&q) {
                return Err(AnalysisError::DomainError { q, lo: 1.0, hi: 7.0 });
            }
            Ok(6.0 / (7.0 - q))
        }
        Majorant::FixesThree => {
            if !(1.0..3.0).contains(&q) {
                return Err(AnalysisError::DomainError { q, lo: 1.0, hi: 3.0 });
            }
            Ok(1.0 + 4.0 * law.a * (q - 1.0) / (3.0 - q))
        }
    }
}

/// Closed form of the `i`-th iterate of the law's Möbius map.
pub fn moebius_iterate(law: &BranchingLaw, i: u32, q: f64) -> Result<f64, AnalysisError> {
    match law.majorant {
        Majorant::FixesSix => {
            if !(1.0..=6.0).contains(&q) {
                return Err(AnalysisError::DomainError { q, lo: 1.0, hi: 6.0 });
            }
            let scale = 6f64.powi(i as i32);
            Ok(1.0 + 5.0 * (q - 1.0) / (scale * (6.0 - q) + (q - 1.0)))
        }
        Majorant::FixesThree => {
            if !(1.0..3.0).contains(&q) {
                return Err(AnalysisError::DomainError { q, lo: 1.0, hi: 3.0 });
            }
            let rho = 2.0 - 2.0 * law.a;
            let scale = rho.powi(i as i32);
            Ok(1.0 + 2.0 * (q - 1.0) / ((3.0 - q) * scale + (q - 1.0)))
        }
    }
}

/// `ln F_ℓ(q)` after `levels` steps of the recurrence from `F = 1`.
pub fn ln_f_recurrence(law: &BranchingLaw, k: u64, levels: u32, q: f64) -> f64 {
    fn step(law: &BranchingLaw, k: f64, levels: u32, ln_q: f64) -> f64 {
        if levels == 0 {
            return 0.0;
        }
        // F_L(q) = F_{L-1}(f(q)) · q^k
        k * ln_q + step(law, k, levels - 1, ln_f_of_ln(law, ln_q))
    }
    step(law, k as f64, levels, q.ln())
}

/// `F_ℓ(q)` by the recurrence; errors instead of returning infinity.
#[allow(non_snake_case)]
pub fn F_eval_recurrence(
    law: &BranchingLaw,
    k: u64,
    levels: u32,
    q: f64,
) -> Result<f64, AnalysisError> {
    let ln = ln_f_recurrence(law, k, levels, q);
    if !ln.is_finite() || ln > f64::MAX.ln() {
        return Err(AnalysisError::Overflow(ln));
    }
    Ok(ln.exp())
}

/// `ln ∏_{i<levels} f^{∘i}(q)^k`.
pub fn ln_f_product(law: &BranchingLaw, k: u64, levels: u32, q: f64) -> f64 {
    let mut ln_iterates = Vec::with_capacity(levels as usize);
    let mut ln_q = q.ln();
    for _ in 0..levels {
        ln_iterates.push(ln_q);
        ln_q = ln_f_of_ln(law, ln_q);
    }
    k as f64 * ln_iterates.iter().sum::<f64>()
}

/// Mean excess `F′_ℓ(1)` after `levels` steps: `m ← 2a·m + k` from 0.
#[allow(non_snake_case)]
pub fn F_mean(law: &BranchingLaw, k: u64, levels: u32) -> f64 {
    (0..levels).fold(0.0, |m, _| 2.0 * law.a * m + k as f64)
}

/// Limit of [`F_mean`]: `k/(1 − 2a)`, i.e. `8k/7` for the 1/16 law.
pub fn mean_fixed_point(law: &BranchingLaw, k: u64) -> f64 {
    k as f64 / (1.0 - 2.0 * law.a)
}

/// A Chernoff (Markov on `q^X`) bound `Pr{X ≥ t} ≤ G(q)/q^t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    pub levels: u32,
    pub q: f64,
    pub threshold: f64,
    /// `ln(G(q)/q^t)`.
    pub ln_value: f64,
}

impl TailBound {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }

    /// A bound of at least 1 says nothing about the probability.
    pub fn is_vacuous(&self) -> bool {
        self.ln_value >= 0.0
    }
}

/// The excess-size tail bound with the evaluation point and threshold of the
/// law (`q = 5, t = 5k` for 1/16; `q = 2, t = 2k/ε` otherwise) next to the
/// `e^{−k}` cap it is meant to stay under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessBound {
    pub tail: TailBound,
    pub ln_cap: f64,
}

impl ExcessBound {
    pub fn within_cap(&self) -> bool {
        self.tail.ln_value <= self.ln_cap
    }
}

pub fn chernoff_tail(law: &BranchingLaw, k: u64, levels: u32, q: f64, threshold: f64) -> TailBound {
    TailBound { levels, q, threshold, ln_value: ln_f_recurrence(law, k, levels, q) - threshold * q.ln() }
}

pub fn chernoff_excess_bound(
    law: &BranchingLaw,
    k: u64,
    levels: u32,
) -> Result<ExcessBound, AnalysisError> {
    let kf = k as f64;
    let (q, threshold) = match law.majorant {
        Majorant::FixesSix => (5.0, 5.0 * kf),
        Majorant::FixesThree => {
            let eps = law.epsilon();
            if !(eps > 0.0 && eps < 0.125) {
                return Err(AnalysisError::EpsilonOutOfRange(eps));
            }
            (2.0, 2.0 * kf / eps)
        }
    };
    Ok(ExcessBound { tail: chernoff_tail(law, k, levels, q, threshold), ln_cap: -kf })
}

/// Excess threshold the law's Chernoff bound targets: `5k` or `2k/ε`.
pub fn excess_threshold(law: &BranchingLaw, k: u64) -> f64 {
    match law.majorant {
        Majorant::FixesSix => 5.0 * k as f64,
        Majorant::FixesThree => 2.0 * k as f64 / law.epsilon(),
    }
}

/// `Pr{M_∞ = m}` exactly: zero for even `m`, and for `m = 2j + 1`
/// `C(2j+1, j) a^j (1 − a)^{j+1} / (2j + 1)`.
pub fn total_progeny_pmf_exact(a: &BigRational, m: u64) -> BigRational {
    if m == 0 || m.is_multiple_of(2) {
        return BigRational::zero();
    }
    let j = (m - 1) / 2;
    let mut binom = BigInt::one();
    for i in 0..j {
        binom = binom * BigInt::from(m - i) / BigInt::from(i + 1);
    }
    let one_minus_a = BigRational::one() - a;
    let power = |base: &BigRational, e: u64| (0..e).fold(BigRational::one(), |acc, _| acc * base);
    BigRational::from_integer(binom) * power(a, j) * power(&one_minus_a, j + 1)
        / BigRational::from_integer(BigInt::from(m))
}

/// Largest `m` evaluated in exact rationals by [`total_progeny_pmf`].
pub const EXACT_PMF_LIMIT: u64 = 101;

/// `Pr{M_∞ = m}` as a float; exact rational arithmetic up to
/// [`EXACT_PMF_LIMIT`], a log-space Catalan recurrence beyond.
pub fn total_progeny_pmf(law: &BranchingLaw, m: u64) -> f64 {
    if m == 0 || m.is_multiple_of(2) {
        return 0.0;
    }
    if m <= EXACT_PMF_LIMIT {
        let a = BigRational::from_float(law.a).expect("finite a");
        return total_progeny_pmf_exact(&a, m).to_f64().expect("pmf fits f64");
    }
    let j = (m - 1) / 2;
    // Catalan(j) = prod_{i<j} 2(2i+1)/(i+2)
    let ln_catalan: f64 = (0..j).map(|i| (2.0 * (2 * i + 1) as f64 / (i + 2) as f64).ln()).sum();
    let a = law.a;
    (ln_catalan + j as f64 * (a * (1.0 - a)).ln() + (1.0 - a).ln()).exp()
}

fn progeny_discriminant(law: &BranchingLaw, q: f64) -> Result<f64, AnalysisError> {
    let d = 1.0 - 4.0 * law.a * (1.0 - law.a) * q * q;
    if d < 0.0 || q < 0.0 {
        return Err(AnalysisError::DivergenceDomain(q));
    }
    Ok(d)
}

/// Generating function of the total progeny,
/// `h_∞(q) = (1 − √(1 − 4a(1−a)q²)) / (2aq)`.
pub fn h_inf_eval(law: &BranchingLaw, q: f64) -> Result<f64, AnalysisError> {
    let s = progeny_discriminant(law, q)?.sqrt();
    // Rationalized to avoid cancellation for small q.
    Ok(2.0 * (1.0 - law.a) * q / (1.0 + s))
}

/// `h′_∞(q)`; at `q = 1` this is the mean total progeny `1/(1 − 2a)`.
pub fn h_inf_derivative(law: &BranchingLaw, q: f64) -> Result<f64, AnalysisError> {
    let d = progeny_discriminant(law, q)?;
    if d == 0.0 {
        return Err(AnalysisError::DivergenceDomain(q));
    }
    let s = d.sqrt();
    let b4 = 4.0 * law.a * (1.0 - law.a);
    Ok(2.0 * (1.0 - law.a) * ((1.0 + s) + b4 * q * q / s) / ((1.0 + s) * (1.0 + s)))
}

/// `Pr{handled ≥ t} ≤ h_∞(q)^{k·levels} / q^t`.
pub fn progeny_tail_bound(
    law: &BranchingLaw,
    k: u64,
    levels: u32,
    q: f64,
    t: f64,
) -> Result<TailBound, AnalysisError> {
    let h = h_inf_eval(law, q)?;
    Ok(TailBound {
        levels,
        q,
        threshold: t,
        ln_value: k as f64 * f64::from(levels) * h.ln() - t * q.ln(),
    })
}

/// Work tail at the scheme's own budget and the cap it should not exceed:
/// `q = 2, t = 3k log2 n, cap n^{−k}` for PCNS16 and
/// `q = 1 + ε², t = ε^{−2} k log2 n, cap 2n^{−k}` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgenyBound {
    pub tail: TailBound,
    pub ln_cap: f64,
}

impl ProgenyBound {
    pub fn within_cap(&self) -> bool {
        self.tail.ln_value <= self.ln_cap
    }
}

pub fn scheme_progeny_bound(params: &SchemeParams) -> Result<ProgenyBound, AnalysisError> {
    let law = BranchingLaw::for_params(params);
    let k = params.k as f64;
    let log2n = f64::from(params.log2n);
    let ln_n_k = k * (params.n as f64).ln();
    let levels = params.phase1_level_count();
    let (q, t, ln_cap) = match params.scheme {
        Scheme::Pcns16 => (2.0, 3.0 * k * log2n, -ln_n_k),
        _ => {
            let e2 = params.epsilon * params.epsilon;
            (1.0 + e2, k * log2n / e2, std::f64::consts::LN_2 - ln_n_k)
        }
    };
    Ok(ProgenyBound { tail: progeny_tail_bound(&law, params.k, levels, q, t)?, ln_cap })
}

/// Error budget as composed for each scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaBound {
    /// Some innocent survives the finisher: `5k^{−3}` or `2/(ε k^{2ε})`.
    /// Zero for PCNS-DD, whose finisher error is measured, not bounded.
    pub survivor: f64,
    /// The watch list is longer than the Chernoff threshold: `e^{−k}`.
    pub long_list: f64,
    /// The operation budget runs out: `n^{−k}`, `2n^{−k}`, or `(n/k)^{−k}`.
    pub tle: f64,
}

impl WaBound {
    pub fn total(&self) -> f64 {
        self.survivor + self.long_list + self.tle
    }
}

pub fn wa_probability_bound(params: &SchemeParams) -> WaBound {
    let k = params.k as f64;
    let n = params.n as f64;
    let eps = params.epsilon;
    let long_list = (-k).exp();
    match params.scheme {
        Scheme::Pcns16 => WaBound { survivor: 5.0 * k.powi(-3), long_list, tle: (-k * n.ln()).exp() },
        Scheme::PcnsComp => WaBound {
            survivor: 2.0 / (eps * k.powf(2.0 * eps)),
            long_list,
            tle: 2.0 * (-k * n.ln()).exp(),
        },
        Scheme::PcnsDd => WaBound { survivor: 0.0, long_list, tle: (-k * (n / k).ln()).exp() },
    }
}

/// `log2 Σ_{i≤k} C(n, i)`, the counting lower bound on the number of tests.
pub fn info_bound(n: u64, k: u64) -> f64 {
    assert!(k <= n, "k must not exceed n");
    let mut ln_terms = Vec::with_capacity(k as usize + 1);
    let mut ln_binom = 0.0f64;
    ln_terms.push(0.0);
    for i in 1..=k {
        ln_binom += ((n - i + 1) as f64).ln() - (i as f64).ln();
        ln_terms.push(ln_binom);
    }
    let max = ln_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = ln_terms.iter().map(|t| (t - max).exp()).sum();
    (max + sum.ln()) / std::f64::consts::LN_2
}
