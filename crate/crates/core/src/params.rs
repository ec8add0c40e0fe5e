//! Scheme selection and the validated parameter bundle.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{name} = {value} is not a power of two")]
    NotPowerOfTwo { name: &'static str, value: u64 },
    #[error("epsilon = {0} must lie strictly between 0 and 1/8")]
    EpsilonOutOfRange(f64),
    #[error("k = {k} must satisfy 2 <= k <= n/4 (n = {n})")]
    KTooLarge { n: u64, k: u64 },
    #[error("PCNS-DD needs k^2 < n, got k = {k}, n = {n}")]
    ThetaTooLarge { n: u64, k: u64 },
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// `16k` buckets per level.
    Pcns16,
    /// `⌈ck⌉` buckets per level, leaf-trim finisher.
    PcnsComp,
    /// `⌈ck⌉` buckets, Phase I stopped at `log2(n/k)`, DD finisher.
    PcnsDd,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Pcns16, Scheme::PcnsComp, Scheme::PcnsDd];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Pcns16 => "pcns16",
            Scheme::PcnsComp => "pcns-comp",
            Scheme::PcnsDd => "pcns-dd",
        }
    }

    pub fn has_leaf_trim(self) -> bool {
        !matches!(self, Scheme::PcnsDd)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pcns16" => Ok(Scheme::Pcns16),
            "pcns-comp" => Ok(Scheme::PcnsComp),
            "pcns-dd" => Ok(Scheme::PcnsDd),
            other => Err(ParamError::UnknownScheme(other.to_string())),
        }
    }
}

/// The flat test block used by the DD finisher.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DdBlock {
    /// Number of tests `T = ⌈ck·log2(2k/ε)⌉`.
    pub tests: u64,
    /// Hash rows per person `L = ⌈c·ln(2k/ε)⌉`.
    pub column_weight: u32,
}

/// Validated `(n, k, ε, scheme, seed)` with every derived constant.
///
/// Construct through [`SchemeParams::new`]; the fields are public for reading
/// and the value is never mutated by library code.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    pub n: u64,
    pub k: u64,
    pub epsilon: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub log2n: u32,
    pub log2k: u32,
    /// `1 / ln(2 − 4ε)`.
    pub c: f64,
    /// Buckets per Phase I level (and per Phase II row for the leaf-trim schemes).
    pub buckets: u64,
    pub phase1_levels: RangeInclusive<u32>,
    pub dd: Option<DdBlock>,
    /// Cap on prefixes placed on the grown watch list.
    pub prefix_budget: u64,
    /// Cap on hash evaluations across all decoding phases.
    pub hash_budget: u64,
}

fn log2_exact(name: &'static str, value: u64) -> Result<u32, ParamError> {
    if value.is_power_of_two() {
        Ok(value.trailing_zeros())
    } else {
        Err(ParamError::NotPowerOfTwo { name, value })
    }
}

impl SchemeParams {
    pub fn new(
        n: u64,
        k: u64,
        epsilon: f64,
        scheme: Scheme,
        seed: u64,
    ) -> Result<Self, ParamError> {
        let log2n = log2_exact("n", n)?;
        let log2k = log2_exact("k", k)?;
        if k < 2 || k > n / 4 {
            return Err(ParamError::KTooLarge { n, k });
        }
        if !(epsilon > 0.0 && epsilon < 0.125) {
            return Err(ParamError::EpsilonOutOfRange(epsilon));
        }
        if scheme == Scheme::PcnsDd && 2 * log2k >= log2n {
            return Err(ParamError::ThetaTooLarge { n, k });
        }

        let c = 1.0 / (2.0 - 4.0 * epsilon).ln();
        let kf = k as f64;
        let buckets = match scheme {
            Scheme::Pcns16 => 16 * k,
            Scheme::PcnsComp | Scheme::PcnsDd => (c * kf).ceil() as u64,
        };
        debug_assert!(c > std::f64::consts::LOG2_E);
        debug_assert!(buckets > k);

        let phase1_end = match scheme {
            Scheme::PcnsDd => log2n - log2k,
            _ => log2n,
        };
        let dd = (scheme == Scheme::PcnsDd).then(|| {
            let ratio = 2.0 * kf / epsilon;
            DdBlock {
                tests: (c * kf * ratio.log2()).ceil() as u64,
                column_weight: (c * ratio.ln()).ceil() as u32,
            }
        });

        let k_log2n = kf * f64::from(log2n);
        let hash_budget = (k_log2n / (epsilon * epsilon)).ceil() as u64;
        let prefix_budget = match scheme {
            Scheme::Pcns16 => 3 * k * u64::from(log2n),
            Scheme::PcnsComp | Scheme::PcnsDd => hash_budget,
        };

        Ok(Self {
            n,
            k,
            epsilon,
            scheme,
            seed,
            log2n,
            log2k,
            c,
            buckets,
            phase1_levels: (log2k + 1)..=phase1_end,
            dd,
            prefix_budget,
            hash_budget,
        })
    }

    /// Replaces the operation budgets, keeping every other field.
    pub fn with_budgets(mut self, prefix_budget: Option<u64>, hash_budget: Option<u64>) -> Self {
        if let Some(b) = prefix_budget {
            self.prefix_budget = b;
        }
        if let Some(b) = hash_budget {
            self.hash_budget = b;
        }
        self
    }

    /// Same parameters under a different seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// Sparsity `θ = ln k / ln n`.
    pub fn theta(&self) -> f64 {
        f64::from(self.log2k) / f64::from(self.log2n)
    }

    /// Level at which grow-and-prune stops.
    pub fn stop_level(&self) -> u32 {
        *self.phase1_levels.end()
    }

    pub fn phase1_level_count(&self) -> u32 {
        self.stop_level() - self.log2k
    }

    /// Prefix survival probability of the branching law behind the analysis:
    /// `1/16` for PCNS16, `1/2 − ε` otherwise.
    pub fn survival_probability(&self) -> f64 {
        match self.scheme {
            Scheme::Pcns16 => 1.0 / 16.0,
            _ => 0.5 - self.epsilon,
        }
    }
}
