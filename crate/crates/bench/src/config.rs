use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use splitgt_core::{Scheme, SchemeParams};

use crate::BenchError;

/// Decoder selected on the command line. The two baselines run on the
/// explicit matrix of the corresponding fast design: `comp` on PCNS-COMP's,
/// `dd` on PCNS-DD's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decoder {
    Pcns16,
    PcnsComp,
    PcnsDd,
    Comp,
    Dd,
}

impl Decoder {
    pub fn scheme(self) -> Scheme {
        match self {
            Decoder::Pcns16 => Scheme::Pcns16,
            Decoder::PcnsComp | Decoder::Comp => Scheme::PcnsComp,
            Decoder::PcnsDd | Decoder::Dd => Scheme::PcnsDd,
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, Decoder::Comp | Decoder::Dd)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decoder::Pcns16 => "pcns16",
            Decoder::PcnsComp => "pcns-comp",
            Decoder::PcnsDd => "pcns-dd",
            Decoder::Comp => "comp",
            Decoder::Dd => "dd",
        }
    }
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decoder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pcns16" => Ok(Decoder::Pcns16),
            "pcns-comp" => Ok(Decoder::PcnsComp),
            "pcns-dd" => Ok(Decoder::PcnsDd),
            "comp" => Ok(Decoder::Comp),
            "dd" => Ok(Decoder::Dd),
            other => Err(format!("unknown scheme `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub decoder: Decoder,
    pub n: u64,
    pub k: u64,
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub force_empty_infection: bool,
    pub budget_prefix: Option<u64>,
    pub budget_hash: Option<u64>,
    /// Fill the `micros` column with measured wall time. Off by default so
    /// that repeated runs produce identical files.
    pub wall_time: bool,
}

impl ExperimentConfig {
    pub fn new(decoder: Decoder, n: u64, k: u64, epsilon: f64, trials: u64, seed: u64) -> Self {
        Self {
            decoder,
            n,
            k,
            epsilon,
            trials,
            seed,
            out: None,
            format: OutputFormat::Csv,
            force_empty_infection: false,
            budget_prefix: None,
            budget_hash: None,
            wall_time: false,
        }
    }

    pub fn params(&self) -> Result<SchemeParams, BenchError> {
        if self.trials == 0 {
            return Err(BenchError::NoTrials);
        }
        Ok(SchemeParams::new(self.n, self.k, self.epsilon, self.decoder.scheme(), self.seed)?
            .with_budgets(self.budget_prefix, self.budget_hash))
    }
}
