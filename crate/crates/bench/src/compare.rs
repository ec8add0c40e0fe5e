use serde::Serialize;
use splitgt_core::analysis::{
    chernoff_tail, excess_threshold, BranchingLaw, Majorant, F_mean,
};

use crate::config::ExperimentConfig;
use crate::experiment::{run_experiment, ExperimentResult, Summary};
use crate::BenchError;

/// Empirical excess statistics at one Phase I level next to the analytic
/// predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    /// Prefix length of the grown list.
    pub level: u32,
    pub samples: u64,
    pub empirical_mean: f64,
    pub std_error: f64,
    pub recurrence_mean: f64,
    pub threshold: f64,
    pub tail_frequency: f64,
    pub chernoff_ln: f64,
    pub chernoff_vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub summary: Summary,
    pub survival_probability: f64,
    pub rows: Vec<LevelRow>,
    pub handled_prefix_mean: f64,
    pub handled_prefix_std_error: f64,
    /// `(1 + 1/(1 − 2a))·k·levels`.
    pub handled_prefix_prediction: f64,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Builds the comparison from an already-run fast-scheme experiment.
pub fn analytic_report(result: &ExperimentResult) -> AnalyticReport {
    let p = &result.params;
    let law = BranchingLaw::for_params(p);
    let threshold = excess_threshold(&law, p.k);
    let q = match law.majorant() {
        Majorant::FixesSix => 5.0,
        Majorant::FixesThree => 2.0,
    };

    let rows = (1..=p.phase1_level_count())
        .map(|i| {
            let samples: Vec<f64> = result
                .records
                .iter()
                .filter_map(|r| r.grown_excess.get(i as usize - 1))
                .map(|&e| e as f64)
                .collect();
            let (empirical_mean, std_error) = mean_and_se(&samples);
            let hits = samples.iter().filter(|&&e| e >= threshold).count();
            let tail = chernoff_tail(&law, p.k, i, q, threshold);
            LevelRow {
                level: p.log2k + i,
                samples: samples.len() as u64,
                empirical_mean,
                std_error,
                recurrence_mean: F_mean(&law, p.k, i),
                threshold,
                tail_frequency: hits as f64 / samples.len().max(1) as f64,
                chernoff_ln: tail.ln_value,
                chernoff_vacuous: tail.is_vacuous(),
            }
        })
        .collect();

    // Only count trials that ran Phase I to the end.
    let full = p.phase1_level_count() as usize;
    let prefixes: Vec<f64> = result
        .records
        .iter()
        .filter(|r| !r.is_tle() && r.grown_excess.len() == full)
        .map(|r| r.prefixes as f64)
        .collect();
    let (handled_prefix_mean, handled_prefix_std_error) = mean_and_se(&prefixes);
    let a = law.a();
    let handled_prefix_prediction = (1.0 + 1.0 / (1.0 - 2.0 * a)) * p.k as f64 * full as f64;

    AnalyticReport {
        summary: result.summary.clone(),
        survival_probability: a,
        rows,
        handled_prefix_mean,
        handled_prefix_std_error,
        handled_prefix_prediction,
    }
}

/// Runs the experiment and compares its per-level list sizes with the
/// branching-process predictions. Only meaningful for the fast schemes.
pub fn compare_analytic(config: &ExperimentConfig) -> Result<AnalyticReport, BenchError> {
    if config.decoder.is_baseline() {
        return Err(BenchError::Unsupported(config.decoder.as_str()));
    }
    Ok(analytic_report(&run_experiment(config)?))
}
