use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use splitgt_core::analysis::{info_bound, wa_probability_bound};
use splitgt_core::baseline::{comp_baseline, dd_baseline};
use splitgt_core::{
    decode, export_matrix, sample_infection, simulate_outcomes, test_count, trial_seed,
    InfectionVector, SchemeParams, SparseMatrix, Status, Verdict,
};

use crate::config::{Decoder, ExperimentConfig, OutputFormat};
use crate::BenchError;

/// One row of the per-trial output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub status: &'static str,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// `|W_p| − k` when Phase I stopped; 0 for the matrix baselines.
    pub excess: i64,
    pub hashes: u64,
    pub prefixes: u64,
    pub queries: u64,
    /// Wall time in microseconds, or 0 unless timing was requested.
    pub micros: u64,
    /// `|W_g| − k` per Phase I level; kept in memory for the analytic
    /// comparison, not written out.
    #[serde(skip)]
    pub grown_excess: Vec<i64>,
}

impl TrialRecord {
    pub fn is_wrong(&self) -> bool {
        self.status == Status::WaFalsePositive.as_str() || self.status == Status::WaFalseNegative.as_str()
    }

    pub fn is_tle(&self) -> bool {
        self.status == Status::Tle.as_str()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scheme: Decoder,
    pub n: u64,
    pub k: u64,
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    pub wa_rate: f64,
    pub tle_rate: f64,
    pub false_positive_total: u64,
    pub false_negative_total: u64,
    pub mean_excess: f64,
    pub max_excess: i64,
    pub mean_prefixes: f64,
    pub m: u64,
    pub theorem_estimate: f64,
    /// Composed bound on the wrong-answer probability; absent for the baselines.
    pub wa_probability_bound: Option<f64>,
    pub info_bound: f64,
}

impl Summary {
    /// Aggregates a set of trial records.
    pub fn from_records(decoder: Decoder, params: &SchemeParams, records: &[TrialRecord]) -> Self {
        let trials = records.len() as u64;
        let denom = trials.max(1) as f64;
        let count = |pred: fn(&TrialRecord) -> bool| records.iter().filter(|r| pred(r)).count() as f64;
        let tc = test_count(params);
        let wa_bound = (!decoder.is_baseline()).then(|| wa_probability_bound(params).total());
        Self {
            scheme: decoder,
            n: params.n,
            k: params.k,
            epsilon: params.epsilon,
            trials,
            seed: params.seed,
            wa_rate: count(TrialRecord::is_wrong) / denom,
            tle_rate: count(TrialRecord::is_tle) / denom,
            false_positive_total: records.iter().map(|r| r.fp).sum(),
            false_negative_total: records.iter().map(|r| r.fn_).sum(),
            mean_excess: records.iter().map(|r| r.excess as f64).sum::<f64>() / denom,
            max_excess: records.iter().map(|r| r.excess).max().unwrap_or(0),
            mean_prefixes: records.iter().map(|r| r.prefixes as f64).sum::<f64>() / denom,
            m: tc.m,
            theorem_estimate: tc.theorem_estimate,
            wa_probability_bound: wa_bound,
            info_bound: info_bound(params.n, params.k),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub params: SchemeParams,
    pub summary: Summary,
    pub records: Vec<TrialRecord>,
}

impl ExperimentResult {
    pub fn write_records<W: Write>(&self, format: OutputFormat, w: W) -> Result<(), BenchError> {
        match format {
            OutputFormat::Csv => {
                let mut out = csv::Writer::from_writer(w);
                for r in &self.records {
                    out.serialize(r)?;
                }
                out.flush()?;
            }
            OutputFormat::Json => {
                #[derive(Serialize)]
                struct Doc<'a> {
                    summary: &'a Summary,
                    records: &'a [TrialRecord],
                }
                let mut w = w;
                serde_json::to_writer_pretty(&mut w, &Doc { summary: &self.summary, records: &self.records })?;
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

enum Runner {
    Fast,
    Matrix { matrix: SparseMatrix, dd: bool },
}

fn run_trial(
    runner: &Runner,
    params: &SchemeParams,
    config: &ExperimentConfig,
    trial: u64,
) -> TrialRecord {
    let x = if config.force_empty_infection {
        InfectionVector::empty()
    } else {
        sample_infection(params, trial_seed(params.seed, trial))
    };
    let start = config.wall_time.then(Instant::now);
    let (verdict, excess, hashes, prefixes, queries, grown_excess) = match runner {
        Runner::Fast => {
            let table = simulate_outcomes(params, &x);
            let report = decode(params, &table);
            let c = report.counters;
            (
                report.classify(&x),
                report.final_list_excess,
                c.hashes,
                c.prefix_handled,
                c.queries,
                report.grown_excess,
            )
        }
        Runner::Matrix { matrix, dd } => {
            let y = matrix.or_product(&x);
            let declared = if *dd { dd_baseline(matrix, &y) } else { comp_baseline(matrix, &y) }
                .expect("outcome vector has one entry per row");
            (Verdict::of(&declared, &x, false), 0, 0, 0, matrix.m() as u64, Vec::new())
        }
    };
    let micros = start.map_or(0, |s| s.elapsed().as_micros() as u64);
    TrialRecord {
        trial,
        status: verdict.status.as_str(),
        fp: verdict.false_positives,
        fn_: verdict.false_negatives,
        excess,
        hashes,
        prefixes,
        queries,
        micros,
        grown_excess,
    }
}

/// Runs `config.trials` independent trials in parallel. Trial `i` draws its
/// infection from `trial_seed(seed, i)`; records come back in trial order, so
/// the result does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, BenchError> {
    let params = config.params()?;
    let runner = match config.decoder {
        Decoder::Comp => Runner::Matrix { matrix: export_matrix(&params)?, dd: false },
        Decoder::Dd => Runner::Matrix { matrix: export_matrix(&params)?, dd: true },
        _ => Runner::Fast,
    };
    let records: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(&runner, &params, config, t))
        .collect();
    let summary = Summary::from_records(config.decoder, &params, &records);
    Ok(ExperimentResult { params, summary, records })
}
