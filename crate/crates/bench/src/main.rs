use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use splitgt_bench::compare::compare_analytic;
use splitgt_bench::rates::rate_sweep;
use splitgt_bench::{run_experiment, BenchError, Decoder, ExperimentConfig, OutputFormat};
use splitgt_core::design::FinisherBlock;
use splitgt_core::{export_matrix, test_count, DesignLayout};

#[derive(Parser)]
#[command(name = "splitgt", about = "Fast splitting group-testing schemes: designs, simulation and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the test layout, the exact test count and the theorem estimate.
    Design(Common),
    /// Run Monte Carlo trials and write one record per trial.
    Simulate(Common),
    /// Compare per-level list sizes with the branching-process predictions.
    Analyze(Common),
    /// Emit tests/(k ln n) against θ for every admissible k at the given n.
    Rates(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "pcns16")]
    scheme: Decoder,
    #[arg(long, default_value_t = 1 << 14)]
    n: u64,
    #[arg(long, default_value_t = 16)]
    k: u64,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Decode the all-negative outcome vector instead of sampling infections.
    #[arg(long)]
    force_empty_infection: bool,
    #[arg(long)]
    budget_prefix: Option<u64>,
    #[arg(long)]
    budget_hash: Option<u64>,
    /// Record per-trial wall time (makes output non-reproducible).
    #[arg(long)]
    wall_time: bool,
}

impl Common {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            decoder: self.scheme,
            n: self.n,
            k: self.k,
            epsilon: self.epsilon,
            trials: self.trials,
            seed: self.seed,
            out: self.out.clone(),
            format: self.format,
            force_empty_infection: self.force_empty_infection,
            budget_prefix: self.budget_prefix,
            budget_hash: self.budget_hash,
            wall_time: self.wall_time,
        }
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, BenchError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn design(cfg: &ExperimentConfig) -> Result<(), BenchError> {
    let p = cfg.params()?;
    let layout = DesignLayout::new(&p);
    let tc = test_count(&p);
    println!("scheme            {}", cfg.decoder);
    println!("n, k, epsilon     {}, {}, {}", p.n, p.k, p.epsilon);
    println!("buckets           {}", p.buckets);
    println!(
        "phase I           levels {}..={} ({} tests)",
        p.phase1_levels.start(),
        p.phase1_levels.end(),
        layout.phase1_tests
    );
    match &layout.finisher {
        FinisherBlock::LeafTrim { rows, buckets } => {
            println!("leaf trim         {rows} rows x {buckets} buckets")
        }
        FinisherBlock::Dd(dd) => {
            println!("dd block          {} tests, column weight {}", dd.tests, dd.column_weight)
        }
    }
    println!("m                 {}", tc.m);
    println!("theorem estimate  {:.3}", tc.theorem_estimate);
    println!("budgets           prefixes {}, hashes {}", p.prefix_budget, p.hash_budget);
    if let Some(path) = &cfg.out {
        let mut w = BufWriter::new(File::create(path)?);
        export_matrix(&p)?.write_text(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn simulate(cfg: &ExperimentConfig) -> Result<(), BenchError> {
    let result = run_experiment(cfg)?;
    let mut w = sink(&cfg.out)?;
    result.write_records(cfg.format, &mut w)?;
    w.flush()?;
    if cfg.out.is_some() || cfg.format == OutputFormat::Csv {
        eprintln!("{}", serde_json::to_string_pretty(&result.summary)?);
    }
    Ok(())
}

fn analyze(cfg: &ExperimentConfig) -> Result<(), BenchError> {
    let report = compare_analytic(cfg)?;
    let mut w = sink(&cfg.out)?;
    match cfg.format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
        }
        OutputFormat::Csv => {
            let mut out = csv::Writer::from_writer(&mut w);
            for row in &report.rows {
                out.serialize(row)?;
            }
            out.flush()?;
            drop(out);
            eprintln!(
                "handled prefixes: mean {:.3} (se {:.3}), predicted {:.3}",
                report.handled_prefix_mean, report.handled_prefix_std_error, report.handled_prefix_prediction
            );
        }
    }
    w.flush()?;
    Ok(())
}

fn rates(cfg: &ExperimentConfig) -> Result<(), BenchError> {
    let points = rate_sweep(cfg);
    let mut w = sink(&cfg.out)?;
    match cfg.format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, &points)?;
            writeln!(w)?;
        }
        OutputFormat::Csv => {
            let mut out = csv::Writer::from_writer(&mut w);
            for p in &points {
                out.serialize(p)?;
            }
            out.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design(c) => design(&c.config()),
        Command::Simulate(c) => simulate(&c.config()),
        Command::Analyze(c) => analyze(&c.config()),
        Command::Rates(c) => rates(&c.config()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
