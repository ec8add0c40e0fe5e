//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splitgt_bench::compare::compare_analytic;
use splitgt_bench::{run_experiment, Decoder, ExperimentConfig};
use splitgt_core::analysis::{
    h_inf_derivative, h_inf_eval, ln_f_product, ln_f_recurrence, moebius_iterate,
    total_progeny_pmf, total_progeny_pmf_exact, BranchingLaw, F_mean,
};
use splitgt_core::baseline::{comp_baseline, dd_baseline};
use splitgt_core::{
    export_matrix, sample_infection, simulate_outcomes, test_count, trial_seed, InfectionVector,
    Scheme, SchemeParams, SparseMatrix,
};

type Outcome = Result<String, String>;

/// Name, optional runtime limit in seconds, check.
type Criterion = (&'static str, Option<f64>, fn() -> Outcome);

fn check(cond: bool, ok: impl Into<String>, fail: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(fail.into())
    }
}

fn timed(limit_secs: Option<f64>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f();
    let secs = start.elapsed().as_secs_f64();
    match (out, limit_secs) {
        (Ok(msg), Some(limit)) if secs >= limit => Err(format!("{msg}; took {secs:.3}s, limit {limit}s")),
        (Ok(msg), _) => Ok(format!("{msg} [{secs:.2}s]")),
        (Err(msg), _) => Err(format!("{msg} [{secs:.2}s]")),
    }
}

// ---------------------------------------------------------------------------

fn test_count_identities() -> Outcome {
    let mut checked = 0;
    for log2n in 8..=20u32 {
        for log2k in 2..=8u32 {
            for eps in [0.01f64, 0.02, 0.05, 0.1] {
                let (n, k) = (1u64 << log2n, 1u64 << log2k);
                let (kf, nf) = (k as f64, n as f64);
                let c = 1.0 / (2.0 - 4.0 * eps).ln();
                let ck = (c * kf).ceil() as u64;
                for scheme in Scheme::ALL {
                    let Ok(p) = SchemeParams::new(n, k, eps, scheme, 1) else {
                        continue;
                    };
                    let m = test_count(&p).m;
                    let expected = match scheme {
                        Scheme::Pcns16 => 16 * k * u64::from(log2n),
                        Scheme::PcnsComp => ck * u64::from(log2n),
                        Scheme::PcnsDd => {
                            let dd_tests = (c * kf * (2.0 * kf / eps).log2()).ceil() as u64;
                            // exact-arithmetic identity behind the DD count
                            let split = c * kf * (nf / (kf * kf)).log2() + c * kf * (2.0 * kf / eps).log2();
                            let whole = c * kf * (2.0 * nf / (eps * kf)).log2();
                            if (split - whole).abs() > 1e-9 * whole {
                                return Err(format!("identity fails at n={n} k={k} eps={eps}"));
                            }
                            // the two ceilings add at most one test per Phase I level plus one
                            let slack = m as f64 - whole;
                            let levels = f64::from(log2n - 2 * log2k);
                            if !(slack >= -1e-9 && slack <= levels + 1.0) {
                                return Err(format!("dd count {m} vs {whole:.2} at n={n} k={k} eps={eps}"));
                            }
                            ck * u64::from(log2n - 2 * log2k) + dd_tests
                        }
                    };
                    if m != expected {
                        return Err(format!("{scheme} n={n} k={k} eps={eps}: m={m}, expected {expected}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    let p = SchemeParams::new(1024, 16, 0.05, Scheme::Pcns16, 0).unwrap();
    check(test_count(&p).m == 2560, format!("{checked} (scheme,n,k,eps) points"), "n=1024 k=16 pcns16 != 2560")
}

fn no_false_negatives() -> Outcome {
    let mut notes = Vec::new();
    for decoder in [Decoder::Pcns16, Decoder::PcnsComp] {
        for k in [16, 64] {
            let cfg = ExperimentConfig::new(decoder, 1 << 14, k, 0.05, 10_000, 0xA2 + k);
            let r = run_experiment(&cfg).map_err(|e| e.to_string())?;
            let fns = r.summary.false_negative_total;
            if fns != 0 {
                return Err(format!("{decoder} k={k}: {fns} false negatives"));
            }
            notes.push(format!("{decoder} k={k} wa={:.4}", r.summary.wa_rate));
        }
    }
    Ok(format!("0 false negatives in 4x10^4 trials ({})", notes.join(", ")))
}

fn no_false_positives() -> Outcome {
    let mut notes = Vec::new();
    for k in [8, 16] {
        let cfg = ExperimentConfig::new(Decoder::PcnsDd, 1 << 16, k, 0.05, 10_000, 0xA3 + k);
        let r = run_experiment(&cfg).map_err(|e| e.to_string())?;
        let fps = r.summary.false_positive_total;
        if fps != 0 {
            return Err(format!("pcns-dd k={k}: {fps} false positives"));
        }
        notes.push(format!("k={k} wa={:.4} tle={}", r.summary.wa_rate, r.summary.tle_rate));
    }
    Ok(format!("0 false positives in 2x10^4 trials ({})", notes.join(", ")))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

fn analytic_exactness() -> Outcome {
    // Iterates of the 1/16 majorant q -> 6/(7 - q) from q = 5.
    let law = BranchingLaw::pcns16();
    let mut q = 5.0f64;
    for i in 0..=60u32 {
        let formula = 1.0 + 20.0 / (6f64.powi(i as i32) + 4.0);
        let closed = moebius_iterate(&law, i, 5.0).map_err(|e| e.to_string())?;
        if !rel_close(closed, q, 1e-12) || !rel_close(formula, q, 1e-12) {
            return Err(format!("1/16 iterate {i}: closed {closed}, formula {formula}, numeric {q}"));
        }
        q = 6.0 / (7.0 - q);
    }
    // Iterates of the COMP-law majorant from q = 2.
    for eps in [0.01, 0.05, 0.1] {
        let law = BranchingLaw::comp(eps).map_err(|e| e.to_string())?;
        let mut q = 2.0f64;
        for i in 0..=60u32 {
            let formula = 1.0 + 2.0 / (1.0 + (1.0 + 2.0 * eps).powi(i as i32));
            let closed = moebius_iterate(&law, i, 2.0).map_err(|e| e.to_string())?;
            if !rel_close(closed, q, 1e-12) || !rel_close(formula, q, 1e-12) {
                return Err(format!("eps {eps} iterate {i}: closed {closed}, formula {formula}, numeric {q}"));
            }
            q = moebius_iterate(&law, 1, q).map_err(|e| e.to_string())?;
        }
    }
    // Recurrence against product form.
    for law in [BranchingLaw::pcns16(), BranchingLaw::comp(0.05).unwrap()] {
        for k in [4u64, 16, 64] {
            for levels in 0..=12 {
                for q in [1.0, 1.05, 1.5, 2.0] {
                    let (r, p) = (ln_f_recurrence(&law, k, levels, q), ln_f_product(&law, k, levels, q));
                    // |e^{r−p} − 1| ≤ 1e−10 on F itself; relative on ln F once F overflows
                    let tol = if p < f64::MAX.ln() { 1e-10 } else { 1e-10 * p };
                    if (r - p).abs() > tol {
                        return Err(format!("F recurrence {r} vs product {p} (a {} k {k} l {levels} q {q})", law.a()));
                    }
                }
            }
        }
    }
    let law = BranchingLaw::pcns16();
    let h2 = h_inf_eval(&law, 2.0).map_err(|e| e.to_string())?;
    let d1 = h_inf_derivative(&law, 1.0).map_err(|e| e.to_string())?;
    if !rel_close(h2, 3.0, 1e-12) || !rel_close(d1, 8.0 / 7.0, 1e-12) {
        return Err(format!("h(2) = {h2}, h'(1) = {d1}"));
    }
    let a = BigRational::new(BigInt::from(1), BigInt::from(16));
    let p1 = total_progeny_pmf_exact(&a, 1);
    let p3 = total_progeny_pmf_exact(&a, 3);
    check(
        p1 == BigRational::new(15.into(), 16.into()) && p3 == BigRational::new(225.into(), 4096.into()),
        "Moebius iterates, F forms, h, h', Dwass pmf exact",
        format!("pmf(1) = {p1}, pmf(3) = {p3}"),
    )
}

fn dwass_vs_simulation() -> Outcome {
    let runs = 1_000_000u64;
    let mut worst = 0.0f64;
    for (seed, a) in [(51u64, 1.0 / 16.0), (52, 0.45)] {
        let law = BranchingLaw::new(a).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = [0u64; 10];
        for _ in 0..runs {
            let (mut total, mut pending) = (0u64, 1u64);
            while pending > 0 && total < 10 {
                pending -= 1;
                total += 1;
                if rng.gen_bool(a) {
                    pending += 2;
                }
            }
            if pending == 0 {
                counts[total as usize] += 1;
            }
        }
        for m in [1usize, 3, 5, 7, 9] {
            let p = total_progeny_pmf(&law, m as u64);
            let sigma = (p * (1.0 - p) / runs as f64).sqrt();
            let z = (counts[m] as f64 / runs as f64 - p).abs() / sigma;
            worst = worst.max(z);
            if z > 4.0 {
                return Err(format!("a={a} m={m}: {z:.2} sigma off"));
            }
        }
    }
    Ok(format!("max deviation {worst:.2} sigma over 2x10^6 runs"))
}

fn outcome_equivalence() -> Outcome {
    for scheme in Scheme::ALL {
        let p = SchemeParams::new(256, 4, 0.05, scheme, 0xA6).map_err(|e| e.to_string())?;
        let g = export_matrix(&p).map_err(|e| e.to_string())?;
        for t in 0..100 {
            let x = sample_infection(&p, trial_seed(p.seed, t));
            if simulate_outcomes(&p, &x).to_vector() != g.or_product(&x) {
                return Err(format!("{scheme} trial {t} differs"));
            }
        }
    }
    Ok("3 schemes x 100 trials agree test by test".into())
}

fn list_size_statistics() -> Outcome {
    let cfg = ExperimentConfig::new(Decoder::Pcns16, 1 << 14, 16, 0.05, 10_000, 0xA7);
    let report = compare_analytic(&cfg).map_err(|e| e.to_string())?;
    let last = report.rows.last().ok_or("no levels")?;
    let trials = last.samples as f64;
    let z = (last.empirical_mean - last.recurrence_mean).abs() / last.std_error;
    if z > 5.0 {
        return Err(format!(
            "final-level mean {:.4} vs recurrence {:.4}: {z:.2} standard errors",
            last.empirical_mean, last.recurrence_mean
        ));
    }
    let cap = (-16.0f64).exp();
    let slack = 4.0 * (cap * (1.0 - cap) / trials).sqrt();
    if last.tail_frequency > cap + slack {
        return Err(format!("Pr(N >= 5k) = {} exceeds e^-k + 4 sigma", last.tail_frequency));
    }
    let bound = report.summary.wa_probability_bound.ok_or("missing WA bound")?;
    let wa = report.summary.wa_rate;
    if bound < 1.0 {
        let slack = 4.0 * (bound * (1.0 - bound) / trials).sqrt();
        if wa > bound + slack {
            return Err(format!("WA rate {wa} exceeds bound {bound:.3e} + 4 sigma"));
        }
    }
    Ok(format!(
        "mean {:.3} vs {:.3} ({z:.2} se), tail {}, WA {wa} <= {bound:.2e}",
        last.empirical_mean, last.recurrence_mean, last.tail_frequency
    ))
}

fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// Expected handled prefixes from the list-size recurrence: each Phase I
/// level grows `k + N_ℓ` prefixes.
fn predicted_prefixes(p: &SchemeParams) -> f64 {
    let law = BranchingLaw::for_params(p);
    (1..=p.phase1_level_count()).map(|i| p.k as f64 + F_mean(&law, p.k, i)).sum()
}

fn complexity_scaling() -> Outcome {
    let mut notes = Vec::new();
    for decoder in [Decoder::Pcns16, Decoder::PcnsComp, Decoder::PcnsDd] {
        let (mut xs, mut ys, mut predicted) = (Vec::new(), Vec::new(), Vec::new());
        for log2n in (10..=20u32).step_by(2) {
            let cfg = ExperimentConfig::new(decoder, 1 << log2n, 16, 0.05, 10_000, 0xA8 + u64::from(log2n));
            let r = run_experiment(&cfg).map_err(|e| e.to_string())?;
            if r.summary.tle_rate != 0.0 {
                return Err(format!("{decoder} n=2^{log2n}: TLE rate {}", r.summary.tle_rate));
            }
            xs.push(f64::from(log2n));
            ys.push(r.summary.mean_prefixes);
            predicted.push(predicted_prefixes(&r.params));
        }
        let r2 = r_squared(&xs, &ys);
        // The TLE caps n^-k and 2n^-k of the linear-cost claim belong to the
        // two leaf-trim schemes. PCNS-DD (survival 1/2 - eps, Phase I of only
        // log2 n - 2 log2 k levels) is still in the transient of its list-size
        // recurrence over this range, so its fit is reported, not gated.
        if decoder != Decoder::PcnsDd && !(r2 > 0.99 && ys.last() > ys.first()) {
            return Err(format!("{decoder}: R^2 = {r2:.5}, prefixes {ys:?}"));
        }
        notes.push(format!("{decoder} R^2={r2:.5} (recurrence predicts {:.5})", r_squared(&xs, &predicted)));
    }
    Ok(format!("no TLE in 18x10^4 trials; {}", notes.join(", ")))
}

fn baseline_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA9);
    let rows: Vec<Vec<u32>> =
        (0..24).map(|_| (0..16u32).filter(|_| rng.gen_bool(0.25)).collect()).collect();
    let g = SparseMatrix::from_rows(16, rows);
    let mut sets = 0;
    for i in 0..16u64 {
        for j in i + 1..16 {
            let x = InfectionVector::new(vec![i, j], 16, 2).map_err(|e| e.to_string())?;
            let y = g.or_product(&x);
            let comp = comp_baseline(&g, &y).map_err(|e| e.to_string())?;
            let dd = dd_baseline(&g, &y).map_err(|e| e.to_string())?;
            if !x.labels().iter().all(|s| comp.contains(s)) {
                return Err(format!("COMP misses an infected item of {{{i},{j}}}: {comp:?}"));
            }
            if !dd.iter().all(|&s| x.contains(s)) {
                return Err(format!("DD declares an innocent for {{{i},{j}}}: {dd:?}"));
            }
            sets += 1;
        }
    }
    check(sets == 120, format!("{sets} infection sets"), format!("only {sets} sets"))
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("splitgt-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let run = |args: &[&str], out: &PathBuf| -> Result<Vec<u8>, String> {
        let status = Command::new(env!("CARGO_BIN_EXE_splitgt"))
            .arg("simulate")
            .args(args)
            .arg("--out")
            .arg(out)
            .stderr(std::process::Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("simulate {args:?} failed"));
        }
        std::fs::read(out).map_err(|e| e.to_string())
    };
    let cases: [&[&str]; 5] = [
        &["--scheme", "pcns16", "--n", "4096", "--k", "16", "--trials", "500", "--seed", "9"],
        &["--scheme", "pcns-comp", "--n", "4096", "--k", "8", "--trials", "500", "--format", "json"],
        &["--scheme", "pcns-dd", "--n", "65536", "--k", "16", "--trials", "500", "--seed", "3"],
        &["--scheme", "comp", "--n", "1024", "--k", "4", "--trials", "200"],
        &["--scheme", "dd", "--n", "1024", "--k", "4", "--trials", "200", "--budget-hash", "10"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let a = run(args, &dir.join(format!("{i}-a")))?;
        let b = run(args, &dir.join(format!("{i}-b")))?;
        if a.is_empty() || a != b {
            let _ = std::fs::remove_dir_all(&dir);
            return Err(format!("simulate {args:?} output differs between runs"));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} invocations byte-identical on rerun", cases.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("test-count identities", Some(1.0), test_count_identities),
        ("no false negatives (PCNS16, PCNS-COMP)", None, no_false_negatives),
        ("no false positives (PCNS-DD)", None, no_false_positives),
        ("analytic closed forms", Some(1.0), analytic_exactness),
        ("total progeny vs branching simulation", None, dwass_vs_simulation),
        ("fast outcomes vs matrix product", None, outcome_equivalence),
        ("list-size statistics", None, list_size_statistics),
        ("decoding cost scales with log n", None, complexity_scaling),
        ("COMP/DD baseline sanity", None, baseline_sanity),
        ("simulate output is reproducible", None, determinism),
    ];
    let total = criteria.len();
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        match timed(limit, f) {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} of {total} criteria passed", total - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
