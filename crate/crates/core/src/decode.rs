//! Sublinear decoders: grow-and-prune over the prefix tree, then either
//! leaf-trimming (PCNS16, PCNS-COMP) or a DD finisher (PCNS-DD).
//!
//! Decoders only see the [`OutcomeTable`]; classification against the true
//! infection happens afterwards in [`DecodeReport::classify`].

use std::fmt;

use rustc_hash::FxHashMap;

use crate::design::{dd_bucket, phase1_bucket, phase2_bucket};
use crate::outcomes::OutcomeTable;
use crate::params::SchemeParams;
use crate::types::{InfectionVector, Prefix, TestId};

/// Work done by a decode run. All fields only ever grow.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub hashes: u64,
    /// Prefixes placed on the grown watch list.
    pub prefix_handled: u64,
    pub queries: u64,
    /// Distinct person-test edges in the DD bipartite graph.
    pub dd_edges: u64,
}

/// The operation budget ran out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tle {
    pub counters: OpCounters,
}

impl fmt::Display for Tle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "time limit exceeded after {} prefixes and {} hashes",
            self.counters.prefix_handled, self.counters.hashes
        )
    }
}

impl std::error::Error for Tle {}

struct Meter<'a> {
    counters: &'a mut OpCounters,
    prefix_budget: u64,
    hash_budget: u64,
}

impl<'a> Meter<'a> {
    fn new(params: &SchemeParams, counters: &'a mut OpCounters) -> Self {
        Self { counters, prefix_budget: params.prefix_budget, hash_budget: params.hash_budget }
    }

    fn tle(&self) -> Tle {
        Tle { counters: *self.counters }
    }

    #[inline]
    fn hash(&mut self) -> Result<(), Tle> {
        self.counters.hashes += 1;
        if self.counters.hashes > self.hash_budget {
            return Err(self.tle());
        }
        Ok(())
    }

    #[inline]
    fn prefix(&mut self) -> Result<(), Tle> {
        self.counters.prefix_handled += 1;
        if self.counters.prefix_handled > self.prefix_budget {
            return Err(self.tle());
        }
        Ok(())
    }

    #[inline]
    fn query(&mut self) {
        self.counters.queries += 1;
    }
}

/// The two watch lists of grow-and-prune.
///
/// `suspicious` holds prefixes of length `len`; `grown` holds their children
/// while a pruning pass is in progress.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WatchLists {
    pub suspicious: Vec<Prefix>,
    pub grown: Vec<Prefix>,
    pub len: u32,
}

impl WatchLists {
    /// Every prefix of length `len`.
    pub fn all_of_length(len: u32) -> Self {
        Self {
            suspicious: (0..(1u64 << len)).map(|v| Prefix::new(len, v)).collect(),
            grown: Vec::new(),
            len,
        }
    }
}

/// Result of Phase I.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseOne {
    /// Suspicious prefixes of length `stop_level`.
    pub suspects: Vec<Prefix>,
    /// `|W_g| − k` after each growing step, one entry per level.
    pub grown_excess: Vec<i64>,
}

/// Grows and prunes from length `log2 k` down to `stop_level`.
///
/// No infected prefix is ever pruned: its own test is positive.
pub fn grow_and_prune(
    params: &SchemeParams,
    table: &OutcomeTable,
    stop_level: u32,
    counters: &mut OpCounters,
) -> Result<PhaseOne, Tle> {
    assert!(
        stop_level >= params.log2k && stop_level <= params.stop_level(),
        "stop level {stop_level} outside Phase I"
    );
    let mut meter = Meter::new(params, counters);
    let mut lists = WatchLists::all_of_length(params.log2k);
    let k = params.k as i64;
    let mut grown_excess = Vec::with_capacity((stop_level - params.log2k) as usize);

    while lists.len < stop_level {
        lists.len += 1;
        lists.grown.clear();
        for p in lists.suspicious.drain(..) {
            for child in p.children() {
                meter.prefix()?;
                lists.grown.push(child);
            }
        }
        grown_excess.push(lists.grown.len() as i64 - k);

        for &q in &lists.grown {
            meter.hash()?;
            meter.query();
            if table.is_positive(q.len, phase1_bucket(params, q)) {
                lists.suspicious.push(q);
            }
        }
    }
    Ok(PhaseOne { suspects: lists.suspicious, grown_excess })
}

/// Keeps the full-length suspects whose every leaf-trim test is positive.
pub fn leaf_trim(
    params: &SchemeParams,
    table: &OutcomeTable,
    suspects: &[Prefix],
    counters: &mut OpCounters,
) -> Result<Vec<u64>, Tle> {
    let mut meter = Meter::new(params, counters);
    let mut declared = Vec::with_capacity(suspects.len());
    'people: for s in suspects {
        debug_assert_eq!(s.len, params.log2n);
        for row in 1..=params.log2k {
            meter.hash()?;
            meter.query();
            if !table.is_positive(row, phase2_bucket(params, s.value, row)) {
                continue 'people;
            }
        }
        declared.push(s.value);
    }
    declared.sort_unstable();
    Ok(declared)
}

/// DD on every person included by the suspects.
///
/// 1. Build the bipartite graph candidates × DD tests.
/// 2. Drop candidates that sit in any negative test.
/// 3. Declare the sole remaining member of each degree-one test.
pub fn dd_finish(
    params: &SchemeParams,
    table: &OutcomeTable,
    suspects: &[Prefix],
    counters: &mut OpCounters,
) -> Result<Vec<u64>, Tle> {
    let dd = params.dd.expect("dd_finish needs the PCNS-DD layout");
    let mut meter = Meter::new(params, counters);

    let mut survivors: Vec<(u64, Vec<u64>)> = Vec::new();
    let mut tests = Vec::with_capacity(dd.column_weight as usize);
    for p in suspects {
        'candidates: for person in p.persons(params.log2n) {
            tests.clear();
            for row in 1..=dd.column_weight {
                meter.hash()?;
                tests.push(dd_bucket(params, &dd, person, row));
            }
            tests.sort_unstable();
            tests.dedup();
            meter.counters.dd_edges += tests.len() as u64;

            for &t in &tests {
                meter.query();
                if !table.is_positive(TestId::DD_BLOCK, t) {
                    continue 'candidates;
                }
            }
            survivors.push((person, tests.clone()));
        }
    }

    // test -> (remaining degree, last member seen)
    let mut degree: FxHashMap<u64, (u32, u64)> = FxHashMap::default();
    for (person, tests) in &survivors {
        for &t in tests {
            let e = degree.entry(t).or_insert((0, *person));
            e.0 += 1;
            e.1 = *person;
        }
    }
    let mut singletons: Vec<(u64, u64)> = degree
        .into_iter()
        .filter(|&(_, (d, _))| d == 1)
        .map(|(t, (_, person))| (t, person))
        .collect();
    singletons.sort_unstable();
    let mut declared: Vec<u64> = singletons.into_iter().map(|(_, person)| person).collect();
    declared.sort_unstable();
    declared.dedup();
    Ok(declared)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Exact,
    WaFalsePositive,
    WaFalseNegative,
    Tle,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Exact => "EXACT",
            Status::WaFalsePositive => "WA_FALSE_POSITIVE",
            Status::WaFalseNegative => "WA_FALSE_NEGATIVE",
            Status::Tle => "TLE",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ground-truth classification of a decode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub false_positives: u64,
    pub false_negatives: u64,
}

impl Verdict {
    /// Compares a declared set (sorted) against the truth. A run with both
    /// error kinds is reported as a false negative.
    pub fn of(declared: &[u64], truth: &InfectionVector, tle: bool) -> Self {
        let false_positives = declared.iter().filter(|&&s| !truth.contains(s)).count() as u64;
        let false_negatives = truth
            .labels()
            .iter()
            .filter(|s| declared.binary_search(s).is_err())
            .count() as u64;
        let status = if tle {
            Status::Tle
        } else if false_negatives > 0 {
            Status::WaFalseNegative
        } else if false_positives > 0 {
            Status::WaFalsePositive
        } else {
            Status::Exact
        };
        Self { status, false_positives, false_negatives }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeReport {
    /// Declared infected labels, sorted. Empty on TLE.
    pub declared: Vec<u64>,
    pub tle: bool,
    pub counters: OpCounters,
    /// `|W_p| − k` when Phase I stopped.
    pub final_list_excess: i64,
    /// `|W_g| − k` per Phase I level.
    pub grown_excess: Vec<i64>,
}

impl DecodeReport {
    pub fn classify(&self, truth: &InfectionVector) -> Verdict {
        Verdict::of(&self.declared, truth, self.tle)
    }
}

/// Full pipeline for the scheme in `params`.
pub fn decode(params: &SchemeParams, table: &OutcomeTable) -> DecodeReport {
    let mut counters = OpCounters::default();
    let k = params.k as i64;
    let phase1 = match grow_and_prune(params, table, params.stop_level(), &mut counters) {
        Ok(p) => p,
        Err(tle) => return tle_report(tle, 0, Vec::new()),
    };
    let final_list_excess = phase1.suspects.len() as i64 - k;
    let finished = if params.dd.is_some() {
        dd_finish(params, table, &phase1.suspects, &mut counters)
    } else {
        leaf_trim(params, table, &phase1.suspects, &mut counters)
    };
    match finished {
        Ok(declared) => DecodeReport {
            declared,
            tle: false,
            counters,
            final_list_excess,
            grown_excess: phase1.grown_excess,
        },
        Err(tle) => tle_report(tle, final_list_excess, phase1.grown_excess),
    }
}

fn tle_report(tle: Tle, final_list_excess: i64, grown_excess: Vec<i64>) -> DecodeReport {
    DecodeReport {
        declared: Vec::new(),
        tle: true,
        counters: tle.counters,
        final_list_excess,
        grown_excess,
    }
}
