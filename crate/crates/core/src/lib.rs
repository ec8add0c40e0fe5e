//! Fast-splitting nonadaptive group testing.
//!
//! A population of `n` persons is labelled by `log2 n`-bit strings. Tests are
//! assigned by hashing label prefixes, so the decoder can walk down the prefix
//! tree and only ever touch `O(k log n)` prefixes:
//!
//! * [`Scheme::Pcns16`]: `16k` buckets per level, grow-and-prune then leaf-trim.
//! * [`Scheme::PcnsComp`]: `⌈ck⌉` buckets per level with `c = 1/ln(2 − 4ε)`.
//! * [`Scheme::PcnsDd`]: grow-and-prune stopped at `log2(n/k)`, then a DD finisher
//!   on a flat hashed test block.
//!
//! The [`analysis`] module carries the closed-form predictions (generating
//! functions, Möbius iterates, total-progeny law, Chernoff tails) that the
//! Monte Carlo harness checks simulations against.

pub mod analysis;
pub mod baseline;
pub mod decode;
pub mod design;
pub mod hash;
pub mod outcomes;
pub mod params;
pub mod types;

pub use decode::{decode, DecodeReport, OpCounters, Status, Verdict};
pub use design::{export_matrix, test_count, DesignLayout, SparseMatrix};
pub use hash::hash64;
pub use outcomes::{simulate_outcomes, OutcomeTable};
pub use params::{ParamError, Scheme, SchemeParams};
pub use types::{sample_infection, trial_seed, InfectionVector, Prefix, TestId};
