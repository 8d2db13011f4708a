//! Coherence grading of finite decision instances.
//!
//! An instance lists states, outcomes with a utility `u`, and acts with a
//! value `V`. The crate decides how far `V` is consistent with `u` (simple,
//! comonotone, single-act, or full coherence), extracts the matching
//! representation (expected utility, maxmin over priors, or a Choquet
//! integral), and analyses the capacities involved. All arithmetic is exact.

pub mod arbitrage;
pub mod capacity;
pub mod cli;
pub mod coherence;
pub mod fixtures;
pub mod gamble;
pub mod generate;
pub mod instance;
pub mod io;
pub mod lp;
pub mod rational;
pub mod report;
