//! Cell search-space engine and reproducible architecture-search benchmark
//! harness.
//!
//! The crate is organized around a pipeline:
//!
//! * [`cellspec`] defines cells (small labeled DAGs), their validity rules,
//!   pruning, canonical hashing, and edit distances.
//! * [`enumerator`] walks every valid cell once and materializes the search
//!   space as an index of canonical cells.
//! * [`netmodel`] lowers a cell into a concrete network build plan with exact
//!   parameter counts and structural metrics.
//! * [`oracle`] serves per-cell training results, either from a result table
//!   or from a deterministic synthetic surrogate.
//! * [`searchbench`] runs budgeted search algorithms against an oracle and
//!   aggregates regret traces.
//! * [`landscape`] measures locality, basin volumes, and budget consistency
//!   of the resulting fitness landscape.
//!
//! Everything downstream of a seed is deterministic: the same seed, index,
//! and configuration reproduce results bit for bit, independent of thread
//! count.

#![forbid(unsafe_code)]

pub mod cellspec;
pub mod enumerator;
pub mod landscape;
pub mod netmodel;
pub mod oracle;
pub mod rng;
pub mod searchbench;
pub mod stats;
