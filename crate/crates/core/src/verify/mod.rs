//! Empirical verifiers for the lemmas, claims, theorem and corollaries.

pub mod claims;
pub mod corollaries;
pub mod fractional;
pub mod level_set;
pub mod report;
pub mod reverse_holder;
pub mod theorem1;

pub use report::{CheckKind, CheckSummary, Instance, VerificationReport};
