//! Desk-scale verification of the monitor FSMs.
//!
//! The monitor must satisfy its thirteen built-in specifications for *all*
//! input environments, not just sequences the emulator can produce. This
//! crate drives a boot-condition monitor with adversarially generated
//! signal sequences over a reduced alphabet of representative values —
//! every comparison class the specifications mention is present — and
//! checks every specification on every monitor-extended trace, either
//! exhaustively to a depth or with seeded random campaigns.

mod alphabet;
mod check;
pub mod oracle;

pub use alphabet::ReducedAlphabet;
pub use check::{
    exhaustive_check, random_check, replay_violation, run_sequence, CheckError, CheckMode,
    CheckReport, Violation,
};
