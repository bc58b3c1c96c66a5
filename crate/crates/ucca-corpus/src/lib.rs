//! Assembly front end and scenario corpus.
//!
//! The assembler is a plain two-pass translator for the restricted ISA.
//! Scenarios pair an assembly program with a compartment configuration, an
//! interrupt schedule and an expected verdict; the runner executes them in
//! lock-step with the monitor and re-checks every built-in specification
//! on the recorded trace.

mod asm;
mod runner;
mod scenarios;

pub use asm::{assemble, Assembled, AsmError, Image};
pub use runner::{
    run_scenario, run_with_monitor, ExpectedCause, Expectation, ResetEvent, RunMode, RunOutcome,
    RunRecord, Scenario, ScenarioError, ScenarioResult, SpecResult,
};
pub use scenarios::{emit_copy_stub, scenarios};
