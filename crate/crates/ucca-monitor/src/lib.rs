//! Software embodiment of the UCCA hardware monitor.
//!
//! One monitor instance tracks a CR-integrity FSM plus, per configured
//! compartment, a return-integrity and a stack-integrity FSM. The monitor
//! consumes one [`SignalSnapshot`](ucca_isa::SignalSnapshot) per executed
//! instruction; a violation in any sub-module drives the shared reset line,
//! which in turn pulls every per-UCC FSM into its `Reset` state. All FSMs
//! leave `Reset` on the pc = 0 snapshot that marks the end of the MCU
//! reset routine.

mod config;
mod cost;
mod fsm;
mod monitor;

pub use config::{
    materialize_cr, validate_config, ConfigError, CrImage, MonitorConfig, UccConfig, UccDefinition,
};
pub use cost::{estimate_hardware_cost, HardwareCost, ZeroRegions};
pub use fsm::{cr_step, ret_step, stack_step, CrState, RetUnit, StackUnit};
pub use monitor::{Cause, MonitorState, Mutation, RetViolation, StackViolation, Verdict};
