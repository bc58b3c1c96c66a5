//! Finite-trace LTL over monitor-extended signal traces.
//!
//! Operators: `G` (globally), `X` (next, weak at the end of the trace),
//! `Y` (yesterday, false at the origin) and `W` (weak until), plus
//! term-level next/previous inside atoms. Conventions: an atom containing
//! a next-shifted term evaluates to true at the last position; an atom
//! containing a previous-shifted term evaluates to false at position 0.
//! Both conventions are the usual runtime-verification choice that avoids
//! spurious end-of-trace violations of safety bodies.

mod ast;
mod builtins;
mod eval;
mod parse;
mod trace;

pub use ast::{Cmp, Formula, RegionRef, Signal, Term};
pub use builtins::{builtin_specs, BuiltinSpec};
pub use eval::{brute_oracle, brute_oracle_at, check, eval, CheckOutcome, EvalError};
pub use parse::{parse_formula, ParseError, ParseErrorKind};
pub use trace::{read_trace, write_trace, FsmPhase, Regions, Trace, TraceIoError, TraceStep, UccRegs};
