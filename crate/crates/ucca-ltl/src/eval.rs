use crate::ast::{Cmp, Formula, RegionRef, Signal, Term};
use crate::trace::Trace;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("position {pos} out of range (trace length {len})")]
    PositionOutOfRange { pos: usize, len: usize },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("formula references UCC{idx} but the trace declares {declared} UCC region(s)")]
    UnknownUccIndex { idx: usize, declared: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckOutcome {
    Holds,
    /// For a top-level `G`, the smallest position where the body fails;
    /// index 0 otherwise.
    Violated { witness: usize },
}

/// Outcome of resolving a term at a position: a value, or a marker that
/// the term reaches past an end of the trace.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Resolved {
    Val(u16),
    BeforeOrigin,
    BeyondEnd,
}

fn signal_value(s: Signal, trace: &Trace, i: usize) -> u16 {
    let st = &trace.steps[i];
    match s {
        Signal::Pc => st.pc,
        Signal::Sp => st.sp,
        Signal::DAddr => st.d_addr.unwrap_or(0),
        Signal::WEn => st.w_en as u16,
        Signal::IrqJmp => st.irq_jmp as u16,
        Signal::OpRet => st.op_ret.unwrap_or(0),
        Signal::Reset => st.reset as u16,
        Signal::RetExp(k) => st.ucc[k].ret_exp,
        Signal::Bp(k) => st.ucc[k].bp,
    }
}

fn resolve(t: &Term, trace: &Trace, i: usize) -> Resolved {
    match t {
        Term::Signal(s) => Resolved::Val(signal_value(*s, trace, i)),
        Term::Const(c) => Resolved::Val(*c),
        Term::Next(t) => {
            if i + 1 >= trace.steps.len() {
                Resolved::BeyondEnd
            } else {
                resolve(t, trace, i + 1)
            }
        }
        Term::Prev(t) => {
            if i == 0 {
                Resolved::BeforeOrigin
            } else {
                resolve(t, trace, i - 1)
            }
        }
    }
}

/// Atom truth value from its resolved sides. A next past the end wins over
/// a previous past the origin (relevant only to degenerate length-1 atoms
/// mixing X and Y).
fn atom_value(a: Resolved, b: Resolved, cmp: impl Fn(u16, u16) -> bool) -> bool {
    match (a, b) {
        (Resolved::BeyondEnd, _) | (_, Resolved::BeyondEnd) => true,
        (Resolved::BeforeOrigin, _) | (_, Resolved::BeforeOrigin) => false,
        (Resolved::Val(x), Resolved::Val(y)) => cmp(x, y),
    }
}

fn eval_at(f: &Formula, trace: &Trace, i: usize) -> bool {
    let len = trace.steps.len();
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a, op, b) => {
            let (ra, rb) = (resolve(a, trace, i), resolve(b, trace, i));
            match op {
                Cmp::Eq => atom_value(ra, rb, |x, y| x == y),
                Cmp::Ne => atom_value(ra, rb, |x, y| x != y),
                Cmp::Ge => atom_value(ra, rb, |x, y| x >= y),
            }
        }
        Formula::InRegion(t, r) => {
            let (lo, hi) = match r {
                RegionRef::Ucc(k) => trace.regions.uccs[*k],
                RegionRef::Cr => trace.regions.cr,
            };
            match resolve(t, trace, i) {
                Resolved::BeyondEnd => true,
                Resolved::BeforeOrigin => false,
                Resolved::Val(v) => v >= lo && v <= hi,
            }
        }
        Formula::Flag(s) => signal_value(*s, trace, i) != 0,
        Formula::Not(g) => !eval_at(g, trace, i),
        Formula::And(a, b) => eval_at(a, trace, i) && eval_at(b, trace, i),
        Formula::Or(a, b) => eval_at(a, trace, i) || eval_at(b, trace, i),
        Formula::Implies(a, b) => !eval_at(a, trace, i) || eval_at(b, trace, i),
        Formula::Globally(g) => (i..len).all(|j| eval_at(g, trace, j)),
        Formula::Next(g) => i + 1 >= len || eval_at(g, trace, i + 1),
        Formula::Yesterday(g) => i > 0 && eval_at(g, trace, i - 1),
        Formula::WeakUntil(psi, phi) => {
            for j in i..len {
                if eval_at(phi, trace, j) {
                    return true;
                }
                if !eval_at(psi, trace, j) {
                    return false;
                }
            }
            true
        }
    }
}

fn validate(f: &Formula, trace: &Trace) -> Result<(), EvalError> {
    if let Some(idx) = f.max_ucc_index() {
        let declared = trace.regions.uccs.len();
        if idx >= declared {
            return Err(EvalError::UnknownUccIndex { idx, declared });
        }
        // every step must carry registers for the referenced UCCs
        if trace.steps.iter().any(|s| s.ucc.len() <= idx) {
            return Err(EvalError::UnknownUccIndex { idx, declared });
        }
    }
    Ok(())
}

/// Evaluate `f` at position `i` of `trace`.
pub fn eval(f: &Formula, trace: &Trace, i: usize) -> Result<bool, EvalError> {
    if i >= trace.steps.len() {
        return Err(EvalError::PositionOutOfRange { pos: i, len: trace.steps.len() });
    }
    validate(f, trace)?;
    Ok(eval_at(f, trace, i))
}

/// Check `f` over the whole trace: equivalent to `eval` at position 0. On
/// violation of a top-level `G`, reports the smallest failing body position.
pub fn check(f: &Formula, trace: &Trace) -> Result<CheckOutcome, EvalError> {
    if trace.steps.is_empty() {
        return Err(EvalError::EmptyTrace);
    }
    validate(f, trace)?;
    match f {
        Formula::Globally(body) => {
            for j in 0..trace.steps.len() {
                if !eval_at(body, trace, j) {
                    return Ok(CheckOutcome::Violated { witness: j });
                }
            }
            Ok(CheckOutcome::Holds)
        }
        _ => {
            if eval_at(f, trace, 0) {
                Ok(CheckOutcome::Holds)
            } else {
                Ok(CheckOutcome::Violated { witness: 0 })
            }
        }
    }
}

/// Textbook recursive expansion of the finite-trace semantics, kept free of
/// the scanning shortcuts `eval` uses. Test oracle; exponential on purpose.
pub fn brute_oracle(f: &Formula, trace: &Trace) -> Result<bool, EvalError> {
    brute_oracle_at(f, trace, 0)
}

pub fn brute_oracle_at(f: &Formula, trace: &Trace, i: usize) -> Result<bool, EvalError> {
    if i >= trace.steps.len() {
        return Err(EvalError::PositionOutOfRange { pos: i, len: trace.steps.len() });
    }
    validate(f, trace)?;
    Ok(brute_at(f, trace, i))
}

fn brute_at(f: &Formula, trace: &Trace, i: usize) -> bool {
    let len = trace.steps.len();
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(..) | Formula::InRegion(..) | Formula::Flag(_) => eval_at(f, trace, i),
        Formula::Not(g) => !brute_at(g, trace, i),
        Formula::And(a, b) => brute_at(a, trace, i) && brute_at(b, trace, i),
        Formula::Or(a, b) => brute_at(a, trace, i) || brute_at(b, trace, i),
        Formula::Implies(a, b) => !brute_at(a, trace, i) || brute_at(b, trace, i),
        // G f  ==  f ∧ X(G f), with weak X at the end
        Formula::Globally(g) => {
            brute_at(g, trace, i) && (i + 1 >= len || brute_at(f, trace, i + 1))
        }
        Formula::Next(g) => i + 1 >= len || brute_at(g, trace, i + 1),
        Formula::Yesterday(g) => i > 0 && brute_at(g, trace, i - 1),
        // ψ W φ  ==  φ ∨ (ψ ∧ X(ψ W φ)), with weak X at the end
        Formula::WeakUntil(psi, phi) => {
            brute_at(phi, trace, i)
                || (brute_at(psi, trace, i) && (i + 1 >= len || brute_at(f, trace, i + 1)))
        }
    }
}
