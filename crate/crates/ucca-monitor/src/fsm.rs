//! The monitor's Mealy FSMs as pure transition functions.
//!
//! The per-UCC FSMs share the Out/In/IRQ/Reset skeleton; each transition
//! consumes the current snapshot plus the monitor's one-step history (the
//! previous raw snapshot) and the global `reset_ucca` line. Register
//! updates are computed before the synchronization override so a latch on
//! an entering step survives a same-step reset elsewhere.

use crate::config::{CrImage, UccDefinition};
use crate::monitor::{Mutation, RetViolation, StackViolation};
use ucca_isa::{SignalSnapshot, RESET_SENTINEL_PC};
use ucca_ltl::FsmPhase;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrState {
    Run,
    Reset,
}

/// CR-integrity FSM: Run -> Reset on a write into CR, Reset -> Run on the
/// pc = 0 sentinel. Total; no synchronization edge.
pub fn cr_step(
    state: CrState,
    snap: &SignalSnapshot,
    cr: &CrImage,
    mutation: Option<Mutation>,
) -> (CrState, bool) {
    match state {
        CrState::Run => {
            let write_to_cr = snap.w_en && snap.d_addr.is_some_and(|d| cr.contains(d));
            if write_to_cr && mutation != Some(Mutation::DropCrCheck) {
                (CrState::Reset, true)
            } else {
                (CrState::Run, false)
            }
        }
        CrState::Reset => {
            if snap.pc == RESET_SENTINEL_PC {
                (CrState::Run, false)
            } else {
                (CrState::Reset, false)
            }
        }
    }
}

/// Return-integrity FSM state: the phase plus the latched expected return
/// address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetUnit {
    pub state: FsmPhase,
    pub ret_exp: u16,
}

impl RetUnit {
    /// Boot condition: the monitor initializes resetting; the latch value
    /// is arbitrary (never consulted before the first entry latch).
    pub fn boot() -> Self {
        RetUnit { state: FsmPhase::Reset, ret_exp: 0xFFFF }
    }
}

/// One step of the return-integrity FSM.
///
/// Entry latches `ret_exp` from the previous snapshot's `op_ret`; an entry
/// without one (fall-through or direct jump into the compartment) is a
/// violation and latches the encoded absent value 0. A non-interrupt
/// departure must land on `ret_exp`. The IRQ phase holds the latch until
/// the compartment resumes; an interrupt landing exactly on the resume
/// instruction keeps it suspended.
pub fn ret_step(
    unit: &RetUnit,
    ucc: &UccDefinition,
    snap: &SignalSnapshot,
    prev: Option<&SignalSnapshot>,
    reset_ucca: bool,
    mutation: Option<Mutation>,
) -> (RetUnit, Option<RetViolation>) {
    let in_ucc = ucc.contains(snap.pc);
    let mut next = *unit;
    let mut violation = None;

    match unit.state {
        FsmPhase::Out => {
            if in_ucc {
                let op_ret = prev.and_then(|p| p.op_ret);
                if mutation != Some(Mutation::SkipRetExpLatch)
                    && !(mutation == Some(Mutation::AllowFallthroughEntry) && op_ret.is_none())
                {
                    next.ret_exp = op_ret.unwrap_or(0);
                }
                if op_ret.is_none() && mutation != Some(Mutation::AllowFallthroughEntry) {
                    next.state = FsmPhase::Reset;
                    violation = Some(RetViolation::EntryNotViaCall);
                } else if snap.irq_jmp {
                    next.state = FsmPhase::Irq;
                } else {
                    next.state = FsmPhase::In;
                }
            }
        }
        FsmPhase::In => {
            if in_ucc && snap.irq_jmp {
                next.state = FsmPhase::Irq;
            } else if in_ucc {
                // stay
            } else if snap.pc == unit.ret_exp {
                next.state = FsmPhase::Out;
            } else {
                next.state = FsmPhase::Reset;
                violation = Some(RetViolation::BadReturn { actual: snap.pc, expected: unit.ret_exp });
            }
        }
        FsmPhase::Irq => {
            if in_ucc && !snap.irq_jmp {
                next.state = FsmPhase::In;
            }
            // re-interrupted resume (in_ucc && irq_jmp) stays suspended
        }
        FsmPhase::Reset => {
            if snap.pc == RESET_SENTINEL_PC {
                if in_ucc {
                    next.ret_exp = prev.and_then(|p| p.op_ret).unwrap_or(0);
                    next.state = FsmPhase::In;
                } else {
                    next.state = FsmPhase::Out;
                }
            }
        }
    }

    if reset_ucca && unit.state != FsmPhase::Reset {
        next.state = FsmPhase::Reset;
    }
    (next, violation)
}

/// Stack-integrity FSM state: the phase plus the latched frame base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StackUnit {
    pub state: FsmPhase,
    pub bp: u16,
}

impl StackUnit {
    pub fn boot() -> Self {
        StackUnit { state: FsmPhase::Reset, bp: 0xFFFF }
    }
}

fn frame_write(snap: &SignalSnapshot, bp: u16, mutation: Option<Mutation>) -> bool {
    if !snap.w_en {
        return false;
    }
    let Some(d) = snap.d_addr else { return false };
    if mutation == Some(Mutation::FlipFrameWriteCmp) {
        d <= bp
    } else {
        d >= bp
    }
}

/// One step of the stack-integrity FSM.
///
/// While outside the compartment, `bp` shadows the current snapshot's
/// fetch-time `sp` — the stack pointer the previous instruction left
/// behind — whenever the executing instruction changes. The entering step
/// freezes it, so inside the compartment `bp` holds the call step's
/// fetch-time (pre-push) stack pointer; it stays frozen across interrupt
/// suspensions. A compartment-resident write with `d_addr >= bp` (the
/// stack grows towards 0) resets, as does a non-interrupt departure that
/// leaves `sp != bp`. Tracking resumes on the departure step itself.
pub fn stack_step(
    unit: &StackUnit,
    ucc: &UccDefinition,
    snap: &SignalSnapshot,
    prev: Option<&SignalSnapshot>,
    reset_ucca: bool,
    mutation: Option<Mutation>,
) -> (StackUnit, Option<StackViolation>) {
    let in_ucc = ucc.contains(snap.pc);
    let mut next = *unit;
    let mut violation = None;

    match unit.state {
        FsmPhase::Out => {
            if in_ucc {
                // entering step: bp does not change
                if frame_write(snap, next.bp, mutation) {
                    next.state = FsmPhase::Reset;
                    violation = Some(StackViolation::FrameWrite {
                        d_addr: snap.d_addr.unwrap_or(0),
                        bp: next.bp,
                    });
                } else if snap.irq_jmp {
                    next.state = FsmPhase::Irq;
                } else {
                    next.state = FsmPhase::In;
                }
            } else {
                let pc_changed = prev.is_none_or(|p| p.pc != snap.pc);
                if pc_changed {
                    next.bp = snap.sp;
                }
            }
        }
        FsmPhase::In => {
            if in_ucc && frame_write(snap, unit.bp, mutation) {
                next.state = FsmPhase::Reset;
                violation = Some(StackViolation::FrameWrite {
                    d_addr: snap.d_addr.unwrap_or(0),
                    bp: unit.bp,
                });
            } else if in_ucc && snap.irq_jmp {
                next.state = FsmPhase::Irq;
            } else if in_ucc {
                // stay
            } else if snap.sp == unit.bp || mutation == Some(Mutation::DropSpExitCheck) {
                next.state = FsmPhase::Out;
                next.bp = snap.sp;
            } else {
                next.state = FsmPhase::Reset;
                violation = Some(StackViolation::BadSpOnExit { sp: snap.sp, bp: unit.bp });
            }
        }
        FsmPhase::Irq => {
            if in_ucc && frame_write(snap, unit.bp, mutation) {
                next.state = FsmPhase::Reset;
                violation = Some(StackViolation::FrameWrite {
                    d_addr: snap.d_addr.unwrap_or(0),
                    bp: unit.bp,
                });
            } else if in_ucc && !snap.irq_jmp {
                next.state = FsmPhase::In;
                if mutation == Some(Mutation::SkipBpFreezeInIrq) {
                    next.bp = snap.sp;
                }
            }
        }
        FsmPhase::Reset => {
            if snap.pc == RESET_SENTINEL_PC && !snap.w_en {
                next.bp = snap.sp;
                next.state = if in_ucc { FsmPhase::In } else { FsmPhase::Out };
            }
        }
    }

    if reset_ucca && unit.state != FsmPhase::Reset {
        next.state = FsmPhase::Reset;
    }
    (next, violation)
}
