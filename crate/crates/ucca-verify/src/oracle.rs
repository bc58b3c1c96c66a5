//! Brute-force escape oracle.
//!
//! Evaluates the violation predicates directly over a raw emulator trace,
//! independent of the FSM code: per compartment it derives entries, the
//! expected return address and frame base from the neighboring snapshots,
//! and reports the first step at which any predicate fires. Used to check
//! that the monitor resets exactly there, with zero latency.
//!
//! Assumes an emulator-shaped trace (interrupt pseudo-steps carry the
//! interrupted pc; `sp` sampled at fetch), not arbitrary adversarial input.

use ucca_isa::SignalSnapshot;
use ucca_monitor::{CrImage, UccConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleCause {
    CrWrite,
    BadReturn { ucc: usize },
    BadSpOnExit { ucc: usize },
    FrameWrite { ucc: usize },
    EntryNotViaCall { ucc: usize },
}

#[derive(Clone, Copy)]
enum Ctx {
    Outside,
    Inside { ret_exp: u16, bp: u16 },
    Suspended { ret_exp: u16, bp: u16 },
}

/// First step of `snaps` satisfying any violation predicate, with every
/// predicate that fires there.
pub fn first_violation(
    snaps: &[SignalSnapshot],
    config: &UccConfig,
    cr: &CrImage,
) -> Option<(usize, Vec<OracleCause>)> {
    let mut ctx = vec![Ctx::Outside; config.uccs.len()];
    for (t, s) in snaps.iter().enumerate() {
        let mut causes = Vec::new();
        if s.w_en && s.d_addr.is_some_and(|d| cr.contains(d)) {
            causes.push(OracleCause::CrWrite);
        }
        let prev = t.checked_sub(1).map(|p| &snaps[p]);
        for (k, ucc) in config.uccs.iter().enumerate() {
            let in_ucc = ucc.contains(s.pc);
            match ctx[k] {
                Ctx::Outside => {
                    if in_ucc {
                        // entry must come through a call or interrupt
                        let ret_exp = match prev.and_then(|p| p.op_ret) {
                            Some(r) => r,
                            None => {
                                causes.push(OracleCause::EntryNotViaCall { ucc: k });
                                0
                            }
                        };
                        let bp = prev.map(|p| p.sp).unwrap_or(0);
                        if s.w_en && s.d_addr.is_some_and(|d| d >= bp) {
                            causes.push(OracleCause::FrameWrite { ucc: k });
                        }
                        ctx[k] = if s.irq_jmp {
                            Ctx::Suspended { ret_exp, bp }
                        } else {
                            Ctx::Inside { ret_exp, bp }
                        };
                    }
                }
                Ctx::Inside { ret_exp, bp } => {
                    if in_ucc {
                        if s.w_en && s.d_addr.is_some_and(|d| d >= bp) {
                            causes.push(OracleCause::FrameWrite { ucc: k });
                        }
                        if s.irq_jmp {
                            ctx[k] = Ctx::Suspended { ret_exp, bp };
                        }
                    } else {
                        if s.pc != ret_exp {
                            causes.push(OracleCause::BadReturn { ucc: k });
                        }
                        if s.sp != bp {
                            causes.push(OracleCause::BadSpOnExit { ucc: k });
                        }
                        ctx[k] = Ctx::Outside;
                    }
                }
                Ctx::Suspended { ret_exp, bp } => {
                    if in_ucc {
                        if s.w_en && s.d_addr.is_some_and(|d| d >= bp) {
                            causes.push(OracleCause::FrameWrite { ucc: k });
                        }
                        if !s.irq_jmp {
                            ctx[k] = Ctx::Inside { ret_exp, bp };
                        }
                    }
                }
            }
        }
        if !causes.is_empty() {
            return Some((t, causes));
        }
    }
    None
}
