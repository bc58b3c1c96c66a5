use crate::config::{CrImage, UccConfig};
use crate::fsm::{cr_step, ret_step, stack_step, CrState, RetUnit, StackUnit};
use ucca_isa::SignalSnapshot;
use ucca_ltl::{FsmPhase, Regions, TraceStep, UccRegs};

/// Single-edit FSM mutations for the verification harness. The shipped
/// monitor runs with none; each mutation must be exposed by at least one
/// built-in spec in the exhaustive depth-3 campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Spec eq12's comparison flipped from `d_addr >= bp` to `d_addr <= bp`.
    FlipFrameWriteCmp,
    /// Entry no longer latches `ret_exp` from the previous `op_ret`.
    SkipRetExpLatch,
    /// Resuming from an interrupt re-latches `bp` instead of keeping it.
    SkipBpFreezeInIrq,
    /// Departures no longer require `sp = bp`.
    DropSpExitCheck,
    /// Writes into CR are ignored.
    DropCrCheck,
    /// Fall-through entry (no op_ret available) is tolerated silently.
    AllowFallthroughEntry,
}

impl Mutation {
    pub const ALL: [Mutation; 6] = [
        Mutation::FlipFrameWriteCmp,
        Mutation::SkipRetExpLatch,
        Mutation::SkipBpFreezeInIrq,
        Mutation::DropSpExitCheck,
        Mutation::DropCrCheck,
        Mutation::AllowFallthroughEntry,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Mutation::FlipFrameWriteCmp => "flip-frame-write-cmp",
            Mutation::SkipRetExpLatch => "skip-ret-exp-latch",
            Mutation::SkipBpFreezeInIrq => "skip-bp-freeze-in-irq",
            Mutation::DropSpExitCheck => "drop-sp-exit-check",
            Mutation::DropCrCheck => "drop-cr-check",
            Mutation::AllowFallthroughEntry => "allow-fallthrough-entry",
        }
    }

    pub fn from_name(name: &str) -> Option<Mutation> {
        Mutation::ALL.iter().copied().find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetViolation {
    BadReturn { actual: u16, expected: u16 },
    EntryNotViaCall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackViolation {
    FrameWrite { d_addr: u16, bp: u16 },
    BadSpOnExit { sp: u16, bp: u16 },
}

/// A violated sub-module, as named in verdicts and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cause {
    CrIntegrity,
    RetIntegrity { ucc: usize, violation: RetViolation },
    StackIntegrity { ucc: usize, violation: StackViolation },
}

impl std::fmt::Display for Cause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cause::CrIntegrity => write!(f, "cr-integrity"),
            Cause::RetIntegrity { ucc, .. } => write!(f, "ret-integrity({ucc})"),
            Cause::StackIntegrity { ucc, .. } => write!(f, "stack-integrity({ucc})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    /// At least one sub-module sits in Reset after this step. The cause
    /// list names the sub-modules whose own predicate fired on this very
    /// snapshot (empty while dwelling in a previously entered reset).
    Reset(Vec<Cause>),
}

impl Verdict {
    pub fn is_reset(&self) -> bool {
        matches!(self, Verdict::Reset(_))
    }
}

/// The aggregated monitor: CR FSM plus one return- and one stack-integrity
/// FSM per configured compartment, with one-step signal history.
///
/// Pure value semantics: `observe` advances every sub-FSM on the same
/// snapshot and returns the verdict the MCU reset line would carry.
#[derive(Debug, Clone)]
pub struct MonitorState {
    config: UccConfig,
    cr_image: CrImage,
    cr_state: CrState,
    ret: Vec<RetUnit>,
    stack: Vec<StackUnit>,
    prev: Option<SignalSnapshot>,
    mutation: Option<Mutation>,
}

impl MonitorState {
    /// A monitor in its boot condition: every FSM resetting, waiting for
    /// the pc = 0 sentinel.
    pub fn new(config: UccConfig, cr_image: CrImage) -> Self {
        Self::with_mutation(config, cr_image, None)
    }

    pub fn with_mutation(config: UccConfig, cr_image: CrImage, mutation: Option<Mutation>) -> Self {
        let n = config.uccs.len();
        MonitorState {
            config,
            cr_image,
            cr_state: CrState::Reset,
            ret: vec![RetUnit::boot(); n],
            stack: vec![StackUnit::boot(); n],
            prev: None,
            mutation,
        }
    }

    pub fn config(&self) -> &UccConfig {
        &self.config
    }

    pub fn cr_image(&self) -> &CrImage {
        &self.cr_image
    }

    pub fn cr_state(&self) -> CrState {
        self.cr_state
    }

    pub fn ret_unit(&self, ucc: usize) -> &RetUnit {
        &self.ret[ucc]
    }

    pub fn stack_unit(&self, ucc: usize) -> &StackUnit {
        &self.stack[ucc]
    }

    /// The reset line: 1 while any sub-module sits in Reset.
    pub fn reset_out(&self) -> bool {
        self.cr_state == CrState::Reset
            || self.ret.iter().any(|u| u.state == FsmPhase::Reset)
            || self.stack.iter().any(|u| u.state == FsmPhase::Reset)
    }

    /// Region table for checking formulas against traces this monitor
    /// produced.
    pub fn regions(&self) -> Regions {
        Regions {
            uccs: self.config.uccs.iter().map(|u| (u.r_min, u.r_max)).collect(),
            cr: (self.cr_image.lo(), self.cr_image.hi()),
        }
    }

    /// Advance every sub-FSM on one snapshot.
    ///
    /// Two phases mirror the combinational reset feedback: local
    /// transitions first, then — if any sub-module ends the step in Reset —
    /// every per-UCC FSM still outside Reset is pulled in. Register updates
    /// from the local phase survive the override. The CR FSM takes no part
    /// in the synchronization (its only reset edge is its own check).
    pub fn observe(&mut self, snap: &SignalSnapshot) -> Verdict {
        let prev = self.prev.as_ref();
        let mut causes = Vec::new();

        let (cr_next, cr_violated) = cr_step(self.cr_state, snap, &self.cr_image, self.mutation);
        if cr_violated {
            causes.push(Cause::CrIntegrity);
        }

        let mut ret_next = Vec::with_capacity(self.ret.len());
        let mut stack_next = Vec::with_capacity(self.stack.len());
        for (k, ucc) in self.config.uccs.iter().enumerate() {
            let (r, rv) = ret_step(&self.ret[k], ucc, snap, prev, false, self.mutation);
            if let Some(v) = rv {
                causes.push(Cause::RetIntegrity { ucc: k, violation: v });
            }
            let (s, sv) = stack_step(&self.stack[k], ucc, snap, prev, false, self.mutation);
            if let Some(v) = sv {
                causes.push(Cause::StackIntegrity { ucc: k, violation: v });
            }
            ret_next.push(r);
            stack_next.push(s);
        }

        let reset_ucca = cr_next == CrState::Reset
            || ret_next.iter().any(|u| u.state == FsmPhase::Reset)
            || stack_next.iter().any(|u| u.state == FsmPhase::Reset);

        if reset_ucca {
            for (k, unit) in ret_next.iter_mut().enumerate() {
                if self.ret[k].state != FsmPhase::Reset {
                    unit.state = FsmPhase::Reset;
                }
            }
            for (k, unit) in stack_next.iter_mut().enumerate() {
                if self.stack[k].state != FsmPhase::Reset {
                    unit.state = FsmPhase::Reset;
                }
            }
        }

        self.cr_state = cr_next;
        self.ret = ret_next;
        self.stack = stack_next;
        self.prev = Some(snap.clone());

        if reset_ucca {
            Verdict::Reset(causes)
        } else {
            Verdict::Ok
        }
    }

    /// Build the monitor-extended trace record for a snapshot just
    /// observed: raw signals, post-step registers and FSM phases, and the
    /// verdict wired into the `reset` field.
    pub fn extend(&self, snap: &SignalSnapshot, verdict: &Verdict) -> TraceStep {
        TraceStep {
            step: snap.step,
            pc: snap.pc,
            d_addr: snap.d_addr,
            w_en: snap.w_en,
            sp: snap.sp,
            irq_jmp: snap.irq_jmp,
            op_ret: snap.op_ret,
            reset: verdict.is_reset(),
            ucc: self
                .ret
                .iter()
                .zip(&self.stack)
                .map(|(r, s)| UccRegs {
                    ret_exp: r.ret_exp,
                    bp: s.bp,
                    ret_state: r.state,
                    stack_state: s.state,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::UccDefinition;

    fn snap(step: u64, pc: u16) -> SignalSnapshot {
        SignalSnapshot {
            step,
            pc,
            d_addr: None,
            w_en: false,
            sp: 0x0A00,
            irq_jmp: false,
            op_ret: None,
            reset: false,
        }
    }

    fn monitor(uccs: &[(u16, u16)]) -> MonitorState {
        MonitorState::new(
            UccConfig {
                uccs: uccs.iter().map(|&(a, b)| UccDefinition::new(a, b)).collect(),
            },
            CrImage::new(0x0100, 8),
        )
    }

    fn released(uccs: &[(u16, u16)]) -> MonitorState {
        let mut m = monitor(uccs);
        assert_eq!(m.observe(&snap(0, 0)), Verdict::Ok);
        m
    }

    #[test]
    fn boot_condition_until_sentinel() {
        let mut m = monitor(&[(0xC100, 0xC1FE)]);
        assert!(m.reset_out());
        assert!(m.observe(&snap(0, 0xC000)).is_reset());
        assert_eq!(m.observe(&snap(1, 0)), Verdict::Ok);
        assert!(!m.reset_out());
    }

    #[test]
    fn benign_non_ucc_trace_is_ok_everywhere() {
        let mut m = released(&[(0xC100, 0xC1FE)]);
        for (i, pc) in [0xC000u16, 0xC004, 0xC008, 0xC00C].iter().enumerate() {
            assert_eq!(m.observe(&snap(i as u64 + 1, *pc)), Verdict::Ok);
        }
    }

    #[test]
    fn cr_write_resets_with_cause() {
        let mut m = released(&[(0xC100, 0xC1FE)]);
        let mut s = snap(1, 0xC000);
        s.w_en = true;
        s.d_addr = Some(0x0104);
        match m.observe(&s) {
            Verdict::Reset(causes) => assert_eq!(causes, vec![Cause::CrIntegrity]),
            v => panic!("expected reset, got {v:?}"),
        }
        // synchronization pulled the per-UCC FSMs in too
        assert_eq!(m.ret_unit(0).state, FsmPhase::Reset);
        assert_eq!(m.stack_unit(0).state, FsmPhase::Reset);
    }

    #[test]
    fn two_ucc_sync_on_single_violation() {
        // UCC1 return-hijacks while UCC0 idles: both FSM pairs end in Reset,
        // cause names only UCC1's return module.
        let mut m = released(&[(0xC100, 0xC13E), (0xC200, 0xC23E)]);
        let mut call = snap(1, 0xC000);
        call.op_ret = Some(0xC004);
        call.w_en = true;
        call.d_addr = Some(0x09FE);
        call.sp = 0x0A00;
        assert_eq!(m.observe(&call), Verdict::Ok);
        let mut entry = snap(2, 0xC200);
        entry.sp = 0x09FE;
        assert_eq!(m.observe(&entry), Verdict::Ok);
        assert_eq!(m.ret_unit(1).state, FsmPhase::In);
        assert_eq!(m.ret_unit(1).ret_exp, 0xC004);
        assert_eq!(m.stack_unit(1).bp, 0x0A00);
        let mut hijack = snap(3, 0xD000);
        hijack.sp = 0x0A00;
        match m.observe(&hijack) {
            Verdict::Reset(causes) => {
                assert_eq!(causes.len(), 1);
                assert!(matches!(
                    causes[0],
                    Cause::RetIntegrity { ucc: 1, violation: RetViolation::BadReturn { .. } }
                ));
            }
            v => panic!("expected reset, got {v:?}"),
        }
        assert_eq!(m.ret_unit(0).state, FsmPhase::Reset);
        assert_eq!(m.stack_unit(0).state, FsmPhase::Reset);
        assert_eq!(m.ret_unit(1).state, FsmPhase::Reset);
        // CR FSM has no synchronization edge
        assert_eq!(m.cr_state(), CrState::Run);
    }

    #[test]
    fn dwelling_in_reset_keeps_verdict_reset_without_new_causes() {
        let mut m = released(&[(0xC100, 0xC1FE)]);
        let mut s = snap(1, 0xC000);
        s.w_en = true;
        s.d_addr = Some(0x0100);
        assert!(m.observe(&s).is_reset());
        match m.observe(&snap(2, 0xC004)) {
            Verdict::Reset(causes) => assert!(causes.is_empty()),
            v => panic!("expected reset, got {v:?}"),
        }
        assert_eq!(m.observe(&snap(3, 0)), Verdict::Ok);
    }

    #[test]
    fn extend_wires_verdict_and_registers() {
        let mut m = released(&[(0xC100, 0xC1FE)]);
        let mut call = snap(1, 0xC000);
        call.op_ret = Some(0xC004);
        call.sp = 0x09F0;
        let v = m.observe(&call);
        let rec = m.extend(&call, &v);
        assert!(!rec.reset);
        let mut entry = snap(2, 0xC100);
        entry.sp = 0x09EE;
        let v = m.observe(&entry);
        let rec = m.extend(&entry, &v);
        assert_eq!(rec.ucc[0].ret_exp, 0xC004);
        assert_eq!(rec.ucc[0].bp, 0x09F0);
        assert_eq!(rec.ucc[0].ret_state, FsmPhase::In);
    }
}
