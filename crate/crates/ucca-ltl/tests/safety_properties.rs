//! Structural properties of the built-in specifications: violations found
//! on a prefix persist at the same position on every extension.

use proptest::prelude::*;
use ucca_ltl::{
    builtin_specs, check, eval, CheckOutcome, Formula, FsmPhase, Regions, Trace, TraceStep,
    UccRegs,
};

fn any_step(step: u64) -> impl Strategy<Value = TraceStep> {
    let word = prop_oneof![
        Just(0u16),
        Just(0x0100),
        Just(0x09F0),
        Just(0x09F2),
        Just(0xC0FE),
        Just(0xC100),
        Just(0xC180),
        Just(0xC1FE),
        Just(0xC200),
    ];
    let phase = prop_oneof![
        Just(FsmPhase::Out),
        Just(FsmPhase::In),
        Just(FsmPhase::Irq),
        Just(FsmPhase::Reset)
    ];
    (
        word.clone(),
        proptest::option::of(word.clone()),
        any::<bool>(),
        word.clone(),
        any::<bool>(),
        proptest::option::of(word.clone()),
        any::<bool>(),
        word.clone(),
        word,
        phase.clone(),
        phase,
    )
        .prop_map(
            move |(pc, d_addr, w_en_raw, sp, irq_jmp, op_ret, reset, ret_exp, bp, rs, ss)| {
                let d_addr = if w_en_raw && d_addr.is_none() { Some(sp) } else { d_addr };
                TraceStep {
                    step,
                    pc,
                    d_addr,
                    w_en: w_en_raw && d_addr.is_some(),
                    sp,
                    irq_jmp,
                    op_ret,
                    reset,
                    ucc: vec![UccRegs { ret_exp, bp, ret_state: rs, stack_state: ss }],
                }
            },
        )
}

fn trace_from(steps: Vec<TraceStep>) -> Trace {
    Trace {
        regions: Regions { uccs: vec![(0xC100, 0xC1FE)], cr: (0x0100, 0x011F) },
        steps,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    /// If a built-in G-safety spec is violated at position k on a trace,
    /// the body still fails at k after appending arbitrary steps, and the
    /// first witness never moves later.
    #[test]
    fn violations_persist_under_extension(
        prefix in (2usize..7).prop_flat_map(|len| {
            (0..len as u64).map(any_step).collect::<Vec<_>>()
        }),
        suffix in (1usize..4).prop_flat_map(|len| {
            (0..len as u64).map(any_step).collect::<Vec<_>>()
        }),
    ) {
        let prefix_len = prefix.len();
        let t = trace_from(prefix.clone());
        let mut extended_steps = prefix;
        for (i, mut s) in suffix.into_iter().enumerate() {
            s.step = (prefix_len + i) as u64;
            extended_steps.push(s);
        }
        let t_ext = trace_from(extended_steps);

        for spec in builtin_specs(1) {
            if let Ok(CheckOutcome::Violated { witness }) = check(&spec.formula, &t) {
                let Formula::Globally(body) = &spec.formula else {
                    panic!("built-ins are G-rooted");
                };
                prop_assert!(
                    !eval(body, &t_ext, witness).unwrap(),
                    "{}: body no longer fails at {witness} after extension",
                    spec.label()
                );
                match check(&spec.formula, &t_ext).unwrap() {
                    CheckOutcome::Violated { witness: w2 } => prop_assert!(
                        w2 <= witness,
                        "{}: witness moved later ({witness} -> {w2})",
                        spec.label()
                    ),
                    CheckOutcome::Holds => prop_assert!(
                        false,
                        "{}: extension cleared the violation",
                        spec.label()
                    ),
                }
            }
        }
    }
}
