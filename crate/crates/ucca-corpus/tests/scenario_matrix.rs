//! The shipped scenario matrix: expected verdicts, zero-latency detection
//! against the brute-force escape oracle, spec conformance of every
//! recorded trace, interrupt transparency and marshal-cost accounting.

use ucca_corpus::{
    assemble, emit_copy_stub, run_scenario, scenarios, Expectation, RunOutcome, Scenario,
};
use ucca_isa::{estimate_marshal_cost, MachineState, MemoryMap, SignalSnapshot};
use ucca_monitor::{CrImage, UccConfig, UccDefinition};
use ucca_verify::oracle::first_violation;

fn mm() -> MemoryMap {
    MemoryMap::default()
}

/// Re-run a scenario's program without the monitor to collect its raw
/// snapshots (for the oracle, which wants unextended signals).
fn raw_snapshots(s: &Scenario, stop_after: u64) -> (Vec<SignalSnapshot>, UccConfig, CrImage) {
    let assembled = assemble(&s.source, &mm()).unwrap();
    let mut labels_resolved = Vec::new();
    for (lo, hi) in &s.uccs {
        let get = |b: &str| -> u16 {
            if let Some(hex) = b.strip_prefix("0x") {
                u16::from_str_radix(hex, 16).unwrap()
            } else if b.chars().next().unwrap().is_ascii_digit() {
                b.parse().unwrap()
            } else {
                assembled.labels[b]
            }
        };
        labels_resolved.push(UccDefinition::new(get(lo), get(hi)));
    }
    let config = UccConfig { uccs: labels_resolved };
    let cr = CrImage::new(s.cr_base, s.capacity);
    let mut machine = MachineState::load_program(&assembled.image.to_bytes(), mm()).unwrap();
    ucca_monitor::materialize_cr(&mut machine, &config, &cr);
    let mut snaps = vec![machine.perform_reset()];
    while !machine.halted && machine.step_count() <= stop_after {
        let irq = s
            .schedule
            .iter()
            .find(|(at, _)| *at == machine.step_count())
            .map(|&(_, n)| n);
        match machine.step(irq) {
            Ok(snap) => snaps.push(snap),
            Err(_) => break,
        }
    }
    (snaps, config, cr)
}

#[test]
fn every_scenario_matches_its_expected_verdict() {
    for s in scenarios() {
        let result = run_scenario(&s, &mm()).unwrap_or_else(|e| panic!("{}: {e}", s.name));
        assert!(
            result.matches_expected,
            "{}: expected {:?}, got {:?}",
            s.name, s.expected, result.outcome
        );
    }
}

#[test]
fn every_scenario_trace_satisfies_all_builtin_specs() {
    for s in scenarios() {
        let result = run_scenario(&s, &mm()).unwrap();
        for (label, r) in &result.spec_results {
            assert_eq!(
                *r,
                ucca_corpus::SpecResult::Holds,
                "{}: spec {label} violated on the recorded trace",
                s.name
            );
        }
    }
}

/// Detection latency: in every attack scenario the monitor resets on
/// exactly the first snapshot the escape oracle flags, and nothing from
/// the compromised flow runs afterwards.
#[test]
fn attack_detection_has_zero_latency() {
    for s in scenarios() {
        let Expectation::ResetAt(_) = s.expected else { continue };
        let result = run_scenario(&s, &mm()).unwrap();
        let RunOutcome::ResetAt(ev) = &result.outcome else {
            panic!("{}: expected a reset", s.name);
        };
        // run the raw program a little past the reset point so the oracle
        // sees at least as much of the trace as the monitor did
        let (snaps, config, cr) = raw_snapshots(&s, ev.step + 10);
        let (oracle_step, _) = first_violation(&snaps, &config, &cr)
            .unwrap_or_else(|| panic!("{}: oracle found no violation", s.name));
        assert_eq!(
            ev.step, oracle_step as u64,
            "{}: monitor reset at {} but the first violating snapshot is {}",
            s.name, ev.step, oracle_step
        );
        // single-shot: the violating snapshot is the last instruction
        // executed; only the reset sentinel follows it in the trace
        let last = result.trace.steps.last().unwrap();
        assert_eq!(last.pc, 0, "{}: trace must end on the reset sentinel", s.name);
        assert_eq!(last.step, ev.step + 1, "{}: instructions ran past the verdict", s.name);
    }
}

/// Benign scenarios never flag anything: the oracle agrees there is no
/// violating snapshot anywhere in the run.
#[test]
fn benign_scenarios_are_clean_per_the_oracle() {
    for s in scenarios() {
        if s.expected != Expectation::Completes {
            continue;
        }
        let (snaps, config, cr) = raw_snapshots(&s, u64::MAX - 1);
        assert_eq!(first_violation(&snaps, &config, &cr), None, "{}", s.name);
    }
}

/// benign-interrupted computes the same result as the same program with
/// the interrupt removed, modulo the ISR's own side effects (its counter
/// cell and scratch register).
#[test]
fn interrupt_transparency() {
    let s = scenarios().into_iter().find(|s| s.name == "benign-interrupted").unwrap();
    let with_irq = run_scenario(&s, &mm()).unwrap();
    let mut no_irq = s.clone();
    no_irq.schedule.clear();
    let without_irq = run_scenario(&no_irq, &mm()).unwrap();
    assert_eq!(with_irq.outcome, RunOutcome::Completed);
    assert_eq!(without_irq.outcome, RunOutcome::Completed);

    let (a, b) = (&with_irq.final_machine, &without_irq.final_machine);
    assert_eq!(a.read_word(0x0300).unwrap(), b.read_word(0x0300).unwrap());
    assert_eq!(a.pc, b.pc);
    assert_eq!(a.sp, b.sp);
    // compare the heap and the live stack; dead stack below sp holds the
    // popped interrupt frame, which is ISR-mechanism residue. The ISR's
    // own side effects (counter cell 0x0320 and R9) are also excluded.
    for addr in (0x0200..0x0A00u16).step_by(2) {
        let dead_stack = addr >= 0x0900 && addr < a.sp;
        if addr == 0x0320 || dead_stack {
            continue;
        }
        assert_eq!(
            a.read_word(addr).unwrap(),
            b.read_word(addr).unwrap(),
            "RAM diverges at 0x{addr:04X}"
        );
    }
    for (i, (x, y)) in a.gpr.iter().zip(&b.gpr).enumerate() {
        if i == 5 {
            continue;
        }
        assert_eq!(x, y, "R{} diverges", i + 4);
    }
}

/// The marshal scenario's caller variable carries the compartment-computed
/// value.
#[test]
fn marshal_copies_round_trip() {
    let s = scenarios().into_iter().find(|s| s.name == "benign-marshal").unwrap();
    let result = run_scenario(&s, &mm()).unwrap();
    assert_eq!(result.outcome, RunOutcome::Completed);
    assert_eq!(result.final_machine.read_word(0x0310).unwrap(), 0x1235);
    assert_eq!(result.final_machine.read_word(0x0300).unwrap(), 0x1235);
}

/// Executing a generated copy stub for 2N bytes takes exactly N
/// instruction steps attributable to copying, matching the analytic cost.
#[test]
fn copy_stub_costs_match_the_model() {
    for n_bytes in [2usize, 6, 7, 16] {
        let stub = emit_copy_stub(0x0400, 0x0500, n_bytes, 7);
        let copy_instructions = stub.len() - 1; // minus the pointer setup
        assert_eq!(copy_instructions, estimate_marshal_cost(n_bytes));

        let mut src_init = String::new();
        let words = n_bytes.div_ceil(2);
        for k in 0..words {
            src_init.push_str(&format!(
                "MOV #0x{:04X}, R4\nMOV #0x{:04X}, R5\nMOV R4, @R5\n",
                0x1100 + k,
                0x0400 + 2 * k
            ));
        }
        let source = format!("main:\n{src_init}{}\nHALT\n", stub.join("\n"));
        let assembled = assemble(&source, &mm()).unwrap();
        let mut m = MachineState::load_program(&assembled.image.to_bytes(), mm()).unwrap();
        let mut copy_steps = 0;
        while !m.halted {
            let before = m.pc;
            m.step(None).unwrap();
            let _ = before;
            copy_steps += 1;
        }
        // total = 3 init instructions per word + 1 setup + N copies + HALT
        assert_eq!(copy_steps, 3 * words + 1 + copy_instructions + 1);
        for k in 0..words {
            assert_eq!(m.read_word((0x0500 + 2 * k) as u16).unwrap(), (0x1100 + k) as u16);
        }
    }
}
