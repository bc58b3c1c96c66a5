//! Continuous mode: execution resumes after resets (availability
//! experiments); the step budget is the horizon, not an error.

use ucca_corpus::{assemble, run_with_monitor, RunMode};
use ucca_isa::{MachineState, MemoryMap};
use ucca_monitor::{materialize_cr, CrImage, MonitorState, UccConfig, UccDefinition};

const ATTACK: &str = "
main:   CALL #ucc_fn
        HALT
        .org 0xC100
ucc_fn: MOV #0xFFFE, R4
        MOV R4, &0x0100
ucc_end: RET
";

#[test]
fn continuous_mode_restarts_until_the_horizon() {
    let mm = MemoryMap::default();
    let assembled = assemble(ATTACK, &mm).unwrap();
    let config = UccConfig { uccs: vec![UccDefinition::new(0xC100, 0xC108)] };
    let cr = CrImage::new(0x0100, 8);
    let mut machine = MachineState::load_program(&assembled.image.to_bytes(), mm).unwrap();
    materialize_cr(&mut machine, &config, &cr);
    let mut monitor = MonitorState::new(config.clone(), cr);

    let record =
        run_with_monitor(&mut machine, &mut monitor, &[], 60, RunMode::Continuous).unwrap();
    // the CR write repeats after every reset; each reset re-materializes CR
    assert!(record.resets.len() >= 3, "only {} resets", record.resets.len());
    assert!(!record.completed);
    let first = &record.resets[0];
    for ev in &record.resets {
        assert_eq!(ev.causes, first.causes);
    }
    assert_eq!(machine.read_word(0x0100).unwrap(), 0xC100, "CR restored after reset");

    // single-shot on the same program stops after one reset
    let mut machine2 = MachineState::load_program(&assembled.image.to_bytes(), mm).unwrap();
    materialize_cr(&mut machine2, &config, &cr);
    let mut monitor2 = MonitorState::new(config, cr);
    let record2 =
        run_with_monitor(&mut machine2, &mut monitor2, &[], 60, RunMode::SingleShot).unwrap();
    assert_eq!(record2.resets.len(), 1);
}
