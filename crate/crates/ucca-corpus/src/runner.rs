use crate::asm::{assemble, AsmError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;
use ucca_isa::{Addr, LoadError, MachineState, MemoryMap, StepError};
use ucca_ltl::{builtin_specs, check, CheckOutcome, Trace};
use ucca_monitor::{
    materialize_cr, validate_config, Cause, ConfigError, CrImage, MonitorState, UccConfig,
    UccDefinition, Verdict,
};

/// Expected verdict of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Completes,
    ResetAt(ExpectedCause),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectedCause {
    CrIntegrity,
    RetIntegrity(usize),
    StackIntegrity(usize),
}

impl ExpectedCause {
    pub fn matches(&self, cause: &Cause) -> bool {
        match (self, cause) {
            (ExpectedCause::CrIntegrity, Cause::CrIntegrity) => true,
            (ExpectedCause::RetIntegrity(k), Cause::RetIntegrity { ucc, .. }) => k == ucc,
            (ExpectedCause::StackIntegrity(k), Cause::StackIntegrity { ucc, .. }) => k == ucc,
            _ => false,
        }
    }
}

/// A runnable scenario: program source, compartment configuration (bounds
/// may name labels), interrupt schedule and expectation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub source: String,
    pub cr_base: Addr,
    pub capacity: usize,
    /// (min, max) pairs; each bound is a label name or a numeric literal.
    pub uccs: Vec<(String, String)>,
    pub schedule: Vec<(u64, u8)>,
    pub expected: Expectation,
    pub max_steps: u64,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Assembly(#[from] AsmError),
    #[error("invalid configuration: {0:?}")]
    Config(Vec<ConfigError>),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("step budget of {max} exceeded")]
    StepBudgetExceeded { max: u64 },
    #[error("bound `{0}` is neither a label nor a number")]
    BadBound(String),
    #[error("malformed manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResetEvent {
    pub step: u64,
    pub causes: Vec<Cause>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    Completed,
    ResetAt(ResetEvent),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Stop after the first monitor reset (the reset routine still runs,
    /// so the trace ends on the sentinel).
    SingleShot,
    /// Resume execution after resets until the program halts or the step
    /// budget runs out.
    Continuous,
}

/// Everything a monitored run produced.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub trace: Trace,
    pub resets: Vec<ResetEvent>,
    pub completed: bool,
}

/// Execute a loaded machine in lock-step with the monitor, honoring the
/// interrupt schedule. The monitor verdict is consulted after every
/// snapshot, before the next instruction executes; on reset the routine
/// runs at once and CR is re-materialized (its contents survive resets).
///
/// Exhausting `max_steps` is an error in single-shot mode; in continuous
/// mode it is the experiment horizon and the record so far is returned.
pub fn run_with_monitor(
    machine: &mut MachineState,
    monitor: &mut MonitorState,
    schedule: &[(u64, u8)],
    max_steps: u64,
    mode: RunMode,
) -> Result<RunRecord, ScenarioError> {
    let mut steps = Vec::new();
    let mut resets = Vec::new();

    // power-on: the reset routine's sentinel releases the boot-condition
    // monitor
    let sentinel = machine.perform_reset();
    let verdict = monitor.observe(&sentinel);
    steps.push(monitor.extend(&sentinel, &verdict));

    let mut completed = false;
    while !machine.halted {
        if machine.step_count() >= max_steps {
            if mode == RunMode::Continuous {
                break;
            }
            return Err(ScenarioError::StepBudgetExceeded { max: max_steps });
        }
        let irq = schedule
            .iter()
            .find(|(at, _)| *at == machine.step_count())
            .map(|&(_, n)| n);
        let snap = machine.step(irq)?;
        let verdict = monitor.observe(&snap);
        steps.push(monitor.extend(&snap, &verdict));
        if let Verdict::Reset(causes) = verdict {
            resets.push(ResetEvent { step: snap.step, causes });
            let sentinel = machine.perform_reset();
            materialize_cr(machine, monitor.config(), monitor.cr_image());
            let verdict = monitor.observe(&sentinel);
            steps.push(monitor.extend(&sentinel, &verdict));
            if mode == RunMode::SingleShot {
                break;
            }
        }
        if machine.halted {
            completed = true;
        }
    }
    if machine.halted {
        completed = true;
    }

    Ok(RunRecord {
        trace: Trace { regions: monitor.regions(), steps },
        resets,
        completed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecResult {
    Holds,
    Violated { witness: usize },
}

/// Result of one scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub name: String,
    pub outcome: RunOutcome,
    pub trace: Trace,
    /// (spec label, outcome) for every built-in spec on the recorded trace.
    pub spec_results: Vec<(String, SpecResult)>,
    pub matches_expected: bool,
    pub config: UccConfig,
    pub cr_image: CrImage,
    pub final_machine: MachineState,
}

impl ScenarioResult {
    pub fn all_specs_hold(&self) -> bool {
        self.spec_results.iter().all(|(_, r)| *r == SpecResult::Holds)
    }
}

fn resolve_bound(bound: &str, labels: &BTreeMap<String, Addr>) -> Result<Addr, ScenarioError> {
    if bound.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        let parsed = if let Some(hex) = bound.strip_prefix("0x").or_else(|| bound.strip_prefix("0X"))
        {
            u16::from_str_radix(hex, 16).ok()
        } else {
            bound.parse().ok()
        };
        return parsed.ok_or_else(|| ScenarioError::BadBound(bound.to_string()));
    }
    labels
        .get(bound)
        .copied()
        .ok_or_else(|| ScenarioError::BadBound(bound.to_string()))
}

/// Assemble, validate, execute (single-shot) and re-check a scenario.
pub fn run_scenario(s: &Scenario, memmap: &MemoryMap) -> Result<ScenarioResult, ScenarioError> {
    let assembled = assemble(&s.source, memmap)?;
    let uccs = s
        .uccs
        .iter()
        .map(|(lo, hi)| {
            Ok(UccDefinition::new(
                resolve_bound(lo, &assembled.labels)?,
                resolve_bound(hi, &assembled.labels)?,
            ))
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    let config = UccConfig { uccs };
    let cr_image = CrImage::new(s.cr_base, s.capacity);
    validate_config(&config, &cr_image, memmap).map_err(ScenarioError::Config)?;

    let mut machine = MachineState::load_program(&assembled.image.to_bytes(), *memmap)?;
    materialize_cr(&mut machine, &config, &cr_image);
    let mut monitor = MonitorState::new(config.clone(), cr_image);

    let record =
        run_with_monitor(&mut machine, &mut monitor, &s.schedule, s.max_steps, RunMode::SingleShot)?;

    let outcome = match record.resets.first() {
        Some(ev) => RunOutcome::ResetAt(ev.clone()),
        None => RunOutcome::Completed,
    };

    let spec_results = builtin_specs(config.uccs.len())
        .iter()
        .map(|spec| {
            let r = match check(&spec.formula, &record.trace) {
                Ok(CheckOutcome::Holds) => SpecResult::Holds,
                Ok(CheckOutcome::Violated { witness }) => SpecResult::Violated { witness },
                Err(e) => panic!("spec {} unevaluable on scenario trace: {e}", spec.label()),
            };
            (spec.label(), r)
        })
        .collect();

    let matches_expected = match (&s.expected, &outcome) {
        (Expectation::Completes, RunOutcome::Completed) => true,
        (Expectation::ResetAt(want), RunOutcome::ResetAt(ev)) => {
            ev.causes.iter().any(|c| want.matches(c))
        }
        _ => false,
    };

    Ok(ScenarioResult {
        name: s.name.clone(),
        outcome,
        trace: record.trace,
        spec_results,
        matches_expected,
        config,
        cr_image,
        final_machine: machine,
    })
}

// --- manifest loading -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct Manifest {
    name: String,
    #[serde(default)]
    description: String,
    cr_base: String,
    #[serde(default = "default_capacity")]
    capacity: usize,
    uccs: Vec<ManifestUcc>,
    #[serde(default)]
    schedule: Vec<ManifestIrq>,
    expected: ManifestExpected,
    #[serde(default = "default_max_steps")]
    max_steps: u64,
}

fn default_capacity() -> usize {
    8
}

fn default_max_steps() -> u64 {
    10_000
}

#[derive(Serialize, Deserialize)]
struct ManifestUcc {
    min: String,
    max: String,
}

#[derive(Serialize, Deserialize)]
struct ManifestIrq {
    step: u64,
    irq: u8,
}

#[derive(Serialize, Deserialize)]
struct ManifestExpected {
    result: String,
    #[serde(default)]
    cause: Option<String>,
    #[serde(default)]
    ucc: Option<usize>,
}

impl Scenario {
    /// Build a scenario from a sidecar manifest plus its assembly source.
    pub fn from_manifest(manifest_json: &str, source: &str) -> Result<Scenario, ScenarioError> {
        let m: Manifest = serde_json::from_str(manifest_json)
            .map_err(|e| ScenarioError::Manifest(e.to_string()))?;
        let cr_base = if let Some(hex) = m.cr_base.strip_prefix("0x") {
            u16::from_str_radix(hex, 16).map_err(|e| ScenarioError::Manifest(e.to_string()))?
        } else {
            m.cr_base.parse().map_err(|_| ScenarioError::Manifest("bad cr_base".into()))?
        };
        let expected = match m.expected.result.as_str() {
            "completes" => Expectation::Completes,
            "reset" => {
                let ucc = m.expected.ucc.unwrap_or(0);
                let cause = match m.expected.cause.as_deref() {
                    Some("cr-integrity") => ExpectedCause::CrIntegrity,
                    Some("ret-integrity") => ExpectedCause::RetIntegrity(ucc),
                    Some("stack-integrity") => ExpectedCause::StackIntegrity(ucc),
                    other => {
                        return Err(ScenarioError::Manifest(format!(
                            "bad expected cause {other:?}"
                        )))
                    }
                };
                Expectation::ResetAt(cause)
            }
            other => return Err(ScenarioError::Manifest(format!("bad expected result `{other}`"))),
        };
        Ok(Scenario {
            name: m.name,
            description: m.description,
            source: source.to_string(),
            cr_base,
            capacity: m.capacity,
            uccs: m.uccs.into_iter().map(|u| (u.min, u.max)).collect(),
            schedule: m.schedule.into_iter().map(|e| (e.step, e.irq)).collect(),
            expected,
            max_steps: m.max_steps,
        })
    }
}
