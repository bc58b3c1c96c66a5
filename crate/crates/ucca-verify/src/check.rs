use crate::alphabet::ReducedAlphabet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;
use ucca_isa::SignalSnapshot;
use ucca_ltl::{builtin_specs, check, BuiltinSpec, CheckOutcome, Trace};
use ucca_monitor::{CrImage, MonitorState, Mutation, UccConfig};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CheckError {
    #[error("campaign would examine {requested} traces, over the {budget} budget")]
    BudgetExceeded { requested: u128, budget: u128 },
    #[error("empty alphabet")]
    EmptyAlphabet,
}

/// A spec violated on a generated trace, with enough to replay it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub spec_eq: u8,
    pub spec_ucc: Option<usize>,
    pub step: usize,
    pub sequence: Vec<RawStep>,
}

/// Serializable raw symbol (the alphabet side of a snapshot).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawStep {
    pub pc: u16,
    pub d_addr: Option<u16>,
    pub w_en: bool,
    pub sp: u16,
    pub irq_jmp: bool,
    pub op_ret: Option<u16>,
}

impl RawStep {
    fn of(s: &SignalSnapshot) -> RawStep {
        RawStep {
            pc: s.pc,
            d_addr: s.d_addr,
            w_en: s.w_en,
            sp: s.sp,
            irq_jmp: s.irq_jmp,
            op_ret: s.op_ret,
        }
    }

    pub fn snapshot(&self, step: u64) -> SignalSnapshot {
        SignalSnapshot {
            step,
            pc: self.pc,
            d_addr: self.d_addr,
            w_en: self.w_en,
            sp: self.sp,
            irq_jmp: self.irq_jmp,
            op_ret: self.op_ret,
            reset: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckMode {
    Exhaustive { depth: usize },
    Random { n_traces: u64, length: usize, seed: u64 },
}

/// Outcome of a campaign. `violations` is empty iff every spec held on
/// every examined trace; stored witnesses are capped but the total count
/// is exact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub mode: CheckMode,
    pub alphabet_size: usize,
    pub traces_examined: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
    pub elapsed_ms: u128,
    pub mutation: Option<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

const WITNESS_CAP: usize = 64;

/// Feed one raw sequence to a fresh boot-condition monitor and return the
/// monitor-extended trace.
pub fn run_sequence(
    config: &UccConfig,
    cr: &CrImage,
    mutation: Option<Mutation>,
    seq: &[SignalSnapshot],
) -> Trace {
    let mut monitor = MonitorState::with_mutation(config.clone(), *cr, mutation);
    let regions = monitor.regions();
    let steps = seq
        .iter()
        .map(|snap| {
            let verdict = monitor.observe(snap);
            monitor.extend(snap, &verdict)
        })
        .collect();
    Trace { regions, steps }
}

fn violations_of(specs: &[BuiltinSpec], trace: &Trace, seq: &[SignalSnapshot]) -> Vec<Violation> {
    let mut out = Vec::new();
    for spec in specs {
        if let Ok(CheckOutcome::Violated { witness }) = check(&spec.formula, trace) {
            out.push(Violation {
                spec_eq: spec.eq,
                spec_ucc: spec.ucc,
                step: witness,
                sequence: seq.iter().map(RawStep::of).collect(),
            });
        }
    }
    out
}

/// Enumerate every sequence of `depth` symbols and check all built-in specs
/// on the monitor-extended trace of each. `stop_on_first` short-circuits
/// to the violation with the smallest sequence number (used for mutation
/// campaigns where only detection matters).
pub fn exhaustive_check(
    config: &UccConfig,
    cr: &CrImage,
    alphabet: &ReducedAlphabet,
    depth: usize,
    mutation: Option<Mutation>,
    budget: u128,
    stop_on_first: bool,
) -> Result<CheckReport, CheckError> {
    if alphabet.is_empty() {
        return Err(CheckError::EmptyAlphabet);
    }
    let total = if depth == 0 { 0 } else { (alphabet.len() as u128).pow(depth as u32) };
    if total > budget {
        return Err(CheckError::BudgetExceeded { requested: total, budget });
    }
    let start = Instant::now();
    let specs = builtin_specs(config.uccs.len());
    let total64 = total as u64;

    let (violation_count, violations) = if stop_on_first {
        let found = (0..total as usize)
            .into_par_iter()
            .by_exponential_blocks()
            .find_map_first(|seq_no| {
                let seq = alphabet.sequence(seq_no as u128, depth);
                let trace = run_sequence(config, cr, mutation, &seq);
                let vs = violations_of(&specs, &trace, &seq);
                (!vs.is_empty()).then_some(vs)
            });
        match found {
            Some(vs) => (vs.len() as u64, vs),
            None => (0, Vec::new()),
        }
    } else {
        let per_chunk: Vec<(u64, Vec<Violation>)> = (0..total as usize)
            .into_par_iter()
            .fold(
                || (0u64, Vec::new()),
                |(mut count, mut acc), seq_no| {
                    let seq = alphabet.sequence(seq_no as u128, depth);
                    let trace = run_sequence(config, cr, mutation, &seq);
                    let vs = violations_of(&specs, &trace, &seq);
                    count += vs.len() as u64;
                    if acc.len() < WITNESS_CAP {
                        acc.extend(vs);
                    }
                    (count, acc)
                },
            )
            .collect();
        let mut count = 0;
        let mut all = Vec::new();
        for (c, vs) in per_chunk {
            count += c;
            if all.len() < WITNESS_CAP {
                all.extend(vs);
            }
        }
        all.truncate(WITNESS_CAP);
        (count, all)
    };

    Ok(CheckReport {
        mode: CheckMode::Exhaustive { depth },
        alphabet_size: alphabet.len(),
        traces_examined: total64,
        violation_count,
        violations,
        elapsed_ms: start.elapsed().as_millis(),
        mutation: mutation.map(|m| m.name().to_string()),
    })
}

/// Seeded random campaign: `n_traces` sequences of `length` symbols.
/// Deterministic for a given seed regardless of worker count (each chunk
/// derives its own generator from the seed and chunk number).
pub fn random_check(
    config: &UccConfig,
    cr: &CrImage,
    alphabet: &ReducedAlphabet,
    n_traces: u64,
    length: usize,
    seed: u64,
    mutation: Option<Mutation>,
) -> Result<CheckReport, CheckError> {
    if alphabet.is_empty() {
        return Err(CheckError::EmptyAlphabet);
    }
    let start = Instant::now();
    let specs = builtin_specs(config.uccs.len());
    const CHUNK: u64 = 4096;
    let n_chunks = n_traces.div_ceil(CHUNK);

    let per_chunk: Vec<(u64, Vec<Violation>)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (chunk.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(n_traces);
            let mut count = 0u64;
            let mut acc = Vec::new();
            let mut seq = Vec::with_capacity(length);
            for _ in lo..hi {
                seq.clear();
                for t in 0..length {
                    seq.push(alphabet.symbol(rng.gen_range(0..alphabet.len()), t as u64));
                }
                let trace = run_sequence(config, cr, mutation, &seq);
                let vs = violations_of(&specs, &trace, &seq);
                count += vs.len() as u64;
                if acc.len() < WITNESS_CAP {
                    acc.extend(vs);
                }
            }
            (count, acc)
        })
        .collect();

    let mut count = 0;
    let mut all = Vec::new();
    for (c, vs) in per_chunk {
        count += c;
        if all.len() < WITNESS_CAP {
            all.extend(vs);
        }
    }
    all.truncate(WITNESS_CAP);

    Ok(CheckReport {
        mode: CheckMode::Random { n_traces, length, seed },
        alphabet_size: alphabet.len(),
        traces_examined: n_traces,
        violation_count: count,
        violations: all,
        elapsed_ms: start.elapsed().as_millis(),
        mutation: mutation.map(|m| m.name().to_string()),
    })
}

/// Re-run one stored witness; a sound report reproduces the same
/// (spec, step) verdict.
pub fn replay_violation(
    config: &UccConfig,
    cr: &CrImage,
    mutation: Option<Mutation>,
    v: &Violation,
) -> bool {
    let seq: Vec<SignalSnapshot> =
        v.sequence.iter().enumerate().map(|(t, r)| r.snapshot(t as u64)).collect();
    let trace = run_sequence(config, cr, mutation, &seq);
    let specs = builtin_specs(config.uccs.len());
    specs
        .iter()
        .filter(|s| s.eq == v.spec_eq && s.ucc == v.spec_ucc)
        .any(|s| matches!(check(&s.formula, &trace), Ok(CheckOutcome::Violated { witness }) if witness == v.step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ucca_isa::MemoryMap;
    use ucca_monitor::UccDefinition;

    fn setup() -> (UccConfig, CrImage, ReducedAlphabet) {
        let config = UccConfig { uccs: vec![UccDefinition::new(0xC100, 0xC1FE)] };
        let cr = CrImage::new(0x0100, 8);
        let alphabet = ReducedAlphabet::default_for(&config, &cr, &MemoryMap::default());
        (config, cr, alphabet)
    }

    #[test]
    fn depth_one_has_no_violations() {
        let (config, cr, alphabet) = setup();
        let report =
            exhaustive_check(&config, &cr, &alphabet, 1, None, 1 << 32, false).unwrap();
        assert_eq!(report.traces_examined, alphabet.len() as u64);
        assert!(report.passed(), "{:?}", report.violations.first());
    }

    #[test]
    fn depth_two_exhaustive_is_clean() {
        let (config, cr, alphabet) = setup();
        let report =
            exhaustive_check(&config, &cr, &alphabet, 2, None, 1 << 32, false).unwrap();
        assert_eq!(report.traces_examined, (alphabet.len() as u64).pow(2));
        assert!(report.passed(), "{:?}", report.violations.first());
    }

    #[test]
    fn budget_enforced() {
        let (config, cr, alphabet) = setup();
        let err = exhaustive_check(&config, &cr, &alphabet, 3, None, 100, false).unwrap_err();
        assert!(matches!(err, CheckError::BudgetExceeded { .. }));
    }

    #[test]
    fn random_campaign_is_reproducible() {
        let (config, cr, alphabet) = setup();
        let a = random_check(&config, &cr, &alphabet, 500, 12, 0xDEAD_BEEF, None).unwrap();
        let b = random_check(&config, &cr, &alphabet, 500, 12, 0xDEAD_BEEF, None).unwrap();
        assert!(a.passed(), "{:?}", a.violations.first());
        assert_eq!(a.violation_count, b.violation_count);
        assert_eq!(a.violations, b.violations);
    }

    #[test]
    fn mutant_is_caught_and_witness_replays() {
        let (config, cr, alphabet) = setup();
        let report = exhaustive_check(
            &config,
            &cr,
            &alphabet,
            3,
            Some(Mutation::DropCrCheck),
            1 << 33,
            true,
        )
        .unwrap();
        assert!(!report.passed());
        let v = &report.violations[0];
        assert_eq!(v.spec_eq, 1);
        assert!(replay_violation(&config, &cr, Some(Mutation::DropCrCheck), v));
        // the witness does not replay against the unmutated monitor
        assert!(!replay_violation(&config, &cr, None, v));
    }
}
