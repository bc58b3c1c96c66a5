//! `ucca` — assemble programs, run them under the monitor, check traces
//! against the built-in specifications, and drive the verification
//! campaigns and scenario matrix.
//!
//! Exit codes: 0 ok, 1 usage/parse error, 2 I/O error, 10 monitor reset,
//! 20 verification violation or unmet scenario expectation.

use clap::{Parser, Subcommand};
use serde::Deserialize;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use ucca_corpus::{
    assemble, run_scenario, run_with_monitor, scenarios, Expectation, RunMode, RunOutcome,
};
use ucca_isa::{MachineState, MemoryMap};
use ucca_ltl::{builtin_specs, check, parse_formula, read_trace, write_trace, CheckOutcome};
use ucca_monitor::{
    estimate_hardware_cost, materialize_cr, validate_config, MonitorConfig, MonitorState, Mutation,
};
use ucca_verify::{exhaustive_check, random_check, ReducedAlphabet};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_RESET: u8 = 10;
const EXIT_VIOLATION: u8 = 20;

#[derive(Parser)]
#[command(name = "ucca", version, about = "UCCA monitor simulator", disable_help_flag = false)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a source file into a program image (plus a label map).
    Asm {
        source: PathBuf,
        /// Output image path
        #[arg(short, long)]
        out: PathBuf,
        /// Where to write the label map (default: <out>.labels.json)
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Execute an image in lock-step with the monitor.
    Run {
        /// Program image produced by `ucca asm`
        #[arg(long)]
        image: PathBuf,
        /// Monitor configuration (JSON: cr_base, uccs)
        #[arg(long)]
        config: PathBuf,
        /// Interrupt schedule (JSON: [{"step": N, "irq": N}, ...])
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        max_steps: u64,
        /// Write the monitor-extended trace here (JSON lines)
        #[arg(long)]
        trace: Option<PathBuf>,
        /// single-shot (stop at first reset) or continuous
        #[arg(long, default_value = "single-shot")]
        mode: String,
    },
    /// Check a recorded trace against built-in or ad-hoc specifications.
    Check {
        #[arg(long)]
        trace: PathBuf,
        /// Spec selection: "all" or comma-separated equation ids (1..13)
        #[arg(long, default_value = "all")]
        spec: String,
        /// Check one ad-hoc formula instead of the built-ins
        #[arg(long)]
        formula: Option<String>,
    },
    /// Drive the monitor FSMs with adversarial signal sequences and check
    /// every built-in spec on every trace.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Exhaustive enumeration depth
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Switch to a random campaign of this many traces
        #[arg(long)]
        random: Option<u64>,
        /// Trace length for the random campaign
        #[arg(long, default_value_t = 20)]
        length: usize,
        /// Seed (hex or decimal) for the random campaign
        #[arg(long, default_value = "0xDEFA17")]
        seed: String,
        /// Enumerated-trace budget
        #[arg(long, default_value_t = 100_000_000)]
        budget: u128,
        /// Run a deliberately broken monitor (see `Mutation`)
        #[arg(long)]
        mutant: Option<String>,
        /// Custom alphabet (JSON with pc/access/sp/irq_jmp/op_ret domains)
        #[arg(long)]
        alphabet: Option<PathBuf>,
        /// Write the JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the shipped scenario catalog.
    Scenarios {
        /// Glob over scenario names (e.g. "benign-*")
        #[arg(long, default_value = "*")]
        filter: String,
        /// Write the pass/fail matrix here (JSON)
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the specification catalog.
    Specs {
        #[arg(long, default_value_t = 1)]
        uccs: usize,
    },
    /// Print the analytic hardware-cost model.
    Cost {
        #[arg(long)]
        uccs: usize,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("UCCA_SIM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(dispatch(cli.command))
}

fn read_file(path: &Path) -> Result<Vec<u8>, u8> {
    fs::read(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })
}

fn read_text(path: &Path) -> Result<String, u8> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), u8> {
    fs::write(path, bytes).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        EXIT_IO
    })
}

fn load_config(path: &Path) -> Result<MonitorConfig, u8> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| {
        eprintln!("error: bad config {}: {e}", path.display());
        EXIT_USAGE
    })
}

#[derive(Deserialize)]
struct ScheduleEntry {
    step: u64,
    irq: u8,
}

fn load_schedule(path: &Path) -> Result<Vec<(u64, u8)>, u8> {
    let text = read_text(path)?;
    let entries: Vec<ScheduleEntry> = serde_json::from_str(&text).map_err(|e| {
        eprintln!("error: bad schedule {}: {e}", path.display());
        EXIT_USAGE
    })?;
    Ok(entries.into_iter().map(|e| (e.step, e.irq)).collect())
}

fn dispatch(cmd: Command) -> u8 {
    match cmd {
        Command::Asm { source, out, labels } => cmd_asm(&source, &out, labels.as_deref()),
        Command::Run { image, config, schedule, max_steps, trace, mode } => {
            cmd_run(&image, &config, schedule.as_deref(), max_steps, trace.as_deref(), &mode)
        }
        Command::Check { trace, spec, formula } => cmd_check(&trace, &spec, formula.as_deref()),
        Command::Verify { config, depth, random, length, seed, budget, mutant, alphabet, report } => cmd_verify(
            &config,
            depth,
            random,
            length,
            &seed,
            budget,
            mutant.as_deref(),
            alphabet.as_deref(),
            report.as_deref(),
        ),
        Command::Scenarios { filter, report } => cmd_scenarios(&filter, report.as_deref()),
        Command::Specs { uccs } => cmd_specs(uccs),
        Command::Cost { uccs } => cmd_cost(uccs),
    }
    .unwrap_or_else(|code| code)
}

fn cmd_asm(source: &Path, out: &Path, labels: Option<&Path>) -> Result<u8, u8> {
    let text = read_text(source)?;
    let assembled = assemble(&text, &MemoryMap::default()).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })?;
    write_file(out, &assembled.image.to_bytes())?;
    let label_path = labels
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.with_extension("labels.json"));
    let map: serde_json::Map<String, serde_json::Value> = assembled
        .labels
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(format!("0x{v:04X}"))))
        .collect();
    write_file(&label_path, serde_json::to_string_pretty(&map).unwrap().as_bytes())?;
    println!(
        "assembled {} bytes, entry 0x{:04X}, {} labels",
        assembled.image.prog.len(),
        assembled.image.entry,
        assembled.labels.len()
    );
    Ok(EXIT_OK)
}

fn cmd_run(
    image: &Path,
    config: &Path,
    schedule: Option<&Path>,
    max_steps: u64,
    trace_out: Option<&Path>,
    mode: &str,
) -> Result<u8, u8> {
    let memmap = MemoryMap::default();
    let mode = match mode {
        "single-shot" => RunMode::SingleShot,
        "continuous" => RunMode::Continuous,
        other => {
            eprintln!("error: unknown mode `{other}` (single-shot|continuous)");
            return Err(EXIT_USAGE);
        }
    };
    let (ucc_config, cr_image) = load_config(config)?.split();
    if let Err(errors) = validate_config(&ucc_config, &cr_image, &memmap) {
        for e in errors {
            eprintln!("config-invalid: {e}");
        }
        return Err(EXIT_USAGE);
    }
    let image_bytes = read_file(image)?;
    let schedule = match schedule {
        Some(p) => load_schedule(p)?,
        None => Vec::new(),
    };

    let mut machine = MachineState::load_program(&image_bytes, memmap).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })?;
    materialize_cr(&mut machine, &ucc_config, &cr_image);
    let mut monitor = MonitorState::new(ucc_config, cr_image);

    let record = run_with_monitor(&mut machine, &mut monitor, &schedule, max_steps, mode)
        .map_err(|e| {
            eprintln!("error: {e}");
            EXIT_USAGE
        })?;

    if let Some(path) = trace_out {
        let mut buf = Vec::new();
        write_trace(&record.trace, &mut buf).expect("trace serialization");
        write_file(path, &buf)?;
    }

    if let Some(ev) = record.resets.first() {
        let causes: Vec<String> = ev.causes.iter().map(|c| c.to_string()).collect();
        println!("monitor reset at step {} cause [{}]", ev.step, causes.join(", "));
        Ok(EXIT_RESET)
    } else {
        println!("completed after {} steps", record.trace.steps.len());
        Ok(EXIT_OK)
    }
}

fn cmd_check(trace_path: &Path, spec_sel: &str, formula: Option<&str>) -> Result<u8, u8> {
    let bytes = read_file(trace_path)?;
    let trace = read_trace(&mut bytes.as_slice()).map_err(|e| {
        eprintln!("malformed-trace: {e}");
        EXIT_USAGE
    })?;
    let n_ucc = trace.regions.uccs.len();

    let mut all_hold = true;
    let mut evaluate = |label: String, f: &ucca_ltl::Formula| match check(f, &trace) {
        Ok(CheckOutcome::Holds) => println!("{label}: holds"),
        Ok(CheckOutcome::Violated { witness }) => {
            println!("{label}: violated at step {witness}");
            all_hold = false;
        }
        Err(e) => {
            println!("{label}: unevaluable ({e})");
            all_hold = false;
        }
    };

    if let Some(text) = formula {
        let f = parse_formula(text, n_ucc).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_USAGE
        })?;
        evaluate("formula".to_string(), &f);
    } else {
        let wanted: Option<Vec<u8>> = if spec_sel == "all" {
            None
        } else {
            let ids = spec_sel
                .split(',')
                .map(|s| s.trim().parse::<u8>())
                .collect::<Result<Vec<u8>, _>>()
                .map_err(|_| {
                    eprintln!("error: bad spec selection `{spec_sel}`");
                    EXIT_USAGE
                })?;
            if ids.iter().any(|id| !(1..=13).contains(id)) {
                eprintln!("unknown-spec-id in `{spec_sel}` (valid: 1..13)");
                return Err(EXIT_USAGE);
            }
            Some(ids)
        };
        for spec in builtin_specs(n_ucc) {
            if wanted.as_ref().is_some_and(|ids| !ids.contains(&spec.eq)) {
                continue;
            }
            evaluate(spec.label(), &spec.formula);
        }
    }
    Ok(if all_hold { EXIT_OK } else { EXIT_VIOLATION })
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    config: &Path,
    depth: usize,
    random: Option<u64>,
    length: usize,
    seed: &str,
    budget: u128,
    mutant: Option<&str>,
    alphabet_path: Option<&Path>,
    report_out: Option<&Path>,
) -> Result<u8, u8> {
    let memmap = MemoryMap::default();
    let (ucc_config, cr_image) = load_config(config)?.split();
    if let Err(errors) = validate_config(&ucc_config, &cr_image, &memmap) {
        for e in errors {
            eprintln!("config-invalid: {e}");
        }
        return Err(EXIT_USAGE);
    }
    let mutation = match mutant {
        None => None,
        Some(name) => match Mutation::from_name(name) {
            Some(m) => Some(m),
            None => {
                let names: Vec<&str> = Mutation::ALL.iter().map(|m| m.name()).collect();
                eprintln!("error: unknown mutant `{name}` (known: {})", names.join(", "));
                return Err(EXIT_USAGE);
            }
        },
    };
    let alphabet = match alphabet_path {
        None => ReducedAlphabet::default_for(&ucc_config, &cr_image, &memmap),
        Some(path) => {
            let text = read_text(path)?;
            serde_json::from_str(&text).map_err(|e| {
                eprintln!("error: bad alphabet {}: {e}", path.display());
                EXIT_USAGE
            })?
        }
    };

    let report = if let Some(n) = random {
        let seed = seed
            .strip_prefix("0x")
            .map(|h| u64::from_str_radix(h, 16))
            .unwrap_or_else(|| seed.parse())
            .map_err(|_| {
                eprintln!("error: bad seed `{seed}`");
                EXIT_USAGE
            })?;
        random_check(&ucc_config, &cr_image, &alphabet, n, length, seed, mutation)
    } else {
        exhaustive_check(&ucc_config, &cr_image, &alphabet, depth, mutation, budget, false)
    }
    .map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })?;

    println!(
        "examined {} traces over a {}-symbol alphabet in {} ms: {}",
        report.traces_examined,
        report.alphabet_size,
        report.elapsed_ms,
        if report.passed() {
            "all specs hold".to_string()
        } else {
            format!("{} violations", report.violation_count)
        }
    );
    for v in report.violations.iter().take(5) {
        println!(
            "  spec eq{:02}{} violated at step {}",
            v.spec_eq,
            v.spec_ucc.map(|k| format!("/ucc{k}")).unwrap_or_default(),
            v.step
        );
    }
    if let Some(path) = report_out {
        write_file(path, serde_json::to_string_pretty(&report).unwrap().as_bytes())?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_VIOLATION })
}

fn glob_match(pattern: &str, name: &str) -> bool {
    fn rec(p: &[u8], n: &[u8]) -> bool {
        match (p.first(), n.first()) {
            (None, None) => true,
            (Some(b'*'), _) => rec(&p[1..], n) || (!n.is_empty() && rec(p, &n[1..])),
            (Some(b'?'), Some(_)) => rec(&p[1..], &n[1..]),
            (Some(a), Some(b)) if a == b => rec(&p[1..], &n[1..]),
            _ => false,
        }
    }
    rec(pattern.as_bytes(), name.as_bytes())
}

fn cmd_scenarios(filter: &str, report_out: Option<&Path>) -> Result<u8, u8> {
    let memmap = MemoryMap::default();
    let mut all_pass = true;
    let mut rows = Vec::new();
    for s in scenarios() {
        if !glob_match(filter, &s.name) {
            continue;
        }
        let result = match run_scenario(&s, &memmap) {
            Ok(r) => r,
            Err(e) => {
                println!("{:<24} ERROR {e}", s.name);
                all_pass = false;
                continue;
            }
        };
        let specs_ok = result.all_specs_hold();
        let pass = result.matches_expected && specs_ok;
        all_pass &= pass;
        let actual = match &result.outcome {
            RunOutcome::Completed => "completes".to_string(),
            RunOutcome::ResetAt(ev) => {
                let causes: Vec<String> = ev.causes.iter().map(|c| c.to_string()).collect();
                format!("reset@{} [{}]", ev.step, causes.join(","))
            }
        };
        let expected = match &s.expected {
            Expectation::Completes => "completes".to_string(),
            Expectation::ResetAt(c) => format!("reset {c:?}"),
        };
        println!(
            "{:<24} expected={:<36} actual={:<28} specs={} {}",
            s.name,
            expected,
            actual,
            if specs_ok { "ok" } else { "VIOLATED" },
            if pass { "PASS" } else { "FAIL" }
        );
        rows.push(serde_json::json!({
            "name": s.name,
            "expected": expected,
            "actual": actual,
            "specs_hold": specs_ok,
            "pass": pass,
        }));
    }
    if rows.is_empty() {
        eprintln!("error: no scenario matches `{filter}`");
        return Err(EXIT_USAGE);
    }
    if let Some(path) = report_out {
        write_file(path, serde_json::to_string_pretty(&rows).unwrap().as_bytes())?;
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_specs(uccs: usize) -> Result<u8, u8> {
    if uccs == 0 {
        eprintln!("error: at least one compartment");
        return Err(EXIT_USAGE);
    }
    let catalog: Vec<serde_json::Value> = builtin_specs(uccs)
        .iter()
        .map(|s| {
            serde_json::json!({
                "id": s.label(),
                "equation": s.eq,
                "ucc": s.ucc,
                "formula": s.formula.to_string(),
            })
        })
        .collect();
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&catalog).unwrap());
    Ok(EXIT_OK)
}

fn cmd_cost(uccs: usize) -> Result<u8, u8> {
    match estimate_hardware_cost(uccs) {
        Ok(c) => {
            println!(
                "uccs={uccs} registers={} luts_estimate={} luts_synthesized={}",
                c.registers,
                c.luts_estimate,
                c.luts_synthesized.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
            );
            Ok(EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(EXIT_USAGE)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::glob_match;

    #[test]
    fn globs() {
        assert!(glob_match("benign-*", "benign-call"));
        assert!(glob_match("*", "anything"));
        assert!(glob_match("?r-overwrite", "cr-overwrite"));
        assert!(!glob_match("benign-*", "ret-hijack"));
    }
}
