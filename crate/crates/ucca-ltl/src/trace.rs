use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use thiserror::Error;

/// State of one monitor FSM, carried in extended traces for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FsmPhase {
    Out,
    In,
    Irq,
    Reset,
}

impl std::fmt::Display for FsmPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FsmPhase::Out => write!(f, "out"),
            FsmPhase::In => write!(f, "in"),
            FsmPhase::Irq => write!(f, "irq"),
            FsmPhase::Reset => write!(f, "reset"),
        }
    }
}

mod hexword {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u16, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("0x{v:04X}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u16, D::Error> {
        let raw = String::deserialize(d)?;
        parse_word(&raw).ok_or_else(|| serde::de::Error::custom(format!("bad word {raw:?}")))
    }

    pub fn parse_word(raw: &str) -> Option<u16> {
        if let Some(hex) = raw.strip_prefix("0x").or_else(|| raw.strip_prefix("0X")) {
            u16::from_str_radix(hex, 16).ok()
        } else {
            raw.parse().ok()
        }
    }
}

mod hexopt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<u16>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_some(&format!("0x{v:04X}")),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u16>, D::Error> {
        let raw: Option<String> = Option::deserialize(d)?;
        match raw {
            None => Ok(None),
            Some(raw) => super::hexword::parse_word(&raw)
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom(format!("bad word {raw:?}"))),
        }
    }
}

/// Per-UCC monitor registers after the step was observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UccRegs {
    #[serde(with = "hexword")]
    pub ret_exp: u16,
    #[serde(with = "hexword")]
    pub bp: u16,
    pub ret_state: FsmPhase,
    pub stack_state: FsmPhase,
}

/// One extended trace record: the raw core signals plus the monitor
/// registers and the wired-in reset verdict. Absent `d_addr`/`op_ret`
/// evaluate as 0 in formulas; `w_en = 1` implies `d_addr` is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: u64,
    #[serde(with = "hexword")]
    pub pc: u16,
    #[serde(with = "hexopt", default)]
    pub d_addr: Option<u16>,
    pub w_en: bool,
    #[serde(with = "hexword")]
    pub sp: u16,
    pub irq_jmp: bool,
    #[serde(with = "hexopt", default)]
    pub op_ret: Option<u16>,
    pub reset: bool,
    #[serde(default)]
    pub ucc: Vec<UccRegs>,
}

/// Declared memory regions the membership atoms refer to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Regions {
    pub uccs: Vec<(u16, u16)>,
    pub cr: (u16, u16),
}

/// A finite, monitor-extended signal trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub regions: Regions,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed trace: {0}")]
    Malformed(String),
}

#[derive(Serialize, Deserialize)]
struct Header {
    uccs: Vec<HexPair>,
    cr: HexPair,
}

#[derive(Serialize, Deserialize)]
struct HexPair {
    #[serde(with = "hexword")]
    lo: u16,
    #[serde(with = "hexword")]
    hi: u16,
}

/// Write a trace as line-delimited JSON: a region header line followed by
/// one record per step.
pub fn write_trace(trace: &Trace, out: &mut impl Write) -> Result<(), TraceIoError> {
    let header = Header {
        uccs: trace.regions.uccs.iter().map(|&(lo, hi)| HexPair { lo, hi }).collect(),
        cr: HexPair { lo: trace.regions.cr.0, hi: trace.regions.cr.1 },
    };
    serde_json::to_writer(&mut *out, &header).map_err(|e| TraceIoError::Malformed(e.to_string()))?;
    out.write_all(b"\n")?;
    for step in &trace.steps {
        serde_json::to_writer(&mut *out, step).map_err(|e| TraceIoError::Malformed(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a trace written by [`write_trace`]. Rejects empty inputs and
/// non-contiguous step ordinals.
pub fn read_trace(input: &mut impl BufRead) -> Result<Trace, TraceIoError> {
    let mut lines = input.lines();
    let header_line = loop {
        match lines.next() {
            None => return Err(TraceIoError::Malformed("empty trace file".into())),
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| TraceIoError::Malformed(format!("bad header: {e}")))?;
    let mut steps = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let step: TraceStep = serde_json::from_str(&line)
            .map_err(|e| TraceIoError::Malformed(format!("record {}: {e}", steps.len())))?;
        steps.push(step);
    }
    if steps.is_empty() {
        return Err(TraceIoError::Malformed("trace has a header but no records".into()));
    }
    for (i, s) in steps.iter().enumerate() {
        if s.step != i as u64 {
            return Err(TraceIoError::Malformed(format!(
                "step ordinals not contiguous: record {i} has step {}",
                s.step
            )));
        }
        if s.w_en && s.d_addr.is_none() {
            return Err(TraceIoError::Malformed(format!(
                "record {i}: w_en set without d_addr"
            )));
        }
    }
    Ok(Trace {
        regions: Regions {
            uccs: header.uccs.into_iter().map(|p| (p.lo, p.hi)).collect(),
            cr: (header.cr.lo, header.cr.hi),
        },
        steps,
    })
}
