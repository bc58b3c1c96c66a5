use serde::{Deserialize, Serialize};
use thiserror::Error;
use ucca_isa::{Addr, MachineState, MemoryMap};

mod hexword {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u16, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("0x{v:04X}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u16, D::Error> {
        let raw = String::deserialize(d)?;
        if let Some(hex) = raw.strip_prefix("0x").or_else(|| raw.strip_prefix("0X")) {
            u16::from_str_radix(hex, 16)
                .map_err(|_| serde::de::Error::custom(format!("bad word {raw:?}")))
        } else {
            raw.parse().map_err(|_| serde::de::Error::custom(format!("bad word {raw:?}")))
        }
    }
}

/// One compartment: the addresses of its first and last instruction.
/// Membership is inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UccDefinition {
    #[serde(rename = "min", with = "hexword")]
    pub r_min: Addr,
    #[serde(rename = "max", with = "hexword")]
    pub r_max: Addr,
}

impl UccDefinition {
    pub fn new(r_min: Addr, r_max: Addr) -> Self {
        UccDefinition { r_min, r_max }
    }

    pub fn contains(&self, pc: Addr) -> bool {
        pc >= self.r_min && pc <= self.r_max
    }
}

/// The ordered set of compartments a monitor instance enforces.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UccConfig {
    pub uccs: Vec<UccDefinition>,
}

pub const DEFAULT_CR_CAPACITY: usize = 8;

/// The configuration region: a reserved span of peripheral memory holding
/// one (r_min, r_max) word pair per supported compartment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrImage {
    pub base: Addr,
    pub capacity: usize,
}

impl CrImage {
    pub fn new(base: Addr, capacity: usize) -> Self {
        CrImage { base, capacity }
    }

    pub fn lo(&self) -> Addr {
        self.base
    }

    pub fn hi(&self) -> Addr {
        self.base.wrapping_add((4 * self.capacity) as Addr).wrapping_sub(1)
    }

    pub fn contains(&self, addr: Addr) -> bool {
        addr >= self.lo() && addr <= self.hi()
    }
}

/// On-disk monitor configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonitorConfig {
    #[serde(with = "hexword")]
    pub cr_base: Addr,
    #[serde(default = "default_capacity")]
    pub capacity: usize,
    pub uccs: Vec<UccDefinition>,
}

fn default_capacity() -> usize {
    DEFAULT_CR_CAPACITY
}

impl MonitorConfig {
    pub fn split(&self) -> (UccConfig, CrImage) {
        (UccConfig { uccs: self.uccs.clone() }, CrImage::new(self.cr_base, self.capacity))
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("UCC{a} and UCC{b} partially overlap")]
    PartialOverlap { a: usize, b: usize },
    #[error("UCC{ucc} lies outside program memory")]
    OutOfProgram { ucc: usize },
    #[error("UCC{ucc} contains the reset sentinel address 0")]
    ContainsResetSentinel { ucc: usize },
    #[error("UCC{ucc} bounds are not word-aligned")]
    MisalignedBounds { ucc: usize },
    #[error("UCC{ucc} has r_min > r_max")]
    InvertedBounds { ucc: usize },
    #[error("CR region does not fit the peripheral region (or base is odd)")]
    CrMisplaced,
    #[error("{have} UCCs configured but CR holds {capacity}")]
    CapacityExceeded { have: usize, capacity: usize },
}

/// Accepts disjoint and strictly nested compartments inside program memory;
/// rejects partial overlaps (identical bounds count as a degenerate partial
/// overlap), zero-containing compartments and misplaced CR regions.
pub fn validate_config(
    config: &UccConfig,
    cr: &CrImage,
    memmap: &MemoryMap,
) -> Result<(), Vec<ConfigError>> {
    let mut errors = Vec::new();
    if config.uccs.len() > cr.capacity {
        errors.push(ConfigError::CapacityExceeded {
            have: config.uccs.len(),
            capacity: cr.capacity,
        });
    }
    for (i, u) in config.uccs.iter().enumerate() {
        if u.r_min > u.r_max {
            errors.push(ConfigError::InvertedBounds { ucc: i });
            continue;
        }
        if u.r_min % 2 != 0 || u.r_max % 2 != 0 {
            errors.push(ConfigError::MisalignedBounds { ucc: i });
        }
        if u.contains(ucca_isa::RESET_SENTINEL_PC) {
            errors.push(ConfigError::ContainsResetSentinel { ucc: i });
        }
        if !memmap.in_prog(u.r_min) || !memmap.in_prog(u.r_max) {
            errors.push(ConfigError::OutOfProgram { ucc: i });
        }
    }
    for i in 0..config.uccs.len() {
        for j in i + 1..config.uccs.len() {
            let (a, b) = (&config.uccs[i], &config.uccs[j]);
            if a.r_min > a.r_max || b.r_min > b.r_max {
                continue;
            }
            let disjoint = a.r_max < b.r_min || b.r_max < a.r_min;
            let nested = (a.r_min <= b.r_min && b.r_max <= a.r_max
                || b.r_min <= a.r_min && a.r_max <= b.r_max)
                && (a.r_min, a.r_max) != (b.r_min, b.r_max);
            if !disjoint && !nested {
                errors.push(ConfigError::PartialOverlap { a: i, b: j });
            }
        }
    }
    if !cr.base.is_multiple_of(2)
        || !memmap.in_cr_region(cr.lo())
        || !memmap.in_cr_region(cr.hi())
        || cr.capacity == 0
    {
        errors.push(ConfigError::CrMisplaced);
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Write the configured (r_min, r_max) pairs into the emulator's peripheral
/// memory, giving the CR write-check a concrete target. Called at load time
/// and again after a reset (CR survives resets; reprogramming is physical).
pub fn materialize_cr(machine: &mut MachineState, config: &UccConfig, cr: &CrImage) {
    for (k, u) in config.uccs.iter().enumerate() {
        let base = cr.base.wrapping_add((4 * k) as Addr);
        machine.write_word(base, u.r_min).expect("validated CR base is even");
        machine.write_word(base.wrapping_add(2), u.r_max).expect("validated CR base is even");
    }
}
