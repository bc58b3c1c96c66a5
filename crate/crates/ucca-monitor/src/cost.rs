use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("hardware cost is defined for at least one region")]
pub struct ZeroRegions;

/// Added hardware for a monitor supporting `n` compartments.
///
/// `registers` follows the exact linear model; `luts_estimate` is the
/// linear fit, and `luts_synthesized` carries the reference synthesis
/// count for the measured 1..=8 range (the fit drifts a few LUTs from the
/// synthesis tool's heuristic).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HardwareCost {
    pub registers: u32,
    pub luts_estimate: u32,
    pub luts_synthesized: Option<u32>,
}

const SYNTHESIZED: [(u32, u32); 8] = [
    (86, 85),
    (121, 145),
    (156, 205),
    (191, 265),
    (226, 327),
    (261, 389),
    (296, 450),
    (331, 520),
];

pub fn estimate_hardware_cost(n_ucc: usize) -> Result<HardwareCost, ZeroRegions> {
    if n_ucc == 0 {
        return Err(ZeroRegions);
    }
    let n = n_ucc as u32;
    Ok(HardwareCost {
        registers: 35 * (n - 1) + 86,
        luts_estimate: 62 * (n - 1) + 85,
        luts_synthesized: SYNTHESIZED.get(n_ucc - 1).map(|&(_, l)| l),
    })
}
