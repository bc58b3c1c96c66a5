use serde::{Deserialize, Serialize};
use ucca_isa::{Addr, MemoryMap, SignalSnapshot};
use ucca_monitor::{CrImage, UccConfig};

/// Component domains of the reduced signal alphabet. One symbol is a full
/// snapshot tuple; the alphabet is the cartesian product of the domains.
///
/// The write/data-address pairs keep the emulator's `w_en = 1 implies
/// d_addr present` invariant by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedAlphabet {
    pub pc: Vec<Addr>,
    /// (w_en, d_addr) pairs
    pub access: Vec<(bool, Option<Addr>)>,
    pub sp: Vec<Addr>,
    pub irq_jmp: Vec<bool>,
    pub op_ret: Vec<Option<Addr>>,
}

impl ReducedAlphabet {
    /// Representative values for a configuration's first compartment:
    /// the reset sentinel, addresses straddling the compartment bounds and
    /// its midpoint, a CR address, and stack values around a mid-stack
    /// anchor so every `>=`/`=` comparison class against a latched bp is
    /// reachable.
    pub fn default_for(config: &UccConfig, cr: &CrImage, memmap: &MemoryMap) -> Self {
        let ucc = config.uccs.first().copied().unwrap_or_else(|| {
            ucca_monitor::UccDefinition::new(memmap.prog_base + 0x100, memmap.prog_base + 0x1FE)
        });
        let mid = (ucc.r_min / 2 + ucc.r_max / 2) & !1;
        let s0 = (memmap.ram_limit - 0xF) & !1;
        let mut pc = vec![
            0,
            ucc.r_min.wrapping_sub(2),
            ucc.r_min,
            mid,
            ucc.r_max,
            ucc.r_max.wrapping_add(2),
        ];
        pc.dedup();
        ReducedAlphabet {
            pc,
            access: vec![
                (false, None),
                (true, Some(cr.lo())),
                (true, Some(s0.wrapping_sub(2))),
                (true, Some(s0.wrapping_add(2))),
            ],
            sp: vec![s0, s0.wrapping_add(2)],
            irq_jmp: vec![false, true],
            op_ret: vec![None, Some(ucc.r_min.wrapping_sub(2))],
        }
    }

    /// Number of distinct symbols.
    pub fn len(&self) -> usize {
        self.pc.len() * self.access.len() * self.sp.len() * self.irq_jmp.len() * self.op_ret.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `idx`-th symbol in the fixed mixed-radix order.
    pub fn symbol(&self, idx: usize, step: u64) -> SignalSnapshot {
        let mut i = idx;
        let op_ret = self.op_ret[i % self.op_ret.len()];
        i /= self.op_ret.len();
        let irq_jmp = self.irq_jmp[i % self.irq_jmp.len()];
        i /= self.irq_jmp.len();
        let sp = self.sp[i % self.sp.len()];
        i /= self.sp.len();
        let (w_en, d_addr) = self.access[i % self.access.len()];
        i /= self.access.len();
        let pc = self.pc[i % self.pc.len()];
        SignalSnapshot { step, pc, d_addr, w_en, sp, irq_jmp, op_ret, reset: false }
    }

    /// Every sequence in `alphabetᵈᵉᵖᵗʰ`, exactly once, in lexicographic
    /// order of symbol indices. `depth = 0` yields nothing.
    pub fn enumerate_traces(&self, depth: usize) -> impl Iterator<Item = Vec<SignalSnapshot>> + '_ {
        let n = self.len();
        let total = if depth == 0 { 0u128 } else { (n as u128).pow(depth as u32) };
        (0..total).map(move |seq| self.sequence(seq, depth))
    }

    /// Decode sequence number `seq` (base `len()`, most significant symbol
    /// first) into its snapshots.
    pub fn sequence(&self, seq: u128, depth: usize) -> Vec<SignalSnapshot> {
        let n = self.len() as u128;
        let mut digits = vec![0usize; depth];
        let mut rest = seq;
        for d in (0..depth).rev() {
            digits[d] = (rest % n) as usize;
            rest /= n;
        }
        digits
            .iter()
            .enumerate()
            .map(|(t, &idx)| self.symbol(idx, t as u64))
            .collect()
    }
}
