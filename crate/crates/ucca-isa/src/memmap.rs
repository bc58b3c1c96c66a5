use crate::Addr;

/// Physical memory layout of the emulated MCU.
///
/// Regions are disjoint and ordered: CR (peripheral) < RAM < program < IVT.
/// The stack grows from `stack_init` towards 0; program memory and the IVT
/// sit numerically above every reachable stack address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryMap {
    pub cr_base: Addr,
    pub cr_limit: Addr,
    pub ram_base: Addr,
    pub ram_limit: Addr,
    pub stack_init: Addr,
    pub prog_base: Addr,
    pub prog_limit: Addr,
    pub ivt_base: Addr,
}

impl Default for MemoryMap {
    fn default() -> Self {
        MemoryMap {
            cr_base: 0x0100,
            cr_limit: 0x01FF,
            ram_base: 0x0200,
            ram_limit: 0x09FF,
            stack_init: 0x0A00,
            prog_base: 0xC000,
            prog_limit: 0xFFDF,
            ivt_base: 0xFFE0,
        }
    }
}

impl MemoryMap {
    pub fn in_prog(&self, addr: Addr) -> bool {
        addr >= self.prog_base && addr <= self.prog_limit
    }

    pub fn in_cr_region(&self, addr: Addr) -> bool {
        addr >= self.cr_base && addr <= self.cr_limit
    }

    pub fn prog_size(&self) -> usize {
        (self.prog_limit - self.prog_base) as usize + 1
    }

    /// Address of IVT slot `n` (word-sized vectors).
    pub fn ivt_slot(&self, n: u8) -> Addr {
        self.ivt_base.wrapping_add(2 * n as Addr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_map_matches_layout() {
        let m = MemoryMap::default();
        assert!(m.cr_limit < m.ram_base);
        assert!(m.ram_limit < m.prog_base);
        assert!(m.prog_limit < m.ivt_base);
        assert_eq!(m.stack_init, 0x0A00);
        assert_eq!(m.ivt_slot(3), 0xFFE6);
        // Program and IVT lie above every reachable stack address.
        assert!(m.prog_base > m.stack_init);
    }
}
