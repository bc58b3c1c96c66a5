use crate::Addr;

/// General-purpose register R4..R12.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reg(u8);

impl Reg {
    pub fn new(n: u8) -> Option<Reg> {
        (4..=12).contains(&n).then_some(Reg(n))
    }

    pub fn num(self) -> u8 {
        self.0
    }

    /// Index into the GPR file (R4 -> 0).
    pub fn index(self) -> usize {
        (self.0 - 4) as usize
    }
}

impl std::fmt::Display for Reg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "R{}", self.0)
    }
}

/// The restricted instruction set. Fixed two-word encoding: an opcode word
/// (opcode byte + two register nibbles) followed by one operand word.
/// Every instruction performs at most one data-memory write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instruction {
    Nop,
    /// dst = imm
    MovImmReg { imm: u16, dst: Reg },
    /// dst = src
    MovRegReg { src: Reg, dst: Reg },
    /// mem[addr] = src
    MovRegAbs { src: Reg, addr: Addr },
    /// dst = mem[addr]
    MovAbsReg { addr: Addr, dst: Reg },
    /// mem[ptr] = src
    MovRegInd { src: Reg, ptr: Reg },
    /// dst = mem[ptr]
    MovIndReg { ptr: Reg, dst: Reg },
    /// mem[addr] = mem[ptr]; ptr += 2. One-instruction word copy for
    /// marshaling stubs.
    MovIndIncAbs { ptr: Reg, addr: Addr },
    PushReg(Reg),
    PushImm(u16),
    Pop(Reg),
    CallAbs(Addr),
    CallReg(Reg),
    Ret,
    Reti,
    JmpAbs(Addr),
    BrReg(Reg),
    JzAbs(Addr),
    AddImmReg { imm: u16, dst: Reg },
    AddRegReg { src: Reg, dst: Reg },
    SubImmReg { imm: u16, dst: Reg },
    SubRegReg { src: Reg, dst: Reg },
    CmpImmReg { imm: u16, dst: Reg },
    CmpRegReg { src: Reg, dst: Reg },
    Halt,
}

mod opc {
    pub const NOP: u8 = 0x01;
    pub const MOV_IR: u8 = 0x02;
    pub const MOV_RR: u8 = 0x03;
    pub const MOV_RA: u8 = 0x04;
    pub const MOV_AR: u8 = 0x05;
    pub const MOV_RI: u8 = 0x06;
    pub const MOV_IR2: u8 = 0x07;
    pub const MOV_IIA: u8 = 0x08;
    pub const PUSH_R: u8 = 0x09;
    pub const PUSH_I: u8 = 0x0A;
    pub const POP: u8 = 0x0B;
    pub const CALL_A: u8 = 0x0C;
    pub const CALL_R: u8 = 0x0D;
    pub const RET: u8 = 0x0E;
    pub const RETI: u8 = 0x0F;
    pub const JMP: u8 = 0x10;
    pub const BR: u8 = 0x11;
    pub const JZ: u8 = 0x12;
    pub const ADD_IR: u8 = 0x13;
    pub const ADD_RR: u8 = 0x14;
    pub const SUB_IR: u8 = 0x15;
    pub const SUB_RR: u8 = 0x16;
    pub const CMP_IR: u8 = 0x17;
    pub const CMP_RR: u8 = 0x18;
    pub const HALT: u8 = 0x19;
}

fn word0(op: u8, a: u8, b: u8) -> u16 {
    ((op as u16) << 8) | ((a as u16) << 4) | b as u16
}

/// Encode to (opcode word, operand word).
pub fn encode(ins: Instruction) -> (u16, u16) {
    use Instruction::*;
    match ins {
        Nop => (word0(opc::NOP, 0, 0), 0),
        MovImmReg { imm, dst } => (word0(opc::MOV_IR, dst.num(), 0), imm),
        MovRegReg { src, dst } => (word0(opc::MOV_RR, dst.num(), src.num()), 0),
        MovRegAbs { src, addr } => (word0(opc::MOV_RA, 0, src.num()), addr),
        MovAbsReg { addr, dst } => (word0(opc::MOV_AR, dst.num(), 0), addr),
        MovRegInd { src, ptr } => (word0(opc::MOV_RI, ptr.num(), src.num()), 0),
        MovIndReg { ptr, dst } => (word0(opc::MOV_IR2, dst.num(), ptr.num()), 0),
        MovIndIncAbs { ptr, addr } => (word0(opc::MOV_IIA, 0, ptr.num()), addr),
        PushReg(r) => (word0(opc::PUSH_R, 0, r.num()), 0),
        PushImm(imm) => (word0(opc::PUSH_I, 0, 0), imm),
        Pop(r) => (word0(opc::POP, r.num(), 0), 0),
        CallAbs(a) => (word0(opc::CALL_A, 0, 0), a),
        CallReg(r) => (word0(opc::CALL_R, 0, r.num()), 0),
        Ret => (word0(opc::RET, 0, 0), 0),
        Reti => (word0(opc::RETI, 0, 0), 0),
        JmpAbs(a) => (word0(opc::JMP, 0, 0), a),
        BrReg(r) => (word0(opc::BR, 0, r.num()), 0),
        JzAbs(a) => (word0(opc::JZ, 0, 0), a),
        AddImmReg { imm, dst } => (word0(opc::ADD_IR, dst.num(), 0), imm),
        AddRegReg { src, dst } => (word0(opc::ADD_RR, dst.num(), src.num()), 0),
        SubImmReg { imm, dst } => (word0(opc::SUB_IR, dst.num(), 0), imm),
        SubRegReg { src, dst } => (word0(opc::SUB_RR, dst.num(), src.num()), 0),
        CmpImmReg { imm, dst } => (word0(opc::CMP_IR, dst.num(), 0), imm),
        CmpRegReg { src, dst } => (word0(opc::CMP_RR, dst.num(), src.num()), 0),
        Halt => (word0(opc::HALT, 0, 0), 0),
    }
}

/// Decode an (opcode word, operand word) pair. `None` on an undefined
/// opcode or register field.
pub fn decode(w0: u16, w1: u16) -> Option<Instruction> {
    use Instruction::*;
    let op = (w0 >> 8) as u8;
    let a = ((w0 >> 4) & 0xF) as u8;
    let b = (w0 & 0xF) as u8;
    let ra = Reg::new(a);
    let rb = Reg::new(b);
    Some(match op {
        opc::NOP => Nop,
        opc::MOV_IR => MovImmReg { imm: w1, dst: ra? },
        opc::MOV_RR => MovRegReg { src: rb?, dst: ra? },
        opc::MOV_RA => MovRegAbs { src: rb?, addr: w1 },
        opc::MOV_AR => MovAbsReg { addr: w1, dst: ra? },
        opc::MOV_RI => MovRegInd { src: rb?, ptr: ra? },
        opc::MOV_IR2 => MovIndReg { ptr: rb?, dst: ra? },
        opc::MOV_IIA => MovIndIncAbs { ptr: rb?, addr: w1 },
        opc::PUSH_R => PushReg(rb?),
        opc::PUSH_I => PushImm(w1),
        opc::POP => Pop(ra?),
        opc::CALL_A => CallAbs(w1),
        opc::CALL_R => CallReg(rb?),
        opc::RET => Ret,
        opc::RETI => Reti,
        opc::JMP => JmpAbs(w1),
        opc::BR => BrReg(rb?),
        opc::JZ => JzAbs(w1),
        opc::ADD_IR => AddImmReg { imm: w1, dst: ra? },
        opc::ADD_RR => AddRegReg { src: rb?, dst: ra? },
        opc::SUB_IR => SubImmReg { imm: w1, dst: ra? },
        opc::SUB_RR => SubRegReg { src: rb?, dst: ra? },
        opc::CMP_IR => CmpImmReg { imm: w1, dst: ra? },
        opc::CMP_RR => CmpRegReg { src: rb?, dst: ra? },
        opc::HALT => Halt,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn any_reg() -> impl Strategy<Value = Reg> {
        (4u8..=12).prop_map(|n| Reg::new(n).unwrap())
    }

    fn any_instr() -> impl Strategy<Value = Instruction> {
        use Instruction::*;
        prop_oneof![
            Just(Nop),
            Just(Ret),
            Just(Reti),
            Just(Halt),
            (any::<u16>(), any_reg()).prop_map(|(imm, dst)| MovImmReg { imm, dst }),
            (any_reg(), any_reg()).prop_map(|(src, dst)| MovRegReg { src, dst }),
            (any_reg(), any::<u16>()).prop_map(|(src, addr)| MovRegAbs { src, addr }),
            (any::<u16>(), any_reg()).prop_map(|(addr, dst)| MovAbsReg { addr, dst }),
            (any_reg(), any_reg()).prop_map(|(src, ptr)| MovRegInd { src, ptr }),
            (any_reg(), any_reg()).prop_map(|(ptr, dst)| MovIndReg { ptr, dst }),
            (any_reg(), any::<u16>()).prop_map(|(ptr, addr)| MovIndIncAbs { ptr, addr }),
            any_reg().prop_map(PushReg),
            any::<u16>().prop_map(PushImm),
            any_reg().prop_map(Pop),
            any::<u16>().prop_map(CallAbs),
            any_reg().prop_map(CallReg),
            any::<u16>().prop_map(JmpAbs),
            any_reg().prop_map(BrReg),
            any::<u16>().prop_map(JzAbs),
            (any::<u16>(), any_reg()).prop_map(|(imm, dst)| AddImmReg { imm, dst }),
            (any_reg(), any_reg()).prop_map(|(src, dst)| AddRegReg { src, dst }),
            (any::<u16>(), any_reg()).prop_map(|(imm, dst)| SubImmReg { imm, dst }),
            (any_reg(), any_reg()).prop_map(|(src, dst)| SubRegReg { src, dst }),
            (any::<u16>(), any_reg()).prop_map(|(imm, dst)| CmpImmReg { imm, dst }),
            (any_reg(), any_reg()).prop_map(|(src, dst)| CmpRegReg { src, dst }),
        ]
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(ins in any_instr()) {
            let (w0, w1) = encode(ins);
            prop_assert_eq!(decode(w0, w1), Some(ins));
        }
    }

    #[test]
    fn undefined_opcodes_reject() {
        assert_eq!(decode(0x0000, 0), None);
        assert_eq!(decode(0xFF00, 0), None);
        // bad register nibble
        assert_eq!(decode(word0(opc::MOV_IR, 0x3, 0), 7), None);
        assert_eq!(decode(word0(opc::MOV_IR, 0xD, 0), 7), None);
    }
}
