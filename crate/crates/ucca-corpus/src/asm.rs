use std::collections::BTreeMap;
use thiserror::Error;
use ucca_isa::{encode, Addr, Instruction, MemoryMap, Reg, INSTR_BYTES, IVT_SLOTS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AsmError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: undefined label `{name}`")]
    UndefinedLabel { line: usize, name: String },
    #[error("line {line}: emission outside the program region")]
    RegionOverflow { line: usize },
}

/// Assembled program in the loader's image layout:
/// `[entry word][16 IVT words][program bytes from prog_base]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub entry: Addr,
    pub ivt: [Addr; IVT_SLOTS],
    pub prog: Vec<u8>,
}

impl Image {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 + 2 * IVT_SLOTS + self.prog.len());
        out.extend_from_slice(&self.entry.to_le_bytes());
        for w in self.ivt {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.extend_from_slice(&self.prog);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assembled {
    pub image: Image,
    pub labels: BTreeMap<String, Addr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Operand {
    Imm(Expr),
    Reg(Reg),
    Abs(Expr),
    Ind(Reg),
    IndInc(Reg),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Expr {
    Num(u16),
    Label(String),
}

#[derive(Debug, Clone)]
enum Item {
    Instr { line: usize, mnemonic: String, operands: Vec<Operand> },
    Word { line: usize, exprs: Vec<Expr> },
}

fn parse_number(s: &str) -> Option<u16> {
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u16::from_str_radix(hex, 16).ok()
    } else {
        s.parse().ok()
    }
}

fn parse_expr(s: &str, line: usize) -> Result<Expr, AsmError> {
    if s.is_empty() {
        return Err(AsmError::Syntax { line, msg: "empty operand".into() });
    }
    if s.chars().next().unwrap().is_ascii_digit() {
        parse_number(s)
            .map(Expr::Num)
            .ok_or_else(|| AsmError::Syntax { line, msg: format!("bad number `{s}`") })
    } else if is_ident(s) {
        Ok(Expr::Label(s.to_string()))
    } else {
        Err(AsmError::Syntax { line, msg: format!("bad operand `{s}`") })
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars().next().unwrap().is_ascii_alphabetic()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_reg(s: &str, line: usize) -> Result<Reg, AsmError> {
    s.strip_prefix(['R', 'r'])
        .and_then(|n| n.parse::<u8>().ok())
        .and_then(Reg::new)
        .ok_or_else(|| AsmError::Syntax { line, msg: format!("bad register `{s}` (R4..R12)") })
}

fn parse_operand(s: &str, line: usize) -> Result<Operand, AsmError> {
    if let Some(rest) = s.strip_prefix('#') {
        Ok(Operand::Imm(parse_expr(rest, line)?))
    } else if let Some(rest) = s.strip_prefix('&') {
        Ok(Operand::Abs(parse_expr(rest, line)?))
    } else if let Some(rest) = s.strip_prefix('@') {
        if let Some(reg) = rest.strip_suffix('+') {
            Ok(Operand::IndInc(parse_reg(reg, line)?))
        } else {
            Ok(Operand::Ind(parse_reg(rest, line)?))
        }
    } else if s.starts_with(['R', 'r']) && s[1..].chars().all(|c| c.is_ascii_digit()) {
        Ok(Operand::Reg(parse_reg(s, line)?))
    } else {
        // bare label/number: jump-style target, treated as an immediate
        Ok(Operand::Imm(parse_expr(s, line)?))
    }
}

struct FirstPass {
    items: Vec<(Addr, Item)>,
    labels: BTreeMap<String, Addr>,
    ivt: [Addr; IVT_SLOTS],
    ivt_exprs: Vec<(usize, usize, Expr)>, // (slot, line, expr)
    entry: Option<(usize, Expr)>,
    first_instr: Option<Addr>,
}

fn first_pass(source: &str, memmap: &MemoryMap) -> Result<FirstPass, AsmError> {
    let mut fp = FirstPass {
        items: Vec::new(),
        labels: BTreeMap::new(),
        ivt: [0; IVT_SLOTS],
        ivt_exprs: Vec::new(),
        entry: None,
        first_instr: None,
    };
    let mut lc: u32 = memmap.prog_base as u32;

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let mut text = raw;
        if let Some(pos) = text.find(';') {
            text = &text[..pos];
        }
        let mut text = text.trim();

        while let Some(colon) = text.find(':') {
            let (label, rest) = text.split_at(colon);
            let label = label.trim();
            if !is_ident(label) {
                return Err(AsmError::Syntax { line, msg: format!("bad label `{label}`") });
            }
            if fp.labels.insert(label.to_string(), lc as Addr).is_some() {
                return Err(AsmError::Syntax { line, msg: format!("duplicate label `{label}`") });
            }
            text = rest[1..].trim();
        }
        if text.is_empty() {
            continue;
        }

        if let Some(rest) = text.strip_prefix('.') {
            let (dir, args) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            let args = args.trim();
            match dir {
                "org" => {
                    let addr = parse_number(args).ok_or_else(|| AsmError::Syntax {
                        line,
                        msg: format!("bad .org address `{args}`"),
                    })?;
                    if !memmap.in_prog(addr) {
                        return Err(AsmError::RegionOverflow { line });
                    }
                    if addr % 2 != 0 {
                        return Err(AsmError::Syntax { line, msg: ".org address must be even".into() });
                    }
                    lc = addr as u32;
                }
                "word" => {
                    let exprs = args
                        .split(',')
                        .map(|s| parse_expr(s.trim(), line))
                        .collect::<Result<Vec<_>, _>>()?;
                    if exprs.is_empty() {
                        return Err(AsmError::Syntax { line, msg: ".word needs values".into() });
                    }
                    let size = 2 * exprs.len() as u32;
                    if lc + size > memmap.prog_limit as u32 + 1 {
                        return Err(AsmError::RegionOverflow { line });
                    }
                    fp.items.push((lc as Addr, Item::Word { line, exprs }));
                    lc += size;
                }
                "ivt" => {
                    let (slot, target) = args.split_once(char::is_whitespace).ok_or_else(|| {
                        AsmError::Syntax { line, msg: ".ivt needs a slot and a target".into() }
                    })?;
                    let slot: usize = slot.trim().parse().map_err(|_| AsmError::Syntax {
                        line,
                        msg: format!("bad IVT slot `{slot}`"),
                    })?;
                    if slot >= IVT_SLOTS {
                        return Err(AsmError::Syntax {
                            line,
                            msg: format!("IVT slot {slot} out of range"),
                        });
                    }
                    fp.ivt_exprs.push((slot, line, parse_expr(target.trim(), line)?));
                }
                "entry" => {
                    fp.entry = Some((line, parse_expr(args, line)?));
                }
                other => {
                    return Err(AsmError::Syntax {
                        line,
                        msg: format!("unknown directive `.{other}`"),
                    })
                }
            }
            continue;
        }

        // instruction
        let (mnemonic, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        let operands = if rest.trim().is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|s| parse_operand(s.trim(), line))
                .collect::<Result<Vec<_>, _>>()?
        };
        if lc + INSTR_BYTES as u32 > memmap.prog_limit as u32 + 1 {
            return Err(AsmError::RegionOverflow { line });
        }
        if fp.first_instr.is_none() {
            fp.first_instr = Some(lc as Addr);
        }
        fp.items.push((
            lc as Addr,
            Item::Instr { line, mnemonic: mnemonic.to_uppercase(), operands },
        ));
        lc += INSTR_BYTES as u32;
    }
    Ok(fp)
}

fn resolve(expr: &Expr, labels: &BTreeMap<String, Addr>, line: usize) -> Result<Addr, AsmError> {
    match expr {
        Expr::Num(v) => Ok(*v),
        Expr::Label(name) => labels
            .get(name)
            .copied()
            .ok_or_else(|| AsmError::UndefinedLabel { line, name: name.clone() }),
    }
}

fn encode_item(
    mnemonic: &str,
    operands: &[Operand],
    labels: &BTreeMap<String, Addr>,
    line: usize,
) -> Result<Instruction, AsmError> {
    use Instruction::*;
    use Operand as O;
    let err = |msg: &str| AsmError::Syntax { line, msg: msg.to_string() };
    let ins = match (mnemonic, operands) {
        ("NOP", []) => Nop,
        ("HALT", []) => Halt,
        ("RET", []) => Ret,
        ("RETI", []) => Reti,
        ("MOV", [O::Imm(e), O::Reg(d)]) => MovImmReg { imm: resolve(e, labels, line)?, dst: *d },
        ("MOV", [O::Reg(s), O::Reg(d)]) => MovRegReg { src: *s, dst: *d },
        ("MOV", [O::Reg(s), O::Abs(e)]) => MovRegAbs { src: *s, addr: resolve(e, labels, line)? },
        ("MOV", [O::Abs(e), O::Reg(d)]) => MovAbsReg { addr: resolve(e, labels, line)?, dst: *d },
        ("MOV", [O::Reg(s), O::Ind(p)]) => MovRegInd { src: *s, ptr: *p },
        ("MOV", [O::Ind(p), O::Reg(d)]) => MovIndReg { ptr: *p, dst: *d },
        ("MOV", [O::IndInc(p), O::Abs(e)]) => {
            MovIndIncAbs { ptr: *p, addr: resolve(e, labels, line)? }
        }
        ("PUSH", [O::Imm(e)]) => PushImm(resolve(e, labels, line)?),
        ("PUSH", [O::Reg(r)]) => PushReg(*r),
        ("POP", [O::Reg(r)]) => Pop(*r),
        ("CALL", [O::Imm(e)]) => CallAbs(resolve(e, labels, line)?),
        ("CALL", [O::Reg(r)]) => CallReg(*r),
        ("JMP", [O::Imm(e)]) => JmpAbs(resolve(e, labels, line)?),
        ("JZ", [O::Imm(e)]) => JzAbs(resolve(e, labels, line)?),
        ("BR", [O::Reg(r)]) => BrReg(*r),
        ("ADD", [O::Imm(e), O::Reg(d)]) => AddImmReg { imm: resolve(e, labels, line)?, dst: *d },
        ("ADD", [O::Reg(s), O::Reg(d)]) => AddRegReg { src: *s, dst: *d },
        ("SUB", [O::Imm(e), O::Reg(d)]) => SubImmReg { imm: resolve(e, labels, line)?, dst: *d },
        ("SUB", [O::Reg(s), O::Reg(d)]) => SubRegReg { src: *s, dst: *d },
        ("CMP", [O::Imm(e), O::Reg(d)]) => CmpImmReg { imm: resolve(e, labels, line)?, dst: *d },
        ("CMP", [O::Reg(s), O::Reg(d)]) => CmpRegReg { src: *s, dst: *d },
        ("MOV" | "PUSH" | "POP" | "CALL" | "JMP" | "JZ" | "BR" | "ADD" | "SUB" | "CMP", _) => {
            return Err(err("unsupported operand combination"))
        }
        _ => return Err(err(&format!("unknown mnemonic `{mnemonic}`"))),
    };
    Ok(ins)
}

/// Two-pass assembly to the loader image format, with the label map for
/// symbolic compartment bounds.
pub fn assemble(source: &str, memmap: &MemoryMap) -> Result<Assembled, AsmError> {
    let mut fp = first_pass(source, memmap)?;

    for (slot, line, expr) in std::mem::take(&mut fp.ivt_exprs) {
        fp.ivt[slot] = resolve(&expr, &fp.labels, line)?;
    }
    let entry = match &fp.entry {
        Some((line, expr)) => resolve(expr, &fp.labels, *line)?,
        None => fp.first_instr.unwrap_or(memmap.prog_base),
    };

    let mut prog = Vec::new();
    let mut emit = |addr: Addr, bytes: &[u8]| {
        let off = (addr - memmap.prog_base) as usize;
        if prog.len() < off + bytes.len() {
            prog.resize(off + bytes.len(), 0);
        }
        prog[off..off + bytes.len()].copy_from_slice(bytes);
    };

    for (addr, item) in &fp.items {
        match item {
            Item::Word { line, exprs } => {
                for (i, e) in exprs.iter().enumerate() {
                    let v = resolve(e, &fp.labels, *line)?;
                    emit(addr + 2 * i as Addr, &v.to_le_bytes());
                }
            }
            Item::Instr { line, mnemonic, operands } => {
                let ins = encode_item(mnemonic, operands, &fp.labels, *line)?;
                let (w0, w1) = encode(ins);
                let mut bytes = [0u8; 4];
                bytes[..2].copy_from_slice(&w0.to_le_bytes());
                bytes[2..].copy_from_slice(&w1.to_le_bytes());
                emit(*addr, &bytes);
            }
        }
    }

    Ok(Assembled {
        image: Image { entry, ivt: fp.ivt, prog },
        labels: fp.labels,
    })
}
