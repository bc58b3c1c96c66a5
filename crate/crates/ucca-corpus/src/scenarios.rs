use crate::runner::Scenario;
use ucca_isa::Addr;

macro_rules! builtin {
    ($name:literal) => {
        Scenario::from_manifest(
            include_str!(concat!("../scenarios/", $name, ".json")),
            include_str!(concat!("../scenarios/", $name, ".s")),
        )
        .expect(concat!("bundled scenario ", $name, " is well-formed"))
    };
}

/// The shipped scenario catalog: five benign flows and nine attack
/// classes, each with its expected verdict.
pub fn scenarios() -> Vec<Scenario> {
    vec![
        builtin!("benign-call"),
        builtin!("benign-marshal"),
        builtin!("benign-interrupted"),
        builtin!("benign-nested-ucc"),
        builtin!("benign-arbitrary-entry"),
        builtin!("ret-hijack"),
        builtin!("rop-gadget"),
        builtin!("stack-smash"),
        builtin!("sp-corrupt"),
        builtin!("code-inject"),
        builtin!("ivt-overwrite"),
        builtin!("cr-overwrite"),
        builtin!("malicious-isr"),
        builtin!("heap-partition"),
    ]
}

/// Assembly lines that copy `n_bytes` from `src` to `dst` (both absolute,
/// word-aligned): one pointer setup plus one copy instruction per word.
/// The copy instructions alone cost `estimate_marshal_cost(n_bytes)` steps.
pub fn emit_copy_stub(src: Addr, dst: Addr, n_bytes: usize, ptr_reg: u8) -> Vec<String> {
    let words = n_bytes.div_ceil(2);
    let mut lines = vec![format!("MOV #0x{src:04X}, R{ptr_reg}")];
    for k in 0..words {
        lines.push(format!("MOV @R{ptr_reg}+, &0x{:04X}", dst as usize + 2 * k));
    }
    lines
}
