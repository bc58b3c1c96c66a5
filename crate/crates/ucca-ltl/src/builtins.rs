use crate::ast::{Cmp, Formula, RegionRef, Signal, Term};

/// One built-in monitor specification: its catalog number (eq 1..13),
/// the UCC instance it is bound to (none for the shared CR rule), and the
/// formula itself.
#[derive(Debug, Clone)]
pub struct BuiltinSpec {
    pub eq: u8,
    pub ucc: Option<usize>,
    pub formula: Formula,
}

impl BuiltinSpec {
    pub fn label(&self) -> String {
        match self.ucc {
            Some(k) => format!("eq{:02}/ucc{k}", self.eq),
            None => format!("eq{:02}", self.eq),
        }
    }
}

fn sig(s: Signal) -> Term {
    Term::Signal(s)
}

fn x(t: Term) -> Term {
    Term::next(t)
}

fn y(t: Term) -> Term {
    Term::prev(t)
}

fn eq(a: Term, b: Term) -> Formula {
    Formula::Atom(a, Cmp::Eq, b)
}

fn ge(a: Term, b: Term) -> Formula {
    Formula::Atom(a, Cmp::Ge, b)
}

fn in_ucc(t: Term, k: usize) -> Formula {
    Formula::InRegion(t, RegionRef::Ucc(k))
}

fn in_cr(t: Term) -> Formula {
    Formula::InRegion(t, RegionRef::Cr)
}

fn flag(s: Signal) -> Formula {
    Formula::Flag(s)
}

fn fand(a: Formula, b: Formula) -> Formula {
    Formula::and(a, b)
}

fn or(a: Formula, b: Formula) -> Formula {
    Formula::or(a, b)
}

fn not(f: Formula) -> Formula {
    Formula::not(f)
}

fn implies(a: Formula, b: Formula) -> Formula {
    Formula::implies(a, b)
}

fn w(a: Formula, b: Formula) -> Formula {
    Formula::weak_until(a, b)
}

fn g(f: Formula) -> Formula {
    Formula::globally(f)
}

/// Shared rule: a write whose data address falls inside CR forces reset.
fn spec_cr() -> Formula {
    g(implies(
        fand(in_cr(sig(Signal::DAddr)), flag(Signal::WEn)),
        flag(Signal::Reset),
    ))
}

/// After a reset, the next entry to the UCC latches the saved return
/// address from op_ret.
fn spec_ret_save_after_reset(k: usize) -> Formula {
    let entering = fand(not(in_ucc(sig(Signal::Pc), k)), in_ucc(x(sig(Signal::Pc)), k));
    let latch_ok = or(
        eq(x(sig(Signal::RetExp(k))), sig(Signal::OpRet)),
        flag(Signal::Reset),
    );
    g(implies(
        flag(Signal::Reset),
        w(implies(entering, latch_ok), in_ucc(sig(Signal::Pc), k)),
    ))
}

/// After a non-interrupt exit, the next entry latches afresh.
fn spec_ret_save_after_exit(k: usize) -> Formula {
    let guard = fand(
        fand(
            not(in_ucc(sig(Signal::Pc), k)),
            in_ucc(y(sig(Signal::Pc)), k),
        ),
        not(Formula::yesterday(flag(Signal::IrqJmp))),
    );
    let latch_ok = or(
        eq(x(sig(Signal::RetExp(k))), sig(Signal::OpRet)),
        flag(Signal::Reset),
    );
    g(implies(
        guard,
        w(
            implies(in_ucc(x(sig(Signal::Pc)), k), latch_ok),
            in_ucc(sig(Signal::Pc), k),
        ),
    ))
}

/// ret_exp is immutable while the UCC executes.
fn spec_ret_immutable(k: usize) -> Formula {
    let entered = fand(in_ucc(sig(Signal::Pc), k), not(in_ucc(y(sig(Signal::Pc)), k)));
    let frozen = or(
        eq(x(sig(Signal::RetExp(k))), sig(Signal::RetExp(k))),
        flag(Signal::Reset),
    );
    g(implies(entered, w(frozen, not(in_ucc(sig(Signal::Pc), k)))))
}

/// ret_exp is immutable across an interrupt, until the UCC resumes or a
/// reset occurs.
fn spec_ret_immutable_irq(k: usize) -> Formula {
    let guard = fand(
        fand(
            fand(
                not(in_ucc(sig(Signal::Pc), k)),
                in_ucc(y(sig(Signal::Pc)), k),
            ),
            Formula::yesterday(flag(Signal::IrqJmp)),
        ),
        not(Formula::yesterday(flag(Signal::Reset))),
    );
    let frozen = eq(x(sig(Signal::RetExp(k))), sig(Signal::RetExp(k)));
    let until = or(in_ucc(sig(Signal::Pc), k), flag(Signal::Reset));
    g(implies(guard, w(frozen, until)))
}

/// Return integrity: a non-interrupt exit must land on ret_exp or reset.
fn spec_ret_integrity(k: usize) -> Formula {
    let guard = fand(
        fand(
            fand(not(flag(Signal::Reset)), in_ucc(sig(Signal::Pc), k)),
            not(in_ucc(x(sig(Signal::Pc)), k)),
        ),
        not(flag(Signal::IrqJmp)),
    );
    let ok = or(
        eq(x(sig(Signal::Pc)), sig(Signal::RetExp(k))),
        Formula::next(flag(Signal::Reset)),
    );
    g(implies(guard, ok))
}

/// After a reset, bp tracks the running stack pointer on every instruction
/// change until the UCC is entered. Snapshots sample sp at fetch, so the
/// current step's sp *is* the value the previous instruction left behind —
/// the per-cycle Y(SP) of the hardware formulation.
fn spec_bp_save_after_reset(k: usize) -> Formula {
    let changed = not(eq(y(sig(Signal::Pc)), sig(Signal::Pc)));
    let tracked = or(eq(sig(Signal::Bp(k)), sig(Signal::Sp)), flag(Signal::Reset));
    g(implies(
        flag(Signal::Reset),
        w(implies(changed, tracked), in_ucc(sig(Signal::Pc), k)),
    ))
}

/// bp does not change on the entering step, so it keeps the call step's
/// fetch-time sp — the value before the return address was pushed.
fn spec_bp_enter(k: usize) -> Formula {
    let entering = fand(not(in_ucc(sig(Signal::Pc), k)), in_ucc(x(sig(Signal::Pc)), k));
    let pinned = or(eq(x(sig(Signal::Bp(k))), sig(Signal::Bp(k))), flag(Signal::Reset));
    g(implies(entering, pinned))
}

/// After a non-interrupt exit, bp resumes tracking until re-entry.
fn spec_bp_save_after_exit(k: usize) -> Formula {
    let guard = fand(
        fand(
            not(in_ucc(sig(Signal::Pc), k)),
            in_ucc(y(sig(Signal::Pc)), k),
        ),
        not(Formula::yesterday(flag(Signal::IrqJmp))),
    );
    let changed = not(eq(y(sig(Signal::Pc)), sig(Signal::Pc)));
    let tracked = or(eq(sig(Signal::Bp(k)), sig(Signal::Sp)), flag(Signal::Reset));
    g(implies(
        guard,
        w(implies(changed, tracked), in_ucc(sig(Signal::Pc), k)),
    ))
}

/// bp is immutable while the UCC executes.
fn spec_bp_immutable(k: usize) -> Formula {
    let entered = fand(in_ucc(sig(Signal::Pc), k), not(in_ucc(y(sig(Signal::Pc)), k)));
    let frozen = or(
        eq(x(sig(Signal::Bp(k))), sig(Signal::Bp(k))),
        flag(Signal::Reset),
    );
    g(implies(entered, w(frozen, not(in_ucc(sig(Signal::Pc), k)))))
}

/// bp is immutable across an interrupt.
fn spec_bp_immutable_irq(k: usize) -> Formula {
    let guard = fand(
        fand(
            fand(
                not(in_ucc(sig(Signal::Pc), k)),
                in_ucc(y(sig(Signal::Pc)), k),
            ),
            Formula::yesterday(flag(Signal::IrqJmp)),
        ),
        not(Formula::yesterday(flag(Signal::Reset))),
    );
    let frozen = eq(x(sig(Signal::Bp(k))), sig(Signal::Bp(k)));
    let until = or(in_ucc(sig(Signal::Pc), k), flag(Signal::Reset));
    g(implies(guard, w(frozen, until)))
}

/// Stack isolation: a UCC-resident write at or below the frame base
/// (d_addr >= bp, the stack grows towards 0) forces reset.
fn spec_stack_isolation(k: usize) -> Formula {
    g(implies(
        fand(
            fand(in_ucc(sig(Signal::Pc), k), flag(Signal::WEn)),
            ge(sig(Signal::DAddr), sig(Signal::Bp(k))),
        ),
        flag(Signal::Reset),
    ))
}

/// Stack integrity: a non-interrupt exit must restore sp = bp or reset.
fn spec_stack_integrity(k: usize) -> Formula {
    let guard = fand(
        fand(
            fand(not(flag(Signal::Reset)), in_ucc(sig(Signal::Pc), k)),
            not(in_ucc(x(sig(Signal::Pc)), k)),
        ),
        not(flag(Signal::IrqJmp)),
    );
    let ok = or(
        eq(x(sig(Signal::Sp)), sig(Signal::Bp(k))),
        Formula::next(flag(Signal::Reset)),
    );
    g(implies(guard, ok))
}

/// The monitor's specification catalog for `n_ucc` compartments: the shared
/// CR rule plus twelve per-UCC rules, 12·n + 1 formulas in total.
pub fn builtin_specs(n_ucc: usize) -> Vec<BuiltinSpec> {
    let mut out = vec![BuiltinSpec { eq: 1, ucc: None, formula: spec_cr() }];
    for k in 0..n_ucc {
        let per: [(u8, Formula); 12] = [
            (2, spec_ret_save_after_reset(k)),
            (3, spec_ret_save_after_exit(k)),
            (4, spec_ret_immutable(k)),
            (5, spec_ret_immutable_irq(k)),
            (6, spec_ret_integrity(k)),
            (7, spec_bp_save_after_reset(k)),
            (8, spec_bp_enter(k)),
            (9, spec_bp_save_after_exit(k)),
            (10, spec_bp_immutable(k)),
            (11, spec_bp_immutable_irq(k)),
            (12, spec_stack_isolation(k)),
            (13, spec_stack_integrity(k)),
        ];
        out.extend(per.into_iter().map(|(eq, formula)| BuiltinSpec {
            eq,
            ucc: Some(k),
            formula,
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;

    #[test]
    fn catalog_counts() {
        assert_eq!(builtin_specs(1).len(), 13);
        assert_eq!(builtin_specs(2).len(), 25);
        let ids: Vec<u8> = builtin_specs(1).iter().map(|s| s.eq).collect();
        assert_eq!(ids, (1..=13).collect::<Vec<u8>>());
    }

    #[test]
    fn spec12_atoms() {
        let s = builtin_specs(1).into_iter().find(|s| s.eq == 12).unwrap();
        let text = s.formula.to_string();
        assert!(text.contains("pc in UCC0"));
        assert!(text.contains("w_en"));
        assert!(text.contains("d_addr >= bp0"));
        assert!(text.contains("reset"));
    }

    #[test]
    fn all_builtins_roundtrip_through_the_parser() {
        for n in 1..=3 {
            for spec in builtin_specs(n) {
                let text = spec.formula.to_string();
                let back = parse_formula(&text, n).unwrap_or_else(|e| {
                    panic!("{}: {e}\n{text}", spec.label());
                });
                assert_eq!(back, spec.formula, "{}", spec.label());
            }
        }
    }
}
