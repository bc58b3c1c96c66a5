use std::fmt;

/// Trace signal referenced by a term. `ret_exp`/`bp` are per-UCC monitor
/// registers and carry the UCC index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    Pc,
    Sp,
    DAddr,
    WEn,
    IrqJmp,
    OpRet,
    Reset,
    RetExp(usize),
    Bp(usize),
}

impl Signal {
    pub fn is_boolean(self) -> bool {
        matches!(self, Signal::WEn | Signal::IrqJmp | Signal::Reset)
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Pc => write!(f, "pc"),
            Signal::Sp => write!(f, "sp"),
            Signal::DAddr => write!(f, "d_addr"),
            Signal::WEn => write!(f, "w_en"),
            Signal::IrqJmp => write!(f, "irq_jmp"),
            Signal::OpRet => write!(f, "op_ret"),
            Signal::Reset => write!(f, "reset"),
            Signal::RetExp(k) => write!(f, "ret_exp{k}"),
            Signal::Bp(k) => write!(f, "bp{k}"),
        }
    }
}

/// Word-valued term: a signal, a constant, or a next/previous shift of a
/// term. Shifts nest to arbitrary depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Signal(Signal),
    Const(u16),
    Next(Box<Term>),
    Prev(Box<Term>),
}

impl Term {
    pub fn next(t: Term) -> Term {
        Term::Next(Box::new(t))
    }

    pub fn prev(t: Term) -> Term {
        Term::Prev(Box::new(t))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Signal(s) => write!(f, "{s}"),
            Term::Const(c) => {
                if *c > 9 {
                    write!(f, "0x{c:04X}")
                } else {
                    write!(f, "{c}")
                }
            }
            Term::Next(t) => write!(f, "X({t})"),
            Term::Prev(t) => write!(f, "Y({t})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Ne,
    Ge,
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cmp::Eq => write!(f, "="),
            Cmp::Ne => write!(f, "!="),
            Cmp::Ge => write!(f, ">="),
        }
    }
}

/// Membership region: one of the declared UCCs, or the configuration region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionRef {
    Ucc(usize),
    Cr,
}

impl fmt::Display for RegionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionRef::Ucc(k) => write!(f, "UCC{k}"),
            RegionRef::Cr => write!(f, "CR"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    /// term comparator term
    Atom(Term, Cmp, Term),
    /// term in region
    InRegion(Term, RegionRef),
    /// bare 1-bit signal used as a proposition (w_en, irq_jmp, reset)
    Flag(Signal),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Globally(Box<Formula>),
    Next(Box<Formula>),
    Yesterday(Box<Formula>),
    WeakUntil(Box<Formula>, Box<Formula>),
}

impl Formula {
    #[allow(clippy::should_implement_trait)] // builder, deliberately named after the operator
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn globally(f: Formula) -> Formula {
        Formula::Globally(Box::new(f))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn yesterday(f: Formula) -> Formula {
        Formula::Yesterday(Box::new(f))
    }

    pub fn weak_until(a: Formula, b: Formula) -> Formula {
        Formula::WeakUntil(Box::new(a), Box::new(b))
    }

    /// Largest UCC index referenced by any `ret_exp`/`bp` signal or UCC
    /// membership atom, if any.
    pub fn max_ucc_index(&self) -> Option<usize> {
        fn term_idx(t: &Term) -> Option<usize> {
            match t {
                Term::Signal(Signal::RetExp(k)) | Term::Signal(Signal::Bp(k)) => Some(*k),
                Term::Next(t) | Term::Prev(t) => term_idx(t),
                _ => None,
            }
        }
        fn walk(f: &Formula) -> Option<usize> {
            let m = |a: Option<usize>, b: Option<usize>| match (a, b) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, None) => x,
                (None, y) => y,
            };
            match f {
                Formula::True | Formula::False => None,
                Formula::Atom(a, _, b) => m(term_idx(a), term_idx(b)),
                Formula::InRegion(t, RegionRef::Ucc(k)) => m(term_idx(t), Some(*k)),
                Formula::InRegion(t, RegionRef::Cr) => term_idx(t),
                Formula::Flag(_) => None,
                Formula::Not(f) | Formula::Globally(f) | Formula::Next(f) | Formula::Yesterday(f) => {
                    walk(f)
                }
                Formula::And(a, b)
                | Formula::Or(a, b)
                | Formula::Implies(a, b)
                | Formula::WeakUntil(a, b) => m(walk(a), walk(b)),
            }
        }
        walk(self)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a, op, b) => write!(f, "{a} {op} {b}"),
            Formula::InRegion(t, r) => write!(f, "{t} in {r}"),
            Formula::Flag(s) => write!(f, "{s}"),
            Formula::Not(g) => match g.as_ref() {
                Formula::Flag(_) | Formula::True | Formula::False => write!(f, "!{g}"),
                _ => write!(f, "!({g})"),
            },
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Globally(g) => write!(f, "G({g})"),
            Formula::Next(g) => write!(f, "X({g})"),
            Formula::Yesterday(g) => write!(f, "Y({g})"),
            Formula::WeakUntil(a, b) => write!(f, "({a} W {b})"),
        }
    }
}
