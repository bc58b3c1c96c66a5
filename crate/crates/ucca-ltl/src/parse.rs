use crate::ast::{Cmp, Formula, RegionRef, Signal, Term};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownSignal(String),
    UnknownRegion(String),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{kind_msg} at byte {pos}", kind_msg = self.message())]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: usize,
}

impl ParseError {
    fn message(&self) -> String {
        match &self.kind {
            ParseErrorKind::Syntax(m) => format!("syntax error: {m}"),
            ParseErrorKind::UnknownSignal(s) => format!("unknown signal `{s}`"),
            ParseErrorKind::UnknownRegion(r) => format!("unknown region `{r}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(u16),
    LParen,
    RParen,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Eq,
    Ne,
    Ge,
}

struct Lexer;

impl Lexer {
    fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let bytes = text.as_bytes();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '\r' | '\n' => i += 1,
                '(' => {
                    toks.push((Tok::LParen, i));
                    i += 1;
                }
                ')' => {
                    toks.push((Tok::RParen, i));
                    i += 1;
                }
                '&' => {
                    toks.push((Tok::Amp, i));
                    i += 1;
                }
                '|' => {
                    toks.push((Tok::Pipe, i));
                    i += 1;
                }
                '=' => {
                    toks.push((Tok::Eq, i));
                    i += 1;
                }
                '!' => {
                    if bytes.get(i + 1) == Some(&b'=') {
                        toks.push((Tok::Ne, i));
                        i += 2;
                    } else {
                        toks.push((Tok::Bang, i));
                        i += 1;
                    }
                }
                '>' => {
                    if bytes.get(i + 1) == Some(&b'=') {
                        toks.push((Tok::Ge, i));
                        i += 2;
                    } else {
                        return Err(ParseError {
                            kind: ParseErrorKind::Syntax("expected `>=`".into()),
                            pos: i,
                        });
                    }
                }
                '-' => {
                    if bytes.get(i + 1) == Some(&b'>') {
                        toks.push((Tok::Arrow, i));
                        i += 2;
                    } else {
                        return Err(ParseError {
                            kind: ParseErrorKind::Syntax("expected `->`".into()),
                            pos: i,
                        });
                    }
                }
                '0'..='9' => {
                    let start = i;
                    let mut j = i;
                    let hex = bytes.get(i) == Some(&b'0')
                        && matches!(bytes.get(i + 1), Some(b'x') | Some(b'X'));
                    if hex {
                        j += 2;
                        while j < bytes.len() && (bytes[j] as char).is_ascii_hexdigit() {
                            j += 1;
                        }
                        let v = u16::from_str_radix(&text[start + 2..j], 16).map_err(|_| {
                            ParseError {
                                kind: ParseErrorKind::Syntax("bad hex constant".into()),
                                pos: start,
                            }
                        })?;
                        toks.push((Tok::Number(v), start));
                    } else {
                        while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                            j += 1;
                        }
                        let v: u16 = text[start..j].parse().map_err(|_| ParseError {
                            kind: ParseErrorKind::Syntax("constant out of range".into()),
                            pos: start,
                        })?;
                        toks.push((Tok::Number(v), start));
                    }
                    i = j;
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    let mut j = i;
                    while j < bytes.len()
                        && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                    {
                        j += 1;
                    }
                    toks.push((Tok::Ident(text[start..j].to_string()), start));
                    i = j;
                }
                other => {
                    return Err(ParseError {
                        kind: ParseErrorKind::Syntax(format!("unexpected character `{other}`")),
                        pos: i,
                    })
                }
            }
        }
        Ok(toks)
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    n_ucc: usize,
    text_len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, p)| p).unwrap_or(self.text_len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(format!("expected {what}")))
        }
    }

    fn syntax(&self, msg: String) -> ParseError {
        ParseError { kind: ParseErrorKind::Syntax(msg), pos: self.here() }
    }

    fn signal(&self, name: &str, pos: usize) -> Result<Signal, ParseError> {
        let s = match name {
            "pc" => Signal::Pc,
            "sp" => Signal::Sp,
            "d_addr" => Signal::DAddr,
            "w_en" => Signal::WEn,
            "irq_jmp" => Signal::IrqJmp,
            "op_ret" => Signal::OpRet,
            "reset" => Signal::Reset,
            "ret_exp" => Signal::RetExp(0),
            "bp" => Signal::Bp(0),
            _ => {
                let idx_sig = |prefix: &str, mk: fn(usize) -> Signal| {
                    name.strip_prefix(prefix)
                        .and_then(|d| d.parse::<usize>().ok())
                        .map(mk)
                };
                let sig = idx_sig("ret_exp", Signal::RetExp).or_else(|| idx_sig("bp", Signal::Bp));
                match sig {
                    Some(Signal::RetExp(k)) | Some(Signal::Bp(k)) if k >= self.n_ucc => {
                        return Err(ParseError {
                            kind: ParseErrorKind::UnknownSignal(name.to_string()),
                            pos,
                        })
                    }
                    Some(s) => return Ok(s),
                    None => {
                        return Err(ParseError {
                            kind: ParseErrorKind::UnknownSignal(name.to_string()),
                            pos,
                        })
                    }
                }
            }
        };
        if let Signal::RetExp(k) | Signal::Bp(k) = s {
            if k >= self.n_ucc {
                return Err(ParseError {
                    kind: ParseErrorKind::UnknownSignal(name.to_string()),
                    pos,
                });
            }
        }
        Ok(s)
    }

    fn region(&self, name: &str, pos: usize) -> Result<RegionRef, ParseError> {
        if name == "CR" {
            return Ok(RegionRef::Cr);
        }
        if let Some(k) = name.strip_prefix("UCC").and_then(|d| d.parse::<usize>().ok()) {
            if k < self.n_ucc {
                return Ok(RegionRef::Ucc(k));
            }
        }
        Err(ParseError { kind: ParseErrorKind::UnknownRegion(name.to_string()), pos })
    }

    /// Strict term parser: signal, constant, or X(/Y( term ).
    fn parse_term(&mut self) -> Result<Term, ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Number(v)) => Ok(Term::Const(v)),
            Some(Tok::Ident(name)) => match name.as_str() {
                "X" | "Y" => {
                    self.expect(Tok::LParen, "`(`")?;
                    let inner = self.parse_term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(if name == "X" { Term::next(inner) } else { Term::prev(inner) })
                }
                _ => Ok(Term::Signal(self.signal(&name, pos)?)),
            },
            _ => Err(ParseError {
                kind: ParseErrorKind::Syntax("expected a term".into()),
                pos,
            }),
        }
    }

    fn comparator_ahead(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Eq) | Some(Tok::Ne) | Some(Tok::Ge)
        ) || matches!(self.peek(), Some(Tok::Ident(w)) if w == "in")
    }

    /// Finish an atom whose left term is already parsed.
    fn finish_atom(&mut self, left: Term) -> Result<Formula, ParseError> {
        match self.bump() {
            Some(Tok::Eq) => Ok(Formula::Atom(left, Cmp::Eq, self.parse_term()?)),
            Some(Tok::Ne) => Ok(Formula::Atom(left, Cmp::Ne, self.parse_term()?)),
            Some(Tok::Ge) => Ok(Formula::Atom(left, Cmp::Ge, self.parse_term()?)),
            Some(Tok::Ident(w)) if w == "in" => {
                let pos = self.here();
                match self.bump() {
                    Some(Tok::Ident(r)) => Ok(Formula::InRegion(left, self.region(&r, pos)?)),
                    _ => Err(ParseError {
                        kind: ParseErrorKind::Syntax("expected a region name".into()),
                        pos,
                    }),
                }
            }
            _ => unreachable!("caller checked comparator_ahead"),
        }
    }

    fn parse_primary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.here();
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.bump();
                let f = self.parse_formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Number(_)) => {
                let t = self.parse_term()?;
                if self.comparator_ahead() {
                    self.finish_atom(t)
                } else {
                    Err(self.syntax("a constant must be compared to something".into()))
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "true" => {
                    self.bump();
                    Ok(Formula::True)
                }
                "false" => {
                    self.bump();
                    Ok(Formula::False)
                }
                "G" => {
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let f = self.parse_formula()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Formula::globally(f))
                }
                "X" | "Y" => {
                    // Could start a shifted term (followed by a comparator)
                    // or a temporal formula. Try the term reading first and
                    // backtrack if it doesn't pan out.
                    let save = self.pos;
                    if let Ok(t) = self.parse_term() {
                        if self.comparator_ahead() {
                            return self.finish_atom(t);
                        }
                    }
                    self.pos = save;
                    self.bump();
                    self.expect(Tok::LParen, "`(`")?;
                    let f = self.parse_formula()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(if name == "X" { Formula::next(f) } else { Formula::yesterday(f) })
                }
                _ => {
                    let t = self.parse_term()?;
                    if self.comparator_ahead() {
                        self.finish_atom(t)
                    } else {
                        match t {
                            Term::Signal(s) if s.is_boolean() => Ok(Formula::Flag(s)),
                            Term::Signal(s) => Err(ParseError {
                                kind: ParseErrorKind::Syntax(format!(
                                    "signal `{s}` is not boolean; compare it or use `in`"
                                )),
                                pos,
                            }),
                            _ => Err(self.syntax("expected a comparator".into())),
                        }
                    }
                }
            },
            _ => Err(self.syntax("expected a formula".into())),
        }
    }

    fn parse_unary(&mut self) -> Result<Formula, ParseError> {
        if self.peek() == Some(&Tok::Bang) {
            self.bump();
            return Ok(Formula::not(self.parse_unary()?));
        }
        self.parse_primary()
    }

    fn parse_and(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.parse_unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            f = Formula::and(f, self.parse_unary()?);
        }
        Ok(f)
    }

    fn parse_or(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.parse_and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.bump();
            f = Formula::or(f, self.parse_and()?);
        }
        Ok(f)
    }

    fn parse_weak_until(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.parse_or()?;
        while matches!(self.peek(), Some(Tok::Ident(w)) if w == "W") {
            self.bump();
            f = Formula::weak_until(f, self.parse_or()?);
        }
        Ok(f)
    }

    fn parse_formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_weak_until()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.bump();
            let rhs = self.parse_formula()?; // right-associative
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }
}

/// Parse a formula. `n_ucc` bounds the region/register indices the text may
/// reference (`UCC0`..`UCC{n-1}`, `ret_exp{k}`, `bp{k}`; `ret_exp`/`bp`
/// alias index 0).
pub fn parse_formula(text: &str, n_ucc: usize) -> Result<Formula, ParseError> {
    let toks = Lexer::lex(text)?;
    let mut p = Parser { toks, pos: 0, n_ucc, text_len: text.len() };
    let f = p.parse_formula()?;
    if p.pos != p.toks.len() {
        return Err(p.syntax("trailing input".into()));
    }
    Ok(f)
}
