//! Line-oriented concrete syntax: `LABEL: statement [-> NEXT]`.
//!
//! A fall-through statement without `->` continues at the label of the next
//! line. Branches and `stop` ignore any `->` clause.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{AbstShape, Atom, BinOp, CmpOp, Cond, Label, Stmt, Var};
use super::program::Program;
use super::LangError;

const KEYWORDS: [&str; 7] = ["skip", "stop", "read", "print", "if", "abstc", "abstval"];

/// User files may not contain abstract markers or `G<n>` labels; template
/// dumps may.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ParseMode {
    User,
    Template,
}

/// Parses a user program file.
pub fn parse_program(text: &str) -> Result<Program, LangError> {
    parse_with_mode(text, ParseMode::User)
}

/// Parses canonical template text (may contain `abstc` / `abstval`).
pub fn parse_template(text: &str) -> Result<Program, LangError> {
    parse_with_mode(text, ParseMode::Template)
}

pub fn parse_with_mode(text: &str, mode: ParseMode) -> Result<Program, LangError> {
    let mut lines: Vec<(usize, Label, Stmt, Option<Label>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens = lex(content, line_no)?;
        let mut p = LineParser {
            toks: &tokens,
            pos: 0,
            line: line_no,
            mode,
        };
        lines.push(p.line()?);
    }
    if lines.is_empty() {
        return Err(LangError::Malformed("program has no statements".into()));
    }

    let mut seen = BTreeSet::new();
    for (line, label, _, _) in &lines {
        if !seen.insert(label.clone()) {
            return Err(LangError::DuplicateLabel {
                label: label.to_string(),
                line: *line,
            });
        }
    }
    let undefined = |label: &Label, line: usize| LangError::UndefinedLabel {
        label: label.to_string(),
        line: Some(line),
    };

    let mut stmts = BTreeMap::new();
    let mut next = BTreeMap::new();
    for (i, (line, label, stmt, to)) in lines.iter().enumerate() {
        if let Some((a, b)) = stmt.targets() {
            for t in [a, b] {
                if !seen.contains(t) {
                    return Err(undefined(t, *line));
                }
            }
        } else if stmt.has_successor() {
            let to = match to {
                Some(to) => to.clone(),
                None => match lines.get(i + 1) {
                    Some((_, following, _, _)) => following.clone(),
                    None => {
                        return Err(LangError::Syntax {
                            line: *line,
                            msg: format!("statement {label} needs a successor (`-> LABEL`)"),
                        })
                    }
                },
            };
            if !seen.contains(&to) {
                return Err(undefined(&to, *line));
            }
            next.insert(label.clone(), to);
        }
        stmts.insert(label.clone(), stmt.clone());
    }
    let entry = lines[0].1.clone();
    Program::new(stmts, next, entry)
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Label(String),
    Int(u64),
    Sym(&'static str),
}

const SYMBOLS: [&str; 19] = [
    "->", "&&", "||", "==", "!=", "<=", ">=", "<", ">", "!", "(", ")", ":", "=", "+", "-", "*",
    "/", "%",
];

fn lex(s: &str, line: usize) -> Result<Vec<Tok>, LangError> {
    let bytes = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = s[start..i].parse::<u64>().map_err(|_| LangError::Syntax {
                line,
                msg: format!("integer out of range: {}", &s[start..i]),
            })?;
            out.push(Tok::Int(n));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &s[start..i];
            if c.is_ascii_uppercase() {
                out.push(Tok::Label(word.to_string()));
            } else if c.is_ascii_lowercase()
                && word
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
            {
                out.push(Tok::Ident(word.to_string()));
            } else {
                return Err(LangError::Syntax {
                    line,
                    msg: format!("bad identifier `{word}`"),
                });
            }
        } else if let Some(sym) = SYMBOLS.iter().find(|sym| s[i..].starts_with(**sym)) {
            out.push(Tok::Sym(sym));
            i += sym.len();
        } else {
            return Err(LangError::Syntax {
                line,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

/// Condition tree before the abstract marker is resolved into a shape.
enum RawCond {
    Abst,
    Lit(bool),
    And(Box<RawCond>, Box<RawCond>),
    Or(Box<RawCond>, Box<RawCond>),
    Not(Box<RawCond>),
    Cmp(Var, CmpOp, Atom),
}

impl RawCond {
    fn concrete(self) -> Option<Cond> {
        Some(match self {
            RawCond::Abst => return None,
            RawCond::Lit(b) => Cond::Lit(b),
            RawCond::And(a, b) => Cond::and(a.concrete()?, b.concrete()?),
            RawCond::Or(a, b) => Cond::or(a.concrete()?, b.concrete()?),
            RawCond::Not(c) => Cond::not(c.concrete()?),
            RawCond::Cmp(lhs, op, rhs) => Cond::Cmp { lhs, op, rhs },
        })
    }
}

struct LineParser<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
    mode: ParseMode,
}

impl LineParser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LangError> {
        Err(LangError::Syntax {
            line: self.line,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), LangError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            self.err(format!("expected `{sym}`"))
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(w)) if w == word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn reserved(&self, token: &str) -> Result<(), LangError> {
        if self.mode == ParseMode::User {
            Err(LangError::Reserved {
                line: self.line,
                token: token.to_string(),
            })
        } else {
            Ok(())
        }
    }

    fn label(&mut self) -> Result<Label, LangError> {
        match self.bump() {
            Some(Tok::Label(name)) => {
                let label = Label::new(name.clone());
                if label.is_generated() {
                    self.reserved(label.as_str())?;
                }
                Ok(label)
            }
            _ => self.err("expected a label"),
        }
    }

    fn var(&mut self) -> Result<Var, LangError> {
        match self.bump() {
            Some(Tok::Ident(name)) if !KEYWORDS.contains(&name.as_str()) => {
                Ok(Var::new(name.clone()))
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.err(format!("`{name}` is a keyword"))
            }
            _ => self.err("expected a variable"),
        }
    }

    fn int(&mut self) -> Result<i64, LangError> {
        let negative = self.eat_sym("-");
        match self.bump() {
            Some(Tok::Int(n)) => {
                let n = *n as i128;
                let v = if negative { -n } else { n };
                i64::try_from(v).or_else(|_| self.err("integer out of range"))
            }
            _ => self.err("expected an integer"),
        }
    }

    fn atom(&mut self) -> Result<Atom, LangError> {
        match self.peek() {
            Some(Tok::Ident(_)) => Ok(Atom::Var(self.var()?)),
            _ => Ok(Atom::Int(self.int()?)),
        }
    }

    fn line(&mut self) -> Result<(usize, Label, Stmt, Option<Label>), LangError> {
        let label = self.label()?;
        self.expect_sym(":")?;
        let stmt = self.stmt()?;
        let next = if self.eat_sym("->") {
            Some(self.label()?)
        } else {
            None
        };
        if self.pos < self.toks.len() {
            return self.err("trailing tokens after statement");
        }
        let next = if stmt.has_successor() { next } else { None };
        Ok((self.line, label, stmt, next))
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        if self.eat_word("skip") {
            return Ok(Stmt::Skip);
        }
        if self.eat_word("stop") {
            return Ok(Stmt::Stop);
        }
        if self.eat_word("print") {
            if self.eat_word("abstval") {
                self.reserved("abstval")?;
                return Ok(Stmt::PrintAbst);
            }
            return Ok(Stmt::Print(self.atom()?));
        }
        if self.eat_word("if") {
            self.expect_sym("(")?;
            let raw = self.or()?;
            self.expect_sym(")")?;
            let then_to = self.label()?;
            let else_to = self.label()?;
            return self.branch(raw, then_to, else_to);
        }
        let dst = self.var()?;
        self.expect_sym("=")?;
        if self.eat_word("read") {
            return Ok(Stmt::Read { dst });
        }
        let lhs = self.atom()?;
        let op = match self.peek() {
            Some(Tok::Sym(s)) if *s != "->" => BinOp::from_symbol(s),
            _ => None,
        };
        match (op, lhs) {
            (Some(op), lhs) => {
                self.pos += 1;
                let rhs = self.atom()?;
                Ok(Stmt::Assign { dst, lhs, op, rhs })
            }
            (None, Atom::Int(value)) => Ok(Stmt::Const { dst, value }),
            (None, Atom::Var(_)) => self.err("copy assignment `v = w` is not in the language"),
        }
    }

    fn branch(&self, raw: RawCond, then_to: Label, else_to: Label) -> Result<Stmt, LangError> {
        let shaped = match raw {
            RawCond::Or(c, marker) if matches!(*marker, RawCond::Abst) => {
                c.concrete().map(|c| (c, AbstShape::Loosen))
            }
            RawCond::And(c, neg) if matches!(&*neg, RawCond::Not(inner) if matches!(**inner, RawCond::Abst)) => {
                c.concrete().map(|c| (c, AbstShape::Tighten))
            }
            other => {
                return match other.concrete() {
                    Some(cond) => Ok(Stmt::If {
                        cond,
                        then_to,
                        else_to,
                    }),
                    None => self.err("`abstc` only appears as `c && !abstc` or `c || abstc`"),
                };
            }
        };
        match shaped {
            Some((cond, shape)) => Ok(Stmt::AbstIf {
                cond,
                shape,
                then_to,
                else_to,
            }),
            None => self.err("more than one `abstc` in a condition"),
        }
    }

    fn or(&mut self) -> Result<RawCond, LangError> {
        let mut lhs = self.and()?;
        while self.eat_sym("||") {
            let rhs = self.and()?;
            lhs = RawCond::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<RawCond, LangError> {
        let mut lhs = self.unary()?;
        while self.eat_sym("&&") {
            let rhs = self.unary()?;
            lhs = RawCond::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<RawCond, LangError> {
        if self.eat_sym("!") {
            return Ok(RawCond::Not(Box::new(self.unary()?)));
        }
        if self.eat_sym("(") {
            let inner = self.or()?;
            self.expect_sym(")")?;
            return Ok(inner);
        }
        match self.peek() {
            Some(Tok::Int(0)) => {
                self.pos += 1;
                Ok(RawCond::Lit(false))
            }
            Some(Tok::Int(1)) => {
                self.pos += 1;
                Ok(RawCond::Lit(true))
            }
            Some(Tok::Ident(w)) if w == "abstc" => {
                self.pos += 1;
                self.reserved("abstc")?;
                Ok(RawCond::Abst)
            }
            Some(Tok::Ident(_)) => {
                let lhs = self.var()?;
                let op = match self.bump() {
                    Some(Tok::Sym("==")) => CmpOp::Eq,
                    Some(Tok::Sym("<")) => CmpOp::Lt,
                    Some(Tok::Sym(">")) => CmpOp::Gt,
                    _ => return self.err("expected `==`, `<` or `>` in condition"),
                };
                let rhs = self.atom()?;
                Ok(RawCond::Cmp(lhs, op, rhs))
            }
            _ => self.err("expected a condition"),
        }
    }
}
