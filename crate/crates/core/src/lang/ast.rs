//! Abstract syntax of the labelled core language.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A statement label. Labels are opaque identifiers, ordered naturally so
/// that `L2 < L10`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Self {
        Label(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Labels in the `G<n>` namespace are reserved for schema-inserted code.
    pub fn is_generated(&self) -> bool {
        generated_index(&self.0).is_some()
    }

    fn natural_key(&self) -> (&str, Option<u64>) {
        let split = self
            .0
            .char_indices()
            .rev()
            .take_while(|(_, c)| c.is_ascii_digit())
            .last()
            .map(|(i, _)| i)
            .unwrap_or(self.0.len());
        let (stem, digits) = self.0.split_at(split);
        (stem, digits.parse().ok())
    }
}

pub(crate) fn generated_index(name: &str) -> Option<u64> {
    let digits = name.strip_prefix('G')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.natural_key()
            .cmp(&other.natural_key())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A program variable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An operand: a variable or an integer constant. Variables order before
/// constants.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Atom {
    Var(Var),
    Int(i64),
}

impl Atom {
    pub fn var(&self) -> Option<&Var> {
        match self {
            Atom::Var(v) => Some(v),
            Atom::Int(_) => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(v) => v.fmt(f),
            Atom::Int(n) => n.fmt(f),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub const ALL: [BinOp; 11] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    pub fn from_symbol(sym: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.symbol() == sym)
    }

    /// Wrapping signed 64-bit arithmetic; `None` on division or remainder by
    /// zero.
    pub fn apply(self, a: i64, b: i64) -> Option<i64> {
        let bit = |x: bool| x as i64;
        Some(match self {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::Div => {
                if b == 0 {
                    return None;
                }
                a.wrapping_div(b)
            }
            BinOp::Rem => {
                if b == 0 {
                    return None;
                }
                a.wrapping_rem(b)
            }
            BinOp::Eq => bit(a == b),
            BinOp::Ne => bit(a != b),
            BinOp::Lt => bit(a < b),
            BinOp::Le => bit(a <= b),
            BinOp::Gt => bit(a > b),
            BinOp::Ge => bit(a >= b),
        })
    }
}

/// Relational operator of a condition atom. The baseline condition space
/// only uses `==` against constants.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Lt,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Lt => a < b,
            CmpOp::Gt => a > b,
        }
    }
}

/// Branch conditions. Parentheses are purely syntactic and have no node.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Cond {
    Lit(bool),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
    Cmp { lhs: Var, op: CmpOp, rhs: Atom },
}

impl Cond {
    pub fn eq_const(v: Var, k: i64) -> Cond {
        Cond::Cmp {
            lhs: v,
            op: CmpOp::Eq,
            rhs: Atom::Int(k),
        }
    }

    pub fn and(a: Cond, b: Cond) -> Cond {
        Cond::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Cond, b: Cond) -> Cond {
        Cond::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Cond) -> Cond {
        Cond::Not(Box::new(c))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Cond::Lit(_) => {}
            Cond::And(a, b) | Cond::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Cond::Not(c) => c.collect_vars(out),
            Cond::Cmp { lhs, rhs, .. } => {
                out.insert(lhs.clone());
                if let Atom::Var(v) = rhs {
                    out.insert(v.clone());
                }
            }
        }
    }

    pub fn collect_consts(&self, out: &mut BTreeSet<i64>) {
        match self {
            Cond::Lit(_) => {}
            Cond::And(a, b) | Cond::Or(a, b) => {
                a.collect_consts(out);
                b.collect_consts(out);
            }
            Cond::Not(c) => c.collect_consts(out),
            Cond::Cmp { rhs, .. } => {
                if let Atom::Int(k) = rhs {
                    out.insert(*k);
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Cond::Or(..) => 1,
            Cond::And(..) => 2,
            _ => 3,
        }
    }

    pub(crate) fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.precedence() < min;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Cond::Lit(b) => f.write_str(if *b { "1" } else { "0" })?,
            Cond::Or(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" || ")?;
                b.fmt_prec(f, 2)?;
            }
            Cond::And(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str(" && ")?;
                b.fmt_prec(f, 3)?;
            }
            Cond::Not(c) => {
                f.write_str("!")?;
                c.fmt_prec(f, 3)?;
            }
            Cond::Cmp { lhs, op, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol())?,
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Which way an abstract condition is attached to an existing condition.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum AbstShape {
    /// `c && !abstc`
    Tighten,
    /// `c || abstc`
    Loosen,
}

impl AbstShape {
    /// Attach a concrete condition in place of the abstract one.
    pub fn instantiate(self, base: &Cond, c: &Cond) -> Cond {
        match self {
            AbstShape::Tighten => Cond::and(base.clone(), Cond::not(c.clone())),
            AbstShape::Loosen => Cond::or(base.clone(), c.clone()),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Stmt {
    Skip,
    Stop,
    /// `v = a op b`
    Assign {
        dst: Var,
        lhs: Atom,
        op: BinOp,
        rhs: Atom,
    },
    /// `v = const`
    Const {
        dst: Var,
        value: i64,
    },
    /// `v = read`
    Read {
        dst: Var,
    },
    /// `print v` or `print const`
    Print(Atom),
    /// `print abstval`
    PrintAbst,
    If {
        cond: Cond,
        then_to: Label,
        else_to: Label,
    },
    /// `if (c && !abstc) ..` or `if (c || abstc) ..`
    AbstIf {
        cond: Cond,
        shape: AbstShape,
        then_to: Label,
        else_to: Label,
    },
}

impl Stmt {
    pub fn is_branch(&self) -> bool {
        matches!(self, Stmt::If { .. } | Stmt::AbstIf { .. })
    }

    /// Statements with a fall-through successor in the next map.
    pub fn has_successor(&self) -> bool {
        !self.is_branch() && !matches!(self, Stmt::Stop)
    }

    /// Members of the `SimpleStmt` class: assignments, reads and prints.
    pub fn is_simple(&self) -> bool {
        matches!(
            self,
            Stmt::Assign { .. } | Stmt::Const { .. } | Stmt::Read { .. } | Stmt::Print(_)
        )
    }

    pub fn is_abstract(&self) -> bool {
        matches!(self, Stmt::PrintAbst | Stmt::AbstIf { .. })
    }

    pub fn targets(&self) -> Option<(&Label, &Label)> {
        match self {
            Stmt::If {
                then_to, else_to, ..
            }
            | Stmt::AbstIf {
                then_to, else_to, ..
            } => Some((then_to, else_to)),
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        let atom = |a: &Atom, out: &mut BTreeSet<Var>| {
            if let Atom::Var(v) = a {
                out.insert(v.clone());
            }
        };
        match self {
            Stmt::Skip | Stmt::Stop | Stmt::PrintAbst => {}
            Stmt::Assign { dst, lhs, rhs, .. } => {
                out.insert(dst.clone());
                atom(lhs, &mut out);
                atom(rhs, &mut out);
            }
            Stmt::Const { dst, .. } | Stmt::Read { dst } => {
                out.insert(dst.clone());
            }
            Stmt::Print(a) => atom(a, &mut out),
            Stmt::If { cond, .. } | Stmt::AbstIf { cond, .. } => cond.collect_vars(&mut out),
        }
        out
    }

    pub fn collect_consts(&self, out: &mut BTreeSet<i64>) {
        let mut atom = |a: &Atom| {
            if let Atom::Int(k) = a {
                out.insert(*k);
            }
        };
        match self {
            Stmt::Assign { lhs, rhs, .. } => {
                atom(lhs);
                atom(rhs);
            }
            Stmt::Const { value, .. } => atom(&Atom::Int(*value)),
            Stmt::Print(a) => atom(a),
            Stmt::If { cond, .. } | Stmt::AbstIf { cond, .. } => cond.collect_consts(out),
            Stmt::Skip | Stmt::Stop | Stmt::Read { .. } | Stmt::PrintAbst => {}
        }
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Skip => f.write_str("skip"),
            Stmt::Stop => f.write_str("stop"),
            Stmt::Assign { dst, lhs, op, rhs } => {
                write!(f, "{dst} = {lhs} {} {rhs}", op.symbol())
            }
            Stmt::Const { dst, value } => write!(f, "{dst} = {value}"),
            Stmt::Read { dst } => write!(f, "{dst} = read"),
            Stmt::Print(a) => write!(f, "print {a}"),
            Stmt::PrintAbst => f.write_str("print abstval"),
            Stmt::If {
                cond,
                then_to,
                else_to,
            } => write!(f, "if ({cond}) {then_to} {else_to}"),
            Stmt::AbstIf {
                cond,
                shape,
                then_to,
                else_to,
            } => {
                f.write_str("if (")?;
                match shape {
                    AbstShape::Tighten => {
                        cond.fmt_prec(f, 2)?;
                        f.write_str(" && !abstc")?;
                    }
                    AbstShape::Loosen => {
                        cond.fmt_prec(f, 1)?;
                        f.write_str(" || abstc")?;
                    }
                }
                write!(f, ") {then_to} {else_to}")
            }
        }
    }
}
