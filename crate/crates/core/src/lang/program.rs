use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::{generated_index, Atom, Cond, Label, Stmt, Var};
use super::LangError;

/// A program `<p, n>`: statements by label, fall-through successors, and an
/// entry label.
///
/// Successor entries exist exactly for statements that fall through (not
/// branches, not `stop`). Values are immutable once constructed; schema code
/// builds new programs through [`Program::new`].
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Program {
    stmts: BTreeMap<Label, Stmt>,
    next: BTreeMap<Label, Label>,
    entry: Label,
}

/// Where the single abstract marker of a template lives.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MarkerKind {
    Condition,
    Value,
}

impl Program {
    /// Builds a program and checks well-formedness. Successor entries of
    /// branch and `stop` labels are dropped.
    pub fn new(
        stmts: BTreeMap<Label, Stmt>,
        mut next: BTreeMap<Label, Label>,
        entry: Label,
    ) -> Result<Program, LangError> {
        if stmts.is_empty() {
            return Err(LangError::Malformed("program has no statements".into()));
        }
        if !stmts.contains_key(&entry) {
            return Err(LangError::UndefinedLabel {
                label: entry.to_string(),
                line: None,
            });
        }
        next.retain(|l, _| stmts.get(l).is_some_and(Stmt::has_successor));
        let mut markers = 0;
        for (label, stmt) in &stmts {
            if stmt.has_successor() {
                match next.get(label) {
                    None => {
                        return Err(LangError::Malformed(format!(
                            "statement {label} has no successor"
                        )))
                    }
                    Some(to) if !stmts.contains_key(to) => {
                        return Err(LangError::UndefinedLabel {
                            label: to.to_string(),
                            line: None,
                        })
                    }
                    Some(_) => {}
                }
            }
            if let Some((a, b)) = stmt.targets() {
                for to in [a, b] {
                    if !stmts.contains_key(to) {
                        return Err(LangError::UndefinedLabel {
                            label: to.to_string(),
                            line: None,
                        });
                    }
                }
            }
            if stmt.is_abstract() {
                markers += 1;
            }
        }
        if markers > 1 {
            return Err(LangError::Malformed("more than one abstract marker".into()));
        }
        Ok(Program { stmts, next, entry })
    }

    pub fn entry(&self) -> &Label {
        &self.entry
    }

    pub fn stmt(&self, label: &Label) -> Option<&Stmt> {
        self.stmts.get(label)
    }

    pub fn next(&self, label: &Label) -> Option<&Label> {
        self.next.get(label)
    }

    pub fn stmts(&self) -> &BTreeMap<Label, Stmt> {
        &self.stmts
    }

    pub fn successors(&self) -> &BTreeMap<Label, Label> {
        &self.next
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.stmts.keys()
    }

    pub fn len(&self) -> usize {
        self.stmts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stmts.is_empty()
    }

    /// The abstract marker this program carries, if any.
    pub fn marker(&self) -> Option<(Label, MarkerKind)> {
        self.stmts.iter().find_map(|(l, s)| match s {
            Stmt::AbstIf { .. } => Some((l.clone(), MarkerKind::Condition)),
            Stmt::PrintAbst => Some((l.clone(), MarkerKind::Value)),
            _ => None,
        })
    }

    pub fn has_abstract_print(&self) -> bool {
        self.stmts.values().any(|s| matches!(s, Stmt::PrintAbst))
    }

    /// `Vars(p)`.
    pub fn vars(&self) -> BTreeSet<Var> {
        self.stmts.values().flat_map(Stmt::vars).collect()
    }

    /// `Consts(p)`: constants of statements and comparisons. The bare
    /// condition literals `1`/`0` are not collected.
    pub fn consts(&self) -> BTreeSet<i64> {
        let mut out = BTreeSet::new();
        for s in self.stmts.values() {
            s.collect_consts(&mut out);
        }
        out
    }

    /// `SimpleS(p)` in ascending label order.
    pub fn simple_statements(&self) -> Vec<(&Label, &Stmt)> {
        self.stmts.iter().filter(|(_, s)| s.is_simple()).collect()
    }

    /// `count` labels from the reserved `G<n>` namespace absent from this
    /// program, lowest indices first.
    pub fn fresh_labels(&self, count: usize) -> Vec<Label> {
        let taken: BTreeSet<u64> = self
            .stmts
            .keys()
            .filter_map(|l| generated_index(l.as_str()))
            .collect();
        (1u64..)
            .filter(|i| !taken.contains(i))
            .take(count)
            .map(|i| Label::new(format!("G{i}")))
            .collect()
    }

    /// Decomposes the program for editing.
    pub fn to_parts(&self) -> (BTreeMap<Label, Stmt>, BTreeMap<Label, Label>, Label) {
        (self.stmts.clone(), self.next.clone(), self.entry.clone())
    }

    fn replace_marker(&self, f: impl Fn(&Stmt) -> Option<Stmt>) -> Option<Program> {
        let (label, _) = self.marker()?;
        let mut stmts = self.stmts.clone();
        let replaced = f(&stmts[&label])?;
        stmts.insert(label, replaced);
        Some(Program {
            stmts,
            next: self.next.clone(),
            entry: self.entry.clone(),
        })
    }

    /// `p[c/abstc]`: the concrete program obtained by substituting `c` for the
    /// abstract condition. `None` if the program has no abstract condition.
    pub fn substitute_condition(&self, c: &Cond) -> Option<Program> {
        self.replace_marker(|s| match s {
            Stmt::AbstIf {
                cond,
                shape,
                then_to,
                else_to,
            } => Some(Stmt::If {
                cond: shape.instantiate(cond, c),
                then_to: then_to.clone(),
                else_to: else_to.clone(),
            }),
            _ => None,
        })
    }

    /// `p[val/abstval]`.
    pub fn substitute_value(&self, value: &Atom) -> Option<Program> {
        self.replace_marker(|s| match s {
            Stmt::PrintAbst => Some(Stmt::Print(value.clone())),
            _ => None,
        })
    }
}

/// Canonical text: the entry statement first, then the remaining labels in
/// ascending order, every fall-through successor written explicitly.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order =
            std::iter::once(&self.entry).chain(self.stmts.keys().filter(|l| **l != self.entry));
        let mut first = true;
        for label in order {
            if !first {
                f.write_str("\n")?;
            }
            first = false;
            write!(f, "{label}: {}", self.stmts[label])?;
            if let Some(to) = self.next.get(label) {
                write!(f, " -> {to}")?;
            }
        }
        Ok(())
    }
}

/// `render_program`.
pub fn render_program(prog: &Program) -> String {
    prog.to_string()
}
