//! The transformation function: condition refinement, condition
//! introduction, conditional control flow, initialization insertion, value
//! replacement and copy-and-replace, plus the tiered validation order.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::{AbstShape, Atom, BinOp, Cond, Label, Program, Stmt, Var};
use crate::par;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum Schema {
    Tighten,
    Loosen,
    Control,
    Guard,
    Init,
    Rep,
    CpRep,
}

impl Schema {
    pub const ALL: [Schema; 7] = [
        Schema::Tighten,
        Schema::Loosen,
        Schema::Control,
        Schema::Guard,
        Schema::Init,
        Schema::Rep,
        Schema::CpRep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Schema::Tighten => "tighten",
            Schema::Loosen => "loosen",
            Schema::Control => "control",
            Schema::Guard => "guard",
            Schema::Init => "init",
            Schema::Rep => "rep",
            Schema::CpRep => "cprep",
        }
    }

    /// True for schemas whose templates carry an abstract condition.
    pub fn is_condition_schema(self) -> bool {
        matches!(
            self,
            Schema::Tighten | Schema::Loosen | Schema::Control | Schema::Guard
        )
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Validation tier: lower tiers are tested first.
pub fn tier_of(schema: Schema, program: &Program) -> u8 {
    match schema {
        Schema::Tighten | Schema::Loosen => 1,
        Schema::Control => 2,
        Schema::Guard => 3,
        _ if program.has_abstract_print() => 4,
        Schema::Init => 5,
        Schema::Rep => 6,
        Schema::CpRep => 7,
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PatchTemplate {
    pub program: Program,
    pub schema: Schema,
    pub target: Label,
    pub tier: u8,
    pub provenance: String,
}

impl PatchTemplate {
    fn new(program: Program, schema: Schema, target: &Label, provenance: String) -> Self {
        PatchTemplate {
            tier: tier_of(schema, &program),
            program,
            schema,
            target: target.clone(),
            provenance,
        }
    }
}

/// Search-space configuration.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct SpaceConfig {
    /// Number of localized statements admitted as targets.
    pub loc_limit: usize,
    /// Richer condition space: `<`, `>` and variable-variable comparisons.
    pub ext_cond: bool,
    /// Operator-expression value replacements.
    pub ext_rep: bool,
    /// Conditional jumps to every existing label in addition to `stop`.
    pub goto_control: bool,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            loc_limit: 200,
            ext_cond: false,
            ext_rep: false,
            goto_control: false,
        }
    }
}

impl SpaceConfig {
    pub fn extension_name(&self) -> &'static str {
        match (self.ext_rep, self.ext_cond) {
            (false, false) => "No",
            (false, true) => "CExt",
            (true, false) => "RExt",
            (true, true) => "RExt+CExt",
        }
    }
}

/// Operators available to operator-expression replacements.
pub const EXT_REP_OPS: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Eq, BinOp::Ne];

type Parts = (BTreeMap<Label, Stmt>, BTreeMap<Label, Label>, Label);

fn build(parts: Parts) -> Program {
    let (stmts, next, entry) = parts;
    Program::new(stmts, next, entry).expect("schema output is well-formed")
}

/// Moves the statement at `l` (and its successor) to the fresh label `to`.
fn relocate(prog: &Program, l: &Label, to: &Label) -> Parts {
    let (mut stmts, mut next, entry) = prog.to_parts();
    let stmt = stmts[l].clone();
    stmts.insert(to.clone(), stmt);
    if let Some(n) = next.remove(l) {
        next.insert(to.clone(), n);
    }
    (stmts, next, entry)
}

/// Puts `stmt` at `l` and moves the original statement to a fresh label that
/// `stmt` falls through to.
fn insert_before(prog: &Program, l: &Label, stmt: Stmt) -> Program {
    let fresh = prog.fresh_labels(1).remove(0);
    let (mut stmts, mut next, entry) = relocate(prog, l, &fresh);
    stmts.insert(l.clone(), stmt);
    next.insert(l.clone(), fresh);
    build((stmts, next, entry))
}

fn abst_if(prog: &Program, l: &Label, shape: AbstShape) -> Option<Program> {
    match prog.stmt(l)? {
        Stmt::If {
            cond,
            then_to,
            else_to,
        } => {
            let (mut stmts, next, entry) = prog.to_parts();
            stmts.insert(
                l.clone(),
                Stmt::AbstIf {
                    cond: cond.clone(),
                    shape,
                    then_to: then_to.clone(),
                    else_to: else_to.clone(),
                },
            );
            Some(build((stmts, next, entry)))
        }
        _ => None,
    }
}

/// `if (c && !abstc) l1 l2` in place of `if (c) l1 l2`.
pub fn m_tighten(prog: &Program, l: &Label) -> Vec<PatchTemplate> {
    abst_if(prog, l, AbstShape::Tighten)
        .map(|p| PatchTemplate::new(p, Schema::Tighten, l, format!("tighten {l}")))
        .into_iter()
        .collect()
}

/// `if (c || abstc) l1 l2` in place of `if (c) l1 l2`.
pub fn m_loosen(prog: &Program, l: &Label) -> Vec<PatchTemplate> {
    abst_if(prog, l, AbstShape::Loosen)
        .map(|p| PatchTemplate::new(p, Schema::Loosen, l, format!("loosen {l}")))
        .into_iter()
        .collect()
}

/// Wraps the statement at `l` in `if (1 && !abstc)`.
pub fn m_guard(prog: &Program, l: &Label) -> Vec<PatchTemplate> {
    let Some(stmt) = prog.stmt(l) else {
        return Vec::new();
    };
    if !stmt.has_successor() {
        return Vec::new();
    }
    let fresh = prog.fresh_labels(1).remove(0);
    let after = prog
        .next(l)
        .expect("fall-through statement has a successor")
        .clone();
    let (mut stmts, next, entry) = relocate(prog, l, &fresh);
    stmts.insert(
        l.clone(),
        Stmt::AbstIf {
            cond: Cond::Lit(true),
            shape: AbstShape::Tighten,
            then_to: fresh,
            else_to: after,
        },
    );
    vec![PatchTemplate::new(
        build((stmts, next, entry)),
        Schema::Guard,
        l,
        format!("guard {l}"),
    )]
}

/// Inserts `if (0 || abstc) <stop> l'` before the statement at `l`, where
/// `l'` holds the relocated original statement. With `goto_control`, also one
/// template per other existing label jumping there instead of stopping.
pub fn m_control(prog: &Program, l: &Label, goto_control: bool) -> Vec<PatchTemplate> {
    if prog.stmt(l).is_none() {
        return Vec::new();
    }
    let fresh = prog.fresh_labels(2);
    let (moved, stop_at) = (&fresh[0], &fresh[1]);
    let jump = |to: &Label, stmts: &mut BTreeMap<Label, Stmt>| {
        stmts.insert(
            l.clone(),
            Stmt::AbstIf {
                cond: Cond::Lit(false),
                shape: AbstShape::Loosen,
                then_to: to.clone(),
                else_to: moved.clone(),
            },
        );
    };
    let mut out = Vec::new();
    let (mut stmts, next, entry) = relocate(prog, l, moved);
    stmts.insert(stop_at.clone(), Stmt::Stop);
    jump(stop_at, &mut stmts);
    out.push(PatchTemplate::new(
        build((stmts, next, entry)),
        Schema::Control,
        l,
        format!("control {l} -> stop"),
    ));
    if goto_control {
        for to in prog.labels().filter(|to| *to != l) {
            let (mut stmts, next, entry) = relocate(prog, l, moved);
            jump(to, &mut stmts);
            out.push(PatchTemplate::new(
                build((stmts, next, entry)),
                Schema::Control,
                l,
                format!("control {l} -> goto {to}"),
            ));
        }
    }
    out
}

/// Inserts `v = 0` before the statement at `l`, once per variable it mentions.
pub fn m_init(prog: &Program, l: &Label) -> Vec<PatchTemplate> {
    let Some(stmt) = prog.stmt(l) else {
        return Vec::new();
    };
    stmt.vars()
        .into_iter()
        .map(|v| {
            let p = insert_before(
                prog,
                l,
                Stmt::Const {
                    dst: v.clone(),
                    value: 0,
                },
            );
            PatchTemplate::new(p, Schema::Init, l, format!("init {v} = 0 before {l}"))
        })
        .collect()
}

/// `RepS(p, s)`: statements obtained by replacing one variable of `s` with
/// another program variable or one constant with another program constant;
/// prints become `print abstval`. Identity replacements are excluded.
pub fn reps(prog: &Program, stmt: &Stmt) -> BTreeSet<Stmt> {
    let vars = prog.vars();
    let consts = prog.consts();
    let mut out = BTreeSet::new();
    let alternatives = |a: &Atom| -> Vec<Atom> {
        match a {
            Atom::Var(_) => vars.iter().cloned().map(Atom::Var).collect(),
            Atom::Int(_) => consts.iter().copied().map(Atom::Int).collect(),
        }
    };
    match stmt {
        Stmt::Assign { dst, lhs, op, rhs } => {
            for v in &vars {
                out.insert(Stmt::Assign {
                    dst: v.clone(),
                    lhs: lhs.clone(),
                    op: *op,
                    rhs: rhs.clone(),
                });
            }
            for a in alternatives(lhs) {
                out.insert(Stmt::Assign {
                    dst: dst.clone(),
                    lhs: a,
                    op: *op,
                    rhs: rhs.clone(),
                });
            }
            for a in alternatives(rhs) {
                out.insert(Stmt::Assign {
                    dst: dst.clone(),
                    lhs: lhs.clone(),
                    op: *op,
                    rhs: a,
                });
            }
        }
        Stmt::Const { dst, value } => {
            for v in &vars {
                out.insert(Stmt::Const {
                    dst: v.clone(),
                    value: *value,
                });
            }
            for k in &consts {
                out.insert(Stmt::Const {
                    dst: dst.clone(),
                    value: *k,
                });
            }
        }
        Stmt::Read { .. } => {
            for v in &vars {
                out.insert(Stmt::Read { dst: v.clone() });
            }
        }
        Stmt::Print(_) => {
            out.insert(Stmt::PrintAbst);
        }
        _ => {}
    }
    out.remove(stmt);
    out
}

/// Labels of the basic block holding `l`: maximal fall-through chain whose
/// interior labels have a single predecessor and are not branch targets.
pub fn basic_block(prog: &Program, l: &Label) -> Vec<Label> {
    let mut preds: BTreeMap<&Label, usize> = BTreeMap::new();
    let mut leaders: BTreeSet<&Label> = BTreeSet::from([prog.entry()]);
    for (from, stmt) in prog.stmts() {
        if let Some((a, b)) = stmt.targets() {
            leaders.insert(a);
            leaders.insert(b);
            *preds.entry(a).or_default() += 1;
            *preds.entry(b).or_default() += 1;
        }
        if let Some(to) = prog.next(from) {
            *preds.entry(to).or_default() += 1;
        }
    }
    let is_leader = |x: &Label| leaders.contains(x) || preds.get(x).copied().unwrap_or(0) != 1;
    let pred_of = |x: &Label| {
        prog.successors()
            .iter()
            .find(|(_, to)| *to == x)
            .map(|(f, _)| f)
    };

    let mut start = l.clone();
    let mut guard = 0;
    while !is_leader(&start) && guard < prog.len() {
        match pred_of(&start) {
            Some(p) => start = p.clone(),
            None => break,
        }
        guard += 1;
    }
    let mut block = vec![start.clone()];
    let mut cur = start;
    while let Some(to) = prog.next(&cur) {
        if is_leader(to) || block.contains(to) {
            break;
        }
        block.push(to.clone());
        cur = to.clone();
    }
    block
}

/// Operator-expression replacements for the statement at `l`, built from the
/// variables and constants of its basic block.
pub fn reps_extended(prog: &Program, l: &Label) -> BTreeSet<Stmt> {
    let Some(stmt) = prog.stmt(l) else {
        return BTreeSet::new();
    };
    let mut vars = BTreeSet::new();
    let mut consts = BTreeSet::new();
    for b in basic_block(prog, l) {
        let s = prog.stmt(&b).expect("block label");
        vars.extend(s.vars());
        s.collect_consts(&mut consts);
    }
    let atoms: Vec<Atom> = vars
        .into_iter()
        .map(Atom::Var)
        .chain(consts.into_iter().map(Atom::Int))
        .collect();
    let mut out = BTreeSet::new();
    let mut push = |dst: &Var, lhs: &Atom, op: BinOp, rhs: &Atom| {
        if lhs.var().is_some() || rhs.var().is_some() {
            out.insert(Stmt::Assign {
                dst: dst.clone(),
                lhs: lhs.clone(),
                op,
                rhs: rhs.clone(),
            });
        }
    };
    match stmt {
        Stmt::Const { dst, .. } => {
            for op in EXT_REP_OPS {
                for a in &atoms {
                    for b in &atoms {
                        push(dst, a, op, b);
                    }
                }
            }
        }
        Stmt::Assign { dst, lhs, op, rhs } => {
            for new_op in EXT_REP_OPS {
                push(dst, lhs, new_op, rhs);
            }
            for a in &atoms {
                push(dst, a, *op, rhs);
                push(dst, lhs, *op, a);
            }
        }
        _ => {}
    }
    out.remove(stmt);
    out
}

/// Replaces the statement at `l` with each member of `RepS(p, p(l))`, plus
/// operator-expression replacements when `ext_rep` is on.
pub fn m_rep(prog: &Program, l: &Label, ext_rep: bool) -> Vec<PatchTemplate> {
    let Some(stmt) = prog.stmt(l) else {
        return Vec::new();
    };
    let mut replacements = reps(prog, stmt);
    if ext_rep {
        replacements.extend(reps_extended(prog, l));
    }
    replacements
        .into_iter()
        .map(|s| {
            let (mut stmts, next, entry) = prog.to_parts();
            let provenance = format!("rep {l}: {s}");
            stmts.insert(l.clone(), s);
            PatchTemplate::new(build((stmts, next, entry)), Schema::Rep, l, provenance)
        })
        .collect()
}

/// Inserts, before `l`, every simple statement of the program verbatim and
/// every `RepS` variant of it.
pub fn m_cprep(prog: &Program, l: &Label) -> Vec<PatchTemplate> {
    if prog.stmt(l).is_none() {
        return Vec::new();
    }
    let mut inserted = BTreeSet::new();
    for (_, s) in prog.simple_statements() {
        inserted.insert(s.clone());
        inserted.extend(reps(prog, s));
    }
    inserted
        .into_iter()
        .map(|s| {
            let provenance = format!("cprep before {l}: {s}");
            PatchTemplate::new(insert_before(prog, l, s), Schema::CpRep, l, provenance)
        })
        .collect()
}

/// All templates for one target, before ordering and deduplication.
pub fn templates_at(prog: &Program, l: &Label, cfg: &SpaceConfig) -> Vec<PatchTemplate> {
    let mut out = Vec::new();
    out.extend(m_tighten(prog, l));
    out.extend(m_loosen(prog, l));
    out.extend(m_control(prog, l, cfg.goto_control));
    out.extend(m_guard(prog, l));
    out.extend(m_init(prog, l));
    out.extend(m_rep(prog, l, cfg.ext_rep));
    out.extend(m_cprep(prog, l));
    out.retain(|t| t.program != *prog);
    out
}

/// `M(<p, n>)` over the target list `tl`, deduplicated by program structure
/// and ordered by (tier, localization rank of the target, canonical text).
pub fn generate_space(prog: &Program, tl: &[Label], cfg: &SpaceConfig) -> Vec<PatchTemplate> {
    let per_target = par::map_range(0..tl.len(), |rank| {
        templates_at(prog, &tl[rank], cfg)
            .into_iter()
            .map(|t| ((t.tier, rank, t.program.to_string()), t))
            .collect::<Vec<_>>()
    });
    let mut keyed: Vec<_> = per_target.into_iter().flatten().collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    let mut seen = HashSet::new();
    keyed
        .into_iter()
        .filter(|(_, t)| seen.insert(t.program.clone()))
        .map(|(_, t)| t)
        .collect()
}

/// Template counts per schema.
pub fn schema_counts(space: &[PatchTemplate]) -> BTreeMap<Schema, usize> {
    let mut counts: BTreeMap<Schema, usize> = Schema::ALL.iter().map(|s| (*s, 0)).collect();
    for t in space {
        *counts.entry(t.schema).or_default() += 1;
    }
    counts
}
