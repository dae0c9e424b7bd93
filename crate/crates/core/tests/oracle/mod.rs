//! Brute-force reference for repair verdicts on tiny loop-free programs.
//!
//! Rather than building templates and searching abstract values, this
//! enumerates every concrete patch of each schema directly, with conditions
//! drawn from the environments observed at the patched label, and runs each
//! one on the label-level reference interpreter.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spr::interp::{eval_cond, exec_reference, AbstPlan, Env, MachineState, OutVal, TestCase};
use spr::lang::{AbstShape, Atom, BinOp, CmpOp, Cond, Label, Program, Stmt, Var};

const FUEL: u64 = 1_000;

fn l(name: &str) -> Label {
    Label::new(name)
}

fn passes(prog: &Program, case: &TestCase) -> bool {
    match exec_reference(prog, &case.input, AbstPlan::preserve(), FUEL).output() {
        Some(out) => {
            out.len() == case.output.len()
                && out
                    .iter()
                    .zip(&case.output)
                    .all(|(o, e)| *o == OutVal::Int(*e))
        }
        None => false,
    }
}

pub fn passes_all(prog: &Program, cases: &[TestCase]) -> bool {
    cases.iter().all(|c| passes(prog, c))
}

/// Environment when `at` is first reached, if it is.
fn env_at(prog: &Program, input: &[i64], at: &Label) -> Option<Env> {
    let mut state = MachineState::initial(prog, input, AbstPlan::preserve());
    for _ in 0..FUEL {
        let pc = state.pc.clone()?;
        if &pc == at {
            return Some(state.env.clone());
        }
        state.step(prog).ok()?;
    }
    None
}

fn atom_vars(a: &Atom, out: &mut BTreeSet<Var>) {
    if let Atom::Var(v) = a {
        out.insert(v.clone());
    }
}

fn atom_consts(a: &Atom, out: &mut BTreeSet<i64>) {
    if let Atom::Int(k) = a {
        out.insert(*k);
    }
}

fn cond_walk(c: &Cond, vars: &mut BTreeSet<Var>, consts: &mut BTreeSet<i64>) {
    match c {
        Cond::Lit(_) => {}
        Cond::And(a, b) | Cond::Or(a, b) => {
            cond_walk(a, vars, consts);
            cond_walk(b, vars, consts);
        }
        Cond::Not(a) => cond_walk(a, vars, consts),
        Cond::Cmp { lhs, rhs, .. } => {
            vars.insert(lhs.clone());
            atom_vars(rhs, vars);
            atom_consts(rhs, consts);
        }
    }
}

fn stmt_walk(s: &Stmt, vars: &mut BTreeSet<Var>, consts: &mut BTreeSet<i64>) {
    match s {
        Stmt::Assign { dst, lhs, rhs, .. } => {
            vars.insert(dst.clone());
            for a in [lhs, rhs] {
                atom_vars(a, vars);
                atom_consts(a, consts);
            }
        }
        Stmt::Const { dst, value } => {
            vars.insert(dst.clone());
            consts.insert(*value);
        }
        Stmt::Read { dst } => {
            vars.insert(dst.clone());
        }
        Stmt::Print(a) => {
            atom_vars(a, vars);
            atom_consts(a, consts);
        }
        Stmt::If { cond, .. } | Stmt::AbstIf { cond, .. } => cond_walk(cond, vars, consts),
        _ => {}
    }
}

fn stmt_vars(s: &Stmt) -> BTreeSet<Var> {
    let mut vars = BTreeSet::new();
    stmt_walk(s, &mut vars, &mut BTreeSet::new());
    vars
}

fn program_vars_consts(p: &Program) -> (BTreeSet<Var>, BTreeSet<i64>) {
    let mut vars = BTreeSet::new();
    let mut consts = BTreeSet::new();
    for s in p.stmts().values() {
        stmt_walk(s, &mut vars, &mut consts);
    }
    (vars, consts)
}

/// Replacement statements for one simple statement, identity excluded;
/// `None` stands for a print whose argument is left open.
fn replacements(p: &Program, s: &Stmt) -> Vec<Option<Stmt>> {
    let (vars, consts) = program_vars_consts(p);
    let mut out: Vec<Option<Stmt>> = Vec::new();
    let swap = |a: &Atom| -> Vec<Atom> {
        match a {
            Atom::Var(_) => vars.iter().map(|v| Atom::Var(v.clone())).collect(),
            Atom::Int(_) => consts.iter().map(|k| Atom::Int(*k)).collect(),
        }
    };
    match s {
        Stmt::Assign { dst, lhs, op, rhs } => {
            for v in &vars {
                out.push(Some(Stmt::Assign {
                    dst: v.clone(),
                    lhs: lhs.clone(),
                    op: *op,
                    rhs: rhs.clone(),
                }));
            }
            for a in swap(lhs) {
                out.push(Some(Stmt::Assign {
                    dst: dst.clone(),
                    lhs: a,
                    op: *op,
                    rhs: rhs.clone(),
                }));
            }
            for a in swap(rhs) {
                out.push(Some(Stmt::Assign {
                    dst: dst.clone(),
                    lhs: lhs.clone(),
                    op: *op,
                    rhs: a,
                }));
            }
        }
        Stmt::Const { dst, value } => {
            for v in &vars {
                out.push(Some(Stmt::Const {
                    dst: v.clone(),
                    value: *value,
                }));
            }
            for k in &consts {
                out.push(Some(Stmt::Const {
                    dst: dst.clone(),
                    value: *k,
                }));
            }
        }
        Stmt::Read { .. } => {
            for v in &vars {
                out.push(Some(Stmt::Read { dst: v.clone() }));
            }
        }
        Stmt::Print(_) => out.push(None),
        _ => {}
    }
    out.retain(|r| r.as_ref() != Some(s));
    out
}

fn is_simple(s: &Stmt) -> bool {
    matches!(
        s,
        Stmt::Assign { .. } | Stmt::Const { .. } | Stmt::Read { .. } | Stmt::Print(_)
    )
}

fn falls_through(s: &Stmt) -> bool {
    !matches!(s, Stmt::If { .. } | Stmt::AbstIf { .. } | Stmt::Stop)
}

fn rebuild(stmts: BTreeMap<Label, Stmt>, next: BTreeMap<Label, Label>, entry: &Label) -> Program {
    Program::new(stmts, next, entry.clone()).expect("oracle builds well-formed programs")
}

/// Puts `new` at `at`, moving the original statement to `Q1`.
fn insert_before(p: &Program, at: &Label, new: Stmt) -> Program {
    let mut stmts = p.stmts().clone();
    let mut next = p.successors().clone();
    let old = stmts.insert(at.clone(), new).expect("label exists");
    stmts.insert(l("Q1"), old);
    if let Some(n) = next.remove(at) {
        next.insert(l("Q1"), n);
    }
    next.insert(at.clone(), l("Q1"));
    rebuild(stmts, next, p.entry())
}

fn replace(p: &Program, at: &Label, new: Stmt) -> Program {
    let mut stmts = p.stmts().clone();
    stmts.insert(at.clone(), new);
    rebuild(stmts, p.successors().clone(), p.entry())
}

fn eq_conds(envs: &[Env]) -> Vec<Cond> {
    let mut pairs = BTreeSet::new();
    for env in envs {
        for (v, k) in env {
            pairs.insert((v.clone(), *k));
        }
    }
    pairs
        .into_iter()
        .flat_map(|(v, k)| {
            let c = Cond::Cmp {
                lhs: v,
                op: CmpOp::Eq,
                rhs: Atom::Int(k),
            };
            [c.clone(), Cond::Not(Box::new(c))]
        })
        .collect()
}

/// Every concrete patch of the baseline space, targets unrestricted.
pub fn concrete_patches(p: &Program, neg: &[TestCase], pos: &[TestCase]) -> Vec<Program> {
    let runs: Vec<&TestCase> = neg.iter().chain(pos).collect();
    let (vars, consts) = program_vars_consts(p);
    let mut values: BTreeSet<Atom> = vars.iter().map(|v| Atom::Var(v.clone())).collect();
    values.extend(consts.iter().map(|k| Atom::Int(*k)));
    for case in &runs {
        values.extend(case.output.iter().map(|k| Atom::Int(*k)));
    }
    let prints = |make: &dyn Fn(Stmt) -> Program, out: &mut Vec<Program>| {
        for v in &values {
            out.push(make(Stmt::Print(v.clone())));
        }
    };

    let mut out = Vec::new();
    for (at, stmt) in p.stmts() {
        let envs_where = |consults: &dyn Fn(&Env) -> bool| -> Vec<Env> {
            runs.iter()
                .filter_map(|c| env_at(p, &c.input, at))
                .filter(|e| consults(e))
                .collect()
        };
        let next = p.next(at).cloned();

        if let Stmt::If {
            cond,
            then_to,
            else_to,
        } = stmt
        {
            for c in eq_conds(&envs_where(&|e| eval_cond(e, cond))) {
                let tightened = Cond::And(Box::new(cond.clone()), Box::new(Cond::Not(Box::new(c))));
                out.push(replace(
                    p,
                    at,
                    Stmt::If {
                        cond: tightened,
                        then_to: then_to.clone(),
                        else_to: else_to.clone(),
                    },
                ));
            }
            for c in eq_conds(&envs_where(&|e| !eval_cond(e, cond))) {
                let loosened = Cond::Or(Box::new(cond.clone()), Box::new(c));
                out.push(replace(
                    p,
                    at,
                    Stmt::If {
                        cond: loosened,
                        then_to: then_to.clone(),
                        else_to: else_to.clone(),
                    },
                ));
            }
        }

        let always = eq_conds(&envs_where(&|_| true));
        if falls_through(stmt) {
            let after = next.clone().expect("fall-through successor");
            for c in &always {
                let guard = Cond::And(
                    Box::new(Cond::Lit(true)),
                    Box::new(Cond::Not(Box::new(c.clone()))),
                );
                out.push(insert_before(
                    p,
                    at,
                    Stmt::If {
                        cond: guard,
                        then_to: l("Q1"),
                        else_to: after.clone(),
                    },
                ));
            }
        }
        for c in &always {
            let mut stmts = p.stmts().clone();
            let mut succ = p.successors().clone();
            stmts.insert(l("Q1"), stmt.clone());
            stmts.insert(l("Q2"), Stmt::Stop);
            if let Some(n) = succ.remove(at) {
                succ.insert(l("Q1"), n);
            }
            let jump = Cond::Or(Box::new(Cond::Lit(false)), Box::new(c.clone()));
            stmts.insert(
                at.clone(),
                Stmt::If {
                    cond: jump,
                    then_to: l("Q2"),
                    else_to: l("Q1"),
                },
            );
            out.push(rebuild(stmts, succ, p.entry()));
        }

        for v in stmt_vars(stmt) {
            out.push(insert_before(p, at, Stmt::Const { dst: v, value: 0 }));
        }

        for r in replacements(p, stmt) {
            match r {
                Some(s) => out.push(replace(p, at, s)),
                None => prints(&|s| replace(p, at, s), &mut out),
            }
        }

        for s in p.stmts().values().filter(|s| is_simple(s)) {
            out.push(insert_before(p, at, s.clone()));
            for r in replacements(p, s) {
                match r {
                    Some(s2) => out.push(insert_before(p, at, s2)),
                    None => prints(&|s2| insert_before(p, at, s2), &mut out),
                }
            }
        }
    }
    out
}

/// Every template of the baseline space with all labels as targets, built
/// with the same fresh labels the transformer picks (`G1` for a relocated
/// statement, `G2` for an inserted `stop`). Programs are assumed to hold no
/// `G` labels yet.
pub fn templates(p: &Program, goto_control: bool) -> BTreeSet<String> {
    let moved = l("G1");
    let insert = |at: &Label, new: Stmt| -> Program {
        let mut stmts = p.stmts().clone();
        let mut next = p.successors().clone();
        let old = stmts.insert(at.clone(), new).expect("label exists");
        stmts.insert(moved.clone(), old);
        if let Some(n) = next.remove(at) {
            next.insert(moved.clone(), n);
        }
        next.insert(at.clone(), moved.clone());
        rebuild(stmts, next, p.entry())
    };
    let abst = |cond: Cond, shape: AbstShape, then_to: &Label, else_to: &Label| Stmt::AbstIf {
        cond,
        shape,
        then_to: then_to.clone(),
        else_to: else_to.clone(),
    };
    let mut out = BTreeSet::new();
    for (at, stmt) in p.stmts() {
        if let Stmt::If {
            cond,
            then_to,
            else_to,
        } = stmt
        {
            for shape in [AbstShape::Tighten, AbstShape::Loosen] {
                out.insert(replace(p, at, abst(cond.clone(), shape, then_to, else_to)).to_string());
            }
        }
        if falls_through(stmt) {
            let after = p.next(at).expect("fall-through successor");
            out.insert(
                insert(at, abst(Cond::Lit(true), AbstShape::Tighten, &moved, after)).to_string(),
            );
        }
        let mut targets = vec![l("G2")];
        if goto_control {
            targets.extend(p.labels().filter(|t| *t != at).cloned());
        }
        for to in targets {
            let mut stmts = p.stmts().clone();
            let mut next = p.successors().clone();
            stmts.insert(moved.clone(), stmt.clone());
            if to == l("G2") {
                stmts.insert(l("G2"), Stmt::Stop);
            }
            if let Some(n) = next.remove(at) {
                next.insert(moved.clone(), n);
            }
            stmts.insert(
                at.clone(),
                abst(Cond::Lit(false), AbstShape::Loosen, &to, &moved),
            );
            out.insert(rebuild(stmts, next, p.entry()).to_string());
        }
        for v in stmt_vars(stmt) {
            out.insert(insert(at, Stmt::Const { dst: v, value: 0 }).to_string());
        }
        for r in replacements(p, stmt) {
            out.insert(replace(p, at, r.unwrap_or(Stmt::PrintAbst)).to_string());
        }
        for s in p.stmts().values().filter(|s| is_simple(s)) {
            out.insert(insert(at, s.clone()).to_string());
            for r in replacements(p, s) {
                out.insert(insert(at, r.unwrap_or(Stmt::PrintAbst)).to_string());
            }
        }
    }
    out.remove(&p.to_string());
    out
}

/// True iff some concrete patch passes every case.
pub fn brute_force_plausible(p: &Program, neg: &[TestCase], pos: &[TestCase]) -> bool {
    let all: Vec<TestCase> = neg.iter().chain(pos).cloned().collect();
    concrete_patches(p, neg, pos)
        .iter()
        .any(|q| passes_all(q, &all))
}

/// A tiny defect: a mutated program and the split of its tests.
#[derive(Clone, Debug)]
pub struct TinyDefect {
    pub reference: Program,
    pub buggy: Program,
    pub neg: Vec<TestCase>,
    pub pos: Vec<TestCase>,
}

fn pick<T: Clone>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())].clone()
}

fn var_names() -> [Var; 2] {
    [Var::new("x"), Var::new("y")]
}

fn random_atom(rng: &mut ChaCha8Rng) -> Atom {
    if rng.random_bool(0.6) {
        Atom::Var(pick(rng, &var_names()))
    } else {
        Atom::Int(rng.random_range(0..=2))
    }
}

fn random_program(rng: &mut ChaCha8Rng) -> Program {
    let n = rng.random_range(3..=6);
    let labels: Vec<Label> = (0..n).map(|i| Label::new(format!("L{i}"))).collect();
    let mut stmts = BTreeMap::new();
    let mut next = BTreeMap::new();
    for i in 0..n - 1 {
        let stmt = match rng.random_range(0..10) {
            _ if i == 0 => Stmt::Read {
                dst: var_names()[0].clone(),
            },
            0 | 1 => Stmt::Read {
                dst: pick(rng, &var_names()),
            },
            2 => Stmt::Const {
                dst: pick(rng, &var_names()),
                value: rng.random_range(0..=2),
            },
            3 | 4 => Stmt::Assign {
                dst: pick(rng, &var_names()),
                lhs: random_atom(rng),
                op: pick(rng, &[BinOp::Add, BinOp::Sub, BinOp::Mul]),
                rhs: random_atom(rng),
            },
            5..=7 => Stmt::Print(random_atom(rng)),
            _ => Stmt::If {
                cond: Cond::Cmp {
                    lhs: pick(rng, &var_names()),
                    op: CmpOp::Eq,
                    rhs: Atom::Int(rng.random_range(0..=2)),
                },
                then_to: labels[rng.random_range(i + 1..n)].clone(),
                else_to: labels[rng.random_range(i + 1..n)].clone(),
            },
        };
        next.insert(labels[i].clone(), labels[i + 1].clone());
        stmts.insert(labels[i].clone(), stmt);
    }
    stmts.insert(labels[n - 1].clone(), Stmt::Stop);
    rebuild(stmts, next, &labels[0])
}

fn mutate(rng: &mut ChaCha8Rng, p: &Program) -> Option<Program> {
    let targets: Vec<Label> = p
        .stmts()
        .iter()
        .filter(|(_, s)| !matches!(s, Stmt::Stop))
        .map(|(l, _)| l.clone())
        .collect();
    let at = pick(rng, &targets);
    let other_int = |rng: &mut ChaCha8Rng, k: i64| loop {
        let j = rng.random_range(0..=2);
        if j != k {
            return j;
        }
    };
    let other_var = |v: &Var| {
        if v.as_str() == "x" {
            Var::new("y")
        } else {
            Var::new("x")
        }
    };
    let flip_atom = |rng: &mut ChaCha8Rng, a: &Atom| match a {
        Atom::Var(v) => Atom::Var(other_var(v)),
        Atom::Int(k) => Atom::Int(other_int(rng, *k)),
    };
    let new = match p.stmt(&at)?.clone() {
        Stmt::Read { dst } => Stmt::Read {
            dst: other_var(&dst),
        },
        Stmt::Const { dst, value } => {
            if rng.random_bool(0.5) {
                Stmt::Const {
                    dst,
                    value: other_int(rng, value),
                }
            } else {
                Stmt::Const {
                    dst: other_var(&dst),
                    value,
                }
            }
        }
        Stmt::Assign { dst, lhs, op, rhs } => match rng.random_range(0..4) {
            0 => Stmt::Assign {
                dst: other_var(&dst),
                lhs,
                op,
                rhs,
            },
            1 => Stmt::Assign {
                dst,
                lhs: flip_atom(rng, &lhs),
                op,
                rhs,
            },
            2 => Stmt::Assign {
                dst,
                lhs,
                op,
                rhs: flip_atom(rng, &rhs),
            },
            _ => Stmt::Const {
                dst,
                value: rng.random_range(0..=2),
            },
        },
        Stmt::Print(a) => Stmt::Print(flip_atom(rng, &a)),
        Stmt::If {
            cond: Cond::Cmp { lhs, op, rhs },
            then_to,
            else_to,
        } => {
            let cond = if rng.random_bool(0.5) {
                Cond::Cmp {
                    lhs: other_var(&lhs),
                    op,
                    rhs,
                }
            } else {
                Cond::Cmp {
                    lhs,
                    op,
                    rhs: flip_atom(rng, &rhs),
                }
            };
            Stmt::If {
                cond,
                then_to,
                else_to,
            }
        }
        _ => return None,
    };
    let mutated = replace(p, &at, new);
    (mutated != *p).then_some(mutated)
}

/// How many statements a tiny defect mutates.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mutations {
    One,
    /// One, or two with probability one half.
    UpToTwo,
}

/// Draws a random program, mutates it, and splits four random inputs into
/// failing (negative) and passing (positive) cases. Keeps at most two of
/// each. Returns `None` when the mutation is invisible.
pub fn tiny_defect(seed: u64, mutations: Mutations) -> Option<TinyDefect> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = random_program(&mut rng);
    let mut buggy = mutate(&mut rng, &reference)?;
    if mutations == Mutations::UpToTwo && rng.random_bool(0.5) {
        buggy = mutate(&mut rng, &buggy).filter(|b| *b != reference)?;
    }
    let reads = reference
        .stmts()
        .values()
        .chain(buggy.stmts().values())
        .filter(|s| matches!(s, Stmt::Read { .. }))
        .count();
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    let mut seen = BTreeSet::new();
    for _ in 0..4 {
        let input: Vec<i64> = (0..reads).map(|_| rng.random_range(0..=3)).collect();
        if !seen.insert(input.clone()) {
            continue;
        }
        let run = exec_reference(&reference, &input, AbstPlan::preserve(), FUEL);
        let output = run
            .output()?
            .iter()
            .map(|o| match o {
                OutVal::Int(n) => *n,
                OutVal::Abst => unreachable!("concrete program"),
            })
            .collect();
        let case = TestCase::new(input, output);
        if passes(&buggy, &case) {
            if pos.len() < 2 {
                pos.push(case);
            }
        } else if neg.len() < 2 {
            neg.push(case);
        }
    }
    (!neg.is_empty()).then_some(TinyDefect {
        reference,
        buggy,
        neg,
        pos,
    })
}

/// The first `count` usable tiny defects, scanning seeds from `start`.
pub fn tiny_defects(start: u64, count: usize, mutations: Mutations) -> Vec<(u64, TinyDefect)> {
    (start..)
        .filter_map(|s| tiny_defect(s, mutations).map(|d| (s, d)))
        .take(count)
        .collect()
}
