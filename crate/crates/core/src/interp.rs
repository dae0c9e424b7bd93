//! Small-step semantics over `<l, sigma, I, O, D, R, S>` states, including
//! abstract-condition consultation and abstract-value printing.
//!
//! [`MachineState::step`] follows the rules label by label. [`exec`] runs a
//! slot-compiled copy of the program, which is what the repair loop uses; the
//! two are checked against each other in tests.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{AbstShape, Atom, BinOp, CmpOp, Cond, Label, Program, Stmt, Var};

pub const DEFAULT_FUEL: u64 = 1_000_000;

/// `sigma`: assigned variables only; unassigned variables read as 0.
pub type Env = BTreeMap<Var, i64>;

/// One element of an output sequence.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum OutVal {
    Int(i64),
    Abst,
}

impl fmt::Display for OutVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutVal::Int(n) => n.fmt(f),
            OutVal::Abst => f.write_str("abstval"),
        }
    }
}

/// What an abstract condition yields once the planned prefix runs out.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Exhaustion {
    /// 0, the value under which a template behaves like the original.
    #[default]
    Preserve,
    /// 1 forever.
    ForceOne,
}

/// `D`: the future abstract-condition values.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct AbstPlan {
    pub prefix: Vec<bool>,
    pub exhaustion: Exhaustion,
}

impl AbstPlan {
    pub fn preserve() -> Self {
        AbstPlan::default()
    }

    pub fn with_prefix(prefix: Vec<bool>) -> Self {
        AbstPlan {
            prefix,
            exhaustion: Exhaustion::Preserve,
        }
    }

    pub fn force_one() -> Self {
        AbstPlan {
            prefix: Vec::new(),
            exhaustion: Exhaustion::ForceOne,
        }
    }

    fn value_at(&self, i: usize) -> bool {
        match self.prefix.get(i) {
            Some(b) => *b,
            None => self.exhaustion == Exhaustion::ForceOne,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum BottomCause {
    InputExhausted,
    FuelExhausted,
    ArithmeticFault,
}

/// Result of running a program to termination.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ExecOutcome {
    Success {
        output: Vec<OutVal>,
        recorded: Vec<bool>,
        envlog: Vec<Env>,
    },
    /// `recorded` keeps the abstract-condition values consulted before the
    /// fault.
    Bottom {
        cause: BottomCause,
        recorded: Vec<bool>,
    },
}

impl ExecOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, ExecOutcome::Success { .. })
    }

    pub fn output(&self) -> Option<&[OutVal]> {
        match self {
            ExecOutcome::Success { output, .. } => Some(output),
            ExecOutcome::Bottom { .. } => None,
        }
    }

    pub fn recorded(&self) -> &[bool] {
        match self {
            ExecOutcome::Success { recorded, .. } | ExecOutcome::Bottom { recorded, .. } => {
                recorded
            }
        }
    }

    /// True iff the run terminated with exactly `expected` as output.
    pub fn matches(&self, expected: &[i64]) -> bool {
        match self.output() {
            Some(out) => {
                out.len() == expected.len()
                    && out.iter().zip(expected).all(|(o, e)| *o == OutVal::Int(*e))
            }
            None => false,
        }
    }
}

/// A test case `<I, O>`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
pub struct TestCase {
    pub input: Vec<i64>,
    pub output: Vec<i64>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct TestCaseError {
    pub line: usize,
    pub msg: String,
}

impl TestCase {
    pub fn new(input: Vec<i64>, output: Vec<i64>) -> Self {
        TestCase { input, output }
    }

    /// Parses the two-line `in: ...` / `out: ...` format.
    pub fn parse(text: &str) -> Result<TestCase, TestCaseError> {
        let mut input = None;
        let mut output = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| TestCaseError { line: i + 1, msg };
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected `in:` or `out:`".into()))?;
            let values = rest
                .split_whitespace()
                .map(|w| {
                    w.parse::<i64>()
                        .map_err(|_| err(format!("bad integer `{w}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let slot = match key.trim() {
                "in" => &mut input,
                "out" => &mut output,
                other => return Err(err(format!("unknown key `{other}`"))),
            };
            if slot.replace(values).is_some() {
                return Err(err(format!("duplicate `{}` line", key.trim())));
            }
        }
        match (input, output) {
            (Some(input), Some(output)) => Ok(TestCase { input, output }),
            _ => Err(TestCaseError {
                line: 0,
                msg: "test case needs both `in:` and `out:`".into(),
            }),
        }
    }

    pub fn render(&self) -> String {
        let join = |v: &[i64]| v.iter().map(|n| format!(" {n}")).collect::<String>();
        format!("in:{}\nout:{}\n", join(&self.input), join(&self.output))
    }
}

/// Full machine state, the label-level reference semantics.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MachineState {
    /// `None` once `stop` has executed.
    pub pc: Option<Label>,
    pub env: Env,
    pub input: VecDeque<i64>,
    pub output: Vec<OutVal>,
    pub plan: AbstPlan,
    /// How many plan values have been consumed.
    pub consumed: usize,
    pub recorded: Vec<bool>,
    pub envlog: Vec<Env>,
}

fn read_var(env: &Env, v: &Var) -> i64 {
    env.get(v).copied().unwrap_or(0)
}

fn atom_value(env: &Env, a: &Atom) -> i64 {
    match a {
        Atom::Var(v) => read_var(env, v),
        Atom::Int(n) => *n,
    }
}

/// `sigma |- c => x` with left-to-right short-circuit evaluation.
pub fn eval_cond(env: &Env, cond: &Cond) -> bool {
    match cond {
        Cond::Lit(b) => *b,
        Cond::And(a, b) => eval_cond(env, a) && eval_cond(env, b),
        Cond::Or(a, b) => eval_cond(env, a) || eval_cond(env, b),
        Cond::Not(c) => !eval_cond(env, c),
        Cond::Cmp { lhs, op, rhs } => op.holds(read_var(env, lhs), atom_value(env, rhs)),
    }
}

impl MachineState {
    pub fn initial(prog: &Program, input: &[i64], plan: AbstPlan) -> Self {
        MachineState {
            pc: Some(prog.entry().clone()),
            env: Env::new(),
            input: input.iter().copied().collect(),
            output: Vec::new(),
            plan,
            consumed: 0,
            recorded: Vec::new(),
            envlog: Vec::new(),
        }
    }

    fn consult(&mut self) -> bool {
        let b = self.plan.value_at(self.consumed);
        self.consumed += 1;
        self.recorded.push(b);
        self.envlog.push(self.env.clone());
        b
    }

    /// One transition. Panics if the machine has already terminated.
    pub fn step(&mut self, prog: &Program) -> Result<(), BottomCause> {
        let pc = self.pc.clone().expect("step on a terminated state");
        let stmt = prog.stmt(&pc).expect("pc names a defined label");
        let fall = || prog.next(&pc).cloned();
        let value_mode = prog.has_abstract_print();
        match stmt {
            Stmt::Skip => self.pc = fall(),
            Stmt::Stop => self.pc = None,
            Stmt::Assign { dst, lhs, op, rhs } => {
                let v = op
                    .apply(atom_value(&self.env, lhs), atom_value(&self.env, rhs))
                    .ok_or(BottomCause::ArithmeticFault)?;
                self.env.insert(dst.clone(), v);
                self.pc = fall();
            }
            Stmt::Const { dst, value } => {
                self.env.insert(dst.clone(), *value);
                self.pc = fall();
            }
            Stmt::Read { dst } => {
                let v = self.input.pop_front().ok_or(BottomCause::InputExhausted)?;
                self.env.insert(dst.clone(), v);
                self.pc = fall();
            }
            Stmt::Print(a) => {
                self.output.push(OutVal::Int(atom_value(&self.env, a)));
                if value_mode {
                    self.envlog.push(self.env.clone());
                }
                self.pc = fall();
            }
            Stmt::PrintAbst => {
                self.output.push(OutVal::Abst);
                self.envlog.push(self.env.clone());
                self.pc = fall();
            }
            Stmt::If {
                cond,
                then_to,
                else_to,
            } => {
                let taken = if eval_cond(&self.env, cond) {
                    then_to
                } else {
                    else_to
                };
                self.pc = Some(taken.clone());
            }
            Stmt::AbstIf {
                cond,
                shape,
                then_to,
                else_to,
            } => {
                let c = eval_cond(&self.env, cond);
                let result = match (shape, c) {
                    (AbstShape::Tighten, false) => false,
                    (AbstShape::Loosen, true) => true,
                    (AbstShape::Tighten, true) => !self.consult(),
                    (AbstShape::Loosen, false) => self.consult(),
                };
                let taken = if result { then_to } else { else_to };
                self.pc = Some(taken.clone());
            }
        }
        Ok(())
    }
}

/// Reference `Exec` built on [`MachineState::step`].
pub fn exec_reference(prog: &Program, input: &[i64], plan: AbstPlan, fuel: u64) -> ExecOutcome {
    let mut state = MachineState::initial(prog, input, plan);
    let mut steps = 0u64;
    while state.pc.is_some() {
        if steps >= fuel {
            return ExecOutcome::Bottom {
                cause: BottomCause::FuelExhausted,
                recorded: state.recorded,
            };
        }
        if let Err(cause) = state.step(prog) {
            return ExecOutcome::Bottom {
                cause,
                recorded: state.recorded,
            };
        }
        steps += 1;
    }
    ExecOutcome::Success {
        output: state.output,
        recorded: state.recorded,
        envlog: state.envlog,
    }
}

#[derive(Clone, Copy, Debug)]
enum Operand {
    Slot(usize),
    Int(i64),
}

#[derive(Clone, Debug)]
enum CCond {
    Lit(bool),
    And(Box<CCond>, Box<CCond>),
    Or(Box<CCond>, Box<CCond>),
    Not(Box<CCond>),
    Cmp(usize, CmpOp, Operand),
}

#[derive(Clone, Debug)]
enum Op {
    Skip(usize),
    Stop,
    Assign(usize, Operand, BinOp, Operand, usize),
    Const(usize, i64, usize),
    Read(usize, usize),
    Print(Operand, usize),
    PrintAbst(usize),
    If(CCond, usize, usize),
    AbstIf(CCond, AbstShape, usize, usize),
}

/// A program lowered to indexed statements and variable slots.
#[derive(Clone, Debug)]
pub struct Executable {
    code: Vec<Op>,
    labels: Vec<Label>,
    entry: usize,
    vars: Vec<Var>,
    value_mode: bool,
}

struct Lowering {
    index: HashMap<Label, usize>,
    slots: HashMap<Var, usize>,
    vars: Vec<Var>,
}

impl Lowering {
    fn slot(&mut self, v: &Var) -> usize {
        if let Some(s) = self.slots.get(v) {
            return *s;
        }
        let s = self.vars.len();
        self.vars.push(v.clone());
        self.slots.insert(v.clone(), s);
        s
    }

    fn operand(&mut self, a: &Atom) -> Operand {
        match a {
            Atom::Var(v) => Operand::Slot(self.slot(v)),
            Atom::Int(n) => Operand::Int(*n),
        }
    }

    fn cond(&mut self, c: &Cond) -> CCond {
        match c {
            Cond::Lit(b) => CCond::Lit(*b),
            Cond::And(a, b) => CCond::And(Box::new(self.cond(a)), Box::new(self.cond(b))),
            Cond::Or(a, b) => CCond::Or(Box::new(self.cond(a)), Box::new(self.cond(b))),
            Cond::Not(a) => CCond::Not(Box::new(self.cond(a))),
            Cond::Cmp { lhs, op, rhs } => {
                let s = self.slot(lhs);
                CCond::Cmp(s, *op, self.operand(rhs))
            }
        }
    }
}

#[derive(Default)]
struct Slots(Vec<Option<i64>>);

impl Slots {
    fn get(&self, s: usize) -> i64 {
        self.0[s].unwrap_or(0)
    }

    fn operand(&self, o: Operand) -> i64 {
        match o {
            Operand::Slot(s) => self.get(s),
            Operand::Int(n) => n,
        }
    }

    fn eval(&self, c: &CCond) -> bool {
        match c {
            CCond::Lit(b) => *b,
            CCond::And(a, b) => self.eval(a) && self.eval(b),
            CCond::Or(a, b) => self.eval(a) || self.eval(b),
            CCond::Not(a) => !self.eval(a),
            CCond::Cmp(s, op, rhs) => op.holds(self.get(*s), self.operand(*rhs)),
        }
    }

    fn snapshot(&self, vars: &[Var]) -> Env {
        self.0
            .iter()
            .zip(vars)
            .filter_map(|(v, name)| v.map(|v| (name.clone(), v)))
            .collect()
    }
}

impl Executable {
    pub fn new(prog: &Program) -> Self {
        let labels: Vec<Label> = prog.labels().cloned().collect();
        let mut lw = Lowering {
            index: labels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), i))
                .collect(),
            slots: HashMap::new(),
            vars: Vec::new(),
        };
        let mut code = Vec::with_capacity(labels.len());
        for label in &labels {
            let next = prog.next(label).map(|n| lw.index[n]).unwrap_or(usize::MAX);
            let op = match prog.stmt(label).expect("label from program") {
                Stmt::Skip => Op::Skip(next),
                Stmt::Stop => Op::Stop,
                Stmt::Assign { dst, lhs, op, rhs } => {
                    let d = lw.slot(dst);
                    let l = lw.operand(lhs);
                    let r = lw.operand(rhs);
                    Op::Assign(d, l, *op, r, next)
                }
                Stmt::Const { dst, value } => Op::Const(lw.slot(dst), *value, next),
                Stmt::Read { dst } => Op::Read(lw.slot(dst), next),
                Stmt::Print(a) => Op::Print(lw.operand(a), next),
                Stmt::PrintAbst => Op::PrintAbst(next),
                Stmt::If {
                    cond,
                    then_to,
                    else_to,
                } => Op::If(lw.cond(cond), lw.index[then_to], lw.index[else_to]),
                Stmt::AbstIf {
                    cond,
                    shape,
                    then_to,
                    else_to,
                } => Op::AbstIf(lw.cond(cond), *shape, lw.index[then_to], lw.index[else_to]),
            };
            code.push(op);
        }
        Executable {
            entry: lw.index[prog.entry()],
            code,
            labels,
            vars: lw.vars,
            value_mode: prog.has_abstract_print(),
        }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn run(&self, input: &[i64], plan: &AbstPlan, fuel: u64) -> ExecOutcome {
        self.run_hooked(input, plan, fuel, |_| {})
    }

    /// Runs with `hook(i)` called before executing the statement at
    /// `self.labels()[i]`.
    pub fn run_hooked(
        &self,
        input: &[i64],
        plan: &AbstPlan,
        fuel: u64,
        mut hook: impl FnMut(usize),
    ) -> ExecOutcome {
        let mut env = Slots(vec![None; self.vars.len()]);
        let mut input = input.iter();
        let mut output = Vec::new();
        let mut recorded = Vec::new();
        let mut envlog = Vec::new();
        let mut pc = self.entry;
        let mut steps = 0u64;
        let bottom = |cause, recorded| ExecOutcome::Bottom { cause, recorded };
        loop {
            if steps >= fuel {
                return bottom(BottomCause::FuelExhausted, recorded);
            }
            steps += 1;
            hook(pc);
            pc = match &self.code[pc] {
                Op::Stop => break,
                Op::Skip(next) => *next,
                Op::Assign(d, l, op, r, next) => {
                    match op.apply(env.operand(*l), env.operand(*r)) {
                        Some(v) => env.0[*d] = Some(v),
                        None => return bottom(BottomCause::ArithmeticFault, recorded),
                    }
                    *next
                }
                Op::Const(d, v, next) => {
                    env.0[*d] = Some(*v);
                    *next
                }
                Op::Read(d, next) => {
                    match input.next() {
                        Some(v) => env.0[*d] = Some(*v),
                        None => return bottom(BottomCause::InputExhausted, recorded),
                    }
                    *next
                }
                Op::Print(o, next) => {
                    output.push(OutVal::Int(env.operand(*o)));
                    if self.value_mode {
                        envlog.push(env.snapshot(&self.vars));
                    }
                    *next
                }
                Op::PrintAbst(next) => {
                    output.push(OutVal::Abst);
                    envlog.push(env.snapshot(&self.vars));
                    *next
                }
                Op::If(c, t, e) => {
                    if env.eval(c) {
                        *t
                    } else {
                        *e
                    }
                }
                Op::AbstIf(c, shape, t, e) => {
                    let concrete = env.eval(c);
                    let result = match (shape, concrete) {
                        (AbstShape::Tighten, false) => false,
                        (AbstShape::Loosen, true) => true,
                        (shape, _) => {
                            let b = plan.value_at(recorded.len());
                            recorded.push(b);
                            envlog.push(env.snapshot(&self.vars));
                            match shape {
                                AbstShape::Tighten => !b,
                                AbstShape::Loosen => b,
                            }
                        }
                    };
                    if result {
                        *t
                    } else {
                        *e
                    }
                }
            };
        }
        ExecOutcome::Success {
            output,
            recorded,
            envlog,
        }
    }

    pub fn passes(&self, case: &TestCase, fuel: u64) -> bool {
        self.run(&case.input, &AbstPlan::preserve(), fuel)
            .matches(&case.output)
    }
}

/// `Exec(<p, n>, I, D)` with a step budget.
pub fn exec(prog: &Program, input: &[i64], plan: &AbstPlan, fuel: u64) -> ExecOutcome {
    Executable::new(prog).run(input, plan, fuel)
}

/// `Test(<p, n>, NegT, PosT)`: every case must terminate with exactly the
/// expected output. Negative cases run first; a faulting run fails.
pub fn test_all(prog: &Program, neg: &[TestCase], pos: &[TestCase], fuel: u64) -> bool {
    let exe = Executable::new(prog);
    neg.iter().chain(pos).all(|case| exe.passes(case, fuel))
}

/// Test-suite validator that moves positive cases which rejected a candidate
/// to the front of the positive order for later candidates.
#[derive(Debug)]
pub struct Validator<'a> {
    neg: &'a [TestCase],
    pos: &'a [TestCase],
    fuel: u64,
    order: Mutex<Vec<usize>>,
}

impl<'a> Validator<'a> {
    pub fn new(neg: &'a [TestCase], pos: &'a [TestCase], fuel: u64) -> Self {
        Validator {
            neg,
            pos,
            fuel,
            order: Mutex::new((0..pos.len()).collect()),
        }
    }

    pub fn neg(&self) -> &'a [TestCase] {
        self.neg
    }

    pub fn pos(&self) -> &'a [TestCase] {
        self.pos
    }

    pub fn fuel(&self) -> u64 {
        self.fuel
    }

    pub fn check(&self, prog: &Program) -> bool {
        let exe = Executable::new(prog);
        if !self.neg.iter().all(|c| exe.passes(c, self.fuel)) {
            return false;
        }
        let order = self.order.lock().expect("validator order").clone();
        for (rank, &i) in order.iter().enumerate() {
            if !exe.passes(&self.pos[i], self.fuel) {
                if rank > 0 {
                    let mut shared = self.order.lock().expect("validator order");
                    if let Some(at) = shared.iter().position(|&j| j == i) {
                        let killer = shared.remove(at);
                        shared.insert(0, killer);
                    }
                }
                return false;
            }
        }
        true
    }
}
