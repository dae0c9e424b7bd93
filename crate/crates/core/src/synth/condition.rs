//! Target condition value search and condition generation.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::interp::{eval_cond, AbstPlan, Env, ExecOutcome, Executable, TestCase};
use crate::lang::{Atom, CmpOp, Cond, Program, Var};

/// `Flip(R)`: drop trailing ones, then turn the last zero into a one.
/// An all-ones (or empty) sequence flips to the empty sequence.
pub fn flip(r: &[bool]) -> Vec<bool> {
    match r.iter().rposition(|b| !*b) {
        Some(i) => {
            let mut out = r[..i].to_vec();
            out.push(true);
            out
        }
        None => Vec::new(),
    }
}

/// `F(R, S, c)`: how many recorded branch directions `c` reproduces.
///
/// # Panics
/// If `r` and `s` differ in length.
pub fn score_condition(r: &[bool], s: &[Env], c: &Cond) -> usize {
    assert_eq!(
        r.len(),
        s.len(),
        "recorded values and environments must align"
    );
    r.iter()
        .zip(s)
        .filter(|(bit, env)| eval_cond(env, c) == **bit)
        .count()
}

/// Aggregated `(R', S')` evidence for condition generation.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Evidence {
    pub recorded: Vec<bool>,
    pub envs: Vec<Env>,
}

impl Evidence {
    fn extend(&mut self, outcome: ExecOutcome) {
        if let ExecOutcome::Success {
            recorded, envlog, ..
        } = outcome
        {
            self.recorded.extend(recorded);
            self.envs.extend(envlog);
        }
    }
}

/// Stage 1 for condition templates: for each negative case, search for an
/// abstract-condition value sequence that makes the case pass. `max_trials`
/// counts executions per case: the initial run, then flips of the previous
/// recorded sequence, with the last trial forcing every value to one.
/// Returns `None` as soon as one case runs out of trials.
pub fn condition_value_search(
    template: &Program,
    neg: &[TestCase],
    max_trials: usize,
    fuel: u64,
) -> Option<Evidence> {
    let exe = Executable::new(template);
    let mut evidence = Evidence::default();
    for case in neg {
        let mut outcome = exe.run(&case.input, &AbstPlan::preserve(), fuel);
        let mut trial = 1;
        while !outcome.matches(&case.output) && trial < max_trials {
            let plan = if trial + 1 == max_trials {
                AbstPlan::force_one()
            } else {
                AbstPlan::with_prefix(flip(outcome.recorded()))
            };
            outcome = exe.run(&case.input, &plan, fuel);
            trial += 1;
        }
        if !outcome.matches(&case.output) {
            return None;
        }
        evidence.extend(outcome);
    }
    Some(evidence)
}

/// Appends the positive-case evidence: each case runs with every abstract
/// condition at its semantics-preserving value.
pub fn positive_evidence(template: &Program, pos: &[TestCase], fuel: u64, into: &mut Evidence) {
    let exe = Executable::new(template);
    for case in pos {
        into.extend(exe.run(&case.input, &AbstPlan::preserve(), fuel));
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ConditionCandidate {
    #[serde(serialize_with = "display")]
    pub cond: Cond,
    pub score: usize,
}

fn display<S: serde::Serializer>(c: &Cond, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(c)
}

/// The condition space over the observed environments: `(v == k)` and
/// `!(v == k)` for every observed binding `v = k`. With `ext_cond`, also
/// `<` and `>` against observed values and comparisons between pairs of
/// observed variables, each with its negation.
pub fn condition_space(envs: &[Env], ext_cond: bool) -> BTreeSet<Cond> {
    let mut pairs: BTreeSet<(&Var, i64)> = BTreeSet::new();
    for env in envs {
        pairs.extend(env.iter().map(|(v, k)| (v, *k)));
    }
    let cmp = |lhs: &Var, op, rhs: Atom| Cond::Cmp {
        lhs: lhs.clone(),
        op,
        rhs,
    };
    let mut base = Vec::new();
    for &(v, k) in &pairs {
        base.push(cmp(v, CmpOp::Eq, Atom::Int(k)));
        if ext_cond {
            base.push(cmp(v, CmpOp::Lt, Atom::Int(k)));
            base.push(cmp(v, CmpOp::Gt, Atom::Int(k)));
        }
    }
    if ext_cond {
        let vars: BTreeSet<&Var> = pairs.iter().map(|(v, _)| *v).collect();
        for a in &vars {
            for b in
                vars.range::<&Var, _>((std::ops::Bound::Excluded(a), std::ops::Bound::Unbounded))
            {
                for op in [CmpOp::Eq, CmpOp::Lt, CmpOp::Gt] {
                    base.push(cmp(a, op, Atom::Var((*b).clone())));
                }
            }
        }
    }
    base.into_iter()
        .flat_map(|c| [Cond::not(c.clone()), c])
        .collect()
}

fn core_and_polarity(c: &Cond) -> (&Cond, bool) {
    match c {
        Cond::Not(inner) => (inner, true),
        _ => (c, false),
    }
}

/// Candidate order: higher score first; ties by the text of the underlying
/// comparison, with the plain comparison ahead of its negation.
pub fn candidate_order(a: &ConditionCandidate, b: &ConditionCandidate) -> Ordering {
    let (ca, na) = core_and_polarity(&a.cond);
    let (cb, nb) = core_and_polarity(&b.cond);
    b.score
        .cmp(&a.score)
        .then_with(|| ca.to_string().cmp(&cb.to_string()))
        .then_with(|| na.cmp(&nb))
}

/// Scores every condition in the space against the evidence, best first.
pub fn ranked_conditions(evidence: &Evidence, ext_cond: bool) -> Vec<ConditionCandidate> {
    let mut ranked: Vec<ConditionCandidate> = condition_space(&evidence.envs, ext_cond)
        .into_iter()
        .map(|cond| ConditionCandidate {
            score: score_condition(&evidence.recorded, &evidence.envs, &cond),
            cond,
        })
        .collect();
    ranked.sort_by(candidate_order);
    ranked
}
