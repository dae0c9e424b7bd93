//! Abstract-value narrowing for `print abstval` templates.

use std::collections::BTreeSet;

use crate::interp::{AbstPlan, Env, ExecOutcome, Executable, OutVal, TestCase};
use crate::lang::{Atom, Program};

/// Candidate replacements for `abstval`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ValueCandidateSet {
    /// Every variable and every integer.
    Universal,
    Explicit(BTreeSet<Atom>),
}

impl ValueCandidateSet {
    fn contains(&self, a: &Atom) -> bool {
        match self {
            ValueCandidateSet::Universal => true,
            ValueCandidateSet::Explicit(set) => set.contains(a),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ValueCandidateSet::Explicit(s) if s.is_empty())
    }
}

fn empty() -> ValueCandidateSet {
    ValueCandidateSet::Explicit(BTreeSet::new())
}

/// `V(O', O, S, C)`. `actual` and `s` are aligned element by element.
/// Environments are partial: only assigned variables can match.
pub fn narrow_values(
    actual: &[OutVal],
    expected: &[i64],
    s: &[Env],
    c: &ValueCandidateSet,
) -> ValueCandidateSet {
    match (actual.split_first(), expected.split_first()) {
        (None, None) => c.clone(),
        (None, Some(_)) | (Some(_), None) => empty(),
        (Some((x, rest)), Some((y, expected_rest))) => match x {
            OutVal::Int(n) if n != y => empty(),
            OutVal::Int(_) => narrow_values(rest, expected_rest, s.get(1..).unwrap_or(&[]), c),
            OutVal::Abst => {
                let sigma = s.first().expect("one environment per output element");
                let tail = narrow_values(rest, expected_rest, &s[1..], c);
                let mut out: BTreeSet<Atom> = sigma
                    .iter()
                    .filter(|(_, value)| *value == y)
                    .map(|(v, _)| Atom::Var(v.clone()))
                    .filter(|a| tail.contains(a))
                    .collect();
                if tail.contains(&Atom::Int(*y)) {
                    out.insert(Atom::Int(*y));
                }
                ValueCandidateSet::Explicit(out)
            }
        },
    }
}

/// Stage 1 for value templates: folds `V` over the negative cases. A run
/// that does not terminate yields the empty set.
pub fn value_candidates(template: &Program, neg: &[TestCase], fuel: u64) -> ValueCandidateSet {
    let exe = Executable::new(template);
    let mut c = ValueCandidateSet::Universal;
    for case in neg {
        match exe.run(&case.input, &AbstPlan::preserve(), fuel) {
            ExecOutcome::Success { output, envlog, .. } => {
                c = narrow_values(&output, &case.output, &envlog, &c);
            }
            ExecOutcome::Bottom { .. } => return empty(),
        }
        if c.is_empty() {
            break;
        }
    }
    c
}

/// The values stage 2 tries, variables first. A set never narrowed falls
/// back to the template's own variables and constants.
pub fn materialize(template: &Program, c: &ValueCandidateSet) -> Vec<Atom> {
    match c {
        ValueCandidateSet::Explicit(set) => set.iter().cloned().collect(),
        ValueCandidateSet::Universal => template
            .vars()
            .into_iter()
            .map(Atom::Var)
            .chain(template.consts().into_iter().map(Atom::Int))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::DEFAULT_FUEL;
    use crate::lang::{parse_template, Var};

    fn env(pairs: &[(&str, i64)]) -> Env {
        pairs.iter().map(|(k, v)| (Var::new(*k), *v)).collect()
    }

    fn set(atoms: &[Atom]) -> ValueCandidateSet {
        ValueCandidateSet::Explicit(atoms.iter().cloned().collect())
    }

    fn x() -> Atom {
        Atom::Var(Var::new("x"))
    }

    #[test]
    fn empty_sequences_keep_the_set() {
        let c = set(&[x()]);
        assert_eq!(narrow_values(&[], &[], &[], &c), c);
        assert_eq!(
            narrow_values(&[], &[], &[], &ValueCandidateSet::Universal),
            ValueCandidateSet::Universal
        );
    }

    #[test]
    fn abstract_position_narrows() {
        let s = [env(&[("x", 5), ("y", 1)]), env(&[("x", 5), ("y", 1)])];
        let got = narrow_values(
            &[OutVal::Abst, OutVal::Int(2)],
            &[5, 2],
            &s,
            &ValueCandidateSet::Universal,
        );
        assert_eq!(got, set(&[x(), Atom::Int(5)]));
    }

    #[test]
    fn mismatches_empty_the_set() {
        let s = [env(&[])];
        assert!(
            narrow_values(&[OutVal::Int(3)], &[4], &s, &ValueCandidateSet::Universal).is_empty()
        );
        assert!(narrow_values(&[], &[4], &[], &ValueCandidateSet::Universal).is_empty());
        assert!(narrow_values(&[OutVal::Abst], &[], &s, &ValueCandidateSet::Universal).is_empty());
    }

    #[test]
    fn narrowing_only_shrinks() {
        let s = [env(&[("x", 5)])];
        let c = set(&[Atom::Int(5)]);
        assert_eq!(narrow_values(&[OutVal::Abst], &[5], &s, &c), c);
        let c = set(&[Atom::Int(6)]);
        assert!(narrow_values(&[OutVal::Abst], &[5], &s, &c).is_empty());
    }

    #[test]
    fn candidates_across_cases() {
        let t = parse_template("L0: x = read\nL1: print abstval\nL2: stop").unwrap();
        let neg = [TestCase::new(vec![5], vec![5])];
        assert_eq!(
            value_candidates(&t, &neg, DEFAULT_FUEL),
            set(&[x(), Atom::Int(5)])
        );
        let neg = [
            TestCase::new(vec![5], vec![5]),
            TestCase::new(vec![6], vec![6]),
        ];
        assert_eq!(value_candidates(&t, &neg, DEFAULT_FUEL), set(&[x()]));
        let neg = [
            TestCase::new(vec![1], vec![5]),
            TestCase::new(vec![1], vec![6]),
        ];
        assert!(value_candidates(&t, &neg, DEFAULT_FUEL).is_empty());
        assert_eq!(
            materialize(&t, &value_candidates(&t, &[], DEFAULT_FUEL)),
            vec![x()]
        );
    }
}
