//! Timestamp-based error localization.
//!
//! Each test runs with a global step counter; a statement's timestamp is the
//! counter value of its last execution (0 if never executed). Statements are
//! ranked by `(a, b, c)` descending, where `a` counts negative cases that
//! execute the statement, `b` counts positive cases that do not, and `c` sums
//! the negative-case timestamps.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::interp::{AbstPlan, Executable, TestCase};
use crate::lang::{Label, Program};
use crate::par;

/// `r(s, i)` for one test case `i`.
pub type TimestampLog = BTreeMap<Label, u64>;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize)]
pub struct LocalizationScore {
    pub a: usize,
    pub b: usize,
    pub c: u64,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct RankedLabel {
    pub label: Label,
    pub score: LocalizationScore,
}

/// Runs `case` and records the last-execution timestamp of every label.
/// A faulting run keeps the timestamps gathered before the fault.
pub fn instrument_run(prog: &Program, case: &TestCase, fuel: u64) -> TimestampLog {
    let exe = Executable::new(prog);
    let mut stamps = vec![0u64; exe.labels().len()];
    let mut clock = 0u64;
    exe.run_hooked(&case.input, &AbstPlan::preserve(), fuel, |i| {
        clock += 1;
        stamps[i] = clock;
    });
    exe.labels().iter().cloned().zip(stamps).collect()
}

/// Scores and ranks every label; ties fall back to ascending label order.
pub fn rank(prog: &Program, neg: &[TestCase], pos: &[TestCase], fuel: u64) -> Vec<RankedLabel> {
    let neg_logs = par::map(neg, |case| instrument_run(prog, case, fuel));
    let pos_logs = par::map(pos, |case| instrument_run(prog, case, fuel));
    let mut ranked: Vec<RankedLabel> = prog
        .labels()
        .map(|label| {
            let mut score = LocalizationScore::default();
            for log in &neg_logs {
                let t = log[label];
                if t != 0 {
                    score.a += 1;
                }
                score.c += t;
            }
            score.b = pos_logs.iter().filter(|log| log[label] == 0).count();
            RankedLabel {
                label: label.clone(),
                score,
            }
        })
        .collect();
    ranked.sort_by(|x, y| {
        let key = |r: &RankedLabel| (r.score.a, r.score.b, r.score.c);
        key(y).cmp(&key(x)).then_with(|| x.label.cmp(&y.label))
    });
    ranked
}

/// The target list `TL`: the first `limit` labels of [`rank`].
pub fn localize(
    prog: &Program,
    neg: &[TestCase],
    pos: &[TestCase],
    limit: usize,
    fuel: u64,
) -> Vec<Label> {
    rank(prog, neg, pos, fuel)
        .into_iter()
        .take(limit)
        .map(|r| r.label)
        .collect()
}
