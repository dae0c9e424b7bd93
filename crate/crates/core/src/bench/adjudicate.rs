//! Executable correctness verdicts: held-out tests plus differential fuzzing
//! against the reference program.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bench::Defect;
use crate::interp::{test_all, AbstPlan, BottomCause, ExecOutcome, Executable, OutVal};
use crate::lang::Program;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct FuzzConfig {
    pub cases: usize,
    pub seed: u64,
    /// Step budget for fuzz runs; lower than the validation budget because
    /// fuzz inputs can drive patched loops much longer.
    pub fuel: u64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            cases: 200,
            seed: 0,
            fuel: 100_000,
        }
    }
}

/// Deterministic inputs built from the program's constants (and their
/// neighbours), values seen in the suite, and small integers.
pub fn fuzz_inputs(defect: &Defect, cfg: &FuzzConfig) -> Vec<Vec<i64>> {
    let mut pool: BTreeSet<i64> = (-20..=20).collect();
    let mut consts = defect.buggy.consts();
    if let Some(r) = &defect.reference {
        consts.extend(r.consts());
    }
    for k in consts {
        pool.extend([k.saturating_sub(1), k, k.saturating_add(1)]);
    }
    let mut max_len = 0;
    for case in defect.all_tests() {
        pool.extend(&case.input);
        max_len = max_len.max(case.input.len());
    }
    let pool: Vec<i64> = pool.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.cases)
        .map(|_| {
            let len = if max_len == 0 {
                0
            } else {
                rng.random_range(max_len.saturating_sub(1)..=max_len + 1)
            };
            (0..len)
                .map(|_| *pool.choose(&mut rng).expect("non-empty pool"))
                .collect()
        })
        .collect()
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Observed {
    Output(Vec<OutVal>),
    Bottom(BottomCause),
}

fn observe(exe: &Executable, input: &[i64], fuel: u64) -> Observed {
    match exe.run(input, &AbstPlan::preserve(), fuel) {
        ExecOutcome::Success { output, .. } => Observed::Output(output),
        ExecOutcome::Bottom { cause, .. } => Observed::Bottom(cause),
    }
}

/// Decides correctness of plausible patches for one defect.
#[derive(Clone, Debug)]
pub struct Adjudicator<'a> {
    defect: &'a Defect,
    inputs: Vec<Vec<i64>>,
    expected: Vec<Observed>,
    fuel: u64,
}

impl<'a> Adjudicator<'a> {
    pub fn new(defect: &'a Defect, cfg: &FuzzConfig) -> Self {
        let (inputs, expected) = match &defect.reference {
            Some(r) => {
                let exe = Executable::new(r);
                let inputs = fuzz_inputs(defect, cfg);
                let expected = inputs.iter().map(|i| observe(&exe, i, cfg.fuel)).collect();
                (inputs, expected)
            }
            None => (Vec::new(), Vec::new()),
        };
        Adjudicator {
            defect,
            inputs,
            expected,
            fuel: cfg.fuel,
        }
    }

    /// Correct iff the patch passes the validation and held-out cases and
    /// agrees with the reference on every fuzz input.
    pub fn is_correct(&self, patch: &Program) -> bool {
        let all: Vec<_> = self.defect.all_tests().cloned().collect();
        if !test_all(patch, &all, &[], crate::interp::DEFAULT_FUEL) {
            return false;
        }
        let exe = Executable::new(patch);
        self.inputs
            .iter()
            .zip(&self.expected)
            .all(|(input, want)| observe(&exe, input, self.fuel) == *want)
    }

    pub fn battery_size(&self) -> usize {
        self.inputs.len()
    }
}

/// One-shot form of [`Adjudicator::is_correct`].
pub fn adjudicate(patch: &Program, defect: &Defect, cfg: &FuzzConfig) -> bool {
    Adjudicator::new(defect, cfg).is_correct(patch)
}
