//! The staged repair algorithm: generate templates, reject most of them with
//! a cheap first stage, and instantiate the survivors into concrete patches.

mod condition;
mod value;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::interp::{test_all, TestCase, Validator, DEFAULT_FUEL};
use crate::lang::{Label, MarkerKind, Program};
use crate::localize::localize;
use crate::par;
use crate::transform::{generate_space, PatchTemplate, Schema, SpaceConfig};

pub use condition::{
    candidate_order, condition_space, condition_value_search, flip, positive_evidence,
    ranked_conditions, score_condition, ConditionCandidate, Evidence,
};
pub use value::{materialize, narrow_values, value_candidates, ValueCandidateSet};

pub const DEFAULT_MAX_TRIALS: usize = 11;
pub const DEFAULT_TOP_K: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error("the program already passes every negative test case")]
    NothingToRepair,
}

/// Knobs of a repair run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RepairConfig {
    pub space: SpaceConfig,
    pub max_trials: usize,
    pub top_k: usize,
    pub fuel: u64,
    /// Upper bound on templates evaluated.
    pub template_budget: Option<usize>,
    pub time_budget: Option<Duration>,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            space: SpaceConfig::default(),
            max_trials: DEFAULT_MAX_TRIALS,
            top_k: DEFAULT_TOP_K,
            fuel: DEFAULT_FUEL,
            template_budget: None,
            time_budget: None,
        }
    }
}

/// A concrete patch and where it came from.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct CandidatePatch {
    #[serde(serialize_with = "display")]
    pub program: Program,
    pub schema: Schema,
    #[serde(serialize_with = "display")]
    pub target: Label,
    pub provenance: String,
    /// The condition or value substituted for the abstract marker, if any.
    pub instantiation: Option<String>,
    /// 1-based position of the template in validation order.
    pub template_rank: usize,
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RepairResult {
    Found {
        patch: CandidatePatch,
        templates_evaluated: usize,
        stage2_entries: usize,
        plausible_rank: usize,
    },
    NotFound {
        templates_evaluated: usize,
        budget_exhausted: bool,
    },
}

impl RepairResult {
    pub fn patch(&self) -> Option<&CandidatePatch> {
        match self {
            RepairResult::Found { patch, .. } => Some(patch),
            RepairResult::NotFound { .. } => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize)]
pub struct RepairStats {
    pub space_size: usize,
    pub templates_evaluated: usize,
    pub abstc_templates_evaluated: usize,
    /// Condition templates that survived the value search.
    pub stage2_entries: usize,
    pub abstval_templates_evaluated: usize,
    pub value_stage2_entries: usize,
    pub validations: usize,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct RepairReport {
    pub result: RepairResult,
    pub stats: RepairStats,
}

/// What happened to a single template.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TemplateEval {
    pub kind: Option<MarkerKind>,
    pub stage2_entered: bool,
    pub validations: usize,
    /// Plausible patches in the order they validated, as
    /// `(program, instantiation)`.
    pub patches: Vec<(Program, Option<String>)>,
}

impl TemplateEval {
    fn record(&self, stats: &mut RepairStats) {
        stats.templates_evaluated += 1;
        stats.validations += self.validations;
        match self.kind {
            Some(MarkerKind::Condition) => {
                stats.abstc_templates_evaluated += 1;
                stats.stage2_entries += usize::from(self.stage2_entered);
            }
            Some(MarkerKind::Value) => {
                stats.abstval_templates_evaluated += 1;
                stats.value_stage2_entries += usize::from(self.stage2_entered);
            }
            None => {}
        }
    }
}

/// Runs both stages on one template. With `all`, keeps validating after the
/// first plausible patch so every plausible instantiation is reported.
pub fn evaluate_template(
    template: &Program,
    validator: &Validator<'_>,
    cfg: &RepairConfig,
    all: bool,
) -> TemplateEval {
    let mut eval = TemplateEval {
        kind: template.marker().map(|(_, k)| k),
        ..TemplateEval::default()
    };
    let fuel = validator.fuel();
    match eval.kind {
        Some(MarkerKind::Condition) => {
            let Some(mut evidence) =
                condition_value_search(template, validator.neg(), cfg.max_trials, fuel)
            else {
                return eval;
            };
            eval.stage2_entered = true;
            positive_evidence(template, validator.pos(), fuel, &mut evidence);
            for cand in ranked_conditions(&evidence, cfg.space.ext_cond)
                .into_iter()
                .take(cfg.top_k)
            {
                let patched = template
                    .substitute_condition(&cand.cond)
                    .expect("condition template");
                eval.validations += 1;
                if validator.check(&patched) {
                    eval.patches.push((patched, Some(cand.cond.to_string())));
                    if !all {
                        break;
                    }
                }
            }
        }
        Some(MarkerKind::Value) => {
            let c = value_candidates(template, validator.neg(), fuel);
            if c.is_empty() {
                return eval;
            }
            eval.stage2_entered = true;
            for v in materialize(template, &c) {
                let patched = template.substitute_value(&v).expect("value template");
                eval.validations += 1;
                if validator.check(&patched) {
                    eval.patches.push((patched, Some(v.to_string())));
                    if !all {
                        break;
                    }
                }
            }
        }
        None => {
            eval.validations += 1;
            if validator.check(template) {
                eval.patches.push((template.clone(), None));
            }
        }
    }
    eval
}

/// The ordered template space `repair` walks.
pub fn repair_space(
    prog: &Program,
    neg: &[TestCase],
    pos: &[TestCase],
    cfg: &RepairConfig,
) -> Vec<PatchTemplate> {
    let tl = localize(prog, neg, pos, cfg.space.loc_limit, cfg.fuel);
    generate_space(prog, &tl, &cfg.space)
}

/// Walks `space` in order, evaluating speculative batches in parallel and
/// committing results in order. `visit` sees each committed template with
/// its evaluation and returns false to stop.
pub fn walk_space(
    space: &[PatchTemplate],
    validator: &Validator<'_>,
    cfg: &RepairConfig,
    all: bool,
    mut visit: impl FnMut(usize, &PatchTemplate, &TemplateEval) -> bool,
) -> (RepairStats, bool) {
    let started = Instant::now();
    let limit = cfg
        .template_budget
        .map_or(space.len(), |b| b.min(space.len()));
    let mut stats = RepairStats {
        space_size: space.len(),
        ..RepairStats::default()
    };
    let mut i = 0;
    while i < limit {
        if cfg.time_budget.is_some_and(|t| started.elapsed() >= t) {
            return (stats, true);
        }
        let end = (i + par::batch_size()).min(limit);
        let evals = par::map(&space[i..end], |t| {
            evaluate_template(&t.program, validator, cfg, all)
        });
        for (offset, eval) in evals.iter().enumerate() {
            eval.record(&mut stats);
            if !visit(i + offset, &space[i + offset], eval) {
                return (stats, false);
            }
        }
        i = end;
    }
    (stats, limit < space.len())
}

/// Searches for the first plausible patch in priority order.
pub fn repair(
    prog: &Program,
    neg: &[TestCase],
    pos: &[TestCase],
    cfg: &RepairConfig,
) -> Result<RepairReport, SynthError> {
    if test_all(prog, neg, &[], cfg.fuel) {
        return Err(SynthError::NothingToRepair);
    }
    let space = repair_space(prog, neg, pos, cfg);
    let validator = Validator::new(neg, pos, cfg.fuel);
    let mut found = None;
    let (stats, budget_exhausted) = walk_space(&space, &validator, cfg, false, |idx, t, eval| {
        match eval.patches.first() {
            Some((program, instantiation)) => {
                found = Some(CandidatePatch {
                    program: program.clone(),
                    schema: t.schema,
                    target: t.target.clone(),
                    provenance: t.provenance.clone(),
                    instantiation: instantiation.clone(),
                    template_rank: idx + 1,
                });
                false
            }
            None => true,
        }
    });
    let result = match found {
        Some(patch) => RepairResult::Found {
            plausible_rank: patch.template_rank,
            patch,
            templates_evaluated: stats.templates_evaluated,
            stage2_entries: stats.stage2_entries,
        },
        None => RepairResult::NotFound {
            templates_evaluated: stats.templates_evaluated,
            budget_exhausted,
        },
    };
    Ok(RepairReport { result, stats })
}

/// Collects every distinct plausible patch within the budget, in the order
/// validation finds them.
pub fn collect_plausible(
    space: &[PatchTemplate],
    validator: &Validator<'_>,
    cfg: &RepairConfig,
) -> (Vec<CandidatePatch>, RepairStats, bool) {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let (stats, budget_exhausted) = walk_space(space, validator, cfg, true, |idx, t, eval| {
        for (program, instantiation) in &eval.patches {
            if seen.insert(program.clone()) {
                out.push(CandidatePatch {
                    program: program.clone(),
                    schema: t.schema,
                    target: t.target.clone(),
                    provenance: t.provenance.clone(),
                    instantiation: instantiation.clone(),
                    template_rank: idx + 1,
                });
            }
        }
        true
    });
    (out, stats, budget_exhausted)
}
