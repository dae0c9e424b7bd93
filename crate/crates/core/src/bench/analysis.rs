//! Search-space analysis, exploration past the first plausible patch, and
//! the review-cost comparison between validation orders.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bench::{Adjudicator, Defect, FuzzConfig};
use crate::interp::Validator;
use crate::synth::{collect_plausible, repair_space, CandidatePatch, RepairConfig, RepairStats};
use crate::transform::SpaceConfig;

/// Every plausible patch of a defect's space, in validation order, with
/// its verdict.
#[derive(Clone, Debug)]
pub struct SpaceWalk {
    pub id: String,
    pub space: SpaceConfig,
    pub space_size: usize,
    pub stats: RepairStats,
    /// True when a template or time budget stopped the walk early.
    pub truncated: bool,
    pub plausible: Vec<(CandidatePatch, bool)>,
}

/// Evaluates every template (up to `cfg`'s budgets) in collect-all mode and
/// adjudicates each plausible patch.
pub fn walk_defect(defect: &Defect, cfg: &RepairConfig, fuzz: &FuzzConfig) -> SpaceWalk {
    let space = repair_space(&defect.buggy, &defect.neg, &defect.pos, cfg);
    let validator = Validator::new(&defect.neg, &defect.pos, cfg.fuel);
    let (patches, stats, truncated) = collect_plausible(&space, &validator, cfg);
    let judge = Adjudicator::new(defect, fuzz);
    let plausible = patches
        .into_iter()
        .map(|p| {
            let ok = judge.is_correct(&p.program);
            (p, ok)
        })
        .collect();
    SpaceWalk {
        id: defect.id.clone(),
        space: cfg.space,
        space_size: space.len(),
        stats,
        truncated,
        plausible,
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct SpaceReport {
    pub id: String,
    pub loc_limit: usize,
    pub extension: String,
    pub space_size: usize,
    pub correct_in_space: bool,
    /// 1-based rank of the first template yielding a correct patch.
    pub correct_rank: Option<usize>,
    pub plausible_in_space: usize,
    pub truncated: bool,
}

impl SpaceWalk {
    pub fn space_report(&self) -> SpaceReport {
        let correct_rank = self
            .plausible
            .iter()
            .filter(|(_, ok)| *ok)
            .map(|(p, _)| p.template_rank)
            .min();
        SpaceReport {
            id: self.id.clone(),
            loc_limit: self.space.loc_limit,
            extension: self.space.extension_name().to_string(),
            space_size: self.space_size,
            correct_in_space: correct_rank.is_some(),
            correct_rank,
            plausible_in_space: self.plausible.len(),
            truncated: self.truncated,
        }
    }

    /// Plausible patches whose template lies within the first `budget`
    /// templates, in validation order.
    pub fn found_within(&self, budget: usize) -> Vec<&(CandidatePatch, bool)> {
        self.plausible
            .iter()
            .filter(|(p, _)| p.template_rank <= budget)
            .collect()
    }

    pub fn explore(&self, budget: usize, order: Order) -> ExploreReport {
        let mut found = self.found_within(budget);
        if let Order::Random(seed) = order {
            found.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let first_plausible_is_correct = found.first().is_some_and(|(_, ok)| *ok);
        let correct_in_space = self.plausible.iter().any(|(_, ok)| *ok);
        ExploreReport {
            id: self.id.clone(),
            loc_limit: self.space.loc_limit,
            extension: self.space.extension_name().to_string(),
            budget,
            order,
            plausible_found: found.len(),
            correct_found: found.iter().filter(|(_, ok)| *ok).count(),
            first_plausible_is_correct,
            blocked: correct_in_space && !found.is_empty() && !first_plausible_is_correct,
            timed_out: budget == 0 || budget < self.space_size,
            verdicts: found.iter().map(|(_, ok)| *ok).collect(),
            patches: found
                .iter()
                .map(|(p, ok)| ExploredPatch {
                    template_rank: p.template_rank,
                    provenance: p.provenance.clone(),
                    instantiation: p.instantiation.clone(),
                    correct: *ok,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    SprTiers,
    Random(u64),
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ExploredPatch {
    pub template_rank: usize,
    pub provenance: String,
    pub instantiation: Option<String>,
    pub correct: bool,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct ExploreReport {
    pub id: String,
    pub loc_limit: usize,
    pub extension: String,
    pub budget: usize,
    pub order: Order,
    pub plausible_found: usize,
    pub correct_found: usize,
    pub first_plausible_is_correct: bool,
    /// A plausible but incorrect patch comes first while a correct patch
    /// exists in the space.
    pub blocked: bool,
    pub timed_out: bool,
    #[serde(skip)]
    pub verdicts: Vec<bool>,
    pub patches: Vec<ExploredPatch>,
}

pub fn analyze_space(defect: &Defect, cfg: &RepairConfig, fuzz: &FuzzConfig) -> SpaceReport {
    walk_defect(defect, cfg, fuzz).space_report()
}

/// Explores the whole space and reports what a `budget`-template run finds.
pub fn explore(
    defect: &Defect,
    cfg: &RepairConfig,
    budget: usize,
    order: Order,
    fuzz: &FuzzConfig,
) -> ExploreReport {
    walk_defect(defect, cfg, fuzz).explore(budget, order)
}

/// Review cost and payoff when patches are inspected in the given order
/// until the first correct one or `k` patches.
pub fn review(verdicts: &[bool], k: usize) -> (usize, bool) {
    match verdicts.iter().take(k).position(|ok| *ok) {
        Some(i) => (i + 1, true),
        None => (k.min(verdicts.len()), false),
    }
}

/// Expected review cost and payoff when `n` patches, `m` of them correct,
/// are inspected in uniformly random order.
pub fn expected_review(n: usize, m: usize, k: usize) -> (f64, f64) {
    let depth = k.min(n);
    if m == 0 {
        return (depth as f64, 0.0);
    }
    // none of the first j is correct
    let mut miss = 1.0;
    let mut cost = 0.0;
    for j in 1..=depth {
        let next_miss = miss * (n - m).saturating_sub(j - 1) as f64 / (n - (j - 1)) as f64;
        cost += j as f64 * (miss - next_miss);
        miss = next_miss;
    }
    cost += depth as f64 * miss;
    (cost, 1.0 - miss)
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct OrderRow {
    pub id: String,
    pub plausible: usize,
    pub correct: usize,
    pub spr_cost: usize,
    pub spr_payoff: bool,
    pub random_cost: f64,
    pub random_payoff: f64,
    pub random_cost_exact: f64,
    pub random_payoff_exact: f64,
}

#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct OrderComparison {
    pub k: usize,
    pub seeds: u64,
    pub rows: Vec<OrderRow>,
    pub spr_cost: usize,
    pub spr_payoff: usize,
    pub random_cost: f64,
    pub random_payoff: f64,
    pub random_cost_exact: f64,
    pub random_payoff_exact: f64,
}

impl OrderComparison {
    /// `cost / payoff`, the X / Y cell layout.
    pub fn spr_cell(&self) -> String {
        format!("{} / {}", self.spr_cost, self.spr_payoff)
    }

    pub fn random_cell(&self) -> String {
        format!("{:.1} / {:.1}", self.random_cost, self.random_payoff)
    }
}

/// Compares validation order against random order over each walk's
/// plausible patches within `budget`. Random order is averaged over
/// `seeds` shuffles (seeds `seed..seed + seeds`).
pub fn compare_orders(
    walks: &[SpaceWalk],
    budget: usize,
    k: usize,
    seeds: u64,
    seed: u64,
) -> OrderComparison {
    let mut rows = Vec::new();
    for walk in walks {
        let spr = walk.explore(budget, Order::SprTiers);
        let (spr_cost, spr_payoff) = review(&spr.verdicts, k);
        let (mut cost_sum, mut payoff_sum) = (0.0, 0.0);
        for s in seed..seed + seeds {
            let r = walk.explore(budget, Order::Random(s));
            let (c, p) = review(&r.verdicts, k);
            cost_sum += c as f64;
            payoff_sum += f64::from(u8::from(p));
        }
        let n = spr.plausible_found;
        let m = spr.correct_found;
        let (cost_exact, payoff_exact) = expected_review(n, m, k);
        let runs = seeds.max(1) as f64;
        rows.push(OrderRow {
            id: walk.id.clone(),
            plausible: n,
            correct: m,
            spr_cost,
            spr_payoff,
            random_cost: cost_sum / runs,
            random_payoff: payoff_sum / runs,
            random_cost_exact: cost_exact,
            random_payoff_exact: payoff_exact,
        });
    }
    OrderComparison {
        k,
        seeds,
        spr_cost: rows.iter().map(|r| r.spr_cost).sum(),
        spr_payoff: rows.iter().filter(|r| r.spr_payoff).count(),
        random_cost: rows.iter().map(|r| r.random_cost).sum(),
        random_payoff: rows.iter().map(|r| r.random_payoff).sum(),
        random_cost_exact: rows.iter().map(|r| r.random_cost_exact).sum(),
        random_payoff_exact: rows.iter().map(|r| r.random_payoff_exact).sum(),
        rows,
    }
}
