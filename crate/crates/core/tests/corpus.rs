use std::path::PathBuf;

use spr::bench::{
    adjudicate, compare_orders, expected_review, fuzz_inputs, review, walk_defect, Corpus, Defect,
    FuzzConfig, Order,
};
use spr::lang::{parse_program, parse_template, Label};
use spr::synth::{repair, RepairConfig, RepairResult};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../defects")
}

fn defect(id: &str) -> Defect {
    Defect::load(&root().join(id)).unwrap()
}

#[test]
fn corpus_loads_with_threshold() {
    let c = Corpus::load(&root()).unwrap();
    assert_eq!(c.defects.len(), 11);
    assert_eq!(c.first_correct_threshold(), Some(7));
    for d in &c.defects {
        assert!(!d.neg.is_empty(), "{}", d.id);
        assert!(!d.family.is_empty(), "{}", d.id);
        assert!(d.reference.is_some(), "{}", d.id);
    }
}

fn loosened(cond: &str) -> spr::lang::Program {
    let template = parse_template(
        "L0: x = read\nL1: if ((x == 5) || abstc) L2 L3\nL2: r = 1 -> L4\nL3: r = 0 -> L4\nL4: print r\nL5: stop\n",
    )
    .unwrap();
    let c = match parse_program(&format!("L0: if ({cond}) L1 L1\nL1: stop\n"))
        .unwrap()
        .stmt(&Label::new("L0"))
    {
        Some(spr::lang::Stmt::If { cond, .. }) => cond.clone(),
        _ => unreachable!(),
    };
    template.substitute_condition(&c).unwrap()
}

#[test]
fn adjudication_separates_correct_from_plausible() {
    let d = defect("ex1");
    let fuzz = FuzzConfig::default();
    assert!(adjudicate(&loosened("(x == 3)"), &d, &fuzz));
    assert!(!adjudicate(&loosened("!(x == 7)"), &d, &fuzz));
    assert!(!adjudicate(&d.buggy, &d, &fuzz));
}

#[test]
fn fuzz_battery_is_deterministic() {
    let d = defect("guard");
    let cfg = FuzzConfig {
        cases: 50,
        ..FuzzConfig::default()
    };
    assert_eq!(fuzz_inputs(&d, &cfg), fuzz_inputs(&d, &cfg));
    let other = FuzzConfig { seed: 1, ..cfg };
    assert_ne!(fuzz_inputs(&d, &cfg), fuzz_inputs(&d, &other));
    assert_eq!(fuzz_inputs(&d, &cfg).len(), 50);
}

#[test]
fn worked_example_repairs_with_loosening() {
    let d = defect("ex1");
    let report = repair(&d.buggy, &d.neg, &d.pos, &RepairConfig::default()).unwrap();
    let RepairResult::Found { patch, .. } = report.result else {
        panic!("no patch");
    };
    assert_eq!(patch.instantiation.as_deref(), Some("(x == 3)"));
    assert_eq!(Some(&patch.program), d.reference.as_ref());
}

#[test]
fn walk_lists_incorrect_plausible_patches_too() {
    let d = defect("ex1");
    let walk = walk_defect(&d, &RepairConfig::default(), &FuzzConfig::default());
    let explored = walk.explore(1000, Order::SprTiers);
    assert!(explored.first_plausible_is_correct);
    assert!(explored.correct_found >= 1);
    assert!(explored.plausible_found > explored.correct_found);
    assert!(!explored.blocked);
    assert!(!explored.timed_out);
    assert!(walk.explore(0, Order::SprTiers).timed_out);
}

fn permutations(items: &mut Vec<bool>, k: usize, out: &mut Vec<Vec<bool>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

#[test]
fn expected_review_matches_enumeration() {
    for n in 0..=6 {
        for m in 0..=n {
            for k in 1..=7 {
                let mut verdicts: Vec<bool> = (0..n).map(|i| i < m).collect();
                let mut perms = Vec::new();
                permutations(&mut verdicts, 0, &mut perms);
                let count = perms.len() as f64;
                let (cost, payoff) = perms.iter().fold((0.0, 0.0), |(c, p), order| {
                    let (ci, pi) = review(order, k);
                    (c + ci as f64, p + f64::from(u8::from(pi)))
                });
                let (ec, ep) = expected_review(n, m, k);
                assert!((ec - cost / count).abs() < 1e-9, "cost n={n} m={m} k={k}");
                assert!(
                    (ep - payoff / count).abs() < 1e-9,
                    "payoff n={n} m={m} k={k}"
                );
            }
        }
    }
}

#[test]
fn sampled_random_order_tracks_exact_expectation() {
    let c = Corpus::load(&root()).unwrap();
    let fuzz = FuzzConfig::default();
    let walks: Vec<_> = c
        .defects
        .iter()
        .map(|d| walk_defect(d, &RepairConfig::default(), &fuzz))
        .collect();
    let cmp = compare_orders(&walks, 1000, 10, 400, 0);
    assert!((cmp.random_payoff - cmp.random_payoff_exact).abs() < 0.5);
    assert!((cmp.random_cost - cmp.random_cost_exact).abs() < 0.1 * cmp.random_cost_exact.max(1.0));
    assert_eq!(
        cmp.spr_cell(),
        format!("{} / {}", cmp.spr_cost, cmp.spr_payoff)
    );
}
