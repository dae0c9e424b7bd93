//! JSON and TSV renderings of per-defect results.

use serde::Serialize;

use crate::bench::{ExploreReport, OrderComparison, SpaceReport};

pub const TSV_HEADER: [&str; 11] = [
    "id",
    "loc_limit",
    "extension",
    "correct_in_space",
    "correct_first",
    "plausible_blocked",
    "timeout",
    "space_size",
    "correct_rank",
    "plausible_found",
    "correct_found",
];

/// One result row: the space analysis joined with a budgeted exploration.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct DefectRow {
    pub id: String,
    pub loc_limit: usize,
    pub extension: String,
    pub correct_in_space: bool,
    pub correct_first: bool,
    pub plausible_blocked: bool,
    pub timeout: bool,
    pub space_size: usize,
    pub correct_rank: Option<usize>,
    pub plausible_found: usize,
    pub correct_found: usize,
}

impl DefectRow {
    pub fn new(space: &SpaceReport, explore: &ExploreReport) -> Self {
        DefectRow {
            id: space.id.clone(),
            loc_limit: space.loc_limit,
            extension: space.extension.clone(),
            correct_in_space: space.correct_in_space,
            correct_first: explore.first_plausible_is_correct,
            plausible_blocked: explore.blocked,
            timeout: explore.timed_out,
            space_size: space.space_size,
            correct_rank: space.correct_rank,
            plausible_found: explore.plausible_found,
            correct_found: explore.correct_found,
        }
    }

    fn cells(&self) -> [String; 11] {
        let yn = |b: bool| if b { "Yes" } else { "No" }.to_string();
        [
            self.id.clone(),
            self.loc_limit.to_string(),
            self.extension.clone(),
            yn(self.correct_in_space),
            yn(self.correct_first),
            yn(self.plausible_blocked),
            yn(self.timeout),
            self.space_size.to_string(),
            self.correct_rank.map_or("-".to_string(), |r| r.to_string()),
            self.plausible_found.to_string(),
            self.correct_found.to_string(),
        ]
    }
}

pub fn rows_tsv(rows: &[DefectRow]) -> String {
    let mut out = TSV_HEADER.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.cells().join("\t"));
        out.push('\n');
    }
    out
}

/// One JSON object per line.
pub fn json_lines<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("report serializes") + "\n")
        .collect()
}

pub fn orders_tsv(cmp: &OrderComparison) -> String {
    let mut out = String::from("id\tplausible\tcorrect\tspr\trandom\trandom_exact\n");
    for r in &cmp.rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{} / {}\t{:.2} / {:.2}\t{:.2} / {:.2}\n",
            r.id,
            r.plausible,
            r.correct,
            r.spr_cost,
            u8::from(r.spr_payoff),
            r.random_cost,
            r.random_payoff,
            r.random_cost_exact,
            r.random_payoff_exact
        ));
    }
    out.push_str(&format!(
        "total\t\t\t{}\t{}\t{:.1} / {:.1}\n",
        cmp.spr_cell(),
        cmp.random_cell(),
        cmp.random_cost_exact,
        cmp.random_payoff_exact
    ));
    out
}
