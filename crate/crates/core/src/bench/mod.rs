//! Defect corpus, correctness adjudication, search-space analysis and the
//! reports built on them.

mod adjudicate;
mod analysis;
mod corpus;
mod report;

pub use adjudicate::{adjudicate, fuzz_inputs, Adjudicator, FuzzConfig};
pub use analysis::{
    analyze_space, compare_orders, expected_review, explore, review, walk_defect, ExploreReport,
    ExploredPatch, Order, OrderComparison, OrderRow, SpaceReport, SpaceWalk,
};
pub use corpus::{load_program, load_test, load_tests, parse_meta, Corpus, CorpusError, Defect};
pub use report::{json_lines, orders_tsv, rows_tsv, DefectRow, TSV_HEADER};
