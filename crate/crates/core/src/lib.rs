//! Staged generate-and-validate repair for a small labelled imperative
//! language.
//!
//! A buggy program and its failing (negative) and passing (positive) test
//! cases go in. Statements are ranked by suspiciousness ([`localize`]),
//! rewritten into patch templates holding an abstract condition or an
//! abstract printed value ([`transform`]), and each template is first
//! checked for feasibility before any concrete condition or value is
//! synthesized and validated ([`synth`]). [`bench`] loads a defect corpus,
//! adjudicates patches against a reference program and reports on search
//! spaces and validation order.

pub mod bench;
pub mod cli;
pub mod interp;
pub mod lang;
pub mod localize;
pub mod par;
pub mod synth;
pub mod transform;
