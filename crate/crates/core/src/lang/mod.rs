//! The core language: syntax, the program model `<p, n>`, and the syntactic
//! helpers the transformation schemas consume.

mod ast;
mod parse;
mod program;

use thiserror::Error;

pub use ast::{AbstShape, Atom, BinOp, CmpOp, Cond, Label, Stmt, Var};
pub use parse::{parse_program, parse_template, parse_with_mode, ParseMode};
pub use program::{render_program, MarkerKind, Program};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LangError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{}undefined label `{label}`", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    UndefinedLabel { label: String, line: Option<usize> },
    #[error("line {line}: duplicate label `{label}`")]
    DuplicateLabel { label: String, line: usize },
    #[error("line {line}: `{token}` is reserved for generated code")]
    Reserved { line: usize, token: String },
    #[error("malformed program: {0}")]
    Malformed(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    pub(crate) const WORKED: &str = "\
L0: x = read -> L1
L1: if ((x == 5)) L2 L3
L2: print 1 -> L4
L3: print 0 -> L4
L4: stop";

    fn labels(names: &[&str]) -> Vec<Label> {
        names.iter().map(|n| Label::new(*n)).collect()
    }

    #[test]
    fn minimal_program() {
        let p = parse_program("L0: stop").unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.entry(), &Label::new("L0"));
        assert_eq!(render_program(&p), "L0: stop");
    }

    #[test]
    fn worked_example_round_trips() {
        let p = parse_program(WORKED).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p.entry().as_str(), "L0");
        assert_eq!(render_program(&p), WORKED);
        assert_eq!(parse_program(&render_program(&p)).unwrap(), p);
    }

    #[test]
    fn fall_through_defaults_to_next_line() {
        let p = parse_program("L0: x = read\nL1: print x\nL2: stop").unwrap();
        assert_eq!(p.next(&Label::new("L0")), Some(&Label::new("L1")));
        assert_eq!(p.next(&Label::new("L1")), Some(&Label::new("L2")));
        assert!(parse_program("L0: x = read").is_err());
    }

    #[test]
    fn undefined_and_duplicate_labels() {
        assert!(matches!(
            parse_program("L0: x = read -> L9"),
            Err(LangError::UndefinedLabel { line: Some(1), .. })
        ));
        assert!(matches!(
            parse_program("L0: skip -> L0\nL0: stop"),
            Err(LangError::DuplicateLabel { line: 2, .. })
        ));
        assert!(matches!(
            parse_program("L0: if (1) L0 L7"),
            Err(LangError::UndefinedLabel { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_program("L0: x = read\n\nL2: x = = 3\nL3: stop").unwrap_err();
        assert!(matches!(err, LangError::Syntax { line: 3, .. }), "{err}");
        assert!(parse_program("L0: x = y\nL1: stop").is_err());
        assert!(parse_program("L0: if (x != 3) L0 L0").is_err());
    }

    #[test]
    fn reserved_tokens_rejected_in_user_files() {
        assert!(matches!(
            parse_program("L0: print abstval -> L1\nL1: stop"),
            Err(LangError::Reserved { .. })
        ));
        assert!(matches!(
            parse_program("L0: if (1 || abstc) L1 L1\nL1: stop"),
            Err(LangError::Reserved { .. })
        ));
        assert!(matches!(
            parse_program("G1: stop"),
            Err(LangError::Reserved { .. })
        ));
        assert!(parse_program("L0: read = read\nL1: stop").is_err());
    }

    #[test]
    fn templates_keep_abstract_tokens() {
        let text = "L0: x = read -> L1\nL1: if ((x == 5) || abstc) L2 L3\nL2: print 1 -> L4\nL3: print abstval -> L4\nL4: stop";
        // two markers: rejected
        assert!(parse_template(text).is_err());
        let text = "L0: x = read -> L1\nL1: if ((x == 5) || abstc) L2 L3\nL2: print 1 -> L4\nL3: print 0 -> L4\nL4: stop";
        let t = parse_template(text).unwrap();
        let rendered = render_program(&t);
        assert!(rendered.contains("abstc"));
        assert_eq!(parse_template(&rendered).unwrap(), t);
        let v = parse_template("L0: print abstval -> L1\nL1: stop").unwrap();
        assert!(render_program(&v).contains("abstval"));
        assert!(parse_template("L0: if (abstc && 1) L1 L1\nL1: stop").is_err());
    }

    #[test]
    fn negative_constants_and_binops() {
        let p = parse_program("L0: x = -3\nL1: y = x - -2\nL2: z = 4 * y\nL3: stop").unwrap();
        assert_eq!(p.consts(), BTreeSet::from([-3, -2, 4]));
        assert_eq!(parse_program(&render_program(&p)).unwrap(), p);
    }

    #[test]
    fn vars_of_statements_and_programs() {
        let s = Stmt::Assign {
            dst: Var::new("x"),
            lhs: Atom::Var(Var::new("y")),
            op: BinOp::Add,
            rhs: Atom::Var(Var::new("z")),
        };
        let names: Vec<String> = s.vars().iter().map(|v| v.to_string()).collect();
        assert_eq!(names, ["x", "y", "z"]);
        assert!(Stmt::Stop.vars().is_empty());
        let p = parse_program(WORKED).unwrap();
        assert_eq!(p.vars(), BTreeSet::from([Var::new("x")]));
    }

    #[test]
    fn consts_skip_condition_literals() {
        let p = parse_program("L0: x = 5 -> L1\nL1: stop").unwrap();
        assert_eq!(p.consts(), BTreeSet::from([5]));
        let p = parse_program("L0: x = read\nL1: if (1 && !0) L2 L2\nL2: stop").unwrap();
        assert!(p.consts().is_empty());
        let p = parse_program(WORKED).unwrap();
        assert_eq!(p.consts(), BTreeSet::from([0, 1, 5]));
    }

    #[test]
    fn simple_statements_in_label_order() {
        assert!(parse_program("L0: stop")
            .unwrap()
            .simple_statements()
            .is_empty());
        let p = parse_program(WORKED).unwrap();
        let simple: Vec<String> = p
            .simple_statements()
            .into_iter()
            .map(|(l, s)| format!("{l}: {s}"))
            .collect();
        assert_eq!(simple, ["L0: x = read", "L2: print 1", "L3: print 0"]);
    }

    #[test]
    fn fresh_labels_are_fresh_and_deterministic() {
        let p = parse_program("L0: skip -> L1\nL1: stop").unwrap();
        let fresh = p.fresh_labels(2);
        assert_eq!(fresh, labels(&["G1", "G2"]));
        assert_eq!(p.fresh_labels(2), fresh);
        assert!(p.fresh_labels(0).is_empty());
        let t = parse_template("L0: skip -> G1\nG1: stop").unwrap();
        assert_eq!(t.fresh_labels(2), labels(&["G2", "G3"]));
    }

    #[test]
    fn substitution_yields_concrete_programs() {
        let t = parse_template(
            "L0: x = read -> L1\nL1: if ((x == 5) || abstc) L2 L3\nL2: print 1 -> L4\nL3: print 0 -> L4\nL4: stop",
        )
        .unwrap();
        let patched = t
            .substitute_condition(&Cond::eq_const(Var::new("x"), 3))
            .unwrap();
        assert!(patched.marker().is_none());
        assert_eq!(
            patched.stmt(&Label::new("L1")).unwrap().to_string(),
            "if ((x == 5) || (x == 3)) L2 L3"
        );
        assert!(patched.substitute_value(&Atom::Int(1)).is_none());
    }
}
