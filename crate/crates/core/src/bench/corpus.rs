//! Defect corpus on disk:
//!
//! ```text
//! defects/corpus.meta            key=value, optional
//! defects/<id>/program.spr
//! defects/<id>/tests/neg/*.txt
//! defects/<id>/tests/pos/*.txt
//! defects/<id>/heldout/*.txt
//! defects/<id>/reference.spr     optional
//! defects/<id>/meta              key=value: id, description, family
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::interp::{test_all, TestCase, TestCaseError, DEFAULT_FUEL};
use crate::lang::{parse_program, LangError, Program};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Program { path: PathBuf, source: LangError },
    #[error("{}: {source}", path.display())]
    TestCase {
        path: PathBuf,
        source: TestCaseError,
    },
    #[error("{}: {msg}", path.display())]
    Invalid { path: PathBuf, msg: String },
}

impl CorpusError {
    pub fn path(&self) -> &Path {
        match self {
            CorpusError::Io { path, .. }
            | CorpusError::Program { path, .. }
            | CorpusError::TestCase { path, .. }
            | CorpusError::Invalid { path, .. } => path,
        }
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_meta(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

pub fn load_program(path: &Path) -> Result<Program, CorpusError> {
    parse_program(&read(path)?).map_err(|source| CorpusError::Program {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_test(path: &Path) -> Result<TestCase, CorpusError> {
    TestCase::parse(&read(path)?).map_err(|source| CorpusError::TestCase {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads every `*.txt` test in `dir`, sorted by file name. A missing
/// directory is an empty suite.
pub fn load_tests(dir: &Path) -> Result<Vec<TestCase>, CorpusError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let entries = fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_test(p)).collect()
}

#[derive(Clone, Debug)]
pub struct Defect {
    pub id: String,
    pub description: String,
    pub family: String,
    pub dir: PathBuf,
    pub buggy: Program,
    pub neg: Vec<TestCase>,
    pub pos: Vec<TestCase>,
    pub heldout: Vec<TestCase>,
    pub reference: Option<Program>,
}

impl Defect {
    pub fn load(dir: &Path) -> Result<Defect, CorpusError> {
        let meta_path = dir.join("meta");
        let meta = if meta_path.exists() {
            parse_meta(&read(&meta_path)?)
        } else {
            BTreeMap::new()
        };
        let dir_name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let reference_path = dir.join("reference.spr");
        let defect = Defect {
            id: meta.get("id").cloned().unwrap_or(dir_name),
            description: meta.get("description").cloned().unwrap_or_default(),
            family: meta.get("family").cloned().unwrap_or_default(),
            dir: dir.to_path_buf(),
            buggy: load_program(&dir.join("program.spr"))?,
            neg: load_tests(&dir.join("tests").join("neg"))?,
            pos: load_tests(&dir.join("tests").join("pos"))?,
            heldout: load_tests(&dir.join("heldout"))?,
            reference: if reference_path.exists() {
                Some(load_program(&reference_path)?)
            } else {
                None
            },
        };
        defect.validate()?;
        Ok(defect)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |file: &str, msg: &str| CorpusError::Invalid {
            path: self.dir.join(file),
            msg: msg.to_string(),
        };
        if self.neg.is_empty() || test_all(&self.buggy, &self.neg, &[], DEFAULT_FUEL) {
            return Err(invalid(
                "tests/neg",
                "the program must fail at least one negative test case",
            ));
        }
        if !test_all(&self.buggy, &[], &self.pos, DEFAULT_FUEL) {
            return Err(invalid(
                "tests/pos",
                "the program must pass every positive test case",
            ));
        }
        if let Some(reference) = &self.reference {
            let all: Vec<TestCase> = self.all_tests().cloned().collect();
            if !test_all(reference, &all, &[], DEFAULT_FUEL) {
                return Err(invalid(
                    "reference.spr",
                    "the reference must pass the validation and held-out tests",
                ));
            }
        }
        Ok(())
    }

    /// Validation and held-out cases.
    pub fn all_tests(&self) -> impl Iterator<Item = &TestCase> {
        self.neg.iter().chain(&self.pos).chain(&self.heldout)
    }
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub defects: Vec<Defect>,
    pub meta: BTreeMap<String, String>,
}

impl Corpus {
    /// Loads every subdirectory of `root` holding a `program.spr`, in
    /// directory-name order.
    pub fn load(root: &Path) -> Result<Corpus, CorpusError> {
        let entries = fs::read_dir(root).map_err(|source| CorpusError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        let mut dirs: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("program.spr").is_file())
            .collect();
        dirs.sort();
        let meta_path = root.join("corpus.meta");
        let meta = if meta_path.exists() {
            parse_meta(&read(&meta_path)?)
        } else {
            BTreeMap::new()
        };
        let defects = dirs
            .iter()
            .map(|d| Defect::load(d))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Corpus { defects, meta })
    }

    /// Minimum number of defects whose first plausible patch must be correct.
    pub fn first_correct_threshold(&self) -> Option<usize> {
        self.meta.get("first_correct_threshold")?.parse().ok()
    }
}
