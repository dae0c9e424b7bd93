//! The `spr` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use similar::TextDiff;

use crate::bench::{
    compare_orders, json_lines, load_program, orders_tsv, rows_tsv, walk_defect, Corpus,
    CorpusError, Defect, DefectRow, FuzzConfig, Order, SpaceWalk,
};
use crate::interp::{exec, AbstPlan, ExecOutcome, DEFAULT_FUEL};
use crate::localize::rank;
use crate::par;
use crate::synth::{
    repair, repair_space, RepairConfig, RepairResult, DEFAULT_MAX_TRIALS, DEFAULT_TOP_K,
};
use crate::transform::{schema_counts, SpaceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_REPAIR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "spr",
    version,
    about = "Repair small labelled programs against a test suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a program on an input sequence.
    Run {
        program: PathBuf,
        /// Whitespace-separated integers.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        input: String,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Rank the statements of a defect by suspiciousness.
    Localize {
        defect: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
    },
    /// Summarize (or dump) the template space of a defect.
    Space {
        defect: PathBuf,
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        dump: Option<Format>,
    },
    /// Search for the first plausible patch.
    Repair {
        defect: PathBuf,
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value = "json")]
        format: Format,
        /// Write the patched program here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive space analysis for a defect or a corpus directory.
    Analyze {
        path: PathBuf,
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Templates a budgeted run may evaluate.
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, default_value = "tsv")]
        format: Format,
        #[command(flatten)]
        fuzz: FuzzArgs,
    },
    /// Every plausible patch found within a template budget.
    Explore {
        path: PathBuf,
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        #[arg(long, value_enum, default_value = "spr")]
        order: OrderArg,
        #[command(flatten)]
        fuzz: FuzzArgs,
    },
    /// Review cost and payoff of validation order against random order.
    CompareOrders {
        corpus: PathBuf,
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        /// Review depth.
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        /// Random orders averaged.
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        #[arg(long, default_value = "tsv")]
        format: Format,
        #[command(flatten)]
        fuzz: FuzzArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct SpaceArgs {
    #[arg(long, default_value_t = 200)]
    loc_limit: usize,
    #[arg(long)]
    ext_cond: bool,
    #[arg(long)]
    ext_rep: bool,
    #[arg(long)]
    goto_control: bool,
}

impl SpaceArgs {
    fn config(&self) -> SpaceConfig {
        SpaceConfig {
            loc_limit: self.loc_limit,
            ext_cond: self.ext_cond,
            ext_rep: self.ext_rep,
            goto_control: self.goto_control,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    #[arg(long, default_value_t = DEFAULT_MAX_TRIALS)]
    max_flip_trials: usize,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_conditions: usize,
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    #[arg(long)]
    template_budget: Option<usize>,
    /// Wall-clock cap in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Worker threads; 0 uses the default pool.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl SearchArgs {
    fn config(&self, space: SpaceConfig) -> RepairConfig {
        RepairConfig {
            space,
            max_trials: self.max_flip_trials.max(1),
            top_k: self.top_conditions,
            fuel: self.fuel,
            template_budget: self.template_budget,
            time_budget: self.time_budget.map(Duration::from_secs_f64),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct FuzzArgs {
    /// Fuzz inputs per defect for correctness checks.
    #[arg(long, default_value_t = 200)]
    fuzz_cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl FuzzArgs {
    fn config(&self) -> FuzzConfig {
        FuzzConfig {
            cases: self.fuzz_cases,
            seed: self.seed,
            ..FuzzConfig::default()
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Tsv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OrderArg {
    Spr,
    Random,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn load_defects(path: &Path) -> Result<Vec<Defect>, CorpusError> {
    if path.join("program.spr").is_file() {
        Ok(vec![Defect::load(path)?])
    } else {
        Ok(Corpus::load(path)?.defects)
    }
}

fn emit(out: &mut dyn Write, text: &str) {
    let _ = out.write_all(text.as_bytes());
}

fn walks(defects: &[Defect], cfg: &RepairConfig, fuzz: &FuzzConfig) -> Vec<SpaceWalk> {
    defects.iter().map(|d| walk_defect(d, cfg, fuzz)).collect()
}

#[derive(Serialize)]
struct RepairOutput<'a> {
    id: &'a str,
    #[serde(flatten)]
    report: &'a crate::synth::RepairReport,
    diff: Option<String>,
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Run {
            program,
            input,
            fuel,
        } => {
            let prog = load_program(&program)?;
            let input: Vec<i64> = input
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| CliError::Usage(format!("bad input value `{t}`")))
                })
                .collect::<Result<_, _>>()?;
            match exec(&prog, &input, &AbstPlan::preserve(), fuel) {
                ExecOutcome::Success { output, .. } => {
                    let shown: Vec<String> = output.iter().map(|o| o.to_string()).collect();
                    emit(out, &format!("{}\n", shown.join(" ")));
                    Ok(EXIT_OK)
                }
                ExecOutcome::Bottom { cause, .. } => {
                    emit(out, &format!("bottom: {cause:?}\n"));
                    Ok(EXIT_NO_REPAIR)
                }
            }
        }
        Command::Localize { defect, fuel } => {
            let d = Defect::load(&defect)?;
            let mut text = String::from("label\ta\tb\tc\trank\n");
            for (i, r) in rank(&d.buggy, &d.neg, &d.pos, fuel).iter().enumerate() {
                text.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    r.label,
                    r.score.a,
                    r.score.b,
                    r.score.c,
                    i + 1
                ));
            }
            emit(out, &text);
            Ok(EXIT_OK)
        }
        Command::Space {
            defect,
            space,
            dump,
        } => {
            let d = Defect::load(&defect)?;
            let cfg = RepairConfig {
                space: space.config(),
                ..RepairConfig::default()
            };
            let templates = repair_space(&d.buggy, &d.neg, &d.pos, &cfg);
            match dump {
                None => {
                    let mut text = String::from("schema\ttemplates\n");
                    for (schema, n) in schema_counts(&templates) {
                        text.push_str(&format!("{schema}\t{n}\n"));
                    }
                    text.push_str(&format!("total\t{}\n", templates.len()));
                    emit(out, &text);
                }
                Some(Format::Tsv) => {
                    let mut text =
                        String::from("rank\ttier\tschema\ttarget\tprovenance\tprogram\n");
                    for (i, t) in templates.iter().enumerate() {
                        text.push_str(&format!(
                            "{}\t{}\t{}\t{}\t{}\t{}\n",
                            i + 1,
                            t.tier,
                            t.schema,
                            t.target,
                            t.provenance,
                            t.program.to_string().replace('\n', "\\n")
                        ));
                    }
                    emit(out, &text);
                }
                Some(Format::Json) => {
                    #[derive(Serialize)]
                    struct Row {
                        rank: usize,
                        tier: u8,
                        schema: String,
                        target: String,
                        provenance: String,
                        program: String,
                    }
                    let rows: Vec<Row> = templates
                        .iter()
                        .enumerate()
                        .map(|(i, t)| Row {
                            rank: i + 1,
                            tier: t.tier,
                            schema: t.schema.to_string(),
                            target: t.target.to_string(),
                            provenance: t.provenance.clone(),
                            program: t.program.to_string(),
                        })
                        .collect();
                    emit(out, &json_lines(&rows));
                }
            }
            Ok(EXIT_OK)
        }
        Command::Repair {
            defect,
            space,
            search,
            format,
            out: patch_out,
        } => {
            let d = Defect::load(&defect)?;
            let cfg = search.config(space.config());
            let report = par::with_jobs(search.jobs, || repair(&d.buggy, &d.neg, &d.pos, &cfg))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let diff = report.result.patch().map(|p| {
                let before = format!("{}\n", d.buggy);
                let after = format!("{}\n", p.program);
                TextDiff::from_lines(&before, &after)
                    .unified_diff()
                    .header("program.spr", "patched.spr")
                    .to_string()
            });
            if let (Some(path), Some(p)) = (&patch_out, report.result.patch()) {
                std::fs::write(path, format!("{}\n", p.program)).map_err(|source| {
                    CliError::Io {
                        path: path.clone(),
                        source,
                    }
                })?;
            }
            match format {
                Format::Json => {
                    let shown = RepairOutput {
                        id: &d.id,
                        report: &report,
                        diff: diff.clone(),
                    };
                    emit(
                        out,
                        &(serde_json::to_string_pretty(&shown).expect("serializes") + "\n"),
                    );
                }
                Format::Tsv => {
                    let s = &report.stats;
                    let (found, rank) = match &report.result {
                        RepairResult::Found { plausible_rank, .. } => {
                            ("yes", plausible_rank.to_string())
                        }
                        RepairResult::NotFound { .. } => ("no", "-".to_string()),
                    };
                    let mut text = String::from(
                        "id\tfound\tplausible_rank\ttemplates_evaluated\tstage2_entries\tabstc_templates\tspace_size\n",
                    );
                    text.push_str(&format!(
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                        d.id,
                        found,
                        rank,
                        s.templates_evaluated,
                        s.stage2_entries,
                        s.abstc_templates_evaluated,
                        s.space_size
                    ));
                    if let (Some(p), Some(diff)) = (report.result.patch(), &diff) {
                        text.push_str(&format!("\n{}\n\n{diff}", p.program));
                    }
                    emit(out, &text);
                }
            }
            Ok(if report.result.patch().is_some() {
                EXIT_OK
            } else {
                EXIT_NO_REPAIR
            })
        }
        Command::Analyze {
            path,
            space,
            search,
            budget,
            format,
            fuzz,
        } => {
            let defects = load_defects(&path)?;
            let cfg = search.config(space.config());
            let walks = par::with_jobs(search.jobs, || walks(&defects, &cfg, &fuzz.config()));
            let rows: Vec<DefectRow> = walks
                .iter()
                .map(|w| DefectRow::new(&w.space_report(), &w.explore(budget, Order::SprTiers)))
                .collect();
            match format {
                Format::Tsv => emit(out, &rows_tsv(&rows)),
                Format::Json => emit(out, &json_lines(&rows)),
            }
            Ok(EXIT_OK)
        }
        Command::Explore {
            path,
            space,
            search,
            budget,
            order,
            fuzz,
        } => {
            let defects = load_defects(&path)?;
            let cfg = search.config(space.config());
            let walks = par::with_jobs(search.jobs, || walks(&defects, &cfg, &fuzz.config()));
            let order = match order {
                OrderArg::Spr => Order::SprTiers,
                OrderArg::Random => Order::Random(fuzz.seed),
            };
            let reports: Vec<_> = walks.iter().map(|w| w.explore(budget, order)).collect();
            emit(out, &json_lines(&reports));
            Ok(EXIT_OK)
        }
        Command::CompareOrders {
            corpus,
            space,
            search,
            budget,
            k,
            seeds,
            format,
            fuzz,
        } => {
            if k == 0 {
                return Err(CliError::Usage("review depth k must be at least 1".into()));
            }
            let defects = load_defects(&corpus)?;
            let cfg = search.config(space.config());
            let walks = par::with_jobs(search.jobs, || walks(&defects, &cfg, &fuzz.config()));
            let cmp = compare_orders(&walks, budget, k, seeds, fuzz.seed);
            match format {
                Format::Tsv => emit(out, &orders_tsv(&cmp)),
                Format::Json => emit(
                    out,
                    &(serde_json::to_string_pretty(&cmp).expect("serializes") + "\n"),
                ),
            }
            Ok(EXIT_OK)
        }
    }
}
