//! Command-line front end.
//!
//! Exit codes: 0 every claim verified, 1 counterexample found, 2
//! inconclusive, 3 input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use infpast::continuous::synthesize_eps_equilibrium;
use infpast::format::{machines_value, parse_rational, parse_tail, profile_value, read_game_file, run_value, serialize_game, GameDocument};
use infpast::gallery::{gallery_build, gallery_verify, GALLERY_IDS};
use infpast::strategy::{anchors_for, check_equilibrium, EquilibriumVerdict, check_strong, enumerate_consistent_runs, ConsistencyReport, StrongVerdict};
use infpast::winlose::{classify_open, compute_w, Outcome, segment_value, synthesize_open_checked, synthesize_rank2_checked, EquilibriumCertificate};
use infpast::winset::WinningSetSpec;
use infpast::{Error, PayoffSpec, Position, StageIndex, TailPattern};
use toml::{Table, Value};

pub const EXIT_VERIFIED: i32 = 0;
pub const EXIT_COUNTEREXAMPLE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "infpast", version, about = "Solve and verify games whose stages are the non-positive integers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equilibrium certificate of a win-lose game with an open or G-delta winning set.
    SolveWinlose {
        file: PathBuf,
        #[arg(long, default_value_t = 6)]
        depth: u32,
    },
    /// ε-equilibrium certificate of a discounted game.
    SolveDiscounted {
        file: PathBuf,
        #[arg(long)]
        epsilon: String,
    },
    /// The w index of a position of an open win-lose game.
    WIndex {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        stage: StageIndex,
        #[arg(long, default_value = "0:0")]
        tail: String,
        /// Actions right before the stage, oldest first, comma separated.
        #[arg(long, value_delimiter = ',')]
        window: Vec<u8>,
    },
    /// Value of the win-lose game restricted to the segment of a tail.
    SegmentValue {
        file: PathBuf,
        #[arg(long)]
        tail: String,
    },
    /// Checks the file's profile and run for profitable deviations.
    CheckEq {
        file: PathBuf,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Searches deviation machines against the file's profile.
    CheckStrong {
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: u32,
    },
    /// Consistent runs of the file's profile over every tail segment.
    Runs { file: PathBuf },
    /// Prints a catalogue game, or verifies its claims with --verify.
    Gallery {
        id: String,
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 6)]
        depth: u32,
    },
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::Unsupported(_) | Error::Inconclusive(_) | Error::Precondition(_) => EXIT_INCONCLUSIVE,
        _ => EXIT_INPUT,
    }
}

type Report = (String, i32);

/// Runs the command line and returns the exit code; reports go to `out`,
/// diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_VERIFIED };
            if code == EXIT_VERIFIED {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok((text, code)) => {
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_for(&e)
        }
    }
}

pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(args, &mut std::io::stdout(), &mut std::io::stderr())
}

fn render(t: Table) -> String {
    toml::to_string(&t).expect("tables serialize")
}

fn winlose_of(doc: &GameDocument) -> infpast::Result<&WinningSetSpec> {
    match &doc.game.payoff {
        PayoffSpec::WinLose(w) => Ok(w),
        _ => Err(Error::Malformed("this command needs a win-lose payoff".into())),
    }
}

/// The verdict as a table; players are numbered from 1 as in game files.
fn verdict_value(v: &EquilibriumVerdict) -> Value {
    let mut t = Table::new();
    let kind = match v {
        EquilibriumVerdict::Verified(depth) => {
            t.insert("depth".into(), Value::Integer((*depth).into()));
            "verified"
        }
        EquilibriumVerdict::ExactVerified => "exact",
        EquilibriumVerdict::CounterDeviation { stage, player, action } => {
            t.insert("stage".into(), Value::Integer(*stage));
            t.insert("player".into(), Value::Integer(*player as i64 + 1));
            t.insert("action".into(), Value::Integer((*action).into()));
            "counter-deviation"
        }
        EquilibriumVerdict::Inconsistent(stage) => {
            t.insert("stage".into(), Value::Integer(*stage));
            "inconsistent"
        }
    };
    t.insert("kind".into(), Value::String(kind.into()));
    Value::Table(t)
}

fn certificate_table(c: &EquilibriumCertificate) -> infpast::Result<Table> {
    let mut t = Table::new();
    t.insert("mode".into(), Value::String(format!("{:?}", c.mode)));
    t.insert("verified_depth".into(), Value::Integer(c.verified_depth.into()));
    match &c.outcome {
        Outcome::Winner(p) => t.insert("winner".into(), Value::Integer(*p as i64 + 1)),
        Outcome::Payoffs(v) => t.insert("payoffs".into(), Value::Array(v.iter().map(|q| Value::String(q.to_string())).collect())),
    };
    t.insert("verdict".into(), verdict_value(&c.verdict));
    t.insert("notes".into(), Value::Array(c.notes.iter().cloned().map(Value::String).collect()));
    t.insert("run".into(), run_value(&c.run)?);
    t.insert("machines".into(), profile_value(&c.profile)?);
    Ok(t)
}

fn dispatch(cmd: Command) -> infpast::Result<Report> {
    match cmd {
        Command::SolveWinlose { file, depth } => {
            let doc = read_game_file(&file)?;
            let alphabet = doc.game.alphabet;
            let (cert, class) = match winlose_of(&doc)? {
                WinningSetSpec::Open(o) => {
                    (synthesize_open_checked(o, alphabet, depth)?, format!("{:?}", classify_open(o, alphabet)))
                }
                WinningSetSpec::GdeltaChain(l) => (synthesize_rank2_checked(l, alphabet, depth)?, "GdeltaChain".into()),
            };
            let code = if cert.verdict.passed() { EXIT_VERIFIED } else { EXIT_COUNTEREXAMPLE };
            let mut t = certificate_table(&cert)?;
            t.insert("classification".into(), Value::String(class));
            Ok((render(t), code))
        }
        Command::SolveDiscounted { file, epsilon } => {
            let doc = read_game_file(&file)?;
            let eps = parse_rational(&epsilon)?;
            let cert = synthesize_eps_equilibrium(&doc.game, &eps)?;
            let mut t = Table::new();
            t.insert("epsilon".into(), Value::String(cert.epsilon.to_string()));
            t.insert("truncation_depth".into(), Value::Integer(cert.truncation_depth.into()));
            t.insert("induction_depth".into(), Value::Integer(cert.induction_depth.into()));
            t.insert("payoffs".into(), Value::Array(cert.payoffs.iter().map(|q| Value::String(q.to_string())).collect()));
            t.insert("verdict".into(), verdict_value(&cert.verdict));
            t.insert("run".into(), run_value(&cert.run)?);
            t.insert("machines".into(), profile_value(&cert.profile)?);
            Ok((render(t), EXIT_VERIFIED))
        }
        Command::WIndex { file, stage, tail, window } => {
            let doc = read_game_file(&file)?;
            let o = match winlose_of(&doc)? {
                WinningSetSpec::Open(o) => o,
                WinningSetSpec::GdeltaChain(_) => return Err(Error::Malformed("w-index needs an open winning set".into())),
            };
            let p = Position::new(stage, parse_tail(&tail)?, window)?;
            doc.game.check_tail(p.tail())?;
            for (_, a) in p.window_stages() {
                doc.game.check_action(a)?;
            }
            let w = compute_w(&p, o, doc.game.alphabet)?;
            let mut t = Table::new();
            t.insert("position".into(), Value::String(infpast::format::position_text(&p)));
            t.insert("w".into(), Value::String(w.to_string()));
            Ok((render(t), EXIT_VERIFIED))
        }
        Command::SegmentValue { file, tail } => {
            let doc = read_game_file(&file)?;
            let w = winlose_of(&doc)?;
            let tail = parse_tail(&tail)?;
            doc.game.check_tail(&tail)?;
            let v = segment_value(w, doc.game.alphabet, &Position::tail_only(0, tail)?)?;
            let mut t = Table::new();
            t.insert("tail".into(), Value::String(tail.to_string()));
            t.insert("value".into(), Value::Integer(v.value.into()));
            t.insert("winner".into(), Value::Integer(v.winner as i64 + 1));
            t.insert("machines".into(), machines_value(std::slice::from_ref(&v.strategy))?);
            Ok((render(t), EXIT_VERIFIED))
        }
        Command::CheckEq { file, depth, epsilon } => {
            let doc = read_game_file(&file)?;
            let (s, r) = profile_and_run(&doc)?;
            let eps = epsilon.as_deref().map(parse_rational).transpose()?;
            let v = check_equilibrium(&doc.game, s, r, depth, eps.as_ref())?;
            let mut t = Table::new();
            t.insert("verdict".into(), verdict_value(&v));
            Ok((render(t), if v.passed() { EXIT_VERIFIED } else { EXIT_COUNTEREXAMPLE }))
        }
        Command::CheckStrong { file, depth } => {
            let doc = read_game_file(&file)?;
            let s = doc.profile.as_ref().ok_or_else(|| Error::Malformed("the file has no machines".into()))?;
            let v = check_strong(&doc.game, s, depth, &anchors_for(&tested_tails(&doc)))?;
            let mut t = Table::new();
            let code = match &v {
                StrongVerdict::Verified { depth, machines_searched, undecided } => {
                    t.insert("verdict".into(), Value::String("verified".into()));
                    t.insert("depth".into(), Value::Integer((*depth).into()));
                    t.insert("machines_searched".into(), Value::Integer(*machines_searched as i64));
                    t.insert("undecided".into(), Value::Integer(*undecided as i64));
                    EXIT_VERIFIED
                }
                StrongVerdict::CounterExample { player, machine, run } => {
                    t.insert("verdict".into(), Value::String("counterexample".into()));
                    t.insert("player".into(), Value::Integer(*player as i64 + 1));
                    t.insert("run".into(), run_value(run)?);
                    t.insert("machines".into(), machines_value(std::slice::from_ref(machine))?);
                    EXIT_COUNTEREXAMPLE
                }
                StrongVerdict::NotUnique { permitted } => {
                    t.insert("verdict".into(), Value::String("not-unique".into()));
                    t.insert("permitted".into(), Value::Integer(*permitted as i64));
                    EXIT_COUNTEREXAMPLE
                }
            };
            Ok((render(t), code))
        }
        Command::Runs { file } => {
            let doc = read_game_file(&file)?;
            let s = doc.profile.as_ref().ok_or_else(|| Error::Malformed("the file has no machines".into()))?;
            let report = enumerate_consistent_runs(&doc.game, s, &anchors_for(&tested_tails(&doc)))?;
            let mut t = Table::new();
            let (runs, exhaustive) = match &report {
                ConsistencyReport::Empty => (Vec::new(), true),
                ConsistencyReport::Unique(r) => (vec![r.clone()], true),
                ConsistencyReport::Multiple { runs, exhaustive_for_anchors } => (runs.clone(), *exhaustive_for_anchors),
                ConsistencyReport::NotPermitted(_) => (Vec::new(), true),
            };
            t.insert("exhaustive".into(), Value::Boolean(exhaustive));
            t.insert("runs".into(), Value::Array(runs.iter().map(run_value).collect::<infpast::Result<_>>()?));
            Ok((render(t), if exhaustive { EXIT_VERIFIED } else { EXIT_INCONCLUSIVE }))
        }
        Command::Gallery { id, verify, depth } => {
            if !GALLERY_IDS.contains(&id.as_str()) {
                return Err(Error::UnknownGallery(format!("{id} (known: {})", GALLERY_IDS.join(", "))));
            }
            if !verify {
                return Ok((serialize_game(&gallery_build(&id)?)?, EXIT_VERIFIED));
            }
            let rep = gallery_verify(&id, depth)?;
            let code = if rep.passed() {
                EXIT_VERIFIED
            } else if rep.failed() {
                EXIT_COUNTEREXAMPLE
            } else {
                EXIT_INCONCLUSIVE
            };
            Ok((rep.render(), code))
        }
    }
}

fn profile_and_run(doc: &GameDocument) -> infpast::Result<(&infpast::strategy::StrategyProfile, &infpast::Run)> {
    let s = doc.profile.as_ref().ok_or_else(|| Error::Malformed("the file has no machines".into()))?;
    let r = doc.run.as_ref().ok_or_else(|| Error::Malformed("the file has no run".into()))?;
    Ok((s, r))
}

/// Tail segments the game admits.
fn tested_tails(doc: &GameDocument) -> Vec<TailPattern> {
    TailPattern::all_binary(true).into_iter().filter(|t| doc.game.check_tail(t).is_ok()).collect()
}
