//! TOML game files.
//!
//! ```toml
//! players = 2
//! alphabet_size = 2
//! turn = "alternating"          # or "gallery:<id>", or a [turn.finite_memory] table
//!
//! [payoff]
//! kind = "winlose"
//! generators = [{ anchor = "odd", pattern = [1] }, { anchor = { stage = -2 }, pattern = [0] }]
//!
//! [[machines]]
//! kind = "finite_memory"
//! owner = 1
//! memory = 0
//! table = [0, 0]
//!
//! [run]
//! tail = "0:0"
//! window = [0]
//! ```
//!
//! Players are numbered from 1 in files. Rationals are strings such as
//! `"1/2"`. A tail is written `even:odd` with `*` for the infinitely-often
//! class. `payoff = "gallery:<id>"` selects a catalogue payoff.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::continuous::DiscountedPayoff;
use crate::error::{Error, Result};
use crate::model::{
    ActionId, GameSpec, Parity, PayoffSpec, PlayerId, Position, Run, StageIndex, TailClass, TailPattern, TurnFunction,
};
use crate::strategy::{StagedTable, StrategyMachine, StrategyProfile, SubgameTable, TailScope};
use crate::winset::{Anchor, CylinderGenerator, OpenSet, WinningSetSpec};
use crate::{gallery, Rational};

/// A parsed game file: the game, optionally a profile and a run.
#[derive(Debug, Clone, PartialEq)]
pub struct GameDocument {
    pub game: GameSpec,
    pub profile: Option<StrategyProfile>,
    pub run: Option<Run>,
}

impl GameDocument {
    pub fn new(game: GameSpec) -> GameDocument {
        GameDocument { game, profile: None, run: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDto {
    players: usize,
    alphabet_size: usize,
    turn: TurnDto,
    payoff: PayoffField,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    machines: Vec<MachineDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run: Option<RunDto>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum TurnDto {
    Named(String),
    FiniteMemory { finite_memory: FiniteMemoryTurn },
    TailPredicate { tail_predicate: TailPredicateTurn },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FiniteMemoryTurn {
    memory: usize,
    /// Indexed by `window_code * 2 + parity`, parity 0 for even stages.
    table: Vec<PlayerId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailPredicateTurn {
    base: PlayerId,
    stage: StageIndex,
    symbol: ActionId,
    switched: PlayerId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum PayoffField {
    Named(String),
    Table(PayoffDto),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PayoffDto {
    Winlose {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generators: Option<Vec<GeneratorDto>>,
        /// A G-delta chain: level `k` is the intersection of the first `k` sets.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        levels: Option<Vec<Vec<GeneratorDto>>>,
    },
    Discounted {
        delta: String,
        /// `g[recipient][actor][action]`.
        g: Vec<Vec<Vec<String>>>,
    },
    Gallery {
        id: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorDto {
    anchor: AnchorDto,
    pattern: Vec<ActionId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum AnchorDto {
    Named(String),
    Stage {
        stage: StageIndex,
    },
    AtMost {
        at_most: StageIndex,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parity: Option<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunDto {
    tail: String,
    #[serde(default)]
    window: Vec<ActionId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum MachineDto {
    FiniteMemory {
        owner: PlayerId,
        memory: usize,
        table: Vec<ActionId>,
    },
    TailAware {
        owner: PlayerId,
        scope: String,
        symbol: ActionId,
        when_all: ActionId,
        fallback: Box<MachineDto>,
    },
    Pinning {
        target: RunDto,
        escort: Box<MachineDto>,
    },
    Composite {
        target: RunDto,
        in_segment: Box<MachineDto>,
        off_segment: Box<MachineDto>,
    },
    Subgame {
        owner: PlayerId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<StageIndex>,
        before: ActionId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        preferred: Option<String>,
    },
    Staged {
        owner: PlayerId,
        start: StageIndex,
        /// Actions at even and at odd stages before `start`.
        before: [ActionId; 2],
        memory: usize,
        /// `[stage, window_code, action]` triples.
        entries: Vec<[i64; 3]>,
    },
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn player_from_file(p: PlayerId, what: &str) -> Result<PlayerId> {
    p.checked_sub(1).ok_or_else(|| Error::Parse(format!("{what}: players are numbered from 1")))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    s.trim().parse::<Rational>().map_err(|e| Error::Parse(format!("`{s}` is not a rational: {e}")))
}

fn rational_text(q: &Rational) -> String {
    q.to_string()
}

pub fn parse_tail(s: &str) -> Result<TailPattern> {
    let class = |part: &str| -> Result<TailClass> {
        match part.trim() {
            "*" => Ok(TailClass::BothInfinitelyOften),
            t => t.parse::<ActionId>().map(TailClass::Constant).map_err(|_| Error::Parse(format!("bad tail class `{t}`"))),
        }
    };
    match s.split_once(':') {
        Some((e, o)) => Ok(TailPattern::new(class(e)?, class(o)?)),
        None => {
            let c = class(s)?;
            Ok(TailPattern::new(c, c))
        }
    }
}

fn parse_parity(s: &str) -> Result<Parity> {
    match s {
        "even" => Ok(Parity::Even),
        "odd" => Ok(Parity::Odd),
        _ => Err(Error::Parse(format!("bad parity `{s}`"))),
    }
}

fn parity_text(p: Parity) -> String {
    match p {
        Parity::Even => "even".into(),
        Parity::Odd => "odd".into(),
    }
}

fn anchor_from(d: &AnchorDto) -> Result<Anchor> {
    Ok(match d {
        AnchorDto::Named(n) => match n.as_str() {
            "even" => Anchor::AllEven,
            "odd" => Anchor::AllOdd,
            "all" => Anchor::All,
            _ => return Err(Error::Parse(format!("bad anchor `{n}`"))),
        },
        AnchorDto::Stage { stage } => Anchor::Single(*stage),
        AnchorDto::AtMost { at_most, parity } => Anchor::AtMost(*at_most, parity.as_deref().map(parse_parity).transpose()?),
    })
}

fn anchor_to(a: &Anchor) -> AnchorDto {
    match a {
        Anchor::Single(n) => AnchorDto::Stage { stage: *n },
        Anchor::AllEven => AnchorDto::Named("even".into()),
        Anchor::AllOdd => AnchorDto::Named("odd".into()),
        Anchor::All => AnchorDto::Named("all".into()),
        Anchor::AtMost(n, p) => AnchorDto::AtMost { at_most: *n, parity: p.map(parity_text) },
    }
}

fn open_from(gs: &[GeneratorDto]) -> Result<OpenSet> {
    gs.iter()
        .map(|g| Ok(CylinderGenerator::new(anchor_from(&g.anchor)?, g.pattern.clone())))
        .collect::<Result<Vec<_>>>()
        .map(OpenSet::new)
}

fn open_to(o: &OpenSet) -> Vec<GeneratorDto> {
    o.generators.iter().map(|g| GeneratorDto { anchor: anchor_to(&g.anchor), pattern: g.pattern.clone() }).collect()
}

fn run_from(d: &RunDto) -> Result<Run> {
    let tail = parse_tail(&d.tail)?;
    if d.window.is_empty() {
        Run::from_tail(tail)
    } else {
        Run::new(tail, d.window.clone())
    }
}

fn run_to(r: &Run) -> RunDto {
    let n = r.normalized();
    RunDto { tail: n.tail().to_string(), window: n.window().to_vec() }
}

fn turn_from(d: &TurnDto) -> Result<TurnFunction> {
    Ok(match d {
        TurnDto::Named(n) if n == "alternating" => TurnFunction::Alternating,
        TurnDto::Named(n) => match n.strip_prefix("gallery:") {
            Some(id) => gallery::builtin_turn(id)?,
            None => return Err(Error::Parse(format!("bad turn `{n}`"))),
        },
        TurnDto::FiniteMemory { finite_memory: f } => TurnFunction::FiniteMemory {
            memory: f.memory,
            table: f.table.iter().map(|&p| player_from_file(p, "turn table")).collect::<Result<_>>()?,
        },
        TurnDto::TailPredicate { tail_predicate: t } => TurnFunction::TailPredicate {
            base: player_from_file(t.base, "tail predicate")?,
            stage: t.stage,
            symbol: t.symbol,
            switched: player_from_file(t.switched, "tail predicate")?,
        },
    })
}

fn turn_to(t: &TurnFunction) -> TurnDto {
    match t {
        TurnFunction::Alternating => TurnDto::Named("alternating".into()),
        TurnFunction::FiniteMemory { memory, table } => TurnDto::FiniteMemory {
            finite_memory: FiniteMemoryTurn { memory: *memory, table: table.iter().map(|p| p + 1).collect() },
        },
        TurnFunction::TailPredicate { base, stage, symbol, switched } => TurnDto::TailPredicate {
            tail_predicate: TailPredicateTurn { base: base + 1, stage: *stage, symbol: *symbol, switched: switched + 1 },
        },
    }
}

fn payoff_from(d: &PayoffField) -> Result<PayoffSpec> {
    let table = match d {
        PayoffField::Named(n) => {
            return match n.strip_prefix("gallery:") {
                Some(id) => Ok(PayoffSpec::Builtin(id.to_string())),
                None => Err(Error::Parse(format!("bad payoff `{n}`"))),
            }
        }
        PayoffField::Table(t) => t,
    };
    Ok(match table {
        PayoffDto::Winlose { generators: Some(g), levels: None } => PayoffSpec::WinLose(WinningSetSpec::Open(open_from(g)?)),
        PayoffDto::Winlose { generators: None, levels: Some(l) } => {
            PayoffSpec::WinLose(WinningSetSpec::GdeltaChain(l.iter().map(|g| open_from(g)).collect::<Result<_>>()?))
        }
        PayoffDto::Winlose { .. } => {
            return Err(Error::Parse("a win-lose payoff needs exactly one of `generators` and `levels`".into()))
        }
        PayoffDto::Discounted { delta, g } => PayoffSpec::Discounted(DiscountedPayoff::new(
            parse_rational(delta)?,
            g.iter()
                .map(|row| row.iter().map(|c| c.iter().map(|x| parse_rational(x)).collect()).collect())
                .collect::<Result<_>>()?,
        )),
        PayoffDto::Gallery { id } => PayoffSpec::Builtin(id.clone()),
    })
}

fn payoff_to(p: &PayoffSpec) -> PayoffField {
    PayoffField::Table(match p {
        PayoffSpec::WinLose(WinningSetSpec::Open(o)) => PayoffDto::Winlose { generators: Some(open_to(o)), levels: None },
        PayoffSpec::WinLose(WinningSetSpec::GdeltaChain(l)) => {
            PayoffDto::Winlose { generators: None, levels: Some(l.iter().map(open_to).collect()) }
        }
        PayoffSpec::Discounted(d) => PayoffDto::Discounted {
            delta: rational_text(&d.delta),
            g: d.g.iter().map(|row| row.iter().map(|c| c.iter().map(rational_text).collect()).collect()).collect(),
        },
        PayoffSpec::Builtin(id) => PayoffDto::Gallery { id: id.clone() },
    })
}

fn machine_from(d: &MachineDto, game: &GameSpec) -> Result<StrategyMachine> {
    Ok(match d {
        MachineDto::FiniteMemory { owner, memory, table } => {
            StrategyMachine::FiniteMemory { owner: player_from_file(*owner, "machine")?, memory: *memory, table: table.clone() }
        }
        MachineDto::TailAware { owner, scope, symbol, when_all, fallback } => StrategyMachine::TailAware {
            owner: player_from_file(*owner, "machine")?,
            scope: match scope.as_str() {
                "own" => TailScope::Own,
                "any" => TailScope::Any,
                _ => return Err(Error::Parse(format!("bad tail-aware scope `{scope}`"))),
            },
            symbol: *symbol,
            when_all: *when_all,
            fallback: Box::new(machine_from(fallback, game)?),
        },
        MachineDto::Pinning { target, escort } => StrategyMachine::pinning(run_from(target)?, machine_from(escort, game)?),
        MachineDto::Composite { target, in_segment, off_segment } => StrategyMachine::composite(
            run_from(target)?,
            machine_from(in_segment, game)?,
            machine_from(off_segment, game)?,
        ),
        MachineDto::Subgame { owner, start, before, preferred } => {
            let w = match &game.payoff {
                PayoffSpec::WinLose(w) => w,
                _ => return Err(Error::Parse("subgame machines need a win-lose payoff".into())),
            };
            StrategyMachine::Subgame(Arc::new(SubgameTable::new(
                player_from_file(*owner, "machine")?,
                w.automaton(game.alphabet),
                *start,
                *before,
                preferred.as_deref().map(parse_tail).transpose()?,
            )))
        }
        MachineDto::Staged { owner, start, before, memory, entries } => {
            let mut table = BTreeMap::new();
            for &[k, c, a] in entries {
                let c = usize::try_from(c).map_err(parse_err)?;
                let a = ActionId::try_from(a).map_err(parse_err)?;
                table.insert((k, c), a);
            }
            StrategyMachine::StagedTable(Arc::new(StagedTable {
                owner: player_from_file(*owner, "machine")?,
                start: *start,
                before: *before,
                memory: *memory,
                alphabet: game.alphabet,
                table,
            }))
        }
    })
}

fn machine_to(m: &StrategyMachine) -> MachineDto {
    match m {
        StrategyMachine::FiniteMemory { owner, memory, table } => {
            MachineDto::FiniteMemory { owner: owner + 1, memory: *memory, table: table.clone() }
        }
        StrategyMachine::TailAware { owner, scope, symbol, when_all, fallback } => MachineDto::TailAware {
            owner: owner + 1,
            scope: match scope {
                TailScope::Own => "own".into(),
                TailScope::Any => "any".into(),
            },
            symbol: *symbol,
            when_all: *when_all,
            fallback: Box::new(machine_to(fallback)),
        },
        StrategyMachine::RunPinning { target, escort, .. } => {
            MachineDto::Pinning { target: run_to(target), escort: Box::new(machine_to(escort)) }
        }
        StrategyMachine::Composite { target, in_segment, off_segment, .. } => MachineDto::Composite {
            target: run_to(target),
            in_segment: Box::new(machine_to(in_segment)),
            off_segment: Box::new(machine_to(off_segment)),
        },
        StrategyMachine::Subgame(t) => MachineDto::Subgame {
            owner: t.owner + 1,
            start: t.start,
            before: t.before,
            preferred: t.preferred.map(|p| p.to_string()),
        },
        StrategyMachine::StagedTable(t) => MachineDto::Staged {
            owner: t.owner + 1,
            start: t.start,
            before: t.before,
            memory: t.memory,
            entries: t.table.iter().map(|(&(k, c), &a)| [k, c as i64, a as i64]).collect(),
        },
    }
}

/// Tags a semantic error with the part of the file it came from.
fn at(section: String) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::Parse(m) => Error::Parse(format!("in `{section}`: {m}")),
        e => Error::Parse(format!("in `{section}`: {e}")),
    }
}

fn document_from(dto: &FileDto) -> Result<GameDocument> {
    let game = GameSpec {
        players: dto.players,
        alphabet: dto.alphabet_size,
        turn: turn_from(&dto.turn).map_err(at("turn".into()))?,
        payoff: payoff_from(&dto.payoff).map_err(at("payoff".into()))?,
    };
    game.validate().map_err(at("game".into()))?;
    let profile = if dto.machines.is_empty() {
        None
    } else {
        let mut machines = Vec::with_capacity(dto.machines.len());
        for (i, m) in dto.machines.iter().enumerate() {
            let m = machine_from(m, &game).map_err(at(format!("machines[{i}]")))?;
            m.validate(&game).map_err(at(format!("machines[{i}]")))?;
            machines.push(m);
        }
        let p = StrategyProfile::new(machines);
        p.validate(&game).map_err(at("machines".into()))?;
        Some(p)
    };
    let run = match &dto.run {
        Some(r) => {
            let r = run_from(r).map_err(at("run".into()))?;
            game.check_tail(r.tail()).map_err(at("run".into()))?;
            for (_, a) in r.window_stages() {
                game.check_action(a).map_err(at("run".into()))?;
            }
            Some(r)
        }
        None => None,
    };
    Ok(GameDocument { game, profile, run })
}

fn document_to(doc: &GameDocument) -> FileDto {
    FileDto {
        players: doc.game.players,
        alphabet_size: doc.game.alphabet,
        turn: turn_to(&doc.game.turn),
        payoff: payoff_to(&doc.game.payoff),
        machines: doc.profile.iter().flat_map(|p| p.machines.iter().map(machine_to)).collect(),
        run: doc.run.as_ref().map(run_to),
    }
}

pub fn parse_game(text: &str) -> Result<GameDocument> {
    let dto: FileDto = toml::from_str(text).map_err(parse_err)?;
    document_from(&dto)
}

pub fn serialize_game(doc: &GameDocument) -> Result<String> {
    toml::to_string(&document_to(doc)).map_err(parse_err)
}

pub fn read_game_file(path: &std::path::Path) -> Result<GameDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_game(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        e => e,
    })
}

/// The profile as the `machines` array of a game file.
pub fn profile_value(p: &StrategyProfile) -> Result<toml::Value> {
    machines_value(&p.machines)
}

/// Machines in the form of a game file's `machines` array.
pub fn machines_value(machines: &[StrategyMachine]) -> Result<toml::Value> {
    let machines: Vec<MachineDto> = machines.iter().map(machine_to).collect();
    toml::Value::try_from(machines).map_err(parse_err)
}

/// The run as the `run` table of a game file.
pub fn run_value(r: &Run) -> Result<toml::Value> {
    toml::Value::try_from(run_to(r)).map_err(parse_err)
}

pub fn position_text(p: &Position) -> String {
    format!("stage {} tail {} window {:?}", p.stage(), p.tail(), p.window())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::winlose::synthesize_equilibrium_open;

    const VALUELESS: &str = r#"
players = 2
alphabet_size = 2
turn = "alternating"

[payoff]
kind = "winlose"
generators = [{ anchor = "odd", pattern = [1] }]
"#;

    #[test]
    fn parses_the_valueless_game() {
        let doc = parse_game(VALUELESS).unwrap();
        assert_eq!(doc.game.players, 2);
        assert!(doc.game.turn.is_alternating());
        let o = OpenSet::new(vec![CylinderGenerator::new(Anchor::AllOdd, vec![1])]);
        assert_eq!(doc.game.payoff, PayoffSpec::WinLose(WinningSetSpec::Open(o)));
    }

    #[test]
    fn certificate_profiles_round_trip() {
        let doc = parse_game(VALUELESS).unwrap();
        let w = match &doc.game.payoff {
            PayoffSpec::WinLose(WinningSetSpec::Open(o)) => o.clone(),
            _ => unreachable!(),
        };
        let cert = synthesize_equilibrium_open(&w, 2).unwrap();
        let full = GameDocument { profile: Some(cert.profile.clone()), run: Some(cert.run.clone()), ..doc };
        let text = serialize_game(&full).unwrap();
        assert_eq!(parse_game(&text).unwrap(), full);
    }

    #[test]
    fn errors_carry_locations() {
        match parse_game("players = 2\nalphabet_size = \"two\"\n") {
            Err(Error::Parse(m)) => assert!(m.contains("line"), "{m}"),
            r => panic!("{r:?}"),
        }
        assert!(matches!(parse_game(&VALUELESS.replace("\"odd\"", "\"sideways\"")), Err(Error::Parse(_))));
        match parse_game(&VALUELESS.replace("pattern = [1]", "pattern = [3]")) {
            Err(Error::Parse(m)) => assert!(m.contains("`payoff`") || m.contains("`game`"), "{m}"),
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn tails() {
        assert_eq!(parse_tail("1:*").unwrap(), TailPattern::new(TailClass::Constant(1), TailClass::BothInfinitelyOften));
        assert_eq!(parse_tail("0").unwrap(), TailPattern::constant(0));
        assert!(parse_tail("x:0").is_err());
    }
}
