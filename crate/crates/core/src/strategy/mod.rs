//! Computable strategies and the calculus of consistent runs.
//!
//! A [`StrategyMachine`] never sees a position directly. It is driven by a
//! [`Tracker`], which builds a finite [`MachineState`] from the tail of a
//! history and then advances it one action at a time. Every machine state
//! reached from a tail-only history far enough back depends on the stage
//! parity alone; [`StrategyMachine::horizon`] says how far back that is.

mod consistency;
mod equilibrium;
mod strong;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{
    alternating_player, window_code, ActionId, GameSpec, Parity, PlayerId, Position, Run, StageIndex, TailClass,
    TailPattern, TurnFunction,
};
use crate::winlose::ValueTable;
use crate::winset::{AutState, Automaton};

pub use consistency::{
    anchors_for, consistent_run_in_segment, enumerate_consistent_runs, is_consistent, ConsistencyReport,
    ConsistencyVerdict,
};
pub use equilibrium::{check_equilibrium, EquilibriumVerdict};
pub use strong::{
    build_pinning_profile, check_strong, deviation_family, escort_machine, strengthen, turn_recurs_for_two_players,
    StrongVerdict,
};

/// Which previous actions a [`StrategyMachine::TailAware`] rule inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailScope {
    /// Only the stages where the owner moved.
    Own,
    Any,
}

/// Replays the winner's side of a win-lose game: the lowest action keeping
/// the owner winning the game whose automaton is stored, given everything
/// played since `start` (or since the beginning of time when `start` is
/// `None`). Before `start` it plays `before`.
pub struct SubgameTable {
    pub owner: PlayerId,
    pub start: Option<StageIndex>,
    pub before: ActionId,
    /// Tail whose action is tried first at every stage.
    pub preferred: Option<TailPattern>,
    values: ValueTable,
}

impl SubgameTable {
    pub fn new(
        owner: PlayerId,
        automaton: Automaton,
        start: Option<StageIndex>,
        before: ActionId,
        preferred: Option<TailPattern>,
    ) -> SubgameTable {
        SubgameTable { owner, start, before, preferred, values: ValueTable::new(automaton) }
    }

    pub fn automaton(&self) -> &Automaton {
        self.values.automaton()
    }

    pub fn values(&self) -> &ValueTable {
        &self.values
    }

    fn decide(&self, state: &Option<AutState>, k: StageIndex) -> ActionId {
        match state {
            None => self.before,
            Some(s) => {
                let preferred = self.preferred.and_then(|t| t.class_at(k).constant());
                self.values.winning_action(k, s, self.owner, preferred).unwrap_or(self.before)
            }
        }
    }
}

impl fmt::Debug for SubgameTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubgameTable")
            .field("owner", &self.owner)
            .field("start", &self.start)
            .field("before", &self.before)
            .field("preferred", &self.preferred)
            .field("automaton", self.automaton())
            .finish()
    }
}

impl PartialEq for SubgameTable {
    fn eq(&self, o: &SubgameTable) -> bool {
        self.owner == o.owner
            && self.start == o.start
            && self.before == o.before
            && self.preferred == o.preferred
            && self.automaton() == o.automaton()
    }
}

impl Eq for SubgameTable {}

/// Stage-dependent play on a finite window of stages: from `start` on, the
/// action is looked up by stage and the last `memory` actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagedTable {
    pub owner: PlayerId,
    pub start: StageIndex,
    /// Actions before `start` and at missing entries, by stage parity.
    pub before: [ActionId; 2],
    pub memory: usize,
    pub alphabet: usize,
    pub table: BTreeMap<(StageIndex, usize), ActionId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyMachine {
    /// `table[code(last memory actions) * 2 + parity]`.
    FiniteMemory { owner: PlayerId, memory: usize, table: Vec<ActionId> },
    /// Plays `when_all` if every previous action in scope was `symbol`.
    TailAware { owner: PlayerId, scope: TailScope, symbol: ActionId, when_all: ActionId, fallback: Box<StrategyMachine> },
    /// Plays `target` along its prefixes and `escort` elsewhere.
    RunPinning { owner: PlayerId, target: Run, escort: Box<StrategyMachine> },
    /// Plays `target` along its prefixes, `in_segment` once someone left it
    /// inside its segment, and `off_segment` in every other segment.
    Composite { owner: PlayerId, target: Run, in_segment: Box<StrategyMachine>, off_segment: Box<StrategyMachine> },
    Subgame(Arc<SubgameTable>),
    StagedTable(Arc<StagedTable>),
}

impl StrategyMachine {
    pub fn constant(owner: PlayerId, a: ActionId) -> StrategyMachine {
        StrategyMachine::FiniteMemory { owner, memory: 0, table: vec![a, a] }
    }

    pub fn pinning(target: Run, escort: StrategyMachine) -> StrategyMachine {
        StrategyMachine::RunPinning { owner: escort.owner(), target, escort: Box::new(escort) }
    }

    pub fn composite(target: Run, in_segment: StrategyMachine, off_segment: StrategyMachine) -> StrategyMachine {
        StrategyMachine::Composite {
            owner: in_segment.owner(),
            target,
            in_segment: Box::new(in_segment),
            off_segment: Box::new(off_segment),
        }
    }

    /// Plays the previous action.
    pub fn repeat_previous(owner: PlayerId, alphabet: usize) -> StrategyMachine {
        let table = (0..alphabet).flat_map(|a| [a as ActionId, a as ActionId]).collect();
        StrategyMachine::FiniteMemory { owner, memory: 1, table }
    }

    pub fn owner(&self) -> PlayerId {
        match self {
            StrategyMachine::FiniteMemory { owner, .. }
            | StrategyMachine::TailAware { owner, .. }
            | StrategyMachine::RunPinning { owner, .. }
            | StrategyMachine::Composite { owner, .. } => *owner,
            StrategyMachine::Subgame(t) => t.owner,
            StrategyMachine::StagedTable(t) => t.owner,
        }
    }

    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        if self.owner() >= game.players {
            return Err(Error::Malformed(format!("machine owned by missing player {}", self.owner() + 1)));
        }
        match self {
            StrategyMachine::FiniteMemory { memory, table, .. } => {
                let want = game.alphabet.checked_pow(*memory as u32).and_then(|n| n.checked_mul(2));
                if want != Some(table.len()) {
                    return Err(Error::Malformed(format!("finite-memory table has {} entries", table.len())));
                }
                table.iter().try_for_each(|&a| game.check_action(a))
            }
            StrategyMachine::TailAware { symbol, when_all, fallback, owner, .. } => {
                game.check_action(*symbol)?;
                game.check_action(*when_all)?;
                same_owner(*owner, fallback)?;
                fallback.validate(game)
            }
            StrategyMachine::RunPinning { target, escort, owner } => {
                game.check_tail(target.tail())?;
                same_owner(*owner, escort)?;
                escort.validate(game)
            }
            StrategyMachine::Composite { target, in_segment, off_segment, owner } => {
                game.check_tail(target.tail())?;
                same_owner(*owner, in_segment)?;
                same_owner(*owner, off_segment)?;
                in_segment.validate(game)?;
                off_segment.validate(game)
            }
            StrategyMachine::Subgame(t) => {
                if game.players != 2 || !game.turn.is_alternating() {
                    return Err(Error::Malformed("subgame machines need an alternating two-player game".into()));
                }
                game.check_action(t.before)
            }
            StrategyMachine::StagedTable(t) => {
                t.before.iter().try_for_each(|&a| game.check_action(a))?;
                t.table.values().try_for_each(|&a| game.check_action(a))
            }
        }
    }

    /// Machine state after the tail-only history ending before stage `t`.
    pub fn observe_tail(&self, tail: &TailPattern, t: StageIndex, game: &GameSpec) -> Result<MachineState> {
        Ok(match self {
            StrategyMachine::FiniteMemory { memory, .. } => MachineState::Window(tail_window(tail, t, *memory)?),
            StrategyMachine::StagedTable(st) => MachineState::Window(tail_window(tail, t, st.memory)?),
            StrategyMachine::TailAware { owner, scope, symbol, fallback, .. } => MachineState::Flag {
                all: tail_flag(game, tail, *owner, *scope, *symbol)?,
                fallback: Box::new(fallback.observe_tail(tail, t, game)?),
            },
            StrategyMachine::RunPinning { target, escort, .. } => MachineState::Pinned {
                on_run: Position::tail_only(t, *tail)?.is_prefix_of(target),
                escort: Box::new(escort.observe_tail(tail, t, game)?),
            },
            StrategyMachine::Composite { target, in_segment, off_segment, .. } => {
                let track = if Position::tail_only(t, *tail)?.is_prefix_of(target) {
                    Track::OnRun
                } else if tail == target.tail() {
                    Track::InSegment
                } else {
                    Track::OffSegment
                };
                MachineState::Composite {
                    track,
                    inner: Box::new(in_segment.observe_tail(tail, t, game)?),
                    off: Box::new(off_segment.observe_tail(tail, t, game)?),
                }
            }
            StrategyMachine::Subgame(st) => MachineState::Subgame(match st.start {
                None => Some(st.automaton().tail_state(tail, t)?),
                Some(n) if t < n => None,
                Some(n) => {
                    let word: Vec<ActionId> = (n..t).map(|k| tail.action_at(k)).collect::<Result<_>>()?;
                    Some(st.automaton().feed(st.automaton().fresh(), n, &word))
                }
            }),
        })
    }

    /// State after `actor` plays `a` at stage `k`.
    pub fn advance(&self, s: &MachineState, k: StageIndex, actor: PlayerId, a: ActionId) -> Result<MachineState> {
        Ok(match (self, s) {
            (StrategyMachine::FiniteMemory { .. }, MachineState::Window(w))
            | (StrategyMachine::StagedTable(_), MachineState::Window(w)) => MachineState::Window(shift(w, a)),
            (StrategyMachine::TailAware { owner, scope, symbol, fallback, .. }, MachineState::Flag { all, fallback: fs }) => {
                let counts = *scope == TailScope::Any || actor == *owner;
                MachineState::Flag {
                    all: *all && (!counts || a == *symbol),
                    fallback: Box::new(fallback.advance(fs, k, actor, a)?),
                }
            }
            (StrategyMachine::RunPinning { target, escort, .. }, MachineState::Pinned { on_run, escort: es }) => {
                MachineState::Pinned {
                    on_run: *on_run && target.action_at(k)? == a,
                    escort: Box::new(escort.advance(es, k, actor, a)?),
                }
            }
            (
                StrategyMachine::Composite { target, in_segment, off_segment, .. },
                MachineState::Composite { track, inner, off },
            ) => {
                let track = match track {
                    Track::OnRun if target.action_at(k)? != a => Track::InSegment,
                    t => *t,
                };
                MachineState::Composite {
                    track,
                    inner: Box::new(in_segment.advance(inner, k, actor, a)?),
                    off: Box::new(off_segment.advance(off, k, actor, a)?),
                }
            }
            (StrategyMachine::Subgame(st), MachineState::Subgame(state)) => MachineState::Subgame(match (st.start, state) {
                (Some(n), _) if k + 1 < n => None,
                (Some(n), _) if k + 1 == n => Some(st.automaton().fresh()),
                (_, Some(s)) => Some(st.automaton().step(s, k, a)),
                (_, None) => return Err(Error::Malformed("subgame state lost its start".into())),
            }),
            _ => return Err(Error::Malformed("machine state does not belong to this machine".into())),
        })
    }

    /// The recommended action at stage `k` in state `s`.
    pub fn decide(&self, s: &MachineState, k: StageIndex) -> Result<ActionId> {
        Ok(match (self, s) {
            (StrategyMachine::FiniteMemory { table, memory, .. }, MachineState::Window(w)) => {
                let alphabet = if *memory == 0 { 1 } else { table_alphabet(table.len(), *memory) };
                table[window_code(w, alphabet) * 2 + Parity::of(k).index()]
            }
            (StrategyMachine::StagedTable(st), MachineState::Window(w)) => {
                let fallback = st.before[Parity::of(k).index()];
                if k < st.start {
                    fallback
                } else {
                    *st.table.get(&(k, window_code(w, st.alphabet))).unwrap_or(&fallback)
                }
            }
            (StrategyMachine::TailAware { when_all, fallback, .. }, MachineState::Flag { all, fallback: fs }) => {
                if *all {
                    *when_all
                } else {
                    fallback.decide(fs, k)?
                }
            }
            (StrategyMachine::RunPinning { target, escort, .. }, MachineState::Pinned { on_run, escort: es }) => {
                if *on_run {
                    target.action_at(k)?
                } else {
                    escort.decide(es, k)?
                }
            }
            (
                StrategyMachine::Composite { target, in_segment, off_segment, .. },
                MachineState::Composite { track, inner, off },
            ) => match track {
                Track::OnRun => target.action_at(k)?,
                Track::InSegment => in_segment.decide(inner, k)?,
                Track::OffSegment => off_segment.decide(off, k)?,
            },
            (StrategyMachine::Subgame(st), MachineState::Subgame(state)) => st.decide(state, k),
            _ => return Err(Error::Malformed("machine state does not belong to this machine".into())),
        })
    }

    /// Tail-only histories ending at a stage `<=` this one produce machine
    /// states and transitions that depend on parity only, and decisions
    /// described by [`StrategyMachine::deep_decision`].
    pub fn horizon(&self, tail: &TailPattern) -> StageIndex {
        match self {
            StrategyMachine::FiniteMemory { .. } => 0,
            StrategyMachine::TailAware { fallback, .. } => fallback.horizon(tail),
            StrategyMachine::RunPinning { target, escort, .. } => pinned_horizon(target, tail).min(escort.horizon(tail)),
            StrategyMachine::Composite { target, in_segment, off_segment, .. } => {
                pinned_horizon(target, tail).min(in_segment.horizon(tail)).min(off_segment.horizon(tail))
            }
            StrategyMachine::Subgame(st) => match st.start {
                Some(n) => n - 2,
                None => st.values().stable_below(),
            },
            StrategyMachine::StagedTable(st) => st.start - 2,
        }
    }

    /// What the machine plays at tail-only histories of `parity` below its
    /// horizon.
    pub fn deep_decision(&self, game: &GameSpec, tail: &TailPattern, parity: Parity) -> DeepDecision {
        match self {
            StrategyMachine::FiniteMemory { memory, table, .. } => {
                let mut window = Vec::with_capacity(*memory);
                for back in (1..=*memory).rev() {
                    let p = if back % 2 == 0 { parity } else { parity.flip() };
                    match tail.class(p) {
                        TailClass::Constant(a) => window.push(a),
                        TailClass::BothInfinitelyOften => return DeepDecision::Unknown,
                    }
                }
                let alphabet = if *memory == 0 { 1 } else { table_alphabet(table.len(), *memory) };
                DeepDecision::Action(table[window_code(&window, alphabet) * 2 + parity.index()])
            }
            StrategyMachine::TailAware { owner, scope, symbol, when_all, fallback } => {
                match tail_flag(game, tail, *owner, *scope, *symbol) {
                    Ok(true) => DeepDecision::Action(*when_all),
                    Ok(false) => fallback.deep_decision(game, tail, parity),
                    Err(_) => DeepDecision::Unknown,
                }
            }
            StrategyMachine::RunPinning { target, escort, .. } => {
                if tail == target.tail() {
                    DeepDecision::FollowTail
                } else {
                    escort.deep_decision(game, tail, parity)
                }
            }
            StrategyMachine::Composite { target, off_segment, .. } => {
                if tail == target.tail() {
                    DeepDecision::FollowTail
                } else {
                    off_segment.deep_decision(game, tail, parity)
                }
            }
            StrategyMachine::Subgame(st) => match st.start {
                Some(_) => DeepDecision::Action(st.before),
                None => DeepDecision::Unknown,
            },
            StrategyMachine::StagedTable(st) => DeepDecision::Action(st.before[parity.index()]),
        }
    }

    /// Subgame tables reachable inside this machine, in a fixed order.
    pub(crate) fn subgame_tables<'a>(&'a self, out: &mut Vec<&'a SubgameTable>) {
        match self {
            StrategyMachine::TailAware { fallback, .. } => fallback.subgame_tables(out),
            StrategyMachine::RunPinning { escort, .. } => escort.subgame_tables(out),
            StrategyMachine::Composite { in_segment, off_segment, .. } => {
                in_segment.subgame_tables(out);
                off_segment.subgame_tables(out);
            }
            StrategyMachine::Subgame(st) => out.push(st),
            _ => {}
        }
    }
}

fn same_owner(owner: PlayerId, inner: &StrategyMachine) -> Result<()> {
    if inner.owner() == owner {
        Ok(())
    } else {
        Err(Error::Malformed("nested machine has a different owner".into()))
    }
}

fn table_alphabet(len: usize, memory: usize) -> usize {
    let contexts = len / 2;
    let mut a = 1usize;
    while a.pow(memory as u32) < contexts {
        a += 1;
    }
    a
}

fn pinned_horizon(target: &Run, tail: &TailPattern) -> StageIndex {
    if tail == target.tail() {
        target.normalized().window_start() - 1
    } else {
        0
    }
}

fn tail_window(tail: &TailPattern, t: StageIndex, memory: usize) -> Result<Vec<ActionId>> {
    (t - memory as StageIndex..t).map(|k| tail.action_at(k)).collect()
}

fn shift(w: &[ActionId], a: ActionId) -> Vec<ActionId> {
    if w.is_empty() {
        return Vec::new();
    }
    let mut v = w[1..].to_vec();
    v.push(a);
    v
}

/// Whether every tail action in scope equals `symbol`.
fn tail_flag(game: &GameSpec, tail: &TailPattern, owner: PlayerId, scope: TailScope, symbol: ActionId) -> Result<bool> {
    for parity in [Parity::Even, Parity::Odd] {
        if scope == TailScope::Own && game.active_in_tail(tail, parity)? != owner {
            continue;
        }
        if tail.class(parity) != TailClass::Constant(symbol) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeepDecision {
    Action(ActionId),
    /// Plays whatever the tail plays.
    FollowTail,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Track {
    OnRun,
    InSegment,
    OffSegment,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MachineState {
    /// The last actions, oldest first.
    Window(Vec<ActionId>),
    Flag { all: bool, fallback: Box<MachineState> },
    Pinned { on_run: bool, escort: Box<MachineState> },
    Composite { track: Track, inner: Box<MachineState>, off: Box<MachineState> },
    /// `None` before the table's start stage.
    Subgame(Option<AutState>),
}

/// One machine per player, indexed by owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyProfile {
    pub machines: Vec<StrategyMachine>,
}

impl StrategyProfile {
    pub fn new(machines: Vec<StrategyMachine>) -> StrategyProfile {
        debug_assert!(machines.iter().enumerate().all(|(i, m)| m.owner() == i));
        StrategyProfile { machines }
    }

    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        if self.machines.len() != game.players {
            return Err(Error::Malformed(format!(
                "profile has {} machines for {} players",
                self.machines.len(),
                game.players
            )));
        }
        for (i, m) in self.machines.iter().enumerate() {
            if m.owner() != i {
                return Err(Error::Malformed(format!("machine {} is owned by player {}", i + 1, m.owner() + 1)));
            }
            m.validate(game)?;
        }
        Ok(())
    }

    /// The profile with player `i`'s machine replaced.
    pub fn with_machine(&self, m: StrategyMachine) -> StrategyProfile {
        let mut out = self.clone();
        let i = m.owner();
        out.machines[i] = m;
        out
    }

    pub(crate) fn subgame_tables(&self) -> Vec<&SubgameTable> {
        let mut out = Vec::new();
        for m in &self.machines {
            m.subgame_tables(&mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TurnState {
    Stateless,
    Window(Vec<ActionId>),
    /// Whether every action so far equals the predicate's symbol.
    Flag(bool),
}

/// Joint state of the turn function and every machine of a profile.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointState {
    pub turn: TurnState,
    pub machines: Vec<MachineState>,
}

/// Drives a profile through histories.
pub struct Tracker<'a> {
    pub game: &'a GameSpec,
    pub profile: &'a StrategyProfile,
}

impl<'a> Tracker<'a> {
    pub fn new(game: &'a GameSpec, profile: &'a StrategyProfile) -> Tracker<'a> {
        Tracker { game, profile }
    }

    pub fn observe_tail(&self, tail: &TailPattern, t: StageIndex) -> Result<JointState> {
        let turn = match &self.game.turn {
            TurnFunction::Alternating => TurnState::Stateless,
            TurnFunction::FiniteMemory { memory, .. } => TurnState::Window(tail_window(tail, t, *memory)?),
            TurnFunction::TailPredicate { symbol, .. } => TurnState::Flag(*tail == TailPattern::constant(*symbol)),
        };
        let machines =
            self.profile.machines.iter().map(|m| m.observe_tail(tail, t, self.game)).collect::<Result<_>>()?;
        Ok(JointState { turn, machines })
    }

    pub fn observe(&self, p: &Position) -> Result<JointState> {
        let mut j = self.observe_tail(p.tail(), p.window_start())?;
        for (k, a) in p.window_stages() {
            j = self.advance(&j, k, a)?;
        }
        Ok(j)
    }

    pub fn active(&self, j: &JointState, k: StageIndex) -> PlayerId {
        match (&self.game.turn, &j.turn) {
            (TurnFunction::Alternating, _) => alternating_player(Parity::of(k)),
            (TurnFunction::FiniteMemory { table, .. }, TurnState::Window(w)) => {
                table[window_code(w, self.game.alphabet) * 2 + Parity::of(k).index()]
            }
            (TurnFunction::TailPredicate { base, stage, switched, .. }, TurnState::Flag(all)) => {
                if k == *stage && *all {
                    *switched
                } else {
                    *base
                }
            }
            _ => unreachable!("turn state matches the turn function"),
        }
    }

    pub fn decide(&self, j: &JointState, k: StageIndex) -> Result<ActionId> {
        let i = self.active(j, k);
        self.profile.machines[i].decide(&j.machines[i], k)
    }

    pub fn decide_for(&self, i: PlayerId, j: &JointState, k: StageIndex) -> Result<ActionId> {
        self.profile.machines[i].decide(&j.machines[i], k)
    }

    pub fn advance(&self, j: &JointState, k: StageIndex, a: ActionId) -> Result<JointState> {
        let actor = self.active(j, k);
        let turn = match (&self.game.turn, &j.turn) {
            (TurnFunction::FiniteMemory { .. }, TurnState::Window(w)) => TurnState::Window(shift(w, a)),
            (TurnFunction::TailPredicate { symbol, .. }, TurnState::Flag(all)) => TurnState::Flag(*all && a == *symbol),
            (_, t) => t.clone(),
        };
        let machines = self
            .profile
            .machines
            .iter()
            .zip(&j.machines)
            .map(|(m, s)| m.advance(s, k, actor, a))
            .collect::<Result<_>>()?;
        Ok(JointState { turn, machines })
    }

    /// Tail-only histories at or below this stage are deep for every
    /// machine and for the turn function.
    pub fn horizon(&self, tail: &TailPattern) -> StageIndex {
        let turn = match &self.game.turn {
            TurnFunction::TailPredicate { stage, .. } => stage - 1,
            _ => 0,
        };
        self.profile.machines.iter().map(|m| m.horizon(tail)).fold(turn, StageIndex::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PayoffSpec, PLAYER_1, PLAYER_2};

    fn one_player() -> GameSpec {
        GameSpec {
            players: 1,
            alphabet: 2,
            turn: TurnFunction::single(PLAYER_1),
            payoff: PayoffSpec::Builtin("eq-no-strong".into()),
        }
    }

    #[test]
    fn repeat_previous_plays_the_last_action() {
        let g = one_player();
        let m = StrategyMachine::repeat_previous(PLAYER_1, 2);
        let s = m.observe_tail(&TailPattern::constant(1), -3, &g).unwrap();
        assert_eq!(m.decide(&s, -3).unwrap(), 1);
        let s = m.advance(&s, -3, PLAYER_1, 0).unwrap();
        assert_eq!(m.decide(&s, -2).unwrap(), 0);
    }

    #[test]
    fn tail_aware_flag_turns_off_after_other_letter() {
        let g = one_player();
        let m = StrategyMachine::TailAware {
            owner: PLAYER_1,
            scope: TailScope::Any,
            symbol: 1,
            when_all: 0,
            fallback: Box::new(StrategyMachine::constant(PLAYER_1, 1)),
        };
        let s = m.observe_tail(&TailPattern::constant(1), -2, &g).unwrap();
        assert_eq!(m.decide(&s, -2).unwrap(), 0);
        let s = m.advance(&s, -2, PLAYER_1, 0).unwrap();
        assert_eq!(m.decide(&s, -1).unwrap(), 1);
        assert_eq!(m.deep_decision(&g, &TailPattern::constant(1), Parity::Odd), DeepDecision::Action(0));
        assert_eq!(m.deep_decision(&g, &TailPattern::per_parity(1, 0), Parity::Odd), DeepDecision::Action(1));
    }

    #[test]
    fn pinning_leaves_target_after_mismatch() {
        let g = one_player();
        let target = Run::new(TailPattern::constant(0), vec![1, 0]).unwrap();
        let m = StrategyMachine::pinning(target, StrategyMachine::constant(PLAYER_1, 1));
        let s = m.observe_tail(&TailPattern::constant(0), -1, &g).unwrap();
        assert_eq!(m.decide(&s, -1).unwrap(), 1);
        let on = m.advance(&s, -1, PLAYER_1, 1).unwrap();
        assert_eq!(m.decide(&on, 0).unwrap(), 0);
        let off = m.advance(&s, -1, PLAYER_1, 0).unwrap();
        assert_eq!(m.decide(&off, 0).unwrap(), 1);
        assert_eq!(m.horizon(&TailPattern::constant(0)), -2);
    }

    #[test]
    fn tracker_follows_alternating_turns() {
        let g = GameSpec {
            players: 2,
            alphabet: 2,
            turn: TurnFunction::Alternating,
            payoff: PayoffSpec::WinLose(crate::winset::WinningSetSpec::Open(crate::winset::OpenSet::empty())),
        };
        let prof = StrategyProfile::new(vec![StrategyMachine::constant(PLAYER_1, 1), StrategyMachine::constant(PLAYER_2, 0)]);
        let t = Tracker::new(&g, &prof);
        let j = t.observe(&Position::tail_only(-1, TailPattern::constant(0)).unwrap()).unwrap();
        assert_eq!(t.active(&j, -1), PLAYER_2);
        assert_eq!(t.decide(&j, -1).unwrap(), 0);
        assert_eq!(t.decide(&j, 0).unwrap(), 1);
    }
}
