//! Two-player win-lose games with cylinder-generated winning sets.
//!
//! Everything here runs on [`ValueTable`]: `V_k(σ)` says whether player 1
//! wins the finite game on stages `k..=0` from automaton state `σ`. The
//! auxiliary game that starts at stage `n` is the table read from the fresh
//! state at `n`. Below the automaton's parity-stable stage the layer map
//! depends on parity only, so sequences of layers are eventually periodic
//! and questions about every stage reduce to cycle detection.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::model::{
    alternating_player, ActionId, GameSpec, Parity, PayoffSpec, PlayerId, Position, Run, StageIndex, TailPattern,
    TurnFunction, PLAYER_1, PLAYER_2,
};
use crate::strategy::{check_equilibrium, EquilibriumVerdict, StrategyMachine, StrategyProfile, SubgameTable};
use crate::winset::{AutState, Automaton, OpenSet, WinningSetSpec};

/// Default number of stages examined before a limit search gives up.
pub const DEFAULT_ITERATION_CAP: usize = 4096;
/// Default depth at which synthesized certificates are re-checked.
pub const DEFAULT_CHECK_DEPTH: u32 = 6;

/// Backward-induction values of the alternating game on an automaton.
pub struct ValueTable {
    automaton: Automaton,
    stable: StageIndex,
    states: Vec<AutState>,
    index: HashMap<AutState, usize>,
    /// `next[class][state * alphabet + a]`; classes are the deep even and odd
    /// stages followed by each shallow stage `stable+1..=0`.
    next: Vec<Vec<usize>>,
    layers: RwLock<Vec<Vec<bool>>>,
    stray: RwLock<HashMap<(StageIndex, AutState), bool>>,
}

impl std::fmt::Debug for ValueTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ValueTable").field("states", &self.states.len()).field("stable", &self.stable).finish()
    }
}

impl ValueTable {
    pub fn new(automaton: Automaton) -> ValueTable {
        ValueTable::with_seeds(automaton, &[])
    }

    /// Precomputes the closure of the fresh state and `seeds` under every
    /// stage's transitions.
    pub fn with_seeds(automaton: Automaton, seeds: &[AutState]) -> ValueTable {
        let stable = automaton.parity_stable_below();
        let classes = class_stages(stable);
        let mut states = Vec::new();
        let mut index = HashMap::new();
        let mut queue = VecDeque::new();
        for s in std::iter::once(automaton.fresh()).chain(seeds.iter().cloned()) {
            if !index.contains_key(&s) {
                index.insert(s.clone(), states.len());
                states.push(s.clone());
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &k in &classes {
                for a in 0..automaton.alphabet() {
                    let t = automaton.step(&s, k, a as ActionId);
                    if !index.contains_key(&t) {
                        index.insert(t.clone(), states.len());
                        states.push(t.clone());
                        queue.push_back(t);
                    }
                }
            }
        }
        let alphabet = automaton.alphabet();
        let next = classes
            .iter()
            .map(|&k| {
                let mut row = Vec::with_capacity(states.len() * alphabet);
                for s in &states {
                    for a in 0..alphabet {
                        row.push(index[&automaton.step(s, k, a as ActionId)]);
                    }
                }
                row
            })
            .collect();
        let accept: Vec<bool> = states.iter().map(|s| automaton.accepted(s)).collect();
        ValueTable {
            automaton,
            stable,
            states,
            index,
            next,
            layers: RwLock::new(vec![accept]),
            stray: RwLock::new(HashMap::new()),
        }
    }

    pub fn automaton(&self) -> &Automaton {
        &self.automaton
    }

    pub fn states(&self) -> &[AutState] {
        &self.states
    }

    pub fn index_of(&self, s: &AutState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Stages at or below this one share transitions by parity.
    pub fn stable_below(&self) -> StageIndex {
        self.stable
    }

    fn class_of(&self, k: StageIndex) -> usize {
        if k <= self.stable {
            Parity::of(k).index()
        } else {
            2 + (k - self.stable - 1) as usize
        }
    }

    pub fn successor(&self, k: StageIndex, state: usize, a: ActionId) -> usize {
        self.next[self.class_of(k)][state * self.automaton.alphabet() + a as usize]
    }

    fn ensure(&self, k: StageIndex) {
        let need = (1 - k) as usize;
        if self.layers.read().unwrap().len() > need {
            return;
        }
        let mut layers = self.layers.write().unwrap();
        let alphabet = self.automaton.alphabet();
        while layers.len() <= need {
            let stage = 1 - layers.len() as StageIndex;
            let above = layers.last().unwrap();
            let class = &self.next[self.class_of(stage)];
            let p1 = alternating_player(Parity::of(stage)) == PLAYER_1;
            let layer = (0..self.states.len())
                .map(|s| {
                    let mut outs = (0..alphabet).map(|a| above[class[s * alphabet + a]]);
                    if p1 {
                        outs.any(|v| v)
                    } else {
                        outs.all(|v| v)
                    }
                })
                .collect();
            layers.push(layer);
        }
    }

    /// `V_k` over [`ValueTable::states`]; `k = 1` is acceptance.
    pub fn layer(&self, k: StageIndex) -> Vec<bool> {
        self.ensure(k);
        self.layers.read().unwrap()[(1 - k) as usize].clone()
    }

    pub fn value_at(&self, k: StageIndex, state: usize) -> bool {
        self.ensure(k);
        self.layers.read().unwrap()[(1 - k) as usize][state]
    }

    /// Whether player 1 wins stages `k..=0` from `s`.
    pub fn value(&self, k: StageIndex, s: &AutState) -> bool {
        if let Some(i) = self.index_of(s) {
            return self.value_at(k, i);
        }
        if let Some(&v) = self.stray.read().unwrap().get(&(k, s.clone())) {
            return v;
        }
        let v = if k == 1 {
            self.automaton.accepted(s)
        } else {
            let mut outs = (0..self.automaton.alphabet()).map(|a| self.value(k + 1, &self.automaton.step(s, k, a as ActionId)));
            if alternating_player(Parity::of(k)) == PLAYER_1 {
                outs.any(|v| v)
            } else {
                outs.all(|v| v)
            }
        };
        self.stray.write().unwrap().insert((k, s.clone()), v);
        v
    }

    pub fn winner(&self, k: StageIndex, s: &AutState) -> PlayerId {
        if self.value(k, s) {
            PLAYER_1
        } else {
            PLAYER_2
        }
    }

    /// Lowest action keeping `player` winning at stage `k`, trying
    /// `preferred` first; `None` when `player` loses from `s`.
    pub fn winning_action(&self, k: StageIndex, s: &AutState, player: PlayerId, preferred: Option<ActionId>) -> Option<ActionId> {
        let good = |a: ActionId| {
            let v = self.value(k + 1, &self.automaton.step(s, k, a));
            (player == PLAYER_1) == v
        };
        if let Some(a) = preferred {
            if (a as usize) < self.automaton.alphabet() && good(a) {
                return Some(a);
            }
        }
        (0..self.automaton.alphabet() as ActionId).find(|&a| good(a))
    }
}

fn class_stages(stable: StageIndex) -> Vec<StageIndex> {
    let mut v = vec![Parity::Even.last_below(stable + 1), Parity::Odd.last_below(stable + 1)];
    v.extend(stable + 1..=0);
    v
}

/// Iterates `V_k` downward from `start` and stops once the layer sequence
/// repeats below the stable stage. `visit` returns `Some` to stop early.
pub(crate) fn scan_layers<T>(
    table: &ValueTable,
    start: StageIndex,
    cap: usize,
    mut visit: impl FnMut(StageIndex, &[bool]) -> Option<T>,
) -> LayerScan<T> {
    let mut seen: HashSet<(Parity, Vec<bool>)> = HashSet::new();
    let mut k = start;
    for _ in 0..cap {
        let layer = table.layer(k);
        if let Some(t) = visit(k, &layer) {
            return LayerScan::Stopped(t);
        }
        if k <= table.stable_below() && !seen.insert((Parity::of(k), layer)) {
            return LayerScan::Cycled;
        }
        k -= 1;
    }
    LayerScan::Capped(k + 1)
}

pub(crate) enum LayerScan<T> {
    Stopped(T),
    /// Every deeper layer repeats one already visited.
    Cycled,
    Capped(StageIndex),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxGameResult {
    pub winner: PlayerId,
    /// Winner's choices at every reachable position it controls.
    pub optimal_actions: BTreeMap<(StageIndex, AutState), ActionId>,
}

/// Solves the auxiliary game on stages `n..=0` from `entry`.
pub fn solve_aux_game(w: &OpenSet, alphabet: usize, n: StageIndex, entry: &AutState) -> Result<AuxGameResult> {
    if n > 0 {
        return Err(Error::PositiveStage(n));
    }
    let table = ValueTable::with_seeds(Automaton::new(vec![w.clone()], alphabet), std::slice::from_ref(entry));
    Ok(solve_on(&table, n, entry))
}

fn solve_on(table: &ValueTable, n: StageIndex, entry: &AutState) -> AuxGameResult {
    let winner = table.winner(n, entry);
    let mut optimal_actions = BTreeMap::new();
    let mut frontier = vec![entry.clone()];
    let automaton = table.automaton();
    for k in n..=0 {
        let mut next = Vec::new();
        let mut seen = HashSet::new();
        let mover = alternating_player(Parity::of(k));
        for s in frontier {
            // Only positions reached while the winner follows its choices.
            let actions: Vec<ActionId> = if mover == winner {
                let a = table.winning_action(k, &s, winner, None).expect("winner keeps a winning action");
                optimal_actions.insert((k, s.clone()), a);
                vec![a]
            } else {
                (0..automaton.alphabet() as ActionId).collect()
            };
            for a in actions {
                let t = automaton.step(&s, k, a);
                if seen.insert(t.clone()) {
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    AuxGameResult { winner, optimal_actions }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxLimit {
    /// Player 1 wins the auxiliary game from stage `n` and every earlier stage.
    FlipAt(StageIndex),
    Player2Forever,
    Player2DownTo(StageIndex),
}

/// Where, going back in time, player 1 first wins the auxiliary games
/// started from `entry`.
pub fn aux_winner_limit(w: &OpenSet, alphabet: usize, entry: &AutState) -> AuxLimit {
    aux_winner_limit_capped(w, alphabet, entry, DEFAULT_ITERATION_CAP)
}

pub fn aux_winner_limit_capped(w: &OpenSet, alphabet: usize, entry: &AutState, cap: usize) -> AuxLimit {
    let table = ValueTable::with_seeds(Automaton::new(vec![w.clone()], alphabet), std::slice::from_ref(entry));
    limit_on(&table, entry, cap)
}

fn limit_on(table: &ValueTable, entry: &AutState, cap: usize) -> AuxLimit {
    let i = table.index_of(entry).expect("entry is seeded");
    match scan_layers(table, 0, cap, |k, layer| layer[i].then_some(k)) {
        LayerScan::Stopped(k) => AuxLimit::FlipAt(k),
        LayerScan::Cycled => AuxLimit::Player2Forever,
        LayerScan::Capped(k) => AuxLimit::Player2DownTo(k),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenClass {
    Part1(StageIndex),
    Part2,
    Inconclusive(StageIndex),
}

pub fn classify_open(w: &OpenSet, alphabet: usize) -> OpenClass {
    classify_automaton(&Automaton::new(vec![w.clone()], alphabet), DEFAULT_ITERATION_CAP)
}

/// Classification for any product automaton; a conjunction of open sets is
/// open, and fresh product states present its auxiliary games.
pub fn classify_automaton(automaton: &Automaton, cap: usize) -> OpenClass {
    let table = ValueTable::new(automaton.clone());
    match limit_on(&table, &automaton.fresh(), cap) {
        AuxLimit::FlipAt(n) => OpenClass::Part1(n),
        AuxLimit::Player2Forever => OpenClass::Part2,
        AuxLimit::Player2DownTo(c) => OpenClass::Inconclusive(c),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WIndexValue {
    Stage(StageIndex),
    MinusInfinity,
    /// Player 1 already wins the auxiliary game started at the position's
    /// own stage, so no start makes player 2 win.
    NoneWinningForP2,
    UndeterminedBelow(StageIndex),
}

impl WIndexValue {
    /// Total order key: `MinusInfinity` lowest, the player-1 sentinel highest.
    pub fn order_key(&self) -> (i8, StageIndex) {
        match *self {
            WIndexValue::MinusInfinity => (0, 0),
            WIndexValue::UndeterminedBelow(c) => (1, c),
            WIndexValue::Stage(k) => (2, k),
            WIndexValue::NoneWinningForP2 => (3, 0),
        }
    }
}

impl std::fmt::Display for WIndexValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WIndexValue::Stage(k) => write!(f, "Stage({k})"),
            WIndexValue::MinusInfinity => write!(f, "MinusInfinity"),
            WIndexValue::NoneWinningForP2 => write!(f, "NoneWinningForP2"),
            WIndexValue::UndeterminedBelow(c) => write!(f, "UndeterminedBelow({c})"),
        }
    }
}

/// The w index of `p`: the least start stage of an auxiliary game that
/// player 2 wins from `p`.
pub fn compute_w(p: &Position, w: &OpenSet, alphabet: usize) -> Result<WIndexValue> {
    let table = ValueTable::new(Automaton::new(vec![w.clone()], alphabet));
    compute_w_on(&table, p, None)
}

/// As [`compute_w`], but never looks at starts below `cutoff`.
pub fn compute_w_with_cutoff(p: &Position, w: &OpenSet, alphabet: usize, cutoff: StageIndex) -> Result<WIndexValue> {
    let table = ValueTable::new(Automaton::new(vec![w.clone()], alphabet));
    compute_w_on(&table, p, Some(cutoff))
}

/// Starts at or below this stage induce the same state at `p`.
fn w_floor(table: &ValueTable, p: &Position) -> StageIndex {
    let l = table.automaton().max_len() as StageIndex;
    p.window_start().min(table.stable_below()) - 2 * l - 4
}

/// The auxiliary-game states induced by `p` for every start stage, paired
/// with the highest start producing each.
fn induced_states(table: &ValueTable, p: &Position) -> Result<Vec<(StageIndex, AutState)>> {
    if !p.tail().is_constant() {
        return Err(Error::Unsupported("the w index needs a constant tail".into()));
    }
    let n = p.stage();
    let floor = w_floor(table, p);
    let deep = p.materialize_from(floor)?;
    let mut out = Vec::new();
    for k in (floor..=n).rev() {
        let actions: Vec<ActionId> = (k..n).map(|j| deep.action_at(j)).collect::<Result<_>>()?;
        out.push((k, table.automaton().feed(table.automaton().fresh(), k, &actions)));
    }
    Ok(out)
}

pub(crate) fn compute_w_on(table: &ValueTable, p: &Position, cutoff: Option<StageIndex>) -> Result<WIndexValue> {
    let n = p.stage();
    let floor = w_floor(table, p);
    let stop = cutoff.map_or(floor, |c| c.max(floor));
    for (k, s) in induced_states(table, p)? {
        if k < stop {
            break;
        }
        if table.value(n, &s) {
            return Ok(if k == n { WIndexValue::NoneWinningForP2 } else { WIndexValue::Stage(k + 1) });
        }
    }
    if stop > floor {
        Ok(WIndexValue::UndeterminedBelow(stop))
    } else {
        Ok(WIndexValue::MinusInfinity)
    }
}

/// Winner of the finite subgame at `p`, by exhaustive minimax over every
/// completion; `player1_wins` decides each completed run.
pub fn winning_player(p: &Position, alphabet: usize, player1_wins: &dyn Fn(&Run) -> Result<bool>) -> Result<PlayerId> {
    fn go(p: &Position, alphabet: usize, f: &dyn Fn(&Run) -> Result<bool>) -> Result<bool> {
        let p1 = alternating_player(Parity::of(p.stage())) == PLAYER_1;
        for a in 0..alphabet as ActionId {
            let v = if p.stage() == 0 { f(&p.extend_to_run(a)?)? } else { go(&p.extend(a)?, alphabet, f)? };
            if v == p1 {
                return Ok(v);
            }
        }
        Ok(!p1)
    }
    Ok(if go(p, alphabet, player1_wins)? { PLAYER_1 } else { PLAYER_2 })
}

/// Winner at `p` of the game whose winning set is `w`, through the automaton.
pub fn winning_player_winlose(p: &Position, w: &WinningSetSpec, alphabet: usize) -> Result<PlayerId> {
    let a = w.automaton(alphabet);
    let entry = a.entry(p)?;
    Ok(ValueTable::new(a).winner(p.stage(), &entry))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank2Value {
    /// Player 1 wins the first `k` levels and loses level `k + 1`.
    Level(usize),
    /// Player 1 wins every one of the `K` levels.
    AllLevels(usize),
}

/// How many leading levels of the chain player 1 wins from `p`.
pub fn compute_w_rank2(p: &Position, chain: &[OpenSet], alphabet: usize) -> Result<Rank2Value> {
    for k in 1..=chain.len() {
        let a = Automaton::for_level(chain, k, alphabet);
        let entry = a.entry(p)?;
        if !ValueTable::new(a).value(p.stage(), &entry) {
            return Ok(Rank2Value::Level(k - 1));
        }
    }
    Ok(Rank2Value::AllLevels(chain.len()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateMode {
    ExactWinLose,
    Epsilon(crate::Rational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Winner(PlayerId),
    Payoffs(Vec<crate::Rational>),
}

#[derive(Debug, Clone)]
pub struct EquilibriumCertificate {
    pub profile: StrategyProfile,
    pub run: Run,
    pub mode: CertificateMode,
    pub verified_depth: u32,
    pub outcome: Outcome,
    /// The checker's verdict on `(profile, run)` at `verified_depth`.
    pub verdict: EquilibriumVerdict,
    /// Construction notes: classification, anchor, level.
    pub notes: Vec<String>,
}

/// The fixed action played wherever a construction leaves a choice open.
pub const FILLER_ACTION: ActionId = 0;

fn winlose_game(w: WinningSetSpec) -> GameSpec {
    GameSpec { players: 2, alphabet: 2, turn: TurnFunction::Alternating, payoff: PayoffSpec::WinLose(w) }
}

/// Game spec for a win-lose set over `alphabet` letters.
pub fn winlose_spec(w: WinningSetSpec, alphabet: usize) -> GameSpec {
    GameSpec { alphabet, ..winlose_game(w) }
}

/// Profile of an equilibrium in which `winner` wins along `run` and every
/// position of `run` is winning for `winner`: both follow `run`; after a
/// deviation in the segment the winner plays optimally.
pub fn winner_profile(run: &Run, winner: PlayerId, automaton: &Automaton) -> StrategyProfile {
    let optimal = StrategyMachine::Subgame(Arc::new(SubgameTable::new(winner, automaton.clone(), None, FILLER_ACTION, None)));
    let mut machines = vec![StrategyMachine::constant(PLAYER_1, FILLER_ACTION), StrategyMachine::constant(PLAYER_2, FILLER_ACTION)];
    let loser = 1 - winner;
    machines[winner] = StrategyMachine::composite(run.clone(), optimal, StrategyMachine::constant(winner, FILLER_ACTION));
    machines[loser] = StrategyMachine::composite(
        run.clone(),
        StrategyMachine::constant(loser, FILLER_ACTION),
        StrategyMachine::constant(loser, FILLER_ACTION),
    );
    StrategyProfile::new(machines)
}

/// An equilibrium of the win-lose game with open winning set `w`.
pub fn synthesize_equilibrium_open(w: &OpenSet, alphabet: usize) -> Result<EquilibriumCertificate> {
    synthesize_open_checked(w, alphabet, DEFAULT_CHECK_DEPTH)
}

pub fn synthesize_open_checked(w: &OpenSet, alphabet: usize, depth: u32) -> Result<EquilibriumCertificate> {
    let automaton = Automaton::new(vec![w.clone()], alphabet);
    let game = winlose_spec(WinningSetSpec::Open(w.clone()), alphabet);
    synthesize_on(&game, &automaton, depth, "open")
}

fn synthesize_on(game: &GameSpec, automaton: &Automaton, depth: u32, label: &str) -> Result<EquilibriumCertificate> {
    let table = ValueTable::new(automaton.clone());
    match limit_on(&table, &automaton.fresh(), DEFAULT_ITERATION_CAP) {
        AuxLimit::FlipAt(n) => part1(game, &table, n, depth, label),
        AuxLimit::Player2Forever => part2(game, &table, depth, label),
        AuxLimit::Player2DownTo(c) => {
            Err(Error::Inconclusive(format!("player 2 wins every auxiliary game down to stage {c}; no cycle yet")))
        }
    }
}

fn certify(
    game: &GameSpec,
    profile: StrategyProfile,
    run: Run,
    winner: PlayerId,
    depth: u32,
    notes: Vec<String>,
) -> Result<EquilibriumCertificate> {
    let verdict = check_equilibrium(game, &profile, &run, depth, None)?;
    Ok(EquilibriumCertificate {
        profile,
        run,
        mode: CertificateMode::ExactWinLose,
        verified_depth: depth,
        outcome: Outcome::Winner(winner),
        verdict,
        notes,
    })
}

/// Player 1 wins the auxiliary game from fresh at `n`: she plays the filler
/// before `n` and then wins that game; player 2 always plays the filler.
fn part1(game: &GameSpec, table: &ValueTable, n: StageIndex, depth: u32, label: &str) -> Result<EquilibriumCertificate> {
    let automaton = table.automaton();
    let mut window = Vec::new();
    let mut s = automaton.fresh();
    for k in n..=0 {
        let a = if alternating_player(Parity::of(k)) == PLAYER_1 {
            table.winning_action(k, &s, PLAYER_1, None).expect("player 1 wins from the fresh state")
        } else {
            FILLER_ACTION
        };
        s = automaton.step(&s, k, a);
        window.push(a);
    }
    let run = Run::new(TailPattern::constant(FILLER_ACTION), window)?;
    let p1 = StrategyMachine::Subgame(Arc::new(SubgameTable::new(PLAYER_1, automaton.clone(), Some(n), FILLER_ACTION, None)));
    let profile = StrategyProfile::new(vec![p1, StrategyMachine::constant(PLAYER_2, FILLER_ACTION)]);
    certify(game, profile, run, PLAYER_1, depth, vec![format!("{label}: player 1 wins every auxiliary game from stage {n}")])
}

/// Candidate tails for a player-2 run: player 1's letter fixed to the
/// filler first, every two-periodic tail afterwards.
fn part2_tails(alphabet: usize) -> Vec<TailPattern> {
    let mut out = Vec::new();
    for b in 0..alphabet as ActionId {
        out.push(TailPattern::per_parity(FILLER_ACTION, b));
    }
    for e in 0..alphabet as ActionId {
        for o in 0..alphabet as ActionId {
            let t = TailPattern::per_parity(e, o);
            if !out.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}

/// Every tail-only position at stage `<= anchor` has w index minus infinity.
fn tail_keeps_player2(table: &ValueTable, tail: TailPattern, anchor: StageIndex) -> Result<bool> {
    let mut sets = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let k = parity.last_below(anchor + 1);
        let p = Position::tail_only(k, tail)?;
        let mut idx: Vec<usize> = Vec::new();
        for (_, s) in induced_states(table, &p)? {
            match table.index_of(&s) {
                Some(i) => idx.push(i),
                None => return Err(Error::Inconclusive("induced state outside the value table".into())),
            }
        }
        idx.sort_unstable();
        idx.dedup();
        sets.push(idx);
    }
    let scan = scan_layers(table, anchor, DEFAULT_ITERATION_CAP, |k, layer| {
        sets[Parity::of(k).index()].iter().any(|&i| layer[i]).then_some(())
    });
    match scan {
        LayerScan::Stopped(()) => Ok(false),
        LayerScan::Cycled => Ok(true),
        LayerScan::Capped(c) => Err(Error::Inconclusive(format!("tail {tail}: no layer cycle by stage {c}"))),
    }
}

fn part2(game: &GameSpec, table: &ValueTable, depth: u32, label: &str) -> Result<EquilibriumCertificate> {
    let automaton = table.automaton();
    let anchor = table.stable_below() - 2;
    for tail in part2_tails(automaton.alphabet()) {
        if !tail_keeps_player2(table, tail, anchor)? {
            continue;
        }
        let mut p = Position::tail_only(anchor + 1, tail)?;
        let mut ok = true;
        for k in anchor + 1..=0 {
            let a = if alternating_player(Parity::of(k)) == PLAYER_2 {
                let mut chosen = None;
                for b in 0..automaton.alphabet() as ActionId {
                    let q = if k == 0 { p.clone() } else { p.extend(b)? };
                    if k == 0 || compute_w_on(table, &q, None)? == WIndexValue::MinusInfinity {
                        chosen = Some(b);
                        break;
                    }
                }
                match chosen {
                    Some(b) => b,
                    None => {
                        ok = false;
                        break;
                    }
                }
            } else {
                FILLER_ACTION
            };
            if k < 0 {
                p = p.extend(a)?;
            } else {
                let run = p.extend_to_run(a)?;
                if automaton.accepts_run(&run)? {
                    ok = false;
                    break;
                }
                let profile = winner_profile(&run, PLAYER_2, automaton);
                let notes = vec![format!("{label}: player 2 wins every auxiliary game; run keeps w at minus infinity on tail {tail}")];
                return certify(game, profile, run, PLAYER_2, depth, notes);
            }
        }
        if !ok {
            continue;
        }
    }
    Err(Error::Inconclusive(
        "no two-periodic tail keeps the w index at minus infinity; the run needs an aperiodic past".into(),
    ))
}

/// An equilibrium of the game whose winning set is the intersection of the chain.
pub fn synthesize_equilibrium_rank2(chain: &[OpenSet], alphabet: usize) -> Result<EquilibriumCertificate> {
    synthesize_rank2_checked(chain, alphabet, DEFAULT_CHECK_DEPTH)
}

pub fn synthesize_rank2_checked(chain: &[OpenSet], alphabet: usize, depth: u32) -> Result<EquilibriumCertificate> {
    if chain.is_empty() {
        return Err(Error::Malformed("empty chain".into()));
    }
    let game = winlose_spec(WinningSetSpec::GdeltaChain(chain.to_vec()), alphabet);
    let mut stages = Vec::new();
    for k in 1..=chain.len() {
        let level = Automaton::for_level(chain, k, alphabet);
        match classify_automaton(&level, DEFAULT_ITERATION_CAP) {
            OpenClass::Part2 => {
                let table = ValueTable::new(level);
                let mut cert = part2(&game, &table, depth, &format!("level {k}"))?;
                cert.notes.push(format!("case 1: level {k} of {} has a player-2 equilibrium", chain.len()));
                return Ok(cert);
            }
            OpenClass::Part1(n) => stages.push(n),
            OpenClass::Inconclusive(c) => {
                return Err(Error::Inconclusive(format!("level {k} undecided down to stage {c}")));
            }
        }
    }
    let automaton = Automaton::for_level(chain, chain.len(), alphabet);
    let table = ValueTable::new(automaton.clone());
    let anchor = *stages.iter().min().unwrap();
    let tail = TailPattern::constant(FILLER_ACTION);
    let mut p = Position::tail_only(anchor, tail)?;
    let mut s = automaton.entry(&p)?;
    let mut window = Vec::new();
    for k in anchor..=0 {
        let a = if alternating_player(Parity::of(k)) == PLAYER_1 {
            table
                .winning_action(k, &s, PLAYER_1, None)
                .ok_or_else(|| Error::Inconclusive(format!("player 1 lost every level at stage {k}")))?
        } else {
            FILLER_ACTION
        };
        s = automaton.step(&s, k, a);
        window.push(a);
        if k < 0 {
            p = p.extend(a)?;
        }
    }
    let run = Run::new(tail, window)?;
    let profile = winner_profile(&run, PLAYER_1, &automaton);
    let notes = vec![format!("case 2: every level has player-1 auxiliary wins; anchor stage {anchor}")];
    certify(&game, profile, run, PLAYER_1, depth, notes)
}

#[derive(Debug, Clone)]
pub struct SegmentValue {
    /// 1 when player 1 wins the restricted game, 0 when player 2 does.
    pub value: u8,
    pub winner: PlayerId,
    /// Winning strategy of `winner` that permits the segment.
    pub strategy: StrategyMachine,
}

/// Value of the game restricted to the segment of `anchor`.
pub fn segment_value(w: &WinningSetSpec, alphabet: usize, anchor: &Position) -> Result<SegmentValue> {
    let automaton = w.automaton(alphabet);
    let table = ValueTable::new(automaton.clone());
    let tail = *anchor.tail();
    let deep = table.stable_below() - 2;
    let mut entries = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let k = parity.last_below(deep + 1);
        entries.push(automaton.tail_state(&tail, k)?);
    }
    let mut shallow = None;
    for k in deep + 1..=0 {
        let e = automaton.tail_state(&tail, k)?;
        let v = table.value(k, &e);
        if *shallow.get_or_insert(v) != v {
            return Err(Error::Inconclusive(format!("tail-only positions of segment {tail} change winner at stage {k}")));
        }
    }
    let mut first = shallow;
    let scan = scan_layers(&table, deep, DEFAULT_ITERATION_CAP, |k, _| {
        let v = table.value(k, &entries[Parity::of(k).index()]);
        if *first.get_or_insert(v) != v {
            Some(k)
        } else {
            None
        }
    });
    match scan {
        LayerScan::Stopped(k) => {
            return Err(Error::Inconclusive(format!("tail-only positions of segment {tail} change winner at stage {k}")))
        }
        LayerScan::Capped(c) => {
            return Err(Error::Inconclusive(format!("segment {tail}: winners did not stabilize by stage {c}")))
        }
        LayerScan::Cycled => {}
    }
    let winner = if first.unwrap() { PLAYER_1 } else { PLAYER_2 };
    let table = SubgameTable::new(winner, automaton, None, FILLER_ACTION, Some(tail));
    Ok(SegmentValue {
        value: u8::from(winner == PLAYER_1),
        winner,
        strategy: StrategyMachine::Subgame(Arc::new(table)),
    })
}
