//! Finite stand-ins for the objects of a game with infinite past.
//!
//! Stages are the non-positive integers and stage 0 is terminal. A history
//! is a [`TailPattern`] covering every stage before `window_start` plus an
//! explicit window of actions. Positions end just before their stage; runs
//! end with stage 0.

use std::fmt;
use std::hash::{Hash, Hasher};

use crate::continuous::DiscountedPayoff;
use crate::error::{Error, Result};
use crate::winset::WinningSetSpec;

/// A stage; always `<= 0`.
pub type StageIndex = i64;
/// An index into the action alphabet.
pub type ActionId = u8;
/// Zero-based player index; player 1 of the literature is `0`.
pub type PlayerId = usize;

pub const PLAYER_1: PlayerId = 0;
pub const PLAYER_2: PlayerId = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(stage: StageIndex) -> Parity {
        if stage.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn index(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    /// Largest stage strictly below `bound` with this parity.
    pub fn last_below(self, bound: StageIndex) -> StageIndex {
        let k = bound - 1;
        if Parity::of(k) == self {
            k
        } else {
            k - 1
        }
    }
}

/// How the actions at one stage parity behave in the infinite past.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TailClass {
    Constant(ActionId),
    /// Both letters of a two-letter alphabet occur infinitely often. Such a
    /// class has no concrete actions and can never be materialized.
    BothInfinitelyOften,
}

impl TailClass {
    pub fn constant(self) -> Option<ActionId> {
        match self {
            TailClass::Constant(a) => Some(a),
            TailClass::BothInfinitelyOften => None,
        }
    }
}

impl fmt::Display for TailClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailClass::Constant(a) => write!(f, "{a}"),
            TailClass::BothInfinitelyOften => write!(f, "*"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TailPattern {
    pub even: TailClass,
    pub odd: TailClass,
}

impl TailPattern {
    pub fn constant(a: ActionId) -> TailPattern {
        TailPattern { even: TailClass::Constant(a), odd: TailClass::Constant(a) }
    }

    pub fn new(even: TailClass, odd: TailClass) -> TailPattern {
        TailPattern { even, odd }
    }

    pub fn per_parity(even: ActionId, odd: ActionId) -> TailPattern {
        TailPattern::new(TailClass::Constant(even), TailClass::Constant(odd))
    }

    pub fn class(&self, parity: Parity) -> TailClass {
        match parity {
            Parity::Even => self.even,
            Parity::Odd => self.odd,
        }
    }

    pub fn class_at(&self, stage: StageIndex) -> TailClass {
        self.class(Parity::of(stage))
    }

    /// The tail's action at `stage`, if its class there is constant.
    pub fn action_at(&self, stage: StageIndex) -> Result<ActionId> {
        self.class_at(stage).constant().ok_or(Error::TailNotMaterializable(stage))
    }

    pub fn is_constant(&self) -> bool {
        self.even.constant().is_some() && self.odd.constant().is_some()
    }

    pub fn has_both_infinitely_often(&self) -> bool {
        !self.is_constant()
    }

    /// Every tail pattern over a two-letter alphabet, constant classes first.
    pub fn all_binary(with_infinite: bool) -> Vec<TailPattern> {
        let mut classes = vec![TailClass::Constant(0), TailClass::Constant(1)];
        if with_infinite {
            classes.push(TailClass::BothInfinitelyOften);
        }
        let mut out = Vec::new();
        for &e in &classes {
            for &o in &classes {
                out.push(TailPattern::new(e, o));
            }
        }
        out.sort_by_key(|t| (t.has_both_infinitely_often(), *t));
        out
    }
}

impl fmt::Display for TailPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.even, self.odd)
    }
}

/// Returns the window of `window` starting at `window_start` with leftmost
/// entries dropped while they coincide with a constant tail.
fn normalize(tail: &TailPattern, mut start: StageIndex, window: &[ActionId], keep_from: StageIndex) -> (StageIndex, Vec<ActionId>) {
    let mut skip = 0;
    while start < keep_from {
        match tail.class_at(start) {
            TailClass::Constant(a) if a == window[skip] => {
                skip += 1;
                start += 1;
            }
            _ => break,
        }
    }
    (start, window[skip..].to_vec())
}

fn action_in(tail: &TailPattern, start: StageIndex, window: &[ActionId], stage: StageIndex) -> Result<ActionId> {
    if stage >= start {
        Ok(window[(stage - start) as usize])
    } else {
        tail.action_at(stage)
    }
}

/// A position at stage `n`: the tail plus actions at stages `window_start..n`.
#[derive(Debug, Clone)]
pub struct Position {
    stage: StageIndex,
    tail: TailPattern,
    window_start: StageIndex,
    window: Vec<ActionId>,
}

impl Position {
    /// The window occupies the stages immediately before `stage`.
    pub fn new(stage: StageIndex, tail: TailPattern, window: Vec<ActionId>) -> Result<Position> {
        if stage > 0 {
            return Err(Error::PositiveStage(stage));
        }
        let window_start = stage - window.len() as StageIndex;
        Ok(Position { stage, tail, window_start, window })
    }

    pub fn tail_only(stage: StageIndex, tail: TailPattern) -> Result<Position> {
        Position::new(stage, tail, Vec::new())
    }

    pub fn stage(&self) -> StageIndex {
        self.stage
    }

    pub fn tail(&self) -> &TailPattern {
        &self.tail
    }

    pub fn window_start(&self) -> StageIndex {
        self.window_start
    }

    pub fn window(&self) -> &[ActionId] {
        &self.window
    }

    /// The action played at `stage`, which must precede this position.
    pub fn action_at(&self, stage: StageIndex) -> Result<ActionId> {
        debug_assert!(stage < self.stage);
        action_in(&self.tail, self.window_start, &self.window, stage)
    }

    /// The same position with its window reaching back to `start`.
    pub fn materialize_from(&self, start: StageIndex) -> Result<Position> {
        if start >= self.window_start {
            return Ok(self.clone());
        }
        let mut window = Vec::with_capacity((self.stage - start) as usize);
        for k in start..self.window_start {
            window.push(self.tail.action_at(k)?);
        }
        window.extend_from_slice(&self.window);
        Ok(Position { stage: self.stage, tail: self.tail, window_start: start, window })
    }

    /// The position after `a` is played at this stage.
    pub fn extend(&self, a: ActionId) -> Result<Position> {
        if self.stage >= 0 {
            return Err(Error::StageOverflow);
        }
        let mut window = self.window.clone();
        window.push(a);
        Ok(Position { stage: self.stage + 1, tail: self.tail, window_start: self.window_start, window })
    }

    /// The run obtained by playing `a` at stage 0.
    pub fn extend_to_run(&self, a: ActionId) -> Result<Run> {
        if self.stage != 0 {
            return Err(Error::Precondition(format!("extend_to_run needs a stage-0 position, got stage {}", self.stage)));
        }
        let mut window = self.window.clone();
        window.push(a);
        Ok(Run { tail: self.tail, window_start: self.window_start, window })
    }

    /// Stage-indexed iterator over the explicit window.
    pub fn window_stages(&self) -> impl Iterator<Item = (StageIndex, ActionId)> + '_ {
        self.window.iter().enumerate().map(move |(i, &a)| (self.window_start + i as StageIndex, a))
    }

    fn normal_form(&self) -> (StageIndex, Vec<ActionId>) {
        normalize(&self.tail, self.window_start, &self.window, self.stage)
    }

    /// Whether this position is `r_{<n}` for the run `r`, where `n` is this
    /// position's stage. Histories over non-constant tail classes only agree
    /// when they are written over the same stages.
    pub fn is_prefix_of(&self, run: &Run) -> bool {
        if self.tail != run.tail {
            return false;
        }
        let (s1, w1) = self.normal_form();
        let (s2, w2) = normalize(&run.tail, run.window_start, &run.window, self.stage);
        let lo = s1.min(s2);
        for k in lo..self.stage {
            let a = if k >= s1 { Some(w1[(k - s1) as usize]) } else { self.tail.class_at(k).constant() };
            let b = if k >= s2 { Some(w2[(k - s2) as usize]) } else { run.tail.class_at(k).constant() };
            match (a, b) {
                (Some(x), Some(y)) if x == y => {}
                _ => return false,
            }
        }
        true
    }

    /// True iff every action before this stage is `a`.
    pub fn all_actions_equal(&self, a: ActionId) -> bool {
        self.tail == TailPattern::constant(a) && self.window.iter().all(|&x| x == a)
    }
}

impl PartialEq for Position {
    fn eq(&self, other: &Position) -> bool {
        self.stage == other.stage && self.tail == other.tail && self.normal_form() == other.normal_form()
    }
}

impl Eq for Position {}

impl Hash for Position {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.stage.hash(state);
        self.tail.hash(state);
        self.normal_form().hash(state);
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} tail {} window@{} [", self.stage, self.tail, self.window_start)?;
        write_actions(f, &self.window)?;
        write!(f, "]")
    }
}

fn write_actions(f: &mut fmt::Formatter<'_>, w: &[ActionId]) -> fmt::Result {
    for (i, a) in w.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

/// A complete run: tail plus actions at stages `window_start..=0`.
#[derive(Debug, Clone)]
pub struct Run {
    tail: TailPattern,
    window_start: StageIndex,
    window: Vec<ActionId>,
}

impl Run {
    /// `window` ends at stage 0 and must be nonempty.
    pub fn new(tail: TailPattern, window: Vec<ActionId>) -> Result<Run> {
        if window.is_empty() {
            return Err(Error::Malformed("a run window must include stage 0".into()));
        }
        let window_start = 1 - window.len() as StageIndex;
        Ok(Run { tail, window_start, window })
    }

    /// The run that follows `tail` at every stage.
    pub fn from_tail(tail: TailPattern) -> Result<Run> {
        Run::new(tail, vec![tail.action_at(0)?])
    }

    pub fn constant(a: ActionId) -> Run {
        Run { tail: TailPattern::constant(a), window_start: 0, window: vec![a] }
    }

    pub fn tail(&self) -> &TailPattern {
        &self.tail
    }

    pub fn window_start(&self) -> StageIndex {
        self.window_start
    }

    pub fn window(&self) -> &[ActionId] {
        &self.window
    }

    pub fn action_at(&self, stage: StageIndex) -> Result<ActionId> {
        debug_assert!(stage <= 0);
        action_in(&self.tail, self.window_start, &self.window, stage)
    }

    /// The position `r_{<n}`.
    pub fn prefix(&self, n: StageIndex) -> Result<Position> {
        if n > 0 {
            return Err(Error::PositiveStage(n));
        }
        if n <= self.window_start {
            return Position::tail_only(n, self.tail);
        }
        let len = (n - self.window_start) as usize;
        Ok(Position { stage: n, tail: self.tail, window_start: self.window_start, window: self.window[..len].to_vec() })
    }

    pub fn materialize_from(&self, start: StageIndex) -> Result<Run> {
        if start >= self.window_start {
            return Ok(self.clone());
        }
        let mut window = Vec::with_capacity((1 - start) as usize);
        for k in start..self.window_start {
            window.push(self.tail.action_at(k)?);
        }
        window.extend_from_slice(&self.window);
        Ok(Run { tail: self.tail, window_start: start, window })
    }

    pub fn window_stages(&self) -> impl Iterator<Item = (StageIndex, ActionId)> + '_ {
        self.window.iter().enumerate().map(move |(i, &a)| (self.window_start + i as StageIndex, a))
    }

    /// Canonical form: window trimmed of leading entries implied by the tail.
    pub fn normalized(&self) -> Run {
        let (start, window) = normalize(&self.tail, self.window_start, &self.window, 0);
        Run { tail: self.tail, window_start: start, window }
    }

    /// Two runs share a segment iff their tails coincide; windows never
    /// matter. Non-constant tail classes stand for one fixed sequence, so
    /// equal tail patterns are read as the same anchor.
    pub fn same_segment(&self, other: &Run) -> bool {
        self.tail == other.tail
    }

    /// The run with the action at `stage` replaced by `a`.
    pub fn with_action(&self, stage: StageIndex, a: ActionId) -> Result<Run> {
        let mut r = self.materialize_from(stage)?;
        let idx = (stage - r.window_start) as usize;
        r.window[idx] = a;
        Ok(r)
    }
}

impl PartialEq for Run {
    fn eq(&self, other: &Run) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        a.tail == b.tail && a.window_start == b.window_start && a.window == b.window
    }
}

impl Eq for Run {}

impl Hash for Run {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let n = self.normalized();
        n.tail.hash(state);
        n.window_start.hash(state);
        n.window.hash(state);
    }
}

impl fmt::Display for Run {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tail {} window@{} [", self.tail, self.window_start)?;
        write_actions(f, &self.window)?;
        write!(f, "]")
    }
}

/// A position naming the segment of every run that extends it.
pub type SegmentAnchor = Position;

/// Who moves where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TurnFunction {
    /// Player 1 at even stages, player 2 at odd stages.
    Alternating,
    /// `table[code(last memory actions) * 2 + parity]`, oldest action most
    /// significant in the code.
    FiniteMemory { memory: usize, table: Vec<PlayerId> },
    /// `base` moves everywhere except at `stage` when every earlier action
    /// equals `symbol`; then `switched` moves.
    TailPredicate { base: PlayerId, stage: StageIndex, symbol: ActionId, switched: PlayerId },
}

impl TurnFunction {
    /// A turn function that always hands the move to `player`.
    pub fn single(player: PlayerId) -> TurnFunction {
        TurnFunction::FiniteMemory { memory: 0, table: vec![player, player] }
    }

    pub fn memory(&self) -> usize {
        match self {
            TurnFunction::FiniteMemory { memory, .. } => *memory,
            _ => 0,
        }
    }

    pub fn is_alternating(&self) -> bool {
        matches!(self, TurnFunction::Alternating)
    }
}

/// Encodes an action window as a mixed-radix integer, oldest first.
pub fn window_code(window: &[ActionId], alphabet: usize) -> usize {
    window.iter().fold(0usize, |acc, &a| acc * alphabet + a as usize)
}

/// Decodes [`window_code`].
pub fn window_decode(mut code: usize, len: usize, alphabet: usize) -> Vec<ActionId> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (code % alphabet) as ActionId;
        code /= alphabet;
    }
    out
}

/// Payoff description attached to a game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PayoffSpec {
    WinLose(WinningSetSpec),
    Discounted(DiscountedPayoff),
    /// Exact payoff of a gallery entry, evaluated by its own code.
    Builtin(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSpec {
    pub players: usize,
    pub alphabet: usize,
    pub turn: TurnFunction,
    pub payoff: PayoffSpec,
}

impl GameSpec {
    pub fn validate(&self) -> Result<()> {
        if self.players == 0 {
            return Err(Error::Malformed("a game needs at least one player".into()));
        }
        if self.alphabet < 2 || self.alphabet > ActionId::MAX as usize + 1 {
            return Err(Error::Malformed(format!("alphabet size {} outside 2..=256", self.alphabet)));
        }
        match &self.turn {
            TurnFunction::Alternating => {
                if self.players != 2 {
                    return Err(Error::Malformed("alternating turns need exactly two players".into()));
                }
            }
            TurnFunction::FiniteMemory { memory, table } => {
                let expected = self.alphabet.checked_pow(*memory as u32).and_then(|n| n.checked_mul(2));
                if expected != Some(table.len()) {
                    return Err(Error::Malformed(format!(
                        "finite-memory turn table has {} entries, expected {}^{}*2",
                        table.len(),
                        self.alphabet,
                        memory
                    )));
                }
                if let Some(p) = table.iter().find(|&&p| p >= self.players) {
                    return Err(Error::Malformed(format!("turn table names player {} of {}", p + 1, self.players)));
                }
            }
            TurnFunction::TailPredicate { base, switched, symbol, stage } => {
                if *base >= self.players || *switched >= self.players {
                    return Err(Error::Malformed("tail-predicate turn names a missing player".into()));
                }
                self.check_action(*symbol)?;
                if *stage > 0 {
                    return Err(Error::PositiveStage(*stage));
                }
            }
        }
        match &self.payoff {
            PayoffSpec::WinLose(w) => {
                if self.players != 2 || !self.turn.is_alternating() {
                    return Err(Error::Malformed("win-lose games need two alternating players".into()));
                }
                w.validate(self.alphabet)?;
            }
            PayoffSpec::Discounted(d) => d.validate(self.players, self.alphabet)?,
            PayoffSpec::Builtin(id) => {
                crate::gallery::check_builtin(id, self)?;
            }
        }
        Ok(())
    }

    pub fn check_action(&self, a: ActionId) -> Result<()> {
        if (a as usize) < self.alphabet {
            Ok(())
        } else {
            Err(Error::ActionOutOfRange { action: a as u32, alphabet: self.alphabet })
        }
    }

    /// Tail classes must name actions of the alphabet; the infinitely-often
    /// class needs two letters and alternating turns.
    pub fn check_tail(&self, tail: &TailPattern) -> Result<()> {
        for class in [tail.even, tail.odd] {
            match class {
                TailClass::Constant(a) => self.check_action(a)?,
                TailClass::BothInfinitelyOften => {
                    if self.alphabet != 2 || !self.turn.is_alternating() {
                        return Err(Error::Unsupported(
                            "the infinitely-often tail class needs two letters and alternating turns".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> {
        (0..self.alphabet).map(|a| a as ActionId)
    }

    /// The player who moves at position `p`.
    pub fn active_player(&self, p: &Position) -> Result<PlayerId> {
        active_player(p, &self.turn, self.alphabet)
    }

    /// The player moving at tail-only stages of `parity` far below any window.
    pub fn active_in_tail(&self, tail: &TailPattern, parity: Parity) -> Result<PlayerId> {
        match &self.turn {
            TurnFunction::Alternating => Ok(alternating_player(parity)),
            TurnFunction::FiniteMemory { memory, table } => {
                let mut window = Vec::with_capacity(*memory);
                for back in (1..=*memory).rev() {
                    let stage_parity = if back % 2 == 0 { parity } else { parity.flip() };
                    window.push(tail.class(stage_parity).constant().ok_or(Error::TailNotMaterializable(-(back as i64)))?);
                }
                Ok(table[window_code(&window, self.alphabet) * 2 + parity.index()])
            }
            TurnFunction::TailPredicate { base, .. } => Ok(*base),
        }
    }

    /// Whether turns only depend on the stage parity.
    pub fn turn_is_parity_only(&self) -> bool {
        match &self.turn {
            TurnFunction::Alternating => true,
            TurnFunction::FiniteMemory { memory, .. } => *memory == 0,
            TurnFunction::TailPredicate { .. } => false,
        }
    }
}

pub fn alternating_player(parity: Parity) -> PlayerId {
    match parity {
        Parity::Even => PLAYER_1,
        Parity::Odd => PLAYER_2,
    }
}

/// The player who controls `p` under `turn`.
pub fn active_player(p: &Position, turn: &TurnFunction, alphabet: usize) -> Result<PlayerId> {
    match turn {
        TurnFunction::Alternating => Ok(alternating_player(Parity::of(p.stage()))),
        TurnFunction::FiniteMemory { memory, table } => {
            let n = p.stage();
            let mut window = Vec::with_capacity(*memory);
            for k in n - *memory as StageIndex..n {
                window.push(p.action_at(k)?);
            }
            Ok(table[window_code(&window, alphabet) * 2 + Parity::of(n).index()])
        }
        TurnFunction::TailPredicate { base, stage, symbol, switched } => {
            if p.stage() == *stage && p.all_actions_equal(*symbol) {
                Ok(*switched)
            } else {
                Ok(*base)
            }
        }
    }
}
