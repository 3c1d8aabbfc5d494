//! Open winning sets presented as finite unions of parity-periodic cylinder
//! families, and the suffix automaton that decides membership.
//!
//! A generator instance anchored at stage `k` matches a run when the run
//! plays the generator's pattern at stages `k..k+len`. Only anchors with
//! `k + len - 1 <= 0` produce instances. The winning set always belongs to
//! player 1.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{ActionId, Parity, Position, Run, StageIndex, TailClass, TailPattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Anchor {
    Single(StageIndex),
    AllEven,
    AllOdd,
    All,
    /// Every stage `<= n`, optionally restricted to one parity.
    AtMost(StageIndex, Option<Parity>),
}

impl Anchor {
    pub fn admits(&self, k: StageIndex) -> bool {
        match *self {
            Anchor::Single(n) => k == n,
            Anchor::AllEven => Parity::of(k) == Parity::Even,
            Anchor::AllOdd => Parity::of(k) == Parity::Odd,
            Anchor::All => true,
            Anchor::AtMost(n, p) => k <= n && p.map_or(true, |p| Parity::of(k) == p),
        }
    }

    fn is_periodic(&self) -> bool {
        !matches!(self, Anchor::Single(_))
    }

    /// One admitted anchor `<= hi` per class of anchors that look alike on a
    /// two-periodic tail; periodic classes are infinite.
    fn representatives(&self, hi: StageIndex) -> Vec<StageIndex> {
        let top = |p: Parity, bound: StageIndex| p.last_below(bound + 1);
        match *self {
            Anchor::Single(n) => {
                if n <= hi {
                    vec![n]
                } else {
                    vec![]
                }
            }
            Anchor::AllEven => vec![top(Parity::Even, hi)],
            Anchor::AllOdd => vec![top(Parity::Odd, hi)],
            Anchor::All => vec![top(Parity::Even, hi), top(Parity::Odd, hi)],
            Anchor::AtMost(n, p) => {
                let b = n.min(hi);
                match p {
                    Some(p) => vec![top(p, b)],
                    None => vec![top(Parity::Even, b), top(Parity::Odd, b)],
                }
            }
        }
    }

    /// The stage at or below which admission depends on parity alone.
    fn parity_stable_from(&self) -> StageIndex {
        match *self {
            Anchor::Single(n) | Anchor::AtMost(n, _) => n - 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CylinderGenerator {
    pub anchor: Anchor,
    pub pattern: Vec<ActionId>,
}

impl CylinderGenerator {
    pub fn new(anchor: Anchor, pattern: Vec<ActionId>) -> CylinderGenerator {
        CylinderGenerator { anchor, pattern }
    }

    fn instance_fits(&self, k: StageIndex) -> bool {
        k + self.pattern.len() as StageIndex - 1 <= 0
    }
}

/// A finite union of cylinder families.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct OpenSet {
    pub generators: Vec<CylinderGenerator>,
}

impl OpenSet {
    pub fn new(generators: Vec<CylinderGenerator>) -> OpenSet {
        OpenSet { generators }
    }

    pub fn empty() -> OpenSet {
        OpenSet::default()
    }

    /// Every run: each letter matches at every stage.
    pub fn everything(alphabet: usize) -> OpenSet {
        OpenSet::new((0..alphabet).map(|a| CylinderGenerator::new(Anchor::All, vec![a as ActionId])).collect())
    }

    pub fn validate(&self, alphabet: usize) -> Result<()> {
        for g in &self.generators {
            if g.pattern.is_empty() {
                return Err(Error::Malformed("cylinder pattern must be nonempty".into()));
            }
            if let Some(&a) = g.pattern.iter().find(|&&a| a as usize >= alphabet) {
                return Err(Error::ActionOutOfRange { action: a as u32, alphabet });
            }
            if g.pattern.len() > u16::MAX as usize || self.generators.len() > u16::MAX as usize {
                return Err(Error::Malformed("winning-set presentation too large".into()));
            }
        }
        Ok(())
    }

    pub fn max_len(&self) -> usize {
        self.generators.iter().map(|g| g.pattern.len()).max().unwrap_or(0)
    }
}

/// Player 1's winning set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WinningSetSpec {
    Open(OpenSet),
    /// The intersection of the listed open sets. Level `k` is read as
    /// `O_1 ∩ … ∩ O_k`, which makes the chain non-increasing by construction.
    GdeltaChain(Vec<OpenSet>),
}

impl WinningSetSpec {
    pub fn validate(&self, alphabet: usize) -> Result<()> {
        match self {
            WinningSetSpec::Open(o) => o.validate(alphabet),
            WinningSetSpec::GdeltaChain(levels) => {
                if levels.is_empty() {
                    return Err(Error::Malformed("a G-delta chain needs at least one level".into()));
                }
                levels.iter().try_for_each(|o| o.validate(alphabet))
            }
        }
    }

    pub fn levels(&self) -> &[OpenSet] {
        match self {
            WinningSetSpec::Open(o) => std::slice::from_ref(o),
            WinningSetSpec::GdeltaChain(levels) => levels,
        }
    }

    /// The automaton of the whole set.
    pub fn automaton(&self, alphabet: usize) -> Automaton {
        Automaton::new(self.levels().to_vec(), alphabet)
    }
}

/// Progress of one open set: either matched, or the sorted list of live
/// partial instances `(generator, letters matched)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartState {
    matched: bool,
    partial: Vec<(u16, u16)>,
}

impl PartState {
    fn fresh() -> PartState {
        PartState { matched: false, partial: Vec::new() }
    }

    fn matched() -> PartState {
        PartState { matched: true, partial: Vec::new() }
    }

    pub fn is_matched(&self) -> bool {
        self.matched
    }
}

/// One [`PartState`] per conjunct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AutState(Vec<PartState>);

impl AutState {
    pub fn parts(&self) -> &[PartState] {
        &self.0
    }
}

/// Deterministic suffix automaton over stage-indexed input. A product of
/// one component per conjunct; it accepts when every component has matched.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Automaton {
    parts: Vec<OpenSet>,
    alphabet: usize,
}

/// Compiles a single open set.
pub fn compile_automaton(spec: &OpenSet, alphabet: usize) -> Automaton {
    Automaton::new(vec![spec.clone()], alphabet)
}

/// Decides whether the pattern instance at `k` holds on a two-class tail.
/// `None` when the answer depends on letters of non-constant classes; the
/// count of such letters is returned alongside.
fn instance_on_tail(tail: &TailPattern, k: StageIndex, pattern: &[ActionId]) -> (Option<bool>, usize) {
    let mut unknown = 0;
    for (i, &want) in pattern.iter().enumerate() {
        match tail.class_at(k + i as StageIndex) {
            TailClass::Constant(c) => {
                if c != want {
                    return (Some(false), 0);
                }
            }
            TailClass::BothInfinitelyOften => unknown += 1,
        }
    }
    if unknown == 0 {
        (Some(true), 0)
    } else {
        (None, unknown)
    }
}

impl Automaton {
    pub fn new(parts: Vec<OpenSet>, alphabet: usize) -> Automaton {
        Automaton { parts, alphabet }
    }

    /// The product of the first `k` conjuncts of a chain.
    pub fn for_level(levels: &[OpenSet], k: usize, alphabet: usize) -> Automaton {
        Automaton::new(levels[..k].to_vec(), alphabet)
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn parts(&self) -> &[OpenSet] {
        &self.parts
    }

    pub fn max_len(&self) -> usize {
        self.parts.iter().map(OpenSet::max_len).max().unwrap_or(0)
    }

    pub fn fresh(&self) -> AutState {
        AutState(vec![PartState::fresh(); self.parts.len()])
    }

    pub fn accepted(&self, s: &AutState) -> bool {
        s.0.iter().all(|p| p.matched)
    }

    pub fn step(&self, s: &AutState, stage: StageIndex, a: ActionId) -> AutState {
        AutState(self.parts.iter().zip(&s.0).map(|(o, p)| step_part(o, p, stage, a)).collect())
    }

    /// Feeds the actions `word[0]` at stage `start`, `word[1]` at `start+1`, and so on.
    pub fn feed(&self, mut s: AutState, start: StageIndex, word: &[ActionId]) -> AutState {
        for (i, &a) in word.iter().enumerate() {
            s = self.step(&s, start + i as StageIndex, a);
        }
        s
    }

    /// Transitions at stages `<=` the returned stage depend on parity only.
    pub fn parity_stable_below(&self) -> StageIndex {
        let mut low = 0;
        for o in &self.parts {
            for g in &o.generators {
                low = low.min(g.anchor.parity_stable_from()).min(1 - g.pattern.len() as StageIndex - 1);
            }
        }
        low
    }

    /// State after all stages `< t` of a tail-only history.
    pub fn tail_state(&self, tail: &TailPattern, t: StageIndex) -> Result<AutState> {
        self.parts.iter().map(|o| tail_part(o, tail, t)).collect::<Result<Vec<_>>>().map(AutState)
    }

    /// State after reading every action before `p`'s stage.
    pub fn entry(&self, p: &Position) -> Result<AutState> {
        let s = self.tail_state(p.tail(), p.window_start())?;
        Ok(self.feed(s, p.window_start(), p.window()))
    }

    /// Membership of `r`; an infinitely-often class stands for every
    /// sequence with both letters recurring, and the answer must agree on all.
    pub fn accepts_run(&self, r: &Run) -> Result<bool> {
        let mut states = vec![AutState(Vec::new())];
        for o in &self.parts {
            let options = tail_part_options(o, r.tail(), r.window_start())?;
            if states.len() * options.len() > TAIL_STATE_CAP {
                return Err(Error::Unsupported(format!("tail {} leaves too many candidate states", r.tail())));
            }
            states = states
                .iter()
                .flat_map(|s| {
                    options.iter().map(move |p| {
                        let mut v = s.0.clone();
                        v.push(p.clone());
                        AutState(v)
                    })
                })
                .collect();
        }
        let mut verdict = None;
        for s in states {
            let v = self.accepted(&self.feed(s, r.window_start(), r.window()));
            if *verdict.get_or_insert(v) != v {
                return Err(Error::Unsupported(format!(
                    "membership of the run over tail {} depends on letters of an infinitely-often class",
                    r.tail()
                )));
            }
        }
        Ok(verdict.expect("at least one candidate state"))
    }
}

fn step_part(o: &OpenSet, s: &PartState, stage: StageIndex, a: ActionId) -> PartState {
    if s.matched {
        return s.clone();
    }
    let mut next = Vec::with_capacity(s.partial.len() + 1);
    for &(g, p) in &s.partial {
        let pat = &o.generators[g as usize].pattern;
        if pat[p as usize] == a {
            if p as usize + 1 == pat.len() {
                return PartState::matched();
            }
            next.push((g, p + 1));
        }
    }
    for (gi, g) in o.generators.iter().enumerate() {
        if g.pattern[0] == a && g.anchor.admits(stage) && g.instance_fits(stage) {
            if g.pattern.len() == 1 {
                return PartState::matched();
            }
            next.push((gi as u16, 1));
        }
    }
    next.sort_unstable();
    next.dedup();
    PartState { matched: false, partial: next }
}

/// Upper bound on the candidate states one tail may leave open.
const TAIL_STATE_CAP: usize = 256;

/// Every state the tail may leave after stages `< t`: instances that hinge
/// on letters of an infinitely-often class may or may not be live. Each is
/// read independently, which over-approximates the possibilities.
fn tail_part_options(o: &OpenSet, tail: &TailPattern, t: StageIndex) -> Result<Vec<PartState>> {
    let mut partial = BTreeSet::new();
    let mut maybe_partial = BTreeSet::new();
    let mut maybe_matched = false;
    for (gi, g) in o.generators.iter().enumerate() {
        let len = g.pattern.len() as StageIndex;
        let hi = (t - len).min(1 - len);
        for k in g.anchor.representatives(hi) {
            match instance_on_tail(tail, k, &g.pattern) {
                (Some(true), _) => return Ok(vec![PartState::matched()]),
                (Some(false), _) => {}
                (None, 1) if g.anchor.is_periodic() => return Ok(vec![PartState::matched()]),
                (None, _) => maybe_matched = true,
            }
        }
        for k in (t - len + 1)..t {
            if !g.anchor.admits(k) || !g.instance_fits(k) {
                continue;
            }
            let progress = (t - k) as usize;
            let entry = (gi as u16, progress as u16);
            match instance_on_tail(tail, k, &g.pattern[..progress]) {
                (Some(true), _) => {
                    partial.insert(entry);
                }
                (Some(false), _) => {}
                (None, _) => {
                    maybe_partial.insert(entry);
                }
            }
        }
    }
    let maybe: Vec<(u16, u16)> = maybe_partial.difference(&partial).copied().collect();
    if maybe.len() > 8 {
        return Err(Error::Unsupported(format!("{} partial instances hinge on infinitely-often letters", maybe.len())));
    }
    let mut out = Vec::with_capacity((1 << maybe.len()) + 1);
    for mask in 0..1u32 << maybe.len() {
        let mut live = partial.clone();
        live.extend(maybe.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, e)| *e));
        out.push(PartState { matched: false, partial: live.into_iter().collect() });
    }
    if maybe_matched {
        out.push(PartState::matched());
    }
    Ok(out)
}

fn tail_part(o: &OpenSet, tail: &TailPattern, t: StageIndex) -> Result<PartState> {
    let mut options = tail_part_options(o, tail, t)?;
    if options.len() == 1 {
        Ok(options.pop().unwrap())
    } else {
        Err(Error::Unsupported(format!(
            "the state before stage {t} depends on letters of an infinitely-often tail class"
        )))
    }
}

/// Membership of a run in player 1's winning set.
pub fn run_in_winning_set(r: &Run, spec: &WinningSetSpec) -> Result<bool> {
    let alphabet = 1 + spec
        .levels()
        .iter()
        .flat_map(|o| o.generators.iter().flat_map(|g| g.pattern.iter().copied()))
        .chain(r.window().iter().copied())
        .max()
        .unwrap_or(1) as usize;
    spec.automaton(alphabet.max(2)).accepts_run(r)
}

/// Membership in the intersection of a finite chain of open sets.
pub fn evaluate_gdelta(r: &Run, chain: &[OpenSet]) -> Result<bool> {
    run_in_winning_set(r, &WinningSetSpec::GdeltaChain(chain.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn illustration() -> OpenSet {
        OpenSet::new(vec![
            CylinderGenerator::new(Anchor::Single(-2), vec![0]),
            CylinderGenerator::new(Anchor::Single(-1), vec![0]),
        ])
    }

    fn player2_plays_one() -> OpenSet {
        OpenSet::new(vec![CylinderGenerator::new(Anchor::AllOdd, vec![1])])
    }

    /// Scans every instance whose letters lie in `[low, 0]` of the
    /// materialized run; `low` must sit below every stage-dependent anchor.
    fn naive_member(o: &OpenSet, r: &Run, low: StageIndex) -> bool {
        let r = r.materialize_from(low).unwrap();
        o.generators.iter().any(|g| {
            let len = g.pattern.len() as StageIndex;
            (low..=1 - len).any(|k| {
                g.anchor.admits(k) && (0..len).all(|i| r.action_at(k + i).unwrap() == g.pattern[i as usize])
            })
        })
    }

    fn runs_of_length(len: usize, tail: TailPattern) -> Vec<Run> {
        (0..1usize << len)
            .map(|bits| Run::new(tail, (0..len).map(|i| ((bits >> i) & 1) as ActionId).collect()).unwrap())
            .collect()
    }

    #[test]
    fn illustration_matches_zero_at_minus_two_or_minus_one() {
        let a = compile_automaton(&illustration(), 2);
        let s = a.step(&a.fresh(), -2, 0);
        assert!(a.accepted(&s));
        let s = a.step(&a.step(&a.fresh(), -2, 1), -1, 1);
        assert!(!a.accepted(&s));
        let s = a.step(&a.step(&a.fresh(), -2, 1), -1, 0);
        assert!(a.accepted(&s));
    }

    #[test]
    fn empty_set_rejects() {
        for r in runs_of_length(4, TailPattern::constant(1)) {
            assert!(!run_in_winning_set(&r, &WinningSetSpec::Open(OpenSet::empty())).unwrap());
        }
    }

    #[test]
    fn odd_one_winning_set() {
        let w = WinningSetSpec::Open(player2_plays_one());
        assert!(!run_in_winning_set(&Run::constant(0), &w).unwrap());
        assert!(run_in_winning_set(&Run::constant(1), &w).unwrap());
        let late = Run::new(TailPattern::constant(0), vec![1, 0]).unwrap();
        assert!(run_in_winning_set(&late, &w).unwrap());
        let even_only = Run::new(TailPattern::constant(0), vec![0, 1]).unwrap();
        assert!(!run_in_winning_set(&even_only, &w).unwrap());
    }

    #[test]
    fn extending_the_zero_run_with_one_at_stage_zero() {
        let p = Run::constant(0).prefix(0).unwrap();
        let r = p.extend_to_run(1).unwrap();
        assert_eq!(r.action_at(0).unwrap(), 1);
        assert_eq!(r.action_at(-1).unwrap(), 0);
        let w = WinningSetSpec::Open(player2_plays_one());
        assert!(!run_in_winning_set(&r, &w).unwrap());
    }

    #[test]
    fn infinitely_often_tails() {
        let w = WinningSetSpec::Open(player2_plays_one());
        let r = Run::new(TailPattern::new(TailClass::Constant(0), TailClass::BothInfinitelyOften), vec![0]).unwrap();
        assert!(run_in_winning_set(&r, &w).unwrap());
        let two = WinningSetSpec::Open(OpenSet::new(vec![CylinderGenerator::new(Anchor::AllOdd, vec![1, 1])]));
        let r = Run::new(TailPattern::new(TailClass::BothInfinitelyOften, TailClass::BothInfinitelyOften), vec![0]).unwrap();
        assert!(matches!(run_in_winning_set(&r, &two), Err(Error::Unsupported(_))));
        // One unknown letter inside each instance is forced by the class.
        let r = Run::new(TailPattern::new(TailClass::Constant(1), TailClass::BothInfinitelyOften), vec![0]).unwrap();
        assert!(run_in_winning_set(&r, &two).unwrap());
        // A constant letter that disagrees decides the instance.
        let r = Run::new(TailPattern::new(TailClass::Constant(0), TailClass::BothInfinitelyOften), vec![0]).unwrap();
        assert!(!run_in_winning_set(&r, &two).unwrap());
    }

    #[test]
    fn single_anchor_on_infinitely_often_region_is_unsupported() {
        let o = OpenSet::new(vec![CylinderGenerator::new(Anchor::Single(-5), vec![1])]);
        let r = Run::new(TailPattern::new(TailClass::BothInfinitelyOften, TailClass::BothInfinitelyOften), vec![0]).unwrap();
        assert!(matches!(run_in_winning_set(&r, &WinningSetSpec::Open(o)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn gdelta_chain_of_everything_and_nothing() {
        let all = OpenSet::everything(2);
        for r in runs_of_length(3, TailPattern::per_parity(0, 1)) {
            assert!(evaluate_gdelta(&r, &[all.clone()]).unwrap());
            assert!(!evaluate_gdelta(&r, &[OpenSet::empty()]).unwrap());
        }
    }

    #[test]
    fn gdelta_equals_direct_intersection() {
        let o1 = OpenSet::new(vec![CylinderGenerator::new(Anchor::AllEven, vec![1, 0])]);
        let o2 = OpenSet::new(vec![
            CylinderGenerator::new(Anchor::Single(-3), vec![0, 0]),
            CylinderGenerator::new(Anchor::AtMost(-4, Some(Parity::Odd)), vec![1]),
        ]);
        for tail in TailPattern::all_binary(false) {
            for r in runs_of_length(6, tail) {
                let direct = naive_member(&o1, &r, -20) && naive_member(&o2, &r, -20);
                assert_eq!(evaluate_gdelta(&r, &[o1.clone(), o2.clone()]).unwrap(), direct, "{r}");
            }
        }
    }

    fn arb_anchor() -> impl Strategy<Value = Anchor> {
        prop_oneof![
            (-6i64..=0).prop_map(Anchor::Single),
            Just(Anchor::AllEven),
            Just(Anchor::AllOdd),
            Just(Anchor::All),
            ((-6i64..=0), prop::option::of(prop_oneof![Just(Parity::Even), Just(Parity::Odd)]))
                .prop_map(|(n, p)| Anchor::AtMost(n, p)),
        ]
    }

    fn arb_open() -> impl Strategy<Value = OpenSet> {
        prop::collection::vec(
            (arb_anchor(), prop::collection::vec(0u8..2, 1..4)).prop_map(|(a, p)| CylinderGenerator::new(a, p)),
            0..4,
        )
        .prop_map(OpenSet::new)
    }

    fn arb_tail() -> impl Strategy<Value = TailPattern> {
        (0u8..2, 0u8..2).prop_map(|(e, o)| TailPattern::per_parity(e, o))
    }

    fn arb_run() -> impl Strategy<Value = Run> {
        (arb_tail(), prop::collection::vec(0u8..2, 1..9)).prop_map(|(t, w)| Run::new(t, w).unwrap())
    }

    proptest! {
        #[test]
        fn automaton_agrees_with_naive_scan(o in arb_open(), r in arb_run()) {
            let got = compile_automaton(&o, 2).accepts_run(&r).unwrap();
            prop_assert_eq!(got, naive_member(&o, &r, -30));
        }

        #[test]
        fn adding_a_generator_is_monotone(o in arb_open(), extra in arb_open(), r in arb_run()) {
            let before = compile_automaton(&o, 2).accepts_run(&r).unwrap();
            let mut bigger = o.clone();
            bigger.generators.extend(extra.generators);
            let after = compile_automaton(&bigger, 2).accepts_run(&r).unwrap();
            prop_assert!(!before || after);
        }

        #[test]
        fn single_anchors_ignore_earlier_stages(n in -5i64..=0, pat in prop::collection::vec(0u8..2, 1..3), r in arb_run(),
                                                flips in prop::collection::vec(0u8..2, 8)) {
            let o = OpenSet::new(vec![CylinderGenerator::new(Anchor::Single(n), pat)]);
            let a = compile_automaton(&o, 2);
            let mut other = r.materialize_from(n - 8).unwrap();
            for (i, &f) in flips.iter().enumerate() {
                let k = n - 8 + i as StageIndex;
                if k < n {
                    other = other.with_action(k, other.action_at(k).unwrap() ^ f).unwrap();
                }
            }
            prop_assert_eq!(a.accepts_run(&r).unwrap(), a.accepts_run(&other).unwrap());
        }

        #[test]
        fn matched_runs_contain_a_matched_cylinder(o in arb_open(), r in arb_run()) {
            let a = compile_automaton(&o, 2);
            if a.accepts_run(&r).unwrap() {
                let deep = r.materialize_from(-30).unwrap();
                let witness = (-30..=0).rev().find(|&n| {
                    let mut s = a.fresh();
                    for k in n..=0 {
                        s = a.step(&s, k, deep.action_at(k).unwrap());
                    }
                    a.accepted(&s)
                });
                let n = witness.expect("some suffix matches");
                // Every run agreeing with r from stage n onward is a member.
                let flipped = (-30..n).fold(deep.clone(), |acc, k| acc.with_action(k, 1 - acc.action_at(k).unwrap()).unwrap());
                let flipped = Run::new(TailPattern::per_parity(1 - r.tail().even.constant().unwrap(), 1 - r.tail().odd.constant().unwrap()), flipped.window().to_vec()).unwrap();
                prop_assert!(a.accepts_run(&flipped).unwrap());
            }
        }
    }
}
