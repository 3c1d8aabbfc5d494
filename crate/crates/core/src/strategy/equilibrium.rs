use std::collections::{HashMap, HashSet};

use crate::error::Result;
use crate::model::{alternating_player, ActionId, GameSpec, Parity, PlayerId, Position, Run, StageIndex, PLAYER_1, PLAYER_2};
use crate::payoff::PayoffEvaluator;
use crate::winset::{AutState, Automaton};
use crate::Rational;

use super::consistency::{is_consistent, ConsistencyVerdict};
use super::{JointState, StrategyProfile, Tracker};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquilibriumVerdict {
    /// No profitable deviation at stages `-depth..=0`.
    Verified(u32),
    /// No profitable deviation at any stage.
    ExactVerified,
    /// The latest stage with a profitable deviation, its player and the
    /// lowest profitable action.
    CounterDeviation { stage: StageIndex, player: PlayerId, action: ActionId },
    /// The run does not follow the profile; see [`super::is_consistent`].
    Inconsistent(StageIndex),
}

impl EquilibriumVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, EquilibriumVerdict::Verified(_) | EquilibriumVerdict::ExactVerified)
    }
}

/// Checks that `s` restricted to `G[r_{<n}]` is an equilibrium for every
/// stage `n` from 0 down to `-depth`, with tolerance `eps` when given.
///
/// Each deviation is answered by the deviator's best response in the
/// finite subgame, all other players following `s`.
pub fn check_equilibrium(
    game: &GameSpec,
    s: &StrategyProfile,
    r: &Run,
    depth: u32,
    eps: Option<&Rational>,
) -> Result<EquilibriumVerdict> {
    s.validate(game)?;
    game.check_tail(r.tail())?;
    let consistency = is_consistent(game, r, s, depth)?;
    if let ConsistencyVerdict::ViolationAt(k) = consistency {
        return Ok(EquilibriumVerdict::Inconsistent(k));
    }
    let eval = PayoffEvaluator::new(game)?;
    if eval.is_tail() {
        return Ok(EquilibriumVerdict::ExactVerified);
    }
    let u = eval.evaluate(r)?;
    let zero = Rational::from_integer(0.into());
    let eps = eps.unwrap_or(&zero);
    let tracker = Tracker::new(game, s);
    for n in (-(depth as StageIndex)..=0).rev() {
        let p = r.prefix(n)?;
        let j = tracker.observe(&p)?;
        let i = tracker.active(&j, n);
        let on_run = r.action_at(n)?;
        let bar = &u[i] + eps;
        for a in game.actions().filter(|&a| a != on_run) {
            if deviation_value(&tracker, &eval, i, &p, &j, a)? > bar {
                return Ok(EquilibriumVerdict::CounterDeviation { stage: n, player: i, action: a });
            }
        }
    }
    if consistency == ConsistencyVerdict::TailCertified {
        if let Some(automaton) = eval.automaton() {
            match winlose_certificate(&tracker, automaton, r, depth)? {
                Certificate::Certified => return Ok(EquilibriumVerdict::ExactVerified),
                Certificate::Counter(stage, player, action) => {
                    return Ok(EquilibriumVerdict::CounterDeviation { stage, player, action })
                }
                Certificate::Unknown => {}
            }
        }
    }
    Ok(EquilibriumVerdict::Verified(depth))
}

/// Best payoff of `i` after playing `a` at `p`.
fn deviation_value(
    t: &Tracker,
    eval: &PayoffEvaluator,
    i: PlayerId,
    p: &Position,
    j: &JointState,
    a: ActionId,
) -> Result<Rational> {
    if p.stage() == 0 {
        let mut v = eval.evaluate(&p.extend_to_run(a)?)?;
        return Ok(v.swap_remove(i));
    }
    best_response(t, eval, i, &p.extend(a)?, &t.advance(j, p.stage(), a)?)
}

fn best_response(t: &Tracker, eval: &PayoffEvaluator, i: PlayerId, p: &Position, j: &JointState) -> Result<Rational> {
    let k = p.stage();
    let choices: Vec<ActionId> = if t.active(j, k) == i { t.game.actions().collect() } else { vec![t.decide(j, k)?] };
    let mut best: Option<Rational> = None;
    for a in choices {
        let v = deviation_value(t, eval, i, p, j, a)?;
        if best.as_ref().map_or(true, |b| v > *b) {
            best = Some(v);
        }
    }
    Ok(best.expect("nonempty alphabet"))
}

enum Certificate {
    Certified,
    Counter(StageIndex, PlayerId, ActionId),
    Unknown,
}

type Comb = (AutState, JointState);

const CERTIFICATE_CAP: usize = 4096;

/// Decides the loser's best response at every root `r_{<n}` at once.
///
/// Below a stage `K` every transition depends on parity only, so the set
/// of joint states reachable there is a finite closure. Best-response maps
/// over that closure then evolve by a parity-dependent rule driven by the
/// value layers of stored subgame tables, and repeat eventually.
fn winlose_certificate(t: &Tracker, automaton: &Automaton, r: &Run, depth: u32) -> Result<Certificate> {
    match certificate_inner(t, automaton, r, depth) {
        Ok(c) => Ok(c),
        Err(_) => Ok(Certificate::Unknown),
    }
}

fn certificate_inner(t: &Tracker, automaton: &Automaton, r: &Run, depth: u32) -> Result<Certificate> {
    let r = r.normalized();
    let tail = *r.tail();
    let loser = if automaton.accepts_run(&r)? { PLAYER_2 } else { PLAYER_1 };
    let low = automaton
        .parity_stable_below()
        .min(t.horizon(&tail))
        .min(r.window_start() - 1)
        .min(-(depth as StageIndex) - 1);
    let adv = |c: &Comb, k: StageIndex, a: ActionId| -> Result<Comb> {
        Ok((automaton.step(&c.0, k, a), t.advance(&c.1, k, a)?))
    };
    let rep = |p: Parity| p.last_below(low + 1);

    // Deep closure, one state list per parity.
    let mut lists: [Vec<Comb>; 2] = [Vec::new(), Vec::new()];
    let mut index: [HashMap<Comb, usize>; 2] = [HashMap::new(), HashMap::new()];
    let mut queue = Vec::new();
    for p in [Parity::Even, Parity::Odd] {
        let k = rep(p);
        let c = (automaton.tail_state(&tail, k)?, t.observe_tail(&tail, k)?);
        queue.push((p, c));
    }
    while let Some((p, c)) = queue.pop() {
        if index[p.index()].contains_key(&c) {
            continue;
        }
        index[p.index()].insert(c.clone(), lists[p.index()].len());
        lists[p.index()].push(c.clone());
        for a in t.game.actions() {
            let d = adv(&c, rep(p), a)?;
            if !index[p.flip().index()].contains_key(&d) {
                queue.push((p.flip(), d));
            }
        }
    }
    let seeds: Vec<usize> = [Parity::Even, Parity::Odd]
        .iter()
        .map(|&p| {
            let k = rep(p);
            let c = (automaton.tail_state(&tail, k)?, t.observe_tail(&tail, k)?);
            Ok(index[p.index()][&c])
        })
        .collect::<Result<_>>()?;

    // Shallow stages low+1..=0, forward sets then backward values.
    let mut forward: Vec<Vec<Comb>> = vec![lists[Parity::of(low + 1).index()].clone()];
    for k in low + 1..=0 {
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for c in forward.last().unwrap() {
            for a in t.game.actions() {
                let d = adv(c, k, a)?;
                if seen.insert(d.clone()) {
                    next.push(d);
                }
            }
        }
        forward.push(next);
    }
    let at = |k: StageIndex| (k - low - 1) as usize;
    let mut shallow: Vec<HashMap<Comb, bool>> = vec![HashMap::new(); forward.len()];
    for c in &forward[at(1)] {
        shallow[at(1)].insert(c.clone(), automaton.accepted(&c.0) == (loser == PLAYER_1));
    }
    for k in (low + 1..=0).rev() {
        let mut map = HashMap::new();
        for c in &forward[at(k)] {
            let v = if alternating_player(Parity::of(k)) == loser {
                let mut any = false;
                for a in t.game.actions() {
                    if shallow[at(k + 1)][&adv(c, k, a)?] {
                        any = true;
                        break;
                    }
                }
                any
            } else {
                shallow[at(k + 1)][&adv(c, k, t.decide(&c.1, k)?)?]
            };
            map.insert(c.clone(), v);
        }
        shallow[at(k)] = map;
    }

    // Deep maps, newest last; deep[i] holds stage low - i.
    let trans: [Vec<Vec<usize>>; 2] = [Parity::Even, Parity::Odd].map(|p| {
        lists[p.index()]
            .iter()
            .map(|c| {
                t.game
                    .actions()
                    .map(|a| adv(c, rep(p), a).map(|d| index[p.flip().index()][&d]))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
            .unwrap_or_default()
    });
    if trans.iter().zip(&lists).any(|(tr, l)| tr.len() != l.len()) {
        return Ok(Certificate::Unknown);
    }
    let above = Parity::of(low + 1);
    let mut current: Vec<bool> = lists[above.index()].iter().map(|c| shallow[0][c]).collect();
    let tables: Vec<_> = t.profile.subgame_tables().into_iter().filter(|st| st.start.is_none()).collect();
    let mut deep: Vec<Vec<bool>> = Vec::new();
    let mut seen_keys = HashSet::new();
    let mut found = None;
    for step in 0..CERTIFICATE_CAP {
        let k = low - step as StageIndex;
        let p = Parity::of(k);
        let pi = p.index();
        let mut layer = Vec::with_capacity(lists[pi].len());
        for (ci, c) in lists[pi].iter().enumerate() {
            let v = if alternating_player(p) == loser {
                trans[pi][ci].iter().any(|&d| current[d])
            } else {
                let a = t.decide(&c.1, k)?;
                current[trans[pi][ci][a as usize]]
            };
            layer.push(v);
        }
        if layer[seeds[pi]] {
            found = Some(k);
            deep.push(layer);
            break;
        }
        let key = (p, layer.clone(), tables.iter().map(|st| st.values().layer(k)).collect::<Vec<_>>());
        deep.push(layer.clone());
        current = layer;
        if !seen_keys.insert(key) {
            break;
        }
        if step + 1 == CERTIFICATE_CAP {
            return Ok(Certificate::Unknown);
        }
    }
    let shallow_root = (low + 1..=0).rev().find_map(|n| {
        let p = r.prefix(n).ok()?;
        let c = (automaton.entry(&p).ok()?, t.observe(&p).ok()?);
        shallow[at(n)].get(&c).copied().filter(|&v| v).map(|_| (n, c))
    });
    let (start, root) = match (found, shallow_root) {
        (_, Some((n, c))) => (n, c),
        (Some(k), None) => (k, lists[Parity::of(k).index()][seeds[Parity::of(k).index()]].clone()),
        (None, None) => return Ok(Certificate::Certified),
    };

    // Walk the loser's winning deviation forward to its first departure.
    let value = |k: StageIndex, c: &Comb| -> Option<bool> {
        if k > low {
            shallow[at(k)].get(c).copied()
        } else {
            let i = (low - k) as usize;
            let pi = Parity::of(k).index();
            deep.get(i).and_then(|layer| index[pi].get(c).map(|&x| layer[x]))
        }
    };
    let mut c = root;
    for k in start..=0 {
        let rec = t.decide(&c.1, k)?;
        if alternating_player(Parity::of(k)) == loser {
            let child_wins = |a: ActionId| -> Result<bool> {
                if k == 0 {
                    Ok(automaton.accepted(&automaton.step(&c.0, 0, a)) == (loser == PLAYER_1))
                } else {
                    Ok(value(k + 1, &adv(&c, k, a)?).unwrap_or(false))
                }
            };
            if !child_wins(rec)? {
                for a in t.game.actions() {
                    if child_wins(a)? {
                        return Ok(Certificate::Counter(k, loser, a));
                    }
                }
                return Ok(Certificate::Unknown);
            }
        }
        c = adv(&c, k, rec)?;
    }
    Ok(Certificate::Unknown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PayoffSpec, TailPattern, TurnFunction};
    use crate::strategy::StrategyMachine;
    use crate::winset::{Anchor, CylinderGenerator, OpenSet, WinningSetSpec};

    fn valueless() -> GameSpec {
        GameSpec {
            players: 2,
            alphabet: 2,
            turn: TurnFunction::Alternating,
            payoff: PayoffSpec::WinLose(WinningSetSpec::Open(OpenSet::new(vec![CylinderGenerator::new(
                Anchor::AllOdd,
                vec![1],
            )]))),
        }
    }

    fn constants(a: ActionId) -> StrategyProfile {
        StrategyProfile::new(vec![StrategyMachine::constant(PLAYER_1, a), StrategyMachine::constant(PLAYER_2, a)])
    }

    #[test]
    fn both_constant_profiles_are_equilibria() {
        let g = valueless();
        assert_eq!(check_equilibrium(&g, &constants(0), &Run::constant(0), 6, None).unwrap(), EquilibriumVerdict::ExactVerified);
        assert_eq!(check_equilibrium(&g, &constants(1), &Run::constant(1), 6, None).unwrap(), EquilibriumVerdict::ExactVerified);
    }

    #[test]
    fn inconsistent_runs_are_flagged() {
        let g = valueless();
        assert_eq!(check_equilibrium(&g, &constants(0), &Run::constant(1), 6, None).unwrap(), EquilibriumVerdict::Inconsistent(0));
    }

    #[test]
    fn a_shallow_counter_deviation() {
        // Player 2 plays 1 once at stage -1, then 0; player 1 plays 0. The
        // run is in W, and player 2 would rather play 0 at stage -1.
        let g = valueless();
        let r = Run::new(TailPattern::constant(0), vec![1, 0]).unwrap();
        let p2 = StrategyMachine::pinning(r.clone(), StrategyMachine::constant(PLAYER_2, 0));
        let s = StrategyProfile::new(vec![StrategyMachine::constant(PLAYER_1, 0), p2]);
        assert_eq!(
            check_equilibrium(&g, &s, &r, 4, None).unwrap(),
            EquilibriumVerdict::CounterDeviation { stage: -1, player: PLAYER_2, action: 0 }
        );
    }

    #[test]
    fn a_deep_counter_deviation_is_found_below_the_depth() {
        // Everyone plays 1 except that player 2 always plays 1; W is "player 1
        // played 0 at some even stage <= -10". Player 1's profitable move lies
        // below the explicit depth.
        let w = OpenSet::new(vec![CylinderGenerator::new(Anchor::AtMost(-10, Some(Parity::Even)), vec![0])]);
        let g = GameSpec { payoff: PayoffSpec::WinLose(WinningSetSpec::Open(w)), ..valueless() };
        match check_equilibrium(&g, &constants(1), &Run::constant(1), 2, None).unwrap() {
            EquilibriumVerdict::CounterDeviation { stage, player, action } => {
                assert_eq!((player, action), (PLAYER_1, 0));
                assert!(stage <= -10);
            }
            v => panic!("{v:?}"),
        }
    }
}
