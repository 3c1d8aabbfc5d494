use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ActionId, GameSpec, PlayerId, Run, SegmentAnchor, StageIndex, TurnFunction};
use crate::payoff::PayoffEvaluator;

use super::consistency::consistent_run_in_segment;
use super::equilibrium::check_equilibrium;
use super::{ConsistencyReport, StrategyMachine, StrategyProfile, TailScope};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrongVerdict {
    /// No machine of the searched family does better on any tested anchor.
    Verified { depth: u32, machines_searched: usize, undecided: usize },
    CounterExample { player: PlayerId, machine: StrategyMachine, run: Run },
    /// The profile does not have exactly one consistent run over the anchors.
    NotUnique { permitted: usize },
}

/// Plays 0 while every previous own action was 1, and 1 otherwise. No
/// run is consistent with it in any segment where its owner moves
/// infinitely often.
pub fn escort_machine(owner: PlayerId) -> StrategyMachine {
    StrategyMachine::TailAware {
        owner,
        scope: TailScope::Own,
        symbol: 1,
        when_all: 0,
        fallback: Box::new(StrategyMachine::constant(owner, 1)),
    }
}

/// Every player follows `r` along its prefixes and the escort elsewhere,
/// so `r` is the only consistent run.
pub fn build_pinning_profile(game: &GameSpec, r: &Run) -> Result<StrategyProfile> {
    if !r.tail().is_constant() {
        return Err(Error::Unsupported(format!("pinning needs constant tail classes, got {}", r.tail())));
    }
    game.check_tail(r.tail())?;
    Ok(StrategyProfile::new((0..game.players).map(|i| StrategyMachine::pinning(r.clone(), escort_machine(i))).collect()))
}

/// Whether, on every run, at least two distinct players move infinitely
/// often: even and odd stages are controlled by disjoint sets of players.
pub fn turn_recurs_for_two_players(game: &GameSpec) -> bool {
    match &game.turn {
        TurnFunction::Alternating => game.players >= 2,
        TurnFunction::FiniteMemory { table, .. } => {
            let even: HashSet<_> = table.iter().step_by(2).collect();
            let odd: HashSet<_> = table.iter().skip(1).step_by(2).collect();
            even.is_disjoint(&odd)
        }
        TurnFunction::TailPredicate { .. } => false,
    }
}

/// Follows the pinning profile of `r` until someone leaves `r` inside its
/// segment, then switches to `s`.
pub fn strengthen(game: &GameSpec, s: &StrategyProfile, r: &Run) -> Result<StrategyProfile> {
    if !turn_recurs_for_two_players(game) {
        return Err(Error::Precondition("strengthening needs two players moving infinitely often on every run".into()));
    }
    let verdict = check_equilibrium(game, s, r, 6, None)?;
    if !verdict.passed() {
        return Err(Error::Precondition(format!("(s, r) is not an equilibrium: {verdict:?}")));
    }
    Ok(StrategyProfile::new(
        s.machines
            .iter()
            .enumerate()
            .map(|(i, m)| StrategyMachine::composite(r.clone(), m.clone(), escort_machine(i)))
            .collect(),
    ))
}

/// Deviation machines of player `i`: all finite-memory machines with memory
/// at most 1 that fit in 4096 tables, the tail-aware rules with constant
/// fallbacks, and pinning machines on the anchor tails and on single-stage
/// changes of `base` within `depth`.
pub fn deviation_family(game: &GameSpec, i: PlayerId, anchors: &[SegmentAnchor], base: &Run, depth: u32) -> Vec<StrategyMachine> {
    let alphabet = game.alphabet;
    let mut out = Vec::new();
    for memory in 0..=1usize {
        let entries = 2 * alphabet.pow(memory as u32);
        let count = (alphabet as u128).checked_pow(entries as u32);
        if count.map_or(true, |c| c > 4096) {
            continue;
        }
        for mut code in 0..count.unwrap() {
            let mut table = vec![0; entries];
            for slot in table.iter_mut() {
                *slot = (code % alphabet as u128) as ActionId;
                code /= alphabet as u128;
            }
            out.push(StrategyMachine::FiniteMemory { owner: i, memory, table });
        }
    }
    for scope in [TailScope::Own, TailScope::Any] {
        for symbol in game.actions() {
            for when_all in game.actions() {
                for b in game.actions() {
                    out.push(StrategyMachine::TailAware {
                        owner: i,
                        scope,
                        symbol,
                        when_all,
                        fallback: Box::new(StrategyMachine::constant(i, b)),
                    });
                }
            }
        }
    }
    let mut targets: Vec<Run> = Vec::new();
    for a in anchors {
        if let Ok(r) = Run::from_tail(*a.tail()) {
            targets.push(r);
        }
    }
    for k in -(depth as StageIndex)..=0 {
        if let Ok(on) = base.action_at(k) {
            for a in game.actions().filter(|&a| a != on) {
                if let Ok(r) = base.with_action(k, a) {
                    targets.push(r);
                }
            }
        }
    }
    let mut seen = HashSet::new();
    for t in targets {
        if seen.insert(t.clone()) {
            out.push(StrategyMachine::pinning(t, escort_machine(i)));
        }
    }
    out
}

/// Searches the deviation family for a unilateral change that makes some
/// consistent run strictly better for the deviator. A `Verified` answer is
/// relative to that family and to the anchors given.
pub fn check_strong(game: &GameSpec, s: &StrategyProfile, depth: u32, anchors: &[SegmentAnchor]) -> Result<StrongVerdict> {
    s.validate(game)?;
    let mut runs = Vec::new();
    for a in anchors {
        if let ConsistencyReport::Unique(r) = consistent_run_in_segment(game, s, a)? {
            if !runs.contains(&r) {
                runs.push(r);
            }
        }
    }
    if runs.len() != 1 {
        return Ok(StrongVerdict::NotUnique { permitted: runs.len() });
    }
    let r = runs.pop().unwrap();
    let eval = PayoffEvaluator::new(game)?;
    let u = eval.evaluate(&r)?;
    let candidates: Vec<StrategyMachine> =
        (0..game.players).flat_map(|i| deviation_family(game, i, anchors, &r, depth)).collect();
    let outcomes: Vec<(Option<Run>, usize)> = candidates
        .par_iter()
        .map(|m| {
            let i = m.owner();
            let deviated = s.with_machine(m.clone());
            let mut undecided = 0;
            for a in anchors {
                match consistent_run_in_segment(game, &deviated, a) {
                    Ok(ConsistencyReport::Unique(r2)) => match eval.evaluate(&r2) {
                        Ok(v) if v[i] > u[i] => return (Some(r2), undecided),
                        Ok(_) => {}
                        Err(_) => undecided += 1,
                    },
                    Ok(_) => {}
                    Err(_) => undecided += 1,
                }
            }
            (None, undecided)
        })
        .collect();
    let mut undecided = 0;
    for (m, (hit, und)) in candidates.iter().zip(outcomes) {
        undecided += und;
        if let Some(run) = hit {
            return Ok(StrongVerdict::CounterExample { player: m.owner(), machine: m.clone(), run });
        }
    }
    Ok(StrongVerdict::Verified { depth, machines_searched: candidates.len(), undecided })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PayoffSpec, TailPattern, PLAYER_1, PLAYER_2};
    use crate::strategy::anchors_for;
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

    fn all_anchors() -> Vec<SegmentAnchor> {
        anchors_for(&TailPattern::all_binary(true))
    }

    #[test]
    fn pinning_profile_pins_its_run() {
        let g = valueless();
        let r = Run::new(TailPattern::constant(1), vec![0, 1, 0]).unwrap();
        let s = build_pinning_profile(&g, &r).unwrap();
        for a in all_anchors() {
            let rep = consistent_run_in_segment(&g, &s, &a).unwrap();
            if a.tail() == r.tail() {
                assert_eq!(rep, ConsistencyReport::Unique(r.clone()));
            } else {
                assert!(matches!(rep, ConsistencyReport::NotPermitted(_)), "{a}: {rep:?}");
            }
        }
    }

    #[test]
    fn zero_profile_is_strong_and_pinned_ones_are_not() {
        let g = valueless();
        let anchors = all_anchors();
        let v = check_strong(&g, &constants(0), 8, &anchors).unwrap();
        assert!(matches!(v, StrongVerdict::Verified { .. }), "{v:?}");
        let s0 = strengthen(&g, &constants(0), &Run::constant(0)).unwrap();
        assert!(matches!(check_strong(&g, &s0, 8, &anchors).unwrap(), StrongVerdict::Verified { .. }));
        let s1 = strengthen(&g, &constants(1), &Run::constant(1)).unwrap();
        assert!(matches!(check_strong(&g, &s1, 8, &anchors).unwrap(), StrongVerdict::Verified { .. }));
        let pinned_ones = StrategyProfile::new(vec![
            StrategyMachine::constant(PLAYER_1, 1),
            StrategyMachine::pinning(Run::constant(1), escort_machine(PLAYER_2)),
        ]);
        match check_strong(&g, &pinned_ones, 8, &anchors).unwrap() {
            StrongVerdict::CounterExample { player, run, .. } => {
                assert_eq!(player, PLAYER_2);
                assert!(!crate::winset::run_in_winning_set(&run, &match &g.payoff {
                    PayoffSpec::WinLose(w) => w.clone(),
                    _ => unreachable!(),
                })
                .unwrap());
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn one_player_games_cannot_be_strengthened() {
        let g = GameSpec {
            players: 1,
            alphabet: 2,
            turn: TurnFunction::single(PLAYER_1),
            payoff: PayoffSpec::Builtin("eq-no-strong".into()),
        };
        assert!(matches!(
            strengthen(&g, &StrategyProfile::new(vec![StrategyMachine::constant(PLAYER_1, 0)]), &Run::constant(0)),
            Err(Error::Precondition(_))
        ));
    }
}
