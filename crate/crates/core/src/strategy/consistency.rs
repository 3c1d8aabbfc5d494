use crate::error::{Error, Result};
use crate::model::{GameSpec, Parity, PlayerId, Position, Run, SegmentAnchor, StageIndex, TailClass, TailPattern};

use super::{DeepDecision, StrategyProfile, Tracker};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsistencyVerdict {
    /// No violation at stages `-depth..=0`; nothing certified below.
    Verified(u32),
    /// The latest stage where the run leaves the profile's recommendation.
    ViolationAt(StageIndex),
    TailCertified,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConsistencyReport {
    Empty,
    Unique(Run),
    /// Union over the anchors examined; `exhaustive_for_anchors` is false when
    /// some anchor could not be decided.
    Multiple { runs: Vec<Run>, exhaustive_for_anchors: bool },
    NotPermitted(PlayerId),
}

/// Outcome of comparing deep recommendations with a tail.
enum DeepCheck {
    Agrees,
    /// The player active at this parity recommends against the tail.
    Disagrees(PlayerId, Parity),
    Undecided(String),
}

fn deep_check(tracker: &Tracker, tail: &TailPattern) -> DeepCheck {
    let game = tracker.game;
    let mut worst = None;
    for parity in [Parity::Even, Parity::Odd] {
        let i = match game.active_in_tail(tail, parity) {
            Ok(i) => i,
            Err(e) => return DeepCheck::Undecided(e.to_string()),
        };
        let agrees = match tracker.profile.machines[i].deep_decision(game, tail, parity) {
            DeepDecision::FollowTail => true,
            DeepDecision::Action(a) => tail.class(parity) == TailClass::Constant(a),
            DeepDecision::Unknown => {
                return DeepCheck::Undecided(format!("player {}'s machine has no fixed deep action on tail {tail}", i + 1))
            }
        };
        if !agrees {
            match worst {
                Some((j, _)) if j <= i => {}
                _ => worst = Some((i, parity)),
            }
        }
    }
    match worst {
        None => DeepCheck::Agrees,
        Some((i, p)) => DeepCheck::Disagrees(i, p),
    }
}

/// Checks that `r` follows `s` at every stage from 0 down to `-depth`, and
/// certifies every earlier stage when the profile's deep recommendations
/// reproduce the tail.
pub fn is_consistent(game: &GameSpec, r: &Run, s: &StrategyProfile, depth: u32) -> Result<ConsistencyVerdict> {
    let tracker = Tracker::new(game, s);
    let r = r.normalized();
    let tail = *r.tail();
    let ws = r.window_start();
    let deep = tracker.horizon(&tail).min(ws);
    let low = if tail.is_constant() { (-(depth as StageIndex)).min(deep - 2) } else { ws };
    let mut j = tracker.observe(&r.prefix(low)?)?;
    let mut latest = None;
    for k in low..=0 {
        let a = r.action_at(k)?;
        if tracker.decide(&j, k)? != a {
            latest = Some(k);
        }
        if k < 0 {
            j = tracker.advance(&j, k, a)?;
        }
    }
    if let Some(k) = latest {
        return Ok(ConsistencyVerdict::ViolationAt(k));
    }
    let checked = (-low).max(0) as u32;
    if deep < low.min(ws) {
        return Ok(ConsistencyVerdict::Verified(checked));
    }
    Ok(match deep_check(&tracker, &tail) {
        DeepCheck::Agrees => ConsistencyVerdict::TailCertified,
        DeepCheck::Disagrees(_, parity) => ConsistencyVerdict::ViolationAt(parity.last_below(deep + 1)),
        DeepCheck::Undecided(_) => ConsistencyVerdict::Verified(checked),
    })
}

/// The unique run of the anchor's segment consistent with `s`, or the
/// lowest player whose machine rules the segment out.
///
/// Only the anchor's tail matters: the run is rolled forward from a deep
/// tail-only history, so any window in the anchor is ignored.
pub fn consistent_run_in_segment(game: &GameSpec, s: &StrategyProfile, anchor: &SegmentAnchor) -> Result<ConsistencyReport> {
    let tracker = Tracker::new(game, s);
    let tail = *anchor.tail();
    game.check_tail(&tail)?;
    match deep_check(&tracker, &tail) {
        DeepCheck::Agrees => {}
        DeepCheck::Disagrees(i, _) => return Ok(ConsistencyReport::NotPermitted(i)),
        DeepCheck::Undecided(why) => return Err(Error::Inconclusive(why)),
    }
    let start = (tracker.horizon(&tail) + 1).min(0);
    let mut j = tracker
        .observe_tail(&tail, start)
        .map_err(|e| Error::Inconclusive(format!("cannot roll forward on tail {tail}: {e}")))?;
    let mut window = Vec::with_capacity((1 - start) as usize);
    for k in start..=0 {
        let a = tracker.decide(&j, k).map_err(|e| Error::Inconclusive(format!("stage {k}: {e}")))?;
        window.push(a);
        if k < 0 {
            j = tracker.advance(&j, k, a)?;
        }
    }
    Ok(ConsistencyReport::Unique(Run::new(tail, window)?.normalized()))
}

/// Consistent runs of `s` over the given segments.
pub fn enumerate_consistent_runs(game: &GameSpec, s: &StrategyProfile, anchors: &[SegmentAnchor]) -> Result<ConsistencyReport> {
    let mut runs: Vec<Run> = Vec::new();
    let mut exhaustive = true;
    let mut seen: Vec<TailPattern> = Vec::new();
    for a in anchors {
        if seen.contains(a.tail()) {
            continue;
        }
        seen.push(*a.tail());
        match consistent_run_in_segment(game, s, a) {
            Ok(ConsistencyReport::Unique(r)) => runs.push(r),
            Ok(_) => {}
            Err(Error::Inconclusive(_)) | Err(Error::Unsupported(_)) => exhaustive = false,
            Err(e) => return Err(e),
        }
    }
    if runs.is_empty() && exhaustive {
        Ok(ConsistencyReport::Empty)
    } else {
        Ok(ConsistencyReport::Multiple { runs, exhaustive_for_anchors: exhaustive })
    }
}

/// Tail-only anchors at stage 0 for every tail pattern.
pub fn anchors_for(tails: &[TailPattern]) -> Vec<SegmentAnchor> {
    tails.iter().map(|t| Position::tail_only(0, *t).expect("stage 0")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PayoffSpec, TurnFunction, PLAYER_1};
    use crate::strategy::{StrategyMachine, TailScope};

    fn one_player() -> GameSpec {
        GameSpec {
            players: 1,
            alphabet: 2,
            turn: TurnFunction::single(PLAYER_1),
            payoff: PayoffSpec::Builtin("eq-no-strong".into()),
        }
    }

    fn no_run_machine() -> StrategyProfile {
        StrategyProfile::new(vec![StrategyMachine::TailAware {
            owner: PLAYER_1,
            scope: TailScope::Any,
            symbol: 1,
            when_all: 0,
            fallback: Box::new(StrategyMachine::constant(PLAYER_1, 1)),
        }])
    }

    fn repeat() -> StrategyProfile {
        StrategyProfile::new(vec![StrategyMachine::repeat_previous(PLAYER_1, 2)])
    }

    fn constant_tails() -> Vec<TailPattern> {
        TailPattern::all_binary(false)
    }

    #[test]
    fn all_ones_violates_the_no_run_machine_at_stage_zero() {
        let v = is_consistent(&one_player(), &Run::constant(1), &no_run_machine(), 8).unwrap();
        assert_eq!(v, ConsistencyVerdict::ViolationAt(0));
    }

    #[test]
    fn single_zero_violates_earlier() {
        let r = Run::new(TailPattern::constant(1), vec![0, 1, 1, 1]).unwrap();
        match is_consistent(&one_player(), &r, &no_run_machine(), 8).unwrap() {
            ConsistencyVerdict::ViolationAt(k) => assert!(k < -3),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn zeros_are_tail_certified_for_repeat_previous() {
        assert_eq!(is_consistent(&one_player(), &Run::constant(0), &repeat(), 4).unwrap(), ConsistencyVerdict::TailCertified);
    }

    #[test]
    fn segment_runs() {
        let g = one_player();
        let zeros = Position::tail_only(0, TailPattern::constant(0)).unwrap();
        assert_eq!(consistent_run_in_segment(&g, &repeat(), &zeros).unwrap(), ConsistencyReport::Unique(Run::constant(0)));
        let ones = Position::tail_only(0, TailPattern::constant(1)).unwrap();
        assert_eq!(consistent_run_in_segment(&g, &no_run_machine(), &ones).unwrap(), ConsistencyReport::NotPermitted(0));
        let windowed = Position::new(0, TailPattern::constant(0), vec![1]).unwrap();
        assert_eq!(consistent_run_in_segment(&g, &repeat(), &windowed).unwrap(), ConsistencyReport::Unique(Run::constant(0)));
    }

    #[test]
    fn enumerations_over_constant_anchors() {
        let g = one_player();
        let anchors = anchors_for(&constant_tails());
        assert_eq!(enumerate_consistent_runs(&g, &no_run_machine(), &anchors).unwrap(), ConsistencyReport::Empty);
        match enumerate_consistent_runs(&g, &repeat(), &anchors).unwrap() {
            ConsistencyReport::Multiple { runs, exhaustive_for_anchors } => {
                assert!(exhaustive_for_anchors);
                assert_eq!(runs, vec![Run::constant(0), Run::constant(1)]);
            }
            r => panic!("{r:?}"),
        }
        let only_zero = anchors_for(&[TailPattern::constant(0)]);
        assert_eq!(
            enumerate_consistent_runs(&g, &repeat(), &only_zero).unwrap(),
            ConsistencyReport::Multiple { runs: vec![Run::constant(0)], exhaustive_for_anchors: true }
        );
    }
}
