//! The two-player winning set built from "who settled on their rare action
//! first", evaluated on represented runs.
//!
//! Player 1 moves at even stages and player 2 at odd ones. `m_i(r, a)` is
//! the lowest stage of player `i`'s parity from which `i` only played `a`
//! up to `i`'s last move, `+∞` when that last move is not `a`, `-∞` when
//! `i` always played `a`.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{ActionId, Parity, PlayerId, Run, StageIndex, TailClass, PLAYER_1};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Extended {
    NegInf,
    At(StageIndex),
    PosInf,
}

/// What a represented run pins down about some `m_i(r, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MValue {
    Exact(Extended),
    /// Any finite stage of the player's parity `<= at_most`, and also `+∞`
    /// when `or_pos_inf`. Arises when the letters that fix `m` fall in an
    /// infinitely-often tail class.
    Finite { at_most: StageIndex, or_pos_inf: bool },
}

fn parity_of(player: PlayerId) -> Parity {
    if player == PLAYER_1 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// The letter at `k`, `None` inside an infinitely-often tail class.
pub fn letter(r: &Run, k: StageIndex) -> Option<ActionId> {
    if k >= r.window_start() {
        Some(r.window()[(k - r.window_start()) as usize])
    } else {
        r.tail().class_at(k).constant()
    }
}

pub fn m_value(r: &Run, player: PlayerId, a: ActionId) -> MValue {
    let parity = parity_of(player);
    let top = parity.last_below(1);
    let mut k = top;
    while k >= r.window_start() {
        if letter(r, k) != Some(a) {
            return MValue::Exact(if k == top { Extended::PosInf } else { Extended::At(k + 2) });
        }
        k -= 2;
    }
    // Every stage `k + 2 ..= top` of this parity carries `a`; `k` is in the tail.
    match r.tail().class(parity) {
        TailClass::Constant(c) if c == a => MValue::Exact(Extended::NegInf),
        TailClass::Constant(_) => MValue::Exact(if k == top { Extended::PosInf } else { Extended::At(k + 2) }),
        TailClass::BothInfinitelyOften => {
            if k == top {
                MValue::Finite { at_most: top, or_pos_inf: true }
            } else {
                MValue::Finite { at_most: k + 2, or_pos_inf: false }
            }
        }
    }
}

/// `m_i` straight from the definition on the explicit stages `-depth..=0`,
/// reading the constant tail below. `None` when a letter is not constant.
pub fn m_from_prefix(r: &Run, player: PlayerId, a: ActionId, depth: StageIndex) -> Option<Extended> {
    let parity = parity_of(player);
    let top = parity.last_below(1);
    let stages: Vec<StageIndex> = (-depth..=top).rev().filter(|k| Parity::of(*k) == parity).collect();
    if letter(r, top)? != a {
        return Some(Extended::PosInf);
    }
    let mut lowest = top;
    for &k in &stages {
        if letter(r, k)? != a {
            return Some(Extended::At(lowest));
        }
        lowest = k;
    }
    // The explicit stages all carry `a`; the constant tail decides.
    match r.tail().class(parity).constant()? {
        c if c == a && r.window_start() > -depth => Some(Extended::NegInf),
        _ if r.window_start() <= -depth => None,
        _ => Some(Extended::At(lowest)),
    }
}

fn candidates(m: MValue, floor: StageIndex, parity: Parity) -> Vec<Extended> {
    match m {
        MValue::Exact(x) => vec![x],
        MValue::Finite { at_most, or_pos_inf } => {
            let mut v: Vec<Extended> = (floor..=at_most).filter(|k| Parity::of(*k) == parity).map(Extended::At).collect();
            if or_pos_inf {
                v.push(Extended::PosInf);
            }
            v
        }
    }
}

fn finite_bound(m: MValue) -> Option<StageIndex> {
    match m {
        MValue::Exact(Extended::At(k)) => Some(k),
        MValue::Finite { at_most, .. } => Some(at_most),
        _ => None,
    }
}

/// Whether `m1 < m2` holds for every run the values are drawn from:
/// `None` when it holds for some and fails for others.
pub fn m_less(m1: MValue, m2: MValue) -> Option<bool> {
    let floor = finite_bound(m1).into_iter().chain(finite_bound(m2)).min().unwrap_or(0) - 4;
    let mut seen = [false; 2];
    for x in candidates(m1, floor, Parity::Even) {
        for y in candidates(m2, floor, Parity::Odd) {
            seen[(x.cmp(&y) == Ordering::Less) as usize] = true;
        }
    }
    match seen {
        [true, true] => None,
        [_, less] => Some(less),
    }
}

/// Player `i`'s rarely played action when `i` settled on the other one.
pub fn finite_action(r: &Run, player: PlayerId) -> Option<ActionId> {
    r.tail().class(parity_of(player)).constant().map(|c| 1 - c)
}

/// Truth of each of the four defining cases, evaluated independently.
pub fn case_truths(r: &Run) -> [Option<bool>; 4] {
    let f1 = finite_action(r, 0);
    let f2 = finite_action(r, 1);
    let cmp = |a1: ActionId, a2: ActionId| m_less(m_value(r, 0, a1), m_value(r, 1, a2));
    let gate = |holds: bool, v: Option<bool>| if holds { v } else { Some(false) };
    [
        gate(f1.is_some() && f2.is_some(), f1.zip(f2).and_then(|(a, b)| cmp(a, b))),
        gate(f1.is_none() && f2.is_none(), cmp(1, 1)),
        gate(f1.is_some() && f2.is_none(), f1.and_then(|a| cmp(a, a))),
        gate(f1.is_none() && f2.is_some(), f2.and_then(|a| cmp(a, a))),
    ]
}

/// Membership of `r` in player 1's winning set.
pub fn delta3_member(r: &Run) -> Result<bool> {
    let truths = case_truths(r);
    let mut any = false;
    for t in truths {
        match t {
            Some(v) => any |= v,
            None => {
                return Err(Error::Unsupported(format!(
                    "membership of {} {:?} depends on letters inside an infinitely-often class",
                    r.tail(),
                    r.window()
                )))
            }
        }
    }
    Ok(any)
}

/// The open variant: some odd stage `n` where player 2 played 0 while
/// player 1 played 1 at every even stage after `n`. Read literally on the
/// explicit letters; needs constant tail classes.
pub fn open_variant_member(r: &Run) -> Result<bool> {
    if !r.tail().is_constant() {
        return Err(Error::Unsupported("the open variant is evaluated on constant tails only".into()));
    }
    let low = Parity::Odd.last_below(r.window_start() - 2);
    let mut p1_ones = true;
    for k in (low..=0).rev() {
        let a = letter(r, k).expect("constant tail");
        match Parity::of(k) {
            Parity::Even => p1_ones &= a == 1,
            Parity::Odd => {
                if p1_ones && a == 0 {
                    return Ok(true);
                }
            }
        }
        if !p1_ones {
            return Ok(false);
        }
    }
    // Deeper odd stages repeat the tail and add even constraints only.
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TailPattern;
    use proptest::prelude::*;

    fn runs(max_len: usize, tails: &[TailPattern]) -> Vec<Run> {
        let mut out = Vec::new();
        for t in tails {
            for len in 1..=max_len {
                for code in 0..(1u32 << len) {
                    let w = (0..len).map(|i| ((code >> i) & 1) as ActionId).collect();
                    out.push(Run::new(*t, w).unwrap());
                }
            }
        }
        out
    }

    #[test]
    fn m_values_on_small_runs() {
        let r = Run::new(TailPattern::per_parity(0, 0), vec![1, 0, 1, 0, 1]).unwrap();
        assert_eq!(m_value(&r, 0, 1), MValue::Exact(Extended::At(-4)));
        assert_eq!(m_value(&r, 1, 1), MValue::Exact(Extended::PosInf));
        assert_eq!(m_value(&r, 1, 0), MValue::Exact(Extended::NegInf));
        assert_eq!(m_value(&Run::constant(1), 0, 1), MValue::Exact(Extended::NegInf));
        let r = Run::new(TailPattern::new(TailClass::BothInfinitelyOften, TailClass::Constant(0)), vec![1, 0, 1]).unwrap();
        assert_eq!(m_value(&r, 0, 1), MValue::Finite { at_most: -2, or_pos_inf: false });
    }

    #[test]
    fn settling_first_wins() {
        // Both settle on 0 with rare action 1; player 1 plays 1 from -2,
        // player 2 from -1.
        let r = Run::new(TailPattern::constant(0), vec![0, 1, 1, 1]).unwrap();
        assert_eq!(m_value(&r, 0, 1), MValue::Exact(Extended::At(-2)));
        assert_eq!(m_value(&r, 1, 1), MValue::Exact(Extended::At(-1)));
        assert!(delta3_member(&r).unwrap());
        let r = Run::new(TailPattern::constant(0), vec![1, 0, 1, 1]).unwrap();
        assert!(!delta3_member(&r).unwrap());
    }

    #[test]
    fn cases_are_exclusive_on_all_short_runs() {
        for r in runs(10, &TailPattern::all_binary(true)) {
            let held = case_truths(&r).iter().filter(|t| **t == Some(true)).count();
            assert!(held <= 1, "{} {:?}", r.tail(), r.window());
        }
    }

    #[test]
    fn open_variant_agrees_with_settling_order_on_constant_tails() {
        for r in runs(9, &TailPattern::all_binary(false)) {
            let lit = open_variant_member(&r).unwrap();
            let by_m = m_less(m_value(&r, 0, 1), m_value(&r, 1, 1)).unwrap();
            assert_eq!(lit, by_m, "{} {:?}", r.tail(), r.window());
        }
    }

    fn arb_constant_run() -> impl Strategy<Value = Run> {
        (0u8..2, 0u8..2, proptest::collection::vec(0u8..2, 1..12))
            .prop_map(|(e, o, w)| Run::new(TailPattern::per_parity(e, o), w).unwrap())
    }

    proptest! {
        #[test]
        fn m_matches_a_materialized_prefix(r in arb_constant_run(), player in 0usize..2, a in 0u8..2) {
            let from_prefix = m_from_prefix(&r, player, a, 20).expect("window shorter than depth");
            prop_assert_eq!(m_value(&r, player, a), MValue::Exact(from_prefix));
        }
    }
}
