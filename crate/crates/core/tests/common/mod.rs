#![allow(dead_code)]

use infpast::winset::{Anchor, CylinderGenerator, OpenSet};
use infpast::{ActionId, Parity, Position, Run, StageIndex, TailPattern};
use proptest::prelude::*;

pub fn arb_periodic_anchor() -> impl Strategy<Value = Anchor> {
    prop_oneof![
        Just(Anchor::AllEven),
        Just(Anchor::AllOdd),
        Just(Anchor::All),
        (1i64..4, prop_oneof![Just(None), Just(Some(Parity::Even)), Just(Some(Parity::Odd))])
            .prop_map(|(n, p)| Anchor::AtMost(-n, p)),
    ]
}

pub fn arb_generator(single: bool) -> impl Strategy<Value = CylinderGenerator> {
    (proptest::collection::vec(0u8..2, 1..=3), arb_periodic_anchor(), 0i64..5, any::<bool>()).prop_map(
        move |(pattern, periodic, back, pick_single)| {
            let anchor = if single && pick_single { Anchor::Single(-(pattern.len() as StageIndex - 1) - back) } else { periodic };
            CylinderGenerator::new(anchor, pattern)
        },
    )
}

/// Open sets; with `single`, some generators sit at one fixed stage.
pub fn arb_open(single: bool) -> impl Strategy<Value = OpenSet> {
    proptest::collection::vec(arb_generator(single), 1..=3).prop_map(OpenSet::new)
}

pub fn arb_constant_tail() -> impl Strategy<Value = TailPattern> {
    (0u8..2, 0u8..2).prop_map(|(e, o)| TailPattern::per_parity(e, o))
}

pub fn arb_window(max: usize) -> impl Strategy<Value = Vec<ActionId>> {
    proptest::collection::vec(0u8..2, 0..=max)
}

pub fn arb_position(max_depth: StageIndex, max_window: usize) -> impl Strategy<Value = Position> {
    (0..=max_depth, arb_constant_tail(), arb_window(max_window))
        .prop_map(|(d, t, w)| Position::new(-d, t, w).unwrap())
}

pub fn arb_run(max_window: usize) -> impl Strategy<Value = Run> {
    (arb_constant_tail(), proptest::collection::vec(0u8..2, 1..=max_window)).prop_map(|(t, w)| Run::new(t, w).unwrap())
}

/// Every run with a window of exactly `len` letters over each tail.
pub fn runs_of_length(len: usize, tails: &[TailPattern]) -> Vec<Run> {
    let mut out = Vec::new();
    for t in tails {
        for code in 0..(1u32 << len) {
            out.push(Run::new(*t, (0..len).map(|i| ((code >> i) & 1) as ActionId).collect()).unwrap());
        }
    }
    out
}

/// Membership by scanning every generator instance on a materialized
/// stretch; constant tails repeat with period two, so a stretch of two
/// pattern lengths below the window covers every instance class.
pub fn naive_member(w: &OpenSet, r: &Run) -> bool {
    let longest = w.generators.iter().map(|g| g.pattern.len()).max().unwrap_or(1) as StageIndex;
    let low = r.window_start().min(-10) - 2 * longest - 4;
    w.generators.iter().any(|g| {
        let len = g.pattern.len() as StageIndex;
        (low..=1 - len).any(|s| {
            g.anchor.admits(s) && (0..len).all(|i| r.action_at(s + i).unwrap() == g.pattern[i as usize])
        })
    })
}
