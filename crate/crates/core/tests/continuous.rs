use std::collections::BTreeMap;
use std::sync::Arc;

use infpast::continuous::{evaluate_discounted, synthesize_eps_equilibrium, DiscountedPayoff};
use infpast::strategy::{StagedTable, StrategyMachine, StrategyProfile, Tracker};
use infpast::{GameSpec, PayoffSpec, PlayerId, Position, Rational, Run, StageIndex, TurnFunction};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn arb_game() -> impl Strategy<Value = GameSpec> {
    let turn = prop_oneof![
        Just(TurnFunction::Alternating),
        proptest::collection::vec(0usize..2, 4).prop_map(|table| TurnFunction::FiniteMemory { memory: 1, table }),
    ];
    (1i64..3, proptest::collection::vec(0i64..=4, 8), turn).prop_map(|(d, g, turn)| {
        let pay = DiscountedPayoff::from_fn(q(d, 3), 2, 2, |i, j, a| q(g[i * 4 + j * 2 + a as usize], 4));
        GameSpec { players: 2, alphabet: 2, turn, payoff: PayoffSpec::Discounted(pay) }
    })
}

/// Plays `s` from `p` through stage 0.
fn play(game: &GameSpec, s: &StrategyProfile, p: &Position) -> Run {
    let t = Tracker::new(game, s);
    let mut j = t.observe(p).unwrap();
    let mut window = p.window().to_vec();
    for k in p.stage()..=0 {
        let a = t.decide(&j, k).unwrap();
        j = t.advance(&j, k, a).unwrap();
        window.push(a);
    }
    Run::new(*p.tail(), window).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn window_deviations_gain_at_most_epsilon(
        game in arb_game(),
        deviator in 0usize..2,
        start in 0u32..8,
        moves in proptest::collection::vec(0u8..2, 8),
    ) {
        let eps = q(1, 4);
        let cert = synthesize_eps_equilibrium(&game, &eps).unwrap();
        let PayoffSpec::Discounted(pay) = &game.payoff else { unreachable!() };
        let n = -((start % (cert.truncation_depth + 1)) as StageIndex);
        let p = cert.run.prefix(n).unwrap();
        let table: BTreeMap<(StageIndex, usize), u8> = (n..=0).map(|k| ((k, 0), moves[(-k) as usize])).collect();
        let m = StrategyMachine::StagedTable(Arc::new(StagedTable {
            owner: deviator as PlayerId,
            start: n,
            before: [0, 0],
            memory: 0,
            alphabet: 2,
            table,
        }));
        let followed = evaluate_discounted(&play(&game, &cert.profile, &p), pay, &game).unwrap();
        let deviated = evaluate_discounted(&play(&game, &cert.profile.with_machine(m), &p), pay, &game).unwrap();
        prop_assert!(&deviated[deviator] <= &(&followed[deviator] + &eps), "{} vs {}", deviated[deviator], followed[deviator]);
    }

    #[test]
    fn a_lone_player_with_monotone_rewards_plays_the_best_action(d in 1i64..6, low in 0i64..5, gap in 1i64..5) {
        let pay = DiscountedPayoff::from_fn(q(d, 10), 1, 2, |_, _, a| q(low + gap * a as i64, 8));
        let game = GameSpec { players: 1, alphabet: 2, turn: TurnFunction::single(0), payoff: PayoffSpec::Discounted(pay) };
        let cert = synthesize_eps_equilibrium(&game, &q(1, 16)).unwrap();
        for k in -(cert.truncation_depth as StageIndex)..=0 {
            prop_assert_eq!(cert.run.action_at(k).unwrap(), 1);
        }
    }
}
