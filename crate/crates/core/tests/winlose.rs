mod common;

use common::{arb_open, arb_position};
use infpast::strategy::{check_equilibrium, consistent_run_in_segment, ConsistencyReport, StrategyMachine, StrategyProfile};
use infpast::winlose::{
    classify_open, compute_w, segment_value, solve_aux_game, synthesize_open_checked, winlose_spec, winning_player,
    winning_player_winlose, OpenClass, Outcome, WIndexValue,
};
use infpast::winset::{run_in_winning_set, Automaton, CylinderGenerator, OpenSet, WinningSetSpec, Anchor};
use infpast::{Parity, Position, Run, StageIndex, TailPattern, PLAYER_1, PLAYER_2};
use proptest::prelude::*;

fn member(w: &OpenSet, r: &Run) -> bool {
    run_in_winning_set(r, &WinningSetSpec::Open(w.clone())).unwrap()
}

fn arb_machine(owner: usize) -> impl Strategy<Value = StrategyMachine> {
    (0usize..2, proptest::collection::vec(0u8..2, 4)).prop_map(move |(memory, t)| StrategyMachine::FiniteMemory {
        owner,
        memory,
        table: t[..2 << memory].to_vec(),
    })
}

/// Plays out the auxiliary game from `entry` at `n` against every
/// opponent reply, the winner following its recorded choices.
fn forces(a: &Automaton, n: StageIndex, k: StageIndex, s: &infpast::winset::AutState, res: &infpast::winlose::AuxGameResult) -> bool {
    if k == 1 {
        return a.accepted(s) == (res.winner == PLAYER_1);
    }
    let mover = if Parity::of(k) == Parity::Even { PLAYER_1 } else { PLAYER_2 };
    if mover == res.winner {
        match res.optimal_actions.get(&(k, s.clone())) {
            Some(&act) => forces(a, n, k + 1, &a.step(s, k, act), res),
            None => false,
        }
    } else {
        (0..2).all(|act| forces(a, n, k + 1, &a.step(s, k, act), res))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn each_position_has_one_winner_and_the_winner_stays_winning(w in arb_open(true), p in arb_position(4, 4)) {
        let oracle = |r: &Run| Ok(member(&w, r));
        let i = winning_player(&p, 2, &oracle).unwrap();
        prop_assert_eq!(i, winning_player_winlose(&p, &WinningSetSpec::Open(w.clone()), 2).unwrap());
        let mover = if Parity::of(p.stage()) == Parity::Even { PLAYER_1 } else { PLAYER_2 };
        let next: Vec<bool> = (0..2u8)
            .map(|a| {
                if p.stage() == 0 {
                    member(&w, &p.extend_to_run(a).unwrap()) == (i == PLAYER_1)
                } else {
                    winning_player(&p.extend(a).unwrap(), 2, &oracle).unwrap() == i
                }
            })
            .collect();
        if mover == i {
            prop_assert!(next.iter().any(|&b| b));
        } else {
            prop_assert!(next.iter().all(|&b| b));
        }
    }

    #[test]
    fn player_1_winning_from_n_wins_from_earlier_starts(w in arb_open(false)) {
        let fresh = Automaton::new(vec![w.clone()], 2).fresh();
        let winners: Vec<usize> = (-7..=0).map(|n| solve_aux_game(&w, 2, n, &fresh).unwrap().winner).collect();
        for pair in winners.windows(2) {
            // pair[0] starts one stage earlier than pair[1].
            if pair[1] == PLAYER_1 {
                prop_assert_eq!(pair[0], PLAYER_1);
            }
        }
    }

    #[test]
    fn recorded_choices_force_the_declared_winner(w in arb_open(true), n in -5i64..=0) {
        let a = Automaton::new(vec![w.clone()], 2);
        let res = solve_aux_game(&w, 2, n, &a.fresh()).unwrap();
        prop_assert!(forces(&a, n, n, &a.fresh(), &res));
    }

    #[test]
    fn w_never_exceeds_the_stage(w in arb_open(true), p in arb_position(5, 4)) {
        if let WIndexValue::Stage(k) = compute_w(&p, &w, 2).unwrap() {
            prop_assert!(k <= p.stage());
        }
    }

    #[test]
    fn certificates_pass_the_checker(w in arb_open(true)) {
        if let Ok(c) = synthesize_open_checked(&w, 2, 6) {
            let game = winlose_spec(WinningSetSpec::Open(w.clone()), 2);
            prop_assert!(check_equilibrium(&game, &c.profile, &c.run, c.verified_depth, None).unwrap().passed());
            let winner = if member(&w, &c.run) { PLAYER_1 } else { PLAYER_2 };
            prop_assert_eq!(c.outcome, Outcome::Winner(winner));
        }
    }

    #[test]
    fn part_one_equilibria_are_won_by_player_1(w in arb_open(false), m1 in arb_machine(PLAYER_1), m2 in arb_machine(PLAYER_2)) {
        prop_assume!(matches!(classify_open(&w, 2), OpenClass::Part1(_)));
        let game = winlose_spec(WinningSetSpec::Open(w.clone()), 2);
        let s = StrategyProfile::new(vec![m1, m2]);
        for t in TailPattern::all_binary(false) {
            if let Ok(ConsistencyReport::Unique(r)) = consistent_run_in_segment(&game, &s, &Position::tail_only(0, t).unwrap()) {
                if check_equilibrium(&game, &s, &r, 6, None).unwrap().passed() {
                    prop_assert!(member(&w, &r), "{}", r);
                }
            }
        }
    }

    #[test]
    fn some_segment_of_a_rank_two_set_is_determined(a in arb_open(false), b in arb_open(false)) {
        let chain = WinningSetSpec::GdeltaChain(vec![a, b]);
        let determined = TailPattern::all_binary(false)
            .into_iter()
            .filter_map(|t| segment_value(&chain, 2, &Position::tail_only(0, t).unwrap()).ok())
            .count();
        prop_assert!(determined > 0);
    }
}

/// Complementing the winning set is not a role swap: when player 1 moves
/// last with both outcomes reachable, player 1 wins either way.
#[test]
fn complementing_the_set_can_leave_the_winner_unchanged() {
    let w = OpenSet::new(vec![CylinderGenerator::new(Anchor::Single(0), vec![0])]);
    let p = Position::tail_only(0, TailPattern::constant(1)).unwrap();
    let inside = |r: &Run| Ok(member(&w, r));
    let outside = |r: &Run| Ok(!member(&w, r));
    assert_eq!(winning_player(&p, 2, &inside).unwrap(), PLAYER_1);
    assert_eq!(winning_player(&p, 2, &outside).unwrap(), PLAYER_1);
}
