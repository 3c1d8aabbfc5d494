use num::{One, Zero};

use crate::continuous::evaluate_discounted;
use crate::error::Result;
use crate::model::{GameSpec, PayoffSpec, Run, PLAYER_1};
use crate::winset::Automaton;
use crate::{gallery, Rational};

/// Payoff vectors of represented runs for one game.
#[derive(Debug, Clone)]
pub struct PayoffEvaluator<'g> {
    game: &'g GameSpec,
    automaton: Option<Automaton>,
}

impl<'g> PayoffEvaluator<'g> {
    pub fn new(game: &'g GameSpec) -> Result<Self> {
        game.validate()?;
        let automaton = match &game.payoff {
            PayoffSpec::WinLose(w) => Some(w.automaton(game.alphabet)),
            _ => None,
        };
        Ok(PayoffEvaluator { game, automaton })
    }

    pub fn game(&self) -> &GameSpec {
        self.game
    }

    /// The suffix automaton of a win-lose game's winning set.
    pub fn automaton(&self) -> Option<&Automaton> {
        self.automaton.as_ref()
    }

    pub fn evaluate(&self, r: &Run) -> Result<Vec<Rational>> {
        match &self.game.payoff {
            PayoffSpec::WinLose(_) => {
                Ok(win_lose_vector(self.automaton.as_ref().expect("built for win-lose").accepts_run(r)?))
            }
            PayoffSpec::Discounted(d) => evaluate_discounted(r, d, self.game),
            PayoffSpec::Builtin(id) => gallery::builtin_payoff(id, self.game, r),
        }
    }

    /// Payoffs unchanged by altering finitely many actions.
    pub fn is_tail(&self) -> bool {
        match &self.game.payoff {
            PayoffSpec::WinLose(_) => false,
            PayoffSpec::Discounted(d) => d.g.iter().flatten().flatten().all(Zero::is_zero),
            PayoffSpec::Builtin(id) => gallery::builtin_is_tail(id),
        }
    }
}

/// Player 1 gets 1 and player 2 gets 0 on a run in `W`, and conversely.
pub fn win_lose_vector(player1_wins: bool) -> Vec<Rational> {
    let (w, l) = (Rational::one(), Rational::zero());
    let mut v = vec![l.clone(), l];
    v[if player1_wins { PLAYER_1 } else { 1 - PLAYER_1 }] = w;
    v
}

pub fn evaluate_run(game: &GameSpec, r: &Run) -> Result<Vec<Rational>> {
    PayoffEvaluator::new(game)?.evaluate(r)
}
