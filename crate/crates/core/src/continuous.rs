//! Reversed-time discounted payoffs: exact evaluation on represented runs
//! and ε-equilibria certified by truncation.
//!
//! The action at stage `n` weighs `δ^{-n}`, so everything before stage `-K`
//! moves any payoff by at most `G_max · δ^{K+1}`. Inside the window
//! `-K..=0` the game is finite and solved exactly by backward induction.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{
    window_code, window_decode, ActionId, GameSpec, Parity, PayoffSpec, PlayerId, Run, StageIndex, TailPattern,
    TurnFunction,
};
use crate::strategy::{check_equilibrium, EquilibriumVerdict, StagedTable, StrategyMachine, StrategyProfile};
use crate::Rational;

/// `u_i(r) = (1-δ) Σ_{n<=0} δ^{-n} g[i][j_n][a_n]`, where `j_n` moved at `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscountedPayoff {
    pub delta: Rational,
    /// `g[recipient][actor][action]`.
    pub g: Vec<Vec<Vec<Rational>>>,
}

impl DiscountedPayoff {
    pub fn new(delta: Rational, g: Vec<Vec<Vec<Rational>>>) -> DiscountedPayoff {
        DiscountedPayoff { delta, g }
    }

    /// Builds the table from `f(recipient, actor, action)`.
    pub fn from_fn(delta: Rational, players: usize, alphabet: usize, f: impl Fn(PlayerId, PlayerId, ActionId) -> Rational) -> Self {
        let g = (0..players)
            .map(|i| (0..players).map(|j| (0..alphabet).map(|a| f(i, j, a as ActionId)).collect()).collect())
            .collect();
        DiscountedPayoff { delta, g }
    }

    pub fn validate(&self, players: usize, alphabet: usize) -> Result<()> {
        if self.delta <= Rational::zero() || self.delta >= Rational::one() {
            return Err(Error::Malformed(format!("discount factor {} outside (0, 1)", self.delta)));
        }
        let shaped = self.g.len() == players
            && self.g.iter().all(|row| row.len() == players && row.iter().all(|c| c.len() == alphabet));
        if !shaped {
            return Err(Error::Malformed(format!("stage-payoff table must be {players} x {players} x {alphabet}")));
        }
        Ok(())
    }

    pub fn g_max(&self) -> Rational {
        self.g.iter().flatten().flatten().map(|x| x.abs()).max().unwrap_or_else(Rational::zero)
    }

    fn stage_value(&self, actor: PlayerId, a: ActionId) -> Vec<Rational> {
        self.g.iter().map(|row| row[actor][a as usize].clone()).collect()
    }
}

fn pow(x: &Rational, e: StageIndex) -> Rational {
    num::pow(x.clone(), e as usize)
}

/// Exact payoff vector of `r`; the tail contributes a closed-form geometric
/// series per stage parity.
pub fn evaluate_discounted(r: &Run, pay: &DiscountedPayoff, game: &GameSpec) -> Result<Vec<Rational>> {
    if !r.tail().is_constant() {
        return Err(Error::Unsupported("discounted payoffs have no closed form on an infinitely-often tail class".into()));
    }
    let delta = &pay.delta;
    let one = Rational::one();
    let players = pay.g.len();
    let low = match &game.turn {
        TurnFunction::TailPredicate { stage, .. } => r.window_start().min(*stage),
        _ => r.window_start(),
    } - game.turn.memory() as StageIndex
        - 2;
    let mut total = vec![Rational::zero(); players];
    for n in low..=0 {
        let j = game.active_player(&r.prefix(n)?)?;
        let a = r.action_at(n)?;
        let w = pow(delta, -n);
        for (t, v) in total.iter_mut().zip(pay.stage_value(j, a)) {
            *t += &w * v;
        }
    }
    let ratio = &one / (&one - delta * delta);
    for parity in [Parity::Even, Parity::Odd] {
        let top = parity.last_below(low);
        let j = game.active_in_tail(r.tail(), parity)?;
        let a = r.tail().class(parity).constant().expect("constant tail");
        let w = pow(delta, -top) * &ratio;
        for (t, v) in total.iter_mut().zip(pay.stage_value(j, a)) {
            *t += &w * v;
        }
    }
    Ok(total.into_iter().map(|t| (&one - delta) * t).collect())
}

/// Smallest `K >= 0` with `2 G_max δ^{K+1} <= eps`.
pub fn truncation_depth(pay: &DiscountedPayoff, eps: &Rational) -> Result<u32> {
    if !eps.is_positive() {
        return Err(Error::Precondition("epsilon must be positive".into()));
    }
    let two_g = pay.g_max() * Rational::from_integer(2.into());
    let mut bound = &two_g * &pay.delta;
    let mut k = 0u32;
    while bound > *eps {
        bound *= &pay.delta;
        k += 1;
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnContinuity {
    /// The mover at stage `n` depends on the last `m` actions only.
    Continuous(usize),
    PossiblyDiscontinuous,
}

pub fn check_turn_continuity(turn: &TurnFunction) -> TurnContinuity {
    match turn {
        TurnFunction::Alternating => TurnContinuity::Continuous(0),
        TurnFunction::FiniteMemory { memory, .. } => TurnContinuity::Continuous(*memory),
        TurnFunction::TailPredicate { .. } => TurnContinuity::PossiblyDiscontinuous,
    }
}

#[derive(Debug, Clone)]
pub struct EpsilonCertificate {
    pub epsilon: Rational,
    pub truncation_depth: u32,
    /// Backward induction covers stages `-induction_depth..=0`; at least the
    /// truncation depth.
    pub induction_depth: u32,
    pub profile: StrategyProfile,
    pub run: Run,
    pub payoffs: Vec<Rational>,
    /// The checker's verdict at depth `induction_depth + memory + 1` with
    /// tolerance `epsilon`.
    pub verdict: EquilibriumVerdict,
}


fn mover(turn: &TurnFunction, k: StageIndex, context: usize) -> PlayerId {
    match turn {
        TurnFunction::Alternating => crate::model::alternating_player(Parity::of(k)),
        TurnFunction::FiniteMemory { table, .. } => table[context * 2 + Parity::of(k).index()],
        TurnFunction::TailPredicate { .. } => unreachable!("refused earlier"),
    }
}

/// An ε-equilibrium of a discounted game whose mover depends on finitely
/// many previous actions.
pub fn synthesize_eps_equilibrium(game: &GameSpec, eps: &Rational) -> Result<EpsilonCertificate> {
    game.validate()?;
    let pay = match &game.payoff {
        PayoffSpec::Discounted(d) => d,
        _ => return Err(Error::Precondition("ε-synthesis needs a discounted payoff".into())),
    };
    if check_turn_continuity(&game.turn) == TurnContinuity::PossiblyDiscontinuous {
        return Err(Error::Unsupported(
            "the mover depends on the whole past; a player may want to switch as early as possible and no stage is optimal"
                .into(),
        ));
    }
    let k_depth = truncation_depth(pay, eps)?;
    let m = game.turn.memory();
    // With memory, a deviation just below the induction window can hand a
    // later stage to another player, which the tail bound does not cover.
    // Deeper windows and other tails are tried, all-zero first, until the
    // check passes.
    let extra = if m == 0 { 0 } else { 2 * m as u32 + 2 };
    let mut last = None;
    for depth in k_depth..=k_depth + extra {
        for before in game.actions().flat_map(|e| game.actions().map(move |o| [e, o])) {
            let cert = induce(game, pay, eps, k_depth, depth, before)?;
            if cert.verdict.passed() {
                return Ok(cert);
            }
            last.get_or_insert((depth, before, cert.verdict));
        }
    }
    let (depth, before, verdict) = last.expect("nonempty alphabet");
    Err(Error::Inconclusive(format!(
        "backward induction from depth {depth} with tail {}:{} fails the ε-check: {verdict:?}; deeper windows and other tails fail too",
        before[0],
        before[1]
    )))
}

/// Backward induction on stages `-depth..=0` for every memory context, with
/// `before[parity]` played at every earlier stage.
fn induce(
    game: &GameSpec,
    pay: &DiscountedPayoff,
    eps: &Rational,
    k_depth: u32,
    depth: u32,
    before: [ActionId; 2],
) -> Result<EpsilonCertificate> {
    let low = -(depth as StageIndex);
    let m = game.turn.memory();
    let alphabet = game.alphabet;
    let contexts = alphabet.pow(m as u32);
    let one = Rational::one();
    let scale = &one - &pay.delta;

    // next[context]: payoff vector of stages k+1..=0 under the choices.
    let mut next: Vec<Vec<Rational>> = vec![vec![Rational::zero(); game.players]; contexts];
    let mut choice: BTreeMap<(StageIndex, usize), ActionId> = BTreeMap::new();
    for k in (low..=0).rev() {
        let w = &scale * pow(&pay.delta, -k);
        let mut here = Vec::with_capacity(contexts);
        for c in 0..contexts {
            let j = mover(&game.turn, k, c);
            let window = window_decode(c, m, alphabet);
            let mut best: Option<(ActionId, Vec<Rational>)> = None;
            for a in game.actions() {
                let after = if m == 0 { 0 } else { window_code(&shifted(&window, a), alphabet) };
                let v: Vec<Rational> =
                    pay.stage_value(j, a).into_iter().zip(&next[after]).map(|(g, rest)| &w * g + rest).collect();
                if best.as_ref().map_or(true, |(_, b)| v[j] > b[j]) {
                    best = Some((a, v));
                }
            }
            let (a, v) = best.expect("nonempty alphabet");
            choice.insert((k, c), a);
            here.push(v);
        }
        next = here;
    }

    let mut window: Vec<ActionId> = (low - m as StageIndex..low).map(|k| before[Parity::of(k).index()]).collect();
    let mut actions = Vec::new();
    for k in low..=0 {
        let a = choice[&(k, window_code(&window, alphabet))];
        actions.push(a);
        if m > 0 {
            window = shifted(&window, a);
        }
    }
    let run = Run::new(TailPattern::per_parity(before[0], before[1]), actions)?;
    let machines = (0..game.players)
        .map(|i| {
            let table = choice
                .iter()
                .filter(|((k, c), _)| mover(&game.turn, *k, *c) == i)
                .map(|(key, a)| (*key, *a))
                .collect();
            StrategyMachine::StagedTable(Arc::new(StagedTable { owner: i, start: low, before, memory: m, alphabet, table }))
        })
        .collect();
    let profile = StrategyProfile::new(machines);
    let payoffs = evaluate_discounted(&run, pay, game)?;
    // Deviations below this depth change only tail letters and the movers of
    // tail stages, which the truncation bound covers.
    let verdict = check_equilibrium(game, &profile, &run, depth + m as u32 + 1, Some(eps))?;
    Ok(EpsilonCertificate {
        epsilon: eps.clone(),
        truncation_depth: k_depth,
        induction_depth: depth,
        profile,
        run,
        payoffs,
        verdict,
    })
}

fn shifted(w: &[ActionId], a: ActionId) -> Vec<ActionId> {
    let mut v = w[1..].to_vec();
    v.push(a);
    v
}
