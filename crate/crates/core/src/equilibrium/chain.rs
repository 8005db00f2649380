//! Per-instance certificates for the two lower-bound inequality chains, and
//! the sub-game among uncompromised agents used by the second one.
//!
//! `W(a, b)` for two profiles means `W(c)` with `c_i = a_i ∪ b_i`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{GameError, Result};
use crate::game::{
    Action, CompromiseLabel, GameInstance, JointAction, ResourceId, UtilityKind, WelfareSpec,
    TOLERANCE,
};

use super::{is_pne, optimal_welfare};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainStep {
    pub label: &'static str,
    pub relation: Relation,
    pub left: f64,
    pub right: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundChainCertificate {
    /// Final multiplier on `W(a^ne)`.
    pub factor: f64,
    /// Set when the chain is evaluated outside the range the bound was
    /// derived for (`|K| >= n - 1` for the general chain).
    pub extrapolated: bool,
    pub steps: Vec<ChainStep>,
}

impl BoundChainCertificate {
    pub fn holds(&self) -> bool {
        self.steps.iter().all(|s| s.holds)
    }

    pub fn failing(&self) -> impl Iterator<Item = &ChainStep> {
        self.steps.iter().filter(|s| !s.holds)
    }
}

struct ChainBuilder {
    steps: Vec<ChainStep>,
    last: f64,
}

impl ChainBuilder {
    fn start(value: f64) -> Self {
        ChainBuilder {
            steps: Vec::new(),
            last: value,
        }
    }

    fn push(&mut self, label: &'static str, relation: Relation, right: f64) {
        let left = self.last;
        let holds = match relation {
            Relation::Le => left <= right + TOLERANCE,
            Relation::Eq => (left - right).abs() <= TOLERANCE,
        };
        self.steps.push(ChainStep {
            label,
            relation,
            left,
            right,
            holds,
        });
        self.last = right;
    }
}

fn check_preconditions(game: &GameInstance, a_ne: &JointAction, a_opt: &JointAction) -> Result<()> {
    game.validate_profile(a_ne)?;
    game.check_shape(a_opt)?;
    if game.any_label(CompromiseLabel::Disabled) {
        return Err(GameError::Precondition(
            "chain requires no disabled agents".into(),
        ));
    }
    if !is_pne(game, a_ne)? {
        return Err(GameError::Precondition(format!(
            "{a_ne} is not a pure Nash equilibrium"
        )));
    }
    let w_opt = game.welfare_eval(a_opt)?;
    let (best, _) = optimal_welfare(game)?;
    if w_opt < best - TOLERANCE {
        return Err(GameError::Precondition(format!(
            "{a_opt} has welfare {w_opt}, below the optimum {best}"
        )));
    }
    Ok(())
}

/// Profile where only agent `i` acts.
fn alone(n: usize, i: usize, action: &Action) -> JointAction {
    JointAction::all_empty(n).with(i, action.clone())
}

/// Evaluates the general valid-utility chain
/// `W(a^opt) ≤ … ≤ (2 + |K|) W(a^ne)` step by step.
pub fn check_bound_chain_general(
    game: &GameInstance,
    a_ne: &JointAction,
    a_opt: &JointAction,
) -> Result<BoundChainCertificate> {
    check_preconditions(game, a_ne, a_opt)?;
    let n = game.n();
    let w = |p: &JointAction| game.welfare_eval(p);
    let compromised: Vec<bool> = game
        .compromise()
        .iter()
        .map(|l| l.is_compromised())
        .collect();
    let k = compromised.iter().filter(|&&c| c).count();
    let obs = game.observation_structure();
    let w_ne = w(a_ne)?;

    // a_i paired with a^ne on P_i, everyone else opted out
    let with_observed = |i: usize, action: &Action| -> JointAction {
        let mut p = a_ne.restrict(|j| obs.observes(i, j));
        p.0[i] = action.clone();
        p
    };

    let mut chain = ChainBuilder::start(w(a_opt)?);

    chain.push(
        "nondecreasing: W(a_opt) <= W(a_opt, a_ne)",
        Relation::Le,
        w(&a_opt.union(a_ne))?,
    );

    let mut telescoped = w_ne;
    let mut prefix = a_ne.clone();
    for i in 0..n {
        let before = w(&prefix)?;
        prefix.0[i] = prefix.0[i].union(a_opt.get(i));
        telescoped += w(&prefix)? - before;
    }
    chain.push(
        "telescoping over agents in index order",
        Relation::Eq,
        telescoped,
    );

    let mut sub = w_ne;
    for i in 0..n {
        let observed = a_ne.restrict(|j| obs.observes(i, j));
        sub += w(&with_observed(i, a_opt.get(i)))? - w(&observed)?;
    }
    chain.push(
        "submodularity: marginals against observed a_ne",
        Relation::Le,
        sub,
    );

    let mut utils_opt = w_ne;
    let mut utils_ne = w_ne;
    let mut eff_opt_k = 0.0;
    let mut eff_ne_k = 0.0;
    let mut w_ne_k = 0.0;
    for (i, &is_compromised) in compromised.iter().enumerate() {
        if is_compromised {
            utils_opt += w(&alone(n, i, a_opt.get(i)))?;
            eff_opt_k += game.utility(i, &alone(n, i, a_opt.get(i)))?;
            eff_ne_k += game.utility(i, &alone(n, i, a_ne.get(i)))?;
            w_ne_k += w(&alone(n, i, a_ne.get(i)))?;
        } else {
            utils_opt += game.utility(i, &with_observed(i, a_opt.get(i)))?;
            utils_ne += game.utility(i, &with_observed(i, a_ne.get(i)))?;
        }
    }
    chain.push(
        "utility dominates marginal contribution",
        Relation::Le,
        utils_opt,
    );
    chain.push(
        "equilibrium for observed agents",
        Relation::Le,
        utils_ne + eff_opt_k,
    );
    chain.push(
        "utilities sum to at most W; equilibrium for compromised",
        Relation::Le,
        2.0 * w_ne + eff_ne_k,
    );
    chain.push(
        "compromised utility bounded by own welfare",
        Relation::Le,
        2.0 * w_ne + w_ne_k,
    );
    let factor = 2.0 + k as f64;
    chain.push(
        "nondecreasing: W(a_i^ne) <= W(a_ne)",
        Relation::Le,
        factor * w_ne,
    );

    let mut steps = chain.steps;
    let w_opt = steps[0].left;
    steps.push(ChainStep {
        label: "overall",
        relation: Relation::Le,
        left: w_opt,
        right: factor * w_ne,
        holds: w_opt <= factor * w_ne + TOLERANCE,
    });
    Ok(BoundChainCertificate {
        factor,
        extrapolated: n >= 1 && k + 1 >= n,
        steps,
    })
}

/// Agents outside `K`, in index order.
pub fn subgame_agents(game: &GameInstance) -> Vec<usize> {
    (0..game.n())
        .filter(|&i| game.label(i) == CompromiseLabel::Normal)
        .collect()
}

/// The game among uncompromised agents once blind and isolated agents have
/// committed to `fixed`: `W̄(ā) = W(ā, a_B) − W(a_B)` with MC utilities.
///
/// Only the blind agents' entries enter `W̄`; uncompromised agents cannot see
/// isolated ones. Separable welfare yields shifted curves
/// `W̄_r(c) = W_r(c + |a_B|_r) − W_r(|a_B|_r)`; tabulated welfare yields a
/// table over subsets of the resources the remaining agents can reach.
pub fn subgame(game: &GameInstance, fixed: &BTreeMap<usize, Action>) -> Result<GameInstance> {
    if !game.all_mc() {
        return Err(GameError::Precondition(
            "sub-game requires MC utilities".into(),
        ));
    }
    for i in 0..game.n() {
        let independent = game.label(i).is_independent();
        match fixed.get(&i) {
            None if independent => {
                return Err(GameError::Precondition(format!(
                    "fixed profile has no action for compromised agent {i}"
                )))
            }
            Some(_) if !independent => {
                return Err(GameError::Precondition(format!(
                    "agent {i} is not blind or isolated but has a fixed action"
                )))
            }
            Some(a) if !game.actions(i).contains(a) => {
                return Err(GameError::Precondition(format!(
                    "fixed action {a} is not in agent {i}'s action set"
                )))
            }
            _ => {}
        }
    }
    let agents = subgame_agents(game);
    let blind: Vec<&Action> = fixed
        .iter()
        .filter(|(&i, _)| game.label(i) == CompromiseLabel::Blind)
        .map(|(_, a)| a)
        .collect();
    let m = agents.len();

    let welfare = match game.welfare() {
        WelfareSpec::Separable { curves } => {
            let mut shift = vec![0usize; game.num_resources()];
            for a in &blind {
                for r in a.resources() {
                    shift[r.index()] += 1;
                }
            }
            let curves = curves
                .iter()
                .zip(&shift)
                .map(|(curve, &s)| (0..=m).map(|c| curve[c + s] - curve[s]).collect())
                .collect();
            WelfareSpec::Separable { curves }
        }
        WelfareSpec::Tabulated { .. } => {
            const MAX_REACHABLE: usize = 20;
            let mut reach: Vec<ResourceId> = agents
                .iter()
                .flat_map(|&i| {
                    game.actions(i)
                        .iter()
                        .flat_map(|a| a.resources().iter().copied())
                })
                .collect();
            reach.sort_unstable();
            reach.dedup();
            if reach.len() > MAX_REACHABLE {
                return Err(GameError::SizeCap {
                    size: 1u128 << reach.len(),
                    cap: 1u128 << MAX_REACHABLE,
                });
            }
            let base = game.welfare_refs(&blind)?;
            let mut table = BTreeMap::new();
            for mask in 0u32..(1u32 << reach.len()) {
                let subset = Action::new(
                    reach
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &r)| r),
                );
                let mut view = blind.clone();
                view.push(&subset);
                let value = game.welfare_refs(&view)? - base;
                if value < -TOLERANCE {
                    return Err(GameError::Invalid(format!(
                        "welfare decreases when adding {subset} to the blind agents' resources"
                    )));
                }
                table.insert(subset.resources().to_vec(), value.max(0.0));
            }
            WelfareSpec::Tabulated { table }
        }
    };
    GameInstance::new(
        game.num_resources(),
        agents.iter().map(|&i| game.actions(i).to_vec()).collect(),
        welfare,
        vec![UtilityKind::MarginalContribution; m],
        vec![CompromiseLabel::Normal; m],
    )
}

/// Evaluates the marginal-contribution chain
/// `W(a^opt) ≤ … ≤ (1 + |K|) W(a^ne)` for games with at least one blind agent.
pub fn check_bound_chain_mc(
    game: &GameInstance,
    a_ne: &JointAction,
    a_opt: &JointAction,
) -> Result<BoundChainCertificate> {
    if !game.all_mc() {
        return Err(GameError::Precondition(
            "chain requires MC utilities for every agent".into(),
        ));
    }
    if !game.any_label(CompromiseLabel::Blind) {
        return Err(GameError::Precondition(
            "chain requires at least one blind agent".into(),
        ));
    }
    check_preconditions(game, a_ne, a_opt)?;
    let n = game.n();
    let w = |p: &JointAction| game.welfare_eval(p);
    let label = |i: usize| game.label(i);
    let is_blind = |i: usize| label(i) == CompromiseLabel::Blind;
    let is_normal = |i: usize| label(i) == CompromiseLabel::Normal;
    let k = game.compromised_count();
    let km1 = (k - 1) as f64;

    let w_ne = w(a_ne)?;
    let ne_b = a_ne.restrict(is_blind);
    let w_ne_b = w(&ne_b)?;
    let opt_u_ne_b = a_opt.restrict(is_normal).union(&ne_b);
    let w_opt_u_ne_b = w(&opt_u_ne_b)?;

    let mut sum_opt_k = 0.0;
    let mut sum_ne_k = 0.0;
    for i in (0..n).filter(|&i| !is_normal(i)) {
        sum_opt_k += w(&alone(n, i, a_opt.get(i)))?;
        sum_ne_k += w(&alone(n, i, a_ne.get(i)))?;
    }

    let fixed: BTreeMap<usize, Action> = (0..n)
        .filter(|&i| label(i).is_independent())
        .map(|i| (i, a_ne.get(i).clone()))
        .collect();
    let sub = subgame(game, &fixed)?;
    let agents = subgame_agents(game);
    let project = |p: &JointAction| JointAction(agents.iter().map(|&i| p.get(i).clone()).collect());
    let wbar_opt_u = sub.welfare_eval(&project(a_opt))?;
    let (wbar_sub_opt, _) = optimal_welfare(&sub)?;
    let wbar_ne = sub.welfare_eval(&project(a_ne))?;
    let w_ne_u_b = w(&a_ne.restrict(|i| is_normal(i) || is_blind(i)))?;

    let tail = 2.0 * w_ne_b + km1 * w_ne;
    let mut chain = ChainBuilder::start(w(a_opt)?);
    chain.push(
        "monotonicity: W(a_opt) <= W(a_opt, a_ne_B)",
        Relation::Le,
        w(&a_opt.union(&ne_b))?,
    );
    chain.push(
        "submodularity: split off compromised agents",
        Relation::Le,
        w_opt_u_ne_b + sum_opt_k,
    );
    chain.push(
        "compromised agents maximize their own welfare",
        Relation::Le,
        w_opt_u_ne_b + sum_ne_k,
    );
    chain.push(
        "monotonicity: one blind agent inside W(a_ne_B)",
        Relation::Le,
        w_opt_u_ne_b + w_ne_b + km1 * w_ne,
    );
    chain.push(
        "add and subtract W(a_ne_B)",
        Relation::Eq,
        w_opt_u_ne_b - w_ne_b + tail,
    );
    chain.push(
        "definition of the sub-game welfare",
        Relation::Eq,
        wbar_opt_u + tail,
    );
    chain.push("sub-game optimum", Relation::Le, wbar_sub_opt + tail);
    chain.push(
        "sub-game equilibrium is within factor 2",
        Relation::Le,
        2.0 * wbar_ne + tail,
    );
    chain.push(
        "definition of the sub-game welfare",
        Relation::Eq,
        2.0 * w_ne_u_b + km1 * w_ne,
    );
    let factor = 1.0 + k as f64;
    chain.push(
        "monotonicity: W(a_ne_U, a_ne_B) <= W(a_ne)",
        Relation::Le,
        factor * w_ne,
    );

    let mut steps = chain.steps;
    let w_opt = steps[0].left;
    steps.push(ChainStep {
        label: "overall",
        relation: Relation::Le,
        left: w_opt,
        right: factor * w_ne,
        holds: w_opt <= factor * w_ne + TOLERANCE,
    });
    Ok(BoundChainCertificate {
        factor,
        extrapolated: false,
        steps,
    })
}
