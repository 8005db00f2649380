//! Best responses, exhaustive pure-Nash enumeration, optimal welfare and the
//! price of anarchy of a single instance.

mod chain;
mod search;

pub use chain::{
    check_bound_chain_general, check_bound_chain_mc, subgame, subgame_agents,
    BoundChainCertificate, ChainStep, Relation,
};
pub use search::{worst_case_search, SearchConfig, SearchOutcome};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::{Action, CompromiseLabel, GameInstance, JointAction, TOLERANCE};
use crate::space::{to_indices, to_joint, view, ProfileSpace, DEFAULT_PROFILE_CAP, SHARD_SIZE};

/// Pure Nash equilibria of a game, in enumeration order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumSet {
    pub equilibria: Vec<JointAction>,
    pub welfare: Vec<f64>,
    /// Profiles examined after fixing compromised agents' candidate actions.
    pub profiles_scanned: u64,
}

impl EquilibriumSet {
    pub fn is_empty(&self) -> bool {
        self.equilibria.is_empty()
    }

    pub fn len(&self) -> usize {
        self.equilibria.len()
    }

    /// Index of the worst equilibrium; ties go to the first in enumeration order.
    pub fn worst(&self) -> Option<usize> {
        first_extreme(&self.welfare, |cand, best| cand < best - TOLERANCE)
    }

    /// Index of the best equilibrium; ties go to the first in enumeration order.
    pub fn best(&self) -> Option<usize> {
        first_extreme(&self.welfare, |cand, best| cand > best + TOLERANCE)
    }
}

fn first_extreme(values: &[f64], better: impl Fn(f64, f64) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &v) in values.iter().enumerate() {
        match best {
            Some(b) if !better(v, values[b]) => {}
            _ => best = Some(k),
        }
    }
    best
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityClass {
    /// Any utility satisfying the valid-utility-game conditions.
    GeneralVug,
    /// Every agent uses marginal contribution.
    Mc,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoAReport {
    pub n: usize,
    pub k: usize,
    pub opt_welfare: f64,
    pub opt_profile: JointAction,
    pub equilibria: usize,
    pub worst_ne_welfare: Option<f64>,
    pub worst_ne_profile: Option<JointAction>,
    pub best_ne_welfare: Option<f64>,
    /// `worst_ne_welfare / opt_welfare`; `None` when no pure equilibrium exists.
    pub ratio: Option<f64>,
    pub theoretical_bound: f64,
    /// `None` when the ratio is undefined.
    pub bound_satisfied: Option<bool>,
}

/// Effective utility of each of agent `i`'s actions with the others fixed.
pub(crate) fn action_utilities(game: &GameInstance, i: usize, idx: &[usize]) -> Result<Vec<f64>> {
    let mut p = view(game, idx);
    game.actions(i)
        .iter()
        .map(|act| {
            p[i] = act;
            game.effective_refs(i, &p)
        })
        .collect()
}

fn argmax_set(values: &[f64]) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..values.len())
        .filter(|&k| values[k] >= max - TOLERANCE)
        .collect()
}

/// Indices of agent `i`'s best responses to `idx`, ties kept.
pub(crate) fn best_response_indices(
    game: &GameInstance,
    i: usize,
    idx: &[usize],
) -> Result<Vec<usize>> {
    if game.label(i) == CompromiseLabel::Disabled {
        return Ok(vec![game.empty_index(i)]);
    }
    Ok(argmax_set(&action_utilities(game, i, idx)?))
}

fn is_best_response(game: &GameInstance, i: usize, idx: &[usize]) -> Result<bool> {
    if game.label(i) == CompromiseLabel::Disabled {
        return Ok(game.actions(i)[idx[i]].is_empty());
    }
    let mut p = view(game, idx);
    let current = game.effective_refs(i, &p)?;
    for (k, act) in game.actions(i).iter().enumerate() {
        if k == idx[i] {
            continue;
        }
        p[i] = act;
        if game.effective_refs(i, &p)? > current + TOLERANCE {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `B_i(a_{-i})` under effective utilities, ties within tolerance kept.
pub fn best_response_set(game: &GameInstance, i: usize, a: &JointAction) -> Result<Vec<Action>> {
    game.validate_profile(a)?;
    let idx = to_indices(game, a)?;
    Ok(best_response_indices(game, i, &idx)?
        .into_iter()
        .map(|k| game.actions(i)[k].clone())
        .collect())
}

/// Whether every agent is best-responding at `a`.
pub fn is_pne(game: &GameInstance, a: &JointAction) -> Result<bool> {
    game.validate_profile(a)?;
    let idx = to_indices(game, a)?;
    is_pne_indices(game, &idx)
}

pub(crate) fn is_pne_indices(game: &GameInstance, idx: &[usize]) -> Result<bool> {
    for i in 0..game.n() {
        if !is_best_response(game, i, idx)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn enumerate_pne(game: &GameInstance) -> Result<EquilibriumSet> {
    enumerate_pne_capped(game, DEFAULT_PROFILE_CAP)
}

/// Exhaustive enumeration of pure Nash equilibria.
///
/// Blind and isolated agents' best responses do not depend on anyone else,
/// so they are computed once and only those actions are enumerated; disabled
/// agents are pinned to the empty action. The cap applies to the reduced
/// space actually scanned.
pub fn enumerate_pne_capped(game: &GameInstance, cap: u128) -> Result<EquilibriumSet> {
    let n = game.n();
    let empty: Vec<usize> = (0..n).map(|i| game.empty_index(i)).collect();
    let mut candidates = Vec::with_capacity(n);
    for i in 0..n {
        let c = match game.label(i) {
            CompromiseLabel::Disabled => vec![empty[i]],
            CompromiseLabel::Blind | CompromiseLabel::Isolated => {
                best_response_indices(game, i, &empty)?
            }
            CompromiseLabel::Normal => (0..game.actions(i).len()).collect(),
        };
        candidates.push(c);
    }
    let space = ProfileSpace::new(candidates, cap)?;
    let normal: Vec<usize> = (0..n)
        .filter(|&i| game.label(i) == CompromiseLabel::Normal)
        .collect();

    let shards = space.shards(SHARD_SIZE);
    let found: Vec<Vec<(Vec<usize>, f64)>> = shards
        .par_iter()
        .map(|&(lo, hi)| -> Result<Vec<(Vec<usize>, f64)>> {
            let mut out = Vec::new();
            let mut idx = vec![0usize; n];
            'profiles: for k in lo..hi {
                space.decode(k, &mut idx);
                for &i in &normal {
                    if !is_best_response(game, i, &idx)? {
                        continue 'profiles;
                    }
                }
                let w = game.welfare_refs(&view(game, &idx))?;
                out.push((idx.clone(), w));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut equilibria = Vec::new();
    let mut welfare = Vec::new();
    for (idx, w) in found.into_iter().flatten() {
        equilibria.push(to_joint(game, &idx));
        welfare.push(w);
    }
    Ok(EquilibriumSet {
        equilibria,
        welfare,
        profiles_scanned: space.total,
    })
}

pub fn optimal_welfare(game: &GameInstance) -> Result<(f64, JointAction)> {
    optimal_welfare_capped(game, DEFAULT_PROFILE_CAP)
}

/// Maximum of `W` over the whole joint action space `A(G)`, compromise
/// ignored: the benchmark is what the uncompromised agents could achieve.
/// Ties go to the lexicographically first maximizer.
pub fn optimal_welfare_capped(game: &GameInstance, cap: u128) -> Result<(f64, JointAction)> {
    let space = ProfileSpace::full(game, cap)?;
    let n = game.n();
    let shards = space.shards(SHARD_SIZE);
    let bests: Vec<(f64, u64)> = shards
        .par_iter()
        .map(|&(lo, hi)| -> Result<(f64, u64)> {
            let mut idx = vec![0usize; n];
            let mut best = (f64::NEG_INFINITY, lo);
            for k in lo..hi {
                space.decode(k, &mut idx);
                let w = game.welfare_refs(&view(game, &idx))?;
                if w > best.0 + TOLERANCE {
                    best = (w, k);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let (w, k) = bests.into_iter().fold((f64::NEG_INFINITY, 0), |acc, b| {
        if b.0 > acc.0 + TOLERANCE {
            b
        } else {
            acc
        }
    });
    let mut idx = vec![0usize; n];
    space.decode(k, &mut idx);
    Ok((w, to_joint(game, &idx)))
}

/// Closed-form price of anarchy for games with `n` agents and `k` compromised.
///
/// Disabled agents give 0. Otherwise general valid utility games give
/// `max(1/(2+k), 1/n)`, and marginal-contribution games with at least one
/// blind agent give `1/(1+k)`.
pub fn theoretical_poa(
    n: usize,
    k: usize,
    any_disabled: bool,
    any_blind: bool,
    class: UtilityClass,
) -> Result<f64> {
    if n == 0 || k > n {
        return Err(GameError::InvalidParams(format!(
            "need 0 <= k <= n and n >= 1, got n={n}, k={k}"
        )));
    }
    if any_disabled {
        return Ok(0.0);
    }
    let general = (1.0 / (2.0 + k as f64)).max(1.0 / n as f64);
    Ok(match class {
        UtilityClass::Mc if any_blind => 1.0 / (1.0 + k as f64),
        _ => general,
    })
}

/// The utility class and bound that apply to `game`.
pub fn theoretical_poa_for(game: &GameInstance) -> Result<f64> {
    let class = if game.all_mc() {
        UtilityClass::Mc
    } else {
        UtilityClass::GeneralVug
    };
    theoretical_poa(
        game.n(),
        game.compromised_count(),
        game.any_label(CompromiseLabel::Disabled),
        game.any_label(CompromiseLabel::Blind),
        class,
    )
}

pub fn instance_poa(game: &GameInstance) -> Result<PoAReport> {
    instance_poa_capped(game, DEFAULT_PROFILE_CAP)
}

pub fn instance_poa_capped(game: &GameInstance, cap: u128) -> Result<PoAReport> {
    let ne = enumerate_pne_capped(game, cap)?;
    let (opt_welfare, opt_profile) = optimal_welfare_capped(game, cap)?;
    poa_report(game, &ne, opt_welfare, opt_profile)
}

pub(crate) fn poa_report(
    game: &GameInstance,
    ne: &EquilibriumSet,
    opt_welfare: f64,
    opt_profile: JointAction,
) -> Result<PoAReport> {
    let theoretical_bound = theoretical_poa_for(game)?;
    let worst = ne.worst();
    let worst_ne_welfare = worst.map(|w| ne.welfare[w]);
    // W is nonnegative, so a zero optimum makes every profile optimal.
    let ratio = worst_ne_welfare.map(|w| {
        if opt_welfare <= TOLERANCE {
            1.0
        } else {
            w / opt_welfare
        }
    });
    Ok(PoAReport {
        n: game.n(),
        k: game.compromised_count(),
        opt_welfare,
        opt_profile,
        equilibria: ne.len(),
        worst_ne_welfare,
        worst_ne_profile: worst.map(|w| ne.equilibria[w].clone()),
        best_ne_welfare: ne.best().map(|b| ne.welfare[b]),
        ratio,
        theoretical_bound,
        bound_satisfied: ratio.map(|r| r >= theoretical_bound - TOLERANCE),
    })
}
