//! Exhaustive validators for the structural assumptions on `W` and `U_i`.
//!
//! Submodularity is checked over admissible profiles only: `a_{-i}` and
//! `a'_{-i}` range over `A_{-i}`. "Contained in" is read per welfare kind:
//! base-set inclusion `R(a_{-i}) ⊆ R(a'_{-i})` for tabulated welfare, and
//! per-resource count domination `|a_{-i}|_r ≤ |a'_{-i}|_r` for separable
//! welfare, whose value depends on multiplicities rather than the base set.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::game::{Action, GameInstance, JointAction, WelfareSpec, EMPTY_ACTION, TOLERANCE};
use crate::space::{to_joint, view, ProfileSpace};

/// Default cap on `|A|` for the validators (pairwise checks are quadratic).
pub const DEFAULT_CHECK_CAP: u128 = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubmodularityViolation {
    NotNormalized {
        value: f64,
    },
    NotNondecreasing {
        smaller: JointAction,
        larger: JointAction,
        welfare_smaller: f64,
        welfare_larger: f64,
    },
    NotSubmodular {
        agent: usize,
        action: Action,
        others: JointAction,
        others_larger: JointAction,
        gain: f64,
        gain_larger: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubmodularityReport {
    pub passed: bool,
    pub profiles: u64,
    pub violation: Option<SubmodularityViolation>,
}

/// Condition 2 witness: `U_i(a) < W(a) − W(∅, a_{-i})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalWitness {
    pub agent: usize,
    pub profile: JointAction,
    pub utility: f64,
    pub marginal: f64,
}

/// Condition 3 witness: `Σ_i U_i(a) > W(a)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetWitness {
    pub profile: JointAction,
    pub utility_sum: f64,
    pub welfare: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VugReport {
    pub passed: bool,
    pub profiles: u64,
    pub marginal_violation: Option<MarginalWitness>,
    pub budget_violation: Option<BudgetWitness>,
    /// Whether `Σ_i U_i(a) = W(a)` on every profile.
    pub budget_tight: bool,
}

/// Occupancy signature of a partial profile: counts per resource for
/// separable welfare, 0/1 membership for tabulated welfare.
type Signature = Vec<u32>;

struct SigIndex<'g> {
    game: &'g GameInstance,
    separable: bool,
}

impl<'g> SigIndex<'g> {
    fn new(game: &'g GameInstance) -> Self {
        SigIndex {
            game,
            separable: game.welfare().is_separable(),
        }
    }

    fn of(&self, actions: &[&Action]) -> Signature {
        let mut s = vec![0u32; self.game.num_resources()];
        for a in actions {
            self.add(&mut s, a);
        }
        s
    }

    fn add(&self, s: &mut Signature, a: &Action) {
        for r in a.resources() {
            let slot = &mut s[r.index()];
            *slot = if self.separable { *slot + 1 } else { 1 };
        }
    }

    fn welfare(&self, s: &Signature) -> Result<f64> {
        match self.game.welfare() {
            WelfareSpec::Separable { curves } => Ok(s
                .iter()
                .zip(curves)
                .filter(|(&c, _)| c > 0)
                .map(|(&c, curve)| curve[(c as usize).min(curve.len() - 1)])
                .sum()),
            WelfareSpec::Tabulated { .. } => {
                let set = Action::from_ids(
                    s.iter()
                        .enumerate()
                        .filter(|(_, &c)| c > 0)
                        .map(|(r, _)| r as u32),
                );
                self.game.welfare_refs(&[&set])
            }
        }
    }
}

fn dominated(a: &Signature, b: &Signature) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Distinct signatures of the profiles in `space`, each with its first
/// (lowest-index) representative.
fn distinct_signatures(
    game: &GameInstance,
    sigs: &SigIndex<'_>,
    space: &ProfileSpace,
    skip: Option<usize>,
) -> Vec<(Signature, Vec<usize>)> {
    let mut seen: HashMap<Signature, usize> = HashMap::new();
    let mut out: Vec<(Signature, Vec<usize>)> = Vec::new();
    let mut idx = vec![0usize; game.n()];
    for k in 0..space.total {
        space.decode(k, &mut idx);
        let mut v = view(game, &idx);
        if let Some(i) = skip {
            v[i] = &EMPTY_ACTION;
        }
        let s = sigs.of(&v);
        if !seen.contains_key(&s) {
            seen.insert(s.clone(), out.len());
            out.push((s, idx.clone()));
        }
    }
    out
}

/// Exhaustively checks that `W` is normalized, nondecreasing and submodular
/// over the game's admissible profiles. Reports the first violation found.
pub fn check_submodular(game: &GameInstance) -> Result<SubmodularityReport> {
    check_submodular_capped(game, DEFAULT_CHECK_CAP)
}

pub fn check_submodular_capped(game: &GameInstance, cap: u128) -> Result<SubmodularityReport> {
    let space = ProfileSpace::full(game, cap)?;
    let sigs = SigIndex::new(game);
    let report = |violation: Option<SubmodularityViolation>| SubmodularityReport {
        passed: violation.is_none(),
        profiles: space.total,
        violation,
    };

    let empty = game.welfare_refs(&vec![&EMPTY_ACTION; game.n()])?;
    if empty.abs() > TOLERANCE {
        return Ok(report(Some(SubmodularityViolation::NotNormalized {
            value: empty,
        })));
    }

    // Monotonicity over comparable full profiles.
    let full = distinct_signatures(game, &sigs, &space, None);
    let values: Vec<f64> = full
        .iter()
        .map(|(s, _)| sigs.welfare(s))
        .collect::<Result<_>>()?;
    let hit = (0..full.len()).into_par_iter().find_map_first(|p| {
        (0..full.len()).find_map(|q| {
            (p != q && values[p] > values[q] + TOLERANCE && dominated(&full[p].0, &full[q].0))
                .then_some((p, q))
        })
    });
    if let Some((p, q)) = hit {
        return Ok(report(Some(SubmodularityViolation::NotNondecreasing {
            smaller: to_joint(game, &full[p].1),
            larger: to_joint(game, &full[q].1),
            welfare_smaller: values[p],
            welfare_larger: values[q],
        })));
    }

    // Decreasing marginal gains for each agent and action.
    for i in 0..game.n() {
        let mut choices = space.choices.clone();
        choices[i] = vec![game.empty_index(i)];
        let others_space = ProfileSpace::new(choices, cap)?;
        let others = distinct_signatures(game, &sigs, &others_space, Some(i));
        let base: Vec<f64> = others
            .iter()
            .map(|(s, _)| sigs.welfare(s))
            .collect::<Result<_>>()?;
        for action in game.actions(i).iter().filter(|a| !a.is_empty()) {
            let gains: Vec<f64> = others
                .iter()
                .zip(&base)
                .map(|((s, _), &w)| {
                    let mut t = s.clone();
                    sigs.add(&mut t, action);
                    Ok(sigs.welfare(&t)? - w)
                })
                .collect::<Result<_>>()?;
            let hit = (0..others.len()).into_par_iter().find_map_first(|p| {
                (0..others.len()).find_map(|q| {
                    (p != q
                        && gains[p] < gains[q] - TOLERANCE
                        && dominated(&others[p].0, &others[q].0))
                    .then_some((p, q))
                })
            });
            if let Some((p, q)) = hit {
                let strip = |idx: &[usize]| to_joint(game, idx).with(i, Action::empty());
                return Ok(report(Some(SubmodularityViolation::NotSubmodular {
                    agent: i,
                    action: action.clone(),
                    others: strip(&others[p].1),
                    others_larger: strip(&others[q].1),
                    gain: gains[p],
                    gain_larger: gains[q],
                })));
            }
        }
    }
    Ok(report(None))
}

/// Checks conditions 2 and 3 of a valid utility game for the assigned
/// (uncompromised) utilities over every joint action.
pub fn check_vug(game: &GameInstance) -> Result<VugReport> {
    check_vug_capped(game, DEFAULT_CHECK_CAP)
}

pub fn check_vug_capped(game: &GameInstance, cap: u128) -> Result<VugReport> {
    check_vug_with(game, cap, |i, p| game.utility_refs(i, p))
}

/// [`check_vug`] with a caller-supplied utility `U_i` on profile views.
pub fn check_vug_with<F>(game: &GameInstance, cap: u128, utility: F) -> Result<VugReport>
where
    F: Fn(usize, &[&Action]) -> Result<f64> + Sync,
{
    let space = ProfileSpace::full(game, cap)?;
    let n = game.n();

    struct ShardOut {
        marginal: Option<MarginalWitness>,
        budget: Option<BudgetWitness>,
        tight: bool,
    }

    let shards = space.shards(crate::space::SHARD_SIZE);
    let outs: Vec<ShardOut> = shards
        .par_iter()
        .map(|&(lo, hi)| -> Result<ShardOut> {
            let mut out = ShardOut {
                marginal: None,
                budget: None,
                tight: true,
            };
            let mut idx = vec![0usize; n];
            for k in lo..hi {
                space.decode(k, &mut idx);
                let p = view(game, &idx);
                let w = game.welfare_refs(&p)?;
                let mut sum = 0.0;
                for i in 0..n {
                    let u = utility(i, &p)?;
                    sum += u;
                    if out.marginal.is_none() {
                        let mc = game.mc_refs(i, &p)?;
                        if u < mc - TOLERANCE {
                            out.marginal = Some(MarginalWitness {
                                agent: i,
                                profile: to_joint(game, &idx),
                                utility: u,
                                marginal: mc,
                            });
                        }
                    }
                }
                if (sum - w).abs() > TOLERANCE {
                    out.tight = false;
                }
                if out.budget.is_none() && sum > w + TOLERANCE {
                    out.budget = Some(BudgetWitness {
                        profile: to_joint(game, &idx),
                        utility_sum: sum,
                        welfare: w,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let marginal_violation = outs.iter().find_map(|o| o.marginal.clone());
    let budget_violation = outs.iter().find_map(|o| o.budget.clone());
    Ok(VugReport {
        passed: marginal_violation.is_none() && budget_violation.is_none(),
        profiles: space.total,
        marginal_violation,
        budget_violation,
        budget_tight: outs.iter().all(|o| o.tight),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::game::{CompromiseLabel, ResourceId, UtilityKind};

    fn supermodular_table_game() -> GameInstance {
        let table = BTreeMap::from([
            (vec![ResourceId(0)], 1.0),
            (vec![ResourceId(1)], 1.0),
            (vec![ResourceId(0), ResourceId(1)], 3.0),
        ]);
        GameInstance::new(
            2,
            vec![vec![Action::single(0)], vec![Action::single(1)]],
            WelfareSpec::Tabulated { table },
            vec![UtilityKind::MarginalContribution; 2],
            vec![CompromiseLabel::Normal; 2],
        )
        .unwrap()
    }

    #[test]
    fn separable_coverage_passes() {
        let g = GameInstance::new(
            2,
            vec![vec![Action::single(0), Action::single(1)]; 3],
            WelfareSpec::coverage(&[1.0, 0.4], 3),
            vec![UtilityKind::EqualShare; 3],
            vec![CompromiseLabel::Normal; 3],
        )
        .unwrap();
        assert!(check_submodular(&g).unwrap().passed);
        let vug = check_vug(&g).unwrap();
        assert!(vug.passed && vug.budget_tight);
    }

    #[test]
    fn supermodular_table_is_flagged() {
        let g = supermodular_table_game();
        let rep = check_submodular(&g).unwrap();
        assert!(!rep.passed);
        assert!(matches!(
            rep.violation,
            Some(SubmodularityViolation::NotSubmodular { .. })
        ));
        // MC on this table also over-pays: 2 + 2 > 3
        let vug = check_vug(&g).unwrap();
        let w = vug.budget_violation.expect("budget violation");
        assert_eq!((w.utility_sum, w.welfare), (4.0, 3.0));
    }

    #[test]
    fn non_normalized_table_is_flagged() {
        let table = BTreeMap::from([(vec![], 0.5), (vec![ResourceId(0)], 1.0)]);
        let g = GameInstance::new(
            1,
            vec![vec![Action::single(0)]],
            WelfareSpec::Tabulated { table },
            vec![UtilityKind::MarginalContribution],
            vec![CompromiseLabel::Normal],
        )
        .unwrap();
        let rep = check_submodular(&g).unwrap();
        assert_eq!(
            rep.violation,
            Some(SubmodularityViolation::NotNormalized { value: 0.5 })
        );
    }

    #[test]
    fn decreasing_table_is_flagged() {
        let table = BTreeMap::from([
            (vec![ResourceId(0)], 2.0),
            (vec![ResourceId(0), ResourceId(1)], 1.0),
            (vec![ResourceId(1)], 0.5),
        ]);
        let g = GameInstance::new(
            2,
            vec![vec![Action::single(0)], vec![Action::single(1)]],
            WelfareSpec::Tabulated { table },
            vec![UtilityKind::MarginalContribution; 2],
            vec![CompromiseLabel::Normal; 2],
        )
        .unwrap();
        let rep = check_submodular(&g).unwrap();
        assert!(matches!(
            rep.violation,
            Some(SubmodularityViolation::NotNondecreasing { .. })
        ));
    }

    #[test]
    fn doubled_welfare_utility_breaks_budget() {
        let g = supermodular_table_game();
        let rep =
            check_vug_with(&g, DEFAULT_CHECK_CAP, |_, p| Ok(2.0 * g.welfare_refs(p)?)).unwrap();
        assert!(!rep.passed);
        let w = rep.budget_violation.unwrap();
        assert!(w.utility_sum > w.welfare);
    }

    #[test]
    fn size_cap_refuses() {
        let g = GameInstance::new(
            1,
            vec![vec![Action::single(0)]; 12],
            WelfareSpec::coverage(&[1.0], 12),
            vec![UtilityKind::MarginalContribution; 12],
            vec![CompromiseLabel::Normal; 12],
        )
        .unwrap();
        assert!(matches!(
            check_submodular_capped(&g, 1000),
            Err(crate::GameError::SizeCap { .. })
        ));
    }
}
