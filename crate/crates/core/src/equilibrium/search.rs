//! Randomized hill-climbing over small separable games, looking for the
//! lowest instance price of anarchy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{instance_poa_capped, PoAReport};
use crate::error::{GameError, Result};
use crate::game::{Action, CompromiseLabel, GameInstance, UtilityKind, WelfareSpec, TOLERANCE};
use crate::instances::{random_labels, UtilityMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub n: usize,
    pub k: usize,
    /// Labels of the compromised agents; drawn per restart when empty.
    #[serde(default)]
    pub labels: Vec<CompromiseLabel>,
    #[serde(default)]
    pub utility: UtilityMode,
    /// Allowed welfare increments per additional agent on a resource.
    pub value_grid: Vec<f64>,
    /// Number of instances evaluated.
    pub budget: u64,
    pub seed: u64,
    #[serde(default = "default_resources")]
    pub max_resources: usize,
    /// Upper bound on `|A_i|`, counting the empty action.
    #[serde(default = "default_actions")]
    pub max_actions: usize,
    /// Non-improving steps before restarting from a fresh random instance.
    #[serde(default = "default_patience")]
    pub patience: u64,
    /// Instance to climb from instead of a random one.
    #[serde(skip)]
    pub start: Option<GameInstance>,
}

fn default_resources() -> usize {
    4
}
fn default_actions() -> usize {
    3
}
fn default_patience() -> u64 {
    200
}

impl SearchConfig {
    pub fn new(
        n: usize,
        k: usize,
        utility: UtilityMode,
        value_grid: Vec<f64>,
        budget: u64,
        seed: u64,
    ) -> Self {
        SearchConfig {
            n,
            k,
            labels: Vec::new(),
            utility,
            value_grid,
            budget,
            seed,
            max_resources: default_resources(),
            max_actions: default_actions(),
            patience: default_patience(),
            start: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub instance: GameInstance,
    pub report: PoAReport,
    /// Instances with a pure equilibrium that were scored.
    pub evaluated: u64,
    /// Instances skipped for having no pure equilibrium.
    pub skipped: u64,
}

const SEARCH_CAP: u128 = 1_000_000;

struct Candidate {
    increments: Vec<Vec<f64>>,
    sets: Vec<Vec<Action>>,
    utilities: Vec<UtilityKind>,
    labels: Vec<CompromiseLabel>,
}

impl Candidate {
    fn build(&self) -> Result<GameInstance> {
        let curves = self
            .increments
            .iter()
            .map(|inc| {
                let mut sorted = inc.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                std::iter::once(0.0)
                    .chain(sorted.iter().scan(0.0, |acc, d| {
                        *acc += d;
                        Some(*acc)
                    }))
                    .collect()
            })
            .collect();
        GameInstance::new(
            self.increments.len(),
            self.sets.clone(),
            WelfareSpec::Separable { curves },
            self.utilities.clone(),
            self.labels.clone(),
        )
    }

    fn from_game(game: &GameInstance) -> Result<Self> {
        let curves = match game.welfare() {
            WelfareSpec::Separable { curves } => curves,
            WelfareSpec::Tabulated { .. } => {
                return Err(GameError::InvalidParams(
                    "search start must have separable welfare".into(),
                ))
            }
        };
        Ok(Candidate {
            increments: curves
                .iter()
                .map(|c| c.windows(2).map(|w| w[1] - w[0]).collect())
                .collect(),
            sets: game.action_sets().to_vec(),
            utilities: game.utilities().to_vec(),
            labels: game.compromise().to_vec(),
        })
    }
}

fn random_action<R: Rng>(rng: &mut R, m: usize) -> Action {
    let size = rng.gen_range(1..=m.min(2));
    let mut ids: Vec<u32> = (0..m as u32).collect();
    ids.shuffle(rng);
    Action::from_ids(ids.into_iter().take(size))
}

fn fresh<R: Rng>(rng: &mut R, config: &SearchConfig) -> Candidate {
    let n = config.n;
    let m = rng.gen_range(1..=config.max_resources);
    let increments = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| *config.value_grid.choose(rng).unwrap())
                .collect()
        })
        .collect();
    let sets = (0..n)
        .map(|_| {
            let want = rng.gen_range(2..=config.max_actions);
            let mut set = vec![Action::empty()];
            for _ in 0..4 * want {
                if set.len() >= want {
                    break;
                }
                let a = random_action(rng, m);
                if !set.contains(&a) {
                    set.push(a);
                }
            }
            set
        })
        .collect();
    let utilities = (0..n)
        .map(|_| match config.utility {
            UtilityMode::Es => UtilityKind::EqualShare,
            UtilityMode::Mc => UtilityKind::MarginalContribution,
            UtilityMode::Mixed if rng.gen_bool(0.5) => UtilityKind::EqualShare,
            UtilityMode::Mixed => UtilityKind::MarginalContribution,
        })
        .collect();
    let labels = random_labels(rng, n, config.k, &config.labels);
    Candidate {
        increments,
        sets,
        utilities,
        labels,
    }
}

fn mutate<R: Rng>(rng: &mut R, c: &Candidate, config: &SearchConfig) -> Candidate {
    let mut next = Candidate {
        increments: c.increments.clone(),
        sets: c.sets.clone(),
        utilities: c.utilities.clone(),
        labels: c.labels.clone(),
    };
    let m = next.increments.len();
    if rng.gen_bool(0.5) {
        let r = rng.gen_range(0..m);
        let j = rng.gen_range(0..config.n);
        next.increments[r][j] = *config.value_grid.choose(rng).unwrap();
    } else {
        let i = rng.gen_range(0..config.n);
        let a = random_action(rng, m);
        let set = &mut next.sets[i];
        if set.contains(&a) {
            if set.len() > 2 {
                set.retain(|b| b != &a);
            }
        } else if set.len() < config.max_actions {
            set.push(a);
        } else {
            let slot = rng.gen_range(1..set.len());
            set[slot] = a;
        }
    }
    next
}

/// Best-effort search for a low-ratio instance. Each step either mutates the
/// current instance (one curve increment or one action) or, after
/// `patience` steps without improvement, restarts from a fresh random
/// instance. Games without a pure equilibrium are skipped. Deterministic for
/// a given config.
pub fn worst_case_search(config: &SearchConfig) -> Result<SearchOutcome> {
    if config.n == 0 || config.k > config.n {
        return Err(GameError::InvalidParams(format!(
            "need n >= 1 and k <= n, got n={}, k={}",
            config.n, config.k
        )));
    }
    if config.value_grid.is_empty()
        || config
            .value_grid
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
    {
        return Err(GameError::InvalidParams(
            "value_grid must be nonempty, finite and nonnegative".into(),
        ));
    }
    if config.max_resources == 0 || config.max_actions < 2 || config.budget == 0 {
        return Err(GameError::InvalidParams(
            "need max_resources >= 1, max_actions >= 2, budget >= 1".into(),
        ));
    }
    if !config.labels.is_empty() && config.labels.len() != config.k {
        return Err(GameError::InvalidParams(format!(
            "{} labels given for k = {}",
            config.labels.len(),
            config.k
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut current = match &config.start {
        Some(g) => Candidate::from_game(g)?,
        None => fresh(&mut rng, config),
    };
    let mut current_ratio = f64::INFINITY;
    let mut best: Option<(GameInstance, PoAReport)> = None;
    let mut evaluated = 0;
    let mut skipped = 0;
    let mut stale = 0;

    for step in 0..config.budget {
        let candidate = if step == 0 {
            None
        } else if stale >= config.patience {
            stale = 0;
            current_ratio = f64::INFINITY;
            Some(fresh(&mut rng, config))
        } else {
            Some(mutate(&mut rng, &current, config))
        };
        let cand = candidate.as_ref().unwrap_or(&current);
        let game = cand.build()?;
        let report = instance_poa_capped(&game, SEARCH_CAP)?;
        let Some(ratio) = report.ratio else {
            skipped += 1;
            stale += 1;
            continue;
        };
        evaluated += 1;
        if ratio <= current_ratio + TOLERANCE {
            if ratio < current_ratio - TOLERANCE {
                stale = 0;
            } else {
                stale += 1;
            }
            current_ratio = ratio;
            if let Some(c) = candidate {
                current = c;
            }
        } else {
            stale += 1;
        }
        if best
            .as_ref()
            .map_or(true, |(_, r)| ratio < r.ratio.unwrap() - TOLERANCE)
        {
            best = Some((game, report));
        }
    }

    let (instance, report) = best.ok_or_else(|| {
        GameError::InvalidParams("no evaluated instance had a pure equilibrium".into())
    })?;
    Ok(SearchOutcome {
        instance,
        report,
        evaluated,
        skipped,
    })
}
