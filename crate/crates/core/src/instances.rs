//! Deterministic generators for the canonical worst-case families and for
//! seeded random separable games.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::{Action, CompromiseLabel, GameInstance, UtilityKind, WelfareSpec};

fn invalid(msg: impl Into<String>) -> GameError {
    GameError::InvalidParams(msg.into())
}

fn check_labels(labels: &[CompromiseLabel], k: usize) -> Result<()> {
    if labels.len() != k {
        return Err(invalid(format!(
            "{} labels given for k = {k}",
            labels.len()
        )));
    }
    if let Some(l) = labels.iter().find(|l| !l.is_independent()) {
        return Err(invalid(format!(
            "label `{l}` not allowed here; use blind or isolated"
        )));
    }
    Ok(())
}

fn check_small(name: &str, v: f64, upper: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0 && v < upper) {
        return Err(invalid(format!("{name} = {v} must lie in [0, {upper})")));
    }
    Ok(())
}

fn label_vector(n: usize, labels: &[CompromiseLabel]) -> Vec<CompromiseLabel> {
    let mut out = vec![CompromiseLabel::Normal; n];
    out[..labels.len()].copy_from_slice(labels);
    out
}

/// Central resource of value 1, own resource `1 − ε` for each of the first
/// `k` (compromised) agents, own resource `1/n − δ` for the remaining agents
/// except the last, which only has the central resource. Equal-share
/// utilities. Worst equilibrium: everyone on the central resource.
///
/// Resource 0 is central; agent `i < n − 1` owns resource `i + 1`.
pub fn gen_k_blind(
    n: usize,
    k: usize,
    eps: f64,
    delta: f64,
    labels: &[CompromiseLabel],
) -> Result<GameInstance> {
    if n == 0 || k >= n {
        return Err(invalid(format!("need k < n, got n={n}, k={k}")));
    }
    check_labels(labels, k)?;
    check_small("eps", eps, 1.0)?;
    check_small("delta", delta, 1.0 / n as f64)?;

    let mut values = vec![1.0];
    let mut sets = Vec::with_capacity(n);
    for i in 0..n {
        let mut set = vec![Action::empty()];
        if i + 1 < n {
            values.push(if i < k {
                1.0 - eps
            } else {
                1.0 / n as f64 - delta
            });
            set.push(Action::single(i as u32 + 1));
        }
        set.push(Action::single(0));
        sets.push(set);
    }
    GameInstance::new(
        values.len(),
        sets,
        WelfareSpec::coverage(&values, n),
        vec![UtilityKind::EqualShare; n],
        label_vector(n, labels),
    )
}

/// One shared resource worth `1 + ε` open to everyone plus an alternate of
/// value 1 for each of the first `k` (compromised) agents. MC utilities.
///
/// Resource 0 is shared; compromised agent `i` owns resource `i + 1`.
pub fn gen_mc_blind(
    n: usize,
    k: usize,
    eps: f64,
    labels: &[CompromiseLabel],
) -> Result<GameInstance> {
    if n == 0 || k > n {
        return Err(invalid(format!("need k <= n, got n={n}, k={k}")));
    }
    check_labels(labels, k)?;
    check_small("eps", eps, 1.0)?;

    let mut values = vec![1.0 + eps];
    let mut sets = Vec::with_capacity(n);
    for i in 0..n {
        let mut set = vec![Action::empty(), Action::single(0)];
        if i < k {
            values.push(1.0);
            set.push(Action::single(i as u32 + 1));
        }
        sets.push(set);
    }
    GameInstance::new(
        values.len(),
        sets,
        WelfareSpec::coverage(&values, n),
        vec![UtilityKind::MarginalContribution; n],
        label_vector(n, labels),
    )
}

/// Isolated-only family: each of the `k` isolated agents has a dedicated
/// resource worth `1 + ε`; a partner agent per isolated agent (as many as
/// available) can take that resource or a private alternate worth 1; any
/// further agents only have a private `ε` resource. MC utilities.
///
/// Resources: dedicated `0..k`, partner alternates next, then `ε` resources.
pub fn gen_mc_noblind(n: usize, k: usize, eps: f64) -> Result<GameInstance> {
    if k == 0 || n < k + 2 {
        return Err(invalid(format!(
            "need k >= 1 and n >= k + 2, got n={n}, k={k}"
        )));
    }
    check_small("eps", eps, 1.0)?;
    let partners = k.min(n - k);
    let extras = n - k - partners;

    let mut values = vec![1.0 + eps; k];
    let mut sets: Vec<Vec<Action>> = (0..k)
        .map(|i| vec![Action::empty(), Action::single(i as u32)])
        .collect();
    for j in 0..partners {
        let alt = values.len() as u32;
        values.push(1.0);
        sets.push(vec![
            Action::empty(),
            Action::single(j as u32),
            Action::single(alt),
        ]);
    }
    for _ in 0..extras {
        let own = values.len() as u32;
        values.push(eps);
        sets.push(vec![Action::empty(), Action::single(own)]);
    }
    let mut labels = vec![CompromiseLabel::Normal; n];
    labels[..k].fill(CompromiseLabel::Isolated);
    GameInstance::new(
        values.len(),
        sets,
        WelfareSpec::coverage(&values, n),
        vec![UtilityKind::MarginalContribution; n],
        labels,
    )
}

/// The learning-dynamics economy: `k = n − 1` compromised agents with own
/// resources worth `1 − ε` and a central resource worth 1; the single
/// uncompromised agent (index `n − 1`) uses MC and has an alternate worth `ε`.
/// Compromised agents keep equal-share utilities.
///
/// Resource 0 is central; agent `i < n − 1` owns resource `i + 1`; resource
/// `n` is the uncompromised agent's alternate.
pub fn gen_sim_game(
    n: usize,
    k: usize,
    eps: f64,
    labels: &[CompromiseLabel],
) -> Result<GameInstance> {
    if n < 2 || k + 1 != n {
        return Err(invalid(format!(
            "need k = n - 1 and n >= 2, got n={n}, k={k}"
        )));
    }
    check_labels(labels, k)?;
    check_small("eps", eps, 1.0)?;

    let mut values = vec![1.0];
    let mut sets = Vec::with_capacity(n);
    for i in 0..k {
        values.push(1.0 - eps);
        sets.push(vec![
            Action::empty(),
            Action::single(i as u32 + 1),
            Action::single(0),
        ]);
    }
    values.push(eps);
    sets.push(vec![
        Action::empty(),
        Action::single(n as u32),
        Action::single(0),
    ]);
    let mut utilities = vec![UtilityKind::EqualShare; n];
    utilities[n - 1] = UtilityKind::MarginalContribution;
    GameInstance::new(
        values.len(),
        sets,
        WelfareSpec::coverage(&values, n),
        utilities,
        label_vector(n, labels),
    )
}

/// Five agents, six resources; agent `i` chooses between its own resource
/// and the last one. `labels` apply to agents 3, 4 and 5 (indices 2..5).
pub fn gen_three_agent(values: [f64; 6], labels: [CompromiseLabel; 3]) -> Result<GameInstance> {
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(invalid(format!(
            "resource value {v} must be finite and nonnegative"
        )));
    }
    let sets = (0..5u32)
        .map(|i| vec![Action::empty(), Action::single(i), Action::single(5)])
        .collect();
    let mut compromise = vec![CompromiseLabel::Normal; 5];
    compromise[2..].copy_from_slice(&labels);
    GameInstance::new(
        6,
        sets,
        WelfareSpec::coverage(&values, 5),
        vec![UtilityKind::MarginalContribution; 5],
        compromise,
    )
}

/// Two agents: a disabled one that alone can reach a resource worth
/// `value`, and a normal one with a resource worth 1.
pub fn gen_disabled(value: f64) -> Result<GameInstance> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(invalid(format!(
            "value {value} must be finite and nonnegative"
        )));
    }
    GameInstance::new(
        2,
        vec![vec![Action::single(0)], vec![Action::single(1)]],
        WelfareSpec::coverage(&[value, 1.0], 2),
        vec![UtilityKind::MarginalContribution; 2],
        vec![CompromiseLabel::Disabled, CompromiseLabel::Normal],
    )
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UtilityMode {
    #[default]
    Es,
    Mc,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomConfig {
    pub n: usize,
    pub max_resources: usize,
    /// Upper bound on `|A_i|`, counting the empty action.
    pub max_actions: usize,
    pub k: usize,
    /// Labels for the compromised agents; drawn from {blind, isolated} when empty.
    #[serde(default)]
    pub labels: Vec<CompromiseLabel>,
    #[serde(default)]
    pub utility: UtilityMode,
    pub seed: u64,
}

impl RandomConfig {
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        RandomConfig {
            n,
            max_resources: 4,
            max_actions: 4,
            k,
            labels: Vec::new(),
            utility: UtilityMode::Es,
            seed,
        }
    }
}

/// Random concave nondecreasing curve with increments on a 0.01 grid.
pub(crate) fn random_curve<R: Rng>(rng: &mut R, n: usize, grid: &[f64]) -> Vec<f64> {
    let mut inc: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.4) {
                0.0
            } else {
                grid[rng.gen_range(0..grid.len())]
            }
        })
        .collect();
    inc.sort_by(|a, b| b.total_cmp(a));
    let mut curve = Vec::with_capacity(n + 1);
    curve.push(0.0);
    let mut acc = 0.0;
    for d in inc {
        acc += d;
        curve.push(acc);
    }
    curve
}

pub(crate) fn hundredths() -> Vec<f64> {
    (1..=100).map(|v| v as f64 / 100.0).collect()
}

pub(crate) fn random_action_sets<R: Rng>(
    rng: &mut R,
    n: usize,
    m: usize,
    max_actions: usize,
) -> Vec<Vec<Action>> {
    (0..n)
        .map(|_| {
            let want = rng.gen_range(1..max_actions);
            let mut set = vec![Action::empty()];
            for _ in 0..4 * want {
                if set.len() > want {
                    break;
                }
                let size = rng.gen_range(1..=m.min(2));
                let a = Action::from_ids(sample(rng, m, size).into_iter().map(|r| r as u32));
                if !set.contains(&a) {
                    set.push(a);
                }
            }
            set
        })
        .collect()
}

pub(crate) fn random_labels<R: Rng>(
    rng: &mut R,
    n: usize,
    k: usize,
    given: &[CompromiseLabel],
) -> Vec<CompromiseLabel> {
    let mut agents = sample(rng, n, k).into_vec();
    agents.sort_unstable();
    let mut labels = vec![CompromiseLabel::Normal; n];
    for (slot, &i) in agents.iter().enumerate() {
        labels[i] = match given.get(slot) {
            Some(&l) => l,
            None if rng.gen_bool(0.5) => CompromiseLabel::Blind,
            None => CompromiseLabel::Isolated,
        };
    }
    labels
}

/// Seeded random game with separable concave welfare. The same config
/// always produces the same instance.
pub fn gen_random_separable(config: &RandomConfig) -> Result<GameInstance> {
    let RandomConfig {
        n,
        max_resources,
        max_actions,
        k,
        ..
    } = *config;
    if n == 0 || k > n || max_resources == 0 || max_actions < 2 {
        return Err(invalid(format!(
            "need n >= 1, k <= n, max_resources >= 1, max_actions >= 2 (got {config:?})"
        )));
    }
    if !config.labels.is_empty() {
        if config.labels.len() != k {
            return Err(invalid(format!(
                "{} labels given for k = {k}",
                config.labels.len()
            )));
        }
        if config.labels.contains(&CompromiseLabel::Normal) {
            return Err(invalid("compromised labels cannot be `normal`"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let m = rng.gen_range(1..=max_resources);
    let grid = hundredths();
    let curves = (0..m).map(|_| random_curve(&mut rng, n, &grid)).collect();
    let sets = random_action_sets(&mut rng, n, m, max_actions);
    let utilities = (0..n)
        .map(|_| match config.utility {
            UtilityMode::Es => UtilityKind::EqualShare,
            UtilityMode::Mc => UtilityKind::MarginalContribution,
            UtilityMode::Mixed if rng.gen_bool(0.5) => UtilityKind::EqualShare,
            UtilityMode::Mixed => UtilityKind::MarginalContribution,
        })
        .collect();
    let labels = random_labels(&mut rng, n, k, &config.labels);
    GameInstance::new(
        m,
        sets,
        WelfareSpec::Separable { curves },
        utilities,
        labels,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::JointAction;

    use CompromiseLabel::*;

    #[test]
    fn k_blind_structure() {
        let g = gen_k_blind(4, 2, 0.01, 0.01, &[Blind, Isolated]).unwrap();
        assert_eq!(g.num_resources(), 4);
        assert_eq!(g.actions(3), &[Action::empty(), Action::single(0)]);
        assert_eq!(g.compromise(), &[Blind, Isolated, Normal, Normal]);
        assert!(gen_k_blind(4, 4, 0.01, 0.01, &[Blind; 4]).is_err());
        assert!(gen_k_blind(4, 1, 0.01, 0.01, &[Disabled]).is_err());
    }

    #[test]
    fn all_on_central_is_worth_one() {
        let g = gen_k_blind(5, 2, 0.1, 0.01, &[Blind, Blind]).unwrap();
        let central = JointAction(vec![Action::single(0); 5]);
        assert_eq!(g.welfare_eval(&central).unwrap(), 1.0);
    }

    #[test]
    fn mc_blind_opt_profile_value() {
        let g = gen_mc_blind(6, 3, 0.01, &[Blind; 3]).unwrap();
        let mut p = JointAction::all_empty(6);
        for i in 0..3 {
            p.0[i] = Action::single(i as u32 + 1);
        }
        p.0[3] = Action::single(0);
        assert!((g.welfare_eval(&p).unwrap() - 4.01).abs() < 1e-12);
    }

    #[test]
    fn noblind_requires_room() {
        assert!(gen_mc_noblind(3, 2, 0.01).is_err());
        let g = gen_mc_noblind(5, 2, 0.01).unwrap();
        assert_eq!(g.num_resources(), 5);
    }

    #[test]
    fn sim_game_shape() {
        let g = gen_sim_game(10, 9, 0.05, &[Blind; 9]).unwrap();
        assert_eq!(g.num_resources(), 11);
        assert_eq!(g.utilities()[9], UtilityKind::MarginalContribution);
        assert!(gen_sim_game(10, 8, 0.05, &[Blind; 8]).is_err());
    }

    #[test]
    fn random_is_deterministic() {
        let cfg = RandomConfig::new(4, 1, 42);
        assert_eq!(
            gen_random_separable(&cfg).unwrap(),
            gen_random_separable(&cfg).unwrap()
        );
        let other = RandomConfig::new(4, 1, 43);
        assert_ne!(
            gen_random_separable(&cfg).unwrap(),
            gen_random_separable(&other).unwrap()
        );
    }

    #[test]
    fn random_respects_bounds() {
        for seed in 0..50 {
            let mut cfg = RandomConfig::new(5, 2, seed);
            cfg.labels = vec![Blind, Isolated];
            let g = gen_random_separable(&cfg).unwrap();
            assert!(g.action_sets().iter().all(|s| s.len() <= 4 && s.len() >= 2));
            assert_eq!(g.compromised_count(), 2);
            assert!(g.num_resources() <= 4);
        }
    }
}
