//! Log-linear learning over effective utilities.
//!
//! Each step picks one non-disabled agent uniformly at random and resamples
//! its action from `p(a_i) ∝ exp(Ũ_i(a_i, a_{-i}) / T)` with everyone else
//! held fixed. Welfare is recorded after every step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibrium::action_utilities;
use crate::error::{GameError, Result};
use crate::game::{CompromiseLabel, GameInstance, JointAction};
use crate::space::{to_indices, to_joint, view};

#[derive(Clone, Debug)]
pub struct LearningState {
    current: Vec<usize>,
    step: u64,
    rng: ChaCha8Rng,
}

impl LearningState {
    /// Starts from `start`, or the all-empty profile when `None`.
    pub fn new(game: &GameInstance, start: Option<&JointAction>, seed: u64) -> Result<Self> {
        let current = match start {
            Some(a) => {
                game.validate_profile(a)?;
                to_indices(game, a)?
            }
            None => (0..game.n()).map(|i| game.empty_index(i)).collect(),
        };
        Ok(LearningState {
            current,
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn profile(&self, game: &GameInstance) -> JointAction {
        to_joint(game, &self.current)
    }

    pub fn welfare(&self, game: &GameInstance) -> Result<f64> {
        game.welfare_refs(&view(game, &self.current))
    }
}

/// Numerically stable softmax of `utilities / temperature`.
pub fn softmax(utilities: &[f64], temperature: f64) -> Vec<f64> {
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = utilities
        .iter()
        .map(|u| ((u - max) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn sample_index<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left u beyond the cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn updatable(game: &GameInstance) -> Vec<usize> {
    (0..game.n())
        .filter(|&i| game.label(i) != CompromiseLabel::Disabled)
        .collect()
}

fn check_temperature(temperature: f64) -> Result<()> {
    if temperature > 0.0 && temperature.is_finite() {
        Ok(())
    } else {
        Err(GameError::InvalidParams(format!(
            "temperature must be positive, got {temperature}"
        )))
    }
}

/// One log-linear learning update.
pub fn lll_step(game: &GameInstance, state: &mut LearningState, temperature: f64) -> Result<()> {
    check_temperature(temperature)?;
    let agents = updatable(game);
    step_with(game, state, temperature, &agents)
}

fn step_with(
    game: &GameInstance,
    state: &mut LearningState,
    temperature: f64,
    agents: &[usize],
) -> Result<()> {
    if !agents.is_empty() {
        let i = agents[state.rng.gen_range(0..agents.len())];
        let utilities = action_utilities(game, i, &state.current)?;
        let probs = softmax(&utilities, temperature);
        state.current[i] = sample_index(&mut state.rng, &probs);
    }
    state.step += 1;
    Ok(())
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Initial profile; all-empty when `None`.
    pub start: Option<JointAction>,
    /// Leading steps excluded from the statistics.
    pub burn_in: u64,
    pub keep_trace: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub temperature: f64,
    pub seed: u64,
    pub steps: u64,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub final_profile: JointAction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<f64>>,
}

#[derive(Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        if self.count == 0 {
            self.min = x;
            self.max = x;
        }
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    fn std(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2 / self.count as f64).sqrt()
        }
    }
}

/// Runs `steps` updates and summarizes the welfare recorded after each one.
pub fn lll_run(
    game: &GameInstance,
    temperature: f64,
    steps: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<RunSummary> {
    check_temperature(temperature)?;
    if steps == 0 || options.burn_in >= steps {
        return Err(GameError::InvalidParams(format!(
            "need steps >= 1 and burn-in < steps (steps={steps}, burn-in={})",
            options.burn_in
        )));
    }
    let agents = updatable(game);
    let mut state = LearningState::new(game, options.start.as_ref(), seed)?;
    let mut stats = Moments::default();
    let mut trace = options
        .keep_trace
        .then(|| Vec::with_capacity(steps as usize));
    for t in 0..steps {
        step_with(game, &mut state, temperature, &agents)?;
        let w = state.welfare(game)?;
        if let Some(tr) = trace.as_mut() {
            tr.push(w);
        }
        if t >= options.burn_in {
            stats.push(w);
        }
    }
    Ok(RunSummary {
        temperature,
        seed,
        steps,
        mean: stats.mean,
        std: stats.std(),
        min: stats.min,
        max: stats.max,
        final_profile: state.profile(game),
        trace,
    })
}

/// Seed for trial `trial` at temperature index `temp_index` under `master`:
/// two rounds of the SplitMix64 finalizer over the packed indices.
pub fn derive_seed(master: u64, temp_index: u64, trial: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(master ^ temp_index.wrapping_mul(0xD1B5_4A32_D192_ED03)) ^ trial)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub temperature: f64,
    pub trial: u64,
    pub mean_welfare: f64,
    pub std_welfare: f64,
    pub min_welfare: f64,
    pub max_welfare: f64,
    pub steps: u64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PooledRow {
    pub temperature: f64,
    pub trials: usize,
    /// Mean of the per-trial means (trials have equal length).
    pub mean_welfare: f64,
    /// Smallest per-trial mean.
    pub min_trial_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str =
    "temperature,trial,mean_welfare,std_welfare,min_welfare,max_welfare,steps,seed";

/// 17 significant digits.
pub fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepResult {
    pub fn pooled(&self) -> Vec<PooledRow> {
        let mut out: Vec<PooledRow> = Vec::new();
        for row in &self.rows {
            match out.last_mut() {
                Some(p) if p.temperature == row.temperature => {
                    p.trials += 1;
                    p.mean_welfare += row.mean_welfare;
                    p.min_trial_mean = p.min_trial_mean.min(row.mean_welfare);
                }
                _ => out.push(PooledRow {
                    temperature: row.temperature,
                    trials: 1,
                    mean_welfare: row.mean_welfare,
                    min_trial_mean: row.mean_welfare,
                }),
            }
        }
        for p in &mut out {
            p.mean_welfare /= p.trials as f64;
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt_value(r.temperature),
                r.trial,
                fmt_value(r.mean_welfare),
                fmt_value(r.std_welfare),
                fmt_value(r.min_welfare),
                fmt_value(r.max_welfare),
                r.steps,
                r.seed
            ));
        }
        s
    }
}

/// Runs every `(temperature, trial)` pair with seeds from [`derive_seed`].
/// Pairs run in parallel; each trajectory is sequential, so results do not
/// depend on the thread count.
pub fn temperature_sweep(
    game: &GameInstance,
    temperatures: &[f64],
    steps: u64,
    trials: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<SweepResult> {
    for &t in temperatures {
        check_temperature(t)?;
    }
    if trials == 0 {
        return Err(GameError::InvalidParams("need at least one trial".into()));
    }
    let jobs: Vec<(usize, u64)> = (0..temperatures.len())
        .flat_map(|t| (0..trials).map(move |k| (t, k)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(t, trial)| {
            let run_seed = derive_seed(seed, t as u64, trial);
            let opts = RunOptions {
                keep_trace: false,
                ..options.clone()
            };
            let s = lll_run(game, temperatures[t], steps, run_seed, &opts)?;
            Ok(SweepRow {
                temperature: temperatures[t],
                trial,
                mean_welfare: s.mean,
                std_welfare: s.std,
                min_welfare: s.min,
                max_welfare: s.max,
                steps,
                seed: run_seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

/// Mean welfare when the updating agent picks uniformly among its actions.
pub fn random_play_baseline(game: &GameInstance, steps: u64, seed: u64) -> Result<f64> {
    if steps == 0 {
        return Err(GameError::InvalidParams("need steps >= 1".into()));
    }
    let agents = updatable(game);
    let mut state = LearningState::new(game, None, seed)?;
    let mut stats = Moments::default();
    for _ in 0..steps {
        if !agents.is_empty() {
            let i = agents[state.rng.gen_range(0..agents.len())];
            state.current[i] = state.rng.gen_range(0..game.actions(i).len());
        }
        state.step += 1;
        stats.push(state.welfare(game)?);
    }
    Ok(stats.mean)
}
