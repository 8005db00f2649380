use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anarchy_lab::equilibrium::{
    check_bound_chain_general, check_bound_chain_mc, worst_case_search, BoundChainCertificate,
    SearchConfig,
};
use anarchy_lab::format;
use anarchy_lab::instances::{
    gen_disabled, gen_k_blind, gen_mc_blind, gen_mc_noblind, gen_random_separable, gen_sim_game,
    gen_three_agent, RandomConfig, UtilityMode,
};
use anarchy_lab::learning::{temperature_sweep, RunOptions};
use anarchy_lab::validate::{check_submodular_capped, check_vug_capped, DEFAULT_CHECK_CAP};
use anarchy_lab::{
    enumerate_pne_capped, instance_poa_capped, Action, CompromiseLabel, GameInstance, JointAction,
    PoAReport, DEFAULT_PROFILE_CAP,
};
use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::json;

use crate::parse::sig6;
use crate::{
    BoundsArgs, Family, Format, GenArgs, InstanceArgs, LllArgs, Mix, SearchArgs, UsageError,
    Utility, EXIT_BOUND_VIOLATION, EXIT_INVALID,
};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> Result<GameInstance> {
    Ok(format::parse(&read(path)?)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports always serialize");
    s.push('\n');
    s
}

fn opt6(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), sig6)
}

fn default_eps(family: Family) -> f64 {
    if family == Family::Sim {
        0.05
    } else {
        1e-6
    }
}

fn need(v: Option<usize>, name: &str) -> Result<usize> {
    v.ok_or_else(|| usage(format!("--{name} is required for this family")))
}

pub fn gen(a: GenArgs) -> Result<u8> {
    let eps = a.eps.unwrap_or(default_eps(a.family));
    let delta = a.delta.unwrap_or(eps);
    let labels_for = |k: usize| -> Vec<CompromiseLabel> {
        a.labels
            .clone()
            .unwrap_or_else(|| vec![CompromiseLabel::Blind; k])
    };
    let game = match a.family {
        Family::KBlind => {
            let (n, k) = (need(a.n, "n")?, need(a.k, "k")?);
            gen_k_blind(n, k, eps, delta, &labels_for(k))?
        }
        Family::McBlind => {
            let (n, k) = (need(a.n, "n")?, need(a.k, "k")?);
            gen_mc_blind(n, k, eps, &labels_for(k))?
        }
        Family::McNoblind => {
            let (n, k) = (need(a.n, "n")?, need(a.k, "k")?);
            gen_mc_noblind(n, k, eps)?
        }
        Family::Sim => {
            let n = need(a.n, "n")?;
            let k = a.k.unwrap_or(n.saturating_sub(1));
            gen_sim_game(n, k, eps, &labels_for(k))?
        }
        Family::ThreeAgent => {
            let values = a
                .values
                .clone()
                .ok_or_else(|| usage("--values (six numbers) is required for three_agent"))?;
            let values: [f64; 6] = values.try_into().map_err(|v: Vec<f64>| {
                usage(format!("three_agent needs 6 values, got {}", v.len()))
            })?;
            let labels = a
                .labels
                .clone()
                .unwrap_or_else(|| vec![CompromiseLabel::Normal; 3]);
            let labels: [CompromiseLabel; 3] =
                labels.try_into().map_err(|v: Vec<CompromiseLabel>| {
                    usage(format!("three_agent needs 3 labels, got {}", v.len()))
                })?;
            gen_three_agent(values, labels)?
        }
        Family::Random => {
            let n = need(a.n, "n")?;
            let cfg = RandomConfig {
                n,
                k: a.k.unwrap_or(0),
                max_resources: a.max_resources,
                max_actions: a.max_actions,
                labels: a.labels.clone().unwrap_or_default(),
                utility: match a.utility {
                    Utility::Es => UtilityMode::Es,
                    Utility::Mc => UtilityMode::Mc,
                    Utility::Mixed => UtilityMode::Mixed,
                },
                seed: a.seed,
            };
            gen_random_separable(&cfg)?
        }
        Family::Disabled => {
            let value = match a.values.as_deref() {
                None => 10.0,
                Some([v]) => *v,
                Some(v) => return Err(usage(format!("disabled takes one value, got {}", v.len()))),
            };
            gen_disabled(value)?
        }
    };
    emit(a.out.as_deref(), &format::serialize(&game))?;
    Ok(0)
}

pub fn check(a: InstanceArgs) -> Result<u8> {
    let game = load(&a.instance)?;
    let cap = a.cap.unwrap_or(DEFAULT_CHECK_CAP);
    let sub = check_submodular_capped(&game, cap)?;
    let vug = check_vug_capped(&game, cap)?;
    let text = match a.format {
        Format::Json => pretty(&json!({ "submodular": sub, "vug": vug })),
        Format::Table => {
            let mut s = String::new();
            let verdict = |p: bool| if p { "pass" } else { "FAIL" };
            writeln!(s, "submodular       {}", verdict(sub.passed))?;
            if let Some(v) = &sub.violation {
                writeln!(s, "  witness        {}", serde_json::to_string(v)?)?;
            }
            writeln!(
                s,
                "utility >= MC    {}",
                verdict(vug.marginal_violation.is_none())
            )?;
            if let Some(v) = &vug.marginal_violation {
                writeln!(s, "  witness        {}", serde_json::to_string(v)?)?;
            }
            writeln!(
                s,
                "sum U <= W       {}",
                verdict(vug.budget_violation.is_none())
            )?;
            if let Some(v) = &vug.budget_violation {
                writeln!(s, "  witness        {}", serde_json::to_string(v)?)?;
            }
            writeln!(s, "budget tight     {}", vug.budget_tight)?;
            writeln!(s, "profiles         {}", vug.profiles)?;
            s
        }
    };
    print!("{text}");
    Ok(if sub.passed && vug.passed {
        0
    } else {
        EXIT_INVALID
    })
}

pub fn pne(a: InstanceArgs) -> Result<u8> {
    let game = load(&a.instance)?;
    let ne = enumerate_pne_capped(&game, a.cap.unwrap_or(DEFAULT_PROFILE_CAP))?;
    let text = match a.format {
        Format::Json => {
            let list: Vec<_> = ne
                .equilibria
                .iter()
                .zip(&ne.welfare)
                .map(|(p, w)| json!({ "profile": p, "welfare": w }))
                .collect();
            pretty(&json!({ "profiles_scanned": ne.profiles_scanned, "equilibria": list }))
        }
        Format::Table => {
            let mut s = format!(
                "{} pure equilibria ({} profiles scanned)\n",
                ne.len(),
                ne.profiles_scanned
            );
            if !ne.is_empty() {
                writeln!(s, "{:>5}  {:>12}  profile", "#", "welfare")?;
            }
            for (k, (p, w)) in ne.equilibria.iter().zip(&ne.welfare).enumerate() {
                writeln!(s, "{k:>5}  {:>12}  {p}", sig6(*w))?;
            }
            s
        }
    };
    print!("{text}");
    Ok(0)
}

fn poa_table(r: &PoAReport) -> String {
    let profile = |p: &Option<JointAction>| p.as_ref().map_or("-".into(), |p| p.to_string());
    let mut s = String::new();
    let _ = writeln!(s, "agents              {}", r.n);
    let _ = writeln!(s, "compromised         {}", r.k);
    let _ = writeln!(s, "optimal welfare     {}", sig6(r.opt_welfare));
    let _ = writeln!(s, "optimal profile     {}", r.opt_profile);
    let _ = writeln!(s, "equilibria          {}", r.equilibria);
    let _ = writeln!(s, "worst NE welfare    {}", opt6(r.worst_ne_welfare));
    let _ = writeln!(s, "worst NE profile    {}", profile(&r.worst_ne_profile));
    let _ = writeln!(s, "best NE welfare     {}", opt6(r.best_ne_welfare));
    let _ = writeln!(s, "ratio               {}", opt6(r.ratio));
    let _ = writeln!(s, "theoretical bound   {}", sig6(r.theoretical_bound));
    let _ = writeln!(
        s,
        "bound satisfied     {}",
        r.bound_satisfied.map_or("-".into(), |b| b.to_string())
    );
    s
}

fn bound_exit(satisfied: Option<bool>) -> u8 {
    if satisfied == Some(false) {
        EXIT_BOUND_VIOLATION
    } else {
        0
    }
}

pub fn poa(a: InstanceArgs) -> Result<u8> {
    let game = load(&a.instance)?;
    let r = instance_poa_capped(&game, a.cap.unwrap_or(DEFAULT_PROFILE_CAP))?;
    let text = match a.format {
        Format::Json => pretty(&r),
        Format::Table => poa_table(&r),
    };
    print!("{text}");
    Ok(bound_exit(r.bound_satisfied))
}

#[derive(Serialize)]
struct ChainSummary {
    chain: &'static str,
    factor: f64,
    holds: bool,
    extrapolated: bool,
    failing_steps: Vec<&'static str>,
}

impl ChainSummary {
    fn new(chain: &'static str, c: &BoundChainCertificate) -> Self {
        ChainSummary {
            chain,
            factor: c.factor,
            holds: c.holds(),
            extrapolated: c.extrapolated,
            failing_steps: c.failing().map(|s| s.label).collect(),
        }
    }
}

#[derive(Serialize)]
struct BoundsRow {
    family: String,
    n: usize,
    k: usize,
    labels: String,
    parameter: f64,
    opt_welfare: f64,
    worst_ne_welfare: Option<f64>,
    ratio: Option<f64>,
    closed_form: Option<f64>,
    theoretical_bound: f64,
    satisfied: Option<bool>,
    chains: Vec<ChainSummary>,
}

fn mixes(mix: Mix, k: usize) -> Vec<(String, Vec<CompromiseLabel>)> {
    use CompromiseLabel::*;
    let alternating: Vec<_> = (0..k)
        .map(|j| if j % 2 == 0 { Blind } else { Isolated })
        .collect();
    if k == 0 {
        return vec![("none".into(), Vec::new())];
    }
    match mix {
        Mix::Blind => vec![("blind".into(), vec![Blind; k])],
        Mix::Isolated => vec![("isolated".into(), vec![Isolated; k])],
        Mix::Alternating => vec![("alternating".into(), alternating)],
        Mix::All => vec![
            ("blind".into(), vec![Blind; k]),
            ("isolated".into(), vec![Isolated; k]),
            ("alternating".into(), alternating),
        ],
    }
}

fn bounds_row(
    family: Family,
    game: &GameInstance,
    labels: String,
    parameter: f64,
    closed_form: Option<f64>,
) -> Result<BoundsRow> {
    let r = instance_poa_capped(game, DEFAULT_PROFILE_CAP)?;
    let mut chains = Vec::new();
    let disabled = game.any_label(CompromiseLabel::Disabled);
    if let (Some(ne), false) = (&r.worst_ne_profile, disabled) {
        chains.push(ChainSummary::new(
            "general",
            &check_bound_chain_general(game, ne, &r.opt_profile)?,
        ));
        if game.all_mc() && game.any_label(CompromiseLabel::Blind) {
            chains.push(ChainSummary::new(
                "mc",
                &check_bound_chain_mc(game, ne, &r.opt_profile)?,
            ));
        }
    }
    Ok(BoundsRow {
        family: family
            .to_possible_value()
            .map_or_else(String::new, |v| v.get_name().to_string()),
        n: game.n(),
        k: game.compromised_count(),
        labels,
        parameter,
        opt_welfare: r.opt_welfare,
        worst_ne_welfare: r.worst_ne_welfare,
        ratio: r.ratio,
        closed_form,
        theoretical_bound: r.theoretical_bound,
        satisfied: r.bound_satisfied,
        chains,
    })
}

pub fn bounds(a: BoundsArgs) -> Result<u8> {
    let eps = a.eps.unwrap_or(default_eps(a.family));
    let delta = a.delta.unwrap_or(eps);
    let ks = || {
        a.k.clone()
            .or(a.sweep.clone())
            .ok_or_else(|| usage("--k or --sweep is required"))
    };
    let mut rows = Vec::new();
    match a.family {
        Family::Disabled => {
            for &m in &a.values {
                rows.push(bounds_row(
                    a.family,
                    &gen_disabled(m)?,
                    "disabled".into(),
                    m,
                    Some(1.0 / (m + 1.0)),
                )?);
            }
        }
        Family::KBlind | Family::McBlind | Family::McNoblind | Family::Sim => {
            let n = need(a.n, "n")?;
            for k in ks()? {
                if a.family == Family::McNoblind {
                    let g = gen_mc_noblind(n, k, eps)?;
                    rows.push(bounds_row(a.family, &g, "isolated".into(), eps, None)?);
                    continue;
                }
                for (name, labels) in mixes(a.labels, k) {
                    let (g, closed) = match a.family {
                        Family::KBlind => (
                            gen_k_blind(n, k, eps, delta, &labels)?,
                            Some(
                                1.0 / (1.0
                                    + (n - k - 1) as f64 * (1.0 / n as f64 - delta)
                                    + k as f64 * (1.0 - eps)),
                            ),
                        ),
                        Family::McBlind => {
                            let closed = (k < n).then(|| (1.0 + eps) / (k as f64 + 1.0 + eps));
                            (gen_mc_blind(n, k, eps, &labels)?, closed)
                        }
                        _ => (gen_sim_game(n, k, eps, &labels)?, None),
                    };
                    rows.push(bounds_row(a.family, &g, name, eps, closed)?);
                }
            }
        }
        Family::ThreeAgent | Family::Random => {
            return Err(usage(
                "bounds supports k_blind, mc_blind, mc_noblind, sim and disabled",
            ));
        }
    }

    let violated = rows
        .iter()
        .any(|r| r.satisfied == Some(false) || r.chains.iter().any(|c| !c.holds));
    let text = match a.format {
        Format::Json => pretty(&rows),
        Format::Table => {
            let mut s = format!(
                "{:>3} {:>3}  {:<11} {:>12} {:>12} {:>12} {:>12} {:>12}  {:<9} chains\n",
                "n",
                "k",
                "labels",
                "param",
                "worst NE",
                "ratio",
                "closed form",
                "bound",
                "satisfied"
            );
            for r in &rows {
                let chains: Vec<String> = r
                    .chains
                    .iter()
                    .map(|c| format!("{}:{}", c.chain, if c.holds { "ok" } else { "FAIL" }))
                    .collect();
                writeln!(
                    s,
                    "{:>3} {:>3}  {:<11} {:>12} {:>12} {:>12} {:>12} {:>12}  {:<9} {}",
                    r.n,
                    r.k,
                    r.labels,
                    sig6(r.parameter),
                    opt6(r.worst_ne_welfare),
                    opt6(r.ratio),
                    opt6(r.closed_form),
                    sig6(r.theoretical_bound),
                    r.satisfied.map_or("-".into(), |b| b.to_string()),
                    if chains.is_empty() {
                        "-".into()
                    } else {
                        chains.join(" ")
                    }
                )?;
            }
            s
        }
    };
    print!("{text}");
    Ok(if violated { EXIT_BOUND_VIOLATION } else { 0 })
}

pub fn search(a: SearchArgs) -> Result<u8> {
    let mut cfg: SearchConfig = serde_json::from_str(&read(&a.config)?)
        .with_context(|| format!("parsing search config {}", a.config.display()))?;
    if let Some(p) = &a.start {
        cfg.start = Some(load(p)?);
    }
    let out = worst_case_search(&cfg)?;
    let instance_text = format::serialize(&out.instance);
    if let Some(p) = &a.out {
        fs::write(p, &instance_text).with_context(|| format!("writing {}", p.display()))?;
    }
    let text = match a.format {
        Format::Json => {
            let instance: serde_json::Value = serde_json::from_str(&instance_text)?;
            pretty(&json!({
                "evaluated": out.evaluated,
                "skipped": out.skipped,
                "report": out.report,
                "instance": instance,
            }))
        }
        Format::Table => format!(
            "evaluated           {}\nskipped (no PNE)    {}\n{}",
            out.evaluated,
            out.skipped,
            poa_table(&out.report)
        ),
    };
    print!("{text}");
    Ok(bound_exit(out.report.bound_satisfied))
}

pub fn lll(a: LllArgs) -> Result<u8> {
    let game = load(&a.instance)?;
    let start = match &a.start {
        None => None,
        Some(p) => {
            let raw: Vec<Vec<u32>> = serde_json::from_str(&read(p)?)
                .with_context(|| format!("parsing start profile {}", p.display()))?;
            Some(JointAction(raw.into_iter().map(Action::from_ids).collect()))
        }
    };
    let opts = RunOptions {
        start,
        burn_in: a.burn_in,
        keep_trace: false,
    };
    let sweep = temperature_sweep(&game, &a.temps.0, a.steps, a.trials, a.seed, &opts)?;
    emit(a.out.as_deref(), &sweep.to_csv())?;

    let mut summary = format!(
        "{:>12} {:>7} {:>12} {:>12}\n",
        "temperature", "trials", "mean", "min trial"
    );
    for p in sweep.pooled() {
        writeln!(
            summary,
            "{:>12} {:>7} {:>12} {:>12}",
            sig6(p.temperature),
            p.trials,
            sig6(p.mean_welfare),
            sig6(p.min_trial_mean)
        )?;
    }
    if a.out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(0)
}
