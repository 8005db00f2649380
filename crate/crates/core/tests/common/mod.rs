//! Brute-force reference implementation written directly from the model
//! definitions, sharing nothing with the library's evaluators.

#![allow(dead_code)]

use std::collections::BTreeSet;

use anarchy_lab::{
    Action, CompromiseLabel, GameInstance, JointAction, ResourceId, UtilityKind, WelfareSpec,
};

pub const TOL: f64 = 1e-9;

pub fn welfare(g: &GameInstance, p: &[Action]) -> f64 {
    match g.welfare() {
        WelfareSpec::Separable { curves } => {
            let mut counts = vec![0usize; curves.len()];
            for a in p {
                for r in a.resources() {
                    counts[r.0 as usize] += 1;
                }
            }
            counts.iter().zip(curves).map(|(&c, curve)| curve[c]).sum()
        }
        WelfareSpec::Tabulated { table } => {
            let set: BTreeSet<ResourceId> = p
                .iter()
                .flat_map(|a| a.resources().iter().copied())
                .collect();
            if set.is_empty() {
                0.0
            } else {
                table[&set.into_iter().collect::<Vec<_>>()]
            }
        }
    }
}

pub fn raw_utility(g: &GameInstance, i: usize, p: &[Action]) -> f64 {
    match g.utilities()[i] {
        UtilityKind::MarginalContribution => {
            let mut without = p.to_vec();
            without[i] = Action::empty();
            welfare(g, p) - welfare(g, &without)
        }
        UtilityKind::EqualShare => {
            let WelfareSpec::Separable { curves } = g.welfare() else {
                unreachable!()
            };
            p[i].resources()
                .iter()
                .map(|r| {
                    let c = p.iter().filter(|a| a.contains(*r)).count();
                    curves[r.0 as usize][c] / c as f64
                })
                .sum()
        }
    }
}

pub fn effective(g: &GameInstance, i: usize, p: &[Action]) -> f64 {
    match g.label(i) {
        CompromiseLabel::Disabled => 0.0,
        CompromiseLabel::Blind | CompromiseLabel::Isolated => {
            let mut alone = vec![Action::empty(); p.len()];
            alone[i] = p[i].clone();
            raw_utility(g, i, &alone)
        }
        CompromiseLabel::Normal => {
            let seen: Vec<Action> = p
                .iter()
                .enumerate()
                .map(|(j, a)| match g.label(j) {
                    CompromiseLabel::Isolated | CompromiseLabel::Disabled => Action::empty(),
                    _ => a.clone(),
                })
                .collect();
            raw_utility(g, i, &seen)
        }
    }
}

/// Every joint action in lexicographic order (agent 0 slowest).
pub fn all_profiles(g: &GameInstance) -> Vec<Vec<Action>> {
    let mut out = vec![Vec::new()];
    for i in 0..g.n() {
        let mut next = Vec::new();
        for prefix in &out {
            for a in g.actions(i) {
                let mut p = prefix.clone();
                p.push(a.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

pub fn is_pne(g: &GameInstance, p: &[Action]) -> bool {
    (0..g.n()).all(|i| {
        if g.label(i) == CompromiseLabel::Disabled {
            return p[i].is_empty();
        }
        let current = effective(g, i, p);
        g.actions(i).iter().all(|alt| {
            let mut q = p.to_vec();
            q[i] = alt.clone();
            effective(g, i, &q) <= current + TOL
        })
    })
}

pub fn pne(g: &GameInstance) -> Vec<JointAction> {
    all_profiles(g)
        .into_iter()
        .filter(|p| is_pne(g, p))
        .map(JointAction)
        .collect()
}

pub fn optimum(g: &GameInstance) -> f64 {
    all_profiles(g)
        .iter()
        .map(|p| welfare(g, p))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn worst_ne(g: &GameInstance) -> Option<f64> {
    pne(g).iter().map(|p| welfare(g, &p.0)).reduce(f64::min)
}
