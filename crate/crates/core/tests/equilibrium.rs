mod common;

use anarchy_lab::instances::{gen_random_separable, RandomConfig, UtilityMode};
use anarchy_lab::{
    enumerate_pne, instance_poa, is_pne, optimal_welfare, Action, CompromiseLabel, GameError,
    GameInstance, JointAction, UtilityKind, WelfareSpec,
};
use std::collections::BTreeMap;

use CompromiseLabel::*;

fn random_suite() -> impl Iterator<Item = GameInstance> {
    let mixes: [&[CompromiseLabel]; 6] = [
        &[],
        &[Blind],
        &[Isolated, Blind],
        &[Disabled],
        &[Isolated, Disabled, Blind],
        &[Blind, Blind, Isolated],
    ];
    (0..240u64).map(move |seed| {
        let labels = mixes[seed as usize % mixes.len()];
        let mut cfg = RandomConfig::new(2 + seed as usize % 4, labels.len(), seed);
        if cfg.k > cfg.n {
            cfg.k = 0;
        } else {
            cfg.labels = labels.to_vec();
        }
        cfg.utility = [UtilityMode::Es, UtilityMode::Mc, UtilityMode::Mixed][seed as usize / 6 % 3];
        gen_random_separable(&cfg).unwrap()
    })
}

#[test]
fn enumeration_matches_direct_scan() {
    for g in random_suite() {
        let ne = enumerate_pne(&g).unwrap();
        assert_eq!(ne.equilibria, common::pne(&g), "game {g:?}");
        for (p, w) in ne.equilibria.iter().zip(&ne.welfare) {
            assert!((w - common::welfare(&g, &p.0)).abs() < 1e-12);
        }
    }
}

#[test]
fn is_pne_agrees_with_direct_scan_on_every_profile() {
    for g in random_suite().take(80) {
        for p in common::all_profiles(&g) {
            let admissible = (0..g.n()).all(|i| g.label(i) != Disabled || p[i].is_empty());
            if !admissible {
                continue;
            }
            assert_eq!(
                is_pne(&g, &JointAction(p.clone())).unwrap(),
                common::is_pne(&g, &p)
            );
        }
    }
}

#[test]
fn optimum_matches_direct_scan() {
    for g in random_suite() {
        let (w, p) = optimal_welfare(&g).unwrap();
        assert!((w - common::optimum(&g)).abs() < 1e-12);
        assert!((common::welfare(&g, &p.0) - w).abs() < 1e-12);
    }
}

#[test]
fn effective_utilities_match_reference() {
    for g in random_suite().take(120) {
        for p in common::all_profiles(&g).into_iter().take(64) {
            let joint = JointAction(p.clone());
            for i in 0..g.n() {
                let lib = g.effective_utility(i, &joint).unwrap();
                assert!((lib - common::effective(&g, i, &p)).abs() < 1e-12);
                assert!(
                    (g.utility(i, &joint).unwrap() - common::raw_utility(&g, i, &p)).abs() < 1e-12
                );
            }
        }
    }
}

#[test]
fn tabulated_welfare_enumeration() {
    // coverage of {0,1,2} with weights 1, 2, 3 as an explicit table
    let weights = [1.0, 2.0, 3.0];
    let mut table = BTreeMap::new();
    for mask in 1u32..8 {
        let ids: Vec<u32> = (0..3).filter(|b| mask >> b & 1 == 1).collect();
        let v = ids.iter().map(|&b| weights[b as usize]).sum();
        table.insert(Action::from_ids(ids).resources().to_vec(), v);
    }
    let g = GameInstance::new(
        3,
        vec![
            vec![Action::single(0), Action::single(2)],
            vec![Action::single(1), Action::single(2)],
            vec![Action::from_ids([0, 1]), Action::single(2)],
        ],
        WelfareSpec::Tabulated { table },
        vec![UtilityKind::MarginalContribution; 3],
        vec![Normal, Blind, Normal],
    )
    .unwrap();
    assert_eq!(enumerate_pne(&g).unwrap().equilibria, common::pne(&g));
    assert_eq!(optimal_welfare(&g).unwrap().0, common::optimum(&g));
}

#[test]
fn size_cap_is_reported() {
    let cfg = RandomConfig {
        max_actions: 4,
        max_resources: 4,
        ..RandomConfig::new(12, 0, 3)
    };
    let g = gen_random_separable(&cfg).unwrap();
    match anarchy_lab::enumerate_pne_capped(&g, 10) {
        Err(GameError::SizeCap { .. }) => {}
        other => panic!("expected size cap, got {other:?}"),
    }
}

#[test]
fn poa_report_fields_are_consistent() {
    for g in random_suite().take(100) {
        let r = instance_poa(&g).unwrap();
        match common::worst_ne(&g) {
            None => assert!(r.ratio.is_none()),
            Some(w) => {
                assert!((r.worst_ne_welfare.unwrap() - w).abs() < 1e-12);
                let opt = common::optimum(&g);
                let expected = if opt <= 1e-9 { 1.0 } else { w / opt };
                assert!((r.ratio.unwrap() - expected).abs() < 1e-12);
                assert!(r.best_ne_welfare.unwrap() >= w);
            }
        }
    }
}
