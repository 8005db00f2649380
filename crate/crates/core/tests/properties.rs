mod common;

use anarchy_lab::format::{parse, serialize};
use anarchy_lab::instances::{gen_random_separable, RandomConfig, UtilityMode};
use anarchy_lab::learning::softmax;
use anarchy_lab::{
    check_vug, instance_poa, optimal_welfare, theoretical_poa, CompromiseLabel, GameInstance,
    JointAction, UtilityClass, UtilityKind, TOLERANCE,
};
use proptest::prelude::*;

use CompromiseLabel::*;

fn label_strategy() -> impl Strategy<Value = CompromiseLabel> {
    prop_oneof![Just(Blind), Just(Isolated), Just(Disabled)]
}

fn game_strategy() -> impl Strategy<Value = GameInstance> {
    (
        2usize..=5,
        any::<u64>(),
        prop::collection::vec(label_strategy(), 0..=3),
        0usize..3,
    )
        .prop_map(|(n, seed, mut labels, mode)| {
            labels.truncate(n);
            let cfg = RandomConfig {
                labels: labels.clone(),
                utility: [UtilityMode::Es, UtilityMode::Mc, UtilityMode::Mixed][mode],
                ..RandomConfig::new(n, labels.len(), seed)
            };
            gen_random_separable(&cfg).unwrap()
        })
}

/// A game with an admissible profile drawn from its action sets.
fn game_and_profile() -> impl Strategy<Value = (GameInstance, JointAction, Vec<usize>)> {
    (
        game_strategy(),
        prop::collection::vec(any::<prop::sample::Index>(), 10),
    )
        .prop_map(|(g, picks)| {
            let p = (0..g.n())
                .map(|i| {
                    if g.label(i) == Disabled {
                        anarchy_lab::Action::empty()
                    } else {
                        picks[i].get(g.actions(i)).clone()
                    }
                })
                .collect();
            let alt: Vec<usize> = picks.iter().map(|x| x.index(usize::MAX)).collect();
            (g, JointAction(p), alt)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn blind_utility_ignores_others((g, p, alt) in game_and_profile()) {
        for i in (0..g.n()).filter(|&i| g.label(i).is_independent()) {
            let base = g.effective_utility(i, &p).unwrap();
            for j in (0..g.n()).filter(|&j| j != i && g.label(j) != Disabled) {
                let q = p.with(j, g.actions(j)[alt[j] % g.actions(j).len()].clone());
                prop_assert_eq!(g.effective_utility(i, &q).unwrap(), base);
            }
        }
    }

    #[test]
    fn isolated_agents_are_invisible((g, p, alt) in game_and_profile()) {
        for j in (0..g.n()).filter(|&j| g.label(j) == Isolated) {
            let q = p.with(j, g.actions(j)[alt[j] % g.actions(j).len()].clone());
            for i in (0..g.n()).filter(|&i| g.label(i) == Normal) {
                prop_assert_eq!(g.effective_utility(i, &q).unwrap(), g.effective_utility(i, &p).unwrap());
            }
        }
    }

    #[test]
    fn equal_shares_sum_to_welfare((g, p, _alt) in game_and_profile()) {
        let total: f64 = (0..g.n()).map(|i| g.equal_share(i, &p).unwrap()).sum();
        prop_assert!((total - g.welfare_eval(&p).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn marginal_contribution_is_nonnegative((g, p, _alt) in game_and_profile()) {
        for i in 0..g.n() {
            prop_assert!(g.marginal_contribution(i, &p).unwrap() >= -TOLERANCE);
        }
    }

    #[test]
    fn disabled_agents_get_nothing((g, p, _alt) in game_and_profile()) {
        for i in (0..g.n()).filter(|&i| g.label(i) == Disabled) {
            prop_assert_eq!(g.effective_utility(i, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn optimum_is_permutation_invariant(g in game_strategy(), shift in 1usize..5) {
        let n = g.n();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let h = GameInstance::new(
            g.num_resources(),
            perm.iter().map(|&i| g.actions(i).to_vec()).collect(),
            g.welfare().clone(),
            perm.iter().map(|&i| g.utilities()[i]).collect(),
            perm.iter().map(|&i| g.label(i)).collect(),
        ).unwrap();
        let a = optimal_welfare(&g).unwrap().0;
        let b = optimal_welfare(&h).unwrap().0;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ratio_respects_theoretical_bound(g in game_strategy()) {
        let r = instance_poa(&g).unwrap();
        if let Some(ratio) = r.ratio {
            prop_assert!(ratio >= r.theoretical_bound - TOLERANCE);
            prop_assert!(ratio <= 1.0 + TOLERANCE);
        }
    }

    #[test]
    fn random_games_are_valid(g in game_strategy()) {
        prop_assert!(check_vug(&g).unwrap().passed);
    }

    #[test]
    fn instance_files_round_trip(g in game_strategy()) {
        prop_assert_eq!(parse(&serialize(&g)).unwrap(), g);
    }

    #[test]
    fn theoretical_bound_nonincreasing(n in 1usize..40, blind in any::<bool>(), mc in any::<bool>()) {
        let class = if mc { UtilityClass::Mc } else { UtilityClass::GeneralVug };
        let mut prev = f64::INFINITY;
        for k in 0..=n {
            let v = theoretical_poa(n, k, false, blind && k > 0, class).unwrap();
            prop_assert!(v <= prev);
            prop_assert!(v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn softmax_is_a_distribution(
        u in prop::collection::vec(-50.0f64..50.0, 1..8),
        t in prop::sample::select(vec![1e-4, 1e-3, 0.1, 1.0, 10.0, 1e4]),
    ) {
        let p = softmax(&u, t);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
        let best = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (x, ui) in p.iter().zip(&u) {
            if *ui == best {
                prop_assert!(p.iter().all(|y| y <= x));
            }
        }
    }

    #[test]
    fn mc_games_have_marginal_utilities((g, p, _alt) in game_and_profile()) {
        for i in (0..g.n()).filter(|&i| g.utilities()[i] == UtilityKind::MarginalContribution) {
            prop_assert_eq!(g.utility(i, &p).unwrap(), g.marginal_contribution(i, &p).unwrap());
        }
    }
}
