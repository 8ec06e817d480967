use mrlab_core::env_model::{build_contextual_bandit, build_finite_mab, build_linear_bandit, instance_hash, validate};
use mrlab_core::game::{minimax_regret, solve_game, GameOptions};
use mrlab_core::generator::{random_instance, GenConfig};
use mrlab_core::mc::rollout_rng;
use mrlab_core::policy::HistoryPolicy;
use mrlab_core::regret::{bayesian_regret, mbr};
use mrlab_core::{ExactModel, MdpClass, Prior};
use proptest::prelude::*;

fn instance(seed: u64) -> MdpClass {
    random_instance(&mut rollout_rng(seed, 0), &GenConfig::default())
}

fn prior(n: usize) -> impl Strategy<Value = Prior> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        Prior::new(v.iter().map(|x| x / s).collect()).unwrap()
    })
}

/// A random instance with two priors over its parameters.
fn instance_and_priors() -> impl Strategy<Value = (MdpClass, Prior, Prior)> {
    any::<u64>().prop_flat_map(|seed| {
        let inst = instance(seed);
        let n = inst.n_params;
        (Just(inst), prior(n), prior(n))
    })
}

fn matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..6, 1usize..5).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-2.0f64..2.0, c), r))
}

fn game_value(e: &[Vec<f64>]) -> f64 {
    solve_game(e, &GameOptions::default()).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bayesian_regret_is_linear_in_the_prior((inst, p, q) in instance_and_priors(), lambda in 0.0f64..1.0, seed in any::<u64>()) {
        let m = ExactModel::new(&inst).unwrap();
        let pi = HistoryPolicy::random(m.tree().unwrap(), &mut rollout_rng(seed, 1));
        let mix = Prior::mix(lambda, &p, &q);
        let lhs = bayesian_regret(&m, &pi, &mix).unwrap().value;
        let rhs = lambda * bayesian_regret(&m, &pi, &p).unwrap().value
            + (1.0 - lambda) * bayesian_regret(&m, &pi, &q).unwrap().value;
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn mbr_is_concave((inst, p, q) in instance_and_priors(), lambda in 0.0f64..1.0) {
        let m = ExactModel::new(&inst).unwrap();
        let mix = mbr(&m, &Prior::mix(lambda, &p, &q)).unwrap().value;
        let chord = lambda * mbr(&m, &p).unwrap().value + (1.0 - lambda) * mbr(&m, &q).unwrap().value;
        prop_assert!(mix >= chord - 1e-9);
    }

    #[test]
    fn weak_duality_holds((inst, p, _) in instance_and_priors()) {
        let m = ExactModel::new(&inst).unwrap();
        let mm = minimax_regret(&m).unwrap().game.upper;
        prop_assert!(mbr(&m, &p).unwrap().value <= mm + 1e-9);
    }

    #[test]
    fn duplicate_rows_do_not_change_the_value(e in matrix(), pick in any::<prop::sample::Index>()) {
        let v = game_value(&e);
        let mut dup = e.clone();
        dup.push(e[pick.index(e.len())].clone());
        prop_assert!((game_value(&dup) - v).abs() < 1e-9);
    }

    #[test]
    fn dominated_rows_do_not_change_the_value(e in matrix(), pick in any::<prop::sample::Index>(), shift in 0.0f64..1.0) {
        let v = game_value(&e);
        let mut dom = e.clone();
        dom.push(e[pick.index(e.len())].iter().map(|x| x + shift).collect());
        prop_assert!((game_value(&dom) - v).abs() < 1e-9);
    }

    #[test]
    fn game_value_is_translation_equivariant(e in matrix(), c in -3.0f64..3.0) {
        let shifted: Vec<Vec<f64>> = e.iter().map(|r| r.iter().map(|x| x + c).collect()).collect();
        prop_assert!((game_value(&shifted) - game_value(&e) - c).abs() < 1e-9);
    }

    #[test]
    fn game_solution_brackets_the_value(e in matrix()) {
        let s = solve_game(&e, &GameOptions::default()).unwrap();
        prop_assert!(s.lower <= s.value + 1e-9 && s.value <= s.upper + 1e-9);
        prop_assert!(s.duality_gap.abs() < 1e-9);
    }

    #[test]
    fn serialization_round_trips(seed in any::<u64>()) {
        let inst = instance(seed);
        let text = inst.to_json();
        let back = MdpClass::from_json(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.to_json(), text);
        prop_assert_eq!(instance_hash(&back), instance_hash(&inst));
    }

    #[test]
    fn generated_instances_validate(seed in any::<u64>()) {
        prop_assert!(validate(&instance(seed)).is_valid());
    }

    #[test]
    fn mab_builder_preserves_arm_means(
        means in (1usize..4, 1usize..4).prop_flat_map(|(k, n)| prop::collection::vec(prop::collection::vec(0.0f64..=1.0, k), n)),
        horizon in 1usize..4,
    ) {
        let inst = build_finite_mab(&means, horizon).unwrap();
        prop_assert!(validate(&inst).is_valid());
        prop_assert!(inst.is_finite_mab() && inst.is_contextual());
        prop_assert_eq!(inst.pulls(), horizon);
        for (p, row) in means.iter().enumerate() {
            for (a, &mu) in row.iter().enumerate() {
                prop_assert!((inst.arm_mean(p, a).unwrap() - mu).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn contextual_builder_is_contextual(
        ctx in prior(3),
        means in prop::collection::vec(prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 2), 3), 1..4),
    ) {
        let inst = build_contextual_bandit(ctx.weights(), &means, 2).unwrap();
        prop_assert!(validate(&inst).is_valid());
        prop_assert!(inst.is_contextual() && !inst.is_finite_mab());
        for (p, per_ctx) in means.iter().enumerate() {
            for (s, row) in per_ctx.iter().enumerate() {
                for (a, &mu) in row.iter().enumerate() {
                    prop_assert!((inst.expected_reward(p, s, a) - mu).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn linear_builder_realizes_inner_products(
        actions in prop::collection::vec((-0.7f64..0.7, -0.7f64..0.7), 1..4),
        params in prop::collection::vec((-0.7f64..0.7, -0.7f64..0.7), 1..3),
        levels in 2usize..5,
    ) {
        let a: Vec<Vec<f64>> = actions.iter().map(|&(x, y)| vec![x, y]).collect();
        let t: Vec<Vec<f64>> = params.iter().map(|&(x, y)| vec![x, y]).collect();
        let inst = build_linear_bandit(2, &a, &t, levels, 3).unwrap();
        prop_assert!(validate(&inst).is_valid());
        prop_assert_eq!(inst.pulls(), 3);
        for (p, theta) in t.iter().enumerate() {
            for (i, act) in a.iter().enumerate() {
                let dot = act[0] * theta[0] + act[1] * theta[1];
                prop_assert!((inst.arm_mean(p, i).unwrap() - dot).abs() < 1e-12);
            }
        }
    }
}
