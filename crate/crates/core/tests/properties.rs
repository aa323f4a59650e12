use chaotic_rl::doob::doob_decompose;
use chaotic_rl::env::{GridWorldConfig, PortfolioConfig, RegimeSwitchConfig};
use chaotic_rl::estimator::RewardMeanEstimator;
use chaotic_rl::mdp::sample_episode;
use chaotic_rl::pg::{
    cmv_reinforce_iteration, mv_reinforce_iteration, BatchContext, SoftmaxPolicy,
};
use chaotic_rl::rng::stream;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_reconstructs_the_return(
        env in 0usize..3,
        seed in any::<u64>(),
        step_means in prop::collection::vec(-5.0f64..5.0, 500),
    ) {
        let mdp = match env {
            0 => RegimeSwitchConfig::toy(0.16, 40).build_mdp().unwrap(),
            1 => GridWorldConfig::default().build_mdp().unwrap(),
            _ => PortfolioConfig::default().build_mdp().unwrap(),
        };
        let est = RewardMeanEstimator::exact(&mdp);
        let na = mdp.n_actions();
        let ep = sample_episode(&mdp, |_, r| r.random_range(0..na), 500, &mut stream(seed, &[])).unwrap();
        let d = doob_decompose(&ep, &est, mdp.gamma(), &step_means).unwrap();
        let ret = ep.discounted_return(mdp.gamma());
        prop_assert!((d.reconstructed() - ret).abs() <= 1e-10 * (1.0 + ret.abs()));
    }

    #[test]
    fn policies_stay_normalised_through_training(
        beta in 0.0f64..20.0,
        seed in any::<u64>(),
        mv in any::<bool>(),
    ) {
        let mdp = RegimeSwitchConfig::toy(1.0, 5).build_mdp().unwrap();
        let mut policy = SoftmaxPolicy::new(2, 2);
        let mut est = RewardMeanEstimator::tabular(2, 2);
        for iteration in 0..15 {
            let ctx = BatchContext { seed, iteration, max_steps: 50 };
            if mv {
                mv_reinforce_iteration(&mut policy, &mdp, 32, beta, 0.5, &ctx).unwrap();
            } else {
                cmv_reinforce_iteration(&mut policy, &mdp, &mut est, 32, beta, 0.5, &ctx).unwrap();
            }
            for s in 0..2 {
                let p = policy.probs(s);
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(p.iter().all(|&x| x > 0.0));
            }
        }
    }
}

#[test]
fn batch_results_do_not_depend_on_thread_count() {
    let mdp = PortfolioConfig::default().build_mdp().unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut policy = SoftmaxPolicy::new(3, 21);
            let mut est = RewardMeanEstimator::tabular(3, 21);
            for iteration in 0..3 {
                let ctx = BatchContext { seed: 2, iteration, max_steps: 20 };
                cmv_reinforce_iteration(&mut policy, &mdp, &mut est, 500, 1.0, 0.1, &ctx).unwrap();
            }
            policy
        })
    };
    assert_eq!(run(1), run(4));
}
