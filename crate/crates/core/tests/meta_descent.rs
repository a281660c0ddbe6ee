use varshot_core::meta::{
    meta_objective_vs, InnerConfig, LearningRatePolicy, MetaLearner, MetaOptimizerConfig,
    ScaledLearningRate, TaskSample,
};
use varshot_core::model::{Activation, Loss, Mlp, ParamVector};
use varshot_core::seed::rng_for;
use varshot_core::tasks::{batch_from_indices, TaskDistribution, TaskStream};

fn samples(seed: u64) -> Vec<TaskSample> {
    let mut rng = rng_for(&[31, seed]);
    TaskStream::generate(&TaskDistribution::sinusoid(), 5, seed)
        .unwrap()
        .tasks()
        .iter()
        .enumerate()
        .map(|(j, t)| {
            TaskSample::from_pool(&batch_from_indices(t, 0..15), 1 + j * 2, 10, &mut rng).unwrap()
        })
        .collect()
}

#[test]
fn meta_step_lowers_the_objective() {
    let mlp = Mlp::new(vec![1, 16, 16, 1], Activation::Tanh).unwrap();
    let config = MetaOptimizerConfig {
        outer_rate: 1e-3,
        inner_steps: 2,
        ..Default::default()
    };
    let inner = InnerConfig {
        steps: config.inner_steps,
        grad_clip: config.inner_grad_clip,
        first_order: false,
    };
    let trials = 50;
    let mut lowered = 0;
    for trial in 0..trials {
        let theta = ParamVector::glorot(&mlp.sizes, &mut rng_for(&[32, trial]));
        let policy = LearningRatePolicy::Scaled(ScaledLearningRate::new(0.05, 1.0));
        let mut learner =
            MetaLearner::new(mlp.clone(), Loss::Mse, theta, policy, config.clone()).unwrap();
        let tasks = samples(trial);
        let before = learner.meta_step(&tasks).unwrap().objective.unwrap();
        let after = meta_objective_vs(
            &mlp,
            Loss::Mse,
            learner.theta(),
            learner.policy(),
            &tasks,
            &inner,
        )
        .unwrap()
        .value();
        lowered += usize::from(after < before);
    }
    assert!(lowered * 10 >= trials as usize * 9, "{lowered}/{trials}");
}
