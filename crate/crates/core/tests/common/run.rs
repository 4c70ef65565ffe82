use mononav::config::RunConfig;
use mononav::env::{EpisodeStatus, Observation, RewardBreakdown};
use mononav::nn::{Architecture, HiddenState, Policy, PolicyConfig, PolicyInput};
use mononav::trainer::{Checkpoint, Episode, RolloutBuffer, Stage, TrainError, Trainer, TrainerConfig, Transition};
use mononav::worldsim::{CameraModel, SceneSpec};

pub fn small_run(arch: Architecture, batch: usize) -> RunConfig {
    let mut run = RunConfig { camera: CameraModel::with_size(8, 16), ..RunConfig::default() };
    run.policy = PolicyConfig { architecture: arch, conv_channels: 4, feg_channels: 4, dense: 16, merge: 16, hidden: 16, ..PolicyConfig::default() };
    run.trainer.batch_size = batch;
    run.trainer.num_envs = 2;
    run.trainer.lstm_unroll = 5;
    run.trainer.curriculum.stages = vec![Stage { name: "s".into(), scenes: vec![SceneSpec::Named("stage1_small:2".into())] }];
    run
}

/// One-episode buffer of `len` steps with fixed return targets.
pub fn fixed_target_buffer(policy: &Policy, params: &[f64], len: usize, unroll: usize) -> RolloutBuffer {
    let cfg = policy.config();
    let d = cfg.d_laser;
    let obs = |k: usize| Observation {
        lasers: std::array::from_fn(|j| (0..d).map(|i| 1.0 + 0.1 * ((i + j + k) % 7) as f64).collect()),
        goals: [[2.0 - 0.1 * k as f64, 0.3]; 3],
        velocities: [[0.5, 0.1]; 3],
    };
    let observations: Vec<Observation> = (0..len).map(obs).collect();
    let input = PolicyInput::from_observations(observations.iter(), cfg);
    let ss = cfg.state_size();
    let cache = policy.forward(params, &input, len, 1, &HiddenState::zeros(ss)).unwrap();
    let transitions = (0..len)
        .map(|k| {
            let dist = policy.dist(params, &cache, k);
            let u = dist.mean;
            Transition {
                observation: observations[k].clone(),
                u,
                log_prob: dist.log_prob(u),
                value: cache.values[k],
                old_mean: dist.mean,
                reward: RewardBreakdown::default(),
                done: k + 1 == len,
                advantage: 0.0,
                ret: 3.0 - 0.2 * k as f64,
            }
        })
        .collect();
    let mut buf = RolloutBuffer::new(unroll, policy.log_std(params));
    buf.episodes.push(Episode {
        scene: "fixed".into(),
        agent: 0,
        transitions,
        status: EpisodeStatus::Arrived,
        bootstrap_value: 0.0,
        chunk_states: vec![HiddenState::zeros(ss)],
    });
    buf
}

pub fn ten_updates_are_bit_identical_across_runs() {
    let run = small_run(Architecture::LstmFeg, 64);
    let mut a = Trainer::new(&run).unwrap();
    let mut b = Trainer::new(&run).unwrap();
    for _ in 0..10 {
        let (ba, sa) = a.iteration().unwrap();
        let (bb, sb) = b.iteration().unwrap();
        assert_eq!(ba, bb);
        assert_eq!(sa.mean_episode_reward.to_bits(), sb.mean_episode_reward.to_bits());
    }
    assert!(a.params.iter().zip(&b.params).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(a.adam, b.adam);
    let mut c = Trainer::new(&RunConfig { trainer: TrainerConfig { seed: 1, ..run.trainer.clone() }, ..run.clone() }).unwrap();
    assert_ne!(c.collect_rollouts().unwrap(), Trainer::new(&run).unwrap().collect_rollouts().unwrap());
}

pub fn checkpoint_round_trip_is_bit_identical() {
    let run = small_run(Architecture::LstmFeg, 64);
    let mut t = Trainer::new(&run).unwrap();
    t.iteration().unwrap();
    let ck = t.checkpoint(&run.camera);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ck);
    back.check_compatible(t.policy.config(), &run.camera).unwrap();

    let buf = fixed_target_buffer(&t.policy, &t.params, 7, 5);
    let obs: Vec<&Observation> = buf.transitions().map(|t| &t.observation).collect();
    let input = PolicyInput::from_observations(obs, t.policy.config());
    let h0 = HiddenState::zeros(t.policy.config().state_size());
    let a = t.policy.forward(&t.params, &input, 7, 1, &h0).unwrap();
    let p2 = Policy::new(back.policy.clone()).unwrap();
    let b = p2.forward(&back.params, &input, 7, 1, &h0).unwrap();
    assert!(a.means.iter().zip(&b.means).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));

    // resuming restores optimizer and counters
    let resumed = Trainer::resume(&run, &back).unwrap();
    assert_eq!(resumed.adam, t.adam);
    assert_eq!((resumed.updates, resumed.episodes_done), (t.updates, t.episodes_done));

    // a different network refuses the checkpoint
    let mut other = run.clone();
    other.policy.hidden = 32;
    assert!(matches!(Trainer::resume(&other, &back), Err(TrainError::Checkpoint(_))));
}
