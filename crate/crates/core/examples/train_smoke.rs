//! Train on the two-lane smoke scene and print rolling training stats, with a
//! periodic deterministic evaluation.
//!
//! Usage: train_smoke [episodes] [eval_every_updates]
//! `SMOKE_CONFIG` may name a run config JSON to start from; `SMOKE_OUT` a
//! path for the final checkpoint; `SMOKE_SCENE` a scene description JSON.

use mononav::config::RunConfig;
use mononav::env::EpisodeStatus;
use mononav::eval::{run_trials, PolicyController};
use mononav::trainer::{Stage, Trainer};
use mononav::worldsim::{CameraModel, ScenarioId, SceneSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let mut cfg = match std::env::var("SMOKE_CONFIG") {
        Ok(path) => RunConfig::load(std::path::Path::new(&path)).expect("config"),
        Err(_) => RunConfig::default(),
    };
    cfg.camera = CameraModel { max_range: cfg.camera.max_range, ..CameraModel::with_size(24, 32) };
    cfg.trainer.total_episodes = args.next().and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let eval_every: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let desc = match std::env::var("SMOKE_SCENE") {
        Ok(path) => serde_json::from_str(&std::fs::read_to_string(path).expect("scene file")).expect("scene json"),
        Err(_) => ScenarioId::Stage1Small { agents: 2 }.description(),
    };
    cfg.trainer.curriculum.stages = vec![Stage { name: "small".into(), scenes: vec![SceneSpec::Custom(Box::new(desc.clone()))] }];
    let env_cfg = cfg.env_config(false);
    let mut t = Trainer::new(&cfg).expect("config");
    let start = std::time::Instant::now();
    t.train(|tr, s| {
        let w = tr.history.len().min(200);
        let recent = &tr.history[tr.history.len() - w..];
        let count = |st: EpisodeStatus| recent.iter().filter(|e| e.status == st).count() as f64 / w as f64;
        let rew = recent.iter().map(|e| e.reward).sum::<f64>() / w as f64;
        let len = recent.iter().map(|e| e.steps).sum::<usize>() as f64 / w as f64;
        print!(
            "upd {:4} ep {:6} succ {:.3} coll {:.3} tout {:.3} rew {:7.3} len {:5.1} pl {:+.4} vl {:.3} kl {:.5} ent {:.3} t {:.0}s",
            s.update,
            s.episodes,
            count(EpisodeStatus::Arrived),
            count(EpisodeStatus::Collided),
            count(EpisodeStatus::Timeout),
            rew,
            len,
            s.policy_loss,
            s.value_loss,
            s.kl,
            s.entropy,
            start.elapsed().as_secs_f64()
        );
        if s.update % eval_every == 0 {
            let mut ctl = PolicyController::new(tr.policy.clone(), tr.params.clone());
            let (m, logs) = run_trials(&env_cfg, &desc, 50, 77, &mut ctl).expect("eval");
            // closest approach to the goal for agents that timed out
            let mut near: Vec<f64> = logs
                .iter()
                .flat_map(|log| {
                    log.outcomes.iter().filter(|o| o.status == EpisodeStatus::Timeout).map(move |o| {
                        let g = log.initial_world.agents[o.agent].goal;
                        let rec = log.trajectories.iter().find(|r| r.agent == o.agent).expect("trajectory per agent");
                        rec.rows.iter().map(|r| (r.x - g.x).hypot(r.y - g.y)).fold(f64::INFINITY, f64::min)
                    })
                })
                .collect();
            near.sort_by(f64::total_cmp);
            let q = |f: f64| near.get(((near.len() as f64 - 1.0) * f) as usize).copied().unwrap_or(f64::NAN);
            print!(
                " | eval succ {:.3} coll {} tout {} near q25 {:.2} q50 {:.2} q75 {:.2}",
                m.success_rate,
                m.n_collision,
                m.n_timeout,
                q(0.25),
                q(0.5),
                q(0.75)
            );
        }
        println!();
    })
    .expect("training");
    if let Ok(out) = std::env::var("SMOKE_OUT") {
        t.checkpoint(&cfg.camera).save(std::path::Path::new(&out)).expect("checkpoint");
    }
}
