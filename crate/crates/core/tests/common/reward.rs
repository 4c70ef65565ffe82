use mononav::env::{compute_reward, RewardConfig};
use mononav::worldsim::{step_kinematics, Action, AgentState, CollisionReport, CollisionWith, Vec2, MAX_ANGULAR_VEL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn agent(x: f64, y: f64, heading: f64, goal: Vec2) -> AgentState {
    AgentState::at(Vec2::new(x, y), heading, goal)
}

pub fn published_constants() {
    let c = RewardConfig::default();
    assert_eq!((c.r_arrival, c.omega_g, c.r_collision, c.omega_w), (15.0, 2.5, -15.0, -0.1));
    assert_eq!((c.goal_radius, c.w_penalty_threshold), (0.1, 0.7));
}

pub fn each_term_matches_its_definition() {
    let cfg = RewardConfig::default();
    let g = Vec2::new(3.0, 4.0);
    let mut prev = agent(0.0, 0.0, 0.0, g);
    let mut curr = agent(0.3, 0.4, 0.0, g);
    // 5.0 → 4.5 m
    let r = compute_reward(&prev, &curr, &CollisionReport::NONE, &cfg);
    assert_eq!(r.r_goal, 2.5 * (prev.goal_distance() - curr.goal_distance()));
    assert!((r.r_goal - 1.25).abs() < 1e-15);

    // arrival replaces the progress term
    curr.position = Vec2::new(2.95, 4.0);
    assert_eq!(compute_reward(&prev, &curr, &CollisionReport::NONE, &cfg).r_goal, 15.0);
    curr.position = Vec2::new(2.9, 4.0);
    let r = compute_reward(&prev, &curr, &CollisionReport::NONE, &cfg);
    assert_eq!(r.r_goal, 2.5 * (5.0 - curr.goal_distance()));

    // collision stacks with progress
    let hit = CollisionReport { collided: true, with: CollisionWith::Obstacle };
    let r = compute_reward(&prev, &prev, &hit, &cfg);
    assert_eq!((r.r_goal, r.r_collision, r.total), (0.0, -15.0, -15.0));

    // rotation penalty uses the normalised angular speed, strictly above 0.7
    for (wn, expect) in [(0.7, 0.0), (0.71, -0.071), (-1.0, -0.1), (0.3, 0.0)] {
        prev.angular_vel = 0.0;
        let mut c = prev.clone();
        c.angular_vel = wn * MAX_ANGULAR_VEL;
        let r = compute_reward(&prev, &c, &CollisionReport::NONE, &cfg);
        assert!((r.r_rotational - expect).abs() < 1e-15, "w={wn}: {}", r.r_rotational);
        assert_eq!(r.total, r.r_goal + r.r_collision + r.r_rotational);
    }
}

pub fn progress_terms_telescope_over_random_trajectories() {
    let cfg = RewardConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let goal = Vec2::new(rng.random_range(30.0..40.0), rng.random_range(-40.0..40.0));
        let mut a = agent(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0), goal);
        let d0 = a.goal_distance();
        let mut sum = 0.0;
        for _ in 0..100 {
            let act = Action::new(rng.random_range(0.0..=1.0), rng.random_range(-1.0..=1.0));
            let next = step_kinematics(&a, act, 0.1).unwrap();
            sum += compute_reward(&a, &next, &CollisionReport::NONE, &cfg).r_goal;
            a = next;
        }
        let expect = 2.5 * (d0 - a.goal_distance());
        assert!((sum - expect).abs() <= 1e-12 * d0, "{sum} vs {expect}");
    }
}
