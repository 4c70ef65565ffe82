use mononav::env::{compute_reward, RewardConfig};
use mononav::pseudolaser::{
    apply_semantic_mask, augment_noise_seeded, detect_junctions, sense, slice_min_pool, DepthImage, MaskedDepth, NoiseParams, PseudoLaser, SensingConfig,
    SensingMode, TraversabilityMask,
};
use mononav::worldsim::{
    check_collision, render_depth, step_kinematics, Aabb, Action, AgentState, CameraModel, CollisionReport, CollisionWith, Footprint, Obstacle, Vec2,
    WorldState, MAX_ANGULAR_VEL,
};
use proptest::prelude::*;

fn action() -> impl Strategy<Value = Action> {
    (0.0..=1.0f64, -1.0..=1.0f64).prop_map(|(v, w)| Action::new(v, w))
}

fn world_with_agent(heading: f64) -> WorldState {
    let mut w = WorldState::new(Aabb::new(Vec2::new(-10.0, -10.0), Vec2::new(10.0, 10.0)));
    w.add_agent(AgentState::at(Vec2::new(0.0, 0.0), heading, Vec2::new(5.0, 0.0)));
    w
}

fn masked(h: usize, w: usize, depth: Vec<f64>, mask: Vec<u8>) -> (DepthImage, TraversabilityMask) {
    (DepthImage::new(h, w, 6.0, depth).unwrap(), TraversabilityMask::new(h, w, mask).unwrap())
}

fn image() -> impl Strategy<Value = (DepthImage, TraversabilityMask)> {
    (8usize..12, 8usize..12)
        .prop_flat_map(|(h, w)| (prop::collection::vec(0.05..=6.0f64, h * w), prop::collection::vec(0u8..=1, h * w)).prop_map(move |(d, m)| masked(h, w, d, m)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kinematics_respects_velocity_bounds(x in -3.0..3.0f64, y in -3.0..3.0f64, th in -4.0..4.0f64, a in action()) {
        let s = AgentState::at(Vec2::new(x, y), th, Vec2::new(0.0, 0.0));
        let n = step_kinematics(&s, a, 0.1).unwrap();
        prop_assert!((0.0..=1.0).contains(&n.linear_vel));
        prop_assert!(n.angular_vel.abs() <= MAX_ANGULAR_VEL);
        prop_assert!(n.position.dist(s.position) <= a.v * 0.1 + 1e-12);
    }

    #[test]
    fn straight_steps_mirror_with_heading(th in -3.0..3.0f64, v in 0.0..=1.0f64) {
        let g = Vec2::new(0.0, 0.0);
        let a = step_kinematics(&AgentState::at(g, th, g), Action::new(v, 0.0), 0.1).unwrap();
        let b = step_kinematics(&AgentState::at(g, -th, g), Action::new(v, 0.0), 0.1).unwrap();
        prop_assert!((a.position.x - b.position.x).abs() < 1e-15);
        prop_assert!((a.position.y + b.position.y).abs() < 1e-15);
    }

    #[test]
    fn collision_flag_flips_at_contact_distance(gap in 1e-7..0.5f64, dir in -3.2..3.2f64, obstacle in any::<bool>()) {
        let mut w = world_with_agent(0.0);
        let r = w.agents[0].radius;
        let u = Vec2::from_angle(dir);
        let (reach, with) = if obstacle { (r, CollisionWith::Obstacle) } else { (2.0 * r, CollisionWith::Agent) };
        let place = |w: &mut WorldState, d: f64| {
            if obstacle {
                w.obstacles = vec![Obstacle::solid(Footprint::Circle { center: u.scale(d + 0.2), radius: 0.2 }, 1.0)];
            } else {
                w.agents.truncate(1);
                w.inactive.truncate(1);
                w.add_agent(AgentState::at(u.scale(d), 0.0, Vec2::new(0.0, 0.0)));
            }
        };
        place(&mut w, reach + gap);
        prop_assert!(!check_collision(&w, 0).unwrap().collided);
        place(&mut w, reach - gap.min(0.2));
        let hit = check_collision(&w, 0).unwrap();
        prop_assert!(hit.collided);
        prop_assert_eq!(hit.with, with);
    }

    #[test]
    fn reward_total_is_sum_of_terms(x in -3.0..3.0f64, y in -3.0..3.0f64, th in -3.0..3.0f64, a in action(), hit in any::<bool>()) {
        let prev = AgentState::at(Vec2::new(x, y), th, Vec2::new(0.5, -0.5));
        let next = step_kinematics(&prev, a, 0.1).unwrap();
        let report = if hit { CollisionReport { collided: true, with: CollisionWith::Obstacle } } else { CollisionReport::NONE };
        let r = compute_reward(&prev, &next, &report, &RewardConfig::default());
        prop_assert_eq!(r.total, r.r_goal + r.r_collision + r.r_rotational);
        prop_assert!(r.total >= -15.0 - 0.25 - 0.1 && r.total <= 15.0 + 0.25);
    }

    #[test]
    fn masking_is_idempotent((depth, mask) in image()) {
        let once = apply_semantic_mask(&depth, &mask).unwrap();
        for (k, v) in once.values.iter().enumerate() {
            prop_assert_eq!(*v == 0.0, mask.values()[k] == 0);
        }
        // re-mask the surviving pixels; zeros stay zero
        let again: Vec<f64> = once.values.iter().map(|&v| if v == 0.0 { 6.0 } else { v }).collect();
        let twice = apply_semantic_mask(&DepthImage::new(depth.height(), depth.width(), 6.0, again).unwrap(), &mask).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn min_pool_is_a_lower_bound_attained_or_sentinel((depth, mask) in image()) {
        let m = apply_semantic_mask(&depth, &mask).unwrap();
        let l = slice_min_pool(&m);
        prop_assert_eq!(l.len(), m.width);
        for j in 0..m.width {
            let col: Vec<f64> = (m.height / 2..m.height).map(|i| m.get(i, j)).filter(|&v| v != 0.0).collect();
            prop_assert!(col.iter().all(|&v| l.ranges[j] <= v));
            prop_assert!(col.contains(&l.ranges[j]) || l.ranges[j] == m.max_range);
        }
    }

    #[test]
    fn noise_keeps_length_and_positivity(ranges in prop::collection::vec(0.01..=6.0f64, 8..64), seed in any::<u64>()) {
        let n = ranges.len();
        let out = augment_noise_seeded(&PseudoLaser::new(ranges, 6.0).unwrap(), &NoiseParams::default(), seed);
        prop_assert_eq!(out.ranges.len(), n);
        prop_assert!(out.ranges.iter().all(|&r| r > 0.0 && r <= 6.0));
    }

    #[test]
    fn junctions_ignore_constant_offsets(ranges in prop::collection::vec(0.5..=4.0f64, 8..40), c in 0.0..1.5f64) {
        let a = PseudoLaser::new(ranges.clone(), 6.0).unwrap();
        let b = PseudoLaser::new(ranges.iter().map(|r| r + c).collect(), 6.0).unwrap();
        prop_assert_eq!(detect_junctions(&a, 0.5), detect_junctions(&b, 0.5));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adding_an_obstacle_never_increases_depth_or_laser(
        heading in -3.2..3.2f64,
        dist in 0.8..5.0f64,
        bearing in -1.0..1.0f64,
        radius in 0.1..0.6f64,
        table in any::<bool>(),
    ) {
        let cam = CameraModel::with_size(12, 24);
        let mut base = world_with_agent(heading);
        base.obstacles.push(Obstacle::solid(Footprint::rect(Vec2::new(2.5, 1.5), 0.4, 0.3), 0.8));
        let mut more = base.clone();
        let c = Vec2::from_angle(heading + bearing).scale(dist);
        more.obstacles.push(if table {
            Obstacle::table_top(Footprint::rect(c, radius, radius), 0.2, 0.3)
        } else {
            Obstacle::solid(Footprint::Circle { center: c, radius }, 0.7)
        });
        let (d0, d1) = (render_depth(&base, 0, &cam).unwrap(), render_depth(&more, 0, &cam).unwrap());
        for (a, b) in d0.values().iter().zip(d1.values()) {
            prop_assert!(b <= a);
        }
        let cfg = SensingConfig::default();
        let l0 = sense(&base, 0, &cam, SensingMode::DepthMinpoolSemantic, &cfg).unwrap();
        let l1 = sense(&more, 0, &cam, SensingMode::DepthMinpoolSemantic, &cfg).unwrap();
        for (a, b) in l0.ranges.iter().zip(&l1.ranges) {
            prop_assert!(b <= a);
        }
    }
}

#[test]
fn masked_depth_from_raw_image_keeps_every_pixel() {
    let (d, _) = masked(8, 8, vec![1.5; 64], vec![1; 64]);
    let m = MaskedDepth::unmasked(&d);
    assert!(slice_min_pool(&m).ranges.iter().all(|&r| r == 1.5));
}
