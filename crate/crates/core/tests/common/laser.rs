use std::time::Instant;

use mononav::pseudolaser::{apply_semantic_mask, augment_noise, detect_junctions, junction_windows, slice_min_pool, NoiseParams, PseudoLaser};
use mononav::worldsim::scenario::{GroundKind, ObstacleKind};
use mononav::worldsim::{render_depth, render_hits, render_traversability, spawn_scenario, CameraModel, ScenarioId, SurfaceKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn scenario_for(k: u64) -> ScenarioId {
    match k % 6 {
        0 => ScenarioId::TestRandom { agents: 3 },
        1 => ScenarioId::Stage1Open { agents: 4 },
        2 => ScenarioId::ComplexGround { kind: GroundKind::SpecialFloor },
        3 => ScenarioId::ComplexGround { kind: GroundKind::Slope },
        4 => ScenarioId::SingleObstacle { kind: ObstacleKind::ALL[(k / 6 % 4) as usize] },
        _ => ScenarioId::Stage3Corridor { agents: 4 },
    }
}

pub fn min_pool_matches_brute_force_scan_on_1000_scenes() {
    let cam = CameraModel::default();
    let start = Instant::now();
    let mut nonbackground = 0usize;
    for k in 0..1000u64 {
        let world = spawn_scenario(&scenario_for(k), 90_000 + k).unwrap();
        let agent = (k as usize) % world.agents.len();
        let depth = render_depth(&world, agent, &cam).unwrap();
        let mask = render_traversability(&world, agent, &cam).unwrap();
        let laser = slice_min_pool(&apply_semantic_mask(&depth, &mask).unwrap());

        let (h, w) = (depth.height(), depth.width());
        for j in 0..w {
            let mut best = cam.max_range;
            for i in h / 2..h {
                if mask.get(i, j) != 0 {
                    let d = depth.get(i, j);
                    if d != 0.0 && d < best {
                        best = d;
                    }
                }
            }
            assert_eq!(laser.ranges[j].to_bits(), best.to_bits(), "scene {k} column {j}");
            nonbackground += (best < cam.max_range) as usize;
        }
    }
    assert!(nonbackground > 10_000, "scenes should contain visible obstacles");
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 30.0, "took {secs:.1}s");
}

pub fn special_floor_is_reported_unless_masked_out() {
    let cam = CameraModel::default();
    let scene = ScenarioId::ComplexGround { kind: GroundKind::SpecialFloor };
    for seed in 0..100u64 {
        let world = spawn_scenario(&scene, seed).unwrap();
        let hits = render_hits(&world, 0, &cam).unwrap();
        let depth = hits.depth();
        let mask = hits.traversability();
        let laser = slice_min_pool(&apply_semantic_mask(&depth, &mask).unwrap());

        let mut forced = mask.clone();
        let mut patch_columns = Vec::new();
        for j in 0..cam.width {
            let mut nearest = f64::INFINITY;
            for i in cam.height / 2..cam.height {
                if let SurfaceKind::SpecialFloor(_) = hits.at(i, j).kind {
                    nearest = nearest.min(hits.at(i, j).depth);
                    forced.set(i, j, 0);
                }
            }
            if nearest.is_finite() {
                patch_columns.push((j, nearest));
            }
        }
        assert!(!patch_columns.is_empty(), "seed {seed}: patch not in view");
        let without = slice_min_pool(&apply_semantic_mask(&depth, &forced).unwrap());
        for &(j, nearest) in &patch_columns {
            assert!(laser.ranges[j] < cam.max_range, "seed {seed} column {j}");
            assert_eq!(laser.ranges[j], nearest, "seed {seed} column {j}");
            assert_eq!(without.ranges[j], cam.max_range, "seed {seed} column {j}");
        }
    }
}

pub fn gaussian_noise_std_matches_scale() {
    let start = Instant::now();
    let params = NoiseParams { gaussian_scale: 0.07, ..NoiseParams::default() };
    let base = PseudoLaser::constant(16, 2.0, 6.0);
    let n = 100_000;
    let mut sum = [0.0f64; 16];
    let mut sq = [0.0f64; 16];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..n {
        let out = augment_noise(&base, &params, &mut rng);
        for (j, v) in out.ranges.iter().enumerate() {
            sum[j] += v;
            sq[j] += v * v;
        }
    }
    for j in 0..16 {
        let mean = sum[j] / n as f64;
        let std = ((sq[j] - n as f64 * mean * mean) / (n - 1) as f64).sqrt();
        assert!((0.1358..=0.1442).contains(&std), "entry {j}: std {std}");
        assert!((mean - 2.0).abs() < 0.005, "entry {j}: mean {mean}");
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 10.0, "took {secs:.1}s");
}

pub fn junction_windows_are_exactly_affine() {
    let params = NoiseParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..200 {
        let step = 10 + trial % 12;
        let ranges: Vec<f64> = (0..40).map(|j| if j < step { 1.0 + 0.01 * j as f64 } else { 4.5 - 0.02 * j as f64 }).collect();
        let laser = PseudoLaser::new(ranges, 6.0).unwrap();
        let junctions = detect_junctions(&laser, params.junction_threshold);
        assert_eq!(junctions, vec![(step - 1, step)]);
        let out = augment_noise(&laser, &params, &mut rng);
        for (a, b) in junction_windows(40, &junctions, params.neighborhood_halfwidth) {
            assert_eq!(out.ranges[a], laser.ranges[a]);
            assert_eq!(out.ranges[b], laser.ranges[b]);
            for k in a + 1..b {
                let second = out.ranges[k + 1] - 2.0 * out.ranges[k] + out.ranges[k - 1];
                assert!(second.abs() < 1e-12, "trial {trial} k {k}: {second}");
            }
        }
    }
}
