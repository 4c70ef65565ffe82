use mononav::env::Observation;
use mononav::nn::layers::{logistic_backward, logistic_inplace, tanh_backward, tanh_inplace, Conv1d, Deconv1d, Dense, LayoutBuilder, Lstm};
use mononav::nn::{ActionDist, Architecture, HiddenState, Policy, PolicyConfig, PolicyInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
pub const FLOOR: f64 = 1e-5;
pub const DRAWS: u64 = 100;

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FLOOR)
}

pub fn rand_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Checks every coordinate of `grad` against `f`, which returns the scalar
/// loss and an optional kink signature.
pub fn check(label: &str, x: &mut [f64], grad: &[f64], mut f: impl FnMut(&[f64]) -> (f64, Vec<bool>), coords: &[usize]) -> usize {
    let mut checked = 0;
    for &i in coords {
        let orig = x[i];
        x[i] = orig + H;
        let (fp, sp) = f(x);
        x[i] = orig - H;
        let (fm, sm) = f(x);
        x[i] = orig;
        if sp != sm {
            continue;
        }
        let num = (fp - fm) / (2.0 * H);
        let e = rel_err(grad[i], num);
        assert!(e < TOL, "{label}: coordinate {i}: analytic {} vs numeric {num} (rel {e:e})", grad[i]);
        checked += 1;
    }
    checked
}

pub fn all(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub fn dense_layer() {
    for draw in 0..DRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(draw);
        let (rows, inp, out) = (rng.random_range(1..4), rng.random_range(1..6), rng.random_range(1..6));
        let mut lb = LayoutBuilder::default();
        let layer = Dense::new(&mut lb, "d", inp, out);
        let p = rand_vec(&mut rng, lb.len, 1.0);
        let x = rand_vec(&mut rng, rows * inp, 1.0);
        let w = rand_vec(&mut rng, rows * out, 1.0);
        let loss = |p: &[f64], x: &[f64]| layer.forward(p, x, rows).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let mut g = vec![0.0; lb.len];
        let dx = layer.backward(&p, &x, &w, rows, &mut g, true).unwrap();
        check("dense params", &mut p.clone(), &g, |q| (loss(q, &x), vec![]), &all(lb.len));
        let mut xm = x.clone();
        check("dense input", &mut xm, &dx, |xx| (loss(&p, xx), vec![]), &all(x.len()));
    }
}

pub fn conv_layer() {
    for draw in 0..DRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + draw);
        let rows = rng.random_range(1..3);
        let len = rng.random_range(6..17);
        let (ic, oc) = (rng.random_range(1..4), rng.random_range(1..4));
        let k = [3, 5][rng.random_range(0..2)];
        let s = rng.random_range(1..3);
        let pad = k / 2;
        let mut lb = LayoutBuilder::default();
        let layer = Conv1d::new(&mut lb, "c", len, ic, oc, k, s, pad);
        let p = rand_vec(&mut rng, lb.len, 1.0);
        let x = rand_vec(&mut rng, rows * len * ic, 1.0);
        let w = rand_vec(&mut rng, rows * layer.out_len * oc, 1.0);
        let loss = |p: &[f64], x: &[f64]| layer.forward(p, x, rows).0.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let mut g = vec![0.0; lb.len];
        let (_, col) = layer.forward(&p, &x, rows);
        let dx = layer.backward(&p, &col, &w, rows, &mut g, true).unwrap();
        check("conv params", &mut p.clone(), &g, |q| (loss(q, &x), vec![]), &all(lb.len));
        check("conv input", &mut x.clone(), &dx, |xx| (loss(&p, xx), vec![]), &all(x.len()));
    }
}

pub fn deconv_layer() {
    for draw in 0..DRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + draw);
        let rows = rng.random_range(1..3);
        let len = rng.random_range(2..9);
        let (ic, oc) = (rng.random_range(1..4), rng.random_range(1..4));
        let k = [3, 5][rng.random_range(0..2)];
        let mut lb = LayoutBuilder::default();
        let layer = Deconv1d::new(&mut lb, "d", len, ic, oc, k, 2, k / 2, 1);
        assert_eq!(layer.out_len, 2 * len);
        let p = rand_vec(&mut rng, lb.len, 1.0);
        let x = rand_vec(&mut rng, rows * len * ic, 1.0);
        let w = rand_vec(&mut rng, rows * layer.out_len * oc, 1.0);
        let loss = |p: &[f64], x: &[f64]| layer.forward(p, x, rows).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let mut g = vec![0.0; lb.len];
        let dx = layer.backward(&p, &x, &w, rows, &mut g, true).unwrap();
        check("deconv params", &mut p.clone(), &g, |q| (loss(q, &x), vec![]), &all(lb.len));
        check("deconv input", &mut x.clone(), &dx, |xx| (loss(&p, xx), vec![]), &all(x.len()));
    }
}

pub fn deconv_is_adjoint_of_conv() {
    // <conv(x), y> == <x, deconv(y)> with shared weights and zero bias.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut lb = LayoutBuilder::default();
    let conv = Conv1d::new(&mut lb, "c", 16, 3, 2, 5, 2, 2);
    let mut lb2 = LayoutBuilder::default();
    let de = Deconv1d::new(&mut lb2, "d", 8, 2, 3, 5, 2, 2, 1);
    let wc = rand_vec(&mut rng, 2 * 5 * 3, 1.0);
    // conv weight (oc, tap·ic + c) → deconv weight (ic', tap·oc' + c') with ic'=2, oc'=3
    let mut pc = wc.clone();
    pc.extend([0.0; 2]);
    let mut pd = vec![0.0; lb2.len];
    for o in 0..2 {
        for tap in 0..5 {
            for c in 0..3 {
                pd[o * 15 + tap * 3 + c] = wc[o * 15 + tap * 3 + c];
            }
        }
    }
    let x = rand_vec(&mut rng, 16 * 3, 1.0);
    let y = rand_vec(&mut rng, 8 * 2, 1.0);
    let cx = conv.forward(&pc, &x, 1).0;
    let dy = de.forward(&pd, &y, 1);
    let lhs: f64 = cx.iter().zip(&y).map(|(a, b)| a * b).sum();
    let rhs: f64 = x.iter().zip(&dy).map(|(a, b)| a * b).sum();
    assert!((lhs - rhs).abs() < 1e-12);
}

pub fn lstm_cell() {
    for draw in 0..DRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + draw);
        let (steps, batch) = (rng.random_range(1..5), rng.random_range(1..3));
        let (inp, hid) = (rng.random_range(1..5), rng.random_range(1..5));
        let mut lb = LayoutBuilder::default();
        let l = Lstm::new(&mut lb, "l", inp, hid);
        let p = rand_vec(&mut rng, lb.len, 0.8);
        let x = rand_vec(&mut rng, steps * batch * inp, 1.0);
        let h0 = rand_vec(&mut rng, batch * hid, 0.5);
        let c0 = rand_vec(&mut rng, batch * hid, 0.5);
        let w = rand_vec(&mut rng, steps * batch * hid, 1.0);
        let loss = |p: &[f64], x: &[f64]| l.forward(p, x, steps, batch, &h0, &c0).outputs().iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let cache = l.forward(&p, &x, steps, batch, &h0, &c0);
        let mut g = vec![0.0; lb.len];
        let dx = l.backward(&p, &x, &cache, &w, &mut g, true).unwrap();
        check("lstm params", &mut p.clone(), &g, |q| (loss(q, &x), vec![]), &all(lb.len));
        check("lstm input", &mut x.clone(), &dx, |xx| (loss(&p, xx), vec![]), &all(x.len()));
    }
}

pub fn elementwise_ops() {
    for draw in 0..DRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + draw);
        let n = rng.random_range(1..10);
        let x = rand_vec(&mut rng, n, 3.0);
        let w = rand_vec(&mut rng, n, 1.0);
        let m = rand_vec(&mut rng, n, 2.0);
        let f_log = |x: &[f64]| {
            let mut y = x.to_vec();
            logistic_inplace(&mut y);
            y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
        };
        let f_tanh = |x: &[f64]| {
            let mut y = x.to_vec();
            tanh_inplace(&mut y);
            y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
        };
        let f_mul = |x: &[f64]| x.iter().zip(&m).zip(&w).map(|((a, b), c)| a * b * c).sum::<f64>();
        let mut y = x.clone();
        logistic_inplace(&mut y);
        let mut g = w.clone();
        logistic_backward(&y, &mut g);
        check("logistic", &mut x.clone(), &g, |v| (f_log(v), vec![]), &all(n));
        let mut y = x.clone();
        tanh_inplace(&mut y);
        let mut g = w.clone();
        tanh_backward(&y, &mut g);
        check("tanh", &mut x.clone(), &g, |v| (f_tanh(v), vec![]), &all(n));
        let g: Vec<f64> = m.iter().zip(&w).map(|(a, b)| a * b).collect();
        check("product mask", &mut x.clone(), &g, |v| (f_mul(v), vec![]), &all(n));
    }
}

pub fn toy_cfg(arch: Architecture) -> PolicyConfig {
    PolicyConfig { architecture: arch, d_laser: 16, conv_channels: 4, feg_channels: 4, dense: 8, merge: 8, hidden: 6, ..PolicyConfig::default() }
}

pub fn random_obs(rng: &mut ChaCha8Rng, d: usize) -> Observation {
    let mut laser = || (0..d).map(|_| rng.random_range(0.1..6.0)).collect::<Vec<f64>>();
    let lasers = [laser(), laser(), laser()];
    let mut pair = |a: f64, b: f64| [rng.random_range(0.0..a), rng.random_range(-b..b)];
    Observation { lasers, goals: [pair(6.0, 3.0), pair(6.0, 3.0), pair(6.0, 3.0)], velocities: [pair(1.0, 1.0), pair(1.0, 1.0), pair(1.0, 1.0)] }
}

/// Log-probability of fixed pre-squash actions plus a weighted value sum,
/// through the full policy over a short sequence.
pub fn full_policy_log_prob_and_value() {
    let mut total = 0;
    for draw in 0..DRAWS {
        let arch = Architecture::ALL[(draw % 3) as usize];
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + draw);
        let pol = Policy::new(toy_cfg(arch)).unwrap();
        let mut p = pol.init_params(draw);
        // move off the init so every slot (log-std, biases) is generic
        for v in p.iter_mut() {
            *v += rng.random_range(-0.05..0.05);
        }
        let (steps, batch) = (3, 2);
        let obs: Vec<Observation> = (0..steps * batch).map(|_| random_obs(&mut rng, 16)).collect();
        let input = PolicyInput::from_observations(&obs, pol.config());
        let ss = pol.config().state_size();
        let h0 = HiddenState { h: rand_vec(&mut rng, batch * ss, 0.3), c: rand_vec(&mut rng, batch * ss, 0.3) };
        let us: Vec<[f64; 2]> = (0..steps * batch).map(|_| [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)]).collect();
        let wv = rand_vec(&mut rng, steps * batch, 1.0);
        let loss = |q: &[f64]| {
            let c = pol.forward(q, &input, steps, batch, &h0).unwrap();
            let mut l = 0.0;
            for r in 0..steps * batch {
                l += pol.dist(q, &c, r).log_prob(us[r]) + wv[r] * c.values[r];
            }
            (l, c.relu_pattern())
        };
        let cache = pol.forward(&p, &input, steps, batch, &h0).unwrap();
        let ls = pol.log_std(&p);
        let mut dmean = vec![0.0; 2 * steps * batch];
        let mut dls = [0.0; 2];
        for r in 0..steps * batch {
            for i in 0..2 {
                let sd = ls[i].exp();
                let z = (us[r][i] - cache.means[2 * r + i]) / sd;
                dmean[2 * r + i] = z / sd;
                dls[i] += z * z - 1.0;
            }
        }
        let mut g = pol.backward(&p, &cache, &dmean, &wv);
        let slot = pol.log_std_slot();
        g[slot.offset] += dls[0];
        g[slot.offset + 1] += dls[1];
        // every parameter for the first draw of each architecture, a sample afterwards
        let coords: Vec<usize> = if draw < 3 { all(p.len()) } else { (0..150).map(|_| rng.random_range(0..p.len())).collect() };
        total += check(&format!("policy {arch}"), &mut p, &g, loss, &coords);
    }
    assert!(total > 10_000, "only {total} coordinates checked");
}

pub fn feg_weighted_sum_gradient() {
    for draw in 0..DRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(6000 + draw);
        let pol = Policy::new(toy_cfg(Architecture::LstmFeg)).unwrap();
        let mut p = pol.init_params(draw);
        let obs: Vec<Observation> = (0..2).map(|_| random_obs(&mut rng, 16)).collect();
        let input = PolicyInput::from_observations(&obs, pol.config());
        let g = pol.feg_sum_gradient(&p, &input).unwrap();
        let range = pol.feg_param_range().unwrap();
        let coords: Vec<usize> = if draw == 0 { range.clone().collect() } else { (0..60).map(|_| rng.random_range(range.clone())).collect() };
        let pol2 = pol.clone();
        check(
            "feg",
            &mut p,
            &g,
            |q| {
                let (mask, w) = pol2.feg_forward(q, &input).unwrap();
                assert!(mask.iter().all(|m| *m > 0.0 && *m < 1.0));
                let kinks = pol2.forward(q, &input, 1, 2, &HiddenState::zeros(12)).unwrap().relu_pattern();
                (w.iter().sum(), kinks)
            },
            &coords,
        );
    }
}

pub fn value_head_independent_of_actor_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let pol = Policy::new(toy_cfg(Architecture::LstmFeg)).unwrap();
    let p = pol.init_params(3);
    let obs = random_obs(&mut rng, 16);
    let input = PolicyInput::from_observations([&obs], pol.config());
    let h0 = HiddenState::zeros(6);
    let base = pol.forward(&p, &input, 1, 1, &h0).unwrap();
    let mut q = p.clone();
    for s in pol.actor_slots() {
        s.of_mut(&mut q).iter_mut().for_each(|v| *v += 0.3);
    }
    let out = pol.forward(&q, &input, 1, 1, &h0).unwrap();
    assert_eq!(out.values, base.values);
    assert_ne!(out.means, base.means);
    let mut q = p.clone();
    for s in pol.critic_slots() {
        s.of_mut(&mut q).iter_mut().for_each(|v| *v -= 0.3);
    }
    let out = pol.forward(&q, &input, 1, 1, &h0).unwrap();
    assert_eq!(out.means, base.means);
    assert_ne!(out.values, base.values);
}

pub fn shared_weights_identical_agents() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pol = Policy::new(toy_cfg(Architecture::LstmFeg)).unwrap();
    let p = pol.init_params(1);
    let obs = random_obs(&mut rng, 16);
    let input = PolicyInput::from_observations([&obs, &obs, &obs], pol.config());
    let out = pol.forward(&p, &input, 1, 3, &HiddenState::zeros(18)).unwrap();
    assert_eq!(out.mean(0), out.mean(1));
    assert_eq!(out.mean(1), out.mean(2));
    assert_eq!(out.hidden.h[0..6], out.hidden.h[6..12]);
    // and a pure function of its inputs
    let again = pol.forward(&p, &input, 1, 3, &HiddenState::zeros(18)).unwrap();
    assert_eq!(again.means, out.means);
    assert_eq!(again.values, out.values);
    let _ = ActionDist { mean: out.mean(0), log_std: pol.log_std(&p) }.mode();
}
