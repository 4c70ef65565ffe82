use rand::seq::SliceRandom;
use rand::Rng;

use super::buffer::{Chunk, RolloutBuffer};
use super::{TrainError, TrainerConfig};
use crate::nn::{clip_grad_norm, ActionDist, Adam, HiddenState, Policy, PolicyInput};

/// Loss terms averaged over the last epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub kl: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

/// Inputs for a set of chunks, padded to the longest, time-major.
pub struct ChunkBatch {
    pub input: PolicyInput,
    pub h0: HiddenState,
    pub steps: usize,
    pub batch: usize,
    /// `(episode, step)` per row, `None` for padding.
    pub rows: Vec<Option<(usize, usize)>>,
}

pub fn assemble_chunks(policy: &Policy, buffer: &RolloutBuffer, chunks: &[Chunk]) -> ChunkBatch {
    let cfg = policy.config();
    let steps = chunks.iter().map(|c| c.len).max().unwrap_or(0);
    let batch = chunks.len();
    let ss = cfg.state_size();
    let mut h0 = HiddenState { h: Vec::with_capacity(batch * ss), c: Vec::with_capacity(batch * ss) };
    for c in chunks {
        let s = &buffer.episodes[c.episode].chunk_states[c.state];
        h0.h.extend_from_slice(&s.h);
        h0.c.extend_from_slice(&s.c);
    }
    let mut input = PolicyInput::with_capacity(steps * batch, cfg.d_laser);
    let mut rows = Vec::with_capacity(steps * batch);
    for t in 0..steps {
        for c in chunks {
            if t < c.len {
                let tr = &buffer.episodes[c.episode].transitions[c.start + t];
                input.push(&tr.observation, cfg);
                rows.push(Some((c.episode, c.start + t)));
            } else {
                input.push_zero(cfg.d_laser);
                rows.push(None);
            }
        }
    }
    ChunkBatch { input, h0, steps, batch, rows }
}

/// Loss and its gradient for one minibatch of chunks.
fn minibatch_grad(
    policy: &Policy,
    params: &[f64],
    buffer: &RolloutBuffer,
    chunks: &[Chunk],
    cfg: &TrainerConfig,
) -> Result<(f64, Vec<f64>, UpdateStats), TrainError> {
    let mb = assemble_chunks(policy, buffer, chunks);
    let cache = policy.forward(params, &mb.input, mb.steps, mb.batch, &mb.h0)?;
    let n_valid = mb.rows.iter().filter(|r| r.is_some()).count().max(1) as f64;
    let log_std = policy.log_std(params);
    let std = [log_std[0].exp(), log_std[1].exp()];
    let old_ls = buffer.old_log_std;
    let mut dmean = vec![0.0; 2 * mb.rows.len()];
    let mut dvalue = vec![0.0; mb.rows.len()];
    let mut dls = [0.0; 2];
    let mut st = UpdateStats::default();
    let mut loss = 0.0;
    for (r, slot) in mb.rows.iter().enumerate() {
        let Some((e, s)) = *slot else { continue };
        let tr = &buffer.episodes[e].transitions[s];
        let new = ActionDist { mean: cache.mean(r), log_std };
        let old = ActionDist { mean: tr.old_mean, log_std: old_ls };
        let lp = new.log_prob(tr.u);
        let ratio = (lp - tr.log_prob).exp();
        let a = tr.advantage;
        // clipped surrogate: gradient flows only through the unclipped branch
        let (surr, dlp) = if cfg.clip_epsilon > 0.0 {
            let clipped = ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
            if ratio * a <= clipped * a {
                (ratio * a, ratio * a)
            } else {
                st.clip_fraction += 1.0;
                (clipped * a, 0.0)
            }
        } else {
            (ratio * a, ratio * a)
        };
        let kl = old.kl(&new);
        let v = cache.values[r];
        let verr = v - tr.ret;
        let ent = new.entropy();
        loss += -surr + cfg.kl_penalty_coeff * kl + cfg.value_coeff * verr * verr - cfg.entropy_coeff * ent;
        st.policy_loss += -surr;
        st.value_loss += verr * verr;
        st.kl += kl;
        st.entropy += ent;
        for i in 0..2 {
            let mu = new.mean[i];
            let z = (tr.u[i] - mu) / std[i];
            // ∂lp/∂μ = z/σ, ∂lp/∂logσ = z² − 1
            let dkl_dmu = (mu - tr.old_mean[i]) / (std[i] * std[i]);
            let s_old = old_ls[i].exp();
            let dkl_dls = 1.0 - (s_old * s_old + (tr.old_mean[i] - mu).powi(2)) / (std[i] * std[i]);
            dmean[2 * r + i] = (-dlp * z / std[i] + cfg.kl_penalty_coeff * dkl_dmu) / n_valid;
            dls[i] += (-dlp * (z * z - 1.0) + cfg.kl_penalty_coeff * dkl_dls - cfg.entropy_coeff) / n_valid;
        }
        dvalue[r] = 2.0 * cfg.value_coeff * verr / n_valid;
    }
    let mut grad = policy.backward(params, &cache, &dmean, &dvalue);
    let slot = policy.log_std_slot();
    grad[slot.offset] += dls[0];
    grad[slot.offset + 1] += dls[1];
    for x in [&mut st.policy_loss, &mut st.value_loss, &mut st.kl, &mut st.entropy, &mut st.clip_fraction] {
        *x /= n_valid;
    }
    Ok((loss / n_valid, grad, st))
}

/// PPO epochs over shuffled unroll chunks. On a non-finite loss or gradient
/// the parameters and optimizer state are restored and an error returned.
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &Policy,
    params: &mut Vec<f64>,
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    cfg: &TrainerConfig,
    rng: &mut R,
) -> Result<UpdateStats, TrainError> {
    let snapshot = (params.clone(), adam.clone());
    let result = ppo_epochs(policy, params, adam, buffer, cfg, rng);
    if result.is_err() {
        *params = snapshot.0;
        *adam = snapshot.1;
    }
    result
}

fn ppo_epochs<R: Rng + ?Sized>(
    policy: &Policy,
    params: &mut [f64],
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    cfg: &TrainerConfig,
    rng: &mut R,
) -> Result<UpdateStats, TrainError> {
    let mut chunks = buffer.chunks();
    if chunks.is_empty() {
        return Ok(UpdateStats::default());
    }
    adam.lr = cfg.learning_rate;
    let n_mb = cfg.minibatches.clamp(1, chunks.len());
    let mut last = UpdateStats::default();
    for epoch in 0..cfg.epochs_per_batch {
        chunks.shuffle(rng);
        let mut acc = UpdateStats::default();
        let per = chunks.len().div_ceil(n_mb);
        let mut count = 0.0;
        for group in chunks.chunks(per) {
            let (loss, mut grad, st) = minibatch_grad(policy, params, buffer, group, cfg)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(TrainError::NonFiniteLoss { epoch, loss });
            }
            let norm = clip_grad_norm(&mut grad, cfg.max_grad_norm);
            adam.step(params, &grad);
            acc.policy_loss += st.policy_loss;
            acc.value_loss += st.value_loss;
            acc.kl += st.kl;
            acc.entropy += st.entropy;
            acc.clip_fraction += st.clip_fraction;
            acc.grad_norm += norm;
            count += 1.0;
        }
        last = UpdateStats {
            policy_loss: acc.policy_loss / count,
            value_loss: acc.value_loss / count,
            kl: acc.kl / count,
            entropy: acc.entropy / count,
            clip_fraction: acc.clip_fraction / count,
            grad_norm: acc.grad_norm / count,
        };
    }
    Ok(last)
}

/// Mean `KL(old ‖ current)` over the buffer under `params`.
pub fn buffer_kl(policy: &Policy, params: &[f64], buffer: &RolloutBuffer) -> Result<f64, TrainError> {
    let chunks = buffer.chunks();
    if chunks.is_empty() {
        return Ok(0.0);
    }
    let mb = assemble_chunks(policy, buffer, &chunks);
    let cache = policy.forward(params, &mb.input, mb.steps, mb.batch, &mb.h0)?;
    let log_std = policy.log_std(params);
    let mut total = 0.0;
    let mut n = 0.0;
    for (r, slot) in mb.rows.iter().enumerate() {
        if let Some((e, s)) = *slot {
            let tr = &buffer.episodes[e].transitions[s];
            let old = ActionDist { mean: tr.old_mean, log_std: buffer.old_log_std };
            total += old.kl(&ActionDist { mean: cache.mean(r), log_std });
            n += 1.0;
        }
    }
    Ok(total / n)
}

/// Value-only loss on the buffer (mean squared error against stored returns).
pub fn buffer_value_loss(policy: &Policy, params: &[f64], buffer: &RolloutBuffer) -> Result<f64, TrainError> {
    let chunks = buffer.chunks();
    let mb = assemble_chunks(policy, buffer, &chunks);
    let cache = policy.forward(params, &mb.input, mb.steps, mb.batch, &mb.h0)?;
    let mut total = 0.0;
    let mut n = 0.0f64;
    for (r, slot) in mb.rows.iter().enumerate() {
        if let Some((e, s)) = *slot {
            total += (cache.values[r] - buffer.episodes[e].transitions[s].ret).powi(2);
            n += 1.0;
        }
    }
    Ok(total / n.max(1.0))
}
