//! Clipped-surrogate PPO loss, analytic gradients, Adam.
//!
//! Actions are tanh-squashed samples from a diagonal Gaussian in pre-squash
//! space. Because the squash log-density correction depends only on the
//! stored sample (not on the parameters), it cancels in the importance
//! ratio, so log-probabilities are carried in the Gaussian space throughout.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::net::{ActorCritic, LOG_STD_MAX, LOG_STD_MIN};

const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Loss coefficients the gradient path needs.
#[derive(Debug, Clone, Copy)]
pub struct PpoHypers {
    pub clip_ratio: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

/// One rollout batch, flattened across environments.
#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub obs: Vec<Vec<f64>>,
    /// Pre-squash action samples z (a = tanh(z)).
    pub actions: Vec<Vec<f64>>,
    /// Gaussian log-density of z under the behavior policy.
    pub logp_old: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.obs.len();
        if n == 0 {
            return Err(Error::Train("empty batch".into()));
        }
        if [self.actions.len(), self.logp_old.len(), self.advantages.len(), self.returns.len()]
            .iter()
            .any(|l| *l != n)
        {
            return Err(Error::Shape("batch field lengths disagree".into()));
        }
        Ok(())
    }
}

/// Gaussian log-density of `z` under mean `mu` and the network's log-std.
pub fn gaussian_logp(z: &[f64], mu: &[f64], log_std: &[f64]) -> f64 {
    let mut lp = 0.0;
    for j in 0..z.len() {
        let ls = log_std[j].clamp(LOG_STD_MIN, LOG_STD_MAX);
        let inv_std = (-ls).exp();
        let u = (z[j] - mu[j]) * inv_std;
        lp += -0.5 * u * u - ls - 0.5 * LN_2PI;
    }
    lp
}

/// Loss values averaged over the evaluated samples.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Evaluate the PPO objective and its analytic gradient over the samples in
/// `idx`. The gradient vector is aligned with [`ActorCritic::flat_params`].
pub fn loss_and_grads(
    ac: &ActorCritic,
    batch: &Batch,
    idx: &[usize],
    h: &PpoHypers,
) -> Result<(LossBreakdown, Vec<f64>)> {
    batch.validate()?;
    if idx.is_empty() {
        return Err(Error::Train("empty minibatch".into()));
    }
    let act_dim = ac.act_dim();
    let inv_n = 1.0 / idx.len() as f64;
    let mut policy_grads = ac.policy.zero_grads();
    let mut value_grads = ac.value.zero_grads();
    let mut log_std_grads = vec![0.0; act_dim];
    let mut out = LossBreakdown::default();

    for &i in idx {
        let obs = &batch.obs[i];
        let z = &batch.actions[i];
        let adv = batch.advantages[i];
        let ret = batch.returns[i];

        let x = ac.scale_obs(obs)?;
        let pcache = ac.policy.forward_cache(&x)?;
        let vcache = ac.value.forward_cache(&x)?;
        let mu = pcache.acts.last().unwrap().clone();
        let v = vcache.acts.last().unwrap()[0];

        let logp = gaussian_logp(z, &mu, &ac.log_std);
        let ratio = (logp - batch.logp_old[i]).exp();
        let clipped = ratio.clamp(1.0 - h.clip_ratio, 1.0 + h.clip_ratio);
        let surr1 = ratio * adv;
        let surr2 = clipped * adv;
        let policy_loss = -surr1.min(surr2);

        let vdiff = v - ret;
        let value_loss = 0.5 * vdiff * vdiff;

        // entropy of the underlying Gaussian (closed form)
        let entropy: f64 = ac
            .log_std
            .iter()
            .map(|ls| ls.clamp(LOG_STD_MIN, LOG_STD_MAX) + 0.5 * (LN_2PI + 1.0))
            .sum();

        out.policy += policy_loss * inv_n;
        out.value += value_loss * inv_n;
        out.entropy += entropy * inv_n;
        out.approx_kl += (batch.logp_old[i] - logp) * inv_n;
        if (ratio - 1.0).abs() > h.clip_ratio {
            out.clip_fraction += inv_n;
        }

        // d policy_loss / d logp: only the unclipped branch carries gradient
        let dl_dlogp = if surr1 <= surr2 { -ratio * adv } else { 0.0 };

        let mut grad_mu = vec![0.0; act_dim];
        for j in 0..act_dim {
            let ls = ac.log_std[j].clamp(LOG_STD_MIN, LOG_STD_MAX);
            let inv_var = (-2.0 * ls).exp();
            let diff = z[j] - mu[j];
            // d logp / d mu_j = (z - mu) / σ²  (note sign: grows logp toward z)
            grad_mu[j] = dl_dlogp * diff * inv_var * inv_n;
            if ac.log_std[j] > LOG_STD_MIN && ac.log_std[j] < LOG_STD_MAX {
                let dlogp_dls = diff * diff * inv_var - 1.0;
                log_std_grads[j] += (dl_dlogp * dlogp_dls - h.entropy_coef) * inv_n;
            }
        }
        ac.policy.backward(&pcache, &grad_mu, &mut policy_grads);

        let dl_dv = h.value_coef * vdiff * inv_n;
        ac.value.backward(&vcache, &[dl_dv], &mut value_grads);
    }

    out.total = out.policy + h.value_coef * out.value - h.entropy_coef * out.entropy;
    let grads = ac.flatten_grads(&policy_grads, &log_std_grads, &value_grads);
    Ok((out, grads))
}

/// Scale gradients so their global L2 norm is at most `max_norm`;
/// returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; param_count], v: vec![0.0; param_count], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for k in 0..params.len() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * grads[k];
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * grads[k] * grads[k];
            let mhat = self.m[k] / b1t;
            let vhat = self.v[k] / b2t;
            params[k] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

/// Statistics of one full update pass.
#[derive(Debug, Clone, Copy, Default)]
pub struct UpdateStats {
    pub loss: LossBreakdown,
    pub grad_norm: f64,
    pub minibatches: usize,
}

/// Run `epochs` passes of shuffled minibatch gradient steps on the batch.
/// Advantages must already be normalized by the caller.
#[allow(clippy::too_many_arguments)]
pub fn ppo_update(
    ac: &mut ActorCritic,
    batch: &Batch,
    epochs: usize,
    minibatch: usize,
    h: &PpoHypers,
    max_grad_norm: f64,
    adam: &mut Adam,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    batch.validate()?;
    let n = batch.len();
    let mb = minibatch.min(n).max(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = UpdateStats::default();
    for _ in 0..epochs {
        order.shuffle(rng);
        for chunk in order.chunks(mb) {
            let (loss, mut grads) = loss_and_grads(ac, batch, chunk, h)?;
            if !loss.total.is_finite() {
                return Err(Error::Train(format!(
                    "non-finite loss (policy={}, value={}, entropy={}); update aborted",
                    loss.policy, loss.value, loss.entropy
                )));
            }
            stats.grad_norm += clip_global_norm(&mut grads, max_grad_norm);
            let mut params = ac.flat_params();
            adam.step(&mut params, &grads);
            ac.set_flat_params(&params)?;
            stats.loss = loss;
            stats.minibatches += 1;
        }
    }
    if stats.minibatches > 0 {
        stats.grad_norm /= stats.minibatches as f64;
    }
    if !ac.all_finite() {
        return Err(Error::Train("parameters became non-finite".into()));
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Batch sampled under the network's own policy, so ratio == 1 at the
    /// first evaluation.
    fn on_policy_batch(ac: &ActorCritic, n: usize, seed: u64) -> Batch {
        let mut rng = seed::rng(seed);
        let mut batch = Batch::default();
        let stds = ac.stds();
        for _ in 0..n {
            let obs: Vec<f64> = (0..ac.obs_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mu = ac.policy_pre_squash(&obs).unwrap();
            let z: Vec<f64> = (0..ac.act_dim())
                .map(|j| mu[j] + stds[j] * rng.sample::<f64, _>(StandardNormal))
                .collect();
            batch.logp_old.push(gaussian_logp(&z, &mu, &ac.log_std));
            batch.obs.push(obs);
            batch.actions.push(z);
            batch.advantages.push(rng.random_range(-1.0..1.0));
            batch.returns.push(rng.random_range(-2.0..0.0));
        }
        batch
    }

    #[test]
    fn unit_ratio_makes_clipped_and_unclipped_agree() {
        let mut rng = seed::rng(4);
        let ac = ActorCritic::new(7, 4, &[16], 1, -0.5, &mut rng);
        let batch = on_policy_batch(&ac, 32, 5);
        let idx: Vec<usize> = (0..batch.len()).collect();
        let tight = PpoHypers { clip_ratio: 1e-9, value_coef: 0.0, entropy_coef: 0.0 };
        let loose = PpoHypers { clip_ratio: 0.2, value_coef: 0.0, entropy_coef: 0.0 };
        let (l_tight, _) = loss_and_grads(&ac, &batch, &idx, &tight).unwrap();
        let (l_loose, _) = loss_and_grads(&ac, &batch, &idx, &loose).unwrap();
        assert!((l_tight.policy - l_loose.policy).abs() < 1e-12);
        assert!(l_tight.clip_fraction.abs() < 1e-12);
    }

    /// Linear policy on a two-state bandit: the unclipped PPO gradient at
    /// ratio 1 must equal the closed-form vanilla policy gradient
    ///   dL/dW[j][k] = -mean_i( A_i · (z_ij - mu_ij)/σ_j² · x_ik ).
    #[test]
    fn bandit_gradient_matches_vanilla_policy_gradient() {
        let mut rng = seed::rng(21);
        // no hidden layers: policy is W·x + b
        let ac = ActorCritic::new(2, 4, &[], 1, -0.4, &mut rng);
        let mut batch = Batch::default();
        let stds = ac.stds();
        let mut draw = seed::rng(22);
        for i in 0..64 {
            let obs = if i % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
            let mu = ac.policy_pre_squash(&obs).unwrap();
            let z: Vec<f64> = (0..4)
                .map(|j| mu[j] + stds[j] * draw.sample::<f64, _>(StandardNormal))
                .collect();
            // bandit reward: closeness of the squashed action to a per-state target
            let target = if i % 2 == 0 { 0.5 } else { -0.5 };
            let reward: f64 = -z.iter().map(|zj| (zj.tanh() - target).abs()).sum::<f64>();
            batch.logp_old.push(gaussian_logp(&z, &mu, &ac.log_std));
            batch.obs.push(obs);
            batch.actions.push(z);
            batch.advantages.push(reward); // V ≡ 0, γ = 0
            batch.returns.push(reward);
        }
        let idx: Vec<usize> = (0..batch.len()).collect();
        // clip disabled via a huge ratio bound; single gradient evaluation
        let h = PpoHypers { clip_ratio: 1e9, value_coef: 0.0, entropy_coef: 0.0 };
        let (_, grads) = loss_and_grads(&ac, &batch, &idx, &h).unwrap();

        let n = batch.len() as f64;
        let n_in = 2;
        for j in 0..4 {
            let ls = ac.log_std[j];
            let inv_var = (-2.0 * ls).exp();
            for k in 0..n_in {
                let mut want = 0.0;
                for i in 0..batch.len() {
                    let mu = ac.policy_pre_squash(&batch.obs[i]).unwrap();
                    let score = (batch.actions[i][j] - mu[j]) * inv_var;
                    want += -batch.advantages[i] * score * batch.obs[i][k];
                }
                want /= n;
                let got = grads[j * n_in + k]; // first layer, row-major
                assert!(
                    (got - want).abs() <= 1e-10 * want.abs().max(1.0),
                    "W[{j}][{k}]: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences_spot_check() {
        let mut rng = seed::rng(33);
        let mut ac = ActorCritic::new(7, 4, &[8], 1, -0.5, &mut rng);
        let batch = on_policy_batch(&ac, 16, 34);
        let idx: Vec<usize> = (0..batch.len()).collect();
        let h = PpoHypers { clip_ratio: 0.2, value_coef: 0.5, entropy_coef: 0.01 };
        let (_, grads) = loss_and_grads(&ac, &batch, &idx, &h).unwrap();
        let params = ac.flat_params();
        let step = 1e-5;
        // spot-check a spread of parameters; the acceptance suite sweeps all
        let stride = (params.len() / 23).max(1);
        for p in (0..params.len()).step_by(stride) {
            let mut plus = params.clone();
            plus[p] += step;
            ac.set_flat_params(&plus).unwrap();
            let (lp, _) = loss_and_grads(&ac, &batch, &idx, &h).unwrap();
            let mut minus = params.clone();
            minus[p] -= step;
            ac.set_flat_params(&minus).unwrap();
            let (lm, _) = loss_and_grads(&ac, &batch, &idx, &h).unwrap();
            let fd = (lp.total - lm.total) / (2.0 * step);
            let scale = grads[p].abs().max(fd.abs());
            assert!(
                (grads[p] - fd).abs() <= 1e-4 * scale.max(1e-8) + 1e-10,
                "param {p}: analytic {}, fd {fd}",
                grads[p]
            );
        }
        ac.set_flat_params(&params).unwrap();
    }

    #[test]
    fn global_norm_clipping() {
        let mut g = vec![3.0, 4.0];
        let norm = clip_global_norm(&mut g, 1.0);
        assert!((norm - 5.0).abs() < 1e-12);
        assert!((g[0] - 0.6).abs() < 1e-12 && (g[1] - 0.8).abs() < 1e-12);
        let mut small = vec![0.1, 0.1];
        clip_global_norm(&mut small, 1.0);
        assert_eq!(small, vec![0.1, 0.1]);
    }

    #[test]
    fn adam_descends_a_quadratic() {
        let mut adam = Adam::new(2, 0.1);
        let mut p = vec![5.0, -3.0];
        for _ in 0..500 {
            let g = vec![2.0 * p[0], 2.0 * p[1]];
            adam.step(&mut p, &g);
        }
        assert!(p[0].abs() < 1e-3 && p[1].abs() < 1e-3);
    }

    #[test]
    fn non_finite_loss_aborts_update() {
        let mut rng = seed::rng(8);
        let mut ac = ActorCritic::new(7, 4, &[8], 1, -0.5, &mut rng);
        let mut batch = on_policy_batch(&ac, 8, 9);
        batch.returns[0] = f64::INFINITY;
        let h = PpoHypers { clip_ratio: 0.2, value_coef: 0.5, entropy_coef: 0.0 };
        let mut adam = Adam::new(ac.param_count(), 1e-3);
        let mut rng2 = seed::rng(10);
        assert!(ppo_update(&mut ac, &batch, 1, 8, &h, 0.5, &mut adam, &mut rng2).is_err());
    }
}
