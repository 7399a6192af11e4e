//! Generalized advantage estimation.

use crate::error::{Error, Result};

/// Backward GAE recursion over one trajectory segment.
///
/// `values` must hold one more entry than `rewards`: `values[t]` is
/// V(s_t) and the final entry bootstraps the cut-off tail. `dones[t]`
/// marks transitions that ended an episode, masking the bootstrap across
/// episode boundaries. Returns raw (unnormalized) advantages and the
/// corresponding returns `advantage + value`.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if n == 0 {
        return Err(Error::Train("empty batch in gae".into()));
    }
    if values.len() != n + 1 || dones.len() != n {
        return Err(Error::Shape(format!(
            "gae expects values.len() == rewards.len() + 1 and aligned dones (got {}, {}, {})",
            rewards.len(),
            values.len(),
            dones.len()
        )));
    }
    let mut advantages = vec![0.0; n];
    let mut tail = 0.0;
    for t in (0..n).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * not_done - values[t];
        tail = delta + gamma * lambda * not_done * tail;
        advantages[t] = tail;
    }
    let returns = advantages.iter().zip(values.iter()).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

/// In-place normalization to zero mean and unit variance (population σ).
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len() as f64;
    if n < 2.0 {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    for a in adv.iter_mut() {
        *a = (*a - mean) / std;
    }
}
