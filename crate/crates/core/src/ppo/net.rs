//! Small feedforward policy and value networks with hand-written
//! backpropagation, plus the versioned binary checkpoint format.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Bounds on the learned log standard deviation.
pub const LOG_STD_MIN: f64 = -6.0;
pub const LOG_STD_MAX: f64 = 2.0;

const CHECKPOINT_MAGIC: &[u8; 8] = b"ATFGCKPT";
const CHECKPOINT_VERSION: u32 = 1;

/// Fully connected network: tanh on every hidden layer, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    /// Row-major (out × in) weight matrix per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Per-layer activations kept for the backward pass. `acts[0]` is the input
/// and `acts[l + 1]` the (post-tanh) output of layer l.
#[derive(Debug, Clone)]
pub struct MlpCache {
    pub acts: Vec<Vec<f64>>,
}

/// Gradient buffers mirroring the parameter shapes.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Mlp {
    /// Xavier-uniform init; the output layer is scaled by `head_scale`.
    pub fn new(sizes: &[usize], head_scale: f64, rng: &mut ChaCha8Rng) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let scale = if l == sizes.len() - 2 { head_scale } else { 1.0 };
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit) * scale)
                .collect();
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Mlp { sizes: sizes.to_vec(), weights, biases }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cache(input)?.acts.pop().unwrap())
    }

    pub fn forward_cache(&self, input: &[f64]) -> Result<MlpCache> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "mlp input length {} != {}",
                input.len(),
                self.input_dim()
            )));
        }
        let n_layers = self.weights.len();
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(input.to_vec());
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let x = &acts[l];
            let mut y = vec![0.0; n_out];
            for o in 0..n_out {
                let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                let mut s = self.biases[l][o];
                for i in 0..n_in {
                    s += row[i] * x[i];
                }
                y[o] = if l + 1 < n_layers { s.tanh() } else { s };
            }
            acts.push(y);
        }
        Ok(MlpCache { acts })
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Accumulate parameter gradients for one sample and return the gradient
    /// with respect to the input. `grad_out` is dL/d(output).
    pub fn backward(&self, cache: &MlpCache, grad_out: &[f64], grads: &mut MlpGrads) -> Vec<f64> {
        let n_layers = self.weights.len();
        let mut grad = grad_out.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            // tanh derivative on hidden layers: 1 - y²
            if l + 1 < n_layers {
                let y = &cache.acts[l + 1];
                for o in 0..n_out {
                    grad[o] *= 1.0 - y[o] * y[o];
                }
            }
            let x = &cache.acts[l];
            let mut grad_in = vec![0.0; n_in];
            for o in 0..n_out {
                let g = grad[o];
                grads.biases[l][o] += g;
                let wrow = &self.weights[l][o * n_in..(o + 1) * n_in];
                let grow = &mut grads.weights[l][o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += g * x[i];
                    grad_in[i] += g * wrow[i];
                }
            }
            grad = grad_in;
        }
        grad
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    fn write_flat(&self, out: &mut Vec<f64>) {
        for l in 0..self.weights.len() {
            out.extend_from_slice(&self.weights[l]);
            out.extend_from_slice(&self.biases[l]);
        }
    }

    fn read_flat(&mut self, data: &[f64], pos: &mut usize) {
        for l in 0..self.weights.len() {
            let nw = self.weights[l].len();
            self.weights[l].copy_from_slice(&data[*pos..*pos + nw]);
            *pos += nw;
            let nb = self.biases[l].len();
            self.biases[l].copy_from_slice(&data[*pos..*pos + nb]);
            *pos += nb;
        }
    }

    fn write_flat_grads(grads: &MlpGrads, out: &mut Vec<f64>) {
        for l in 0..grads.weights.len() {
            out.extend_from_slice(&grads.weights[l]);
            out.extend_from_slice(&grads.biases[l]);
        }
    }
}

/// Policy network (pre-squash action mean + learned log-std) and a separate
/// value network sharing no parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub policy: Mlp,
    pub log_std: Vec<f64>,
    pub value: Mlp,
    /// History depth the observation layout assumes; stored for checkpoints.
    pub memory: usize,
    /// Per-input divisors applied before both networks. Raw observations mix
    /// rad/s errors (~5) with rotor speeds (~1000); without scaling the tanh
    /// layers saturate. Stored in the checkpoint.
    pub obs_scale: Vec<f64>,
}

impl ActorCritic {
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        memory: usize,
        log_std_init: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut policy_sizes = vec![obs_dim];
        policy_sizes.extend_from_slice(hidden);
        policy_sizes.push(act_dim);
        let mut value_sizes = vec![obs_dim];
        value_sizes.extend_from_slice(hidden);
        value_sizes.push(1);
        ActorCritic {
            policy: Mlp::new(&policy_sizes, 0.01, rng),
            log_std: vec![log_std_init; act_dim],
            value: Mlp::new(&value_sizes, 1.0, rng),
            memory,
            obs_scale: vec![1.0; obs_dim],
        }
    }

    /// Observation divided by the per-input scale.
    pub fn scale_obs(&self, obs: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.obs_scale.len() {
            return Err(Error::Shape(format!(
                "observation length {} != {}",
                obs.len(),
                self.obs_scale.len()
            )));
        }
        Ok(obs.iter().zip(self.obs_scale.iter()).map(|(o, s)| o / s).collect())
    }

    pub fn obs_dim(&self) -> usize {
        self.policy.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.policy.output_dim()
    }

    /// Deterministic head: tanh-squashed action mean and the state value.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let x = self.scale_obs(obs)?;
        let mean = self.policy.forward(&x)?.iter().map(|m| m.tanh()).collect();
        let value = self.value.forward(&x)?[0];
        Ok((mean, value))
    }

    /// Pre-squash mean; the trainer samples in this space.
    pub fn policy_pre_squash(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.policy.forward(&self.scale_obs(obs)?)
    }

    /// State value under the scaled observation.
    pub fn state_value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.value.forward(&self.scale_obs(obs)?)?[0])
    }

    pub fn stds(&self) -> Vec<f64> {
        self.log_std
            .iter()
            .map(|ls| ls.clamp(LOG_STD_MIN, LOG_STD_MAX).exp())
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.policy.param_count() + self.log_std.len() + self.value.param_count()
    }

    /// All parameters in checkpoint order: policy layers, log-std, value layers.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.policy.write_flat(&mut out);
        out.extend_from_slice(&self.log_std);
        self.value.write_flat(&mut out);
        out
    }

    pub fn set_flat_params(&mut self, data: &[f64]) -> Result<()> {
        if data.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "parameter vector length {} != {}",
                data.len(),
                self.param_count()
            )));
        }
        let mut pos = 0;
        self.policy.read_flat(data, &mut pos);
        let n = self.log_std.len();
        self.log_std.copy_from_slice(&data[pos..pos + n]);
        pos += n;
        self.value.read_flat(data, &mut pos);
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.flat_params().iter().all(|p| p.is_finite())
    }

    /// Flatten gradient buffers in the same order as [`Self::flat_params`].
    pub fn flatten_grads(
        &self,
        policy: &MlpGrads,
        log_std: &[f64],
        value: &MlpGrads,
    ) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        Mlp::write_flat_grads(policy, &mut out);
        out.extend_from_slice(log_std);
        Mlp::write_flat_grads(value, &mut out);
        out
    }

    /// Write the versioned checkpoint: header, layer shapes, then parameters
    /// as little-endian f64.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.memory as u32).to_le_bytes());
        for sizes in [&self.policy.sizes, &self.value.sizes] {
            buf.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
            for s in sizes {
                buf.extend_from_slice(&(*s as u32).to_le_bytes());
            }
        }
        for v in &self.obs_scale {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for p in self.flat_params() {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
            if *pos + n > bytes.len() {
                return Err(Error::Config("checkpoint truncated".into()));
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        if take(&mut pos, 8)? != CHECKPOINT_MAGIC {
            return Err(Error::Config("not an atfg checkpoint (bad magic)".into()));
        }
        let u32_at = |pos: &mut usize| -> Result<u32> {
            Ok(u32::from_le_bytes(take(pos, 4)?.try_into().unwrap()))
        };
        let version = u32_at(&mut pos)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!("unsupported checkpoint version {version}")));
        }
        let memory = u32_at(&mut pos)? as usize;
        let mut shapes = Vec::new();
        for _ in 0..2 {
            let n = u32_at(&mut pos)? as usize;
            if !(2..=16).contains(&n) {
                return Err(Error::Config(format!("implausible layer count {n}")));
            }
            let mut sizes = Vec::with_capacity(n);
            for _ in 0..n {
                sizes.push(u32_at(&mut pos)? as usize);
            }
            shapes.push(sizes);
        }
        let mut rng = crate::seed::rng(0);
        let obs_dim = shapes[0][0];
        let mut ac = ActorCritic {
            policy: Mlp::new(&shapes[0], 0.0, &mut rng),
            log_std: vec![0.0; *shapes[0].last().unwrap()],
            value: Mlp::new(&shapes[1], 0.0, &mut rng),
            memory,
            obs_scale: vec![1.0; obs_dim],
        };
        let expect = ac.param_count();
        if bytes.len() - pos != (obs_dim + expect) * 8 {
            return Err(Error::Config(format!(
                "checkpoint data block is {} bytes, expected {}",
                bytes.len() - pos,
                (obs_dim + expect) * 8
            )));
        }
        for v in ac.obs_scale.iter_mut() {
            *v = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
            if !(*v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("bad observation scale {v}")));
            }
        }
        let mut params = Vec::with_capacity(expect);
        for _ in 0..expect {
            params.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
        }
        ac.set_flat_params(&params)?;
        Ok(ac)
    }
}
