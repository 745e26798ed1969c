use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_grad, LossStats, TrainingSample};
use super::network::{Network, Scalar};
use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.3,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Adam<F> {
    pub config: AdamConfig,
    m: Vec<F>,
    v: Vec<F>,
    t: i32,
}

impl<F: Scalar> Adam<F> {
    pub fn new(config: AdamConfig, params: usize) -> Adam<F> {
        Adam {
            config,
            m: vec![F::zero(); params],
            v: vec![F::zero(); params],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut [F], grad: &[F]) {
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let c = &self.config;
        let f = |x: f64| F::from(x).unwrap();
        let (b1, b2) = (f(c.beta1), f(c.beta2));
        let one = F::one();
        let lr_t = c.lr * (1.0 - c.beta2.powi(self.t)).sqrt() / (1.0 - c.beta1.powi(self.t));
        let (lr_t, eps) = (f(lr_t), f(c.eps));
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            *p = *p - lr_t * *m / (v.sqrt() + eps);
        }
    }
}

/// One pass over `samples` in shuffled minibatches. Returns the mean of the
/// minibatch losses measured before each update.
pub fn train_pass<F: Scalar, R: Rng + ?Sized>(
    net: &mut Network<F>,
    adam: &mut Adam<F>,
    samples: &[TrainingSample],
    minibatch: usize,
    rng: &mut R,
) -> Result<LossStats, NnError> {
    if samples.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(rng);
    let mut grad = vec![F::zero(); net.param_count()];
    let mut mean = LossStats::default();
    let chunks = order.chunks(minibatch.max(1));
    let n = chunks.len() as f64;
    for chunk in chunks {
        let batch: Vec<&TrainingSample> = chunk.iter().map(|&i| &samples[i]).collect();
        grad.fill(F::zero());
        let stats = loss_and_grad(net, &batch, &mut grad)?;
        adam.step(net.params_mut(), &grad);
        mean.kl += stats.kl / n;
        mean.value_abs += stats.value_abs / n;
        mean.total += stats.total / n;
    }
    net.check()?;
    Ok(mean)
}

/// Full-batch Adam steps on a fixed set, tracking the loss before each step.
/// Fails with [`NnError::Diverged`] if the loss exceeds ten times its start.
pub fn fit_batch<F: Scalar>(
    net: &mut Network<F>,
    adam: &mut Adam<F>,
    samples: &[TrainingSample],
    minibatch: usize,
    steps: usize,
    rng: &mut impl Rng,
) -> Result<Vec<LossStats>, NnError> {
    let mut history = Vec::with_capacity(steps);
    for _ in 0..steps {
        let stats = train_pass(net, adam, samples, minibatch, rng)?;
        if let Some(first) = history.first() {
            let first: &LossStats = first;
            if stats.total > 10.0 * first.total {
                return Err(NnError::Diverged {
                    initial: first.total,
                    current: stats.total,
                });
            }
        }
        history.push(stats);
    }
    Ok(history)
}
