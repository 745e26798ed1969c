use serde::{Deserialize, Serialize};

use super::encode::InputVector;
use super::network::{Activations, Network, Scalar, POLICY_DIM};
use super::NnError;
use crate::engine::CardSet;

/// Softmax over the legal entries only; illegal cards get probability 0.
pub fn masked_policy(logits: &[f64], legal: CardSet) -> Result<[f64; POLICY_DIM], NnError> {
    if legal.is_empty() {
        return Err(NnError::EmptyMask);
    }
    let max = legal
        .iter()
        .map(|c| logits[c.index()])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; POLICY_DIM];
    let mut total = 0.0;
    for c in legal {
        let e = (logits[c.index()] - max).exp();
        p[c.index()] = e;
        total += e;
    }
    for c in legal {
        p[c.index()] /= total;
    }
    Ok(p)
}

/// One supervised example from search.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub input: InputVector,
    /// Visit distribution, supported on `legal`.
    pub target_policy: [f32; POLICY_DIM],
    /// Final team differential from the mover's side.
    pub target_value: f32,
    pub legal: CardSet,
}

impl TrainingSample {
    pub fn validate(&self) -> Result<(), NnError> {
        let mut sum = 0.0f64;
        for (i, &t) in self.target_policy.iter().enumerate() {
            if t < 0.0 || (t > 0.0 && !self.legal.contains(crate::engine::Card::from_index(i))) {
                return Err(NnError::BadTarget(format!("mass {t} on card {i}")));
            }
            sum += t as f64;
        }
        if (sum - 1.0).abs() > 1e-4 {
            return Err(NnError::BadTarget(format!("policy sums to {sum}")));
        }
        Ok(())
    }
}

/// Mean loss components over a batch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    /// Mean KL divergence of the masked policy from the target.
    pub kl: f64,
    /// Mean absolute value error in game points.
    pub value_abs: f64,
    /// `kl + lambda * value_abs`.
    pub total: f64,
}

/// Loss of one sample and its gradients with respect to the logits and the
/// value output. Gradients of illegal logits are zero.
pub fn sample_loss_grad(
    logits: &[f64],
    value: f64,
    sample: &TrainingSample,
    lambda: f64,
) -> Result<(f64, f64, [f64; POLICY_DIM], f64), NnError> {
    let p = masked_policy(logits, sample.legal)?;
    let mut kl = 0.0;
    let mut dlogits = [0.0; POLICY_DIM];
    for c in sample.legal {
        let i = c.index();
        let t = sample.target_policy[i] as f64;
        if t > 0.0 {
            kl += t * (t.ln() - p[i].ln());
        }
        dlogits[i] = p[i] - t;
    }
    let diff = sample.target_value as f64 - value;
    let dvalue = -lambda * sign(diff);
    Ok((kl, diff.abs(), dlogits, dvalue))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean loss over a batch without gradients.
pub fn loss<F: Scalar>(net: &Network<F>, batch: &[&TrainingSample]) -> Result<LossStats, NnError> {
    let mut acts = Activations::default();
    accumulate(net, batch, &mut acts, None)
}

/// Mean loss over a batch; adds the gradient of the mean loss to `grad`.
pub fn loss_and_grad<F: Scalar>(
    net: &Network<F>,
    batch: &[&TrainingSample],
    grad: &mut [F],
) -> Result<LossStats, NnError> {
    let mut acts = Activations::default();
    accumulate(net, batch, &mut acts, Some(grad))
}

fn accumulate<F: Scalar>(
    net: &Network<F>,
    batch: &[&TrainingSample],
    acts: &mut Activations<F>,
    mut grad: Option<&mut [F]>,
) -> Result<LossStats, NnError> {
    if batch.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let lambda = net.config().lambda;
    let n = batch.len() as f64;
    let mut stats = LossStats::default();
    let mut logits = [0.0; POLICY_DIM];
    for s in batch {
        s.validate()?;
        net.forward_cached(&s.input, acts);
        for (l, o) in logits.iter_mut().zip(acts.logits()) {
            *l = o.to_f64().unwrap();
        }
        let value = acts.value().to_f64().unwrap();
        let (kl, vabs, dl, dv) = sample_loss_grad(&logits, value, s, lambda)?;
        stats.kl += kl / n;
        stats.value_abs += vabs / n;
        if let Some(g) = grad.as_deref_mut() {
            let dl: Vec<F> = dl.iter().map(|d| F::from(d / n).unwrap()).collect();
            net.backward(&s.input, acts, &dl, F::from(dv / n).unwrap(), g);
        }
    }
    stats.total = stats.kl + lambda * stats.value_abs;
    Ok(stats)
}
