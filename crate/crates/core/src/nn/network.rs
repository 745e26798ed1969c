use std::fmt::Debug;
use std::io::{Read, Write};

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encode::{InputVector, INPUT_DIM};
use super::NnError;

/// Floating point type the network can be instantiated with.
pub trait Scalar: Float + Default + Debug + Send + Sync + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// The value output is a raw unit multiplied by this, so game-point targets
/// sit near the unit range of the last layer.
pub const VALUE_SCALE: f64 = 100.0;

pub const POLICY_DIM: usize = 52;
const OUTPUT_DIM: usize = POLICY_DIM + 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    /// Number of hidden layers.
    pub depth: usize,
    pub width: usize,
    /// A residual connection spans this many hidden layers; 0 disables them.
    pub skip_period: usize,
    /// Weight of the value term in the loss.
    pub lambda: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            depth: 16,
            width: 512,
            skip_period: 2,
            lambda: 0.01,
        }
    }
}

impl NetConfig {
    /// A topology that trains in minutes on one CPU core.
    pub fn small() -> NetConfig {
        NetConfig {
            depth: 4,
            width: 96,
            ..NetConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.depth < 2 {
            return Err(NnError::Config(format!("depth {} < 2", self.depth)));
        }
        if self.width == 0 {
            return Err(NnError::Config("width must be positive".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(NnError::Config(format!("lambda {} must be positive", self.lambda)));
        }
        Ok(())
    }

    fn shapes(&self) -> Vec<LayerShape> {
        let mut dims = vec![(INPUT_DIM, self.width)];
        dims.extend((1..self.depth).map(|_| (self.width, self.width)));
        dims.push((self.width, OUTPUT_DIM));
        let mut offset = 0;
        dims.into_iter()
            .map(|(inputs, outputs)| {
                let s = LayerShape {
                    inputs,
                    outputs,
                    offset,
                };
                offset += (inputs + 1) * outputs;
                s
            })
            .collect()
    }

    /// Whether hidden layer `l` (1-based) adds the output of layer `l - p`.
    fn has_skip(&self, l: usize) -> bool {
        let p = self.skip_period;
        p > 0 && l > p && (l - 1).is_multiple_of(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
    /// Start of this layer's weights (`inputs × outputs`, one row per input)
    /// followed by `outputs` biases.
    offset: usize,
}

impl LayerShape {
    fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.inputs * self.outputs
    }

    fn bias(&self) -> std::ops::Range<usize> {
        let b = self.offset + self.inputs * self.outputs;
        b..b + self.outputs
    }
}

/// Network output: policy logits over the 52 cards and the predicted final
/// team differential for the side to move.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyValue {
    pub logits: [f64; POLICY_DIM],
    pub value: f64,
}

/// Intermediate values kept for backpropagation.
#[derive(Clone, Debug, Default)]
pub struct Activations<F> {
    pre: Vec<Vec<F>>,
    hidden: Vec<Vec<F>>,
    out: Vec<F>,
}

impl<F: Scalar> Activations<F> {
    pub fn logits(&self) -> &[F] {
        &self.out[..POLICY_DIM]
    }

    pub fn value(&self) -> F {
        self.out[POLICY_DIM] * F::from(VALUE_SCALE).unwrap()
    }
}

/// Fully connected policy/value network with ReLU activations and periodic
/// residual connections.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<F = f32> {
    config: NetConfig,
    shapes: Vec<LayerShape>,
    params: Vec<F>,
}

fn relu<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        x
    } else {
        F::zero()
    }
}

impl<F: Scalar> Network<F> {
    /// Fan-in scaled uniform initialisation from a seed.
    pub fn new(config: NetConfig, seed: u64) -> Result<Network<F>, NnError> {
        config.validate()?;
        let shapes = config.shapes();
        let total = shapes.last().map(|s| s.bias().end).unwrap_or(0);
        let mut params = vec![F::zero(); total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = shapes.len() - 1;
        for (k, s) in shapes.iter().enumerate() {
            let gain = if k == last { 1.0 } else { 6.0 };
            let bound = (gain / s.inputs as f64).sqrt();
            for w in &mut params[s.weights()] {
                *w = F::from(rng.gen_range(-bound..bound)).unwrap();
            }
        }
        Ok(Network {
            config,
            shapes,
            params,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Same weights in another float type.
    pub fn cast<G: Scalar>(&self) -> Network<G> {
        Network {
            config: self.config,
            shapes: self.shapes.clone(),
            params: self.params.iter().map(|p| G::from(*p).unwrap()).collect(),
        }
    }

    /// Error if any parameter is NaN or infinite.
    pub fn check(&self) -> Result<(), NnError> {
        match self.params.iter().position(|p| !p.is_finite()) {
            Some(i) => Err(NnError::ModelCorrupt(format!("parameter {i} is not finite"))),
            None => Ok(()),
        }
    }

    fn affine(&self, s: &LayerShape, x: &[F], out: &mut Vec<F>) {
        out.clear();
        out.extend_from_slice(&self.params[s.bias()]);
        let w = &self.params[s.weights()];
        for (i, &xi) in x.iter().enumerate() {
            if xi == F::zero() {
                continue;
            }
            let row = &w[i * s.outputs..(i + 1) * s.outputs];
            for (o, &wij) in out.iter_mut().zip(row) {
                *o = *o + xi * wij;
            }
        }
    }

    pub fn forward_cached(&self, input: &InputVector, acts: &mut Activations<F>) {
        let depth = self.config.depth;
        acts.pre.resize(depth, Vec::new());
        acts.hidden.resize(depth, Vec::new());
        let stem = &self.shapes[0];
        {
            let z = &mut acts.pre[0];
            z.clear();
            z.extend_from_slice(&self.params[stem.bias()]);
            let w = &self.params[stem.weights()];
            for (i, xi) in input.nonzeros() {
                let xi = F::from(xi).unwrap();
                let row = &w[i * stem.outputs..(i + 1) * stem.outputs];
                for (o, &wij) in z.iter_mut().zip(row) {
                    *o = *o + xi * wij;
                }
            }
        }
        acts.hidden[0] = acts.pre[0].iter().map(|&z| relu(z)).collect();
        for l in 1..depth {
            let mut z = std::mem::take(&mut acts.pre[l]);
            self.affine(&self.shapes[l], &acts.hidden[l - 1], &mut z);
            let mut h: Vec<F> = z.iter().map(|&v| relu(v)).collect();
            if self.config.has_skip(l + 1) {
                let back = &acts.hidden[l - self.config.skip_period];
                for (a, &b) in h.iter_mut().zip(back) {
                    *a = *a + b;
                }
            }
            acts.pre[l] = z;
            acts.hidden[l] = h;
        }
        let mut out = std::mem::take(&mut acts.out);
        self.affine(&self.shapes[depth], &acts.hidden[depth - 1], &mut out);
        acts.out = out;
    }

    pub fn forward(&self, input: &InputVector) -> PolicyValue {
        let mut acts = Activations::default();
        self.forward_cached(input, &mut acts);
        let mut logits = [0.0; POLICY_DIM];
        for (l, o) in logits.iter_mut().zip(acts.logits()) {
            *l = o.to_f64().unwrap();
        }
        PolicyValue {
            logits,
            value: acts.value().to_f64().unwrap(),
        }
    }

    /// Like [`forward`](Self::forward) but reports non-finite outputs.
    pub fn try_forward(&self, input: &InputVector) -> Result<PolicyValue, NnError> {
        let pv = self.forward(input);
        if pv.value.is_finite() && pv.logits.iter().all(|l| l.is_finite()) {
            Ok(pv)
        } else {
            Err(NnError::ModelCorrupt("non-finite output".into()))
        }
    }

    /// Accumulate parameter gradients into `grad` given the loss gradient
    /// with respect to the logits and to the (scaled) value output.
    pub fn backward(
        &self,
        input: &InputVector,
        acts: &Activations<F>,
        dlogits: &[F],
        dvalue: F,
        grad: &mut [F],
    ) {
        let depth = self.config.depth;
        let width = self.config.width;
        let mut dout = dlogits.to_vec();
        dout.push(dvalue * F::from(VALUE_SCALE).unwrap());

        let mut dh: Vec<Vec<F>> = vec![vec![F::zero(); width]; depth];
        let head = &self.shapes[depth];
        self.layer_backward(head, &acts.hidden[depth - 1], &dout, grad, Some(&mut dh[depth - 1]));

        for l in (1..depth).rev() {
            if self.config.has_skip(l + 1) {
                let p = self.config.skip_period;
                let (lo, hi) = dh.split_at_mut(l);
                for (a, &b) in lo[l - p].iter_mut().zip(&hi[0]) {
                    *a = *a + b;
                }
            }
            let dz: Vec<F> = dh[l]
                .iter()
                .zip(&acts.pre[l])
                .map(|(&d, &z)| if z > F::zero() { d } else { F::zero() })
                .collect();
            let (lo, _) = dh.split_at_mut(l);
            self.layer_backward(&self.shapes[l], &acts.hidden[l - 1], &dz, grad, Some(&mut lo[l - 1]));
        }

        let stem = &self.shapes[0];
        let dz: Vec<F> = dh[0]
            .iter()
            .zip(&acts.pre[0])
            .map(|(&d, &z)| if z > F::zero() { d } else { F::zero() })
            .collect();
        for (i, xi) in input.nonzeros() {
            let xi = F::from(xi).unwrap();
            let base = stem.offset + i * stem.outputs;
            for (g, &d) in grad[base..base + stem.outputs].iter_mut().zip(&dz) {
                *g = *g + xi * d;
            }
        }
        for (g, &d) in grad[stem.bias()].iter_mut().zip(&dz) {
            *g = *g + d;
        }
    }

    fn layer_backward(
        &self,
        s: &LayerShape,
        x: &[F],
        dz: &[F],
        grad: &mut [F],
        dx: Option<&mut Vec<F>>,
    ) {
        let w = &self.params[s.weights()];
        for (i, &xi) in x.iter().enumerate() {
            if xi == F::zero() {
                continue;
            }
            let base = s.offset + i * s.outputs;
            for (g, &d) in grad[base..base + s.outputs].iter_mut().zip(dz) {
                *g = *g + xi * d;
            }
        }
        for (g, &d) in grad[s.bias()].iter_mut().zip(dz) {
            *g = *g + d;
        }
        if let Some(dx) = dx {
            for (i, out) in dx.iter_mut().enumerate() {
                let row = &w[i * s.outputs..(i + 1) * s.outputs];
                let mut acc = F::zero();
                for (&wij, &d) in row.iter().zip(dz) {
                    acc = acc + wij * d;
                }
                *out = *out + acc;
            }
        }
    }
}

const MAGIC: &[u8; 4] = b"GZNN";
const FORMAT_VERSION: u32 = 1;

fn read_u32(r: &mut impl Read) -> Result<u32, NnError> {
    let mut b = [0; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

impl Network<f32> {
    /// Binary checkpoint: magic, format version, topology, then per layer
    /// its dimensions and little-endian `f32` weights and biases.
    pub fn save(&self, w: &mut impl Write) -> Result<(), NnError> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        for v in [self.config.depth, self.config.width, self.config.skip_period] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        w.write_all(&self.config.lambda.to_le_bytes())?;
        w.write_all(&(self.shapes.len() as u32).to_le_bytes())?;
        for s in &self.shapes {
            w.write_all(&(s.inputs as u32).to_le_bytes())?;
            w.write_all(&(s.outputs as u32).to_le_bytes())?;
            let block = &self.params[s.offset..s.bias().end];
            let mut buf = Vec::with_capacity(block.len() * 4);
            for p in block {
                buf.extend_from_slice(&p.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn load(r: &mut impl Read) -> Result<Network<f32>, NnError> {
        let bad = |m: String| NnError::Checkpoint(m);
        let mut magic = [0; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not a network checkpoint".into()));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {version}")));
        }
        let depth = read_u32(r)? as usize;
        let width = read_u32(r)? as usize;
        let skip_period = read_u32(r)? as usize;
        let mut lam = [0; 8];
        r.read_exact(&mut lam)?;
        let config = NetConfig {
            depth,
            width,
            skip_period,
            lambda: f64::from_le_bytes(lam),
        };
        config.validate()?;
        let shapes = config.shapes();
        let layers = read_u32(r)? as usize;
        if layers != shapes.len() {
            return Err(bad(format!("{layers} layers, topology needs {}", shapes.len())));
        }
        let mut params = vec![0f32; shapes.last().unwrap().bias().end];
        for (k, s) in shapes.iter().enumerate() {
            let (i, o) = (read_u32(r)? as usize, read_u32(r)? as usize);
            if (i, o) != (s.inputs, s.outputs) {
                return Err(bad(format!(
                    "layer {k} is {i}x{o}, expected {}x{}",
                    s.inputs, s.outputs
                )));
            }
            let block = &mut params[s.offset..s.bias().end];
            let mut buf = vec![0u8; block.len() * 4];
            r.read_exact(&mut buf)?;
            for (p, b) in block.iter_mut().zip(buf.chunks_exact(4)) {
                *p = f32::from_le_bytes(b.try_into().unwrap());
            }
        }
        let net = Network {
            config,
            shapes,
            params,
        };
        net.check()?;
        Ok(net)
    }

    pub fn save_file(&self, path: impl AsRef<std::path::Path>) -> Result<(), NnError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.save(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load_file(path: impl AsRef<std::path::Path>) -> Result<Network<f32>, NnError> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Network::load(&mut f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::GameState;
    use crate::nn::encode::{encode_state, EncodeMode};

    fn tiny() -> NetConfig {
        NetConfig {
            depth: 3,
            width: 8,
            skip_period: 2,
            lambda: 0.01,
        }
    }

    fn input() -> InputVector {
        let s = GameState::deal(9);
        encode_state(&s, s.to_play(), EncodeMode::Exact)
    }

    #[test]
    fn reproducible_from_seed() {
        let a = Network::<f32>::new(tiny(), 3).unwrap();
        let b = Network::<f32>::new(tiny(), 3).unwrap();
        let c = Network::<f32>::new(tiny(), 4).unwrap();
        assert_eq!(a.forward(&input()), b.forward(&input()));
        assert_ne!(a.forward(&input()), c.forward(&input()));
    }

    #[test]
    fn padding_slot_is_not_ignored() {
        let net = Network::<f64>::new(tiny(), 1).unwrap();
        let x = input();
        let mut y = x.clone();
        // the last slot of the third trick block only ever receives diffusion
        y.set(369, 1.0);
        assert_ne!(net.forward(&x), net.forward(&y));
    }

    #[test]
    fn parameter_count_follows_topology() {
        let net = Network::<f32>::new(tiny(), 0).unwrap();
        let expect = (434 + 1) * 8 + 2 * (8 + 1) * 8 + (8 + 1) * 53;
        assert_eq!(net.param_count(), expect);
    }

    #[test]
    fn skips_land_on_expected_layers() {
        let c = NetConfig {
            depth: 7,
            ..tiny()
        };
        let on: Vec<usize> = (1..=7).filter(|&l| c.has_skip(l)).collect();
        assert_eq!(on, vec![3, 5, 7]);
        let none = NetConfig {
            skip_period: 0,
            ..c
        };
        assert!((1..=7).all(|l| !none.has_skip(l)));
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(Network::<f32>::new(NetConfig { depth: 1, ..tiny() }, 0).is_err());
        assert!(Network::<f32>::new(NetConfig { lambda: 0.0, ..tiny() }, 0).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let net = Network::<f32>::new(tiny(), 11).unwrap();
        let mut buf = Vec::new();
        net.save(&mut buf).unwrap();
        let back = Network::load(&mut buf.as_slice()).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.forward(&input()), net.forward(&input()));
    }

    #[test]
    fn checkpoint_with_wrong_dims_rejected() {
        let net = Network::<f32>::new(tiny(), 11).unwrap();
        let mut buf = Vec::new();
        net.save(&mut buf).unwrap();
        // first layer input dimension sits right after the header
        let at = 4 + 4 + 12 + 8 + 4;
        buf[at..at + 4].copy_from_slice(&433u32.to_le_bytes());
        assert!(matches!(
            Network::load(&mut buf.as_slice()),
            Err(NnError::Checkpoint(_))
        ));
        assert!(Network::load(&mut &b"XXXX"[..]).is_err());
    }

    #[test]
    fn corrupt_weights_detected() {
        let mut net = Network::<f32>::new(tiny(), 0).unwrap();
        assert!(net.check().is_ok());
        let n = net.param_count();
        net.params_mut()[n - 1] = f32::NAN;
        assert!(matches!(net.check(), Err(NnError::ModelCorrupt(_))));
        assert!(net.try_forward(&input()).is_err());
    }
}
