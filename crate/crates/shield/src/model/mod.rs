//! Small differentiable classifiers: forward logits, softmax cross-entropy
//! loss, exact input and parameter gradients, and SGD training.

mod checkpoint;
mod layers;
mod tensor;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use layers::{Layer, LayerGrads};
pub use tensor::Tensor;
pub use train::{param_gradient, train_sgd, ModelGrads, TrainConfig};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// The three desk-scale architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ArchitectureId {
    #[serde(rename = "linear-softmax")]
    LinearSoftmax,
    #[serde(rename = "small-conv-a")]
    SmallConvA,
    #[serde(rename = "small-conv-b")]
    SmallConvB,
}

impl ArchitectureId {
    pub fn name(self) -> &'static str {
        match self {
            ArchitectureId::LinearSoftmax => "linear-softmax",
            ArchitectureId::SmallConvA => "small-conv-a",
            ArchitectureId::SmallConvB => "small-conv-b",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "linear-softmax" => Ok(ArchitectureId::LinearSoftmax),
            "small-conv-a" => Ok(ArchitectureId::SmallConvA),
            "small-conv-b" => Ok(ArchitectureId::SmallConvB),
            other => Err(Error::InvalidConfig(format!("unknown architecture {other:?}"))),
        }
    }
}

/// A classifier: an architecture id plus its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    arch: ArchitectureId,
    input_shape: [usize; 3],
    num_classes: usize,
    layers: Vec<Layer>,
}

impl Classifier {
    /// Build with seeded parameter initialization (normal weights scaled by
    /// `1/sqrt(fan_in)`, zero biases).
    pub fn init(arch: ArchitectureId, input_shape: [usize; 3], num_classes: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut layers = architecture_layers(arch, input_shape, num_classes);
        for layer in &mut layers {
            match layer {
                Layer::Conv2d { weight, bias, .. } => {
                    let s = weight.shape();
                    let fan_in = (s[1] * s[2] * s[3]) as f64;
                    init_normal(weight, &mut rng, 1.0 / fan_in.sqrt());
                    zero(bias);
                }
                Layer::Dense { weight, bias } => {
                    let fan_in = weight.shape()[1] as f64;
                    init_normal(weight, &mut rng, 1.0 / fan_in.sqrt());
                    zero(bias);
                }
                _ => {}
            }
        }
        Self {
            arch,
            input_shape,
            num_classes,
            layers,
        }
    }

    pub fn architecture(&self) -> ArchitectureId {
        self.arch
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.input_shape
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut Vec<Layer> {
        &mut self.layers
    }

    pub(crate) fn from_parts(
        arch: ArchitectureId,
        input_shape: [usize; 3],
        num_classes: usize,
        layers: Vec<Layer>,
    ) -> Self {
        Self {
            arch,
            input_shape,
            num_classes,
            layers,
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.shape() != self.input_shape.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "input {:?} does not match architecture input {:?}",
                x.shape(),
                self.input_shape
            )));
        }
        Ok(())
    }

    /// Activations of every layer: `acts[0]` is the input, `acts.last()`
    /// the logits.
    fn forward_collect(&self, x: &Tensor) -> Vec<Tensor> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for layer in &self.layers {
            let next = layer.forward(acts.last().expect("non-empty"));
            acts.push(next);
        }
        acts
    }

    /// Pre-softmax outputs `Z(x)`, length `num_classes`.
    pub fn logits(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        Ok(self.forward_collect(x).pop().expect("logits"))
    }

    /// Argmax of the logits; ties resolve to the lowest class index.
    pub fn predict(&self, x: &Tensor) -> Result<usize> {
        Ok(argmax(self.logits(x)?.data()))
    }

    /// Softmax probabilities.
    pub fn probabilities(&self, x: &Tensor) -> Result<Vec<f64>> {
        Ok(softmax(self.logits(x)?.data()))
    }

    /// Softmax cross-entropy `J(x, y)`.
    pub fn loss(&self, x: &Tensor, y: usize) -> Result<f64> {
        self.check_label(y)?;
        let logits = self.logits(x)?;
        Ok(cross_entropy(logits.data(), y))
    }

    /// `dJ/dx`, same shape as `x`.
    pub fn input_gradient(&self, x: &Tensor, y: usize) -> Result<Tensor> {
        self.check_input(x)?;
        self.check_label(y)?;
        let acts = self.forward_collect(x);
        let logits = acts.last().expect("logits");
        let mut seed = Tensor::zeros(vec![self.num_classes]);
        let probs = softmax(logits.data());
        for k in 0..self.num_classes {
            seed.data_mut()[k] = probs[k] - if k == y { 1.0 } else { 0.0 };
        }
        Ok(self.backward(&acts, seed, false).0)
    }

    /// Gradient of a single logit `Z_k` with respect to the input; the
    /// building block attacks use for arbitrary logit differences.
    pub fn logit_gradient(&self, x: &Tensor, k: usize) -> Result<Tensor> {
        self.check_input(x)?;
        self.check_label(k)?;
        let acts = self.forward_collect(x);
        let mut seed = Tensor::zeros(vec![self.num_classes]);
        seed.data_mut()[k] = 1.0;
        Ok(self.backward(&acts, seed, false).0)
    }

    /// Loss, input gradient, and per-layer parameter gradients in one pass.
    pub fn grads(&self, x: &Tensor, y: usize) -> Result<(f64, Tensor, Vec<Option<LayerGrads>>)> {
        self.check_input(x)?;
        self.check_label(y)?;
        let acts = self.forward_collect(x);
        let logits = acts.last().expect("logits");
        let loss = cross_entropy(logits.data(), y);
        let probs = softmax(logits.data());
        let mut seed = Tensor::zeros(vec![self.num_classes]);
        for k in 0..self.num_classes {
            seed.data_mut()[k] = probs[k] - if k == y { 1.0 } else { 0.0 };
        }
        let (gin, pgrads) = self.backward(&acts, seed, true);
        Ok((loss, gin, pgrads))
    }

    fn backward(
        &self,
        acts: &[Tensor],
        logit_seed: Tensor,
        want_params: bool,
    ) -> (Tensor, Vec<Option<LayerGrads>>) {
        let mut grad = logit_seed;
        let mut pgrads: Vec<Option<LayerGrads>> = vec![None; self.layers.len()];
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (gin, pg) = layer.backward(&acts[i], &grad);
            if want_params {
                pgrads[i] = pg;
            }
            grad = gin;
        }
        (grad, pgrads)
    }

    fn check_label(&self, y: usize) -> Result<()> {
        if y >= self.num_classes {
            return Err(Error::LabelOutOfRange {
                label: y,
                num_classes: self.num_classes,
            });
        }
        Ok(())
    }

    /// Stable fingerprint of architecture and parameters, used to key
    /// adversarial caches.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.arch.name().as_bytes());
        hasher.update(self.num_classes.to_le_bytes());
        for dim in self.input_shape {
            hasher.update(dim.to_le_bytes());
        }
        for layer in &self.layers {
            match layer {
                Layer::Conv2d { weight, bias, .. } | Layer::Dense { weight, bias } => {
                    for t in [weight, bias] {
                        for v in t.data() {
                            hasher.update(v.to_le_bytes());
                        }
                    }
                }
                _ => {}
            }
        }
        let digest = hasher.finalize();
        digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
    }
}

fn architecture_layers(
    arch: ArchitectureId,
    input: [usize; 3],
    num_classes: usize,
) -> Vec<Layer> {
    let conv = |out_c: usize, in_c: usize, k: usize, pad: usize| Layer::Conv2d {
        weight: Tensor::zeros(vec![out_c, in_c, k, k]),
        bias: Tensor::zeros(vec![out_c]),
        pad,
    };
    let dense = |out_n: usize, in_n: usize| Layer::Dense {
        weight: Tensor::zeros(vec![out_n, in_n]),
        bias: Tensor::zeros(vec![out_n]),
    };
    let [c, h, w] = input;
    match arch {
        ArchitectureId::LinearSoftmax => {
            vec![Layer::Flatten, dense(num_classes, c * h * w)]
        }
        ArchitectureId::SmallConvA => {
            // c@HxW -> 8@H/2 -> 16@H/4 -> fc
            vec![
                conv(8, c, 3, 1),
                Layer::Tanh,
                Layer::AvgPool2,
                conv(16, 8, 3, 1),
                Layer::Tanh,
                Layer::AvgPool2,
                Layer::Flatten,
                dense(num_classes, 16 * (h / 4) * (w / 4)),
            ]
        }
        ArchitectureId::SmallConvB => {
            // deeper and narrower than A, with 5x5 kernels and a hidden
            // dense layer, for cross-architecture transfer experiments
            vec![
                conv(6, c, 5, 2),
                Layer::Tanh,
                Layer::AvgPool2,
                conv(12, 6, 5, 2),
                Layer::Tanh,
                Layer::AvgPool2,
                conv(24, 12, 3, 1),
                Layer::Tanh,
                Layer::AvgPool2,
                Layer::Flatten,
                dense(64, 24 * (h / 8) * (w / 8)),
                Layer::Tanh,
                dense(num_classes, 64),
            ]
        }
    }
}

fn init_normal(t: &mut Tensor, rng: &mut SplitMix64, std: f64) {
    for v in t.data_mut() {
        *v = rng.normal() * std;
    }
}

fn zero(t: &mut Tensor) {
    for v in t.data_mut() {
        *v = 0.0;
    }
}

/// Argmax with ties resolved to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Softmax cross-entropy via log-sum-exp.
pub fn cross_entropy(logits: &[f64], y: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse: f64 = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
    lse - logits[y]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(seed: u64, shape: [usize; 3]) -> Tensor {
        let mut rng = SplitMix64::new(seed);
        let len = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..len).map(|_| rng.next_f64()).collect()).unwrap()
    }

    #[test]
    fn zero_weight_linear_model_gives_zero_logits() {
        let model = Classifier::from_parts(
            ArchitectureId::LinearSoftmax,
            [3, 4, 4],
            10,
            architecture_layers(ArchitectureId::LinearSoftmax, [3, 4, 4], 10),
        );
        let z = model.logits(&input(1, [3, 4, 4])).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        // all logits equal: tie resolves to class 0
        assert_eq!(model.predict(&input(1, [3, 4, 4])).unwrap(), 0);
    }

    #[test]
    fn two_class_linear_fixture_is_a_dot_product() {
        let mut model = Classifier::from_parts(
            ArchitectureId::LinearSoftmax,
            [1, 1, 2],
            2,
            architecture_layers(ArchitectureId::LinearSoftmax, [1, 1, 2], 2),
        );
        if let Layer::Dense { weight, .. } = &mut model.layers_mut()[1] {
            weight.data_mut().copy_from_slice(&[1.0, 0.0, -1.0, 0.0]);
        }
        let x = Tensor::new(vec![1, 1, 2], vec![0.3, 0.1]).unwrap();
        let z = model.logits(&x).unwrap();
        assert!((z.data()[0] - 0.3).abs() < 1e-15);
        assert!((z.data()[1] + 0.3).abs() < 1e-15);
        assert_eq!(model.predict(&x).unwrap(), 0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let model = Classifier::init(ArchitectureId::SmallConvA, [3, 32, 32], 10, 1);
        assert!(model.logits(&input(2, [3, 16, 16])).is_err());
        assert!(model.loss(&input(2, [3, 32, 32]), 10).is_err());
    }

    #[test]
    fn uniform_logits_loss_is_log_num_classes() {
        let model = Classifier::from_parts(
            ArchitectureId::LinearSoftmax,
            [3, 4, 4],
            10,
            architecture_layers(ArchitectureId::LinearSoftmax, [3, 4, 4], 10),
        );
        let j = model.loss(&input(3, [3, 4, 4]), 4).unwrap();
        assert!((j - 10.0f64.ln()).abs() < 1e-12, "J {j}");
    }

    #[test]
    fn confident_correct_logit_gives_near_zero_loss() {
        let logits = [0.0, 50.0, 0.0, 0.0];
        assert!(cross_entropy(&logits, 1) < 1e-12);
    }

    #[test]
    fn loss_matches_direct_softmax_formula() {
        let model = Classifier::init(ArchitectureId::SmallConvA, [3, 8, 8], 10, 5);
        let x = input(9, [3, 8, 8]);
        let z = model.logits(&x).unwrap();
        // independent route: exponentials without the log-sum-exp trick
        let exps: Vec<f64> = z.data().iter().map(|&v| v.exp()).collect();
        let p3 = exps[3] / exps.iter().sum::<f64>();
        let want = -p3.ln();
        let got = model.loss(&x, 3).unwrap();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn softmax_probabilities_sum_to_one() {
        let model = Classifier::init(ArchitectureId::SmallConvB, [3, 16, 16], 10, 6);
        let p = model.probabilities(&input(10, [3, 16, 16])).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn linear_input_gradient_matches_closed_form() {
        // dJ/dx = (softmax(Wx + b) - onehot(y))^T W
        let model = Classifier::init(ArchitectureId::LinearSoftmax, [3, 4, 4], 5, 7);
        let x = input(11, [3, 4, 4]);
        let y = 2;
        let probs = model.probabilities(&x).unwrap();
        let Layer::Dense { weight, .. } = &model.layers()[1] else {
            panic!("expected dense layer");
        };
        let n = x.len();
        let mut want = vec![0.0f64; n];
        for k in 0..5 {
            let coef = probs[k] - if k == y { 1.0 } else { 0.0 };
            for i in 0..n {
                want[i] += coef * weight.data()[k * n + i];
            }
        }
        let got = model.input_gradient(&x, y).unwrap();
        for (g, w) in got.data().iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_checks_against_central_differences() {
        let cases = [
            (ArchitectureId::LinearSoftmax, [3usize, 8, 8]),
            (ArchitectureId::SmallConvA, [3, 16, 16]),
            (ArchitectureId::SmallConvB, [3, 16, 16]),
        ];
        for (arch, shape) in cases {
            let model = Classifier::init(arch, shape, 7, 13);
            for case in 0..3u64 {
                let x = input(100 + case, shape);
                let y = (case % 7) as usize;
                let grad = model.input_gradient(&x, y).unwrap();
                let h = 1e-5;
                let stride = (x.len() / 9).max(1);
                for i in (0..x.len()).step_by(stride) {
                    let mut plus = x.clone();
                    plus.data_mut()[i] += h;
                    let mut minus = x.clone();
                    minus.data_mut()[i] -= h;
                    let fd = (model.loss(&plus, y).unwrap() - model.loss(&minus, y).unwrap())
                        / (2.0 * h);
                    let an = grad.data()[i];
                    let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
                    assert!(rel < 1e-6, "{arch:?} coord {i}: fd {fd} an {an} rel {rel}");
                }
            }
        }
    }

    #[test]
    fn determinism_of_seeded_init() {
        let a = Classifier::init(ArchitectureId::SmallConvA, [3, 32, 32], 10, 42);
        let b = Classifier::init(ArchitectureId::SmallConvA, [3, 32, 32], 10, 42);
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = Classifier::init(ArchitectureId::SmallConvA, [3, 32, 32], 10, 43);
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
