//! Plain SGD with per-epoch learning-rate decay.

use rayon::prelude::*;

use super::layers::{Layer, LayerGrads};
use super::tensor::Tensor;
use super::Classifier;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// SGD hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplicative factor applied per epoch: `lr_e = lr * decay^e`.
    pub decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, decay: f64, epochs: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if learning_rate < 0.0 {
            return Err(Error::InvalidConfig("learning_rate must be >= 0".into()));
        }
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(Error::InvalidConfig("decay must be in (0, 1]".into()));
        }
        if batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(Self {
            learning_rate,
            decay,
            epochs,
            batch_size,
            seed,
        })
    }

    /// Effective learning rate at a given epoch.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.decay.powi(epoch as i32)
    }
}

/// Per-layer parameter gradients; `None` for layers without parameters.
pub type ModelGrads = Vec<Option<LayerGrads>>;

/// Mean parameter gradient over a batch of labeled instances.
pub fn param_gradient(model: &Classifier, batch: &[(Tensor, usize)]) -> Result<ModelGrads> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    // per-instance gradients computed in parallel, then summed in a fixed
    // order so results are bit-reproducible
    let per_item: Vec<ModelGrads> = batch
        .par_iter()
        .map(|(x, y)| model.grads(x, *y).map(|(_, _, g)| g))
        .collect::<Result<_>>()?;
    let scale = 1.0 / batch.len() as f64;
    let mut total = per_item[0].clone();
    for item in &per_item[1..] {
        for (acc, g) in total.iter_mut().zip(item) {
            if let (Some(acc), Some(g)) = (acc.as_mut(), g.as_ref()) {
                acc.weight.add_scaled(&g.weight, 1.0);
                acc.bias.add_scaled(&g.bias, 1.0);
            }
        }
    }
    for slot in total.iter_mut().flatten() {
        for v in slot.weight.data_mut() {
            *v *= scale;
        }
        for v in slot.bias.data_mut() {
            *v *= scale;
        }
    }
    Ok(total)
}

/// Mean loss over a labeled set.
pub fn mean_loss(model: &Classifier, data: &[(Tensor, usize)]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("empty dataset".into()));
    }
    let total: f64 = data
        .par_iter()
        .map(|(x, y)| model.loss(x, *y))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(total / data.len() as f64)
}

/// Fraction of correct predictions.
pub fn accuracy(model: &Classifier, data: &[(Tensor, usize)]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("empty dataset".into()));
    }
    let correct: usize = data
        .par_iter()
        .map(|(x, y)| Ok(usize::from(model.predict(x)? == *y)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(correct as f64 / data.len() as f64)
}

/// Train by mini-batch SGD. Deterministic: a fixed seed yields
/// bit-identical parameters.
pub fn train_sgd(
    model: &Classifier,
    dataset: &[(Tensor, usize)],
    cfg: &TrainConfig,
) -> Result<Classifier> {
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("empty training dataset".into()));
    }
    TrainConfig::new(cfg.learning_rate, cfg.decay, cfg.epochs, cfg.batch_size, cfg.seed)?;
    let mut trained = model.clone();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = SplitMix64::new(cfg.seed);

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(Tensor, usize)> =
                chunk.iter().map(|&i| dataset[i].clone()).collect();
            let grads = param_gradient(&trained, &batch)?;
            for (layer, grad) in trained.layers_mut().iter_mut().zip(&grads) {
                if let Some(g) = grad {
                    match layer {
                        Layer::Conv2d { weight, bias, .. } | Layer::Dense { weight, bias } => {
                            weight.add_scaled(&g.weight, -lr);
                            bias.add_scaled(&g.bias, -lr);
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    Ok(trained)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArchitectureId;

    /// Two linearly separable blobs in 2 dimensions.
    fn toy_set(n: usize, seed: u64) -> Vec<(Tensor, usize)> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|i| {
                let label = i % 2;
                let center = if label == 0 { 0.25 } else { 0.75 };
                let x = Tensor::new(
                    vec![1, 1, 2],
                    vec![
                        (center + rng.uniform(-0.15, 0.15)).clamp(0.0, 1.0),
                        (center + rng.uniform(-0.15, 0.15)).clamp(0.0, 1.0),
                    ],
                )
                .unwrap();
                (x, label)
            })
            .collect()
    }

    #[test]
    fn lr_decay_schedule_is_multiplicative() {
        let cfg = TrainConfig::new(0.1, 0.5, 10, 4, 0).unwrap();
        assert_eq!(cfg.lr_at(0), 0.1);
        assert_eq!(cfg.lr_at(1), 0.05);
        assert_eq!(cfg.lr_at(3), 0.1 * 0.125);
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let model = Classifier::init(ArchitectureId::LinearSoftmax, [1, 1, 2], 2, 3);
        let cfg = TrainConfig::new(0.0, 1.0, 3, 8, 0).unwrap();
        let trained = train_sgd(&model, &toy_set(32, 1), &cfg).unwrap();
        assert_eq!(trained, model);
    }

    #[test]
    fn zero_epochs_keeps_parameters() {
        let model = Classifier::init(ArchitectureId::LinearSoftmax, [1, 1, 2], 2, 3);
        let cfg = TrainConfig::new(0.5, 1.0, 0, 8, 0).unwrap();
        let trained = train_sgd(&model, &toy_set(32, 1), &cfg).unwrap();
        assert_eq!(trained, model);
    }

    #[test]
    fn separable_toy_set_reaches_99_percent() {
        let model = Classifier::init(ArchitectureId::LinearSoftmax, [1, 1, 2], 2, 3);
        let data = toy_set(200, 2);
        let cfg = TrainConfig::new(0.5, 1.0, 50, 16, 7).unwrap();
        let trained = train_sgd(&model, &data, &cfg).unwrap();
        let acc = accuracy(&trained, &data).unwrap();
        assert!(acc >= 0.99, "train accuracy {acc}");
    }

    #[test]
    fn loss_decreases_over_epochs() {
        let model = Classifier::init(ArchitectureId::SmallConvA, [3, 8, 8], 2, 5);
        let mut rng = SplitMix64::new(6);
        let data: Vec<(Tensor, usize)> = (0..40)
            .map(|i| {
                let label = i % 2;
                let base = if label == 0 { 0.2 } else { 0.8 };
                let t = Tensor::new(
                    vec![3, 8, 8],
                    (0..192).map(|_| (base + rng.uniform(-0.1, 0.1)).clamp(0.0, 1.0)).collect(),
                )
                .unwrap();
                (t, label)
            })
            .collect();
        let before = mean_loss(&model, &data).unwrap();
        let cfg = TrainConfig::new(0.1, 0.94, 5, 8, 1).unwrap();
        let after = mean_loss(&train_sgd(&model, &data, &cfg).unwrap(), &data).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn training_is_bit_deterministic() {
        let model = Classifier::init(ArchitectureId::SmallConvA, [3, 8, 8], 2, 5);
        let data = toy_set(16, 9)
            .into_iter()
            .map(|(t, y)| {
                let v = t.data()[0];
                (Tensor::new(vec![3, 8, 8], vec![v; 192]).unwrap(), y)
            })
            .collect::<Vec<_>>();
        let cfg = TrainConfig::new(0.05, 0.9, 3, 4, 11).unwrap();
        let a = train_sgd(&model, &data, &cfg).unwrap();
        let b = train_sgd(&model, &data, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let model = Classifier::init(ArchitectureId::LinearSoftmax, [1, 1, 2], 2, 3);
        let cfg = TrainConfig::new(0.1, 1.0, 1, 4, 0).unwrap();
        assert!(train_sgd(&model, &[], &cfg).is_err());
        assert!(param_gradient(&model, &[]).is_err());
    }

    #[test]
    fn param_gradient_matches_finite_differences() {
        let model = Classifier::init(ArchitectureId::SmallConvA, [3, 8, 8], 3, 21);
        let batch = {
            let mut rng = SplitMix64::new(30);
            vec![(
                Tensor::new(vec![3, 8, 8], (0..192).map(|_| rng.next_f64()).collect()).unwrap(),
                1usize,
            )]
        };
        let grads = param_gradient(&model, &batch).unwrap();
        let h = 1e-5;
        for (li, grad) in grads.iter().enumerate() {
            let Some(g) = grad else { continue };
            let n = g.weight.len();
            for i in (0..n).step_by((n / 6).max(1)) {
                let mut bump = |delta: f64| -> f64 {
                    let mut m = model.clone();
                    if let Layer::Conv2d { weight, .. } | Layer::Dense { weight, .. } =
                        &mut m.layers_mut()[li]
                    {
                        weight.data_mut()[i] += delta;
                    }
                    m.loss(&batch[0].0, batch[0].1).unwrap()
                };
                let fd = (bump(h) - bump(-h)) / (2.0 * h);
                let an = g.weight.data()[i];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
                assert!(rel < 1e-6, "layer {li} coord {i}: fd {fd} an {an}");
            }
        }
    }
}
