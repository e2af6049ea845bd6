use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{encode_features, Dataset, Example, Mlp, Split, FEATURE_COUNT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Hidden layer widths; one to three layers.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: vec![100, 100],
            learning_rate: 1e-3,
            max_epochs: 500,
            patience: 20,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub train_rmse: f64,
    pub val_rmse: f64,
    pub test_rmse: f64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Root-mean-squared error of clamped predictions against labels.
pub fn rmse<'a>(net: &Mlp, examples: impl IntoIterator<Item = &'a Example>) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for e in examples {
        let x = encode_features(&e.profile, &e.offer);
        let pred = net.predict(&x).expect("feature width matches").value();
        sum += (pred - e.label as f64).powi(2);
        count += 1;
    }
    (sum / count.max(1) as f64).sqrt()
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Trains the satisfaction network with minibatch Adam on mean squared
/// error, keeping the weights from the best validation epoch.
pub fn train_mlp(data: &Dataset, config: &TrainConfig) -> Result<(Mlp, TrainReport)> {
    if data.len() < 100 {
        return Err(Error::input(format!(
            "training needs at least 100 examples, got {}",
            data.len()
        )));
    }
    if config.hidden.is_empty() || config.hidden.len() > 3 {
        return Err(Error::input(
            "between one and three hidden layers are supported",
        ));
    }
    if config.batch_size == 0 || config.max_epochs == 0 {
        return Err(Error::input("batch size and epoch budget must be positive"));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(Error::input("learning rate must be positive"));
    }
    for split in [Split::Train, Split::Validation, Split::Test] {
        if data.split(split).next().is_none() {
            return Err(Error::input(format!("{split:?} split is empty")));
        }
    }

    let train: Vec<([f64; FEATURE_COUNT], f64)> = data
        .split(Split::Train)
        .map(|e| (encode_features(&e.profile, &e.offer), e.label as f64))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dims = vec![FEATURE_COUNT];
    dims.extend(&config.hidden);
    dims.push(1);
    let mut net = Mlp::random(&dims, &mut rng)?;
    let mean_label = train.iter().map(|(_, y)| y).sum::<f64>() / train.len() as f64;
    net.layers_mut().last_mut().unwrap().biases[0] = mean_label;

    let mut params = net.to_flat();
    let mut adam = Adam::new(params.len());
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best = (
        rmse(&net, data.split(Split::Validation)),
        net.clone(),
        0usize,
    );
    let mut since_best = 0;
    let mut epochs_run = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        epochs_run = epoch;
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[f64], f64)> = chunk
                .iter()
                .map(|&i| (&train[i].0[..], train[i].1))
                .collect();
            let (loss, grad) = net.loss_and_gradient(&batch);
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "loss became non-finite in epoch {epoch}"
                )));
            }
            adam.update(&mut params, &grad.to_flat(), config.learning_rate);
            net.set_from_flat(&params)?;
        }

        let val = rmse(&net, data.split(Split::Validation));
        if !val.is_finite() {
            return Err(Error::Training(format!(
                "validation error non-finite in epoch {epoch}"
            )));
        }
        if val < best.0 {
            best = (val, net.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let (val_rmse, net, best_epoch) = best;
    let report = TrainReport {
        train_rmse: rmse(&net, data.split(Split::Train)),
        val_rmse,
        test_rmse: rmse(&net, data.split(Split::Test)),
        epochs_run,
        best_epoch,
        stopped_early,
    };
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::satisfaction::{generate_synthetic_dataset, EconParams};

    #[test]
    fn constant_labels_are_learned() {
        let base = generate_synthetic_dataset(300, &EconParams::default(), 3).unwrap();
        let rows = base
            .examples()
            .iter()
            .map(|e| (e.profile, e.offer, 5u8))
            .collect();
        let data = Dataset::from_labelled(rows).unwrap();
        let config = TrainConfig {
            hidden: vec![16],
            max_epochs: 400,
            patience: 30,
            ..Default::default()
        };
        let (_, report) = train_mlp(&data, &config).unwrap();
        assert!(report.test_rmse < 0.05, "{report:?}");
    }

    #[test]
    fn deterministic_per_seed() {
        let data = generate_synthetic_dataset(400, &EconParams::default(), 7).unwrap();
        let config = TrainConfig {
            hidden: vec![8, 8],
            max_epochs: 5,
            ..Default::default()
        };
        let (a, ra) = train_mlp(&data, &config).unwrap();
        let (b, rb) = train_mlp(&data, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn rejects_small_or_misconfigured_runs() {
        let small = generate_synthetic_dataset(50, &EconParams::default(), 1).unwrap();
        assert!(matches!(
            train_mlp(&small, &TrainConfig::default()),
            Err(Error::Input(_))
        ));
        let data = generate_synthetic_dataset(200, &EconParams::default(), 1).unwrap();
        let deep = TrainConfig {
            hidden: vec![4; 4],
            ..Default::default()
        };
        assert!(train_mlp(&data, &deep).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let data = generate_synthetic_dataset(200, &EconParams::default(), 1).unwrap();
        let config = TrainConfig {
            hidden: vec![8],
            learning_rate: 1e300,
            max_epochs: 50,
            ..Default::default()
        };
        assert!(matches!(train_mlp(&data, &config), Err(Error::Training(_))));
    }
}
