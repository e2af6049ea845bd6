use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::inference::CompiledMlp;
use super::{
    encode_features, PassengerProfile, RideOffer, SatisfactionModel, SatisfactionScore,
    CO_PASSENGER_FEATURE, FEATURE_COUNT,
};
use crate::error::{Error, Result};

/// Fully connected layer, weights row-major `[outputs][inputs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    #[inline]
    fn apply(&self, input: &[f64], output: &mut Vec<f64>) {
        output.clear();
        output.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.biases)
                .map(|(row, b)| dot(row, input) + b),
        );
    }
}

/// Dot product over eight independent partial sums, which lets the compiler
/// vectorise the loop.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let chunks = n / 8 * 8;
    for (ca, cb) in a[..chunks].chunks_exact(8).zip(b[..chunks].chunks_exact(8)) {
        for k in 0..8 {
            acc[k] += ca[k] * cb[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in a[chunks..].iter().zip(&b[chunks..]) {
        tail += x * y;
    }
    acc.iter().sum::<f64>() + tail
}

/// Feed-forward regressor: rectified hidden layers, one linear output.
#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
    /// Inference copy, built on first use and dropped on any weight change.
    compiled: OnceLock<CompiledMlp>,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Gradient of the batch loss, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub layers: Vec<DenseLayer>,
}

impl MlpGradient {
    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }
}

fn flatten(layers: &[DenseLayer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases))
        .copied()
        .collect()
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::input(
            "network needs at least an input and an output layer",
        ));
    }
    if dims.contains(&0) {
        return Err(Error::input("layer widths must be positive"));
    }
    if *dims.last().unwrap() != 1 {
        return Err(Error::input("network must have a single output"));
    }
    Ok(())
}

impl Mlp {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(Mlp {
            layers: dims
                .windows(2)
                .map(|w| DenseLayer::zeros(w[0], w[1]))
                .collect(),
            compiled: OnceLock::new(),
        })
    }

    /// He-normal weights, zero biases.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        for layer in &mut net.layers {
            let std = (2.0 / layer.inputs as f64).sqrt();
            let normal = Normal::new(0.0, std).unwrap();
            for w in &mut layer.weights {
                *w = normal.sample(rng);
            }
        }
        Ok(net)
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::input("network has no layers"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::input(format!("layer {i} has inconsistent shapes")));
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(Error::input(format!(
                    "layer {i} input width does not chain"
                )));
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(Error::input(format!("layer {i} has non-finite entries")));
            }
        }
        let net = Mlp {
            layers,
            compiled: OnceLock::new(),
        };
        check_dims(&net.dims())?;
        Ok(net)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        self.compiled = OnceLock::new();
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_from_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::input("parameter vector has the wrong length"));
        }
        self.compiled = OnceLock::new();
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = it.next().unwrap();
            }
        }
        Ok(())
    }

    /// Network output before clamping, in full double precision.
    pub fn forward_raw(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.input_dim() {
            return Err(Error::input(format!(
                "expected {} features, got {}",
                self.input_dim(),
                features.len()
            )));
        }
        Ok(self.forward_reference(features))
    }

    fn forward_reference(&self, features: &[f64]) -> f64 {
        let mut current = features.to_vec();
        let mut next = Vec::with_capacity(128);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&current, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut current, &mut next);
        }
        current[0]
    }

    /// Fast single-precision output used for all scoring.
    fn forward_fast(&self, features: &[f64]) -> f64 {
        self.compiled
            .get_or_init(|| CompiledMlp::new(&self.layers))
            .forward(features)
    }

    /// Clamped Likert prediction. Private rides (no co-passengers) bypass the
    /// network and score the neutral baseline.
    pub fn predict(&self, features: &[f64]) -> Result<SatisfactionScore> {
        if features.len() != self.input_dim() {
            return Err(Error::input(format!(
                "expected {} features, got {}",
                self.input_dim(),
                features.len()
            )));
        }
        if features.len() == FEATURE_COUNT && features[CO_PASSENGER_FEATURE] == 0.0 {
            return Ok(SatisfactionScore::BASELINE);
        }
        Ok(SatisfactionScore::new(self.forward_fast(features)))
    }

    /// Mean squared error of the raw output over a batch.
    pub fn loss(&self, batch: &[(&[f64], f64)]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|(x, y)| {
                let e = self.forward_reference(x) - y;
                e * e
            })
            .sum();
        total / batch.len() as f64
    }

    /// Batch MSE and its gradient by backpropagation.
    pub fn loss_and_gradient(&self, batch: &[(&[f64], f64)]) -> (f64, MlpGradient) {
        let mut grad = MlpGradient {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
                .collect(),
        };
        let scale = 1.0 / batch.len() as f64;
        let last = self.layers.len() - 1;
        let mut loss = 0.0;
        // activations[l] is the input to layer l.
        let mut activations: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len() + 1];
        let mut delta = Vec::new();
        let mut delta_prev = Vec::new();

        for (x, y) in batch {
            activations[0].clear();
            activations[0].extend_from_slice(x);
            for (l, layer) in self.layers.iter().enumerate() {
                let (head, tail) = activations.split_at_mut(l + 1);
                layer.apply(&head[l], &mut tail[0]);
                if l < last {
                    tail[0].iter_mut().for_each(|v| *v = v.max(0.0));
                }
            }
            let err = activations[last + 1][0] - y;
            loss += err * err * scale;

            delta.clear();
            delta.push(2.0 * err * scale);
            for l in (0..=last).rev() {
                let layer = &self.layers[l];
                let g = &mut grad.layers[l];
                let input = &activations[l];
                for (j, &d) in delta.iter().enumerate() {
                    g.biases[j] += d;
                    let row = &mut g.weights[j * layer.inputs..(j + 1) * layer.inputs];
                    for (gw, a) in row.iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
                if l > 0 {
                    delta_prev.clear();
                    delta_prev.resize(layer.inputs, 0.0);
                    for (j, &d) in delta.iter().enumerate() {
                        let row = &layer.weights[j * layer.inputs..(j + 1) * layer.inputs];
                        for (dp, w) in delta_prev.iter_mut().zip(row) {
                            *dp += w * d;
                        }
                    }
                    // Post-activation value is positive exactly where the unit was active.
                    for (dp, a) in delta_prev.iter_mut().zip(input) {
                        if *a <= 0.0 {
                            *dp = 0.0;
                        }
                    }
                    std::mem::swap(&mut delta, &mut delta_prev);
                }
            }
        }
        (loss, grad)
    }

    /// Text form: `mlp <d0> <d1> ...` then, per layer, one line per output
    /// row of weights followed by one line of biases.
    pub fn to_text(&self) -> String {
        let mut out = String::from("mlp");
        for d in self.dims() {
            write!(out, " {d}").unwrap();
        }
        out.push('\n');
        for l in &self.layers {
            for row in l.weights.chunks_exact(l.inputs) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            let line: Vec<String> = l.biases.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty model file"))?;
        let mut head = header.split_whitespace();
        if head.next() != Some("mlp") {
            return Err(Error::parse(1, "model file must start with `mlp`"));
        }
        let dims: Vec<usize> = head
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::parse(1, format!("invalid width `{t}`")))
            })
            .collect::<Result<_>>()?;
        check_dims(&dims).map_err(|e| Error::parse(1, e.to_string()))?;

        let mut values = Vec::new();
        let mut last_line = 1;
        for (i, line) in lines {
            last_line = i + 1;
            for tok in line.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::parse(i + 1, format!("invalid number `{tok}`")))?,
                );
            }
        }
        let mut net = Self::zeros(&dims)?;
        if values.len() != net.parameter_count() {
            return Err(Error::parse(
                last_line,
                format!(
                    "expected {} parameters, found {}",
                    net.parameter_count(),
                    values.len()
                ),
            ));
        }
        net.set_from_flat(&values)?;
        Self::from_layers(net.layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

impl SatisfactionModel for Mlp {
    fn score(&self, profile: &PassengerProfile, offer: &RideOffer) -> f64 {
        if offer.is_solo() {
            return SatisfactionScore::BASELINE.value();
        }
        let features = encode_features(profile, offer);
        SatisfactionScore::new(self.forward_fast(&features)).value()
    }
}
