use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_training_data, nll_loss_grad, train_validation_split, EarlyStopping, FeatureMatrix, Prediction, SavedModel,
    StopDecision, Surrogate, SurrogateError, TrainConfig, TrainMode, VARIANCE_FLOOR,
};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams { hidden: vec![256, 128], learning_rate: 5e-4, batch_size: 32, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Fully connected layer, weights stored input-major (`w[i * out + j]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Layer {
    fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / inputs.max(1) as f64).sqrt();
        let w = (0..inputs * outputs).map(|_| rng.random_range(-bound..bound)).collect();
        Layer { inputs, outputs, w, b: vec![0.0; outputs] }
    }

    fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Scaling {
    /// Per-column centre and scale for dense inputs; empty for bit inputs.
    input_mean: Vec<f64>,
    input_scale: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Network {
    mode: TrainMode,
    n_features: usize,
    binary: bool,
    layers: Vec<Layer>,
    scaling: Scaling,
}

enum Input {
    Ones(Vec<u32>),
    Dense(Vec<f64>),
}

impl Network {
    fn input(&self, x: &FeatureMatrix, row: usize) -> Input {
        if self.binary {
            Input::Ones(x.row_ones(row))
        } else {
            let s = &self.scaling;
            Input::Dense(
                x.dense_row(row)
                    .iter()
                    .enumerate()
                    .map(|(c, &v)| (f64::from(v) - s.input_mean[c]) / s.input_scale[c])
                    .collect(),
            )
        }
    }

    /// Pre-activation outputs of every layer.
    fn forward(&self, input: &Input) -> Vec<Vec<f64>> {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = layer.b.clone();
            if li == 0 {
                match input {
                    Input::Ones(ones) => {
                        for &i in ones {
                            let row = &layer.w[i as usize * layer.outputs..(i as usize + 1) * layer.outputs];
                            z.iter_mut().zip(row).for_each(|(a, w)| *a += w);
                        }
                    }
                    Input::Dense(v) => axpy_rows(&mut z, &layer.w, v.iter().copied()),
                }
            } else {
                let prev = acts[li - 1].iter().map(|&a| a.max(0.0));
                axpy_rows(&mut z, &layer.w, prev);
            }
            acts.push(z);
        }
        acts
    }

    /// `(mean, log_var)` on the standardized target scale.
    fn head(out: &[f64]) -> (f64, f64) {
        (out[0], out.get(1).copied().unwrap_or(0.0))
    }

    fn loss_and_grad(&self, out: &[f64], y: f64) -> (f64, Vec<f64>) {
        let (mean, log_var) = Self::head(out);
        match self.mode {
            TrainMode::Mse => {
                let r = mean - y;
                (0.5 * r * r, vec![r])
            }
            TrainMode::Nll => {
                let (loss, dm, ds) = nll_loss_grad(y, mean, log_var);
                (loss, vec![dm, ds])
            }
        }
    }

    /// Accumulate the gradient of one sample into `grads` (same layout as the layers).
    fn backward(&self, input: &Input, acts: &[Vec<f64>], d_out: Vec<f64>, grads: &mut [Layer]) {
        let mut delta = d_out;
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let g = &mut grads[li];
            g.b.iter_mut().zip(&delta).for_each(|(gb, d)| *gb += d);
            if li == 0 {
                match input {
                    Input::Ones(ones) => {
                        for &i in ones {
                            let row = &mut g.w[i as usize * layer.outputs..(i as usize + 1) * layer.outputs];
                            row.iter_mut().zip(&delta).for_each(|(gw, d)| *gw += d);
                        }
                    }
                    Input::Dense(v) => {
                        for (i, &xi) in v.iter().enumerate() {
                            let row = &mut g.w[i * layer.outputs..(i + 1) * layer.outputs];
                            row.iter_mut().zip(&delta).for_each(|(gw, d)| *gw += xi * d);
                        }
                    }
                }
                break;
            }
            let prev = &acts[li - 1];
            let mut next = vec![0.0; layer.inputs];
            for (i, &z) in prev.iter().enumerate() {
                let a = z.max(0.0);
                let row_w = &layer.w[i * layer.outputs..(i + 1) * layer.outputs];
                if a != 0.0 {
                    let row = &mut g.w[i * layer.outputs..(i + 1) * layer.outputs];
                    row.iter_mut().zip(&delta).for_each(|(gw, d)| *gw += a * d);
                }
                if z > 0.0 {
                    next[i] = row_w.iter().zip(&delta).map(|(w, d)| w * d).sum();
                }
            }
            delta = next;
        }
    }

    fn predict_row(&self, x: &FeatureMatrix, row: usize) -> Prediction {
        let acts = self.forward(&self.input(x, row));
        let (mean, log_var) = Self::head(acts.last().expect("at least one layer"));
        let s = &self.scaling;
        let variance = match self.mode {
            TrainMode::Mse => 0.0,
            TrainMode::Nll => (log_var.exp().max(VARIANCE_FLOOR) * s.y_scale * s.y_scale).max(VARIANCE_FLOOR),
        };
        Prediction { mean: mean * s.y_scale + s.y_mean, variance }
    }

    fn mean_loss(&self, inputs: &[Input], targets: &[f64]) -> f64 {
        // collect before summing so the reduction order is fixed
        let losses: Vec<f64> = inputs
            .par_iter()
            .zip(targets)
            .map(|(inp, &y)| self.loss_and_grad(self.forward(inp).last().expect("layer"), y).0)
            .collect();
        losses.iter().sum::<f64>() / targets.len() as f64
    }
}

/// `z[j] += Σ_i v_i · w[i * out + j]`
fn axpy_rows(z: &mut [f64], w: &[f64], v: impl Iterator<Item = f64>) {
    let out = z.len();
    for (i, vi) in v.enumerate() {
        if vi != 0.0 {
            z.iter_mut().zip(&w[i * out..(i + 1) * out]).for_each(|(a, wij)| *a += vi * wij);
        }
    }
}

struct Adam {
    m: Vec<Layer>,
    v: Vec<Layer>,
    t: i32,
}

impl Adam {
    fn new(layers: &[Layer]) -> Self {
        let zeros = zeroed(layers);
        Adam { m: zeros.clone(), v: zeros, t: 0 }
    }

    fn step(&mut self, layers: &mut [Layer], grads: &[Layer], p: &MlpParams) {
        self.t += 1;
        let c1 = 1.0 - p.beta1.powi(self.t);
        let c2 = 1.0 - p.beta2.powi(self.t);
        let update = |w: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            w.par_chunks_mut(4096)
                .zip(g.par_chunks(4096))
                .zip(m.par_chunks_mut(4096))
                .zip(v.par_chunks_mut(4096))
                .for_each(|(((w, g), m), v)| {
                    for k in 0..w.len() {
                        m[k] = p.beta1 * m[k] + (1.0 - p.beta1) * g[k];
                        v[k] = p.beta2 * v[k] + (1.0 - p.beta2) * g[k] * g[k];
                        w[k] -= p.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + p.epsilon);
                    }
                });
        };
        for (li, layer) in layers.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[li], &mut self.v[li]);
            update(&mut layer.w, &grads[li].w, &mut m.w, &mut v.w);
            update(&mut layer.b, &grads[li].b, &mut m.b, &mut v.b);
        }
    }
}

fn zeroed(layers: &[Layer]) -> Vec<Layer> {
    layers
        .iter()
        .map(|l| Layer { inputs: l.inputs, outputs: l.outputs, w: vec![0.0; l.w.len()], b: vec![0.0; l.b.len()] })
        .collect()
}

fn mean_and_scale(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 1e-12 { sd } else { 1.0 })
}

/// Feed-forward regressor with ReLU hidden layers.
///
/// The output head has width 1 (mean) under [`TrainMode::Mse`] and width 2
/// (mean, log-variance) under [`TrainMode::Nll`]. Targets are standardized on
/// the training split; dense inputs are z-scored per column. Training uses
/// Adam on shuffled minibatches with early stopping on the validation split,
/// restoring the best-epoch weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    params: MlpParams,
    network: Option<Network>,
    best_epoch: Option<usize>,
}

impl Mlp {
    pub fn new(params: MlpParams) -> Self {
        Mlp { params, network: None, best_epoch: None }
    }

    pub fn params(&self) -> &MlpParams {
        &self.params
    }

    /// Layer widths from input to output, once trained.
    pub fn architecture(&self) -> Option<Vec<usize>> {
        self.network.as_ref().map(|n| {
            let mut widths = vec![n.n_features];
            widths.extend(n.layers.iter().map(|l| l.outputs));
            widths
        })
    }

    pub fn n_parameters(&self) -> usize {
        self.network.as_ref().map_or(0, |n| n.layers.iter().map(Layer::n_params).sum())
    }

    /// Epoch whose weights were restored after the last fit.
    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }
}

impl Surrogate for Mlp {
    fn name(&self) -> &'static str {
        "mlp"
    }

    fn fit(&mut self, x: &FeatureMatrix, y: &[f64], cfg: &TrainConfig) -> Result<(), SurrogateError> {
        check_training_data(x, y)?;
        cfg.validate()?;
        let p = &self.params;
        if p.hidden.is_empty() || p.hidden.contains(&0) || p.batch_size == 0 || p.learning_rate.is_nan() || p.learning_rate <= 0.0 {
            return Err(SurrogateError::InvalidConfig(
                "mlp needs non-empty hidden widths > 0, batch_size >= 1 and learning_rate > 0".into(),
            ));
        }
        let (train, val) = train_validation_split(x.rows(), cfg.split_fraction, derive_seed(cfg.seed, "mlp-split", 0));
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "mlp-init", 0));

        let binary = x.is_binary();
        let (input_mean, input_scale) = if binary {
            (Vec::new(), Vec::new())
        } else {
            (0..x.cols())
                .map(|c| mean_and_scale(train.iter().map(|&r| f64::from(x.value(r, c)))))
                .unzip()
        };
        let (y_mean, y_scale) = mean_and_scale(train.iter().map(|&r| y[r]));
        let out_width = match cfg.mode {
            TrainMode::Mse => 1,
            TrainMode::Nll => 2,
        };
        let mut widths = vec![x.cols()];
        widths.extend(&p.hidden);
        widths.push(out_width);
        let layers = widths.windows(2).map(|w| Layer::init(w[0], w[1], &mut rng)).collect();
        let mut net = Network {
            mode: cfg.mode,
            n_features: x.cols(),
            binary,
            layers,
            scaling: Scaling { input_mean, input_scale, y_mean, y_scale },
        };

        let standardize = |r: usize| (y[r] - y_mean) / y_scale;
        let train_inputs: Vec<Input> = train.iter().map(|&r| net.input(x, r)).collect();
        let train_y: Vec<f64> = train.iter().map(|&r| standardize(r)).collect();
        let val_inputs: Vec<Input> = val.iter().map(|&r| net.input(x, r)).collect();
        let val_y: Vec<f64> = val.iter().map(|&r| standardize(r)).collect();

        let mut adam = Adam::new(&net.layers);
        let mut stopper = EarlyStopping::new(cfg.patience);
        let mut best = net.layers.clone();
        let mut order: Vec<usize> = (0..train.len()).collect();
        for epoch in 1..=cfg.max_epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(p.batch_size) {
                let mut grads = zeroed(&net.layers);
                for &k in batch {
                    let acts = net.forward(&train_inputs[k]);
                    let (_, d_out) = net.loss_and_grad(acts.last().expect("layer"), train_y[k]);
                    net.backward(&train_inputs[k], &acts, d_out, &mut grads);
                }
                let scale = 1.0 / batch.len() as f64;
                for g in &mut grads {
                    g.w.iter_mut().chain(g.b.iter_mut()).for_each(|v| *v *= scale);
                }
                adam.step(&mut net.layers, &grads, p);
            }
            match stopper.observe(epoch, net.mean_loss(&val_inputs, &val_y)) {
                StopDecision::Improved => best.clone_from(&net.layers),
                StopDecision::Continue => {}
                StopDecision::Stop { .. } => break,
            }
        }
        net.layers = best;
        self.best_epoch = stopper.best_epoch();
        self.network = Some(net);
        Ok(())
    }

    fn predict(&self, x: &FeatureMatrix) -> Result<Vec<Prediction>, SurrogateError> {
        let net = self.network.as_ref().ok_or(SurrogateError::Untrained)?;
        if x.cols() != net.n_features {
            return Err(SurrogateError::DimensionMismatch { expected: net.n_features, found: x.cols() });
        }
        if x.is_binary() != net.binary {
            return Err(SurrogateError::InvalidConfig("feature storage differs from training".into()));
        }
        Ok((0..x.rows()).into_par_iter().map(|r| net.predict_row(x, r)).collect())
    }

    fn snapshot(&self) -> Option<SavedModel> {
        Some(SavedModel::Mlp(self.clone()))
    }
}
