//! POD-NN regression: a tanh multilayer perceptron from the parameter `y` to
//! the real and imaginary parts of the centered reduced coefficients.
//!
//! Parameters live in one flat vector so that Adam and the archive can treat
//! them uniformly. Layer `k` stores its `out × in` weight matrix row-major
//! followed by its bias.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::DofVector;
use crate::pod::{ReducedBasis, SnapshotMatrix};
use crate::sampling::SplitMix64;
use crate::transform::ParamPoint;

/// Hidden layer count and width. A network with `hidden_layers = h` is the
/// composition of `h + 1` affine maps with `tanh` between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub hidden_layers: usize,
    pub width: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            width: 30,
        }
    }
}

impl Architecture {
    pub fn widths(&self, inputs: usize, outputs: usize) -> Vec<usize> {
        let mut w = vec![inputs];
        w.extend(std::iter::repeat(self.width).take(self.hidden_layers));
        w.push(outputs);
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    params: Vec<f64>,
}

fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl Mlp {
    /// All weights and biases zero.
    pub fn zeros(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument(format!(
                "layer widths {widths:?} must have at least two positive entries"
            )));
        }
        let n = param_count(&widths);
        Ok(Self {
            widths,
            params: vec![0.0; n],
        })
    }

    /// Weights and biases of layer `k` drawn uniformly from
    /// `[-1/√fan_in, 1/√fan_in]`, layer by layer, weights before biases.
    pub fn random(widths: Vec<usize>, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(widths)?;
        let mut rng = SplitMix64::new(seed);
        let mut offset = 0;
        for k in 0..net.num_layers() {
            let (fan_in, fan_out) = (net.widths[k], net.widths[k + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_out * (fan_in + 1)] {
                *p = rng.uniform(-bound, bound);
            }
            offset += fan_out * (fan_in + 1);
        }
        Ok(net)
    }

    pub fn from_params(widths: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        let net = Self::zeros(widths)?;
        if params.len() != net.params.len() {
            return Err(Error::InvalidArgument(format!(
                "{} parameters for widths {:?} (expected {})",
                params.len(),
                net.widths,
                net.params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite network parameter".into()));
        }
        Ok(Self {
            widths: net.widths,
            params,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Number of affine maps.
    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Offsets of the weight block and bias block of layer `k`.
    fn layer_offsets(&self, k: usize) -> (usize, usize) {
        let before = param_count(&self.widths[..=k]);
        (before, before + self.widths[k + 1] * self.widths[k])
    }

    /// `(W_k, b_k)` as slices; `W_k` is row-major `out × in`.
    pub fn layer(&self, k: usize) -> (&[f64], &[f64]) {
        let (w, b) = self.layer_offsets(k);
        let out = self.widths[k + 1];
        (&self.params[w..b], &self.params[b..b + out])
    }

    fn affine(&self, k: usize, x: &[f64], out: &mut Vec<f64>) {
        let (w, b) = self.layer(k);
        let n_in = self.widths[k];
        out.clear();
        out.extend(b.iter().enumerate().map(|(i, bi)| {
            let row = &w[i * n_in..(i + 1) * n_in];
            row.iter().zip(x).fold(*bi, |acc, (wij, xj)| acc + wij * xj)
        }));
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        let mut z = Vec::new();
        for k in 0..self.num_layers() {
            self.affine(k, &a, &mut z);
            if k + 1 < self.num_layers() {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            std::mem::swap(&mut a, &mut z);
        }
        Ok(a)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::InvalidArgument(format!(
                "input of length {} for a network expecting {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Activations of every layer; the last entry is the output.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.widths.len());
        acts.push(x.to_vec());
        for k in 0..self.num_layers() {
            let mut z = Vec::new();
            self.affine(k, &acts[k], &mut z);
            if k + 1 < self.num_layers() {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        acts
    }

    /// Mean squared error and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, set: &TrainingSet, indices: &[usize]) -> Result<(f64, Vec<f64>)> {
        self.check_set(set)?;
        let mut grad = vec![0.0; self.params.len()];
        let scale = 2.0 / indices.len() as f64;
        let mut loss = 0.0;
        let last = self.num_layers() - 1;
        for &i in indices {
            let acts = self.trace(&set.inputs[i]);
            let mut delta: Vec<f64> = acts[last + 1]
                .iter()
                .zip(&set.targets[i])
                .map(|(f, t)| f - t)
                .collect();
            loss += delta.iter().map(|d| d * d).sum::<f64>();
            delta.iter_mut().for_each(|d| *d *= scale);
            for k in (0..=last).rev() {
                let (w_off, b_off) = self.layer_offsets(k);
                let n_in = self.widths[k];
                let a_prev = &acts[k];
                for (r, d) in delta.iter().enumerate() {
                    grad[b_off + r] += d;
                    for (c, a) in a_prev.iter().enumerate() {
                        grad[w_off + r * n_in + c] += d * a;
                    }
                }
                if k > 0 {
                    let w = &self.params[w_off..b_off];
                    delta = (0..n_in)
                        .map(|c| {
                            let back: f64 = delta.iter().enumerate().map(|(r, d)| w[r * n_in + c] * d).sum();
                            back * (1.0 - a_prev[c] * a_prev[c])
                        })
                        .collect();
                }
            }
        }
        Ok((loss / indices.len() as f64, grad))
    }

    /// Gradient of [`mse_loss`] over the whole set.
    pub fn gradient(&self, set: &TrainingSet) -> Result<Vec<f64>> {
        let all: Vec<usize> = (0..set.len()).collect();
        Ok(self.loss_and_gradient(set, &all)?.1)
    }

    fn check_set(&self, set: &TrainingSet) -> Result<()> {
        if set.is_empty() {
            return Err(Error::InvalidArgument("empty training set".into()));
        }
        if set.input_dim() != self.input_dim() || set.output_dim() != self.output_dim() {
            return Err(Error::InvalidArgument(format!(
                "training set maps R^{} to R^{} but the network maps R^{} to R^{}",
                set.input_dim(),
                set.output_dim(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        Ok(())
    }
}

/// Mean over samples of `‖t - f(y)‖²`.
pub fn mse_loss(net: &Mlp, set: &TrainingSet) -> Result<f64> {
    net.check_set(set)?;
    let mut total = 0.0;
    for (x, t) in set.inputs.iter().zip(&set.targets) {
        let f = net.forward(x)?;
        total += f.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(total / set.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl TrainingSet {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::InvalidArgument(format!(
                "{} inputs and {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let ragged = |rows: &[Vec<f64>]| rows.windows(2).any(|w| w[0].len() != w[1].len());
        if ragged(&inputs) || ragged(&targets) {
            return Err(Error::InvalidArgument("ragged training data".into()));
        }
        if inputs.iter().chain(&targets).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite training data".into()));
        }
        Ok(Self { inputs, targets })
    }

    /// Targets `(Re c, Im c)` with `c = V^H (u - ū)` for every snapshot.
    pub fn from_snapshots(snapshots: &SnapshotMatrix, basis: &ReducedBasis) -> Result<Self> {
        let inputs = snapshots.params.points.iter().map(|p| p.as_slice().to_vec()).collect();
        let targets = (0..snapshots.num_snapshots())
            .map(|i| Ok(split_complex(&basis.project(&snapshots.column(i))?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(inputs, targets)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.targets.first().map_or(0, Vec::len)
    }

    /// Keep only the target columns in `cols`.
    pub fn select_outputs(&self, cols: &[usize]) -> Self {
        Self {
            inputs: self.inputs.clone(),
            targets: self.targets.iter().map(|t| cols.iter().map(|&c| t[c]).collect()).collect(),
        }
    }
}

/// `(Re c_1..Re c_L, Im c_1..Im c_L)`.
pub fn split_complex(c: &DVector<Complex64>) -> Vec<f64> {
    c.iter().map(|z| z.re).chain(c.iter().map(|z| z.im)).collect()
}

pub fn join_complex(v: &[f64]) -> DVector<Complex64> {
    let l = v.len() / 2;
    DVector::from_iterator(l, (0..l).map(|j| Complex64::new(v[j], v[l + j])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    /// `None` means full batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    /// Train on per-output standardized targets and fold the scaling back
    /// into the last layer afterwards.
    pub standardize_outputs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            beta1: 0.8,
            beta2: 0.9,
            epsilon: 1e-8,
            epochs: 4000,
            batch_size: None,
            seed: 0,
            standardize_outputs: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("beta1 and beta2 must lie in (0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == Some(0) {
            return bad("batch_size must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u32,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut AdamState, config: &TrainConfig) {
    assert_eq!(params.len(), grad.len(), "parameter and gradient length differ");
    state.step += 1;
    let c1 = 1.0 - config.beta1.powi(state.step as i32);
    let c2 = 1.0 - config.beta2.powi(state.step as i32);
    for i in 0..params.len() {
        let g = grad[i];
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Mlp,
    /// Loss before every epoch's update, then the final loss.
    pub loss_history: Vec<f64>,
}

pub fn train(set: &TrainingSet, arch: Architecture, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if set.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let (shift, scale) = if config.standardize_outputs {
        output_statistics(set)
    } else {
        (vec![0.0; set.output_dim()], vec![1.0; set.output_dim()])
    };
    let scaled = TrainingSet {
        inputs: set.inputs.clone(),
        targets: set
            .targets
            .iter()
            .map(|t| t.iter().zip(&shift).zip(&scale).map(|((v, m), s)| (v - m) / s).collect())
            .collect(),
    };

    let widths = arch.widths(set.input_dim(), set.output_dim());
    let mut net = Mlp::random(widths, config.seed)?;
    let mut state = AdamState::new(net.params.len());
    let mut order: Vec<usize> = (0..set.len()).collect();
    let batch = config.batch_size.unwrap_or(set.len()).min(set.len());
    let mut shuffler = SplitMix64::new(config.seed ^ 0x5DEE_CE66_D1CE_4E5B);
    let mut history = Vec::with_capacity(config.epochs + 1);

    for epoch in 0..config.epochs {
        if batch < set.len() {
            shuffler.shuffle(&mut order);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let (loss, grad) = net.loss_and_gradient(&scaled, chunk)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training { epoch, loss });
            }
            epoch_loss += loss * chunk.len() as f64;
            adam_step(&mut net.params, &grad, &mut state, config);
        }
        history.push(epoch_loss / set.len() as f64);
    }
    let final_loss = mse_loss(&net, &scaled)?;
    if !final_loss.is_finite() {
        return Err(Error::Training {
            epoch: config.epochs,
            loss: final_loss,
        });
    }
    history.push(final_loss);

    if config.standardize_outputs {
        let last = net.num_layers() - 1;
        let (w_off, b_off) = net.layer_offsets(last);
        let n_in = net.widths[last];
        for (r, (m, s)) in shift.iter().zip(&scale).enumerate() {
            for p in &mut net.params[w_off + r * n_in..w_off + (r + 1) * n_in] {
                *p *= s;
            }
            net.params[b_off + r] = net.params[b_off + r] * s + m;
        }
    }
    Ok(TrainOutcome {
        network: net,
        loss_history: history,
    })
}

fn output_statistics(set: &TrainingSet) -> (Vec<f64>, Vec<f64>) {
    let n = set.len() as f64;
    let dim = set.output_dim();
    let mut mean = vec![0.0; dim];
    for t in &set.targets {
        mean.iter_mut().zip(t).for_each(|(m, v)| *m += v / n);
    }
    let mut std = vec![0.0; dim];
    for t in &set.targets {
        std.iter_mut().zip(t).zip(&mean).for_each(|((s, v), m)| *s += (v - m) * (v - m) / n);
    }
    let std = std.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
    (mean, std)
}

/// The trained regression model: one network emitting all `2L` outputs, or
/// one network per complex coefficient emitting `(Re c_j, Im c_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PodNn {
    networks: Vec<Mlp>,
    num_modes: usize,
    separate: bool,
}

impl PodNn {
    pub fn joint(network: Mlp) -> Result<Self> {
        if network.output_dim() % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "network output dimension {} is odd",
                network.output_dim()
            )));
        }
        Ok(Self {
            num_modes: network.output_dim() / 2,
            networks: vec![network],
            separate: false,
        })
    }

    pub fn separate(networks: Vec<Mlp>) -> Result<Self> {
        if networks.is_empty() || networks.iter().any(|n| n.output_dim() != 2) {
            return Err(Error::InvalidArgument(
                "separate networks must each have two outputs".into(),
            ));
        }
        if networks.windows(2).any(|w| w[0].input_dim() != w[1].input_dim()) {
            return Err(Error::InvalidArgument("networks disagree on input dimension".into()));
        }
        Ok(Self {
            num_modes: networks.len(),
            networks,
            separate: true,
        })
    }

    pub fn is_separate(&self) -> bool {
        self.separate
    }

    pub fn networks(&self) -> &[Mlp] {
        &self.networks
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn param_dim(&self) -> usize {
        self.networks[0].input_dim()
    }

    /// Train on `set`, whose targets are `(Re c, Im c)` for `L` modes.
    pub fn fit(set: &TrainingSet, arch: Architecture, config: &TrainConfig, separate: bool) -> Result<(Self, Vec<Vec<f64>>)> {
        let l = set.output_dim() / 2;
        if set.output_dim() % 2 != 0 {
            return Err(Error::InvalidArgument("odd target dimension".into()));
        }
        if separate && l > 0 {
            let mut nets = Vec::with_capacity(l);
            let mut histories = Vec::with_capacity(l);
            for j in 0..l {
                let cfg = TrainConfig {
                    seed: config.seed.wrapping_add(j as u64),
                    ..config.clone()
                };
                let out = train(&set.select_outputs(&[j, l + j]), arch, &cfg)?;
                nets.push(out.network);
                histories.push(out.loss_history);
            }
            Ok((Self::separate(nets)?, histories))
        } else {
            let out = train(set, arch, config)?;
            Ok((Self::joint(out.network)?, vec![out.loss_history]))
        }
    }

    /// Reduced coefficients `α + iβ` at `y`.
    pub fn predict_coefficients(&self, y: &ParamPoint) -> Result<DVector<Complex64>> {
        if !self.separate {
            return Ok(join_complex(&self.networks[0].forward(y.as_slice())?));
        }
        let mut c = DVector::zeros(self.num_modes);
        for (j, net) in self.networks.iter().enumerate() {
            let out = net.forward(y.as_slice())?;
            c[j] = Complex64::new(out[0], out[1]);
        }
        Ok(c)
    }

    /// `V (α + iβ) + ū`.
    pub fn predict_solution(&self, y: &ParamPoint, basis: &ReducedBasis) -> Result<DofVector> {
        basis.reconstruct(&self.predict_coefficients(y)?)
    }
}
