//! Two-layer LSTM regression network mapping short windows of standardized
//! 9-channel sensor vectors to the three attitude angles.
//!
//! The network is written out explicitly — gate weights, unrolled forward
//! pass, reverse-mode backpropagation through time, Adam updates — so the
//! streaming retrainer can manipulate weights directly and the gradients
//! can be checked against finite differences.
//!
//! Gate equations per cell step:
//!
//! ```text
//! i = σ(Wi x + Ui h + bi)      f = σ(Wf x + Uf h + bf)
//! g = tanh(Wg x + Ug h + bg)   o = σ(Wo x + Uo h + bo)
//! c' = f ⊙ c + i ⊙ g           h' = o ⊙ tanh(c')
//! ```
//!
//! The prediction head is linear; raw outputs are radians and are wrapped
//! only at reporting time.

mod backprop;
mod persist;
mod train;

pub use backprop::{batch_loss, loss_and_gradients, NetworkGrads};
pub use persist::{load_weights, save_weights};
pub use train::{global_grad_norm, optimizer_step, train, AdamState, TrainConfig};

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{ChannelStats, CHANNELS};

/// Output dimension: roll, pitch, yaw.
pub const OUTPUTS: usize = 3;
/// Window length used throughout the pipeline: previous and current sample.
pub const TIME_STEPS: usize = 2;

#[derive(Debug, Error)]
pub enum LstmError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported weight file version {found:?}")]
    Version { found: String },
    #[error("corrupt weight file at line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

/// Weights of one gate: input map `w`, recurrent map `u`, bias `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub w: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl GateParams {
    fn zeros(hidden: usize, input: usize) -> Self {
        Self {
            w: DMatrix::zeros(hidden, input),
            u: DMatrix::zeros(hidden, hidden),
            b: DVector::zeros(hidden),
        }
    }
}

/// One LSTM layer: the four gates in the fixed order input, forget,
/// candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub input_gate: GateParams,
    pub forget_gate: GateParams,
    pub candidate: GateParams,
    pub output_gate: GateParams,
}

impl LstmLayerParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        Self {
            input_gate: GateParams::zeros(hidden, input),
            forget_gate: GateParams::zeros(hidden, input),
            candidate: GateParams::zeros(hidden, input),
            output_gate: GateParams::zeros(hidden, input),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.input_gate.w.nrows()
    }

    pub fn input_size(&self) -> usize {
        self.input_gate.w.ncols()
    }

    pub fn gates(&self) -> [&GateParams; 4] {
        [
            &self.input_gate,
            &self.forget_gate,
            &self.candidate,
            &self.output_gate,
        ]
    }

    pub fn gates_mut(&mut self) -> [&mut GateParams; 4] {
        [
            &mut self.input_gate,
            &mut self.forget_gate,
            &mut self.candidate,
            &mut self.output_gate,
        ]
    }

    fn validate(&self, name: &str) -> Result<(), LstmError> {
        let hidden = self.hidden_size();
        let input = self.input_size();
        if hidden == 0 || input == 0 {
            return Err(LstmError::Shape(format!("{name}: empty dimensions")));
        }
        for (gate, g) in ["input", "forget", "candidate", "output"]
            .iter()
            .zip(self.gates())
        {
            if g.w.shape() != (hidden, input)
                || g.u.shape() != (hidden, hidden)
                || g.b.len() != hidden
            {
                return Err(LstmError::Shape(format!(
                    "{name}.{gate}: inconsistent gate shapes"
                )));
            }
            if g.w.iter().chain(g.u.iter()).chain(g.b.iter()).any(|v| !v.is_finite()) {
                return Err(LstmError::Shape(format!("{name}.{gate}: non-finite weight")));
            }
        }
        Ok(())
    }
}

/// The full 9-input → 3-output network plus the frozen input statistics it
/// was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmNetwork {
    pub layer1: LstmLayerParams,
    pub layer2: LstmLayerParams,
    pub head_w: DMatrix<f64>,
    pub head_b: DVector<f64>,
    pub input_stats: ChannelStats,
}

impl LstmNetwork {
    /// Seeded initialization: weights uniform in ±1/√fan_in, forget-gate
    /// bias +1, all other biases 0. Tensors are filled in the fixed
    /// parameter order, each in column-major element order.
    pub fn new(input_size: usize, hidden1: usize, hidden2: usize, seed: u64) -> Self {
        assert!(input_size > 0 && hidden1 > 0 && hidden2 > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self {
            layer1: LstmLayerParams::zeros(hidden1, input_size),
            layer2: LstmLayerParams::zeros(hidden2, hidden1),
            head_w: DMatrix::zeros(OUTPUTS, hidden2),
            head_b: DVector::zeros(OUTPUTS),
            input_stats: ChannelStats::identity(),
        };
        for layer in [&mut net.layer1, &mut net.layer2] {
            for gate in layer.gates_mut() {
                init_uniform(&mut gate.w, &mut rng);
                init_uniform(&mut gate.u, &mut rng);
            }
            layer.forget_gate.b.fill(1.0);
        }
        init_uniform(&mut net.head_w, &mut rng);
        net
    }

    /// Standard architecture for the 9-channel pipeline.
    pub fn with_hidden(hidden1: usize, hidden2: usize, seed: u64) -> Self {
        Self::new(CHANNELS, hidden1, hidden2, seed)
    }

    pub fn input_size(&self) -> usize {
        self.layer1.input_size()
    }

    pub fn hidden1(&self) -> usize {
        self.layer1.hidden_size()
    }

    pub fn hidden2(&self) -> usize {
        self.layer2.hidden_size()
    }

    pub fn validate(&self) -> Result<(), LstmError> {
        self.layer1.validate("layer1")?;
        self.layer2.validate("layer2")?;
        if self.layer2.input_size() != self.layer1.hidden_size() {
            return Err(LstmError::Shape(format!(
                "layer2 expects {} inputs but layer1 emits {}",
                self.layer2.input_size(),
                self.layer1.hidden_size()
            )));
        }
        if self.head_w.shape() != (OUTPUTS, self.layer2.hidden_size()) {
            return Err(LstmError::Shape(format!(
                "head must be {OUTPUTS}×{}, found {:?}",
                self.layer2.hidden_size(),
                self.head_w.shape()
            )));
        }
        if self.head_b.len() != OUTPUTS {
            return Err(LstmError::Shape(format!(
                "head bias must have length {OUTPUTS}"
            )));
        }
        if self
            .head_w
            .iter()
            .chain(self.head_b.iter())
            .any(|v| !v.is_finite())
        {
            return Err(LstmError::Shape("non-finite head weight".into()));
        }
        Ok(())
    }

    /// All trainable tensors in the fixed traversal order shared by the
    /// optimizer and the weight file: per layer the gates (input, forget,
    /// candidate, output) each as w, u, b; then head_w and head_b.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(26);
        for layer in [&self.layer1, &self.layer2] {
            for gate in layer.gates() {
                out.push(gate.w.as_slice());
                out.push(gate.u.as_slice());
                out.push(gate.b.as_slice());
            }
        }
        out.push(self.head_w.as_slice());
        out.push(self.head_b.as_slice());
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(26);
        let Self {
            layer1,
            layer2,
            head_w,
            head_b,
            ..
        } = self;
        for layer in [layer1, layer2] {
            for gate in layer.gates_mut() {
                out.push(gate.w.as_mut_slice());
                out.push(gate.u.as_mut_slice());
                out.push(gate.b.as_mut_slice());
            }
        }
        out.push(head_w.as_mut_slice());
        out.push(head_b.as_mut_slice());
        out
    }
}

fn init_uniform(m: &mut DMatrix<f64>, rng: &mut ChaCha8Rng) {
    let bound = 1.0 / (m.ncols() as f64).sqrt();
    for v in m.as_mut_slice() {
        *v = rng.random_range(-bound..bound);
    }
}

/// Standardized sensor vectors for the unrolled steps, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct InputWindow {
    pub steps: Vec<DVector<f64>>,
}

impl InputWindow {
    /// The usual two-step window: sample at t−1, then at t.
    pub fn from_channel_pair(prev: [f64; CHANNELS], curr: [f64; CHANNELS]) -> Self {
        Self {
            steps: vec![
                DVector::from_row_slice(&prev),
                DVector::from_row_slice(&curr),
            ],
        }
    }
}

/// One training example: a window and its target angles (radians).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub window: InputWindow,
    pub target: Vector3<f64>,
}

/// Intermediate values of one cell step, retained for backpropagation.
#[derive(Debug, Clone)]
pub struct CellCache {
    pub x: DVector<f64>,
    pub h_prev: DVector<f64>,
    pub c_prev: DVector<f64>,
    pub i: DVector<f64>,
    pub f: DVector<f64>,
    pub g: DVector<f64>,
    pub o: DVector<f64>,
    pub c_next: DVector<f64>,
    pub tanh_c_next: DVector<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn gate_preactivation(gate: &GateParams, x: &DVector<f64>, h: &DVector<f64>) -> DVector<f64> {
    let mut pre = gate.b.clone();
    pre.gemv(1.0, &gate.w, x, 1.0);
    pre.gemv(1.0, &gate.u, h, 1.0);
    pre
}

/// One LSTM cell step.
pub fn cell_forward(
    params: &LstmLayerParams,
    x: &DVector<f64>,
    h: &DVector<f64>,
    c: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>, CellCache), LstmError> {
    if x.len() != params.input_size() {
        return Err(LstmError::Shape(format!(
            "cell expects {} inputs, got {}",
            params.input_size(),
            x.len()
        )));
    }
    if h.len() != params.hidden_size() || c.len() != params.hidden_size() {
        return Err(LstmError::Shape(format!(
            "cell state must have length {}",
            params.hidden_size()
        )));
    }
    let i = gate_preactivation(&params.input_gate, x, h).map(sigmoid);
    let f = gate_preactivation(&params.forget_gate, x, h).map(sigmoid);
    let g = gate_preactivation(&params.candidate, x, h).map(f64::tanh);
    let o = gate_preactivation(&params.output_gate, x, h).map(sigmoid);
    let c_next = f.component_mul(c) + i.component_mul(&g);
    let tanh_c_next = c_next.map(f64::tanh);
    let h_next = o.component_mul(&tanh_c_next);
    let cache = CellCache {
        x: x.clone(),
        h_prev: h.clone(),
        c_prev: c.clone(),
        i,
        f,
        g,
        o,
        c_next: c_next.clone(),
        tanh_c_next,
    };
    Ok((h_next, c_next, cache))
}

/// Forward trace of a whole window, one cache per layer per step.
pub struct ForwardTrace {
    pub layer1: Vec<CellCache>,
    pub layer2: Vec<CellCache>,
    pub h2_final: DVector<f64>,
}

pub(crate) fn network_forward_traced(
    net: &LstmNetwork,
    window: &InputWindow,
) -> Result<(Vector3<f64>, ForwardTrace), LstmError> {
    if window.steps.is_empty() {
        return Err(LstmError::Shape("window has no steps".into()));
    }
    let mut h1 = DVector::zeros(net.hidden1());
    let mut c1 = DVector::zeros(net.hidden1());
    let mut h2 = DVector::zeros(net.hidden2());
    let mut c2 = DVector::zeros(net.hidden2());
    let mut trace = ForwardTrace {
        layer1: Vec::with_capacity(window.steps.len()),
        layer2: Vec::with_capacity(window.steps.len()),
        h2_final: DVector::zeros(net.hidden2()),
    };
    for x in &window.steps {
        let (h1_next, c1_next, cache1) = cell_forward(&net.layer1, x, &h1, &c1)?;
        let (h2_next, c2_next, cache2) = cell_forward(&net.layer2, &h1_next, &h2, &c2)?;
        h1 = h1_next;
        c1 = c1_next;
        h2 = h2_next;
        c2 = c2_next;
        trace.layer1.push(cache1);
        trace.layer2.push(cache2);
    }
    let mut pred = net.head_b.clone();
    pred.gemv(1.0, &net.head_w, &h2, 1.0);
    trace.h2_final = h2;
    Ok((Vector3::new(pred[0], pred[1], pred[2]), trace))
}

/// Unrolls both layers over the window from zero initial state and applies
/// the linear head to the final hidden vector. Outputs are radians,
/// unwrapped.
pub fn network_forward(
    net: &LstmNetwork,
    window: &InputWindow,
) -> Result<Vector3<f64>, LstmError> {
    network_forward_traced(net, window).map(|(pred, _)| pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn small_window(seed: u64, input: usize) -> InputWindow {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        InputWindow {
            steps: (0..TIME_STEPS)
                .map(|_| DVector::from_fn(input, |_, _| rng.random_range(-1.0..1.0)))
                .collect(),
        }
    }

    #[test]
    fn zero_network_propagates_zero_hidden_state() {
        let params = LstmLayerParams::zeros(4, 3);
        let x = DVector::zeros(3);
        let h = DVector::zeros(4);
        let c = DVector::zeros(4);
        let (h_next, c_next, cache) = cell_forward(&params, &x, &h, &c).unwrap();
        // o = σ(0) = 0.5 but tanh(c') = 0, so h' = 0
        assert!(h_next.iter().all(|v| *v == 0.0));
        assert!(c_next.iter().all(|v| *v == 0.0));
        assert!(cache.o.iter().all(|v| *v == 0.5));
    }

    #[test]
    fn saturated_gates_preserve_memory() {
        let mut params = LstmLayerParams::zeros(4, 3);
        params.forget_gate.b.fill(30.0); // f → 1
        params.input_gate.b.fill(-30.0); // i → 0
        let x = DVector::from_row_slice(&[0.3, -0.2, 0.9]);
        let h = DVector::from_row_slice(&[0.1, 0.2, -0.1, 0.4]);
        let c = DVector::from_row_slice(&[0.5, -0.7, 1.2, 0.0]);
        let (_, c_next, _) = cell_forward(&params, &x, &h, &c).unwrap();
        for (next, prev) in c_next.iter().zip(c.iter()) {
            assert!((next - prev).abs() < 1e-10, "{next} vs {prev}");
        }
    }

    #[test]
    fn cell_matches_scalar_reimplementation() {
        // independent straight-line scalar oracle
        let hidden = 3;
        let input = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-0.8..0.8)).collect()
        };
        let mut params = LstmLayerParams::zeros(hidden, input);
        for gate in params.gates_mut() {
            gate.w = DMatrix::from_row_slice(hidden, input, &draw(hidden * input));
            gate.u = DMatrix::from_row_slice(hidden, hidden, &draw(hidden * hidden));
            gate.b = DVector::from_row_slice(&draw(hidden));
        }
        let x = draw(input);
        let h = draw(hidden);
        let c = draw(hidden);

        let scalar_gate = |g: &GateParams, row: usize| -> f64 {
            let mut acc = g.b[row];
            for col in 0..input {
                acc += g.w[(row, col)] * x[col];
            }
            for col in 0..hidden {
                acc += g.u[(row, col)] * h[col];
            }
            acc
        };
        let (h_next, c_next, _) = cell_forward(
            &params,
            &DVector::from_row_slice(&x),
            &DVector::from_row_slice(&h),
            &DVector::from_row_slice(&c),
        )
        .unwrap();
        for row in 0..hidden {
            let i = sigmoid(scalar_gate(&params.input_gate, row));
            let f = sigmoid(scalar_gate(&params.forget_gate, row));
            let g = scalar_gate(&params.candidate, row).tanh();
            let o = sigmoid(scalar_gate(&params.output_gate, row));
            let c_new = f * c[row] + i * g;
            let h_new = o * c_new.tanh();
            assert!((c_next[row] - c_new).abs() < 1e-12);
            assert!((h_next[row] - h_new).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_rejects_shape_mismatch() {
        let params = LstmLayerParams::zeros(4, 3);
        let err = cell_forward(
            &params,
            &DVector::zeros(5),
            &DVector::zeros(4),
            &DVector::zeros(4),
        );
        assert!(matches!(err, Err(LstmError::Shape(_))));
    }

    #[test]
    fn zero_weight_network_outputs_head_bias() {
        let mut net = LstmNetwork::new(9, 4, 4, 0);
        for s in net.param_slices_mut() {
            s.fill(0.0);
        }
        net.head_b = DVector::from_row_slice(&[0.1, -0.2, 0.3]);
        let out = network_forward(&net, &small_window(1, 9)).unwrap();
        assert_eq!(out, Vector3::new(0.1, -0.2, 0.3));
    }

    #[test]
    fn duplicated_step_is_finite() {
        let net = LstmNetwork::new(9, 6, 5, 3);
        let mut window = small_window(2, 9);
        window.steps[0] = window.steps[1].clone();
        let out = network_forward(&net, &window).unwrap();
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn previous_step_influences_output() {
        let net = LstmNetwork::new(9, 6, 5, 4);
        let window = small_window(5, 9);
        let base = network_forward(&net, &window).unwrap();
        let mut perturbed = window.clone();
        perturbed.steps[0][0] += 0.5;
        let out = network_forward(&net, &perturbed).unwrap();
        assert_ne!(base, out, "recurrent path is dead");
    }

    #[test]
    fn initialization_is_seeded_and_shaped() {
        let a = LstmNetwork::with_hidden(8, 8, 11);
        let b = LstmNetwork::with_hidden(8, 8, 11);
        let c = LstmNetwork::with_hidden(8, 8, 12);
        assert_eq!(a, b);
        assert_ne!(a, c);
        a.validate().unwrap();
        assert_eq!(a.param_slices().len(), 26);
        // forget bias starts open
        assert!(a.layer1.forget_gate.b.iter().all(|v| *v == 1.0));
        assert!(a.layer1.input_gate.b.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn validate_rejects_broken_chains() {
        let mut net = LstmNetwork::new(9, 4, 4, 0);
        net.head_w = DMatrix::zeros(OUTPUTS, 7);
        assert!(matches!(net.validate(), Err(LstmError::Shape(_))));

        let mut net = LstmNetwork::new(9, 4, 4, 0);
        net.layer2 = LstmLayerParams::zeros(4, 9);
        assert!(net.validate().is_err());
    }
}
