//! Reverse-mode gradients through both layers and all unrolled steps.
//!
//! The loss is the mean over the batch and the three outputs of the squared
//! shortest-arc error, so targets close to ±π never produce 2π-sized
//! residuals. Its derivative with respect to a prediction is 2·e/(3·batch)
//! with e the wrapped residual; the wrap itself has unit slope almost
//! everywhere.

use nalgebra::{DVector, Vector3};

use crate::attitude::wrap;

use super::{
    network_forward_traced, CellCache, ForwardTrace, GateParams, LstmLayerParams, LstmNetwork,
    LstmError, TrainingPair, OUTPUTS,
};

/// Gradient (or moment) accumulator shaped exactly like the trainable part
/// of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGrads {
    pub layer1: LstmLayerParams,
    pub layer2: LstmLayerParams,
    pub head_w: nalgebra::DMatrix<f64>,
    pub head_b: DVector<f64>,
}

impl NetworkGrads {
    pub fn zeros_like(net: &LstmNetwork) -> Self {
        Self {
            layer1: LstmLayerParams::zeros(net.hidden1(), net.input_size()),
            layer2: LstmLayerParams::zeros(net.hidden2(), net.hidden1()),
            head_w: nalgebra::DMatrix::zeros(OUTPUTS, net.hidden2()),
            head_b: DVector::zeros(OUTPUTS),
        }
    }

    /// Same traversal order as [`LstmNetwork::param_slices`].
    pub fn slices(&self) -> Vec<&[f64]> {
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

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(26);
        let Self {
            layer1,
            layer2,
            head_w,
            head_b,
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

    fn reset(&mut self) {
        for s in self.slices_mut() {
            s.fill(0.0);
        }
    }

    fn accumulate(&mut self, other: &NetworkGrads) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
}

/// Backward step through one cached cell. Accumulates parameter gradients
/// and returns (dx, dh_prev, dc_prev).
fn cell_backward(
    params: &LstmLayerParams,
    cache: &CellCache,
    dh: &DVector<f64>,
    dc_in: &DVector<f64>,
    grads: &mut LstmLayerParams,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    // split dh into the output-gate path and the cell path
    let d_o = dh.component_mul(&cache.tanh_c_next);
    let dc = dc_in
        + dh.component_mul(&cache.o).zip_map(&cache.tanh_c_next, |d, t| d * (1.0 - t * t));

    let d_i = dc.component_mul(&cache.g);
    let d_f = dc.component_mul(&cache.c_prev);
    let d_g = dc.component_mul(&cache.i);
    let dc_prev = dc.component_mul(&cache.f);

    // pre-activation gradients: logistic gates use σ' = σ(1−σ),
    // the candidate uses tanh' = 1 − tanh²
    let dpre_i = d_i.zip_map(&cache.i, |d, s| d * s * (1.0 - s));
    let dpre_f = d_f.zip_map(&cache.f, |d, s| d * s * (1.0 - s));
    let dpre_g = d_g.zip_map(&cache.g, |d, t| d * (1.0 - t * t));
    let dpre_o = d_o.zip_map(&cache.o, |d, s| d * s * (1.0 - s));

    let mut dx = DVector::zeros(params.input_size());
    let mut dh_prev = DVector::zeros(params.hidden_size());
    let gate_grads: [(&GateParams, &mut GateParams, &DVector<f64>); 4] = {
        let [gi, gf, gg, go] = grads.gates_mut();
        [
            (&params.input_gate, gi, &dpre_i),
            (&params.forget_gate, gf, &dpre_f),
            (&params.candidate, gg, &dpre_g),
            (&params.output_gate, go, &dpre_o),
        ]
    };
    for (p, g, dpre) in gate_grads {
        g.w.ger(1.0, dpre, &cache.x, 1.0);
        g.u.ger(1.0, dpre, &cache.h_prev, 1.0);
        g.b += dpre;
        dx.gemv_tr(1.0, &p.w, dpre, 1.0);
        dh_prev.gemv_tr(1.0, &p.u, dpre, 1.0);
    }
    (dx, dh_prev, dc_prev)
}

fn backward_window(
    net: &LstmNetwork,
    trace: &ForwardTrace,
    dpred: &DVector<f64>,
    grads: &mut NetworkGrads,
) {
    let steps = trace.layer2.len();
    grads.head_w.ger(1.0, dpred, &trace.h2_final, 1.0);
    grads.head_b += dpred;

    // layer 2 backward through time, collecting the gradient that flows
    // into layer 1's hidden outputs
    let mut dh2 = net.head_w.tr_mul(dpred);
    let mut dc2 = DVector::zeros(net.hidden2());
    let mut dh1_per_step: Vec<DVector<f64>> = vec![DVector::zeros(net.hidden1()); steps];
    for t in (0..steps).rev() {
        let (dx, dh_prev, dc_prev) =
            cell_backward(&net.layer2, &trace.layer2[t], &dh2, &dc2, &mut grads.layer2);
        dh1_per_step[t] = dx;
        dh2 = dh_prev;
        dc2 = dc_prev;
    }

    let mut dh1 = DVector::zeros(net.hidden1());
    let mut dc1 = DVector::zeros(net.hidden1());
    for t in (0..steps).rev() {
        let total_dh = &dh1 + &dh1_per_step[t];
        let (_, dh_prev, dc_prev) =
            cell_backward(&net.layer1, &trace.layer1[t], &total_dh, &dc1, &mut grads.layer1);
        dh1 = dh_prev;
        dc1 = dc_prev;
    }
}

/// Wrapped squared-error loss of a batch together with gradients for every
/// parameter.
pub fn loss_and_gradients(
    net: &LstmNetwork,
    batch: &[&TrainingPair],
) -> Result<(f64, NetworkGrads), LstmError> {
    if batch.is_empty() {
        return Err(LstmError::EmptyBatch);
    }
    // each window accumulates into a scratch struct; window totals are then
    // added and the batch mean taken once at the end, so duplicating a
    // batch entry reproduces the single-entry gradients bit for bit
    let mut grads = NetworkGrads::zeros_like(net);
    let mut scratch = NetworkGrads::zeros_like(net);
    let scale = 2.0 / OUTPUTS as f64;
    let mut sum_sq = 0.0;
    for pair in batch {
        let (pred, trace) = network_forward_traced(net, &pair.window)?;
        let residual = wrapped_residual(pred, pair.target);
        sum_sq += residual.norm_squared();
        let dpred = DVector::from_row_slice(&[
            residual.x * scale,
            residual.y * scale,
            residual.z * scale,
        ]);
        scratch.reset();
        backward_window(net, &trace, &dpred, &mut scratch);
        grads.accumulate(&scratch);
    }
    let batch_len = batch.len() as f64;
    for slice in grads.slices_mut() {
        for g in slice {
            *g /= batch_len;
        }
    }
    let loss = sum_sq / (OUTPUTS as f64 * batch.len() as f64);
    Ok((loss, grads))
}

/// Forward-only batch loss.
pub fn batch_loss(net: &LstmNetwork, batch: &[&TrainingPair]) -> Result<f64, LstmError> {
    if batch.is_empty() {
        return Err(LstmError::EmptyBatch);
    }
    let mut sum_sq = 0.0;
    for pair in batch {
        let pred = super::network_forward(net, &pair.window)?;
        sum_sq += wrapped_residual(pred, pair.target).norm_squared();
    }
    Ok(sum_sq / (OUTPUTS as f64 * batch.len() as f64))
}

fn wrapped_residual(pred: Vector3<f64>, target: Vector3<f64>) -> Vector3<f64> {
    Vector3::new(
        wrap(pred.x - target.x),
        wrap(pred.y - target.y),
        wrap(pred.z - target.z),
    )
}
