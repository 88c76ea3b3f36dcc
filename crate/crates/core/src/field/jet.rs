//! Analytic (value, gradient, Hessian) propagation through the MLP and its
//! reverse-mode adjoint with respect to the parameters.
//!
//! A batch of `n` points is laid out column-block-wise: every row of an
//! activation matrix holds `blocks * n` entries ordered
//! `[value | d/dx | d/dy | d/dz | h00 | h01 | h02 | h11 | h12 | h22]`,
//! truncated to the requested [`JetOrder`]. Each affine layer then becomes a
//! single matrix product over all blocks (the bias only touches the value block).

use nalgebra::Matrix3;

use super::gemm::{gemm, View};
use super::mlp::{MlpParams, ParamGrads};
use crate::{Error, Result, Vec3};

/// Index pairs of the six stored Hessian entries.
pub const HESS_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Points per chunk when propagating large batches.
const CHUNK: usize = 512;

/// Value, gradient, and symmetric Hessian of the field at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet3 {
    pub value: f64,
    pub grad: Vec3,
    /// `[h00, h01, h02, h11, h12, h22]`.
    pub hess: [f64; 6],
}

impl Jet3 {
    pub fn new(value: f64, grad: Vec3, hess: [f64; 6]) -> Self {
        Jet3 { value, grad, hess }
    }

    /// Full symmetric Hessian.
    pub fn hess_matrix(&self) -> Matrix3<f64> {
        let h = &self.hess;
        Matrix3::new(h[0], h[1], h[2], h[1], h[3], h[4], h[2], h[4], h[5])
    }

    pub fn from_matrix(value: f64, grad: Vec3, m: &Matrix3<f64>) -> Self {
        Jet3 {
            value,
            grad,
            hess: HESS_PAIRS.map(|(i, j)| 0.5 * (m[(i, j)] + m[(j, i)])),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Jet3 {
            value: c * self.value,
            grad: c * self.grad,
            hess: self.hess.map(|h| c * h),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(|g| g.is_finite()) && self.hess.iter().all(|h| h.is_finite())
    }
}

/// Derivative of a scalar loss with respect to each jet component at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JetAdjoint {
    pub value: f64,
    pub grad: [f64; 3],
    /// Adjoints of the six stored Hessian entries (not of the full matrix).
    pub hess: [f64; 6],
}

impl JetAdjoint {
    pub fn is_zero(&self) -> bool {
        self.value == 0.0 && self.grad.iter().all(|&g| g == 0.0) && self.hess.iter().all(|&h| h == 0.0)
    }

    fn required_order(&self) -> JetOrder {
        if self.hess.iter().any(|&h| h != 0.0) {
            JetOrder::Hessian
        } else if self.grad.iter().any(|&g| g != 0.0) {
            JetOrder::Gradient
        } else {
            JetOrder::Value
        }
    }
}

/// How many derivative levels to propagate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum JetOrder {
    Value,
    Gradient,
    Hessian,
}

impl JetOrder {
    pub fn blocks(self) -> usize {
        match self {
            JetOrder::Value => 1,
            JetOrder::Gradient => 4,
            JetOrder::Hessian => 10,
        }
    }
}

/// Network outputs for a batch, in input order.
#[derive(Clone, Debug)]
pub struct BatchJets {
    order: JetOrder,
    values: Vec<f64>,
    grads: Vec<Vec3>,
    hess: Vec<[f64; 6]>,
}

impl BatchJets {
    pub fn order(&self) -> JetOrder {
        self.order
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Empty unless the order is at least [`JetOrder::Gradient`].
    pub fn grads(&self) -> &[Vec3] {
        &self.grads
    }

    /// Jet at index `i`; missing derivative levels are zero.
    pub fn jet(&self, i: usize) -> Jet3 {
        Jet3 {
            value: self.values[i],
            grad: self.grads.get(i).copied().unwrap_or_else(Vec3::zeros),
            hess: self.hess.get(i).copied().unwrap_or([0.0; 6]),
        }
    }

    pub fn jets(&self) -> Vec<Jet3> {
        (0..self.len()).map(|i| self.jet(i)).collect()
    }
}

/// Intermediate activations of one chunk, kept for the backward pass.
#[derive(Debug)]
struct ChunkTape {
    n: usize,
    /// Input matrix of each affine layer, `in_dim x (blocks * n)`.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each hidden layer, `out_dim x (blocks * n)`.
    pre: Vec<Vec<f64>>,
}

/// Recorded forward pass over a batch.
#[derive(Debug)]
pub struct Tape {
    order: JetOrder,
    chunks: Vec<ChunkTape>,
}

impl Tape {
    pub fn order(&self) -> JetOrder {
        self.order
    }

    pub fn len(&self) -> usize {
        self.chunks.iter().map(|c| c.n).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Value rows of the output layer's input, one feature vector per point.
    pub(crate) fn output_features(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len());
        for c in &self.chunks {
            let cols = self.order.blocks() * c.n;
            let input = c.inputs.last().expect("tape records the output layer");
            let rows = input.len() / cols;
            out.extend((0..c.n).map(|i| (0..rows).map(|r| input[r * cols + i]).collect()));
        }
        out
    }
}

/// Per-point adjoints for a whole batch, aligned with the forward inputs.
#[derive(Clone, Debug)]
pub struct BatchAdjoint {
    pub adjoints: Vec<JetAdjoint>,
}

impl BatchAdjoint {
    pub fn zeros(n: usize) -> Self {
        BatchAdjoint {
            adjoints: vec![JetAdjoint::default(); n],
        }
    }
}

fn input_block(points: &[Vec3], order: JetOrder) -> Vec<f64> {
    let n = points.len();
    let cols = order.blocks() * n;
    let mut s = vec![0.0; 3 * cols];
    for j in 0..3 {
        let row = &mut s[j * cols..(j + 1) * cols];
        for (i, p) in points.iter().enumerate() {
            row[i] = p[j];
        }
        if order >= JetOrder::Gradient {
            row[(1 + j) * n..(2 + j) * n].fill(1.0);
        }
    }
    s
}

fn activate_row(params: &MlpParams, order: JetOrder, n: usize, z: &[f64], a: &mut [f64], scale: f64) {
    let act = params.activation;
    for i in 0..n {
        let [s0, s1, s2, _] = act.derivatives(z[i]);
        a[i] = scale * s0;
        if order >= JetOrder::Gradient {
            let g = [z[n + i], z[2 * n + i], z[3 * n + i]];
            for d in 0..3 {
                a[(1 + d) * n + i] = scale * s1 * g[d];
            }
            if order == JetOrder::Hessian {
                for (k, &(d, e)) in HESS_PAIRS.iter().enumerate() {
                    a[(4 + k) * n + i] = scale * (s2 * g[d] * g[e] + s1 * z[(4 + k) * n + i]);
                }
            }
        }
    }
}

/// Adjoint of the activation: maps d-loss/d-activation to d-loss/d-preactivation in place.
fn activate_row_adjoint(params: &MlpParams, order: JetOrder, n: usize, z: &[f64], abar: &mut [f64]) {
    let act = params.activation;
    for i in 0..n {
        let [_, s1, s2, s3] = act.derivatives(z[i]);
        let mut zv = s1 * abar[i];
        if order >= JetOrder::Gradient {
            let g = [z[n + i], z[2 * n + i], z[3 * n + i]];
            let gbar = [abar[n + i], abar[2 * n + i], abar[3 * n + i]];
            let mut zg = [s1 * gbar[0], s1 * gbar[1], s1 * gbar[2]];
            for d in 0..3 {
                zv += s2 * gbar[d] * g[d];
            }
            if order == JetOrder::Hessian {
                for (k, &(d, e)) in HESS_PAIRS.iter().enumerate() {
                    let idx = (4 + k) * n + i;
                    let hb = abar[idx];
                    zv += hb * (s3 * g[d] * g[e] + s2 * z[idx]);
                    zg[d] += s2 * hb * g[e];
                    zg[e] += s2 * hb * g[d];
                    abar[idx] = s1 * hb;
                }
            }
            for d in 0..3 {
                abar[(1 + d) * n + i] = zg[d];
            }
        }
        abar[i] = zv;
    }
}

fn forward_chunk(params: &MlpParams, points: &[Vec3], order: JetOrder, keep: bool) -> (Vec<f64>, Option<ChunkTape>) {
    let n = points.len();
    let cols = order.blocks() * n;
    let x = input_block(points, order);
    let last = params.layers.len() - 1;
    let skip_scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut tape = keep.then(|| ChunkTape {
        n,
        inputs: Vec::with_capacity(params.layers.len()),
        pre: Vec::with_capacity(last),
    });
    let mut s = x.clone();
    for (l, layer) in params.layers.iter().enumerate() {
        let mut z = vec![0.0; layer.out_dim * cols];
        gemm(
            1.0,
            &layer.weight,
            View::row_major(layer.out_dim, layer.in_dim),
            &s,
            View::row_major(layer.in_dim, cols),
            0.0,
            &mut z,
            View::row_major(layer.out_dim, cols),
        );
        for (r, b) in layer.bias.iter().enumerate() {
            z[r * cols..r * cols + n].iter_mut().for_each(|v| *v += b);
        }
        if l == last {
            if let Some(t) = tape.as_mut() {
                t.inputs.push(s);
            }
            return (z, tape);
        }
        let next_skip = params.skip_layer == Some(l + 1);
        let rows = layer.out_dim + if next_skip { 3 } else { 0 };
        let scale = if next_skip { skip_scale } else { 1.0 };
        let mut a = vec![0.0; rows * cols];
        for r in 0..layer.out_dim {
            activate_row(
                params,
                order,
                n,
                &z[r * cols..(r + 1) * cols],
                &mut a[r * cols..(r + 1) * cols],
                scale,
            );
        }
        if next_skip {
            let tail = &mut a[layer.out_dim * cols..];
            tail.iter_mut().zip(&x).for_each(|(t, v)| *t = skip_scale * v);
        }
        match tape.as_mut() {
            Some(t) => {
                t.inputs.push(std::mem::replace(&mut s, a));
                t.pre.push(z);
            }
            None => s = a,
        }
    }
    unreachable!("network always has an output layer")
}

fn unpack_output(out: &[f64], n: usize, order: JetOrder, jets: &mut BatchJets) {
    jets.values.extend_from_slice(&out[..n]);
    if order >= JetOrder::Gradient {
        jets.grads
            .extend((0..n).map(|i| Vec3::new(out[n + i], out[2 * n + i], out[3 * n + i])));
    }
    if order == JetOrder::Hessian {
        jets.hess
            .extend((0..n).map(|i| std::array::from_fn(|k| out[(4 + k) * n + i])));
    }
}

impl MlpParams {
    /// Evaluates jets for every point without recording a tape.
    pub fn eval_batch(&self, points: &[Vec3], order: JetOrder) -> BatchJets {
        let mut jets = BatchJets {
            order,
            values: Vec::with_capacity(points.len()),
            grads: Vec::new(),
            hess: Vec::new(),
        };
        for chunk in points.chunks(CHUNK) {
            let (out, _) = forward_chunk(self, chunk, order, false);
            unpack_output(&out, chunk.len(), order, &mut jets);
        }
        jets
    }

    /// Field values only.
    pub fn values(&self, points: &[Vec3]) -> Vec<f64> {
        self.eval_batch(points, JetOrder::Value).values
    }

    pub fn value(&self, x: Vec3) -> f64 {
        self.values(&[x])[0]
    }

    /// Evaluates jets and records the intermediates needed by [`MlpParams::backward`].
    pub fn forward(&self, points: &[Vec3], order: JetOrder) -> (BatchJets, Tape) {
        let mut jets = BatchJets {
            order,
            values: Vec::with_capacity(points.len()),
            grads: Vec::new(),
            hess: Vec::new(),
        };
        let mut tape = Tape {
            order,
            chunks: Vec::new(),
        };
        for chunk in points.chunks(CHUNK) {
            let (out, t) = forward_chunk(self, chunk, order, true);
            unpack_output(&out, chunk.len(), order, &mut jets);
            tape.chunks.push(t.expect("tape requested"));
        }
        (jets, tape)
    }

    /// Accumulates `d loss / d params` into `grads`, given per-point jet adjoints.
    ///
    /// Adjoint components above the tape's order are ignored. Chunks are
    /// reduced in input order, so the result is independent of scheduling.
    pub fn backward(&self, tape: &Tape, adjoint: &BatchAdjoint, grads: &mut ParamGrads) -> Result<()> {
        if adjoint.adjoints.len() != tape.len() {
            return Err(Error::Contract(format!(
                "{} adjoints for a batch of {}",
                adjoint.adjoints.len(),
                tape.len()
            )));
        }
        if !grads.matches(self) {
            return Err(Error::Contract("gradient buffers do not match the network".into()));
        }
        let order = tape.order;
        let blocks = order.blocks();
        let last = self.layers.len() - 1;
        let mut offset = 0;
        for chunk in &tape.chunks {
            let n = chunk.n;
            let cols = blocks * n;
            let adj = &adjoint.adjoints[offset..offset + n];
            offset += n;

            let mut zbar = vec![0.0; cols];
            for (i, a) in adj.iter().enumerate() {
                zbar[i] = a.value;
                if order >= JetOrder::Gradient {
                    for d in 0..3 {
                        zbar[(1 + d) * n + i] = a.grad[d];
                    }
                }
                if order == JetOrder::Hessian {
                    for k in 0..6 {
                        zbar[(4 + k) * n + i] = a.hess[k];
                    }
                }
            }

            for l in (0..=last).rev() {
                let layer = &self.layers[l];
                let input = &chunk.inputs[l];
                gemm(
                    1.0,
                    &zbar,
                    View::row_major(layer.out_dim, cols),
                    input,
                    View::row_major(layer.in_dim, cols).t(),
                    1.0,
                    &mut grads.weights[l],
                    View::row_major(layer.out_dim, layer.in_dim),
                );
                for (r, gb) in grads.biases[l].iter_mut().enumerate() {
                    *gb += zbar[r * cols..r * cols + n].iter().sum::<f64>();
                }
                if l == 0 {
                    break;
                }
                let mut sbar = vec![0.0; layer.in_dim * cols];
                gemm(
                    1.0,
                    &layer.weight,
                    View::row_major(layer.out_dim, layer.in_dim).t(),
                    &zbar,
                    View::row_major(layer.out_dim, cols),
                    0.0,
                    &mut sbar,
                    View::row_major(layer.in_dim, cols),
                );
                let prev = &self.layers[l - 1];
                if self.skip_layer == Some(l) {
                    sbar.truncate(prev.out_dim * cols);
                    sbar.iter_mut().for_each(|v| *v *= std::f64::consts::FRAC_1_SQRT_2);
                }
                let z = &chunk.pre[l - 1];
                for r in 0..prev.out_dim {
                    activate_row_adjoint(
                        self,
                        order,
                        n,
                        &z[r * cols..(r + 1) * cols],
                        &mut sbar[r * cols..(r + 1) * cols],
                    );
                }
                zbar = sbar;
            }
        }
        Ok(())
    }
}

/// Value, gradient, and Hessian of the field at `x`.
pub fn forward_jet(params: &MlpParams, x: Vec3) -> Jet3 {
    params.eval_batch(&[x], JetOrder::Hessian).jet(0)
}

/// Parameter gradient of `sum_i L_i(jet(x_i))`, given each point's jet adjoint.
pub fn loss_param_grads(params: &MlpParams, batch: &[(Vec3, JetAdjoint)]) -> Result<ParamGrads> {
    if batch.is_empty() {
        return Err(Error::Contract("loss_param_grads needs a non-empty batch".into()));
    }
    let order = batch
        .iter()
        .map(|(_, a)| a.required_order())
        .max()
        .unwrap_or(JetOrder::Value);
    let points: Vec<Vec3> = batch.iter().map(|(p, _)| *p).collect();
    let (_, tape) = params.forward(&points, order);
    let adjoint = BatchAdjoint {
        adjoints: batch.iter().map(|(_, a)| *a).collect(),
    };
    let mut grads = ParamGrads::zeros_like(params);
    params.backward(&tape, &adjoint, &mut grads)?;
    Ok(grads)
}
