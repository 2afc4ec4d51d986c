//! Minimal dense building blocks for the recurrent models: row-major `f64`
//! tensors, an LSTM cell with backpropagation through time, a bidirectional
//! encoder, and the Adam optimizer.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Half-width of the uniform initialization range.
pub const INIT_SCALE: f64 = 0.08;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn uniform(shape: &[usize], scale: f64, rng: &mut impl Rng) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: (0..n).map(|_| rng.gen_range(-scale..scale)).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.shape)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let cols = self.shape[1];
        &self.data[r * cols..(r + 1) * cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let cols = self.shape[1];
        &mut self.data[r * cols..(r + 1) * cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn add_scaled(&mut self, other: &Tensor, alpha: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }
}

/// A model's trainable tensors under stable names, in a fixed order.
pub trait ParamSet: Clone {
    fn named(&self) -> Vec<(&'static str, &Tensor)>;
    fn named_mut(&mut self) -> Vec<(&'static str, &mut Tensor)>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t) in z.named_mut() {
            t.fill(0.0);
        }
        z
    }

    fn all_finite(&self) -> bool {
        self.named().iter().all(|(_, t)| t.is_finite())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `log(cosh(x))` without overflow for large `|x|`.
pub fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Dense affine layer `y = W x + b` with `W` of shape `[out, in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub w: Tensor,
    pub b: Tensor,
}

impl Linear {
    pub fn new(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        Linear {
            w: Tensor::uniform(&[outputs, inputs], INIT_SCALE, rng),
            b: Tensor::uniform(&[outputs], INIT_SCALE, rng),
        }
    }

    pub fn outputs(&self) -> usize {
        self.w.shape[0]
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs())
            .map(|r| self.b.data[r] + dot(self.w.row(r), x))
            .collect()
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Linear) -> Vec<f64> {
        let mut dx = vec![0.0; x.len()];
        for (r, &d) in dy.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grad.b.data[r] += d;
            let w = self.w.row(r);
            let gw = grad.w.row_mut(r);
            for k in 0..x.len() {
                gw[k] += d * x[k];
                dx[k] += d * w[k];
            }
        }
        dx
    }
}

/// LSTM cell. `w` has shape `[4H, I + H]` acting on `[x; h_prev]`; gate rows
/// are ordered input, forget, cell candidate, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    pub w: Tensor,
    pub b: Tensor,
}

#[derive(Debug, Clone)]
struct LstmStep {
    z: Vec<f64>,
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Activations cached by [`LstmCell::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    steps: Vec<LstmStep>,
    hidden: usize,
}

impl LstmTrace {
    /// Hidden state after the last processed input.
    pub fn last_h(&self) -> Vec<f64> {
        let h = self.hidden;
        match self.steps.last() {
            None => vec![0.0; h],
            Some(s) => (0..h).map(|j| s.gates[3 * h + j] * s.tanh_c[j]).collect(),
        }
    }
}

impl LstmCell {
    pub fn new(inputs: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        LstmCell {
            w: Tensor::uniform(&[4 * hidden, inputs + hidden], INIT_SCALE, rng),
            b: Tensor::uniform(&[4 * hidden], INIT_SCALE, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b.len() / 4
    }

    pub fn inputs(&self) -> usize {
        self.w.shape[1] - self.hidden()
    }

    /// Runs the cell over `inputs` from a zero state.
    pub fn forward<'a, I>(&self, inputs: I) -> LstmTrace
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let h_dim = self.hidden();
        let in_dim = self.inputs();
        let mut h = vec![0.0; h_dim];
        let mut c = vec![0.0; h_dim];
        let mut steps = Vec::new();
        for x in inputs {
            debug_assert_eq!(x.len(), in_dim);
            let mut z = Vec::with_capacity(in_dim + h_dim);
            z.extend_from_slice(x);
            z.extend_from_slice(&h);
            let mut gates: Vec<f64> = (0..4 * h_dim)
                .map(|r| self.b.data[r] + dot(self.w.row(r), &z))
                .collect();
            for j in 0..h_dim {
                gates[j] = sigmoid(gates[j]);
                gates[h_dim + j] = sigmoid(gates[h_dim + j]);
                gates[2 * h_dim + j] = gates[2 * h_dim + j].tanh();
                gates[3 * h_dim + j] = sigmoid(gates[3 * h_dim + j]);
            }
            let c_prev = c.clone();
            let mut tanh_c = vec![0.0; h_dim];
            for j in 0..h_dim {
                c[j] = gates[h_dim + j] * c_prev[j] + gates[j] * gates[2 * h_dim + j];
                tanh_c[j] = c[j].tanh();
                h[j] = gates[3 * h_dim + j] * tanh_c[j];
            }
            steps.push(LstmStep {
                z,
                gates,
                c_prev,
                tanh_c,
            });
        }
        LstmTrace {
            steps,
            hidden: h_dim,
        }
    }

    /// Backpropagates `dL/dh_last` through the trace, accumulating into
    /// `grad`. Returns `dL/dx` for every step, in processing order.
    pub fn backward(&self, trace: &LstmTrace, dh_last: &[f64], grad: &mut LstmCell) -> Vec<Vec<f64>> {
        let h_dim = self.hidden();
        let in_dim = self.inputs();
        let mut dh = dh_last.to_vec();
        let mut dc = vec![0.0; h_dim];
        let mut da = vec![0.0; 4 * h_dim];
        let mut dxs = vec![Vec::new(); trace.steps.len()];
        for (t, s) in trace.steps.iter().enumerate().rev() {
            for j in 0..h_dim {
                let i = s.gates[j];
                let f = s.gates[h_dim + j];
                let g = s.gates[2 * h_dim + j];
                let o = s.gates[3 * h_dim + j];
                let tc = s.tanh_c[j];
                dc[j] += dh[j] * o * (1.0 - tc * tc);
                da[j] = dc[j] * g * i * (1.0 - i);
                da[h_dim + j] = dc[j] * s.c_prev[j] * f * (1.0 - f);
                da[2 * h_dim + j] = dc[j] * i * (1.0 - g * g);
                da[3 * h_dim + j] = dh[j] * tc * o * (1.0 - o);
                dc[j] *= f;
            }
            let mut dz = vec![0.0; in_dim + h_dim];
            for (r, &d) in da.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grad.b.data[r] += d;
                let w = self.w.row(r);
                let gw = grad.w.row_mut(r);
                for k in 0..dz.len() {
                    gw[k] += d * s.z[k];
                    dz[k] += d * w[k];
                }
            }
            dh.copy_from_slice(&dz[in_dim..]);
            dz.truncate(in_dim);
            dxs[t] = dz;
        }
        dxs
    }
}

/// Forward and backward LSTMs over the same sequence; the encoding is the
/// forward cell's final state followed by the backward cell's final state
/// (the latter having consumed the sequence in reverse).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstm {
    pub fwd: LstmCell,
    pub bwd: LstmCell,
}

pub struct BiTrace {
    fwd: LstmTrace,
    bwd: LstmTrace,
}

impl BiLstm {
    pub fn new(inputs: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        BiLstm {
            fwd: LstmCell::new(inputs, hidden, rng),
            bwd: LstmCell::new(inputs, hidden, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.fwd.hidden()
    }

    pub fn encode(&self, seq: &[&[f64]]) -> (Vec<f64>, BiTrace) {
        let fwd = self.fwd.forward(seq.iter().copied());
        let bwd = self.bwd.forward(seq.iter().rev().copied());
        let mut h = fwd.last_h();
        h.extend(bwd.last_h());
        (h, BiTrace { fwd, bwd })
    }

    /// Returns `dL/dx` per sequence position (original order).
    pub fn backward(&self, trace: &BiTrace, dh: &[f64], grad: &mut BiLstm) -> Vec<Vec<f64>> {
        let h = self.hidden();
        let mut dx = self.fwd.backward(&trace.fwd, &dh[..h], &mut grad.fwd);
        let dx_b = self.bwd.backward(&trace.bwd, &dh[h..], &mut grad.bwd);
        let n = dx.len();
        for (t, d) in dx_b.into_iter().enumerate() {
            for (a, b) in dx[n - 1 - t].iter_mut().zip(d) {
                *a += b;
            }
        }
        dx
    }

    pub fn push_named<'a>(&'a self, out: &mut Vec<(&'static str, &'a Tensor)>) {
        out.extend([
            ("fwd.w", &self.fwd.w),
            ("fwd.b", &self.fwd.b),
            ("bwd.w", &self.bwd.w),
            ("bwd.b", &self.bwd.b),
        ]);
    }

    pub fn push_named_mut<'a>(&'a mut self, out: &mut Vec<(&'static str, &'a mut Tensor)>) {
        out.extend([
            ("fwd.w", &mut self.fwd.w),
            ("fwd.b", &mut self.fwd.b),
            ("bwd.w", &mut self.bwd.w),
            ("bwd.b", &mut self.bwd.b),
        ]);
    }
}

/// Rescales `grads` in place so their joint L2 norm is at most `max_norm`.
pub fn clip_global_norm<P: ParamSet>(grads: &mut P, max_norm: f64) -> f64 {
    let norm = grads
        .named()
        .iter()
        .map(|(_, t)| t.data.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for (_, t) in grads.named_mut() {
            t.scale(s);
        }
    }
    norm
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new<P: ParamSet>(params: &P, learning_rate: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .named()
            .iter()
            .map(|(_, t)| vec![0.0; t.len()])
            .collect();
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let step = self.learning_rate * bc2.sqrt() / bc1;
        let grads = grads.named();
        for (k, (_, p)) in params.named_mut().into_iter().enumerate() {
            let g = &grads[k].1.data;
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.data.len() {
                if g[i] == 0.0 && m[i] == 0.0 {
                    continue;
                }
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                p.data[i] -= step * m[i] / (v[i].sqrt() + self.epsilon);
            }
        }
    }
}
