//! Minimal dense math for the Bi-LSTM-CRF: flat-parameter LSTM cells with
//! reverse-mode gradients, a linear projection, and Adam. All arithmetic is
//! f64 so analytic gradients can be checked against finite differences.

use rand::Rng;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// y += W x for a row-major W of shape (rows, cols).
pub fn matvec_acc(w: &[f64], x: &[f64], y: &mut [f64]) {
    let cols = x.len();
    for (r, yr) in y.iter_mut().enumerate() {
        let row = &w[r * cols..(r + 1) * cols];
        *yr += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// grad_w += dy ⊗ x; grad_x += Wᵀ dy.
pub fn matvec_backward(w: &[f64], x: &[f64], dy: &[f64], grad_w: &mut [f64], grad_x: &mut [f64]) {
    let cols = x.len();
    for (r, &d) in dy.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        let grow = &mut grad_w[r * cols..(r + 1) * cols];
        for c in 0..cols {
            grow[c] += d * x[c];
            grad_x[c] += d * row[c];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmDims {
    pub input: usize,
    pub hidden: usize,
}

impl LstmDims {
    pub fn param_len(self) -> usize {
        4 * self.hidden * self.input + 4 * self.hidden * self.hidden + 4 * self.hidden
    }

    fn wx_len(self) -> usize {
        4 * self.hidden * self.input
    }

    fn wh_len(self) -> usize {
        4 * self.hidden * self.hidden
    }

    /// Offset of the recurrent weight block; elastic-net regularization
    /// applies to this slice.
    pub fn recurrent_range(self) -> std::ops::Range<usize> {
        self.wx_len()..self.wx_len() + self.wh_len()
    }
}

/// Cached activations of one unidirectional pass, consumed by the backward
/// pass. Gate order in the 4H blocks: input, forget, cell, output.
pub struct LstmCache {
    dims: LstmDims,
    xs: Vec<Vec<f64>>,
    gates: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    tanh_cells: Vec<Vec<f64>>,
    pub hidden: Vec<Vec<f64>>,
}

impl LstmCache {
    pub fn final_hidden(&self) -> &[f64] {
        self.hidden.last().expect("non-empty sequence")
    }
}

/// Standard LSTM recurrence over `xs`, left to right. Callers reverse the
/// input (and the output) for the backward direction.
pub fn lstm_forward(params: &[f64], dims: LstmDims, xs: &[Vec<f64>]) -> LstmCache {
    assert_eq!(params.len(), dims.param_len());
    let h = dims.hidden;
    let (wx, rest) = params.split_at(dims.wx_len());
    let (wh, bias) = rest.split_at(dims.wh_len());
    let mut cache = LstmCache {
        dims,
        xs: xs.to_vec(),
        gates: Vec::with_capacity(xs.len()),
        cells: Vec::with_capacity(xs.len()),
        tanh_cells: Vec::with_capacity(xs.len()),
        hidden: Vec::with_capacity(xs.len()),
    };
    let mut prev_h = vec![0.0; h];
    let mut prev_c = vec![0.0; h];
    for x in xs {
        let mut z = bias.to_vec();
        matvec_acc(wx, x, &mut z);
        matvec_acc(wh, &prev_h, &mut z);
        let mut gates = vec![0.0; 4 * h];
        for j in 0..h {
            gates[j] = sigmoid(z[j]); // input
            gates[h + j] = sigmoid(z[h + j]); // forget
            gates[2 * h + j] = z[2 * h + j].tanh(); // cell candidate
            gates[3 * h + j] = sigmoid(z[3 * h + j]); // output
        }
        let mut c = vec![0.0; h];
        let mut tanh_c = vec![0.0; h];
        let mut hidden = vec![0.0; h];
        for j in 0..h {
            c[j] = gates[h + j] * prev_c[j] + gates[j] * gates[2 * h + j];
            tanh_c[j] = c[j].tanh();
            hidden[j] = gates[3 * h + j] * tanh_c[j];
        }
        prev_h = hidden.clone();
        prev_c = c.clone();
        cache.gates.push(gates);
        cache.cells.push(c);
        cache.tanh_cells.push(tanh_c);
        cache.hidden.push(hidden);
    }
    cache
}

/// Backpropagation through time. `dh_seq[t]` is the loss gradient w.r.t.
/// the hidden state emitted at step `t`. Accumulates into `grad_params`
/// and returns the gradient w.r.t. each input.
pub fn lstm_backward(
    params: &[f64],
    cache: &LstmCache,
    dh_seq: &[Vec<f64>],
    grad_params: &mut [f64],
) -> Vec<Vec<f64>> {
    let dims = cache.dims;
    let h = dims.hidden;
    let steps = cache.xs.len();
    assert_eq!(dh_seq.len(), steps);
    let (wx, rest) = params.split_at(dims.wx_len());
    let (wh, _bias) = rest.split_at(dims.wh_len());
    let (gwx, grest) = grad_params.split_at_mut(dims.wx_len());
    let (gwh, gbias) = grest.split_at_mut(dims.wh_len());

    let mut dxs = vec![vec![0.0; dims.input]; steps];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    for t in (0..steps).rev() {
        let gates = &cache.gates[t];
        let tanh_c = &cache.tanh_cells[t];
        let prev_c: &[f64] = if t == 0 { &[] } else { &cache.cells[t - 1] };
        let mut dh = dh_seq[t].clone();
        for (a, b) in dh.iter_mut().zip(&dh_next) {
            *a += b;
        }
        let mut dz = vec![0.0; 4 * h];
        let mut dc_prev = vec![0.0; h];
        for j in 0..h {
            let i_g = gates[j];
            let f_g = gates[h + j];
            let g_g = gates[2 * h + j];
            let o_g = gates[3 * h + j];
            let dc = dh[j] * o_g * (1.0 - tanh_c[j] * tanh_c[j]) + dc_next[j];
            let do_ = dh[j] * tanh_c[j];
            let di = dc * g_g;
            let dg = dc * i_g;
            let pc = if t == 0 { 0.0 } else { prev_c[j] };
            let df = dc * pc;
            dc_prev[j] = dc * f_g;
            dz[j] = di * i_g * (1.0 - i_g);
            dz[h + j] = df * f_g * (1.0 - f_g);
            dz[2 * h + j] = dg * (1.0 - g_g * g_g);
            dz[3 * h + j] = do_ * o_g * (1.0 - o_g);
        }
        for (gb, d) in gbias.iter_mut().zip(&dz) {
            *gb += d;
        }
        matvec_backward(wx, &cache.xs[t], &dz, gwx, &mut dxs[t]);
        let mut dh_prev = vec![0.0; h];
        if t > 0 {
            matvec_backward(wh, &cache.hidden[t - 1], &dz, gwh, &mut dh_prev);
        } else {
            // initial hidden state is the zero constant
            let zero = vec![0.0; h];
            let mut scratch = vec![0.0; h];
            matvec_backward(wh, &zero, &dz, gwh, &mut scratch);
        }
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    dxs
}

/// Uniform(-limit, limit) init with limit = sqrt(6 / (fan_in + fan_out))
/// for the weight blocks, forget-gate bias 1, other biases 0.
pub fn init_lstm_params(dims: LstmDims, rng: &mut impl Rng) -> Vec<f64> {
    let h = dims.hidden;
    let mut params = vec![0.0; dims.param_len()];
    let wx_limit = (6.0 / (dims.input + h) as f64).sqrt();
    let wh_limit = (6.0 / (h + h) as f64).sqrt();
    let (wx, rest) = params.split_at_mut(dims.wx_len());
    let (wh, bias) = rest.split_at_mut(dims.wh_len());
    for v in wx.iter_mut() {
        *v = rng.gen_range(-wx_limit..wx_limit);
    }
    for v in wh.iter_mut() {
        *v = rng.gen_range(-wh_limit..wh_limit);
    }
    for j in 0..h {
        bias[h + j] = 1.0;
    }
    params
}

/// Adam with bias correction; one state per parameter group.
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(group_lens: &[usize]) -> AdamState {
        AdamState {
            m: group_lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: group_lens.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn update(
        &mut self,
        params: &mut [Vec<f64>],
        grads: &[Vec<f64>],
        lr: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) {
        self.step += 1;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= lr * mhat / (vhat.sqrt() + epsilon);
            }
        }
    }
}
