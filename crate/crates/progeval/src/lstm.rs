//! Deep LSTM forward/backward pass with truncated backpropagation through
//! time.
//!
//! Per layer, the gate pre-activations come from one biased linear map of the
//! concatenated below-layer and previous-timestep hidden states:
//!
//! ```text
//! (i, f, o, g) = (sigm, sigm, sigm, tanh) applied blockwise to W·[h_below; h_prev] + b
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```
//!
//! The input layer is a learned embedding of the token one-hot; the readout
//! is an affine map from the top hidden state to output-vocabulary logits.
//! Loss is masked cross-entropy, averaged over masked positions; gradients
//! are exact under truncation (none flow into the window's initial state).
//! Everything is 64-bit and single-threaded, so results are bit-reproducible.

use rand::Rng;
use std::io::Read;
use std::path::Path;
use thiserror::Error;

use crate::encode::PackedStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmConfig {
    /// Number of stacked layers (L).
    pub depth: usize,
    /// Cells per layer (n).
    pub width: usize,
    /// Input token ids, including padding.
    pub vocab_in: usize,
    /// Output logits.
    pub vocab_out: usize,
    /// Parameters are initialized uniformly in [-init_range, init_range].
    pub init_range: f64,
}

pub const DEFAULT_INIT_RANGE: f64 = 0.08;

impl LstmConfig {
    pub fn new(depth: usize, width: usize, vocab_in: usize, vocab_out: usize) -> Self {
        LstmConfig {
            depth,
            width,
            vocab_in,
            vocab_out,
            init_range: DEFAULT_INIT_RANGE,
        }
    }

    fn validate(&self) {
        assert!(self.depth >= 1, "depth must be >= 1");
        assert!(self.width >= 1, "width must be >= 1");
        assert!(self.vocab_in >= 1 && self.vocab_out >= 1);
        assert!(self.init_range >= 0.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LayerParams {
    /// 4n x 2n, row-major; rows ordered (i, f, o, g) blocks.
    w: Vec<f64>,
    /// 4n
    b: Vec<f64>,
}

/// All parameters of the network: embedding, per-layer affine maps, readout.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub config: LstmConfig,
    /// vocab_in x n, row-major by token.
    embed: Vec<f64>,
    layers: Vec<LayerParams>,
    /// vocab_out x n, row-major.
    out_w: Vec<f64>,
    /// vocab_out
    out_b: Vec<f64>,
}

/// Per-layer hidden and cell vectors carried across minibatches.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl LstmState {
    pub fn zeros(config: &LstmConfig) -> Self {
        LstmState {
            h: vec![vec![0.0; config.width]; config.depth],
            c: vec![vec![0.0; config.width]; config.depth],
        }
    }
}

/// One state per lane of a packed minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchState {
    pub lanes: Vec<LstmState>,
}

impl BatchState {
    pub fn zeros(config: &LstmConfig, lanes: usize) -> Self {
        BatchState {
            lanes: (0..lanes).map(|_| LstmState::zeros(config)).collect(),
        }
    }
}

/// Draws every parameter i.i.d. uniform in [-init_range, init_range].
pub fn init<R: Rng>(config: &LstmConfig, rng: &mut R) -> LstmParams {
    config.validate();
    let mut params = LstmParams::zeros(config);
    let r = config.init_range;
    if r > 0.0 {
        params.visit_mut(|p| *p = rng.gen_range(-r..=r));
    }
    params
}

impl LstmParams {
    pub fn zeros(config: &LstmConfig) -> Self {
        config.validate();
        let n = config.width;
        LstmParams {
            config: *config,
            embed: vec![0.0; config.vocab_in * n],
            layers: (0..config.depth)
                .map(|_| LayerParams {
                    w: vec![0.0; 4 * n * 2 * n],
                    b: vec![0.0; 4 * n],
                })
                .collect(),
            out_w: vec![0.0; config.vocab_out * n],
            out_b: vec![0.0; config.vocab_out],
        }
    }

    pub fn param_count(&self) -> usize {
        self.embed.len()
            + self
                .layers
                .iter()
                .map(|l| l.w.len() + l.b.len())
                .sum::<usize>()
            + self.out_w.len()
            + self.out_b.len()
    }

    /// Visits every parameter in a fixed flat order:
    /// embed, then each layer's (w, b), then readout (w, b).
    pub fn visit(&self, mut f: impl FnMut(f64)) {
        self.embed.iter().for_each(|&p| f(p));
        for l in &self.layers {
            l.w.iter().for_each(|&p| f(p));
            l.b.iter().for_each(|&p| f(p));
        }
        self.out_w.iter().for_each(|&p| f(p));
        self.out_b.iter().for_each(|&p| f(p));
    }

    pub fn visit_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        self.embed.iter_mut().for_each(&mut f);
        for l in &mut self.layers {
            l.w.iter_mut().for_each(&mut f);
            l.b.iter_mut().for_each(&mut f);
        }
        self.out_w.iter_mut().for_each(&mut f);
        self.out_b.iter_mut().for_each(&mut f);
    }

    /// Applies `f(self_param, other_param)` pairwise; shapes must match.
    pub fn zip_mut(&mut self, other: &LstmParams, mut f: impl FnMut(&mut f64, f64)) {
        assert_eq!(self.param_count(), other.param_count());
        for (a, &b) in self.embed.iter_mut().zip(&other.embed) {
            f(a, b);
        }
        for (la, lb) in self.layers.iter_mut().zip(&other.layers) {
            for (a, &b) in la.w.iter_mut().zip(&lb.w) {
                f(a, b);
            }
            for (a, &b) in la.b.iter_mut().zip(&lb.b) {
                f(a, b);
            }
        }
        for (a, &b) in self.out_w.iter_mut().zip(&other.out_w) {
            f(a, b);
        }
        for (a, &b) in self.out_b.iter_mut().zip(&other.out_b) {
            f(a, b);
        }
    }

    pub fn squared_norm(&self) -> f64 {
        let mut s = 0.0;
        self.visit(|p| s += p * p);
        s
    }

    pub fn get_flat(&self, idx: usize) -> f64 {
        let mut i = 0usize;
        let mut out = None;
        self.visit(|p| {
            if i == idx {
                out = Some(p);
            }
            i += 1;
        });
        out.expect("flat index out of range")
    }

    pub fn set_flat(&mut self, idx: usize, value: f64) {
        let mut i = 0usize;
        let mut hit = false;
        self.visit_mut(|p| {
            if i == idx {
                *p = value;
                hit = true;
            }
            i += 1;
        });
        assert!(hit, "flat index out of range");
    }

    pub fn embedding_row(&self, token: u32) -> &[f64] {
        let n = self.config.width;
        let t = token as usize;
        assert!(t < self.config.vocab_in, "token id {t} out of vocabulary");
        &self.embed[t * n..(t + 1) * n]
    }

    /// Reorders embedding rows: row `i` of the result is old row `perm[i]`.
    pub fn permute_embedding_rows(&mut self, perm: &[usize]) {
        assert_eq!(perm.len(), self.config.vocab_in);
        let n = self.config.width;
        let old = self.embed.clone();
        for (new_row, &old_row) in perm.iter().enumerate() {
            self.embed[new_row * n..(new_row + 1) * n]
                .copy_from_slice(&old[old_row * n..(old_row + 1) * n]);
        }
    }

    /// Reorders readout rows (logit slots): row `i` becomes old row `perm[i]`.
    pub fn permute_readout_rows(&mut self, perm: &[usize]) {
        assert_eq!(perm.len(), self.config.vocab_out);
        let n = self.config.width;
        let old_w = self.out_w.clone();
        let old_b = self.out_b.clone();
        for (new_row, &old_row) in perm.iter().enumerate() {
            self.out_w[new_row * n..(new_row + 1) * n]
                .copy_from_slice(&old_w[old_row * n..(old_row + 1) * n]);
            self.out_b[new_row] = old_b[old_row];
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Four independent accumulators let the reduction pipeline and vectorize;
/// the summation order is fixed, so results stay bit-reproducible.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0f64, 0.0, 0.0, 0.0);
    for i in 0..chunks {
        let j = i * 4;
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in chunks * 4..a.len() {
        tail += a[j] * b[j];
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// out[r] += W[r,:] · x  for a row-major rows x cols matrix.
fn matvec_acc(out: &mut [f64], w: &[f64], x: &[f64], rows: usize, cols: usize) {
    debug_assert_eq!(w.len(), rows * cols);
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        *o += dot(&w[r * cols..(r + 1) * cols], x);
    }
}

/// Computes one layer's gates and writes the updated (c, tanh c, h).
fn layer_forward(
    layer: &LayerParams,
    input: &[f64],  // 2n: [h_below; h_prev]
    c_prev: &[f64], // n
    gates: &mut [f64],
    c_out: &mut [f64],
    tanh_c_out: &mut [f64],
    h_out: &mut [f64],
    n: usize,
) {
    gates.copy_from_slice(&layer.b);
    matvec_acc(gates, &layer.w, input, 4 * n, 2 * n);
    for v in gates[..3 * n].iter_mut() {
        *v = sigmoid(*v);
    }
    for v in gates[3 * n..4 * n].iter_mut() {
        *v = v.tanh();
    }
    let (i_gate, rest) = gates.split_at(n);
    let (f_gate, rest) = rest.split_at(n);
    let (o_gate, g_gate) = rest.split_at(n);
    for k in 0..n {
        c_out[k] = f_gate[k] * c_prev[k] + i_gate[k] * g_gate[k];
        tanh_c_out[k] = c_out[k].tanh();
        h_out[k] = o_gate[k] * tanh_c_out[k];
    }
}

/// One timestep: consumes a token, returns the output logits and next state.
pub fn step(params: &LstmParams, state: &LstmState, token: u32) -> (Vec<f64>, LstmState) {
    let cfg = &params.config;
    let n = cfg.width;
    let mut next = LstmState::zeros(cfg);
    let mut below = params.embedding_row(token).to_vec();
    let mut input = vec![0.0; 2 * n];
    let mut gates = vec![0.0; 4 * n];
    let mut tanh_c = vec![0.0; n];
    for l in 0..cfg.depth {
        input[..n].copy_from_slice(&below);
        input[n..].copy_from_slice(&state.h[l]);
        let mut c_tmp = vec![0.0; n];
        let mut h_tmp = vec![0.0; n];
        layer_forward(
            &params.layers[l],
            &input,
            &state.c[l],
            &mut gates,
            &mut c_tmp,
            &mut tanh_c,
            &mut h_tmp,
            n,
        );
        next.c[l].copy_from_slice(&c_tmp);
        next.h[l].copy_from_slice(&h_tmp);
        below.copy_from_slice(&h_tmp);
    }
    let mut logits = params.out_b.clone();
    matvec_acc(&mut logits, &params.out_w, &below, cfg.vocab_out, n);
    (logits, next)
}

/// Log-sum-exp parts with max subtraction; returns (max, sum_exp).
fn softmax_parts(logits: &[f64]) -> (f64, f64) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&v| (v - max).exp()).sum();
    (max, sum)
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub struct BackwardOutput {
    /// Mean masked cross-entropy over the whole window batch.
    pub loss: f64,
    pub grads: LstmParams,
    pub final_state: BatchState,
    pub masked_positions: usize,
    /// Masked positions where argmax(logits) equals the label.
    pub correct_predictions: usize,
}

/// Activation tape over one window, all lanes batched per timestep so that
/// weight rows are streamed once per timestep instead of once per lane.
struct Tape {
    x: Vec<f64>,      // T x lanes x n
    gates: Vec<f64>,  // T x L x lanes x 4n
    c: Vec<f64>,      // T x L x lanes x n
    tanh_c: Vec<f64>, // T x L x lanes x n
    h: Vec<f64>,      // T x L x lanes x n
}

impl Tape {
    fn new(t: usize, l: usize, lanes: usize, n: usize) -> Self {
        Tape {
            x: vec![0.0; t * lanes * n],
            gates: vec![0.0; t * l * lanes * 4 * n],
            c: vec![0.0; t * l * lanes * n],
            tanh_c: vec![0.0; t * l * lanes * n],
            h: vec![0.0; t * l * lanes * n],
        }
    }
}

/// Forward and backward over one packed window, starting from `initial`
/// per-lane states. Gradients are truncated at the window boundary.
pub fn backward(
    params: &LstmParams,
    window: &PackedStream,
    initial: &BatchState,
) -> BackwardOutput {
    let cfg = &params.config;
    let n = cfg.width;
    let depth = cfg.depth;
    let t_len = window.window;
    assert_eq!(window.lane_count, initial.lanes.len(), "lane count mismatch");

    let total_masked: usize = window.masked_positions();
    let mut grads = LstmParams::zeros(cfg);
    let mut final_state = initial.clone();
    if total_masked == 0 {
        log::warn!("backward called on a window with an all-false mask; returning zero gradients");
        // Still advance the state so carryover stays correct.
        for (lane, state) in final_state.lanes.iter_mut().enumerate() {
            for &tok in &window.tokens[lane] {
                let (_, next) = step(params, state, tok);
                *state = next;
            }
        }
        return BackwardOutput {
            loss: 0.0,
            grads,
            final_state,
            masked_positions: 0,
            correct_predictions: 0,
        };
    }
    let scale = 1.0 / total_masked as f64;
    let lanes = window.lane_count;

    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut tape = Tape::new(t_len, depth, lanes, n);
    // x offset for (t, lane); h/c/tanh_c for (t, l, lane); gates likewise.
    let xi = |t: usize, lane: usize| (t * lanes + lane) * n;
    let hi = |t: usize, l: usize, lane: usize| ((t * depth + l) * lanes + lane) * n;
    let gi = |t: usize, l: usize, lane: usize| ((t * depth + l) * lanes + lane) * 4 * n;

    // Lane-major input block [lane][h_below ; h_prev] for the current (t, l).
    let mut xb = vec![0.0; lanes * 2 * n];
    let mut logits = vec![0.0; cfg.vocab_out];
    let mut dlogits = vec![0.0; t_len * lanes * cfg.vocab_out];

    // Forward, recording activations.
    for t in 0..t_len {
        for lane in 0..lanes {
            tape.x[xi(t, lane)..xi(t, lane) + n]
                .copy_from_slice(params.embedding_row(window.tokens[lane][t]));
        }
        for l in 0..depth {
            for lane in 0..lanes {
                let xrow = &mut xb[lane * 2 * n..(lane + 1) * 2 * n];
                if l == 0 {
                    xrow[..n].copy_from_slice(&tape.x[xi(t, lane)..xi(t, lane) + n]);
                } else {
                    let below = hi(t, l - 1, lane);
                    xrow[..n].copy_from_slice(&tape.h[below..below + n]);
                }
                if t == 0 {
                    xrow[n..].copy_from_slice(&initial.lanes[lane].h[l]);
                } else {
                    let prev = hi(t - 1, l, lane);
                    xrow[n..].copy_from_slice(&tape.h[prev..prev + n]);
                }
            }
            // Gate pre-activations for all lanes; each weight row is
            // streamed once and reused across lanes.
            let layer = &params.layers[l];
            for lane in 0..lanes {
                let g0 = gi(t, l, lane);
                tape.gates[g0..g0 + 4 * n].copy_from_slice(&layer.b);
            }
            for r in 0..4 * n {
                let wrow = &layer.w[r * 2 * n..(r + 1) * 2 * n];
                for lane in 0..lanes {
                    tape.gates[gi(t, l, lane) + r] +=
                        dot(wrow, &xb[lane * 2 * n..(lane + 1) * 2 * n]);
                }
            }
            for lane in 0..lanes {
                let g0 = gi(t, l, lane);
                let gates = &mut tape.gates[g0..g0 + 4 * n];
                for v in gates[..3 * n].iter_mut() {
                    *v = sigmoid(*v);
                }
                for v in gates[3 * n..].iter_mut() {
                    *v = v.tanh();
                }
                let at = hi(t, l, lane);
                for k in 0..n {
                    let c_prev = if t == 0 {
                        initial.lanes[lane].c[l][k]
                    } else {
                        tape.c[hi(t - 1, l, lane) + k]
                    };
                    let (i_g, f_g, o_g, g_g) = (
                        tape.gates[g0 + k],
                        tape.gates[g0 + n + k],
                        tape.gates[g0 + 2 * n + k],
                        tape.gates[g0 + 3 * n + k],
                    );
                    let c_val = f_g * c_prev + i_g * g_g;
                    let tc = c_val.tanh();
                    tape.c[at + k] = c_val;
                    tape.tanh_c[at + k] = tc;
                    tape.h[at + k] = o_g * tc;
                }
            }
        }
        for lane in 0..lanes {
            if !window.loss_mask[lane][t] {
                continue;
            }
            let top = &tape.h[hi(t, depth - 1, lane)..hi(t, depth - 1, lane) + n];
            logits.copy_from_slice(&params.out_b);
            matvec_acc(&mut logits, &params.out_w, top, cfg.vocab_out, n);
            let label = window.labels[lane][t] as usize;
            let (max, sum) = softmax_parts(&logits);
            loss -= (logits[label] - max - sum.ln()) * scale;
            if argmax(&logits) == label {
                correct += 1;
            }
            let d0 = (t * lanes + lane) * cfg.vocab_out;
            for (k, dv) in dlogits[d0..d0 + cfg.vocab_out].iter_mut().enumerate() {
                let p = (logits[k] - max).exp() / sum;
                *dv = (p - if k == label { 1.0 } else { 0.0 }) * scale;
            }
        }
    }

    // Save final states for carryover.
    for (lane, fs) in final_state.lanes.iter_mut().enumerate() {
        for l in 0..depth {
            let last = hi(t_len - 1, l, lane);
            fs.h[l].copy_from_slice(&tape.h[last..last + n]);
            fs.c[l].copy_from_slice(&tape.c[last..last + n]);
        }
    }

    // Backward sweep.
    let mut dh_future = vec![0.0; depth * lanes * n];
    let mut dc_future = vec![0.0; depth * lanes * n];
    let mut dh_above = vec![0.0; lanes * n];
    let mut da = vec![0.0; lanes * 4 * n];
    let mut dx = vec![0.0; lanes * 2 * n];
    for t in (0..t_len).rev() {
        dh_above.iter_mut().for_each(|v| *v = 0.0);
        for lane in 0..lanes {
            if !window.loss_mask[lane][t] {
                continue;
            }
            let d0 = (t * lanes + lane) * cfg.vocab_out;
            let d = &dlogits[d0..d0 + cfg.vocab_out];
            let top = &tape.h[hi(t, depth - 1, lane)..hi(t, depth - 1, lane) + n];
            for r in 0..cfg.vocab_out {
                let dv = d[r];
                if dv == 0.0 {
                    continue;
                }
                axpy(&mut grads.out_w[r * n..(r + 1) * n], dv, top);
                grads.out_b[r] += dv;
                axpy(
                    &mut dh_above[lane * n..(lane + 1) * n],
                    dv,
                    &params.out_w[r * n..(r + 1) * n],
                );
            }
        }
        for l in (0..depth).rev() {
            for lane in 0..lanes {
                let g0 = gi(t, l, lane);
                let at = hi(t, l, lane);
                let fut = (l * lanes + lane) * n;
                let da_row = &mut da[lane * 4 * n..(lane + 1) * 4 * n];
                for k in 0..n {
                    let (i_g, f_g, o_g, g_g) = (
                        tape.gates[g0 + k],
                        tape.gates[g0 + n + k],
                        tape.gates[g0 + 2 * n + k],
                        tape.gates[g0 + 3 * n + k],
                    );
                    let tc = tape.tanh_c[at + k];
                    let dh = dh_above[lane * n + k] + dh_future[fut + k];
                    let dc = dc_future[fut + k] + dh * o_g * (1.0 - tc * tc);
                    let c_prev = if t == 0 {
                        initial.lanes[lane].c[l][k]
                    } else {
                        tape.c[hi(t - 1, l, lane) + k]
                    };
                    da_row[k] = dc * g_g * i_g * (1.0 - i_g);
                    da_row[n + k] = dc * c_prev * f_g * (1.0 - f_g);
                    da_row[2 * n + k] = dh * tc * o_g * (1.0 - o_g);
                    da_row[3 * n + k] = dc * i_g * (1.0 - g_g * g_g);
                    dc_future[fut + k] = dc * f_g;
                }
            }
            // Rebuild the layer inputs (same as forward).
            for lane in 0..lanes {
                let xrow = &mut xb[lane * 2 * n..(lane + 1) * 2 * n];
                if l == 0 {
                    xrow[..n].copy_from_slice(&tape.x[xi(t, lane)..xi(t, lane) + n]);
                } else {
                    let below = hi(t, l - 1, lane);
                    xrow[..n].copy_from_slice(&tape.h[below..below + n]);
                }
                if t == 0 {
                    xrow[n..].copy_from_slice(&initial.lanes[lane].h[l]);
                } else {
                    let prev = hi(t - 1, l, lane);
                    xrow[n..].copy_from_slice(&tape.h[prev..prev + n]);
                }
            }
            // dW += da^T X and dX = W^T da, weight rows streamed once.
            let layer_grad = &mut grads.layers[l];
            let layer = &params.layers[l];
            dx.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..4 * n {
                let dwrow = &mut layer_grad.w[r * 2 * n..(r + 1) * 2 * n];
                let wrow = &layer.w[r * 2 * n..(r + 1) * 2 * n];
                for lane in 0..lanes {
                    let a = da[lane * 4 * n + r];
                    if a == 0.0 {
                        continue;
                    }
                    layer_grad.b[r] += a;
                    axpy(dwrow, a, &xb[lane * 2 * n..(lane + 1) * 2 * n]);
                    axpy(&mut dx[lane * 2 * n..(lane + 1) * 2 * n], a, wrow);
                }
            }
            for lane in 0..lanes {
                dh_above[lane * n..(lane + 1) * n]
                    .copy_from_slice(&dx[lane * 2 * n..lane * 2 * n + n]);
                let fut = (l * lanes + lane) * n;
                dh_future[fut..fut + n].copy_from_slice(&dx[lane * 2 * n + n..(lane + 1) * 2 * n]);
            }
        }
        // dh_above now holds the embedding gradients at time t.
        for lane in 0..lanes {
            let tok = window.tokens[lane][t] as usize;
            axpy(
                &mut grads.embed[tok * n..(tok + 1) * n],
                1.0,
                &dh_above[lane * n..(lane + 1) * n],
            );
        }
    }

    BackwardOutput {
        loss,
        grads,
        final_state,
        masked_positions: total_masked,
        correct_predictions: correct,
    }
}

/// out += a * x
#[inline]
fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    debug_assert_eq!(out.len(), x.len());
    for (o, &v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("checkpoint is truncated or corrupt")]
    Corrupt,
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"PEV\0";
const CHECKPOINT_VERSION: u32 = 1;

/// Writes config plus the flat parameter array, little-endian throughout.
pub fn save_checkpoint(path: &Path, params: &LstmParams) -> Result<(), CheckpointError> {
    let mut buf = Vec::with_capacity(44 + params.param_count() * 8);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let cfg = &params.config;
    for v in [cfg.depth, cfg.width, cfg.vocab_in, cfg.vocab_out] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    buf.extend_from_slice(&cfg.init_range.to_le_bytes());
    buf.extend_from_slice(&(params.param_count() as u64).to_le_bytes());
    params.visit(|p| buf.extend_from_slice(&p.to_le_bytes()));
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<LstmParams, CheckpointError> {
    let mut file = std::fs::File::open(path)?;
    let mut header = [0u8; 8];
    file.read_exact(&mut header)?;
    if &header[0..4] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |f: &mut std::fs::File| -> Result<u32, CheckpointError> {
        f.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let depth = read_u32(&mut file)? as usize;
    let width = read_u32(&mut file)? as usize;
    let vocab_in = read_u32(&mut file)? as usize;
    let vocab_out = read_u32(&mut file)? as usize;
    let mut f64buf = [0u8; 8];
    file.read_exact(&mut f64buf)?;
    let init_range = f64::from_le_bytes(f64buf);
    file.read_exact(&mut f64buf)?;
    let count = u64::from_le_bytes(f64buf) as usize;
    let config = LstmConfig {
        depth,
        width,
        vocab_in,
        vocab_out,
        init_range,
    };
    let mut params = LstmParams::zeros(&config);
    if params.param_count() != count {
        return Err(CheckpointError::Corrupt);
    }
    let mut data = Vec::with_capacity(count * 8);
    file.read_to_end(&mut data)?;
    if data.len() != count * 8 {
        return Err(CheckpointError::Corrupt);
    }
    let mut it = data.chunks_exact(8);
    params.visit_mut(|p| {
        *p = f64::from_le_bytes(it.next().unwrap().try_into().unwrap());
    });
    Ok(params)
}
