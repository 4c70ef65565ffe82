//! Differentiable layers over a flat parameter vector.
//!
//! Tensors are row-major `f64` buffers. Sequence-free layers take `rows`
//! independent samples; 1-D convolutions use a channels-last `(rows, length,
//! channels)` layout. Each layer's `forward` returns whatever `backward`
//! needs, and `backward` accumulates into a gradient buffer laid out like
//! the parameters.

use rand::Rng;

use super::gemm::gemm;

/// Location of a parameter tensor inside the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub offset: usize,
    pub len: usize,
}

impl Slot {
    pub fn of<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.offset..self.offset + self.len]
    }

    pub fn of_mut<'a>(&self, p: &'a mut [f64]) -> &'a mut [f64] {
        &mut p[self.offset..self.offset + self.len]
    }
}

/// Hands out consecutive slots and records their names.
#[derive(Debug, Default, Clone)]
pub struct LayoutBuilder {
    pub len: usize,
    pub names: Vec<(String, Slot)>,
}

impl LayoutBuilder {
    pub fn alloc(&mut self, name: impl Into<String>, len: usize) -> Slot {
        let slot = Slot { offset: self.len, len };
        self.len += len;
        self.names.push((name.into(), slot));
        slot
    }
}

fn uniform_fill<R: Rng + ?Sized>(out: &mut [f64], bound: f64, rng: &mut R) {
    for v in out {
        *v = rng.random_range(-bound..=bound);
    }
}

#[derive(Debug, Clone)]
pub struct Dense {
    pub inp: usize,
    pub out: usize,
    pub w: Slot,
    pub b: Slot,
}

impl Dense {
    pub fn new(layout: &mut LayoutBuilder, name: &str, inp: usize, out: usize) -> Self {
        let w = layout.alloc(format!("{name}.weight"), out * inp);
        let b = layout.alloc(format!("{name}.bias"), out);
        Self { inp, out, w, b }
    }

    /// Uniform `±gain·sqrt(3/fan_in)`, zero bias.
    pub fn init<R: Rng + ?Sized>(&self, p: &mut [f64], gain: f64, rng: &mut R) {
        uniform_fill(self.w.of_mut(p), gain * (3.0 / self.inp as f64).sqrt(), rng);
        self.b.of_mut(p).fill(0.0);
    }

    pub fn forward(&self, p: &[f64], x: &[f64], rows: usize) -> Vec<f64> {
        let mut y = Vec::with_capacity(rows * self.out);
        let bias = self.b.of(p);
        for _ in 0..rows {
            y.extend_from_slice(bias);
        }
        gemm(rows, self.out, self.inp, x, false, self.w.of(p), true, 1.0, &mut y);
        y
    }

    /// Accumulates weight/bias gradients; returns `dx` when requested.
    pub fn backward(&self, p: &[f64], x: &[f64], dy: &[f64], rows: usize, g: &mut [f64], want_dx: bool) -> Option<Vec<f64>> {
        gemm(self.out, self.inp, rows, dy, true, x, false, 1.0, self.w.of_mut(g));
        let db = self.b.of_mut(g);
        for r in 0..rows {
            for (d, v) in db.iter_mut().zip(&dy[r * self.out..(r + 1) * self.out]) {
                *d += v;
            }
        }
        want_dx.then(|| {
            let mut dx = vec![0.0; rows * self.inp];
            gemm(rows, self.inp, self.out, dy, false, self.w.of(p), false, 0.0, &mut dx);
            dx
        })
    }
}

/// 1-D convolution, channels-last, zero padding.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub in_len: usize,
    pub out_len: usize,
    /// `(out_ch, kernel·in_ch)`, column index `tap·in_ch + c`.
    pub w: Slot,
    pub b: Slot,
}

impl Conv1d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(layout: &mut LayoutBuilder, name: &str, in_len: usize, in_ch: usize, out_ch: usize, kernel: usize, stride: usize, pad: usize) -> Self {
        assert!(in_len + 2 * pad >= kernel, "convolution wider than padded input");
        let out_len = (in_len + 2 * pad - kernel) / stride + 1;
        let w = layout.alloc(format!("{name}.weight"), out_ch * kernel * in_ch);
        let b = layout.alloc(format!("{name}.bias"), out_ch);
        Self { in_ch, out_ch, kernel, stride, pad, in_len, out_len, w, b }
    }

    pub fn init<R: Rng + ?Sized>(&self, p: &mut [f64], gain: f64, rng: &mut R) {
        uniform_fill(self.w.of_mut(p), gain * (3.0 / (self.kernel * self.in_ch) as f64).sqrt(), rng);
        self.b.of_mut(p).fill(0.0);
    }

    fn im2col(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let kc = self.kernel * self.in_ch;
        let mut col = vec![0.0; rows * self.out_len * kc];
        for r in 0..rows {
            let xr = &x[r * self.in_len * self.in_ch..(r + 1) * self.in_len * self.in_ch];
            for o in 0..self.out_len {
                let dst = &mut col[(r * self.out_len + o) * kc..(r * self.out_len + o + 1) * kc];
                for tap in 0..self.kernel {
                    let i = (o * self.stride + tap) as isize - self.pad as isize;
                    if i >= 0 && (i as usize) < self.in_len {
                        let i = i as usize;
                        dst[tap * self.in_ch..(tap + 1) * self.in_ch].copy_from_slice(&xr[i * self.in_ch..(i + 1) * self.in_ch]);
                    }
                }
            }
        }
        col
    }

    /// Returns `(y, col)`; `col` is the cached im2col matrix.
    pub fn forward(&self, p: &[f64], x: &[f64], rows: usize) -> (Vec<f64>, Vec<f64>) {
        let col = self.im2col(x, rows);
        let n = rows * self.out_len;
        let mut y = Vec::with_capacity(n * self.out_ch);
        let bias = self.b.of(p);
        for _ in 0..n {
            y.extend_from_slice(bias);
        }
        gemm(n, self.out_ch, self.kernel * self.in_ch, &col, false, self.w.of(p), true, 1.0, &mut y);
        (y, col)
    }

    pub fn backward(&self, p: &[f64], col: &[f64], dy: &[f64], rows: usize, g: &mut [f64], want_dx: bool) -> Option<Vec<f64>> {
        let n = rows * self.out_len;
        let kc = self.kernel * self.in_ch;
        gemm(self.out_ch, kc, n, dy, true, col, false, 1.0, self.w.of_mut(g));
        let db = self.b.of_mut(g);
        for r in 0..n {
            for (d, v) in db.iter_mut().zip(&dy[r * self.out_ch..(r + 1) * self.out_ch]) {
                *d += v;
            }
        }
        if !want_dx {
            return None;
        }
        let mut dcol = vec![0.0; n * kc];
        gemm(n, kc, self.out_ch, dy, false, self.w.of(p), false, 0.0, &mut dcol);
        let mut dx = vec![0.0; rows * self.in_len * self.in_ch];
        for r in 0..rows {
            for o in 0..self.out_len {
                let src = &dcol[(r * self.out_len + o) * kc..(r * self.out_len + o + 1) * kc];
                for tap in 0..self.kernel {
                    let i = (o * self.stride + tap) as isize - self.pad as isize;
                    if i >= 0 && (i as usize) < self.in_len {
                        let base = (r * self.in_len + i as usize) * self.in_ch;
                        for c in 0..self.in_ch {
                            dx[base + c] += src[tap * self.in_ch + c];
                        }
                    }
                }
            }
        }
        Some(dx)
    }
}

/// Transposed 1-D convolution (the adjoint of [`Conv1d`] with the same
/// geometry), channels-last.
#[derive(Debug, Clone)]
pub struct Deconv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub in_len: usize,
    pub out_len: usize,
    /// `(in_ch, kernel·out_ch)`, column index `tap·out_ch + c`.
    pub w: Slot,
    pub b: Slot,
}

impl Deconv1d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        layout: &mut LayoutBuilder,
        name: &str,
        in_len: usize,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        output_pad: usize,
    ) -> Self {
        let out_len = (in_len - 1) * stride + kernel + output_pad - 2 * pad;
        let w = layout.alloc(format!("{name}.weight"), in_ch * kernel * out_ch);
        let b = layout.alloc(format!("{name}.bias"), out_ch);
        Self { in_ch, out_ch, kernel, stride, pad, in_len, out_len, w, b }
    }

    pub fn init<R: Rng + ?Sized>(&self, p: &mut [f64], gain: f64, rng: &mut R) {
        // fan-in of each output is about kernel/stride input positions
        let fan_in = (self.in_ch * self.kernel).div_ceil(self.stride).max(1);
        uniform_fill(self.w.of_mut(p), gain * (3.0 / fan_in as f64).sqrt(), rng);
        self.b.of_mut(p).fill(0.0);
    }

    fn target(&self, i: usize, tap: usize) -> Option<usize> {
        let o = (i * self.stride + tap) as isize - self.pad as isize;
        (o >= 0 && (o as usize) < self.out_len).then_some(o as usize)
    }

    pub fn forward(&self, p: &[f64], x: &[f64], rows: usize) -> Vec<f64> {
        let n = rows * self.in_len;
        let kc = self.kernel * self.out_ch;
        let mut z = vec![0.0; n * kc];
        gemm(n, kc, self.in_ch, x, false, self.w.of(p), false, 0.0, &mut z);
        let mut y = Vec::with_capacity(rows * self.out_len * self.out_ch);
        let bias = self.b.of(p);
        for _ in 0..rows * self.out_len {
            y.extend_from_slice(bias);
        }
        for r in 0..rows {
            for i in 0..self.in_len {
                let zr = &z[(r * self.in_len + i) * kc..(r * self.in_len + i + 1) * kc];
                for tap in 0..self.kernel {
                    if let Some(o) = self.target(i, tap) {
                        let dst = &mut y[(r * self.out_len + o) * self.out_ch..(r * self.out_len + o + 1) * self.out_ch];
                        for (d, s) in dst.iter_mut().zip(&zr[tap * self.out_ch..(tap + 1) * self.out_ch]) {
                            *d += s;
                        }
                    }
                }
            }
        }
        y
    }

    pub fn backward(&self, p: &[f64], x: &[f64], dy: &[f64], rows: usize, g: &mut [f64], want_dx: bool) -> Option<Vec<f64>> {
        let n = rows * self.in_len;
        let kc = self.kernel * self.out_ch;
        let mut dz = vec![0.0; n * kc];
        for r in 0..rows {
            for i in 0..self.in_len {
                let dst = &mut dz[(r * self.in_len + i) * kc..(r * self.in_len + i + 1) * kc];
                for tap in 0..self.kernel {
                    if let Some(o) = self.target(i, tap) {
                        dst[tap * self.out_ch..(tap + 1) * self.out_ch]
                            .copy_from_slice(&dy[(r * self.out_len + o) * self.out_ch..(r * self.out_len + o + 1) * self.out_ch]);
                    }
                }
            }
        }
        gemm(self.in_ch, kc, n, x, true, &dz, false, 1.0, self.w.of_mut(g));
        let db = self.b.of_mut(g);
        for r in 0..rows * self.out_len {
            for (d, v) in db.iter_mut().zip(&dy[r * self.out_ch..(r + 1) * self.out_ch]) {
                *d += v;
            }
        }
        want_dx.then(|| {
            let mut dx = vec![0.0; n * self.in_ch];
            gemm(n, self.in_ch, kc, &dz, false, self.w.of(p), true, 0.0, &mut dx);
            dx
        })
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

pub fn relu_inplace(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// `dy ← dy·[y > 0]` given the ReLU output `y`.
pub fn relu_backward(y: &[f64], dy: &mut [f64]) {
    for (d, &v) in dy.iter_mut().zip(y) {
        if v <= 0.0 {
            *d = 0.0;
        }
    }
}

pub fn logistic_inplace(x: &mut [f64]) {
    for v in x {
        *v = logistic(*v);
    }
}

pub fn logistic_backward(y: &[f64], dy: &mut [f64]) {
    for (d, &s) in dy.iter_mut().zip(y) {
        *d *= s * (1.0 - s);
    }
}

pub fn tanh_inplace(x: &mut [f64]) {
    for v in x {
        *v = v.tanh();
    }
}

pub fn tanh_backward(y: &[f64], dy: &mut [f64]) {
    for (d, &t) in dy.iter_mut().zip(y) {
        *d *= 1.0 - t * t;
    }
}

/// LSTM cell unrolled over a time-major sequence. Gate order: input,
/// forget, candidate, output.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub inp: usize,
    pub hidden: usize,
    pub wx: Slot,
    pub wh: Slot,
    pub b: Slot,
}

/// Saved activations of one unrolled sequence.
#[derive(Debug, Clone)]
pub struct LstmCache {
    pub steps: usize,
    pub batch: usize,
    /// Post-activation gates, `(steps·batch, 4·hidden)`.
    pub gates: Vec<f64>,
    /// Cell states `c_0 … c_T`, `(steps+1)·batch·hidden`.
    pub cells: Vec<f64>,
    /// Hidden states `h_0 … h_T`.
    pub hiddens: Vec<f64>,
    /// `tanh(c_t)` for `t = 1..=T`.
    pub tanh_c: Vec<f64>,
}

impl LstmCache {
    /// `h_T` for every sequence in the batch.
    pub fn last_hidden(&self) -> &[f64] {
        let bh = self.batch * (self.hiddens.len() / ((self.steps + 1) * self.batch).max(1));
        &self.hiddens[self.steps * bh..(self.steps + 1) * bh]
    }

    pub fn last_cell(&self) -> &[f64] {
        let bh = self.cells.len() / (self.steps + 1);
        &self.cells[self.steps * bh..(self.steps + 1) * bh]
    }

    /// Outputs `h_1 … h_T`, `(steps·batch, hidden)`.
    pub fn outputs(&self) -> &[f64] {
        let bh = self.hiddens.len() / (self.steps + 1);
        &self.hiddens[bh..]
    }
}

impl Lstm {
    pub fn new(layout: &mut LayoutBuilder, name: &str, inp: usize, hidden: usize) -> Self {
        let wx = layout.alloc(format!("{name}.weight_ih"), 4 * hidden * inp);
        let wh = layout.alloc(format!("{name}.weight_hh"), 4 * hidden * hidden);
        let b = layout.alloc(format!("{name}.bias"), 4 * hidden);
        Self { inp, hidden, wx, wh, b }
    }

    pub fn init<R: Rng + ?Sized>(&self, p: &mut [f64], rng: &mut R) {
        let bound = 1.0 / (self.hidden as f64).sqrt();
        uniform_fill(self.wx.of_mut(p), bound, rng);
        uniform_fill(self.wh.of_mut(p), bound, rng);
        let b = self.b.of_mut(p);
        b.fill(0.0);
        // forget gate bias 1
        b[self.hidden..2 * self.hidden].fill(1.0);
    }

    /// `x`: `(steps·batch, inp)` time-major; `h0`, `c0`: `(batch, hidden)`.
    pub fn forward(&self, p: &[f64], x: &[f64], steps: usize, batch: usize, h0: &[f64], c0: &[f64]) -> LstmCache {
        let hd = self.hidden;
        let g4 = 4 * hd;
        let bh = batch * hd;
        let mut gates = Vec::with_capacity(steps * batch * g4);
        let bias = self.b.of(p);
        for _ in 0..steps * batch {
            gates.extend_from_slice(bias);
        }
        gemm(steps * batch, g4, self.inp, x, false, self.wx.of(p), true, 1.0, &mut gates);
        let mut cells = Vec::with_capacity((steps + 1) * bh);
        let mut hiddens = Vec::with_capacity((steps + 1) * bh);
        cells.extend_from_slice(c0);
        hiddens.extend_from_slice(h0);
        let mut tanh_c = Vec::with_capacity(steps * bh);
        for t in 0..steps {
            let gt = &mut gates[t * batch * g4..(t + 1) * batch * g4];
            gemm(batch, g4, hd, &hiddens[t * bh..(t + 1) * bh], false, self.wh.of(p), true, 1.0, gt);
            for r in 0..batch {
                let row = &mut gt[r * g4..(r + 1) * g4];
                for k in 0..hd {
                    row[k] = logistic(row[k]);
                    row[hd + k] = logistic(row[hd + k]);
                    row[2 * hd + k] = row[2 * hd + k].tanh();
                    row[3 * hd + k] = logistic(row[3 * hd + k]);
                }
                for k in 0..hd {
                    let c_prev = cells[t * bh + r * hd + k];
                    let c = row[hd + k] * c_prev + row[k] * row[2 * hd + k];
                    let tc = c.tanh();
                    cells.push(c);
                    tanh_c.push(tc);
                    hiddens.push(row[3 * hd + k] * tc);
                }
            }
        }
        LstmCache { steps, batch, gates, cells, hiddens, tanh_c }
    }

    /// Backpropagate `dh_out` (`(steps·batch, hidden)`, gradient w.r.t. each
    /// `h_t`) through time. The initial state is treated as a constant.
    pub fn backward(&self, p: &[f64], x: &[f64], cache: &LstmCache, dh_out: &[f64], g: &mut [f64], want_dx: bool) -> Option<Vec<f64>> {
        let hd = self.hidden;
        let g4 = 4 * hd;
        let (steps, batch) = (cache.steps, cache.batch);
        let bh = batch * hd;
        let mut dgates = vec![0.0; steps * batch * g4];
        let mut dh_next = vec![0.0; bh];
        let mut dc_next = vec![0.0; bh];
        for t in (0..steps).rev() {
            for r in 0..batch {
                let gr = &cache.gates[(t * batch + r) * g4..(t * batch + r + 1) * g4];
                let dg = &mut dgates[(t * batch + r) * g4..(t * batch + r + 1) * g4];
                for k in 0..hd {
                    let idx = r * hd + k;
                    let (i, f, gg, o) = (gr[k], gr[hd + k], gr[2 * hd + k], gr[3 * hd + k]);
                    let tc = cache.tanh_c[t * bh + idx];
                    let c_prev = cache.cells[t * bh + idx];
                    let dh = dh_out[t * bh + idx] + dh_next[idx];
                    let d_o = dh * tc;
                    let dc = dh * o * (1.0 - tc * tc) + dc_next[idx];
                    dg[k] = dc * gg * i * (1.0 - i);
                    dg[hd + k] = dc * c_prev * f * (1.0 - f);
                    dg[2 * hd + k] = dc * i * (1.0 - gg * gg);
                    dg[3 * hd + k] = d_o * o * (1.0 - o);
                    dc_next[idx] = dc * f;
                }
            }
            let dgt = &dgates[t * batch * g4..(t + 1) * batch * g4];
            let h_prev = &cache.hiddens[t * bh..(t + 1) * bh];
            gemm(g4, hd, batch, dgt, true, h_prev, false, 1.0, self.wh.of_mut(g));
            gemm(batch, hd, g4, dgt, false, self.wh.of(p), false, 0.0, &mut dh_next);
        }
        gemm(g4, self.inp, steps * batch, &dgates, true, x, false, 1.0, self.wx.of_mut(g));
        let db = self.b.of_mut(g);
        for r in 0..steps * batch {
            for (d, v) in db.iter_mut().zip(&dgates[r * g4..(r + 1) * g4]) {
                *d += v;
            }
        }
        want_dx.then(|| {
            let mut dx = vec![0.0; steps * batch * self.inp];
            gemm(steps * batch, self.inp, g4, &dgates, false, self.wx.of(p), false, 0.0, &mut dx);
            dx
        })
    }
}
