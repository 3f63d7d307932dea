//! Batched forward propagation of input jets through the MLP and the matching
//! reverse sweep over parameters.
//!
//! Every activation row stores `C` channels for `n` points, channel-major:
//! `row[c * n + p]`. Channels follow [`crate::autodiff::channel_count`]:
//! value, first derivatives, then the packed upper Hessian triangle. The
//! value channel is bit-identical to [`super::forward`].

use crate::autodiff::{channel_count, packed_index, tanh, Jet2};
use crate::{Error, Result};

use super::{Layout, MlpSpec};

/// Highest input derivative propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    Gradient,
    /// Value, gradient and the pure second derivatives `d^2/dx_i^2` only,
    /// stored as channels `1 + dim + i`.
    DiagHessian,
    Hessian,
}

impl Order {
    pub fn channels(self, dim: usize) -> usize {
        match self {
            Order::Value => 1,
            Order::Gradient => 1 + dim,
            Order::DiagHessian => 1 + 2 * dim,
            Order::Hessian => channel_count(dim),
        }
    }
}

/// Scratch buffers for one chunk of at most `capacity` points.
///
/// One workspace per worker; it is reused across calls without reallocating.
pub struct BatchWorkspace {
    spec: MlpSpec,
    layout: Layout,
    order: Order,
    dim: usize,
    channels: usize,
    capacity: usize,
    n: usize,
    /// Packed second-derivative pairs `(i, j, channel)` with `i <= j`.
    pairs: Vec<(usize, usize, usize)>,
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
    out: Vec<f64>,
    act_bar: Vec<f64>,
    pre_bar: Vec<f64>,
}

impl BatchWorkspace {
    pub fn new(spec: &MlpSpec, order: Order, capacity: usize) -> Self {
        let dim = spec.input_dim;
        let channels = order.channels(dim);
        let width = spec.hidden_width;
        let row = channels * capacity;
        let mut pairs = Vec::new();
        match order {
            Order::Hessian => {
                for i in 0..dim {
                    for j in i..dim {
                        pairs.push((i, j, packed_index(i, j, dim)));
                    }
                }
            }
            Order::DiagHessian => pairs.extend((0..dim).map(|i| (i, i, 1 + dim + i))),
            _ => {}
        }
        BatchWorkspace {
            spec: *spec,
            layout: Layout::new(spec, 0),
            order,
            dim,
            channels,
            capacity,
            n: 0,
            pairs,
            input: vec![0.0; dim * row],
            pre: vec![vec![0.0; width * row]; spec.hidden_layers],
            act: vec![vec![0.0; width * row]; spec.hidden_layers],
            out: vec![0.0; row],
            act_bar: vec![0.0; width * row],
            pre_bar: vec![0.0; width * row],
        }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Points in the current chunk.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Propagates jets for `points` (`n * input_dim` coordinates, `n <= capacity`).
    pub fn forward(&mut self, params: &[f64], points: &[f64]) -> Result<()> {
        let d = self.dim;
        if points.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: points.len() % d,
            });
        }
        let n = points.len() / d;
        assert!(n <= self.capacity, "chunk larger than workspace capacity");
        if params.len() < self.layout.n_network() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.n_network(),
                got: params.len(),
            });
        }
        self.n = n;
        let c = self.channels;
        let stride = c * n;

        for i in 0..d {
            let row = &mut self.input[i * stride..(i + 1) * stride];
            row.fill(0.0);
            for p in 0..n {
                row[p] = points[p * d + i];
            }
            if c > 1 {
                row[(1 + i) * n..(2 + i) * n].fill(1.0);
            }
        }

        let shapes = self.layout.shapes().to_vec();
        let hidden = self.spec.hidden_layers;
        for (k, &(fan_out, fan_in)) in shapes.iter().enumerate() {
            let w = &params[self.layout.weight_offset(k)..self.layout.bias_offset(k)];
            let b = &params[self.layout.bias_offset(k)..self.layout.bias_offset(k) + fan_out];
            let src: &[f64] = if k == 0 { &self.input } else { &self.act[k - 1] };
            if k == hidden {
                affine(w, b, fan_out, fan_in, src, &mut self.out, n, stride);
            } else {
                affine(w, b, fan_out, fan_in, src, &mut self.pre[k], n, stride);
                activate(
                    &self.pre[k][..fan_out * stride],
                    &mut self.act[k][..fan_out * stride],
                    n,
                    d,
                    c,
                    &self.pairs,
                );
            }
        }
        Ok(())
    }

    /// Output channels of the current chunk, channel-major (`C * n`).
    pub fn output(&self) -> &[f64] {
        &self.out[..self.channels * self.n]
    }

    pub fn value(&self, p: usize) -> f64 {
        self.out[p]
    }

    /// Output jet of point `p`; requires [`Order::Hessian`].
    pub fn jet(&self, p: usize) -> Jet2<f64> {
        assert_eq!(self.order, Order::Hessian);
        let n = self.n;
        let ch: Vec<f64> = (0..self.channels).map(|c| self.out[c * n + p]).collect();
        Jet2::from_channels(self.dim, &ch)
    }

    /// Accumulates `sum_{p,c} out_bar[c*n+p] * d out[c*n+p] / d params` into
    /// `grad` (network part only).
    pub fn backward(&mut self, params: &[f64], out_bar: &[f64], grad: &mut [f64]) {
        let n = self.n;
        let c = self.channels;
        let d = self.dim;
        let stride = c * n;
        assert_eq!(out_bar.len(), stride);
        assert!(grad.len() >= self.layout.n_network());
        let shapes = self.layout.shapes().to_vec();
        let hidden = self.spec.hidden_layers;

        // output layer
        {
            let (_, fan_in) = shapes[hidden];
            let wo = self.layout.weight_offset(hidden);
            let bo = self.layout.bias_offset(hidden);
            let src = &self.act[hidden - 1];
            for j in 0..fan_in {
                grad[wo + j] += dot(out_bar, &src[j * stride..(j + 1) * stride]);
            }
            grad[bo] += out_bar[..n].iter().sum::<f64>();
            for j in 0..fan_in {
                let wj = params[wo + j];
                let dst = &mut self.act_bar[j * stride..(j + 1) * stride];
                for (a, &z) in dst.iter_mut().zip(out_bar) {
                    *a = wj * z;
                }
            }
        }

        for k in (0..hidden).rev() {
            let (fan_out, fan_in) = shapes[k];
            activate_backward(
                &self.pre[k][..fan_out * stride],
                &self.act[k][..fan_out * stride],
                &self.act_bar[..fan_out * stride],
                &mut self.pre_bar[..fan_out * stride],
                n,
                d,
                c,
                &self.pairs,
            );
            let wo = self.layout.weight_offset(k);
            let bo = self.layout.bias_offset(k);
            let src: &[f64] = if k == 0 { &self.input } else { &self.act[k - 1] };
            weight_grad(
                &self.pre_bar[..fan_out * stride],
                &src[..fan_in * stride],
                &mut grad[wo..wo + fan_out * fan_in],
                fan_out,
                fan_in,
                stride,
            );
            for r in 0..fan_out {
                grad[bo + r] += self.pre_bar[r * stride..r * stride + n].iter().sum::<f64>();
            }
            if k > 0 {
                transpose_apply(
                    &params[wo..wo + fan_out * fan_in],
                    &self.pre_bar[..fan_out * stride],
                    &mut self.act_bar[..fan_in * stride],
                    fan_out,
                    fan_in,
                    stride,
                );
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * k + l] * b[4 * k + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Lanes per register block in the row kernels.
const LANES: usize = 8;

/// `dst[o] = bias[o] (value channel) + sum_i w[o * rs + i * cs] * src[i]`
/// for whole rows of length `stride`, summed in `i` order.
#[allow(clippy::too_many_arguments)]
fn matmul_rows(
    w: &[f64],
    rs: usize,
    cs: usize,
    bias: Option<&[f64]>,
    n_out: usize,
    n_in: usize,
    src: &[f64],
    dst: &mut [f64],
    n: usize,
    stride: usize,
) {
    let mut o = 0;
    while o + 4 <= n_out {
        matmul_block::<4>(w, rs, cs, bias, o, n_in, src, dst, n, stride);
        o += 4;
    }
    while o < n_out {
        matmul_block::<1>(w, rs, cs, bias, o, n_in, src, dst, n, stride);
        o += 1;
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn matmul_block<const R: usize>(
    w: &[f64],
    rs: usize,
    cs: usize,
    bias: Option<&[f64]>,
    o: usize,
    n_in: usize,
    src: &[f64],
    dst: &mut [f64],
    n: usize,
    stride: usize,
) {
    let b: [f64; R] = std::array::from_fn(|q| bias.map_or(0.0, |b| b[o + q]));
    let mut k = 0;
    while k + LANES <= stride {
        let mut acc = [[0.0f64; LANES]; R];
        for q in 0..R {
            for l in 0..LANES {
                if k + l < n {
                    acc[q][l] = b[q];
                }
            }
        }
        for i in 0..n_in {
            let a: &[f64; LANES] = src[i * stride + k..i * stride + k + LANES].try_into().unwrap();
            for q in 0..R {
                let wq = w[(o + q) * rs + i * cs];
                for l in 0..LANES {
                    acc[q][l] += wq * a[l];
                }
            }
        }
        for q in 0..R {
            dst[(o + q) * stride + k..(o + q) * stride + k + LANES].copy_from_slice(&acc[q]);
        }
        k += LANES;
    }
    for kk in k..stride {
        for q in 0..R {
            let mut s = if kk < n { b[q] } else { 0.0 };
            for i in 0..n_in {
                s += w[(o + q) * rs + i * cs] * src[i * stride + kk];
            }
            dst[(o + q) * stride + kk] = s;
        }
    }
}

/// `out[r] = b[r] (value channel) + sum_j w[r, j] * src[j]`.
#[allow(clippy::too_many_arguments)]
fn affine(
    w: &[f64],
    b: &[f64],
    fan_out: usize,
    fan_in: usize,
    src: &[f64],
    out: &mut [f64],
    n: usize,
    stride: usize,
) {
    matmul_rows(w, fan_in, 1, Some(b), fan_out, fan_in, src, out, n, stride);
}

/// `act_bar[j] = sum_r w[r, j] * pre_bar[r]`.
fn transpose_apply(
    w: &[f64],
    pre_bar: &[f64],
    act_bar: &mut [f64],
    fan_out: usize,
    fan_in: usize,
    stride: usize,
) {
    matmul_rows(w, 1, fan_in, None, fan_in, fan_out, pre_bar, act_bar, 0, stride);
}

/// `grad[r, j] += <pre_bar[r], src[j]>`.
fn weight_grad(
    pre_bar: &[f64],
    src: &[f64],
    grad: &mut [f64],
    fan_out: usize,
    fan_in: usize,
    stride: usize,
) {
    let mut r = 0;
    while r < fan_out {
        let rb = if fan_out - r >= 4 { 4 } else { 1 };
        let mut j = 0;
        while j < fan_in {
            let jb = if fan_in - j >= 4 { 4 } else { 1 };
            match (rb, jb) {
                (4, 4) => wgrad_block::<4, 4>(pre_bar, src, grad, r, j, fan_in, stride),
                (4, _) => wgrad_block::<4, 1>(pre_bar, src, grad, r, j, fan_in, stride),
                (_, 4) => wgrad_block::<1, 4>(pre_bar, src, grad, r, j, fan_in, stride),
                _ => wgrad_block::<1, 1>(pre_bar, src, grad, r, j, fan_in, stride),
            }
            j += jb;
        }
        r += rb;
    }
}

#[inline(always)]
fn wgrad_block<const R: usize, const J: usize>(
    pre_bar: &[f64],
    src: &[f64],
    grad: &mut [f64],
    r: usize,
    j: usize,
    fan_in: usize,
    stride: usize,
) {
    const L: usize = 4;
    let zr: [&[f64]; R] = std::array::from_fn(|q| &pre_bar[(r + q) * stride..(r + q + 1) * stride]);
    let ar: [&[f64]; J] = std::array::from_fn(|t| &src[(j + t) * stride..(j + t + 1) * stride]);
    let mut acc = [[[0.0f64; L]; J]; R];
    let blocks = stride / L;
    for kb in 0..blocks {
        let a: [&[f64; L]; J] = std::array::from_fn(|t| ar[t][kb * L..kb * L + L].try_into().unwrap());
        for q in 0..R {
            let z: &[f64; L] = zr[q][kb * L..kb * L + L].try_into().unwrap();
            for t in 0..J {
                for l in 0..L {
                    acc[q][t][l] += z[l] * a[t][l];
                }
            }
        }
    }
    for q in 0..R {
        for t in 0..J {
            let mut s = (acc[q][t][0] + acc[q][t][1]) + (acc[q][t][2] + acc[q][t][3]);
            for k in blocks * L..stride {
                s += zr[q][k] * ar[t][k];
            }
            grad[(r + q) * fan_in + j + t] += s;
        }
    }
}

/// tanh applied to jets, row by row. Each channel is a contiguous loop so
/// that it vectorises.
fn activate(pre: &[f64], act: &mut [f64], n: usize, d: usize, c: usize, pairs: &[(usize, usize, usize)]) {
    let stride = c * n;
    for (z, a) in pre.chunks_exact(stride).zip(act.chunks_exact_mut(stride)) {
        let (t, rest) = a.split_at_mut(n);
        for (tp, &zp) in t.iter_mut().zip(&z[..n]) {
            *tp = tanh(zp);
        }
        if c == 1 {
            continue;
        }
        let t = &*t;
        for i in 0..d {
            let zi = &z[(1 + i) * n..(2 + i) * n];
            let ai = &mut rest[i * n..(1 + i) * n];
            for p in 0..n {
                let s1 = 1.0 - t[p] * t[p];
                ai[p] = s1 * zi[p];
            }
        }
        for &(i, j, ch) in pairs {
            let zi = &z[(1 + i) * n..(2 + i) * n];
            let zj = &z[(1 + j) * n..(2 + j) * n];
            let zc = &z[ch * n..(ch + 1) * n];
            let ac = &mut rest[(ch - 1) * n..ch * n];
            for p in 0..n {
                let s1 = 1.0 - t[p] * t[p];
                let s2 = t[p] * s1 * -2.0;
                ac[p] = s2 * zi[p] * zj[p] + s1 * zc[p];
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn activate_backward(
    pre: &[f64],
    act: &[f64],
    act_bar: &[f64],
    pre_bar: &mut [f64],
    n: usize,
    d: usize,
    c: usize,
    pairs: &[(usize, usize, usize)],
) {
    let stride = c * n;
    let rows = pre
        .chunks_exact(stride)
        .zip(act.chunks_exact(stride))
        .zip(act_bar.chunks_exact(stride))
        .zip(pre_bar.chunks_exact_mut(stride));
    for (((z, a), ab), zb) in rows {
        let t = &a[..n];
        let (zv, rest) = zb.split_at_mut(n);
        for p in 0..n {
            zv[p] = (1.0 - t[p] * t[p]) * ab[p];
        }
        for i in 0..d.min(c - 1) {
            let k0 = (1 + i) * n;
            let zbi = &mut rest[i * n..(1 + i) * n];
            for p in 0..n {
                let s1 = 1.0 - t[p] * t[p];
                let s2 = t[p] * s1 * -2.0;
                zbi[p] = s1 * ab[k0 + p];
                zv[p] += s2 * ab[k0 + p] * z[k0 + p];
            }
        }
        for &(i, j, ch) in pairs {
            let (ki, kj, kc) = ((1 + i) * n, (1 + j) * n, ch * n);
            for p in 0..n {
                let s1 = 1.0 - t[p] * t[p];
                let s2 = t[p] * s1 * -2.0;
                let s3 = -2.0 * (s1 * s1 + t[p] * s2);
                let abij = ab[kc + p];
                let zi = z[ki + p];
                let zj = z[kj + p];
                rest[kc - n + p] = s1 * abij;
                zv[p] += abij * (s3 * zi * zj + s2 * z[kc + p]);
                rest[ki - n + p] += s2 * abij * zj;
                rest[kj - n + p] += s2 * abij * zi;
            }
        }
    }
}


/// Output values at `points` (flat, `input_dim` coordinates each).
pub fn values(spec: &MlpSpec, params: &[f64], points: &[f64]) -> Result<Vec<f64>> {
    let cap = 256;
    let mut ws = BatchWorkspace::new(spec, Order::Value, cap);
    let mut out = Vec::with_capacity(points.len() / spec.input_dim);
    for chunk in points.chunks(cap * spec.input_dim) {
        ws.forward(params, chunk)?;
        out.extend_from_slice(ws.output());
    }
    Ok(out)
}

/// Output jets at `points`.
pub fn jets(spec: &MlpSpec, params: &[f64], points: &[f64]) -> Result<Vec<Jet2<f64>>> {
    let cap = 128;
    let mut ws = BatchWorkspace::new(spec, Order::Hessian, cap);
    let mut out = Vec::with_capacity(points.len() / spec.input_dim);
    for chunk in points.chunks(cap * spec.input_dim) {
        ws.forward(params, chunk)?;
        out.extend((0..ws.len()).map(|p| ws.jet(p)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_params, Var};
    use crate::network::{forward, forward_jet, forward_jet_generic, init_params};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, d: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn values_match_scalar_forward_bitwise() {
        let spec = MlpSpec::new(2, 3, 7).unwrap();
        let p = init_params(&spec, 11, &[]);
        let pts = random_points(300, 2, 1);
        let v = values(&spec, p.values(), &pts).unwrap();
        for (k, x) in pts.chunks(2).enumerate() {
            assert_eq!(v[k].to_bits(), forward(&spec, p.values(), x).unwrap().to_bits());
        }
    }

    #[test]
    fn diagonal_order_matches_full_hessian() {
        let spec = MlpSpec::new(2, 4, 9).unwrap();
        let p = init_params(&spec, 3, &[]);
        let pts = random_points(70, 2, 4);
        let mut full = BatchWorkspace::new(&spec, Order::Hessian, 70);
        let mut diag = BatchWorkspace::new(&spec, Order::DiagHessian, 70);
        full.forward(p.values(), &pts).unwrap();
        diag.forward(p.values(), &pts).unwrap();
        assert_eq!(diag.channels(), 5);
        // full channels: u, u_x, u_y, u_xx, u_xy, u_yy
        for (dc, fc) in [(0, 0), (1, 1), (2, 2), (3, 3), (4, 5)] {
            assert_eq!(diag.output()[dc * 70..(dc + 1) * 70], full.output()[fc * 70..(fc + 1) * 70]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bar_diag: Vec<f64> = (0..5 * 70).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut bar_full = vec![0.0; 6 * 70];
        for (dc, fc) in [(0, 0), (1, 1), (2, 2), (3, 3), (4, 5)] {
            bar_full[fc * 70..(fc + 1) * 70].copy_from_slice(&bar_diag[dc * 70..(dc + 1) * 70]);
        }
        let mut g_full = vec![0.0; spec.n_network_params()];
        let mut g_diag = g_full.clone();
        full.backward(p.values(), &bar_full, &mut g_full);
        diag.backward(p.values(), &bar_diag, &mut g_diag);
        let scale = g_full.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for (a, b) in g_full.iter().zip(&g_diag) {
            assert!((a - b).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn jets_match_generic_engine() {
        for (d, layers, width) in [(1, 1, 3), (2, 7, 20), (3, 2, 5)] {
            let spec = MlpSpec::new(d, layers, width).unwrap();
            let p = init_params(&spec, 5, &[]);
            let pts = random_points(150, d, 2);
            let js = jets(&spec, p.values(), &pts).unwrap();
            for (k, x) in pts.chunks(d).enumerate() {
                let g = forward_jet(&spec, p.values(), x).unwrap();
                assert_eq!(js[k].value(), g.value());
                for i in 0..d {
                    assert!((js[k].d(i) - g.d(i)).abs() <= 1e-14 * (1.0 + g.d(i).abs()));
                    for j in 0..d {
                        let (a, b) = (js[k].second(i, j), g.second(i, j));
                        assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()), "{a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn backward_matches_tape_gradient() {
        let spec = MlpSpec::new(2, 3, 6).unwrap();
        let p = init_params(&spec, 9, &[]);
        let pts = random_points(10, 2, 3);
        let c = channel_count(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let weights: Vec<f64> = (0..c * 10).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let mut ws = BatchWorkspace::new(&spec, Order::Hessian, 16);
        ws.forward(p.values(), &pts).unwrap();
        let mut grad = vec![0.0; p.len()];
        ws.backward(p.values(), &weights, &mut grad);

        let (_, reference) = grad_params::<_, crate::Error>(
            |theta: &[Var<'_>]| {
                let mut acc = Var::constant(0.0);
                for (k, x) in pts.chunks(2).enumerate() {
                    let j = forward_jet_generic(&spec, theta, x)?;
                    let mut ch = vec![Var::constant(0.0); c];
                    j.to_channels(&mut ch);
                    for (ci, v) in ch.into_iter().enumerate() {
                        acc = acc + v * weights[ci * 10 + k];
                    }
                }
                Ok(acc)
            },
            p.values(),
        )
        .unwrap();
        let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in grad.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn value_order_gradient_matches_tape() {
        let spec = MlpSpec::new(2, 2, 5).unwrap();
        let p = init_params(&spec, 2, &[]);
        let pts = random_points(7, 2, 8);
        let mut ws = BatchWorkspace::new(&spec, Order::Gradient, 8);
        ws.forward(p.values(), &pts).unwrap();
        // d/dtheta of sum_p (u + 0.5 u_x - u_y)
        let mut bar = vec![0.0; 3 * 7];
        bar[..7].fill(1.0);
        bar[7..14].fill(0.5);
        bar[14..].fill(-1.0);
        let mut grad = vec![0.0; p.len()];
        ws.backward(p.values(), &bar, &mut grad);
        let (_, reference) = grad_params::<_, crate::Error>(
            |theta: &[Var<'_>]| {
                let mut acc = Var::constant(0.0);
                for x in pts.chunks(2) {
                    let j = forward_jet_generic(&spec, theta, x)?;
                    acc = acc + j.value() + j.d(0) * 0.5 - j.d(1);
                }
                Ok(acc)
            },
            p.values(),
        )
        .unwrap();
        for (a, b) in grad.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn rejects_wrong_point_layout() {
        let spec = MlpSpec::default();
        let p = init_params(&spec, 1, &[]);
        let mut ws = BatchWorkspace::new(&spec, Order::Value, 4);
        assert!(ws.forward(p.values(), &[0.1, 0.2, 0.3]).is_err());
    }
}
