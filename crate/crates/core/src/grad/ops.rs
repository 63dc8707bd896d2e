//! Forward and backward kernels for the layer set.
//!
//! These are plain functions on [`Tensor`]s. The [`Tape`](super::Tape)
//! records calls to them and replays the matching backward kernels.

use rand::Rng;

use super::Tensor;
use crate::error::{invalid, shape_err, Result};

/// Train/eval switch for stochastic layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Strided matrix view used by [`gemm`].
#[derive(Clone, Copy)]
struct View<'a> {
    data: &'a [f64],
    rs: usize,
    cs: usize,
}

/// `c = alpha * a(m×k) · b(k×n) + beta * c`, with `c` row-major contiguous.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: View<'_>,
    b: View<'_>,
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    let span = |rows: usize, cols: usize, v: &View<'_>| {
        if rows == 0 || cols == 0 {
            0
        } else {
            (rows - 1) * v.rs + (cols - 1) * v.cs + 1
        }
    };
    assert!(
        span(m, k, &a) <= a.data.len(),
        "gemm: lhs view out of bounds"
    );
    assert!(
        span(k, n, &b) <= b.data.len(),
        "gemm: rhs view out of bounds"
    );
    assert!(m * n <= c.len(), "gemm: output out of bounds");
    // SAFETY: the asserts above bound every element the kernel touches
    // inside the three slices, and `c` does not alias `a` or `b` because it
    // is a distinct mutable borrow.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn expect_rank(t: &Tensor, rank: usize, what: &str) -> Result<()> {
    if t.rank() != rank {
        return shape_err(format!(
            "{what}: expected rank {rank}, got shape {:?}",
            t.shape()
        ));
    }
    Ok(())
}

/// Conv1d geometry extracted from input and kernel shapes.
#[derive(Clone, Copy, Debug)]
struct ConvDims {
    n: usize,
    c_in: usize,
    len: usize,
    c_out: usize,
    k: usize,
    pad: usize,
    len_out: usize,
}

fn conv_dims(input: &Tensor, kernels: &Tensor, bias: &Tensor, padding: usize) -> Result<ConvDims> {
    expect_rank(input, 3, "conv1d input")?;
    expect_rank(kernels, 3, "conv1d kernels")?;
    let (n, c_in, len) = (input.dim(0), input.dim(1), input.dim(2));
    let (c_out, kc, k) = (kernels.dim(0), kernels.dim(1), kernels.dim(2));
    if kc != c_in {
        return shape_err(format!(
            "conv1d: kernels {:?} expect {kc} input channels, input {:?} has {c_in}",
            kernels.shape(),
            input.shape()
        ));
    }
    if bias.shape() != [c_out] {
        return shape_err(format!(
            "conv1d: bias {:?} should be [{c_out}]",
            bias.shape()
        ));
    }
    if k == 0 || k > len + 2 * padding {
        return shape_err(format!(
            "conv1d: kernel width {k} does not fit length {len} with padding {padding}"
        ));
    }
    Ok(ConvDims {
        n,
        c_in,
        len,
        c_out,
        k,
        pad: padding,
        len_out: len + 2 * padding - k + 1,
    })
}

/// Output positions `t` for which input index `t + j − pad` is in range.
fn valid_span(d: &ConvDims, j: usize) -> (usize, usize) {
    let lo = d.pad.saturating_sub(j).min(d.len_out);
    let hi = (d.len + d.pad).saturating_sub(j).min(d.len_out).max(lo);
    (lo, hi)
}

/// Unfold sample `s` of `[c_in, len]` into columns `s*len_out..` of the
/// batch matrix `[c_in*k, n*len_out]`. Out-of-range taps stay zero.
fn im2col(x: &[f64], d: &ConvDims, s: usize, cols: &mut [f64]) {
    let stride = d.n * d.len_out;
    for ci in 0..d.c_in {
        let row = &x[ci * d.len..(ci + 1) * d.len];
        for j in 0..d.k {
            let (lo, hi) = valid_span(d, j);
            let start = (ci * d.k + j) * stride + s * d.len_out;
            let src = lo + j - d.pad;
            cols[start + lo..start + hi].copy_from_slice(&row[src..src + hi - lo]);
        }
    }
}

/// Adjoint of [`im2col`] for sample `s`, accumulating into `dx`.
fn col2im(cols: &[f64], d: &ConvDims, s: usize, dx: &mut [f64]) {
    let stride = d.n * d.len_out;
    for ci in 0..d.c_in {
        let row = &mut dx[ci * d.len..(ci + 1) * d.len];
        for j in 0..d.k {
            let (lo, hi) = valid_span(d, j);
            let start = (ci * d.k + j) * stride + s * d.len_out;
            let dst = lo + j - d.pad;
            for (o, v) in row[dst..dst + hi - lo]
                .iter_mut()
                .zip(&cols[start + lo..start + hi])
            {
                *o += v;
            }
        }
    }
}

fn batch_cols(input: &Tensor, d: &ConvDims) -> Vec<f64> {
    let mut cols = vec![0.0; d.c_in * d.k * d.n * d.len_out];
    for s in 0..d.n {
        im2col(
            &input.data()[s * d.c_in * d.len..(s + 1) * d.c_in * d.len],
            d,
            s,
            &mut cols,
        );
    }
    cols
}

/// Stride-1 cross-correlation with zero padding.
///
/// `input` is `[N, C_in, L]`, `kernels` is `[C_out, C_in, k]`, output is
/// `[N, C_out, L + 2·padding − k + 1]`.
pub fn conv1d(input: &Tensor, kernels: &Tensor, bias: &Tensor, padding: usize) -> Result<Tensor> {
    let d = conv_dims(input, kernels, bias, padding)?;
    let ck = d.c_in * d.k;
    let wide = d.n * d.len_out;
    let cols = batch_cols(input, &d);
    // One GEMM for the whole batch: [c_out, ck] · [ck, n*len_out].
    let mut tmp = vec![0.0; d.c_out * wide];
    gemm(
        d.c_out,
        ck,
        wide,
        1.0,
        View {
            data: kernels.data(),
            rs: ck,
            cs: 1,
        },
        View {
            data: &cols,
            rs: wide,
            cs: 1,
        },
        0.0,
        &mut tmp,
    );
    let mut out = vec![0.0; d.n * d.c_out * d.len_out];
    for s in 0..d.n {
        for co in 0..d.c_out {
            let b = bias.data()[co];
            let src = &tmp[co * wide + s * d.len_out..co * wide + (s + 1) * d.len_out];
            let dst = &mut out[(s * d.c_out + co) * d.len_out..(s * d.c_out + co + 1) * d.len_out];
            for (o, v) in dst.iter_mut().zip(src) {
                *o = v + b;
            }
        }
    }
    Tensor::new(vec![d.n, d.c_out, d.len_out], out)
}

/// Gradients of [`conv1d`] with respect to (input, kernels, bias).
/// Each is computed only when requested.
pub fn conv1d_backward(
    input: &Tensor,
    kernels: &Tensor,
    bias: &Tensor,
    padding: usize,
    grad_out: &Tensor,
    want: [bool; 3],
) -> Result<[Option<Tensor>; 3]> {
    let d = conv_dims(input, kernels, bias, padding)?;
    if grad_out.shape() != [d.n, d.c_out, d.len_out] {
        return shape_err(format!(
            "conv1d backward: grad shape {:?}",
            grad_out.shape()
        ));
    }
    let ck = d.c_in * d.k;
    let wide = d.n * d.len_out;
    // Gradient regrouped as [c_out, n*len_out] to match the column matrix.
    let mut g = vec![0.0; d.c_out * wide];
    for s in 0..d.n {
        for co in 0..d.c_out {
            let src = &grad_out.data()
                [(s * d.c_out + co) * d.len_out..(s * d.c_out + co + 1) * d.len_out];
            g[co * wide + s * d.len_out..co * wide + (s + 1) * d.len_out].copy_from_slice(src);
        }
    }
    let db =
        want[2].then(|| Tensor::from_vec(g.chunks(wide).map(|row| row.iter().sum()).collect()));
    let dw = if want[1] {
        let cols = batch_cols(input, &d);
        let mut dw = vec![0.0; d.c_out * ck];
        // dW = g · colsᵀ
        gemm(
            d.c_out,
            wide,
            ck,
            1.0,
            View {
                data: &g,
                rs: wide,
                cs: 1,
            },
            View {
                data: &cols,
                rs: 1,
                cs: wide,
            },
            0.0,
            &mut dw,
        );
        Some(Tensor::new(kernels.shape().to_vec(), dw)?)
    } else {
        None
    };
    let dx = if want[0] {
        // dcols = Wᵀ · g
        let mut dcols = vec![0.0; ck * wide];
        gemm(
            ck,
            d.c_out,
            wide,
            1.0,
            View {
                data: kernels.data(),
                rs: 1,
                cs: ck,
            },
            View {
                data: &g,
                rs: wide,
                cs: 1,
            },
            0.0,
            &mut dcols,
        );
        let mut dx = vec![0.0; input.numel()];
        for s in 0..d.n {
            col2im(
                &dcols,
                &d,
                s,
                &mut dx[s * d.c_in * d.len..(s + 1) * d.c_in * d.len],
            );
        }
        Some(Tensor::new(input.shape().to_vec(), dx)?)
    } else {
        None
    };
    Ok([dx, dw, db])
}

/// Non-overlapping max pooling over the last axis of `[N, C, L]`.
///
/// Returns the pooled tensor and, per output element, the flat input index
/// that won (first index on ties). A trailing remainder shorter than the
/// window is dropped.
pub fn maxpool1d(input: &Tensor, window: usize) -> Result<(Tensor, Vec<usize>)> {
    expect_rank(input, 3, "maxpool1d input")?;
    let (n, c, len) = (input.dim(0), input.dim(1), input.dim(2));
    if window == 0 || len < window {
        return shape_err(format!(
            "maxpool1d: length {len} shorter than window {window}"
        ));
    }
    let len_out = len / window;
    let mut out = Vec::with_capacity(n * c * len_out);
    let mut argmax = Vec::with_capacity(n * c * len_out);
    let x = input.data();
    for row in 0..n * c {
        let base = row * len;
        for t in 0..len_out {
            let start = base + t * window;
            let mut best = start;
            for i in start + 1..start + window {
                if x[i] > x[best] {
                    best = i;
                }
            }
            out.push(x[best]);
            argmax.push(best);
        }
    }
    Ok((Tensor::new(vec![n, c, len_out], out)?, argmax))
}

pub fn maxpool1d_backward(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor,
) -> Result<Tensor> {
    let mut dx = Tensor::zeros(input_shape);
    for (&idx, g) in argmax.iter().zip(grad_out.data()) {
        dx.data_mut()[idx] += g;
    }
    Ok(dx)
}

/// Affine map `input · weightsᵀ + bias` with `weights` stored `[d_out, d_in]`.
pub fn dense(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n, d_in, d_out) = dense_dims(input, weights, bias)?;
    let mut out = Vec::with_capacity(n * d_out);
    for _ in 0..n {
        out.extend_from_slice(bias.data());
    }
    gemm(
        n,
        d_in,
        d_out,
        1.0,
        View {
            data: input.data(),
            rs: d_in,
            cs: 1,
        },
        View {
            data: weights.data(),
            rs: 1,
            cs: d_in,
        },
        1.0,
        &mut out,
    );
    Tensor::new(vec![n, d_out], out)
}

fn dense_dims(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<(usize, usize, usize)> {
    expect_rank(input, 2, "dense input")?;
    expect_rank(weights, 2, "dense weights")?;
    let (n, d_in) = (input.dim(0), input.dim(1));
    let (d_out, w_in) = (weights.dim(0), weights.dim(1));
    if w_in != d_in {
        return shape_err(format!(
            "dense: input width {d_in} does not match weights {:?}",
            weights.shape()
        ));
    }
    if bias.shape() != [d_out] {
        return shape_err(format!(
            "dense: bias {:?} should be [{d_out}]",
            bias.shape()
        ));
    }
    Ok((n, d_in, d_out))
}

/// Gradients of [`dense`] with respect to (input, weights, bias).
pub fn dense_backward(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    grad_out: &Tensor,
    want: [bool; 3],
) -> Result<[Option<Tensor>; 3]> {
    let (n, d_in, d_out) = dense_dims(input, weights, bias)?;
    if grad_out.shape() != [n, d_out] {
        return shape_err(format!("dense backward: grad shape {:?}", grad_out.shape()));
    }
    let g = grad_out.data();
    let dx = if want[0] {
        let mut dx = vec![0.0; n * d_in];
        gemm(
            n,
            d_out,
            d_in,
            1.0,
            View {
                data: g,
                rs: d_out,
                cs: 1,
            },
            View {
                data: weights.data(),
                rs: d_in,
                cs: 1,
            },
            0.0,
            &mut dx,
        );
        Some(Tensor::new(vec![n, d_in], dx)?)
    } else {
        None
    };
    let dw = if want[1] {
        let mut dw = vec![0.0; d_out * d_in];
        gemm(
            d_out,
            n,
            d_in,
            1.0,
            View {
                data: g,
                rs: 1,
                cs: d_out,
            },
            View {
                data: input.data(),
                rs: d_in,
                cs: 1,
            },
            0.0,
            &mut dw,
        );
        Some(Tensor::new(vec![d_out, d_in], dw)?)
    } else {
        None
    };
    let db = want[2].then(|| {
        let mut db = vec![0.0; d_out];
        for row in g.chunks(d_out) {
            for (acc, v) in db.iter_mut().zip(row) {
                *acc += v;
            }
        }
        Tensor::from_vec(db)
    });
    Ok([dx, dw, db])
}

pub fn relu(input: &Tensor) -> Tensor {
    let data = input
        .data()
        .iter()
        .map(|&v| if v > 0.0 { v } else { 0.0 })
        .collect();
    Tensor::new(input.shape().to_vec(), data).expect("same shape")
}

/// Gradient of relu; zero at `x <= 0`.
pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Tensor {
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(input.shape().to_vec(), data).expect("same shape")
}

/// Inverted dropout. Returns the output and, in train mode with a positive
/// rate, the multiplicative mask (0 or `1/(1−rate)`) that was applied.
pub fn dropout<R: Rng + ?Sized>(
    input: &Tensor,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor, Option<Vec<f64>>)> {
    if !(0.0..1.0).contains(&rate) {
        return invalid(format!("dropout rate {rate} outside [0, 1)"));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((input.clone(), None));
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..input.numel())
        .map(|_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                keep
            }
        })
        .collect();
    let data = input.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
    Ok((Tensor::new(input.shape().to_vec(), data)?, Some(mask)))
}

/// Row-wise softmax of `[N, M]` logits with max subtraction.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    expect_rank(logits, 2, "softmax logits")?;
    let m = logits.dim(1);
    let mut out = Vec::with_capacity(logits.numel());
    for row in logits.data().chunks(m.max(1)) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        out.extend(exps.into_iter().map(|e| e / total));
    }
    Tensor::new(logits.shape().to_vec(), out)
}

/// Index of the 1 in a one-hot row.
fn one_hot_index(row: &[f64]) -> Option<usize> {
    let mut found = None;
    for (i, &v) in row.iter().enumerate() {
        if v == 1.0 {
            if found.is_some() {
                return None;
            }
            found = Some(i);
        } else if v != 0.0 {
            return None;
        }
    }
    found
}

/// Mean cross-entropy between softmax(`logits`) and one-hot `targets`.
///
/// Returns `(loss, probabilities)`. The loss uses log-softmax directly so
/// very large logit gaps do not overflow.
pub fn softmax_cross_entropy(logits: &Tensor, targets: &Tensor) -> Result<(f64, Tensor)> {
    expect_rank(logits, 2, "cross-entropy logits")?;
    if logits.shape() != targets.shape() {
        return shape_err(format!(
            "cross-entropy: logits {:?} vs targets {:?}",
            logits.shape(),
            targets.shape()
        ));
    }
    let (n, m) = (logits.dim(0), logits.dim(1));
    if n == 0 || m == 0 {
        return shape_err("cross-entropy on empty batch");
    }
    let mut loss = 0.0;
    for (row, (x, y)) in logits
        .data()
        .chunks(m)
        .zip(targets.data().chunks(m))
        .enumerate()
    {
        let target = one_hot_index(y).ok_or_else(|| {
            crate::Error::InvalidArgument(format!("target row {row} is not one-hot"))
        })?;
        let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = x.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss -= x[target] - max - log_z;
    }
    Ok((loss / n as f64, softmax(logits)?))
}

/// Gradient of mean cross-entropy with respect to the logits: `(p − y)/N`.
pub fn softmax_cross_entropy_backward(probs: &Tensor, targets: &Tensor, grad_loss: f64) -> Tensor {
    let n = probs.dim(0) as f64;
    let data = probs
        .data()
        .iter()
        .zip(targets.data())
        .map(|(p, y)| grad_loss * (p - y) / n)
        .collect();
    Tensor::new(probs.shape().to_vec(), data).expect("same shape")
}
