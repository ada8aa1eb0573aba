//! Forward and backward passes of the encoder, projection head and classifier.
//!
//! Activations inside the encoder are stored channel-major across the batch
//! (`C x B x H x W`), so each convolution is one GEMM over an im2col matrix of
//! shape `(C_in k k) x (B H_out W_out)`.

use std::ops::Deref;

use rand::Rng;

use crate::dataset::Image;
use crate::error::{Error, Result};
use crate::linalg::{gemm, Matrix, Op};
use crate::model::params::{Gradients, Parameters};

/// Guard added to row norms before normalising embeddings.
pub const NORM_EPS: f64 = 1e-12;

/// Images per forward chunk in inference mode.
const INFERENCE_CHUNK: usize = 256;

macro_rules! batch_newtype {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(pub Matrix);

        impl Deref for $name {
            type Target = Matrix;
            fn deref(&self) -> &Matrix {
                &self.0
            }
        }
    };
}

batch_newtype!(
    /// `b x d` encoder outputs.
    RepresentationBatch
);
batch_newtype!(
    /// `b x p` unit-norm projections.
    EmbeddingBatch
);
batch_newtype!(
    /// `b x n` softmax outputs.
    ProbabilityBatch
);

/// Whether stochastic layers (dropout) are active.
pub enum Mode<'a, R: Rng + ?Sized> {
    Eval,
    Train(&'a mut R),
}

impl Mode<'static, rand_chacha::ChaCha8Rng> {
    pub fn eval() -> Self {
        Mode::Eval
    }
}

struct ConvGeom {
    c_in: usize,
    c_out: usize,
    h: usize,
    w: usize,
    ho: usize,
    wo: usize,
    k: usize,
    stride: usize,
    pad: usize,
}

impl ConvGeom {
    fn rows(&self) -> usize {
        self.c_in * self.k * self.k
    }
}

fn geometry(params: &Parameters) -> Vec<ConvGeom> {
    let sizes = params.config.spatial_sizes();
    let mut c_in = 3;
    params
        .config
        .encoder
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let g = ConvGeom {
                c_in,
                c_out: b.filters,
                h: sizes[i][0],
                w: sizes[i][1],
                ho: sizes[i + 1][0],
                wo: sizes[i + 1][1],
                k: b.kernel,
                stride: b.stride,
                pad: b.padding(),
            };
            c_in = b.filters;
            g
        })
        .collect()
}

fn im2col(input: &[f64], batch: usize, g: &ConvGeom, cols: &mut [f64]) {
    let n_cols = batch * g.ho * g.wo;
    for ci in 0..g.c_in {
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let dst = &mut cols[row * n_cols..(row + 1) * n_cols];
                for n in 0..batch {
                    let src = &input[(ci * batch + n) * g.h * g.w..][..g.h * g.w];
                    for oy in 0..g.ho {
                        let out = &mut dst[(n * g.ho + oy) * g.wo..][..g.wo];
                        let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                        if iy < 0 || iy >= g.h as isize {
                            out.fill(0.0);
                            continue;
                        }
                        let src_row = &src[iy as usize * g.w..][..g.w];
                        for (ox, o) in out.iter_mut().enumerate() {
                            let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                            *o = if ix < 0 || ix >= g.w as isize { 0.0 } else { src_row[ix as usize] };
                        }
                    }
                }
            }
        }
    }
}

fn col2im(cols: &[f64], batch: usize, g: &ConvGeom, input_grad: &mut [f64]) {
    input_grad.fill(0.0);
    let n_cols = batch * g.ho * g.wo;
    for ci in 0..g.c_in {
        for ky in 0..g.k {
            for kx in 0..g.k {
                let row = (ci * g.k + ky) * g.k + kx;
                let src = &cols[row * n_cols..(row + 1) * n_cols];
                for n in 0..batch {
                    let dst = &mut input_grad[(ci * batch + n) * g.h * g.w..][..g.h * g.w];
                    for oy in 0..g.ho {
                        let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                        if iy < 0 || iy >= g.h as isize {
                            continue;
                        }
                        let col = &src[(n * g.ho + oy) * g.wo..][..g.wo];
                        let dst_row = &mut dst[iy as usize * g.w..][..g.w];
                        for (ox, v) in col.iter().enumerate() {
                            let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                            if ix >= 0 && ix < g.w as isize {
                                dst_row[ix as usize] += v;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn pack_images(params: &Parameters, images: &[&Image]) -> Result<Vec<f64>> {
    let [h, w] = params.config.input;
    let b = images.len();
    let plane = h * w;
    let mut out = vec![0.0; 3 * b * plane];
    for (n, img) in images.iter().enumerate() {
        if img.height() != h || img.width() != w {
            return Err(Error::Shape(format!(
                "image {n} is {}x{}, model expects {h}x{w}",
                img.height(),
                img.width()
            )));
        }
        for (p, px) in img.data().chunks_exact(3).enumerate() {
            for c in 0..3 {
                out[(c * b + n) * plane + p] = px[c] as f64;
            }
        }
    }
    Ok(out)
}

/// Saved activations of one encoder forward pass.
pub struct EncoderCache {
    batch: usize,
    cols: Vec<Vec<f64>>,
    acts: Vec<Vec<f64>>,
}

fn encoder_forward(params: &Parameters, images: &[&Image], keep: bool) -> Result<(Matrix, Option<EncoderCache>)> {
    let batch = images.len();
    let layout = params.layout();
    let geoms = geometry(params);
    let mut act = pack_images(params, images)?;
    let mut all_cols = Vec::new();
    let mut all_acts = Vec::new();
    for (i, g) in geoms.iter().enumerate() {
        let n_cols = batch * g.ho * g.wo;
        let mut cols = vec![0.0; g.rows() * n_cols];
        im2col(&act, batch, g, &mut cols);
        let weight = &params.tensors[layout.conv_weight(i)].data;
        let bias = &params.tensors[layout.conv_bias(i)].data;
        let mut out = vec![0.0; g.c_out * n_cols];
        gemm(g.c_out, g.rows(), n_cols, 1.0, weight, Op::N, &cols, Op::N, 0.0, &mut out);
        for (row, b) in out.chunks_exact_mut(n_cols).zip(bias) {
            for v in row {
                *v = (*v + b).max(0.0);
            }
        }
        if keep {
            all_cols.push(cols);
            all_acts.push(out.clone());
        }
        act = out;
    }
    let last = geoms.last().expect("validated encoder");
    let plane = last.ho * last.wo;
    let mut reps = Matrix::zeros(batch, last.c_out);
    for c in 0..last.c_out {
        for n in 0..batch {
            let s: f64 = act[(c * batch + n) * plane..][..plane].iter().sum();
            reps.row_mut(n)[c] = s / plane as f64;
        }
    }
    let cache = keep.then(|| EncoderCache { batch, cols: all_cols, acts: all_acts });
    Ok((reps, cache))
}

/// Encoder forward pass `x = r(X)`. The encoder has no stochastic layers, so
/// this is a pure function of parameters and pixels.
pub fn encode(params: &Parameters, images: &[&Image]) -> Result<RepresentationBatch> {
    let d = params.config.representation_dim();
    let mut data = Vec::with_capacity(images.len() * d);
    for chunk in images.chunks(INFERENCE_CHUNK) {
        let (reps, _) = encoder_forward(params, chunk, false)?;
        data.extend(reps.into_vec());
    }
    Ok(RepresentationBatch(Matrix::from_vec(images.len(), d, data)))
}

/// Forward pass retaining the activations needed by [`encoder_backward`].
pub fn encode_train(params: &Parameters, images: &[&Image]) -> Result<(RepresentationBatch, EncoderCache)> {
    let (reps, cache) = encoder_forward(params, images, true)?;
    Ok((RepresentationBatch(reps), cache.expect("cache requested")))
}

/// Accumulates encoder gradients given `d loss / d reps`.
pub fn encoder_backward(params: &Parameters, cache: &EncoderCache, d_reps: &Matrix, grads: &mut Gradients) {
    let layout = params.layout();
    let geoms = geometry(params);
    let batch = cache.batch;
    let last = geoms.last().expect("validated encoder");
    let plane = last.ho * last.wo;
    let mut d_act = vec![0.0; last.c_out * batch * plane];
    for c in 0..last.c_out {
        for n in 0..batch {
            let g = d_reps.row(n)[c] / plane as f64;
            d_act[(c * batch + n) * plane..][..plane].fill(g);
        }
    }
    for (i, g) in geoms.iter().enumerate().rev() {
        let n_cols = batch * g.ho * g.wo;
        let act = &cache.acts[i];
        for (d, a) in d_act.iter_mut().zip(act) {
            if *a <= 0.0 {
                *d = 0.0;
            }
        }
        let cols = &cache.cols[i];
        let dw = &mut grads.tensors[layout.conv_weight(i)];
        gemm(g.c_out, n_cols, g.rows(), 1.0, &d_act, Op::N, cols, Op::T, 1.0, dw);
        let db = &mut grads.tensors[layout.conv_bias(i)];
        for (b, row) in db.iter_mut().zip(d_act.chunks_exact(n_cols)) {
            *b += row.iter().sum::<f64>();
        }
        if i == 0 {
            break;
        }
        let weight = &params.tensors[layout.conv_weight(i)].data;
        let mut d_cols = vec![0.0; g.rows() * n_cols];
        gemm(g.rows(), g.c_out, n_cols, 1.0, weight, Op::T, &d_act, Op::N, 0.0, &mut d_cols);
        let mut d_in = vec![0.0; g.c_in * batch * g.h * g.w];
        col2im(&d_cols, batch, g, &mut d_in);
        d_act = d_in;
    }
}

/// Affine layer `y = x W^T + b` for `x: b x in`, `W: out x in`.
fn affine(x: &Matrix, weight: &[f64], bias: &[f64]) -> Matrix {
    let (b, inp, out) = (x.rows(), x.cols(), bias.len());
    let mut y = Matrix::zeros(b, out);
    gemm(b, inp, out, 1.0, x.data(), Op::N, weight, Op::T, 0.0, y.data_mut());
    for i in 0..b {
        for (v, bb) in y.row_mut(i).iter_mut().zip(bias) {
            *v += bb;
        }
    }
    y
}

/// Backward of [`affine`]: accumulates weight/bias gradients and returns
/// `d loss / d x`.
fn affine_backward(x: &Matrix, weight: &[f64], d_y: &Matrix, d_w: &mut [f64], d_b: &mut [f64]) -> Matrix {
    let (b, inp, out) = (x.rows(), x.cols(), d_y.cols());
    gemm(out, b, inp, 1.0, d_y.data(), Op::T, x.data(), Op::N, 1.0, d_w);
    for row in d_y.iter_rows() {
        for (g, v) in d_b.iter_mut().zip(row) {
            *g += v;
        }
    }
    let mut d_x = Matrix::zeros(b, inp);
    gemm(b, out, inp, 1.0, d_y.data(), Op::N, weight, Op::N, 0.0, d_x.data_mut());
    d_x
}

/// Row-wise `v / (||v|| + eps)`; returns the normalised rows and the norms.
pub fn normalize_rows(v: &Matrix) -> (Matrix, Vec<f64>) {
    let mut z = v.clone();
    let mut norms = Vec::with_capacity(v.rows());
    for i in 0..v.rows() {
        let row = z.row_mut(i);
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = 1.0 / (norm + NORM_EPS);
        row.iter_mut().for_each(|x| *x *= scale);
        norms.push(norm);
    }
    (z, norms)
}

pub struct ProjectionCache {
    pre: Matrix,
    norms: Vec<f64>,
}

pub fn project(params: &Parameters, reps: &RepresentationBatch) -> EmbeddingBatch {
    project_train(params, reps).0
}

pub fn project_train(params: &Parameters, reps: &RepresentationBatch) -> (EmbeddingBatch, ProjectionCache) {
    let l = params.layout();
    let pre = affine(reps, &params.tensors[l.proj_weight()].data, &params.tensors[l.proj_bias()].data);
    let (z, norms) = normalize_rows(&pre);
    (EmbeddingBatch(z), ProjectionCache { pre, norms })
}

/// Backward through normalisation and the projection layer.
pub fn projection_backward(
    params: &Parameters,
    reps: &RepresentationBatch,
    cache: &ProjectionCache,
    d_z: &Matrix,
    grads: &mut Gradients,
) -> Matrix {
    let l = params.layout();
    let mut d_pre = Matrix::zeros(d_z.rows(), d_z.cols());
    for i in 0..d_z.rows() {
        let v = cache.pre.row(i);
        let g = d_z.row(i);
        let n = cache.norms[i];
        let s = n + NORM_EPS;
        let radial = if n > 0.0 { v.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / (s * s * n) } else { 0.0 };
        for ((d, vi), gi) in d_pre.row_mut(i).iter_mut().zip(v).zip(g) {
            *d = gi / s - vi * radial;
        }
    }
    let (w, rest) = grads.tensors.split_at_mut(l.proj_bias());
    affine_backward(reps, &params.tensors[l.proj_weight()].data, &d_pre, &mut w[l.proj_weight()], &mut rest[0])
}

pub struct ClassifierCache {
    hidden_pre: Matrix,
    dropped: Matrix,
    mask: Option<Vec<f64>>,
}

/// Softmax with max subtraction.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut p = logits.clone();
    for i in 0..p.rows() {
        let row = p.row_mut(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    p
}

/// Classifier logits; dropout between the two layers only in train mode.
pub fn classifier_logits<R: Rng + ?Sized>(
    params: &Parameters,
    reps: &RepresentationBatch,
    mode: Mode<'_, R>,
) -> (Matrix, ClassifierCache) {
    let l = params.layout();
    let hidden_pre = affine(reps, &params.tensors[l.hidden_weight()].data, &params.tensors[l.hidden_bias()].data);
    let mut dropped = hidden_pre.clone();
    dropped.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    let rate = params.config.dropout;
    let mask = match mode {
        Mode::Train(rng) if rate > 0.0 => {
            let keep = 1.0 / (1.0 - rate);
            let mask: Vec<f64> =
                (0..dropped.data().len()).map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }).collect();
            dropped.data_mut().iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
            Some(mask)
        }
        _ => None,
    };
    let logits = affine(&dropped, &params.tensors[l.out_weight()].data, &params.tensors[l.out_bias()].data);
    (logits, ClassifierCache { hidden_pre, dropped, mask })
}

pub fn classify<R: Rng + ?Sized>(params: &Parameters, reps: &RepresentationBatch, mode: Mode<'_, R>) -> ProbabilityBatch {
    classify_train(params, reps, mode).0
}

pub fn classify_train<R: Rng + ?Sized>(
    params: &Parameters,
    reps: &RepresentationBatch,
    mode: Mode<'_, R>,
) -> (ProbabilityBatch, ClassifierCache) {
    let (logits, cache) = classifier_logits(params, reps, mode);
    (ProbabilityBatch(softmax_rows(&logits)), cache)
}

/// Backward from `d loss / d logits`; returns `d loss / d reps`.
pub fn classifier_backward(
    params: &Parameters,
    reps: &RepresentationBatch,
    cache: &ClassifierCache,
    d_logits: &Matrix,
    grads: &mut Gradients,
) -> Matrix {
    let l = params.layout();
    let (head, tail) = grads.tensors.split_at_mut(l.out_weight());
    let (dw_out, db_out) = tail.split_at_mut(1);
    let mut d_hidden =
        affine_backward(&cache.dropped, &params.tensors[l.out_weight()].data, d_logits, &mut dw_out[0], &mut db_out[0]);
    let mask = cache.mask.as_deref();
    for (k, (d, pre)) in d_hidden.data_mut().iter_mut().zip(cache.hidden_pre.data()).enumerate() {
        let m = mask.map_or(1.0, |m| m[k]);
        *d = if *pre > 0.0 { *d * m } else { 0.0 };
    }
    let (dw_h, db_h) = head[l.hidden_weight()..].split_at_mut(1);
    affine_backward(reps, &params.tensors[l.hidden_weight()].data, &d_hidden, &mut dw_h[0], &mut db_h[0])
}
