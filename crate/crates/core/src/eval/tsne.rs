//! Exact t-SNE.
//!
//! Conditional Gaussian affinities are calibrated per point by bisection on
//! the log precision so that each row's entropy matches `log2(perplexity)`,
//! symmetrised into a joint `P`, and matched by a Student-t kernel in two
//! dimensions via gradient descent on `KL(P || Q)` with momentum, adaptive
//! gains and early exaggeration.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sq_dist, Matrix};
use crate::rng::{stream, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self { perplexity: 30.0, iterations: 1000, learning_rate: 200.0, exaggeration: 12.0, exaggeration_iters: 250, seed: 0 }
    }
}

impl TsneConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 10 {
            return Err(Error::Config(format!("t-SNE needs at least 10 points, got {n}")));
        }
        if !(self.perplexity > 1.0 && self.perplexity < n as f64 / 3.0) {
            return Err(Error::Config(format!(
                "perplexity {} must lie in (1, n/3) = (1, {:.2})",
                self.perplexity,
                n as f64 / 3.0
            )));
        }
        if self.iterations == 0 || !(self.learning_rate > 0.0) || !(self.exaggeration >= 1.0) {
            return Err(Error::Config("t-SNE needs iterations >= 1, a positive rate and exaggeration >= 1".into()));
        }
        Ok(())
    }
}

/// Momentum before / after this iteration.
const MOMENTUM_SWITCH: usize = 250;
const BISECTION_STEPS: usize = 50;
const ENTROPY_TOL: f64 = 1e-10;
const LOG_BETA_RANGE: f64 = 30.0;

/// Calibrated conditional affinities of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Gaussian bandwidth `sigma` in input units.
    pub sigma: f64,
    /// Entropy of the conditional distribution in bits.
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Affinities {
    /// Symmetrised joint distribution, `n x n`, zero diagonal, unit sum.
    pub joint: Matrix,
    pub calibration: Vec<Calibration>,
}

/// `n x 2` coordinates plus optimisation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub coords: Matrix,
    /// `KL(P || Q)` after every iteration (without exaggeration).
    pub kl: Vec<f64>,
    pub calibration: Vec<Calibration>,
}

fn squared_distances(x: &Matrix) -> Matrix {
    let n = x.rows();
    let rows: Vec<Vec<f64>> =
        (0..n).into_par_iter().map(|i| (0..n).map(|j| if i == j { 0.0 } else { sq_dist(x.row(i), x.row(j)) }).collect()).collect();
    Matrix::from_rows(&rows)
}

/// Conditional distribution `p_{j|i}` for precision `beta` on shifted,
/// rescaled distances; returns the row and its entropy in nats.
fn conditional(shifted: &[f64], skip: usize, beta: f64, out: &mut [f64]) -> f64 {
    let mut z = 0.0;
    let mut weighted = 0.0;
    for (j, (&d, o)) in shifted.iter().zip(out.iter_mut()).enumerate() {
        if j == skip {
            *o = 0.0;
            continue;
        }
        let e = (-beta * d).exp();
        *o = e;
        z += e;
        weighted += e * d;
    }
    out.iter_mut().for_each(|v| *v /= z);
    z.ln() + beta * weighted / z
}

fn calibrate_row(dists: &[f64], i: usize, perplexity: f64, out: &mut [f64]) -> Calibration {
    let target = perplexity.ln();
    let min = dists.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &d)| d).fold(f64::INFINITY, f64::min);
    let n_others = (dists.len() - 1) as f64;
    let mean_excess =
        dists.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &d)| d - min).sum::<f64>() / n_others;
    let scale = if mean_excess > 0.0 { mean_excess } else { 1.0 };
    let shifted: Vec<f64> = dists.iter().map(|&d| (d - min) / scale).collect();

    // Entropy decreases monotonically in log(beta).
    let (mut lo, mut hi) = (-LOG_BETA_RANGE, LOG_BETA_RANGE);
    let mut log_beta = 0.0;
    let mut entropy = conditional(&shifted, i, 1.0, out);
    for _ in 0..BISECTION_STEPS {
        if (entropy - target).abs() < ENTROPY_TOL {
            break;
        }
        if entropy > target {
            lo = log_beta;
        } else {
            hi = log_beta;
        }
        log_beta = 0.5 * (lo + hi);
        entropy = conditional(&shifted, i, log_beta.exp(), out);
    }
    let beta = log_beta.exp() / scale;
    Calibration { sigma: (1.0 / (2.0 * beta)).sqrt(), entropy: entropy / std::f64::consts::LN_2 }
}

/// Perplexity-calibrated, symmetrised input affinities.
pub fn joint_probabilities(x: &Matrix, perplexity: f64) -> Affinities {
    let n = x.rows();
    let d = squared_distances(x);
    let rows: Vec<(Vec<f64>, Calibration)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = vec![0.0; n];
            let cal = calibrate_row(d.row(i), i, perplexity, &mut out);
            (out, cal)
        })
        .collect();
    let mut joint = Matrix::zeros(n, n);
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            joint.row_mut(i)[j] = (rows[i].0[j] + rows[j].0[i]) / denom;
        }
    }
    Affinities { joint, calibration: rows.into_iter().map(|(_, c)| c).collect() }
}

/// Student-t numerators `1 / (1 + |y_i - y_j|^2)` (zero diagonal) and their sum.
fn kernel(y: &Matrix) -> (Matrix, f64) {
    let n = y.rows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 / (1.0 + sq_dist(y.row(i), y.row(j))) }).collect())
        .collect();
    let num = Matrix::from_rows(&rows);
    let z = num.data().iter().sum();
    (num, z)
}

pub fn kl_divergence(p: &Matrix, y: &Matrix) -> f64 {
    let (num, z) = kernel(y);
    p.data()
        .iter()
        .zip(num.data())
        .filter(|(&pij, _)| pij > 0.0)
        .map(|(&pij, &nij)| pij * (pij / (nij / z).max(1e-300)).ln())
        .sum()
}

pub fn tsne(x: &Matrix, cfg: &TsneConfig) -> Result<TsneResult> {
    let n = x.rows();
    cfg.validate(n)?;
    if !x.is_finite() {
        return Err(Error::Numeric("t-SNE input contains non-finite values".into()));
    }
    let Affinities { joint: p, calibration } = joint_probabilities(x, cfg.perplexity);

    let mut rng = stream(cfg.seed, &[tag::TSNE]);
    let normal = Normal::new(0.0, 1e-4).expect("valid sigma");
    let mut y = Matrix::from_vec(n, 2, (0..2 * n).map(|_| normal.sample(&mut rng)).collect());
    let mut update = Matrix::zeros(n, 2);
    let mut gains = vec![1.0f64; 2 * n];
    let mut kl = Vec::with_capacity(cfg.iterations);

    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.exaggeration_iters { cfg.exaggeration } else { 1.0 };
        let momentum = if iter < MOMENTUM_SWITCH { 0.5 } else { 0.8 };
        let (num, z) = kernel(&y);
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let (yi, pi, ni) = (y.row(i), p.row(i), num.row(i));
                let mut g = [0.0; 2];
                for j in 0..n {
                    let w = (exaggeration * pi[j] - ni[j] / z) * ni[j];
                    let yj = y.row(j);
                    g[0] += w * (yi[0] - yj[0]);
                    g[1] += w * (yi[1] - yj[1]);
                }
                [4.0 * g[0], 4.0 * g[1]]
            })
            .collect();
        for i in 0..n {
            for c in 0..2 {
                let k = 2 * i + c;
                let g = grad[i][c];
                let u = update.row(i)[c];
                gains[k] = if (g > 0.0) != (u > 0.0) { gains[k] + 0.2 } else { (gains[k] * 0.8).max(0.01) };
                let nu = momentum * u - cfg.learning_rate * gains[k] * g;
                update.row_mut(i)[c] = nu;
                y.row_mut(i)[c] += nu;
            }
        }
        recenter(&mut y);
        kl.push(kl_divergence(&p, &y));
    }
    if !y.is_finite() {
        return Err(Error::Numeric("t-SNE diverged".into()));
    }
    Ok(TsneResult { coords: y, kl, calibration })
}

fn recenter(y: &mut Matrix) {
    let n = y.rows() as f64;
    for c in 0..y.cols() {
        let mean = y.iter_rows().map(|r| r[c]).sum::<f64>() / n;
        for i in 0..y.rows() {
            y.row_mut(i)[c] -= mean;
        }
    }
}
