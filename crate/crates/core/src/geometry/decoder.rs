use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::linalg::{dot, Matrix, Rng};

/// Hyperparameters of the linear SVM decoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    /// L2 regularization strength.
    pub lambda: f64,
    pub epochs: usize,
    /// Step size at epoch t is `lr / √t`.
    pub lr: f64,
    pub seed: u64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self { lambda: 1e-3, epochs: 200, lr: 0.1, seed: 0 }
    }
}

/// Linear classifier trained by stochastic subgradient descent on the
/// L2-regularized hinge loss, over per-dimension standardized features.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDecoder {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    mean: Vec<f64>,
    inv_scale: Vec<f64>,
}

impl LinearDecoder {
    /// Fits on `x` (d × n, columns are samples) with ±1 targets `y`.
    pub fn fit(x: &Matrix, y: &[f64], cfg: &DecoderConfig) -> Result<Self> {
        if x.cols() != y.len() {
            return Err(contract("decoder needs one label per sample"));
        }
        let has_pos = y.iter().any(|&v| v > 0.0);
        let has_neg = y.iter().any(|&v| v <= 0.0);
        if !(has_pos && has_neg) {
            return Err(contract("decoder training set contains a single class"));
        }
        let d = x.rows();
        let n = x.cols();
        let mean = x.row_means();
        let inv_scale: Vec<f64> = (0..d)
            .map(|r| {
                let var = x.row(r).iter().map(|v| (v - mean[r]).powi(2)).sum::<f64>() / n as f64;
                if var > 1e-24 {
                    1.0 / var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let rows = standardize(x, &mean, &inv_scale);

        let mut rng = Rng::new(cfg.seed);
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut order: Vec<usize> = (0..n).collect();
        for epoch in 1..=cfg.epochs {
            let eta = cfg.lr / (epoch as f64).sqrt();
            let decay = 1.0 - eta * cfg.lambda;
            rng.shuffle(&mut order);
            for &i in &order {
                let xi = &rows[i * d..(i + 1) * d];
                let yi = if y[i] > 0.0 { 1.0 } else { -1.0 };
                let margin = yi * (dot(&w, xi) + b);
                w.iter_mut().for_each(|v| *v *= decay);
                if margin < 1.0 {
                    let s = eta * yi;
                    for (wj, &xj) in w.iter_mut().zip(xi) {
                        *wj += s * xj;
                    }
                    b += s;
                }
            }
        }
        Ok(Self { weights: w, bias: b, lambda: cfg.lambda, mean, inv_scale })
    }

    /// Decision values for every column of `x`.
    pub fn decision(&self, x: &Matrix) -> Vec<f64> {
        let d = x.rows();
        let rows = standardize(x, &self.mean, &self.inv_scale);
        (0..x.cols()).map(|i| dot(&self.weights, &rows[i * d..(i + 1) * d]) + self.bias).collect()
    }

    pub fn accuracy(&self, x: &Matrix, y: &[f64]) -> f64 {
        if y.is_empty() {
            return f64::NAN;
        }
        let hits = self
            .decision(x)
            .iter()
            .zip(y)
            .filter(|(s, l)| (**s > 0.0) == (**l > 0.0))
            .count();
        hits as f64 / y.len() as f64
    }
}

/// Sample-major standardized copy (n × d, flattened).
fn standardize(x: &Matrix, mean: &[f64], inv_scale: &[f64]) -> Vec<f64> {
    let d = x.rows();
    let n = x.cols();
    let mut out = vec![0.0; n * d];
    for r in 0..d {
        let (m, s) = (mean[r], inv_scale[r]);
        for (i, &v) in x.row(r).iter().enumerate() {
            out[i * d + r] = (v - m) * s;
        }
    }
    out
}
