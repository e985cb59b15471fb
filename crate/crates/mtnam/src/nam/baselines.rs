//! Reference baselines trained with the same machinery: L2-regularized
//! logistic regression and a one-hidden-layer MLP on the full feature vector.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::Scaler;
use crate::util::{derive_seed, sigmoid};

use super::train::{fit_bce, GradientModel, TrainConfig, TrainReport};

/// Logistic regression: one linear layer plus sigmoid, with an L2 weight
/// penalty `lambda * |w|^2` (bias excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct LrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub scaler: Scaler,
}

impl LrModel {
    pub fn zeros(m: usize, lambda: f64, scaler: Scaler) -> LrModel {
        LrModel {
            weights: vec![0.0; m],
            bias: 0.0,
            lambda,
            scaler,
        }
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.m() {
            return Err(Error::Invalid("LR input dimension mismatch".into()));
        }
        Ok(sigmoid(self.logit(x)))
    }
}

// layout: [weights(m), bias]
impl GradientModel for LrModel {
    fn param_len(&self) -> usize {
        self.m() + 1
    }

    fn params_vec(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    fn set_params_vec(&mut self, p: &[f64]) {
        let m = self.m();
        self.weights.copy_from_slice(&p[..m]);
        self.bias = p[m];
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    fn accum_logit_grad(&self, x: &[f64], coeff: f64, grad: &mut [f64]) {
        let m = self.m();
        for j in 0..m {
            grad[j] += coeff * x[j];
        }
        grad[m] += coeff;
    }

    fn reg_loss(&self) -> f64 {
        self.lambda * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    fn accum_reg_grad(&self, grad: &mut [f64]) {
        for (g, w) in grad.iter_mut().zip(&self.weights) {
            *g += 2.0 * self.lambda * w;
        }
    }
}

/// One-hidden-layer ReLU MLP over the full feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DnnModel {
    pub m: usize,
    pub hidden: usize,
    /// Input weights, row-major per hidden unit: `w1[u * m + i]`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub v: Vec<f64>,
    pub c: f64,
    pub scaler: Scaler,
}

impl DnnModel {
    pub fn init(m: usize, hidden: usize, scaler: Scaler, seed: u64) -> Result<DnnModel> {
        if m == 0 || hidden == 0 {
            return Err(Error::Invalid("DNN needs m >= 1 and hidden >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let in_bound = 1.0 / (m as f64).sqrt();
        let out_bound = 1.0 / (hidden as f64).sqrt();
        let w1 = (0..hidden * m)
            .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * in_bound)
            .collect();
        let v = (0..hidden)
            .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * out_bound)
            .collect();
        Ok(DnnModel {
            m,
            hidden,
            w1,
            b1: vec![0.0; hidden],
            v,
            c: 0.0,
            scaler,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.m {
            return Err(Error::Invalid("DNN input dimension mismatch".into()));
        }
        Ok(sigmoid(self.logit(x)))
    }

    fn pre_activation(&self, u: usize, x: &[f64]) -> f64 {
        let row = &self.w1[u * self.m..(u + 1) * self.m];
        row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[u]
    }
}

// layout: [w1(h*m), b1(h), v(h), c]
impl GradientModel for DnnModel {
    fn param_len(&self) -> usize {
        self.hidden * self.m + 2 * self.hidden + 1
    }

    fn params_vec(&self) -> Vec<f64> {
        let mut p = self.w1.clone();
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.v);
        p.push(self.c);
        p
    }

    fn set_params_vec(&mut self, p: &[f64]) {
        let hm = self.hidden * self.m;
        self.w1.copy_from_slice(&p[..hm]);
        self.b1.copy_from_slice(&p[hm..hm + self.hidden]);
        self.v
            .copy_from_slice(&p[hm + self.hidden..hm + 2 * self.hidden]);
        self.c = p[hm + 2 * self.hidden];
    }

    fn logit(&self, x: &[f64]) -> f64 {
        let mut acc = self.c;
        for u in 0..self.hidden {
            let pre = self.pre_activation(u, x);
            if pre > 0.0 {
                acc += self.v[u] * pre;
            }
        }
        acc
    }

    fn accum_logit_grad(&self, x: &[f64], coeff: f64, grad: &mut [f64]) {
        let hm = self.hidden * self.m;
        for u in 0..self.hidden {
            let pre = self.pre_activation(u, x);
            if pre > 0.0 {
                let da = coeff * self.v[u];
                let row = u * self.m;
                for i in 0..self.m {
                    grad[row + i] += da * x[i];
                }
                grad[hm + u] += da;
                grad[hm + self.hidden + u] += coeff * pre;
            }
        }
        grad[hm + 2 * self.hidden] += coeff;
    }
}

/// Train the logistic-regression baseline (deterministic zero init).
pub fn train_lr(
    train: &crate::features::FeatureMatrix,
    val: &crate::features::FeatureMatrix,
    cfg: &TrainConfig,
    lambda: f64,
    scaler: &Scaler,
) -> Result<(LrModel, TrainReport)> {
    if lambda < 0.0 {
        return Err(Error::Config("LR lambda must be >= 0".into()));
    }
    let mut model = LrModel::zeros(train.m, lambda, scaler.clone());
    let report = fit_bce(&mut model, train, val, cfg)?;
    Ok((model, report))
}

/// Train the MLP baseline.
pub fn train_dnn(
    train: &crate::features::FeatureMatrix,
    val: &crate::features::FeatureMatrix,
    cfg: &TrainConfig,
    hidden: usize,
    scaler: &Scaler,
) -> Result<(DnnModel, TrainReport)> {
    let mut model = DnnModel::init(
        train.m,
        hidden,
        scaler.clone(),
        derive_seed(cfg.seed, "dnn-init"),
    )?;
    let report = fit_bce(&mut model, train, val, cfg)?;
    Ok((model, report))
}
