//! Adam training of logit models on binary cross-entropy, class-imbalance
//! downsampling, and the validation-F1 grid search.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::f1_weighted;
use crate::features::{FeatureMatrix, Scaler};
use crate::util::{derive_seed, sigmoid};

use super::{Activation, NamArch, NamModel};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Non-ictal rows kept per ictal row when downsampling.
    pub downsample_ratio: usize,
    /// Epochs without validation-F1 improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 128,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            downsample_ratio: 10,
            patience: 20,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.batch_size > 0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.downsample_ratio >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("bad training hyperparameters".into()))
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub best_val_f1: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// A model trained by gradient descent on its scalar logit. The parameter
/// vector layout is model-defined but stable, which is what the Adam loop,
/// serialization, and finite-difference checks rely on.
pub trait GradientModel: Clone {
    fn param_len(&self) -> usize;
    fn params_vec(&self) -> Vec<f64>;
    fn set_params_vec(&mut self, p: &[f64]);
    fn logit(&self, x: &[f64]) -> f64;
    /// Accumulate `coeff * d logit / d theta` into `grad`.
    fn accum_logit_grad(&self, x: &[f64], coeff: f64, grad: &mut [f64]);
    /// Additive regularization term and its gradient.
    fn reg_loss(&self) -> f64 {
        0.0
    }
    fn accum_reg_grad(&self, _grad: &mut [f64]) {}
}

/// Numerically stable binary cross-entropy of a logit:
/// `max(s,0) - y*s + ln(1 + exp(-|s|))`.
fn bce_of_logit(s: f64, y: f64) -> f64 {
    let s = s.clamp(-500.0, 500.0);
    s.max(0.0) - y * s + (-s.abs()).exp().ln_1p()
}

/// Mean BCE loss over a batch, including the model's regularization term.
pub fn mean_bce_loss<M: GradientModel>(model: &M, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        acc += bce_of_logit(model.logit(x), y);
    }
    acc / xs.len() as f64 + model.reg_loss()
}

/// Analytic gradient of [`mean_bce_loss`] with respect to the parameter
/// vector: `d/ds BCE = sigmoid(s) - y`, chained through each model.
pub fn mean_bce_grad<M: GradientModel>(model: &M, xs: &[Vec<f64>], ys: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; model.param_len()];
    let inv_b = 1.0 / xs.len() as f64;
    for (x, &y) in xs.iter().zip(ys) {
        let s = model.logit(x);
        // the sigmoid clamp makes the loss flat past +-500
        let coeff = if s.abs() >= 500.0 {
            0.0
        } else {
            (sigmoid(s) - y) * inv_b
        };
        if coeff != 0.0 {
            model.accum_logit_grad(x, coeff, &mut grad);
        }
    }
    model.accum_reg_grad(&mut grad);
    grad
}

struct Adam {
    m1: Vec<f64>,
    m2: Vec<f64>,
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(n: usize, cfg: &TrainConfig) -> Adam {
        Adam {
            m1: vec![0.0; n],
            m2: vec![0.0; n],
            t: 0,
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.eps,
        }
    }

    /// One bias-corrected update step in place.
    fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for k in 0..theta.len() {
            self.m1[k] = self.beta1 * self.m1[k] + (1.0 - self.beta1) * grad[k];
            self.m2[k] = self.beta2 * self.m2[k] + (1.0 - self.beta2) * grad[k] * grad[k];
            let mhat = self.m1[k] / bc1;
            let vhat = self.m2[k] / bc2;
            theta[k] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

fn val_scores<M: GradientModel>(model: &M, xs: &[Vec<f64>]) -> Vec<f64> {
    xs.iter().map(|x| sigmoid(model.logit(x))).collect()
}

fn labels_to_f64(labels: &[bool]) -> Vec<f64> {
    labels.iter().map(|&l| f64::from(u8::from(l))).collect()
}

/// Train `model` in place with mini-batch Adam; keeps the parameters of the
/// epoch with the best validation weighted F1. Aborts on non-finite loss.
pub fn fit_bce<M: GradientModel>(
    model: &mut M,
    train: &FeatureMatrix,
    val: &FeatureMatrix,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if train.n_rows() == 0 || val.n_rows() == 0 {
        return Err(Error::Invalid(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let train_y = labels_to_f64(&train.labels);
    let mut theta = model.params_vec();
    let mut adam = Adam::new(theta.len(), cfg);
    let mut grad = vec![0.0; theta.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "shuffle"));

    let eval_f1 =
        |m: &M| -> Result<f64> { f1_weighted(&val_scores(m, &val.rows), &val.labels, 0.5) };

    let mut best_theta = theta.clone();
    let mut best_f1 = eval_f1(model)?;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut epochs_run = 0;

    let mut order: Vec<usize> = (0..train.n_rows()).collect();
    for epoch in 1..=cfg.epochs {
        epochs_run = epoch;
        // seeded Fisher-Yates shuffle per epoch
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let inv_b = 1.0 / batch.len() as f64;
            for &i in batch {
                let s = model.logit(&train.rows[i]);
                if !s.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite logit at epoch {epoch}; training diverged"
                    )));
                }
                let coeff = if s.abs() >= 500.0 {
                    0.0
                } else {
                    (sigmoid(s) - train_y[i]) * inv_b
                };
                if coeff != 0.0 {
                    model.accum_logit_grad(&train.rows[i], coeff, &mut grad);
                }
            }
            model.accum_reg_grad(&mut grad);
            adam.step(&mut theta, &grad);
            if theta.iter().any(|p| !p.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite parameters at epoch {epoch}; training diverged"
                )));
            }
            model.set_params_vec(&theta);
        }
        let f1 = eval_f1(model)?;
        if f1 > best_f1 {
            best_f1 = f1;
            best_theta.copy_from_slice(&theta);
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    model.set_params_vec(&best_theta);
    Ok(TrainReport {
        best_val_f1: best_f1,
        best_epoch,
        epochs_run,
    })
}

// NamModel parameter layout: per net j at offset j*(3h+1): w[h], b[h], v[h], c.
impl GradientModel for NamModel {
    fn param_len(&self) -> usize {
        self.m() * (3 * self.arch.hidden + 1)
    }

    fn params_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_len());
        for net in &self.nets {
            out.extend_from_slice(&net.w);
            out.extend_from_slice(&net.b);
            out.extend_from_slice(&net.v);
            out.push(net.c);
        }
        out
    }

    fn set_params_vec(&mut self, p: &[f64]) {
        let h = self.arch.hidden;
        debug_assert_eq!(p.len(), self.param_len());
        for (j, net) in self.nets.iter_mut().enumerate() {
            let base = j * (3 * h + 1);
            net.w.copy_from_slice(&p[base..base + h]);
            net.b.copy_from_slice(&p[base + h..base + 2 * h]);
            net.v.copy_from_slice(&p[base + 2 * h..base + 3 * h]);
            net.c = p[base + 3 * h];
        }
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.nets.iter().zip(x).map(|(n, &z)| n.forward(z)).sum()
    }

    fn accum_logit_grad(&self, x: &[f64], coeff: f64, grad: &mut [f64]) {
        let h = self.arch.hidden;
        for (j, net) in self.nets.iter().enumerate() {
            let z = x[j];
            let base = j * (3 * h + 1);
            match net.activation {
                Activation::Relu => {
                    for u in 0..h {
                        let pre = net.w[u] * z + net.b[u];
                        if pre > 0.0 {
                            grad[base + u] += coeff * net.v[u] * z;
                            grad[base + h + u] += coeff * net.v[u];
                            grad[base + 2 * h + u] += coeff * pre;
                        }
                    }
                }
                Activation::Exu => {
                    for u in 0..h {
                        let ew = net.w[u].exp();
                        let t = ew * (z - net.b[u]);
                        if t > 0.0 && t < 1.0 {
                            grad[base + u] += coeff * net.v[u] * t;
                            grad[base + h + u] += -coeff * net.v[u] * ew;
                        }
                        grad[base + 2 * h + u] += coeff * t.clamp(0.0, 1.0);
                    }
                }
            }
            grad[base + 3 * h] += coeff;
        }
    }
}

/// Keep all ictal rows plus `min(ratio * n_ictal, n_nonictal)` uniformly
/// sampled non-ictal rows, preserving row order.
pub fn downsample_nonictal(fm: &FeatureMatrix, ratio: usize, seed: u64) -> Result<FeatureMatrix> {
    if ratio == 0 {
        return Err(Error::Invalid("downsample ratio must be >= 1".into()));
    }
    let ictal: Vec<usize> = (0..fm.n_rows()).filter(|&i| fm.labels[i]).collect();
    if ictal.is_empty() {
        return Err(Error::Invalid(
            "downsampling needs at least one ictal row".into(),
        ));
    }
    let mut nonictal: Vec<usize> = (0..fm.n_rows()).filter(|&i| !fm.labels[i]).collect();
    let keep = (ratio * ictal.len()).min(nonictal.len());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "downsample"));
    // partial Fisher-Yates: the first `keep` entries become the sample
    for i in 0..keep {
        let j = rng.random_range(i..nonictal.len());
        nonictal.swap(i, j);
    }
    let mut selected: Vec<usize> = ictal
        .into_iter()
        .chain(nonictal[..keep].iter().copied())
        .collect();
    selected.sort_unstable();
    Ok(fm.take_rows(&selected))
}

#[derive(Debug, Clone)]
pub struct GridReportRow {
    pub hidden: usize,
    pub activation: Activation,
    pub val_f1: f64,
    pub selected: bool,
}

/// Train every architecture candidate and keep the best validation F1.
/// Ties go to the smaller hidden width, then ReLU before ExU.
pub fn grid_search(
    archs: &[NamArch],
    train: &FeatureMatrix,
    val: &FeatureMatrix,
    cfg: &TrainConfig,
    scaler: &Scaler,
) -> Result<(NamModel, Vec<GridReportRow>)> {
    if archs.is_empty() {
        return Err(Error::Invalid("empty hyperparameter grid".into()));
    }
    let mut ordered = archs.to_vec();
    ordered.sort_by_key(|a| (a.hidden, a.activation == Activation::Exu));
    ordered.dedup();

    let mut best: Option<(usize, NamModel, f64)> = None;
    let mut rows = Vec::with_capacity(ordered.len());
    for (idx, arch) in ordered.iter().enumerate() {
        let cand_seed = derive_seed(
            cfg.seed,
            &format!("candidate/{}/{}", arch.hidden, arch.activation.as_str()),
        );
        let mut model = NamModel::init(train.m, *arch, scaler.clone(), cand_seed)?;
        let mut cand_cfg = cfg.clone();
        cand_cfg.seed = cand_seed;
        let report = fit_bce(&mut model, train, val, &cand_cfg)?;
        rows.push(GridReportRow {
            hidden: arch.hidden,
            activation: arch.activation,
            val_f1: report.best_val_f1,
            selected: false,
        });
        if best
            .as_ref()
            .is_none_or(|(_, _, f)| report.best_val_f1 > *f)
        {
            best = Some((idx, model, report.best_val_f1));
        }
    }
    let (idx, model, _) = best.expect("non-empty grid");
    rows[idx].selected = true;
    Ok((model, rows))
}

/// Train a NAM of the given architecture on scaled features.
pub fn train_nam(
    train: &FeatureMatrix,
    val: &FeatureMatrix,
    cfg: &TrainConfig,
    arch: NamArch,
    scaler: &Scaler,
) -> Result<(NamModel, TrainReport)> {
    let mut model = NamModel::init(train.m, arch, scaler.clone(), derive_seed(cfg.seed, "init"))?;
    let report = fit_bce(&mut model, train, val, cfg)?;
    Ok((model, report))
}
