//! The additive teacher model: one single-hidden-layer network per input
//! feature, summed and squashed into a seizure probability.

pub mod baselines;
pub mod train;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::features::Scaler;
use crate::util::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// Exp-centered unit: `clamp(e^w * (z - b), 0, 1)`.
    Exu,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Exu => "exu",
        }
    }

    pub fn parse(s: &str) -> Result<Activation> {
        match s {
            "relu" => Ok(Activation::Relu),
            "exu" => Ok(Activation::Exu),
            _ => Err(Error::Format(format!("unknown activation {s:?}"))),
        }
    }
}

/// Scalar-to-scalar network for one input feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNet {
    pub activation: Activation,
    /// Input weight per hidden unit.
    pub w: Vec<f64>,
    /// Input bias per hidden unit.
    pub b: Vec<f64>,
    /// Output weight per hidden unit.
    pub v: Vec<f64>,
    /// Output bias.
    pub c: f64,
}

impl FeatureNet {
    pub fn zeros(hidden: usize, activation: Activation) -> FeatureNet {
        FeatureNet {
            activation,
            w: vec![0.0; hidden],
            b: vec![0.0; hidden],
            v: vec![0.0; hidden],
            c: 0.0,
        }
    }

    pub fn hidden_width(&self) -> usize {
        self.w.len()
    }

    /// Evaluate the feature function at `z`.
    pub fn forward(&self, z: f64) -> f64 {
        let mut acc = self.c;
        match self.activation {
            Activation::Relu => {
                for ((w, b), v) in self.w.iter().zip(&self.b).zip(&self.v) {
                    let pre = w * z + b;
                    if pre > 0.0 {
                        acc += v * pre;
                    }
                }
            }
            Activation::Exu => {
                for ((w, b), v) in self.w.iter().zip(&self.b).zip(&self.v) {
                    let h = (w.exp() * (z - b)).clamp(0.0, 1.0);
                    acc += v * h;
                }
            }
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NamArch {
    pub hidden: usize,
    pub activation: Activation,
}

/// Trained additive model: one `FeatureNet` per input feature plus the
/// scaler its inputs were normalized with.
#[derive(Debug, Clone, PartialEq)]
pub struct NamModel {
    pub nets: Vec<FeatureNet>,
    pub arch: NamArch,
    pub scaler: Scaler,
    pub init_seed: u64,
}

impl NamModel {
    /// Initialize with the reference scheme: input weights uniform in
    /// [-1, 1] (ReLU) or N(4, 0.5) (ExU), output weights uniform in
    /// [-1/sqrt(h), 1/sqrt(h)], biases zero.
    pub fn init(m: usize, arch: NamArch, scaler: Scaler, seed: u64) -> Result<NamModel> {
        if m == 0 || arch.hidden == 0 {
            return Err(Error::Invalid("model needs m >= 1 and hidden >= 1".into()));
        }
        if scaler.m() != m {
            return Err(Error::Invalid(format!(
                "scaler has {} features, model wants {m}",
                scaler.m()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exu_w = Normal::new(4.0, 0.5).expect("valid normal");
        let out_bound = 1.0 / (arch.hidden as f64).sqrt();
        let mut nets = Vec::with_capacity(m);
        for _ in 0..m {
            let mut net = FeatureNet::zeros(arch.hidden, arch.activation);
            for w in net.w.iter_mut() {
                *w = match arch.activation {
                    Activation::Relu => rng.random::<f64>() * 2.0 - 1.0,
                    Activation::Exu => rng.sample(exu_w),
                };
            }
            for v in net.v.iter_mut() {
                *v = (rng.random::<f64>() * 2.0 - 1.0) * out_bound;
            }
            nets.push(net);
        }
        Ok(NamModel {
            nets,
            arch,
            scaler,
            init_seed: seed,
        })
    }

    pub fn m(&self) -> usize {
        self.nets.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.m() {
            return Err(Error::Invalid(format!(
                "input has {} features, model has {}",
                x.len(),
                self.m()
            )));
        }
        Ok(())
    }

    /// Per-feature contributions written into `out`; returns their sum.
    pub fn contributions_into(&self, x: &[f64], out: &mut [f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut sum = 0.0;
        for (j, net) in self.nets.iter().enumerate() {
            let cj = net.forward(x[j]);
            out[j] = cj;
            sum += cj;
        }
        Ok(sum)
    }

    /// Contribution vector and prediction for one scaled input window.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut contrib = vec![0.0; self.m()];
        let sum = self.contributions_into(x, &mut contrib)?;
        Ok((contrib, sigmoid(sum)))
    }

    /// Prediction in (0, 1) for one scaled input window.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let sum: f64 = self.nets.iter().zip(x).map(|(n, &z)| n.forward(z)).sum();
        Ok(sigmoid(sum))
    }

    /// Prediction for a raw (unscaled) feature vector.
    pub fn predict_raw(&self, raw: &[f64]) -> Result<f64> {
        self.check_dim(raw)?;
        let mut x = vec![0.0; raw.len()];
        self.scaler.transform_into(raw, &mut x);
        self.predict(&x)
    }
}
