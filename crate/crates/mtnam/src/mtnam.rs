//! Tree-based distillation of a trained additive model: every feature
//! function is replaced by a depth-bounded regression tree fitted to
//! (input, teacher output) pairs drawn from the training inputs.

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Scaler};
use crate::nam::NamModel;
use crate::tree::{fit_regression_tree, RegressionTree};
use crate::util::{fnv1a64, sigmoid};

/// Inference-oriented packing of all trees: every tree is embedded into a
/// complete tree of the model depth, so routing is a fixed number of
/// data-independent array steps per feature.
#[derive(Debug, Clone, PartialEq)]
struct FlatForest {
    depth: usize,
    n_internal: usize,
    n_leaf: usize,
    thresholds: Vec<f64>,
    values: Vec<f64>,
}

impl FlatForest {
    fn pack(trees: &[RegressionTree], depth: usize) -> FlatForest {
        let n_internal = (1usize << depth) - 1;
        let n_leaf = 1usize << depth;
        let mut thresholds = vec![0.0; trees.len() * n_internal];
        let mut values = vec![0.0; trees.len() * n_leaf];
        for (j, tree) in trees.iter().enumerate() {
            tree.fill_complete(
                depth,
                &mut thresholds[j * n_internal..(j + 1) * n_internal],
                &mut values[j * n_leaf..(j + 1) * n_leaf],
            );
        }
        FlatForest {
            depth,
            n_internal,
            n_leaf,
            thresholds,
            values,
        }
    }

    #[inline]
    fn predict(&self, j: usize, z: f64) -> f64 {
        let thr = &self.thresholds[j * self.n_internal..(j + 1) * self.n_internal];
        let mut idx = 0usize;
        for _ in 0..self.depth {
            idx = 2 * idx + 1 + usize::from(z > thr[idx]);
        }
        self.values[j * self.n_leaf + (idx - self.n_internal)]
    }
}

/// The distilled model: one regression tree per feature plus the teacher's
/// scaler and a provenance hash of the teacher parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MtNamModel {
    trees: Vec<RegressionTree>,
    depth: usize,
    teacher_hash: u64,
    scaler: Scaler,
    forest: FlatForest,
}

impl MtNamModel {
    pub fn new(
        trees: Vec<RegressionTree>,
        depth: usize,
        teacher_hash: u64,
        scaler: Scaler,
    ) -> Result<MtNamModel> {
        if trees.is_empty() {
            return Err(Error::Invalid("model needs at least one tree".into()));
        }
        if trees.len() != scaler.m() {
            return Err(Error::Invalid(format!(
                "{} trees but scaler has {} features",
                trees.len(),
                scaler.m()
            )));
        }
        for (j, t) in trees.iter().enumerate() {
            if t.depth() > depth {
                return Err(Error::Invalid(format!(
                    "tree {j} has depth {} > declared {depth}",
                    t.depth()
                )));
            }
        }
        let forest = FlatForest::pack(&trees, depth);
        Ok(MtNamModel {
            trees,
            depth,
            teacher_hash,
            scaler,
            forest,
        })
    }

    pub fn m(&self) -> usize {
        self.trees.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn teacher_hash(&self) -> u64 {
        self.teacher_hash
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
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

    /// Per-feature tree outputs written into `out`; returns their sum.
    pub fn contributions_into(&self, x: &[f64], out: &mut [f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut sum = 0.0;
        for (j, (&z, o)) in x.iter().zip(out.iter_mut()).enumerate() {
            let v = self.forest.predict(j, z);
            *o = v;
            sum += v;
        }
        Ok(sum)
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut contrib = vec![0.0; self.m()];
        let sum = self.contributions_into(x, &mut contrib)?;
        Ok((contrib, sigmoid(sum)))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut sum = 0.0;
        for (j, &z) in x.iter().enumerate() {
            sum += self.forest.predict(j, z);
        }
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

impl NamModel {
    /// Stable hash of the teacher parameters, recorded in distilled models.
    pub fn provenance_hash(&self) -> u64 {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(self.m() as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.arch.hidden as u64).to_le_bytes());
        bytes.push(match self.arch.activation {
            crate::nam::Activation::Relu => 0,
            crate::nam::Activation::Exu => 1,
        });
        for net in &self.nets {
            for vals in [&net.w, &net.b, &net.v] {
                for v in vals.iter() {
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
            }
            bytes.extend_from_slice(&net.c.to_le_bytes());
        }
        for v in self.scaler.mean.iter().chain(&self.scaler.std) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fnv1a64(&bytes)
    }
}

/// Distill the teacher into trees of depth at most `depth`. `inputs` must be
/// scaled with the teacher's scaler; the pairs for feature `j` are its input
/// column labeled by the teacher's feature function, duplicates kept.
pub fn distill(teacher: &NamModel, inputs: &FeatureMatrix, depth: usize) -> Result<MtNamModel> {
    if inputs.n_rows() == 0 {
        return Err(Error::Invalid(
            "distillation needs at least one input row".into(),
        ));
    }
    if inputs.m != teacher.m() {
        return Err(Error::Invalid(format!(
            "inputs have {} features, teacher has {}",
            inputs.m,
            teacher.m()
        )));
    }
    let mut trees = Vec::with_capacity(teacher.m());
    let mut pairs = Vec::with_capacity(inputs.n_rows());
    for (j, net) in teacher.nets.iter().enumerate() {
        pairs.clear();
        for row in &inputs.rows {
            let z = row[j];
            pairs.push((z, net.forward(z)));
        }
        trees.push(fit_regression_tree(&pairs, depth)?);
    }
    MtNamModel::new(
        trees,
        depth,
        teacher.provenance_hash(),
        teacher.scaler.clone(),
    )
}

/// Mean squared error between teacher and student feature functions on the
/// given inputs, per feature.
pub fn distillation_mse(
    teacher: &NamModel,
    student: &MtNamModel,
    inputs: &FeatureMatrix,
) -> Result<Vec<f64>> {
    if inputs.m != teacher.m() || student.m() != teacher.m() {
        return Err(Error::Invalid("feature dimension mismatch".into()));
    }
    let n = inputs.n_rows() as f64;
    let mut mse = vec![0.0; teacher.m()];
    for row in &inputs.rows {
        for (j, net) in teacher.nets.iter().enumerate() {
            let d = net.forward(row[j]) - student.trees[j].predict(row[j]);
            mse[j] += d * d;
        }
    }
    for v in mse.iter_mut() {
        *v /= n;
    }
    Ok(mse)
}
