//! Back-propagation-free test-time adaptation: per-class centroids of
//! normalized contribution vectors, updated online behind an entropy gate,
//! with predictions adjusted by the centroid difference. Model parameters
//! are never touched.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::util::{fmt_g17, sigmoid};

/// Streaming adapter state: class centroids as running means over the
/// initialization vector plus every accepted unit-norm contribution vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterState {
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub n0: u64,
    pub n1: u64,
    /// Entropy gate in nats; samples with prediction entropy >= h0 are
    /// not used for updates.
    pub h0: f64,
}

/// Fresh adapter: the class-1 centroid starts at `+1/sqrt(M) * ones` and
/// class-0 at its negation, so the initial adjusted predictor is a
/// positively scaled version of the offline one.
pub fn init_adapter(m: usize, h0: f64) -> Result<AdapterState> {
    if m == 0 {
        return Err(Error::Invalid("adapter needs M >= 1".into()));
    }
    if !(h0.is_finite() && h0 >= 0.0) {
        return Err(Error::Invalid("entropy threshold must be >= 0".into()));
    }
    let a = 1.0 / (m as f64).sqrt();
    Ok(AdapterState {
        mu0: vec![-a; m],
        mu1: vec![a; m],
        n0: 1,
        n1: 1,
        h0,
    })
}

/// Binary entropy in nats, with `0 * ln 0 := 0`.
pub fn entropy(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Invalid(format!("entropy input {y} outside [0, 1]")));
    }
    let term = |p: f64| if p == 0.0 { 0.0 } else { p * p.ln() };
    Ok(-(term(y) + term(1.0 - y)))
}

/// Outcome of one adaptation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptStep {
    pub y_offline: f64,
    pub y_adjusted: f64,
    pub accepted: bool,
    /// Class whose centroid was updated, when accepted.
    pub class_assigned: Option<bool>,
}

impl AdapterState {
    pub fn m(&self) -> usize {
        self.mu0.len()
    }

    /// Process one contribution vector: gate on prediction entropy, update
    /// the predicted class's centroid with the normalized vector, and return
    /// the adjusted prediction computed with the post-update centroids.
    /// A zero-norm vector is treated as gated.
    pub fn step(&mut self, contrib: &[f64]) -> Result<AdaptStep> {
        if contrib.len() != self.m() {
            return Err(Error::Invalid(format!(
                "contribution vector has {} entries, adapter has {}",
                contrib.len(),
                self.m()
            )));
        }
        let sum: f64 = contrib.iter().sum();
        let y_offline = sigmoid(sum);
        let h = entropy(y_offline)?;

        let mut accepted = false;
        let mut class_assigned = None;
        if h < self.h0 {
            let norm = contrib.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                let class1 = y_offline >= 0.5;
                let (mu, n) = if class1 {
                    (&mut self.mu1, &mut self.n1)
                } else {
                    (&mut self.mu0, &mut self.n0)
                };
                *n += 1;
                let w_new = 1.0 / *n as f64;
                let w_old = 1.0 - w_new;
                for (m, &c) in mu.iter_mut().zip(contrib) {
                    *m = w_old * *m + w_new * (c / norm);
                }
                accepted = true;
                class_assigned = Some(class1);
            }
        }

        let mut adj = 0.0;
        for ((c, m1), m0) in contrib.iter().zip(&self.mu1).zip(&self.mu0) {
            adj += c * (m1 - m0);
        }
        Ok(AdaptStep {
            y_offline,
            y_adjusted: sigmoid(adj),
            accepted,
            class_assigned,
        })
    }
}

/// One window of a prediction stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamRow {
    pub window_start_s: f64,
    pub label: bool,
    pub y_offline: f64,
    pub y_adapted: f64,
    pub accepted: bool,
    pub class_assigned: Option<bool>,
}

/// Run the adapter over the windows of `fm` in chronological order, single
/// pass. `contrib_fn` produces the model's contribution vector for one
/// scaled window; the same code path serves both the additive teacher and
/// the distilled trees.
pub fn run_stream<F>(
    mut contrib_fn: F,
    adapter: &mut AdapterState,
    fm: &FeatureMatrix,
) -> Result<Vec<StreamRow>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut out = Vec::with_capacity(fm.n_rows());
    for i in 0..fm.n_rows() {
        let contrib = contrib_fn(&fm.rows[i])?;
        let step = adapter.step(&contrib)?;
        out.push(StreamRow {
            window_start_s: fm.window_start_s[i],
            label: fm.labels[i],
            y_offline: step.y_offline,
            y_adapted: step.y_adjusted,
            accepted: step.accepted,
            class_assigned: step.class_assigned,
        });
    }
    Ok(out)
}

/// Default tuning grid: 20 log-spaced thresholds between 1e-4 and ln 2
/// (the upper bound of binary entropy).
pub fn default_h0_grid() -> Vec<f64> {
    let lo: f64 = 1e-4;
    let hi = std::f64::consts::LN_2;
    let n = 20;
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone)]
pub struct H0ReportRow {
    pub h0: f64,
    pub val_f1: f64,
    pub selected: bool,
}

/// Pick the gate threshold maximizing adapted weighted F1 on the validation
/// stream; ties go to the larger threshold (more updates accepted).
pub fn tune_h0<F>(
    mut contrib_fn: F,
    val: &FeatureMatrix,
    grid: &[f64],
) -> Result<(f64, Vec<H0ReportRow>)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if grid.is_empty() {
        return Err(Error::Invalid("empty H0 grid".into()));
    }
    let mut ascending = grid.to_vec();
    ascending.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ascending.dedup();

    let mut rows = Vec::with_capacity(ascending.len());
    let mut best: Option<(usize, f64)> = None;
    for (idx, &h0) in ascending.iter().enumerate() {
        let mut adapter = init_adapter(val.m, h0)?;
        let stream = run_stream(&mut contrib_fn, &mut adapter, val)?;
        let scores: Vec<f64> = stream.iter().map(|r| r.y_adapted).collect();
        let f1 = crate::eval::f1_weighted(&scores, &val.labels, 0.5)?;
        rows.push(H0ReportRow {
            h0,
            val_f1: f1,
            selected: false,
        });
        // >= keeps the largest threshold among ties
        if best.is_none_or(|(_, bf)| f1 >= bf) {
            best = Some((idx, f1));
        }
    }
    let (idx, _) = best.expect("non-empty grid");
    rows[idx].selected = true;
    Ok((ascending[idx], rows))
}

/// Write a prediction stream as CSV. A gated window reports -1 in the
/// `class_assigned` column.
pub fn write_stream_csv(path: &Path, rows: &[StreamRow], comment: Option<&str>) -> Result<()> {
    let mut out = String::new();
    if let Some(c) = comment {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str("window_start_s,label,y_offline,y_adapted,accepted,class_assigned\n");
    for r in rows {
        let class = match r.class_assigned {
            None => "-1",
            Some(false) => "0",
            Some(true) => "1",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_g17(r.window_start_s),
            u8::from(r.label),
            fmt_g17(r.y_offline),
            fmt_g17(r.y_adapted),
            u8::from(r.accepted),
            class
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
