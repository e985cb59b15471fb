//! Deterministic FLOP accounting and wall-clock latency measurement for
//! single-window inference.

use std::fs;
use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};

/// Version of the declared FLOP counting rules below. Absolute counts are
/// only meaningful relative to these rules; ratios between models are the
/// stable quantity.
pub const FLOP_RULES_VERSION: u32 = 1;

// Counting rules, per operation on f64 values:
//   linear map in -> out:        2 * in * out
//   activation:                  1 per hidden unit
//   tree routing comparison:     1
//   scalar add:                  1
//   sigmoid:                     4
//   vector normalize (dim M):    3M + 2
//   dot product (dim M):         2M
//   centroid running mean (M):   3M + 2
//   entropy gate:                8

/// Architecture descriptor for FLOP accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelDescriptor {
    Nam { m: usize, hidden: usize },
    NamT3a { m: usize, hidden: usize },
    MtNam { m: usize, depth: usize },
    MtNamT3a { m: usize, depth: usize },
    Lr { m: usize },
    Dnn { m: usize, hidden: usize },
}

impl ModelDescriptor {
    pub fn m(&self) -> usize {
        match *self {
            ModelDescriptor::Nam { m, .. }
            | ModelDescriptor::NamT3a { m, .. }
            | ModelDescriptor::MtNam { m, .. }
            | ModelDescriptor::MtNamT3a { m, .. }
            | ModelDescriptor::Lr { m }
            | ModelDescriptor::Dnn { m, .. } => m,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            ModelDescriptor::Nam { .. } => "nam".into(),
            ModelDescriptor::NamT3a { .. } => "nam_t3a".into(),
            ModelDescriptor::MtNam { depth, .. } => format!("mtnam_d{depth}"),
            ModelDescriptor::MtNamT3a { depth, .. } => format!("mtnam_d{depth}_t3a"),
            ModelDescriptor::Lr { .. } => "lr".into(),
            ModelDescriptor::Dnn { .. } => "dnn".into(),
        }
    }
}

/// Per-window overhead of the online adapter: normalize, one class dot on
/// the maintained centroid difference, the centroid running-mean update
/// bound, the adjustment sigmoid, and the entropy gate.
fn t3a_overhead(m: u64) -> u64 {
    let normalize = 3 * m + 2;
    let centroid_update = 3 * m + 2;
    let adjust = m + 2 * m + 4; // centroid difference + dot + sigmoid
    let entropy_gate = 8;
    normalize + centroid_update + adjust + entropy_gate
}

/// FLOPs for one single-window forward pass under the declared rules.
pub fn count_flops(desc: &ModelDescriptor) -> Result<u64> {
    let m = desc.m() as u64;
    if m == 0 {
        return Err(Error::Invalid("descriptor with M = 0".into()));
    }
    let sum_and_sigmoid = (m - 1) + 4;
    Ok(match *desc {
        ModelDescriptor::Nam { hidden, .. } => {
            let h = hidden as u64;
            // per net: 2h (input linear) + h (activation) + 2h (output linear)
            m * 5 * h + sum_and_sigmoid
        }
        ModelDescriptor::NamT3a { hidden, .. } => {
            let h = hidden as u64;
            m * 5 * h + sum_and_sigmoid + t3a_overhead(m)
        }
        ModelDescriptor::MtNam { depth, .. } => m * depth as u64 + sum_and_sigmoid,
        ModelDescriptor::MtNamT3a { depth, .. } => {
            m * depth as u64 + sum_and_sigmoid + t3a_overhead(m)
        }
        ModelDescriptor::Lr { .. } => 2 * m + 4,
        ModelDescriptor::Dnn { hidden, .. } => {
            let h = hidden as u64;
            2 * m * h + h + 2 * h + 4
        }
    })
}

/// Latency statistics over repeated single-window forwards.
#[derive(Debug, Clone)]
pub struct LatencyReport {
    pub model: String,
    pub mean_us: f64,
    pub std_us: f64,
    pub min_us: f64,
    pub reps: usize,
    pub warmup: usize,
}

/// Time `forward` on a monotonic clock, one window per repetition, cycling
/// through `inputs`. Warmup runs are discarded. Requires at least 30
/// repetitions and 5 warmups.
pub fn measure_latency<F>(
    model: &str,
    mut forward: F,
    inputs: &[Vec<f64>],
    reps: usize,
    warmup: usize,
) -> Result<LatencyReport>
where
    F: FnMut(&[f64]) -> f64,
{
    if inputs.is_empty() {
        return Err(Error::Invalid("latency measurement needs inputs".into()));
    }
    if reps < 30 || warmup < 5 {
        return Err(Error::Invalid(
            "latency measurement needs reps >= 30 and warmup >= 5".into(),
        ));
    }
    for k in 0..warmup {
        black_box(forward(&inputs[k % inputs.len()]));
    }
    let mut times_us = Vec::with_capacity(reps);
    for k in 0..reps {
        let x = &inputs[k % inputs.len()];
        let t0 = Instant::now();
        black_box(forward(x));
        times_us.push(t0.elapsed().as_secs_f64() * 1e6);
    }
    let n = times_us.len() as f64;
    let mean = times_us.iter().sum::<f64>() / n;
    let var = times_us
        .iter()
        .map(|t| (t - mean) * (t - mean))
        .sum::<f64>()
        / n;
    let min = times_us.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LatencyReport {
        model: model.to_string(),
        mean_us: mean,
        std_us: var.sqrt(),
        min_us: min,
        reps,
        warmup,
    })
}

pub const BENCH_CSV_HEADER: &str = "model,flops,lat_mean_us,lat_std_us,lat_min_us,R,W,host_tag";

pub fn write_bench_csv(
    path: &Path,
    rows: &[(u64, LatencyReport)],
    host_tag: &str,
    comment: Option<&str>,
) -> Result<()> {
    let mut out = String::new();
    if let Some(c) = comment {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&format!("# flop_rules_version={FLOP_RULES_VERSION}\n"));
    out.push_str(BENCH_CSV_HEADER);
    out.push('\n');
    for (flops, lat) in rows {
        out.push_str(&format!(
            "{},{},{:.3},{:.3},{:.3},{},{},{}\n",
            lat.model, flops, lat.mean_us, lat.std_us, lat.min_us, lat.reps, lat.warmup, host_tag
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
