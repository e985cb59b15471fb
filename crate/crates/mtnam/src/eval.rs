//! Chronological data splitting and window/event evaluation metrics.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::util::fmt_g17;

/// Split fractions for the leading (train) and middle (validation) segments;
/// the remainder is the test segment. Each of train and val must end up with
/// at least one complete seizure event.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.15,
            val_frac: 0.15,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let ok =
            self.train_frac > 0.0 && self.val_frac > 0.0 && self.train_frac + self.val_frac < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "split fractions must be positive and sum below 1".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitIndices {
    pub train_end: usize,
    pub val_end: usize,
}

/// Window index range `[first, last]` covered by an event, or None when no
/// window overlaps it.
fn event_window_range(fm: &FeatureMatrix, event: (f64, f64)) -> Option<(usize, usize)> {
    let mut first = None;
    let mut last = None;
    for (i, &t0) in fm.window_start_s.iter().enumerate() {
        let t1 = t0 + fm.win_s;
        if t0 < event.1 && event.0 < t1 {
            if first.is_none() {
                first = Some(i);
            }
            last = Some(i);
        }
    }
    Some((first?, last?))
}

/// Compute the two cut indices for a time-ordered split.
///
/// Boundaries start at the nominal fractions and are shifted minimally
/// forward until train and val each hold one complete event. When every
/// event would otherwise land in train, the train boundary is instead pulled
/// back to release the last event to validation.
pub fn chronological_split_indices(
    fm: &FeatureMatrix,
    events: &[(f64, f64)],
    spec: &SplitSpec,
) -> Result<SplitIndices> {
    spec.validate()?;
    let n = fm.n_rows();
    if n < 3 {
        return Err(Error::Invalid("too few windows to split three ways".into()));
    }
    let ranges: Vec<(usize, usize)> = events
        .iter()
        .filter_map(|&e| event_window_range(fm, e))
        .collect();
    if ranges.len() < 2 {
        return Err(Error::Invalid(format!(
            "chronological split needs >= 2 seizure events with windows, found {}; \
             provide more annotated data",
            ranges.len()
        )));
    }

    let nominal1 = ((spec.train_frac * n as f64).round() as usize).clamp(1, n - 2);
    let nominal2 = (((spec.train_frac + spec.val_frac) * n as f64).round() as usize)
        .clamp(nominal1 + 1, n - 1);

    // train: earliest-ending event must fit completely
    let mut train_end = nominal1;
    if !ranges.iter().any(|&(_, last)| last < train_end) {
        train_end = ranges.iter().map(|&(_, last)| last + 1).min().unwrap();
    }
    // val needs an event fully after the train boundary; if train swallowed
    // them all, pull the boundary back to the start of the last event
    if !ranges.iter().any(|&(first, _)| first >= train_end) {
        let &(last_first, _) = ranges
            .iter()
            .max_by_key(|&&(first, _)| first)
            .expect("ranges non-empty");
        train_end = last_first;
        if !ranges.iter().any(|&(_, last)| last < train_end) {
            return Err(Error::Invalid(
                "cannot split: events overlap the train/val boundary too tightly".into(),
            ));
        }
    }

    let mut val_end = nominal2.max(train_end + 1);
    let val_candidates: Vec<&(usize, usize)> = ranges
        .iter()
        .filter(|&&(first, _)| first >= train_end)
        .collect();
    if !val_candidates.iter().any(|&&(_, last)| last < val_end) {
        val_end = val_candidates
            .iter()
            .map(|&&(_, last)| last + 1)
            .min()
            .expect("val candidate exists");
    }
    if val_end >= n {
        return Err(Error::Invalid(
            "recording too short: no windows left for the test segment".into(),
        ));
    }
    Ok(SplitIndices { train_end, val_end })
}

/// Split into chronologically contiguous train/val/test feature matrices.
pub fn chronological_split(
    fm: &FeatureMatrix,
    events: &[(f64, f64)],
    spec: &SplitSpec,
) -> Result<(FeatureMatrix, FeatureMatrix, FeatureMatrix)> {
    let idx = chronological_split_indices(fm, events, spec)?;
    Ok((
        fm.slice_rows(0..idx.train_end),
        fm.slice_rows(idx.train_end..idx.val_end),
        fm.slice_rows(idx.val_end..fm.n_rows()),
    ))
}

/// Window-level confusion at a score threshold. An empty class reports a
/// rate of 1.0 with its `*_defaulted` flag set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub sensitivity: f64,
    pub specificity: f64,
    pub sens_defaulted: bool,
    pub spec_defaulted: bool,
}

pub fn confusion(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Confusion> {
    if scores.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        let pos = s >= threshold;
        match (l, pos) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    let sens_defaulted = tp + fn_ == 0;
    let spec_defaulted = tn + fp == 0;
    Ok(Confusion {
        tp,
        fp,
        tn,
        fn_,
        sensitivity: if sens_defaulted {
            1.0
        } else {
            tp as f64 / (tp + fn_) as f64
        },
        specificity: if spec_defaulted {
            1.0
        } else {
            tn as f64 / (tn + fp) as f64
        },
        sens_defaulted,
        spec_defaulted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSensitivity {
    pub value: f64,
    pub n_events: usize,
    pub n_detected: usize,
    /// False when there were no events to detect.
    pub defined: bool,
}

/// Fraction of events with at least one positive window overlapping them.
pub fn event_sensitivity(
    positive: &[bool],
    window_start_s: &[f64],
    win_s: f64,
    events: &[(f64, f64)],
) -> Result<EventSensitivity> {
    if positive.len() != window_start_s.len() {
        return Err(Error::Invalid(
            "predictions and timestamps differ in length".into(),
        ));
    }
    if events.is_empty() {
        return Ok(EventSensitivity {
            value: 0.0,
            n_events: 0,
            n_detected: 0,
            defined: false,
        });
    }
    let mut detected = 0;
    for &(s, e) in events {
        let hit = positive
            .iter()
            .zip(window_start_s)
            .any(|(&p, &t0)| p && t0 < e && s < t0 + win_s);
        if hit {
            detected += 1;
        }
    }
    Ok(EventSensitivity {
        value: detected as f64 / events.len() as f64,
        n_events: events.len(),
        n_detected: detected,
        defined: true,
    })
}

/// Probability that a random positive outranks a random negative, counting
/// ties as one half (rank form of the Mann-Whitney statistic).
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Invalid("scores and labels differ in length".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Invalid("AUROC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    // mid-ranks for tied scores
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] {
                rank_sum_pos += mid_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Support-weighted mean of the per-class F1 scores; a class with undefined
/// F1 (no predictions and no members jointly) contributes zero.
pub fn f1_weighted(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Invalid("scores and labels differ in length".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Invalid(
            "weighted F1 needs both classes present".into(),
        ));
    }
    let c = confusion(scores, labels, threshold)?;
    let f1_of = |tp: usize, fp: usize, fn_: usize| -> f64 {
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let f1_pos = f1_of(c.tp, c.fp, c.fn_);
    let f1_neg = f1_of(c.tn, c.fn_, c.fp);
    let n = labels.len() as f64;
    Ok(f1_pos * n_pos as f64 / n + f1_neg * n_neg as f64 / n)
}

/// All window and event metrics for one model on one split.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub model: String,
    pub threshold: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1_weighted: f64,
    pub auroc: f64,
    pub event_sensitivity: f64,
    pub event_sensitivity_defined: bool,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub n_events: usize,
    pub n_events_detected: usize,
}

pub fn compute_metrics(
    model: &str,
    scores: &[f64],
    fm: &FeatureMatrix,
    events: &[(f64, f64)],
    threshold: f64,
) -> Result<MetricsReport> {
    let c = confusion(scores, &fm.labels, threshold)?;
    let positive: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    // only events that actually overlap this segment's windows count
    let segment_events: Vec<(f64, f64)> = events
        .iter()
        .copied()
        .filter(|&(s, e)| {
            fm.window_start_s
                .iter()
                .any(|&t0| t0 < e && s < t0 + fm.win_s)
        })
        .collect();
    let ev = event_sensitivity(&positive, &fm.window_start_s, fm.win_s, &segment_events)?;
    let auc = auroc(scores, &fm.labels)?;
    let f1 = f1_weighted(scores, &fm.labels, threshold)?;
    Ok(MetricsReport {
        model: model.to_string(),
        threshold,
        sensitivity: c.sensitivity,
        specificity: c.specificity,
        f1_weighted: f1,
        auroc: auc,
        event_sensitivity: ev.value,
        event_sensitivity_defined: ev.defined,
        tp: c.tp,
        fp: c.fp,
        tn: c.tn,
        fn_: c.fn_,
        n_events: ev.n_events,
        n_events_detected: ev.n_detected,
    })
}

impl MetricsReport {
    pub fn to_kv_text(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(c) = comment {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&format!("model={}\n", self.model));
        out.push_str(&format!("threshold={}\n", fmt_g17(self.threshold)));
        out.push_str(&format!("sensitivity={}\n", fmt_g17(self.sensitivity)));
        out.push_str(&format!("specificity={}\n", fmt_g17(self.specificity)));
        out.push_str(&format!("f1_weighted={}\n", fmt_g17(self.f1_weighted)));
        out.push_str(&format!("auroc={}\n", fmt_g17(self.auroc)));
        out.push_str(&format!(
            "event_sensitivity={}\n",
            fmt_g17(self.event_sensitivity)
        ));
        out.push_str(&format!(
            "event_sensitivity_defined={}\n",
            u8::from(self.event_sensitivity_defined)
        ));
        out.push_str(&format!(
            "tp={}\nfp={}\ntn={}\nfn={}\n",
            self.tp, self.fp, self.tn, self.fn_
        ));
        out.push_str(&format!(
            "n_events={}\nn_events_detected={}\n",
            self.n_events, self.n_events_detected
        ));
        out
    }

    pub const CSV_HEADER: &'static str = "model,threshold,sensitivity,specificity,f1_weighted,auroc,event_sensitivity,tp,fp,tn,fn,n_events,n_events_detected";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.model,
            fmt_g17(self.threshold),
            fmt_g17(self.sensitivity),
            fmt_g17(self.specificity),
            fmt_g17(self.f1_weighted),
            fmt_g17(self.auroc),
            fmt_g17(self.event_sensitivity),
            self.tp,
            self.fp,
            self.tn,
            self.fn_,
            self.n_events,
            self.n_events_detected
        )
    }

    pub fn write_kv(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        fs::write(path, self.to_kv_text(comment)).map_err(|e| Error::io(path, e))
    }
}
