//! Windowed feature extraction: line length, variance, and seven spectral
//! band powers per channel over non-overlapping windows.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::Recording;
use crate::util::fmt_g17;

/// Features per channel: seven band powers, line length, variance.
pub const FEATURES_PER_CHANNEL: usize = 9;

/// Analysis bands in Hz, lower-inclusive / upper-exclusive:
/// delta, theta, alpha, beta, low-gamma, gamma, high-gamma.
pub const BANDS: [(f64, f64); 7] = [
    (1.0, 4.0),
    (4.0, 8.0),
    (8.0, 13.0),
    (13.0, 30.0),
    (30.0, 50.0),
    (50.0, 80.0),
    (80.0, 120.0),
];

/// Per-window feature vectors with labels and timestamps. Feature `j`
/// belongs to channel `j / 9`, with the layout documented on
/// [`extract_features`].
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub m: usize,
    pub win_s: f64,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub window_start_s: Vec<f64>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_ictal(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Copy out a contiguous row range.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> FeatureMatrix {
        FeatureMatrix {
            m: self.m,
            win_s: self.win_s,
            rows: self.rows[range.clone()].to_vec(),
            labels: self.labels[range.clone()].to_vec(),
            window_start_s: self.window_start_s[range].to_vec(),
        }
    }

    /// Copy out an arbitrary (ordered) subset of rows.
    pub fn take_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            m: self.m,
            win_s: self.win_s,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            window_start_s: indices.iter().map(|&i| self.window_start_s[i]).collect(),
        }
    }

    pub fn write_csv(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        let mut out = String::new();
        if let Some(c) = comment {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str("# win_s=");
        out.push_str(&fmt_g17(self.win_s));
        out.push('\n');
        out.push_str("window_start_s,label");
        for j in 0..self.m {
            out.push_str(&format!(",f_{j}"));
        }
        out.push('\n');
        for i in 0..self.n_rows() {
            out.push_str(&fmt_g17(self.window_start_s[i]));
            out.push(',');
            out.push(if self.labels[i] { '1' } else { '0' });
            for v in &self.rows[i] {
                out.push(',');
                out.push_str(&fmt_g17(*v));
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<FeatureMatrix> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut win_s = 1.0;
        let mut header: Option<Vec<&str>> = None;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut starts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("win_s=") {
                    win_s = v.trim().parse::<f64>().map_err(|_| {
                        Error::Format(format!("{}: bad win_s comment", path.display()))
                    })?;
                }
                continue;
            }
            if header.is_none() {
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() < 3 || cols[0] != "window_start_s" || cols[1] != "label" {
                    return Err(Error::Format(format!(
                        "{}: unexpected feature CSV header",
                        path.display()
                    )));
                }
                header = Some(cols);
                continue;
            }
            let m = header.as_ref().unwrap().len() - 2;
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != m + 2 {
                return Err(Error::Format(format!(
                    "{}: row {} has {} cells, expected {}",
                    path.display(),
                    lineno + 1,
                    cells.len(),
                    m + 2
                )));
            }
            let bad = |what: &str| {
                Error::Format(format!(
                    "{}: bad {what} at row {}",
                    path.display(),
                    lineno + 1
                ))
            };
            starts.push(cells[0].parse::<f64>().map_err(|_| bad("timestamp"))?);
            labels.push(match cells[1] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("label")),
            });
            let mut row = Vec::with_capacity(m);
            for cell in &cells[2..] {
                row.push(cell.parse::<f64>().map_err(|_| bad("feature value"))?);
            }
            rows.push(row);
        }
        let header = header.ok_or_else(|| {
            Error::Format(format!("{}: missing feature CSV header", path.display()))
        })?;
        Ok(FeatureMatrix {
            m: header.len() - 2,
            win_s,
            rows,
            labels,
            window_start_s: starts,
        })
    }
}

/// Non-overlapping window bounds as `(start_sample, end_sample, label)`.
/// A trailing partial window is dropped; a window is labeled ictal when it
/// overlaps any seizure interval.
pub fn window_bounds(rec: &Recording, win_s: f64) -> Result<Vec<(usize, usize, bool)>> {
    let wl = win_s * f64::from(rec.fs);
    if !(wl.is_finite() && wl > 0.0) || (wl - wl.round()).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "window length {win_s} s x {} Hz is not a positive whole number of samples",
            rec.fs
        )));
    }
    let win_len = wl.round() as usize;
    let n_windows = rec.n_samples() / win_len;
    if n_windows == 0 {
        return Err(Error::Invalid(format!(
            "recording of {} samples is shorter than one {win_len}-sample window",
            rec.n_samples()
        )));
    }
    let fs = f64::from(rec.fs);
    let mut out = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let start = w * win_len;
        let end = start + win_len;
        let t0 = start as f64 / fs;
        let t1 = end as f64 / fs;
        let label = rec.seizures.iter().any(|&(s, e)| t0 < e && s < t1);
        out.push((start, end, label));
    }
    Ok(out)
}

/// Sum of absolute first differences.
pub fn line_length(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::Invalid(
            "line length needs at least 2 samples".into(),
        ));
    }
    let mut acc = 0.0;
    for i in 1..x.len() {
        acc += (x[i] - x[i - 1]).abs();
    }
    Ok(acc)
}

/// Population variance.
pub fn variance(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Invalid("variance needs at least 1 sample".into()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    Ok(x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
}

/// Reusable rectangular-window periodogram over a fixed input length,
/// zero-padded to the next power of two.
struct Periodogram {
    fft: Arc<dyn Fft<f64>>,
    padded_len: usize,
}

impl Periodogram {
    fn new(len: usize) -> Periodogram {
        let padded_len = len.next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(padded_len);
        Periodogram { fft, padded_len }
    }

    /// All `padded_len` bins of `P_k = |X_k|^2 / padded_len`, so the bin sum
    /// equals the signal energy (Parseval).
    fn power(&self, x: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(self.padded_len, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        let norm = self.padded_len as f64;
        buf.into_iter().map(|c| c.norm_sqr() / norm).collect()
    }
}

/// Full periodogram of `x` (all bins, zero-padded to a power of two).
pub fn periodogram(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::Invalid(
            "periodogram needs at least 2 samples".into(),
        ));
    }
    Ok(Periodogram::new(x.len()).power(x))
}

/// Band powers with per-band support flags.
#[derive(Debug, Clone, Copy)]
pub struct BandPowers {
    pub power: [f64; 7],
    /// True when the sampling rate cannot represent the band's lower edge;
    /// that band's power is reported as zero.
    pub unsupported: [bool; 7],
}

/// Spectral power per analysis band from the rectangular-window periodogram.
/// Bins are assigned lower-inclusive / upper-exclusive; the DC bin is never
/// included.
pub fn band_powers(x: &[f64], fs: u32) -> Result<BandPowers> {
    if fs == 0 {
        return Err(Error::Invalid(
            "band powers need a positive sampling rate".into(),
        ));
    }
    let p = periodogram(x)?;
    Ok(band_powers_from_periodogram(&p, fs))
}

fn band_powers_from_periodogram(p: &[f64], fs: u32) -> BandPowers {
    let padded_len = p.len();
    let bin_hz = f64::from(fs) / padded_len as f64;
    let nyquist = f64::from(fs) / 2.0;
    let mut power = [0.0; 7];
    let mut unsupported = [false; 7];
    for (b, &(lo, hi)) in BANDS.iter().enumerate() {
        if nyquist < lo {
            unsupported[b] = true;
            continue;
        }
        // one-sided bins, DC excluded
        for k in 1..=padded_len / 2 {
            let f = k as f64 * bin_hz;
            if f >= lo && f < hi {
                power[b] += p[k];
            }
        }
    }
    BandPowers { power, unsupported }
}

/// Compute the feature matrix: for each window and channel, seven band
/// powers (delta through high-gamma), line length, and variance, laid out
/// channel-major at `j = channel * 9 + feature`.
pub fn extract_features(rec: &Recording, win_s: f64) -> Result<FeatureMatrix> {
    let bounds = window_bounds(rec, win_s)?;
    let win_len = bounds[0].1 - bounds[0].0;
    let pg = Periodogram::new(win_len);
    let fs = f64::from(rec.fs);
    let m = rec.n_channels() * FEATURES_PER_CHANNEL;

    let mut rows = Vec::with_capacity(bounds.len());
    let mut labels = Vec::with_capacity(bounds.len());
    let mut starts = Vec::with_capacity(bounds.len());
    for &(start, end, label) in &bounds {
        let mut row = Vec::with_capacity(m);
        for ch in &rec.samples {
            let w = &ch[start..end];
            let bp = band_powers_from_periodogram(&pg.power(w), rec.fs);
            row.extend_from_slice(&bp.power);
            row.push(line_length(w)?);
            row.push(variance(w)?);
        }
        debug_assert_eq!(row.len(), m);
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite feature in window starting at {} s",
                start as f64 / fs
            )));
        }
        rows.push(row);
        labels.push(label);
        starts.push(start as f64 / fs);
    }
    Ok(FeatureMatrix {
        m,
        win_s,
        rows,
        labels,
        window_start_s: starts,
    })
}

/// Per-feature z-score statistics, fitted on training windows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Population standard deviation, clamped below at 1e-8.
    pub std: Vec<f64>,
}

pub fn fit_scaler(train: &FeatureMatrix) -> Result<Scaler> {
    if train.n_rows() == 0 {
        return Err(Error::Invalid(
            "cannot fit a scaler on an empty matrix".into(),
        ));
    }
    let n = train.n_rows() as f64;
    let m = train.m;
    let mut mean = vec![0.0; m];
    for row in &train.rows {
        for (j, v) in row.iter().enumerate() {
            mean[j] += v;
        }
    }
    for v in mean.iter_mut() {
        *v /= n;
    }
    let mut var = vec![0.0; m];
    for row in &train.rows {
        for (j, v) in row.iter().enumerate() {
            let d = v - mean[j];
            var[j] += d * d;
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt().max(1e-8)).collect();
    Ok(Scaler { mean, std })
}

impl Scaler {
    pub fn m(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_into(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..row.len() {
            out[j] = (row[j] - self.mean[j]) / self.std[j];
        }
    }

    pub fn apply(&self, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
        if fm.m != self.m() {
            return Err(Error::Invalid(format!(
                "scaler has {} features, matrix has {}",
                self.m(),
                fm.m
            )));
        }
        let mut out = fm.clone();
        for row in out.rows.iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SynthConfig;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat_recording(n_channels: usize, fs: u32, secs: usize) -> Recording {
        let n = fs as usize * secs;
        Recording::new(
            (0..n_channels).map(|c| format!("ch_{c}")).collect(),
            fs,
            vec![vec![0.0; n]; n_channels],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn ten_second_recording_gives_ten_windows() {
        let rec = flat_recording(1, 256, 10);
        let b = window_bounds(&rec, 1.0).unwrap();
        assert_eq!(b.len(), 10);
        assert!(b.iter().all(|&(s, e, _)| e - s == 256));
        assert_eq!(b[3].0, 3 * 256);
    }

    #[test]
    fn seizure_overlap_labels_windows_2_and_3() {
        let rec = flat_recording(1, 256, 10)
            .with_seizures(vec![(2.5, 3.2)])
            .unwrap();
        let b = window_bounds(&rec, 1.0).unwrap();
        let labels: Vec<bool> = b.iter().map(|&(_, _, l)| l).collect();
        let expect: Vec<bool> = (0..10).map(|w| w == 2 || w == 3).collect();
        assert_eq!(labels, expect);
    }

    #[test]
    fn too_short_recording_errors() {
        let rec = Recording::new(vec!["a".into()], 256, vec![vec![0.0; 128]], vec![]).unwrap();
        assert!(window_bounds(&rec, 1.0).is_err());
    }

    #[test]
    fn trailing_partial_window_dropped() {
        let rec = Recording::new(vec!["a".into()], 4, vec![vec![0.0; 11]], vec![]).unwrap();
        assert_eq!(window_bounds(&rec, 1.0).unwrap().len(), 2);
    }

    #[test]
    fn line_length_examples() {
        assert_eq!(line_length(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(line_length(&[0.0, 1.0, 0.0, 1.0]).unwrap(), 3.0);
        assert!(line_length(&[1.0]).is_err());
    }

    #[test]
    fn line_length_matches_fold_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..256).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let by_fold: f64 = x.windows(2).fold(0.0, |acc, p| acc + (p[1] - p[0]).abs());
        assert_eq!(line_length(&x).unwrap(), by_fold);
    }

    #[test]
    fn variance_examples() {
        assert_eq!(variance(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(variance(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(variance(&[0.0, 2.0]).unwrap(), 1.0);
        assert!(variance(&[]).is_err());
    }

    #[test]
    fn alpha_sinusoid_concentrates_in_alpha_band() {
        let fs = 256;
        let x: Vec<f64> = (0..256)
            .map(|i| (2.0 * std::f64::consts::PI * 10.0 * i as f64 / fs as f64).sin())
            .collect();
        let bp = band_powers(&x, fs).unwrap();
        let total: f64 = bp.power.iter().sum();
        assert!(total > 0.0);
        assert!(
            bp.power[2] / total >= 0.95,
            "alpha fraction {} too small",
            bp.power[2] / total
        );
    }

    #[test]
    fn dc_signal_has_zero_band_power() {
        let bp = band_powers(&vec![3.5; 256], 256).unwrap();
        assert!(bp.power.iter().all(|&p| p == 0.0));
        assert!(bp.unsupported.iter().all(|&u| !u));
    }

    #[test]
    fn two_tone_splits_between_delta_and_gamma() {
        let fs = 256;
        let x: Vec<f64> = (0..256)
            .map(|i| {
                let t = i as f64 / fs as f64;
                (2.0 * std::f64::consts::PI * 2.0 * t).sin()
                    + (2.0 * std::f64::consts::PI * 60.0 * t).sin()
            })
            .collect();
        let bp = band_powers(&x, fs).unwrap();
        let delta = bp.power[0];
        let gamma = bp.power[5];
        assert!((delta - gamma).abs() / delta.max(gamma) < 0.05);
        for (b, &p) in bp.power.iter().enumerate() {
            if b != 0 && b != 5 {
                assert!(p < 0.05 * delta.min(gamma), "band {b} leaked {p}");
            }
        }
    }

    #[test]
    fn low_fs_flags_unreachable_bands() {
        let bp = band_powers(&vec![1.0; 64], 64).unwrap(); // nyquist 32 Hz
        assert!(!bp.unsupported[4]); // low-gamma lower edge 30 <= 32
        assert!(bp.unsupported[5] && bp.unsupported[6]);
        assert_eq!(bp.power[5], 0.0);
    }

    #[test]
    fn periodogram_total_power_matches_signal_energy() {
        // Parseval: with P_k = |X_k|^2 / L the bin sum equals sum(x^2).
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let x: Vec<f64> = (0..256).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let p = periodogram(&x).unwrap();
            let total: f64 = p.iter().sum();
            let energy: f64 = x.iter().map(|v| v * v).sum();
            assert!(
                (total - energy).abs() <= 1e-6 * energy,
                "total {total} vs energy {energy}"
            );
        }
    }

    #[test]
    fn feature_matrix_shape_and_layout() {
        let rec = flat_recording(2, 256, 5);
        let fm = extract_features(&rec, 1.0).unwrap();
        assert_eq!(fm.n_rows(), 5);
        assert_eq!(fm.m, 18);
        assert!(fm.rows.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn twenty_three_channels_give_m_207() {
        let rec = flat_recording(23, 256, 2);
        let fm = extract_features(&rec, 1.0).unwrap();
        assert_eq!(fm.m, 207);
    }

    #[test]
    fn channel_permutation_permutes_feature_blocks() {
        let cfg = SynthConfig {
            n_channels: 3,
            duration_s: 4.0,
            seizures: vec![],
            seed: 5,
            ..SynthConfig::default()
        };
        let rec = crate::signal::synth_recording(&cfg).unwrap();
        let fm = extract_features(&rec, 1.0).unwrap();

        let perm = [2usize, 0, 1];
        let rec_p = Recording::new(
            perm.iter().map(|&c| rec.channels[c].clone()).collect(),
            rec.fs,
            perm.iter().map(|&c| rec.samples[c].clone()).collect(),
            vec![],
        )
        .unwrap();
        let fm_p = extract_features(&rec_p, 1.0).unwrap();
        let f = FEATURES_PER_CHANNEL;
        for w in 0..fm.n_rows() {
            for (new_c, &old_c) in perm.iter().enumerate() {
                assert_eq!(
                    &fm_p.rows[w][new_c * f..(new_c + 1) * f],
                    &fm.rows[w][old_c * f..(old_c + 1) * f]
                );
            }
        }
    }

    #[test]
    fn scaler_normalizes_its_own_fit_set() {
        let cfg = SynthConfig {
            n_channels: 2,
            duration_s: 30.0,
            seizures: vec![],
            seed: 3,
            ..SynthConfig::default()
        };
        let rec = crate::signal::synth_recording(&cfg).unwrap();
        let fm = extract_features(&rec, 1.0).unwrap();
        let scaler = fit_scaler(&fm).unwrap();
        let z = scaler.apply(&fm).unwrap();
        let n = z.n_rows() as f64;
        for j in 0..z.m {
            let mean: f64 = z.rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var: f64 = z
                .rows
                .iter()
                .map(|r| (r[j] - mean) * (r[j] - mean))
                .sum::<f64>()
                / n;
            assert!(mean.abs() < 1e-9, "feature {j} mean {mean}");
            assert!(
                (var.sqrt() - 1.0).abs() < 1e-9,
                "feature {j} std {}",
                var.sqrt()
            );
        }
    }

    #[test]
    fn constant_feature_transforms_to_zero() {
        let fm = FeatureMatrix {
            m: 1,
            win_s: 1.0,
            rows: vec![vec![5.0], vec![5.0], vec![5.0]],
            labels: vec![false; 3],
            window_start_s: vec![0.0, 1.0, 2.0],
        };
        let s = fit_scaler(&fm).unwrap();
        assert_eq!(s.std[0], 1e-8);
        let z = s.apply(&fm).unwrap();
        assert!(z.rows.iter().all(|r| r[0] == 0.0));
    }

    #[test]
    fn scaler_keeps_train_statistics_on_new_data() {
        let train = FeatureMatrix {
            m: 1,
            win_s: 1.0,
            rows: vec![vec![0.0], vec![2.0]],
            labels: vec![false; 2],
            window_start_s: vec![0.0, 1.0],
        };
        let s = fit_scaler(&train).unwrap();
        let test = FeatureMatrix {
            m: 1,
            win_s: 1.0,
            rows: vec![vec![100.0]],
            labels: vec![false],
            window_start_s: vec![2.0],
        };
        let z = s.apply(&test).unwrap();
        // must use train mean 1 and std 1, not statistics of the test row
        assert_eq!(z.rows[0][0], 99.0);
    }

    #[test]
    fn feature_csv_round_trip_is_bit_exact() {
        let cfg = SynthConfig {
            n_channels: 2,
            duration_s: 8.0,
            seizures: vec![(2.0, 4.0)],
            seed: 7,
            ..SynthConfig::default()
        };
        let rec = crate::signal::synth_recording(&cfg).unwrap();
        let fm = extract_features(&rec, 1.0).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        fm.write_csv(f.path(), Some("config_hash=deadbeef"))
            .unwrap();
        let back = FeatureMatrix::read_csv(f.path()).unwrap();
        assert_eq!(back.m, fm.m);
        assert_eq!(back.win_s, fm.win_s);
        assert_eq!(back.labels, fm.labels);
        for (a, b) in fm.rows.iter().zip(&back.rows) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
