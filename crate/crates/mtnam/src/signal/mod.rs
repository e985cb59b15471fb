//! EEG recording ingestion: CSV and EDF readers, annotation files, and a
//! synthetic generator for desk-scale experiments.

mod edf;
mod synth;

pub use edf::{read_edf, write_edf_fixture, EdfFixtureSignal};
pub use synth::{synth_recording, SynthConfig};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::util::fmt_g17;

/// A multichannel recording at a fixed sampling rate, with seizure
/// annotations as `(start_s, end_s)` intervals.
#[derive(Debug, Clone)]
pub struct Recording {
    pub channels: Vec<String>,
    /// Sampling rate in Hz.
    pub fs: u32,
    /// One sample vector per channel, all of equal length. Amplitudes are
    /// kept as f64 throughout to avoid quantization noise downstream.
    pub samples: Vec<Vec<f64>>,
    /// Non-overlapping, sorted seizure intervals in seconds.
    pub seizures: Vec<(f64, f64)>,
}

impl Recording {
    pub fn new(
        channels: Vec<String>,
        fs: u32,
        samples: Vec<Vec<f64>>,
        seizures: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if fs == 0 {
            return Err(Error::Invalid("sampling rate must be positive".into()));
        }
        if channels.len() != samples.len() {
            return Err(Error::Invalid(format!(
                "{} channel labels but {} sample vectors",
                channels.len(),
                samples.len()
            )));
        }
        if samples.is_empty() {
            return Err(Error::Invalid("recording has no channels".into()));
        }
        let n = samples[0].len();
        if samples.iter().any(|s| s.len() != n) {
            return Err(Error::Invalid("channels have unequal sample counts".into()));
        }
        let mut rec = Recording {
            channels,
            fs,
            samples,
            seizures: Vec::new(),
        };
        let seizures = validate_intervals(seizures, Some(rec.duration_s()))?;
        rec.seizures = seizures;
        Ok(rec)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / f64::from(self.fs)
    }

    /// Replace the seizure annotations (validated against the duration).
    pub fn with_seizures(mut self, seizures: Vec<(f64, f64)>) -> Result<Self> {
        self.seizures = validate_intervals(seizures, Some(self.duration_s()))?;
        Ok(self)
    }

    /// Keep only the named channels, in the given order.
    pub fn select_channels(&self, labels: &[String]) -> Result<Recording> {
        let mut channels = Vec::with_capacity(labels.len());
        let mut samples = Vec::with_capacity(labels.len());
        for want in labels {
            let idx = self
                .channels
                .iter()
                .position(|c| c == want)
                .ok_or_else(|| Error::Invalid(format!("channel {want:?} not in recording")))?;
            channels.push(self.channels[idx].clone());
            samples.push(self.samples[idx].clone());
        }
        Recording::new(channels, self.fs, samples, self.seizures.clone())
    }
}

/// Sort intervals by start and check positivity, ordering and overlap.
/// When `duration` is given, intervals must end within it.
pub fn validate_intervals(
    mut intervals: Vec<(f64, f64)>,
    duration: Option<f64>,
) -> Result<Vec<(f64, f64)>> {
    for &(s, e) in &intervals {
        if !s.is_finite() || !e.is_finite() {
            return Err(Error::Invalid("interval bounds must be finite".into()));
        }
        if s < 0.0 {
            return Err(Error::Invalid(format!("interval start {s} is negative")));
        }
        if s >= e {
            return Err(Error::Invalid(format!(
                "interval ({s}, {e}) has start >= end"
            )));
        }
        if let Some(d) = duration {
            if e > d {
                return Err(Error::Invalid(format!(
                    "interval ({s}, {e}) extends past recording end {d}"
                )));
            }
        }
    }
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for pair in intervals.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(Error::Invalid(format!(
                "intervals ({}, {}) and ({}, {}) overlap",
                pair[0].0, pair[0].1, pair[1].0, pair[1].1
            )));
        }
    }
    Ok(intervals)
}

/// Read a recording from CSV: header row of channel labels, one row per
/// sample. Seizure annotations are loaded separately.
pub fn read_csv_recording(path: &Path, fs: u32) -> Result<Recording> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty file", path.display())))?;
    let channels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if channels.is_empty() || channels.iter().any(String::is_empty) {
        return Err(Error::Format(format!(
            "{}: bad channel header {header:?}",
            path.display()
        )));
    }
    let n_ch = channels.len();
    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); n_ch];
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n_ch {
            return Err(Error::Format(format!(
                "{}: row {} has {} values, expected {}",
                path.display(),
                lineno + 2,
                cells.len(),
                n_ch
            )));
        }
        for (c, cell) in cells.iter().enumerate() {
            let v = cell.trim().parse::<f64>().map_err(|_| {
                Error::Format(format!(
                    "{}: non-numeric cell {cell:?} at row {}",
                    path.display(),
                    lineno + 2
                ))
            })?;
            samples[c].push(v);
        }
    }
    if samples[0].is_empty() {
        return Err(Error::Format(format!(
            "{}: no sample rows after header",
            path.display()
        )));
    }
    Recording::new(channels, fs, samples, Vec::new())
}

/// Write a recording as CSV. Floats are printed with 17 significant digits
/// so a read-back reproduces them bit for bit.
pub fn write_csv_recording(path: &Path, rec: &Recording, comment: Option<&str>) -> Result<()> {
    let mut out = String::new();
    if let Some(c) = comment {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&rec.channels.join(","));
    out.push('\n');
    for i in 0..rec.n_samples() {
        for (c, ch) in rec.samples.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&fmt_g17(ch[i]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Load seizure annotations from CSV rows of `start_s,end_s`.
pub fn load_annotations(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut intervals = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "start_s,end_s" {
            continue;
        }
        let mut parts = line.split(',');
        let (s, e) = match (parts.next(), parts.next(), parts.next()) {
            (Some(s), Some(e), None) => (s, e),
            _ => {
                return Err(Error::Format(format!(
                    "{}: line {} is not start_s,end_s",
                    path.display(),
                    lineno + 1
                )))
            }
        };
        let parse = |v: &str| {
            v.trim().parse::<f64>().map_err(|_| {
                Error::Format(format!(
                    "{}: non-numeric time {v:?} at line {}",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        intervals.push((parse(s)?, parse(e)?));
    }
    validate_intervals(intervals, None)
}

pub fn write_annotations(
    path: &Path,
    intervals: &[(f64, f64)],
    comment: Option<&str>,
) -> Result<()> {
    let mut out = String::new();
    if let Some(c) = comment {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str("start_s,end_s\n");
    for &(s, e) in intervals {
        out.push_str(&fmt_g17(s));
        out.push(',');
        out.push_str(&fmt_g17(e));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmpfile(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_recording_round_trip_is_exact() {
        let f = tmpfile("ch_0,ch_1\n1.5,-2.25\n0.1,3.0\n7.0,0.3333333333333333\n");
        let rec = read_csv_recording(f.path(), 4).unwrap();
        assert_eq!(rec.n_channels(), 2);
        assert_eq!(rec.n_samples(), 3);
        assert_eq!(rec.samples[1][0], -2.25);

        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv_recording(out.path(), &rec, None).unwrap();
        let rec2 = read_csv_recording(out.path(), 4).unwrap();
        for (a, b) in rec.samples.iter().zip(&rec2.samples) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn csv_header_only_is_error() {
        let f = tmpfile("ch_0,ch_1\n");
        let err = read_csv_recording(f.path(), 4).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn csv_ragged_row_is_error() {
        let f = tmpfile("ch_0,ch_1\n1.0\n");
        let err = read_csv_recording(f.path(), 4).unwrap_err();
        assert!(err.to_string().contains("1 values, expected 2"), "{err}");
    }

    #[test]
    fn csv_non_numeric_cell_is_error() {
        let f = tmpfile("ch_0,ch_1\n1.0,abc\n");
        let err = read_csv_recording(f.path(), 4).unwrap_err();
        assert!(err.to_string().contains("non-numeric"), "{err}");
    }

    #[test]
    fn annotations_sorted_and_validated() {
        let f = tmpfile("30,31\n10,20\n");
        let iv = load_annotations(f.path()).unwrap();
        assert_eq!(iv, vec![(10.0, 20.0), (30.0, 31.0)]);
    }

    #[test]
    fn annotations_reject_inverted_interval() {
        let f = tmpfile("20,10\n");
        let err = load_annotations(f.path()).unwrap_err();
        assert!(err.to_string().contains("start >= end"), "{err}");
    }

    #[test]
    fn annotations_reject_overlap() {
        let f = tmpfile("10,20\n15,25\n");
        let err = load_annotations(f.path()).unwrap_err();
        assert!(err.to_string().contains("overlap"), "{err}");
    }

    #[test]
    fn annotations_reject_negative() {
        let f = tmpfile("-1,5\n");
        assert!(load_annotations(f.path()).is_err());
    }

    #[test]
    fn touching_intervals_are_fine() {
        let iv = validate_intervals(vec![(0.0, 1.0), (1.0, 2.0)], None).unwrap();
        assert_eq!(iv.len(), 2);
    }

    #[test]
    fn recording_rejects_out_of_range_seizure() {
        let rec = Recording::new(vec!["a".into()], 1, vec![vec![0.0; 10]], vec![(5.0, 20.0)]);
        assert!(rec.is_err());
    }

    #[test]
    fn select_channels_reorders() {
        let rec = Recording::new(
            vec!["a".into(), "b".into()],
            1,
            vec![vec![1.0], vec![2.0]],
            vec![],
        )
        .unwrap();
        let sel = rec.select_channels(&["b".to_string()]).unwrap();
        assert_eq!(sel.samples, vec![vec![2.0]]);
        assert!(rec.select_channels(&["zz".to_string()]).is_err());
    }
}
