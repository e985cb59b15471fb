//! Minimal EDF reader: fixed 256-byte header, per-signal headers, int16
//! little-endian data records. EDF+ annotation channels and discontinuous
//! records are out of scope; seizure labels come from sidecar CSVs.

use std::fs;
use std::path::Path;

use super::Recording;
use crate::error::{Error, Result};

const FIXED_HEADER_LEN: usize = 256;
const PER_SIGNAL_HEADER_LEN: usize = 256;

struct SignalHeader {
    label: String,
    phys_min: f64,
    phys_max: f64,
    dig_min: i32,
    dig_max: i32,
    samples_per_record: usize,
}

fn ascii_field<'a>(bytes: &'a [u8], off: &mut usize, len: usize, what: &str) -> Result<&'a str> {
    let end = *off + len;
    if end > bytes.len() {
        return Err(Error::Format(format!("EDF header truncated in {what}")));
    }
    let raw = &bytes[*off..end];
    *off = end;
    std::str::from_utf8(raw)
        .map(str::trim)
        .map_err(|_| Error::Format(format!("EDF header field {what} is not ASCII")))
}

fn num_field<T: std::str::FromStr>(
    bytes: &[u8],
    off: &mut usize,
    len: usize,
    what: &str,
) -> Result<T> {
    let s = ascii_field(bytes, off, len, what)?;
    s.parse::<T>()
        .map_err(|_| Error::Format(format!("EDF header field {what}: cannot parse {s:?}")))
}

/// Read an EDF file into a `Recording`, converting digital values to
/// physical units with the per-signal linear map
/// `phys = (dig - dig_min) * (phys_max - phys_min) / (dig_max - dig_min) + phys_min`.
///
/// All signals must share one sampling rate; seizure annotations are empty.
pub fn read_edf(path: &Path) -> Result<Recording> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < FIXED_HEADER_LEN {
        return Err(Error::Format(format!(
            "{}: shorter than the 256-byte EDF header",
            path.display()
        )));
    }
    let mut off = 0;
    ascii_field(&bytes, &mut off, 8, "version")?;
    ascii_field(&bytes, &mut off, 80, "patient")?;
    ascii_field(&bytes, &mut off, 80, "recording")?;
    ascii_field(&bytes, &mut off, 8, "start date")?;
    ascii_field(&bytes, &mut off, 8, "start time")?;
    let header_bytes: usize = num_field(&bytes, &mut off, 8, "header bytes")?;
    ascii_field(&bytes, &mut off, 44, "reserved")?;
    let n_records: i64 = num_field(&bytes, &mut off, 8, "record count")?;
    let record_duration: f64 = num_field(&bytes, &mut off, 8, "record duration")?;
    let n_signals: usize = num_field(&bytes, &mut off, 4, "signal count")?;

    if n_signals == 0 {
        return Err(Error::Format("EDF declares zero signals".into()));
    }
    if n_records < 0 {
        return Err(Error::Format(
            "EDF with unknown record count (-1) is not supported".into(),
        ));
    }
    let n_records = n_records as usize;
    if !(record_duration.is_finite() && record_duration > 0.0) {
        return Err(Error::Format("EDF record duration must be positive".into()));
    }
    let expected_header = FIXED_HEADER_LEN + PER_SIGNAL_HEADER_LEN * n_signals;
    if header_bytes != expected_header {
        return Err(Error::Format(format!(
            "EDF header length {header_bytes} != expected {expected_header}"
        )));
    }
    if bytes.len() < expected_header {
        return Err(Error::Format("EDF file ends inside signal headers".into()));
    }

    // signal header fields are stored field-major
    let mut sig = Vec::with_capacity(n_signals);
    for _ in 0..n_signals {
        sig.push(SignalHeader {
            label: String::new(),
            phys_min: 0.0,
            phys_max: 0.0,
            dig_min: 0,
            dig_max: 0,
            samples_per_record: 0,
        });
    }
    for s in sig.iter_mut() {
        s.label = ascii_field(&bytes, &mut off, 16, "label")?.to_string();
    }
    off += n_signals * 80; // transducer
    off += n_signals * 8; // physical dimension
    for s in sig.iter_mut() {
        s.phys_min = num_field(&bytes, &mut off, 8, "physical min")?;
    }
    for s in sig.iter_mut() {
        s.phys_max = num_field(&bytes, &mut off, 8, "physical max")?;
    }
    for s in sig.iter_mut() {
        s.dig_min = num_field(&bytes, &mut off, 8, "digital min")?;
    }
    for s in sig.iter_mut() {
        s.dig_max = num_field(&bytes, &mut off, 8, "digital max")?;
    }
    off += n_signals * 80; // prefiltering
    for s in sig.iter_mut() {
        s.samples_per_record = num_field(&bytes, &mut off, 8, "samples per record")?;
    }
    off += n_signals * 32; // reserved
    debug_assert_eq!(off, expected_header);

    let spr0 = sig[0].samples_per_record;
    for s in &sig {
        if s.samples_per_record == 0 {
            return Err(Error::Format(format!(
                "EDF signal {:?} declares zero samples per record",
                s.label
            )));
        }
        if s.samples_per_record != spr0 {
            return Err(Error::Format(format!(
                "mixed sampling rates: {:?} has {} samples/record, {:?} has {}",
                sig[0].label, spr0, s.label, s.samples_per_record
            )));
        }
        if s.dig_min == s.dig_max {
            return Err(Error::Format(format!(
                "EDF signal {:?} has degenerate digital range",
                s.label
            )));
        }
    }
    let fs_f = spr0 as f64 / record_duration;
    if (fs_f - fs_f.round()).abs() > 1e-9 || fs_f < 1.0 {
        return Err(Error::Format(format!(
            "non-integer sampling rate {fs_f} (samples/record {spr0}, record duration {record_duration})"
        )));
    }
    let fs = fs_f.round() as u32;

    let record_len: usize = sig.iter().map(|s| s.samples_per_record * 2).sum();
    let need = expected_header + n_records * record_len;
    if bytes.len() < need {
        return Err(Error::Format(format!(
            "{}: truncated data records ({} bytes, header declares {})",
            path.display(),
            bytes.len(),
            need
        )));
    }

    let mut samples: Vec<Vec<f64>> = sig
        .iter()
        .map(|s| Vec::with_capacity(n_records * s.samples_per_record))
        .collect();
    let mut pos = expected_header;
    for _ in 0..n_records {
        for (s, out) in sig.iter().zip(samples.iter_mut()) {
            let scale = (s.phys_max - s.phys_min) / f64::from(s.dig_max - s.dig_min);
            for _ in 0..s.samples_per_record {
                let dig = i16::from_le_bytes([bytes[pos], bytes[pos + 1]]);
                pos += 2;
                out.push((f64::from(dig) - f64::from(s.dig_min)) * scale + s.phys_min);
            }
        }
    }

    let channels = sig.into_iter().map(|s| s.label).collect();
    Recording::new(channels, fs, samples, Vec::new())
}

/// Digital samples plus conversion ranges for one fixture signal.
pub struct EdfFixtureSignal {
    pub label: String,
    pub phys_min: f64,
    pub phys_max: f64,
    pub dig_min: i32,
    pub dig_max: i32,
    /// Digital samples; length must be a multiple of `samples_per_record`.
    pub digital: Vec<i16>,
    pub samples_per_record: usize,
}

/// Write a minimal valid EDF file. Test-fixture helper only; the toolkit
/// never produces EDF as a pipeline output.
pub fn write_edf_fixture(
    path: &Path,
    record_duration: f64,
    signals: &[EdfFixtureSignal],
) -> Result<()> {
    if signals.is_empty() {
        return Err(Error::Invalid("fixture needs at least one signal".into()));
    }
    let n_records = signals[0].digital.len() / signals[0].samples_per_record;
    for s in signals {
        if s.samples_per_record == 0 || s.digital.len() != n_records * s.samples_per_record {
            return Err(Error::Invalid(format!(
                "fixture signal {:?}: sample count not a whole number of records",
                s.label
            )));
        }
    }
    let header_bytes = FIXED_HEADER_LEN + PER_SIGNAL_HEADER_LEN * signals.len();

    fn pad(out: &mut Vec<u8>, text: &str, len: usize) {
        let mut field = text.as_bytes().to_vec();
        field.truncate(len);
        field.resize(len, b' ');
        out.extend_from_slice(&field);
    }

    let mut out = Vec::new();
    pad(&mut out, "0", 8);
    pad(&mut out, "X X X X", 80);
    pad(&mut out, "Startdate X X X X", 80);
    pad(&mut out, "01.01.00", 8);
    pad(&mut out, "00.00.00", 8);
    pad(&mut out, &header_bytes.to_string(), 8);
    pad(&mut out, "", 44);
    pad(&mut out, &n_records.to_string(), 8);
    pad(&mut out, &format!("{record_duration}"), 8);
    pad(&mut out, &signals.len().to_string(), 4);

    for s in signals {
        pad(&mut out, &s.label, 16);
    }
    for _ in signals {
        pad(&mut out, "", 80);
    }
    for _ in signals {
        pad(&mut out, "uV", 8);
    }
    for s in signals {
        pad(&mut out, &format!("{}", s.phys_min), 8);
    }
    for s in signals {
        pad(&mut out, &format!("{}", s.phys_max), 8);
    }
    for s in signals {
        pad(&mut out, &s.dig_min.to_string(), 8);
    }
    for s in signals {
        pad(&mut out, &s.dig_max.to_string(), 8);
    }
    for _ in signals {
        pad(&mut out, "", 80);
    }
    for s in signals {
        pad(&mut out, &s.samples_per_record.to_string(), 8);
    }
    for _ in signals {
        pad(&mut out, "", 32);
    }
    debug_assert_eq!(out.len(), header_bytes);

    for r in 0..n_records {
        for s in signals {
            let lo = r * s.samples_per_record;
            for &d in &s.digital[lo..lo + s.samples_per_record] {
                out.extend_from_slice(&d.to_le_bytes());
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
