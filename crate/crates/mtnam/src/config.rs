//! Pipeline configuration: a line-oriented `section.key = value` text
//! format, defaults, validation, and the canonical hash stamped into every
//! output file.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::SplitSpec;
use crate::nam::train::TrainConfig;
use crate::nam::{Activation, NamArch};
use crate::signal::SynthConfig;
use crate::t3a::default_h0_grid;
use crate::util::{fmt_g17, fnv1a64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    Synth,
    Csv,
    Edf,
}

impl DataSource {
    fn as_str(self) -> &'static str {
        match self {
            DataSource::Synth => "synth",
            DataSource::Csv => "csv",
            DataSource::Edf => "edf",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DataConfig {
    pub source: DataSource,
    pub csv_path: Option<PathBuf>,
    pub edf_path: Option<PathBuf>,
    /// Sampling rate for CSV recordings.
    pub fs: u32,
    pub annotations: Option<PathBuf>,
    /// Channel labels to keep; empty keeps all channels.
    pub channels: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct T3aConfig {
    /// Fixed gate threshold; when absent the grid is tuned on validation.
    pub h0: Option<f64>,
    pub h0_grid: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub repetitions: usize,
    pub warmup: usize,
    pub host_tag: String,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub synth: SynthConfig,
    pub win_s: f64,
    pub split: SplitSpec,
    pub nam_hidden: Vec<usize>,
    pub nam_activations: Vec<Activation>,
    pub train: TrainConfig,
    pub lr_lambda: f64,
    pub dnn_hidden: usize,
    pub distill_depths: Vec<usize>,
    pub t3a: T3aConfig,
    pub bench: BenchConfig,
    /// Escalate config-hash mismatches between stages to errors.
    /// CLI flag, not part of the config file or its hash.
    pub strict_hash: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            out_dir: PathBuf::from("out"),
            data: DataConfig {
                source: DataSource::Synth,
                csv_path: None,
                edf_path: None,
                fs: 256,
                annotations: None,
                channels: Vec::new(),
            },
            synth: SynthConfig::default(),
            win_s: 1.0,
            split: SplitSpec::default(),
            nam_hidden: vec![10, 50, 100, 200],
            nam_activations: vec![Activation::Relu, Activation::Exu],
            train: TrainConfig::default(),
            lr_lambda: 0.01,
            dnn_hidden: 50,
            distill_depths: vec![1, 2, 4],
            t3a: T3aConfig {
                h0: None,
                h0_grid: default_h0_grid(),
            },
            bench: BenchConfig {
                repetitions: 200,
                warmup: 20,
                host_tag: "local".into(),
            },
            strict_hash: false,
        }
    }
}

fn parse_list<T, F>(value: &str, what: &str, f: F) -> Result<Vec<T>>
where
    F: Fn(&str) -> Option<T>,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(s).ok_or_else(|| Error::Config(format!("bad {what} entry {s:?}"))))
        .collect()
}

fn parse_intervals(value: &str) -> Result<Vec<(f64, f64)>> {
    parse_list(value, "interval", |s| {
        let (a, b) = s.split_once('-')?;
        Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
    })
}

impl PipelineConfig {
    /// Parse the `section.key = value` text format. Unknown keys are
    /// configuration errors; full-line `#` comments and blank lines are
    /// ignored.
    pub fn parse(text: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected 'section.key = value'",
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        if !path.exists() {
            return Err(Error::missing(path, "config file not found"));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("bad value {value:?} for {what}"));
        match key {
            "run.seed" => self.seed = value.parse().map_err(|_| bad(key))?,
            "run.out_dir" => self.out_dir = PathBuf::from(value),
            "data.source" => {
                self.data.source = match value {
                    "synth" => DataSource::Synth,
                    "csv" => DataSource::Csv,
                    "edf" => DataSource::Edf,
                    _ => return Err(bad(key)),
                }
            }
            "data.csv_path" => self.data.csv_path = Some(PathBuf::from(value)),
            "data.edf_path" => self.data.edf_path = Some(PathBuf::from(value)),
            "data.fs" => self.data.fs = value.parse().map_err(|_| bad(key))?,
            "data.annotations" => self.data.annotations = Some(PathBuf::from(value)),
            "data.channels" => {
                self.data.channels = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "synth.channels" => self.synth.n_channels = value.parse().map_err(|_| bad(key))?,
            "synth.duration_s" => self.synth.duration_s = value.parse().map_err(|_| bad(key))?,
            "synth.fs" => self.synth.fs = value.parse().map_err(|_| bad(key))?,
            "synth.noise_scale" => self.synth.noise_scale = value.parse().map_err(|_| bad(key))?,
            "synth.seizures" => self.synth.seizures = parse_intervals(value)?,
            "synth.band_boosts" => {
                let v: Vec<f64> = parse_list(value, "band boost", |s| s.parse().ok())?;
                self.synth.band_boosts = v.try_into().map_err(|_| {
                    Error::Config("synth.band_boosts needs exactly 7 values".into())
                })?;
            }
            "synth.line_length_boost" => {
                self.synth.line_length_boost = value.parse().map_err(|_| bad(key))?
            }
            "features.win_s" => self.win_s = value.parse().map_err(|_| bad(key))?,
            "split.train_frac" => self.split.train_frac = value.parse().map_err(|_| bad(key))?,
            "split.val_frac" => self.split.val_frac = value.parse().map_err(|_| bad(key))?,
            "nam.hidden" => {
                self.nam_hidden = parse_list(value, "hidden width", |s| s.parse().ok())?
            }
            "nam.activations" => {
                self.nam_activations =
                    parse_list(value, "activation", |s| Activation::parse(s).ok())?
            }
            "train.learning_rate" => {
                self.train.learning_rate = value.parse().map_err(|_| bad(key))?
            }
            "train.epochs" => self.train.epochs = value.parse().map_err(|_| bad(key))?,
            "train.batch_size" => self.train.batch_size = value.parse().map_err(|_| bad(key))?,
            "train.beta1" => self.train.beta1 = value.parse().map_err(|_| bad(key))?,
            "train.beta2" => self.train.beta2 = value.parse().map_err(|_| bad(key))?,
            "train.eps" => self.train.eps = value.parse().map_err(|_| bad(key))?,
            "train.downsample_ratio" => {
                self.train.downsample_ratio = value.parse().map_err(|_| bad(key))?
            }
            "train.patience" => self.train.patience = value.parse().map_err(|_| bad(key))?,
            "baselines.lr_lambda" => self.lr_lambda = value.parse().map_err(|_| bad(key))?,
            "baselines.dnn_hidden" => self.dnn_hidden = value.parse().map_err(|_| bad(key))?,
            "distill.depths" => {
                self.distill_depths = parse_list(value, "depth", |s| s.parse().ok())?
            }
            "t3a.h0" => self.t3a.h0 = Some(value.parse().map_err(|_| bad(key))?),
            "t3a.h0_grid" => self.t3a.h0_grid = parse_list(value, "h0", |s| s.parse().ok())?,
            "bench.repetitions" => self.bench.repetitions = value.parse().map_err(|_| bad(key))?,
            "bench.warmup" => self.bench.warmup = value.parse().map_err(|_| bad(key))?,
            "bench.host_tag" => self.bench.host_tag = value.to_string(),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.train.validate()?;
        if self.win_s <= 0.0 {
            return Err(Error::Config("features.win_s must be positive".into()));
        }
        if self.nam_hidden.is_empty() || self.nam_activations.is_empty() {
            return Err(Error::Config("NAM grid must not be empty".into()));
        }
        if self.nam_hidden.contains(&0) || self.dnn_hidden == 0 {
            return Err(Error::Config("hidden widths must be >= 1".into()));
        }
        if self.distill_depths.is_empty() || self.distill_depths.contains(&0) {
            return Err(Error::Config("distill.depths must be >= 1".into()));
        }
        if self.lr_lambda < 0.0 {
            return Err(Error::Config("baselines.lr_lambda must be >= 0".into()));
        }
        if self.t3a.h0_grid.is_empty() {
            return Err(Error::Config("t3a.h0_grid must not be empty".into()));
        }
        if self
            .t3a
            .h0_grid
            .iter()
            .chain(self.t3a.h0.iter())
            .any(|&h| h < 0.0)
        {
            return Err(Error::Config("entropy thresholds must be >= 0".into()));
        }
        if self.bench.repetitions < 30 || self.bench.warmup < 5 {
            return Err(Error::Config(
                "bench.repetitions must be >= 30 and bench.warmup >= 5".into(),
            ));
        }
        if self.data.source == DataSource::Synth {
            let mut synth = self.synth.clone();
            synth.seed = self.seed;
            synth.validate()?;
        }
        Ok(())
    }

    /// The synth generator configuration with the run seed applied.
    pub fn synth_with_seed(&self) -> SynthConfig {
        let mut s = self.synth.clone();
        s.seed = self.seed;
        s
    }

    /// The training configuration with the run seed applied.
    pub fn train_with_seed(&self) -> TrainConfig {
        let mut t = self.train.clone();
        t.seed = self.seed;
        t
    }

    pub fn nam_grid(&self) -> Vec<NamArch> {
        let mut grid = Vec::new();
        for &hidden in &self.nam_hidden {
            for &activation in &self.nam_activations {
                grid.push(NamArch { hidden, activation });
            }
        }
        grid
    }

    /// Canonical serialization of every content-affecting key in a fixed
    /// order, independent of the source file's formatting. `run.out_dir` is
    /// deliberately excluded: identical configs must produce byte-identical
    /// artifacts no matter where they are written.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("run.seed", self.seed.to_string());
        kv("data.source", self.data.source.as_str().to_string());
        kv(
            "data.csv_path",
            self.data
                .csv_path
                .as_ref()
                .map_or(String::new(), |p| p.display().to_string()),
        );
        kv(
            "data.edf_path",
            self.data
                .edf_path
                .as_ref()
                .map_or(String::new(), |p| p.display().to_string()),
        );
        kv("data.fs", self.data.fs.to_string());
        kv(
            "data.annotations",
            self.data
                .annotations
                .as_ref()
                .map_or(String::new(), |p| p.display().to_string()),
        );
        kv("data.channels", self.data.channels.join(","));
        kv("synth.channels", self.synth.n_channels.to_string());
        kv("synth.duration_s", fmt_g17(self.synth.duration_s));
        kv("synth.fs", self.synth.fs.to_string());
        kv("synth.noise_scale", fmt_g17(self.synth.noise_scale));
        kv(
            "synth.seizures",
            self.synth
                .seizures
                .iter()
                .map(|&(s, e)| format!("{}-{}", fmt_g17(s), fmt_g17(e)))
                .collect::<Vec<_>>()
                .join(","),
        );
        kv(
            "synth.band_boosts",
            self.synth
                .band_boosts
                .iter()
                .map(|&b| fmt_g17(b))
                .collect::<Vec<_>>()
                .join(","),
        );
        kv(
            "synth.line_length_boost",
            fmt_g17(self.synth.line_length_boost),
        );
        kv("features.win_s", fmt_g17(self.win_s));
        kv("split.train_frac", fmt_g17(self.split.train_frac));
        kv("split.val_frac", fmt_g17(self.split.val_frac));
        kv(
            "nam.hidden",
            self.nam_hidden
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        kv(
            "nam.activations",
            self.nam_activations
                .iter()
                .map(|a| a.as_str().to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("train.learning_rate", fmt_g17(self.train.learning_rate));
        kv("train.epochs", self.train.epochs.to_string());
        kv("train.batch_size", self.train.batch_size.to_string());
        kv("train.beta1", fmt_g17(self.train.beta1));
        kv("train.beta2", fmt_g17(self.train.beta2));
        kv("train.eps", fmt_g17(self.train.eps));
        kv(
            "train.downsample_ratio",
            self.train.downsample_ratio.to_string(),
        );
        kv("train.patience", self.train.patience.to_string());
        kv("baselines.lr_lambda", fmt_g17(self.lr_lambda));
        kv("baselines.dnn_hidden", self.dnn_hidden.to_string());
        kv(
            "distill.depths",
            self.distill_depths
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("t3a.h0", self.t3a.h0.map_or(String::new(), fmt_g17));
        kv(
            "t3a.h0_grid",
            self.t3a
                .h0_grid
                .iter()
                .map(|&h| fmt_g17(h))
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("bench.repetitions", self.bench.repetitions.to_string());
        kv("bench.warmup", self.bench.warmup.to_string());
        kv("bench.host_tag", self.bench.host_tag.clone());
        out
    }

    pub fn config_hash(&self) -> u64 {
        fnv1a64(self.canonical_text().as_bytes())
    }

    /// The `config_hash=...` comment stamped into every output file.
    pub fn hash_comment(&self) -> String {
        format!("config_hash={:016x}", self.config_hash())
    }
}
