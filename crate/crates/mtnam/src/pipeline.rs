//! Pipeline stages behind the CLI subcommands. Each stage reads upstream
//! artifacts from the output directory (or configured external paths),
//! writes its own outputs with the config hash stamped on top, and derives
//! all randomness from the single run seed.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bench::{count_flops, measure_latency, write_bench_csv, LatencyReport, ModelDescriptor};
use crate::config::{DataSource, PipelineConfig};
use crate::error::{Error, Result};
use crate::eval::{chronological_split, compute_metrics, MetricsReport};
use crate::features::{extract_features, fit_scaler, FeatureMatrix};
use crate::model_io;
use crate::mtnam::{distill, MtNamModel};
use crate::nam::baselines::{train_dnn, train_lr};
use crate::nam::train::{downsample_nonictal, grid_search};
use crate::nam::NamModel;
use crate::signal::{
    load_annotations, read_csv_recording, read_edf, synth_recording, write_annotations,
    write_csv_recording, Recording,
};
use crate::t3a::{init_adapter, run_stream, tune_h0, write_stream_csv, H0ReportRow};
use crate::util::fmt_g17;

/// Artifact file names inside the output directory.
pub mod files {
    pub const RECORDING_CSV: &str = "recording.csv";
    pub const ANNOTATIONS_CSV: &str = "annotations.csv";
    pub const FEATURES_CSV: &str = "features.csv";
    pub const NAM_MODEL: &str = "nam_model.txt";
    pub const GRID_REPORT: &str = "grid_report.csv";
    pub const LR_MODEL: &str = "lr_model.txt";
    pub const DNN_MODEL: &str = "dnn_model.txt";
    pub const METRICS_CSV: &str = "metrics.csv";
    pub const T3A_REPORT: &str = "t3a_report.csv";
    pub const BENCH_CSV: &str = "bench.csv";

    pub fn mtnam_model(depth: usize) -> String {
        format!("mtnam_d{depth}.txt")
    }

    pub fn metrics_txt(model: &str) -> String {
        format!("metrics_{model}.txt")
    }

    pub fn metrics_t3a_txt(model: &str) -> String {
        format!("metrics_t3a_{model}.txt")
    }

    pub fn stream_csv(model: &str) -> String {
        format!("stream_{model}.csv")
    }
}

fn out_path(cfg: &PipelineConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn ensure_out_dir(cfg: &PipelineConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))
}

fn require(cfg: &PipelineConfig, name: &str, hint: &str) -> Result<PathBuf> {
    let path = out_path(cfg, name);
    if !path.exists() {
        return Err(Error::missing(path, hint));
    }
    verify_hash(cfg, &path)?;
    Ok(path)
}

/// Compare the `# config_hash=` stamp of an upstream artifact against the
/// current config. Mismatches warn by default; `--strict-hash` makes them
/// fatal. Only the first few lines are read.
fn verify_hash(cfg: &PipelineConfig, path: &Path) -> Result<()> {
    use std::io::{BufRead, BufReader};
    let Ok(file) = fs::File::open(path) else {
        return Ok(());
    };
    let reader = BufReader::new(file);
    for line in reader.lines().take(4) {
        let Ok(line) = line else {
            return Ok(());
        };
        if let Some(rest) = line.trim().strip_prefix("# config_hash=") {
            let expected = format!("{:016x}", cfg.config_hash());
            if rest.trim() != expected {
                let msg = format!(
                    "{}: config_hash {} does not match current config {expected}",
                    path.display(),
                    rest.trim()
                );
                if cfg.strict_hash {
                    return Err(Error::Config(msg));
                }
                eprintln!("warning: {msg} (continuing; use --strict-hash to fail)");
            }
            return Ok(());
        }
    }
    Ok(())
}

fn load_recording(cfg: &PipelineConfig) -> Result<Recording> {
    let rec = match cfg.data.source {
        DataSource::Synth => {
            let path = require(cfg, files::RECORDING_CSV, "run `mtnam synth` first")?;
            read_csv_recording(&path, cfg.synth.fs)?
        }
        DataSource::Csv => {
            let path = cfg.data.csv_path.clone().ok_or_else(|| {
                Error::Config("data.csv_path required for data.source = csv".into())
            })?;
            if !path.exists() {
                return Err(Error::missing(
                    path,
                    "configured data.csv_path does not exist",
                ));
            }
            read_csv_recording(&path, cfg.data.fs)?
        }
        DataSource::Edf => {
            let path = cfg.data.edf_path.clone().ok_or_else(|| {
                Error::Config("data.edf_path required for data.source = edf".into())
            })?;
            if !path.exists() {
                return Err(Error::missing(
                    path,
                    "configured data.edf_path does not exist",
                ));
            }
            read_edf(&path)?
        }
    };
    if cfg.data.channels.is_empty() {
        Ok(rec)
    } else {
        rec.select_channels(&cfg.data.channels)
    }
}

/// Seizure annotations used for labeling, splitting, and event metrics.
fn load_events(cfg: &PipelineConfig, required: bool) -> Result<Vec<(f64, f64)>> {
    let path = match cfg.data.source {
        DataSource::Synth => Some(out_path(cfg, files::ANNOTATIONS_CSV)),
        _ => cfg.data.annotations.clone(),
    };
    match path {
        Some(p) if p.exists() => load_annotations(&p),
        Some(p) => Err(Error::missing(
            p,
            match cfg.data.source {
                DataSource::Synth => "run `mtnam synth` first",
                _ => "configured data.annotations does not exist",
            },
        )),
        None if required => Err(Error::Config(
            "data.annotations must be set for this command".into(),
        )),
        None => Ok(Vec::new()),
    }
}

fn load_features(cfg: &PipelineConfig) -> Result<FeatureMatrix> {
    let path = require(cfg, files::FEATURES_CSV, "run `mtnam extract` first")?;
    FeatureMatrix::read_csv(&path)
}

fn load_nam_model(cfg: &PipelineConfig) -> Result<NamModel> {
    let path = require(cfg, files::NAM_MODEL, "run `mtnam train` first")?;
    model_io::load_nam(&path)
}

fn load_mtnam_models(cfg: &PipelineConfig) -> Result<Vec<MtNamModel>> {
    cfg.distill_depths
        .iter()
        .map(|&d| {
            let path = require(cfg, &files::mtnam_model(d), "run `mtnam distill` first")?;
            model_io::load_mtnam(&path)
        })
        .collect()
}

/// Generate the synthetic recording and its annotation sidecar.
pub fn cmd_synth(cfg: &PipelineConfig) -> Result<()> {
    if cfg.data.source != DataSource::Synth {
        return Err(Error::Config(
            "`mtnam synth` requires data.source = synth".into(),
        ));
    }
    ensure_out_dir(cfg)?;
    let rec = synth_recording(&cfg.synth_with_seed())?;
    let comment = cfg.hash_comment();
    write_csv_recording(&out_path(cfg, files::RECORDING_CSV), &rec, Some(&comment))?;
    write_annotations(
        &out_path(cfg, files::ANNOTATIONS_CSV),
        &rec.seizures,
        Some(&comment),
    )?;
    Ok(())
}

/// Extract windowed features from the configured recording.
pub fn cmd_extract(cfg: &PipelineConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let events = load_events(cfg, false)?;
    let rec = load_recording(cfg)?.with_seizures(events)?;
    let fm = extract_features(&rec, cfg.win_s)?;
    fm.write_csv(
        &out_path(cfg, files::FEATURES_CSV),
        Some(&cfg.hash_comment()),
    )
}

/// Split chronologically, fit the scaler on train, downsample, and run the
/// architecture grid search; also trains the LR and DNN baselines.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let fm = load_features(cfg)?;
    let events = load_events(cfg, true)?;
    let (train, val, _test) = chronological_split(&fm, &events, &cfg.split)?;
    let scaler = fit_scaler(&train)?;
    let train_s = scaler.apply(&train)?;
    let val_s = scaler.apply(&val)?;
    let train_ds = downsample_nonictal(&train_s, cfg.train.downsample_ratio, cfg.seed)?;
    let tcfg = cfg.train_with_seed();

    let comment = cfg.hash_comment();
    let (model, grid_rows) = grid_search(&cfg.nam_grid(), &train_ds, &val_s, &tcfg, &scaler)?;
    model_io::save_nam(&out_path(cfg, files::NAM_MODEL), &model, Some(&comment))?;

    let mut report = format!("# {comment}\nhidden,activation,val_f1,selected\n");
    for r in &grid_rows {
        report.push_str(&format!(
            "{},{},{},{}\n",
            r.hidden,
            r.activation.as_str(),
            fmt_g17(r.val_f1),
            u8::from(r.selected)
        ));
    }
    let grid_path = out_path(cfg, files::GRID_REPORT);
    fs::write(&grid_path, report).map_err(|e| Error::io(&grid_path, e))?;

    let (lr, _) = train_lr(&train_ds, &val_s, &tcfg, cfg.lr_lambda, &scaler)?;
    model_io::save_lr(&out_path(cfg, files::LR_MODEL), &lr, Some(&comment))?;
    let (dnn, _) = train_dnn(&train_ds, &val_s, &tcfg, cfg.dnn_hidden, &scaler)?;
    model_io::save_dnn(&out_path(cfg, files::DNN_MODEL), &dnn, Some(&comment))?;
    Ok(())
}

/// Distill the trained teacher into regression trees, one model per depth.
pub fn cmd_distill(cfg: &PipelineConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let fm = load_features(cfg)?;
    let events = load_events(cfg, true)?;
    let teacher = load_nam_model(cfg)?;
    let (train, _val, _test) = chronological_split(&fm, &events, &cfg.split)?;
    // same scaling and downsampling as training, via the embedded scaler
    let train_s = teacher.scaler.apply(&train)?;
    let train_ds = downsample_nonictal(&train_s, cfg.train.downsample_ratio, cfg.seed)?;
    let comment = cfg.hash_comment();
    for &depth in &cfg.distill_depths {
        let student = distill(&teacher, &train_ds, depth)?;
        model_io::save_mtnam(
            &out_path(cfg, &files::mtnam_model(depth)),
            &student,
            Some(&comment),
        )?;
    }
    Ok(())
}

fn offline_scores<F>(fm: &FeatureMatrix, mut predict: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    fm.rows.iter().map(|r| predict(r)).collect()
}

/// Offline metrics on the chronological test split, one report per model.
pub fn cmd_eval(cfg: &PipelineConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let fm = load_features(cfg)?;
    let events = load_events(cfg, true)?;
    let (_train, _val, test) = chronological_split(&fm, &events, &cfg.split)?;
    let comment = cfg.hash_comment();

    let nam = load_nam_model(cfg)?;
    let mts = load_mtnam_models(cfg)?;
    let lr = model_io::load_lr(&require(cfg, files::LR_MODEL, "run `mtnam train` first")?)?;
    let dnn = model_io::load_dnn(&require(cfg, files::DNN_MODEL, "run `mtnam train` first")?)?;

    let mut reports: Vec<MetricsReport> = Vec::new();
    {
        let test_s = nam.scaler.apply(&test)?;
        let scores = offline_scores(&test_s, |x| nam.predict(x))?;
        reports.push(compute_metrics("nam", &scores, &test, &events, 0.5)?);
    }
    for mt in &mts {
        let test_s = mt.scaler().apply(&test)?;
        let scores = offline_scores(&test_s, |x| mt.predict(x))?;
        let name = format!("mtnam_d{}", mt.depth());
        reports.push(compute_metrics(&name, &scores, &test, &events, 0.5)?);
    }
    {
        let test_s = lr.scaler.apply(&test)?;
        let scores = offline_scores(&test_s, |x| lr.predict(x))?;
        reports.push(compute_metrics("lr", &scores, &test, &events, 0.5)?);
    }
    {
        let test_s = dnn.scaler.apply(&test)?;
        let scores = offline_scores(&test_s, |x| dnn.predict(x))?;
        reports.push(compute_metrics("dnn", &scores, &test, &events, 0.5)?);
    }

    let mut csv = format!("# {comment}\n{}\n", MetricsReport::CSV_HEADER);
    for rep in &reports {
        rep.write_kv(
            &out_path(cfg, &files::metrics_txt(&rep.model)),
            Some(&comment),
        )?;
        csv.push_str(&rep.to_csv_row());
        csv.push('\n');
    }
    let csv_path = out_path(cfg, files::METRICS_CSV);
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))
}

/// Online T3A evaluation: tune the entropy gate on validation, stream the
/// test split in order, and report adapted metrics plus the prediction
/// streams.
pub fn cmd_adapt_eval(cfg: &PipelineConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let fm = load_features(cfg)?;
    let events = load_events(cfg, true)?;
    let (_train, val, test) = chronological_split(&fm, &events, &cfg.split)?;
    let comment = cfg.hash_comment();

    let nam = load_nam_model(cfg)?;
    let mts = load_mtnam_models(cfg)?;

    enum AnyModel<'a> {
        Nam(&'a NamModel),
        Mt(&'a MtNamModel),
    }
    let mut entries: Vec<(String, AnyModel)> = vec![("nam".into(), AnyModel::Nam(&nam))];
    for mt in &mts {
        entries.push((format!("mtnam_d{}", mt.depth()), AnyModel::Mt(mt)));
    }

    let mut t3a_rows: Vec<(String, Vec<H0ReportRow>)> = Vec::new();
    for (name, model) in &entries {
        let (scaler, m) = match model {
            AnyModel::Nam(n) => (&n.scaler, n.m()),
            AnyModel::Mt(t) => (t.scaler(), t.m()),
        };
        let val_s = scaler.apply(&val)?;
        let test_s = scaler.apply(&test)?;
        let contrib = |x: &[f64]| match model {
            AnyModel::Nam(n) => n.forward(x).map(|(c, _)| c),
            AnyModel::Mt(t) => t.forward(x).map(|(c, _)| c),
        };

        let (h0, rows) = match cfg.t3a.h0 {
            Some(h0) => {
                let mut adapter = init_adapter(m, h0)?;
                let stream = run_stream(contrib, &mut adapter, &val_s)?;
                let scores: Vec<f64> = stream.iter().map(|r| r.y_adapted).collect();
                let f1 = crate::eval::f1_weighted(&scores, &val_s.labels, 0.5)?;
                (
                    h0,
                    vec![H0ReportRow {
                        h0,
                        val_f1: f1,
                        selected: true,
                    }],
                )
            }
            None => tune_h0(contrib, &val_s, &cfg.t3a.h0_grid)?,
        };

        let mut adapter = init_adapter(m, h0)?;
        let stream = run_stream(contrib, &mut adapter, &test_s)?;
        write_stream_csv(
            &out_path(cfg, &files::stream_csv(name)),
            &stream,
            Some(&comment),
        )?;
        let scores: Vec<f64> = stream.iter().map(|r| r.y_adapted).collect();
        let rep = compute_metrics(&format!("{name}_t3a"), &scores, &test, &events, 0.5)?;
        rep.write_kv(
            &out_path(cfg, &files::metrics_t3a_txt(name)),
            Some(&comment),
        )?;
        t3a_rows.push((name.clone(), rows));
    }

    let mut csv = format!("# {comment}\nmodel,h0,val_f1,selected\n");
    for (name, rows) in &t3a_rows {
        for r in rows {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                name,
                fmt_g17(r.h0),
                fmt_g17(r.val_f1),
                u8::from(r.selected)
            ));
        }
    }
    let path = out_path(cfg, files::T3A_REPORT);
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))
}

/// FLOP counts and measured single-window latency for every model variant.
pub fn cmd_bench(cfg: &PipelineConfig) -> Result<()> {
    ensure_out_dir(cfg)?;
    let fm = load_features(cfg)?;
    let events = load_events(cfg, true)?;
    let (_train, _val, test) = chronological_split(&fm, &events, &cfg.split)?;

    let nam = load_nam_model(cfg)?;
    let mts = load_mtnam_models(cfg)?;
    let lr = model_io::load_lr(&require(cfg, files::LR_MODEL, "run `mtnam train` first")?)?;
    let dnn = model_io::load_dnn(&require(cfg, files::DNN_MODEL, "run `mtnam train` first")?)?;

    let reps = cfg.bench.repetitions;
    let warm = cfg.bench.warmup;
    let m = nam.m();
    let mut rows: Vec<(u64, LatencyReport)> = Vec::new();

    // inputs are pre-scaled; the timed closure is the model forward alone
    let inputs = nam.scaler.apply(&test)?.rows;

    let nam_desc = ModelDescriptor::Nam {
        m,
        hidden: nam.arch.hidden,
    };
    rows.push((
        count_flops(&nam_desc)?,
        measure_latency(
            &nam_desc.name(),
            |x| nam.predict(x).expect("dims checked"),
            &inputs,
            reps,
            warm,
        )?,
    ));
    {
        // open gate: every window pays the full update cost
        let mut adapter = init_adapter(m, std::f64::consts::LN_2)?;
        let mut contrib = vec![0.0; m];
        let desc = ModelDescriptor::NamT3a {
            m,
            hidden: nam.arch.hidden,
        };
        rows.push((
            count_flops(&desc)?,
            measure_latency(
                &desc.name(),
                |x| {
                    nam.contributions_into(x, &mut contrib)
                        .expect("dims checked");
                    adapter.step(&contrib).expect("dims checked").y_adjusted
                },
                &inputs,
                reps,
                warm,
            )?,
        ));
    }
    for mt in &mts {
        let desc = ModelDescriptor::MtNam {
            m,
            depth: mt.depth(),
        };
        rows.push((
            count_flops(&desc)?,
            measure_latency(
                &desc.name(),
                |x| mt.predict(x).expect("dims checked"),
                &inputs,
                reps,
                warm,
            )?,
        ));
        let mut adapter = init_adapter(m, std::f64::consts::LN_2)?;
        let mut contrib = vec![0.0; m];
        let desc = ModelDescriptor::MtNamT3a {
            m,
            depth: mt.depth(),
        };
        rows.push((
            count_flops(&desc)?,
            measure_latency(
                &desc.name(),
                |x| {
                    mt.contributions_into(x, &mut contrib)
                        .expect("dims checked");
                    adapter.step(&contrib).expect("dims checked").y_adjusted
                },
                &inputs,
                reps,
                warm,
            )?,
        ));
    }
    let desc = ModelDescriptor::Lr { m };
    rows.push((
        count_flops(&desc)?,
        measure_latency(
            &desc.name(),
            |x| lr.predict(x).expect("dims checked"),
            &inputs,
            reps,
            warm,
        )?,
    ));
    let desc = ModelDescriptor::Dnn {
        m,
        hidden: dnn.hidden,
    };
    rows.push((
        count_flops(&desc)?,
        measure_latency(
            &desc.name(),
            |x| dnn.predict(x).expect("dims checked"),
            &inputs,
            reps,
            warm,
        )?,
    ));

    write_bench_csv(
        &out_path(cfg, files::BENCH_CSV),
        &rows,
        &cfg.bench.host_tag,
        Some(&cfg.hash_comment()),
    )
}
