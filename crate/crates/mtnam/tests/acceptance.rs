//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line. Criteria execute sequentially in one test so
//! the latency measurements are not disturbed by parallel test threads.
//!
//! Run with `cargo test -p mtnam --test acceptance -- --nocapture` to see
//! the report on a green run; cargo prints it automatically on a red one.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mtnam::bench::{count_flops, measure_latency, ModelDescriptor};
use mtnam::config::PipelineConfig;
use mtnam::eval::{
    auroc, chronological_split, compute_metrics, confusion, event_sensitivity, SplitSpec,
};
use mtnam::features::{band_powers, extract_features, fit_scaler, FeatureMatrix, Scaler};
use mtnam::mtnam::{distill, distillation_mse, MtNamModel};
use mtnam::nam::baselines::{train_dnn, train_lr};
use mtnam::nam::train::{
    downsample_nonictal, mean_bce_grad, mean_bce_loss, train_nam, GradientModel, TrainConfig,
};
use mtnam::nam::{Activation, FeatureNet, NamArch, NamModel};
use mtnam::pipeline;
use mtnam::signal::{synth_recording, SynthConfig};
use mtnam::t3a::{init_adapter, run_stream, tune_h0};
use mtnam::tree::fit_regression_tree;

struct Report {
    failures: Vec<String>,
}

impl Report {
    fn record(&mut self, criterion: usize, name: &str, passed: bool, detail: &str) {
        let status = if passed { "PASS" } else { "FAIL" };
        println!("criterion {criterion} [{status}] {name}: {detail}");
        if !passed {
            self.failures
                .push(format!("criterion {criterion} ({name}): {detail}"));
        }
    }
}

fn unit_scaler(m: usize) -> Scaler {
    Scaler {
        mean: vec![0.0; m],
        std: vec![1.0; m],
    }
}

// ---------------------------------------------------------------------
// criterion 1: analytic BCE gradients vs central finite differences
// ---------------------------------------------------------------------
fn criterion_1(report: &mut Report) {
    let t0 = Instant::now();
    let mut checked = 0usize;
    let mut max_rel: f64 = 0.0;
    let mut ok = true;

    for (activation, seed) in [(Activation::Relu, 301u64), (Activation::Exu, 302)] {
        let model = NamModel::init(
            6,
            NamArch {
                hidden: 8,
                activation,
            },
            unit_scaler(6),
            seed,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 10);
        let xs: Vec<Vec<f64>> = (0..24)
            .map(|_| (0..6).map(|_| rng.random::<f64>() * 3.0 - 1.5).collect())
            .collect();
        let ys: Vec<f64> = (0..24).map(|i| f64::from(i % 2)).collect();
        let analytic = mean_bce_grad(&model, &xs, &ys);
        let theta = model.params_vec();

        for _ in 0..60 {
            let k = rng.random_range(0..theta.len());
            let step = 1e-5;
            let mut plus = model.clone();
            let mut tp = theta.clone();
            tp[k] += step;
            plus.set_params_vec(&tp);
            let mut minus = model.clone();
            let mut tm = theta.clone();
            tm[k] -= step;
            minus.set_params_vec(&tm);
            let numeric =
                (mean_bce_loss(&plus, &xs, &ys) - mean_bce_loss(&minus, &xs, &ys)) / (2.0 * step);
            let denom = analytic[k].abs().max(numeric.abs());
            let diff = (analytic[k] - numeric).abs();
            let rel = diff / denom.max(1e-8);
            max_rel = max_rel.max(rel);
            // absolute floor guards parameters whose true gradient is zero
            if diff > 1e-8 && rel > 1e-4 {
                ok = false;
            }
            checked += 1;
        }
    }
    let elapsed = t0.elapsed();
    let in_time = elapsed.as_secs_f64() < 60.0;
    report.record(
        1,
        "gradient correctness (ReLU + ExU)",
        ok && checked >= 100 && in_time,
        &format!(
            "{checked} random parameters, max relative error {max_rel:.3e} (tol 1e-4), {:.2?}",
            elapsed
        ),
    );
}

// ---------------------------------------------------------------------
// criterion 2: distillation fidelity monotone in depth; step teacher exact
// ---------------------------------------------------------------------
fn trained_small_teacher() -> (NamModel, FeatureMatrix) {
    let cfg = SynthConfig {
        n_channels: 2, // M = 18 >= 10
        duration_s: 400.0,
        fs: 128,
        seizures: vec![(40.0, 60.0), (100.0, 120.0), (200.0, 220.0), (320.0, 340.0)],
        noise_scale: 1.0,
        band_boosts: [0.0, 0.0, 3.0, 3.0, 3.0, 2.0, 2.0],
        line_length_boost: 3.0,
        seed: 42,
    };
    let rec = synth_recording(&cfg).unwrap();
    let fm = extract_features(&rec, 1.0).unwrap();
    let (train, val, _test) =
        chronological_split(&fm, &rec.seizures, &SplitSpec::default()).unwrap();
    let scaler = fit_scaler(&train).unwrap();
    let train_s = scaler.apply(&train).unwrap();
    let val_s = scaler.apply(&val).unwrap();
    let train_ds = downsample_nonictal(&train_s, 10, 42).unwrap();
    let tcfg = TrainConfig {
        epochs: 60,
        patience: 15,
        seed: 42,
        ..TrainConfig::default()
    };
    let arch = NamArch {
        hidden: 24,
        activation: Activation::Relu,
    };
    let (model, _) = train_nam(&train_ds, &val_s, &tcfg, arch, &scaler).unwrap();
    (model, train_ds)
}

fn criterion_2(report: &mut Report) {
    let (teacher, inputs) = trained_small_teacher();
    let mse1 =
        distillation_mse(&teacher, &distill(&teacher, &inputs, 1).unwrap(), &inputs).unwrap();
    let mse2 =
        distillation_mse(&teacher, &distill(&teacher, &inputs, 2).unwrap(), &inputs).unwrap();
    let mse4 =
        distillation_mse(&teacher, &distill(&teacher, &inputs, 4).unwrap(), &inputs).unwrap();
    let mut monotone = true;
    for j in 0..teacher.m() {
        if !(mse4[j] <= mse2[j] * (1.0 + 1e-12) + 1e-18
            && mse2[j] <= mse1[j] * (1.0 + 1e-12) + 1e-18)
        {
            monotone = false;
        }
    }

    // exact step teacher: relu(k z) - relu(k z - 1) is a 0/1 step away from 0
    let k = 1e6;
    let step_teacher = NamModel {
        nets: vec![FeatureNet {
            activation: Activation::Relu,
            w: vec![k, k],
            b: vec![0.0, -1.0],
            v: vec![1.0, -1.0],
            c: 0.0,
        }],
        arch: NamArch {
            hidden: 2,
            activation: Activation::Relu,
        },
        scaler: unit_scaler(1),
        init_seed: 0,
    };
    let zs = [-1.5, -0.8, -0.01, 0.01, 0.4, 1.2];
    let step_inputs = FeatureMatrix {
        m: 1,
        win_s: 1.0,
        rows: zs.iter().map(|&z| vec![z]).collect(),
        labels: vec![false; zs.len()],
        window_start_s: (0..zs.len()).map(|i| i as f64).collect(),
    };
    let step_mse = distillation_mse(
        &step_teacher,
        &distill(&step_teacher, &step_inputs, 1).unwrap(),
        &step_inputs,
    )
    .unwrap()[0];

    report.record(
        2,
        "distillation fidelity",
        monotone && step_mse == 0.0,
        &format!(
            "per-feature MSE monotone over depths 1/2/4 for all {} features: {monotone}; \
             2-level step teacher at depth 1 exact (MSE = {step_mse:e})",
            teacher.m()
        ),
    );
}

// ---------------------------------------------------------------------
// criterion 3: greedy root split equals exhaustive enumeration
// ---------------------------------------------------------------------
fn criterion_3(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(33033);
    let mut mismatches = 0usize;
    let mut datasets = 0usize;
    for _ in 0..200 {
        let n = rng.random_range(2..=12);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random::<f64>(), rng.random::<f64>() * 4.0 - 2.0))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        datasets += 1;

        // oracle: enumerate every candidate split with definitional SSE,
        // ties resolved to the smaller threshold
        let sse = |pts: &[(f64, f64)]| {
            let m = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
            pts.iter().map(|p| (p.1 - m) * (p.1 - m)).sum::<f64>()
        };
        let mut oracle: Option<(f64, f64)> = None;
        for i in 0..pairs.len() - 1 {
            if pairs[i].0 < pairs[i + 1].0 {
                let thr = (pairs[i].0 + pairs[i + 1].0) / 2.0;
                let total = sse(&pairs[..i + 1]) + sse(&pairs[i + 1..]);
                if oracle.is_none_or(|(_, best)| total < best) {
                    oracle = Some((thr, total));
                }
            }
        }

        for depth in [1usize, 2] {
            let tree = fit_regression_tree(&pairs, depth).unwrap();
            if tree.root_split() != oracle.map(|(thr, _)| thr) {
                mismatches += 1;
            }
        }
    }
    report.record(
        3,
        "CART root split vs exhaustive oracle",
        mismatches == 0,
        &format!("{datasets} random datasets x depths 1 and 2, {mismatches} mismatches (exact match required)"),
    );
}

// ---------------------------------------------------------------------
// criterion 4: streaming/batch centroid oracle; H0 = 0 decision invariance
// ---------------------------------------------------------------------
fn criterion_4(report: &mut Report) {
    let m = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(44044);
    let mut max_dev: f64 = 0.0;
    for _ in 0..5 {
        let len = rng.random_range(100..=1000);
        let mut state = init_adapter(m, 0.69).unwrap();
        let mut batch1 = vec![state.mu1.clone()];
        let mut batch0 = vec![state.mu0.clone()];
        for _ in 0..len {
            let contrib: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let step = state.step(&contrib).unwrap();
            if step.accepted {
                let norm = contrib.iter().map(|v| v * v).sum::<f64>().sqrt();
                let v: Vec<f64> = contrib.iter().map(|c| c / norm).collect();
                if step.class_assigned == Some(true) {
                    batch1.push(v);
                } else {
                    batch0.push(v);
                }
            }
        }
        for (mu, batch) in [(&state.mu1, &batch1), (&state.mu0, &batch0)] {
            for j in 0..m {
                let mean = batch.iter().map(|v| v[j]).sum::<f64>() / batch.len() as f64;
                max_dev = max_dev.max((mu[j] - mean).abs());
            }
        }
    }
    let centroids_ok = max_dev <= 1e-12;

    let fm = FeatureMatrix {
        m,
        win_s: 1.0,
        rows: (0..10_000)
            .map(|_| (0..m).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect())
            .collect(),
        labels: vec![false; 10_000],
        window_start_s: (0..10_000).map(|i| i as f64).collect(),
    };
    let mut adapter = init_adapter(m, 0.0).unwrap();
    let rows = run_stream(|x| Ok(x.to_vec()), &mut adapter, &fm).unwrap();
    let decisions_ok = rows
        .iter()
        .all(|r| (r.y_adapted >= 0.5) == (r.y_offline >= 0.5) && !r.accepted);

    report.record(
        4,
        "T3A streaming/batch oracle",
        centroids_ok && decisions_ok,
        &format!(
            "max centroid deviation from batch mean {max_dev:.3e} (tol 1e-12); \
             H0=0 decisions identical to offline on 10000 windows: {decisions_ok}"
        ),
    );
}

// ---------------------------------------------------------------------
// criterion 5: synthetic end-to-end accuracy
// ---------------------------------------------------------------------
fn criterion_5(report: &mut Report) {
    let t0 = Instant::now();
    let cfg = SynthConfig {
        n_channels: 4,
        duration_s: 1800.0, // 30 minutes
        fs: 256,
        seizures: vec![
            (150.0, 190.0),
            (350.0, 400.0),
            (800.0, 850.0),
            (1400.0, 1450.0),
        ],
        noise_scale: 1.0,
        band_boosts: [0.0, 0.0, 3.0, 3.0, 3.0, 2.0, 2.0],
        line_length_boost: 3.0,
        seed: 424242,
    };
    let rec = synth_recording(&cfg).unwrap();
    let fm = extract_features(&rec, 1.0).unwrap();
    let (train, val, test) =
        chronological_split(&fm, &rec.seizures, &SplitSpec::default()).unwrap();
    let scaler = fit_scaler(&train).unwrap();
    let train_s = scaler.apply(&train).unwrap();
    let val_s = scaler.apply(&val).unwrap();
    let test_s = scaler.apply(&test).unwrap();
    let train_ds = downsample_nonictal(&train_s, 10, cfg.seed).unwrap();

    let tcfg = TrainConfig {
        epochs: 200,
        patience: 20,
        seed: cfg.seed,
        ..TrainConfig::default()
    };
    let arch = NamArch {
        hidden: 100,
        activation: Activation::Relu,
    };
    let (teacher, _) = train_nam(&train_ds, &val_s, &tcfg, arch, &scaler).unwrap();

    let nam_scores: Vec<f64> = test_s
        .rows
        .iter()
        .map(|x| teacher.predict(x).unwrap())
        .collect();
    let nam_conf = confusion(&nam_scores, &test.labels, 0.5).unwrap();

    let mt4 = distill(&teacher, &train_ds, 4).unwrap();
    let mt4_scores: Vec<f64> = test_s
        .rows
        .iter()
        .map(|x| mt4.predict(x).unwrap())
        .collect();
    let mt4_conf = confusion(&mt4_scores, &test.labels, 0.5).unwrap();

    // tune the entropy gate on validation, then stream the test split
    let contrib = |x: &[f64]| mt4.forward(x).map(|(c, _)| c);
    let (h0, _) = tune_h0(contrib, &val_s, &mtnam::t3a::default_h0_grid()).unwrap();
    let mut adapter = init_adapter(mt4.m(), h0).unwrap();
    let stream = run_stream(contrib, &mut adapter, &test_s).unwrap();
    let adapted_scores: Vec<f64> = stream.iter().map(|r| r.y_adapted).collect();
    let adapted = compute_metrics("mt4_t3a", &adapted_scores, &test, &rec.seizures, 0.5).unwrap();

    let elapsed = t0.elapsed();
    let ok = nam_conf.sensitivity >= 0.90
        && nam_conf.specificity >= 0.90
        && (nam_conf.sensitivity - mt4_conf.sensitivity).abs() <= 0.05
        && adapted.sensitivity >= mt4_conf.sensitivity - 0.01
        && adapted.event_sensitivity == 1.0
        && elapsed.as_secs_f64() < 600.0;
    report.record(
        5,
        "synthetic end-to-end accuracy",
        ok,
        &format!(
            "NAM sens {:.3} spec {:.3}; MT4 sens {:.3} (|diff| {:.3} <= 0.05); \
             MT4+T3A sens {:.3} (>= MT4 - 0.01), event sensitivity {:.2} (= 1.0 required); \
             H0 = {h0:.4}; runtime {:.1?} (< 10 min)",
            nam_conf.sensitivity,
            nam_conf.specificity,
            mt4_conf.sensitivity,
            (nam_conf.sensitivity - mt4_conf.sensitivity).abs(),
            adapted.sensitivity,
            adapted.event_sensitivity,
            elapsed
        ),
    );
}

// ---------------------------------------------------------------------
// criterion 6: measured latency ratios and FLOP-model ratios
// ---------------------------------------------------------------------
fn criterion_6(report: &mut Report) {
    let m = 207;
    let hidden = 100;
    let teacher = NamModel::init(
        m,
        NamArch {
            hidden,
            activation: Activation::Relu,
        },
        unit_scaler(m),
        66066,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(66067);
    let distill_inputs = FeatureMatrix {
        m,
        win_s: 1.0,
        rows: (0..200)
            .map(|_| (0..m).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect())
            .collect(),
        labels: vec![false; 200],
        window_start_s: (0..200).map(|i| i as f64).collect(),
    };
    let mt4 = distill(&teacher, &distill_inputs, 4).unwrap();
    let inputs: Vec<Vec<f64>> = (0..64)
        .map(|_| (0..m).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect())
        .collect();

    let reps = 300;
    let warm = 30;
    let lat_nam =
        measure_latency("nam", |x| teacher.predict(x).unwrap(), &inputs, reps, warm).unwrap();
    let lat_mt4 = measure_latency("mt4", |x| mt4.predict(x).unwrap(), &inputs, reps, warm).unwrap();
    let mut adapter = init_adapter(m, std::f64::consts::LN_2).unwrap();
    let mut contrib = vec![0.0; m];
    let lat_t3a = measure_latency(
        "mt4_t3a",
        |x| {
            mt4.contributions_into(x, &mut contrib).unwrap();
            adapter.step(&contrib).unwrap().y_adjusted
        },
        &inputs,
        reps,
        warm,
    )
    .unwrap();

    let lat_ratio_teacher = lat_nam.mean_us / lat_mt4.mean_us;
    let lat_ratio_t3a = lat_t3a.mean_us / lat_mt4.mean_us;

    let f_nam = count_flops(&ModelDescriptor::Nam { m, hidden }).unwrap();
    let f_mt4 = count_flops(&ModelDescriptor::MtNam { m, depth: 4 }).unwrap();
    let f_t3a = count_flops(&ModelDescriptor::MtNamT3a { m, depth: 4 }).unwrap();
    let f_lr = count_flops(&ModelDescriptor::Lr { m }).unwrap();
    let flop_ratio_teacher = f_nam as f64 / f_mt4 as f64;

    let c_lat_teacher = lat_ratio_teacher >= 20.0;
    let c_lat_t3a = lat_ratio_t3a <= 5.0;
    let c_flop_teacher = flop_ratio_teacher >= 90.0;
    let c_flop_lr = f_t3a <= 2 * f_lr;
    println!(
        "  criterion 6a latency NAM/MT4      = {lat_ratio_teacher:.1} (>= 20): {}",
        pf(c_lat_teacher)
    );
    println!(
        "  criterion 6b latency MT4+T3A/MT4  = {lat_ratio_t3a:.2} (<= 5): {}",
        pf(c_lat_t3a)
    );
    println!(
        "  criterion 6c flops   NAM/MT4      = {flop_ratio_teacher:.1} (>= 90): {}",
        pf(c_flop_teacher)
    );
    println!(
        "  criterion 6d flops   MT4+T3A vs LR = {f_t3a} vs 2*{f_lr} = {} (<=): {}",
        2 * f_lr,
        pf(c_flop_lr)
    );

    report.record(
        6,
        "speedup ratios",
        c_lat_teacher && c_lat_t3a && c_flop_teacher && c_flop_lr,
        &format!(
            "latency NAM {:.1}us / MT4 {:.2}us = {lat_ratio_teacher:.1}x (>= 20); \
             MT4+T3A {:.2}us / MT4 = {lat_ratio_t3a:.2}x (<= 5); \
             FLOPs NAM/MT4 = {flop_ratio_teacher:.1} (>= 90); \
             FLOPs(MT4+T3A) = {f_t3a} vs 2*FLOPs(LR) = {} ({})",
            lat_nam.mean_us,
            lat_mt4.mean_us,
            lat_t3a.mean_us,
            2 * f_lr,
            if c_flop_lr { "holds" } else { "violated" }
        ),
    );
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------------
// criterion 7: metric oracles
// ---------------------------------------------------------------------
fn criterion_7(report: &mut Report) {
    // AUROC vs pairwise counting on 50 random small sets
    let mut rng = ChaCha8Rng::seed_from_u64(77077);
    let mut max_dev: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(4..=20);
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.random::<f64>() * 4.0).round() / 4.0)
            .collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
        labels[0] = true;
        labels[1] = false;
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        max_dev = max_dev.max((auroc(&scores, &labels).unwrap() - wins / pairs).abs());
    }
    let auroc_ok = max_dev <= 1e-12;

    // hand-enumerated event-sensitivity cases
    let times: Vec<f64> = (0..30).map(|i| i as f64).collect();
    let mut one = vec![false; 30];
    one[15] = true;
    let ev1 = event_sensitivity(&one, &times, 1.0, &[(10.0, 20.0)])
        .unwrap()
        .value;
    let ev2 = event_sensitivity(&one, &times, 1.0, &[(10.0, 20.0), (25.0, 28.0)])
        .unwrap()
        .value;
    let mut outside = vec![false; 30];
    outside[2] = true;
    let ev3 = event_sensitivity(&outside, &times, 1.0, &[(10.0, 20.0)])
        .unwrap()
        .value;
    let events_ok = ev1 == 1.0 && ev2 == 0.5 && ev3 == 0.0;

    // 10 Hz sinusoid concentrates in the alpha band
    let fs = 256;
    let x: Vec<f64> = (0..256)
        .map(|i| (2.0 * std::f64::consts::PI * 10.0 * i as f64 / fs as f64).sin())
        .collect();
    let bp = band_powers(&x, fs).unwrap();
    let alpha_fraction = bp.power[2] / bp.power.iter().sum::<f64>();
    let alpha_ok = alpha_fraction >= 0.95;

    report.record(
        7,
        "metric oracles",
        auroc_ok && events_ok && alpha_ok,
        &format!(
            "AUROC max |dev| from pairwise oracle {max_dev:.3e} (tol 1e-12); \
             event-sensitivity crafted cases [{ev1}, {ev2}, {ev3}] == [1, 0.5, 0]; \
             10 Hz alpha fraction {alpha_fraction:.4} (>= 0.95)"
        ),
    );
}

// ---------------------------------------------------------------------
// criterion 8: byte-identical artifacts across full pipeline reruns
// ---------------------------------------------------------------------
fn criterion_8(report: &mut Report) {
    let run = |out_dir: &std::path::Path| {
        let text = format!(
            "run.seed = 11\n\
             run.out_dir = {}\n\
             data.source = synth\n\
             synth.channels = 2\n\
             synth.duration_s = 300\n\
             synth.fs = 128\n\
             synth.seizures = 30-45, 70-85, 150-165, 220-235\n\
             synth.band_boosts = 0,0,2.5,2.5,2.5,1,1\n\
             synth.line_length_boost = 2.5\n\
             nam.hidden = 10\n\
             nam.activations = relu\n\
             train.epochs = 25\n\
             train.patience = 8\n\
             baselines.dnn_hidden = 10\n\
             distill.depths = 1,4\n",
            out_dir.display()
        );
        let cfg = PipelineConfig::parse(&text).unwrap();
        pipeline::cmd_synth(&cfg).unwrap();
        pipeline::cmd_extract(&cfg).unwrap();
        pipeline::cmd_train(&cfg).unwrap();
        pipeline::cmd_distill(&cfg).unwrap();
        pipeline::cmd_eval(&cfg).unwrap();
        pipeline::cmd_adapt_eval(&cfg).unwrap();
    };

    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    run(&dir_a);
    run(&dir_b);

    let mut checked = 0usize;
    let mut diffs = Vec::new();
    for entry in std::fs::read_dir(&dir_a).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read(dir_a.join(&name)).unwrap();
        let b = std::fs::read(dir_b.join(&name)).unwrap_or_default();
        checked += 1;
        if a != b {
            diffs.push(name.to_string_lossy().to_string());
        }
    }
    report.record(
        8,
        "determinism",
        diffs.is_empty() && checked >= 15,
        &format!(
            "{checked} artifacts compared across two identical full runs; differing: {diffs:?}"
        ),
    );
}

#[test]
fn acceptance_criteria() {
    let mut report = Report {
        failures: Vec::new(),
    };
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    criterion_5(&mut report);
    criterion_6(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report);
    assert!(
        report.failures.is_empty(),
        "{} acceptance criterion(s) failed:\n{}",
        report.failures.len(),
        report.failures.join("\n")
    );
}

// keep the baselines compiling against real data shapes in at least one
// integration-level check
#[test]
fn baselines_train_on_extracted_features() {
    let (teacher, train_ds) = trained_small_teacher();
    let cfg = TrainConfig {
        epochs: 15,
        patience: 5,
        seed: 9,
        ..TrainConfig::default()
    };
    let val = FeatureMatrix {
        m: train_ds.m,
        win_s: 1.0,
        rows: train_ds.rows.clone(),
        labels: train_ds.labels.clone(),
        window_start_s: train_ds.window_start_s.clone(),
    };
    let (lr, lr_rep) = train_lr(&train_ds, &val, &cfg, 0.01, &teacher.scaler).unwrap();
    let (dnn, dnn_rep) = train_dnn(&train_ds, &val, &cfg, 10, &teacher.scaler).unwrap();
    assert!(lr_rep.best_val_f1 > 0.5, "LR f1 {}", lr_rep.best_val_f1);
    assert!(dnn_rep.best_val_f1 > 0.5, "DNN f1 {}", dnn_rep.best_val_f1);
    assert!(lr.predict(&train_ds.rows[0]).unwrap() > 0.0);
    assert!(dnn.predict(&train_ds.rows[0]).unwrap() < 1.0);
    let _: &MtNamModel = &distill(&teacher, &train_ds, 2).unwrap();
}
