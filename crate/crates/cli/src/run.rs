use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use ihards_core::bench::{run_scaling_benchmark, BenchConfig};
use ihards_core::cnn::{evaluate_model, predict_network, ArchSpec, Checkpoint, TrainConfig};
use ihards_core::drwcc::{correlation_matrix, drwcc_prune, FeatureMask};
use ihards_core::ingest::{
    load_ku_har, load_uci_har, load_wisdm_raw, ActivityClass, Ingested, KuHarColumns, LabelMap, SourceId,
};
use ihards_core::integrate::{
    build_integrated_dataset, generate_synthetic, read_ihds, write_csv, write_ihds, IhardsDataset,
    IntegrationConfig, ReplacementPolicy, SeededRng, SyntheticConfig,
};
use ihards_core::metrics::{
    confusion_csv, confusion_matrix, derive_scores, emit_report, repeat_summary_text, summary_text, ReportPaths,
    ScoreReport,
};
use ihards_core::pipeline::{locate_sources, split_for_seed, train_eval_repeats, write_native_sources, SourcePaths};

use crate::{
    AnalyzeArgs, BenchArgs, CliError, Cmd, EvalArgs, IntegrateArgs, Manifest, Policy, PredictArgs, SplitChoice,
    SynthArgs, TrainArgs,
};

type Res<T> = Result<T, CliError>;

pub(crate) fn dispatch(cmd: &Cmd, manifest: &Manifest) -> Res<()> {
    match cmd {
        Cmd::Integrate(a) => integrate(a, manifest),
        Cmd::Synth(a) => synth(a, manifest),
        Cmd::Analyze(a) => analyze(a, manifest),
        Cmd::Train(a) => train(a, manifest),
        Cmd::Eval(a) => eval(a, manifest),
        Cmd::Predict(a) => predict(a, manifest),
        Cmd::Benchmark(a) => benchmark(a, manifest),
    }
}

fn beside(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_text(path: &Path, text: &str) -> Res<()> {
    std::fs::write(path, text).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Res<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))
}

fn load_map(path: Option<&PathBuf>, source: SourceId) -> Res<LabelMap> {
    let Some(p) = path else {
        return Ok(LabelMap::default_for(source));
    };
    let map = LabelMap::from_file(p)?;
    if map.source() != source {
        return Err(CliError::config(format!(
            "{} is a label map for {}, expected {source}",
            p.display(),
            map.source()
        )));
    }
    Ok(map)
}

fn parse_cols(text: &str) -> Res<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::config(format!("bad column index {t:?} in {text:?}")))
        })
        .collect()
}

fn log_ingest(i: &Ingested) {
    log::info!(
        "{}: {} rows read, {} kept, {} filtered by label, {} malformed",
        i.frame.source,
        i.stats.rows_in,
        i.stats.emitted,
        i.stats.label_filtered,
        i.stats.malformed
    );
}

fn integrate(a: &IntegrateArgs, manifest: &Manifest) -> Res<()> {
    let explicit = [&a.uci, &a.wisdm, &a.kuhar];
    let given = explicit.iter().filter(|p| p.is_some()).count();
    if given > 0 && a.synthetic {
        return Err(CliError::config("--synthetic cannot be combined with --uci/--wisdm/--kuhar"));
    }
    if given > 0 && given < 3 {
        return Err(CliError::config("--uci, --wisdm and --kuhar must be given together"));
    }
    let policy = match a.policy {
        Policy::Replace => ReplacementPolicy::ReplaceIfShort,
        Policy::Error => ReplacementPolicy::ErrorIfShort,
    };
    let cfg = IntegrationConfig {
        per_class_n: a.per_class,
        seed: a.seed,
        replacement_policy: policy,
    };

    let data = if a.synthetic {
        let src = generate_synthetic(
            &SyntheticConfig {
                per_class: a.per_class,
                sigma: a.sigma,
                ..SyntheticConfig::default()
            },
            &SeededRng::new(a.seed),
        )?;
        build_integrated_dataset(&src.uci, &src.wisdm, &src.kuhar, &cfg)?
    } else {
        let paths = match (&a.uci, &a.wisdm, &a.kuhar, &a.data_dir) {
            (Some(u), Some(w), Some(k), _) => SourcePaths {
                uci: u.clone(),
                wisdm: w.clone(),
                kuhar: k.clone(),
            },
            (_, _, _, Some(dir)) => locate_sources(dir)?,
            _ => {
                return Err(CliError::config(
                    "no sources: give --uci/--wisdm/--kuhar, --data-dir (or IHARDS_DATA_DIR), or --synthetic",
                ))
            }
        };
        let columns = KuHarColumns {
            label: a.kuhar_label_col,
            features: a.kuhar_feature_cols.as_deref().map(parse_cols).transpose()?,
        };
        let uci = load_uci_har(&paths.uci, &load_map(a.uci_map.as_ref(), SourceId::UciHar)?)?;
        let wisdm = load_wisdm_raw(&paths.wisdm, &load_map(a.wisdm_map.as_ref(), SourceId::Wisdm)?)?;
        let kuhar = load_ku_har(&paths.kuhar, &load_map(a.kuhar_map.as_ref(), SourceId::KuHar)?, &columns)?;
        for i in [&uci, &wisdm, &kuhar] {
            log_ingest(i);
        }
        build_integrated_dataset(&uci.frame, &wisdm.frame, &kuhar.frame, &cfg)?
    };

    write_ihds(&a.out, &data.features, Some(&data.labels))?;
    if let Some(csv) = &a.csv {
        write_csv(csv, &data.features, Some(&data.labels))?;
    }
    manifest.write(&beside(&a.out, ".manifest"))?;
    println!("wrote {} rows x {} columns to {}", data.rows(), data.cols(), a.out.display());
    Ok(())
}

fn synth(a: &SynthArgs, manifest: &Manifest) -> Res<()> {
    let src = generate_synthetic(
        &SyntheticConfig {
            per_class: a.per_class,
            sigma: a.sigma,
            ..SyntheticConfig::default()
        },
        &SeededRng::new(a.seed),
    )?;
    create_dir(&a.out)?;
    let paths = write_native_sources(&src, &a.out)?;
    manifest.write(&a.out.join("manifest.txt"))?;
    println!(
        "wrote {}, {}, {}",
        paths.uci.display(),
        paths.wisdm.display(),
        paths.kuhar.display()
    );
    Ok(())
}

fn load_dataset(path: &Path) -> Res<IhardsDataset> {
    Ok(read_ihds(path)?.into_dataset(0)?)
}

fn analyze(a: &AnalyzeArgs, manifest: &Manifest) -> Res<()> {
    let data = load_dataset(&a.data)?;
    let fit = if a.fit_on_all {
        data.features
    } else {
        split_for_seed(&data, a.seed)?.0.features
    };
    let corr = correlation_matrix(&fit)?;
    let mask = drwcc_prune(&corr, a.threshold)?;
    let s = corr.summary(a.threshold);

    let mut text = String::new();
    let _ = writeln!(text, "fit_rows = {}", fit.rows());
    let _ = writeln!(text, "fit_on = {}", if a.fit_on_all { "all" } else { "train" });
    let _ = writeln!(text, "columns = {}", s.columns);
    let _ = writeln!(text, "threshold = {:?}", a.threshold);
    let _ = writeln!(text, "max_abs_r = {:?}", s.max_abs_r);
    let _ = writeln!(text, "mean_abs_r = {:?}", s.mean_abs_r);
    let _ = writeln!(text, "pairs_above = {}", s.pairs_above);
    let _ = writeln!(text, "columns_above = {}", s.columns_above);
    let _ = writeln!(text, "constant_columns = {}", s.constant_columns);
    let _ = writeln!(text, "kept_count = {}", mask.kept_count());
    let _ = writeln!(text, "dropped_count = {}", mask.dropped_count());

    mask.save(&a.out)?;
    let summary = a.summary.clone().unwrap_or_else(|| beside(&a.out, ".summary.txt"));
    write_text(&summary, &text)?;
    manifest.write(&beside(&a.out, ".manifest"))?;
    println!(
        "kept {} of {} columns at threshold {}",
        mask.kept_count(),
        mask.len(),
        a.threshold
    );
    Ok(())
}

fn print_headline(report: &ScoreReport) {
    for (name, v) in report.headline() {
        println!("{name} = {v:?}");
    }
}

fn train(a: &TrainArgs, manifest: &Manifest) -> Res<()> {
    let spec = match &a.arch_file {
        Some(p) => ArchSpec::from_file(p)?,
        None => ArchSpec::preset(&a.arch)?,
    };
    spec.validate()?;
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        epochs: a.epochs,
        repeats: a.repeats,
        adam_beta1: a.beta1,
        adam_beta2: a.beta2,
        adam_epsilon: a.epsilon,
        seed: a.seed,
    };
    cfg.validate()?;
    let data = load_dataset(&a.data)?;
    let mask = a.mask.as_deref().map(FeatureMask::load).transpose()?;
    create_dir(&a.out_dir)?;
    manifest.write(&a.out_dir.join("manifest.txt"))?;

    let single = cfg.repeats == 1;
    let mut written: Res<()> = Ok(());
    let runs = train_eval_repeats(&data, mask.as_ref(), &spec, &cfg, |r, run| {
        log::info!(
            "repeat {}/{} seed={} test accuracy={:?}",
            r + 1,
            cfg.repeats,
            run.seed,
            run.report.accuracy
        );
        if written.is_err() {
            return;
        }
        let dir = if single {
            a.out_dir.clone()
        } else {
            a.out_dir.join(format!("repeat-{r:02}"))
        };
        written = create_dir(&dir).and_then(|_| {
            run.checkpoint.save(&dir.join("model.ihck"))?;
            emit_report(&run.report, &run.curve, &ReportPaths::in_dir(&dir, ""))?;
            Ok(())
        });
    })?;
    written?;

    if single {
        print_headline(&runs[0].report);
    } else {
        let reports: Vec<ScoreReport> = runs.iter().map(|r| r.report.clone()).collect();
        let text = repeat_summary_text(&reports);
        write_text(&a.out_dir.join("summary.txt"), &text)?;
        print!("{text}");
    }
    Ok(())
}

/// Masked, standardized rows for `ckpt` from a raw container.
fn prepared(ckpt: &Checkpoint, data: &IhardsDataset) -> Res<IhardsDataset> {
    Ok(IhardsDataset::new(
        ckpt.preprocess(&data.features)?,
        data.labels.clone(),
        data.seed_used,
    )?)
}

fn eval(a: &EvalArgs, manifest: &Manifest) -> Res<()> {
    let ckpt = Checkpoint::load(&a.model)?;
    let data = load_dataset(&a.data)?;
    let rows = match a.split {
        SplitChoice::All => data,
        SplitChoice::Test => {
            let seed = match a.seed {
                Some(s) => s,
                None => ckpt
                    .metrics
                    .get("seed")
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| CliError::config("checkpoint records no seed; pass --seed"))?,
            };
            split_for_seed(&data, seed)?.1
        }
    };
    let eval = evaluate_model(&ckpt, &prepared(&ckpt, &rows)?)?;
    let report = derive_scores(&confusion_matrix(&eval.labels, &eval.predictions)?)?.with_loss(eval.loss);
    create_dir(&a.out_dir)?;
    write_text(&a.out_dir.join("summary.txt"), &summary_text(&report))?;
    write_text(&a.out_dir.join("confusion.csv"), &confusion_csv(&report.confusion))?;
    manifest.write(&a.out_dir.join("manifest.txt"))?;
    print_headline(&report);
    Ok(())
}

fn predict(a: &PredictArgs, manifest: &Manifest) -> Res<()> {
    let ckpt = Checkpoint::load(&a.model)?;
    let contents = read_ihds(&a.data)?;
    let features = ckpt.preprocess(&contents.features)?;
    let (preds, _) = predict_network(&ckpt.to_network()?, &features, None)?;
    let mut text = String::from("row,class_code,class\n");
    for (i, p) in preds.iter().enumerate() {
        let name = ActivityClass::from_code(*p).map_or("?", ActivityClass::name);
        let _ = writeln!(text, "{i},{p},{name}");
    }
    write_text(&a.out, &text)?;
    manifest.write(&beside(&a.out, ".manifest"))?;
    println!("wrote {} predictions to {}", preds.len(), a.out.display());
    Ok(())
}

fn benchmark(a: &BenchArgs, manifest: &Manifest) -> Res<()> {
    let cfg = BenchConfig {
        trials: a.trials,
        batch: a.batch,
        length: a.length,
        kernel: a.kernel,
        channels: a.channels,
        filters: a.filters,
        dense_in: a.dense_in,
        dense_out: a.dense_out,
        min_sample: Duration::from_millis(a.min_sample_ms),
        seed: a.seed,
    };
    if [cfg.trials, cfg.batch, cfg.length, cfg.kernel, cfg.channels, cfg.filters, cfg.dense_in, cfg.dense_out]
        .contains(&0)
    {
        return Err(CliError::config("benchmark sizes and trials must be >= 1"));
    }
    if cfg.kernel > cfg.length {
        return Err(CliError::config("--kernel must not exceed --length"));
    }
    let report = run_scaling_benchmark(&cfg);
    let text = report.to_text();
    if let Some(out) = &a.out {
        write_text(out, &text)?;
        manifest.write(&beside(out, ".manifest"))?;
    }
    print!("{text}");
    Ok(())
}
