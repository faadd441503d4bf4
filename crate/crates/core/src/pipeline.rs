//! Split, preprocess, train and score in one call.

use crate::cnn::{evaluate_model, repeat_seed, train_model, ArchSpec, Checkpoint, EpochRecord, TrainConfig};
use crate::drwcc::{apply_feature_mask, FeatureMask};
use crate::error::Result;
use crate::integrate::rng::stream;
use crate::integrate::{
    build_integrated_dataset, generate_synthetic, stratified_split, IhardsDataset, IntegrationConfig,
    ReplacementPolicy, SeededRng, StandardizationStats, SyntheticConfig,
};
use crate::metrics::{confusion_matrix, derive_scores, ScoreReport};

pub const TEST_FRACTION: f64 = 0.5;

/// The 50/50 stratified split used for a given root seed.
pub fn split_for_seed(data: &IhardsDataset, seed: u64) -> Result<(IhardsDataset, IhardsDataset)> {
    stratified_split(data, TEST_FRACTION, &mut SeededRng::derive(seed, stream::SPLIT))
}

/// Synthetic sources integrated at `per_class` rows per class.
pub fn synthetic_dataset(per_class: usize, sigma: f64, seed: u64) -> Result<IhardsDataset> {
    let cfg = SyntheticConfig {
        per_class,
        sigma,
        ..SyntheticConfig::default()
    };
    let src = generate_synthetic(&cfg, &SeededRng::new(seed))?;
    build_integrated_dataset(
        &src.uci,
        &src.wisdm,
        &src.kuhar,
        &IntegrationConfig {
            per_class_n: per_class,
            seed,
            replacement_policy: ReplacementPolicy::ErrorIfShort,
        },
    )
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub checkpoint: Checkpoint,
    pub curve: Vec<EpochRecord>,
    pub report: ScoreReport,
    pub train_accuracy: f64,
    pub train_rows: usize,
    pub test_rows: usize,
}

fn masked(data: &IhardsDataset, mask: &FeatureMask) -> Result<IhardsDataset> {
    IhardsDataset::new(apply_feature_mask(&data.features, mask)?, data.labels.clone(), data.seed_used)
}

/// Split with `cfg.seed`, mask, standardize on the train half, train,
/// evaluate on the test half.
pub fn train_eval(
    data: &IhardsDataset,
    mask: Option<&FeatureMask>,
    spec: &ArchSpec,
    cfg: &TrainConfig,
) -> Result<RunResult> {
    let all = FeatureMask::all(data.cols());
    let mask = mask.unwrap_or(&all);
    let (train, test) = split_for_seed(data, cfg.seed)?;
    let (train, test) = (masked(&train, mask)?, masked(&test, mask)?);
    // rounded to the precision the checkpoint stores, so `eval` on a saved
    // model reproduces this report exactly
    let stats = StandardizationStats::fit(&train.features)?.rounded_to_f32();
    let train = IhardsDataset::new(stats.apply(&train.features)?, train.labels, train.seed_used)?;
    let test = IhardsDataset::new(stats.apply(&test.features)?, test.labels, test.seed_used)?;
    let outcome = train_model(&train, spec, cfg)?;
    let mut checkpoint = outcome.checkpoint.with_preprocessing(mask, &stats)?;
    let eval = evaluate_model(&checkpoint, &test)?;
    let report = derive_scores(&confusion_matrix(&eval.labels, &eval.predictions)?)?.with_loss(eval.loss);
    checkpoint.metrics.insert("test_accuracy".into(), format!("{:?}", report.accuracy));
    checkpoint.metrics.insert("test_loss".into(), format!("{:?}", eval.loss));
    Ok(RunResult {
        seed: cfg.seed,
        checkpoint,
        curve: outcome.curve,
        report,
        train_accuracy: outcome.train_accuracy,
        train_rows: train.rows(),
        test_rows: test.rows(),
    })
}

/// `cfg.repeats` independent runs; repeat `r` uses `repeat_seed(cfg.seed, r)`.
pub fn train_eval_repeats(
    data: &IhardsDataset,
    mask: Option<&FeatureMask>,
    spec: &ArchSpec,
    cfg: &TrainConfig,
    mut on_repeat: impl FnMut(usize, &RunResult),
) -> Result<Vec<RunResult>> {
    let mut out = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let run_cfg = TrainConfig {
            seed: repeat_seed(cfg.seed, r),
            ..*cfg
        };
        let res = train_eval(data, mask, spec, &run_cfg)?;
        on_repeat(r, &res);
        out.push(res);
    }
    Ok(out)
}

/// Where the three public sources live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourcePaths {
    pub uci: std::path::PathBuf,
    pub wisdm: std::path::PathBuf,
    pub kuhar: std::path::PathBuf,
}

pub const UCI_DIR_NAMES: [&str; 2] = ["UCI HAR Dataset", "uci_har"];
pub const WISDM_FILE_NAMES: [&str; 2] = ["WISDM_ar_v1.1_raw.txt", "wisdm.txt"];
pub const KU_HAR_FILE_NAMES: [&str; 2] = ["ku_har.csv", "KU-HAR.csv"];

/// Finds the sources under `dir` by their usual names.
pub fn locate_sources(dir: &std::path::Path) -> Result<SourcePaths> {
    let find = |names: &[&str]| -> Result<std::path::PathBuf> {
        names
            .iter()
            .map(|n| dir.join(n))
            .find(|p| p.exists())
            .ok_or_else(|| {
                crate::Error::Config(format!("{} contains none of: {}", dir.display(), names.join(", ")))
            })
    };
    Ok(SourcePaths {
        uci: find(&UCI_DIR_NAMES)?,
        wisdm: find(&WISDM_FILE_NAMES)?,
        kuhar: find(&KU_HAR_FILE_NAMES)?,
    })
}

/// Loads the three sources with their default label maps and column layout.
pub fn load_sources(paths: &SourcePaths) -> Result<[crate::ingest::Ingested; 3]> {
    use crate::ingest::{load_ku_har, load_uci_har, load_wisdm_raw, KuHarColumns, LabelMap, SourceId};
    Ok([
        load_uci_har(&paths.uci, &LabelMap::default_for(SourceId::UciHar))?,
        load_wisdm_raw(&paths.wisdm, &LabelMap::default_for(SourceId::Wisdm))?,
        load_ku_har(&paths.kuhar, &LabelMap::default_for(SourceId::KuHar), &KuHarColumns::default())?,
    ])
}

/// Writes synthetic sources in the public datasets' native layouts under
/// `dir`, so the regular loaders can read them back. Values are written in
/// shortest round-trip form.
pub fn write_native_sources(src: &crate::integrate::SyntheticSources, dir: &std::path::Path) -> Result<SourcePaths> {
    use crate::ingest::ActivityClass;
    use std::fmt::Write as _;

    let write = |path: &std::path::Path, text: &str| -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| crate::Error::io(parent, e))?;
        }
        std::fs::write(path, text).map_err(|e| crate::Error::io(path, e))
    };
    let class_of = |l: u8| ActivityClass::from_code(l).expect("canonical label");
    let paths = SourcePaths {
        uci: dir.join(UCI_DIR_NAMES[0]),
        wisdm: dir.join(WISDM_FILE_NAMES[0]),
        kuhar: dir.join(KU_HAR_FILE_NAMES[0]),
    };

    let uci_code = |c: ActivityClass| match c {
        ActivityClass::Walk => 1,
        ActivityClass::StairUp => 2,
        ActivityClass::StairDown => 3,
        ActivityClass::Sit => 4,
        ActivityClass::Stand => 5,
    };
    write(
        &paths.uci.join("activity_labels.txt"),
        "1 WALKING\n2 WALKING_UPSTAIRS\n3 WALKING_DOWNSTAIRS\n4 SITTING\n5 STANDING\n6 LAYING\n",
    )?;
    let (mut x, mut y) = (String::new(), String::new());
    for (r, &l) in src.uci.labels.iter().enumerate() {
        let cells: Vec<String> = src.uci.features.row(r).iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(x, "{}", cells.join(" "));
        let _ = writeln!(y, "{}", uci_code(class_of(l)));
    }
    write(&paths.uci.join("train").join("X_train.txt"), &x)?;
    write(&paths.uci.join("train").join("y_train.txt"), &y)?;
    write(&paths.uci.join("test").join("X_test.txt"), "")?;
    write(&paths.uci.join("test").join("y_test.txt"), "")?;

    let wisdm_name = |c: ActivityClass| match c {
        ActivityClass::Stand => "Standing",
        ActivityClass::Sit => "Sitting",
        ActivityClass::Walk => "Walking",
        ActivityClass::StairDown => "Downstairs",
        ActivityClass::StairUp => "Upstairs",
    };
    let mut w = String::new();
    for (r, &l) in src.wisdm.labels.iter().enumerate() {
        let v = src.wisdm.features.row(r);
        let _ = writeln!(w, "1,{},{},{:?},{:?},{:?};", wisdm_name(class_of(l)), r, v[0], v[1], v[2]);
    }
    write(&paths.wisdm, &w)?;

    let ku_code = |c: ActivityClass| match c {
        ActivityClass::Stand => 0,
        ActivityClass::Sit => 1,
        ActivityClass::Walk => 11,
        ActivityClass::StairUp => 15,
        ActivityClass::StairDown => 16,
    };
    let mut k = String::new();
    for (r, &l) in src.kuhar.labels.iter().enumerate() {
        let cells: Vec<String> = src.kuhar.features.row(r).iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(k, "{},{}", cells.join(","), ku_code(class_of(l)));
    }
    write(&paths.kuhar, &k)?;
    Ok(paths)
}
