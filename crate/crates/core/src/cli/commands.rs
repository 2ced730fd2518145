use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::grid::{parse_gridspec, DEFAULT_GRIDSPEC};
use super::{
    Cli, CliError, Command, EvaluateArgs, GenerateArgs, GradcheckArgs, GridArgs, OptimArgs, PredictArgs, Regime,
    SplitArgs, Subset, TrainArgs,
};
use crate::data::{parse_dataset, serialize_dataset, split_dataset, SplitManifest, SplitRatios};
use crate::nn::{Checkpoint, ModelSpec};
use crate::sim::{generate_dataset, SimRanges, TrajectoryConfig};
use crate::train::{predict_records, prepare_splits, run_gradcheck, train, LossKind, TrainConfig};
use crate::{Error, Result};

pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const HISTORY_FILE: &str = "history.tsv";
pub const RUN_MANIFEST_FILE: &str = "run_manifest.cfg";
pub const GRID_REPORT_FILE: &str = "grid_report.tsv";

/// On-disk split manifest: the ids plus the dataset size they refer to.
#[derive(Debug, Serialize, Deserialize)]
struct SplitFile {
    records: usize,
    #[serde(flatten)]
    manifest: SplitManifest,
}

#[derive(Serialize)]
struct GenerationManifest<'a> {
    seed: u64,
    n: usize,
    regime: &'a str,
    ranges: SimRanges,
    trajectory: TrajectoryConfig,
}

pub(super) fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Split(a) => split(cli, a),
        Command::Train(a) => train_cmd(cli, a),
        Command::Grid(a) => grid(cli, a),
        Command::Evaluate(a) => evaluate_cmd(cli, a),
        Command::Predict(a) => predict(cli, a),
        Command::Gradcheck(a) => gradcheck(cli, a),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn load_split(path: &Path, records: usize) -> Result<SplitManifest> {
    let file: SplitFile = read_json(path)?;
    if file.records != records {
        return Err(Error::shape(format!(
            "{} was made for {} records, the dataset has {records}",
            path.display(),
            file.records
        )));
    }
    Ok(file.manifest)
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::usage("--n must be >= 1"));
    }
    let (ranges, regime) = match (&a.ranges, a.regime) {
        (Some(path), _) => (read_json::<SimRanges>(path)?, "custom"),
        (None, Regime::In) => (SimRanges::in_distribution(), "in"),
        (None, Regime::Out) => (SimRanges::out_of_distribution(), "out"),
    };
    let trajectory = TrajectoryConfig {
        min_len: a.min_len,
        max_len: a.max_len,
        noise_sigma: a.noise,
        ..TrajectoryConfig::default()
    };
    let records = generate_dataset(a.n, &ranges, &trajectory, cli.seed)?;

    let out = a.out.clone().unwrap_or_else(|| cli.out_dir.join("data.jsonl"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    serialize_dataset(&records, &out)?;
    let manifest = GenerationManifest {
        seed: cli.seed,
        n: a.n,
        regime,
        ranges,
        trajectory,
    };
    let manifest_path = PathBuf::from(format!("{}.gen.json", out.display()));
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&manifest_path, &(json + "\n"))?;
    println!("wrote {} records to {}", a.n, out.display());
    Ok(())
}

fn split(cli: &Cli, a: &SplitArgs) -> Result<(), CliError> {
    let records = parse_dataset(&a.data)?;
    let ratios = SplitRatios {
        train: a.train_ratio,
        val_of_rest: a.val_ratio,
    };
    let manifest = split_dataset(records.len(), cli.seed, ratios)?;
    let (tr, va, te) = manifest.sizes();
    let out = a.out.clone().unwrap_or_else(|| cli.out_dir.join("split.json"));
    let file = SplitFile {
        records: records.len(),
        manifest,
    };
    write_file(&out, &(serde_json::to_string(&file).expect("split serializes") + "\n"))?;
    println!(
        "split {} records into train {tr}, val {va}, test {te} -> {}",
        records.len(),
        out.display()
    );
    Ok(())
}

fn train_config(o: &OptimArgs, loss: LossKind, epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        loss,
        lr: o.lr,
        epochs,
        batch_size: o.batch_size,
        seed,
        patience: o.patience,
        beta1: o.beta1,
        beta2: o.beta2,
        eps: o.eps,
        clip_norm: o.clip_norm,
        normalize: !o.raw,
        record_wall_time: o.wall_time,
    }
}

fn run_manifest(cli: &Cli, a: &TrainArgs, config: &TrainConfig) -> String {
    let mut m = String::from("# pour-rnn train run; re-run with: pour-rnn --config <this file> train\n");
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(m, "{k}={v}");
    };
    kv("seed", cli.seed.to_string());
    kv("out-dir", cli.out_dir.display().to_string());
    kv("data", a.optim.data.display().to_string());
    kv("splits", a.optim.splits.display().to_string());
    if let Some(spec) = &a.spec {
        kv("spec", spec.display().to_string());
    }
    kv("cell", crate::nn::CellKind::from(a.cell).to_string());
    kv("activation", crate::nn::Activation::from(a.activation).to_string());
    kv("loss", config.loss.to_string());
    kv("lr", config.lr.to_string());
    kv("epochs", config.epochs.to_string());
    kv("batch-size", config.batch_size.to_string());
    if let Some(p) = config.patience {
        kv("patience", p.to_string());
    }
    kv("beta1", config.beta1.to_string());
    kv("beta2", config.beta2.to_string());
    kv("eps", config.eps.to_string());
    if let Some(c) = config.clip_norm {
        kv("clip-norm", c.to_string());
    }
    kv("raw", (!config.normalize).to_string());
    if let Some(l) = a.optim.max_len {
        kv("max-len", l.to_string());
    }
    kv("wall-time", config.record_wall_time.to_string());
    m
}

fn train_cmd(cli: &Cli, a: &TrainArgs) -> Result<(), CliError> {
    let o = &a.optim;
    let spec = match &a.spec {
        Some(path) => {
            let spec: ModelSpec = read_json(path)?;
            spec.validate()?;
            spec
        }
        None => ModelSpec::default_variant(a.cell.into(), a.activation.into()),
    };
    let config = train_config(o, a.loss.into(), a.epochs, cli.seed);
    config.validate()?;
    let records = parse_dataset(&o.data)?;
    let manifest = load_split(&o.splits, records.len())?;
    let splits = prepare_splits(&records, &manifest, config.normalize, o.max_len)?;

    let (params, mut history) = train(&spec, &splits, &config)?;

    let checkpoint_path = cli.out_dir.join(CHECKPOINT_FILE);
    let checkpoint = Checkpoint {
        params,
        normalizer: splits.normalizer,
        init_seed: cli.seed,
        train_seed: cli.seed,
    };
    write_file(&checkpoint_path, &checkpoint.to_text())?;
    history.checkpoint = Some(checkpoint_path.clone());
    write_file(&cli.out_dir.join(HISTORY_FILE), &history.to_tsv())?;
    write_file(&cli.out_dir.join(RUN_MANIFEST_FILE), &run_manifest(cli, a, &config))?;

    let val = history
        .final_val_loss()
        .map_or("n/a".to_string(), |v| format!("{v:.6}"));
    println!(
        "trained {} epochs{}: train loss {:.6}, val loss {val}; checkpoint {}",
        history.epochs.len(),
        if history.stopped_early { " (stopped early)" } else { "" },
        history.final_train_loss().unwrap_or(f64::NAN),
        checkpoint_path.display()
    );
    Ok(())
}

fn grid(cli: &Cli, a: &GridArgs) -> Result<(), CliError> {
    if !(a.epoch_scale > 0.0 && a.epoch_scale.is_finite()) {
        return Err(CliError::usage("--epoch-scale must be finite and > 0"));
    }
    let combos = match &a.gridspec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_gridspec(&text, path)?
        }
        None => parse_gridspec(DEFAULT_GRIDSPEC, Path::new("default.grid"))?,
    };
    let o = &a.optim;
    let records = parse_dataset(&o.data)?;
    let manifest = load_split(&o.splits, records.len())?;
    let splits = prepare_splits(&records, &manifest, !o.raw, o.max_len)?;

    let mut report = String::from("rnn\tloss\tactivation\ttrain_loss\tval_loss\tepochs\tseconds\tstatus\n");
    let mut last_error = None;
    let mut succeeded = 0;
    for (k, combo) in combos.iter().enumerate() {
        let spec = ModelSpec::default_variant(combo.cell, combo.activation);
        let config = train_config(o, combo.loss, combo.scaled_epochs(a.epoch_scale), cli.seed);
        let started = Instant::now();
        let outcome = config.validate().and_then(|_| train(&spec, &splits, &config));
        let seconds = if o.wall_time {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };
        let _ = write!(report, "{}\t{}\t{}\t", combo.cell, combo.loss, combo.activation);
        match outcome {
            Ok((params, mut history)) => {
                let dir = cli.out_dir.join(format!("combo-{}", k + 1));
                let checkpoint_path = dir.join(CHECKPOINT_FILE);
                let checkpoint = Checkpoint {
                    params,
                    normalizer: splits.normalizer.clone(),
                    init_seed: cli.seed,
                    train_seed: cli.seed,
                };
                write_file(&checkpoint_path, &checkpoint.to_text())?;
                history.checkpoint = Some(checkpoint_path);
                write_file(&dir.join(HISTORY_FILE), &history.to_tsv())?;
                let val = history
                    .final_val_loss()
                    .map_or_else(|| "nan".to_string(), |v| format!("{v:.4}"));
                let _ = writeln!(
                    report,
                    "{:.4}\t{val}\t{}\t{seconds:.1}\tok",
                    history.final_train_loss().unwrap_or(f64::NAN),
                    history.epochs.len()
                );
                succeeded += 1;
            }
            Err(e) => {
                let msg = e.to_string().replace(['\t', '\n'], " ");
                let _ = writeln!(report, "nan\tnan\t0\t{seconds:.1}\tfailed: {msg}");
                eprintln!("combo {} failed: {msg}", k + 1);
                last_error = Some(e);
            }
        }
    }
    let path = cli.out_dir.join(GRID_REPORT_FILE);
    write_file(&path, &report)?;
    print!("{report}");
    match last_error {
        Some(e) if succeeded == 0 => Err(e.into()),
        _ => Ok(()),
    }
}

fn evaluate_cmd(cli: &Cli, a: &EvaluateArgs) -> Result<(), CliError> {
    let checkpoint = Checkpoint::load(&a.checkpoint)?;
    let records = parse_dataset(&a.data)?;
    let ids: Vec<usize> = match a.split {
        Subset::All => (0..records.len()).collect(),
        subset => {
            let Some(path) = &a.splits else {
                return Err(CliError::usage("--split train/val/test needs --splits"));
            };
            let manifest = load_split(path, records.len())?;
            match subset {
                Subset::Train => manifest.train,
                Subset::Val => manifest.val,
                _ => manifest.test,
            }
        }
    };
    let metrics = predict_records(&checkpoint, &records, &ids, a.loss.into())?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "# loss={} value={:e} sequences={}",
        metrics.loss_kind,
        metrics.loss,
        ids.len()
    );
    out.push_str("id\tlength\tdistance\n");
    for (&id, d) in ids.iter().zip(&metrics.distances) {
        let _ = writeln!(out, "{id}\t{}\t{d:e}", records[id].len());
    }
    let path = a.out.clone().unwrap_or_else(|| cli.out_dir.join("metrics.tsv"));
    write_file(&path, &out)?;
    println!(
        "{} loss {:.6} over {} sequences -> {}",
        metrics.loss_kind,
        metrics.loss,
        ids.len(),
        path.display()
    );
    Ok(())
}

fn predict(cli: &Cli, a: &PredictArgs) -> Result<(), CliError> {
    let checkpoint = Checkpoint::load(&a.checkpoint)?;
    let records = parse_dataset(&a.data)?;
    if let Some(&id) = a.ids.iter().find(|&&id| id >= records.len()) {
        return Err(CliError::data(format!(
            "unknown record id {id} (dataset has {} records)",
            records.len()
        )));
    }
    let metrics = predict_records(&checkpoint, &records, &a.ids, LossKind::Euclidean)?;
    let target = checkpoint.normalizer.as_ref().map(|n| n.target);
    let max_len = metrics.predictions.len() / a.ids.len();
    for (k, &id) in a.ids.iter().enumerate() {
        let record = &records[id];
        let predicted = &metrics.predictions[k * max_len..k * max_len + record.len()];
        let mut out = String::from("actual\tpredicted\n");
        for (actual, &p) in record.weight.iter().zip(predicted) {
            let p = target.map_or(p, |t| t.invert(p));
            let _ = writeln!(out, "{actual}\t{p}");
        }
        write_file(&cli.out_dir.join(format!("pred_{id}.tsv")), &out)?;
    }
    println!("wrote {} prediction files to {}", a.ids.len(), cli.out_dir.display());
    Ok(())
}

fn gradcheck(cli: &Cli, a: &GradcheckArgs) -> Result<(), CliError> {
    let report = run_gradcheck(cli.seed, a.h, a.tol)?;
    println!("{report}");
    if report.passed() {
        return Ok(());
    }
    let worst = report.worst().expect("four cases");
    Err(CliError::numerical(format!(
        "{} {} exceeds tolerance: relative error {:.3e} at coordinate {}",
        worst.cell, worst.loss, worst.max_rel_error, worst.worst_index
    )))
}
