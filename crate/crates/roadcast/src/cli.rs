//! Command-line pipeline: generate, prepare, train, evaluate, predict,
//! analyze, export.
//!
//! Every command is deterministic given (inputs, flags, seed), never
//! mutates its inputs, and writes all artifacts plus an echo of its fully
//! resolved configuration (`run_config.json`) into the declared output
//! directory. Exit codes: 0 success, 1 usage error, 2 data error,
//! 3 internal invariant violation.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::dataio;
use crate::dataset::{self, Manifest};
use crate::error::{Error, Result};
use crate::evaluation::{
    self, correlations, persistence_baseline, BoxplotReport, CategoryVar, MetricsReport,
    SplitMetrics, VariantMetrics,
};
use crate::features::{EncodingMode, HolidayCalendar};
use crate::network::{forward, ModelDims, ModelKind};
use crate::optimizer::{train_logged, EpochStats, TrainConfig, TrainHistory};

#[derive(Debug, Parser)]
#[command(
    name = "roadcast",
    version,
    about = "Traffic volume and speed forecasting with attention-augmented LSTMs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic 5-minute detector CSV (plus the holiday calendar used).
    Generate(GenerateArgs),
    /// Clean and aggregate a raw CSV, then build the windows dataset.
    Prepare(PrepareArgs),
    /// Train one model per cross-validation split on a prepared dataset.
    Train(TrainArgs),
    /// Evaluate trained checkpoints on their splits and write the metrics report.
    Evaluate(EvaluateArgs),
    /// Predict the next interval for one window of a prepared dataset.
    Predict(PredictArgs),
    /// Correlation matrix and box-plot statistics of a raw CSV.
    Analyze(AnalyzeArgs),
    /// Export plot data: loss curves, predicted-vs-actual series, scatter pairs.
    Export(ExportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    /// Generator config file (TOML key-value text; keys: days, base_volume,
    /// capacity, noise, holiday_file, seed, start_date). Defaults apply when
    /// omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory for data.csv, holidays.csv, run_config.json.
    #[arg(long)]
    pub output: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct PrepareArgs {
    /// Raw detector CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Interval of the prepared series in minutes.
    #[arg(long, default_value_t = 15)]
    pub interval: u32,
    /// Feature encoding: cyclic or onehot.
    #[arg(long, default_value = "cyclic")]
    pub encoding: String,
    /// Holiday calendar CSV (date,class); absent dates are non-holidays.
    #[arg(long)]
    pub holidays: Option<PathBuf>,
    /// Number of rolling-origin splits.
    #[arg(long, default_value_t = 3)]
    pub splits: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Prepared dataset directory (from `prepare`).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Model architecture: lstm or alstm.
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 2e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Train only this split (1-based); all splits when omitted.
    #[arg(long)]
    pub split: Option<usize>,
    /// Optional global-norm gradient clipping.
    #[arg(long)]
    pub clip_norm: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Prepared dataset directory.
    #[arg(long)]
    pub input: PathBuf,
    /// Checkpoint file or a directory containing checkpoint_*.json.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// Prepared dataset directory.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// 1-based window index; the last window when omitted.
    #[arg(long)]
    pub index: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Raw detector CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub interval: u32,
    #[arg(long)]
    pub holidays: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    /// Prepared dataset directory.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory holding checkpoints and training histories (from `train`).
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Prepare(args) => cmd_prepare(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Export(args) => cmd_export(args),
    }
}

fn ensure_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_run_config(dir: &Path, command: &str, args: &impl Serialize) -> Result<()> {
    #[derive(Serialize)]
    struct RunConfig<'a, T: Serialize> {
        command: &'a str,
        #[serde(flatten)]
        args: &'a T,
    }
    let path = dir.join("run_config.json");
    let text = serde_json::to_string_pretty(&RunConfig { command, args })
        .map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn interval_factor(interval: u32) -> Result<Option<u32>> {
    match interval {
        5 => Ok(None),
        15 => Ok(Some(3)),
        30 => Ok(Some(6)),
        other => Err(Error::InvalidArgument(format!(
            "interval must be 5, 15, or 30 minutes, got {other}"
        ))),
    }
}

fn load_holidays(path: &Option<PathBuf>) -> Result<HolidayCalendar> {
    match path {
        Some(p) => HolidayCalendar::load(p),
        None => Ok(HolidayCalendar::new()),
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let mut cfg = match &args.input {
        Some(path) => dataio::SynthConfig::load(path)?,
        None => dataio::SynthConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;

    let holidays = match &cfg.holiday_file {
        Some(p) => HolidayCalendar::load(p)?,
        None => dataio::default_holidays(cfg.start_date, cfg.days),
    };

    let series = dataio::generate_synthetic(&cfg, &holidays, cfg.seed)?;
    ensure_output_dir(&args.output)?;
    let records = dataio::series_to_records(&series, dataio::SYNTH_STATION_ID);
    let data_path = args.output.join("data.csv");
    dataio::write_records_csv(&records, &data_path)?;
    holidays.save(&args.output.join("holidays.csv"))?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        #[serde(flatten)]
        args: &'a GenerateArgs,
        effective: &'a dataio::SynthConfig,
    }
    write_run_config(&args.output, "generate", &Resolved { args: &args, effective: &cfg })?;

    println!(
        "generate: {} records over {} days -> {}",
        records.len(),
        cfg.days,
        data_path.display()
    );
    Ok(())
}

fn cmd_prepare(args: PrepareArgs) -> Result<()> {
    let encoding = EncodingMode::parse(&args.encoding)?;
    let factor = interval_factor(args.interval)?;
    let holidays = load_holidays(&args.holidays)?;

    ensure_output_dir(&args.output)?;
    let report = dataio::ingest(&args.input)?;
    dataio::write_rejects_csv(&report.rejects, &args.output.join("rejects.csv"))?;
    if !report.rejects.is_empty() {
        eprintln!(
            "prepare: {} malformed rows excluded (see rejects.csv)",
            report.rejects.len()
        );
    }

    let (series5, summary) = dataio::clean(&report.records)?;
    summary.write_csv(&args.output.join("cleaning_summary.csv"))?;
    let series = match factor {
        None => series5,
        Some(f) => dataio::aggregate(&series5, f)?,
    };

    let ds = dataset::prepare_dataset(&series, &holidays, encoding, args.splits)?;
    let manifest = dataset::save_dataset(&ds, &args.output)?;
    write_run_config(&args.output, "prepare", &args)?;

    println!(
        "prepare: {} windows at {} min, input dim {} ({} encoding), {} gap slots",
        manifest.window_count,
        manifest.interval_minutes,
        manifest.input_dim,
        manifest.encoding,
        manifest.series_slots - manifest.series_observed,
    );
    for (i, c) in manifest.split_counts.iter().enumerate() {
        println!(
            "  split {}: train {} / valid {} / test {}",
            i + 1,
            c.train,
            c.valid,
            c.test
        );
    }
    Ok(())
}

fn checkpoint_name(kind: ModelKind, split: usize) -> String {
    format!("checkpoint_{}_split{}.json", kind.label(), split)
}

fn history_name(kind: ModelKind, split: usize) -> String {
    format!("history_{}_split{}.csv", kind.label(), split)
}

fn write_history_csv(history: &TrainHistory, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    wtr.write_record(["epoch", "train_mse_x1000", "valid_mse_x1000"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for (i, e) in history.epochs.iter().enumerate() {
        wtr.write_record([
            (i + 1).to_string(),
            format!("{}", e.train_mse * 1000.0),
            e.valid_mse.map(|v| format!("{}", v * 1000.0)).unwrap_or_default(),
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let kind = ModelKind::parse(&args.model)?;
    let (ds, manifest) = dataset::load_dataset(&args.input)?;
    let dims = ModelDims::for_encoding(ds.encoding);
    ensure_output_dir(&args.output)?;

    let k = ds.plan.splits.len();
    let split_numbers: Vec<usize> = match args.split {
        Some(s) if s >= 1 && s <= k => vec![s],
        Some(s) => {
            return Err(Error::InvalidArgument(format!(
                "split {s} out of range 1..={k}"
            )))
        }
        None => (1..=k).collect(),
    };

    let mut cfg = TrainConfig::new(kind, dims);
    cfg.epochs = args.epochs;
    cfg.batch_size = args.batch_size;
    cfg.lr = args.lr;
    cfg.seed = args.seed;
    cfg.clip_norm = args.clip_norm;

    let probe = crate::network::ModelParams::zeros(kind, dims);
    println!(
        "train: {} model, {} trainable parameters, {} epochs, batch {}, lr {}",
        kind,
        probe.param_count(),
        cfg.epochs,
        cfg.batch_size,
        cfg.lr
    );

    for &split in &split_numbers {
        let (train_w, valid_w, _) = ds.split_sets(split - 1)?;
        println!(
            "split {split}: {} train / {} valid windows",
            train_w.len(),
            valid_w.len()
        );
        let (params, history) = train_logged(&train_w, &valid_w, &cfg, |epoch, stats: &EpochStats| {
            match stats.valid_mse {
                Some(v) => println!(
                    "epoch {epoch} train_mse_x1000 {:.6} valid_mse_x1000 {:.6}",
                    stats.train_mse * 1000.0,
                    v * 1000.0
                ),
                None => println!("epoch {epoch} train_mse_x1000 {:.6}", stats.train_mse * 1000.0),
            }
        })?;

        let ckpt = Checkpoint::new(
            &params,
            ds.encoding,
            ds.interval_minutes,
            cfg.seed,
            split,
            manifest.windows_sha256.clone(),
            ds.normalizer(split - 1)?.clone(),
        );
        ckpt.save(&args.output.join(checkpoint_name(kind, split)))?;
        write_history_csv(&history, &args.output.join(history_name(kind, split)))?;
    }

    write_run_config(&args.output, "train", &args)?;
    Ok(())
}

/// Loads one checkpoint file, or every `checkpoint_*.json` in a directory,
/// in lexicographic order.
fn collect_checkpoints(path: &Path) -> Result<Vec<(PathBuf, Checkpoint)>> {
    let mut paths = Vec::new();
    if path.is_dir() {
        let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
        for entry in entries {
            let p = entry.map_err(|e| Error::io(path, e))?.path();
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.starts_with("checkpoint_") && name.ends_with(".json") {
                paths.push(p);
            }
        }
        paths.sort();
    } else {
        paths.push(path.to_path_buf());
    }
    if paths.is_empty() {
        return Err(Error::Data(format!(
            "no checkpoint_*.json files in {}",
            path.display()
        )));
    }
    paths
        .into_iter()
        .map(|p| Checkpoint::load(&p).map(|c| (p, c)))
        .collect()
}

fn check_compatible(ckpt: &Checkpoint, manifest: &Manifest, path: &Path) -> Result<()> {
    if ckpt.dataset_sha256 != manifest.windows_sha256 {
        return Err(Error::Data(format!(
            "{}: checkpoint was trained on dataset {} but this dataset is {}",
            path.display(),
            &ckpt.dataset_sha256[..12.min(ckpt.dataset_sha256.len())],
            &manifest.windows_sha256[..12]
        )));
    }
    if ckpt.encoding != manifest.encoding || ckpt.interval_minutes != manifest.interval_minutes {
        return Err(Error::Data(format!(
            "{}: checkpoint encoding/interval ({}, {} min) do not match dataset ({}, {} min)",
            path.display(),
            ckpt.encoding,
            ckpt.interval_minutes,
            manifest.encoding,
            manifest.interval_minutes
        )));
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let (ds, manifest) = dataset::load_dataset(&args.input)?;
    let checkpoints = collect_checkpoints(&args.checkpoint)?;
    ensure_output_dir(&args.output)?;

    let mut by_kind: Vec<(ModelKind, Vec<SplitMetrics>)> = Vec::new();
    for (path, ckpt) in &checkpoints {
        check_compatible(ckpt, &manifest, path)?;
        let split = ckpt.split;
        if split < 1 || split > ds.plan.splits.len() {
            return Err(Error::Data(format!(
                "{}: split {split} not in this dataset's plan",
                path.display()
            )));
        }
        let ranges = ds.plan.splits[split - 1];
        let params = ckpt.to_model_params()?;
        let sets = [
            ds.model_windows(&ckpt.normalizer, ranges.train())?,
            ds.model_windows(&ckpt.normalizer, ranges.valid())?,
            ds.model_windows(&ckpt.normalizer, ranges.test())?,
        ];
        let metrics = SplitMetrics {
            split,
            train: evaluation::evaluate(&params, &sets[0])?,
            valid: evaluation::evaluate(&params, &sets[1])?,
            test: evaluation::evaluate(&params, &sets[2])?,
        };
        println!(
            "{} split {}: train {:.3} valid {:.3} test {:.3} (persistence test {:.3})",
            ckpt.kind,
            split,
            metrics.train,
            metrics.valid,
            metrics.test,
            persistence_baseline(&sets[2])?
        );
        match by_kind.iter_mut().find(|(k, _)| *k == ckpt.kind) {
            Some((_, v)) => v.push(metrics),
            None => by_kind.push((ckpt.kind, vec![metrics])),
        }
    }

    let report = MetricsReport {
        interval_minutes: ds.interval_minutes,
        encoding: ds.encoding,
        variants: by_kind
            .into_iter()
            .map(|(kind, splits)| VariantMetrics::new(kind, splits))
            .collect(),
    };
    report.write_csv(&args.output.join("report.csv"))?;
    let json_path = args.output.join("report.json");
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    write_run_config(&args.output, "evaluate", &args)?;

    for v in &report.variants {
        println!(
            "{} average: train {:.3} valid {:.3} test {:.3}",
            v.kind, v.average.train, v.average.valid, v.average.test
        );
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let (ds, manifest) = dataset::load_dataset(&args.input)?;
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    check_compatible(&ckpt, &manifest, &args.checkpoint)?;
    if ds.windows.is_empty() {
        return Err(Error::Data("dataset has no windows".into()));
    }

    let index = match args.index {
        Some(i) if i >= 1 && i <= ds.windows.len() => i,
        Some(i) => {
            return Err(Error::InvalidArgument(format!(
                "index {i} out of range 1..={}",
                ds.windows.len()
            )))
        }
        None => ds.windows.len(),
    };
    let raw = &ds.windows[index - 1];
    let params = ckpt.to_model_params()?;
    let window = dataset::raw_to_model(raw, &ckpt.normalizer, ckpt.encoding)?;
    let (preds, _) = forward(&window, &params)?;
    let volume = ckpt.normalizer.volume.invert(preds[0]);
    let speed = ckpt.normalizer.speed.invert(preds[1]);

    ensure_output_dir(&args.output)?;
    let path = args.output.join("predictions.csv");
    let mut wtr = csv::Writer::from_path(&path).map_err(|e| Error::Format(e.to_string()))?;
    wtr.write_record([
        "timestamp",
        "predicted_volume_vph",
        "predicted_speed_kmh",
        "actual_volume_vph",
        "actual_speed_kmh",
    ])
    .map_err(|e| Error::Format(e.to_string()))?;
    wtr.write_record([
        dataio::format_timestamp(raw.timestamp),
        format!("{volume}"),
        format!("{speed}"),
        format!("{}", raw.target[0]),
        format!("{}", raw.target[1]),
    ])
    .map_err(|e| Error::Format(e.to_string()))?;
    wtr.flush().map_err(|e| Error::io(&path, e))?;
    write_run_config(&args.output, "predict", &args)?;

    println!(
        "predict: window {index} at {} -> volume {:.1} veh/h, speed {:.1} km/h (actual {:.1}, {:.1})",
        dataio::format_timestamp(raw.timestamp),
        volume,
        speed,
        raw.target[0],
        raw.target[1]
    );
    Ok(())
}

fn write_correlations_csv(m: &[[f64; 4]; 4], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    let mut header = vec!["channel".to_string()];
    header.extend(evaluation::CORRELATION_CHANNELS.iter().map(|s| s.to_string()));
    wtr.write_record(&header).map_err(|e| Error::Format(e.to_string()))?;
    for (i, name) in evaluation::CORRELATION_CHANNELS.iter().enumerate() {
        let mut row = vec![name.to_string()];
        for j in 0..4 {
            row.push(if m[i][j].is_nan() {
                "NA".to_string()
            } else {
                format!("{}", m[i][j])
            });
        }
        wtr.write_record(&row).map_err(|e| Error::Format(e.to_string()))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_boxplots_csv(reports: &[BoxplotReport], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::Format(e.to_string()))?;
    wtr.write_record(["variable", "level", "min", "q1", "median", "q3", "max", "count"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for r in reports {
        for l in &r.levels {
            wtr.write_record([
                r.variable.clone(),
                l.level.clone(),
                format!("{}", l.min),
                format!("{}", l.q1),
                format!("{}", l.median),
                format!("{}", l.q3),
                format!("{}", l.max),
                l.count.to_string(),
            ])
            .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let factor = interval_factor(args.interval)?;
    let holidays = load_holidays(&args.holidays)?;
    ensure_output_dir(&args.output)?;

    let report = dataio::ingest(&args.input)?;
    dataio::write_rejects_csv(&report.rejects, &args.output.join("rejects.csv"))?;
    let (series5, summary) = dataio::clean(&report.records)?;
    summary.write_csv(&args.output.join("cleaning_summary.csv"))?;
    let series = match factor {
        None => series5,
        Some(f) => dataio::aggregate(&series5, f)?,
    };

    let m = correlations(&series)?;
    write_correlations_csv(&m, &args.output.join("correlations.csv"))?;

    let mut reports = Vec::new();
    for var in CategoryVar::ALL {
        let r = evaluation::boxplot_stats(&series, var, &holidays)?;
        if !r.skipped.is_empty() {
            println!("analyze: {} has empty levels: {}", r.variable, r.skipped.join(", "));
        }
        reports.push(r);
    }
    write_boxplots_csv(&reports, &args.output.join("boxplots.csv"))?;
    write_run_config(&args.output, "analyze", &args)?;

    println!(
        "analyze: {} observed intervals at {} min -> correlations.csv, boxplots.csv",
        series.observed_count(),
        args.interval
    );
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    let (ds, manifest) = dataset::load_dataset(&args.input)?;
    let checkpoints = collect_checkpoints(&args.checkpoint)?;
    ensure_output_dir(&args.output)?;

    // Consolidated per-epoch loss curves from the training histories.
    let loss_path = args.output.join("loss_curves.csv");
    let mut wtr = csv::Writer::from_path(&loss_path).map_err(|e| Error::Format(e.to_string()))?;
    wtr.write_record(["model", "split", "epoch", "train_mse_x1000", "valid_mse_x1000"])
        .map_err(|e| Error::Format(e.to_string()))?;
    let mut histories = 0;
    for (_, ckpt) in &checkpoints {
        let hist_path = args.checkpoint.join(history_name(ckpt.kind, ckpt.split));
        if !hist_path.is_file() {
            continue;
        }
        histories += 1;
        let mut rdr = csv::Reader::from_path(&hist_path).map_err(|e| Error::Format(e.to_string()))?;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            wtr.write_record([
                ckpt.kind.label().to_string(),
                ckpt.split.to_string(),
                rec[0].to_string(),
                rec[1].to_string(),
                rec[2].to_string(),
            ])
            .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    wtr.flush().map_err(|e| Error::io(&loss_path, e))?;
    if histories == 0 {
        println!("export: no history_*.csv found next to the checkpoints; loss_curves.csv is empty");
    }

    // Predicted-vs-actual series and scatter pairs over each test range.
    for (path, ckpt) in &checkpoints {
        check_compatible(ckpt, &manifest, path)?;
        let ranges = ds.plan.splits[ckpt.split - 1];
        let params = ckpt.to_model_params()?;

        let series_path = args
            .output
            .join(format!("series_{}_split{}.csv", ckpt.kind.label(), ckpt.split));
        let scatter_path = args
            .output
            .join(format!("scatter_{}_split{}.csv", ckpt.kind.label(), ckpt.split));
        let mut series_wtr =
            csv::Writer::from_path(&series_path).map_err(|e| Error::Format(e.to_string()))?;
        let mut scatter_wtr =
            csv::Writer::from_path(&scatter_path).map_err(|e| Error::Format(e.to_string()))?;
        series_wtr
            .write_record([
                "timestamp",
                "actual_volume_vph",
                "predicted_volume_vph",
                "actual_speed_kmh",
                "predicted_speed_kmh",
            ])
            .map_err(|e| Error::Format(e.to_string()))?;
        scatter_wtr
            .write_record(["component", "actual", "predicted"])
            .map_err(|e| Error::Format(e.to_string()))?;

        for raw in &ds.windows[ranges.test()] {
            let window = dataset::raw_to_model(raw, &ckpt.normalizer, ckpt.encoding)?;
            let (preds, _) = forward(&window, &params)?;
            let pv = ckpt.normalizer.volume.invert(preds[0]);
            let ps = ckpt.normalizer.speed.invert(preds[1]);
            series_wtr
                .write_record([
                    dataio::format_timestamp(raw.timestamp),
                    format!("{}", raw.target[0]),
                    format!("{pv}"),
                    format!("{}", raw.target[1]),
                    format!("{ps}"),
                ])
                .map_err(|e| Error::Format(e.to_string()))?;
            scatter_wtr
                .write_record(["volume".into(), format!("{}", raw.target[0]), format!("{pv}")])
                .map_err(|e| Error::Format(e.to_string()))?;
            scatter_wtr
                .write_record(["speed".into(), format!("{}", raw.target[1]), format!("{ps}")])
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        series_wtr.flush().map_err(|e| Error::io(&series_path, e))?;
        scatter_wtr.flush().map_err(|e| Error::io(&scatter_path, e))?;
    }

    write_run_config(&args.output, "export", &args)?;
    println!("export: wrote loss_curves.csv and {} series/scatter file pairs", checkpoints.len());
    Ok(())
}
