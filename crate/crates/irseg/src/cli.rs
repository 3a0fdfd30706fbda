//! Command implementations behind the `irseg` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use irseg_core::dataset::Split;
use irseg_core::ensemble::{majority_vote, select_subset, vote};
use irseg_core::eval::tune_lambda;
use irseg_core::model::{ModelKind, SegmentationModel};
use irseg_core::synth::generate;
use serde::{Deserialize, Serialize};

use crate::atomic::{write_atomic, write_json};
use crate::bench::bench;
use crate::config::RunConfig;
use crate::cv::{fit_selected, loo_cv};
use crate::data::{training_frames, Dataset, LabeledFrame};
use crate::error::{Error, Result};
use crate::manifest::load_dataset;
use crate::modelio::{EnsembleFile, EvaluatedSubset, ModelFile};
use crate::pgm::{load_frame, load_mask, mask_bytes, posterior_bytes};
use crate::segment::{render_png, score, segment_frame, Score};
use crate::synthio::write_scene;
use crate::SCHEMA_VERSION;

#[derive(Debug, Parser)]
#[command(name = "irseg", version, about = "Cloud segmentation of infrared sky images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth(Common),
    /// Fit one model on the training split.
    Train(TrainArgs),
    /// Leave-one-out cross-validation over the configured grid.
    Cv(TrainArgs),
    /// Segment frames with a fitted model.
    Segment(SegmentArgs),
    /// Time per-frame segmentation.
    Bench(BenchArgs),
    /// Select and apply a voting ensemble.
    Vote(VoteArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset manifest (CSV).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory of clear-sky frames for the window model.
    #[arg(long)]
    pub clear_sky_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Model family, e.g. `gda`, `icm-mrf`, `svc`.
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub common: Common,
    /// Fitted model file.
    #[arg(long = "model-file")]
    pub model_file: PathBuf,
    /// Frames to segment; without it the manifest split is used.
    #[arg(long = "frame")]
    pub frames: Vec<PathBuf>,
    /// Preceding frame of each `--frame`, in the same order.
    #[arg(long = "previous")]
    pub previous: Vec<PathBuf>,
    /// Ground-truth mask of each `--frame`, in the same order.
    #[arg(long = "labels")]
    pub labels: Vec<PathBuf>,
    /// Manifest split to segment.
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Also write an 8-bit PNG render per frame.
    #[arg(long)]
    pub png: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "model-file")]
    pub model_file: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value = "test")]
    pub split: String,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VoteArgs {
    #[command(flatten)]
    pub common: Common,
    /// Candidate model files (2 to 10).
    #[arg(long = "model-file", num_args = 1.., required = true)]
    pub models: Vec<PathBuf>,
    /// Manifest split used for validation; all entries when absent.
    #[arg(long)]
    pub split: Option<String>,
    /// Average hard member labels instead of posteriors.
    #[arg(long)]
    pub majority: bool,
}

/// Loads the config file (if any) and applies flag overrides.
pub fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(m) = &common.manifest {
        cfg.manifest = Some(m.clone());
    }
    if let Some(d) = &common.clear_sky_dir {
        cfg.clear_sky_dir = Some(d.clone());
    }
    cfg.apply_seed();
    Ok(cfg)
}

fn parse_split(s: &str) -> Result<Split> {
    Split::parse(s).map_err(|e| Error::Config(e.to_string()))
}

fn dataset(cfg: &RunConfig) -> Result<Dataset> {
    let manifest = cfg
        .manifest
        .as_deref()
        .ok_or_else(|| Error::Config("no manifest given (config `manifest` or --manifest)".into()))?;
    load_dataset(manifest, cfg.site, cfg.clear_sky_dir.as_deref())
}

fn model_kind(cfg: &mut RunConfig, flag: &Option<String>) -> Result<ModelKind> {
    if let Some(name) = flag {
        cfg.model = ModelKind::parse(name).ok_or_else(|| Error::Config(format!("unknown model `{name}`")))?;
    }
    Ok(cfg.model)
}

pub fn cmd_synth(common: &Common) -> Result<PathBuf> {
    let cfg = resolve_config(common)?;
    let scene = generate(&cfg.synth, &cfg.site)?;
    write_scene(&cfg.out, &scene, &cfg.synth, &cfg.site)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub schema_version: u32,
    pub model: ModelKind,
    pub frames: Vec<String>,
    pub lambda: f64,
    pub threshold: f64,
    /// J on the training frames at the tuned threshold.
    pub training_j: f64,
}

pub fn cmd_train(args: &TrainArgs) -> Result<PathBuf> {
    let mut cfg = resolve_config(&args.common)?;
    let kind = model_kind(&mut cfg, &args.model)?;
    let ds = dataset(&cfg)?;
    let train = ds.indices(Split::Train);
    if train.is_empty() {
        return Err(Error::Data("manifest has no training entries".into()));
    }
    let fs = ds.features()?;
    let designs = fs.design(&cfg.features, &train)?;
    let frames = training_frames(&designs, train.iter().map(|&i| &ds.frames[i]))
        .ok_or_else(|| Error::Data("training frames need labels".into()))?;
    let mut model = SegmentationModel::fit(kind, cfg.features, &cfg.params, &frames)?;
    let tuned = model.tune_on(&frames, &cfg.lambda.values()?)?;
    let out = cfg.out.join("model.json");
    ModelFile::new(model, &ds.pipeline()?).save(&out)?;
    write_json(
        &cfg.out.join("train_log.json"),
        &TrainLog {
            schema_version: SCHEMA_VERSION,
            model: kind,
            frames: train.iter().map(|&i| ds.frames[i].name.clone()).collect(),
            lambda: tuned.lambda,
            threshold: tuned.threshold,
            training_j: tuned.j,
        },
    )?;
    Ok(out)
}

pub fn cmd_cv(args: &TrainArgs) -> Result<PathBuf> {
    let mut cfg = resolve_config(&args.common)?;
    let kind = model_kind(&mut cfg, &args.model)?;
    let ds = dataset(&cfg)?;
    let train = ds.indices(Split::Train);
    let fs = ds.features()?;
    let (report, timings) = loo_cv(&ds, &fs, &train, kind, &cfg.params, &cfg.cv, &cfg.lambda.values()?)?;
    write_json(&cfg.out.join("cv_report.json"), &report)?;
    write_atomic(&cfg.out.join("cv_report.csv"), report.to_csv(None)?.as_bytes())?;
    write_json(&cfg.out.join("cv_timings.json"), &timings)?;
    write_atomic(&cfg.out.join("cv_timings.csv"), report.to_csv(Some(&timings))?.as_bytes())?;
    let model = fit_selected(&ds, &fs, &train, &report)?;
    let out = cfg.out.join("model.json");
    ModelFile::new(model, &ds.pipeline()?).save(&out)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub name: String,
    pub score: Option<Score>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub schema_version: u32,
    pub model: ModelKind,
    pub threshold: f64,
    pub frames: Vec<FrameReport>,
    /// J over all scored pixels pooled.
    pub pooled: Option<Score>,
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "frame".into())
}

fn frames_from_flags(args: &SegmentArgs) -> Result<Vec<LabeledFrame>> {
    if !args.previous.is_empty() && args.previous.len() != args.frames.len() {
        return Err(Error::Config("--previous must be given once per --frame".into()));
    }
    if !args.labels.is_empty() && args.labels.len() != args.frames.len() {
        return Err(Error::Config("--labels must be given once per --frame".into()));
    }
    args.frames
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(LabeledFrame {
                name: stem(p),
                frame: load_frame(p)?,
                previous: args.previous.get(i).map(|q| load_frame(q)).transpose()?,
                mask: args.labels.get(i).map(|q| load_mask(q)).transpose()?,
                timestamp: 0,
                split: Split::Test,
            })
        })
        .collect()
}

fn split_frames(cfg: &RunConfig, split: Option<Split>) -> Result<Vec<LabeledFrame>> {
    let ds = dataset(cfg)?;
    Ok(ds
        .frames
        .into_iter()
        .filter(|f| split.is_none_or(|s| f.split == s))
        .collect())
}

pub fn cmd_segment(args: &SegmentArgs) -> Result<SegmentReport> {
    let cfg = resolve_config(&args.common)?;
    let file = ModelFile::load(&args.model_file)?;
    let pipeline = file.pipeline()?;
    let frames = if args.frames.is_empty() {
        split_frames(&cfg, Some(parse_split(&args.split)?))?
    } else {
        frames_from_flags(args)?
    };
    if frames.is_empty() {
        return Err(Error::Data("no frames to segment".into()));
    }
    let mut reports = Vec::with_capacity(frames.len());
    let (mut all_truth, mut all_pred) = (Vec::new(), Vec::new());
    for f in &frames {
        let r = segment_frame(&file.model, &pipeline, &f.frame, f.previous.as_ref(), f.mask.as_ref())?;
        write_atomic(
            &cfg.out.join(format!("{}_posterior.pgm", f.name)),
            &posterior_bytes(r.width, r.height, &r.posterior),
        )?;
        write_atomic(
            &cfg.out.join(format!("{}_mask.pgm", f.name)),
            &mask_bytes(r.width, r.height, &r.labels),
        )?;
        if args.png {
            render_png(&cfg.out.join(format!("{}.png", f.name)), r.width, r.height, &r.posterior, &r.labels)?;
        }
        if let Some(m) = &f.mask {
            all_truth.extend_from_slice(m.data());
            all_pred.extend_from_slice(&r.labels);
        }
        reports.push(FrameReport {
            name: f.name.clone(),
            score: r.score,
        });
    }
    let pooled = if all_truth.is_empty() {
        None
    } else {
        Some(score(&all_truth, &all_pred)?)
    };
    let report = SegmentReport {
        schema_version: SCHEMA_VERSION,
        model: file.model.kind,
        threshold: file.model.threshold,
        frames: reports,
        pooled,
    };
    write_json(&cfg.out.join("segment.json"), &report)?;
    Ok(report)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<PathBuf> {
    let cfg = resolve_config(&args.common)?;
    let file = ModelFile::load(&args.model_file)?;
    let frames = split_frames(&cfg, Some(parse_split(&args.split)?))?;
    let report = bench(&file.model, &file.pipeline()?, &frames, args.reps)?;
    let out = cfg.out.join("bench.json");
    write_json(&out, &report)?;
    Ok(out)
}

pub fn cmd_vote(args: &VoteArgs) -> Result<EnsembleFile> {
    let cfg = resolve_config(&args.common)?;
    if args.models.len() < 2 {
        return Err(Error::Config("voting needs at least two --model-file".into()));
    }
    let split = args.split.as_deref().map(parse_split).transpose()?;
    let frames = split_frames(&cfg, split)?;
    let files = args.models.iter().map(|p| ModelFile::load(p)).collect::<Result<Vec<_>>>()?;
    let mut maps: Vec<Vec<f64>> = vec![Vec::new(); files.len()];
    let mut truth = Vec::new();
    for f in &frames {
        let mask = f
            .mask
            .as_ref()
            .ok_or_else(|| Error::Data(format!("frame `{}` has no labels", f.name)))?;
        truth.extend_from_slice(mask.data());
        for (m, file) in maps.iter_mut().zip(&files) {
            let r = segment_frame(&file.model, &file.pipeline()?, &f.frame, f.previous.as_ref(), None)?;
            if args.majority {
                m.extend(r.labels.iter().map(|&l| f64::from(l)));
            } else {
                m.extend(r.posterior);
            }
        }
    }
    let grid = cfg.lambda.values()?;
    let refs: Vec<&[f64]> = maps.iter().map(Vec::as_slice).collect();
    let single_j = refs
        .iter()
        .map(|m| Ok(tune_lambda(m, &truth, &grid)?.j))
        .collect::<Result<Vec<f64>>>()?;
    let sel = select_subset(&refs, &truth, &grid)?;
    let members: Vec<&[f64]> = sel.ensemble.members.iter().map(|&i| refs[i]).collect();
    let combined = if args.majority {
        let hard: Vec<Vec<u8>> = members.iter().map(|m| m.iter().map(|&v| v as u8).collect()).collect();
        let h: Vec<&[u8]> = hard.iter().map(Vec::as_slice).collect();
        majority_vote(&h)?
    } else {
        vote(&members)?
    };
    let mut offset = 0;
    for f in &frames {
        let (w, h) = f.frame.shape();
        let p = &combined[offset..offset + w * h];
        offset += w * h;
        let labels: Vec<u8> = p.iter().map(|&v| u8::from(v > sel.ensemble.threshold)).collect();
        write_atomic(&cfg.out.join(format!("{}_vote_posterior.pgm", f.name)), &posterior_bytes(w, h, p))?;
        write_atomic(&cfg.out.join(format!("{}_vote_mask.pgm", f.name)), &mask_bytes(w, h, &labels))?;
    }
    let ens = EnsembleFile {
        schema_version: SCHEMA_VERSION,
        candidates: args.models.iter().map(|p| p.display().to_string()).collect(),
        members: sel.ensemble.members.clone(),
        lambda: sel.ensemble.lambda,
        threshold: sel.ensemble.threshold,
        validation_j: sel.tuned.j,
        single_j,
        evaluated: sel
            .evaluated
            .iter()
            .map(|(m, j)| EvaluatedSubset {
                members: m.clone(),
                j: *j,
            })
            .collect(),
    };
    ens.save(&cfg.out.join("ensemble.json"))?;
    Ok(ens)
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(c) => cmd_synth(c).map(drop),
        Command::Train(a) => cmd_train(a).map(drop),
        Command::Cv(a) => cmd_cv(a).map(drop),
        Command::Segment(a) => cmd_segment(a).map(drop),
        Command::Bench(a) => cmd_bench(a).map(drop),
        Command::Vote(a) => cmd_vote(a).map(drop),
    }
}
