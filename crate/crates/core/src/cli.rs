//! Command-line front end: `ingest`, `stats`, `aim` and `eval`.
//!
//! Every command reads a [`RunConfig`] and writes its results under `--out`.
//! Written file paths go to stdout, diagnostics to stderr.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::aim::{
    extract_interactions, sweep, AimParams, BufferRule, InteractionPair, MeasureSeries, Normalizers, RhoConfig,
};
use crate::analytics::{
    class_distribution, class_distribution_table, detect_split_candidates, lost_stats, lost_stats_table,
    overlap_report, overlap_table, split_candidates_table, split_chains,
};
use crate::config::RunConfig;
use crate::dataset_io::{DatasetKind, Split, Trajectory};
use crate::error::{Error, Result};
use crate::eval::{eval_table, evaluate, read_predictions, Predictor};
use crate::ingest::read_inputs;
use crate::mi_edge::MiConfig;
use crate::preprocess::{filter_lost, preprocess, LostPolicy, TrajectoryWindow};
use crate::report::{Cell, ExportFormat, Table};
use crate::store::{write_store, Store, VideoEntry};

#[derive(Debug, Parser)]
#[command(
    name = "trajaim",
    version,
    about = "Trajectory dataset preprocessing, interaction measures and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StoreArg {
    /// Trajectory store; overrides `store` in the config.
    #[arg(long)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse raw annotations into a trajectory store at `--out`.
    Ingest {
        #[command(flatten)]
        common: Common,
    },
    /// Lost-annotation, class, overlap and split-candidate reports.
    Stats {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        store: StoreArg,
    },
    /// Per-frame MI, rho and AIM series for selected pairs.
    Aim {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        store: StoreArg,
        /// Directed pair of track ids, `I,J`.
        #[arg(long, conflicts_with = "top_k", required_unless_present = "top_k")]
        pair: Option<String>,
        /// Export the K directed pairs with the largest final AIM.
        #[arg(long)]
        top_k: Option<usize>,
        /// Restrict to one video, `scene/k`.
        #[arg(long)]
        video: Option<String>,
        /// Comma-separated decay values to sweep.
        #[arg(long, value_delimiter = ',')]
        sweep_delta: Vec<f64>,
        /// Comma-separated kinematics windows (native frames) to sweep.
        #[arg(long, value_delimiter = ',')]
        sweep_n: Vec<usize>,
    },
    /// ADE/FDE of a predictor over preprocessed windows.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        store: StoreArg,
        /// `cv` for constant velocity, or a JSON-lines predictions file.
        #[arg(long, default_value = "cv")]
        predictor: String,
        /// Comma-separated lost policies to compare; the config's policy by default.
        #[arg(long, value_delimiter = ',')]
        lost_policy: Vec<LostPolicy>,
        /// Only evaluate videos assigned to this split.
        #[arg(long)]
        split: Option<Split>,
    },
}

/// Files written by a command and diagnostics meant for stderr.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub written: Vec<PathBuf>,
    pub diagnostics: Vec<String>,
}

pub fn run(cli: Cli) -> Result<CommandOutput> {
    let load = |c: &Common, s: Option<&StoreArg>| -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&c.config)?;
        if let Some(p) = s.and_then(|s| s.store.clone()) {
            cfg.store = Some(p);
        }
        Ok(cfg)
    };
    match cli.command {
        Command::Ingest { common } => cmd_ingest(&load(&common, None)?, &common.out),
        Command::Stats { common, store } => cmd_stats(&load(&common, Some(&store))?, &common.out),
        Command::Aim {
            common,
            store,
            pair,
            top_k,
            video,
            sweep_delta,
            sweep_n,
        } => {
            let selector = match (pair, top_k) {
                (Some(p), _) => parse_pair(&p)?,
                (None, Some(k)) => PairSelector::TopK(k),
                (None, None) => return Err(Error::Config("one of --pair or --top-k is required".into())),
            };
            let req = AimRequest {
                selector,
                video: video.as_deref().map(parse_video).transpose()?,
                sweep_delta,
                sweep_n,
            };
            cmd_aim(&load(&common, Some(&store))?, &common.out, &req)
        }
        Command::Eval {
            common,
            store,
            predictor,
            lost_policy,
            split,
        } => {
            let req = EvalRequest {
                predictor: if predictor == "cv" {
                    PredictorChoice::ConstantVelocity
                } else {
                    PredictorChoice::File(PathBuf::from(predictor))
                },
                lost_policies: lost_policy,
                split,
            };
            cmd_eval(&load(&common, Some(&store))?, &common.out, &req)
        }
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_table(dir: &Path, stem: &str, table: &Table, format: ExportFormat) -> Result<PathBuf> {
    create_dir(dir)?;
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    table.write(format, std::io::BufWriter::new(file))?;
    Ok(path)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn open_store(cfg: &RunConfig) -> Result<Store> {
    let store = Store::open(cfg.store_dir()?)?;
    if store.dataset() != cfg.dataset {
        return Err(Error::Config(format!(
            "store holds {} data but the config says {}",
            store.dataset(),
            cfg.dataset
        )));
    }
    if store.is_empty() {
        return Err(Error::Config(format!("store {} is empty", store.dir.display())));
    }
    Ok(store)
}

/// Parses the configured inputs and writes a store to `out`.
pub fn cmd_ingest(cfg: &RunConfig, out: &Path) -> Result<CommandOutput> {
    if cfg.inputs.is_empty() {
        return Err(Error::Config("no inputs configured".into()));
    }
    let registry = cfg.load_registry()?;
    let videos = read_inputs(cfg.dataset, &cfg.inputs, &registry)?;
    let manifest = write_store(out, cfg.dataset, &videos)?;
    Ok(CommandOutput {
        written: std::iter::once(out.join(crate::store::MANIFEST_FILE))
            .chain(manifest.videos.iter().map(|v| out.join(&v.file)))
            .collect(),
        diagnostics: manifest
            .videos
            .iter()
            .flat_map(|v| {
                v.diagnostics
                    .iter()
                    .map(move |d| format!("{}/{}: track {}: {}", v.scene, v.video, d.track_id, d.message))
            })
            .collect(),
    })
}

/// Lost statistics, class distribution, scene overlaps (SDD) and
/// split-trajectory candidates.
pub fn cmd_stats(cfg: &RunConfig, out: &Path) -> Result<CommandOutput> {
    let store = open_store(cfg)?;
    let registry = cfg.load_registry()?;
    let fmt = cfg.export_format;
    let videos: Vec<(&VideoEntry, Vec<Trajectory>)> = store
        .manifest
        .videos
        .par_iter()
        .map(|v| Ok((v, store.load_video(v)?)))
        .collect::<Result<_>>()?;
    let all: Vec<Trajectory> = videos.iter().flat_map(|(_, t)| t.iter().cloned()).collect();

    let mut written = vec![
        write_table(out, "lost_stats", &lost_stats_table(&lost_stats(&all)), fmt)?,
        write_table(
            out,
            "class_distribution",
            &class_distribution_table(&class_distribution(&all, &registry)),
            fmt,
        )?,
    ];
    if cfg.dataset == DatasetKind::Sdd {
        let rows = overlap_report(&registry, DatasetKind::Sdd);
        written.push(write_table(out, "overlap", &overlap_table(&rows), fmt)?);
    }

    let per_video: Vec<_> = videos
        .par_iter()
        .map(|(v, trajs)| {
            let filtered: Vec<Trajectory> = trajs
                .iter()
                .flat_map(|t| filter_lost(t, LostPolicy::FilterKeepFirst))
                .collect();
            let cands = detect_split_candidates(&filtered, cfg.splits);
            let chains = split_chains(&cands);
            (*v, cands, chains)
        })
        .collect();
    let mut cand_table = Table::new(["scene", "video"]);
    let mut chain_table = Table::new(["scene", "video", "tracks", "chain"]);
    for (v, cands, chains) in &per_video {
        let t = split_candidates_table(cands);
        if cand_table.columns.len() == 2 {
            cand_table.columns.extend(t.columns.iter().cloned());
        }
        for row in t.rows {
            let mut r = vec![v.scene.clone().into(), Cell::from(v.video as i64)];
            r.extend(row);
            cand_table.push(r);
        }
        for c in chains {
            let text: Vec<String> = c.iter().map(i64::to_string).collect();
            chain_table.push(vec![
                v.scene.clone().into(),
                Cell::from(v.video as i64),
                c.len().into(),
                text.join(" ").into(),
            ]);
        }
    }
    if cand_table.columns.len() == 2 {
        cand_table.columns.extend(split_candidates_table(&[]).columns);
    }
    written.push(write_table(out, "split_candidates", &cand_table, fmt)?);
    written.push(write_table(out, "split_chains", &chain_table, fmt)?);
    Ok(CommandOutput {
        written,
        // The built-in registry's warnings are known quirks of the published tables.
        diagnostics: if cfg.registry.is_some() {
            registry.warnings.clone()
        } else {
            Vec::new()
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairSelector {
    /// Display ids (`12` or `12.1` for a segment) of agents I and J.
    Pair(String, String),
    TopK(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AimRequest {
    pub selector: PairSelector,
    /// `(scene, video)`.
    pub video: Option<(String, u32)>,
    pub sweep_delta: Vec<f64>,
    pub sweep_n: Vec<usize>,
}

pub fn parse_pair(text: &str) -> Result<PairSelector> {
    let mut parts = text.split(',').map(str::trim);
    match (parts.next(), parts.next(), parts.next()) {
        (Some(i), Some(j), None) if !i.is_empty() && !j.is_empty() => Ok(PairSelector::Pair(i.into(), j.into())),
        _ => Err(Error::Config(format!("pair must look like `I,J`, got `{text}`"))),
    }
}

pub fn parse_video(text: &str) -> Result<(String, u32)> {
    let bad = || Error::Config(format!("video must look like `scene/k`, got `{text}`"));
    let (scene, k) = text.rsplit_once('/').ok_or_else(bad)?;
    let k = k.strip_prefix("video").unwrap_or(k).parse().map_err(|_| bad())?;
    Ok((scene.to_owned(), k))
}

/// Hyperparameters written next to every exported series.
#[derive(Debug, Serialize)]
struct SeriesMeta<'a> {
    dataset: DatasetKind,
    scene: &'a str,
    video: u32,
    agent_i: &'a str,
    agent_j: &'a str,
    first_frame: i64,
    buffer_frame: i64,
    last_frame: i64,
    delta: f64,
    window: usize,
    lost_policy: LostPolicy,
    buffer: BufferRule,
    rho: &'a RhoConfig,
    normalizers: Normalizers,
    mi: &'a MiConfig,
    final_aim: f64,
}

struct VideoPairs {
    trajectories: Vec<Trajectory>,
    pairs: Vec<InteractionPair>,
    norms: Normalizers,
}

fn video_pairs(store: &Store, entry: &VideoEntry, cfg: &RunConfig, params: &AimParams) -> Result<VideoPairs> {
    let trajectories: Vec<Trajectory> = store
        .load_video(entry)?
        .iter()
        .flat_map(|t| filter_lost(t, cfg.preprocess.lost_policy))
        .collect();
    let pairs = extract_interactions(&trajectories, params.window, params.buffer, params.mi.min_samples);
    let norms = Normalizers::resolve(&params.rho, &trajectories, &pairs, params.window)?;
    Ok(VideoPairs {
        trajectories,
        pairs,
        norms,
    })
}

fn series_table(s: &MeasureSeries) -> Table {
    let mut t = Table::new(["frame", "x_i", "y_i", "x_j", "y_j", "mi", "rho", "aim"]);
    for k in 0..s.frames.len() {
        t.push(vec![
            s.frames[k].into(),
            Cell::value(s.pos_i[k][0]),
            Cell::value(s.pos_i[k][1]),
            Cell::value(s.pos_j[k][0]),
            Cell::value(s.pos_j[k][1]),
            Cell::value(s.mi[k]),
            Cell::value(s.rho[k]),
            Cell::value(s.aim[k]),
        ]);
    }
    t
}

/// Exports the selected directed pairs, one series per `(N, delta)`.
pub fn cmd_aim(cfg: &RunConfig, out: &Path, req: &AimRequest) -> Result<CommandOutput> {
    let store = open_store(cfg)?;
    let params = cfg.aim_params();
    params.validate()?;
    let deltas = if req.sweep_delta.is_empty() {
        vec![params.delta]
    } else {
        req.sweep_delta.clone()
    };
    let windows = if req.sweep_n.is_empty() {
        vec![params.window]
    } else {
        req.sweep_n.clone()
    };

    let entries: Vec<&VideoEntry> = match &req.video {
        Some((scene, k)) => vec![store
            .entry(scene, *k)
            .ok_or_else(|| Error::Config(format!("video {scene}/{k} is not in the store")))?],
        None => store.manifest.videos.iter().collect(),
    };
    if matches!(req.selector, PairSelector::Pair(..)) && entries.len() != 1 {
        return Err(Error::Config(
            "--pair needs --video when the store holds several videos".into(),
        ));
    }
    let loaded: Vec<(&VideoEntry, VideoPairs)> = entries
        .par_iter()
        .map(|e| Ok((*e, video_pairs(&store, e, cfg, &params)?)))
        .collect::<Result<_>>()?;

    // (video index, pair)
    let selected: Vec<(usize, InteractionPair)> = match &req.selector {
        PairSelector::Pair(i, j) => {
            let vp = &loaded[0].1;
            for id in [i, j] {
                if !vp.trajectories.iter().any(|t| &t.display_id() == id) {
                    return Err(Error::Config(format!("unknown track id `{id}`")));
                }
            }
            let pair = vp.pairs.iter().find(|p| &p.id_i == i && &p.id_j == j).ok_or_else(|| {
                Error::Config(format!(
                    "tracks {i} and {j} are not co-present for more than {} frames",
                    params.buffer.offset(params.window, params.mi.min_samples)
                ))
            })?;
            vec![(0, pair.clone())]
        }
        PairSelector::TopK(k) => {
            let mut scored: Vec<(f64, usize, &InteractionPair)> = loaded
                .par_iter()
                .enumerate()
                .flat_map_iter(|(vi, (_, vp))| vp.pairs.iter().map(move |p| (vi, vp, p)))
                .map(|(vi, vp, p)| {
                    let s = sweep(
                        &vp.trajectories,
                        p,
                        &[params.delta],
                        &[params.window],
                        &params,
                        &vp.norms,
                    )?;
                    Ok((s.first().map_or(0.0, MeasureSeries::final_aim), vi, p))
                })
                .collect::<Result<_>>()?;
            scored.sort_by(|a, b| {
                b.0.total_cmp(&a.0)
                    .then(a.1.cmp(&b.1))
                    .then_with(|| a.2.id_i.cmp(&b.2.id_i))
                    .then_with(|| a.2.id_j.cmp(&b.2.id_j))
            });
            scored.into_iter().take(*k).map(|(_, vi, p)| (vi, p.clone())).collect()
        }
    };

    let series: Vec<Vec<MeasureSeries>> = selected
        .par_iter()
        .map(|(vi, p)| {
            let vp = &loaded[*vi].1;
            sweep(&vp.trajectories, p, &deltas, &windows, &params, &vp.norms)
        })
        .collect::<Result<_>>()?;

    let dir = out.join("series");
    create_dir(&dir)?;
    let mut written = Vec::new();
    let mut diagnostics = Vec::new();
    let mut summary = Table::new([
        "file",
        "scene",
        "video",
        "agent_i",
        "agent_j",
        "window",
        "delta",
        "frames",
        "final_aim",
    ]);
    for ((vi, pair), list) in selected.iter().zip(&series) {
        let (entry, vp) = &loaded[*vi];
        if list.is_empty() {
            diagnostics.push(format!(
                "{}/{}: pair {},{} is too short for every requested window",
                entry.scene, entry.video, pair.id_i, pair.id_j
            ));
        }
        for s in list {
            let stem = format!(
                "{}_{}_{}_{}_n{}_d{}",
                entry.scene, entry.video, s.pair.id_i, s.pair.id_j, s.window, s.delta
            );
            let path = write_table(&dir, &stem, &series_table(s), cfg.export_format)?;
            let meta = SeriesMeta {
                dataset: cfg.dataset,
                scene: &entry.scene,
                video: entry.video,
                agent_i: &s.pair.id_i,
                agent_j: &s.pair.id_j,
                first_frame: s.pair.first_frame,
                buffer_frame: s.pair.buffer_frame,
                last_frame: s.pair.last_frame,
                delta: s.delta,
                window: s.window,
                lost_policy: cfg.preprocess.lost_policy,
                buffer: params.buffer,
                rho: &params.rho,
                normalizers: vp.norms,
                mi: &params.mi,
                final_aim: s.final_aim(),
            };
            let meta_path = dir.join(format!("{stem}.meta.json"));
            write_json(&meta_path, &meta)?;
            summary.push(vec![
                format!("series/{}", path.file_name().unwrap().to_string_lossy()).into(),
                entry.scene.clone().into(),
                Cell::from(entry.video as i64),
                s.pair.id_i.clone().into(),
                s.pair.id_j.clone().into(),
                s.window.into(),
                Cell::Num(s.delta, 6),
                s.frames.len().into(),
                Cell::value(s.final_aim()),
            ]);
            written.push(path);
            written.push(meta_path);
        }
    }
    written.insert(0, write_table(out, "aim_summary", &summary, cfg.export_format)?);
    Ok(CommandOutput { written, diagnostics })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictorChoice {
    ConstantVelocity,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRequest {
    pub predictor: PredictorChoice,
    /// Empty means the config's policy.
    pub lost_policies: Vec<LostPolicy>,
    pub split: Option<Split>,
}

/// Preprocessed windows of every selected video under one lost policy.
fn windows_for(
    store: &Store,
    videos: &[(&VideoEntry, Vec<Trajectory>)],
    cfg: &RunConfig,
    policy: LostPolicy,
) -> Result<Vec<TrajectoryWindow>> {
    let pcfg = crate::preprocess::PreprocessConfig {
        lost_policy: policy,
        ..cfg.preprocess.clone()
    };
    let per_video: Vec<Vec<TrajectoryWindow>> = videos
        .par_iter()
        .map(|(v, trajs)| {
            let p = preprocess(trajs, &pcfg, v.frame_rate).map_err(|e| Error::in_file(store.dir.join(&v.file), e))?;
            Ok(p.windows)
        })
        .collect::<Result<_>>()?;
    Ok(per_video.into_iter().flatten().collect())
}

/// ADE/FDE per lost policy, over all windows and per class.
pub fn cmd_eval(cfg: &RunConfig, out: &Path, req: &EvalRequest) -> Result<CommandOutput> {
    let store = open_store(cfg)?;
    let registry = cfg.load_registry()?;
    let entries: Vec<&VideoEntry> = match req.split {
        None => store.manifest.videos.iter().collect(),
        Some(split) => {
            let ds = registry
                .dataset(cfg.dataset)
                .ok_or_else(|| Error::Registry(format!("no {} entry", cfg.dataset)))?;
            let chosen: Vec<&VideoEntry> = store
                .manifest
                .videos
                .iter()
                .filter(|v| {
                    let scene = match cfg.dataset {
                        DatasetKind::Ind => ds.scene_of_video(v.video).map(|s| s.name.clone()),
                        DatasetKind::Sdd => Some(v.scene.clone()),
                    };
                    scene.and_then(|s| ds.split_of(&s, v.video)) == Some(split)
                })
                .collect();
            if chosen.is_empty() {
                return Err(Error::Config(format!(
                    "no stored video is assigned to the {split} split"
                )));
            }
            chosen
        }
    };
    let videos: Vec<(&VideoEntry, Vec<Trajectory>)> = entries
        .par_iter()
        .map(|v| Ok((*v, store.load_video(v)?)))
        .collect::<Result<_>>()?;

    let policies = if req.lost_policies.is_empty() {
        vec![cfg.preprocess.lost_policy]
    } else {
        let mut unique = Vec::new();
        for p in &req.lost_policies {
            if !unique.contains(p) {
                unique.push(*p);
            }
        }
        unique
    };
    let windows: Vec<(LostPolicy, Vec<TrajectoryWindow>)> = policies
        .iter()
        .map(|p| Ok((*p, windows_for(&store, &videos, cfg, *p)?)))
        .collect::<Result<_>>()?;

    let predictor = match &req.predictor {
        PredictorChoice::ConstantVelocity => Predictor::ConstantVelocity,
        PredictorChoice::File(path) => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let preds = read_predictions(BufReader::new(file)).map_err(|e| Error::in_file(path, e))?;
            let p = Predictor::External(preds);
            p.check_ids(windows.iter().flat_map(|(_, w)| w.iter()))
                .map_err(|e| Error::in_file(path, e))?;
            p
        }
    };

    let mut reports = Vec::new();
    let mut diagnostics = Vec::new();
    for (policy, ws) in &windows {
        let ev = evaluate(ws, &predictor, policy.as_str())?;
        diagnostics.extend(ev.diagnostics);
        reports.extend(ev.reports);
    }
    Ok(CommandOutput {
        written: vec![write_table(out, "eval", &eval_table(&reports), cfg.export_format)?],
        diagnostics,
    })
}
