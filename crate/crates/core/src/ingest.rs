//! Locating and parsing raw dataset files on disk.
//!
//! SDD inputs may point at the dataset root (`<root>/<scene>/video<k>/annotations.txt`),
//! a scene directory, a video directory or an annotation file. inD inputs may
//! point at a directory of recordings or at an `XX_tracks.csv` file, whose
//! `XX_tracksMeta.csv` and `XX_recordingMeta.csv` siblings are required.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::dataset_io::{
    assemble_trajectories, parse_ind_tracks, parse_sdd_annotations, DatasetKind, DatasetRegistry, Source,
};
use crate::error::{Error, Result};
use crate::store::VideoData;

pub const SDD_ANNOTATIONS: &str = "annotations.txt";
const IND_TRACKS_SUFFIX: &str = "_tracks.csv";

fn sorted_dir(path: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

fn file_name(path: &Path) -> &str {
    path.file_name().and_then(|n| n.to_str()).unwrap_or("")
}

fn video_number(dir: &Path) -> Option<u32> {
    file_name(dir).strip_prefix("video")?.parse().ok()
}

/// An SDD annotation file together with its scene and video.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SddInput {
    pub scene: String,
    pub video: u32,
    pub file: PathBuf,
}

fn sdd_video_dir(dir: &Path) -> Result<Option<SddInput>> {
    let file = dir.join(SDD_ANNOTATIONS);
    let (Some(video), true) = (video_number(dir), file.is_file()) else {
        return Ok(None);
    };
    let scene = dir
        .parent()
        .map(file_name)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Config(format!("cannot infer scene of {}", dir.display())))?;
    Ok(Some(SddInput {
        scene: scene.to_owned(),
        video,
        file,
    }))
}

fn sdd_scene_dir(dir: &Path) -> Result<Vec<SddInput>> {
    let mut out = Vec::new();
    for child in sorted_dir(dir)? {
        if child.is_dir() {
            out.extend(sdd_video_dir(&child)?);
        }
    }
    Ok(out)
}

/// Expands one SDD input path into annotation files, sorted by scene and video.
pub fn discover_sdd(path: &Path) -> Result<Vec<SddInput>> {
    let mut out = if path.is_file() {
        let dir = path.parent().unwrap_or(Path::new("."));
        let input = sdd_video_dir(dir)?.ok_or_else(|| {
            Error::Config(format!(
                "{} is not inside a `<scene>/video<k>/` directory",
                path.display()
            ))
        })?;
        vec![SddInput {
            file: path.to_path_buf(),
            ..input
        }]
    } else if !path.exists() {
        return Err(Error::io(path, std::io::ErrorKind::NotFound.into()));
    } else if let Some(v) = sdd_video_dir(path)? {
        vec![v]
    } else {
        let here = sdd_scene_dir(path)?;
        if here.is_empty() {
            let mut all = Vec::new();
            for child in sorted_dir(path)? {
                if child.is_dir() {
                    all.extend(sdd_scene_dir(&child)?);
                }
            }
            all
        } else {
            here
        }
    };
    if out.is_empty() {
        return Err(Error::Config(format!(
            "no SDD annotation files under {}",
            path.display()
        )));
    }
    out.sort();
    Ok(out)
}

pub fn read_sdd_video(input: &SddInput, frame_rate: f64) -> Result<VideoData> {
    let wrap = |e| Error::in_file(&input.file, e);
    let file = File::open(&input.file).map_err(|e| Error::io(&input.file, e))?;
    let records = parse_sdd_annotations(BufReader::new(file)).map_err(wrap)?;
    let source = Source::new(DatasetKind::Sdd, input.scene.clone(), input.video);
    let assembled = assemble_trajectories(&records, &source).map_err(wrap)?;
    Ok(VideoData {
        source,
        source_files: vec![input.file.display().to_string()],
        frame_rate,
        px_to_meter: None,
        trajectories: assembled.trajectories,
        diagnostics: assembled.diagnostics,
    })
}

/// The three files making up an inD recording.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct IndInput {
    pub tracks: PathBuf,
    pub tracks_meta: PathBuf,
    pub recording_meta: PathBuf,
}

impl IndInput {
    fn from_tracks(tracks: &Path) -> Option<Self> {
        let name = file_name(tracks);
        let prefix = name.strip_suffix(IND_TRACKS_SUFFIX)?;
        let sibling = |suffix: &str| tracks.with_file_name(format!("{prefix}_{suffix}.csv"));
        Some(IndInput {
            tracks: tracks.to_path_buf(),
            tracks_meta: sibling("tracksMeta"),
            recording_meta: sibling("recordingMeta"),
        })
    }
}

pub fn discover_ind(path: &Path) -> Result<Vec<IndInput>> {
    let out: Vec<IndInput> = if path.is_file() {
        vec![IndInput::from_tracks(path)
            .ok_or_else(|| Error::Config(format!("{} is not an `XX_tracks.csv` file", path.display())))?]
    } else if !path.exists() {
        return Err(Error::io(path, std::io::ErrorKind::NotFound.into()));
    } else {
        sorted_dir(path)?
            .iter()
            .filter(|p| p.is_file())
            .filter_map(|p| IndInput::from_tracks(p))
            .collect()
    };
    if out.is_empty() {
        return Err(Error::Config(format!(
            "no inD `*_tracks.csv` files under {}",
            path.display()
        )));
    }
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn read_ind_recording(input: &IndInput) -> Result<VideoData> {
    let tracks = open(&input.tracks)?;
    let tracks_meta = open(&input.tracks_meta)?;
    let recording_meta = open(&input.recording_meta)?;
    let rec = parse_ind_tracks(tracks, tracks_meta, recording_meta).map_err(|e| Error::in_file(&input.tracks, e))?;
    let source = rec.trajectories.first().map(|t| t.source.clone()).unwrap_or_else(|| {
        Source::new(
            DatasetKind::Ind,
            format!("location{}", rec.location_id),
            rec.recording_id,
        )
    });
    Ok(VideoData {
        source,
        source_files: [&input.tracks, &input.tracks_meta, &input.recording_meta]
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        frame_rate: rec.frame_rate,
        px_to_meter: Some(rec.px_to_meter),
        trajectories: rec.trajectories,
        diagnostics: Vec::new(),
    })
}

/// Parses every video reachable from `inputs`.
pub fn read_inputs(kind: DatasetKind, inputs: &[PathBuf], registry: &DatasetRegistry) -> Result<Vec<VideoData>> {
    let mut out = Vec::new();
    for path in inputs {
        match kind {
            DatasetKind::Sdd => {
                let rate = registry.frame_rate(kind);
                for input in discover_sdd(path)? {
                    out.push(read_sdd_video(&input, rate)?);
                }
            }
            DatasetKind::Ind => {
                for input in discover_ind(path)? {
                    out.push(read_ind_recording(&input)?);
                }
            }
        }
    }
    Ok(out)
}
