//! On-disk trajectory store: one JSON-lines file per video plus a manifest.
//!
//! ```text
//! <store>/manifest.json
//! <store>/tracks/<scene>/<video>.jsonl   one serialized Trajectory per line
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset_io::{DatasetKind, Diagnostic, Source, Trajectory};
use crate::error::{Error, Result};

pub const STORE_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Parsed contents of one video or recording, ready to be stored.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoData {
    pub source: Source,
    pub source_files: Vec<String>,
    pub frame_rate: f64,
    pub px_to_meter: Option<f64>,
    pub trajectories: Vec<Trajectory>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub scene: String,
    pub video: u32,
    /// Relative to the store directory.
    pub file: String,
    pub source_files: Vec<String>,
    pub trajectories: usize,
    pub frame_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub px_to_meter: Option<f64>,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub dataset: DatasetKind,
    pub videos: Vec<VideoEntry>,
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes every video and then the manifest. Videos are stored in
/// `(scene, video)` order regardless of input order.
pub fn write_store(dir: impl AsRef<Path>, dataset: DatasetKind, videos: &[VideoData]) -> Result<Manifest> {
    let dir = dir.as_ref();
    let mut sorted: Vec<&VideoData> = videos.iter().collect();
    sorted.sort_by(|a, b| (&a.source.scene, a.source.video).cmp(&(&b.source.scene, b.source.video)));
    if let Some(w) = sorted.windows(2).find(|w| w[0].source == w[1].source) {
        return Err(Error::Config(format!("video {} ingested twice", w[0].source)));
    }

    let mut entries = Vec::with_capacity(sorted.len());
    for v in sorted {
        if v.source.dataset != dataset {
            return Err(Error::Config(format!(
                "{} does not belong to dataset {dataset}",
                v.source
            )));
        }
        let rel = format!("tracks/{}/{}.jsonl", v.source.scene, v.source.video);
        let path = dir.join(&rel);
        create_dir(path.parent().expect("track file has a parent"))?;
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        for t in &v.trajectories {
            serde_json::to_writer(&mut w, t)?;
            w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        entries.push(VideoEntry {
            scene: v.source.scene.clone(),
            video: v.source.video,
            file: rel,
            source_files: v.source_files.clone(),
            trajectories: v.trajectories.len(),
            frame_rate: v.frame_rate,
            px_to_meter: v.px_to_meter,
            diagnostics: v.diagnostics.clone(),
        });
    }

    let manifest = Manifest {
        version: STORE_VERSION,
        dataset,
        videos: entries,
    };
    create_dir(dir)?;
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[derive(Debug, Clone)]
pub struct Store {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl Store {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::in_file(&path, e.into()))?;
        if manifest.version != STORE_VERSION {
            return Err(Error::in_file(
                &path,
                Error::Config(format!("unsupported store version {}", manifest.version)),
            ));
        }
        Ok(Store { dir, manifest })
    }

    pub fn dataset(&self) -> DatasetKind {
        self.manifest.dataset
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.videos.iter().all(|v| v.trajectories == 0)
    }

    pub fn entry(&self, scene: &str, video: u32) -> Option<&VideoEntry> {
        self.manifest
            .videos
            .iter()
            .find(|v| v.video == video && v.scene.eq_ignore_ascii_case(scene))
    }

    pub fn load_video(&self, entry: &VideoEntry) -> Result<Vec<Trajectory>> {
        let path = self.dir.join(&entry.file);
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = Vec::with_capacity(entry.trajectories);
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.is_empty() {
                continue;
            }
            let t: Trajectory =
                serde_json::from_str(&line).map_err(|e| Error::in_file(&path, Error::parse(i + 1, e.to_string())))?;
            out.push(t);
        }
        if out.len() != entry.trajectories {
            return Err(Error::in_file(
                &path,
                Error::LengthMismatch {
                    expected: entry.trajectories,
                    got: out.len(),
                },
            ));
        }
        Ok(out)
    }

    /// Every trajectory in manifest order.
    pub fn load_all(&self) -> Result<Vec<Trajectory>> {
        let mut out = Vec::new();
        for v in &self.manifest.videos {
            out.extend(self.load_video(v)?);
        }
        Ok(out)
    }
}
