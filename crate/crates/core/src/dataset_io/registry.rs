//! Static dataset metadata loaded from a versioned TOML file.
//!
//! Simultaneous-video groups are kept exactly as curated, even where they
//! reference a video outside the scene's list or intersect another group;
//! such cases are reported in [`DatasetRegistry::warnings`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DatasetKind;
use crate::error::{Error, Result};

pub const BUILTIN_REGISTRY: &str = include_str!("../../data/registry.toml");

const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapLevel {
    None,
    Partial,
    Full,
}

impl fmt::Display for OverlapLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OverlapLevel::None => "None",
            OverlapLevel::Partial => "Partial",
            OverlapLevel::Full => "Full",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitTable {
    #[serde(default)]
    pub train: Option<String>,
    #[serde(default)]
    pub validation: Option<String>,
    #[serde(default)]
    pub test: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegistry {
    version: u32,
    #[serde(default)]
    sdd: Option<RawDataset>,
    #[serde(default)]
    ind: Option<RawDataset>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    frame_rate: f64,
    #[serde(default)]
    split: Option<SplitTable>,
    #[serde(default)]
    scenes: BTreeMap<String, RawScene>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    videos: String,
    #[serde(default)]
    location_overlap: Option<OverlapLevel>,
    #[serde(default)]
    time_overlap: Option<OverlapLevel>,
    #[serde(default)]
    simultaneous_groups: Vec<String>,
    #[serde(default)]
    split: Option<SplitTable>,
    #[serde(default)]
    px_to_meter: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplitFile {
    version: u32,
    #[serde(default)]
    split: Option<SplitTable>,
    #[serde(default)]
    scenes: BTreeMap<String, SplitTable>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneEntry {
    pub name: String,
    pub videos: BTreeSet<u32>,
    pub location_overlap: Option<OverlapLevel>,
    pub time_overlap: Option<OverlapLevel>,
    pub simultaneous_groups: Vec<BTreeSet<u32>>,
    pub px_to_meter: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub kind: DatasetKind,
    pub frame_rate: f64,
    /// Keyed by scene name as written in the file.
    pub scenes: BTreeMap<String, SceneEntry>,
    /// `(scene, video) -> split`.
    pub splits: BTreeMap<(String, u32), Split>,
}

impl DatasetEntry {
    pub fn scene(&self, name: &str) -> Option<&SceneEntry> {
        self.scenes
            .get(name)
            .or_else(|| self.scenes.values().find(|s| s.name.eq_ignore_ascii_case(name)))
    }

    pub fn scene_of_video(&self, video: u32) -> Option<&SceneEntry> {
        self.scenes.values().find(|s| s.videos.contains(&video))
    }

    pub fn split_of(&self, scene: &str, video: u32) -> Option<Split> {
        let name = &self.scene(scene)?.name;
        self.splits.get(&(name.clone(), video)).copied()
    }

    /// Videos assigned to `split`, as `(scene, video)` pairs.
    pub fn videos_in(&self, split: Split) -> Vec<(String, u32)> {
        self.splits
            .iter()
            .filter(|(_, s)| **s == split)
            .map(|(k, _)| k.clone())
            .collect()
    }

    fn assign(&mut self, table: &SplitTable, scene: Option<&str>) -> Result<()> {
        for (split, ranges) in [
            (Split::Train, &table.train),
            (Split::Validation, &table.validation),
            (Split::Test, &table.test),
        ] {
            let Some(ranges) = ranges else { continue };
            for video in parse_ranges(ranges)? {
                let scene_name = match scene {
                    Some(s) => {
                        let entry = self
                            .scene(s)
                            .ok_or_else(|| Error::Registry(format!("{}: unknown scene {s:?} in split", self.kind)))?;
                        if !entry.videos.contains(&video) {
                            return Err(Error::Registry(format!(
                                "{}: split references video {video} not in scene {s}",
                                self.kind
                            )));
                        }
                        entry.name.clone()
                    }
                    None => self
                        .scene_of_video(video)
                        .ok_or_else(|| {
                            Error::Registry(format!("{}: split references unknown video {video}", self.kind))
                        })?
                        .name
                        .clone(),
                };
                if let Some(prev) = self.splits.insert((scene_name.clone(), video), split) {
                    return Err(Error::Registry(format!(
                        "{}: video {scene_name}/{video} assigned to both {prev} and {split}",
                        self.kind
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRegistry {
    pub version: u32,
    pub sdd: Option<DatasetEntry>,
    pub ind: Option<DatasetEntry>,
    /// Consistency findings that do not prevent loading.
    pub warnings: Vec<String>,
}

impl DatasetRegistry {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_REGISTRY).expect("shipped registry is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawRegistry = toml::from_str(text).map_err(|e| Error::Registry(format!("schema violation: {e}")))?;
        if raw.version != SUPPORTED_VERSION {
            return Err(Error::Registry(format!(
                "unsupported version {} (expected {SUPPORTED_VERSION})",
                raw.version
            )));
        }
        let mut warnings = Vec::new();
        let sdd = raw
            .sdd
            .map(|d| build_dataset(DatasetKind::Sdd, d, &mut warnings))
            .transpose()?;
        let ind = raw
            .ind
            .map(|d| build_dataset(DatasetKind::Ind, d, &mut warnings))
            .transpose()?;
        Ok(DatasetRegistry {
            version: raw.version,
            sdd,
            ind,
            warnings,
        })
    }

    pub fn dataset(&self, kind: DatasetKind) -> Option<&DatasetEntry> {
        match kind {
            DatasetKind::Sdd => self.sdd.as_ref(),
            DatasetKind::Ind => self.ind.as_ref(),
        }
    }

    pub fn frame_rate(&self, kind: DatasetKind) -> f64 {
        self.dataset(kind)
            .map(|d| d.frame_rate)
            .unwrap_or_else(|| kind.native_rate())
    }

    /// Merges split assignments from a separate file. Used for the SDD, whose
    /// train/test split is not shipped.
    pub fn apply_split_file(&mut self, kind: DatasetKind, text: &str) -> Result<()> {
        let raw: RawSplitFile =
            toml::from_str(text).map_err(|e| Error::Registry(format!("split file schema violation: {e}")))?;
        if raw.version != SUPPORTED_VERSION {
            return Err(Error::Registry(format!(
                "unsupported split file version {}",
                raw.version
            )));
        }
        let entry = match kind {
            DatasetKind::Sdd => self.sdd.as_mut(),
            DatasetKind::Ind => self.ind.as_mut(),
        }
        .ok_or_else(|| Error::Registry(format!("no {kind} section in registry")))?;
        if let Some(table) = &raw.split {
            entry.assign(table, None)?;
        }
        for (scene, table) in &raw.scenes {
            entry.assign(table, Some(scene))?;
        }
        Ok(())
    }
}

pub fn load_registry(path: impl AsRef<Path>) -> Result<DatasetRegistry> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DatasetRegistry::from_toml_str(&text)
}

fn build_dataset(kind: DatasetKind, raw: RawDataset, warnings: &mut Vec<String>) -> Result<DatasetEntry> {
    if raw.frame_rate.is_nan() || raw.frame_rate <= 0.0 {
        return Err(Error::Registry(format!("{kind}: frame_rate must be positive")));
    }
    let mut scenes = BTreeMap::new();
    let mut scene_splits = Vec::new();
    for (name, s) in raw.scenes {
        let videos = parse_ranges(&s.videos)?;
        let groups = s
            .simultaneous_groups
            .iter()
            .map(|g| parse_ranges(g))
            .collect::<Result<Vec<_>>>()?;
        for g in &groups {
            let missing: BTreeSet<u32> = g.difference(&videos).copied().collect();
            if !missing.is_empty() {
                warnings.push(format!(
                    "{kind}/{name}: simultaneous group {} references videos {} not listed in the scene",
                    format_ranges(g),
                    format_ranges(&missing)
                ));
            }
        }
        for (i, a) in groups.iter().enumerate() {
            for b in &groups[i + 1..] {
                if !a.is_disjoint(b) {
                    warnings.push(format!(
                        "{kind}/{name}: simultaneous groups {} and {} intersect",
                        format_ranges(a),
                        format_ranges(b)
                    ));
                }
            }
        }
        let mut px_to_meter = BTreeMap::new();
        for (video, factor) in s.px_to_meter {
            let v: u32 = video
                .parse()
                .map_err(|_| Error::Registry(format!("{kind}/{name}: bad video id {video:?}")))?;
            if factor.is_nan() || factor <= 0.0 {
                return Err(Error::Registry(format!(
                    "{kind}/{name}: px_to_meter for video {v} must be positive"
                )));
            }
            px_to_meter.insert(v, factor);
        }
        if let Some(split) = s.split {
            scene_splits.push((name.clone(), split));
        }
        scenes.insert(
            name.clone(),
            SceneEntry {
                name,
                videos,
                location_overlap: s.location_overlap,
                time_overlap: s.time_overlap,
                simultaneous_groups: groups,
                px_to_meter,
            },
        );
    }
    let mut entry = DatasetEntry {
        kind,
        frame_rate: raw.frame_rate,
        scenes,
        splits: BTreeMap::new(),
    };
    if let Some(table) = &raw.split {
        entry.assign(table, None)?;
    }
    for (scene, table) in &scene_splits {
        entry.assign(table, Some(scene))?;
    }
    Ok(entry)
}

/// Parses `"0-4, 7-13, 30"` (commas and/or whitespace separated).
pub fn parse_ranges(text: &str) -> Result<BTreeSet<u32>> {
    let mut out = BTreeSet::new();
    for item in text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
    {
        let bad = || Error::Registry(format!("bad range {item:?} in {text:?}"));
        match item.split_once('-') {
            Some((a, b)) => {
                let a: u32 = a.parse().map_err(|_| bad())?;
                let b: u32 = b.parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(item.parse().map_err(|_| bad())?);
            }
        }
    }
    Ok(out)
}

/// Inverse of [`parse_ranges`]: consecutive runs collapse to `a-b`.
pub fn format_ranges(set: &BTreeSet<u32>) -> String {
    let mut parts = Vec::new();
    let mut iter = set.iter().copied().peekable();
    while let Some(start) = iter.next() {
        let mut end = start;
        while iter.peek() == Some(&(end + 1)) {
            end = iter.next().unwrap();
        }
        parts.push(if start == end {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
    }
    parts.join(", ")
}
