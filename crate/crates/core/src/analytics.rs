//! Dataset characterization: lost-annotation frequencies, class mix,
//! scene overlaps and split-trajectory candidates.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{format_ranges, ClassLabel, DatasetKind, DatasetRegistry, OverlapLevel, Trajectory};
use crate::preprocess::classify_lost_positions;
use crate::report::{Cell, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LostStatsRow {
    pub scene: String,
    pub count: usize,
    pub start_pct: f64,
    pub middle_pct: f64,
    pub end_pct: f64,
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// One row per scene, pooling every video of the scene. Expects raw,
/// unfiltered trajectories.
pub fn lost_stats(trajectories: &[Trajectory]) -> Vec<LostStatsRow> {
    let mut by_scene: BTreeMap<&str, Vec<&Trajectory>> = BTreeMap::new();
    for t in trajectories {
        by_scene.entry(&t.source.scene).or_default().push(t);
    }
    by_scene
        .into_par_iter()
        .map(|(scene, ts)| {
            let (mut s, mut m, mut e) = (0, 0, 0);
            for t in &ts {
                let lp = classify_lost_positions(t);
                s += lp.start as usize;
                m += lp.middle as usize;
                e += lp.end as usize;
            }
            LostStatsRow {
                scene: scene.to_owned(),
                count: ts.len(),
                start_pct: pct(s, ts.len()),
                middle_pct: pct(m, ts.len()),
                end_pct: pct(e, ts.len()),
            }
        })
        .collect()
}

pub fn lost_stats_table(rows: &[LostStatsRow]) -> Table {
    let mut t = Table::new([
        "scene",
        "trajectories",
        "lost_start_pct",
        "lost_middle_pct",
        "lost_end_pct",
    ]);
    for r in rows {
        t.push(vec![
            r.scene.clone().into(),
            r.count.into(),
            Cell::pct(r.start_pct),
            Cell::pct(r.middle_pct),
            Cell::pct(r.end_pct),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistributionRow {
    pub group: String,
    pub tracks: usize,
    /// Percentage of unique tracks per class, in the dataset's column order.
    pub percentages: Vec<(ClassLabel, f64)>,
}

impl ClassDistributionRow {
    pub fn get(&self, class: ClassLabel) -> f64 {
        self.percentages
            .iter()
            .find(|(c, _)| *c == class)
            .map_or(0.0, |(_, p)| *p)
    }
}

fn class_columns(kind: DatasetKind) -> &'static [ClassLabel] {
    match kind {
        DatasetKind::Sdd => &ClassLabel::SDD,
        DatasetKind::Ind => &ClassLabel::IND,
    }
}

/// Percentage of unique tracks per class. SDD is grouped by scene; inD by
/// the registry scene (intersection) containing each recording, falling back
/// to the trajectory's own scene when the registry has no entry.
pub fn class_distribution(trajectories: &[Trajectory], registry: &DatasetRegistry) -> Vec<ClassDistributionRow> {
    let mut groups: BTreeMap<(DatasetKind, String), BTreeMap<(u32, i64), ClassLabel>> = BTreeMap::new();
    for t in trajectories {
        let kind = t.source.dataset;
        let group = match kind {
            DatasetKind::Ind => registry
                .dataset(kind)
                .and_then(|d| d.scene_of_video(t.source.video))
                .map_or_else(|| t.source.scene.clone(), |s| s.name.clone()),
            DatasetKind::Sdd => t.source.scene.clone(),
        };
        groups
            .entry((kind, group))
            .or_default()
            .entry((t.source.video, t.track_id))
            .or_insert(t.class_label);
    }
    let mut rows: Vec<(DatasetKind, ClassDistributionRow)> = groups
        .into_iter()
        .map(|((kind, group), tracks)| {
            let mut counts: BTreeMap<ClassLabel, usize> = BTreeMap::new();
            for c in tracks.values() {
                *counts.entry(*c).or_default() += 1;
            }
            let total = tracks.len();
            let mut percentages: Vec<(ClassLabel, f64)> = class_columns(kind)
                .iter()
                .map(|c| (*c, pct(counts.get(c).copied().unwrap_or(0), total)))
                .collect();
            for (c, n) in &counts {
                if !class_columns(kind).contains(c) {
                    percentages.push((*c, pct(*n, total)));
                }
            }
            (
                kind,
                ClassDistributionRow {
                    group,
                    tracks: total,
                    percentages,
                },
            )
        })
        .collect();
    rows.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| group_key(&a.1.group).cmp(&group_key(&b.1.group)))
    });
    rows.into_iter().map(|(_, r)| r).collect()
}

/// Sorts range-named groups ("7-17") numerically and everything else by name.
fn group_key(name: &str) -> (u32, String) {
    let lead: String = name.chars().take_while(char::is_ascii_digit).collect();
    (lead.parse().unwrap_or(u32::MAX), name.to_owned())
}

pub fn class_distribution_table(rows: &[ClassDistributionRow]) -> Table {
    let mut classes: Vec<ClassLabel> = Vec::new();
    for r in rows {
        for (c, _) in &r.percentages {
            if !classes.contains(c) {
                classes.push(*c);
            }
        }
    }
    let mut t = Table::new(
        ["group".to_owned(), "tracks".to_owned()].into_iter().chain(
            classes
                .iter()
                .map(|c| format!("{}_pct", c.as_str().to_ascii_lowercase())),
        ),
    );
    for r in rows {
        let mut row = vec![r.group.clone().into(), r.tracks.into()];
        row.extend(classes.iter().map(|c| Cell::pct(r.get(*c))));
        t.push(row);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitGates {
    pub max_frame_gap: i64,
    pub max_spatial_gap: f64,
    /// How far the successor may start before the predecessor ends.
    pub overlap_slack: i64,
}

impl Default for SplitGates {
    fn default() -> Self {
        SplitGates {
            max_frame_gap: 60,
            max_spatial_gap: 50.0,
            overlap_slack: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub predecessor: i64,
    pub successor: i64,
    pub frame_gap: i64,
    pub spatial_gap: f64,
    pub score: f64,
}

fn closeness(gap: f64, max: f64) -> f64 {
    if max <= 0.0 {
        1.0
    } else {
        (1.0 - gap / max).max(0.0)
    }
}

/// Pairs `(A, B)` where B starts shortly after, and close to, where A ends.
/// Input should come from a single video; ordered by descending score.
pub fn detect_split_candidates(trajectories: &[Trajectory], gates: SplitGates) -> Vec<SplitCandidate> {
    let ends: Vec<_> = trajectories
        .iter()
        .filter_map(|t| Some((t.track_id, t.points.first()?, t.points.last()?)))
        .collect();
    let mut out = Vec::new();
    for &(a, _, a_last) in &ends {
        for &(b, b_first, _) in &ends {
            if a == b {
                continue;
            }
            let fgap = b_first.frame - a_last.frame;
            if fgap < -gates.overlap_slack || fgap > gates.max_frame_gap {
                continue;
            }
            let sgap = (b_first.x - a_last.x).hypot(b_first.y - a_last.y);
            if sgap > gates.max_spatial_gap {
                continue;
            }
            let score =
                closeness(fgap.max(0) as f64, gates.max_frame_gap as f64) * closeness(sgap, gates.max_spatial_gap);
            out.push(SplitCandidate {
                predecessor: a,
                successor: b,
                frame_gap: fgap,
                spatial_gap: sgap,
                score,
            });
        }
    }
    out.sort_by(|x, y| {
        y.score
            .total_cmp(&x.score)
            .then(x.predecessor.cmp(&y.predecessor))
            .then(x.successor.cmp(&y.successor))
    });
    out
}

/// Greedy one-to-one linking of candidates in score order, followed into
/// chains of track ids. Only chains of two or more tracks are returned.
pub fn split_chains(candidates: &[SplitCandidate]) -> Vec<Vec<i64>> {
    let mut next: BTreeMap<i64, i64> = BTreeMap::new();
    let mut has_prev: BTreeSet<i64> = BTreeSet::new();
    for c in candidates {
        if next.contains_key(&c.predecessor) || has_prev.contains(&c.successor) {
            continue;
        }
        // Refuse links that would close a cycle.
        let mut cur = c.successor;
        let mut cyclic = false;
        while let Some(&n) = next.get(&cur) {
            if n == c.predecessor {
                cyclic = true;
                break;
            }
            cur = n;
        }
        if cyclic || c.successor == c.predecessor {
            continue;
        }
        next.insert(c.predecessor, c.successor);
        has_prev.insert(c.successor);
    }
    next.keys()
        .filter(|k| !has_prev.contains(k))
        .map(|&head| {
            let mut chain = vec![head];
            while let Some(&n) = next.get(chain.last().unwrap()) {
                chain.push(n);
            }
            chain
        })
        .collect()
}

pub fn split_candidates_table(rows: &[SplitCandidate]) -> Table {
    let mut t = Table::new(["predecessor", "successor", "frame_gap", "spatial_gap_px", "score"]);
    for c in rows {
        t.push(vec![
            c.predecessor.into(),
            c.successor.into(),
            c.frame_gap.into(),
            Cell::pct(c.spatial_gap),
            Cell::value(c.score),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub scene: String,
    pub location: Option<OverlapLevel>,
    pub time: Option<OverlapLevel>,
    pub groups: Vec<String>,
}

/// Overlap descriptors of every scene of `kind`, verbatim from the registry.
pub fn overlap_report(registry: &DatasetRegistry, kind: DatasetKind) -> Vec<OverlapRow> {
    let Some(ds) = registry.dataset(kind) else {
        return Vec::new();
    };
    ds.scenes
        .values()
        .map(|s| OverlapRow {
            scene: s.name.clone(),
            location: s.location_overlap,
            time: s.time_overlap,
            groups: s.simultaneous_groups.iter().map(format_ranges).collect(),
        })
        .collect()
}

pub fn overlap_table(rows: &[OverlapRow]) -> Table {
    let level = |l: Option<OverlapLevel>| l.map_or(Cell::Null, |l| Cell::Str(l.to_string()));
    let mut t = Table::new(["scene", "location_overlap", "time_overlap", "simultaneous_groups"]);
    for r in rows {
        t.push(vec![
            r.scene.clone().into(),
            level(r.location),
            level(r.time),
            r.groups.join("; ").into(),
        ]);
    }
    t
}
