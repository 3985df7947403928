//! Annotation parsing for SDD and inD, trajectory assembly, and the static
//! dataset registry.

mod assemble;
mod ind;
mod registry;
mod sdd;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use assemble::{assemble_trajectories, Assembled};
pub use ind::{meters_to_pixels, parse_ind_tracks, pixels_to_meters, IndRecording};
pub use registry::{
    format_ranges, load_registry, parse_ranges, DatasetEntry, DatasetRegistry, OverlapLevel, SceneEntry, Split,
    SplitTable, BUILTIN_REGISTRY,
};
pub use sdd::{parse_sdd_annotations, parse_sdd_str, SddReader};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Sdd,
    Ind,
}

impl DatasetKind {
    /// Native annotation frame rate in frames per second.
    pub fn native_rate(self) -> f64 {
        match self {
            DatasetKind::Sdd => 30.0,
            DatasetKind::Ind => 25.0,
        }
    }

    /// Default kinematics window: one second of native frames.
    pub fn default_window(self) -> usize {
        match self {
            DatasetKind::Sdd => 30,
            DatasetKind::Ind => 25,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Sdd => "sdd",
            DatasetKind::Ind => "ind",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Union of the SDD and inD agent classes. inD's `truck_bus` stays distinct
/// from SDD's `Bus`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Pedestrian,
    Biker,
    Skater,
    Cart,
    Car,
    Bus,
    TruckBus,
}

impl ClassLabel {
    /// Column order used by SDD class tables.
    pub const SDD: [ClassLabel; 6] = [
        ClassLabel::Pedestrian,
        ClassLabel::Biker,
        ClassLabel::Car,
        ClassLabel::Bus,
        ClassLabel::Skater,
        ClassLabel::Cart,
    ];

    pub const IND: [ClassLabel; 4] = [
        ClassLabel::Pedestrian,
        ClassLabel::Biker,
        ClassLabel::Car,
        ClassLabel::TruckBus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Pedestrian => "Pedestrian",
            ClassLabel::Biker => "Biker",
            ClassLabel::Skater => "Skater",
            ClassLabel::Cart => "Cart",
            ClassLabel::Car => "Car",
            ClassLabel::Bus => "Bus",
            ClassLabel::TruckBus => "TruckBus",
        }
    }

    /// SDD label, matched case-insensitively.
    pub fn from_sdd(label: &str) -> Option<Self> {
        let lower = label.to_ascii_lowercase();
        Some(match lower.as_str() {
            "pedestrian" => ClassLabel::Pedestrian,
            "biker" => ClassLabel::Biker,
            "skater" => ClassLabel::Skater,
            "cart" => ClassLabel::Cart,
            "car" => ClassLabel::Car,
            "bus" => ClassLabel::Bus,
            _ => return None,
        })
    }

    /// inD `class` column of tracksMeta.
    pub fn from_ind(label: &str) -> Option<Self> {
        let lower = label.trim().to_ascii_lowercase();
        Some(match lower.as_str() {
            "pedestrian" => ClassLabel::Pedestrian,
            "bicycle" => ClassLabel::Biker,
            "car" => ClassLabel::Car,
            "truck_bus" => ClassLabel::TruckBus,
            _ => return None,
        })
    }

    /// Parses either the canonical name or any dataset-native spelling.
    pub fn parse(label: &str) -> Option<Self> {
        if label.eq_ignore_ascii_case("truckbus") {
            return Some(ClassLabel::TruckBus);
        }
        Self::from_sdd(label).or_else(|| Self::from_ind(label))
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One raw SDD annotation row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub track_id: i64,
    pub frame: i64,
    /// `(xmin, ymin, xmax, ymax)` in pixels.
    pub bbox: [i64; 4],
    pub lost: bool,
    pub occluded: bool,
    pub generated: bool,
    pub class_label: ClassLabel,
}

impl AnnotationRecord {
    pub fn center(&self) -> (f64, f64) {
        let [xmin, ymin, xmax, ymax] = self.bbox;
        ((xmin + xmax) as f64 / 2.0, (ymin + ymax) as f64 / 2.0)
    }

    /// Formats the record in SDD column order.
    pub fn to_sdd_line(&self) -> String {
        let [xmin, ymin, xmax, ymax] = self.bbox;
        format!(
            "{} {} {} {} {} {} {} {} {} \"{}\"",
            self.track_id,
            xmin,
            ymin,
            xmax,
            ymax,
            self.frame,
            self.lost as u8,
            self.occluded as u8,
            self.generated as u8,
            self.class_label
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub frame: i64,
    pub x: f64,
    pub y: f64,
    pub lost: bool,
    pub occluded: bool,
    pub generated: bool,
}

impl TrackPoint {
    pub fn at(frame: i64, x: f64, y: f64) -> Self {
        TrackPoint {
            frame,
            x,
            y,
            lost: false,
            occluded: false,
            generated: false,
        }
    }

    pub fn pos(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Source {
    pub dataset: DatasetKind,
    pub scene: String,
    pub video: u32,
}

impl Source {
    pub fn new(dataset: DatasetKind, scene: impl Into<String>, video: u32) -> Self {
        Source {
            dataset,
            scene: scene.into(),
            video,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.dataset, self.scene, self.video)
    }
}

/// Per-frame centers of one track. `segment` is set when lost filtering
/// split the original track into several pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub track_id: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<u32>,
    pub class_label: ClassLabel,
    pub source: Source,
    pub points: Vec<TrackPoint>,
}

impl Trajectory {
    pub fn new(track_id: i64, class_label: ClassLabel, source: Source) -> Self {
        Trajectory {
            track_id,
            segment: None,
            class_label,
            source,
            points: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first_frame(&self) -> Option<i64> {
        self.points.first().map(|p| p.frame)
    }

    pub fn last_frame(&self) -> Option<i64> {
        self.points.last().map(|p| p.frame)
    }

    /// `"12"` for whole tracks, `"12.1"` for the second segment of track 12.
    pub fn display_id(&self) -> String {
        match self.segment {
            Some(s) => format!("{}.{}", self.track_id, s),
            None => self.track_id.to_string(),
        }
    }

    /// Index of `frame` within `points`, if present.
    pub fn index_of(&self, frame: i64) -> Option<usize> {
        self.points.binary_search_by_key(&frame, |p| p.frame).ok()
    }

    pub fn frames_strictly_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[0].frame < w[1].frame)
    }

    pub fn lost_count(&self) -> usize {
        self.points.iter().filter(|p| p.lost).count()
    }
}

/// Non-fatal observation emitted while parsing or preprocessing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub track_id: i64,
    pub message: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_labels_case_insensitive() {
        assert_eq!(ClassLabel::from_sdd("biker"), Some(ClassLabel::Biker));
        assert_eq!(ClassLabel::from_sdd("BIKER"), Some(ClassLabel::Biker));
        assert_eq!(ClassLabel::from_sdd("bicycle"), None);
        assert_eq!(ClassLabel::from_ind("truck_bus"), Some(ClassLabel::TruckBus));
        assert_eq!(ClassLabel::parse("TruckBus"), Some(ClassLabel::TruckBus));
        for c in ClassLabel::SDD.iter().chain(ClassLabel::IND.iter()) {
            assert_eq!(ClassLabel::parse(c.as_str()), Some(*c));
        }
    }

    #[test]
    fn record_center_is_box_midpoint() {
        let r = AnnotationRecord {
            track_id: 0,
            frame: 0,
            bbox: [100, 200, 141, 260],
            lost: false,
            occluded: false,
            generated: false,
            class_label: ClassLabel::Car,
        };
        assert_eq!(r.center(), (120.5, 230.0));
    }
}
