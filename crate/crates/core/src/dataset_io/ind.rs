use std::collections::BTreeMap;
use std::io::Read;

use serde::Deserialize;

use super::{ClassLabel, DatasetKind, Source, TrackPoint, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
struct TrackRow {
    #[serde(rename = "trackId")]
    track_id: i64,
    frame: i64,
    #[serde(rename = "xCenter")]
    x_center: f64,
    #[serde(rename = "yCenter")]
    y_center: f64,
}

#[derive(Debug, Deserialize)]
struct TrackMetaRow {
    #[serde(rename = "trackId")]
    track_id: i64,
    #[serde(rename = "numFrames")]
    num_frames: usize,
    class: String,
}

#[derive(Debug, Deserialize)]
struct RecordingMetaRow {
    #[serde(rename = "recordingId")]
    recording_id: u32,
    #[serde(rename = "locationId")]
    location_id: u32,
    #[serde(rename = "frameRate")]
    frame_rate: f64,
    #[serde(rename = "orthoPxToMeter")]
    ortho_px_to_meter: f64,
}

/// One parsed inD recording with centers converted to pixels.
#[derive(Debug, Clone)]
pub struct IndRecording {
    pub recording_id: u32,
    pub location_id: u32,
    pub frame_rate: f64,
    /// Meters per pixel.
    pub px_to_meter: f64,
    pub trajectories: Vec<Trajectory>,
}

/// inD stores y increasing upward; pixel rows increase downward.
pub fn meters_to_pixels(x_m: f64, y_m: f64, px_to_meter: f64) -> (f64, f64) {
    (x_m / px_to_meter, -y_m / px_to_meter)
}

pub fn pixels_to_meters(x_px: f64, y_px: f64, px_to_meter: f64) -> (f64, f64) {
    (x_px * px_to_meter, -y_px * px_to_meter)
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

/// Parses the three CSV files of one inD recording.
///
/// The scene of every trajectory is `location<locationId>`; callers that
/// group recordings by intersection range re-label it from the registry.
pub fn parse_ind_tracks<A: Read, B: Read, C: Read>(
    tracks: A,
    tracks_meta: B,
    recording_meta: C,
) -> Result<IndRecording> {
    let mut rec_rows = csv_reader(recording_meta).into_deserialize::<RecordingMetaRow>();
    let rec = match rec_rows.next() {
        Some(row) => row?,
        None => return Err(Error::parse(2, "recordingMeta has no data row")),
    };
    if !rec.ortho_px_to_meter.is_finite() || rec.ortho_px_to_meter <= 0.0 {
        return Err(Error::Domain(format!(
            "recording {}: orthoPxToMeter must be positive, got {}",
            rec.recording_id, rec.ortho_px_to_meter
        )));
    }

    let mut meta = BTreeMap::new();
    for row in csv_reader(tracks_meta).into_deserialize::<TrackMetaRow>() {
        let row = row?;
        let class = ClassLabel::from_ind(&row.class)
            .ok_or_else(|| Error::structural(row.track_id, format!("unknown class {:?}", row.class)))?;
        meta.insert(row.track_id, (class, row.num_frames));
    }

    let mut points: BTreeMap<i64, Vec<(i64, f64, f64)>> = BTreeMap::new();
    for row in csv_reader(tracks).into_deserialize::<TrackRow>() {
        let row = row?;
        points
            .entry(row.track_id)
            .or_default()
            .push((row.frame, row.x_center, row.y_center));
    }

    let source = Source::new(
        DatasetKind::Ind,
        format!("location{}", rec.location_id),
        rec.recording_id,
    );
    let mut trajectories = Vec::with_capacity(points.len());
    for (track_id, mut pts) in points {
        let &(class_label, num_frames) = meta
            .get(&track_id)
            .ok_or_else(|| Error::structural(track_id, "missing from tracksMeta"))?;
        pts.sort_by_key(|p| p.0);
        if let Some(w) = pts.windows(2).find(|w| w[1].0 != w[0].0 + 1) {
            return Err(Error::structural(
                track_id,
                format!("frame gap between {} and {}", w[0].0, w[1].0),
            ));
        }
        if pts.len() != num_frames {
            return Err(Error::structural(
                track_id,
                format!("{} frames in tracks, numFrames = {num_frames}", pts.len()),
            ));
        }
        let mut traj = Trajectory::new(track_id, class_label, source.clone());
        traj.points = pts
            .into_iter()
            .map(|(frame, xm, ym)| {
                let (x, y) = meters_to_pixels(xm, ym, rec.ortho_px_to_meter);
                TrackPoint::at(frame, x, y)
            })
            .collect();
        trajectories.push(traj);
    }

    Ok(IndRecording {
        recording_id: rec.recording_id,
        location_id: rec.location_id,
        frame_rate: rec.frame_rate,
        px_to_meter: rec.ortho_px_to_meter,
        trajectories,
    })
}
