#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use trajaim_core::dataset_io::{ClassLabel, DatasetKind, Source, TrackPoint, Trajectory};

/// One synthetic SDD track: `(frame, cx, cy, lost)` per point.
pub struct Track {
    pub id: i64,
    pub label: &'static str,
    pub points: Vec<(i64, f64, f64, bool)>,
}

pub fn track(
    id: i64,
    label: &'static str,
    frames: std::ops::RangeInclusive<i64>,
    f: impl Fn(i64) -> (f64, f64, bool),
) -> Track {
    Track {
        id,
        label,
        points: frames
            .map(|k| {
                let (x, y, lost) = f(k);
                (k, x, y, lost)
            })
            .collect(),
    }
}

/// Serializes tracks in SDD's annotation format with 20x20 px boxes.
pub fn sdd_text(tracks: &[Track]) -> String {
    let mut out = String::new();
    for t in tracks {
        for &(frame, x, y, lost) in &t.points {
            let (cx, cy) = (x.round() as i64, y.round() as i64);
            writeln!(
                out,
                "{} {} {} {} {} {} {} 0 0 \"{}\"",
                t.id,
                cx - 10,
                cy - 10,
                cx + 10,
                cy + 10,
                frame,
                lost as u8,
                t.label
            )
            .unwrap();
        }
    }
    out
}

pub fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

/// Two small SDD scenes:
///
/// coupa/video0
/// - 0: pedestrian walking right, lost for its first 30 frames
/// - 1: pedestrian walking left and weaving, lost for its last 30 frames
/// - 2: biker walking down, lost for 10 frames in the middle
/// - 4 -> 9 -> 5: one walker annotated under three ids
/// - 7: stationary pedestrian, never co-present with 0 or 1
///
/// quad/video0
/// - 0: pedestrian, 1: biker, always present
pub fn sdd_fixture(root: &Path) {
    let coupa = vec![
        track(0, "Pedestrian", 0..=299, |k| (100.0 + k as f64, 200.0, k < 30)),
        track(1, "Pedestrian", 0..=299, |k| {
            (400.0 - k as f64, 220.0 + 10.0 * (k as f64 / 20.0).sin(), k >= 270)
        }),
        track(2, "Biker", 50..=349, |k| {
            (250.0, 50.0 + k as f64, (150..160).contains(&k))
        }),
        track(4, "Pedestrian", 400..=499, |k| (100.0 + k as f64, 500.0, false)),
        track(9, "Pedestrian", 510..=609, |k| (92.0 + k as f64, 500.0, false)),
        track(5, "Pedestrian", 620..=719, |k| (83.0 + k as f64, 501.0, false)),
        track(7, "Pedestrian", 800..=900, |_| (50.0, 50.0, false)),
    ];
    write(&root.join("coupa/video0/annotations.txt"), &sdd_text(&coupa));
    let quad = vec![
        track(0, "Pedestrian", 0..=239, |k| (10.0 + k as f64 * 0.5, 10.0, false)),
        track(1, "Biker", 0..=239, |k| (10.0, 300.0 - k as f64, false)),
    ];
    write(&root.join("quad/video0/annotations.txt"), &sdd_text(&quad));
}

/// One inD recording (id 31, location 4) with a car and a pedestrian.
pub fn ind_fixture(dir: &Path) {
    let mut tracks = String::from("recordingId,trackId,frame,trackLifetime,xCenter,yCenter,heading\n");
    for f in 0..100 {
        writeln!(tracks, "31,0,{f},{f},{:.4},{:.4},0", 10.0 + 0.4 * f as f64, -20.0).unwrap();
    }
    for f in 20..120 {
        writeln!(
            tracks,
            "31,1,{f},{},{:.4},{:.4},90",
            f - 20,
            25.0,
            -5.0 - 0.1 * f as f64
        )
        .unwrap();
    }
    write(&dir.join("31_tracks.csv"), &tracks);
    write(
        &dir.join("31_tracksMeta.csv"),
        "recordingId,trackId,initialFrame,finalFrame,numFrames,width,length,class\n31,0,0,99,100,1.8,4.5,car\n31,1,20,119,100,0,0,pedestrian\n",
    );
    write(
        &dir.join("31_recordingMeta.csv"),
        "recordingId,locationId,frameRate,speedLimit,weekday,startTime,duration,numTracks,numVehicles,numVRUs,latLocation,lonLocation,xUtmOrigin,yUtmOrigin,orthoPxToMeter\n31,4,25,13.89,Monday,8,3.96,2,1,1,50.7,6.1,0,0,0.0126999352667008\n",
    );
}

pub fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    write(&path, body);
    path
}

/// The lost-annotation bias fixture at SDD's 30 fps: a pedestrian whose
/// first 240 frames are lost and frozen at the scene boundary, followed by
/// 240 frames of motion along a turning path.
pub fn bias_fixture() -> Trajectory {
    let mut t = Trajectory::new(3, ClassLabel::Pedestrian, Source::new(DatasetKind::Sdd, "little", 0));
    t.points = (0..480)
        .map(|k| {
            if k < 240 {
                TrackPoint {
                    lost: true,
                    ..TrackPoint::at(k, 0.0, 150.0)
                }
            } else {
                let s = (k - 240) as f64;
                TrackPoint::at(k, 2.0 * s, 150.0 + 0.004 * s * s)
            }
        })
        .collect();
    t
}
