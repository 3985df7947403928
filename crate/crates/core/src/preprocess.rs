//! Lost-annotation filtering, frame-rate resampling and observation /
//! prediction windowing.

use serde::{Deserialize, Serialize};

use crate::dataset_io::{ClassLabel, Diagnostic, Source, TrackPoint, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LostPolicy {
    /// Drop lost points; if that splits the track, keep only the first piece.
    #[default]
    FilterKeepFirst,
    /// Drop lost points; every remaining piece becomes its own trajectory.
    FilterKeepAll,
    KeepLost,
}

impl LostPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            LostPolicy::FilterKeepFirst => "filter_keep_first",
            LostPolicy::FilterKeepAll => "filter_keep_all",
            LostPolicy::KeepLost => "keep_lost",
        }
    }
}

impl std::str::FromStr for LostPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "filter_keep_first" => Ok(LostPolicy::FilterKeepFirst),
            "filter_keep_all" => Ok(LostPolicy::FilterKeepAll),
            "keep_lost" => Ok(LostPolicy::KeepLost),
            other => Err(Error::Config(format!("unknown lost policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub lost_policy: LostPolicy,
    pub drop_generated: bool,
    /// Frames per second after resampling.
    pub target_rate: f64,
    pub observe_len: usize,
    pub predict_len: usize,
    /// Points between window starts; `None` tiles with full windows.
    pub stride: Option<usize>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            lost_policy: LostPolicy::FilterKeepFirst,
            drop_generated: false,
            target_rate: 2.5,
            observe_len: 8,
            predict_len: 12,
            stride: None,
        }
    }
}

impl PreprocessConfig {
    pub fn window_len(&self) -> usize {
        self.observe_len + self.predict_len
    }

    pub fn stride(&self) -> usize {
        self.stride.unwrap_or_else(|| self.window_len())
    }

    pub fn validate(&self, native_rate: f64) -> Result<()> {
        if self.observe_len < 2 {
            return Err(Error::Config("observe_len must be at least 2".into()));
        }
        if self.predict_len < 1 {
            return Err(Error::Config("predict_len must be at least 1".into()));
        }
        if self.stride == Some(0) {
            return Err(Error::Config("stride must be positive".into()));
        }
        resample_step(native_rate, self.target_rate).map(|_| ())
    }
}

/// Which parts of a trajectory carry lost annotations. The flags are
/// independent of each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LostPositions {
    pub start: bool,
    pub middle: bool,
    pub end: bool,
}

pub fn classify_lost_positions(traj: &Trajectory) -> LostPositions {
    let pts = &traj.points;
    let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
        return LostPositions::default();
    };
    // A lost run is "middle" when a present point precedes it and another
    // follows it.
    let mut middle = false;
    let mut seen_present = false;
    let mut in_lost_run_after_present = false;
    for p in pts {
        if p.lost {
            if seen_present {
                in_lost_run_after_present = true;
            }
        } else {
            if in_lost_run_after_present {
                middle = true;
                break;
            }
            seen_present = true;
        }
    }
    LostPositions {
        start: first.lost,
        middle,
        end: last.lost,
    }
}

/// Maximal runs of consecutive points for which `keep` holds.
fn kept_runs<'a>(
    points: &'a [TrackPoint],
    keep: impl Fn(&TrackPoint) -> bool + 'a,
) -> impl Iterator<Item = &'a [TrackPoint]> + 'a {
    points.split(move |p| !keep(p)).filter(|run| !run.is_empty())
}

pub fn filter_lost(traj: &Trajectory, policy: LostPolicy) -> Vec<Trajectory> {
    let with_points = |points: &[TrackPoint], segment: Option<u32>| Trajectory {
        track_id: traj.track_id,
        segment,
        class_label: traj.class_label,
        source: traj.source.clone(),
        points: points.to_vec(),
    };
    match policy {
        LostPolicy::KeepLost => vec![traj.clone()],
        LostPolicy::FilterKeepFirst => kept_runs(&traj.points, |p| !p.lost)
            .next()
            .map(|run| vec![with_points(run, traj.segment)])
            .unwrap_or_default(),
        LostPolicy::FilterKeepAll => {
            let runs: Vec<_> = kept_runs(&traj.points, |p| !p.lost).collect();
            if runs.len() == 1 {
                return vec![with_points(runs[0], traj.segment)];
            }
            runs.iter()
                .enumerate()
                .map(|(i, run)| with_points(run, Some(i as u32)))
                .collect()
        }
    }
}

/// Number of native frames between retained points.
pub fn resample_step(native_rate: f64, target_rate: f64) -> Result<usize> {
    if !(native_rate > 0.0 && target_rate > 0.0) {
        return Err(Error::Config("frame rates must be positive".into()));
    }
    let k = native_rate / target_rate;
    let rounded = k.round();
    if rounded < 1.0 || (k - rounded).abs() > 1e-9 * k {
        return Err(Error::Config(format!(
            "target rate {target_rate} does not divide native rate {native_rate}"
        )));
    }
    Ok(rounded as usize)
}

/// Keeps points whose frame lies on the grid `first_frame + j*k`.
///
/// For frame-contiguous tracks this is every k-th point starting at index 0.
pub fn resample(traj: &Trajectory, native_rate: f64, target_rate: f64) -> Result<Trajectory> {
    let k = resample_step(native_rate, target_rate)? as i64;
    let mut out = traj.clone();
    if let Some(first) = traj.first_frame() {
        out.points.retain(|p| (p.frame - first) % k == 0);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrackRef {
    pub source: Source,
    pub track_id: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<u32>,
}

impl TrackRef {
    pub fn of(traj: &Trajectory) -> Self {
        TrackRef {
            source: traj.source.clone(),
            track_id: traj.track_id,
            segment: traj.segment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryWindow {
    pub track: TrackRef,
    pub class_label: ClassLabel,
    /// Native frame of the first observed point.
    pub start_frame: i64,
    /// Native frames between consecutive points.
    pub frame_step: i64,
    pub observed: Vec<[f64; 2]>,
    pub future: Vec<[f64; 2]>,
    /// Lost flags of the observed and future points, in order.
    pub lost: Vec<bool>,
}

impl TrajectoryWindow {
    /// Stable identifier: `dataset/scene/video/track[.segment]/start_frame`.
    pub fn id(&self) -> String {
        let track = match self.track.segment {
            Some(s) => format!("{}.{}", self.track.track_id, s),
            None => self.track.track_id.to_string(),
        };
        format!("{}/{}/{}", self.track.source, track, self.start_frame)
    }

    /// Straight-line distance between the first and last observed points.
    pub fn observed_displacement(&self) -> f64 {
        let a = self.observed[0];
        let b = self.observed[self.observed.len() - 1];
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }
}

/// Tiles a resampled trajectory into `observe_len + predict_len` windows.
///
/// Windows never straddle a point pair whose frames are not exactly
/// `frame_step` apart; such gaps restart tiling. Remainders shorter than a
/// full window are discarded.
pub fn window(traj: &Trajectory, cfg: &PreprocessConfig, frame_step: i64) -> Vec<TrajectoryWindow> {
    let len = cfg.window_len();
    let stride = cfg.stride();
    let pts = &traj.points;
    let mut out = Vec::new();
    let mut run_start = 0;
    while run_start < pts.len() {
        let mut run_end = run_start + 1;
        while run_end < pts.len() && pts[run_end].frame - pts[run_end - 1].frame == frame_step {
            run_end += 1;
        }
        let run = &pts[run_start..run_end];
        let mut s = 0;
        while s + len <= run.len() {
            let w = &run[s..s + len];
            out.push(TrajectoryWindow {
                track: TrackRef::of(traj),
                class_label: traj.class_label,
                start_frame: w[0].frame,
                frame_step,
                observed: w[..cfg.observe_len].iter().map(TrackPoint::pos).collect(),
                future: w[cfg.observe_len..].iter().map(TrackPoint::pos).collect(),
                lost: w.iter().map(|p| p.lost).collect(),
            });
            s += stride;
        }
        run_start = run_end;
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct Preprocessed {
    pub trajectories: Vec<Trajectory>,
    pub windows: Vec<TrajectoryWindow>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Lost handling, optional removal of generated points, resampling and
/// windowing for a set of raw trajectories from one dataset.
pub fn preprocess(raw: &[Trajectory], cfg: &PreprocessConfig, native_rate: f64) -> Result<Preprocessed> {
    cfg.validate(native_rate)?;
    let k = resample_step(native_rate, cfg.target_rate)?;
    let mut out = Preprocessed::default();
    for traj in raw {
        let pieces = filter_lost(traj, cfg.lost_policy);
        if pieces.is_empty() {
            out.diagnostics.push(Diagnostic {
                track_id: traj.track_id,
                message: "every point is lost; trajectory dropped".into(),
            });
        }
        for mut piece in pieces {
            if cfg.drop_generated {
                piece.points.retain(|p| !p.generated);
                if piece.is_empty() {
                    continue;
                }
            }
            let resampled = resample(&piece, native_rate, cfg.target_rate)?;
            out.windows.extend(window(&resampled, cfg, k as i64));
            out.trajectories.push(resampled);
        }
    }
    Ok(out)
}
