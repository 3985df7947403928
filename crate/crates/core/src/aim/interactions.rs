use serde::{Deserialize, Serialize};

use crate::dataset_io::{Source, Trajectory};
use crate::error::{Error, Result};

/// Where accumulation starts relative to the first co-present frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferRule {
    /// One kinematics window after the first common frame.
    #[default]
    Window,
    /// A fixed number of frames after the first common frame, never less
    /// than one window.
    Frames(i64),
}

impl BufferRule {
    /// Offset from the first common frame. Also guarantees the MI estimator
    /// has `min_samples` samples at the first evaluated frame.
    pub fn offset(self, window: usize, min_samples: usize) -> i64 {
        let floor = (window as i64).max(min_samples as i64 - 1);
        match self {
            BufferRule::Window => floor,
            BufferRule::Frames(k) => k.max(floor),
        }
    }
}

/// Directed interaction `I -> J` over a contiguous run of co-present frames.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionPair {
    /// Index of agent I in the trajectory slice the pair was extracted from.
    pub agent_i: usize,
    pub agent_j: usize,
    pub id_i: String,
    pub id_j: String,
    pub source: Source,
    pub first_frame: i64,
    /// First accumulated frame (T').
    pub buffer_frame: i64,
    /// Last co-present frame (T).
    pub last_frame: i64,
}

impl InteractionPair {
    pub fn reversed(&self) -> Self {
        InteractionPair {
            agent_i: self.agent_j,
            agent_j: self.agent_i,
            id_i: self.id_j.clone(),
            id_j: self.id_i.clone(),
            ..self.clone()
        }
    }

    pub fn co_present_len(&self) -> usize {
        (self.last_frame - self.first_frame + 1) as usize
    }

    /// Same pair with the buffer recomputed for another window length.
    /// `None` when the co-present run is too short.
    pub fn with_buffer(&self, rule: BufferRule, window: usize, min_samples: usize) -> Option<Self> {
        let buffer_frame = self.first_frame + rule.offset(window, min_samples);
        (buffer_frame <= self.last_frame).then(|| InteractionPair {
            buffer_frame,
            ..self.clone()
        })
    }
}

/// Positions of both agents at every frame of the co-present run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPair {
    pub first_frame: i64,
    pub a: Vec<[f64; 2]>,
    pub b: Vec<[f64; 2]>,
}

impl AlignedPair {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn last_frame(&self) -> i64 {
        self.first_frame + self.a.len() as i64 - 1
    }

    pub fn reversed(&self) -> Self {
        AlignedPair {
            first_frame: self.first_frame,
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

/// First run of consecutive frames present in both trajectories.
pub fn co_present_run(a: &Trajectory, b: &Trajectory) -> Option<AlignedPair> {
    let (mut i, mut j) = (0, 0);
    while i < a.points.len() && j < b.points.len() {
        let (fa, fb) = (a.points[i].frame, b.points[j].frame);
        if fa < fb {
            i += 1;
        } else if fb < fa {
            j += 1;
        } else {
            break;
        }
    }
    if i >= a.points.len() || j >= b.points.len() {
        return None;
    }
    let first_frame = a.points[i].frame;
    let mut out = AlignedPair {
        first_frame,
        a: Vec::new(),
        b: Vec::new(),
    };
    let mut expected = first_frame;
    while i < a.points.len() && j < b.points.len() && a.points[i].frame == expected && b.points[j].frame == expected {
        out.a.push(a.points[i].pos());
        out.b.push(b.points[j].pos());
        i += 1;
        j += 1;
        expected += 1;
    }
    Some(out)
}

pub fn align(trajectories: &[Trajectory], pair: &InteractionPair) -> Result<AlignedPair> {
    let (a, b) = (&trajectories[pair.agent_i], &trajectories[pair.agent_j]);
    let aligned = co_present_run(a, b)
        .ok_or_else(|| Error::Range(format!("tracks {} and {} are never co-present", pair.id_i, pair.id_j)))?;
    if aligned.first_frame != pair.first_frame || aligned.last_frame() != pair.last_frame {
        return Err(Error::Range(format!(
            "pair {}->{} does not match the trajectories' co-present run",
            pair.id_i, pair.id_j
        )));
    }
    Ok(aligned)
}

/// Both directions of every pair of trajectories that share enough
/// consecutive frames for at least one accumulated frame.
pub fn extract_interactions(
    trajectories: &[Trajectory],
    window: usize,
    rule: BufferRule,
    min_samples: usize,
) -> Vec<InteractionPair> {
    let offset = rule.offset(window, min_samples);
    let mut out = Vec::new();
    for (ia, a) in trajectories.iter().enumerate() {
        for (ib, b) in trajectories.iter().enumerate().skip(ia + 1) {
            if a.last_frame() < b.first_frame() || b.last_frame() < a.first_frame() {
                continue;
            }
            let Some(run) = co_present_run(a, b) else { continue };
            let buffer_frame = run.first_frame + offset;
            if buffer_frame > run.last_frame() {
                continue;
            }
            let pair = InteractionPair {
                agent_i: ia,
                agent_j: ib,
                id_i: a.display_id(),
                id_j: b.display_id(),
                source: a.source.clone(),
                first_frame: run.first_frame,
                buffer_frame,
                last_frame: run.last_frame(),
            };
            let reversed = pair.reversed();
            out.push(pair);
            out.push(reversed);
        }
    }
    out
}
