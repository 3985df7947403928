use std::collections::BTreeMap;

use super::{AnnotationRecord, Diagnostic, Source, TrackPoint, Trajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Assembled {
    /// Sorted by track id.
    pub trajectories: Vec<Trajectory>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Groups one video's records into per-track trajectories sorted by frame.
///
/// The class of a track is the label at its first frame. Tracks whose label
/// changes later produce a diagnostic.
pub fn assemble_trajectories(records: &[AnnotationRecord], source: &Source) -> Result<Assembled> {
    let mut by_track: BTreeMap<i64, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in records {
        by_track.entry(r.track_id).or_default().push(r);
    }

    let mut out = Assembled::default();
    for (track_id, mut recs) in by_track {
        recs.sort_by_key(|r| r.frame);
        if let Some(w) = recs.windows(2).find(|w| w[0].frame == w[1].frame) {
            return Err(Error::structural(
                track_id,
                format!("duplicate annotation at frame {}", w[0].frame),
            ));
        }
        let class_label = recs[0].class_label;
        let mut labels: Vec<_> = recs.iter().map(|r| r.class_label).collect();
        labels.dedup();
        if labels.len() > 1 {
            let names: Vec<&str> = labels.iter().map(|c| c.as_str()).collect();
            out.diagnostics.push(Diagnostic {
                track_id,
                message: format!(
                    "class label changes mid-track ({}); using {}",
                    names.join(" -> "),
                    class_label
                ),
            });
        }
        let mut traj = Trajectory::new(track_id, class_label, source.clone());
        traj.points = recs
            .iter()
            .map(|r| {
                let (x, y) = r.center();
                TrackPoint {
                    frame: r.frame,
                    x,
                    y,
                    lost: r.lost,
                    occluded: r.occluded,
                    generated: r.generated,
                }
            })
            .collect();
        out.trajectories.push(traj);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::{ClassLabel, DatasetKind};
    use proptest::prelude::*;

    fn rec(track_id: i64, frame: i64, class_label: ClassLabel) -> AnnotationRecord {
        AnnotationRecord {
            track_id,
            frame,
            bbox: [0, 0, 10, 20],
            lost: false,
            occluded: false,
            generated: false,
            class_label,
        }
    }

    fn src() -> Source {
        Source::new(DatasetKind::Sdd, "coupa", 0)
    }

    #[test]
    fn sorts_frames() {
        let a = assemble_trajectories(&[rec(1, 10, ClassLabel::Biker), rec(1, 5, ClassLabel::Biker)], &src()).unwrap();
        assert_eq!(a.trajectories.len(), 1);
        let frames: Vec<i64> = a.trajectories[0].points.iter().map(|p| p.frame).collect();
        assert_eq!(frames, vec![5, 10]);
        assert_eq!(a.trajectories[0].points[0].pos(), [5.0, 10.0]);
    }

    #[test]
    fn two_tracks() {
        let a = assemble_trajectories(&[rec(2, 1, ClassLabel::Car), rec(1, 1, ClassLabel::Car)], &src()).unwrap();
        let ids: Vec<i64> = a.trajectories.iter().map(|t| t.track_id).collect();
        assert_eq!(ids, vec![1, 2]);
    }

    #[test]
    fn duplicate_frame_is_error() {
        let err = assemble_trajectories(&[rec(1, 5, ClassLabel::Car), rec(1, 5, ClassLabel::Car)], &src()).unwrap_err();
        assert!(matches!(err, Error::Structural { track_id: 1, .. }));
    }

    #[test]
    fn label_change_keeps_first_and_reports() {
        let a = assemble_trajectories(
            &[
                rec(7, 3, ClassLabel::Biker),
                rec(7, 1, ClassLabel::Pedestrian),
                rec(7, 2, ClassLabel::Pedestrian),
            ],
            &src(),
        )
        .unwrap();
        assert_eq!(a.trajectories[0].class_label, ClassLabel::Pedestrian);
        assert_eq!(a.diagnostics.len(), 1);
        assert_eq!(a.diagnostics[0].track_id, 7);
    }

    proptest! {
        #[test]
        fn assembly_partitions_records(
            keys in prop::collection::btree_set((0i64..20, 0i64..200), 0..300)
        ) {
            let records: Vec<_> = keys.iter().map(|&(t, f)| rec(t, f, ClassLabel::Pedestrian)).collect();
            let a = assemble_trajectories(&records, &src()).unwrap();
            let total: usize = a.trajectories.iter().map(|t| t.len()).sum();
            prop_assert_eq!(total, records.len());
            for t in &a.trajectories {
                prop_assert!(t.frames_strictly_increasing());
                prop_assert!(t.points.iter().all(|p| keys.contains(&(t.track_id, p.frame))));
            }
        }
    }
}
