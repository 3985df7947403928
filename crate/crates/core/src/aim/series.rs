use serde::{Deserialize, Serialize};

use super::interactions::{align, AlignedPair, BufferRule, InteractionPair};
use super::kinematics::compute_kinematics;
use super::rho::{compute_rho, Normalizers, RhoConfig};
use crate::dataset_io::Trajectory;
use crate::error::{Error, Result};
use crate::mi_edge::{mi_prefix_series, MiConfig, SamplePair};

/// Everything needed to turn an interaction into a measure series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AimParams {
    pub delta: f64,
    pub window: usize,
    pub buffer: BufferRule,
    pub rho: RhoConfig,
    pub mi: MiConfig,
}

impl AimParams {
    pub fn with_defaults(window: usize) -> Self {
        AimParams {
            delta: 0.98,
            window,
            buffer: BufferRule::Window,
            rho: RhoConfig::default(),
            mi: MiConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if self.window < 2 {
            return Err(Error::Config("window must be at least 2".into()));
        }
        self.rho.validate()?;
        self.mi.validate()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Config(format!("delta must be in (0, 1], got {delta}")));
    }
    Ok(())
}

/// Per-frame MI, rho and AIM for one directed pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSeries {
    pub pair: InteractionPair,
    pub delta: f64,
    pub window: usize,
    pub alpha: f64,
    pub frames: Vec<i64>,
    pub pos_i: Vec<[f64; 2]>,
    pub pos_j: Vec<[f64; 2]>,
    pub mi: Vec<f64>,
    pub rho: Vec<f64>,
    pub aim: Vec<f64>,
}

impl MeasureSeries {
    pub fn final_aim(&self) -> f64 {
        self.aim.last().copied().unwrap_or(0.0)
    }
}

/// `AIM_t = delta * AIM_{t-1} + rho_t * MI_t`, starting from zero.
pub fn accumulate_aim(mi: &[f64], rho: &[f64], delta: f64) -> Result<Vec<f64>> {
    check_delta(delta)?;
    if mi.len() != rho.len() {
        return Err(Error::LengthMismatch {
            expected: mi.len(),
            got: rho.len(),
        });
    }
    let mut acc = 0.0;
    Ok(mi
        .iter()
        .zip(rho)
        .map(|(m, r)| {
            acc = delta * acc + r * m;
            acc
        })
        .collect())
}

fn samples(aligned: &AlignedPair) -> Vec<SamplePair> {
    aligned
        .a
        .iter()
        .zip(&aligned.b)
        .map(|(a, b)| SamplePair::new(*a, *b))
        .collect()
}

/// MI over growing prefixes of the interaction, for frames `from..=last`.
fn mi_from(aligned: &AlignedPair, from: i64, cfg: &MiConfig) -> Result<Vec<f64>> {
    let eval: Vec<usize> = (from..=aligned.last_frame())
        .map(|t| (t - aligned.first_frame + 1) as usize)
        .collect();
    Ok(mi_prefix_series(cfg, &samples(aligned), &eval)?
        .into_iter()
        .map(|(_, v)| v)
        .collect())
}

fn rho_from(aligned: &AlignedPair, from: i64, window: usize, cfg: &RhoConfig, norms: &Normalizers) -> Result<Vec<f64>> {
    (from..=aligned.last_frame())
        .map(|t| Ok(compute_rho(&compute_kinematics(aligned, t, window)?, cfg, norms)))
        .collect()
}

fn build(
    pair: &InteractionPair,
    aligned: &AlignedPair,
    mi: Vec<f64>,
    rho: Vec<f64>,
    delta: f64,
    window: usize,
    alpha: f64,
) -> Result<MeasureSeries> {
    let aim = accumulate_aim(&mi, &rho, delta)?;
    let skip = (pair.buffer_frame - aligned.first_frame) as usize;
    Ok(MeasureSeries {
        pair: pair.clone(),
        delta,
        window,
        alpha,
        frames: (pair.buffer_frame..=pair.last_frame).collect(),
        pos_i: aligned.a[skip..].to_vec(),
        pos_j: aligned.b[skip..].to_vec(),
        mi,
        rho,
        aim,
    })
}

/// MI, rho and AIM at every frame from T' to T.
pub fn measure_pair(
    trajectories: &[Trajectory],
    pair: &InteractionPair,
    params: &AimParams,
    norms: &Normalizers,
) -> Result<MeasureSeries> {
    params.validate()?;
    let aligned = align(trajectories, pair)?;
    if pair.buffer_frame < pair.first_frame + params.window as i64 {
        return Err(Error::Range(format!(
            "buffer frame {} leaves less than one window of history",
            pair.buffer_frame
        )));
    }
    let mi = mi_from(&aligned, pair.buffer_frame, &params.mi)?;
    let rho = rho_from(&aligned, pair.buffer_frame, params.window, &params.rho, norms)?;
    build(pair, &aligned, mi, rho, params.delta, params.window, params.rho.alpha)
}

/// One series per `(window, delta)` combination, windows outermost.
/// Combinations whose buffer does not fit in the interaction are skipped.
pub fn sweep(
    trajectories: &[Trajectory],
    pair: &InteractionPair,
    deltas: &[f64],
    windows: &[usize],
    params: &AimParams,
    norms: &Normalizers,
) -> Result<Vec<MeasureSeries>> {
    if deltas.is_empty() || windows.is_empty() {
        return Ok(Vec::new());
    }
    for &d in deltas {
        check_delta(d)?;
    }
    let variants: Vec<(usize, InteractionPair)> = windows
        .iter()
        .filter_map(|&n| {
            pair.with_buffer(params.buffer, n, params.mi.min_samples)
                .map(|p| (n, p))
        })
        .collect();
    let Some(earliest) = variants.iter().map(|(_, p)| p.buffer_frame).min() else {
        return Ok(Vec::new());
    };
    let aligned = align(trajectories, pair)?;
    let mi_all = mi_from(&aligned, earliest, &params.mi)?;

    let mut out = Vec::new();
    for (n, p) in &variants {
        let mi = mi_all[(p.buffer_frame - earliest) as usize..].to_vec();
        let rho = rho_from(&aligned, p.buffer_frame, *n, &params.rho, norms)?;
        for &delta in deltas {
            out.push(build(
                p,
                &aligned,
                mi.clone(),
                rho.clone(),
                delta,
                *n,
                params.rho.alpha,
            )?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aim::extract_interactions;
    use crate::dataset_io::{ClassLabel, DatasetKind, Source, TrackPoint};

    fn traj(id: i64, f: impl Fn(i64) -> [f64; 2], frames: std::ops::Range<i64>) -> Trajectory {
        let mut t = Trajectory::new(id, ClassLabel::Pedestrian, Source::new(DatasetKind::Sdd, "s", 0));
        t.points = frames
            .map(|k| {
                let p = f(k);
                TrackPoint::at(k, p[0], p[1])
            })
            .collect();
        t
    }

    fn crossing() -> Vec<Trajectory> {
        vec![
            traj(1, |k| [k as f64 * 1.5, 200.0 + (k as f64 * 0.1).sin() * 20.0], 0..300),
            traj(2, |k| [400.0 - k as f64, k as f64 * 0.8], 20..260),
        ]
    }

    const NORMS: Normalizers = Normalizers {
        v_scale: 2.0,
        d_scale: 100.0,
        a_scale: 2.0,
    };

    #[test]
    fn recurrence_cases() {
        assert_eq!(accumulate_aim(&[2.0], &[3.0], 0.5).unwrap(), vec![6.0]);
        let plain = accumulate_aim(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!(plain, vec![1.0, 3.0, 6.0]);
        assert!(accumulate_aim(&[1.0], &[1.0, 2.0], 1.0).is_err());
        assert!(accumulate_aim(&[1.0], &[1.0], 0.0).is_err());
        assert!(accumulate_aim(&[1.0], &[1.0], 1.01).is_err());
        assert!(accumulate_aim(&[], &[], 0.9).unwrap().is_empty());
    }

    #[test]
    fn geometric_limit() {
        let n = 2000;
        let aim = accumulate_aim(&vec![2.0; n], &vec![0.5; n], 0.98).unwrap();
        let limit = 1.0 / (1.0 - 0.98);
        assert!((aim[n - 1] - limit).abs() < 1e-9 * limit);
        assert!(aim.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn measure_pair_shapes() {
        let t = crossing();
        let pairs = extract_interactions(&t, 30, BufferRule::Window, 10);
        assert_eq!(pairs.len(), 2);
        let params = AimParams::with_defaults(30);
        let s = measure_pair(&t, &pairs[0], &params, &NORMS).unwrap();
        assert_eq!(s.frames.first(), Some(&50));
        assert_eq!(s.frames.last(), Some(&259));
        assert_eq!(s.mi.len(), s.frames.len());
        assert_eq!(s.pos_i[0], [75.0, t[0].points[50].y]);
        assert!(s.aim.iter().all(|v| *v >= 0.0 && v.is_finite()));
        assert!(s.mi.iter().all(|v| *v >= 0.0));

        let r = measure_pair(&t, &pairs[1], &params, &NORMS).unwrap();
        assert_eq!(r.mi, s.mi);
        assert_eq!(r.pos_i, s.pos_j);
    }

    #[test]
    fn sweep_counts_and_dominance() {
        let t = crossing();
        let pair = &extract_interactions(&t, 30, BufferRule::Window, 10)[0];
        let params = AimParams::with_defaults(30);
        let out = sweep(&t, pair, &[1.0, 0.98, 0.95], &[30], &params, &NORMS).unwrap();
        assert_eq!(out.len(), 3);
        for k in 0..out[0].aim.len() {
            assert!(out[0].aim[k] >= out[1].aim[k]);
            assert!(out[1].aim[k] >= out[2].aim[k]);
        }
        let direct = measure_pair(&t, pair, &params, &NORMS).unwrap();
        assert_eq!(direct, out[1]);
        assert!(sweep(&t, pair, &[], &[30], &params, &NORMS).unwrap().is_empty());
        assert!(sweep(&t, pair, &[1.0], &[], &params, &NORMS).unwrap().is_empty());
        let ns = sweep(&t, pair, &[0.98], &[5, 30, 100], &params, &NORMS).unwrap();
        assert_eq!(ns.iter().map(|s| s.window).collect::<Vec<_>>(), vec![5, 30, 100]);
        assert_eq!(ns[0].frames[0], 20 + 9);
    }
}
