use serde::{Deserialize, Serialize};

use super::interactions::AlignedPair;
use crate::error::{Error, Result};

/// Window statistics for the directed pair `I -> J` ending at frame `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Kinematics {
    /// Mean step length of I plus mean step length of J (pixels per frame).
    pub v: f64,
    /// Mean separation (pixels).
    pub d: f64,
    /// Mean angle between I's step and the bearing to J, in `[0, pi]`.
    pub h: f64,
    /// Mean absolute change of step length, summed over both agents.
    pub a: f64,
}

fn sub(p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    [p[0] - q[0], p[1] - q[1]]
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Unsigned angle between two non-zero vectors, in `[0, pi]`.
pub fn unsigned_angle(u: [f64; 2], v: [f64; 2]) -> f64 {
    let cross = u[0] * v[1] - u[1] * v[0];
    let dot = u[0] * v[0] + u[1] * v[1];
    cross.abs().atan2(dot)
}

/// Kinematics over the `window` steps ending at frame `t`, i.e. positions at
/// frames `t - window ..= t`.
///
/// Steps where I does not move, or where I and J coincide, have no defined
/// heading angle and are left out of the H average; H is 0 if no step
/// qualifies.
pub fn compute_kinematics(pair: &AlignedPair, t: i64, window: usize) -> Result<Kinematics> {
    if window < 2 {
        return Err(Error::Config("kinematics window must be at least 2".into()));
    }
    let end = t - pair.first_frame;
    let start = end - window as i64;
    if start < 0 || end >= pair.len() as i64 {
        return Err(Error::Range(format!(
            "window [{}, {t}] outside co-present frames [{}, {}]",
            t - window as i64,
            pair.first_frame,
            pair.last_frame()
        )));
    }
    let (start, end) = (start as usize, end as usize);
    let n = window as f64;

    let mut v = 0.0;
    let mut d = 0.0;
    let mut h_sum = 0.0;
    let mut h_count = 0usize;
    let mut a = 0.0;
    let mut prev_speed: Option<(f64, f64)> = None;
    for m in start + 1..=end {
        let step_i = sub(pair.a[m], pair.a[m - 1]);
        let step_j = sub(pair.b[m], pair.b[m - 1]);
        let (si, sj) = (norm(step_i), norm(step_j));
        v += si + sj;
        d += norm(sub(pair.a[m], pair.b[m]));
        if let Some((pi, pj)) = prev_speed {
            a += (si - pi).abs() + (sj - pj).abs();
        }
        prev_speed = Some((si, sj));

        let bearing = sub(pair.b[m - 1], pair.a[m - 1]);
        if si > 0.0 && norm(bearing) > 0.0 {
            h_sum += unsigned_angle(bearing, step_i);
            h_count += 1;
        }
    }
    Ok(Kinematics {
        v: v / n,
        d: d / n,
        h: if h_count == 0 { 0.0 } else { h_sum / h_count as f64 },
        a: a / (n - 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pair(a: Vec<[f64; 2]>, b: Vec<[f64; 2]>) -> AlignedPair {
        AlignedPair { first_frame: 100, a, b }
    }

    fn walk(start: [f64; 2], step: [f64; 2], n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|k| [start[0] + step[0] * k as f64, start[1] + step[1] * k as f64])
            .collect()
    }

    #[test]
    fn stationary_agents() {
        let p = pair(vec![[0.0, 0.0]; 40], vec![[3.0, 4.0]; 40]);
        let k = compute_kinematics(&p, 130, 30).unwrap();
        assert_eq!(k.v, 0.0);
        assert_eq!(k.h, 0.0);
        assert_eq!(k.a, 0.0);
        assert!((k.d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn heading_toward_and_away() {
        let j = vec![[1000.0, 0.0]; 40];
        let toward = pair(walk([0.0, 0.0], [1.0, 0.0], 40), j.clone());
        assert_eq!(compute_kinematics(&toward, 139, 30).unwrap().h, 0.0);
        let away = pair(walk([0.0, 0.0], [-1.0, 0.0], 40), j);
        assert!((compute_kinematics(&away, 139, 30).unwrap().h - PI).abs() < 1e-12);
    }

    #[test]
    fn perpendicular_heading() {
        let p = pair(walk([0.0, 0.0], [0.0, 1.0], 40), vec![[1e6, 0.0]; 40]);
        let h = compute_kinematics(&p, 139, 30).unwrap().h;
        assert!((h - PI / 2.0).abs() < 1e-4);
    }

    #[test]
    fn constant_velocity_is_exact() {
        let p = pair(walk([0.0, 0.0], [3.0, 4.0], 50), walk([7.0, 1.0], [-6.0, 8.0], 50));
        for t in 130..150 {
            let k = compute_kinematics(&p, t, 30).unwrap();
            assert_eq!(k.v, 15.0);
            assert_eq!(k.a, 0.0);
        }
    }

    #[test]
    fn window_bounds() {
        let p = pair(vec![[0.0, 0.0]; 40], vec![[1.0, 0.0]; 40]);
        assert!(compute_kinematics(&p, 129, 30).is_err());
        assert!(compute_kinematics(&p, 130, 30).is_ok());
        assert!(compute_kinematics(&p, 139, 30).is_ok());
        assert!(compute_kinematics(&p, 140, 30).is_err());
        assert!(compute_kinematics(&p, 139, 1).is_err());
    }

    #[test]
    fn acceleration_term() {
        // I alternates step lengths 1 and 3 along x; J is still.
        let mut a = vec![[0.0, 0.0]];
        for k in 0..10 {
            let last = a[a.len() - 1];
            a.push([last[0] + if k % 2 == 0 { 1.0 } else { 3.0 }, 0.0]);
        }
        let p = pair(a, vec![[0.0, 50.0]; 11]);
        let k = compute_kinematics(&p, 110, 10).unwrap();
        assert_eq!(k.a, 2.0);
        assert_eq!(k.v, 2.0);
    }
}
