use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::interactions::{AlignedPair, InteractionPair};
use super::kinematics::{compute_kinematics, Kinematics};
use crate::dataset_io::Trajectory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhoConfig {
    pub alpha: f64,
    /// Kinematics window in native frames; dataset default when `None`.
    pub window: Option<usize>,
    pub use_v: bool,
    pub use_d: bool,
    pub use_h: bool,
    pub use_a: bool,
    /// Speed scale `v0` in `V / (V + v0)`; median windowed V when `None`.
    pub v_scale: Option<f64>,
    /// Distance scale in `exp(-D / scale)`; scene diagonal / 8 when `None`.
    pub d_scale: Option<f64>,
    /// Scale for the acceleration term; `v_scale` when `None`.
    pub a_scale: Option<f64>,
}

impl Default for RhoConfig {
    fn default() -> Self {
        RhoConfig {
            alpha: 0.3,
            window: None,
            use_v: true,
            use_d: true,
            use_h: true,
            use_a: false,
            v_scale: None,
            d_scale: None,
            a_scale: None,
        }
    }
}

impl RhoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if let Some(n) = self.window {
            if n < 2 {
                return Err(Error::Config("rho window must be at least 2".into()));
            }
        }
        for (name, v) in [
            ("v_scale", self.v_scale),
            ("d_scale", self.d_scale),
            ("a_scale", self.a_scale),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

/// Scales that map raw kinematics into the unit ranges used by rho.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizers {
    pub v_scale: f64,
    pub d_scale: f64,
    pub a_scale: f64,
}

impl Normalizers {
    /// Fills unset scales from the data: the median windowed V over every
    /// accumulated frame of `pairs`, and one eighth of the diagonal of the
    /// bounding box of all points.
    pub fn resolve(
        cfg: &RhoConfig,
        trajectories: &[Trajectory],
        pairs: &[InteractionPair],
        window: usize,
    ) -> Result<Self> {
        let v_scale = match cfg.v_scale {
            Some(v) => v,
            None => median_window_speed(trajectories, pairs, window)?
                .filter(|v| *v > 0.0)
                .unwrap_or(1.0),
        };
        let d_scale = match cfg.d_scale {
            Some(d) => d,
            None => Some(scene_diagonal(trajectories) / 8.0)
                .filter(|d| *d > 0.0)
                .unwrap_or(1.0),
        };
        Ok(Normalizers {
            v_scale,
            d_scale,
            a_scale: cfg.a_scale.unwrap_or(v_scale),
        })
    }

    pub fn v_star(&self, v: f64) -> f64 {
        if v <= 0.0 {
            0.0
        } else {
            v / (v + self.v_scale)
        }
    }

    pub fn d_star(&self, d: f64) -> f64 {
        (-d / self.d_scale).exp()
    }

    /// `+1` straight ahead, `-1` directly behind.
    pub fn h_star(&self, h: f64) -> f64 {
        (1.0 - h / FRAC_PI_2).clamp(-1.0, 1.0)
    }

    pub fn a_star(&self, a: f64) -> f64 {
        if a <= 0.0 {
            0.0
        } else {
            a / (a + self.a_scale)
        }
    }
}

/// `(alpha + V*) * D* * (1 + H*)`, with ablation switches.
///
/// A disabled factor is replaced by 1. The acceleration variant adds `A*`
/// to the velocity factor.
pub fn compute_rho(kin: &Kinematics, cfg: &RhoConfig, norms: &Normalizers) -> f64 {
    let velocity = if cfg.use_v || cfg.use_a {
        let mut f = cfg.alpha;
        if cfg.use_v {
            f += norms.v_star(kin.v);
        }
        if cfg.use_a {
            f += norms.a_star(kin.a);
        }
        f
    } else {
        1.0
    };
    let distance = if cfg.use_d { norms.d_star(kin.d) } else { 1.0 };
    let heading = if cfg.use_h { 1.0 + norms.h_star(kin.h) } else { 1.0 };
    velocity * distance * heading
}

pub fn scene_diagonal(trajectories: &[Trajectory]) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in trajectories.iter().flat_map(|t| &t.points) {
        lo = [lo[0].min(p.x), lo[1].min(p.y)];
        hi = [hi[0].max(p.x), hi[1].max(p.y)];
    }
    if lo[0] > hi[0] {
        return 0.0;
    }
    (hi[0] - lo[0]).hypot(hi[1] - lo[1])
}

/// Median of V over every accumulated frame of every pair. Only one
/// direction of each pair is visited since V is symmetric.
pub fn median_window_speed(
    trajectories: &[Trajectory],
    pairs: &[InteractionPair],
    window: usize,
) -> Result<Option<f64>> {
    let mut values = Vec::new();
    for pair in pairs.iter().filter(|p| p.agent_i < p.agent_j) {
        let aligned: AlignedPair = super::interactions::align(trajectories, pair)?;
        for t in pair.buffer_frame..=pair.last_frame {
            values.push(compute_kinematics(&aligned, t, window)?.v);
        }
    }
    if values.is_empty() {
        return Ok(None);
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Ok(Some(if values.len() % 2 == 0 {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    }))
}
