//! Pairwise interaction measure: physics-based weight rho times hash-based
//! MI, accumulated with exponential decay.

mod interactions;
mod kinematics;
mod rho;
mod series;

pub use interactions::{align, co_present_run, extract_interactions, AlignedPair, BufferRule, InteractionPair};
pub use kinematics::{compute_kinematics, unsigned_angle, Kinematics};
pub use rho::{compute_rho, median_window_speed, scene_diagonal, Normalizers, RhoConfig};
pub use series::{accumulate_aim, measure_pair, sweep, AimParams, MeasureSeries};
