//! Parsing, preprocessing and interaction analysis for drone-recorded
//! trajectory datasets (SDD and inD).

pub mod aim;
pub mod analytics;
pub mod cli;
pub mod config;
pub mod dataset_io;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod mi_edge;
pub mod preprocess;
pub mod report;
pub mod store;

pub use error::{Error, Result};
