//! ADE/FDE scoring of trajectory predictions over preprocessed windows.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset_io::{ClassLabel, DatasetKind};
use crate::error::{Error, Result};
use crate::preprocess::TrajectoryWindow;
use crate::report::{Cell, Table};

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn check_lengths(pred: &[[f64; 2]], truth: &[[f64; 2]]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    Ok(())
}

/// Mean Euclidean distance between corresponding points.
pub fn ade(pred: &[[f64; 2]], truth: &[[f64; 2]]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let sum: f64 = pred.iter().zip(truth).map(|(p, t)| dist(*p, *t)).sum();
    Ok(sum / truth.len() as f64)
}

/// Euclidean distance between the final points.
pub fn fde(pred: &[[f64; 2]], truth: &[[f64; 2]]) -> Result<f64> {
    check_lengths(pred, truth)?;
    Ok(dist(pred[pred.len() - 1], truth[truth.len() - 1]))
}

/// Extends the mean observed step linearly over the window's horizon.
pub fn constant_velocity_predict(window: &TrajectoryWindow) -> Vec<[f64; 2]> {
    let obs = &window.observed;
    let last = obs[obs.len() - 1];
    let steps = (obs.len() - 1).max(1) as f64;
    let vel = [(last[0] - obs[0][0]) / steps, (last[1] - obs[0][1]) / steps];
    (1..=window.future.len())
        .map(|k| [last[0] + vel[0] * k as f64, last[1] + vel[1] * k as f64])
        .collect()
}

/// A prediction read from an external file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub window_id: String,
    pub future: Vec<[f64; 2]>,
}

/// Reads one JSON object per line: `{"window_id": "...", "future": [[x, y], ...]}`.
/// Blank lines are ignored; duplicate ids are rejected.
pub fn read_predictions<R: BufRead>(reader: R) -> Result<BTreeMap<String, Vec<[f64; 2]>>> {
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<predictions>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord = serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        if out.insert(rec.window_id.clone(), rec.future).is_some() {
            return Err(Error::parse(i + 1, format!("duplicate window id `{}`", rec.window_id)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub enum Predictor {
    ConstantVelocity,
    External(BTreeMap<String, Vec<[f64; 2]>>),
}

impl Predictor {
    pub fn name(&self) -> &'static str {
        match self {
            Predictor::ConstantVelocity => "constant_velocity",
            Predictor::External(_) => "external",
        }
    }

    pub fn predict(&self, window: &TrajectoryWindow) -> Result<Vec<[f64; 2]>> {
        match self {
            Predictor::ConstantVelocity => Ok(constant_velocity_predict(window)),
            Predictor::External(map) => map
                .get(&window.id())
                .cloned()
                .ok_or_else(|| Error::Config(format!("no prediction for window `{}`", window.id()))),
        }
    }

    /// Rejects external predictions whose ids match none of `windows`.
    pub fn check_ids<'a>(&self, windows: impl IntoIterator<Item = &'a TrajectoryWindow>) -> Result<()> {
        let Predictor::External(map) = self else {
            return Ok(());
        };
        let known: BTreeSet<String> = windows.into_iter().map(TrajectoryWindow::id).collect();
        match map.keys().find(|k| !known.contains(*k)) {
            Some(id) => Err(Error::Config(format!("prediction for unknown window `{id}`"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: String,
    pub group: String,
    pub ade: f64,
    pub fde: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evaluation {
    pub reports: Vec<EvalReport>,
    pub diagnostics: Vec<String>,
}

fn class_columns(kind: DatasetKind) -> &'static [ClassLabel] {
    match kind {
        DatasetKind::Sdd => &ClassLabel::SDD,
        DatasetKind::Ind => &ClassLabel::IND,
    }
}

/// Mean ADE/FDE over all windows and per window class. Classes of the
/// windows' datasets that have no windows are reported as diagnostics.
/// Per-window errors are summed in window-id order, so the result does not
/// depend on the order of `windows`.
pub fn evaluate(windows: &[TrajectoryWindow], predictor: &Predictor, config: &str) -> Result<Evaluation> {
    let mut scored: Vec<(String, ClassLabel, f64, f64)> = windows
        .par_iter()
        .map(|w| {
            let pred = predictor.predict(w)?;
            Ok((w.id(), w.class_label, ade(&pred, &w.future)?, fde(&pred, &w.future)?))
        })
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.0.cmp(&b.0));

    let mut out = Evaluation::default();
    if scored.is_empty() {
        out.diagnostics.push(format!("{config}: no windows to evaluate"));
        return Ok(out);
    }
    let summarize = |group: String, rows: &[&(String, ClassLabel, f64, f64)]| EvalReport {
        config: config.to_owned(),
        group,
        ade: rows.iter().map(|r| r.2).sum::<f64>() / rows.len() as f64,
        fde: rows.iter().map(|r| r.3).sum::<f64>() / rows.len() as f64,
        windows: rows.len(),
    };
    let all: Vec<_> = scored.iter().collect();
    out.reports.push(summarize("all".into(), &all));

    let mut classes: BTreeSet<ClassLabel> = windows
        .iter()
        .flat_map(|w| class_columns(w.track.source.dataset).iter().copied())
        .collect();
    classes.extend(windows.iter().map(|w| w.class_label));
    for class in classes {
        let rows: Vec<_> = scored.iter().filter(|r| r.1 == class).collect();
        if rows.is_empty() {
            out.diagnostics.push(format!(
                "{config}: no windows for class {}; group omitted",
                class.as_str()
            ));
        } else {
            out.reports.push(summarize(class.as_str().to_ascii_lowercase(), &rows));
        }
    }
    Ok(out)
}

pub fn eval_table(reports: &[EvalReport]) -> Table {
    let mut t = Table::new(["config", "group", "windows", "ade_px", "fde_px"]);
    for r in reports {
        t.push(vec![
            r.config.clone().into(),
            r.group.clone().into(),
            r.windows.into(),
            Cell::value(r.ade),
            Cell::value(r.fde),
        ]);
    }
    t
}
