//! Python bindings for the trajectory toolkit.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use trajaim_core::aim::{self, AimParams, BufferRule, Normalizers};
use trajaim_core::dataset_io::{self, DatasetKind, DatasetRegistry, OverlapLevel, Source};
use trajaim_core::mi_edge::{self, HashMiState, MiConfig, SamplePair};
use trajaim_core::preprocess::{self, LostPolicy, PreprocessConfig, TrajectoryWindow};
use trajaim_core::{analytics, eval, Error};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_kind(name: &str) -> PyResult<DatasetKind> {
    match name.to_ascii_lowercase().as_str() {
        "sdd" => Ok(DatasetKind::Sdd),
        "ind" => Ok(DatasetKind::Ind),
        other => Err(PyValueError::new_err(format!("unknown dataset {other:?}"))),
    }
}

fn parse_policy(name: &str) -> PyResult<LostPolicy> {
    name.parse().map_err(err)
}

fn mi_config(bandwidths: Option<Vec<f64>>, weights: Option<Vec<f64>>, min_samples: usize) -> MiConfig {
    let mut cfg = MiConfig::default();
    if let Some(b) = bandwidths {
        cfg.bandwidths = b;
    }
    cfg.weights = weights.unwrap_or_default();
    cfg.min_samples = min_samples;
    cfg
}

fn sample_pairs(xs: &[[f64; 2]], ys: &[[f64; 2]]) -> PyResult<Vec<SamplePair>> {
    if xs.len() != ys.len() {
        return Err(err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        }));
    }
    Ok(xs.iter().zip(ys).map(|(x, y)| SamplePair::new(*x, *y)).collect())
}

/// One track of one video, as per-frame centers in pixels.
#[pyclass(name = "Trajectory", skip_from_py_object)]
#[derive(Clone)]
struct PyTrajectory {
    inner: dataset_io::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn track_id(&self) -> i64 {
        self.inner.track_id
    }

    #[getter]
    fn segment(&self) -> Option<u32> {
        self.inner.segment
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.display_id()
    }

    #[getter]
    fn class_label(&self) -> &'static str {
        self.inner.class_label.as_str()
    }

    #[getter]
    fn dataset(&self) -> &'static str {
        self.inner.source.dataset.as_str()
    }

    #[getter]
    fn scene(&self) -> String {
        self.inner.source.scene.clone()
    }

    #[getter]
    fn video(&self) -> u32 {
        self.inner.source.video
    }

    #[getter]
    fn frames(&self) -> Vec<i64> {
        self.inner.points.iter().map(|p| p.frame).collect()
    }

    #[getter]
    fn positions(&self) -> Vec<(f64, f64)> {
        self.inner.points.iter().map(|p| (p.x, p.y)).collect()
    }

    #[getter]
    fn lost(&self) -> Vec<bool> {
        self.inner.points.iter().map(|p| p.lost).collect()
    }

    /// `(start, middle, end)` flags for lost annotations.
    fn lost_positions(&self) -> (bool, bool, bool) {
        let p = preprocess::classify_lost_positions(&self.inner);
        (p.start, p.middle, p.end)
    }

    #[pyo3(signature = (policy = "filter_keep_first"))]
    fn filter_lost(&self, policy: &str) -> PyResult<Vec<PyTrajectory>> {
        let policy = parse_policy(policy)?;
        Ok(wrap(preprocess::filter_lost(&self.inner, policy)))
    }

    #[pyo3(signature = (native_rate, target_rate = 2.5))]
    fn resample(&self, native_rate: f64, target_rate: f64) -> PyResult<PyTrajectory> {
        let inner = preprocess::resample(&self.inner, native_rate, target_rate).map_err(err)?;
        Ok(PyTrajectory { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory({} {} {}, {} points)",
            self.inner.source,
            self.inner.display_id(),
            self.inner.class_label,
            self.inner.len()
        )
    }
}

fn wrap(trajs: Vec<dataset_io::Trajectory>) -> Vec<PyTrajectory> {
    trajs.into_iter().map(|inner| PyTrajectory { inner }).collect()
}

fn unwrap(trajs: &[PyRef<'_, PyTrajectory>]) -> Vec<dataset_io::Trajectory> {
    trajs.iter().map(|t| t.inner.clone()).collect()
}

/// Streaming hashed MI estimator.
#[pyclass(name = "HashMI")]
struct PyHashMi {
    state: HashMiState,
}

#[pymethods]
impl PyHashMi {
    #[new]
    #[pyo3(signature = (bandwidths = None, weights = None, min_samples = 10))]
    fn new(bandwidths: Option<Vec<f64>>, weights: Option<Vec<f64>>, min_samples: usize) -> PyResult<Self> {
        let state = HashMiState::new(&mi_config(bandwidths, weights, min_samples)).map_err(err)?;
        Ok(PyHashMi { state })
    }

    fn push(&mut self, x: [f64; 2], y: [f64; 2]) -> PyResult<()> {
        self.state.push(SamplePair::new(x, y)).map_err(err)
    }

    fn estimate(&self) -> PyResult<f64> {
        self.state.estimate().map_err(err)
    }

    fn per_bandwidth(&self) -> PyResult<Vec<f64>> {
        self.state.per_bandwidth().map_err(err)
    }

    fn __len__(&self) -> usize {
        self.state.len() as usize
    }
}

type OverlapTuple = (String, String, String, Vec<String>);

/// Scene and split metadata.
#[pyclass(name = "Registry")]
struct PyRegistry {
    inner: DatasetRegistry,
}

#[pymethods]
impl PyRegistry {
    #[staticmethod]
    fn builtin() -> Self {
        PyRegistry {
            inner: DatasetRegistry::builtin(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        DatasetRegistry::from_toml_str(text)
            .map(|inner| PyRegistry { inner })
            .map_err(err)
    }

    fn frame_rate(&self, dataset: &str) -> PyResult<f64> {
        Ok(self.inner.frame_rate(parse_kind(dataset)?))
    }

    fn scenes(&self, dataset: &str) -> PyResult<Vec<String>> {
        let entry = self.inner.dataset(parse_kind(dataset)?);
        Ok(entry
            .map(|d| d.scenes.values().map(|s| s.name.clone()).collect())
            .unwrap_or_default())
    }

    fn split_of(&self, dataset: &str, scene: &str, video: u32) -> PyResult<Option<&'static str>> {
        let entry = self.inner.dataset(parse_kind(dataset)?);
        Ok(entry.and_then(|d| d.split_of(scene, video)).map(|s| s.as_str()))
    }

    fn apply_split_file(&mut self, dataset: &str, text: &str) -> PyResult<()> {
        self.inner.apply_split_file(parse_kind(dataset)?, text).map_err(err)
    }

    /// Rows of `(scene, location, time, groups)`.
    fn overlap(&self, dataset: &str) -> PyResult<Vec<OverlapTuple>> {
        let rows = analytics::overlap_report(&self.inner, parse_kind(dataset)?);
        let level = |l: Option<OverlapLevel>| l.map(|l| l.to_string()).unwrap_or_default();
        Ok(rows
            .into_iter()
            .map(|r| (r.scene, level(r.location), level(r.time), r.groups))
            .collect())
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }
}

/// Parses one SDD `annotations.txt` body into trajectories.
#[pyfunction]
#[pyo3(signature = (text, scene, video = 0))]
fn parse_sdd(text: &str, scene: &str, video: u32) -> PyResult<Vec<PyTrajectory>> {
    let records = dataset_io::parse_sdd_str(text).map_err(err)?;
    let source = Source::new(DatasetKind::Sdd, scene, video);
    let assembled = dataset_io::assemble_trajectories(&records, &source).map_err(err)?;
    Ok(wrap(assembled.trajectories))
}

/// Parses the three CSV bodies of one inD recording. Returns the
/// trajectories (in pixels) and the pixel-to-meter factor.
#[pyfunction]
fn parse_ind(tracks: &str, tracks_meta: &str, recording_meta: &str) -> PyResult<(Vec<PyTrajectory>, f64)> {
    let rec = dataset_io::parse_ind_tracks(tracks.as_bytes(), tracks_meta.as_bytes(), recording_meta.as_bytes())
        .map_err(err)?;
    Ok((wrap(rec.trajectories), rec.px_to_meter))
}

#[pyfunction]
fn g_divergence(t: f64) -> PyResult<f64> {
    mi_edge::g_divergence(t).map_err(err)
}

/// Batch MI estimate between paired 2-D samples.
#[pyfunction]
#[pyo3(signature = (xs, ys, bandwidths = None, weights = None, min_samples = 10))]
fn estimate_mi(
    xs: Vec<[f64; 2]>,
    ys: Vec<[f64; 2]>,
    bandwidths: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
    min_samples: usize,
) -> PyResult<f64> {
    let pairs = sample_pairs(&xs, &ys)?;
    mi_edge::estimate_batch(&mi_config(bandwidths, weights, min_samples), &pairs).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (mi, rho, delta = 0.98))]
fn accumulate_aim(mi: Vec<f64>, rho: Vec<f64>, delta: f64) -> PyResult<Vec<f64>> {
    aim::accumulate_aim(&mi, &rho, delta).map_err(err)
}

/// Pair weight from raw kinematics: speed `v`, distance `d`, bearing `h`.
#[pyfunction]
#[pyo3(signature = (v, d, h, v_scale, d_scale, alpha = 0.3, a = 0.0, use_v = true, use_d = true, use_h = true, use_a = false))]
#[allow(clippy::too_many_arguments)]
fn rho(
    v: f64,
    d: f64,
    h: f64,
    v_scale: f64,
    d_scale: f64,
    alpha: f64,
    a: f64,
    use_v: bool,
    use_d: bool,
    use_h: bool,
    use_a: bool,
) -> PyResult<f64> {
    let cfg = aim::RhoConfig {
        alpha,
        use_v,
        use_d,
        use_h,
        use_a,
        v_scale: Some(v_scale),
        d_scale: Some(d_scale),
        ..Default::default()
    };
    cfg.validate().map_err(err)?;
    let norms = Normalizers {
        v_scale,
        d_scale,
        a_scale: v_scale,
    };
    Ok(aim::compute_rho(&aim::Kinematics { v, d, h, a }, &cfg, &norms))
}

/// Per-frame MI, rho and AIM for the directed pair `i -> j`.
///
/// Track ids match `Trajectory.id`. Normalizers are resolved from all of
/// `trajectories`.
#[pyfunction]
#[pyo3(signature = (trajectories, i, j, window, delta = 0.98))]
fn measure_pair<'py>(
    py: Python<'py>,
    trajectories: Vec<PyRef<'py, PyTrajectory>>,
    i: &str,
    j: &str,
    window: usize,
    delta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let trajs = unwrap(&trajectories);
    let params = AimParams {
        delta,
        ..AimParams::with_defaults(window)
    };
    params.validate().map_err(err)?;
    let pairs = aim::extract_interactions(&trajs, window, BufferRule::Window, params.mi.min_samples);
    let pair = pairs
        .iter()
        .find(|p| p.id_i == i && p.id_j == j)
        .ok_or_else(|| PyValueError::new_err(format!("tracks {i} and {j} do not interact")))?;
    let norms = Normalizers::resolve(&params.rho, &trajs, &pairs, window).map_err(err)?;
    let s = aim::measure_pair(&trajs, pair, &params, &norms).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("frames", s.frames)?;
    out.set_item("mi", s.mi)?;
    out.set_item("rho", s.rho)?;
    out.set_item("aim", s.aim)?;
    Ok(out)
}

/// Observation/prediction windows as dicts with `id`, `class`, `observed`
/// and `future`.
#[pyfunction]
#[pyo3(signature = (trajectories, native_rate, lost_policy = "filter_keep_first", target_rate = 2.5, observe_len = 8, predict_len = 12))]
fn windows<'py>(
    py: Python<'py>,
    trajectories: Vec<PyRef<'py, PyTrajectory>>,
    native_rate: f64,
    lost_policy: &str,
    target_rate: f64,
    observe_len: usize,
    predict_len: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = PreprocessConfig {
        lost_policy: parse_policy(lost_policy)?,
        target_rate,
        observe_len,
        predict_len,
        ..Default::default()
    };
    let pre = preprocess::preprocess(&unwrap(&trajectories), &cfg, native_rate).map_err(err)?;
    pre.windows.iter().map(|w| window_dict(py, w)).collect()
}

fn window_dict<'py>(py: Python<'py>, w: &TrajectoryWindow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("id", w.id())?;
    d.set_item("class", w.class_label.as_str())?;
    d.set_item("observed", w.observed.clone())?;
    d.set_item("future", w.future.clone())?;
    Ok(d)
}

#[pyfunction]
fn ade(pred: Vec<[f64; 2]>, truth: Vec<[f64; 2]>) -> PyResult<f64> {
    eval::ade(&pred, &truth).map_err(err)
}

#[pyfunction]
fn fde(pred: Vec<[f64; 2]>, truth: Vec<[f64; 2]>) -> PyResult<f64> {
    eval::fde(&pred, &truth).map_err(err)
}

/// Extrapolates the last observed step `predict_len` times.
#[pyfunction]
#[pyo3(signature = (observed, predict_len = 12))]
fn constant_velocity(observed: Vec<[f64; 2]>, predict_len: usize) -> PyResult<Vec<[f64; 2]>> {
    if observed.len() < 2 {
        return Err(err(Error::InsufficientData {
            needed: 2,
            have: observed.len(),
        }));
    }
    let w = TrajectoryWindow {
        track: preprocess::TrackRef {
            source: Source::new(DatasetKind::Sdd, "", 0),
            track_id: 0,
            segment: None,
        },
        class_label: dataset_io::ClassLabel::Pedestrian,
        start_frame: 0,
        frame_step: 1,
        lost: Vec::new(),
        future: vec![[0.0; 2]; predict_len],
        observed,
    };
    Ok(eval::constant_velocity_predict(&w))
}

/// Percentages of trajectories with lost points at the start, middle and
/// end, per scene.
#[pyfunction]
fn lost_stats(trajectories: Vec<PyRef<'_, PyTrajectory>>) -> Vec<(String, usize, f64, f64, f64)> {
    analytics::lost_stats(&unwrap(&trajectories))
        .into_iter()
        .map(|r| (r.scene, r.count, r.start_pct, r.middle_pct, r.end_pct))
        .collect()
}

#[pymodule]
fn trajaim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyHashMi>()?;
    m.add_class::<PyRegistry>()?;
    m.add_function(wrap_pyfunction!(parse_sdd, m)?)?;
    m.add_function(wrap_pyfunction!(parse_ind, m)?)?;
    m.add_function(wrap_pyfunction!(g_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_mi, m)?)?;
    m.add_function(wrap_pyfunction!(accumulate_aim, m)?)?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(measure_pair, m)?)?;
    m.add_function(wrap_pyfunction!(windows, m)?)?;
    m.add_function(wrap_pyfunction!(ade, m)?)?;
    m.add_function(wrap_pyfunction!(fde, m)?)?;
    m.add_function(wrap_pyfunction!(constant_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(lost_stats, m)?)?;
    Ok(())
}
