//! Python bindings for the mcox simulator.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use mcox_core::doorway::{detect_doorways, DoorwayParams};
use mcox_core::engine::{run_episode as run_core_episode, EpisodeConfig, PlannerKind, RobotSpec, Task};
use mcox_core::frontier::{rank_and_select, FrontierParams};
use mcox_core::gridmap::lidar_scan as core_lidar_scan;
use mcox_core::mapgen::{gen_structured, gen_unstructured, SizeClass, StructuredMapSpec, UnstructuredMapSpec};
use mcox_core::nav::{plan_path as core_plan_path, DynamicObstacleSet};
use mcox_core::planner_llm::{format_response as core_format, parse_response as core_parse, PlanResponse};
use mcox_core::{Cell, CellState, RobotState};

type Rc = (i32, i32);

/// `(row, col, a, b, c)` rows returned by the candidate finders.
type Scored = (i32, i32, f64, f64, f64);

fn cell(rc: Rc) -> Cell {
    Cell::new(rc.0, rc.1)
}

fn rc(c: Cell) -> Rc {
    (c.row, c.col)
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_state(s: &str) -> PyResult<CellState> {
    match s {
        "unknown" | "?" => Ok(CellState::Unknown),
        "free" | "." => Ok(CellState::Free),
        "occupied" | "#" => Ok(CellState::Occupied),
        _ => Err(value_err(format!("unknown cell state `{s}`"))),
    }
}

fn state_name(s: CellState) -> &'static str {
    match s {
        CellState::Unknown => "unknown",
        CellState::Free => "free",
        CellState::Occupied => "occupied",
    }
}

/// Occupancy grid with cells "unknown", "free" or "occupied".
#[pyclass(name = "GridMap", module = "mcox", skip_from_py_object)]
#[derive(Clone)]
struct PyGridMap {
    inner: mcox_core::GridMap,
}

#[pymethods]
impl PyGridMap {
    #[new]
    #[pyo3(signature = (height, width, fill = "unknown"))]
    fn new(height: usize, width: usize, fill: &str) -> PyResult<Self> {
        let inner = mcox_core::GridMap::new(height, width, parse_state(fill)?).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_ascii(text: &str) -> PyResult<Self> {
        let inner = mcox_core::GridMap::from_ascii(text).map_err(value_err)?;
        Ok(Self { inner })
    }

    fn to_ascii(&self) -> String {
        self.inner.to_ascii()
    }

    fn to_pgm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_pgm())
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    fn get(&self, row: i32, col: i32) -> PyResult<&'static str> {
        self.inner
            .get(Cell::new(row, col))
            .map(state_name)
            .ok_or_else(|| value_err(format!("({row},{col}) is outside the map")))
    }

    fn set(&mut self, row: i32, col: i32, state: &str) -> PyResult<()> {
        self.inner
            .set(Cell::new(row, col), parse_state(state)?)
            .map_err(value_err)
    }

    fn count(&self, state: &str) -> PyResult<usize> {
        Ok(self.inner.count(parse_state(state)?))
    }

    fn __repr__(&self) -> String {
        format!("GridMap({}x{})", self.inner.height(), self.inner.width())
    }
}

/// Generates a map; returns `(map, deploy_zone)`.
#[pyfunction]
#[pyo3(signature = (size = "small", seed = 0, kind = "structured"))]
fn generate_map(size: &str, seed: u64, kind: &str) -> PyResult<(PyGridMap, Vec<Rc>)> {
    let class = match size {
        "small" => SizeClass::Small,
        "medium" => SizeClass::Medium,
        "large" => SizeClass::Large,
        _ => return Err(value_err(format!("unknown size class `{size}`"))),
    };
    let g = match kind {
        "structured" => gen_structured(&StructuredMapSpec::new(class, seed)),
        "unstructured" => {
            let mut s = UnstructuredMapSpec::new(seed);
            s.side = class.side();
            gen_unstructured(&s)
        }
        _ => return Err(value_err(format!("unknown map kind `{kind}`"))),
    }
    .map_err(value_err)?;
    Ok((PyGridMap { inner: g.map }, g.deploy_zone.into_iter().map(rc).collect()))
}

/// Cells observed from `pose`, as `((row, col), state)` pairs.
#[pyfunction]
fn lidar_scan(truth: &PyGridMap, pose: Rc, range: u32) -> PyResult<Vec<(Rc, &'static str)>> {
    let obs = core_lidar_scan(&truth.inner, cell(pose), range).map_err(value_err)?;
    Ok(obs.into_iter().map(|(c, s)| (rc(c), state_name(s))).collect())
}

/// Representative frontiers as `(row, col, s, c, U)` tuples.
#[pyfunction]
#[pyo3(signature = (belief, robots, seed = 0, samples = 200, keep = 8, lam = 0.01, separation = 5.0, range = 5))]
#[allow(clippy::too_many_arguments)]
fn frontiers(
    belief: &PyGridMap,
    robots: Vec<Rc>,
    seed: u64,
    samples: usize,
    keep: usize,
    lam: f64,
    separation: f64,
    range: u32,
) -> PyResult<Vec<Scored>> {
    let params = FrontierParams {
        samples,
        keep,
        lambda: lam,
        separation,
        info_range: range,
    };
    let robots: Vec<RobotState> = robots
        .into_iter()
        .enumerate()
        .map(|(id, p)| RobotState::new(id, cell(p), range, 1))
        .collect();
    let out = rank_and_select(&belief.inner, &robots, &params, seed).map_err(value_err)?;
    Ok(out
        .into_iter()
        .map(|f| (f.cell.row, f.cell.col, f.info_gain, f.cost, f.utility))
        .collect())
}

/// Doorway candidates as `(row, col, axis_deg, width, gain)` tuples.
#[pyfunction]
#[pyo3(signature = (belief, range = 5, seed = 0, max_width = 5.0))]
fn doorways(belief: &PyGridMap, range: u32, seed: u64, max_width: f64) -> PyResult<Vec<Scored>> {
    let params = DoorwayParams {
        max_width,
        ..DoorwayParams::default()
    };
    let out = detect_doorways(&belief.inner, &params, range, seed).map_err(value_err)?;
    Ok(out
        .into_iter()
        .map(|d| (d.midpoint.row, d.midpoint.col, d.axis_deg, d.width, d.info_gain))
        .collect())
}

/// Shortest 4-connected path over free cells avoiding robots at `obstacles`.
#[pyfunction]
#[pyo3(signature = (belief, start, goal, obstacles = Vec::new()))]
fn plan_path(belief: &PyGridMap, start: Rc, goal: Rc, obstacles: Vec<Rc>) -> PyResult<Vec<Rc>> {
    let obs = DynamicObstacleSet::from_robots(obstacles.into_iter().map(cell));
    let path = core_plan_path(&belief.inner, cell(start), cell(goal), &obs).map_err(value_err)?;
    Ok(path.cells.into_iter().map(rc).collect())
}

/// Extracts `(queues, summary, warnings)` from planner text.
#[pyfunction]
fn parse_response(raw: &str, belief: &PyGridMap, robots: usize) -> PyResult<(Vec<Vec<Rc>>, String, Vec<String>)> {
    let p = core_parse(raw, &belief.inner, robots).map_err(value_err)?;
    let queues = p.queues.into_iter().map(|q| q.into_iter().map(rc).collect()).collect();
    Ok((queues, p.summary, p.warnings))
}

#[pyfunction]
fn format_response(queues: Vec<Vec<Rc>>, summary: String) -> String {
    core_format(&PlanResponse {
        queues: queues.into_iter().map(|q| q.into_iter().map(cell).collect()).collect(),
        summary,
        warnings: Vec::new(),
    })
}

/// Runs one episode and returns the run record as a JSON string.
#[pyfunction]
#[pyo3(signature = (truth, deploy_zone, team_size = 2, planner = "sample-greedy", target = None, t_max = 1000, seed = 0, t_h = 60, heterogeneous = false))]
#[allow(clippy::too_many_arguments)]
fn run_episode(
    py: Python<'_>,
    truth: &PyGridMap,
    deploy_zone: Vec<Rc>,
    team_size: usize,
    planner: &str,
    target: Option<Rc>,
    t_max: usize,
    seed: u64,
    t_h: usize,
    heterogeneous: bool,
) -> PyResult<String> {
    let planner: PlannerKind = planner.parse().map_err(value_err)?;
    let team = if heterogeneous {
        RobotSpec::heterogeneous(team_size)
    } else {
        RobotSpec::homogeneous(team_size)
    };
    let task = match target {
        Some(t) => Task::Search { target: cell(t) },
        None => Task::Explore,
    };
    let mut cfg = EpisodeConfig::new(
        truth.inner.clone(),
        deploy_zone.into_iter().map(cell).collect(),
        team,
        planner,
        task,
        t_max,
    )
    .with_seed(seed);
    cfg.t_h = t_h;
    let record = py
        .detach(|| run_core_episode(&cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(record.to_json())
}

#[pymodule]
fn mcox(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridMap>()?;
    m.add_function(wrap_pyfunction!(generate_map, m)?)?;
    m.add_function(wrap_pyfunction!(lidar_scan, m)?)?;
    m.add_function(wrap_pyfunction!(frontiers, m)?)?;
    m.add_function(wrap_pyfunction!(doorways, m)?)?;
    m.add_function(wrap_pyfunction!(plan_path, m)?)?;
    m.add_function(wrap_pyfunction!(parse_response, m)?)?;
    m.add_function(wrap_pyfunction!(format_response, m)?)?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    Ok(())
}
