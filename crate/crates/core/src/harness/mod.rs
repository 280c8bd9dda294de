//! Batch experiments over seeded maps, team sizes and planners.

mod stats;

pub use stats::{compare, quantile, quartiles, CompareError, EpisodeRow, Quartiles, SummaryRow, SummaryTable};

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::doorway::DoorwayParams;
use crate::engine::{
    run_episode, EngineError, EpisodeConfig, LlmBackendConfig, PlannerKind, RobotSpec, RunRecord, Task,
};
use crate::frontier::{FrontierParams, MeanShiftParams};
use crate::gridmap::Cell;
use crate::mapgen::{
    deploy_distances, gen_structured, gen_unstructured, sample_target, GeneratedMap, MapGenError, SizeClass,
    StructuredMapSpec, UnstructuredMapSpec,
};
use crate::planner_llm::PlannerEndpointConfig;
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("failed to parse experiment config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    MapGen(#[from] MapGenError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    #[default]
    Structured,
    Unstructured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    #[default]
    Homogeneous,
    Heterogeneous,
}

impl Composition {
    pub fn team(self, m: usize) -> Vec<RobotSpec> {
        match self {
            Composition::Homogeneous => RobotSpec::homogeneous(m),
            Composition::Heterogeneous => RobotSpec::heterogeneous(m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskChoice {
    #[default]
    Explore,
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Mock,
    Endpoint,
}

/// The `[llm]` table of an experiment config.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSection {
    pub backend: BackendChoice,
    /// Keep per-cycle prompt/response files under `<output>/transcripts`.
    pub transcripts: bool,
    #[serde(flatten)]
    pub endpoint: PlannerEndpointConfig,
}

/// Experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    /// Master seed mixed into every per-episode seed.
    pub seed: u64,
    pub map_class: SizeClass,
    pub map_kind: MapKind,
    pub map_count: usize,
    pub first_map_seed: u64,
    pub team_sizes: Vec<usize>,
    pub composition: Composition,
    pub planners: Vec<PlannerKind>,
    pub task: TaskChoice,
    /// Search targets are drawn at a shortest-path distance from the deploy
    /// origin within this fraction range of the farthest reachable cell.
    pub target_band: (f64, f64),
    /// Defaults to the size-class limit.
    pub t_max: Option<usize>,
    pub t_h: usize,
    /// Hint given to `llm-informed`; generated from the target when absent.
    pub initial_info: Option<String>,
    pub output_dir: PathBuf,
    pub parallel: usize,
    pub snapshot_every: Option<usize>,
    pub frontier: FrontierParams,
    pub meanshift: MeanShiftParams,
    pub doorway: DoorwayParams,
    pub llm: LlmSection,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            seed: 0,
            map_class: SizeClass::Small,
            map_kind: MapKind::Structured,
            map_count: 10,
            first_map_seed: 0,
            team_sizes: vec![2],
            composition: Composition::Homogeneous,
            planners: vec![PlannerKind::SampleGreedy],
            task: TaskChoice::Explore,
            target_band: (0.4, 0.8),
            t_max: None,
            t_h: crate::engine::DEFAULT_REPLAN_HORIZON,
            initial_info: None,
            output_dir: PathBuf::from("mcox-out"),
            parallel: 1,
            snapshot_every: None,
            frontier: FrontierParams::default(),
            meanshift: MeanShiftParams::default(),
            doorway: DoorwayParams::default(),
            llm: LlmSection::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Spec(m.into()));
        if self.map_count == 0 {
            return bad("map_count must be at least 1");
        }
        if self.team_sizes.is_empty() || self.team_sizes.contains(&0) {
            return bad("team_sizes must be non-empty and positive");
        }
        if self.planners.is_empty() {
            return bad("planners must be non-empty");
        }
        let (lo, hi) = self.target_band;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return bad("target_band must satisfy 0 <= lo <= hi <= 1");
        }
        if self.t_max == Some(0) || self.t_h == 0 {
            return bad("t_max and t_h must be positive");
        }
        if self.parallel == 0 {
            return bad("parallel must be at least 1");
        }
        if self.llm.backend == BackendChoice::Endpoint {
            self.llm
                .endpoint
                .validate()
                .map_err(|e| HarnessError::Spec(e.to_string()))?;
        }
        Ok(())
    }

    pub fn t_max(&self) -> usize {
        self.t_max.unwrap_or_else(|| self.map_class.timestep_limit())
    }

    pub fn class_name(&self) -> &'static str {
        match self.map_class {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        }
    }

    pub fn map_seeds(&self) -> impl Iterator<Item = u64> {
        let first = self.first_map_seed;
        (0..self.map_count as u64).map(move |k| first + k)
    }

    pub fn generate_map(&self, map_seed: u64) -> Result<GeneratedMap, MapGenError> {
        match self.map_kind {
            MapKind::Structured => gen_structured(&StructuredMapSpec::new(self.map_class, map_seed)),
            MapKind::Unstructured => {
                let mut s = UnstructuredMapSpec::new(map_seed);
                s.side = self.map_class.side();
                gen_unstructured(&s)
            }
        }
    }
}

/// Seed for one experiment cell: the first 8 bytes (big-endian) of
/// SHA-256 over `master|class|map_seed|team_size|planner`.
pub fn episode_seed(master: u64, class: &str, map_seed: u64, team_size: usize, planner: PlannerKind) -> u64 {
    let digest = Sha256::digest(format!("{master}|{class}|{map_seed}|{team_size}|{planner}").as_bytes());
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(b)
}

/// Target cell for a search episode on `map`.
pub fn search_target(map: &GeneratedMap, map_seed: u64, band: (f64, f64)) -> Result<Cell, MapGenError> {
    let dist = deploy_distances(&map.map, &map.deploy_zone);
    let far = dist.iter().flatten().copied().max().unwrap_or(0) as f64;
    let lo = (band.0 * far).ceil() as u32;
    let hi = ((band.1 * far).floor() as u32).max(lo);
    sample_target(
        &map.map,
        &map.deploy_zone,
        SplitMix64::derive(map_seed, 1).next_u64(),
        (lo, hi),
    )
}

/// Coarse natural-language hint about where `target` lies.
pub fn location_hint(target: Cell, height: usize, width: usize) -> String {
    let third = |v: i32, n: usize, names: [&'static str; 3]| names[((v as usize * 3) / n.max(1)).min(2)];
    let vertical = third(target.row, height, ["top", "middle", "bottom"]);
    let horizontal = third(target.col, width, ["left", "center", "right"]);
    let area = if vertical == "middle" && horizontal == "center" {
        "the center".to_string()
    } else if vertical == "middle" {
        format!("the middle {horizontal}")
    } else {
        format!("the {vertical} {horizontal}")
    };
    format!("The object of interest is most likely in {area} part of the map.")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EpisodeKey {
    pub map_seed: u64,
    pub team_size: usize,
    pub planner: PlannerKind,
}

impl EpisodeKey {
    pub fn file_name(&self, class: &str, task: &str) -> String {
        format!(
            "{class}_{task}_map{:04}_m{}_{}.json",
            self.map_seed, self.team_size, self.planner
        )
    }
}

/// What is stored per episode under `records/`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFile {
    pub episode: EpisodeRow,
    pub record: RunRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub table: SummaryTable,
    /// Episodes simulated by this call.
    pub ran: usize,
    /// Episodes found on disk and reused.
    pub reused: usize,
}

fn task_name(task: TaskChoice) -> &'static str {
    match task {
        TaskChoice::Explore => "explore",
        TaskChoice::Search => "search",
    }
}

/// Configuration for one episode of the experiment.
pub fn episode_config(
    spec: &ExperimentSpec,
    map: &GeneratedMap,
    key: &EpisodeKey,
) -> Result<EpisodeConfig, HarnessError> {
    let task = match spec.task {
        TaskChoice::Explore => Task::Explore,
        TaskChoice::Search => Task::Search {
            target: search_target(map, key.map_seed, spec.target_band)?,
        },
    };
    let mut cfg = EpisodeConfig::new(
        map.map.clone(),
        map.deploy_zone.clone(),
        spec.composition.team(key.team_size),
        key.planner,
        task,
        spec.t_max(),
    );
    cfg.seed = episode_seed(spec.seed, spec.class_name(), key.map_seed, key.team_size, key.planner);
    cfg.t_h = spec.t_h;
    cfg.frontier = spec.frontier;
    cfg.meanshift = spec.meanshift;
    cfg.doorway = spec.doorway;
    cfg.image_scale = spec.llm.endpoint.image_scale;
    cfg.llm = match spec.llm.backend {
        BackendChoice::Mock => LlmBackendConfig::Mock,
        BackendChoice::Endpoint => LlmBackendConfig::Endpoint(spec.llm.endpoint.clone()),
    };
    cfg.initial_info = match (&spec.initial_info, task) {
        (Some(text), _) => Some(text.clone()),
        (None, Task::Search { target }) => Some(location_hint(target, map.map.height(), map.map.width())),
        (None, Task::Explore) => None,
    };
    let stem = key
        .file_name(spec.class_name(), task_name(spec.task))
        .replace(".json", "");
    if spec.llm.transcripts && key.planner.uses_llm() {
        cfg.transcript_dir = Some(spec.output_dir.join("transcripts").join(&stem));
    }
    if let Some(every) = spec.snapshot_every {
        cfg.snapshot_every = Some(every);
        cfg.snapshot_dir = Some(spec.output_dir.join("snapshots").join(&stem));
    }
    Ok(cfg)
}

fn run_one(spec: &ExperimentSpec, key: &EpisodeKey, path: &Path) -> Result<EpisodeRow, HarnessError> {
    let map = spec.generate_map(key.map_seed)?;
    let cfg = episode_config(spec, &map, key)?;
    let record = run_episode(&cfg)?;
    let episode = EpisodeRow {
        map_class: spec.class_name().into(),
        map_seed: key.map_seed,
        planner: key.planner,
        team_size: key.team_size,
        task: task_name(spec.task).into(),
        outcome: record.outcome.label().into(),
        steps: record.outcome.t(),
        coverage_at_end: record.final_coverage(),
    };
    let file = EpisodeFile { episode, record };
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string(&file)?)?;
    fs::rename(&tmp, path)?;
    Ok(file.episode)
}

fn load_existing(path: &Path) -> Option<EpisodeRow> {
    let text = fs::read_to_string(path).ok()?;
    serde_json::from_str::<EpisodeFile>(&text).ok().map(|f| f.episode)
}

/// Runs every (map seed, team size, planner) cell not already on disk,
/// then writes `episodes.csv` and `summary.csv` to the output directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport, HarnessError> {
    spec.validate()?;
    let records = spec.output_dir.join("records");
    fs::create_dir_all(&records)?;

    let mut keys = Vec::new();
    for map_seed in spec.map_seeds() {
        for &team_size in &spec.team_sizes {
            for &planner in &spec.planners {
                keys.push(EpisodeKey {
                    map_seed,
                    team_size,
                    planner,
                });
            }
        }
    }
    keys.sort();
    keys.dedup();

    let task = task_name(spec.task);
    let mut rows = Vec::new();
    let mut todo = Vec::new();
    for key in keys {
        let path = records.join(key.file_name(spec.class_name(), task));
        match load_existing(&path) {
            Some(row) => rows.push(row),
            None => todo.push((key, path)),
        }
    }
    let reused = rows.len();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallel)
        .build()
        .map_err(|e| HarnessError::Spec(e.to_string()))?;
    let results: Vec<Result<EpisodeRow, HarnessError>> =
        pool.install(|| todo.par_iter().map(|(key, path)| run_one(spec, key, path)).collect());
    let ran = results.len();
    for r in results {
        rows.push(r?);
    }

    let table = SummaryTable::from_episodes(rows);
    table.write_csv(&spec.output_dir)?;
    Ok(ExperimentReport { table, ran, reused })
}
