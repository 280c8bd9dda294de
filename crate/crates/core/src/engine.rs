//! One episode of coordinated exploration or search: replanning, waypoint
//! execution with unreachable feedback, sensing, map merging and metrics.

use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doorway::{detect_doorways, DoorwayParams};
use crate::frontier::{mean_shift_frontiers, rank_and_select, FrontierCandidate, FrontierParams, MeanShiftParams};
use crate::gridmap::{
    known_fraction, lidar_scan, new_belief, reachable_free, relevant_cells, Cell, CellSet, CellState, GridError,
    GridMap, RobotState,
};
use crate::mapgen::deploy_origin;
use crate::nav::{advance, plan_path, DynamicObstacleSet, D_SAFE};
use crate::planner_llm::{EndpointBackend, LlmPlanner, PlannerContext, PlannerEndpointConfig, TaskKind};
use crate::planners_baseline::{dvc_assign, greedy_assign};
use crate::rng::SplitMix64;

pub const RECORD_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_REPLAN_HORIZON: usize = 60;
/// Consecutive timesteps a robot waits on a waypoint blocked only by other
/// robots before reporting it unreachable.
pub const DEFAULT_MAX_WAITS: u32 = 5;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid episode configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("failed to write snapshot: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    SampleGreedy,
    MeanshiftGreedy,
    SampleDvc,
    Llm,
    LlmInformed,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] = [
        PlannerKind::SampleGreedy,
        PlannerKind::MeanshiftGreedy,
        PlannerKind::SampleDvc,
        PlannerKind::Llm,
        PlannerKind::LlmInformed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::SampleGreedy => "sample-greedy",
            PlannerKind::MeanshiftGreedy => "meanshift-greedy",
            PlannerKind::SampleDvc => "sample-dvc",
            PlannerKind::Llm => "llm",
            PlannerKind::LlmInformed => "llm-informed",
        }
    }

    /// Greedy planners hand out one waypoint per robot and refill any robot
    /// that runs dry; the others wait until every queue is empty.
    pub fn replans_on_any_empty(self) -> bool {
        matches!(self, PlannerKind::SampleGreedy | PlannerKind::MeanshiftGreedy)
    }

    pub fn uses_llm(self) -> bool {
        matches!(self, PlannerKind::Llm | PlannerKind::LlmInformed)
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = PlannerKind::ALL.iter().map(|k| k.name()).collect();
            format!("unknown planner `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Task {
    Explore,
    Search { target: Cell },
}

impl Task {
    pub fn kind(&self) -> TaskKind {
        match self {
            Task::Explore => TaskKind::Explore,
            Task::Search { .. } => TaskKind::Search,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::Explore => "explore",
            Task::Search { .. } => "search",
        }
    }
}

/// Characteristic vector of one robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub detection_range: u32,
    pub max_speed: u32,
}

impl RobotSpec {
    pub const STANDARD: RobotSpec = RobotSpec {
        detection_range: 5,
        max_speed: 1,
    };
    pub const FAST: RobotSpec = RobotSpec {
        detection_range: 5,
        max_speed: 3,
    };
    pub const LONG_RANGE: RobotSpec = RobotSpec {
        detection_range: 10,
        max_speed: 1,
    };

    pub fn homogeneous(m: usize) -> Vec<RobotSpec> {
        vec![Self::STANDARD; m]
    }

    /// Alternating fast / long-range robots, starting with a fast one.
    pub fn heterogeneous(m: usize) -> Vec<RobotSpec> {
        (0..m)
            .map(|i| if i % 2 == 0 { Self::FAST } else { Self::LONG_RANGE })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum LlmBackendConfig {
    #[default]
    Mock,
    Endpoint(PlannerEndpointConfig),
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub truth: GridMap,
    pub deploy_zone: Vec<Cell>,
    pub team: Vec<RobotSpec>,
    pub planner: PlannerKind,
    pub task: Task,
    pub t_max: usize,
    pub t_h: usize,
    /// Only handed to the planner by [`PlannerKind::LlmInformed`].
    pub initial_info: Option<String>,
    pub seed: u64,
    pub frontier: FrontierParams,
    pub meanshift: MeanShiftParams,
    pub doorway: DoorwayParams,
    pub llm: LlmBackendConfig,
    pub image_scale: u32,
    pub max_waits: u32,
    pub transcript_dir: Option<PathBuf>,
    /// Write the belief as PGM every this many timesteps.
    pub snapshot_every: Option<usize>,
    pub snapshot_dir: Option<PathBuf>,
}

impl EpisodeConfig {
    pub fn new(
        truth: GridMap,
        deploy_zone: Vec<Cell>,
        team: Vec<RobotSpec>,
        planner: PlannerKind,
        task: Task,
        t_max: usize,
    ) -> Self {
        Self {
            truth,
            deploy_zone,
            team,
            planner,
            task,
            t_max,
            t_h: DEFAULT_REPLAN_HORIZON,
            initial_info: None,
            seed: 0,
            frontier: FrontierParams::default(),
            meanshift: MeanShiftParams::default(),
            doorway: DoorwayParams::default(),
            llm: LlmBackendConfig::Mock,
            image_scale: crate::planner_llm::DEFAULT_IMAGE_SCALE,
            max_waits: DEFAULT_MAX_WAITS,
            transcript_dir: None,
            snapshot_every: None,
            snapshot_dir: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if self.t_max == 0 {
            return bad("t_max must be positive".into());
        }
        if self.t_h == 0 {
            return bad("t_h must be positive".into());
        }
        if self.team.is_empty() {
            return bad("team is empty".into());
        }
        if let Some(r) = self.team.iter().find(|r| r.detection_range == 0 || r.max_speed == 0) {
            return bad(format!("robot spec {r:?} needs positive range and speed"));
        }
        if let Some(c) = self.deploy_zone.iter().find(|&&c| !self.truth.is_free(c)) {
            return bad(format!("deploy zone cell {c} is not free"));
        }
        if let Task::Search { target } = self.task {
            if !self.truth.contains(target) {
                return bad(format!("target {target} is outside the map"));
            }
        }
        if self.snapshot_every == Some(0) {
            return bad("snapshot interval must be positive".into());
        }
        Ok(())
    }
}

/// `m` distinct deploy-zone cells: the cell nearest the zone centroid first,
/// then the cells closest to it, with ties broken by the seed.
pub fn place_team(deploy_zone: &[Cell], m: usize, seed: u64) -> Result<Vec<Cell>, EngineError> {
    let mut zone = deploy_zone.to_vec();
    zone.sort();
    zone.dedup();
    if m == 0 || zone.len() < m {
        return Err(EngineError::Config(format!(
            "deploy zone holds {} cells, cannot place {m} robots",
            zone.len()
        )));
    }
    let origin = deploy_origin(&zone).expect("zone is non-empty");
    let mut rest: Vec<Cell> = zone.into_iter().filter(|&c| c != origin).collect();
    SplitMix64::new(seed).shuffle(&mut rest);
    rest.sort_by_key(|c| c.dist2(origin));
    let mut out = vec![origin];
    out.extend(rest.into_iter().take(m - 1));
    Ok(out)
}

/// True once the target cell is known in the belief.
pub fn check_search_done(belief: &GridMap, target: Cell) -> bool {
    belief.get(target).is_some_and(CellState::is_known)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplanTrigger {
    AllEmpty,
    AnyEmpty,
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Replan { cycle: usize, trigger: ReplanTrigger },
    Unreachable { robot: usize, waypoint: Cell },
    Blocked { robot: usize, waypoint: Cell, waits: u32 },
    Arrived { robot: usize, waypoint: Cell },
    ParseFallback { cycle: usize, attempts: usize },
    PlannerWarning { cycle: usize, message: String },
    TargetObserved { target: Cell },
    SafetyViolation { a: usize, b: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub coverage: f64,
    pub positions: Vec<Cell>,
    /// Queue lengths at the end of the timestep.
    pub queue_lengths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub t: usize,
    pub trigger: ReplanTrigger,
    pub t_since_plan: usize,
    pub frontiers: usize,
    pub doorways: usize,
    pub queues: Vec<Vec<Cell>>,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed { t: usize },
    Timeout { t: usize },
    Error { t: usize, message: String },
}

impl Outcome {
    pub fn t(&self) -> usize {
        match self {
            Outcome::Completed { t } | Outcome::Timeout { t } | Outcome::Error { t, .. } => *t,
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, Outcome::Completed { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Completed { .. } => "completed",
            Outcome::Timeout { .. } => "timeout",
            Outcome::Error { .. } => "error",
        }
    }
}

/// Everything recorded about one episode. Serialized as JSON with
/// `schema_version` 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub planner: PlannerKind,
    pub task: Task,
    pub seed: u64,
    pub t_max: usize,
    pub t_h: usize,
    pub map_height: usize,
    pub map_width: usize,
    pub team: Vec<RobotSpec>,
    pub steps: Vec<StepRecord>,
    pub cycles: Vec<CycleRecord>,
    pub events: Vec<Event>,
    pub outcome: Outcome,
    pub safety_violations: usize,
    /// Belief at the end of the episode in the ASCII map format.
    pub final_belief: String,
    /// Wall-clock milliseconds per planning cycle; not serialized.
    #[serde(skip)]
    pub planning_latency_ms: Vec<f64>,
}

impl RunRecord {
    pub fn final_coverage(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.coverage)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn events_for(&self, t: usize) -> impl Iterator<Item = &EventKind> {
        self.events.iter().filter(move |e| e.t == t).map(|e| &e.kind)
    }
}

enum Coordinator {
    Baseline,
    Llm(LlmPlanner),
}

struct Episode<'a> {
    cfg: &'a EpisodeConfig,
    belief: GridMap,
    robots: Vec<RobotState>,
    queues: Vec<VecDeque<Cell>>,
    waits: Vec<u32>,
    relevant: CellSet,
    t_since_plan: usize,
    s_exec: Vec<String>,
    s_plan: String,
    coordinator: Coordinator,
    record: RunRecord,
}

impl<'a> Episode<'a> {
    fn event(&mut self, t: usize, kind: EventKind) {
        self.record.events.push(Event { t, kind });
    }

    fn coverage(&self) -> f64 {
        known_fraction(&self.belief, &self.relevant).unwrap_or(1.0)
    }

    fn done(&self) -> bool {
        match self.cfg.task {
            Task::Explore => self.relevant.iter().all(|c| !self.belief.is_unknown(c)),
            Task::Search { target } => check_search_done(&self.belief, target),
        }
    }

    fn record_step(&mut self, t: usize) {
        let step = StepRecord {
            t,
            coverage: self.coverage(),
            positions: self.robots.iter().map(|r| r.position).collect(),
            queue_lengths: self.queues.iter().map(VecDeque::len).collect(),
        };
        self.record.steps.push(step);
    }

    fn snapshot(&self, t: usize) -> Result<(), EngineError> {
        if let (Some(every), Some(dir)) = (self.cfg.snapshot_every, &self.cfg.snapshot_dir) {
            if t.is_multiple_of(every) {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(format!("belief_t{t:05}.pgm")), self.belief.to_pgm())?;
            }
        }
        Ok(())
    }

    fn team_range(&self) -> u32 {
        self.robots.iter().map(|r| r.detection_range).max().unwrap_or(1)
    }

    fn trigger(&self) -> Option<ReplanTrigger> {
        if self.cfg.planner.replans_on_any_empty() {
            if self.queues.iter().any(VecDeque::is_empty) {
                return Some(ReplanTrigger::AnyEmpty);
            }
        } else if self.queues.iter().all(VecDeque::is_empty) {
            return Some(ReplanTrigger::AllEmpty);
        }
        (self.t_since_plan >= self.cfg.t_h).then_some(ReplanTrigger::Horizon)
    }

    fn sampled_frontiers(&self, cycle: usize) -> Vec<FrontierCandidate> {
        let params = FrontierParams {
            info_range: self.team_range(),
            ..self.cfg.frontier
        };
        let seed = SplitMix64::derive(self.cfg.seed, 2 * cycle as u64).next_u64();
        rank_and_select(&self.belief, &self.robots, &params, seed).unwrap_or_default()
    }

    /// Runs one planning cycle and installs the new queues.
    fn replan(&mut self, t: usize, trigger: ReplanTrigger) -> Result<(), String> {
        let cycle = self.record.cycles.len();
        self.event(t, EventKind::Replan { cycle, trigger });
        let started = Instant::now();
        let m = self.robots.len();
        let n_frontiers;
        let mut n_doorways = 0;
        let mut summary = String::new();

        match self.cfg.planner {
            PlannerKind::SampleGreedy | PlannerKind::MeanshiftGreedy => {
                let cells: Vec<Cell> = if self.cfg.planner == PlannerKind::SampleGreedy {
                    self.sampled_frontiers(cycle).into_iter().map(|f| f.cell).collect()
                } else {
                    mean_shift_frontiers(&self.belief, &self.cfg.meanshift)
                };
                n_frontiers = cells.len();
                if trigger == ReplanTrigger::Horizon {
                    self.queues.iter_mut().for_each(VecDeque::clear);
                }
                let busy: Vec<Cell> = self.queues.iter().filter_map(|q| q.front().copied()).collect();
                let sep2 = self.cfg.frontier.separation * self.cfg.frontier.separation;
                let free: Vec<Cell> = cells
                    .into_iter()
                    .filter(|c| busy.iter().all(|b| (b.dist2(*c) as f64) >= sep2))
                    .collect();
                let idle: Vec<RobotState> = self
                    .robots
                    .iter()
                    .zip(&self.queues)
                    .filter(|(_, q)| q.is_empty())
                    .map(|(r, _)| *r)
                    .collect();
                let a = greedy_assign(&free, &idle, &self.belief);
                for (r, q) in idle.iter().zip(a.queues) {
                    self.queues[r.id] = q.into();
                }
            }
            PlannerKind::SampleDvc => {
                let cells: Vec<Cell> = self.sampled_frontiers(cycle).into_iter().map(|f| f.cell).collect();
                n_frontiers = cells.len();
                let a = dvc_assign(&cells, &self.robots, &self.belief);
                for (r, q) in self.robots.iter().zip(a.queues) {
                    self.queues[r.id] = q.into();
                }
            }
            PlannerKind::Llm | PlannerKind::LlmInformed => {
                let frontiers = self.sampled_frontiers(cycle);
                let doorway_seed = SplitMix64::derive(self.cfg.seed, 2 * cycle as u64 + 1).next_u64();
                let doorways = detect_doorways(&self.belief, &self.cfg.doorway, self.team_range(), doorway_seed)
                    .unwrap_or_default();
                n_frontiers = frontiers.len();
                n_doorways = doorways.len();
                let mut ctx =
                    PlannerContext::new(self.cfg.task.kind(), &self.belief, &self.robots, self.cfg.image_scale);
                ctx.frontiers = frontiers;
                ctx.doorways = doorways;
                if self.cfg.planner == PlannerKind::LlmInformed {
                    ctx.initial_info = self.cfg.initial_info.clone();
                }
                ctx.plan_summary = self.s_plan.clone();
                ctx.exec_summary = self.s_exec.clone();
                let Coordinator::Llm(planner) = &mut self.coordinator else {
                    unreachable!("llm planner kinds always carry an LLM coordinator")
                };
                let outcome = planner.plan(&ctx, &self.belief).map_err(|e| e.to_string())?;
                if outcome.fell_back {
                    self.event(
                        t,
                        EventKind::ParseFallback {
                            cycle,
                            attempts: outcome.attempts,
                        },
                    );
                }
                for message in &outcome.plan.warnings {
                    self.event(
                        t,
                        EventKind::PlannerWarning {
                            cycle,
                            message: message.clone(),
                        },
                    );
                }
                for (id, q) in outcome.plan.queues.into_iter().enumerate().take(m) {
                    self.queues[id] = q.into();
                }
                self.s_plan = outcome.plan.summary.clone();
                summary = outcome.plan.summary;
            }
        }

        self.record
            .planning_latency_ms
            .push(started.elapsed().as_secs_f64() * 1e3);
        self.record.cycles.push(CycleRecord {
            cycle,
            t,
            trigger,
            t_since_plan: self.t_since_plan,
            frontiers: n_frontiers,
            doorways: n_doorways,
            queues: self.queues.iter().map(|q| q.iter().copied().collect()).collect(),
            summary,
        });
        self.t_since_plan = 0;
        self.s_exec.clear();
        Ok(())
    }

    fn report_unreachable(&mut self, t: usize, i: usize, w: Cell) {
        self.queues[i].pop_front();
        self.waits[i] = 0;
        self.s_exec.push(format!("{w} unreachable by robot {i}"));
        self.event(t, EventKind::Unreachable { robot: i, waypoint: w });
    }

    /// Moves robot `i` toward its head waypoint and returns whether it moved.
    fn execute(&mut self, t: usize, i: usize) -> bool {
        let Some(&w) = self.queues[i].front() else {
            return false;
        };
        let pos = self.robots[i].position;
        let others = DynamicObstacleSet::from_robots(self.robots.iter().filter(|r| r.id != i).map(|r| r.position));
        let path = match plan_path(&self.belief, pos, w, &others) {
            Ok(p) => p,
            Err(_) => {
                if plan_path(&self.belief, pos, w, &DynamicObstacleSet::default()).is_err() {
                    self.report_unreachable(t, i, w);
                } else {
                    self.waits[i] += 1;
                    let waits = self.waits[i];
                    self.event(
                        t,
                        EventKind::Blocked {
                            robot: i,
                            waypoint: w,
                            waits,
                        },
                    );
                    if waits >= self.cfg.max_waits {
                        self.report_unreachable(t, i, w);
                    }
                }
                return false;
            }
        };
        self.waits[i] = 0;
        let (next, _) = advance(pos, &path, self.robots[i].max_speed);
        self.robots[i].position = next;
        if next == w {
            self.queues[i].pop_front();
            self.event(t, EventKind::Arrived { robot: i, waypoint: w });
        }
        next != pos
    }

    fn check_safety(&mut self, t: usize) {
        let d2 = D_SAFE * D_SAFE;
        for a in 0..self.robots.len() {
            for b in a + 1..self.robots.len() {
                if (self.robots[a].position.dist2(self.robots[b].position) as f64) < d2 {
                    self.record.safety_violations += 1;
                    self.event(t, EventKind::SafetyViolation { a, b });
                }
            }
        }
    }
}

/// Runs one episode to completion, timeout or planner failure.
pub fn run_episode(cfg: &EpisodeConfig) -> Result<RunRecord, EngineError> {
    cfg.validate()?;
    let starts = place_team(&cfg.deploy_zone, cfg.team.len(), cfg.seed)?;
    let robots: Vec<RobotState> = cfg
        .team
        .iter()
        .zip(&starts)
        .enumerate()
        .map(|(id, (spec, &p))| RobotState::new(id, p, spec.detection_range, spec.max_speed))
        .collect();
    let reachable = reachable_free(&cfg.truth, starts[0])?;
    let relevant = relevant_cells(&cfg.truth, &reachable);

    let coordinator = if cfg.planner.uses_llm() {
        let mut planner = match &cfg.llm {
            LlmBackendConfig::Mock => LlmPlanner::mock(SplitMix64::derive(cfg.seed, u64::MAX).next_u64()),
            LlmBackendConfig::Endpoint(ep) => LlmPlanner::new(Box::new(EndpointBackend::new(ep.clone()))),
        };
        if let Some(dir) = &cfg.transcript_dir {
            planner = planner.with_transcripts(dir);
        }
        Coordinator::Llm(planner)
    } else {
        Coordinator::Baseline
    };

    let m = robots.len();
    let mut ep = Episode {
        cfg,
        belief: new_belief(cfg.truth.height(), cfg.truth.width())?,
        robots,
        queues: vec![VecDeque::new(); m],
        waits: vec![0; m],
        relevant,
        t_since_plan: 0,
        s_exec: Vec::new(),
        s_plan: String::new(),
        coordinator,
        record: RunRecord {
            schema_version: RECORD_SCHEMA_VERSION,
            planner: cfg.planner,
            task: cfg.task,
            seed: cfg.seed,
            t_max: cfg.t_max,
            t_h: cfg.t_h,
            map_height: cfg.truth.height(),
            map_width: cfg.truth.width(),
            team: cfg.team.clone(),
            steps: Vec::new(),
            cycles: Vec::new(),
            events: Vec::new(),
            outcome: Outcome::Timeout { t: cfg.t_max },
            safety_violations: 0,
            final_belief: String::new(),
            planning_latency_ms: Vec::new(),
        },
    };

    let mut obs = Vec::new();
    for r in &ep.robots {
        obs.extend(lidar_scan(&cfg.truth, r.position, r.detection_range)?);
    }
    ep.belief.merge_in_place(&obs)?;
    ep.check_safety(0);
    ep.record_step(0);
    ep.snapshot(0)?;

    let mut outcome = None;
    if ep.done() {
        outcome = Some(Outcome::Completed { t: 0 });
    }
    let mut t = 0;
    while outcome.is_none() && t < cfg.t_max {
        if let Some(trigger) = ep.trigger() {
            if let Err(message) = ep.replan(t, trigger) {
                outcome = Some(Outcome::Error { t, message });
                break;
            }
        }
        let mut obs = Vec::new();
        for i in 0..m {
            if ep.execute(t, i) {
                let r = ep.robots[i];
                obs.extend(lidar_scan(&cfg.truth, r.position, r.detection_range)?);
            }
        }
        ep.belief.merge_in_place(&obs)?;
        t += 1;
        ep.t_since_plan += 1;
        ep.check_safety(t);
        ep.record_step(t);
        ep.snapshot(t)?;
        if ep.done() {
            outcome = Some(Outcome::Completed { t });
        }
    }

    if let (Some(Outcome::Completed { t }), Task::Search { target }) = (&outcome, cfg.task) {
        ep.event(*t, EventKind::TargetObserved { target });
    }
    ep.record.outcome = outcome.unwrap_or(Outcome::Timeout { t: cfg.t_max });
    ep.record.final_belief = ep.belief.to_ascii();
    Ok(ep.record)
}
