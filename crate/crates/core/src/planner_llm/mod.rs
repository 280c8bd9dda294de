//! Centralized LLM planner: prompt assembly, map rendering, response
//! parsing, the chat-completions client and an offline mock.

pub mod client;
pub mod mock;
pub mod parse;
pub mod prompt;
pub mod render;

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doorway::DoorwayCandidate;
use crate::frontier::FrontierCandidate;
use crate::gridmap::{Cell, GridMap, RobotState};
use crate::planners_baseline::greedy_assign;

pub use client::{query_endpoint, EndpointError, PlannerEndpointConfig, Transport, TransportFailure, UreqTransport};
pub use mock::mock_planner;
pub use parse::{format_response, parse_response, ParseError};
pub use prompt::{build_prompt, Prompt};
pub use render::render_map_image;

/// Longest plan summary carried into the next prompt.
pub const MAX_SUMMARY_CHARS: usize = 1000;

/// Pixels per cell of the attached map image.
pub const DEFAULT_IMAGE_SCALE: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Explore,
    Search,
}

/// Everything a planning query is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerContext {
    pub task: TaskKind,
    pub frontiers: Vec<FrontierCandidate>,
    pub doorways: Vec<DoorwayCandidate>,
    pub robots: Vec<RobotState>,
    pub map_png: Vec<u8>,
    pub map_height: usize,
    pub map_width: usize,
    pub initial_info: Option<String>,
    pub plan_summary: String,
    pub exec_summary: Vec<String>,
}

impl PlannerContext {
    /// Context with the map rendered from `belief` at `scale`.
    pub fn new(task: TaskKind, belief: &GridMap, robots: &[RobotState], scale: u32) -> Self {
        Self {
            task,
            frontiers: Vec::new(),
            doorways: Vec::new(),
            robots: robots.to_vec(),
            map_png: render_map_image(belief, robots, scale),
            map_height: belief.height(),
            map_width: belief.width(),
            initial_info: None,
            plan_summary: String::new(),
            exec_summary: Vec::new(),
        }
    }

    /// Frontier cells followed by doorway midpoints, without repeats.
    pub fn candidate_cells(&self) -> Vec<Cell> {
        let mut out: Vec<Cell> = Vec::new();
        let all = self
            .frontiers
            .iter()
            .map(|f| f.cell)
            .chain(self.doorways.iter().map(|d| d.midpoint));
        for c in all {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }
}

/// Per-robot waypoint queues (indexed by robot id) and the plan summary.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlanResponse {
    pub queues: Vec<Vec<Cell>>,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Source of raw model text for a prompt.
pub trait LlmBackend: Send {
    fn complete(&mut self, prompt: &Prompt, ctx: &PlannerContext) -> Result<String, EndpointError>;
}

/// Offline backend: answers with the formatted [`mock_planner`] plan so the
/// full prompt, parse and validation path still runs.
#[derive(Debug, Clone)]
pub struct MockBackend {
    pub seed: u64,
    calls: u64,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        Self { seed, calls: 0 }
    }
}

impl LlmBackend for MockBackend {
    fn complete(&mut self, _prompt: &Prompt, ctx: &PlannerContext) -> Result<String, EndpointError> {
        let seed = crate::rng::SplitMix64::derive(self.seed, self.calls).next_u64();
        self.calls += 1;
        Ok(format_response(&mock_planner(ctx, seed)))
    }
}

/// Live chat-completions backend.
pub struct EndpointBackend<T: Transport = UreqTransport> {
    pub config: PlannerEndpointConfig,
    pub transport: T,
}

impl EndpointBackend<UreqTransport> {
    pub fn new(config: PlannerEndpointConfig) -> Self {
        Self {
            config,
            transport: UreqTransport,
        }
    }
}

impl<T: Transport + Send> LlmBackend for EndpointBackend<T> {
    fn complete(&mut self, prompt: &Prompt, _ctx: &PlannerContext) -> Result<String, EndpointError> {
        query_endpoint(&self.config, prompt, &self.transport)
    }
}

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error(transparent)]
    Endpoint(#[from] EndpointError),
    #[error("failed to write transcript: {0}")]
    Transcript(#[from] std::io::Error),
}

/// Result of one planning cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub plan: PlanResponse,
    /// Queries issued this cycle.
    pub attempts: usize,
    /// The response could not be parsed and greedy assignment was used.
    pub fell_back: bool,
}

/// Runs planning cycles against a backend: one query, one re-query on a
/// parse failure, then greedy assignment over the context frontiers.
pub struct LlmPlanner {
    backend: Box<dyn LlmBackend>,
    transcript_dir: Option<PathBuf>,
    cycle: usize,
}

impl LlmPlanner {
    pub fn new(backend: Box<dyn LlmBackend>) -> Self {
        Self {
            backend,
            transcript_dir: None,
            cycle: 0,
        }
    }

    pub fn mock(seed: u64) -> Self {
        Self::new(Box::new(MockBackend::new(seed)))
    }

    /// Writes `cycle_NNNN_prompt.txt` / `cycle_NNNN_response.txt` per query.
    pub fn with_transcripts(mut self, dir: impl Into<PathBuf>) -> Self {
        self.transcript_dir = Some(dir.into());
        self
    }

    pub fn cycles(&self) -> usize {
        self.cycle
    }

    fn record(&self, name: &str, body: &str) -> Result<(), PlannerError> {
        if let Some(dir) = &self.transcript_dir {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(format!("cycle_{:04}_{name}.txt", self.cycle)), body)?;
        }
        Ok(())
    }

    pub fn plan(&mut self, ctx: &PlannerContext, belief: &GridMap) -> Result<PlanOutcome, PlannerError> {
        let prompt = build_prompt(ctx);
        let m = ctx.robots.len();
        let mut attempts = 0;
        let mut result = None;
        while attempts < 2 {
            attempts += 1;
            let raw = self.backend.complete(&prompt, ctx)?;
            if attempts == 1 {
                self.record("prompt", &prompt.transcript())?;
                self.record("response", &raw)?;
            } else {
                self.record("response_retry", &raw)?;
            }
            if let Ok(mut plan) = parse_response(&raw, belief, m) {
                plan.summary = truncate_summary(&plan.summary);
                result = Some(plan);
                break;
            }
        }
        self.cycle += 1;
        Ok(match result {
            Some(plan) => PlanOutcome {
                plan,
                attempts,
                fell_back: false,
            },
            None => {
                let cells: Vec<Cell> = ctx.frontiers.iter().map(|f| f.cell).collect();
                let a = greedy_assign(&cells, &ctx.robots, belief);
                let mut queues = vec![Vec::new(); m];
                for (r, q) in ctx.robots.iter().zip(a.queues) {
                    if r.id < m {
                        queues[r.id] = q;
                    }
                }
                PlanOutcome {
                    plan: PlanResponse {
                        queues,
                        summary: ctx.plan_summary.clone(),
                        warnings: vec!["unparseable response; greedy fallback used".into()],
                    },
                    attempts,
                    fell_back: true,
                }
            }
        })
    }
}

pub fn truncate_summary(s: &str) -> String {
    s.chars().take(MAX_SUMMARY_CHARS).collect()
}
