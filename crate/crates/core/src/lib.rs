//! Multi-robot coordinated exploration and object search on occupancy grids.
//!
//! The crate is organised bottom-up:
//!
//! * [`gridmap`]: cell states, LiDAR visibility, map merging and coverage.
//! * [`mapgen`]: seeded structured (corridor + rooms) and cave-like maps.
//! * [`frontier`]: frontier detection, utility-ranked sampling, mean-shift.
//! * [`doorway`]: wall-gap probing for doorway candidates.
//! * [`nav`]: A* with robot obstacles and speed-limited path following.
//! * [`planners_baseline`]: greedy, Voronoi and TSP-based coordinators.
//! * [`planner_llm`]: prompt assembly, response parsing, chat client, mock.
//! * [`engine`]: the planning/execution loop for one episode.
//! * [`harness`]: batch experiments, summaries and comparisons.

pub mod doorway;
pub mod engine;
pub mod frontier;
pub mod gridmap;
pub mod harness;
pub mod mapgen;
pub mod nav;
pub mod planner_llm;
pub mod planners_baseline;
pub mod rng;

pub use gridmap::{Cell, CellSet, CellState, GridMap, RobotState};
pub use rng::SplitMix64;
