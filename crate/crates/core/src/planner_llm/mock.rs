use std::fmt::Write as _;

use super::{PlanResponse, PlannerContext};
use crate::gridmap::Cell;
use crate::planners_baseline::voronoi_partition;
use crate::rng::SplitMix64;

/// Most waypoints the mock hands to one robot.
pub const MOCK_QUEUE_CAP: usize = 4;

/// Deterministic stand-in for the model: frontier and doorway candidates
/// are split among robots by Voronoi cell, each share is ordered
/// nearest-neighbor from the robot and capped at [`MOCK_QUEUE_CAP`].
/// The seed only decides ties between equidistant candidates.
pub fn mock_planner(ctx: &PlannerContext, seed: u64) -> PlanResponse {
    let m = ctx.robots.len();
    let mut candidates = ctx.candidate_cells();
    if candidates.is_empty() {
        return PlanResponse {
            queues: vec![Vec::new(); m],
            summary: "no candidates".into(),
            warnings: Vec::new(),
        };
    }
    SplitMix64::new(seed).shuffle(&mut candidates);

    let shares = voronoi_partition(&candidates, &ctx.robots);
    let mut queues = vec![Vec::new(); m];
    for (robot, share) in ctx.robots.iter().zip(shares) {
        let mut rest = share;
        let mut at = robot.position;
        let mut q = Vec::new();
        while !rest.is_empty() && q.len() < MOCK_QUEUE_CAP {
            let k = (0..rest.len()).min_by_key(|&k| at.dist2(rest[k])).unwrap();
            at = rest.remove(k);
            q.push(at);
        }
        if robot.id < m {
            queues[robot.id] = q;
        }
    }

    let mut summary = String::new();
    for (id, q) in queues.iter().enumerate() {
        if !summary.is_empty() {
            summary.push_str("; ");
        }
        match q.last() {
            Some(last) => {
                let _ = write!(summary, "robot {id} sweeps {} waypoints ending at {last}", q.len());
            }
            None => {
                let _ = write!(summary, "robot {id} holds position");
            }
        }
    }
    PlanResponse {
        queues,
        summary,
        warnings: Vec::new(),
    }
}

/// First robot whose queue repeats a waypoint of an earlier robot.
pub fn first_duplicate(queues: &[Vec<Cell>]) -> Option<Cell> {
    let mut seen = std::collections::BTreeSet::new();
    queues.iter().flatten().find(|c| !seen.insert(**c)).copied()
}
