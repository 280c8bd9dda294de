//! Classical coordinators: greedy nearest-frontier assignment and the
//! Voronoi partition + per-robot TSP tour ("DVC") scheme.

use serde::{Deserialize, Serialize};

use crate::gridmap::{Cell, GridMap, RobotState};

/// Per-robot waypoint queues, indexed like the `robots` slice they were
/// computed for.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Assignment {
    pub queues: Vec<Vec<Cell>>,
    /// Candidates dropped because no path reached them.
    pub dropped: Vec<Cell>,
}

impl Assignment {
    pub fn empty(robots: usize) -> Self {
        Self {
            queues: vec![Vec::new(); robots],
            dropped: Vec::new(),
        }
    }

    pub fn all_empty(&self) -> bool {
        self.queues.iter().all(Vec::is_empty)
    }
}

/// Robot indices in ascending id order.
fn id_order(robots: &[RobotState]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..robots.len()).collect();
    order.sort_by_key(|&i| robots[i].id);
    order
}

/// Each robot, in ascending id order, takes the unassigned candidate with
/// the shortest belief path from its position. One waypoint per robot;
/// candidates no path reaches are skipped for that robot.
pub fn greedy_assign(candidates: &[Cell], robots: &[RobotState], belief: &GridMap) -> Assignment {
    let mut out = Assignment::empty(robots.len());
    let mut taken = vec![false; candidates.len()];
    for i in id_order(robots) {
        let dist = belief.bfs_distances(&[robots[i].position]);
        let best = candidates
            .iter()
            .enumerate()
            .filter(|(k, _)| !taken[*k])
            .filter_map(|(k, &c)| belief.index(c).and_then(|j| dist[j]).map(|d| (d, c, k)))
            .min();
        if let Some((_, c, k)) = best {
            taken[k] = true;
            out.queues[i].push(c);
        }
    }
    out
}

/// Nearest robot by Euclidean distance; ties go to the lower id.
pub fn voronoi_partition(candidates: &[Cell], robots: &[RobotState]) -> Vec<Vec<Cell>> {
    let mut parts = vec![Vec::new(); robots.len()];
    if robots.is_empty() {
        return parts;
    }
    let order = id_order(robots);
    for &c in candidates {
        let mut best = order[0];
        for &i in &order[1..] {
            if robots[i].position.dist2(c) < robots[best].position.dist2(c) {
                best = i;
            }
        }
        parts[best].push(c);
    }
    parts
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tour {
    pub waypoints: Vec<Cell>,
    pub dropped: Vec<Cell>,
    /// Total path length in moves, start included.
    pub length: u32,
}

/// Largest target count solved exactly.
pub const EXACT_TSP_LIMIT: usize = 9;

/// Open tour from `start` through every reachable target, with path
/// distances in `belief`. Exact (Held-Karp) up to [`EXACT_TSP_LIMIT`]
/// targets, nearest neighbour followed by 2-opt beyond.
pub fn tsp_tour(start: Cell, targets: &[Cell], belief: &GridMap) -> Tour {
    let mut uniq: Vec<Cell> = targets.to_vec();
    uniq.sort();
    uniq.dedup();
    let from_start = belief.bfs_distances(&[start]);
    let (reach, dropped): (Vec<Cell>, Vec<Cell>) = uniq
        .into_iter()
        .partition(|&c| belief.index(c).and_then(|i| from_start[i]).is_some());
    if reach.is_empty() {
        return Tour {
            waypoints: Vec::new(),
            dropped,
            length: 0,
        };
    }
    // Node 0 is the start, nodes 1..=n the targets.
    let nodes: Vec<Cell> = std::iter::once(start).chain(reach.iter().copied()).collect();
    let dist: Vec<Vec<u32>> = nodes
        .iter()
        .map(|&a| {
            let d = belief.bfs_distances(&[a]);
            nodes
                .iter()
                .map(|&b| belief.index(b).and_then(|i| d[i]).unwrap_or(u32::MAX / 4))
                .collect()
        })
        .collect();
    let order = if reach.len() <= EXACT_TSP_LIMIT {
        held_karp(&dist)
    } else {
        two_opt(&dist, nearest_neighbor(&dist))
    };
    let length = path_length(&dist, &order);
    Tour {
        waypoints: order.iter().map(|&k| nodes[k]).collect(),
        dropped,
        length,
    }
}

/// Length of the open path 0 -> order[0] -> order[1] -> ...
pub fn path_length(dist: &[Vec<u32>], order: &[usize]) -> u32 {
    let mut prev = 0;
    let mut total = 0;
    for &k in order {
        total += dist[prev][k];
        prev = k;
    }
    total
}

fn held_karp(dist: &[Vec<u32>]) -> Vec<usize> {
    let n = dist.len() - 1;
    let full = 1usize << n;
    let inf = u32::MAX;
    let mut dp = vec![vec![inf; n]; full];
    let mut prev = vec![vec![usize::MAX; n]; full];
    for j in 0..n {
        dp[1 << j][j] = dist[0][j + 1];
    }
    for mask in 1..full {
        for j in 0..n {
            let cur = dp[mask][j];
            if cur == inf || mask & (1 << j) == 0 {
                continue;
            }
            for k in 0..n {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let cand = cur + dist[j + 1][k + 1];
                if cand < dp[next][k] {
                    dp[next][k] = cand;
                    prev[next][k] = j;
                }
            }
        }
    }
    let last = (0..n).min_by_key(|&j| (dp[full - 1][j], j)).unwrap();
    let mut order = Vec::with_capacity(n);
    let (mut mask, mut j) = (full - 1, last);
    loop {
        order.push(j + 1);
        let p = prev[mask][j];
        mask &= !(1 << j);
        if mask == 0 {
            break;
        }
        j = p;
    }
    order.reverse();
    order
}

fn nearest_neighbor(dist: &[Vec<u32>]) -> Vec<usize> {
    let n = dist.len();
    let mut visited = vec![false; n];
    visited[0] = true;
    let mut order = Vec::with_capacity(n - 1);
    let mut cur = 0;
    for _ in 1..n {
        let next = (1..n)
            .filter(|&k| !visited[k])
            .min_by_key(|&k| (dist[cur][k], k))
            .unwrap();
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

/// 2-opt on an open path with a fixed start node; reverses `order[i..=j]`
/// whenever that shortens the path, until no move helps.
fn two_opt(dist: &[Vec<u32>], mut order: Vec<usize>) -> Vec<usize> {
    let n = order.len();
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n {
            for j in i + 1..n {
                let a = if i == 0 { 0 } else { order[i - 1] };
                let (b, c) = (order[i], order[j]);
                let before = dist[a][b] as i64 + if j + 1 < n { dist[c][order[j + 1]] as i64 } else { 0 };
                let after = dist[a][c] as i64 + if j + 1 < n { dist[b][order[j + 1]] as i64 } else { 0 };
                if after < before {
                    order[i..=j].reverse();
                    improved = true;
                }
            }
        }
    }
    order
}

/// Voronoi partition followed by a TSP tour per robot.
pub fn dvc_assign(candidates: &[Cell], robots: &[RobotState], belief: &GridMap) -> Assignment {
    let mut out = Assignment::empty(robots.len());
    for (i, part) in voronoi_partition(candidates, robots).into_iter().enumerate() {
        let tour = tsp_tour(robots[i].position, &part, belief);
        out.queues[i] = tour.waypoints;
        out.dropped.extend(tour.dropped);
    }
    out
}
