//! Frontier detection and representative-frontier selection.
//!
//! A frontier cell is a Free belief cell with at least one Unknown
//! 4-neighbour. Representatives are picked by sampling frontier cells,
//! scoring each with `U = s - λ·c` (information gain minus weighted travel
//! cost) and keeping the best ones subject to a minimum pairwise separation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{disk_offsets, visible_cells, Cell, CellState, GridMap, RobotState};
use crate::rng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontierError {
    #[error("invalid frontier parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierCandidate {
    pub cell: Cell,
    pub info_gain: f64,
    pub cost: f64,
    pub utility: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontierParams {
    /// Frontier cells sampled per call.
    pub samples: usize,
    /// Representatives kept.
    pub keep: usize,
    /// Cost weight.
    pub lambda: f64,
    /// Minimum Euclidean distance between kept representatives.
    pub separation: f64,
    /// Sensor range used to estimate information gain.
    pub info_range: u32,
}

impl Default for FrontierParams {
    fn default() -> Self {
        Self {
            samples: 200,
            keep: 8,
            lambda: 0.01,
            separation: 5.0,
            info_range: 5,
        }
    }
}

impl FrontierParams {
    pub fn validate(&self) -> Result<(), FrontierError> {
        if self.keep < 1 || self.samples < self.keep {
            return Err(FrontierError::InvalidParams(format!(
                "need samples >= keep >= 1, got samples={} keep={}",
                self.samples, self.keep
            )));
        }
        if !(0.0..).contains(&self.lambda) || !(0.0..).contains(&self.separation) {
            return Err(FrontierError::InvalidParams(
                "lambda and separation must be non-negative".into(),
            ));
        }
        if self.info_range < 1 {
            return Err(FrontierError::InvalidParams("info range must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn is_frontier(belief: &GridMap, cell: Cell) -> bool {
    belief.is_free(cell) && belief.neighbors(cell).any(|n| belief.is_unknown(n))
}

/// All frontier cells in lexicographic order.
pub fn frontier_cells(belief: &GridMap) -> Vec<Cell> {
    belief
        .iter()
        .filter(|&(c, s)| s == CellState::Free && is_frontier(belief, c))
        .map(|(c, _)| c)
        .collect()
}

/// Share of the in-bounds sensor disk around `cell` that is Unknown and in
/// line of sight (Occupied cells block, Unknown ones do not).
pub fn info_gain(belief: &GridMap, cell: Cell, range: u32) -> f64 {
    let total = disk_offsets(range)
        .into_iter()
        .filter(|&(dr, dc)| belief.contains(cell.offset(dr, dc)))
        .count();
    if total == 0 {
        return 0.0;
    }
    let unknown = visible_cells(belief, cell, range)
        .into_iter()
        .filter(|&c| belief.is_unknown(c))
        .count();
    unknown as f64 / total as f64
}

/// Sort by descending utility, ties to the lexicographically smaller cell.
pub fn sort_by_utility(cands: &mut [FrontierCandidate]) {
    cands.sort_by(|a, b| b.utility.total_cmp(&a.utility).then(a.cell.cmp(&b.cell)));
}

/// Greedy acceptance in the given order, skipping anything closer than
/// `separation` to an already accepted cell.
pub fn select_separated<T, F>(ordered: Vec<T>, keep: usize, separation: f64, cell_of: F) -> Vec<T>
where
    F: Fn(&T) -> Cell,
{
    let sep2 = separation * separation;
    let mut out: Vec<T> = Vec::new();
    for item in ordered {
        if out.len() >= keep {
            break;
        }
        let c = cell_of(&item);
        if out.iter().all(|o| cell_of(o).dist2(c) as f64 >= sep2) {
            out.push(item);
        }
    }
    out
}

/// Travel cost from the nearest robot: shortest path over belief Free cells,
/// or straight-line distance when no such path exists.
pub fn travel_costs(belief: &GridMap, robots: &[RobotState], cells: &[Cell]) -> Vec<f64> {
    let sources: Vec<Cell> = robots.iter().map(|r| r.position).collect();
    let dist = belief.bfs_distances(&sources);
    cells
        .iter()
        .map(|&c| match belief.index(c).and_then(|i| dist[i]) {
            Some(d) => d as f64,
            None if sources.is_empty() => 0.0,
            None => sources.iter().map(|&s| s.dist(c)).fold(f64::INFINITY, f64::min),
        })
        .collect()
}

pub fn rank_and_select(
    belief: &GridMap,
    robots: &[RobotState],
    params: &FrontierParams,
    seed: u64,
) -> Result<Vec<FrontierCandidate>, FrontierError> {
    params.validate()?;
    let frontiers = frontier_cells(belief);
    if frontiers.is_empty() {
        return Ok(Vec::new());
    }
    let mut rng = SplitMix64::new(seed);
    let sampled = rng.sample(&frontiers, params.samples);
    let costs = travel_costs(belief, robots, &sampled);
    let mut scored: Vec<FrontierCandidate> = sampled
        .iter()
        .zip(costs)
        .map(|(&cell, cost)| {
            let s = info_gain(belief, cell, params.info_range);
            FrontierCandidate {
                cell,
                info_gain: s,
                cost,
                utility: s - params.lambda * cost,
            }
        })
        .collect();
    sort_by_utility(&mut scored);
    Ok(select_separated(scored, params.keep, params.separation, |c| c.cell))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeanShiftParams {
    pub bandwidth: f64,
    pub min_cluster: usize,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for MeanShiftParams {
    fn default() -> Self {
        Self {
            bandwidth: 6.0,
            min_cluster: 4,
            max_iter: 100,
            tolerance: 0.01,
        }
    }
}

fn shift_to_mode(points: &[(f64, f64)], start: (f64, f64), params: &MeanShiftParams) -> (f64, f64) {
    let bw2 = params.bandwidth * params.bandwidth;
    let tol2 = params.tolerance * params.tolerance;
    let mut x = start;
    for _ in 0..params.max_iter {
        let (mut sr, mut sc, mut n) = (0.0, 0.0, 0usize);
        for &(r, c) in points {
            let (dr, dc) = (r - x.0, c - x.1);
            if dr * dr + dc * dc <= bw2 {
                sr += r;
                sc += c;
                n += 1;
            }
        }
        if n == 0 {
            break;
        }
        let next = (sr / n as f64, sc / n as f64);
        let (dr, dc) = (next.0 - x.0, next.1 - x.1);
        x = next;
        if dr * dr + dc * dc < tol2 {
            break;
        }
    }
    x
}

/// Mean-shift over frontier coordinates with a flat kernel. Modes closer
/// than half a bandwidth are merged, clusters smaller than `min_cluster`
/// are dropped and each surviving mode is snapped to the nearest frontier
/// cell.
pub fn mean_shift_frontiers(belief: &GridMap, params: &MeanShiftParams) -> Vec<Cell> {
    let frontiers = frontier_cells(belief);
    if frontiers.is_empty() || params.bandwidth.is_nan() || params.bandwidth <= 0.0 {
        return Vec::new();
    }
    let points: Vec<(f64, f64)> = frontiers.iter().map(|c| (c.row as f64, c.col as f64)).collect();
    let merge2 = (params.bandwidth / 2.0) * (params.bandwidth / 2.0);
    let mut modes: Vec<((f64, f64), usize)> = Vec::new();
    for &p in &points {
        let m = shift_to_mode(&points, p, params);
        match modes.iter_mut().find(|(q, _)| {
            let (dr, dc) = (q.0 - m.0, q.1 - m.1);
            dr * dr + dc * dc <= merge2
        }) {
            Some((_, count)) => *count += 1,
            None => modes.push((m, 1)),
        }
    }
    let mut out: Vec<Cell> = Vec::new();
    for (m, count) in modes {
        if count < params.min_cluster {
            continue;
        }
        let snapped = nearest_cell(&frontiers, m);
        if !out.contains(&snapped) {
            out.push(snapped);
        }
    }
    out
}

/// Cell of `cells` nearest to a real-valued point (ties to the smaller cell;
/// `cells` must be non-empty and sorted).
pub fn nearest_cell(cells: &[Cell], p: (f64, f64)) -> Cell {
    let mut best = cells[0];
    let mut best_d = f64::INFINITY;
    for &c in cells {
        let (dr, dc) = (c.row as f64 - p.0, c.col as f64 - p.1);
        let d = dr * dr + dc * dc;
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::new_belief;

    fn reveal(belief: &mut GridMap, cells: impl IntoIterator<Item = Cell>) {
        for c in cells {
            belief.set(c, CellState::Free).unwrap();
        }
    }

    #[test]
    fn frontier_edge_cases() {
        let b = new_belief(5, 5).unwrap();
        assert!(frontier_cells(&b).is_empty());
        let known = GridMap::new(5, 5, CellState::Free).unwrap();
        assert!(frontier_cells(&known).is_empty());
        let mut one = new_belief(5, 5).unwrap();
        reveal(&mut one, [Cell::new(2, 2)]);
        assert_eq!(frontier_cells(&one), vec![Cell::new(2, 2)]);
    }

    #[test]
    fn info_gain_extremes() {
        let known = GridMap::new(11, 11, CellState::Free).unwrap();
        assert_eq!(info_gain(&known, Cell::new(5, 5), 5), 0.0);
        let mut b = new_belief(11, 11).unwrap();
        b.set(Cell::new(5, 5), CellState::Free).unwrap();
        // The center itself is Free, so all but one disk cell are Unknown.
        let n = disk_offsets(5).len() as f64;
        assert_eq!(info_gain(&b, Cell::new(5, 5), 5), (n - 1.0) / n);
        let all = new_belief(11, 11).unwrap();
        assert_eq!(info_gain(&all, Cell::new(5, 5), 5), 1.0);
    }

    #[test]
    fn info_gain_half_plane() {
        // Rows 0..=5 known Free, rows 6.. Unknown; count the disk directly.
        let mut b = new_belief(11, 11).unwrap();
        reveal(&mut b, (0..=5).flat_map(|r| (0..11).map(move |c| Cell::new(r, c))));
        let offs = disk_offsets(5);
        let unknown = offs.iter().filter(|(dr, _)| *dr > 0).count();
        let expected = unknown as f64 / offs.len() as f64;
        assert_eq!(info_gain(&b, Cell::new(5, 5), 5), expected);
        assert!((expected - 0.5).abs() < 0.1);
    }

    #[test]
    fn params_validation() {
        let mut p = FrontierParams::default();
        assert!(p.validate().is_ok());
        p.keep = 0;
        assert!(p.validate().is_err());
        p = FrontierParams {
            samples: 3,
            keep: 4,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        p = FrontierParams {
            lambda: -1.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn rank_select_basics() {
        let mut b = new_belief(20, 20).unwrap();
        reveal(&mut b, (0..20).flat_map(|r| (0..10).map(move |c| Cell::new(r, c))));
        let robots = [RobotState::new(0, Cell::new(10, 2), 5, 1)];
        let p = FrontierParams {
            samples: 100,
            keep: 1,
            ..Default::default()
        };
        let one = rank_and_select(&b, &robots, &p, 1).unwrap();
        assert_eq!(one.len(), 1);
        let p = FrontierParams {
            samples: 100,
            keep: 8,
            lambda: 0.0,
            separation: 3.0,
            info_range: 5,
        };
        let sel = rank_and_select(&b, &robots, &p, 1).unwrap();
        assert!(sel.windows(2).all(|w| w[0].utility >= w[1].utility));
        assert!(sel.iter().all(|c| c.utility == c.info_gain));
        for (i, a) in sel.iter().enumerate() {
            assert!(is_frontier(&b, a.cell));
            for z in &sel[i + 1..] {
                assert!(a.cell.dist(z.cell) >= 3.0);
            }
        }
        assert!(rank_and_select(&new_belief(5, 5).unwrap(), &robots, &p, 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn mean_shift_blobs() {
        let mut b = GridMap::new(40, 40, CellState::Free).unwrap();
        // Two 3x3 Unknown holes; their rims are frontier blobs.
        for (r0, c0) in [(5, 5), (30, 30)] {
            for r in r0..r0 + 3 {
                for c in c0..c0 + 3 {
                    b.set(Cell::new(r, c), CellState::Unknown).unwrap();
                }
            }
        }
        let reps = mean_shift_frontiers(&b, &MeanShiftParams::default());
        assert_eq!(reps.len(), 2);
        // Each rim's centroid is the hole center; the nearest rim cells sit
        // two cells away and the lexicographically first one wins.
        assert_eq!(reps, vec![Cell::new(4, 6), Cell::new(29, 31)]);

        let p = MeanShiftParams {
            min_cluster: 13,
            ..Default::default()
        };
        assert!(mean_shift_frontiers(&b, &p).is_empty());
        assert!(mean_shift_frontiers(&new_belief(4, 4).unwrap(), &MeanShiftParams::default()).is_empty());
    }
}
