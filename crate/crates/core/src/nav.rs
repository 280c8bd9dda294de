//! Grid A* with other robots as circular obstacles, plus path following.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{Cell, GridMap};

/// Minimum separation between robots, in cells.
pub const D_SAFE: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NavError {
    #[error("start {0} is not a free cell outside every robot disk")]
    BadStart(Cell),
    #[error("goal {0} is unreachable")]
    Unreachable(Cell),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Path {
    pub cells: Vec<Cell>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn moves(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }

    pub fn start(&self) -> Option<Cell> {
        self.cells.first().copied()
    }

    pub fn goal(&self) -> Option<Cell> {
        self.cells.last().copied()
    }
}

/// Other robots as disks; a cell is blocked when its center lies strictly
/// inside a disk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DynamicObstacleSet {
    pub disks: Vec<(Cell, f64)>,
}

impl DynamicObstacleSet {
    pub fn from_robots(positions: impl IntoIterator<Item = Cell>) -> Self {
        Self {
            disks: positions.into_iter().map(|c| (c, D_SAFE)).collect(),
        }
    }

    pub fn blocks(&self, cell: Cell) -> bool {
        self.disks
            .iter()
            .any(|&(center, radius)| (center.dist2(cell) as f64) < radius * radius)
    }
}

fn passable(belief: &GridMap, obstacles: &DynamicObstacleSet, c: Cell) -> bool {
    belief.is_free(c) && !obstacles.blocks(c)
}

/// Shortest 4-connected path over Free, unobstructed cells using A* with
/// the Manhattan heuristic. Unknown cells are not traversable. The open list
/// is ordered by `(f, h, row, col)` so results are reproducible.
pub fn plan_path(belief: &GridMap, start: Cell, goal: Cell, obstacles: &DynamicObstacleSet) -> Result<Path, NavError> {
    if !passable(belief, obstacles, start) {
        return Err(NavError::BadStart(start));
    }
    if !passable(belief, obstacles, goal) {
        return Err(NavError::Unreachable(goal));
    }
    if start == goal {
        return Ok(Path { cells: vec![start] });
    }
    let n = belief.len();
    let mut g = vec![u32::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let si = belief.index(start).unwrap();
    let gi = belief.index(goal).unwrap();
    g[si] = 0;
    let mut open = BinaryHeap::new();
    let h0 = start.manhattan(goal);
    open.push(Reverse((h0, h0, start.row, start.col)));

    while let Some(Reverse((_, _, row, col))) = open.pop() {
        let cur = Cell::new(row, col);
        let ci = belief.index(cur).unwrap();
        if closed[ci] {
            continue;
        }
        closed[ci] = true;
        if ci == gi {
            break;
        }
        for next in cur.neighbors4() {
            if !passable(belief, obstacles, next) {
                continue;
            }
            let ni = belief.index(next).unwrap();
            let cand = g[ci] + 1;
            if cand < g[ni] {
                g[ni] = cand;
                parent[ni] = ci;
                let h = next.manhattan(goal);
                open.push(Reverse((cand + h, h, next.row, next.col)));
            }
        }
    }
    if !closed[gi] {
        return Err(NavError::Unreachable(goal));
    }
    let mut cells = vec![goal];
    let mut i = gi;
    while i != si {
        i = parent[i];
        cells.push(belief.cell_at(i));
    }
    cells.reverse();
    Ok(Path { cells })
}

pub fn is_reachable(belief: &GridMap, start: Cell, goal: Cell, obstacles: &DynamicObstacleSet) -> bool {
    plan_path(belief, start, goal, obstacles).is_ok()
}

/// Moves up to `speed` cells along `path` (whose first cell is the current
/// position). Returns the new position and the rest of the path starting
/// there. An empty path leaves `current` unchanged.
pub fn advance(current: Cell, path: &Path, speed: u32) -> (Cell, Path) {
    if path.is_empty() {
        return (current, Path::default());
    }
    let steps = (speed as usize).min(path.moves());
    let rest = Path {
        cells: path.cells[steps..].to_vec(),
    };
    (path.cells[steps], rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{new_belief, CellState};

    fn open(h: usize, w: usize) -> GridMap {
        GridMap::new(h, w, CellState::Free).unwrap()
    }

    #[test]
    fn trivial_paths() {
        let m = open(10, 10);
        let none = DynamicObstacleSet::default();
        let p = plan_path(&m, Cell::new(3, 3), Cell::new(3, 3), &none).unwrap();
        assert_eq!(p.cells, vec![Cell::new(3, 3)]);
        let p = plan_path(&m, Cell::new(0, 0), Cell::new(9, 9), &none).unwrap();
        assert_eq!(p.len(), 19);
        assert_eq!(p.moves(), 18);
        for w in p.cells.windows(2) {
            assert_eq!(w[0].manhattan(w[1]), 1);
        }
    }

    #[test]
    fn unknown_is_not_traversable() {
        let mut b = new_belief(5, 5).unwrap();
        b.set(Cell::new(0, 0), CellState::Free).unwrap();
        b.set(Cell::new(4, 4), CellState::Free).unwrap();
        let none = DynamicObstacleSet::default();
        assert!(!is_reachable(&b, Cell::new(0, 0), Cell::new(4, 4), &none));
        assert!(is_reachable(&b, Cell::new(0, 0), Cell::new(0, 0), &none));
        assert_eq!(
            plan_path(&b, Cell::new(0, 0), Cell::new(9, 9), &none),
            Err(NavError::Unreachable(Cell::new(9, 9)))
        );
        assert_eq!(
            plan_path(&b, Cell::new(1, 1), Cell::new(0, 0), &none),
            Err(NavError::BadStart(Cell::new(1, 1)))
        );
    }

    #[test]
    fn robot_blocks_single_lane() {
        let mut m = GridMap::new(3, 9, CellState::Occupied).unwrap();
        for c in 0..9 {
            m.set(Cell::new(1, c), CellState::Free).unwrap();
        }
        let blocker = DynamicObstacleSet::from_robots([Cell::new(1, 4)]);
        assert!(!is_reachable(&m, Cell::new(1, 0), Cell::new(1, 8), &blocker));
        assert!(is_reachable(&m, Cell::new(1, 0), Cell::new(1, 3), &blocker));
        assert!(is_reachable(
            &m,
            Cell::new(1, 0),
            Cell::new(1, 8),
            &DynamicObstacleSet::default()
        ));
        // d_safe = 1 blocks only the robot's own cell.
        assert!(!blocker.blocks(Cell::new(1, 3)));
        assert!(blocker.blocks(Cell::new(1, 4)));
    }

    #[test]
    fn advance_clamps_and_never_skips() {
        let path = Path {
            cells: (0..5).map(|c| Cell::new(0, c)).collect(),
        };
        let (p, rest) = advance(Cell::new(0, 0), &path, 1);
        assert_eq!(p, Cell::new(0, 1));
        assert_eq!(rest.cells[0], p);
        let (p, rest) = advance(Cell::new(0, 0), &path, 3);
        assert_eq!(p, Cell::new(0, 3));
        assert_eq!(rest.moves(), 1);
        let short = Path {
            cells: vec![Cell::new(0, 0), Cell::new(0, 1), Cell::new(0, 2)],
        };
        assert_eq!(advance(Cell::new(0, 0), &short, 3).0, Cell::new(0, 2));
        let (p, rest) = advance(Cell::new(7, 7), &Path::default(), 3);
        assert_eq!(p, Cell::new(7, 7));
        assert!(rest.is_empty());
    }
}
