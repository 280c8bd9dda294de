//! Occupancy grid world model.
//!
//! A [`GridMap`] is used both as the ground-truth world and as the shared
//! belief that robots build up by scanning. All geometry is in cell units;
//! the resolution is carried along as metadata only.

mod io;
mod visibility;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use visibility::{disk_offsets, lidar_scan, line_cells, visible_cells};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("pose {0} is not a free cell")]
    InvalidPose(Cell),
    #[error("observation at {0} has state Unknown")]
    InvalidObservation(Cell),
    #[error("cell {0} is outside the {1}x{2} map")]
    OutOfBounds(Cell, usize, usize),
    #[error("map dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("no relevant cells to measure coverage against")]
    EmptyRelevantSet,
    #[error("map parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

impl CellState {
    pub fn is_known(self) -> bool {
        self != CellState::Unknown
    }
}

/// Grid coordinate. Ordering is lexicographic by `(row, col)`, which is the
/// tie-break order used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: i32,
    pub col: i32,
}

impl Cell {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }

    pub fn offset(self, dr: i32, dc: i32) -> Self {
        Self::new(self.row + dr, self.col + dc)
    }

    pub fn neighbors4(self) -> [Cell; 4] {
        [
            self.offset(-1, 0),
            self.offset(0, -1),
            self.offset(0, 1),
            self.offset(1, 0),
        ]
    }

    pub fn dist2(self, other: Cell) -> i64 {
        let dr = (self.row - other.row) as i64;
        let dc = (self.col - other.col) as i64;
        dr * dr + dc * dc
    }

    pub fn dist(self, other: Cell) -> f64 {
        (self.dist2(other) as f64).sqrt()
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Robot pose plus its characteristic vector (detection range, max speed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotState {
    pub id: usize,
    pub position: Cell,
    pub detection_range: u32,
    pub max_speed: u32,
}

impl RobotState {
    pub fn new(id: usize, position: Cell, detection_range: u32, max_speed: u32) -> Self {
        Self {
            id,
            position,
            detection_range,
            max_speed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    height: usize,
    width: usize,
    resolution: f64,
    cells: Vec<CellState>,
}

impl GridMap {
    pub fn new(height: usize, width: usize, fill: CellState) -> Result<Self, GridError> {
        if height == 0 || width == 0 {
            return Err(GridError::InvalidArgument(format!(
                "map dimensions must be positive, got {height}x{width}"
            )));
        }
        Ok(Self {
            height,
            width,
            resolution: 1.0,
            cells: vec![fill; height * width],
        })
    }

    pub fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn same_shape(&self, other: &GridMap) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row >= 0 && cell.col >= 0 && (cell.row as usize) < self.height && (cell.col as usize) < self.width
    }

    pub fn index(&self, cell: Cell) -> Option<usize> {
        self.contains(cell)
            .then(|| cell.row as usize * self.width + cell.col as usize)
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new((index / self.width) as i32, (index % self.width) as i32)
    }

    pub fn get(&self, cell: Cell) -> Option<CellState> {
        self.index(cell).map(|i| self.cells[i])
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.get(cell) == Some(CellState::Free)
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.get(cell) == Some(CellState::Occupied)
    }

    pub fn is_unknown(&self, cell: Cell) -> bool {
        self.get(cell) == Some(CellState::Unknown)
    }

    pub fn set(&mut self, cell: Cell, state: CellState) -> Result<(), GridError> {
        let i = self
            .index(cell)
            .ok_or(GridError::OutOfBounds(cell, self.height, self.width))?;
        self.cells[i] = state;
        Ok(())
    }

    /// All cells in row-major (lexicographic) order.
    pub fn iter(&self) -> impl Iterator<Item = (Cell, CellState)> + '_ {
        self.cells.iter().enumerate().map(move |(i, &s)| (self.cell_at(i), s))
    }

    pub fn cells_with(&self, state: CellState) -> Vec<Cell> {
        self.iter().filter(|&(_, s)| s == state).map(|(c, _)| c).collect()
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&s| s == state).count()
    }

    pub fn known_count(&self) -> usize {
        self.cells.len() - self.count(CellState::Unknown)
    }

    /// In-bounds 4-neighbours of `cell`.
    pub fn neighbors(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        cell.neighbors4().into_iter().filter(|&n| self.contains(n))
    }

    /// Applies observations in place, returning how many cells changed.
    /// Every observation is validated before any cell is written.
    pub fn merge_in_place(&mut self, observations: &[(Cell, CellState)]) -> Result<usize, GridError> {
        for &(cell, state) in observations {
            if !self.contains(cell) {
                return Err(GridError::OutOfBounds(cell, self.height, self.width));
            }
            if state == CellState::Unknown {
                return Err(GridError::InvalidObservation(cell));
            }
        }
        let mut changed = 0;
        for &(cell, state) in observations {
            let i = cell.row as usize * self.width + cell.col as usize;
            if self.cells[i] != state {
                self.cells[i] = state;
                changed += 1;
            }
        }
        Ok(changed)
    }

    /// Breadth-first distances (in moves) over 4-connected Free cells from
    /// every source. Unreached cells hold `None`.
    pub fn bfs_distances(&self, sources: &[Cell]) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.cells.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if let Some(i) = self.index(s) {
                if self.cells[i] == CellState::Free && dist[i].is_none() {
                    dist[i] = Some(0);
                    queue.push_back(s);
                }
            }
        }
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c).unwrap()].unwrap();
            for n in c.neighbors4() {
                if let Some(j) = self.index(n) {
                    if self.cells[j] == CellState::Free && dist[j].is_none() {
                        dist[j] = Some(d + 1);
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }
}

/// Dense set of cells over a fixed map shape; iterates in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    height: usize,
    width: usize,
    bits: Vec<bool>,
    len: usize,
}

impl CellSet {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
            len: 0,
        }
    }

    pub fn for_map(map: &GridMap) -> Self {
        Self::new(map.height, map.width)
    }

    fn index(&self, cell: Cell) -> Option<usize> {
        (cell.row >= 0 && cell.col >= 0 && (cell.row as usize) < self.height && (cell.col as usize) < self.width)
            .then(|| cell.row as usize * self.width + cell.col as usize)
    }

    /// Returns false when the cell was already present or is out of shape.
    pub fn insert(&mut self, cell: Cell) -> bool {
        match self.index(cell) {
            Some(i) if !self.bits[i] => {
                self.bits[i] = true;
                self.len += 1;
                true
            }
            _ => false,
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.index(cell).is_some_and(|i| self.bits[i])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| Cell::new((i / w) as i32, (i % w) as i32))
    }

    pub fn to_vec(&self) -> Vec<Cell> {
        self.iter().collect()
    }
}

/// All-Unknown belief map.
pub fn new_belief(height: usize, width: usize) -> Result<GridMap, GridError> {
    GridMap::new(height, width, CellState::Unknown)
}

/// Copy of `belief` with the observations applied.
pub fn merge(belief: &GridMap, observations: &[(Cell, CellState)]) -> Result<GridMap, GridError> {
    let mut out = belief.clone();
    out.merge_in_place(observations)?;
    Ok(out)
}

/// 4-connected flood fill over the Free cells of `truth`.
pub fn reachable_free(truth: &GridMap, start: Cell) -> Result<CellSet, GridError> {
    if !truth.is_free(start) {
        return Err(GridError::InvalidArgument(format!(
            "flood-fill start {start} is not a free cell"
        )));
    }
    let mut set = CellSet::for_map(truth);
    let mut queue = VecDeque::from([start]);
    set.insert(start);
    while let Some(c) = queue.pop_front() {
        for n in truth.neighbors(c) {
            if truth.is_free(n) && set.insert(n) {
                queue.push_back(n);
            }
        }
    }
    Ok(set)
}

/// Cells that must be known for exploration to count as complete: reachable
/// Free cells plus Occupied cells 4-adjacent to one of them.
pub fn relevant_cells(truth: &GridMap, reachable: &CellSet) -> CellSet {
    let mut out = CellSet::for_map(truth);
    for c in reachable.iter() {
        out.insert(c);
        for n in truth.neighbors(c) {
            if truth.is_occupied(n) {
                out.insert(n);
            }
        }
    }
    out
}

fn check_shape(belief: &GridMap, truth: &GridMap) -> Result<(), GridError> {
    if belief.same_shape(truth) {
        Ok(())
    } else {
        Err(GridError::DimensionMismatch(
            belief.height,
            belief.width,
            truth.height,
            truth.width,
        ))
    }
}

pub fn exploration_complete(belief: &GridMap, truth: &GridMap, reachable: &CellSet) -> Result<bool, GridError> {
    check_shape(belief, truth)?;
    let relevant = relevant_cells(truth, reachable);
    let done = relevant.iter().all(|c| belief.get(c).is_some_and(CellState::is_known));
    Ok(done)
}

pub fn coverage_fraction(belief: &GridMap, truth: &GridMap, reachable: &CellSet) -> Result<f64, GridError> {
    check_shape(belief, truth)?;
    known_fraction(belief, &relevant_cells(truth, reachable))
}

/// Fraction of `relevant` cells that are known in `belief`.
pub fn known_fraction(belief: &GridMap, relevant: &CellSet) -> Result<f64, GridError> {
    if relevant.is_empty() {
        return Err(GridError::EmptyRelevantSet);
    }
    let known = relevant
        .iter()
        .filter(|&c| belief.get(c).is_some_and(CellState::is_known))
        .count();
    Ok(known as f64 / relevant.len() as f64)
}
