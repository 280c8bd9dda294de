//! Doorway candidates from symmetric wall-gap probing.
//!
//! From each sampled frontier cell, rays are cast in `Q` evenly spaced
//! directions and paired with their opposites. A pair whose rays both stop
//! on Occupied cells at similar distances, with a narrow free gap between
//! the two hits, marks the gap's midpoint as a doorway candidate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontier::{frontier_cells, info_gain, select_separated};
use crate::gridmap::{line_cells, Cell, CellState, GridMap};
use crate::rng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoorwayError {
    #[error("invalid doorway parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoorwayCandidate {
    pub midpoint: Cell,
    /// Passage direction in degrees within `[0, 180)`, measured
    /// counter-clockwise from east; perpendicular to the probing ray pair.
    pub axis_deg: f64,
    /// Free cells between the two wall hits.
    pub width: f64,
    pub info_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DoorwayParams {
    pub samples: usize,
    pub directions: usize,
    pub max_width: f64,
    pub ray_length: u32,
    pub gain_min: f64,
    pub separation: f64,
    /// Largest allowed difference between the two hit distances.
    pub symmetry_tolerance: f64,
}

impl Default for DoorwayParams {
    fn default() -> Self {
        Self {
            samples: 100,
            directions: 8,
            max_width: 5.0,
            ray_length: 8,
            gain_min: 0.15,
            separation: 5.0,
            symmetry_tolerance: 2.0,
        }
    }
}

impl DoorwayParams {
    pub fn validate(&self) -> Result<(), DoorwayError> {
        if self.directions < 4 || !self.directions.is_multiple_of(2) {
            return Err(DoorwayError::InvalidParams(format!(
                "direction count must be even and >= 4, got {}",
                self.directions
            )));
        }
        if !(2.0..).contains(&self.max_width) {
            return Err(DoorwayError::InvalidParams(format!(
                "max width must be >= 2, got {}",
                self.max_width
            )));
        }
        if self.samples < 1 || self.ray_length < 1 {
            return Err(DoorwayError::InvalidParams(
                "sample count and ray length must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Walks a ray from `from` at angle index `k` of `q`. Returns the first
/// Occupied cell within `length`, or `None` when the ray leaves the map,
/// enters Unknown space or runs out of length.
fn cast(belief: &GridMap, from: Cell, k: usize, q: usize, length: u32) -> Option<Cell> {
    let theta = std::f64::consts::TAU * k as f64 / q as f64;
    let len = length as f64;
    let end = from.offset(-(len * theta.sin()).round() as i32, (len * theta.cos()).round() as i32);
    let max2 = (length as i64) * (length as i64);
    for c in line_cells(from, end).into_iter().skip(1) {
        if c.dist2(from) > max2 {
            return None;
        }
        match belief.get(c)? {
            CellState::Occupied => return Some(c),
            CellState::Unknown => return None,
            CellState::Free => {}
        }
    }
    None
}

#[derive(Debug, Clone, Copy)]
struct GapProbe {
    pair: usize,
    hits: (Cell, Cell),
    width: f64,
}

fn probe(belief: &GridMap, from: Cell, params: &DoorwayParams) -> Option<GapProbe> {
    let q = params.directions;
    let mut best: Option<GapProbe> = None;
    for k in 0..q / 2 {
        let (Some(a), Some(b)) = (
            cast(belief, from, k, q, params.ray_length),
            cast(belief, from, k + q / 2, q, params.ray_length),
        ) else {
            continue;
        };
        if (from.dist(a) - from.dist(b)).abs() > params.symmetry_tolerance {
            continue;
        }
        let width = a.dist(b) - 1.0;
        if width > params.max_width {
            continue;
        }
        if best.is_none_or(|p| width < p.width) {
            best = Some(GapProbe {
                pair: k,
                hits: (a, b),
                width,
            });
        }
    }
    best
}

/// Nearest Free cell to `c` within `radius` (ties to the smaller cell).
fn snap_to_free(belief: &GridMap, c: Cell, radius: i32) -> Option<Cell> {
    if belief.is_free(c) {
        return Some(c);
    }
    let mut best: Option<(i64, Cell)> = None;
    for dr in -radius..=radius {
        for dc in -radius..=radius {
            let n = c.offset(dr, dc);
            if belief.is_free(n) {
                let key = (c.dist2(n), n);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
    }
    best.map(|(_, n)| n)
}

pub fn detect_doorways(
    belief: &GridMap,
    params: &DoorwayParams,
    range: u32,
    seed: u64,
) -> Result<Vec<DoorwayCandidate>, DoorwayError> {
    params.validate()?;
    let frontiers = frontier_cells(belief);
    let mut rng = SplitMix64::new(seed);
    let sampled = rng.sample(&frontiers, params.samples);
    let step_deg = 360.0 / params.directions as f64;

    let mut found: Vec<DoorwayCandidate> = Vec::new();
    for f in sampled {
        let Some(gap) = probe(belief, f, params) else {
            continue;
        };
        let (a, b) = gap.hits;
        let mid = Cell::new((a.row + b.row).div_euclid(2), (a.col + b.col).div_euclid(2));
        let Some(mid) = snap_to_free(belief, mid, params.max_width.ceil() as i32) else {
            continue;
        };
        let gain = info_gain(belief, mid, range);
        if gain < params.gain_min {
            continue;
        }
        found.push(DoorwayCandidate {
            midpoint: mid,
            axis_deg: (gap.pair as f64 * step_deg + 90.0) % 180.0,
            width: gap.width,
            info_gain: gain,
        });
    }
    found.sort_by(|x, y| {
        y.info_gain
            .total_cmp(&x.info_gain)
            .then(x.midpoint.cmp(&y.midpoint))
            .then(x.width.total_cmp(&y.width))
    });
    Ok(select_separated(found, usize::MAX, params.separation, |d| d.midpoint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::new_belief;

    /// Known Free below a horizontal wall at row 10, Unknown above it, with
    /// a gap of `gap` cells starting at column 11.
    fn wall_with_gap(gap: i32) -> GridMap {
        let mut b = new_belief(21, 30).unwrap();
        for r in 10..21 {
            for c in 0..30 {
                b.set(Cell::new(r, c), CellState::Free).unwrap();
            }
        }
        for c in 0..30 {
            if !(11..11 + gap).contains(&c) {
                b.set(Cell::new(10, c), CellState::Occupied).unwrap();
            }
        }
        b
    }

    fn all_samples() -> DoorwayParams {
        DoorwayParams {
            samples: 10_000,
            ..Default::default()
        }
    }

    #[test]
    fn finds_gap_midpoint() {
        let b = wall_with_gap(3);
        let found = detect_doorways(&b, &all_samples(), 5, 1).unwrap();
        assert_eq!(found.len(), 1);
        let d = found[0];
        assert_eq!(d.midpoint, Cell::new(10, 12));
        assert_eq!(d.width, 3.0);
        assert_eq!(d.axis_deg, 90.0);
        assert!(d.info_gain >= 0.15);
    }

    #[test]
    fn open_field_and_wide_gap_yield_nothing() {
        let mut b = new_belief(20, 20).unwrap();
        for r in 10..20 {
            for c in 0..20 {
                b.set(Cell::new(r, c), CellState::Free).unwrap();
            }
        }
        assert!(detect_doorways(&b, &all_samples(), 5, 1).unwrap().is_empty());
        assert!(detect_doorways(&wall_with_gap(7), &all_samples(), 5, 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn close_gaps_keep_higher_gain() {
        // Two 2-wide gaps four columns apart. A known wall cell above the
        // second gap lowers its information gain.
        let mut b = wall_with_gap(2);
        b.set(Cell::new(10, 15), CellState::Free).unwrap();
        b.set(Cell::new(10, 16), CellState::Free).unwrap();
        b.set(Cell::new(8, 16), CellState::Occupied).unwrap();

        let p = DoorwayParams {
            separation: 1.0,
            ..all_samples()
        };
        let both = detect_doorways(&b, &p, 5, 1).unwrap();
        assert_eq!(both.len(), 2);
        assert_eq!(both[0].midpoint, Cell::new(10, 11));
        assert_eq!(both[1].midpoint, Cell::new(10, 15));
        assert!(both[0].info_gain > both[1].info_gain);

        let found = detect_doorways(&b, &all_samples(), 5, 1).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].midpoint, Cell::new(10, 11));
    }

    #[test]
    fn gain_floor_filters() {
        let b = wall_with_gap(3);
        let p = DoorwayParams {
            gain_min: 0.99,
            ..all_samples()
        };
        assert!(detect_doorways(&b, &p, 5, 1).unwrap().is_empty());
    }

    #[test]
    fn validation() {
        let b = wall_with_gap(3);
        let ok = DoorwayParams {
            directions: 6,
            ..Default::default()
        };
        assert!(detect_doorways(&b, &ok, 5, 1).is_ok());
        for p in [
            DoorwayParams {
                directions: 7,
                ..Default::default()
            },
            DoorwayParams {
                directions: 2,
                ..Default::default()
            },
            DoorwayParams {
                max_width: 1.0,
                ..Default::default()
            },
            DoorwayParams {
                samples: 0,
                ..Default::default()
            },
        ] {
            assert!(detect_doorways(&b, &p, 5, 1).is_err());
        }
    }
}
