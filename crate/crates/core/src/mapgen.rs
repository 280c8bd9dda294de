//! Seeded ground-truth map generation.
//!
//! Structured maps are a full-width horizontal corridor with rooms tiled
//! along its top and bottom sides. Unstructured maps are carved caves made
//! of drunken-walk tunnels of varying width. Both are pure functions of
//! their spec and use [`SplitMix64`] for every random draw.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{reachable_free, Cell, CellState, GridError, GridMap};
use crate::rng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapGenError {
    #[error("invalid map spec: {0}")]
    InvalidSpec(String),
    #[error("map generation failed: {0}")]
    Generation(String),
    #[error("no reachable cell at shortest-path distance {lo}..={hi} from the deploy zone")]
    NoCandidate { lo: u32, hi: u32 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub fn side(self) -> usize {
        match self {
            SizeClass::Small => 60,
            SizeClass::Medium => 120,
            SizeClass::Large => 150,
        }
    }

    pub fn corridor_width(self) -> usize {
        match self {
            SizeClass::Small => 4,
            SizeClass::Medium | SizeClass::Large => 5,
        }
    }

    /// Episode timestep limit for this size.
    pub fn timestep_limit(self) -> usize {
        match self {
            SizeClass::Small => 1000,
            SizeClass::Medium => 1500,
            SizeClass::Large => 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredMapSpec {
    pub side: usize,
    pub corridor_width: usize,
    pub seed: u64,
    pub door_probability: f64,
    pub room_min: usize,
    pub room_max: usize,
    pub door_width: usize,
}

impl StructuredMapSpec {
    pub fn new(class: SizeClass, seed: u64) -> Self {
        Self {
            side: class.side(),
            corridor_width: class.corridor_width(),
            seed,
            door_probability: 0.5,
            room_min: 8,
            room_max: 20,
            door_width: 2,
        }
    }

    fn validate(&self) -> Result<(), MapGenError> {
        if !(0.0..=1.0).contains(&self.door_probability) {
            return Err(MapGenError::InvalidSpec(format!(
                "door probability {} outside [0, 1]",
                self.door_probability
            )));
        }
        if self.room_min == 0 || self.room_min > self.room_max {
            return Err(MapGenError::InvalidSpec(format!(
                "room bounds {}..={} are empty",
                self.room_min, self.room_max
            )));
        }
        if self.door_width == 0 || self.door_width > self.room_min {
            return Err(MapGenError::InvalidSpec(format!(
                "door width {} must be in 1..={}",
                self.door_width, self.room_min
            )));
        }
        if self.corridor_width == 0 {
            return Err(MapGenError::InvalidSpec("corridor width must be positive".into()));
        }
        let (top, bottom) = self.band_heights();
        if top.min(bottom) < self.room_min as i64 || (self.side as i64 - 2) < self.room_min as i64 {
            return Err(MapGenError::Generation(format!(
                "a {}x{} map with a {}-cell corridor cannot fit a {}-cell room",
                self.side, self.side, self.corridor_width, self.room_min
            )));
        }
        Ok(())
    }

    fn corridor_top(&self) -> i64 {
        (self.side as i64 - self.corridor_width as i64) / 2
    }

    /// Interior rows available for rooms above and below the corridor.
    fn band_heights(&self) -> (i64, i64) {
        let c0 = self.corridor_top();
        let top = c0 - 2;
        let bottom = self.side as i64 - c0 - self.corridor_width as i64 - 2;
        (top, bottom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    Top,
    Bottom,
}

/// Room interior rectangle (walls excluded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Room {
    pub band: Band,
    pub row0: i32,
    pub col0: i32,
    pub height: i32,
    pub width: i32,
}

impl Room {
    pub fn contains(&self, c: Cell) -> bool {
        c.row >= self.row0 && c.row < self.row0 + self.height && c.col >= self.col0 && c.col < self.col0 + self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedMap {
    pub map: GridMap,
    pub deploy_zone: Vec<Cell>,
    pub rooms: Vec<Room>,
    /// Index pairs of rooms joined by an inter-room doorway.
    pub room_links: Vec<(usize, usize)>,
}

fn carve_rect(map: &mut GridMap, row0: i32, col0: i32, h: i32, w: i32) {
    for r in row0..row0 + h {
        for c in col0..col0 + w {
            let _ = map.set(Cell::new(r, c), CellState::Free);
        }
    }
}

/// Rooms are tiled left to right with one-cell walls between them; widths
/// are drawn so that every room, including the last, stays within bounds.
fn tile_widths(rng: &mut SplitMix64, interior: i64, min: i64, max: i64) -> Vec<i64> {
    let mut widths = Vec::new();
    let mut remaining = interior;
    while remaining >= min {
        if remaining <= max {
            widths.push(remaining);
            break;
        }
        let hi = max.min(remaining - 1 - min);
        let w = rng.range_inclusive(min, hi);
        widths.push(w);
        remaining -= w + 1;
    }
    widths
}

pub fn gen_structured(spec: &StructuredMapSpec) -> Result<GeneratedMap, MapGenError> {
    spec.validate()?;
    let side = spec.side;
    let mut rng = SplitMix64::new(spec.seed);
    let mut map = GridMap::new(side, side, CellState::Occupied)?;
    let cw = spec.corridor_width as i32;
    let c0 = spec.corridor_top() as i32;
    carve_rect(&mut map, c0, 1, cw, side as i32 - 2);

    let (top_h, bottom_h) = spec.band_heights();
    let (rmin, rmax) = (spec.room_min as i64, spec.room_max as i64);
    let door = spec.door_width as i32;
    let mut rooms = Vec::new();
    let mut room_links = Vec::new();

    for (band, avail) in [(Band::Top, top_h), (Band::Bottom, bottom_h)] {
        let widths = tile_widths(&mut rng, side as i64 - 2, rmin, rmax);
        let first = rooms.len();
        let mut col = 1i32;
        for w in widths {
            let h = rng.range_inclusive(rmin, rmax.min(avail)) as i32;
            let row0 = match band {
                Band::Top => c0 - 1 - h,
                Band::Bottom => c0 + cw + 1,
            };
            let room = Room {
                band,
                row0,
                col0: col,
                height: h,
                width: w as i32,
            };
            carve_rect(&mut map, row0, col, h, w as i32);
            // Doorway onto the corridor through the separating wall row.
            let wall_row = match band {
                Band::Top => c0 - 1,
                Band::Bottom => c0 + cw,
            };
            let dc = rng.range_inclusive(col as i64, (col + w as i32 - door) as i64) as i32;
            carve_rect(&mut map, wall_row, dc, 1, door);
            rooms.push(room);
            col += w as i32 + 1;
        }
        for i in first + 1..rooms.len() {
            let (a, b) = (rooms[i - 1], rooms[i]);
            if !rng.chance(spec.door_probability) {
                continue;
            }
            let overlap = a.height.min(b.height);
            let wall_col = a.col0 + a.width;
            let (lo, hi) = match band {
                Band::Top => (c0 - 1 - overlap, c0 - 1 - door),
                Band::Bottom => (c0 + cw + 1, c0 + cw + 1 + overlap - door),
            };
            let dr = rng.range_inclusive(lo as i64, hi as i64) as i32;
            carve_rect(&mut map, dr, wall_col, door, 1);
            room_links.push((i - 1, i));
        }
    }

    let deploy_zone: Vec<Cell> = (c0..c0 + cw)
        .flat_map(|r| (1..=cw).map(move |c| Cell::new(r, c)))
        .collect();
    Ok(GeneratedMap {
        map,
        deploy_zone,
        rooms,
        room_links,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnstructuredMapSpec {
    pub side: usize,
    pub seed: u64,
    pub width_min: u32,
    pub width_max: u32,
    pub branches_min: u32,
    pub branches_max: u32,
    /// Target Free fraction is drawn uniformly from this range.
    pub free_target: (f64, f64),
    pub max_retries: u32,
}

impl UnstructuredMapSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            side: 150,
            seed,
            width_min: 2,
            width_max: 6,
            branches_min: 3,
            branches_max: 6,
            free_target: (0.35, 0.5),
            max_retries: 5,
        }
    }

    fn validate(&self) -> Result<(), MapGenError> {
        if self.side < 24 {
            return Err(MapGenError::InvalidSpec(format!("cave side {} below 24", self.side)));
        }
        if self.width_min < 1 || self.width_min > self.width_max || self.width_max > 8 {
            return Err(MapGenError::InvalidSpec(
                "tunnel width range must be within 1..=8".into(),
            ));
        }
        if self.branches_min > self.branches_max {
            return Err(MapGenError::InvalidSpec("empty branch-count range".into()));
        }
        let (lo, hi) = self.free_target;
        if !(0.0 < lo && lo <= hi && hi < 0.8) {
            return Err(MapGenError::InvalidSpec(format!("free target {lo}..{hi} out of range")));
        }
        Ok(())
    }
}

/// Compass headings, clockwise from east.
const HEADINGS: [(i32, i32); 8] = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];

const CAVE_MARGIN: i32 = 2;
const MAX_WALK_STEPS: usize = 20_000;

struct Carver {
    map: GridMap,
    free: usize,
    free_cells: Vec<Cell>,
}

impl Carver {
    fn carve_disk(&mut self, center: Cell, width: u32) {
        let w2 = (width * width) as i32;
        let r = width as i32 / 2 + 1;
        let side = self.map.height() as i32;
        for dr in -r..=r {
            for dc in -r..=r {
                if 4 * (dr * dr + dc * dc) > w2 {
                    continue;
                }
                let c = center.offset(dr, dc);
                if c.row < CAVE_MARGIN
                    || c.col < CAVE_MARGIN
                    || c.row >= side - CAVE_MARGIN
                    || c.col >= side - CAVE_MARGIN
                {
                    continue;
                }
                if self.map.is_occupied(c) {
                    let _ = self.map.set(c, CellState::Free);
                    self.free += 1;
                    self.free_cells.push(c);
                }
            }
        }
    }

    /// Drunken walk from `start` until the free-cell count reaches `goal`.
    fn walk(&mut self, rng: &mut SplitMix64, start: Cell, heading: usize, goal: usize, spec: &UnstructuredMapSpec) {
        let side = self.map.height() as i32;
        let lo = CAVE_MARGIN + 1;
        let hi = side - CAVE_MARGIN - 2;
        let mut pos = start;
        let mut heading = heading;
        let mut width = spec.width_min;
        for step in 0..MAX_WALK_STEPS {
            if self.free >= goal {
                break;
            }
            if step % 8 == 0 {
                width = rng.range_inclusive(spec.width_min as i64, spec.width_max as i64) as u32;
            }
            self.carve_disk(pos, width);
            if rng.chance(0.25) {
                heading = if rng.chance(0.5) {
                    (heading + 1) % 8
                } else {
                    (heading + 7) % 8
                };
            }
            let (dr, dc) = HEADINGS[heading];
            let next = pos.offset(dr, dc);
            if next.row < lo || next.row > hi || next.col < lo || next.col > hi {
                heading = (heading + 3 + rng.below(3) as usize) % 8;
                continue;
            }
            pos = next;
        }
    }
}

pub fn gen_unstructured(spec: &UnstructuredMapSpec) -> Result<GeneratedMap, MapGenError> {
    spec.validate()?;
    let side = spec.side;
    let total = side * side;
    for attempt in 0..=spec.max_retries {
        let mut rng = SplitMix64::derive(spec.seed, attempt as u64);
        let mut carver = Carver {
            map: GridMap::new(side, side, CellState::Occupied)?,
            free: 0,
            free_cells: Vec::new(),
        };
        let center = Cell::new(side as i32 / 2, CAVE_MARGIN + 3);
        let deploy_zone: Vec<Cell> = (-2..=2)
            .flat_map(|dr| (-2..=2).map(move |dc| center.offset(dr, dc)))
            .collect();
        for &c in &deploy_zone {
            if carver.map.is_occupied(c) {
                let _ = carver.map.set(c, CellState::Free);
                carver.free += 1;
                carver.free_cells.push(c);
            }
        }

        let (flo, fhi) = spec.free_target;
        let target = ((flo + (fhi - flo) * rng.unit()) * total as f64) as usize;
        let branches = rng.range_inclusive(spec.branches_min as i64, spec.branches_max as i64) as usize;
        // The main tunnel takes 40% of the budget, branches share the rest.
        let main_goal = target * 2 / 5;
        carver.walk(&mut rng, center, 0, main_goal, spec);
        for b in 0..branches {
            let goal = main_goal + (target - main_goal) * (b + 1) / branches.max(1);
            let pick = rng.below(carver.free_cells.len() as u64) as usize;
            let start = carver.free_cells[pick];
            let heading = rng.below(8) as usize;
            carver.walk(&mut rng, start, heading, goal, spec);
        }

        // Connectivity repair: everything outside the deploy component is wall.
        let mut map = carver.map;
        let component = reachable_free(&map, center)?;
        for c in map.cells_with(CellState::Free) {
            if !component.contains(c) {
                map.set(c, CellState::Occupied)?;
            }
        }
        let fraction = component.len() as f64 / total as f64;
        if (0.3..=0.7).contains(&fraction) {
            return Ok(GeneratedMap {
                map,
                deploy_zone,
                rooms: Vec::new(),
                room_links: Vec::new(),
            });
        }
    }
    Err(MapGenError::Generation(format!(
        "cave generation missed the free-space target after {} retries",
        spec.max_retries
    )))
}

/// Deploy-zone cell closest to the zone's centroid (ties to the smaller cell).
pub fn deploy_origin(deploy_zone: &[Cell]) -> Option<Cell> {
    let n = deploy_zone.len() as i64;
    if n == 0 {
        return None;
    }
    let sr: i64 = deploy_zone.iter().map(|c| c.row as i64).sum();
    let sc: i64 = deploy_zone.iter().map(|c| c.col as i64).sum();
    deploy_zone.iter().copied().min_by_key(|c| {
        let dr = c.row as i64 * n - sr;
        let dc = c.col as i64 * n - sc;
        (dr * dr + dc * dc, *c)
    })
}

/// Shortest-path distances over Free cells from the deploy origin.
pub fn deploy_distances(truth: &GridMap, deploy_zone: &[Cell]) -> Vec<Option<u32>> {
    match deploy_origin(deploy_zone) {
        Some(o) => truth.bfs_distances(&[o]),
        None => vec![None; truth.len()],
    }
}

/// Seeded target cell whose shortest-path distance from the deploy origin
/// lies in `lo..=hi`.
pub fn sample_target(truth: &GridMap, deploy_zone: &[Cell], seed: u64, band: (u32, u32)) -> Result<Cell, MapGenError> {
    let (lo, hi) = band;
    let origin = deploy_origin(deploy_zone).ok_or_else(|| MapGenError::InvalidSpec("empty deploy zone".into()))?;
    if !truth.is_free(origin) {
        return Err(GridError::InvalidArgument(format!("deploy origin {origin} is not free")).into());
    }
    let dist = truth.bfs_distances(&[origin]);
    let candidates: Vec<Cell> = dist
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_some_and(|d| d >= lo && d <= hi))
        .map(|(i, _)| truth.cell_at(i))
        .collect();
    if candidates.is_empty() {
        return Err(MapGenError::NoCandidate { lo, hi });
    }
    let mut rng = SplitMix64::new(seed);
    Ok(candidates[rng.below(candidates.len() as u64) as usize])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_small_is_connected() {
        let g = gen_structured(&StructuredMapSpec::new(SizeClass::Small, 1)).unwrap();
        assert_eq!((g.map.height(), g.map.width()), (60, 60));
        let comp = reachable_free(&g.map, g.deploy_zone[0]).unwrap();
        assert_eq!(comp.len(), g.map.count(CellState::Free));
        assert!(g.deploy_zone.iter().all(|&c| g.map.is_free(c)));
        assert_eq!(g.deploy_zone.len(), 16);
    }

    #[test]
    fn structured_is_deterministic() {
        let spec = StructuredMapSpec::new(SizeClass::Medium, 99);
        assert_eq!(gen_structured(&spec).unwrap(), gen_structured(&spec).unwrap());
        let other = StructuredMapSpec::new(SizeClass::Medium, 100);
        assert_ne!(gen_structured(&spec).unwrap().map, gen_structured(&other).unwrap().map);
    }

    #[test]
    fn rooms_have_legal_sizes_and_fill_bands() {
        for class in [SizeClass::Small, SizeClass::Medium, SizeClass::Large] {
            for seed in 0..5 {
                let g = gen_structured(&StructuredMapSpec::new(class, seed)).unwrap();
                for r in &g.rooms {
                    assert!((8..=20).contains(&r.width), "{r:?}");
                    assert!((8..=20).contains(&r.height), "{r:?}");
                }
                for band in [Band::Top, Band::Bottom] {
                    let n = g.rooms.iter().filter(|r| r.band == band).count();
                    assert!(n >= 2);
                    let last = g.rooms.iter().rfind(|r| r.band == band).unwrap();
                    assert_eq!(last.col0 + last.width, class.side() as i32 - 1);
                }
            }
        }
    }

    #[test]
    fn zero_door_probability_has_no_links() {
        let mut spec = StructuredMapSpec::new(SizeClass::Small, 5);
        spec.door_probability = 0.0;
        let g = gen_structured(&spec).unwrap();
        assert!(g.room_links.is_empty());
        // No Free cell in any inter-room wall column.
        for pair in g.rooms.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.band != b.band {
                continue;
            }
            let wall = a.col0 + a.width;
            for r in a.row0.min(b.row0)..(a.row0 + a.height).max(b.row0 + b.height) {
                assert!(g.map.is_occupied(Cell::new(r, wall)));
            }
        }
        spec.door_probability = 1.0;
        let g = gen_structured(&spec).unwrap();
        assert_eq!(g.room_links.len(), g.rooms.len() - 2);
    }

    #[test]
    fn structured_rejects_tiny_maps() {
        let mut spec = StructuredMapSpec::new(SizeClass::Small, 1);
        spec.side = 16;
        assert!(matches!(gen_structured(&spec), Err(MapGenError::Generation(_))));
        spec.side = 60;
        spec.door_probability = 1.5;
        assert!(matches!(gen_structured(&spec), Err(MapGenError::InvalidSpec(_))));
    }

    #[test]
    fn caves_are_connected_and_sized() {
        for seed in [7u64, 8, 9] {
            let g = gen_unstructured(&UnstructuredMapSpec::new(seed)).unwrap();
            let free = g.map.count(CellState::Free);
            let frac = free as f64 / g.map.len() as f64;
            assert!((0.3..=0.7).contains(&frac), "seed {seed}: {frac}");
            let comp = reachable_free(&g.map, g.deploy_zone[0]).unwrap();
            assert_eq!(comp.len(), free);
        }
        let spec = UnstructuredMapSpec::new(7);
        assert_eq!(gen_unstructured(&spec).unwrap(), gen_unstructured(&spec).unwrap());
    }

    #[test]
    fn target_bands() {
        let g = gen_structured(&StructuredMapSpec::new(SizeClass::Small, 3)).unwrap();
        let origin = deploy_origin(&g.deploy_zone).unwrap();
        assert_eq!(sample_target(&g.map, &g.deploy_zone, 1, (0, 0)).unwrap(), origin);

        let dist = deploy_distances(&g.map, &g.deploy_zone);
        let max = dist.iter().flatten().copied().max().unwrap();
        let far = sample_target(&g.map, &g.deploy_zone, 1, (max, max)).unwrap();
        assert_eq!(dist[g.map.index(far).unwrap()], Some(max));

        for seed in 0..20 {
            let t = sample_target(&g.map, &g.deploy_zone, seed, (10, 40)).unwrap();
            assert!(g.map.is_free(t));
            let d = dist[g.map.index(t).unwrap()].unwrap();
            assert!((10..=40).contains(&d));
        }
        assert_eq!(
            sample_target(&g.map, &g.deploy_zone, 1, (max + 1, max + 5)),
            Err(MapGenError::NoCandidate {
                lo: max + 1,
                hi: max + 5
            })
        );
    }
}
