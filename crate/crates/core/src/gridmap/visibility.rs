use super::{Cell, CellState, GridError, GridMap};

/// Integer line from `from` to `to`, both ends included.
///
/// Steps one cell along the major axis at a time and moves the minor axis
/// when the exact line has drifted half a cell or more (ties move). Equal
/// deltas take the row as the major axis.
pub fn line_cells(from: Cell, to: Cell) -> Vec<Cell> {
    let dr = to.row - from.row;
    let dc = to.col - from.col;
    let (sr, sc) = (dr.signum(), dc.signum());
    let (ar, ac) = (dr.abs(), dc.abs());
    let mut out = Vec::with_capacity(ar.max(ac) as usize + 1);
    out.push(from);
    if ar >= ac {
        let (n, m) = (ar, ac);
        let mut acc = n;
        let mut col = from.col;
        for i in 1..=n {
            acc += 2 * m;
            if acc >= 2 * n {
                col += sc;
                acc -= 2 * n;
            }
            out.push(Cell::new(from.row + sr * i, col));
        }
    } else {
        let (n, m) = (ac, ar);
        let mut acc = n;
        let mut row = from.row;
        for i in 1..=n {
            acc += 2 * m;
            if acc >= 2 * n {
                row += sr;
                acc -= 2 * n;
            }
            out.push(Cell::new(row, from.col + sc * i));
        }
    }
    out
}

/// Offsets `(dr, dc)` with `dr² + dc² <= range²`, row-major.
pub fn disk_offsets(range: u32) -> Vec<(i32, i32)> {
    let r = range as i32;
    let r2 = (range as i64) * (range as i64);
    let mut out = Vec::new();
    for dr in -r..=r {
        for dc in -r..=r {
            if (dr as i64 * dr as i64 + dc as i64 * dc as i64) <= r2 {
                out.push((dr, dc));
            }
        }
    }
    out
}

/// In-bounds cells of the Euclidean disk around `pose` whose line of sight
/// is not blocked by an Occupied cell strictly between the two endpoints.
/// Unknown cells do not block. Returned in row-major order.
pub fn visible_cells(map: &GridMap, pose: Cell, range: u32) -> Vec<Cell> {
    let mut out = Vec::new();
    for (dr, dc) in disk_offsets(range) {
        let target = pose.offset(dr, dc);
        if !map.contains(target) {
            continue;
        }
        let line = line_cells(pose, target);
        let blocked = line.len() > 2 && line[1..line.len() - 1].iter().any(|&c| map.is_occupied(c));
        if !blocked {
            out.push(target);
        }
    }
    out
}

/// Simulated 2D LiDAR: every cell within `range` of `pose` that is in line
/// of sight, with its ground-truth state. Occupied cells that stop a ray are
/// themselves reported.
pub fn lidar_scan(truth: &GridMap, pose: Cell, range: u32) -> Result<Vec<(Cell, CellState)>, GridError> {
    if !truth.is_free(pose) {
        return Err(GridError::InvalidPose(pose));
    }
    if range < 1 {
        return Err(GridError::InvalidArgument("scan range must be at least 1".into()));
    }
    Ok(visible_cells(truth, pose, range)
        .into_iter()
        .filter_map(|c| match truth.get(c) {
            Some(s) if s.is_known() => Some((c, s)),
            _ => None,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_hit_both_ends() {
        let a = Cell::new(3, 3);
        for (dr, dc) in disk_offsets(6) {
            let b = a.offset(dr, dc);
            let l = line_cells(a, b);
            assert_eq!(l[0], a);
            assert_eq!(*l.last().unwrap(), b);
            assert_eq!(l.len() as i32, dr.abs().max(dc.abs()) + 1);
            for w in l.windows(2) {
                assert!((w[0].row - w[1].row).abs() <= 1 && (w[0].col - w[1].col).abs() <= 1);
            }
        }
    }

    #[test]
    fn open_field_sees_whole_disk() {
        let m = GridMap::new(11, 11, CellState::Free).unwrap();
        let scan = lidar_scan(&m, Cell::new(5, 5), 5).unwrap();
        assert_eq!(scan.len(), disk_offsets(5).len());
        assert!(scan
            .iter()
            .all(|&(c, s)| s == CellState::Free && c.dist2(Cell::new(5, 5)) <= 25));
    }

    #[test]
    fn wall_hides_cells_behind_it() {
        let mut m = GridMap::new(11, 11, CellState::Free).unwrap();
        for c in 0..11 {
            m.set(Cell::new(4, c), CellState::Occupied).unwrap();
        }
        let scan = lidar_scan(&m, Cell::new(5, 5), 5).unwrap();
        assert!(scan.iter().all(|(c, _)| c.row >= 4));
        assert!(scan.contains(&(Cell::new(4, 5), CellState::Occupied)));
    }

    #[test]
    fn scan_rejects_bad_pose() {
        let mut m = GridMap::new(5, 5, CellState::Free).unwrap();
        m.set(Cell::new(2, 2), CellState::Occupied).unwrap();
        assert_eq!(
            lidar_scan(&m, Cell::new(2, 2), 3),
            Err(GridError::InvalidPose(Cell::new(2, 2)))
        );
        assert!(lidar_scan(&m, Cell::new(9, 9), 3).is_err());
        assert!(lidar_scan(&m, Cell::new(0, 0), 0).is_err());
    }
}
