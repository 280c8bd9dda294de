//! ASCII map files and PGM export.
//!
//! Map file layout: a header line `H W r`, then `H` rows of `W` characters
//! where `#` is Occupied, `.` is Free and `?` is Unknown.

use std::fmt::Write as _;

use super::{CellState, GridError, GridMap};

const PGM_UNKNOWN: u8 = 255;
const PGM_FREE: u8 = 128;
const PGM_OCCUPIED: u8 = 0;

impl CellState {
    pub fn to_char(self) -> char {
        match self {
            CellState::Unknown => '?',
            CellState::Free => '.',
            CellState::Occupied => '#',
        }
    }

    pub fn from_char(ch: char) -> Option<Self> {
        match ch {
            '?' => Some(CellState::Unknown),
            '.' => Some(CellState::Free),
            '#' => Some(CellState::Occupied),
            _ => None,
        }
    }

    /// Grayscale level: white unknown, gray free, black occupied.
    pub fn gray(self) -> u8 {
        match self {
            CellState::Unknown => PGM_UNKNOWN,
            CellState::Free => PGM_FREE,
            CellState::Occupied => PGM_OCCUPIED,
        }
    }
}

impl GridMap {
    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity(self.len() + self.height + 32);
        let _ = writeln!(out, "{} {} {}", self.height, self.width, self.resolution);
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|s| s.to_char()));
            out.push('\n');
        }
        out
    }

    pub fn from_ascii(text: &str) -> Result<GridMap, GridError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(GridError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let parse_err = |line: usize, message: String| GridError::Parse {
            line: line + 1,
            message,
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(hline, format!("expected `H W r`, got {header:?}")));
        }
        let height: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(hline, format!("bad height {:?}", fields[0])))?;
        let width: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(hline, format!("bad width {:?}", fields[1])))?;
        let resolution: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(hline, format!("bad resolution {:?}", fields[2])))?;
        let mut map = GridMap::new(height, width, CellState::Unknown)?.with_resolution(resolution);

        let mut rows = 0;
        for (lineno, line) in lines {
            let line = line.trim_end();
            if rows == height {
                return Err(parse_err(lineno, "more rows than the header declares".into()));
            }
            if line.chars().count() != width {
                return Err(parse_err(
                    lineno,
                    format!("row has {} cells, expected {width}", line.chars().count()),
                ));
            }
            for (col, ch) in line.chars().enumerate() {
                let state = CellState::from_char(ch)
                    .ok_or_else(|| parse_err(lineno, format!("unexpected character {ch:?}")))?;
                map.cells[rows * width + col] = state;
            }
            rows += 1;
        }
        if rows != height {
            return Err(GridError::Parse {
                line: text.lines().count(),
                message: format!("found {rows} rows, header declares {height}"),
            });
        }
        Ok(map)
    }

    /// Binary 8-bit PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.cells.iter().map(|s| s.gray()));
        out
    }
}
