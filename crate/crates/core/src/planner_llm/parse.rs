use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use super::PlanResponse;
use crate::gridmap::{Cell, GridMap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no `ROBOT <id>: ...` line found in planner response")]
    NoRobotLines,
}

fn robot_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:\d+[.)]\s*)?(?i:robot)\s*#?\s*(\d+)\s*\**\s*(?::|->|=>|=)\s*(.*)$").unwrap())
}

fn summary_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:\d+[.)]\s*)?(?i:summary)\s*\**\s*:\s*\**\s*(.*)$").unwrap())
}

fn coord_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\(\[]\s*(-?\d+)\s*,\s*(-?\d+)\s*[\)\]]").unwrap())
}

/// Strips list bullets, quote markers and emphasis that models like to wrap
/// lines in.
fn strip_decoration(line: &str) -> &str {
    line.trim()
        .trim_start_matches(|c: char| matches!(c, '-' | '*' | '#' | '>' | '`' | '|' | '+') || c.is_whitespace())
}

/// Extracts per-robot waypoint lists and the plan summary from free-form
/// model output. Waypoints outside the map or on known Occupied cells are
/// dropped with a warning; Unknown cells are allowed.
pub fn parse_response(raw: &str, belief: &GridMap, robot_count: usize) -> Result<PlanResponse, ParseError> {
    let mut queues: Vec<Option<Vec<Cell>>> = vec![None; robot_count];
    let mut warnings = Vec::new();
    let mut summary: Option<String> = None;
    let mut in_summary = false;
    let mut robot_lines = 0;

    for line in raw.lines() {
        let body = strip_decoration(line);
        if let Some(caps) = robot_re().captures(body) {
            in_summary = false;
            robot_lines += 1;
            let id: usize = match caps[1].parse() {
                Ok(id) if id < robot_count => id,
                _ => {
                    warnings.push(format!("ignored line for unknown robot {}", &caps[1]));
                    continue;
                }
            };
            if queues[id].is_some() {
                warnings.push(format!("ignored repeated line for robot {id}"));
                continue;
            }
            let mut q = Vec::new();
            for c in coord_re().captures_iter(&caps[2]) {
                let (Ok(r), Ok(col)) = (c[1].parse::<i32>(), c[2].parse::<i32>()) else {
                    warnings.push(format!("robot {id}: unreadable coordinate {}", &c[0]));
                    continue;
                };
                let cell = Cell::new(r, col);
                if !belief.contains(cell) {
                    warnings.push(format!("robot {id}: waypoint {cell} is outside the map"));
                } else if belief.is_occupied(cell) {
                    warnings.push(format!("robot {id}: waypoint {cell} is an occupied cell"));
                } else {
                    q.push(cell);
                }
            }
            queues[id] = Some(q);
            continue;
        }
        if let Some(caps) = summary_re().captures(body) {
            if summary.is_none() {
                summary = Some(caps[1].trim().trim_end_matches("**").trim().to_string());
                in_summary = true;
            }
            continue;
        }
        if in_summary {
            let t = line.trim();
            if t.is_empty() || t.starts_with("```") {
                in_summary = false;
            } else if let Some(s) = summary.as_mut() {
                if !s.is_empty() {
                    s.push(' ');
                }
                s.push_str(t);
            }
        }
    }

    if robot_lines == 0 {
        return Err(ParseError::NoRobotLines);
    }
    for (id, q) in queues.iter().enumerate() {
        if q.is_none() {
            warnings.push(format!("no line for robot {id}; queue left empty"));
        }
    }
    if summary.is_none() {
        warnings.push("no SUMMARY line".to_string());
    }
    Ok(PlanResponse {
        queues: queues.into_iter().map(Option::unwrap_or_default).collect(),
        summary: summary.unwrap_or_default(),
        warnings,
    })
}

/// Canonical text form; [`parse_response`] inverts it.
pub fn format_response(plan: &PlanResponse) -> String {
    let mut out = String::new();
    for (id, q) in plan.queues.iter().enumerate() {
        let _ = write!(out, "ROBOT {id}:");
        for c in q {
            let _ = write!(out, " {c}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "SUMMARY: {}", plan.summary);
    out
}
