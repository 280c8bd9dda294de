use std::fmt::Write as _;

use base64::Engine as _;

use super::{PlannerContext, TaskKind};

/// Text prompt plus the base64 PNG sent alongside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub text: String,
    pub image_base64: String,
}

impl Prompt {
    pub fn image_data_url(&self) -> String {
        format!("data:image/png;base64,{}", self.image_base64)
    }

    /// Plain-text form used for transcripts and snapshots.
    pub fn transcript(&self) -> String {
        format!("{}\n[attachment image/png;base64]\n{}\n", self.text, self.image_base64)
    }
}

pub const NO_EXEC_EVENTS: &str = "all waypoints reached";

pub fn build_prompt(ctx: &PlannerContext) -> Prompt {
    let mut t = String::new();
    let m = ctx.robots.len();
    match &ctx.task {
        TaskKind::Explore => {
            let _ = writeln!(
                t,
                "You are the central planner for a team of {m} robots exploring an unknown 2D environment."
            );
            let _ = writeln!(
                t,
                "TASK: explore the environment until every reachable area has been observed, as quickly as possible."
            );
        }
        TaskKind::Search => {
            let _ = writeln!(
                t,
                "You are the central planner for a team of {m} robots searching an unknown 2D environment."
            );
            let _ = writeln!(
                t,
                "TASK: find the object of interest as quickly as possible; the search ends as soon as any robot observes it."
            );
        }
    }

    let _ = writeln!(t);
    let _ = writeln!(
        t,
        "MAP: {} rows x {} columns. Coordinates are (row,col) with (0,0) at the top-left corner.",
        ctx.map_height, ctx.map_width
    );
    let _ = writeln!(
        t,
        "The attached grayscale image shows unknown cells in white, free cells in gray, occupied cells in black and robots as dark marks."
    );

    let _ = writeln!(t);
    let _ = writeln!(t, "ROBOTS (position, detection range, max speed):");
    for r in &ctx.robots {
        let _ = writeln!(
            t,
            "- robot {} at {}: detection range {} cells, max speed {} cells/timestep",
            r.id, r.position, r.detection_range, r.max_speed
        );
    }

    let _ = writeln!(t);
    let _ = writeln!(
        t,
        "REPRESENTATIVE FRONTIERS (coordinates, information gain s, utility U):"
    );
    if ctx.frontiers.is_empty() {
        let _ = writeln!(t, "- none detected");
    }
    for f in &ctx.frontiers {
        let _ = writeln!(t, "- {} s={:.3} U={:.3}", f.cell, f.info_gain, f.utility);
    }

    let _ = writeln!(t);
    let _ = writeln!(t, "POTENTIAL DOORWAYS (coordinates, information gain):");
    if ctx.doorways.is_empty() {
        let _ = writeln!(t, "- none detected");
    }
    for d in &ctx.doorways {
        let _ = writeln!(t, "- {} gain={:.3}", d.midpoint, d.info_gain);
    }

    let _ = writeln!(t);
    let _ = writeln!(t, "KEY INITIAL INFORMATION:");
    let _ = writeln!(t, "{}", ctx.initial_info.as_deref().unwrap_or("none provided"));

    let _ = writeln!(t);
    let _ = writeln!(t, "PREVIOUS PLAN SUMMARY:");
    if ctx.plan_summary.trim().is_empty() {
        let _ = writeln!(t, "none (first planning cycle)");
    } else {
        let _ = writeln!(t, "{}", ctx.plan_summary);
    }

    let _ = writeln!(t);
    let _ = writeln!(t, "EXECUTION SUMMARY:");
    if ctx.exec_summary.is_empty() {
        let _ = writeln!(t, "- {NO_EXEC_EVENTS}");
    }
    for e in &ctx.exec_summary {
        let _ = writeln!(t, "- {e}");
    }

    let _ = writeln!(t);
    let _ = writeln!(
        t,
        "MAP IMAGE: attached as a base64-encoded grayscale PNG ({} bytes).",
        ctx.map_png.len()
    );

    let _ = writeln!(t);
    let _ = writeln!(t, "OUTPUT FORMAT:");
    let _ = writeln!(
        t,
        "Assign every robot an ordered sequence of waypoints; the number of waypoints may differ between robots."
    );
    let _ = writeln!(
        t,
        "Waypoints are not restricted to the listed frontiers or doorways: any free or unexplored cell visible in the map image may be chosen."
    );
    let _ = writeln!(
        t,
        "Reply with exactly one line per robot, then one summary line that will be given back to you in the next planning cycle:"
    );
    let _ = writeln!(t, "ROBOT <id>: (r1,c1) (r2,c2) ...");
    let _ = writeln!(t, "SUMMARY: <plan summary>");

    Prompt {
        text: t,
        image_base64: base64::engine::general_purpose::STANDARD.encode(&ctx.map_png),
    }
}
