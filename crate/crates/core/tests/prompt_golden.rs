//! Prompt text is pinned against recorded files in `tests/golden`.
//! Set `MCOX_BLESS=1` to rewrite them after an intended change.

use std::path::PathBuf;

use mcox_core::doorway::{detect_doorways, DoorwayParams};
use mcox_core::frontier::{rank_and_select, FrontierParams};
use mcox_core::gridmap::{lidar_scan, new_belief};
use mcox_core::planner_llm::{build_prompt, PlannerContext, TaskKind};
use mcox_core::{Cell, GridMap, RobotState};

fn golden(name: &str, text: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("MCOX_BLESS").is_some() {
        std::fs::write(&path, text).unwrap();
    }
    let recorded = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; run with MCOX_BLESS=1 to record", path.display()));
    assert_eq!(recorded, text, "{} differs from the recorded prompt", path.display());
}

fn context(task: TaskKind) -> PlannerContext {
    let text =
        std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/rooms_20x20.map"))
            .unwrap();
    let truth = GridMap::from_ascii(&text).unwrap();
    let robots = vec![
        RobotState::new(0, Cell::new(17, 1), 5, 3),
        RobotState::new(1, Cell::new(8, 4), 10, 1),
    ];
    let mut belief = new_belief(20, 20).unwrap();
    for r in &robots {
        belief
            .merge_in_place(&lidar_scan(&truth, r.position, r.detection_range).unwrap())
            .unwrap();
    }
    let mut ctx = PlannerContext::new(task, &belief, &robots, 4);
    ctx.frontiers = rank_and_select(&belief, &robots, &FrontierParams::default(), 11).unwrap();
    ctx.doorways = detect_doorways(&belief, &DoorwayParams::default(), 10, 12).unwrap();
    ctx
}

#[test]
fn first_cycle_exploration_prompt() {
    let p = build_prompt(&context(TaskKind::Explore));
    golden("prompt_explore_first_cycle.txt", &p.text);
    assert!(p.image_data_url().starts_with("data:image/png;base64,iVBORw0KGgo"));
}

#[test]
fn later_cycle_search_prompt_with_hint() {
    let mut ctx = context(TaskKind::Search);
    ctx.initial_info = Some("The object of interest is most likely in the top right part of the map.".into());
    ctx.plan_summary = "robot 0 sweeps the south rooms; robot 1 heads north-east".into();
    ctx.exec_summary = vec!["(3,16) unreachable by robot 1".into()];
    golden("prompt_search_later_cycle.txt", &build_prompt(&ctx).text);
}

#[test]
fn image_is_deterministic() {
    assert_eq!(
        build_prompt(&context(TaskKind::Explore)),
        build_prompt(&context(TaskKind::Explore))
    );
}
