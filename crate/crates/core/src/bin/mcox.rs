use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mcox_core::doorway::{detect_doorways, DoorwayParams};
use mcox_core::engine::PlannerKind;
use mcox_core::frontier::{rank_and_select, FrontierParams};
use mcox_core::harness::{compare, run_experiment, ExperimentSpec, SummaryTable, TaskChoice};
use mcox_core::mapgen::{gen_structured, gen_unstructured, SizeClass, StructuredMapSpec, UnstructuredMapSpec};
use mcox_core::{Cell, GridMap, RobotState};

#[derive(Parser)]
#[command(
    name = "mcox",
    version,
    about = "Multi-robot coordinated exploration and search simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch experiment described by a TOML config.
    Run(RunArgs),
    /// Generate a map in the ASCII map format.
    Genmap(GenmapArgs),
    /// Representative frontiers of a belief map as CSV (row,col,s,c,U).
    Frontiers(FrontierArgs),
    /// Doorway candidates of a belief map as CSV (row,col,axis_deg,width,gain).
    Doorways(DoorwayArgs),
    /// Percent change in mean completion time between two planners.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Planners to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    planner: Vec<PlannerKind>,
    /// Team sizes to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    team: Vec<usize>,
    #[arg(long)]
    task: Option<TaskArg>,
    /// Worker threads.
    #[arg(long)]
    parallel: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Explore,
    Search,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Small,
    Medium,
    Large,
}

impl From<ClassArg> for SizeClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Small => SizeClass::Small,
            ClassArg::Medium => SizeClass::Medium,
            ClassArg::Large => SizeClass::Large,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Structured,
    Unstructured,
}

#[derive(Args)]
struct GenmapArgs {
    #[arg(long, value_enum, default_value = "small")]
    class: ClassArg,
    #[arg(long, value_enum, default_value = "structured")]
    kind: KindArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the map as a binary PGM image.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct FrontierArgs {
    /// Belief map in the ASCII map format.
    #[arg(long)]
    map: PathBuf,
    /// Robot position as `row,col`; repeat for several robots.
    #[arg(long = "robot", value_parser = parse_cell)]
    robots: Vec<Cell>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    keep: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    separation: Option<f64>,
    /// LiDAR range used for information gain.
    #[arg(long, default_value_t = 5)]
    range: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DoorwayArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    range: u32,
    #[arg(long)]
    max_width: Option<f64>,
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Experiment output directory holding `episodes.csv`.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    baseline: PlannerKind,
    #[arg(long)]
    challenger: PlannerKind,
}

fn parse_cell(s: &str) -> Result<Cell, String> {
    let (r, c) = s
        .trim_matches(|ch| ch == '(' || ch == ')')
        .split_once(',')
        .ok_or_else(|| format!("expected row,col but got `{s}`"))?;
    let r = r.trim().parse().map_err(|e| format!("bad row in `{s}`: {e}"))?;
    let c = c.trim().parse().map_err(|e| format!("bad col in `{s}`: {e}"))?;
    Ok(Cell::new(r, c))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_map(path: &PathBuf) -> Result<GridMap> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    GridMap::from_ascii(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut spec = ExperimentSpec::load(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(out) = args.out {
        spec.output_dir = out;
    }
    if !args.planner.is_empty() {
        spec.planners = args.planner;
    }
    if !args.team.is_empty() {
        spec.team_sizes = args.team;
    }
    if let Some(task) = args.task {
        spec.task = match task {
            TaskArg::Explore => TaskChoice::Explore,
            TaskArg::Search => TaskChoice::Search,
        };
    }
    if let Some(p) = args.parallel {
        spec.parallel = p;
    }
    let report = run_experiment(&spec)?;
    eprintln!(
        "{}: {} episodes run, {} reused; results in {}",
        spec.name,
        report.ran,
        report.reused,
        spec.output_dir.display()
    );
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "map_class,team_size,planner,episodes,completed,timeouts,errors,median,mean_steps"
    )?;
    for r in &report.table.rows {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.1}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.map_class,
            r.team_size,
            r.planner,
            r.episodes,
            r.completed,
            r.timeouts,
            r.errors,
            fmt(r.median),
            fmt(r.mean_steps)
        )?;
    }
    Ok(())
}

fn cmd_genmap(args: GenmapArgs) -> Result<()> {
    let class = SizeClass::from(args.class);
    let generated = match args.kind {
        KindArg::Structured => gen_structured(&StructuredMapSpec::new(class, args.seed))?,
        KindArg::Unstructured => {
            let mut s = UnstructuredMapSpec::new(args.seed);
            s.side = class.side();
            gen_unstructured(&s)?
        }
    };
    output(&args.out)?.write_all(generated.map.to_ascii().as_bytes())?;
    if let Some(p) = args.pgm {
        fs::write(&p, generated.map.to_pgm()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn cmd_frontiers(args: FrontierArgs) -> Result<()> {
    let belief = read_map(&args.map)?;
    let defaults = FrontierParams::default();
    let params = FrontierParams {
        samples: args.samples.unwrap_or(defaults.samples),
        keep: args.keep.unwrap_or(defaults.keep),
        lambda: args.lambda.unwrap_or(defaults.lambda),
        separation: args.separation.unwrap_or(defaults.separation),
        info_range: args.range,
    };
    let robots: Vec<RobotState> = args
        .robots
        .iter()
        .enumerate()
        .map(|(id, &p)| RobotState::new(id, p, args.range, 1))
        .collect();
    let cands = rank_and_select(&belief, &robots, &params, args.seed)?;
    let mut out = output(&args.out)?;
    writeln!(out, "row,col,s,c,U")?;
    for f in cands {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6}",
            f.cell.row, f.cell.col, f.info_gain, f.cost, f.utility
        )?;
    }
    Ok(())
}

fn cmd_doorways(args: DoorwayArgs) -> Result<()> {
    let belief = read_map(&args.map)?;
    let defaults = DoorwayParams::default();
    let params = DoorwayParams {
        max_width: args.max_width.unwrap_or(defaults.max_width),
        directions: args.directions.unwrap_or(defaults.directions),
        ..defaults
    };
    let found = detect_doorways(&belief, &params, args.range, args.seed)?;
    let mut out = output(&args.out)?;
    writeln!(out, "row,col,axis_deg,width,gain")?;
    for d in found {
        writeln!(
            out,
            "{},{},{:.1},{:.3},{:.6}",
            d.midpoint.row, d.midpoint.col, d.axis_deg, d.width, d.info_gain
        )?;
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let path = args.dir.join("episodes.csv");
    if !path.exists() {
        bail!("{} not found; run an experiment first", path.display());
    }
    let table = SummaryTable::read_episodes_csv(&path)?;
    let pct = compare(&table, args.baseline, args.challenger)?;
    println!(
        "{} vs {}: {pct:+.2}% mean completion time reduction (timeouts counted at the limit)",
        args.challenger, args.baseline
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(a) => cmd_run(a),
        Command::Genmap(a) => cmd_genmap(a),
        Command::Frontiers(a) => cmd_frontiers(a),
        Command::Doorways(a) => cmd_doorways(a),
        Command::Compare(a) => cmd_compare(a),
    }
}
