use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::PlannerKind;

/// One line of `episodes.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub map_class: String,
    pub map_seed: u64,
    pub planner: PlannerKind,
    pub team_size: usize,
    pub task: String,
    /// `completed`, `timeout` or `error`.
    pub outcome: String,
    /// Completion timestep, or the limit for timeouts.
    pub steps: usize,
    pub coverage_at_end: f64,
}

impl EpisodeRow {
    pub fn is_error(&self) -> bool {
        self.outcome == "error"
    }

    fn group(&self) -> (String, usize, PlannerKind) {
        (self.map_class.clone(), self.team_size, self.planner)
    }

    fn instance(&self) -> (String, u64, usize, String) {
        (self.map_class.clone(), self.map_seed, self.team_size, self.task.clone())
    }
}

/// Five-number summary using linear interpolation between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(Quartiles {
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    })
}

/// One line of `summary.csv`. Timeouts enter the statistics at the
/// timestep limit; errored episodes are only counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub map_class: String,
    pub team_size: usize,
    pub planner: PlannerKind,
    pub episodes: usize,
    pub completed: usize,
    pub timeouts: usize,
    pub errors: usize,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
    pub mean_steps: Option<f64>,
    pub mean_coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
    pub episodes: Vec<EpisodeRow>,
}

impl SummaryTable {
    pub fn from_episodes(mut episodes: Vec<EpisodeRow>) -> Self {
        episodes.sort_by(|a, b| (a.group(), a.map_seed, &a.task).cmp(&(b.group(), b.map_seed, &b.task)));
        let mut groups: BTreeMap<(String, usize, PlannerKind), Vec<&EpisodeRow>> = BTreeMap::new();
        for e in &episodes {
            groups.entry(e.group()).or_default().push(e);
        }
        let rows = groups
            .into_iter()
            .map(|((map_class, team_size, planner), eps)| {
                let ok: Vec<&&EpisodeRow> = eps.iter().filter(|e| !e.is_error()).collect();
                let steps: Vec<f64> = ok.iter().map(|e| e.steps as f64).collect();
                let q = quartiles(&steps);
                let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
                SummaryRow {
                    map_class,
                    team_size,
                    planner,
                    episodes: eps.len(),
                    completed: eps.iter().filter(|e| e.outcome == "completed").count(),
                    timeouts: eps.iter().filter(|e| e.outcome == "timeout").count(),
                    errors: eps.iter().filter(|e| e.is_error()).count(),
                    min: q.map(|q| q.min),
                    q1: q.map(|q| q.q1),
                    median: q.map(|q| q.median),
                    q3: q.map(|q| q.q3),
                    max: q.map(|q| q.max),
                    mean_steps: mean(steps),
                    mean_coverage: mean(ok.iter().map(|e| e.coverage_at_end).collect()),
                }
            })
            .collect();
        Self { rows, episodes }
    }

    pub fn row(&self, map_class: &str, team_size: usize, planner: PlannerKind) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.map_class == map_class && r.team_size == team_size && r.planner == planner)
    }

    pub fn write_csv(&self, dir: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(dir.join("episodes.csv"))?;
        for e in &self.episodes {
            w.serialize(e)?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rebuilds the table from an `episodes.csv`.
    pub fn read_episodes_csv(path: &Path) -> Result<Self, csv::Error> {
        let mut r = csv::Reader::from_path(path)?;
        let episodes = r.deserialize().collect::<Result<Vec<EpisodeRow>, _>>()?;
        Ok(Self::from_episodes(episodes))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("planner {0} has no episodes in the table")]
    MissingPlanner(PlannerKind),
    #[error("{0} and {1} share no episodes that both finished without error")]
    NoCommonEpisodes(PlannerKind, PlannerKind),
    #[error("baseline mean completion time is zero")]
    ZeroBaseline,
}

/// Percent reduction of the challenger's mean completion time relative to
/// the baseline, over instances both ran without error. Timeouts count at
/// the timestep limit.
pub fn compare(table: &SummaryTable, baseline: PlannerKind, challenger: PlannerKind) -> Result<f64, CompareError> {
    let by = |k: PlannerKind| -> BTreeMap<_, &EpisodeRow> {
        table
            .episodes
            .iter()
            .filter(|e| e.planner == k)
            .map(|e| (e.instance(), e))
            .collect()
    };
    let base = by(baseline);
    let chal = by(challenger);
    if base.is_empty() {
        return Err(CompareError::MissingPlanner(baseline));
    }
    if chal.is_empty() {
        return Err(CompareError::MissingPlanner(challenger));
    }
    let pairs: Vec<(f64, f64)> = base
        .iter()
        .filter_map(|(k, b)| chal.get(k).map(|c| (b, c)))
        .filter(|(b, c)| !b.is_error() && !c.is_error())
        .map(|(b, c)| (b.steps as f64, c.steps as f64))
        .collect();
    if pairs.is_empty() {
        return Err(CompareError::NoCommonEpisodes(baseline, challenger));
    }
    let n = pairs.len() as f64;
    let mb = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mc = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    if mb == 0.0 {
        return Err(CompareError::ZeroBaseline);
    }
    Ok((mb - mc) / mb * 100.0)
}
