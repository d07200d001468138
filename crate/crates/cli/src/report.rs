//! Machine-readable run reports and their human-readable tables.

use std::fmt::Write as _;
use std::time::Duration;

use psdmf::MultiViewDataset;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// Bumped whenever a field is added, removed or changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: TrialOutcome,
    /// Kept out of the file so that reports are reproducible bit for bit.
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TrialOutcome {
    Ok {
        acc: f64,
        nmi: f64,
        purity: f64,
        final_objective: f64,
        iterations: usize,
        converged: bool,
    },
    Failed {
        error: String,
    },
}

impl TrialReport {
    pub fn is_ok(&self) -> bool {
        matches!(self.outcome, TrialOutcome::Ok { .. })
    }
}

/// Population mean and standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Stat {
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub requested: usize,
    pub completed: usize,
    pub failed: usize,
    pub acc: Option<Stat>,
    pub nmi: Option<Stat>,
    pub purity: Option<Stat>,
    pub final_objective: Option<Stat>,
    pub iterations: Option<Stat>,
}

impl Summary {
    pub fn of(trials: &[TrialReport]) -> Self {
        let mut cols: [Vec<f64>; 5] = Default::default();
        for t in trials {
            if let TrialOutcome::Ok {
                acc,
                nmi,
                purity,
                final_objective,
                iterations,
                ..
            } = t.outcome
            {
                for (c, v) in
                    cols.iter_mut()
                        .zip([acc, nmi, purity, final_objective, iterations as f64])
                {
                    c.push(v);
                }
            }
        }
        let completed = cols[0].len();
        Summary {
            requested: trials.len(),
            completed,
            failed: trials.len() - completed,
            acc: Stat::of(&cols[0]),
            nmi: Stat::of(&cols[1]),
            purity: Stat::of(&cols[2]),
            final_objective: Stat::of(&cols[3]),
            iterations: Stat::of(&cols[4]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: String,
    pub n_views: usize,
    pub view_dims: Vec<usize>,
    pub n_samples: usize,
    pub n_classes: usize,
    pub labeled: bool,
}

impl DatasetInfo {
    pub fn of(source: String, ds: &MultiViewDataset) -> Self {
        DatasetInfo {
            source,
            n_views: ds.n_views(),
            view_dims: ds.view_dims(),
            n_samples: ds.n_samples(),
            n_classes: ds.class_count,
            labeled: ds.truth.is_some(),
        }
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset  {}", self.source);
        let _ = writeln!(s, "views    {}", self.n_views);
        for (p, d) in self.view_dims.iter().enumerate() {
            let _ = writeln!(s, "  view {p}  {d} features");
        }
        let _ = writeln!(s, "samples  {}", self.n_samples);
        if self.labeled {
            let _ = writeln!(s, "classes  {}", self.n_classes);
        } else {
            let _ = writeln!(s, "classes  - (no labels)");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub config: RunConfig,
    pub dataset: DatasetInfo,
    pub trials: Vec<TrialReport>,
    pub summary: Summary,
}

impl RunSummary {
    pub fn new(config: RunConfig, dataset: DatasetInfo, trials: Vec<TrialReport>) -> Self {
        let summary = Summary::of(&trials);
        RunSummary {
            schema_version: SCHEMA_VERSION,
            config,
            dataset,
            trials,
            summary,
        }
    }

    pub fn all_completed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>5} {:>6} {:>7} {:>7} {:>7} {:>13} {:>6} {:>9}",
            "trial", "seed", "acc", "nmi", "purity", "objective", "iters", "time(s)"
        );
        for t in &self.trials {
            match &t.outcome {
                TrialOutcome::Ok {
                    acc,
                    nmi,
                    purity,
                    final_objective,
                    iterations,
                    ..
                } => {
                    let _ = writeln!(
                        s,
                        "{:>5} {:>6} {:>7.4} {:>7.4} {:>7.4} {:>13.6e} {:>6} {:>9.3}",
                        t.trial,
                        t.seed,
                        acc,
                        nmi,
                        purity,
                        final_objective,
                        iterations,
                        t.wall_time.as_secs_f64()
                    );
                }
                TrialOutcome::Failed { error } => {
                    let _ = writeln!(s, "{:>5} {:>6} failed: {error}", t.trial, t.seed);
                }
            }
        }
        let fmt = |st: &Option<Stat>| match st {
            Some(st) => format!("{:.4} ± {:.4}", st.mean, st.std),
            None => "-".into(),
        };
        let m = &self.summary;
        let _ = writeln!(s, "completed {}/{}", m.completed, m.requested);
        let _ = writeln!(s, "ACC     {}", fmt(&m.acc));
        let _ = writeln!(s, "NMI     {}", fmt(&m.nmi));
        let _ = writeln!(s, "Purity  {}", fmt(&m.purity));
        s
    }
}

/// One cell of a parameter sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    /// Values of the swept keys, in key order.
    pub values: Vec<serde_json::Value>,
    pub run: RunSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub schema_version: u32,
    pub keys: Vec<String>,
    pub cells: Vec<GridCell>,
}

impl GridReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Long format: one row per cell and metric, tab separated.
    pub fn long_table(&self) -> String {
        let mut s = String::from("cell");
        for k in &self.keys {
            s.push('\t');
            s.push_str(k);
        }
        s.push_str("\tmetric\tmean\tstd\tcompleted\n");
        for (i, cell) in self.cells.iter().enumerate() {
            let m = &cell.run.summary;
            for (name, stat) in [("acc", m.acc), ("nmi", m.nmi), ("purity", m.purity)] {
                let _ = write!(s, "{i}");
                for v in &cell.values {
                    let _ = write!(s, "\t{v}");
                }
                let (mean, std) = stat.map_or((f64::NAN, f64::NAN), |st| (st.mean, st.std));
                let _ = writeln!(s, "\t{name}\t{mean}\t{std}\t{}", m.completed);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(trial: usize, acc: f64) -> TrialReport {
        TrialReport {
            trial,
            seed: trial as u64,
            outcome: TrialOutcome::Ok {
                acc,
                nmi: acc,
                purity: acc,
                final_objective: 1.0,
                iterations: 3,
                converged: true,
            },
            wall_time: Duration::from_millis(5),
        }
    }

    #[test]
    fn single_trial_has_zero_std() {
        let s = Summary::of(&[ok(0, 0.8)]);
        assert_eq!(
            s.acc,
            Some(Stat {
                mean: 0.8,
                std: 0.0
            })
        );
    }

    #[test]
    fn failed_trials_are_counted_not_averaged() {
        let failed = TrialReport {
            trial: 1,
            seed: 1,
            outcome: TrialOutcome::Failed {
                error: "boom".into(),
            },
            wall_time: Duration::ZERO,
        };
        let s = Summary::of(&[ok(0, 0.5), failed, ok(2, 1.0)]);
        assert_eq!((s.requested, s.completed, s.failed), (3, 2, 1));
        assert_eq!(
            s.acc,
            Some(Stat {
                mean: 0.75,
                std: 0.25
            })
        );
    }

    #[test]
    fn json_omits_wall_time_and_tags_status() {
        let json = serde_json::to_string(&ok(0, 1.0)).unwrap();
        assert!(json.contains("\"status\":\"ok\""));
        assert!(!json.contains("wall"));
        let back: TrialReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.outcome, ok(0, 1.0).outcome);
    }
}
