use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use psdmf::data::{generate_synthetic, load_dataset, normalize, split_labeled};
use psdmf::metrics::evaluate;
use psdmf::psdmf::{fit, predict_labels};
use psdmf::MultiViewDataset;
use rayon::prelude::*;

use crate::config::{load_config, DataSource, RunConfig};
use crate::report::{
    DatasetInfo, GridCell, GridReport, RunSummary, TrialOutcome, TrialReport, SCHEMA_VERSION,
};

/// Environment variable naming the directory reports are written to.
pub const REPORT_DIR_ENV: &str = "PSDMF_REPORT_DIR";
pub const DEFAULT_REPORT_DIR: &str = "psdmf-reports";

pub fn report_dir() -> PathBuf {
    std::env::var_os(REPORT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_REPORT_DIR))
}

/// The dataset a configuration describes, normalized, with a description
/// for the report.
pub fn prepare_dataset(cfg: &RunConfig) -> Result<(MultiViewDataset, DatasetInfo)> {
    let (ds, source) = match cfg.source()? {
        DataSource::Manifest(path) => {
            let ds = load_dataset(&path).context("loading dataset")?;
            (ds, path.display().to_string())
        }
        DataSource::Synthetic(spec) => {
            let ds = generate_synthetic(&spec).context("generating synthetic data")?;
            (ds.dataset, "synthetic".to_string())
        }
    };
    if ds.truth.is_none() {
        bail!("runs need ground-truth labels for the labeled block and for scoring");
    }
    let info = DatasetInfo::of(source, &ds);
    Ok((normalize(&ds, cfg.normalize_mode()?), info))
}

/// Trial `index`: label split and solver both seeded with
/// `run.seed + index`; metrics over all samples.
pub fn run_trial(ds: &MultiViewDataset, cfg: &RunConfig, index: usize) -> TrialReport {
    let seed = cfg.run.seed + index as u64;
    let start = Instant::now();
    let outcome = (|| -> Result<TrialOutcome> {
        let solver = cfg.solver(seed)?;
        let split = split_labeled(ds, solver.label_fraction, seed)?;
        let out = fit(&split, &solver)?;
        let pred = predict_labels(&out.state);
        let truth = split.truth.as_ref().expect("checked when loading");
        let m = evaluate(&pred, truth)?;
        Ok(TrialOutcome::Ok {
            acc: m.acc,
            nmi: m.nmi,
            purity: m.purity,
            final_objective: out.final_objective(),
            iterations: out.iterations,
            converged: out.converged,
        })
    })()
    .unwrap_or_else(|e| TrialOutcome::Failed {
        error: format!("{e:#}"),
    });
    let wall_time = start.elapsed();
    match &outcome {
        TrialOutcome::Ok {
            acc, iterations, ..
        } => log::info!(
            "trial {index} (seed {seed}): acc {acc:.4} after {iterations} iterations in {:.2}s",
            wall_time.as_secs_f64()
        ),
        TrialOutcome::Failed { error } => log::warn!("trial {index} (seed {seed}) failed: {error}"),
    }
    TrialReport {
        trial: index,
        seed,
        outcome,
        wall_time,
    }
}

/// Runs every trial of a validated configuration. Trials run concurrently;
/// each one is seeded independently, so the result does not depend on
/// scheduling.
pub fn execute(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let (ds, info) = prepare_dataset(cfg)?;
    let trials: Vec<TrialReport> = (0..cfg.run.trials)
        .into_par_iter()
        .map(|i| run_trial(&ds, cfg, i))
        .collect();
    Ok(RunSummary::new(cfg.clone(), info, trials))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub struct RunFiles {
    pub report: PathBuf,
    pub config: PathBuf,
}

/// Writes `<name>.report.json` and the effective `<name>.config.toml` into
/// `dir`.
pub fn write_run(dir: &Path, name: &str, summary: &RunSummary) -> Result<RunFiles> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let files = RunFiles {
        report: dir.join(format!("{name}.report.json")),
        config: dir.join(format!("{name}.config.toml")),
    };
    write(&files.report, &summary.to_json())?;
    write(&files.config, &summary.config.to_toml())?;
    Ok(files)
}

pub fn cmd_run(config: &Path, overrides: &[String], dir: &Path) -> Result<(RunSummary, RunFiles)> {
    let cfg = load_config(config, overrides)?;
    let summary = execute(&cfg)?;
    let files = write_run(dir, &stem(config), &summary)?;
    Ok((summary, files))
}

/// Swept keys and their values, in file order. Accepts dotted keys
/// (`"model.mu" = [...]`) and nested tables (`[grid.model] mu = [...]`),
/// either at top level or under `[grid]`.
pub fn parse_grid(text: &str) -> Result<Vec<(String, Vec<toml::Value>)>> {
    let mut table: toml::Table = text.parse().context("parsing grid file")?;
    if let Some(toml::Value::Table(inner)) = table.remove("grid") {
        if !table.is_empty() {
            bail!("grid file mixes a [grid] table with other keys");
        }
        table = inner;
    }
    let mut out = Vec::new();
    flatten(&table, String::new(), &mut out)?;
    Ok(out)
}

fn flatten(
    table: &toml::Table,
    prefix: String,
    out: &mut Vec<(String, Vec<toml::Value>)>,
) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(t, key, out)?,
            toml::Value::Array(values) if !values.is_empty() => out.push((key, values.clone())),
            toml::Value::Array(_) => bail!("`{key}`: empty value list"),
            other => out.push((key, vec![other.clone()])),
        }
    }
    Ok(())
}

/// All combinations, the last key varying fastest.
pub fn cartesian(axes: &[(String, Vec<toml::Value>)]) -> Vec<Vec<toml::Value>> {
    let mut cells: Vec<Vec<toml::Value>> = vec![Vec::new()];
    for (_, values) in axes {
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                values.iter().map(move |v| {
                    let mut next = cell.clone();
                    next.push(v.clone());
                    next
                })
            })
            .collect();
    }
    cells
}

fn to_json(v: &toml::Value) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

pub fn cmd_grid(config: &Path, grid: &Path, dir: &Path) -> Result<(GridReport, PathBuf)> {
    let text = fs::read_to_string(grid).with_context(|| format!("reading {}", grid.display()))?;
    let axes = parse_grid(&text)?;
    let mut cells = Vec::new();
    for values in cartesian(&axes) {
        let overrides: Vec<String> = axes
            .iter()
            .zip(&values)
            .map(|((k, _), v)| format!("{k}={v}"))
            .collect();
        let cfg = load_config(config, &overrides)?;
        let run = execute(&cfg).with_context(|| format!("grid cell {}", overrides.join(", ")))?;
        cells.push(GridCell {
            values: values.iter().map(to_json).collect(),
            run,
        });
    }
    let report = GridReport {
        schema_version: SCHEMA_VERSION,
        keys: axes.into_iter().map(|(k, _)| k).collect(),
        cells,
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = format!("{}-{}", stem(config), stem(grid));
    let json = dir.join(format!("{name}.grid.json"));
    write(&json, &report.to_json())?;
    write(&dir.join(format!("{name}.grid.tsv")), &report.long_table())?;
    Ok((report, json))
}

pub fn cmd_validate(manifest: &Path) -> Result<DatasetInfo> {
    let ds = load_dataset(manifest)?;
    Ok(DatasetInfo::of(manifest.display().to_string(), &ds))
}
