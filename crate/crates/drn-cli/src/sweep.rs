//! Experiment sweeps over training-set size and sampling noise, emitting
//! resumable long-format CSV (`experiment,model,size,seed,metric,value`).

use crate::commands::{eval_checkpoint, fit, ModelKind};
use crate::CliError;
use drn::data::{degrade_with_sampling, gen_climate_ou, gen_shifting_gaussian, Dataset};
use drn::train::TrainConfig;
use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

pub const SWEEP_HEADER: &str = "experiment,model,size,seed,metric,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTask {
    ShiftingGaussian,
    Climate,
}

impl FromStr for SweepTask {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "shifting-gaussian" => Ok(SweepTask::ShiftingGaussian),
            "climate" => Ok(SweepTask::Climate),
            other => Err(CliError::Usage(format!(
                "unknown task {other:?}, expected shifting-gaussian or climate"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub task: SweepTask,
    pub models: Vec<ModelKind>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub data_seed: u64,
    /// Architecture overrides; `None` selects the task defaults.
    pub drn_arch: Option<String>,
    pub rdrn_arch: Option<String>,
    pub mlp_arch: Option<String>,
    /// Base optimizer settings; each run replaces the seed.
    pub config: TrainConfig,
}

impl SweepSettings {
    fn arch(&self, kind: ModelKind) -> String {
        let default = match (kind, self.task) {
            (ModelKind::Drn, SweepTask::ShiftingGaussian) => "3 - 2x10 - 1",
            (ModelKind::Drn, SweepTask::Climate) => "3 - 1x5 - 1",
            (ModelKind::Rdrn, _) => "m=5",
            (ModelKind::Mlp, SweepTask::ShiftingGaussian) => "3 - 1x3 - 1",
            (ModelKind::Mlp, SweepTask::Climate) => "3 - 2x50 - 1",
        };
        let over = match kind {
            ModelKind::Drn => &self.drn_arch,
            ModelKind::Rdrn => &self.rdrn_arch,
            ModelKind::Mlp => &self.mlp_arch,
        };
        over.clone().unwrap_or_else(|| default.to_string())
    }

    /// Feedforward models on the climate task see only the three most
    /// recent steps; the recurrent model consumes the full history.
    fn history(&self, kind: ModelKind) -> Option<usize> {
        match (self.task, kind) {
            (SweepTask::Climate, ModelKind::Drn | ModelKind::Mlp) => Some(3),
            _ => None,
        }
    }
}

struct TaskData {
    train_pool: Dataset,
    val: Dataset,
    test: Dataset,
}

fn base_data(task: SweepTask, data_seed: u64, train_pool_size: usize) -> Result<TaskData, CliError> {
    Ok(match task {
        SweepTask::ShiftingGaussian => TaskData {
            train_pool: gen_shifting_gaussian(train_pool_size, 3, 0.2, 0.1, data_seed)?,
            val: gen_shifting_gaussian(100, 3, 0.2, 0.1, data_seed.wrapping_add(1))?,
            test: gen_shifting_gaussian(1000, 3, 0.2, 0.1, data_seed.wrapping_add(2))?,
        },
        SweepTask::Climate => {
            let (train_pool, test) = gen_climate_ou(train_pool_size, 1000, data_seed)?;
            let (val, _) = gen_climate_ou(100, 1, data_seed.wrapping_add(1))?;
            TaskData { train_pool, val, test }
        }
    })
}

fn subset(data: &Dataset, n: usize) -> Dataset {
    Dataset { samples: data.samples[..n].to_vec(), meta: data.meta.clone() }
}

fn completed_cells(path: &Path) -> Result<HashSet<String>, CliError> {
    let mut done = HashSet::new();
    let Ok(text) = std::fs::read_to_string(path) else {
        return Ok(done);
    };
    for line in text.lines() {
        let mut fields = line.splitn(6, ',');
        let key: Vec<&str> = fields.by_ref().take(4).collect();
        if key.len() == 4 && key[0] != "experiment" {
            done.insert(key.join(","));
        }
    }
    Ok(done)
}

/// Runs one sweep cell: trains `kind` on `size` units of data with `seed`
/// and returns (metric, value) rows.
fn run_cell(
    settings: &SweepSettings,
    experiment: &str,
    kind: ModelKind,
    data: &TaskData,
    seed: u64,
) -> Result<Vec<(String, f64)>, CliError> {
    let history = settings.history(kind);
    let cut = |d: &Dataset| match history {
        Some(h) => d.truncate_history(h),
        None => d.clone(),
    };
    let config = TrainConfig { seed, ..settings.config.clone() };
    let (best, _) = fit(kind, &settings.arch(kind), &cut(&data.train_pool), &cut(&data.val), &config)?;
    let metrics = eval_checkpoint(&best, &cut(&data.test))?;
    let _ = experiment;
    Ok(vec![("jsd".into(), metrics.jsd.mean), ("l2".into(), metrics.l2.mean)])
}

pub fn cmd_sweep(experiment: &str, settings: &SweepSettings, out: &Path) -> Result<(), CliError> {
    match experiment {
        "train-size" | "sample-noise" => {}
        other => {
            return Err(CliError::Usage(format!(
                "unknown experiment {other:?}, expected train-size or sample-noise"
            )))
        }
    }
    if experiment == "sample-noise" && settings.task != SweepTask::Climate {
        return Err(CliError::Usage(
            "the sample-noise experiment is defined on the climate task".into(),
        ));
    }
    if settings.sizes.is_empty() || settings.seeds.is_empty() || settings.models.is_empty() {
        return Err(CliError::Usage("models, sizes and seeds must be nonempty".into()));
    }

    let done = completed_cells(out)?;
    let fresh = !out.exists();
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(out)?;
    if fresh {
        writeln!(file, "{SWEEP_HEADER}")?;
    }

    // train-size varies the subset of one shared pool; sample-noise trains
    // on a fixed 100 samples observed through `size` draws per distribution
    let pool_size = match experiment {
        "train-size" => *settings.sizes.iter().max().unwrap(),
        _ => 100,
    };
    let base = base_data(settings.task, settings.data_seed, pool_size)?;

    let mut added = 0usize;
    for &size in &settings.sizes {
        let data = match experiment {
            "train-size" => TaskData {
                train_pool: subset(&base.train_pool, size.min(base.train_pool.samples.len())),
                val: base.val.clone(),
                test: base.test.clone(),
            },
            _ => {
                let noise_seed = settings.data_seed.wrapping_add(1000 + size as u64);
                let degrade = |d: &Dataset, salt: u64| -> Result<Dataset, CliError> {
                    if size == 0 {
                        Ok(d.clone())
                    } else {
                        Ok(degrade_with_sampling(d, size, noise_seed.wrapping_add(salt))?)
                    }
                };
                TaskData {
                    train_pool: degrade(&base.train_pool, 0)?,
                    val: degrade(&base.val, 1)?,
                    test: degrade(&base.test, 2)?,
                }
            }
        };
        for &kind in &settings.models {
            for &seed in &settings.seeds {
                let key = format!("{experiment},{},{size},{seed}", kind.name());
                if done.contains(&key) {
                    continue;
                }
                let rows = run_cell(settings, experiment, kind, &data, seed)?;
                for (metric, value) in rows {
                    writeln!(file, "{key},{metric},{value}")?;
                }
                file.flush()?;
                added += 1;
                println!("completed {key}");
            }
        }
    }
    println!("sweep done: {added} new cells in {}", out.display());
    Ok(())
}
