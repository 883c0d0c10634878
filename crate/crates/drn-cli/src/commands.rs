//! The gen / train / eval / check subcommands.

use crate::arch::{parse_hidden_width, parse_layers};
use crate::config::render_resolved;
use crate::CliError;
use drn::checks::run_suite;
use drn::ckpt::{save_checkpoint, Checkpoint};
use drn::data::{
    degrade_with_sampling, gen_climate_ou, gen_shifting_gaussian, load_csv_samples, load_dataset,
    save_dataset, Dataset, DatasetMeta, SequenceSample,
};
use drn::dist::{jsd, l2_distance, nll, Bandwidth, Support};
use drn::net::NetworkSpec;
use drn::baseline::init_mlp;
use drn::train::{
    batch_loss, dataset_loss, evaluate, init_drn, init_rdrn, train, MetricSummary, Model,
    TrainConfig, TrainReport,
};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Drn,
    Rdrn,
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Drn => "drn",
            ModelKind::Rdrn => "rdrn",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl FromStr for ModelKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "drn" => Ok(ModelKind::Drn),
            "rdrn" => Ok(ModelKind::Rdrn),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(CliError::Usage(format!(
                "unknown model {other:?}, expected drn, rdrn or mlp"
            ))),
        }
    }
}

fn describe(data: &Dataset, path: &Path) {
    let support = data.support().expect("generated datasets are nonempty");
    println!(
        "wrote {} samples, shape ({}, {}), support [{}, {}] with q = {} to {}",
        data.samples.len(),
        data.time_steps(),
        data.inputs_per_step(),
        support.lower(),
        support.upper(),
        support.q(),
        path.display()
    );
}

fn maybe_degrade(
    data: Dataset,
    n_samples: Option<usize>,
    seed: u64,
) -> Result<Dataset, CliError> {
    match n_samples {
        None | Some(0) => Ok(data),
        Some(n) => Ok(degrade_with_sampling(&data, n, seed)?),
    }
}

pub fn cmd_gen_shifting_gaussian(
    n: usize,
    t_steps: usize,
    dt: f64,
    variance: f64,
    seed: u64,
    degrade: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    let data = gen_shifting_gaussian(n, t_steps, dt, variance, seed)?;
    let data = maybe_degrade(data, degrade, seed.wrapping_add(1))?;
    save_dataset(&data, out)?;
    describe(&data, out);
    Ok(())
}

pub fn cmd_gen_climate_ou(
    n_train: usize,
    n_test: usize,
    seed: u64,
    degrade: Option<usize>,
    out_train: &Path,
    out_test: &Path,
) -> Result<(), CliError> {
    let (train_data, test_data) = gen_climate_ou(n_train, n_test, seed)?;
    let train_data = maybe_degrade(train_data, degrade, seed.wrapping_add(1))?;
    let test_data = maybe_degrade(test_data, degrade, seed.wrapping_add(2))?;
    save_dataset(&train_data, out_train)?;
    describe(&train_data, out_train);
    save_dataset(&test_data, out_test)?;
    describe(&test_data, out_test);
    Ok(())
}

/// Builds a dataset from grouped raw samples: each group becomes one
/// distribution by kernel density estimation, and consecutive groups form
/// (input, target) pairs in file order.
pub fn cmd_gen_csv_kde(
    csv: &Path,
    support: Support,
    group_column: &str,
    value_column: &str,
    bandwidth: Bandwidth,
    out: &Path,
) -> Result<(), CliError> {
    let groups = load_csv_samples(csv, support, group_column, value_column, bandwidth)?;
    if groups.len() < 2 {
        return Err(CliError::Runtime(format!(
            "need at least two groups to form input→target pairs, found {}",
            groups.len()
        )));
    }
    let samples = groups
        .windows(2)
        .map(|pair| SequenceSample {
            inputs: vec![vec![pair[0].1.clone()]],
            target: pair[1].1.clone(),
        })
        .collect();
    let data = Dataset {
        samples,
        meta: DatasetMeta {
            generator: "csv-kde".into(),
            seed: 0,
            params: vec![
                ("group".into(), group_column.into()),
                ("value".into(), value_column.into()),
            ],
        },
    };
    save_dataset(&data, out)?;
    describe(&data, out);
    Ok(())
}

/// A freshly initialized model of the requested family, shaped for `data`.
pub fn build_model(
    kind: ModelKind,
    arch: &str,
    data: &Dataset,
    config: &TrainConfig,
) -> Result<Checkpoint, CliError> {
    let support = data.support().ok_or(CliError::Runtime("dataset is empty".into()))?;
    let t_steps = data.time_steps();
    let k_nodes = data.inputs_per_step();
    match kind {
        ModelKind::Drn => {
            let layers = parse_layers(arch)?;
            if layers[0] != t_steps * k_nodes {
                return Err(CliError::Usage(format!(
                    "architecture has {} inputs but the dataset provides {}×{} distributions",
                    layers[0], t_steps, k_nodes
                )));
            }
            let spec = NetworkSpec::new(layers).map_err(CliError::from)?;
            Ok(Checkpoint::Drn(init_drn(spec, support, config)))
        }
        ModelKind::Rdrn => {
            let m = parse_hidden_width(arch)?;
            Ok(Checkpoint::Rdrn(init_rdrn(k_nodes, m, support, config)))
        }
        ModelKind::Mlp => {
            let layers = parse_layers(arch)?;
            if layers[0] != t_steps * k_nodes {
                return Err(CliError::Usage(format!(
                    "architecture has {} inputs but the dataset provides {}×{} distributions",
                    layers[0], t_steps, k_nodes
                )));
            }
            if *layers.last().unwrap() != 1 {
                return Err(CliError::Usage(
                    "the baseline supports a single output distribution".into(),
                ));
            }
            let q = support.q();
            let mut dims = vec![layers[0] * q];
            dims.extend(&layers[1..layers.len() - 1]);
            dims.push(q);
            Ok(Checkpoint::Mlp(init_mlp(dims, support, config)?))
        }
    }
}

/// Trains a checkpointed model, dispatching on its family.
pub fn train_checkpoint(
    model: Checkpoint,
    train_data: &Dataset,
    val_data: &Dataset,
    config: &TrainConfig,
) -> Result<(Checkpoint, TrainReport), CliError> {
    Ok(match model {
        Checkpoint::Drn(m) => {
            let (m, r) = train(m, train_data, val_data, config)?;
            (Checkpoint::Drn(m), r)
        }
        Checkpoint::Rdrn(m) => {
            let (m, r) = train(m, train_data, val_data, config)?;
            (Checkpoint::Rdrn(m), r)
        }
        Checkpoint::Mlp(m) => {
            let (m, r) = train(m, train_data, val_data, config)?;
            (Checkpoint::Mlp(m), r)
        }
    })
}

fn with_model<T>(
    ckpt: &Checkpoint,
    f: impl FnOnce(&dyn DynModel) -> Result<T, CliError>,
) -> Result<T, CliError> {
    match ckpt {
        Checkpoint::Drn(m) => f(m),
        Checkpoint::Rdrn(m) => f(m),
        Checkpoint::Mlp(m) => f(m),
    }
}

/// Object-safe façade over [`Model`] for checkpoint dispatch.
pub trait DynModel {
    fn predict_dyn(
        &self,
        inputs: &[Vec<drn::dist::BinnedDistribution>],
    ) -> Result<drn::dist::BinnedDistribution, drn::train::TrainError>;
}

impl<M: Model> DynModel for M {
    fn predict_dyn(
        &self,
        inputs: &[Vec<drn::dist::BinnedDistribution>],
    ) -> Result<drn::dist::BinnedDistribution, drn::train::TrainError> {
        self.predict(inputs)
    }
}

/// Mean test metrics of a checkpoint, dispatching on its family.
pub fn eval_checkpoint(
    ckpt: &Checkpoint,
    data: &Dataset,
) -> Result<drn::train::EvalMetrics, CliError> {
    Ok(match ckpt {
        Checkpoint::Drn(m) => evaluate(m, data)?,
        Checkpoint::Rdrn(m) => evaluate(m, data)?,
        Checkpoint::Mlp(m) => evaluate(m, data)?,
    })
}

pub struct TrainOutcome {
    pub report: TrainReport,
    /// Training objective of the returned (best-validation) model.
    pub train_loss: f64,
    /// Mean JSD of the returned model on the training set.
    pub train_jsd: f64,
}

/// End-to-end training step shared by `train` and `sweep`: loads nothing,
/// trains the given model and reports losses of the best snapshot.
pub fn fit(
    kind: ModelKind,
    arch: &str,
    train_data: &Dataset,
    val_data: &Dataset,
    config: &TrainConfig,
) -> Result<(Checkpoint, TrainOutcome), CliError> {
    if train_data.support() != val_data.support()
        || train_data.time_steps() != val_data.time_steps()
        || train_data.inputs_per_step() != val_data.inputs_per_step()
    {
        return Err(CliError::Runtime(
            "training and validation datasets have different shapes or supports".into(),
        ));
    }
    let model = build_model(kind, arch, train_data, config)?;
    let (best, report) = train_checkpoint(model, train_data, val_data, config)?;
    let (train_loss, train_jsd) = match &best {
        Checkpoint::Drn(m) => (batch_loss(m, train_data)?, dataset_loss(m, train_data)?),
        Checkpoint::Rdrn(m) => (batch_loss(m, train_data)?, dataset_loss(m, train_data)?),
        Checkpoint::Mlp(m) => (batch_loss(m, train_data)?, dataset_loss(m, train_data)?),
    };
    Ok((best, TrainOutcome { report, train_loss, train_jsd }))
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_train(
    kind: ModelKind,
    arch: &str,
    train_path: &Path,
    val_path: &Path,
    history: Option<usize>,
    config: &TrainConfig,
    out_dir: &Path,
) -> Result<(), CliError> {
    let mut train_data = load_dataset(train_path)?;
    let mut val_data = load_dataset(val_path)?;
    if let Some(h) = history {
        train_data = train_data.truncate_history(h);
        val_data = val_data.truncate_history(h);
    }
    std::fs::create_dir_all(out_dir)?;
    let (best, outcome) = fit(kind, arch, &train_data, &val_data, config)?;

    save_checkpoint(&best, out_dir.join("model.ckpt"))?;
    let mut report_file = std::fs::File::create(out_dir.join("report.csv"))?;
    outcome.report.write_csv(&mut report_file)?;
    let mut extra = vec![
        ("model", kind.name().to_string()),
        ("arch", arch.to_string()),
        ("train", train_path.display().to_string()),
        ("val", val_path.display().to_string()),
    ];
    if let Some(h) = history {
        extra.push(("history", h.to_string()));
    }
    std::fs::write(out_dir.join("config.txt"), render_resolved(config, &extra))?;
    let summary = format!(
        "param_count = {}\nbest_epoch = {}\nbest_val_loss = {}\ntrain_loss = {}\n\
         train_jsd = {}\nwall_clock_secs = {}\n",
        outcome.report.param_count,
        outcome.report.best_epoch,
        outcome.report.best_val_loss,
        outcome.train_loss,
        outcome.train_jsd,
        outcome.report.wall_clock_secs,
    );
    std::fs::write(out_dir.join("summary.txt"), &summary)?;
    println!(
        "trained {} ({} params) for {} epochs: best val loss {:.6} at epoch {}",
        kind.name(),
        outcome.report.param_count,
        outcome.report.history.len(),
        outcome.report.best_val_loss,
        outcome.report.best_epoch,
    );
    println!("artifacts in {}", out_dir.display());
    Ok(())
}

fn parse_metric_list(metrics: &str) -> Result<Vec<String>, CliError> {
    let list: Vec<String> =
        metrics.split(',').map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect();
    if list.is_empty() {
        return Err(CliError::Usage("metric list is empty".into()));
    }
    for m in &list {
        if !matches!(m.as_str(), "jsd" | "l2" | "nll") {
            return Err(CliError::Usage(format!("unknown metric {m:?}")));
        }
    }
    Ok(list)
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    MetricSummary { mean, std_error: (var / n).sqrt() }
}

/// One whitespace-separated row of held-out draws per dataset sample, used
/// for the negative-log-likelihood metric.
fn load_sample_rows(path: &Path, expected: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            line.split_whitespace()
                .map(|v| {
                    v.parse().map_err(|_| {
                        CliError::Runtime(format!("bad sample value {v:?} in {}", path.display()))
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if rows.len() != expected {
        return Err(CliError::Runtime(format!(
            "sample file has {} rows, dataset has {} samples",
            rows.len(),
            expected
        )));
    }
    Ok(rows)
}

pub fn cmd_eval(
    ckpt_path: &Path,
    data_path: &Path,
    metrics: &str,
    history: Option<usize>,
    samples_path: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let metrics = parse_metric_list(metrics)?;
    let ckpt = drn::ckpt::load_checkpoint(ckpt_path)?;
    let mut data = load_dataset(data_path)?;
    if let Some(h) = history {
        data = data.truncate_history(h);
    }
    if data.support() != Some(ckpt.support()) {
        return Err(CliError::Runtime(
            "checkpoint and dataset supports do not match".into(),
        ));
    }
    if metrics.iter().any(|m| m == "nll") && samples_path.is_none() {
        return Err(CliError::Usage(
            "the nll metric needs --samples with held-out draws".into(),
        ));
    }

    let mut summaries: Vec<(String, MetricSummary)> = Vec::new();
    for metric in &metrics {
        let summary = match metric.as_str() {
            "jsd" | "l2" => {
                let mut values = Vec::with_capacity(data.samples.len());
                for s in &data.samples {
                    let p = with_model(&ckpt, |m| Ok(m.predict_dyn(&s.inputs)?))?;
                    values.push(match metric.as_str() {
                        "jsd" => jsd(&p, &s.target)?,
                        _ => l2_distance(&p, &s.target)?,
                    });
                }
                summarize(&values)
            }
            _ => {
                let rows = load_sample_rows(samples_path.unwrap(), data.samples.len())?;
                let mut values = Vec::with_capacity(data.samples.len());
                for (s, row) in data.samples.iter().zip(&rows) {
                    let p = with_model(&ckpt, |m| Ok(m.predict_dyn(&s.inputs)?))?;
                    values.push(nll(&p, row)?);
                }
                summarize(&values)
            }
        };
        println!("{metric}: {} ± {}", summary.mean, summary.std_error);
        summaries.push((metric.clone(), summary));
    }

    if let Some(out) = out {
        let mut file = std::fs::File::create(out)?;
        let header: Vec<&str> = summaries.iter().map(|(m, _)| m.as_str()).collect();
        writeln!(file, "{}", header.join(","))?;
        let means: Vec<String> = summaries.iter().map(|(_, s)| s.mean.to_string()).collect();
        writeln!(file, "{}", means.join(","))?;
        let ses: Vec<String> =
            summaries.iter().map(|(_, s)| s.std_error.to_string()).collect();
        writeln!(file, "{}", ses.join(","))?;
    }
    Ok(())
}

pub fn cmd_check(suite: &str, seed: u64) -> Result<(), CliError> {
    let results = run_suite(suite, seed).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown suite {suite:?}, expected props, gradcheck, oracle or all"
        ))
    })?;
    let mut all_passed = true;
    for r in &results {
        let verdict = if r.passed() { "pass" } else { "FAIL" };
        println!(
            "{:<42} max error {:>12.4e}  tolerance {:>9.1e}  {}",
            r.name, r.max_error, r.tolerance, verdict
        );
        all_passed &= r.passed();
    }
    if all_passed {
        println!("{} checks passed", results.len());
        Ok(())
    } else {
        Err(CliError::CheckFailure)
    }
}
