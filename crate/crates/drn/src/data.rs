//! Synthetic dataset generators and dataset serialization.
//!
//! Two generators mirror the desk-scale experiments: a Gaussian whose mean
//! shifts sinusoidally over time, and an Ornstein-Uhlenbeck heat-flux model
//! whose closed-form moments drive Gaussian snapshots. A degradation pass
//! replaces every distribution by a finite-sample histogram to study
//! robustness to sampling noise, and a CSV loader builds distributions from
//! grouped raw samples via kernel density estimation.

use crate::dist::{
    histogram_rebin, kde, Bandwidth, BinnedDistribution, DistError, Support,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

/// OU diffusion coefficient of the heat-flux model.
pub const OU_DIFFUSION: f64 = 0.0013;
/// OU drift coefficient of the heat-flux model.
pub const OU_DRIFT: f64 = 2.86;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset file at line {line}: {reason}")]
    MalformedDataset { line: usize, reason: String },
    #[error("malformed csv at record {record}: {reason}")]
    MalformedCsv { record: usize, reason: String },
    #[error("csv group {0} has no usable values")]
    EmptyGroup(String),
    #[error("csv value {0} lies outside the support")]
    ValueOutOfSupport(f64),
    #[error("variance underflow: OU moments at t = 0 define a point mass")]
    VarianceUnderflow,
    #[error("dataset has no samples")]
    EmptyDataset,
}

/// `T` time steps of `K` input distributions plus one target distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSample {
    /// Time-major: `inputs[t]` holds the `K` distributions of step `t`.
    pub inputs: Vec<Vec<BinnedDistribution>>,
    pub target: BinnedDistribution,
}

/// Generator provenance carried in the dataset file header.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub generator: String,
    pub seed: u64,
    pub params: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<SequenceSample>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn support(&self) -> Option<Support> {
        self.samples.first().map(|s| s.target.support())
    }

    pub fn time_steps(&self) -> usize {
        self.samples.first().map_or(0, |s| s.inputs.len())
    }

    pub fn inputs_per_step(&self) -> usize {
        self.samples.first().map_or(0, |s| s.inputs[0].len())
    }

    /// Keeps only the `history` most recent time steps of every sample.
    pub fn truncate_history(&self, history: usize) -> Dataset {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let t = s.inputs.len();
                let start = t.saturating_sub(history);
                SequenceSample { inputs: s.inputs[start..].to_vec(), target: s.target.clone() }
            })
            .collect();
        Dataset { samples, meta: self.meta.clone() }
    }
}

/// Mean of the shifting-Gaussian task at time `t`: `0.5 + 0.3·sin(t)`,
/// covering the range `[0.2, 0.8]`.
pub fn shifting_gaussian_mean(t: f64) -> f64 {
    0.5 + 0.3 * t.sin()
}

/// Generates the shifting-Gaussian task: per sample a phase is drawn from
/// `[0, 2π)`, the `T` inputs are Gaussians at times spaced `dt` apart and the
/// target sits one further step ahead. Support is `[0, 1]` with 100 bins.
pub fn gen_shifting_gaussian(
    n_data: usize,
    t_steps: usize,
    dt: f64,
    variance: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    let support = Support::new(0.0, 1.0, 100)?;
    let mut samples = Vec::with_capacity(n_data);
    for _ in 0..n_data {
        let phase: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        let mut inputs = Vec::with_capacity(t_steps);
        for step in 0..t_steps {
            let mu = shifting_gaussian_mean(phase + step as f64 * dt);
            inputs.push(vec![BinnedDistribution::gaussian(mu, variance, support)?]);
        }
        let mu = shifting_gaussian_mean(phase + t_steps as f64 * dt);
        let target = BinnedDistribution::gaussian(mu, variance, support)?;
        samples.push(SequenceSample { inputs, target });
    }
    let meta = DatasetMeta {
        generator: "shifting-gaussian".into(),
        seed,
        params: vec![
            ("T".into(), t_steps.to_string()),
            ("dt".into(), dt.to_string()),
            ("variance".into(), variance.to_string()),
        ],
    };
    Ok(Dataset { samples, meta })
}

/// Closed-form OU moments: mean `y·exp(-θt)` and variance
/// `D(1 - exp(-2θt))/θ` with the heat-flux constants.
pub fn ou_moments(y: f64, t: f64) -> (f64, f64) {
    let mu = y * (-OU_DRIFT * t).exp();
    let var = OU_DIFFUSION * (1.0 - (-2.0 * OU_DRIFT * t).exp()) / OU_DRIFT;
    (mu, var)
}

fn ou_distribution(y: f64, t: f64, support: Support) -> Result<BinnedDistribution, DataError> {
    let (mu, var) = ou_moments(y, t);
    if var <= 0.0 {
        return Err(DataError::VarianceUnderflow);
    }
    Ok(BinnedDistribution::gaussian(mu, var, support)?)
}

/// Generates the climate-OU task: five input snapshots at
/// `t0-4δ … t0` (δ = 0.001) and a target at `t0+0.02`, with
/// `y ~ U(0.02, 0.09)` and `t0 ~ U(0.01, 0.05)`, on support `[-0.01, 0.1]`
/// with 100 bins. Returns `(train, test)`.
pub fn gen_climate_ou(
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    let support = Support::new(-0.01, 0.1, 100)?;
    let delta_t = 0.001;
    let mut make = |n: usize, tag: &str| -> Result<Dataset, DataError> {
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let y = 0.02 + rng.gen::<f64>() * 0.07;
            let t0 = 0.01 + rng.gen::<f64>() * 0.04;
            let mut inputs = Vec::with_capacity(5);
            for step in 0..5 {
                let t = t0 - (4 - step) as f64 * delta_t;
                inputs.push(vec![ou_distribution(y, t, support)?]);
            }
            let target = ou_distribution(y, t0 + 0.02, support)?;
            samples.push(SequenceSample { inputs, target });
        }
        Ok(Dataset {
            samples,
            meta: DatasetMeta {
                generator: "climate-ou".into(),
                seed,
                params: vec![("split".into(), tag.into())],
            },
        })
    };
    let train = make(n_train, "train")?;
    let test = make(n_test, "test")?;
    Ok((train, test))
}

/// Replaces every distribution in the dataset by the histogram of `n_samples`
/// draws from it, simulating data observed through finite sampling.
pub fn degrade_with_sampling(
    data: &Dataset,
    n_samples: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    let degrade =
        |d: &BinnedDistribution, rng: &mut ChaCha8Rng| -> Result<BinnedDistribution, DataError> {
        let xs = d.sample(n_samples, rng);
        Ok(histogram_rebin(&xs, d.support())?)
    };
    let mut samples = Vec::with_capacity(data.samples.len());
    for s in &data.samples {
        let mut inputs = Vec::with_capacity(s.inputs.len());
        for step in &s.inputs {
            let mut row = Vec::with_capacity(step.len());
            for d in step {
                row.push(degrade(d, rng)?);
            }
            inputs.push(row);
        }
        let target = degrade(&s.target, rng)?;
        samples.push(SequenceSample { inputs, target });
    }
    let mut meta = data.meta.clone();
    meta.params.push(("n_samples".into(), n_samples.to_string()));
    Ok(Dataset { samples, meta })
}

/// Reads a CSV with a header row, groups the rows by `group_column` in order
/// of first appearance and turns each group's `value_column` values into a
/// distribution via kernel density estimation.
pub fn load_csv_samples<P: AsRef<Path>>(
    path: P,
    support: Support,
    group_column: &str,
    value_column: &str,
    bandwidth: Bandwidth,
) -> Result<Vec<(String, BinnedDistribution)>, DataError> {
    let mut reader = csv::Reader::from_path(path.as_ref())
        .map_err(|e| DataError::MalformedCsv { record: 0, reason: e.to_string() })?;
    let headers = reader
        .headers()
        .map_err(|e| DataError::MalformedCsv { record: 0, reason: e.to_string() })?
        .clone();
    let gcol = headers
        .iter()
        .position(|h| h == group_column)
        .ok_or_else(|| DataError::MalformedCsv {
            record: 0,
            reason: format!("no column named {group_column}"),
        })?;
    let vcol = headers
        .iter()
        .position(|h| h == value_column)
        .ok_or_else(|| DataError::MalformedCsv {
            record: 0,
            reason: format!("no column named {value_column}"),
        })?;
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<f64>> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| DataError::MalformedCsv { record: i + 1, reason: e.to_string() })?;
        let group = record.get(gcol).unwrap_or("").to_string();
        let raw = record.get(vcol).unwrap_or("");
        let value: f64 = raw.parse().map_err(|_| DataError::MalformedCsv {
            record: i + 1,
            reason: format!("value {raw:?} in column {value_column} is not a number"),
        })?;
        if value < support.lower() || value > support.upper() {
            return Err(DataError::ValueOutOfSupport(value));
        }
        if !groups.contains_key(&group) {
            order.push(group.clone());
        }
        groups.entry(group).or_default().push(value);
    }
    let mut out = Vec::with_capacity(order.len());
    for group in order {
        let values = &groups[&group];
        if values.is_empty() {
            return Err(DataError::EmptyGroup(group));
        }
        let d = kde(values, support, bandwidth)?;
        out.push((group, d));
    }
    Ok(out)
}

const DATASET_MAGIC: &str = "DRNDATA v1";

/// Serializes a dataset to the line-oriented text format:
/// a `DRNDATA v1` magic line, `support`, `shape` and `meta` header lines,
/// then `T·K+1` mass rows per sample (inputs time-major, node-minor; target
/// last), each row `q` space-separated decimals.
pub fn write_dataset<W: Write>(data: &Dataset, out: &mut W) -> Result<(), DataError> {
    let support = data.support().ok_or(DataError::EmptyDataset)?;
    writeln!(out, "{DATASET_MAGIC}")?;
    writeln!(out, "support {} {} {}", support.lower(), support.upper(), support.q())?;
    writeln!(
        out,
        "shape {} {} {}",
        data.samples.len(),
        data.time_steps(),
        data.inputs_per_step()
    )?;
    let mut meta_line = format!("meta {} {}", data.meta.generator, data.meta.seed);
    for (k, v) in &data.meta.params {
        write!(meta_line, " {k}={v}").unwrap();
    }
    writeln!(out, "{meta_line}")?;
    let mut row = String::new();
    let mut write_row = |out: &mut W, d: &BinnedDistribution| -> Result<(), DataError> {
        row.clear();
        for (i, m) in d.mass().iter().enumerate() {
            if i > 0 {
                row.push(' ');
            }
            write!(row, "{m}").unwrap();
        }
        writeln!(out, "{row}")?;
        Ok(())
    };
    for s in &data.samples {
        for step in &s.inputs {
            for d in step {
                write_row(out, d)?;
            }
        }
        write_row(out, &s.target)?;
    }
    Ok(())
}

pub fn save_dataset<P: AsRef<Path>>(data: &Dataset, path: P) -> Result<(), DataError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dataset(data, &mut file)
}

/// Parses the dataset text format. Rejects mass rows whose sum deviates from
/// one by more than `1e-6`.
pub fn read_dataset<R: Read>(input: R) -> Result<Dataset, DataError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();
    let mut next_line = |expect: &str| -> Result<(usize, String), DataError> {
        match lines.next() {
            Some((i, Ok(line))) => Ok((i + 1, line)),
            Some((i, Err(e))) => {
                Err(DataError::MalformedDataset { line: i + 1, reason: e.to_string() })
            }
            None => Err(DataError::MalformedDataset {
                line: 0,
                reason: format!("unexpected end of file, expected {expect}"),
            }),
        }
    };
    let (lno, magic) = next_line("magic header")?;
    if magic.trim() != DATASET_MAGIC {
        return Err(DataError::MalformedDataset {
            line: lno,
            reason: format!("bad magic {magic:?}"),
        });
    }
    let (lno, sup_line) = next_line("support line")?;
    let parts: Vec<&str> = sup_line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "support" {
        return Err(DataError::MalformedDataset { line: lno, reason: "bad support line".into() });
    }
    let parse_f = |s: &str, lno: usize| -> Result<f64, DataError> {
        s.parse().map_err(|_| DataError::MalformedDataset {
            line: lno,
            reason: format!("not a number: {s:?}"),
        })
    };
    let lower = parse_f(parts[1], lno)?;
    let upper = parse_f(parts[2], lno)?;
    let q: usize = parts[3].parse().map_err(|_| DataError::MalformedDataset {
        line: lno,
        reason: "bad bin count".into(),
    })?;
    let support = Support::new(lower, upper, q)?;
    let (lno, shape_line) = next_line("shape line")?;
    let parts: Vec<&str> = shape_line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "shape" {
        return Err(DataError::MalformedDataset { line: lno, reason: "bad shape line".into() });
    }
    let parse_u = |s: &str| -> Result<usize, DataError> {
        s.parse().map_err(|_| DataError::MalformedDataset {
            line: lno,
            reason: format!("not a count: {s:?}"),
        })
    };
    let n_samples = parse_u(parts[1])?;
    let t_steps = parse_u(parts[2])?;
    let k_nodes = parse_u(parts[3])?;
    if t_steps == 0 || k_nodes == 0 {
        return Err(DataError::MalformedDataset { line: lno, reason: "shape must be ≥ 1".into() });
    }
    let (lno, meta_line) = next_line("meta line")?;
    let mut meta_parts = meta_line.split_whitespace();
    if meta_parts.next() != Some("meta") {
        return Err(DataError::MalformedDataset { line: lno, reason: "bad meta line".into() });
    }
    let generator = meta_parts
        .next()
        .ok_or(DataError::MalformedDataset { line: lno, reason: "missing generator".into() })?
        .to_string();
    let seed: u64 = meta_parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or(DataError::MalformedDataset { line: lno, reason: "missing seed".into() })?;
    let params = meta_parts
        .map(|kv| match kv.split_once('=') {
            Some((k, v)) => Ok((k.to_string(), v.to_string())),
            None => Err(DataError::MalformedDataset {
                line: lno,
                reason: format!("meta entry {kv:?} is not key=value"),
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut read_row = |expect: &str| -> Result<BinnedDistribution, DataError> {
        let (lno, line) = next_line(expect)?;
        let mass = line
            .split_whitespace()
            .map(|s| parse_f(s, lno))
            .collect::<Result<Vec<f64>, _>>()?;
        if mass.len() != q {
            return Err(DataError::MalformedDataset {
                line: lno,
                reason: format!("row has {} values, expected {q}", mass.len()),
            });
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(DataError::MalformedDataset {
                line: lno,
                reason: format!("mass row sums to {total}, not 1"),
            });
        }
        Ok(BinnedDistribution::from_validated_mass(mass, support)?)
    };
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut inputs = Vec::with_capacity(t_steps);
        for _ in 0..t_steps {
            let mut row = Vec::with_capacity(k_nodes);
            for _ in 0..k_nodes {
                row.push(read_row("input mass row")?);
            }
            inputs.push(row);
        }
        let target = read_row("target mass row")?;
        samples.push(SequenceSample { inputs, target });
    }
    Ok(Dataset { samples, meta: DatasetMeta { generator, seed, params } })
}

pub fn load_dataset<P: AsRef<Path>>(path: P) -> Result<Dataset, DataError> {
    read_dataset(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::jsd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ou_moment_examples() {
        let (mu, var) = ou_moments(0.07, 0.0);
        assert_eq!(mu, 0.07);
        assert_eq!(var, 0.0);
        let (mu, var) = ou_moments(0.07, 1e9);
        assert!(mu.abs() < 1e-12);
        assert!((var - OU_DIFFUSION / OU_DRIFT).abs() < 1e-12);
        assert!((OU_DIFFUSION / OU_DRIFT - 4.545e-4).abs() < 1e-6);
        // y = 0.05, t = 0.02
        let (mu, var) = ou_moments(0.05, 0.02);
        assert!((mu - 0.05 * (-2.86f64 * 0.02).exp()).abs() < 1e-15);
        assert!((mu - 0.047220).abs() < 1e-6);
        assert!((var - 4.9137e-5).abs() < 1e-8);
    }

    #[test]
    fn shifting_gaussian_means_stay_in_range() {
        let data = gen_shifting_gaussian(50, 3, 0.2, 0.1, 1).unwrap();
        assert_eq!(data.samples.len(), 50);
        assert_eq!(data.time_steps(), 3);
        assert_eq!(data.inputs_per_step(), 1);
        for t in [0.0f64, 1.0, std::f64::consts::FRAC_PI_2, 4.0] {
            let mu = shifting_gaussian_mean(t);
            assert!((0.2..=0.8).contains(&mu));
        }
        assert!((shifting_gaussian_mean(std::f64::consts::FRAC_PI_2) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let gen = |seed: u64| gen_shifting_gaussian(10, 3, 0.2, 0.1, seed).unwrap();
        assert_eq!(gen(5), gen(5));
        assert_ne!(gen(5).samples, gen(6).samples);
    }

    #[test]
    fn climate_variances_increase_along_inputs() {
        let (train, test) = gen_climate_ou(20, 30, 2).unwrap();
        assert_eq!(train.samples.len(), 20);
        assert_eq!(test.samples.len(), 30);
        assert_eq!(train.time_steps(), 5);
        // variance of OU snapshots grows with t, so later inputs are flatter;
        // compare peak masses as a monotonicity proxy
        for s in &train.samples {
            let peaks: Vec<f64> = s
                .inputs
                .iter()
                .map(|step| step[0].mass().iter().cloned().fold(0.0, f64::max))
                .collect();
            for w in peaks.windows(2) {
                assert!(w[1] < w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn degrade_with_many_samples_is_close() {
        let data = gen_shifting_gaussian(5, 3, 0.2, 0.1, 3).unwrap();
        let degraded = degrade_with_sampling(&data, 1_000_000, 30).unwrap();
        let mut acc = 0.0;
        let mut count = 0;
        for (a, b) in data.samples.iter().zip(&degraded.samples) {
            acc += jsd(&a.target, &b.target).unwrap();
            count += 1;
        }
        assert!(acc / (count as f64) < 0.01);
    }

    #[test]
    fn degrade_single_sample_gives_point_mass() {
        let data = gen_shifting_gaussian(3, 2, 0.2, 0.1, 4).unwrap();
        let degraded = degrade_with_sampling(&data, 1, 40).unwrap();
        for s in &degraded.samples {
            let nonzero = s.target.mass().iter().filter(|&&m| m > 0.0).count();
            assert_eq!(nonzero, 1);
        }
    }

    #[test]
    fn dataset_roundtrips_through_text_format() {
        let data = gen_shifting_gaussian(4, 3, 0.2, 0.1, 9).unwrap();
        let mut buf = Vec::new();
        write_dataset(&data, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn reader_rejects_bad_mass_sums() {
        let text = "DRNDATA v1\nsupport 0 1 2\nshape 1 1 1\nmeta test 0\n0.9 0.2\n0.5 0.5\n";
        let err = read_dataset(text.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::MalformedDataset { line: 5, .. }));
    }

    #[test]
    fn history_truncation_keeps_most_recent_steps() {
        let (train, _) = gen_climate_ou(3, 1, 5).unwrap();
        let cut = train.truncate_history(3);
        assert_eq!(cut.time_steps(), 3);
        for (a, b) in train.samples.iter().zip(&cut.samples) {
            assert_eq!(&a.inputs[2..], &b.inputs[..]);
            assert_eq!(a.target, b.target);
        }
    }

    #[test]
    fn csv_kde_loader_groups_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vals.csv");
        std::fs::write(&path, "date,ret\nb,0.5\na,0.4\nb,0.6\n").unwrap();
        let support = Support::new(0.0, 1.0, 50).unwrap();
        let out =
            load_csv_samples(&path, support, "date", "ret", Bandwidth::Fixed(0.05)).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].0, "b");
        assert_eq!(out[1].0, "a");
        let single = kde(&[0.4], support, Bandwidth::Fixed(0.05)).unwrap();
        assert_eq!(out[1].1, single);
    }

    #[test]
    fn csv_kde_recovers_gaussian_from_samples() {
        let support = Support::new(-5.0, 5.0, 100).unwrap();
        let g = BinnedDistribution::gaussian(0.0, 1.0, support).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs = g.sample(1000, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let mut text = String::from("day,x\n");
        for x in &xs {
            text.push_str(&format!("d0,{x}\n"));
        }
        std::fs::write(&path, text).unwrap();
        let out = load_csv_samples(&path, support, "day", "x", Bandwidth::Auto).unwrap();
        assert!(jsd(&g, &out[0].1).unwrap() < 0.02);
    }

    #[test]
    fn csv_loader_reports_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "date,ret\na,oops\n").unwrap();
        let support = Support::new(0.0, 1.0, 50).unwrap();
        let err = load_csv_samples(&path, support, "date", "ret", Bandwidth::Auto).unwrap_err();
        assert!(matches!(err, DataError::MalformedCsv { record: 1, .. }));
        std::fs::write(&path, "date,ret\na,7.5\n").unwrap();
        let err = load_csv_samples(&path, support, "date", "ret", Bandwidth::Auto).unwrap_err();
        assert!(matches!(err, DataError::ValueOutOfSupport(_)));
    }
}
