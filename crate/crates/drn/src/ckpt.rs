//! Self-describing text checkpoints for all three model families. The file
//! records the model kind, its architecture, the support and the flattened
//! parameter vector in full round-trip precision.

use crate::baseline::MlpParams;
use crate::dist::{DistError, Support};
use crate::net::{DrnNetwork, NetError, NetworkSpec};
use crate::rdrn::RdrnParams;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &str = "DRNCKPT v1";

#[derive(Debug, Error)]
pub enum CkptError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// A trained model of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Drn(DrnNetwork),
    Rdrn(RdrnParams),
    Mlp(MlpParams),
}

impl Checkpoint {
    pub fn kind(&self) -> &'static str {
        match self {
            Checkpoint::Drn(_) => "drn",
            Checkpoint::Rdrn(_) => "rdrn",
            Checkpoint::Mlp(_) => "mlp",
        }
    }

    pub fn support(&self) -> Support {
        match self {
            Checkpoint::Drn(n) => n.support(),
            Checkpoint::Rdrn(p) => p.support(),
            Checkpoint::Mlp(m) => m.support(),
        }
    }
}

pub fn write_checkpoint<W: Write>(ckpt: &Checkpoint, out: &mut W) -> Result<(), CkptError> {
    writeln!(out, "{MAGIC}")?;
    let support = ckpt.support();
    let params = match ckpt {
        Checkpoint::Drn(net) => {
            writeln!(out, "model drn")?;
            writeln!(out, "support {} {} {}", support.lower(), support.upper(), support.q())?;
            let sizes: Vec<String> =
                net.spec().layer_sizes().iter().map(|n| n.to_string()).collect();
            writeln!(out, "spec {}", sizes.join(" "))?;
            net.flatten()
        }
        Checkpoint::Rdrn(p) => {
            writeln!(out, "model rdrn")?;
            writeln!(out, "support {} {} {}", support.lower(), support.upper(), support.q())?;
            writeln!(out, "dims {} {}", p.n(), p.m())?;
            p.flatten()
        }
        Checkpoint::Mlp(m) => {
            writeln!(out, "model mlp")?;
            writeln!(out, "support {} {} {}", support.lower(), support.upper(), support.q())?;
            let dims: Vec<String> = m.dims().iter().map(|d| d.to_string()).collect();
            writeln!(out, "dims {}", dims.join(" "))?;
            use crate::train::Model;
            m.params()
        }
    };
    writeln!(out, "params {}", params.len())?;
    for v in params {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn save_checkpoint<P: AsRef<Path>>(ckpt: &Checkpoint, path: P) -> Result<(), CkptError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(ckpt, &mut file)
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<Checkpoint, CkptError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String), CkptError> {
        match lines.next() {
            Some((i, Ok(line))) => Ok((i + 1, line)),
            Some((i, Err(e))) => Err(CkptError::Parse { line: i + 1, reason: e.to_string() }),
            None => Err(CkptError::Parse {
                line: 0,
                reason: format!("unexpected end of file, expected {what}"),
            }),
        }
    };
    let (lno, magic) = next("magic header")?;
    if magic.trim() != MAGIC {
        return Err(CkptError::Parse { line: lno, reason: format!("bad magic {magic:?}") });
    }
    let (lno, model_line) = next("model line")?;
    let kind = model_line
        .strip_prefix("model ")
        .ok_or(CkptError::Parse { line: lno, reason: "expected model line".into() })?
        .trim()
        .to_string();
    let (lno, sup_line) = next("support line")?;
    let parts: Vec<&str> = sup_line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "support" {
        return Err(CkptError::Parse { line: lno, reason: "bad support line".into() });
    }
    let bad = |line: usize, reason: String| CkptError::Parse { line, reason };
    let lower: f64 =
        parts[1].parse().map_err(|_| bad(lno, format!("bad lower bound {:?}", parts[1])))?;
    let upper: f64 =
        parts[2].parse().map_err(|_| bad(lno, format!("bad upper bound {:?}", parts[2])))?;
    let q: usize = parts[3].parse().map_err(|_| bad(lno, "bad bin count".into()))?;
    let support = Support::new(lower, upper, q)?;

    let (lno, arch_line) = next("architecture line")?;
    let mut read_params = |expected: usize| -> Result<Vec<f64>, CkptError> {
        let (lno, count_line) = next("params line")?;
        let count: usize = count_line
            .strip_prefix("params ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or(bad(lno, "bad params line".into()))?;
        if count != expected {
            return Err(bad(lno, format!("checkpoint has {count} params, model needs {expected}")));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let (lno, line) = next("parameter value")?;
            values.push(
                line.trim()
                    .parse()
                    .map_err(|_| bad(lno, format!("bad parameter value {line:?}")))?,
            );
        }
        Ok(values)
    };

    match kind.as_str() {
        "drn" => {
            let sizes = arch_line
                .strip_prefix("spec ")
                .ok_or(bad(lno, "expected spec line".into()))?
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(lno, "bad layer size".into()))?;
            let spec = NetworkSpec::new(sizes)?;
            let mut net = DrnNetwork::zeros(spec, support);
            let params = read_params(net.count_params())?;
            net.unflatten(&params)?;
            Ok(Checkpoint::Drn(net))
        }
        "rdrn" => {
            let dims = arch_line
                .strip_prefix("dims ")
                .ok_or(bad(lno, "expected dims line".into()))?
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(lno, "bad dimension".into()))?;
            if dims.len() != 2 || dims[0] == 0 || dims[1] == 0 {
                return Err(bad(lno, "rdrn dims must be `n m`".into()));
            }
            let mut p = RdrnParams::zeros(dims[0], dims[1], support);
            let params = read_params(p.count_params())?;
            p.unflatten(&params)?;
            Ok(Checkpoint::Rdrn(p))
        }
        "mlp" => {
            let dims = arch_line
                .strip_prefix("dims ")
                .ok_or(bad(lno, "expected dims line".into()))?
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(lno, "bad dimension".into()))?;
            let mut m = MlpParams::zeros(dims, support)?;
            use crate::train::Model;
            let params = read_params(m.num_params())?;
            m.set_params(&params).map_err(|_| bad(lno, "parameter count mismatch".into()))?;
            Ok(Checkpoint::Mlp(m))
        }
        other => Err(bad(lno, format!("unknown model kind {other:?}"))),
    }
}

pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<Checkpoint, CkptError> {
    read_checkpoint(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::{init_drn, init_rdrn, TrainConfig};

    #[test]
    fn drn_checkpoint_roundtrip_is_exact() {
        let support = Support::new(0.0, 1.0, 10).unwrap();
        let spec = NetworkSpec::new(vec![3, 5, 1]).unwrap();
        let net = init_drn(spec, support, &TrainConfig { seed: 42, ..TrainConfig::default() });
        let ckpt = Checkpoint::Drn(net);
        let mut buf = Vec::new();
        write_checkpoint(&ckpt, &mut buf).unwrap();
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(ckpt, back);
    }

    #[test]
    fn rdrn_checkpoint_roundtrip_is_exact() {
        let support = Support::new(-0.01, 0.1, 10).unwrap();
        let p = init_rdrn(1, 5, support, &TrainConfig { seed: 9, ..TrainConfig::default() });
        let ckpt = Checkpoint::Rdrn(p);
        let mut buf = Vec::new();
        write_checkpoint(&ckpt, &mut buf).unwrap();
        assert_eq!(ckpt, read_checkpoint(buf.as_slice()).unwrap());
    }

    #[test]
    fn rejects_truncated_files() {
        let text = "DRNCKPT v1\nmodel drn\nsupport 0 1 10\nspec 1 1\nparams 5\n0.5\n";
        assert!(matches!(
            read_checkpoint(text.as_bytes()),
            Err(CkptError::Parse { .. })
        ));
    }
}
