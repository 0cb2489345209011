//! Run configurations and line-delimited JSON result records.
//!
//! Every record embeds the fully resolved configuration of the run that produced
//! it, so a record alone is enough to repeat the run.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::experiments::{PlateauOptions, SweepOptions};
use crate::graph::GraphFormat;
use crate::loss::LossForm;
use crate::solver::SolveOptions;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSource {
    pub path: String,
    pub format: GraphFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub graph: GraphSource,
    pub options: SolveOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauConfig {
    pub options: PlateauOptions,
    /// Instance size; the encoding capacity when generated from the CLI.
    pub m: usize,
    pub mean_degree: f64,
    pub instance_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub graph: GraphSource,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParentHamConfig {
    pub graph: GraphSource,
    pub k: usize,
    /// Random assignments to verify; 0 enumerates all of them.
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub m: usize,
    pub mean_degree: f64,
    pub seed: u64,
    pub out: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblateConfig {
    pub instances: usize,
    pub m: usize,
    pub mean_degree: f64,
    pub instance_seed: u64,
    pub forms: Vec<LossForm>,
    pub seeds: Vec<u64>,
    pub bins: usize,
    pub options: SolveOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub m_values: Vec<usize>,
    pub sweep: SweepOptions,
    pub options: SolveOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunConfig {
    Solve(SolveConfig),
    Plateau(PlateauConfig),
    Bound(BoundConfig),
    Parentham(ParentHamConfig),
    Gen(GenConfig),
    Ablate(AblateConfig),
    Sweep(SweepConfig),
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Solve(_) => "solve",
            RunConfig::Plateau(_) => "plateau",
            RunConfig::Bound(_) => "bound",
            RunConfig::Parentham(_) => "parentham",
            RunConfig::Gen(_) => "gen",
            RunConfig::Ablate(_) => "ablate",
            RunConfig::Sweep(_) => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub schema_version: u32,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub command: String,
    pub config: RunConfig,
    pub metrics: Value,
}

impl ResultRecord {
    pub fn new(config: RunConfig, metrics: Value) -> Self {
        ResultRecord {
            schema_version: SCHEMA_VERSION,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            command: config.command().to_string(),
            config,
            metrics,
        }
    }

    pub fn to_line(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::InvalidArgument(format!("record serialization: {e}")))
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let rec: ResultRecord =
            serde_json::from_str(line).map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
        if rec.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported record schema version {}",
                rec.schema_version
            )));
        }
        if rec.command != rec.config.command() {
            return Err(Error::InvalidArgument(format!(
                "record command `{}` does not match its config `{}`",
                rec.command,
                rec.config.command()
            )));
        }
        Ok(rec)
    }
}

/// Writes one record per line and flushes after each.
pub struct RecordWriter<W: Write> {
    out: W,
    written: usize,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(out: W) -> Self {
        RecordWriter { out, written: 0 }
    }

    pub fn write(&mut self, rec: &ResultRecord) -> Result<()> {
        writeln!(self.out, "{}", rec.to_line()?)?;
        self.out.flush()?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parse every non-blank line; errors carry the 1-based line number.
pub fn read_records<R: BufRead>(input: R) -> Result<Vec<ResultRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = ResultRecord::from_line(&line).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse { line: i + 1, message },
            other => other,
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::TrainConfig;

    fn solve_record() -> ResultRecord {
        let config = RunConfig::Solve(SolveConfig {
            graph: GraphSource {
                path: "g.txt".into(),
                format: GraphFormat::Gset,
            },
            options: SolveOptions {
                layers: Some(3),
                train: TrainConfig::default().with_seed(4),
                best_known: Some(12.0),
                ..SolveOptions::default()
            },
        });
        ResultRecord::new(config, serde_json::json!({"cut": 20.0, "ratio": 0.83}))
    }

    #[test]
    fn records_round_trip_through_lines() {
        let rec = solve_record();
        let mut w = RecordWriter::new(Vec::new());
        w.write(&rec).unwrap();
        w.write(&rec).unwrap();
        assert_eq!(w.written(), 2);
        let bytes = w.into_inner();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back = read_records(text.as_bytes()).unwrap();
        assert_eq!(back, vec![rec.clone(), rec]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let line = solve_record().to_line().unwrap();
        let mut v: Value = serde_json::from_str(&line).unwrap();
        v["config"]["solve"]["options"]["bogus"] = Value::from(1);
        assert!(ResultRecord::from_line(&v.to_string()).is_err());
        let mut v: Value = serde_json::from_str(&line).unwrap();
        v["extra"] = Value::from(1);
        assert!(ResultRecord::from_line(&v.to_string()).is_err());
    }

    #[test]
    fn version_and_command_are_checked() {
        let mut rec = solve_record();
        rec.schema_version = 2;
        assert!(ResultRecord::from_line(&rec.to_line().unwrap()).is_err());
        let mut rec = solve_record();
        rec.command = "gen".into();
        assert!(ResultRecord::from_line(&rec.to_line().unwrap()).is_err());
        let err = read_records("\n{not json}\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
