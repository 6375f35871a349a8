//! JSON run reports. Blocks are 1-based in every external format.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mip_core::Subset;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::InputKind;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum InputDescriptor {
    File {
        path: PathBuf,
        kind: InputKind,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
    },
    Generator {
        name: String,
        params: BTreeMap<String, f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub version: String,
    pub command: String,
    pub method: String,
    /// False for heuristics such as the greedy hierarchical split.
    pub optimal: bool,
    pub input: InputDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub blocks: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_labels: Option<Vec<Vec<String>>>,
    /// Bits.
    pub loss: f64,
    pub oracle_calls: u64,
    /// Seconds.
    pub wall_time: f64,
    pub jitter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub struct ReportBuilder {
    pub command: &'static str,
    pub method: &'static str,
    pub optimal: bool,
    pub input: InputDescriptor,
    pub labels: Option<Vec<String>>,
    pub jitter: f64,
    pub seed: Option<u64>,
}

impl ReportBuilder {
    pub fn finish(self, blocks: &[Subset], loss: f64, oracle_calls: u64, wall_time: f64) -> RunReport {
        let blocks = one_based(blocks);
        let block_labels = self
            .labels
            .as_ref()
            .map(|l| blocks.iter().map(|b| b.iter().map(|&i| l[i - 1].clone()).collect()).collect());
        RunReport {
            schema: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            method: self.method.to_string(),
            optimal: self.optimal,
            input: self.input,
            labels: self.labels,
            blocks,
            block_labels,
            loss,
            oracle_calls,
            wall_time,
            jitter: self.jitter,
            seed: self.seed,
        }
    }
}

pub fn one_based(blocks: &[Subset]) -> Vec<Vec<usize>> {
    blocks.iter().map(|b| b.iter().map(|i| i + 1).collect()).collect()
}

impl RunReport {
    /// Blocks as 0-based subsets of a ground set of size `n`.
    pub fn subsets(&self, n: usize) -> CliResult<Vec<Subset>> {
        self.blocks
            .iter()
            .map(|b| {
                if b.contains(&0) {
                    return Err(CliError::input("block labels are 1-based"));
                }
                Ok(Subset::from_indices(n, b.iter().map(|i| i - 1))?)
            })
            .collect()
    }

    pub fn to_json(&self) -> CliResult<String> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::input(format!("unsupported report schema {}", self.schema)));
        }
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> CliResult<Self> {
        let r: RunReport = serde_json::from_str(s)?;
        if r.schema != SCHEMA_VERSION {
            return Err(CliError::input(format!("unsupported report schema {}", r.schema)));
        }
        Ok(r)
    }
}
