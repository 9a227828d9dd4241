use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use pairclust::clustering::{Clustering, FullGraph};
use pairclust::io::read_graph_jsonl;
use pairclust::oracle::generate_planted;
use pairclust::srra::SrraParams;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Srra,
    Uniform,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Srra => "SRRA",
            Method::Uniform => "UNIFORM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    /// Planted partition. Without a seed, every run seed draws its own instance.
    Planted {
        sizes: Vec<usize>,
        p: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// JSONL graph file with a `{"n", "k"}` header.
    GraphFile { path: PathBuf },
}

/// A realized instance: the graph plus the planted truth when there is one.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: FullGraph,
    pub k: usize,
    pub truth: Option<Clustering>,
}

impl InstanceSpec {
    pub fn realize(&self, run_seed: u64) -> Result<Instance, HarnessError> {
        match self {
            InstanceSpec::Planted { sizes, p, seed } => {
                let inst = generate_planted(sizes, *p, seed.unwrap_or(run_seed))?;
                Ok(Instance {
                    k: inst.k(),
                    graph: inst.graph,
                    truth: Some(inst.truth),
                })
            }
            InstanceSpec::GraphFile { path } => {
                let (graph, header) = load_graph(path)?;
                Ok(Instance {
                    graph,
                    k: header.k,
                    truth: None,
                })
            }
        }
    }
}

pub fn load_graph(path: &Path) -> Result<(FullGraph, pairclust::io::GraphHeader), HarnessError> {
    let file = File::open(path)
        .map_err(|e| HarnessError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(read_graph_jsonl(BufReader::new(file))?)
}

fn default_t_max() -> usize {
    20
}

fn default_restarts() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub method: Method,
    /// Strictly increasing distinct-query budgets; one CSV row per budget and seed.
    pub budgets: Vec<usize>,
    /// Cluster count; defaults to the instance's.
    #[serde(default)]
    pub k: Option<usize>,
    /// Sampling parameters. UNIFORM runs use them for the reference run that
    /// sets their per-round pair counts.
    pub srra: SrraParams,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    #[serde(default)]
    pub improvement_floor: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub exact_argmin: bool,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Input(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Input(format!("bad config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.budgets.is_empty() {
            return Err(HarnessError::Input("no budgets given".into()));
        }
        if self.budgets[0] == 0 {
            return Err(HarnessError::Input("budgets must be positive".into()));
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Input("budgets must be strictly increasing".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Input("no seeds given".into()));
        }
        self.srra.validate()?;
        Ok(())
    }
}
