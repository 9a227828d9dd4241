//! Labeling sessions: the pivot loop driven by a human who answers pair
//! queries one batch at a time.
//!
//! A session plans a round, exposes the pairs that round still needs (in
//! shuffled order), and runs the round as soon as the last one is answered.
//! The loop sees a caching oracle backed by the answers, so a session and an
//! in-process run over the same labels take identical steps.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use pairclust::clustering::{Clustering, PairKey};
use pairclust::optimizer::{ExperimentTrace, IterativeSearch, LoopConfig, RoundPlan, Sampler};
use pairclust::oracle::{LabelSource, PairLabel, PairOracle};
use pairclust::seed::{self, SeededRng};
use pairclust::srra::SrraParams;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::experiment::initial_clustering;
use crate::HarnessError;

const SHUFFLE_STREAM: u64 = 1;

fn default_epsilon() -> f64 {
    0.5
}

fn default_t_max() -> usize {
    10
}

fn default_restarts() -> usize {
    4
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub n: usize,
    pub k: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Sample size; the formula value when absent.
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default = "default_true")]
    pub exhaustive_when_covered: bool,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub improvement_floor: f64,
    #[serde(default)]
    pub seed: u64,
    /// Starting labels; random from the seed when absent.
    #[serde(default)]
    pub initial: Option<Vec<usize>>,
}

impl SessionConfig {
    pub fn new(n: usize, k: usize, q: usize, seed: u64) -> Self {
        SessionConfig {
            n,
            k,
            epsilon: default_epsilon(),
            q: Some(q),
            exhaustive_when_covered: true,
            t_max: default_t_max(),
            restarts: default_restarts(),
            improvement_floor: 0.0,
            seed,
            initial: None,
        }
    }

    pub fn loop_config(&self) -> Result<LoopConfig, HarnessError> {
        let params = SrraParams {
            epsilon: self.epsilon,
            c2: 1.0,
            q_override: self.q,
            exhaustive_when_covered: self.exhaustive_when_covered,
        };
        let config = LoopConfig {
            k: self.k,
            sampler: Sampler::Srra(params),
            t_max: self.t_max,
            improvement_floor: self.improvement_floor,
            restarts: self.restarts,
            seed: self.seed,
            exact_argmin: false,
            query_budget: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn initial_clustering(&self) -> Result<Clustering, HarnessError> {
        match &self.initial {
            Some(labels) => {
                if labels.len() != self.n {
                    return Err(HarnessError::Input(format!(
                        "initial clustering has {} labels, expected {}",
                        labels.len(),
                        self.n
                    )));
                }
                Ok(Clustering::new(labels.clone(), self.k)?)
            }
            None => initial_clustering(self.n, self.k, self.seed),
        }
    }
}

/// Labels answered so far. Unanswered pairs are unavailable.
#[derive(Debug, Default)]
pub struct AnsweredLabels {
    n: usize,
    answers: Mutex<BTreeMap<PairKey, PairLabel>>,
}

impl AnsweredLabels {
    fn insert(&self, pair: PairKey, label: PairLabel) {
        self.answers.lock().unwrap().insert(pair, label);
    }

    fn contains(&self, pair: PairKey) -> bool {
        self.answers.lock().unwrap().contains_key(&pair)
    }

    fn len(&self) -> usize {
        self.answers.lock().unwrap().len()
    }

    fn snapshot(&self) -> Vec<LabeledPair> {
        self.answers
            .lock()
            .unwrap()
            .iter()
            .map(|(p, &label)| LabeledPair {
                u: p.u(),
                v: p.v(),
                label,
            })
            .collect()
    }
}

impl LabelSource for AnsweredLabels {
    fn n(&self) -> usize {
        self.n
    }

    fn label(&self, pair: PairKey) -> pairclust::Result<PairLabel> {
        self.answers
            .lock()
            .unwrap()
            .get(&pair)
            .copied()
            .ok_or_else(|| {
                pairclust::Error::OracleUnavailable(format!(
                    "pair ({}, {}) has no answer yet",
                    pair.u(),
                    pair.v()
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub u: usize,
    pub v: usize,
    pub label: PairLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub iteration: usize,
    pub labels_collected: usize,
    pub current_clustering: Vec<usize>,
    pub finished: bool,
    pub stop_reason: Option<String>,
}

/// Everything needed to inspect or replay a session.
#[derive(Debug, Clone, Serialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub config: SessionConfig,
    pub state: SessionState,
    pub pending: Vec<PairKey>,
    pub answered: Vec<LabeledPair>,
    pub trace: ExperimentTrace,
}

pub struct LabelSession {
    id: String,
    config: SessionConfig,
    oracle: PairOracle<AnsweredLabels>,
    search: IterativeSearch,
    plan: Option<RoundPlan>,
    pending: Vec<PairKey>,
    rng: SeededRng,
}

impl LabelSession {
    pub fn new(id: String, config: SessionConfig) -> Result<Self, HarnessError> {
        let loop_config = config.loop_config()?;
        let initial = config.initial_clustering()?;
        let oracle = PairOracle::new(AnsweredLabels {
            n: config.n,
            answers: Mutex::default(),
        });
        let search = IterativeSearch::new(loop_config, initial, &oracle)?;
        let rng = seed::rng(seed::sub_seed(config.seed, SHUFFLE_STREAM));
        let mut session = LabelSession {
            id,
            config,
            oracle,
            search,
            plan: None,
            pending: Vec::new(),
            rng,
        };
        session.advance()?;
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Pairs the current round still needs. Empty once the loop has stopped.
    pub fn next_batch(&self) -> &[PairKey] {
        &self.pending
    }

    /// Records one answer. Returns the number of pairs still pending, which
    /// counts the next round's batch when this answer completed a round.
    pub fn submit(&mut self, pair: PairKey, label: PairLabel) -> Result<usize, HarnessError> {
        if pair.v() >= self.config.n {
            return Err(HarnessError::Protocol(format!(
                "pair ({}, {}) is outside 0..{}",
                pair.u(),
                pair.v(),
                self.config.n
            )));
        }
        let Some(i) = self.pending.iter().position(|&p| p == pair) else {
            let why = if self.oracle.source().contains(pair) {
                "already answered"
            } else {
                "not pending"
            };
            return Err(HarnessError::Protocol(format!(
                "pair ({}, {}) is {why}",
                pair.u(),
                pair.v()
            )));
        };
        self.pending.swap_remove(i);
        self.oracle.source().insert(pair, label);
        if self.pending.is_empty() {
            self.advance()?;
        }
        Ok(self.pending.len())
    }

    /// Runs every round whose pairs are all answered, then plans the next.
    fn advance(&mut self) -> Result<(), HarnessError> {
        loop {
            if let Some(plan) = self.plan.take() {
                if !self.search.complete_round(plan, &self.oracle)? {
                    return Ok(());
                }
            }
            let Some(plan) = self.search.next_round(self.oracle.distinct_queries())? else {
                return Ok(());
            };
            let source = self.oracle.source();
            let mut pending: Vec<PairKey> = plan
                .required_pairs()
                .into_iter()
                .filter(|&p| !source.contains(p))
                .collect();
            pending.sort_unstable();
            pending.shuffle(&mut self.rng);
            self.plan = Some(plan);
            self.pending = pending;
            if !self.pending.is_empty() {
                return Ok(());
            }
        }
    }

    pub fn finished(&self) -> bool {
        self.search.stopped().is_some()
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            iteration: self.search.iteration(),
            labels_collected: self.oracle.source().len(),
            current_clustering: self.search.pivot().labels().to_vec(),
            finished: self.finished(),
            stop_reason: self.search.stopped().map(|s| s.to_string()),
        }
    }

    pub fn trace(&self) -> &ExperimentTrace {
        self.search.trace()
    }

    pub fn distinct_queries(&self) -> usize {
        self.oracle.distinct_queries()
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            id: self.id.clone(),
            config: self.config.clone(),
            state: self.state(),
            pending: self.pending.clone(),
            answered: self.oracle.source().snapshot(),
            trace: self.trace().clone(),
        }
    }
}

/// In-memory session registry. Each session is locked independently, so
/// submits to one session serialize (first answer wins) without blocking
/// others.
#[derive(Default)]
pub struct SessionManager {
    sessions: RwLock<HashMap<String, Arc<Mutex<LabelSession>>>>,
}

impl SessionManager {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&self, config: SessionConfig) -> Result<String, HarnessError> {
        let id = uuid::Uuid::new_v4().to_string();
        let session = LabelSession::new(id.clone(), config)?;
        self.sessions
            .write()
            .unwrap()
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn with<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut LabelSession) -> Result<T, HarnessError>,
    ) -> Result<T, HarnessError> {
        let session = self
            .sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| HarnessError::NotFound(id.to_string()))?;
        let mut guard = session.lock().unwrap();
        f(&mut guard)
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
