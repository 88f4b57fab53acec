//! Offline tabular Q-learning over scheduling episodes, and the greedy policy
//! lookup used while factorizing.
//!
//! The table is keyed by a discretized [`StateKey`] and a fixed five-class
//! action alphabet; concrete edge sets are re-derived from the live task tree
//! at inference, so one table transfers across matrices. Training runs
//! against the virtual-clock simulator in [`sim`] by default, or against real
//! executions through the same [`EpisodeEnv`] interface.

pub mod sim;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::schedmdp::{
    enumerate_actions, featurize, Action, ActionKind, FeaturizerSpec, SchedulePolicy, StateKey,
    TaskTree,
};
use crate::sparse::CscMatrix;
use crate::symbolic::{analyze, AnalyzeOptions};

use sim::{SimConfig, SimEnv, SimProblem};

/// The policy's action alphabet. Concrete edge choices are recovered from the
/// live state by [`ActionClass::realize`]; the declaration order is the
/// tie-break order everywhere.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ActionClass {
    #[serde(rename = "delete-heaviest-1")]
    DeleteHeaviest1,
    #[serde(rename = "delete-heaviest-2")]
    DeleteHeaviest2,
    #[serde(rename = "delete-heaviest-3")]
    DeleteHeaviest3,
    #[serde(rename = "add-lightest-pair")]
    AddLightestPair,
    #[serde(rename = "skip")]
    Skip,
}

impl ActionClass {
    pub const ALL: [ActionClass; 5] = [
        ActionClass::DeleteHeaviest1,
        ActionClass::DeleteHeaviest2,
        ActionClass::DeleteHeaviest3,
        ActionClass::AddLightestPair,
        ActionClass::Skip,
    ];

    /// The concrete action this class stands for in state `s`, or None when
    /// the state cannot realize it (not enough eligible edges).
    pub fn realize(self, s: &TaskTree, cores: usize) -> Option<Action> {
        let candidates = enumerate_actions(s, cores);
        let pick = |kind: ActionKind, edges: usize| {
            candidates
                .iter()
                .find(|a| a.kind == kind && a.edges.len() == edges)
                .cloned()
        };
        match self {
            ActionClass::DeleteHeaviest1 => pick(ActionKind::Delete, 1),
            ActionClass::DeleteHeaviest2 => pick(ActionKind::Delete, 2),
            ActionClass::DeleteHeaviest3 => pick(ActionKind::Delete, 3),
            ActionClass::AddLightestPair => pick(ActionKind::Add, 1),
            ActionClass::Skip => Some(Action::skip()),
        }
    }
}

impl fmt::Display for ActionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ActionClass::DeleteHeaviest1 => "delete-heaviest-1",
            ActionClass::DeleteHeaviest2 => "delete-heaviest-2",
            ActionClass::DeleteHeaviest3 => "delete-heaviest-3",
            ActionClass::AddLightestPair => "add-lightest-pair",
            ActionClass::Skip => "skip",
        };
        f.write_str(name)
    }
}

/// Learning hyperparameters; `alpha` and `epsilon` are the episode-1 values
/// of their decay schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    /// Base learning rate, in (0, 1].
    pub alpha: f64,
    /// Discount, in [0, 1).
    pub gamma: f64,
    /// Base exploration rate, in [0, 1].
    pub epsilon: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            alpha: 0.2,
            gamma: 0.95,
            epsilon: 0.5,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::QTable(format!(
                "learning rate {} outside (0, 1]",
                self.alpha
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::QTable(format!(
                "discount {} outside [0, 1)",
                self.gamma
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon <= 1.0) {
            return Err(Error::QTable(format!(
                "exploration rate {} outside [0, 1]",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Which next-state value the TD target uses: the on-policy next action's
/// entry (the default) or the greedy maximum over available classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateTarget {
    #[default]
    Next,
    Max,
}

/// Learning rate at 1-based `episode`: `alpha / sqrt(1 + (episode-1)/scale)`.
pub fn alpha_at(alpha: f64, scale: f64, episode: usize) -> f64 {
    alpha / (1.0 + (episode - 1) as f64 / scale).sqrt()
}

/// Exploration rate at 1-based `episode` of `total`: linear decay from
/// `epsilon` down to a tenth of it.
pub fn epsilon_at(epsilon: f64, episode: usize, total: usize) -> f64 {
    if total <= 1 {
        return epsilon;
    }
    let t = (episode - 1) as f64 / (total - 1) as f64;
    epsilon * (1.0 - 0.9 * t)
}

/// The tabular action-value function, with the hyperparameters and bucket
/// definitions it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    entries: BTreeMap<(StateKey, ActionClass), f64>,
    pub hyper: Hyper,
    pub featurizer: FeaturizerSpec,
}

impl QTable {
    pub fn new(hyper: Hyper, featurizer: FeaturizerSpec) -> Result<QTable> {
        hyper.validate()?;
        Ok(QTable {
            entries: BTreeMap::new(),
            hyper,
            featurizer,
        })
    }

    /// Entry lookup; unseen pairs are 0, the initialization value.
    pub fn q(&self, s: StateKey, a: ActionClass) -> f64 {
        self.entries.get(&(s, a)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Whether any action of this state has been visited.
    pub fn knows(&self, s: StateKey) -> bool {
        self.entries
            .range((s, ActionClass::DeleteHeaviest1)..=(s, ActionClass::Skip))
            .next()
            .is_some()
    }

    /// Greedy class among `available`, ties broken by declaration order.
    /// `available` must be non-empty.
    pub fn greedy(&self, s: StateKey, available: &[ActionClass]) -> ActionClass {
        let mut sorted = available.to_vec();
        sorted.sort_unstable();
        let mut best = sorted[0];
        let mut best_q = self.q(s, best);
        for &a in &sorted[1..] {
            let q = self.q(s, a);
            if q > best_q {
                best = a;
                best_q = q;
            }
        }
        best
    }

    /// Fails unless the table was trained under exactly these buckets.
    pub fn require_featurizer(&self, expected: &FeaturizerSpec) -> Result<()> {
        if &self.featurizer != expected {
            return Err(Error::QTable(format!(
                "table trained under different state buckets ({:?} vs {:?})",
                self.featurizer, expected
            )));
        }
        Ok(())
    }
}

/// One temporal-difference update:
/// `Q(s,a) += alpha * (r + gamma * target - Q(s,a))` where `target` is the
/// next state's value per `UpdateTarget` (0 for terminal transitions, i.e.
/// `next = None`). Returns the updated entry.
pub fn q_update(
    q: &mut QTable,
    s: StateKey,
    a: ActionClass,
    r: f64,
    next: Option<(StateKey, &[ActionClass], ActionClass)>,
    alpha: f64,
    target: UpdateTarget,
) -> Result<f64> {
    if !r.is_finite() {
        return Err(Error::QTable(format!("non-finite reward {r}")));
    }
    let next_value = match next {
        None => 0.0,
        Some((s2, available, a2)) => match target {
            UpdateTarget::Next => q.q(s2, a2),
            UpdateTarget::Max => available
                .iter()
                .map(|&b| q.q(s2, b))
                .fold(f64::NEG_INFINITY, f64::max),
        },
    };
    let old = q.q(s, a);
    let updated = old + alpha * (r + q.hyper.gamma * next_value - old);
    q.entries.insert((s, a), updated);
    Ok(updated)
}

/// An episodic environment the training loop can drive. The scheduling
/// simulator and the real parallel executor both sit behind this, as do toy
/// problems in tests.
pub trait EpisodeEnv {
    /// Starts episode `episode` (1-based) and returns the initial state key.
    fn reset(&mut self, episode: usize) -> Result<StateKey>;
    /// Action classes realizable in the current state. Never empty before
    /// the terminal state.
    fn available(&self) -> Vec<ActionClass>;
    /// Takes one action; returns the epoch reward, the successor key and
    /// whether the episode is over.
    fn step(&mut self, a: ActionClass) -> Result<(f64, StateKey, bool)>;
}

/// Knobs for [`train_env`] beyond the persisted hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub episodes: usize,
    pub seed: u64,
    pub target: UpdateTarget,
    /// Episode count over which the learning rate halves (roughly); the
    /// schedule is `alpha / sqrt(1 + episode/scale)`.
    pub alpha_decay_scale: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            episodes: 400,
            seed: 0,
            target: UpdateTarget::Next,
            alpha_decay_scale: 1.0,
        }
    }
}

/// The training loop: epsilon-greedy episodes over `env`, updating `table`
/// in place after every step. Deterministic for a fixed seed.
pub fn train_env<E: EpisodeEnv>(
    table: &mut QTable,
    env: &mut E,
    opts: &TrainOptions,
) -> Result<()> {
    if opts.episodes == 0 {
        return Err(Error::QTable("training needs at least one episode".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for episode in 1..=opts.episodes {
        let alpha = alpha_at(table.hyper.alpha, opts.alpha_decay_scale, episode);
        let eps = epsilon_at(table.hyper.epsilon, episode, opts.episodes);
        let mut s = env.reset(episode)?;
        let mut a = choose(table, s, &env.available(), eps, &mut rng);
        loop {
            let (r, s2, terminal) = env.step(a)?;
            if terminal {
                q_update(table, s, a, r, None, alpha, opts.target)?;
                break;
            }
            let avail2 = env.available();
            let a2 = choose(table, s2, &avail2, eps, &mut rng);
            q_update(table, s, a, r, Some((s2, &avail2, a2)), alpha, opts.target)?;
            s = s2;
            a = a2;
        }
    }
    Ok(())
}

fn choose(
    table: &QTable,
    s: StateKey,
    available: &[ActionClass],
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> ActionClass {
    debug_assert!(!available.is_empty());
    if rng.gen::<f64>() < eps {
        available[rng.gen_range(0..available.len())]
    } else {
        table.greedy(s, available)
    }
}

/// Greedy policy lookup for a live state: featurize, restrict to realizable
/// classes, argmax with declaration-order tie-breaks. States the table has
/// never seen fall back to Skip.
pub fn infer_policy(q: &QTable, s: &TaskTree, cores: usize, idle: usize) -> Action {
    let key = featurize(s, cores, idle, &q.featurizer);
    if !q.knows(key) {
        return Action::skip();
    }
    let realizable: Vec<(ActionClass, Action)> = ActionClass::ALL
        .iter()
        .filter_map(|&c| c.realize(s, cores).map(|a| (c, a)))
        .collect();
    let (_, action) = realizable
        .into_iter()
        .max_by(|(c1, _), (c2, _)| {
            q.q(key, *c1)
                .partial_cmp(&q.q(key, *c2))
                .expect("table values are finite")
                // max_by keeps the later of equal elements; prefer the earlier
                // class on ties.
                .then(c2.cmp(c1))
        })
        .expect("skip is always realizable");
    action
}

/// A trained table plugged in as a scheduling policy.
pub struct LearnedPolicy<'a> {
    table: &'a QTable,
}

impl<'a> LearnedPolicy<'a> {
    pub fn new(table: &'a QTable) -> LearnedPolicy<'a> {
        LearnedPolicy { table }
    }
}

impl SchedulePolicy for LearnedPolicy<'_> {
    fn decide(&mut self, tree: &TaskTree, cores: usize, idle: usize) -> Action {
        infer_policy(self.table, tree, cores, idle)
    }
}

/// Result of corpus training: the table plus the corpus indices whose
/// symbolic analysis failed and were therefore left out.
#[derive(Debug)]
pub struct TrainOutcome {
    pub table: QTable,
    pub skipped: Vec<usize>,
}

/// Trains a fresh table on a matrix corpus through the virtual-clock
/// simulator. Episodes cycle over the analyzable matrices round-robin;
/// unanalyzable ones are skipped and reported, and an entirely unusable
/// corpus is an error.
pub fn train<T: Scalar>(
    corpus: &[CscMatrix<T>],
    cores: usize,
    hyper: Hyper,
    cfg: &SimConfig,
    opts: &TrainOptions,
    analyze_opts: &AnalyzeOptions,
) -> Result<TrainOutcome> {
    let mut problems = Vec::new();
    let mut skipped = Vec::new();
    for (i, m) in corpus.iter().enumerate() {
        match analyze(m, analyze_opts) {
            Ok(an) => problems.push(SimProblem::from_analysis(&an)),
            Err(_) => skipped.push(i),
        }
    }
    if problems.is_empty() {
        return Err(Error::InvalidSpec(
            "no matrix in the training corpus is analyzable".into(),
        ));
    }
    let mut table = QTable::new(hyper, cfg.featurizer.clone())?;
    let mut env = SimEnv::new(problems, cores, cfg.clone())?;
    train_env(&mut table, &mut env, opts)?;
    Ok(TrainOutcome { table, skipped })
}

#[derive(Serialize, Deserialize)]
struct QTableFile {
    version: String,
    hyper: Hyper,
    featurizer: FeaturizerSpec,
    entries: Vec<QEntry>,
}

#[derive(Serialize, Deserialize)]
struct QEntry {
    key: [u32; 4],
    action: ActionClass,
    q: f64,
}

const QTABLE_VERSION: &str = "ess-q1";

/// Serializes the table as versioned JSON. Entries are emitted in key order,
/// so identical tables produce identical bytes.
pub fn save_qtable(q: &QTable, path: &Path) -> Result<()> {
    let file = QTableFile {
        version: QTABLE_VERSION.to_string(),
        hyper: q.hyper,
        featurizer: q.featurizer.clone(),
        entries: q
            .entries
            .iter()
            .map(|(&(key, action), &q)| QEntry {
                key: key.0,
                action,
                q,
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::QTable(format!("serialize: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

/// Reads a table back, validating the version tag, the hyperparameter ranges
/// and value finiteness. Nothing is returned on any failure.
pub fn load_qtable(path: &Path) -> Result<QTable> {
    let text = fs::read_to_string(path)?;
    let file: QTableFile =
        serde_json::from_str(&text).map_err(|e| Error::QTable(format!("parse: {e}")))?;
    if file.version != QTABLE_VERSION {
        return Err(Error::QTable(format!(
            "unsupported table version {:?}, expected {QTABLE_VERSION:?}",
            file.version
        )));
    }
    let mut table = QTable::new(file.hyper, file.featurizer)?;
    for e in file.entries {
        if !e.q.is_finite() {
            return Err(Error::QTable(format!(
                "non-finite value for key {:?}",
                e.key
            )));
        }
        table.entries.insert((StateKey(e.key), e.action), e.q);
    }
    Ok(table)
}
