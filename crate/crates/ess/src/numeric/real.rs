//! Training against the real executor instead of the virtual clock.
//!
//! Same episode protocol as the simulator environment, but every step runs
//! actual eliminations on actual threads and the elapsed time in the reward
//! is wall-clock. Useful to check that a policy's value ranking carries over
//! from simulated costs to measured ones; episodes are NOT reproducible
//! bit-for-bit because timer noise reorders epochs.

use crate::error::{Error, Result};
use crate::qlearn::{train_env, ActionClass, EpisodeEnv, Hyper, QTable, TrainOptions, TrainOutcome};
use crate::scalar::Scalar;
use crate::schedmdp::{featurize, reward, FeaturizerSpec, RewardWeights, StateKey};
use crate::sparse::CscMatrix;
use crate::symbolic::{analyze, Analysis, AnalyzeOptions};

use super::{FactorOptions, ParallelRun};

/// Episode environment whose steps drive [`ParallelRun`] epochs. Matrices
/// are taken round-robin; each episode factorizes its matrix to completion.
pub struct RealExecEnv<T: Scalar> {
    corpus: Vec<(CscMatrix<T>, Analysis)>,
    cores: usize,
    opts: FactorOptions,
    weights: RewardWeights,
    featurizer: FeaturizerSpec,
    run: Option<ParallelRun<T>>,
}

impl<T: Scalar> RealExecEnv<T> {
    pub fn new(
        corpus: Vec<(CscMatrix<T>, Analysis)>,
        cores: usize,
        opts: FactorOptions,
        weights: RewardWeights,
        featurizer: FeaturizerSpec,
    ) -> Result<RealExecEnv<T>> {
        if corpus.is_empty() {
            return Err(Error::InvalidSpec("training corpus is empty".into()));
        }
        if cores == 0 {
            return Err(Error::InvalidSpec("training needs at least one core".into()));
        }
        Ok(RealExecEnv {
            corpus,
            cores,
            opts,
            weights,
            featurizer,
            run: None,
        })
    }

    fn run(&self) -> &ParallelRun<T> {
        self.run.as_ref().expect("reset starts an episode")
    }
}

impl<T: Scalar> EpisodeEnv for RealExecEnv<T> {
    fn reset(&mut self, episode: usize) -> Result<StateKey> {
        let (a, an) = &self.corpus[(episode - 1) % self.corpus.len()];
        let run = ParallelRun::new(a, an, &self.opts, self.cores)?;
        let key = featurize(run.tree(), self.cores, run.idle_cores(), &self.featurizer);
        self.run = Some(run);
        Ok(key)
    }

    fn available(&self) -> Vec<ActionClass> {
        let run = self.run();
        ActionClass::ALL
            .iter()
            .copied()
            .filter(|c| c.realize(run.tree(), self.cores).is_some())
            .collect()
    }

    fn step(&mut self, a: ActionClass) -> Result<(f64, StateKey, bool)> {
        let run = self.run.as_mut().expect("reset starts an episode");
        let action = a
            .realize(run.tree(), self.cores)
            .ok_or_else(|| Error::InvalidAction(format!("{a} is not realizable in this state")))?;
        let report = run.advance(&action)?;
        let r = reward(&report.stats, &self.weights)?;
        let key = featurize(run.tree(), self.cores, run.idle_cores(), &self.featurizer);
        Ok((r, key, report.done))
    }
}

/// Trains a fresh table by factorizing the corpus on real threads. The
/// counterpart of simulator training with identical episode structure;
/// unanalyzable matrices are skipped and reported.
#[allow(clippy::too_many_arguments)]
pub fn train_real<T: Scalar>(
    corpus: &[CscMatrix<T>],
    cores: usize,
    hyper: Hyper,
    opts: &FactorOptions,
    weights: &RewardWeights,
    featurizer: &FeaturizerSpec,
    train_opts: &TrainOptions,
    analyze_opts: &AnalyzeOptions,
) -> Result<TrainOutcome> {
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (i, m) in corpus.iter().enumerate() {
        match analyze(m, analyze_opts) {
            Ok(an) => pairs.push((m.clone(), an)),
            Err(_) => skipped.push(i),
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidSpec(
            "no matrix in the training corpus is analyzable".into(),
        ));
    }
    let mut table = QTable::new(hyper, featurizer.clone())?;
    let mut env = RealExecEnv::new(pairs, cores, *opts, *weights, featurizer.clone())?;
    train_env(&mut table, &mut env, train_opts)?;
    Ok(TrainOutcome { table, skipped })
}
