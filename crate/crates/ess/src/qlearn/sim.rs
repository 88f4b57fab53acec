//! Deterministic virtual-clock scheduling simulator.
//!
//! Frontal eliminations cost their workload estimate in clock units and one
//! core each; no numerics run. The simulator is the default training backend
//! (reproducible episodes, no timer noise) and the makespan referee when
//! comparing policies. Dispatch is deterministic: ready components in
//! ascending root order onto idle cores in ascending index order, each
//! executing its maximal runnable burst.
//!
//! Cut edges steer scheduling only; contribution flow follows the frontal
//! tree no matter how the cut set changes, so reshaping the tree mid-flight
//! never invalidates work already dispatched. The only hazard is dispatching
//! a frontal twice (an Add can merge an idle component with a running one),
//! which the per-frontal in-flight barrier prevents: a burst stops at the
//! first frontal some core is already executing.

use crate::error::{Error, Result};
use crate::schedmdp::{
    apply_action, featurize, reward, Action, EpochStats, FeaturizerSpec, RewardWeights,
    SchedulePolicy, StateKey, TaskTree,
};
use crate::symbolic::Analysis;

use super::{ActionClass, EpisodeEnv};

/// One simulation instance: the task tree plus a per-frontal estimate of the
/// dense front's live bytes.
#[derive(Debug, Clone)]
pub struct SimProblem {
    pub tree: TaskTree,
    pub mem_bytes: Vec<u64>,
}

impl SimProblem {
    /// Builds the problem from a symbolic analysis. The memory estimate per
    /// frontal is 8 bytes per entry of a dense square front spanning the
    /// frontal's widest column structure.
    pub fn from_analysis(an: &Analysis) -> SimProblem {
        let tree = an.task_tree();
        let mem_bytes = (0..an.frontals.len())
            .map(|fi| {
                let dim = an
                    .frontals
                    .cols(fi)
                    .map(|c| an.fill.col_struct(c).len())
                    .max()
                    .unwrap_or(0) as u64;
                8 * dim * dim
            })
            .collect();
        SimProblem { tree, mem_bytes }
    }
}

/// Virtual-clock scale and reward configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Seconds one workload unit costs; converts clock units into the
    /// reward's time term.
    pub seconds_per_unit: f64,
    pub weights: RewardWeights,
    pub featurizer: FeaturizerSpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seconds_per_unit: 1e-6,
            weights: RewardWeights::default(),
            featurizer: FeaturizerSpec::default(),
        }
    }
}

#[derive(Debug, Clone)]
struct Burst {
    frontals: Vec<usize>,
    end: u64,
    mem: u64,
}

/// Event-driven simulation state. Each [`advance`](Simulator::advance) call
/// is one decision epoch: apply an action, fill idle cores, jump to the next
/// completion.
#[derive(Debug, Clone)]
pub struct Simulator {
    tree: TaskTree,
    mem_bytes: Vec<u64>,
    cfg: SimConfig,
    cores: Vec<Option<Burst>>,
    in_flight: Vec<bool>,
    clock: u64,
    peak_bytes: u64,
}

/// Whole-run summary from [`simulate_policy`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    /// Virtual completion time in workload units.
    pub makespan_units: u64,
    pub epochs: usize,
    /// Sum of epoch rewards (undiscounted).
    pub total_reward: f64,
    /// Largest concurrent live-memory estimate over the run.
    pub peak_bytes: u64,
}

impl Simulator {
    pub fn new(problem: SimProblem, cores: usize, cfg: SimConfig) -> Result<Simulator> {
        if cores == 0 {
            return Err(Error::InvalidSpec("simulator needs at least one core".into()));
        }
        if problem.mem_bytes.len() != problem.tree.n_nodes() {
            return Err(Error::InvalidSpec(format!(
                "{} memory estimates for {} frontals",
                problem.mem_bytes.len(),
                problem.tree.n_nodes()
            )));
        }
        let n = problem.tree.n_nodes();
        Ok(Simulator {
            tree: problem.tree,
            mem_bytes: problem.mem_bytes,
            cfg,
            cores: vec![None; cores],
            in_flight: vec![false; n],
            clock: 0,
            peak_bytes: 0,
        })
    }

    pub fn tree(&self) -> &TaskTree {
        &self.tree
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn n_cores(&self) -> usize {
        self.cores.len()
    }

    pub fn idle_cores(&self) -> usize {
        self.cores.iter().filter(|c| c.is_none()).count()
    }

    pub fn is_terminal(&self) -> bool {
        self.tree.is_terminal()
    }

    pub fn state_key(&self) -> StateKey {
        featurize(
            &self.tree,
            self.n_cores(),
            self.idle_cores(),
            &self.cfg.featurizer,
        )
    }

    /// Live-memory estimate of everything currently running.
    pub fn live_bytes(&self) -> u64 {
        self.cores.iter().flatten().map(|b| b.mem).sum()
    }

    /// Largest concurrent live-memory estimate seen so far, sampled right
    /// after each epoch's dispatch (bursts only end at epoch boundaries, so
    /// that sample is the epoch's maximum).
    pub fn peak_bytes(&self) -> u64 {
        self.peak_bytes
    }

    /// One decision epoch. Applies `action`, dispatches ready components to
    /// idle cores, then advances the clock to the next completion and marks
    /// the finished frontals done. Returns the epoch reward, the successor
    /// state key and whether everything is done.
    pub fn advance(&mut self, action: &Action) -> Result<(f64, StateKey, bool)> {
        if self.is_terminal() {
            return Err(Error::InvalidAction("the schedule is already complete".into()));
        }
        self.tree = apply_action(&self.tree, action)?;
        self.dispatch();

        let t0 = self.clock;
        let t1 = self
            .cores
            .iter()
            .flatten()
            .map(|b| b.end)
            .min()
            .expect("a non-terminal state always runs something");

        let stats = EpochStats {
            elapsed_s: (t1 - t0) as f64 * self.cfg.seconds_per_unit,
            peak_bytes: self.live_bytes(),
            busy: self
                .cores
                .iter()
                .map(|c| if c.is_some() { 1.0 } else { 0.0 })
                .collect(),
        };
        let r = reward(&stats, &self.cfg.weights)?;
        self.peak_bytes = self.peak_bytes.max(stats.peak_bytes);

        self.clock = t1;
        for slot in &mut self.cores {
            if slot.as_ref().is_some_and(|b| b.end == t1) {
                for f in slot.take().unwrap().frontals {
                    self.in_flight[f] = false;
                    self.tree.mark_done(f);
                }
            }
        }
        Ok((r, self.state_key(), self.is_terminal()))
    }

    fn dispatch(&mut self) {
        let mut ready = self.tree.ready_components().into_iter();
        'cores: for i in 0..self.cores.len() {
            if self.cores[i].is_some() {
                continue;
            }
            // Ready roots come in ascending order; a component whose prefix
            // is already being executed yields an empty burst and is skipped.
            let burst = loop {
                let Some(root) = ready.next() else { break 'cores };
                let burst: Vec<usize> = self
                    .tree
                    .runnable_prefix(root)
                    .into_iter()
                    .take_while(|&f| !self.in_flight[f])
                    .collect();
                if !burst.is_empty() {
                    break burst;
                }
            };
            let work: u64 = burst.iter().map(|&f| self.tree.workload(f)).sum();
            let mem = burst.iter().map(|&f| self.mem_bytes[f]).max().unwrap_or(0);
            for &f in &burst {
                self.in_flight[f] = true;
            }
            self.cores[i] = Some(Burst {
                frontals: burst,
                end: self.clock + work,
                mem,
            });
        }
    }
}

/// Runs `policy` to completion on one problem and reports the makespan.
pub fn simulate_policy<P: SchedulePolicy>(
    problem: &SimProblem,
    cores: usize,
    cfg: &SimConfig,
    policy: &mut P,
) -> Result<SimOutcome> {
    let mut sim = Simulator::new(problem.clone(), cores, cfg.clone())?;
    let mut epochs = 0;
    let mut total_reward = 0.0;
    while !sim.is_terminal() {
        let action = policy.decide(&sim.tree, cores, sim.idle_cores());
        let (r, _, _) = sim.advance(&action)?;
        total_reward += r;
        epochs += 1;
    }
    Ok(SimOutcome {
        makespan_units: sim.clock,
        epochs,
        total_reward,
        peak_bytes: sim.peak_bytes(),
    })
}

/// Training environment over a corpus of simulation problems, one episode per
/// call, matrices taken round-robin.
pub struct SimEnv {
    problems: Vec<SimProblem>,
    cores: usize,
    cfg: SimConfig,
    sim: Option<Simulator>,
}

impl SimEnv {
    pub fn new(problems: Vec<SimProblem>, cores: usize, cfg: SimConfig) -> Result<SimEnv> {
        if problems.is_empty() {
            return Err(Error::InvalidSpec("training corpus is empty".into()));
        }
        if cores == 0 {
            return Err(Error::InvalidSpec("training needs at least one core".into()));
        }
        Ok(SimEnv {
            problems,
            cores,
            cfg,
            sim: None,
        })
    }

    fn sim(&self) -> &Simulator {
        self.sim.as_ref().expect("reset starts an episode")
    }
}

impl EpisodeEnv for SimEnv {
    fn reset(&mut self, episode: usize) -> Result<StateKey> {
        let problem = self.problems[(episode - 1) % self.problems.len()].clone();
        let sim = Simulator::new(problem, self.cores, self.cfg.clone())?;
        let key = sim.state_key();
        self.sim = Some(sim);
        Ok(key)
    }

    fn available(&self) -> Vec<ActionClass> {
        let sim = self.sim();
        ActionClass::ALL
            .iter()
            .copied()
            .filter(|c| c.realize(sim.tree(), sim.n_cores()).is_some())
            .collect()
    }

    fn step(&mut self, a: ActionClass) -> Result<(f64, StateKey, bool)> {
        let sim = self.sim.as_mut().expect("reset starts an episode");
        let action = a
            .realize(&sim.tree, sim.cores.len())
            .ok_or_else(|| Error::InvalidAction(format!("{a} is not realizable in this state")))?;
        sim.advance(&action)
    }
}
